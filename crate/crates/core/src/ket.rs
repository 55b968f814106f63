//! Factored state vector: each entanglement group stores its own dense
//! amplitude vector, so unentangled qubits cost two amplitudes each.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::par;
use crate::sparse::{SparseMatrix, C64, UNITARY_TOL};

pub type QubitId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BitValue {
    Zero,
    One,
    Unknown,
}

impl BitValue {
    pub fn from_bool(b: bool) -> Self {
        if b {
            BitValue::One
        } else {
            BitValue::Zero
        }
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            BitValue::Zero => Some(false),
            BitValue::One => Some(true),
            BitValue::Unknown => None,
        }
    }
}

/// Largest group allowed by default, as log2 of the amplitude count.
pub const DEFAULT_AMPLITUDE_LIMIT: usize = 28;

/// Largest dense vector `state_vector` will build, as log2.
pub const STATE_VECTOR_LIMIT: usize = 26;

/// Residual allowed when verifying a factorization.
pub const FACTOR_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct Group {
    members: Vec<QubitId>,
    amps: Vec<C64>,
}

impl Group {
    /// Members in local bit order; position 0 is the most significant bit.
    pub fn members(&self) -> &[QubitId] {
        &self.members
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        par::sum_f64(self.amps.len(), |lo, hi| {
            self.amps[lo..hi].iter().map(|a| a.norm_sqr()).sum()
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct KetStats {
    pub max_entangled: usize,
    pub gates_permuted: u64,
    pub state_permuted: u64,
    pub none_permuted: u64,
}

#[derive(Clone, Debug)]
pub struct Ket {
    n: usize,
    groups: Vec<Group>,
    loc: Vec<(usize, usize)>,
    bits: Vec<BitValue>,
    rng: ChaCha8Rng,
    stats: KetStats,
    scratch: Vec<C64>,
    limit: usize,
    log: Vec<(QubitId, BitValue)>,
}

impl Ket {
    pub fn new(n: usize, seed: u64) -> Result<Ket> {
        if n == 0 {
            return Err(Error::InvalidArgument("a ket needs at least one qubit".into()));
        }
        let zero = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        Ok(Ket {
            n,
            groups: (0..n)
                .map(|q| Group { members: vec![q], amps: zero.to_vec() })
                .collect(),
            loc: (0..n).map(|q| (q, 0)).collect(),
            bits: vec![BitValue::Unknown; n],
            rng: ChaCha8Rng::seed_from_u64(seed),
            stats: KetStats { max_entangled: 1, ..KetStats::default() },
            scratch: Vec::new(),
            limit: DEFAULT_AMPLITUDE_LIMIT,
            log: Vec::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Cap on entanglement-group size, as log2 of the amplitude count.
    pub fn set_amplitude_limit(&mut self, log2: usize) {
        self.limit = log2;
    }

    pub fn amplitude_limit(&self) -> usize {
        self.limit
    }

    pub fn stats(&self) -> KetStats {
        self.stats
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn group_of(&self, q: QubitId) -> Result<&Group> {
        self.check(q)?;
        Ok(&self.groups[self.loc[q].0])
    }

    /// Total amplitudes currently stored across all groups.
    pub fn allocated_amplitudes(&self) -> usize {
        self.groups.iter().map(|g| g.amps.len()).sum()
    }

    pub fn bit(&self, q: QubitId) -> Result<BitValue> {
        self.check(q)?;
        Ok(self.bits[q])
    }

    pub fn bits(&self) -> &[BitValue] {
        &self.bits
    }

    /// Every measurement outcome, in order.
    pub fn measurement_log(&self) -> &[(QubitId, BitValue)] {
        &self.log
    }

    /// Uniform draw in [0, 1) from this ket's generator.
    pub fn sample_uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    fn check(&self, q: QubitId) -> Result<()> {
        if q >= self.n {
            Err(Error::InvalidWire(q))
        } else {
            Ok(())
        }
    }

    fn check_wires(&self, wires: &[QubitId]) -> Result<()> {
        for (i, &w) in wires.iter().enumerate() {
            self.check(w)?;
            if wires[..i].contains(&w) {
                return Err(Error::InvalidArgument(format!("wire {w} repeated")));
            }
        }
        Ok(())
    }

    fn reindex(&mut self, gi: usize) {
        for (p, &q) in self.groups[gi].members.iter().enumerate() {
            self.loc[q] = (gi, p);
        }
    }

    fn remove_group(&mut self, gi: usize) -> Group {
        let g = self.groups.swap_remove(gi);
        if gi < self.groups.len() {
            self.reindex(gi);
        }
        g
    }

    fn push_group(&mut self, g: Group) -> usize {
        self.groups.push(g);
        let gi = self.groups.len() - 1;
        self.reindex(gi);
        gi
    }

    /// Merge the groups holding `wires` into one (in order of first
    /// appearance, earlier groups more significant) and return its index.
    fn merge(&mut self, wires: &[QubitId]) -> Result<usize> {
        let mut ids: Vec<usize> = Vec::new();
        for &w in wires {
            let gi = self.loc[w].0;
            if !ids.contains(&gi) {
                ids.push(gi);
            }
        }
        if ids.len() == 1 {
            return Ok(ids[0]);
        }
        let total: usize = ids.iter().map(|&g| self.groups[g].members.len()).sum();
        if total > self.limit {
            return Err(Error::TooLarge { qubits: total, limit: self.limit });
        }
        let mut members = Vec::with_capacity(total);
        let mut amps = vec![C64::new(1.0, 0.0)];
        for &gi in &ids {
            let g = &self.groups[gi];
            members.extend_from_slice(&g.members);
            amps = kron_vec(&amps, &g.amps);
        }
        let mut sorted = ids.clone();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        for gi in sorted {
            self.remove_group(gi);
        }
        self.stats.max_entangled = self.stats.max_entangled.max(members.len());
        Ok(self.push_group(Group { members, amps }))
    }

    /// Apply a unitary after checking it; `wires[j]` carries matrix qubit `j`.
    pub fn apply_unitary(&mut self, u: &SparseMatrix, wires: &[QubitId]) -> Result<()> {
        let err = u.unitarity_error();
        if err > UNITARY_TOL {
            return Err(Error::NonUnitaryGate(format!("matrix off by {err:.3e}")));
        }
        self.apply_trusted(u, wires)
    }

    /// Apply a matrix already known to be unitary.
    pub(crate) fn apply_trusted(&mut self, u: &SparseMatrix, wires: &[QubitId]) -> Result<()> {
        self.check_wires(wires)?;
        if u.dim() != 1 << wires.len() {
            return Err(Error::InvalidArgument(format!(
                "{}x{} matrix applied to {} wires",
                u.dim(),
                u.dim(),
                wires.len()
            )));
        }
        let gi = self.merge(wires)?;
        let positions: Vec<usize> = wires.iter().map(|&w| self.loc[w].1).collect();
        self.apply_in_group(gi, u, &positions);
        Ok(())
    }

    fn apply_in_group(&mut self, gi: usize, u: &SparseMatrix, positions: &[usize]) {
        let k = positions.len();
        let m = self.groups[gi].members.len();
        if let Some(d) = u.diagonal_values() {
            self.stats.none_permuted += 1;
            let bits: Vec<usize> = positions.iter().map(|&p| m - 1 - p).collect();
            diag_kernel(&mut self.groups[gi].amps, &d, &bits);
            return;
        }
        let aligned = positions.iter().enumerate().all(|(j, &p)| p == j);
        if aligned {
            self.stats.none_permuted += 1;
            self.top_apply(gi, u);
            return;
        }
        if positions.iter().all(|&p| p < k) {
            self.stats.gates_permuted += 1;
            let mut src = vec![0; k];
            for (j, &p) in positions.iter().enumerate() {
                src[p] = j;
            }
            let pu = u.permute_qubits(&src);
            self.top_apply(gi, &pu);
            return;
        }
        if k > 2 {
            self.stats.state_permuted += 1;
            let mut order: Vec<usize> = positions.to_vec();
            order.extend((0..m).filter(|p| !positions.contains(p)));
            self.permute_group(gi, &order);
            self.top_apply(gi, u);
            return;
        }
        self.stats.none_permuted += 1;
        let bits: Vec<usize> = positions.iter().map(|&p| m - 1 - p).collect();
        let g = &mut self.groups[gi];
        self.scratch.resize(g.amps.len(), C64::new(0.0, 0.0));
        strided_kernel(&g.amps, &mut self.scratch, u, &bits);
        std::mem::swap(&mut g.amps, &mut self.scratch);
    }

    fn top_apply(&mut self, gi: usize, u: &SparseMatrix) {
        let g = &mut self.groups[gi];
        self.scratch.resize(g.amps.len(), C64::new(0.0, 0.0));
        top_kernel(&g.amps, &mut self.scratch, u);
        std::mem::swap(&mut g.amps, &mut self.scratch);
    }

    /// Reorder a group so that new position `p` holds old position `order[p]`.
    fn permute_group(&mut self, gi: usize, order: &[usize]) {
        let g = &mut self.groups[gi];
        let m = g.members.len();
        self.scratch.resize(g.amps.len(), C64::new(0.0, 0.0));
        permute_kernel(&g.amps, &mut self.scratch, order, m);
        std::mem::swap(&mut g.amps, &mut self.scratch);
        g.members = order.iter().map(|&p| g.members[p]).collect();
        self.reindex(gi);
    }

    /// Probability that `q` would be measured One.
    pub fn prob_one(&self, q: QubitId) -> Result<f64> {
        self.check(q)?;
        let (gi, pos) = self.loc[q];
        let g = &self.groups[gi];
        let bit = g.members.len() - 1 - pos;
        Ok(prob_bit(&g.amps, bit) / g.norm_sqr())
    }

    pub fn measure(&mut self, q: QubitId) -> Result<BitValue> {
        let b = self.collapse(q)?;
        self.log.push((q, b));
        Ok(b)
    }

    fn collapse(&mut self, q: QubitId) -> Result<BitValue> {
        self.check(q)?;
        let (gi, pos) = self.loc[q];
        let m = self.groups[gi].members.len();
        let bit = m - 1 - pos;
        let g = &self.groups[gi];
        let p1 = prob_bit(&g.amps, bit);
        let total = g.norm_sqr();
        let u: f64 = self.rng.gen();
        let one = u * total < p1;
        let outcome = BitValue::from_bool(one);
        self.bits[q] = outcome;
        let basis = |one: bool| {
            if one {
                vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]
            } else {
                vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
            }
        };
        if m == 1 {
            self.groups[gi].amps = basis(one);
            return Ok(outcome);
        }
        let p = if one { p1 } else { total - p1 };
        let scale = 1.0 / p.sqrt();
        let ob = usize::from(one);
        let g = &mut self.groups[gi];
        let half = g.amps.len() / 2;
        let low = (1usize << bit) - 1;
        let mut next = vec![C64::new(0.0, 0.0); half];
        let src = &g.amps;
        par::for_each_chunk_mut(&mut next, 1 << 12, |start, out| {
            for (o, j) in out.iter_mut().zip(start..) {
                let i = ((j & !low) << 1) | (ob << bit) | (j & low);
                *o = src[i] * scale;
            }
        });
        g.amps = next;
        g.members.remove(pos);
        self.reindex(gi);
        self.push_group(Group { members: vec![q], amps: basis(one) });
        Ok(outcome)
    }

    pub fn reset(&mut self, q: QubitId, target: BitValue) -> Result<()> {
        let want = target
            .as_bool()
            .ok_or_else(|| Error::InvalidArgument("reset target must be Zero or One".into()))?;
        let got = self.collapse(q)?;
        let gi = self.loc[q].0;
        if got.as_bool() != Some(want) {
            self.groups[gi].amps.swap(0, 1);
        }
        self.bits[q] = target;
        Ok(())
    }

    /// Apply a single-qubit (not necessarily unitary) operator and renormalize.
    /// Returns the squared norm before renormalization.
    pub(crate) fn apply_kraus(&mut self, q: QubitId, k: &SparseMatrix) -> Result<f64> {
        self.check(q)?;
        let (gi, pos) = self.loc[q];
        let m = self.groups[gi].members.len();
        let g = &mut self.groups[gi];
        self.scratch.resize(g.amps.len(), C64::new(0.0, 0.0));
        strided_kernel(&g.amps, &mut self.scratch, k, &[m - 1 - pos]);
        std::mem::swap(&mut g.amps, &mut self.scratch);
        let norm = g.norm_sqr();
        if norm <= 0.0 {
            return Err(Error::InvalidArgument("operator annihilated the state".into()));
        }
        let s = 1.0 / norm.sqrt();
        par::for_each_chunk_mut(&mut g.amps, 1 << 12, |_, c| {
            for a in c {
                *a *= s;
            }
        });
        Ok(norm)
    }

    /// Dense vector over all qubits; `order[0]` is the most significant bit.
    pub fn state_vector(&self, order: &[QubitId]) -> Result<Vec<C64>> {
        if order.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "order lists {} of {} qubits",
                order.len(),
                self.n
            )));
        }
        self.check_wires(order)?;
        if self.n > STATE_VECTOR_LIMIT {
            return Err(Error::TooLarge { qubits: self.n, limit: STATE_VECTOR_LIMIT });
        }
        let n = self.n;
        let mut at = vec![0usize; n];
        for (i, &q) in order.iter().enumerate() {
            at[q] = n - 1 - i;
        }
        let plan: Vec<(Vec<usize>, &[C64])> = self
            .groups
            .iter()
            .map(|g| (g.members.iter().map(|&q| at[q]).collect(), &g.amps[..]))
            .collect();
        let mut out = vec![C64::new(0.0, 0.0); 1 << n];
        par::for_each_chunk_mut(&mut out, 1 << 12, |start, chunk| {
            for (o, i) in chunk.iter_mut().zip(start..) {
                let mut a = C64::new(1.0, 0.0);
                for (bits, amps) in &plan {
                    let m = bits.len();
                    let mut local = 0;
                    for (p, &b) in bits.iter().enumerate() {
                        local |= (i >> b & 1) << (m - 1 - p);
                    }
                    a *= amps[local];
                }
                *o = a;
            }
        });
        Ok(out)
    }

    /// Declare that `wires` are not entangled with the rest of their groups
    /// and split them off. With `verify`, check the factorization first.
    pub fn assert_unentangled(&mut self, wires: &[QubitId], verify: bool) -> Result<()> {
        self.check_wires(wires)?;
        let mut by_group: Vec<(usize, Vec<QubitId>)> = Vec::new();
        for &w in wires {
            let gi = self.loc[w].0;
            match by_group.iter_mut().find(|e| e.0 == gi) {
                Some(e) => e.1.push(w),
                None => by_group.push((gi, vec![w])),
            }
        }
        let mut splits = Vec::new();
        for (gi, sel) in &by_group {
            let g = &self.groups[*gi];
            if sel.len() == g.members.len() {
                continue;
            }
            let mut order: Vec<usize> = sel.iter().map(|&w| self.loc[w].1).collect();
            let rest: Vec<usize> = (0..g.members.len()).filter(|p| !order.contains(p)).collect();
            order.extend(rest);
            let (a, b) = split_amps(&g.amps, &order, sel.len(), verify)
                .map_err(|r| Error::AssertionFailed(format!(
                    "qubits {sel:?} are entangled with the rest of their group (residual {r:.3e})"
                )))?;
            splits.push((*gi, order, a, b));
        }
        for (gi, order, a, b) in splits {
            let g = &self.groups[gi];
            let members: Vec<QubitId> = order.iter().map(|&p| g.members[p]).collect();
            let (left, right) = members.split_at(a.len().trailing_zeros() as usize);
            let (left, right) = (left.to_vec(), right.to_vec());
            self.groups[gi] = Group { members: left, amps: a };
            self.reindex(gi);
            self.push_group(Group { members: right, amps: b });
        }
        Ok(())
    }
}

fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        out.extend(b.iter().map(|&y| x * y));
    }
    out
}

fn prob_bit(amps: &[C64], bit: usize) -> f64 {
    par::sum_f64(amps.len(), |lo, hi| {
        (lo..hi)
            .filter(|i| i >> bit & 1 == 1)
            .map(|i| amps[i].norm_sqr())
            .sum()
    })
}

fn local_index(i: usize, bits: &[usize]) -> usize {
    let k = bits.len();
    let mut t = 0;
    for (j, &b) in bits.iter().enumerate() {
        t |= (i >> b & 1) << (k - 1 - j);
    }
    t
}

fn diag_kernel(amps: &mut [C64], d: &[C64], bits: &[usize]) {
    par::for_each_chunk_mut(amps, 1 << 12, |start, chunk| {
        for (a, i) in chunk.iter_mut().zip(start..) {
            *a *= d[local_index(i, bits)];
        }
    });
}

/// Targets occupy the top positions in gate order.
fn top_kernel(src: &[C64], out: &mut [C64], u: &SparseMatrix) {
    let stride = src.len() / u.dim();
    let chunk = stride.min(1 << 12);
    par::for_each_chunk_mut(out, chunk, |start, o| {
        o.fill(C64::new(0.0, 0.0));
        let t_out = start / stride;
        let r0 = start % stride;
        let (cs, vs) = u.row(t_out);
        for (&t_in, &v) in cs.iter().zip(vs) {
            let s = &src[t_in as usize * stride + r0..][..o.len()];
            for (x, y) in o.iter_mut().zip(s) {
                *x += v * y;
            }
        }
    });
}

/// General placement: `bits[j]` is the index bit carrying gate qubit `j`.
fn strided_kernel(src: &[C64], out: &mut [C64], u: &SparseMatrix, bits: &[usize]) {
    let k = bits.len();
    let tmask = bits.iter().fold(0usize, |m, &b| m | 1 << b);
    let dep: Vec<usize> = (0..1usize << k)
        .map(|t| {
            bits.iter()
                .enumerate()
                .fold(0, |acc, (j, &b)| acc | (t >> (k - 1 - j) & 1) << b)
        })
        .collect();
    par::for_each_chunk_mut(out, 1 << 12, |start, o| {
        for (x, i) in o.iter_mut().zip(start..) {
            let base = i & !tmask;
            let (cs, vs) = u.row(local_index(i, bits));
            let mut acc = C64::new(0.0, 0.0);
            for (&c, &v) in cs.iter().zip(vs) {
                acc += v * src[base | dep[c as usize]];
            }
            *x = acc;
        }
    });
}

/// `out` at new position p holds `src` at old position `order[p]`.
fn permute_kernel(src: &[C64], out: &mut [C64], order: &[usize], m: usize) {
    // byte-wise lookup: new index byte -> contribution to old index
    let nbytes = m.div_ceil(8);
    let tables: Vec<[usize; 256]> = (0..nbytes)
        .map(|byte| {
            let mut t = [0usize; 256];
            for (v, slot) in t.iter_mut().enumerate() {
                for bit in 0..8 {
                    let nb = byte * 8 + bit;
                    if nb < m && v >> bit & 1 == 1 {
                        let np = m - 1 - nb;
                        *slot |= 1 << (m - 1 - order[np]);
                    }
                }
            }
            t
        })
        .collect();
    par::for_each_chunk_mut(out, 1 << 12, |start, o| {
        for (x, j) in o.iter_mut().zip(start..) {
            let mut old = 0;
            for (b, t) in tables.iter().enumerate() {
                old |= t[j >> (8 * b) & 0xff];
            }
            *x = src[old];
        }
    });
}

/// Split a group's amplitudes across the cut after `k` positions of `order`.
/// Returns the two factors or the residual when verification fails.
fn split_amps(
    amps: &[C64],
    order: &[usize],
    k: usize,
    verify: bool,
) -> std::result::Result<(Vec<C64>, Vec<C64>), f64> {
    let m = order.len();
    let mut perm = vec![C64::new(0.0, 0.0); amps.len()];
    permute_kernel(amps, &mut perm, order, m);
    let rows = 1usize << k;
    let cols = 1usize << (m - k);
    let at = |i: usize, j: usize| perm[i * cols + j];
    let best = (0..cols)
        .map(|j| (j, (0..rows).map(|i| at(i, j).norm_sqr()).sum::<f64>()))
        .fold((0, -1.0), |acc, e| if e.1 > acc.1 { e } else { acc });
    let norm = best.1.sqrt();
    let a: Vec<C64> = (0..rows).map(|i| at(i, best.0) / norm).collect();
    let mut b: Vec<C64> = (0..cols)
        .map(|j| (0..rows).map(|i| a[i].conj() * at(i, j)).sum())
        .collect();
    if verify {
        let mut worst = 0.0f64;
        for (i, ai) in a.iter().enumerate() {
            for (j, bj) in b.iter().enumerate() {
                worst = worst.max((at(i, j) - ai * bj).norm());
            }
        }
        if worst > FACTOR_TOL {
            return Err(worst);
        }
    }
    let bn = b.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    for x in &mut b {
        *x /= bn;
    }
    Ok((a, b))
}
