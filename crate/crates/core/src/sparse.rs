//! Compressed sparse row matrices over complex doubles, sized 2^k.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::par;

pub type C64 = Complex64;

/// Entries smaller than this in magnitude are dropped from products.
pub const DROP_TOL: f64 = 1e-14;

/// Unitarity tolerance for accepting a gate matrix.
pub const UNITARY_TOL: f64 = 1e-10;

/// Matrices whose drift exceeds this are re-orthonormalized.
pub const REUNITARIZE_TOL: f64 = 1e-12;

/// Inputs to `reunitarize` must already be this close to unitary.
pub const NEAR_UNITARY_TOL: f64 = 0.01;

/// Largest connected block `reunitarize` will orthonormalize densely.
const MAX_REPAIR_BLOCK: usize = 1 << 12;

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<C64>,
}

impl SparseMatrix {
    pub fn from_entries<I>(dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        if !dim.is_power_of_two() || dim > 1 << 31 {
            return Err(Error::InvalidArgument(format!(
                "matrix dimension {dim} is not a power of two"
            )));
        }
        let mut es: Vec<(usize, usize, C64)> = Vec::new();
        for (r, c, v) in entries {
            if r >= dim || c >= dim {
                return Err(Error::InvalidArgument(format!(
                    "entry ({r},{c}) outside {dim}x{dim}"
                )));
            }
            if v != C64::new(0.0, 0.0) {
                es.push((r, c, v));
            }
        }
        es.sort_unstable_by_key(|&(r, c, _)| (r, c));
        if es.windows(2).any(|w| w[0].0 == w[1].0 && w[0].1 == w[1].1) {
            return Err(Error::InvalidArgument("duplicate matrix entry".into()));
        }
        let mut row_ptr = vec![0usize; dim + 1];
        for &(r, _, _) in &es {
            row_ptr[r + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(SparseMatrix {
            dim,
            row_ptr,
            cols: es.iter().map(|e| e.1 as u32).collect(),
            vals: es.iter().map(|e| e.2).collect(),
        })
    }

    pub fn from_dense(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidArgument("matrix is not square".into()));
        }
        Self::from_entries(
            dim,
            rows.iter()
                .enumerate()
                .flat_map(|(r, row)| row.iter().enumerate().map(move |(c, &v)| (r, c, v))),
        )
    }

    pub fn from_real(rows: &[&[f64]]) -> Result<Self> {
        let dense: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_dense(&dense)
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(vec![C64::new(1.0, 0.0); dim])
    }

    pub fn diagonal(d: Vec<C64>) -> Self {
        let dim = d.len();
        let keep: Vec<usize> = (0..dim).filter(|&i| d[i] != C64::new(0.0, 0.0)).collect();
        let mut row_ptr = vec![0usize; dim + 1];
        for &i in &keep {
            row_ptr[i + 1] = 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseMatrix {
            dim,
            row_ptr,
            cols: keep.iter().map(|&i| i as u32).collect(),
            vals: keep.iter().map(|&i| d[i]).collect(),
        }
    }

    fn from_rows(dim: usize, rows: Vec<Vec<(u32, C64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(dim + 1);
        row_ptr.push(0);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        for row in rows {
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        SparseMatrix { dim, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of qubits the matrix acts on.
    pub fn qubits(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> (&[u32], &[C64]) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let (cs, vs) = self.row(r);
        match cs.binary_search(&(c as u32)) {
            Ok(i) => vs[i],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            let (cs, vs) = self.row(r);
            cs.iter().zip(vs).map(move |(&c, &v)| (r, c as usize, v))
        })
    }

    pub fn to_dense(&self) -> Vec<Vec<C64>> {
        let mut m = vec![vec![C64::new(0.0, 0.0); self.dim]; self.dim];
        for (r, c, v) in self.iter() {
            m[r][c] = v;
        }
        m
    }

    pub fn max_row_nnz(&self) -> usize {
        (0..self.dim)
            .map(|r| self.row_ptr[r + 1] - self.row_ptr[r])
            .max()
            .unwrap_or(0)
    }

    /// Fraction of entries that are nonzero.
    pub fn density(&self) -> f64 {
        self.nnz() as f64 / (self.dim as f64 * self.dim as f64)
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|r| {
            let (cs, _) = self.row(r);
            cs.len() == 1 && cs[0] as usize == r
        })
    }

    /// Diagonal entries, if the matrix is diagonal.
    pub fn diagonal_values(&self) -> Option<Vec<C64>> {
        if !self.is_diagonal() {
            return None;
        }
        Some(self.vals.clone())
    }

    pub fn adjoint(&self) -> Self {
        let mut rows: Vec<Vec<(u32, C64)>> = vec![Vec::new(); self.dim];
        for (r, c, v) in self.iter() {
            rows[c].push((r as u32, v.conj()));
        }
        Self::from_rows(self.dim, rows)
    }

    /// True when the matrix equals its own conjugate transpose exactly.
    pub fn is_hermitian(&self) -> bool {
        self.iter().all(|(r, c, v)| self.get(c, r) == v.conj())
    }

    /// `self * other`.
    pub fn matmul(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.dim != other.dim {
            return Err(Error::InvalidArgument("dimension mismatch".into()));
        }
        let rows = (0..self.dim)
            .map(|r| {
                let mut acc: Vec<(u32, C64)> = Vec::new();
                let (cs, vs) = self.row(r);
                for (&k, &a) in cs.iter().zip(vs) {
                    let (cs2, vs2) = other.row(k as usize);
                    for (&c, &b) in cs2.iter().zip(vs2) {
                        acc.push((c, a * b));
                    }
                }
                compact(acc)
            })
            .collect();
        Ok(Self::from_rows(self.dim, rows))
    }

    /// Kronecker product; `self` occupies the more significant qubits.
    pub fn kron(&self, other: &SparseMatrix) -> SparseMatrix {
        let d = other.dim;
        let mut rows = Vec::with_capacity(self.dim * d);
        for r1 in 0..self.dim {
            let (c1s, v1s) = self.row(r1);
            for r2 in 0..d {
                let (c2s, v2s) = other.row(r2);
                let mut row = Vec::with_capacity(c1s.len() * c2s.len());
                for (&c1, &a) in c1s.iter().zip(v1s) {
                    for (&c2, &b) in c2s.iter().zip(v2s) {
                        row.push((c1 * d as u32 + c2, a * b));
                    }
                }
                rows.push(row);
            }
        }
        Self::from_rows(self.dim * d, rows)
    }

    /// `I ⊕ self`: the controlled version with the control as the new top qubit.
    pub fn controlled(&self) -> SparseMatrix {
        let d = self.dim;
        let mut rows: Vec<Vec<(u32, C64)>> = (0..d)
            .map(|r| vec![(r as u32, C64::new(1.0, 0.0))])
            .collect();
        for r in 0..d {
            let (cs, vs) = self.row(r);
            rows.push(cs.iter().zip(vs).map(|(&c, &v)| (c + d as u32, v)).collect());
        }
        Self::from_rows(2 * d, rows)
    }

    /// Relabel qubits: qubit `i` of the result is qubit `src[i]` of `self`
    /// (qubit 0 is the most significant index bit).
    pub fn permute_qubits(&self, src: &[usize]) -> SparseMatrix {
        let k = self.qubits();
        assert_eq!(src.len(), k);
        let map = |t: usize| {
            let mut out = 0usize;
            for (i, &s) in src.iter().enumerate() {
                if t >> (k - 1 - s) & 1 == 1 {
                    out |= 1 << (k - 1 - i);
                }
            }
            out
        };
        let mut rows: Vec<Vec<(u32, C64)>> = vec![Vec::new(); self.dim];
        for (r, c, v) in self.iter() {
            rows[map(r)].push((map(c) as u32, v));
        }
        for row in &mut rows {
            row.sort_unstable_by_key(|e| e.0);
        }
        Self::from_rows(self.dim, rows)
    }

    /// Column index sets of the connected blocks of this matrix, together
    /// with the rows each block touches.
    fn components(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        let n = self.dim;
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for r in 0..n {
            let (cs, _) = self.row(r);
            if let Some((&first, rest)) = cs.split_first() {
                for &c in rest {
                    let a = find(&mut parent, first as usize);
                    let b = find(&mut parent, c as usize);
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut slot = vec![usize::MAX; n];
        let mut comps: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
        for c in 0..n {
            let root = find(&mut parent, c);
            if slot[root] == usize::MAX {
                slot[root] = comps.len();
                comps.push((Vec::new(), Vec::new()));
            }
            comps[slot[root]].1.push(c);
        }
        for r in 0..n {
            let (cs, _) = self.row(r);
            if let Some(&c) = cs.first() {
                let root = find(&mut parent, c as usize);
                comps[slot[root]].0.push(r);
            }
        }
        comps
    }

    fn component_dense(&self, rows: &[usize], cols: &[usize]) -> Vec<Vec<C64>> {
        // column-major: out[j][i] = self[rows[i], cols[j]]
        let mut out = vec![vec![C64::new(0.0, 0.0); rows.len()]; cols.len()];
        for (i, &r) in rows.iter().enumerate() {
            let (cs, vs) = self.row(r);
            for (&c, &v) in cs.iter().zip(vs) {
                let j = cols.binary_search(&(c as usize)).expect("column in component");
                out[j][i] = v;
            }
        }
        out
    }

    /// `max |(U†U − I)_{ij}|`, one sparse row of the Gram matrix at a time.
    pub fn unitarity_error(&self) -> f64 {
        let adj = self.adjoint();
        let mut acc = vec![C64::new(0.0, 0.0); self.dim];
        let mut touched: Vec<usize> = Vec::new();
        let mut worst = 0.0f64;
        for k in 0..self.dim {
            let (rs, ws) = adj.row(k);
            for (&r, &w) in rs.iter().zip(ws) {
                let (cs, vs) = self.row(r as usize);
                for (&c, &v) in cs.iter().zip(vs) {
                    let c = c as usize;
                    if acc[c] == C64::new(0.0, 0.0) {
                        touched.push(c);
                    }
                    acc[c] += w * v;
                }
            }
            let mut diag_seen = false;
            for &c in &touched {
                let g = std::mem::replace(&mut acc[c], C64::new(0.0, 0.0));
                let e = if c == k {
                    diag_seen = true;
                    (g - 1.0).norm()
                } else {
                    g.norm()
                };
                worst = worst.max(e);
            }
            if !diag_seen {
                worst = worst.max(1.0);
            }
            touched.clear();
        }
        worst
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_error() <= tol
    }

    /// Modified Gram–Schmidt on the columns of each connected block.
    pub fn reunitarize(&self) -> Result<SparseMatrix> {
        let err = self.unitarity_error();
        if err <= REUNITARIZE_TOL {
            return Ok(self.clone());
        }
        if err >= NEAR_UNITARY_TOL {
            return Err(Error::NonUnitaryGate(format!(
                "matrix is {err:.3e} from unitary, too far to repair"
            )));
        }
        let comps = self.components();
        if let Some((_, cols)) = comps.iter().find(|(_, c)| c.len() > MAX_REPAIR_BLOCK) {
            return Err(Error::TooLarge { qubits: cols.len().ilog2() as usize, limit: 12 });
        }
        let mut rows_out: Vec<Vec<(u32, C64)>> = vec![Vec::new(); self.dim];
        for (rows, cols) in comps {
            let mut q = self.component_dense(&rows, &cols);
            for j in 0..q.len() {
                for i in 0..j {
                    let (done, rest) = q.split_at_mut(j);
                    let p: C64 = done[i].iter().zip(&rest[0]).map(|(x, y)| x.conj() * y).sum();
                    for (y, x) in rest[0].iter_mut().zip(&done[i]) {
                        *y -= p * x;
                    }
                }
                let norm = q[j].iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                for y in &mut q[j] {
                    *y /= norm;
                }
            }
            for (j, col) in q.iter().enumerate() {
                for (i, &v) in col.iter().enumerate() {
                    if v.norm() > 0.0 {
                        rows_out[rows[i]].push((cols[j] as u32, v));
                    }
                }
            }
        }
        for row in &mut rows_out {
            row.sort_unstable_by_key(|e| e.0);
        }
        let out = Self::from_rows(self.dim, rows_out);
        let after = out.unitarity_error();
        if after > REUNITARIZE_TOL {
            return Err(Error::NonUnitaryGate(format!(
                "re-orthonormalization left {after:.3e} drift"
            )));
        }
        Ok(out)
    }

    /// Short stable content hash, used to name grown gates.
    pub fn content_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        feed(self.dim as u64);
        for (r, c, v) in self.iter() {
            feed(r as u64);
            feed(c as u64);
            feed(v.re.to_bits());
            feed(v.im.to_bits());
        }
        h
    }
}

/// Sort by column, merge duplicates and drop negligible entries.
fn compact(mut acc: Vec<(u32, C64)>) -> Vec<(u32, C64)> {
    acc.sort_unstable_by_key(|e| e.0);
    let mut out: Vec<(u32, C64)> = Vec::with_capacity(acc.len());
    for (c, v) in acc {
        match out.last_mut() {
            Some(last) if last.0 == c => last.1 += v,
            _ => out.push((c, v)),
        }
    }
    out.retain(|e| e.1.norm() > DROP_TOL);
    out
}

/// A matrix placed on some bits of a larger index space. `bits[j]` is the
/// index bit (0 = least significant) carrying qubit `j` of the matrix.
pub(crate) struct Placed<'a> {
    pub m: &'a SparseMatrix,
    pub bits: Vec<usize>,
}

impl Placed<'_> {
    fn extract(&self, idx: usize) -> usize {
        let k = self.bits.len();
        let mut t = 0;
        for (j, &b) in self.bits.iter().enumerate() {
            t |= (idx >> b & 1) << (k - 1 - j);
        }
        t
    }

    fn deposit(&self, t: usize) -> usize {
        let k = self.bits.len();
        let mut idx = 0;
        for (j, &b) in self.bits.iter().enumerate() {
            idx |= (t >> (k - 1 - j) & 1) << b;
        }
        idx
    }

    fn mask(&self) -> usize {
        self.bits.iter().fold(0, |m, &b| m | 1 << b)
    }
}

/// Product of embedded factors on a `nbits`-qubit space. `factors` are in
/// application order, so the result is `F_last · … · F_first`. Returns
/// `None` as soon as any row of the result has more than `row_limit` entries
/// or the whole result more than `entry_limit`.
pub(crate) fn fused_product(
    nbits: usize,
    factors: &[Placed<'_>],
    row_limit: usize,
    entry_limit: usize,
) -> Option<SparseMatrix> {
    let dim = 1usize << nbits;
    let masks: Vec<usize> = factors.iter().map(Placed::mask).collect();
    let deposits: Vec<Vec<usize>> = factors
        .iter()
        .map(|f| (0..f.m.dim()).map(|t| f.deposit(t)).collect())
        .collect();
    let abort = AtomicBool::new(false);
    let entries = AtomicUsize::new(0);
    const CHUNK: usize = 512;
    let chunks = dim.div_ceil(CHUNK);
    let parts = par::map_range(chunks, 4, |ci| {
        let mut rows = Vec::with_capacity(CHUNK);
        for r in ci * CHUNK..((ci + 1) * CHUNK).min(dim) {
            if abort.load(Ordering::Relaxed) {
                return None;
            }
            let mut cur: Vec<(u32, C64)> = vec![(r as u32, C64::new(1.0, 0.0))];
            for fi in (0..factors.len()).rev() {
                let f = &factors[fi];
                let mut next = Vec::with_capacity(cur.len() * 2);
                for &(k, a) in &cur {
                    let k = k as usize;
                    let rest = k & !masks[fi];
                    let (cs, vs) = f.m.row(f.extract(k));
                    for (&c, &b) in cs.iter().zip(vs) {
                        next.push(((rest | deposits[fi][c as usize]) as u32, a * b));
                    }
                }
                cur = compact(next);
                if cur.len() > row_limit.saturating_mul(64) {
                    abort.store(true, Ordering::Relaxed);
                    return None;
                }
            }
            if cur.len() > row_limit
                || entries.fetch_add(cur.len(), Ordering::Relaxed) + cur.len() > entry_limit
            {
                abort.store(true, Ordering::Relaxed);
                return None;
            }
            rows.push(cur);
        }
        Some(rows)
    });
    let mut all = Vec::with_capacity(dim);
    for p in parts {
        all.extend(p?);
    }
    Some(SparseMatrix::from_rows(dim, all))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn h() -> SparseMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        SparseMatrix::from_real(&[&[s, s], &[s, -s]]).unwrap()
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(SparseMatrix::from_entries(3, []).is_err());
        assert!(SparseMatrix::from_entries(2, [(0, 2, c(1.0))]).is_err());
        assert!(SparseMatrix::from_entries(2, [(0, 0, c(1.0)), (0, 0, c(2.0))]).is_err());
    }

    #[test]
    fn kron_places_left_factor_high() {
        let x = SparseMatrix::from_real(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let xi = x.kron(&SparseMatrix::identity(2));
        assert_eq!(xi.get(2, 0), c(1.0));
        assert_eq!(xi.get(3, 1), c(1.0));
        assert_eq!(xi.nnz(), 4);
    }

    #[test]
    fn controlled_is_exact_direct_sum() {
        let x = SparseMatrix::from_real(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let cx = x.controlled();
        let want = SparseMatrix::from_real(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, 1.0, 0.0],
        ])
        .unwrap();
        assert_eq!(cx, want);
    }

    #[test]
    fn adjoint_twice_is_identity_map() {
        let m = SparseMatrix::from_dense(&[
            vec![C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
            vec![C64::new(0.0, 0.0), C64::new(0.6, 0.8)],
        ])
        .unwrap();
        assert_eq!(m.adjoint().adjoint(), m);
        assert!(m.is_unitary(1e-12));
    }

    #[test]
    fn permute_qubits_swaps_cnot_roles() {
        let x = SparseMatrix::from_real(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let cx = x.controlled();
        let xc = cx.permute_qubits(&[1, 0]);
        // control is now the low qubit: |01> -> |11>
        assert_eq!(xc.get(3, 1), c(1.0));
        assert_eq!(xc.get(1, 3), c(1.0));
        assert_eq!(xc.get(0, 0), c(1.0));
        assert_eq!(xc.get(2, 2), c(1.0));
    }

    #[test]
    fn unitarity_error_detects_scaling() {
        assert!(h().unitarity_error() < 1e-15);
        let bad = SparseMatrix::from_real(&[&[1.0, 0.0], &[0.0, 0.5]]).unwrap();
        assert!((bad.unitarity_error() - 0.75).abs() < 1e-12);
        let empty_col = SparseMatrix::from_real(&[&[1.0, 0.0], &[0.0, 0.0]]).unwrap();
        assert!(empty_col.unitarity_error() >= 1.0);
    }

    #[test]
    fn reunitarize_identity_is_unchanged() {
        let i = SparseMatrix::identity(8);
        assert_eq!(i.reunitarize().unwrap(), i);
    }

    #[test]
    fn reunitarize_repairs_perturbed_h() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let p = SparseMatrix::from_real(&[&[s + 1e-6, s], &[s, -s - 1e-6]]).unwrap();
        assert!(p.unitarity_error() > 1e-12);
        let u = p.reunitarize().unwrap();
        assert!(u.unitarity_error() <= 1e-12);
        for (r, col, v) in h().iter() {
            assert!((u.get(r, col) - v).norm() < 2e-6);
        }
    }

    #[test]
    fn reunitarize_rejects_far_matrices() {
        let bad = SparseMatrix::from_real(&[&[1.0, 0.0], &[0.0, 0.5]]).unwrap();
        assert!(matches!(bad.reunitarize(), Err(Error::NonUnitaryGate(_))));
    }

    #[test]
    fn reunitarize_accumulated_rotation_drift() {
        let phi = 2.0 * std::f64::consts::PI / 8.0;
        let r3 = SparseMatrix::diagonal(vec![c(1.0), C64::from_polar(1.0, phi)]);
        let mut acc = SparseMatrix::identity(2);
        for _ in 0..10_000 {
            acc = acc.matmul(&r3).unwrap();
        }
        let fixed = acc.reunitarize().unwrap();
        assert!(fixed.unitarity_error() <= 1e-12);
    }

    #[test]
    fn fused_product_matches_dense_kron_product() {
        // H on qubit 0 (MSB) then CNOT(0 -> 1) on a 2-qubit space
        let x = SparseMatrix::from_real(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let cx = x.controlled();
        let hh = h();
        let f = fused_product(
            2,
            &[
                Placed { m: &hh, bits: vec![1] },
                Placed { m: &cx, bits: vec![1, 0] },
            ],
            16,
            usize::MAX,
        )
        .unwrap();
        let want = cx.matmul(&hh.kron(&SparseMatrix::identity(2))).unwrap();
        for r in 0..4 {
            for col in 0..4 {
                assert!((f.get(r, col) - want.get(r, col)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn fused_product_respects_row_limit() {
        let hh = h();
        let placed: Vec<Placed> = (0..3).map(|b| Placed { m: &hh, bits: vec![b] }).collect();
        assert!(fused_product(3, &placed, 4, usize::MAX).is_none());
        assert!(fused_product(3, &placed, 8, usize::MAX).is_some());
    }
}
