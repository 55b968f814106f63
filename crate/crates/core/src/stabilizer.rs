//! Clifford simulation on a bit-packed stabilizer tableau.
//!
//! Storage is column-major: for each qubit `j` the x and z bits of all
//! `2n + 1` rows (destabilizers, stabilizers, one scratch row) are packed
//! into machine words, so every gate is a handful of word operations per
//! 64 rows.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{replay, Circuit, Cond, Emitter};
use crate::error::{Error, Result};
use crate::gates::{GateKind, GateRef};
use crate::ket::{BitValue, QubitId};
use crate::sparse::C64;

/// Largest register `to_state` will expand.
pub const TO_STATE_LIMIT: usize = 12;

/// Largest register `check_invariants` will examine.
pub const CHECK_LIMIT: usize = 64;

pub struct Tableau {
    n: usize,
    words: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    r: Vec<u64>,
    rng: ChaCha8Rng,
    bits: Vec<BitValue>,
    log: Vec<(QubitId, BitValue)>,
}

#[inline]
fn get(col: &[u64], row: usize) -> bool {
    col[row / 64] >> (row % 64) & 1 == 1
}

#[inline]
fn set(col: &mut [u64], row: usize, v: bool) {
    let m = 1u64 << (row % 64);
    if v {
        col[row / 64] |= m;
    } else {
        col[row / 64] &= !m;
    }
}

impl Tableau {
    /// `|0…0⟩` on `n` qubits.
    pub fn new(n: usize, seed: u64) -> Result<Tableau> {
        if n == 0 {
            return Err(Error::InvalidArgument("tableau needs at least one qubit".into()));
        }
        let words = (2 * n + 1).div_ceil(64);
        let mut t = Tableau {
            n,
            words,
            x: vec![0; n * words],
            z: vec![0; n * words],
            r: vec![0; words],
            rng: ChaCha8Rng::seed_from_u64(seed),
            bits: vec![BitValue::Unknown; n],
            log: Vec::new(),
        };
        for j in 0..n {
            set(t.xcol_mut(j), j, true);
            set(t.zcol_mut(j), n + j, true);
        }
        Ok(t)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Bytes held by the tableau bits.
    pub fn memory_bytes(&self) -> usize {
        (self.x.len() + self.z.len() + self.r.len()) * 8
    }

    pub fn bits(&self) -> &[BitValue] {
        &self.bits
    }

    pub fn measurement_log(&self) -> &[(QubitId, BitValue)] {
        &self.log
    }

    fn xcol(&self, j: usize) -> &[u64] {
        &self.x[j * self.words..(j + 1) * self.words]
    }

    fn zcol(&self, j: usize) -> &[u64] {
        &self.z[j * self.words..(j + 1) * self.words]
    }

    fn xcol_mut(&mut self, j: usize) -> &mut [u64] {
        &mut self.x[j * self.words..(j + 1) * self.words]
    }

    fn zcol_mut(&mut self, j: usize) -> &mut [u64] {
        &mut self.z[j * self.words..(j + 1) * self.words]
    }

    fn check(&self, wires: &[QubitId]) -> Result<()> {
        for (i, &w) in wires.iter().enumerate() {
            if w >= self.n {
                return Err(Error::InvalidWire(w));
            }
            if wires[..i].contains(&w) {
                return Err(Error::InvalidArgument(format!("wire {w} repeated")));
            }
        }
        Ok(())
    }

    pub fn h(&mut self, a: QubitId) -> Result<()> {
        self.check(&[a])?;
        let w = self.words;
        let (xs, zs) = (&mut self.x[a * w..(a + 1) * w], &mut self.z[a * w..(a + 1) * w]);
        for i in 0..w {
            self.r[i] ^= xs[i] & zs[i];
            std::mem::swap(&mut xs[i], &mut zs[i]);
        }
        Ok(())
    }

    pub fn s(&mut self, a: QubitId) -> Result<()> {
        self.check(&[a])?;
        let w = self.words;
        let (xs, zs) = (&self.x[a * w..(a + 1) * w], &mut self.z[a * w..(a + 1) * w]);
        for i in 0..w {
            self.r[i] ^= xs[i] & zs[i];
            zs[i] ^= xs[i];
        }
        Ok(())
    }

    pub fn sdg(&mut self, a: QubitId) -> Result<()> {
        self.check(&[a])?;
        let w = self.words;
        let (xs, zs) = (&self.x[a * w..(a + 1) * w], &mut self.z[a * w..(a + 1) * w]);
        for i in 0..w {
            self.r[i] ^= xs[i] & !zs[i];
            zs[i] ^= xs[i];
        }
        Ok(())
    }

    pub fn x(&mut self, a: QubitId) -> Result<()> {
        self.check(&[a])?;
        let w = self.words;
        for i in 0..w {
            self.r[i] ^= self.z[a * w + i];
        }
        Ok(())
    }

    pub fn z(&mut self, a: QubitId) -> Result<()> {
        self.check(&[a])?;
        let w = self.words;
        for i in 0..w {
            self.r[i] ^= self.x[a * w + i];
        }
        Ok(())
    }

    pub fn y(&mut self, a: QubitId) -> Result<()> {
        self.check(&[a])?;
        let w = self.words;
        for i in 0..w {
            self.r[i] ^= self.x[a * w + i] ^ self.z[a * w + i];
        }
        Ok(())
    }

    pub fn cnot(&mut self, a: QubitId, b: QubitId) -> Result<()> {
        self.check(&[a, b])?;
        let w = self.words;
        for i in 0..w {
            let (xa, za) = (self.x[a * w + i], self.z[a * w + i]);
            let (xb, zb) = (self.x[b * w + i], self.z[b * w + i]);
            self.r[i] ^= xa & zb & !(xb ^ za);
            self.x[b * w + i] = xb ^ xa;
            self.z[a * w + i] = za ^ zb;
        }
        Ok(())
    }

    pub fn cz(&mut self, a: QubitId, b: QubitId) -> Result<()> {
        self.h(b)?;
        self.cnot(a, b)?;
        self.h(b)
    }

    pub fn swap(&mut self, a: QubitId, b: QubitId) -> Result<()> {
        self.check(&[a, b])?;
        let w = self.words;
        for i in 0..w {
            self.x.swap(a * w + i, b * w + i);
            self.z.swap(a * w + i, b * w + i);
        }
        Ok(())
    }

    /// Apply a Clifford gate by library name.
    pub fn apply_named(&mut self, name: &str, wires: &[QubitId]) -> Result<()> {
        let need = match name {
            "CNOT" | "CZ" | "SWAP" => 2,
            _ => 1,
        };
        if wires.len() < need {
            return Err(Error::InvalidArgument(format!("{name} needs {need} wires")));
        }
        let a = wires[0];
        match name {
            "I" => self.check(&[a]),
            "H" => self.h(a),
            "S" | "Sdg'" => self.s(a),
            "Sdg" | "S'" => self.sdg(a),
            "X" => self.x(a),
            "Y" => self.y(a),
            "Z" => self.z(a),
            "CNOT" => self.cnot(a, wires[1]),
            "CZ" => self.cz(a, wires[1]),
            "SWAP" => self.swap(a, wires[1]),
            _ => Err(Error::UnsupportedGate {
                gate: name.to_string(),
                wire: a,
            }),
        }
    }

    /// True when measuring `a` has a fixed outcome.
    pub fn is_deterministic(&self, a: QubitId) -> Result<bool> {
        self.check(&[a])?;
        let xs = self.xcol(a);
        Ok((self.n..2 * self.n).all(|row| !get(xs, row)))
    }

    pub fn measure(&mut self, a: QubitId) -> Result<BitValue> {
        let v = self.collapse(a)?;
        self.bits[a] = v;
        self.log.push((a, v));
        Ok(v)
    }

    /// Force `a` into `target`: a hidden measurement, then a flip if needed.
    pub fn reset(&mut self, a: QubitId, target: BitValue) -> Result<()> {
        let target = match target {
            BitValue::Unknown => {
                return Err(Error::InvalidArgument("reset target must be Zero or One".into()))
            }
            t => t,
        };
        if self.collapse(a)? != target {
            self.x(a)?;
        }
        self.bits[a] = target;
        Ok(())
    }

    fn collapse(&mut self, a: QubitId) -> Result<BitValue> {
        self.check(&[a])?;
        let n = self.n;
        let p = (n..2 * n).find(|&row| get(self.xcol(a), row));
        match p {
            Some(p) => {
                let mut targets: Vec<u64> = self.xcol(a).to_vec();
                set(&mut targets, p, false);
                self.rowsum_many(&targets, p);
                for j in 0..n {
                    let (xv, zv) = (get(self.xcol(j), p), get(self.zcol(j), p));
                    set(self.xcol_mut(j), p - n, xv);
                    set(self.zcol_mut(j), p - n, zv);
                    set(self.xcol_mut(j), p, false);
                    set(self.zcol_mut(j), p, false);
                }
                let rp = get(&self.r, p);
                set(&mut self.r, p - n, rp);
                set(self.zcol_mut(a), p, true);
                let outcome = self.rng.gen::<bool>();
                set(&mut self.r, p, outcome);
                Ok(BitValue::from_bool(outcome))
            }
            None => {
                let scratch = 2 * n;
                let rows: Vec<usize> = (0..n).filter(|&i| get(self.xcol(a), i)).collect();
                for j in 0..n {
                    set(self.xcol_mut(j), scratch, false);
                    set(self.zcol_mut(j), scratch, false);
                }
                set(&mut self.r, scratch, false);
                let sources: Vec<usize> = rows.iter().map(|i| i + n).collect();
                self.accumulate_into_scratch(&sources);
                Ok(BitValue::from_bool(get(&self.r, scratch)))
            }
        }
    }

    /// `row_i ← row_i · row_p` for every row `i` set in `targets`, all at once.
    fn rowsum_many(&mut self, targets: &[u64], p: usize) {
        let w = self.words;
        let rp = get(&self.r, p);
        // running sum of g mod 4, as two bit planes per row
        let mut hi: Vec<u64> = (0..w)
            .map(|i| self.r[i] ^ if rp { u64::MAX } else { 0 })
            .collect();
        let mut lo = vec![0u64; w];
        for j in 0..self.n {
            let (x1, z1) = (get(self.xcol(j), p), get(self.zcol(j), p));
            if !x1 && !z1 {
                continue;
            }
            for i in 0..w {
                let (x2, z2) = (self.x[j * w + i], self.z[j * w + i]);
                let (plus, minus) = match (x1, z1) {
                    (true, true) => (z2 & !x2, x2 & !z2),
                    (true, false) => (z2 & x2, z2 & !x2),
                    _ => (x2 & !z2, x2 & z2),
                };
                let (plus, minus) = (plus & targets[i], minus & targets[i]);
                hi[i] ^= lo[i] & plus;
                lo[i] ^= plus;
                hi[i] ^= !lo[i] & minus;
                lo[i] ^= minus;
                if x1 {
                    self.x[j * w + i] ^= targets[i];
                }
                if z1 {
                    self.z[j * w + i] ^= targets[i];
                }
            }
        }
        for i in 0..w {
            self.r[i] = (self.r[i] & !targets[i]) | (hi[i] & targets[i]);
        }
    }

    /// Multiply the given rows into the scratch row, in order.
    fn accumulate_into_scratch(&mut self, sources: &[usize]) {
        let n = self.n;
        let scratch = 2 * n;
        let mut phase: u32 = 0;
        for &s in sources {
            if get(&self.r, s) {
                phase += 2;
            }
        }
        for j in 0..n {
            let (xc, zc) = (self.xcol(j), self.zcol(j));
            let (mut x, mut z) = (false, false);
            for &s in sources {
                let (x1, z1) = (get(xc, s), get(zc, s));
                phase += match (x1, z1, x, z) {
                    (false, false, ..) => 0,
                    (true, true, x2, z2) => (z2 as u32 + 3 * x2 as u32) % 4,
                    (true, false, x2, z2) => {
                        if z2 {
                            if x2 { 1 } else { 3 }
                        } else {
                            0
                        }
                    }
                    (false, true, x2, z2) => {
                        if x2 {
                            if z2 { 3 } else { 1 }
                        } else {
                            0
                        }
                    }
                };
                x ^= x1;
                z ^= z1;
            }
            set(self.xcol_mut(j), scratch, x);
            set(self.zcol_mut(j), scratch, z);
        }
        set(&mut self.r, scratch, phase % 4 == 2);
    }

    /// Check the commutation structure of the rows.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.n;
        if n > CHECK_LIMIT {
            return Err(Error::TooLarge { qubits: n, limit: CHECK_LIMIT });
        }
        let anti = |a: usize, b: usize| {
            (0..n).fold(false, |acc, j| {
                let (xa, za) = (get(self.xcol(j), a), get(self.zcol(j), a));
                let (xb, zb) = (get(self.xcol(j), b), get(self.zcol(j), b));
                acc ^ (xa & zb) ^ (za & xb)
            })
        };
        for i in 0..n {
            for k in 0..n {
                if anti(n + i, n + k) {
                    return Err(Error::AssertionFailed(format!("stabilizers {i} and {k} anticommute")));
                }
                if anti(i, n + k) != (i == k) {
                    return Err(Error::AssertionFailed(format!(
                        "destabilizer {i} and stabilizer {k} have the wrong commutation"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Dense state vector (qubit 0 most significant), fixed up so the first
    /// nonzero amplitude is real and positive.
    pub fn to_state(&self) -> Result<Vec<C64>> {
        let n = self.n;
        if n > TO_STATE_LIMIT {
            return Err(Error::TooLarge { qubits: n, limit: TO_STATE_LIMIT });
        }
        let dim = 1usize << n;
        let rows: Vec<(usize, usize, bool, usize)> = (n..2 * n)
            .map(|row| {
                let (mut xm, mut zm, mut ys) = (0usize, 0usize, 0usize);
                for j in 0..n {
                    let bit = 1 << (n - 1 - j);
                    let (xv, zv) = (get(self.xcol(j), row), get(self.zcol(j), row));
                    if xv {
                        xm |= bit;
                    }
                    if zv {
                        zm |= bit;
                    }
                    if xv && zv {
                        ys += 1;
                    }
                }
                (xm, zm, get(&self.r, row), ys)
            })
            .collect();
        for start in 0..dim {
            let mut v = vec![C64::new(0.0, 0.0); dim];
            v[start] = C64::new(1.0, 0.0);
            for &(xm, zm, neg, ys) in &rows {
                // v ← (v + P v) / 2, with P = ± i^ys X^x Z^z
                let ph = match ys % 4 {
                    0 => C64::new(1.0, 0.0),
                    1 => C64::new(0.0, 1.0),
                    2 => C64::new(-1.0, 0.0),
                    _ => C64::new(0.0, -1.0),
                } * if neg { -1.0 } else { 1.0 };
                let mut pv = vec![C64::new(0.0, 0.0); dim];
                for (b, &a) in v.iter().enumerate() {
                    if a == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let sign = if (zm & b).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
                    pv[b ^ xm] += a * ph * sign;
                }
                for (a, p) in v.iter_mut().zip(&pv) {
                    *a = (*a + p) * 0.5;
                }
            }
            let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-6 {
                let first = *v.iter().find(|a| a.norm() > 1e-9).expect("nonzero vector");
                let fix = first.conj() / first.norm() / norm;
                return Ok(v.into_iter().map(|a| a * fix).collect());
            }
        }
        Err(Error::AssertionFailed("tableau does not describe a state".into()))
    }
}

impl Emitter for Tableau {
    fn apply(&mut self, gate: &GateRef, wires: &[QubitId]) -> Result<()> {
        if wires.len() < gate.arity {
            return Err(Error::InvalidArgument(format!(
                "{} needs {} wires",
                gate.name, gate.arity
            )));
        }
        let w = &wires[..gate.arity];
        match &gate.kind {
            GateKind::Measure => self.measure(w[0]).map(|_| ()),
            GateKind::Reset(v) => self.reset(w[0], *v),
            GateKind::Label { .. } => self.check(w),
            GateKind::Wrapped(t) => {
                let body = t.remap(&|q| w[q]);
                self.wrap(gate, w, &body)
            }
            GateKind::Unitary(_) => self.apply_named(&gate.name, w),
        }
    }

    fn bit_control(&mut self, cond: &Cond, ctrls: &[QubitId], body: &Circuit) -> Result<()> {
        if cond.eval(ctrls, &self.bits)? {
            replay(body, self)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_measures_zero_and_keeps_invariants() {
        let mut t = Tableau::new(5, 1).unwrap();
        t.check_invariants().unwrap();
        for q in 0..5 {
            assert!(t.is_deterministic(q).unwrap());
            assert_eq!(t.measure(q).unwrap(), BitValue::Zero);
        }
        let v = t.to_state().unwrap();
        assert!((v[0].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn x_then_measure_is_one() {
        let mut t = Tableau::new(3, 1).unwrap();
        t.x(1).unwrap();
        assert_eq!(t.measure(1).unwrap(), BitValue::One);
    }

    #[test]
    fn bell_outcomes_agree_and_repeat() {
        for seed in 0..200 {
            let mut t = Tableau::new(2, seed).unwrap();
            t.h(0).unwrap();
            t.cnot(0, 1).unwrap();
            assert!(!t.is_deterministic(0).unwrap());
            let a = t.measure(0).unwrap();
            assert!(t.is_deterministic(1).unwrap());
            assert_eq!(t.measure(1).unwrap(), a);
            assert_eq!(t.measure(0).unwrap(), a);
            t.check_invariants().unwrap();
        }
    }

    #[test]
    fn bell_state_vector() {
        let mut t = Tableau::new(2, 1).unwrap();
        t.h(0).unwrap();
        t.cnot(0, 1).unwrap();
        let v = t.to_state().unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for (a, e) in v.iter().zip([s, 0.0, 0.0, s]) {
            assert!((a - C64::new(e, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn y_phase_and_sdg() {
        // S Sdg = I, Y = i X Z keeps |1> sign conventions consistent
        let mut t = Tableau::new(1, 1).unwrap();
        t.h(0).unwrap();
        t.s(0).unwrap();
        t.sdg(0).unwrap();
        t.h(0).unwrap();
        assert_eq!(t.measure(0).unwrap(), BitValue::Zero);
        let mut t = Tableau::new(1, 1).unwrap();
        t.y(0).unwrap();
        assert_eq!(t.measure(0).unwrap(), BitValue::One);
    }

    #[test]
    fn rejects_non_clifford() {
        let mut t = Tableau::new(2, 1).unwrap();
        let e = t.apply_named("T", &[1]).unwrap_err();
        assert!(matches!(e, Error::UnsupportedGate { ref gate, wire: 1 } if gate == "T"));
    }
}
