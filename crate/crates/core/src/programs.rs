//! Small reference programs: EPR pairs, teleportation, GHZ-style entanglement.

use std::f64::consts::PI;

use rand::Rng;

use crate::circuit::{bc, labels, Circuit, Emitter};
use crate::error::{Error, Result};
use crate::gates::{cnot, h, label, measure, x, z, Gate, GateRef, Side};
use crate::ket::{Ket, QubitId};
use crate::sparse::{SparseMatrix, C64};

fn need(qs: &[QubitId], k: usize, what: &str) -> Result<()> {
    if qs.len() < k {
        return Err(Error::InvalidArgument(format!("{what} needs {k} qubits, got {}", qs.len())));
    }
    Ok(())
}

/// H on the first qubit, then CNOT onto the second.
pub fn epr(em: &mut dyn Emitter, qs: &[QubitId]) -> Result<()> {
    need(qs, 2, "epr")?;
    em.apply(&h(), &qs[..1])?;
    em.apply(&cnot(), &qs[..2])
}

/// Teleport the state of `qs[0]` to `qs[2]`.
pub fn teleport(em: &mut dyn Emitter, qs: &[QubitId]) -> Result<()> {
    need(qs, 3, "teleport")?;
    labels(em, &["Src", "\\ket{0}", "\\ket{0}"], &qs[..3], Side::Left)?;
    epr(em, &qs[1..])?;
    em.apply(&cnot(), &qs[..2])?;
    em.apply(&h(), &qs[..1])?;
    em.apply(&measure(), &qs[1..2])?;
    bc(em, &x(), qs[1], &qs[2..3])?;
    em.apply(&measure(), &qs[..1])?;
    bc(em, &z(), qs[0], &qs[2..3])?;
    em.apply(&label("Dest", Side::Right), &qs[2..3])
}

/// Teleport a `|1⟩` and measure the destination.
pub fn tele1(em: &mut dyn Emitter, qs: &[QubitId]) -> Result<()> {
    need(qs, 3, "tele1")?;
    em.apply(&x(), &qs[..1])?;
    teleport(em, qs)?;
    em.apply(&measure(), &qs[2..3])
}

/// H on the first qubit and a CNOT ladder down the rest.
pub fn entangle(em: &mut dyn Emitter, qs: &[QubitId]) -> Result<()> {
    need(qs, 1, "entangle")?;
    em.apply(&h(), &qs[..1])?;
    for w in qs.windows(2) {
        em.apply(&cnot(), w)?;
    }
    Ok(())
}

/// `entangle` followed by a measurement of every qubit.
pub fn entangle_measured(em: &mut dyn Emitter, qs: &[QubitId]) -> Result<()> {
    entangle(em, qs)?;
    for q in qs {
        em.apply(&measure(), std::slice::from_ref(q))?;
    }
    Ok(())
}

/// Haar-random single-qubit unitary named `Src`.
pub fn random_qubit<R: Rng + ?Sized>(rng: &mut R) -> Result<GateRef> {
    let theta = (1.0 - 2.0 * rng.gen::<f64>()).acos();
    let phi = 2.0 * PI * rng.gen::<f64>();
    let lambda = 2.0 * PI * rng.gen::<f64>();
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let m = SparseMatrix::from_dense(&[
        vec![C64::new(c, 0.0), -C64::from_polar(s, lambda)],
        vec![C64::from_polar(s, phi), C64::from_polar(c, phi + lambda)],
    ])?;
    Gate::unitary("Src", "Random source state", m)
}

/// Prepare `src|0⟩` on wire 0, run `c` (a teleport onto wire 2) and return
/// the fidelity of wire 2 with the prepared state.
pub fn teleport_fidelity(c: &Circuit, src: &GateRef, seed: u64) -> Result<f64> {
    let n = c.wires().into_iter().max().map_or(3, |m| (m + 1).max(3));
    let mut ket = Ket::new(n, seed)?;
    ket.apply(src, &[0])?;
    c.run(&mut ket as &mut dyn Emitter)?;
    source_fidelity(&mut ket, 2, src)
}

/// Fidelity of `wire` with `src|0⟩`; the wire must be unentangled.
pub fn source_fidelity(ket: &mut Ket, wire: QubitId, src: &GateRef) -> Result<f64> {
    ket.assert_unentangled(&[wire], true)?;
    let g = ket.group_of(wire)?;
    let m = src
        .matrix()
        .ok_or_else(|| Error::NonUnitaryGate(src.name.clone()))?;
    let want = [m.get(0, 0), m.get(1, 0)];
    let got = g.amps();
    let overlap = want[0].conj() * got[0] + want[1].conj() * got[1];
    Ok(overlap.norm_sqr() / g.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::compile;
    use rand::SeedableRng;

    #[test]
    fn teleport_moves_random_states() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let c = compile(|em, qs| teleport(em, qs), &[0, 1, 2]).unwrap();
        for seed in 0..20 {
            let src = random_qubit(&mut rng).unwrap();
            assert!((teleport_fidelity(&c, &src, seed).unwrap() - 1.0).abs() < 1e-10);
        }
    }
}
