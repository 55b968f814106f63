//! Noise: random Pauli insertion on circuits and amplitude damping by
//! quantum trajectories.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::gates::{self, GateRef};
use crate::ket::{Ket, QubitId};
use crate::sparse::{SparseMatrix, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    pub fn gate(self) -> GateRef {
        match self {
            Pauli::X => gates::x(),
            Pauli::Y => gates::y(),
            Pauli::Z => gates::z(),
        }
    }
}

/// What an injection run inserted.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InjectionStats {
    pub p: f64,
    /// (site, wire) opportunities considered.
    pub sites: usize,
    /// Injected X, Y, Z counts per wire.
    pub per_wire: BTreeMap<QubitId, [usize; 3]>,
}

impl InjectionStats {
    pub fn total(&self) -> usize {
        self.per_wire.values().flatten().sum()
    }

    pub fn count(&self, p: Pauli) -> usize {
        self.per_wire.values().map(|c| c[p as usize]).sum()
    }
}

/// Probabilities for a noisy run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub depolarizing: f64,
    pub damping: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(depolarizing: f64, damping: f64, seed: u64) -> Result<NoiseSpec> {
        check_prob(depolarizing)?;
        check_prob(damping)?;
        Ok(NoiseSpec { depolarizing, damping, seed })
    }
}

fn check_prob(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("probability {p} outside [0, 1]")));
    }
    Ok(())
}

/// Wires an error after this leaf may hit; labels are not sites.
fn site_wires(leaf: &Circuit) -> Vec<QubitId> {
    match leaf {
        Circuit::Apply(op) if op.gate.is_label() => Vec::new(),
        Circuit::BitCon { body, .. } => body.wires(),
        other => other.leaf_wires(),
    }
}

/// Every (site, wire) location where an error can be inserted. Sites are
/// the top-level leaves of the circuit; wrapped blocks count as one site.
pub fn injection_sites(c: &Circuit) -> Vec<(usize, QubitId)> {
    let mut out = Vec::new();
    for (i, leaf) in c.leaves().into_iter().enumerate() {
        for w in site_wires(leaf) {
            out.push((i, w));
        }
    }
    out
}

/// Rebuild `c` as a flat sequence of its leaves with Paulis chosen by
/// `decide` after each site. Errors after a classically controlled block
/// are placed inside it, so they only occur when the block runs.
fn insert<F>(c: &Circuit, is_site: &dyn Fn(&Circuit) -> bool, mut decide: F) -> Circuit
where
    F: FnMut(usize, QubitId) -> Option<Pauli>,
{
    let mut out = Vec::new();
    for (i, leaf) in c.leaves().into_iter().enumerate() {
        let wires = if is_site(leaf) { site_wires(leaf) } else { Vec::new() };
        let errs: Vec<Circuit> = wires
            .into_iter()
            .filter_map(|w| decide(i, w).map(|p| Circuit::apply(p.gate(), &[w])))
            .collect();
        match leaf {
            Circuit::BitCon { cond, ctrls, body } if !errs.is_empty() => {
                let mut seq = vec![(**body).clone()];
                seq.extend(errs);
                out.push(Circuit::BitCon {
                    cond: cond.clone(),
                    ctrls: ctrls.clone(),
                    body: Box::new(Circuit::Seq(seq)),
                });
            }
            _ => {
                out.push(leaf.clone());
                out.extend(errs);
            }
        }
    }
    Circuit::Seq(out)
}

/// After every site, each touched wire independently gets a uniformly
/// chosen X, Y or Z with probability `p`.
pub fn apply_depolarizing(c: &Circuit, p: f64, seed: u64) -> Result<(Circuit, InjectionStats)> {
    depolarize_where(c, p, seed, &|_| true)
}

/// `apply_depolarizing` restricted to the leaves accepted by `is_site`.
pub fn depolarize_where(
    c: &Circuit,
    p: f64,
    seed: u64,
    is_site: &dyn Fn(&Circuit) -> bool,
) -> Result<(Circuit, InjectionStats)> {
    check_prob(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = InjectionStats { p, ..InjectionStats::default() };
    let out = insert(c, is_site, |_, w| {
        stats.sites += 1;
        if rng.gen::<f64>() < p {
            let e = Pauli::ALL[rng.gen_range(0..3)];
            stats.per_wire.entry(w).or_default()[e as usize] += 1;
            Some(e)
        } else {
            None
        }
    });
    Ok((out, stats))
}

/// Insert exactly one Pauli at one location from `injection_sites`.
pub fn inject_at(c: &Circuit, site: usize, wire: QubitId, pauli: Pauli) -> Result<Circuit> {
    if !injection_sites(c).contains(&(site, wire)) {
        return Err(Error::InvalidArgument(format!("no injection site ({site}, {wire})")));
    }
    Ok(insert(c, &|_| true, |i, w| (i == site && w == wire).then_some(pauli)))
}

/// One trajectory step of amplitude damping on `wire`. Returns true when
/// the decay jump happened.
pub fn amplitude_damp(ket: &mut Ket, wire: QubitId, gamma: f64) -> Result<bool> {
    check_prob(gamma)?;
    let p1 = ket.prob_one(wire)?;
    let jump = ket.sample_uniform() < gamma * p1;
    let k = if jump {
        SparseMatrix::from_entries(2, [(0, 1, C64::new(1.0, 0.0))])?
    } else {
        SparseMatrix::diagonal(vec![C64::new(1.0, 0.0), C64::new((1.0 - gamma).sqrt(), 0.0)])
    };
    ket.apply_kraus(wire, &k)?;
    Ok(jump)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{cnot, h, label, Side};

    fn small() -> Circuit {
        Circuit::Seq(vec![
            Circuit::apply(label("a", Side::Left), &[0]),
            Circuit::apply(h(), &[0]),
            Circuit::apply(cnot(), &[0, 1]),
        ])
    }

    #[test]
    fn p_zero_and_one() {
        let c = small();
        let (c0, s0) = apply_depolarizing(&c, 0.0, 3).unwrap();
        assert_eq!(c0.leaves().len(), 3);
        assert_eq!(s0.total(), 0);
        assert_eq!(s0.sites, 3);
        let (_, s1) = apply_depolarizing(&c, 1.0, 3).unwrap();
        assert_eq!(s1.total(), 3);
        assert!(apply_depolarizing(&c, 1.5, 3).is_err());
    }

    #[test]
    fn sites_skip_labels() {
        assert_eq!(injection_sites(&small()), vec![(1, 0), (2, 0), (2, 1)]);
        let one = inject_at(&small(), 2, 1, Pauli::Z).unwrap();
        assert_eq!(one.leaves().len(), 4);
        assert!(inject_at(&small(), 0, 0, Pauli::Z).is_err());
    }

    #[test]
    fn damping_extremes() {
        let mut k = Ket::new(1, 4).unwrap();
        k.apply_unitary(gates::x().matrix().unwrap(), &[0]).unwrap();
        assert!(amplitude_damp(&mut k, 0, 1.0).unwrap());
        assert!(k.prob_one(0).unwrap() < 1e-12);
        let mut k = Ket::new(1, 4).unwrap();
        k.apply_unitary(gates::h().matrix().unwrap(), &[0]).unwrap();
        let before = k.state_vector(&[0]).unwrap();
        assert!(!amplitude_damp(&mut k, 0, 0.0).unwrap());
        let after = k.state_vector(&[0]).unwrap();
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
