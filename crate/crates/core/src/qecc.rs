//! Error-correcting codes: a code interface and the Steane [[7,1,3]] code.

use std::sync::OnceLock;

use crate::circuit::{compile, Circuit, Cond, Emitter};
use crate::error::{Error, Result};
use crate::gates::{cnot, h, measure, reset0, wrap, x, z, GateKind, GateRef};
use crate::ket::{BitValue, QubitId};
use crate::noise::{self, InjectionStats};

/// Syndrome ancillas shared by all blocks.
pub const ANCILLAS: usize = 6;

/// Physical qubits per logical qubit.
pub const BLOCK: usize = 7;

/// The three parity checks, as sets of block positions. Position `j` is hit
/// by exactly the checks whose pattern matches the binary digits of `j + 1`.
pub const CHECKS: [[usize; 4]; 3] = [[3, 4, 5, 6], [1, 2, 5, 6], [0, 2, 4, 6]];

/// A code that maps logical circuits to physical ones.
pub trait Code {
    fn name(&self) -> &str;
    fn physical_per_logical(&self) -> usize;
    /// Physical circuit for `c` on `logical` logical wires.
    fn transform(&self, c: &Circuit, logical: usize) -> Result<(Circuit, SteaneLayout)>;
    /// Logical value and distance to the nearest codeword.
    fn decode(&self, bits: &[BitValue]) -> Result<(BitValue, usize)>;
}

/// Where logical qubits live after the transform.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SteaneLayout {
    pub logical_count: usize,
    pub ancillas: Vec<QubitId>,
    pub blocks: Vec<Vec<QubitId>>,
}

impl SteaneLayout {
    pub fn new(logical_count: usize) -> SteaneLayout {
        SteaneLayout {
            logical_count,
            ancillas: (0..ANCILLAS).collect(),
            blocks: (0..logical_count)
                .map(|k| (ANCILLAS + BLOCK * k..ANCILLAS + BLOCK * (k + 1)).collect())
                .collect(),
        }
    }

    pub fn total_qubits(&self) -> usize {
        ANCILLAS + BLOCK * self.logical_count
    }

    /// Physical block of logical qubit `k`, in preparation order.
    pub fn log2phys(&self, k: usize) -> Result<&[QubitId]> {
        self.blocks.get(k).map(Vec::as_slice).ok_or_else(|| {
            Error::InvalidArgument(format!("logical qubit {k} of {}", self.logical_count))
        })
    }

    /// Decode logical qubit `k` from measured physical bits.
    pub fn decode_logical(&self, k: usize, bits: &[BitValue]) -> Result<(BitValue, usize)> {
        let block: Vec<BitValue> = self
            .log2phys(k)?
            .iter()
            .map(|&q| bits.get(q).copied().ok_or(Error::InvalidWire(q)))
            .collect::<Result<_>>()?;
        decode(&block)
    }
}

/// The 16 codewords of the [7,4] Hamming code as bitmasks (bit `j` =
/// position `j`). Even weights encode logical Zero, odd weights One.
pub fn codewords() -> &'static [u8; 16] {
    static WORDS: OnceLock<[u8; 16]> = OnceLock::new();
    WORDS.get_or_init(|| {
        let gens: Vec<u8> = CHECKS
            .iter()
            .map(|c| c.iter().fold(0u8, |m, &j| m | 1 << j))
            .chain(std::iter::once(0x7f))
            .collect();
        let mut out = [0u8; 16];
        for (i, w) in out.iter_mut().enumerate() {
            *w = (0..4).filter(|b| i >> b & 1 == 1).fold(0, |acc, b| acc ^ gens[b]);
        }
        out.sort_unstable();
        out
    })
}

/// Nearest codeword to seven measured bits: (logical value, distance).
pub fn decode(bits: &[BitValue]) -> Result<(BitValue, usize)> {
    if bits.len() != BLOCK {
        return Err(Error::InvalidArgument(format!("decode needs 7 bits, got {}", bits.len())));
    }
    let mut word = 0u8;
    for (j, b) in bits.iter().enumerate() {
        match b.as_bool() {
            None => return Err(Error::UnmeasuredQubit(j)),
            Some(true) => word |= 1 << j,
            Some(false) => {}
        }
    }
    let (dist, best) = codewords()
        .iter()
        .map(|&c| ((c ^ word).count_ones() as usize, c))
        .min()
        .expect("codeword table");
    Ok((BitValue::from_bool(best.count_ones() % 2 == 1), dist))
}

pub struct Steane7 {
    prep: GateRef,
    syn: GateRef,
    h_t: GateRef,
    x_t: GateRef,
    z_t: GateRef,
    cnot_t: GateRef,
    meas_t: GateRef,
}

fn transversal(name: &str, g: GateRef) -> Result<GateRef> {
    wrap(name, BLOCK, move |em, qs| {
        for &q in qs {
            em.apply(&g, &[q])?;
        }
        Ok(())
    })
}

impl Steane7 {
    pub fn new() -> Result<Steane7> {
        let prep = wrap("S7:Prep", BLOCK, |em, qs| {
            for &q in qs {
                em.apply(&reset0(), &[q])?;
            }
            for &lead in &[0, 1, 3] {
                em.apply(&h(), &[qs[lead]])?;
            }
            for (lead, check) in [(3, 0), (1, 1), (0, 2)] {
                for &t in CHECKS[check].iter().filter(|&&t| t != lead) {
                    em.apply(&cnot(), &[qs[lead], qs[t]])?;
                }
            }
            Ok(())
        })?;
        let syn = wrap(SYNDROME, ANCILLAS + BLOCK, |em, qs| {
            let (anc, data) = qs.split_at(ANCILLAS);
            for &a in anc {
                em.apply(&reset0(), &[a])?;
            }
            for (k, check) in CHECKS.iter().enumerate() {
                for &j in check {
                    em.apply(&cnot(), &[data[j], anc[k]])?;
                }
            }
            for (k, check) in CHECKS.iter().enumerate() {
                let a = anc[3 + k];
                em.apply(&h(), &[a])?;
                for &j in check {
                    em.apply(&cnot(), &[a, data[j]])?;
                }
                em.apply(&h(), &[a])?;
            }
            for &a in anc {
                em.apply(&measure(), &[a])?;
            }
            for (fix, flags) in [(x(), &anc[..3]), (z(), &anc[3..])] {
                for (j, &d) in data.iter().enumerate() {
                    em.bit_control(
                        &Cond::Equals(j as u64 + 1),
                        flags,
                        &Circuit::apply(fix.clone(), &[d]),
                    )?;
                }
            }
            Ok(())
        })?;
        let cnot_t = wrap("CNOT_T", 2 * BLOCK, |em, qs| {
            for j in 0..BLOCK {
                em.apply(&cnot(), &[qs[j], qs[BLOCK + j]])?;
            }
            Ok(())
        })?;
        Ok(Steane7 {
            prep,
            syn,
            h_t: transversal("H_T", h())?,
            x_t: transversal("X_T", x())?,
            z_t: transversal("Z_T", z())?,
            cnot_t,
            meas_t: transversal("Meas_T", measure())?,
        })
    }

    fn syn(&self, em: &mut dyn Emitter, layout: &SteaneLayout, k: usize) -> Result<()> {
        let mut ws = layout.ancillas.clone();
        ws.extend_from_slice(layout.log2phys(k)?);
        em.apply(&self.syn, &ws)
    }

    fn logical(&self, name: &str) -> Option<&GateRef> {
        Some(match name {
            "H" => &self.h_t,
            "X" => &self.x_t,
            "Z" => &self.z_t,
            "CNOT" => &self.cnot_t,
            "M" => &self.meas_t,
            _ => return None,
        })
    }

    fn emit_leaf(&self, em: &mut dyn Emitter, layout: &SteaneLayout, leaf: &Circuit) -> Result<()> {
        match leaf {
            Circuit::Apply(op) => {
                let g = &op.gate;
                let blocks: Vec<&[QubitId]> =
                    op.wires.iter().map(|&w| layout.log2phys(w)).collect::<Result<_>>()?;
                match &g.kind {
                    GateKind::Label { .. } => {
                        for &q in blocks[0] {
                            em.apply(g, &[q])?;
                        }
                    }
                    GateKind::Reset(v) => {
                        em.apply(&self.prep, blocks[0])?;
                        if *v == BitValue::One {
                            em.apply(&self.x_t, blocks[0])?;
                        }
                        self.syn(em, layout, op.wires[0])?;
                    }
                    _ => {
                        let t = self.logical(&g.name).ok_or_else(|| Error::UnsupportedGate {
                            gate: g.name.clone(),
                            wire: op.wires[0],
                        })?;
                        em.apply(t, &blocks.concat())?;
                        if !matches!(g.kind, GateKind::Measure) {
                            for &w in &op.wires {
                                self.syn(em, layout, w)?;
                            }
                        }
                    }
                }
            }
            Circuit::BitCon { cond: Cond::One, ctrls, body } if ctrls.len() == 1 => {
                let ctrl = layout.log2phys(ctrls[0])?.to_vec();
                let inner = compile(
                    |em, _| {
                        for l in body.leaves() {
                            match l {
                                Circuit::Apply(op) if matches!(op.gate.name.as_str(), "X" | "Z") => {
                                    let t = self.logical(&op.gate.name).expect("X or Z");
                                    em.apply(t, layout.log2phys(op.wires[0])?)?;
                                }
                                Circuit::Apply(op) => {
                                    return Err(Error::UnsupportedGate {
                                        gate: format!("BC-{}", op.gate.name),
                                        wire: op.wires[0],
                                    })
                                }
                                _ => {
                                    return Err(Error::UnsupportedGate {
                                        gate: "nested control".into(),
                                        wire: ctrls[0],
                                    })
                                }
                            }
                        }
                        Ok(())
                    },
                    &(0..layout.total_qubits()).collect::<Vec<_>>(),
                )?;
                em.bit_control(&Cond::Steane7, &ctrl, &inner)?;
                for w in body.wires() {
                    self.syn(em, layout, w)?;
                }
            }
            Circuit::BitCon { ctrls, .. } => {
                return Err(Error::UnsupportedGate {
                    gate: "BitControl".into(),
                    wire: ctrls[0],
                })
            }
            Circuit::Seq(_) | Circuit::Par(_) | Circuit::Wrap { .. } => {
                unreachable!("leaves of a flat circuit")
            }
        }
        Ok(())
    }
}

impl Code for Steane7 {
    fn name(&self) -> &str {
        "Steane7"
    }

    fn physical_per_logical(&self) -> usize {
        BLOCK
    }

    fn transform(&self, c: &Circuit, logical: usize) -> Result<(Circuit, SteaneLayout)> {
        let layout = SteaneLayout::new(logical);
        if let Some(&w) = c.wires().iter().find(|&&w| w >= logical) {
            return Err(Error::InvalidWire(w));
        }
        let flat = c.flatten();
        let all: Vec<QubitId> = (0..layout.total_qubits()).collect();
        let out = compile(
            |em, _| {
                for k in 0..logical {
                    em.apply(&self.prep, layout.log2phys(k)?)?;
                    self.syn(em, &layout, k)?;
                }
                for leaf in flat.leaves() {
                    self.emit_leaf(em, &layout, leaf)?;
                }
                Ok(())
            },
            &all,
        )?;
        Ok((out, layout))
    }

    fn decode(&self, bits: &[BitValue]) -> Result<(BitValue, usize)> {
        decode(bits)
    }
}

/// Transform `c` (on `logical` wires) with the Steane code.
pub fn steane_transform(c: &Circuit, logical: usize) -> Result<(Circuit, SteaneLayout)> {
    Steane7::new()?.transform(c, logical)
}

/// Name of the syndrome extraction block.
pub const SYNDROME: &str = "S7:Syn";

/// Random Pauli errors after the logical operations of a physical circuit.
/// Syndrome extraction blocks are treated as noiseless.
pub fn inject(c: &Circuit, p: f64, seed: u64) -> Result<(Circuit, InjectionStats)> {
    noise::depolarize_where(c, p, seed, &|leaf| {
        !matches!(leaf, Circuit::Wrap { gate, .. } if gate.name == SYNDROME)
    })
}
