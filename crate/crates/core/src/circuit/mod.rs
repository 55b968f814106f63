//! Circuit tree, the tracing compiler and structural passes.

mod fold;
mod grow;
mod text;

use std::collections::{BTreeMap, BTreeSet};

pub use grow::{GrowLog, GrowParams, GrowStep, DEFAULT_MAX_ENTRIES};
pub use text::{export_circuit, import_circuit, parse_circuit};

use crate::error::{Error, Result};
use crate::gates::{self, GateKind, GateRef, Side};
use crate::ket::{BitValue, Ket, QubitId};

/// One gate applied to wires; only the first `gate.arity` wires are kept.
#[derive(Clone, Debug, PartialEq)]
pub struct Op {
    pub gate: GateRef,
    pub wires: Vec<QubitId>,
}

/// Classical condition of a `BitCon` node, evaluated on measured bits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cond {
    /// Every control bit is One (the usual binary control).
    One,
    /// Control bits read as a binary number, first wire most significant.
    Equals(u64),
    /// Seven bits of a Steane block decode to logical One.
    Steane7,
}

impl Cond {
    pub fn eval(&self, ctrls: &[QubitId], bits: &[BitValue]) -> Result<bool> {
        let mut vals = Vec::with_capacity(ctrls.len());
        for &c in ctrls {
            match bits.get(c) {
                None => return Err(Error::InvalidWire(c)),
                Some(BitValue::Unknown) => return Err(Error::UnmeasuredControl(c)),
                Some(&b) => vals.push(b == BitValue::One),
            }
        }
        Ok(match self {
            Cond::One => vals.iter().all(|&b| b),
            Cond::Equals(v) => vals.iter().fold(0u64, |acc, &b| acc << 1 | u64::from(b)) == *v,
            Cond::Steane7 => {
                let bits: Vec<BitValue> = vals.iter().map(|&b| BitValue::from_bool(b)).collect();
                crate::qecc::decode(&bits)?.0 == BitValue::One
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Circuit {
    Seq(Vec<Circuit>),
    Par(Vec<Circuit>),
    Apply(Op),
    BitCon {
        cond: Cond,
        ctrls: Vec<QubitId>,
        body: Box<Circuit>,
    },
    /// A wrapped gate applied to `wires`; `body` is its expansion on those wires.
    Wrap {
        gate: GateRef,
        wires: Vec<QubitId>,
        body: Box<Circuit>,
    },
}

impl Default for Circuit {
    fn default() -> Self {
        Circuit::Seq(Vec::new())
    }
}

/// Gate-name histogram plus size measures.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ResourceCount {
    pub counts: BTreeMap<String, usize>,
    pub total: usize,
    pub depth: usize,
    pub wire_count: usize,
}

impl Circuit {
    pub fn apply(gate: GateRef, wires: &[QubitId]) -> Circuit {
        let k = gate.arity.min(wires.len());
        let wires = wires[..k].to_vec();
        match &gate.kind {
            GateKind::Wrapped(t) => Circuit::Wrap {
                body: Box::new(t.remap(&|q| wires[q])),
                gate,
                wires,
            },
            _ => Circuit::Apply(Op { wires, gate }),
        }
    }

    /// Wires referenced anywhere, ascending.
    pub fn wires(&self) -> Vec<QubitId> {
        let mut s = BTreeSet::new();
        self.visit_wires(&mut |w| {
            s.insert(w);
        });
        s.into_iter().collect()
    }

    fn visit_wires(&self, f: &mut dyn FnMut(QubitId)) {
        match self {
            Circuit::Seq(cs) | Circuit::Par(cs) => cs.iter().for_each(|c| c.visit_wires(f)),
            Circuit::Apply(op) => op.wires.iter().for_each(|&w| f(w)),
            Circuit::BitCon { ctrls, body, .. } => {
                ctrls.iter().for_each(|&w| f(w));
                body.visit_wires(f);
            }
            Circuit::Wrap { wires, body, .. } => {
                wires.iter().for_each(|&w| f(w));
                body.visit_wires(f);
            }
        }
    }

    /// Wires of a leaf node in order of appearance, without repeats.
    pub(crate) fn leaf_wires(&self) -> Vec<QubitId> {
        let mut out: Vec<QubitId> = Vec::new();
        self.visit_wires(&mut |w| {
            if !out.contains(&w) {
                out.push(w);
            }
        });
        out
    }

    /// Apply, BitCon and Wrap nodes in execution order (Seq and Par opened).
    pub fn leaves(&self) -> Vec<&Circuit> {
        let mut out = Vec::new();
        fn go<'a>(c: &'a Circuit, out: &mut Vec<&'a Circuit>) {
            match c {
                Circuit::Seq(cs) | Circuit::Par(cs) => cs.iter().for_each(|c| go(c, out)),
                leaf => out.push(leaf),
            }
        }
        go(self, &mut out);
        out
    }

    pub fn remap(&self, f: &dyn Fn(QubitId) -> QubitId) -> Circuit {
        match self {
            Circuit::Seq(cs) => Circuit::Seq(cs.iter().map(|c| c.remap(f)).collect()),
            Circuit::Par(cs) => Circuit::Par(cs.iter().map(|c| c.remap(f)).collect()),
            Circuit::Apply(op) => Circuit::Apply(Op {
                gate: op.gate.clone(),
                wires: op.wires.iter().map(|&w| f(w)).collect(),
            }),
            Circuit::BitCon { cond, ctrls, body } => Circuit::BitCon {
                cond: cond.clone(),
                ctrls: ctrls.iter().map(|&w| f(w)).collect(),
                body: Box::new(body.remap(f)),
            },
            Circuit::Wrap { gate, wires, body } => Circuit::Wrap {
                gate: gate.clone(),
                wires: wires.iter().map(|&w| f(w)).collect(),
                body: Box::new(body.remap(f)),
            },
        }
    }

    pub fn run(&self, em: &mut dyn Emitter) -> Result<()> {
        replay(self, em)
    }

    /// Expand every Wrap node into its body.
    pub fn flatten(&self) -> Circuit {
        match self {
            Circuit::Seq(cs) => Circuit::Seq(cs.iter().map(Circuit::flatten).collect()),
            Circuit::Par(cs) => Circuit::Par(cs.iter().map(Circuit::flatten).collect()),
            Circuit::Apply(op) => match &op.gate.kind {
                GateKind::Wrapped(t) => t.remap(&|q| op.wires[q]).flatten(),
                _ => self.clone(),
            },
            Circuit::BitCon { cond, ctrls, body } => Circuit::BitCon {
                cond: cond.clone(),
                ctrls: ctrls.clone(),
                body: Box::new(body.flatten()),
            },
            Circuit::Wrap { body, .. } => body.flatten(),
        }
    }

    /// Adjoint circuit: Seq children reversed and every gate adjointed.
    pub fn reverse(&self) -> Result<Circuit> {
        Ok(match self {
            Circuit::Seq(cs) => {
                Circuit::Seq(cs.iter().rev().map(Circuit::reverse).collect::<Result<_>>()?)
            }
            Circuit::Par(cs) => Circuit::Par(cs.iter().map(Circuit::reverse).collect::<Result<_>>()?),
            Circuit::Apply(op) => match &op.gate.kind {
                GateKind::Unitary(_) => Circuit::Apply(Op {
                    gate: gates::adjoint(&op.gate)?,
                    wires: op.wires.clone(),
                }),
                GateKind::Label { .. } => self.clone(),
                GateKind::Wrapped(t) => {
                    let gate = reverse_wrapped(&op.gate, t)?;
                    Circuit::Apply(Op { gate, wires: op.wires.clone() })
                }
                _ => {
                    return Err(Error::NotReversible(format!(
                        "{} is not unitary",
                        op.gate.name
                    )))
                }
            },
            Circuit::BitCon { .. } => {
                return Err(Error::NotReversible("classically controlled gate".into()))
            }
            Circuit::Wrap { gate, wires, body } => {
                let GateKind::Wrapped(t) = &gate.kind else {
                    return Err(Error::InvalidWrap(format!("{} has no body", gate.name)));
                };
                Circuit::Wrap {
                    gate: reverse_wrapped(gate, t)?,
                    wires: wires.clone(),
                    body: Box::new(body.reverse()?),
                }
            }
        })
    }

    /// Left-pack leaves into parallel columns.
    pub fn fold(&self) -> Circuit {
        fold::fold(self)
    }

    /// Number of columns after folding.
    pub fn depth(&self) -> usize {
        match self.fold() {
            Circuit::Seq(cols) => cols.len(),
            _ => unreachable!("fold returns a Seq"),
        }
    }

    pub fn grow_gates(&self, p: &GrowParams) -> (Circuit, GrowLog) {
        grow::grow_gates(self, p)
    }

    pub fn gate_count(&self) -> ResourceCount {
        let flat = self.flatten();
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        let mut physical = Vec::new();
        for leaf in flat.leaves() {
            match leaf {
                Circuit::Apply(op) if op.gate.is_label() => continue,
                Circuit::Apply(op) => *counts.entry(op.gate.name.clone()).or_default() += 1,
                Circuit::BitCon { body, .. } => {
                    for inner in body.leaves() {
                        if let Circuit::Apply(op) = inner {
                            if !op.gate.is_label() {
                                *counts.entry(format!("BC-{}", op.gate.name)).or_default() += 1;
                            }
                        }
                    }
                }
                Circuit::Seq(_) | Circuit::Par(_) | Circuit::Wrap { .. } => unreachable!(),
            }
            physical.push(leaf.clone());
        }
        ResourceCount {
            total: counts.values().sum(),
            counts,
            depth: Circuit::Seq(physical).depth(),
            wire_count: self.wires().len(),
        }
    }

    /// Indented text form.
    pub fn dump(&self) -> String {
        text::dump(self)
    }

    /// Versioned lossless text form.
    pub fn export(&self) -> String {
        text::export(self)
    }
}

fn reverse_wrapped(gate: &GateRef, template: &Circuit) -> Result<GateRef> {
    let name = match gate.name.strip_suffix('\'') {
        Some(n) => n.to_string(),
        None => format!("{}'", gate.name),
    };
    Ok(gates::wrapped_gate(&name, gate.arity, template.reverse()?))
}

/// Anything that consumes gate applications: a simulator or a tracer.
pub trait Emitter {
    fn apply(&mut self, gate: &GateRef, wires: &[QubitId]) -> Result<()>;

    /// Run `body` when `cond` holds on the measured bits of `ctrls`.
    fn bit_control(&mut self, cond: &Cond, ctrls: &[QubitId], body: &Circuit) -> Result<()>;

    /// A wrapped gate; `body` is its expansion on `wires`.
    fn wrap(&mut self, gate: &GateRef, wires: &[QubitId], body: &Circuit) -> Result<()> {
        let _ = (gate, wires);
        replay(body, self)
    }
}

pub fn replay<E: Emitter + ?Sized>(c: &Circuit, em: &mut E) -> Result<()> {
    match c {
        Circuit::Seq(cs) | Circuit::Par(cs) => {
            for child in cs {
                replay(child, em)?;
            }
            Ok(())
        }
        Circuit::Apply(op) => em.apply(&op.gate, &op.wires),
        Circuit::BitCon { cond, ctrls, body } => em.bit_control(cond, ctrls, body),
        Circuit::Wrap { gate, wires, body } => em.wrap(gate, wires, body),
    }
}

fn arity_wires<'a>(gate: &GateRef, wires: &'a [QubitId]) -> Result<&'a [QubitId]> {
    if wires.len() < gate.arity {
        return Err(Error::InvalidArgument(format!(
            "{} needs {} wires, got {}",
            gate.name,
            gate.arity,
            wires.len()
        )));
    }
    Ok(&wires[..gate.arity])
}

/// Records gate applications instead of simulating them.
#[derive(Debug, Default)]
pub struct Tracer {
    universe: Option<BTreeSet<QubitId>>,
    ops: Vec<Circuit>,
}

impl Tracer {
    /// With a universe, any other wire is rejected.
    pub fn new(universe: Option<&[QubitId]>) -> Tracer {
        Tracer {
            universe: universe.map(|u| u.iter().copied().collect()),
            ops: Vec::new(),
        }
    }

    fn check(&self, wires: &[QubitId]) -> Result<()> {
        if let Some(u) = &self.universe {
            if let Some(&w) = wires.iter().find(|w| !u.contains(w)) {
                return Err(Error::InvalidWire(w));
            }
        }
        for (i, w) in wires.iter().enumerate() {
            if wires[..i].contains(w) {
                return Err(Error::InvalidArgument(format!("wire {w} repeated")));
            }
        }
        Ok(())
    }

    pub fn finish(self) -> Circuit {
        Circuit::Seq(self.ops)
    }
}

impl Emitter for Tracer {
    fn apply(&mut self, gate: &GateRef, wires: &[QubitId]) -> Result<()> {
        let w = arity_wires(gate, wires)?;
        self.check(w)?;
        match &gate.kind {
            GateKind::Wrapped(t) => {
                let body = t.remap(&|q| w[q]);
                self.ops.push(Circuit::Wrap {
                    gate: gate.clone(),
                    wires: w.to_vec(),
                    body: Box::new(body),
                });
            }
            _ => self.ops.push(Circuit::Apply(Op { gate: gate.clone(), wires: w.to_vec() })),
        }
        Ok(())
    }

    fn bit_control(&mut self, cond: &Cond, ctrls: &[QubitId], body: &Circuit) -> Result<()> {
        self.check(ctrls)?;
        self.check(&body.wires())?;
        if let Some(&w) = body.wires().iter().find(|w| ctrls.contains(w)) {
            return Err(Error::InvalidArgument(format!(
                "wire {w} is both control and target"
            )));
        }
        self.ops.push(Circuit::BitCon {
            cond: cond.clone(),
            ctrls: ctrls.to_vec(),
            body: Box::new(body.clone()),
        });
        Ok(())
    }

    fn wrap(&mut self, gate: &GateRef, wires: &[QubitId], body: &Circuit) -> Result<()> {
        self.check(wires)?;
        self.ops.push(Circuit::Wrap {
            gate: gate.clone(),
            wires: wires.to_vec(),
            body: Box::new(body.clone()),
        });
        Ok(())
    }
}

/// Trace `program` on `wires` into a circuit.
pub fn compile<F>(program: F, wires: &[QubitId]) -> Result<Circuit>
where
    F: FnOnce(&mut dyn Emitter, &[QubitId]) -> Result<()>,
{
    let mut t = Tracer::new(Some(wires));
    program(&mut t, wires)?;
    Ok(t.finish())
}

impl Emitter for Ket {
    fn apply(&mut self, gate: &GateRef, wires: &[QubitId]) -> Result<()> {
        let w = arity_wires(gate, wires)?;
        match &gate.kind {
            GateKind::Unitary(m) => self.apply_trusted(m, w),
            GateKind::Measure => self.measure(w[0]).map(|_| ()),
            GateKind::Reset(v) => self.reset(w[0], *v),
            GateKind::Label { .. } => self.bit(w[0]).map(|_| ()),
            GateKind::Wrapped(t) => {
                let body = t.remap(&|q| w[q]);
                self.wrap(gate, w, &body)
            }
        }
    }

    fn bit_control(&mut self, cond: &Cond, ctrls: &[QubitId], body: &Circuit) -> Result<()> {
        if cond.eval(ctrls, self.bits())? {
            replay(body, self)?;
        }
        Ok(())
    }
}

/// Apply a single-wire gate to each wire of `qs`.
pub fn block(em: &mut dyn Emitter, gate: &GateRef, qs: &[QubitId]) -> Result<()> {
    if gate.arity != 1 {
        return Err(Error::InvalidArgument(format!(
            "block application needs a one-wire gate, {} has {}",
            gate.name, gate.arity
        )));
    }
    for &q in qs {
        em.apply(gate, &[q])?;
    }
    Ok(())
}

/// Apply `gate` to `targets` when `ctrl` was measured One.
pub fn bc(em: &mut dyn Emitter, gate: &GateRef, ctrl: QubitId, targets: &[QubitId]) -> Result<()> {
    let w = arity_wires(gate, targets)?;
    em.bit_control(&Cond::One, &[ctrl], &Circuit::apply(gate.clone(), w))
}

/// Put one label on each wire.
pub fn labels(em: &mut dyn Emitter, texts: &[&str], qs: &[QubitId], side: Side) -> Result<()> {
    for (t, &q) in texts.iter().zip(qs) {
        em.apply(&gates::label(t, side), &[q])?;
    }
    Ok(())
}
