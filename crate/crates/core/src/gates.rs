//! Gate definitions, the standard library and gate combinators.

use std::collections::HashMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, OnceLock, RwLock};

use crate::circuit::{Circuit, Emitter, Tracer};
use crate::error::{Error, Result};
use crate::ket::{BitValue, QubitId};
use crate::sparse::{SparseMatrix, C64, UNITARY_TOL};

pub type GateRef = Arc<Gate>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GateKind {
    Unitary(SparseMatrix),
    Measure,
    Reset(BitValue),
    Label { text: String, side: Side },
    /// Body traced on local wires `0..arity`.
    Wrapped(Circuit),
}

/// How the renderer draws a gate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Draw {
    Box(String),
    /// `controls` leading wires carry control dots; the rest draw `base`.
    Ctrl { controls: usize, base: Box<Draw> },
    /// The ⊕ of a controlled NOT.
    Targ,
    Meter,
    Label(String),
    /// One box spanning all wires.
    Span(String),
}

impl fmt::Display for Draw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Draw::Box(s) => write!(f, "box {s}"),
            Draw::Ctrl { controls, base } => write!(f, "ctrl{controls} {base}"),
            Draw::Targ => write!(f, "targ"),
            Draw::Meter => write!(f, "meter"),
            Draw::Label(s) => write!(f, "label {s}"),
            Draw::Span(s) => write!(f, "span {s}"),
        }
    }
}

impl Draw {
    pub fn parse(s: &str) -> Option<Draw> {
        let (head, rest) = match s.split_once(' ') {
            Some((h, r)) => (h, r),
            None => (s, ""),
        };
        Some(match head {
            "box" => Draw::Box(rest.to_string()),
            "targ" => Draw::Targ,
            "meter" => Draw::Meter,
            "label" => Draw::Label(rest.to_string()),
            "span" => Draw::Span(rest.to_string()),
            h if h.starts_with("ctrl") => Draw::Ctrl {
                controls: h[4..].parse().ok()?,
                base: Box::new(Draw::parse(rest)?),
            },
            _ => return None,
        })
    }

    fn adjoint(&self) -> Draw {
        match self {
            Draw::Box(s) => Draw::Box(toggle_suffix(s, "†")),
            Draw::Span(s) => Draw::Span(toggle_suffix(s, "†")),
            Draw::Ctrl { controls, base } => Draw::Ctrl {
                controls: *controls,
                base: Box::new(base.adjoint()),
            },
            other => other.clone(),
        }
    }
}

fn toggle_suffix(s: &str, suffix: &str) -> String {
    match s.strip_suffix(suffix) {
        Some(base) => base.to_string(),
        None => format!("{s}{suffix}"),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub name: String,
    pub params: Vec<i64>,
    pub desc: String,
    pub kind: GateKind,
    pub arity: usize,
    pub draw: Draw,
}

impl Gate {
    pub fn matrix(&self) -> Option<&SparseMatrix> {
        match &self.kind {
            GateKind::Unitary(m) => Some(m),
            _ => None,
        }
    }

    pub fn is_unitary(&self) -> bool {
        matches!(self.kind, GateKind::Unitary(_))
    }

    pub fn is_label(&self) -> bool {
        matches!(self.kind, GateKind::Label { .. })
    }

    /// A user-defined unitary gate; the matrix is checked.
    pub fn unitary(name: &str, desc: &str, m: SparseMatrix) -> Result<GateRef> {
        let err = m.unitarity_error();
        if err > UNITARY_TOL {
            return Err(Error::NonUnitaryGate(format!("{name} is off by {err:.3e}")));
        }
        Ok(Arc::new(Gate {
            name: name.to_string(),
            params: Vec::new(),
            desc: desc.to_string(),
            arity: m.qubits(),
            draw: if m.qubits() == 1 {
                Draw::Box(name.to_string())
            } else {
                Draw::Span(name.to_string())
            },
            kind: GateKind::Unitary(m),
        }))
    }

    /// A fused gate produced by the grow pass; named by content hash.
    pub(crate) fn grown(m: SparseMatrix) -> GateRef {
        let name = format!("{:07X}", m.content_hash() & 0x0fff_ffff);
        Arc::new(Gate {
            desc: "grown gate".to_string(),
            params: Vec::new(),
            arity: m.qubits(),
            draw: Draw::Span(name.clone()),
            name,
            kind: GateKind::Unitary(m),
        })
    }
}

type CacheKey = (String, Vec<i64>);

fn cache() -> &'static RwLock<HashMap<CacheKey, GateRef>> {
    static CACHE: OnceLock<RwLock<HashMap<CacheKey, GateRef>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

static HITS: AtomicU64 = AtomicU64::new(0);
static MISSES: AtomicU64 = AtomicU64::new(0);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
    pub entries: usize,
}

pub fn cache_stats() -> CacheStats {
    CacheStats {
        hits: HITS.load(Ordering::Relaxed),
        misses: MISSES.load(Ordering::Relaxed),
        entries: cache().read().expect("gate cache poisoned").len(),
    }
}

fn cached(name: &str, params: &[i64], build: impl FnOnce() -> Result<Gate>) -> Result<GateRef> {
    let key = (name.to_string(), params.to_vec());
    if let Some(g) = cache().read().expect("gate cache poisoned").get(&key) {
        HITS.fetch_add(1, Ordering::Relaxed);
        return Ok(g.clone());
    }
    let g = Arc::new(build()?);
    let mut map = cache().write().expect("gate cache poisoned");
    match map.get(&key) {
        Some(existing) => {
            HITS.fetch_add(1, Ordering::Relaxed);
            Ok(existing.clone())
        }
        None => {
            MISSES.fetch_add(1, Ordering::Relaxed);
            map.insert(key, g.clone());
            Ok(g)
        }
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn unitary_gate(name: &str, desc: &str, m: SparseMatrix, draw: Draw) -> Gate {
    Gate {
        name: name.to_string(),
        params: Vec::new(),
        desc: desc.to_string(),
        arity: m.qubits(),
        kind: GateKind::Unitary(m),
        draw,
    }
}

pub const STANDARD_GATES: [&str; 16] = [
    "I", "X", "Y", "Z", "H", "S", "Sdg", "T", "Tdg", "CNOT", "CZ", "SWAP", "CCNOT", "M", "Reset0",
    "Reset1",
];

pub fn standard_gate(name: &str) -> Result<GateRef> {
    if !STANDARD_GATES.contains(&name) {
        return Err(Error::UnknownGate(name.to_string()));
    }
    cached(name, &[], || {
        let bx = |s: &str| Draw::Box(s.to_string());
        let d = |v: &[C64]| SparseMatrix::diagonal(v.to_vec());
        let one = c(1.0, 0.0);
        let t = C64::from_polar(1.0, PI / 4.0);
        Ok(match name {
            "I" => unitary_gate("I", "Identity", SparseMatrix::identity(2), bx("I")),
            "X" => unitary_gate("X", "Pauli X flip", real(&[&[0.0, 1.0], &[1.0, 0.0]]), bx("X")),
            "Y" => unitary_gate(
                "Y",
                "Pauli Y flip",
                SparseMatrix::from_dense(&[
                    vec![c(0.0, 0.0), c(0.0, -1.0)],
                    vec![c(0.0, 1.0), c(0.0, 0.0)],
                ])?,
                bx("Y"),
            ),
            "Z" => unitary_gate("Z", "Pauli Z flip", d(&[one, c(-1.0, 0.0)]), bx("Z")),
            "H" => {
                let s = FRAC_1_SQRT_2;
                unitary_gate("H", "Hadamard", real(&[&[s, s], &[s, -s]]), bx("H"))
            }
            "S" => unitary_gate("S", "Phase", d(&[one, c(0.0, 1.0)]), bx("S")),
            "Sdg" => unitary_gate("Sdg", "Phase adjoint", d(&[one, c(0.0, -1.0)]), bx("S†")),
            "T" => unitary_gate("T", "pi/8 gate", d(&[one, t]), bx("T")),
            "Tdg" => unitary_gate("Tdg", "pi/8 adjoint", d(&[one, t.conj()]), bx("T†")),
            "CNOT" => unitary_gate(
                "CNOT",
                "Controlled NOT",
                real(&[&[0.0, 1.0], &[1.0, 0.0]]).controlled(),
                Draw::Ctrl { controls: 1, base: Box::new(Draw::Targ) },
            ),
            "CZ" => unitary_gate(
                "CZ",
                "Controlled Z",
                d(&[one, one, one, c(-1.0, 0.0)]),
                Draw::Ctrl { controls: 1, base: Box::new(bx("Z")) },
            ),
            "SWAP" => unitary_gate(
                "SWAP",
                "Swap",
                real(&[
                    &[1.0, 0.0, 0.0, 0.0],
                    &[0.0, 0.0, 1.0, 0.0],
                    &[0.0, 1.0, 0.0, 0.0],
                    &[0.0, 0.0, 0.0, 1.0],
                ]),
                Draw::Span("SWAP".into()),
            ),
            "CCNOT" => unitary_gate(
                "CCNOT",
                "Toffoli",
                real(&[&[0.0, 1.0], &[1.0, 0.0]]).controlled().controlled(),
                Draw::Ctrl { controls: 2, base: Box::new(Draw::Targ) },
            ),
            "M" => Gate {
                name: "M".into(),
                params: Vec::new(),
                desc: "Collapse State".into(),
                kind: GateKind::Measure,
                arity: 1,
                draw: Draw::Meter,
            },
            "Reset0" | "Reset1" => {
                let (v, s) = if name == "Reset0" {
                    (BitValue::Zero, "Zero")
                } else {
                    (BitValue::One, "One")
                };
                Gate {
                    name: name.into(),
                    params: Vec::new(),
                    desc: format!("Reset to {s}"),
                    kind: GateKind::Reset(v),
                    arity: 1,
                    draw: Draw::Box(format!("|{}⟩", if v == BitValue::Zero { 0 } else { 1 })),
                }
            }
            _ => unreachable!(),
        })
    })
}

fn real(rows: &[&[f64]]) -> SparseMatrix {
    SparseMatrix::from_real(rows).expect("valid library matrix")
}

macro_rules! shortcut {
    ($($f:ident => $n:literal),* $(,)?) => {
        $(
            pub fn $f() -> GateRef {
                standard_gate($n).expect("library gate")
            }
        )*
    };
}

shortcut! {
    i => "I", x => "X", y => "Y", z => "Z", h => "H", s => "S", sdg => "Sdg",
    t => "T", tdg => "Tdg", cnot => "CNOT", cz => "CZ", swap => "SWAP",
    ccnot => "CCNOT", measure => "M", reset0 => "Reset0", reset1 => "Reset1",
}

/// `e^{2πi·num/2^k}`, exact at quarter turns.
fn turn(num: u64, k: u32) -> C64 {
    let den = 1u128 << k;
    let num = num as u128 % den;
    if (num * 4).is_multiple_of(den) {
        return match num * 4 / den {
            0 => c(1.0, 0.0),
            1 => c(0.0, 1.0),
            2 => c(-1.0, 0.0),
            _ => c(0.0, -1.0),
        };
    }
    let frac = num as f64 / den as f64;
    C64::from_polar(1.0, 2.0 * PI * frac)
}

/// `R(k) = diag(1, e^{2πi/2^k})`.
pub fn rotation(k: u32) -> Result<GateRef> {
    if !(1..=63).contains(&k) {
        return Err(Error::InvalidArgument(format!("rotation index {k} outside 1..=63")));
    }
    let name = format!("R{k}");
    cached(&name, &[k as i64], || {
        let mut g = unitary_gate(
            &name,
            "Phase rotation",
            SparseMatrix::diagonal(vec![c(1.0, 0.0), turn(1, k)]),
            Draw::Box(name.clone()),
        );
        g.params = vec![k as i64];
        Ok(g)
    })
}

pub fn rotation_adj(k: u32) -> Result<GateRef> {
    adjoint(&rotation(k)?)
}

/// `diag(1, e^{2πi·num/2^k})`, reduced to lowest terms; `R(k)` when the
/// reduced numerator is 1. A zero angle gives the identity.
pub fn phase(num: u64, k: u32) -> Result<GateRef> {
    if k > 63 {
        return Err(Error::InvalidArgument(format!("phase denominator 2^{k} too large")));
    }
    let mut num = num % (1u64 << k);
    let mut k = k;
    if num == 0 {
        return Ok(i());
    }
    while num.is_multiple_of(2) {
        num /= 2;
        k -= 1;
    }
    if num == 1 {
        return rotation(k);
    }
    let name = format!("Ph{num}/{}", 1u64 << k);
    cached(&name, &[num as i64, k as i64], || {
        let mut g = unitary_gate(
            &name,
            "Phase rotation",
            SparseMatrix::diagonal(vec![c(1.0, 0.0), turn(num, k)]),
            Draw::Box(name.clone()),
        );
        g.params = vec![num as i64, k as i64];
        Ok(g)
    })
}

pub fn adjoint(g: &GateRef) -> Result<GateRef> {
    let m = g
        .matrix()
        .ok_or_else(|| Error::NonUnitaryGate(format!("adjoint of {}", g.name)))?;
    if m.is_hermitian() {
        return Ok(g.clone());
    }
    let name = toggle_suffix(&g.name, "'");
    let build = || {
        Ok(Gate {
            name: name.clone(),
            params: g.params.clone(),
            desc: match g.desc.strip_prefix("Adjoint of ") {
                Some(d) => d.to_string(),
                None => format!("Adjoint of {}", g.desc),
            },
            kind: GateKind::Unitary(m.adjoint()),
            arity: g.arity,
            draw: g.draw.adjoint(),
        })
    };
    if is_cacheable(g) {
        cached(&name, &g.params, build)
    } else {
        Ok(Arc::new(build()?))
    }
}

/// Controlled version; the control is the new first wire.
pub fn control(g: &GateRef) -> Result<GateRef> {
    let m = g
        .matrix()
        .ok_or_else(|| Error::NonUnitaryGate(format!("control of {}", g.name)))?;
    match g.name.as_str() {
        "X" => return Ok(cnot()),
        "CNOT" => return Ok(ccnot()),
        "Z" => return Ok(cz()),
        _ => {}
    }
    let name = format!("C{}", g.name);
    let build = || {
        Ok(Gate {
            name: name.clone(),
            params: g.params.clone(),
            desc: format!("Controlled {}", g.desc),
            kind: GateKind::Unitary(m.controlled()),
            arity: g.arity + 1,
            draw: match &g.draw {
                Draw::Ctrl { controls, base } => Draw::Ctrl {
                    controls: controls + 1,
                    base: base.clone(),
                },
                Draw::Box(s) if s == "X" => Draw::Ctrl { controls: 1, base: Box::new(Draw::Targ) },
                other => Draw::Ctrl { controls: 1, base: Box::new(other.clone()) },
            },
        })
    };
    if is_cacheable(g) {
        cached(&name, &g.params, build)
    } else {
        Ok(Arc::new(build()?))
    }
}

/// Only gates that came out of the cache have names that identify them.
fn is_cacheable(g: &GateRef) -> bool {
    cache()
        .read()
        .expect("gate cache poisoned")
        .get(&(g.name.clone(), g.params.clone()))
        .is_some_and(|c| Arc::ptr_eq(c, g))
}

/// Label gate; a no-op for simulation.
pub fn label(text: &str, side: Side) -> GateRef {
    Arc::new(Gate {
        name: match side {
            Side::Left => "LabelL".into(),
            Side::Right => "LabelR".into(),
        },
        params: Vec::new(),
        desc: format!("Label {text}"),
        kind: GateKind::Label { text: text.to_string(), side },
        arity: 1,
        draw: Draw::Label(text.to_string()),
    })
}

/// Reusable sub-circuit. `body` is traced on wires `0..arity` and may not
/// touch any other wire.
pub fn wrap<F>(name: &str, arity: usize, body: F) -> Result<GateRef>
where
    F: Fn(&mut dyn Emitter, &[QubitId]) -> Result<()>,
{
    let wires: Vec<QubitId> = (0..arity).collect();
    let mut tracer = Tracer::new(Some(&wires));
    body(&mut tracer, &wires).map_err(|e| match e {
        Error::InvalidWire(w) => {
            Error::InvalidWrap(format!("{name} touches wire {w} outside its {arity} wires"))
        }
        other => other,
    })?;
    Ok(wrapped_gate(name, arity, tracer.finish()))
}

pub(crate) fn wrapped_gate(name: &str, arity: usize, template: Circuit) -> GateRef {
    Arc::new(Gate {
        name: name.to_string(),
        params: Vec::new(),
        desc: "Wrapped".to_string(),
        kind: GateKind::Wrapped(template),
        arity,
        draw: Draw::Span(name.to_string()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn library_matrices_are_unitary() {
        for name in STANDARD_GATES {
            let g = standard_gate(name).unwrap();
            if let Some(m) = g.matrix() {
                assert!(m.is_unitary(1e-12), "{name}");
                assert_eq!(m.dim(), 1 << g.arity);
            }
        }
        assert!(matches!(standard_gate("Q"), Err(Error::UnknownGate(_))));
    }

    #[test]
    fn cnot_rows_match_textbook() {
        let m = cnot().matrix().unwrap().to_dense();
        let want = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0], [0.0, 0.0, 1.0, 0.0]];
        for r in 0..4 {
            for col in 0..4 {
                assert_eq!(m[r][col], c(want[r][col], 0.0));
            }
        }
    }

    #[test]
    fn z_negates_one() {
        let m = z().matrix().unwrap().clone();
        assert_eq!(m.get(1, 1), c(-1.0, 0.0));
        assert_eq!(m.get(0, 0), c(1.0, 0.0));
    }

    #[test]
    fn rotations_match_known_gates() {
        let r1 = rotation(1).unwrap();
        assert!(close(r1.matrix().unwrap().get(1, 1), c(-1.0, 0.0)));
        let r2 = rotation(2).unwrap();
        assert!(close(r2.matrix().unwrap().get(1, 1), c(0.0, 1.0)));
        let r3 = rotation(3).unwrap();
        let s = FRAC_1_SQRT_2;
        assert!(close(r3.matrix().unwrap().get(1, 1), c(s, s)));
        assert_eq!(r3.name, "R3");
        assert!(rotation(0).is_err());
        assert!(rotation(64).is_err());
    }

    #[test]
    fn rotation_power_returns_identity() {
        for k in [1u32, 5, 12, 20] {
            let d = rotation(k).unwrap().matrix().unwrap().get(1, 1);
            let mut acc = c(1.0, 0.0);
            for _ in 0..(1u64 << k) {
                acc *= d;
            }
            assert!((acc - 1.0).norm() < 1e-9, "k={k}");
        }
    }

    #[test]
    fn adjoint_behaviour() {
        assert!(Arc::ptr_eq(&adjoint(&h()).unwrap(), &h()));
        let r3 = rotation(3).unwrap();
        let a = adjoint(&r3).unwrap();
        assert_eq!(a.name, "R3'");
        let p = a.matrix().unwrap().matmul(r3.matrix().unwrap()).unwrap();
        assert!((p.get(1, 1) - 1.0).norm() < 1e-12);
        assert_eq!(*adjoint(&a).unwrap(), *r3);
        assert!(matches!(adjoint(&measure()), Err(Error::NonUnitaryGate(_))));
    }

    #[test]
    fn control_builds_cnot_and_toffoli() {
        assert_eq!(control(&x()).unwrap().matrix(), cnot().matrix());
        let tof = control(&control(&x()).unwrap()).unwrap();
        let m = tof.matrix().unwrap();
        assert_eq!(m.get(7, 6), c(1.0, 0.0));
        let ci = control(&i()).unwrap();
        assert_eq!(ci.matrix().unwrap(), &SparseMatrix::identity(4));
        let cr = control(&rotation_adj(2).unwrap()).unwrap();
        assert_eq!(cr.name, "CR2'");
        let m = cr.matrix().unwrap();
        for r in 0..2 {
            assert_eq!(m.get(r, r), c(1.0, 0.0));
        }
        assert_eq!(m.get(3, 3), c(0.0, -1.0));
        assert!(control(&measure()).is_err());
    }

    #[test]
    fn phase_reduces_to_rotation() {
        assert!(Arc::ptr_eq(&phase(2, 3).unwrap(), &rotation(2).unwrap()));
        assert_eq!(phase(3, 3).unwrap().name, "Ph3/8");
        assert_eq!(phase(8, 3).unwrap().name, "I");
    }

    #[test]
    fn cache_counts_hits() {
        let before = cache_stats();
        let a = rotation(17).unwrap();
        let b = rotation(17).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        let after = cache_stats();
        assert!(after.hits > before.hits);
    }

    #[test]
    fn draw_round_trips_through_text() {
        let ds = [
            Draw::Box("H".into()),
            Draw::Ctrl { controls: 2, base: Box::new(Draw::Targ) },
            Draw::Ctrl { controls: 1, base: Box::new(Draw::Box("R2†".into())) },
            Draw::Meter,
            Draw::Label("Src".into()),
            Draw::Span("EPR".into()),
        ];
        for d in ds {
            assert_eq!(Draw::parse(&d.to_string()), Some(d));
        }
    }
}
