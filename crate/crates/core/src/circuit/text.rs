//! Indented dump format and the versioned export format built on it.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use super::{Circuit, Cond, Op};
use crate::error::{Error, Result};
use crate::gates::{self, Draw, Gate, GateKind, Side};
use crate::ket::{BitValue, QubitId};
use crate::sparse::{SparseMatrix, C64};

const HEADER: &str = "QCIRC v1";
const TRAILER: &str = "END";

/// Matrices up to this dimension are dumped as dense rows.
const DENSE_DUMP_DIM: usize = 64;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Dump,
    Export,
}

pub(super) fn dump(c: &Circuit) -> String {
    let mut out = String::new();
    node(c, 0, Mode::Dump, &mut out);
    out
}

pub(super) fn export(c: &Circuit) -> String {
    let mut out = format!("{HEADER}\n");
    node(c, 0, Mode::Export, &mut out);
    out.push_str(TRAILER);
    out.push('\n');
    out
}

/// Write the export form of `c` to `path`.
pub fn export_circuit(c: &Circuit, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, c.export())?;
    Ok(())
}

/// Read a circuit written by `export_circuit` (or a dump) from `path`.
pub fn import_circuit(path: impl AsRef<Path>) -> Result<Circuit> {
    parse_circuit(&std::fs::read_to_string(path)?)
}

fn line(out: &mut String, indent: usize, text: &str) {
    let _ = writeln!(out, "{:indent$}{text}", "");
}

fn node(c: &Circuit, ind: usize, mode: Mode, out: &mut String) {
    match c {
        Circuit::Seq(cs) | Circuit::Par(cs) => {
            line(out, ind, if matches!(c, Circuit::Seq(_)) { "SEQ" } else { "PAR" });
            for child in cs {
                node(child, ind + 2, mode, out);
            }
        }
        Circuit::Apply(op) => {
            if let GateKind::Wrapped(t) = &op.gate.kind {
                let body = t.remap(&|q| op.wires[q]);
                return wrap_node(&op.gate, &op.wires, &body, ind, mode, out);
            }
            line(out, ind, "APPLY");
            gate(&op.gate, ind + 2, mode, out);
            wires(&op.wires, ind + 2, out);
        }
        Circuit::BitCon { cond, ctrls, body } => {
            line(out, ind, "BitCon");
            let suffix = match cond {
                Cond::One => String::new(),
                Cond::Equals(v) => format!(" Equals {v}"),
                Cond::Steane7 => " Steane7".to_string(),
            };
            line(out, ind + 2, &format!("GATE BitControl{suffix}"));
            wires(ctrls, ind + 2, out);
            wires(&body.wires(), ind + 2, out);
            node(body, ind + 4, mode, out);
        }
        Circuit::Wrap { gate, wires, body } => wrap_node(gate, wires, body, ind, mode, out),
    }
}

fn wrap_node(g: &Gate, ws: &[QubitId], body: &Circuit, ind: usize, mode: Mode, out: &mut String) {
    line(out, ind, "WRAP");
    gate(g, ind + 2, mode, out);
    wires(ws, ind + 2, out);
    node(body, ind + 4, mode, out);
}

fn wires(ws: &[QubitId], ind: usize, out: &mut String) {
    for w in ws {
        line(out, ind, &format!("WIRE(Id:{w})"));
    }
}

fn gate(g: &Gate, ind: usize, mode: Mode, out: &mut String) {
    line(out, ind, &format!("GATE {} is a {}", g.name, g.desc));
    let ind = ind + 2;
    match mode {
        Mode::Dump => match &g.kind {
            GateKind::Unitary(m) => dump_matrix(m, ind, out),
            GateKind::Measure | GateKind::Reset(_) => {
                dump_matrix(&SparseMatrix::identity(2), ind, out)
            }
            GateKind::Label { .. } | GateKind::Wrapped(_) => {}
        },
        Mode::Export => {
            let kind = match &g.kind {
                GateKind::Unitary(_) => "unitary".to_string(),
                GateKind::Measure => "measure".to_string(),
                GateKind::Reset(v) => format!("reset {}", u8::from(*v == BitValue::One)),
                GateKind::Label { text, side } => {
                    format!("label {} {text}", if *side == Side::Left { "L" } else { "R" })
                }
                GateKind::Wrapped(_) => format!("wrapped {}", g.arity),
            };
            line(out, ind, &format!("KIND {kind}"));
            if !g.params.is_empty() {
                let ps: Vec<String> = g.params.iter().map(i64::to_string).collect();
                line(out, ind, &format!("PARAMS {}", ps.join(" ")));
            }
            line(out, ind, &format!("DRAW {}", g.draw));
            if let GateKind::Unitary(m) = &g.kind {
                line(out, ind, &format!("MATRIX {} {}", m.dim(), m.nnz()));
                for (r, c, v) in m.iter() {
                    line(
                        out,
                        ind,
                        &format!("{r} {c} {:016x} {:016x}", v.re.to_bits(), v.im.to_bits()),
                    );
                }
            }
        }
    }
}

fn dump_matrix(m: &SparseMatrix, ind: usize, out: &mut String) {
    if m.dim() <= DENSE_DUMP_DIM {
        for row in m.to_dense() {
            let cells: Vec<String> = row.iter().map(|&v| fmt_complex(v)).collect();
            line(out, ind, &cells.join(" "));
        }
    } else {
        line(out, ind, &format!("SPARSE {} {}", m.dim(), m.nnz()));
        for (r, c, v) in m.iter() {
            line(out, ind, &format!("{r} {c} {}", fmt_complex(v)));
        }
    }
}

/// Four significant digits; integers print bare.
fn fmt_real(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let r: f64 = format!("{x:.3e}").parse().expect("formatted float");
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

fn fmt_complex(v: C64) -> String {
    let re = fmt_real(v.re);
    let im = fmt_real(v.im);
    match (re.as_str(), im.as_str()) {
        (_, "0") => re,
        ("0", _) => format!("{im}i"),
        _ if im.starts_with('-') => format!("{re}{im}i"),
        _ => format!("{re}+{im}i"),
    }
}

fn parse_complex(tok: &str) -> Option<C64> {
    let Some(body) = tok.strip_suffix('i') else {
        return Some(C64::new(tok.parse().ok()?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    Some(match split {
        Some(i) => C64::new(body[..i].parse().ok()?, body[i..].trim_start_matches('+').parse().ok()?),
        None => C64::new(0.0, body.parse().ok()?),
    })
}

struct Line<'a> {
    no: usize,
    indent: usize,
    text: &'a str,
}

struct Parser<'a> {
    lines: Vec<Line<'a>>,
    pos: usize,
    last_line: usize,
}

fn err(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        col,
        msg: msg.into(),
    }
}

/// Parse the export format, or a dump (with matrices at display precision).
pub fn parse_circuit(src: &str) -> Result<Circuit> {
    let mut lines: Vec<Line<'_>> = src
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let text = l.trim_start_matches(' ');
            Line {
                no: i + 1,
                indent: l.len() - text.len(),
                text: text.trim_end_matches('\r'),
            }
        })
        .collect();
    let last_line = src.lines().count().max(1);
    let export = lines.first().is_some_and(|l| l.text == HEADER && l.indent == 0);
    if export {
        lines.remove(0);
        match lines.last() {
            Some(l) if l.text == TRAILER && l.indent == 0 => {
                lines.pop();
            }
            _ => return Err(err(last_line, 1, "missing END trailer (truncated file?)")),
        }
    }
    let mut p = Parser {
        lines,
        pos: 0,
        last_line,
    };
    let c = p.node(0)?;
    if let Some(l) = p.lines.get(p.pos) {
        return Err(err(l.no, l.indent + 1, format!("unexpected line {:?}", l.text)));
    }
    Ok(c)
}

fn is_node_header(t: &str) -> bool {
    matches!(t, "SEQ" | "PAR" | "APPLY" | "BitCon" | "WRAP")
}

struct GateText {
    no: usize,
    name: String,
    desc: String,
    kind: Option<String>,
    params: Vec<i64>,
    draw: Option<Draw>,
    matrix: Option<SparseMatrix>,
}

impl<'a> Parser<'a> {
    fn peek(&self, indent: usize) -> Option<&Line<'a>> {
        self.lines.get(self.pos).filter(|l| l.indent == indent)
    }

    fn next(&mut self, indent: usize, what: &str) -> Result<&Line<'a>> {
        match self.lines.get(self.pos) {
            Some(l) if l.indent == indent => {
                self.pos += 1;
                Ok(&self.lines[self.pos - 1])
            }
            Some(l) => Err(err(l.no, l.indent + 1, format!("expected {what} at indent {indent}"))),
            None => Err(err(self.last_line, 1, format!("unexpected end of input, expected {what}"))),
        }
    }

    fn node(&mut self, ind: usize) -> Result<Circuit> {
        let l = self.next(ind, "a circuit node")?;
        let (no, col, text) = (l.no, l.indent + 1, l.text);
        match text {
            "SEQ" | "PAR" => {
                let mut cs = Vec::new();
                while self.peek(ind + 2).is_some_and(|l| is_node_header(l.text)) {
                    cs.push(self.node(ind + 2)?);
                }
                Ok(if text == "SEQ" { Circuit::Seq(cs) } else { Circuit::Par(cs) })
            }
            "APPLY" => {
                let g = self.gate(ind + 2)?;
                let ws = self.wires(ind + 2)?;
                let gate = build_gate(g, None)?;
                if ws.len() != gate.arity {
                    return Err(err(no, col, format!("{} takes {} wires", gate.name, gate.arity)));
                }
                Ok(Circuit::Apply(Op { gate, wires: ws }))
            }
            "BitCon" => {
                let l = self.next(ind + 2, "GATE BitControl")?;
                let (gno, gcol) = (l.no, l.indent + 1);
                let rest = l
                    .text
                    .strip_prefix("GATE BitControl")
                    .ok_or_else(|| err(gno, gcol, "expected GATE BitControl"))?;
                let cond = match rest.split_whitespace().collect::<Vec<_>>().as_slice() {
                    [] => Cond::One,
                    ["Steane7"] => Cond::Steane7,
                    ["Equals", v] => {
                        Cond::Equals(v.parse().map_err(|_| err(gno, gcol, "bad Equals value"))?)
                    }
                    _ => return Err(err(gno, gcol, format!("unknown condition {rest:?}"))),
                };
                let ws = self.wires(ind + 2)?;
                let body = self.node(ind + 4)?;
                let bw = body.wires();
                if ws.len() < bw.len() || ws[ws.len() - bw.len()..] != bw[..] {
                    return Err(err(no, col, "BitCon wires do not end with the body's wires"));
                }
                let ctrls = ws[..ws.len() - bw.len()].to_vec();
                if ctrls.is_empty() {
                    return Err(err(no, col, "BitCon without control wires"));
                }
                Ok(Circuit::BitCon {
                    cond,
                    ctrls,
                    body: Box::new(body),
                })
            }
            "WRAP" => {
                let g = self.gate(ind + 2)?;
                let ws = self.wires(ind + 2)?;
                let body = self.node(ind + 4)?;
                if let Some(w) = body.wires().into_iter().find(|w| !ws.contains(w)) {
                    return Err(err(no, col, format!("wrap body uses wire {w} outside the wrap")));
                }
                let template = body.remap(&|q| ws.iter().position(|&w| w == q).expect("checked"));
                let gate = build_gate(g, Some((ws.len(), template)))?;
                Ok(Circuit::Wrap {
                    gate,
                    wires: ws,
                    body: Box::new(body),
                })
            }
            other => Err(err(no, col, format!("unknown node {other:?}"))),
        }
    }

    fn wires(&mut self, ind: usize) -> Result<Vec<QubitId>> {
        let mut ws = Vec::new();
        while let Some(l) = self.peek(ind) {
            let Some(id) = l.text.strip_prefix("WIRE(Id:").and_then(|s| s.strip_suffix(')')) else {
                break;
            };
            let id = id.parse().map_err(|_| err(l.no, l.indent + 1, "bad wire id"))?;
            ws.push(id);
            self.pos += 1;
        }
        Ok(ws)
    }

    fn gate(&mut self, ind: usize) -> Result<GateText> {
        let l = self.next(ind, "GATE")?;
        let (no, col) = (l.no, l.indent + 1);
        let head = l
            .text
            .strip_prefix("GATE ")
            .ok_or_else(|| err(no, col, "expected GATE <name> is a <description>"))?;
        let (name, desc) = head
            .split_once(" is a ")
            .or_else(|| head.strip_suffix(" is a").map(|n| (n, "")))
            .ok_or_else(|| err(no, col, "expected GATE <name> is a <description>"))?;
        let mut g = GateText {
            no,
            name: name.to_string(),
            desc: desc.to_string(),
            kind: None,
            params: Vec::new(),
            draw: None,
            matrix: None,
        };
        let mut dense: Vec<Vec<C64>> = Vec::new();
        while let Some(l) = self.peek(ind + 2) {
            let (lno, lcol, text) = (l.no, l.indent + 1, l.text);
            self.pos += 1;
            let bad = |m: &str| err(lno, lcol, m.to_string());
            if let Some(k) = text.strip_prefix("KIND ") {
                g.kind = Some(k.to_string());
            } else if let Some(ps) = text.strip_prefix("PARAMS ") {
                g.params = ps
                    .split_whitespace()
                    .map(|p| p.parse().map_err(|_| bad("bad parameter")))
                    .collect::<Result<_>>()?;
            } else if let Some(d) = text.strip_prefix("DRAW ") {
                g.draw = Some(Draw::parse(d).ok_or_else(|| bad("bad draw hint"))?);
            } else if let Some(rest) = text.strip_prefix("MATRIX ") {
                g.matrix = Some(self.entries(rest, ind + 2, lno, lcol, true)?);
            } else if let Some(rest) = text.strip_prefix("SPARSE ") {
                g.matrix = Some(self.entries(rest, ind + 2, lno, lcol, false)?);
            } else {
                let row: Vec<C64> = text
                    .split_whitespace()
                    .map(|t| parse_complex(t).ok_or_else(|| bad("bad matrix entry")))
                    .collect::<Result<_>>()?;
                dense.push(row);
            }
        }
        if !dense.is_empty() {
            g.matrix = Some(SparseMatrix::from_dense(&dense).map_err(|e| err(no, col, e.to_string()))?);
        }
        Ok(g)
    }

    /// Entry lines after a `MATRIX dim nnz` (hex) or `SPARSE dim nnz` (display) line.
    fn entries(&mut self, head: &str, ind: usize, no: usize, col: usize, hex: bool) -> Result<SparseMatrix> {
        let nums: Vec<usize> = head
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| err(no, col, "bad matrix size")))
            .collect::<Result<_>>()?;
        let [dim, nnz] = nums[..] else {
            return Err(err(no, col, "expected <dim> <nnz>"));
        };
        let mut es = Vec::with_capacity(nnz);
        for _ in 0..nnz {
            let l = self.next(ind, "a matrix entry")?;
            let (lno, lcol) = (l.no, l.indent + 1);
            let bad = || err(lno, lcol, "bad matrix entry");
            let t: Vec<&str> = l.text.split_whitespace().collect();
            let entry = match (hex, t.as_slice()) {
                (true, [r, c, re, im]) => {
                    let bits = |s: &str| u64::from_str_radix(s, 16).map(f64::from_bits);
                    (
                        r.parse().map_err(|_| bad())?,
                        c.parse().map_err(|_| bad())?,
                        C64::new(bits(re).map_err(|_| bad())?, bits(im).map_err(|_| bad())?),
                    )
                }
                (false, [r, c, v]) => (
                    r.parse().map_err(|_| bad())?,
                    c.parse().map_err(|_| bad())?,
                    parse_complex(v).ok_or_else(bad)?,
                ),
                _ => return Err(bad()),
            };
            es.push(entry);
        }
        SparseMatrix::from_entries(dim, es).map_err(|e| err(no, col, e.to_string()))
    }
}

fn build_gate(g: GateText, wrapped: Option<(usize, Circuit)>) -> Result<Arc<Gate>> {
    let bad = |m: String| err(g.no, 1, m);
    if let Some((arity, template)) = wrapped {
        if let Some(k) = &g.kind {
            if k != &format!("wrapped {arity}") {
                return Err(bad(format!("wrap node with gate kind {k:?}")));
            }
        }
        return Ok(Arc::new(Gate {
            draw: g.draw.unwrap_or_else(|| Draw::Span(g.name.clone())),
            name: g.name,
            params: g.params,
            desc: g.desc,
            kind: GateKind::Wrapped(template),
            arity,
        }));
    }
    let Some(kind) = g.kind else {
        return gate_from_dump(g);
    };
    let words: Vec<&str> = kind.splitn(3, ' ').collect();
    let (kind, arity) = match words.as_slice() {
        ["unitary"] => {
            let m = g.matrix.ok_or_else(|| bad("unitary gate without MATRIX".into()))?;
            let a = m.qubits();
            (GateKind::Unitary(m), a)
        }
        ["measure"] => (GateKind::Measure, 1),
        ["reset", "0"] => (GateKind::Reset(BitValue::Zero), 1),
        ["reset", "1"] => (GateKind::Reset(BitValue::One), 1),
        ["label", side, text] => {
            let side = match *side {
                "L" => Side::Left,
                "R" => Side::Right,
                _ => return Err(bad(format!("bad label side {side:?}"))),
            };
            (GateKind::Label { text: text.to_string(), side }, 1)
        }
        ["label", side] => {
            let side = if *side == "L" { Side::Left } else { Side::Right };
            (GateKind::Label { text: String::new(), side }, 1)
        }
        _ => return Err(bad(format!("unknown gate kind {kind:?}"))),
    };
    let draw = g.draw.ok_or_else(|| bad("missing DRAW".into()))?;
    Ok(Arc::new(Gate {
        name: g.name,
        params: g.params,
        desc: g.desc,
        kind,
        arity,
        draw,
    }))
}

/// Rebuild a gate from its dump lines: library gates by name, everything
/// else as a plain matrix gate.
fn gate_from_dump(g: GateText) -> Result<Arc<Gate>> {
    if let Ok(lib) = gates::standard_gate(&g.name) {
        if lib.desc == g.desc {
            return Ok(lib);
        }
    }
    if let (Some(side), Some(text)) = (
        match g.name.as_str() {
            "LabelL" => Some(Side::Left),
            "LabelR" => Some(Side::Right),
            _ => None,
        },
        g.desc.strip_prefix("Label "),
    ) {
        return Ok(gates::label(text, side));
    }
    let m = g
        .matrix
        .ok_or_else(|| err(g.no, 1, format!("gate {} has no matrix", g.name)))?;
    let arity = m.qubits();
    Ok(Arc::new(Gate {
        draw: if arity == 1 {
            Draw::Box(g.name.clone())
        } else {
            Draw::Span(g.name.clone())
        },
        name: g.name,
        params: g.params,
        desc: g.desc,
        kind: GateKind::Unitary(m),
        arity,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{cnot, h, measure, x};

    #[test]
    fn number_display() {
        assert_eq!(fmt_real(std::f64::consts::FRAC_1_SQRT_2), "0.7071");
        assert_eq!(fmt_real(-std::f64::consts::FRAC_1_SQRT_2), "-0.7071");
        assert_eq!(fmt_real(1.0), "1");
        assert_eq!(fmt_real(-0.0), "0");
        assert_eq!(fmt_real(0.5), "0.5");
        assert_eq!(fmt_complex(C64::new(0.5, -0.25)), "0.5-0.25i");
        assert_eq!(fmt_complex(C64::new(0.0, 1.0)), "1i");
        for s in ["0.5-0.25i", "1i", "-1i", "0.7071", "1e-7+2e-7i", "-3+4i"] {
            assert_eq!(fmt_complex(parse_complex(s).unwrap()), fmt_complex(parse_complex(&fmt_complex(parse_complex(s).unwrap())).unwrap()));
        }
    }

    #[test]
    fn dump_of_single_h() {
        let c = Circuit::Seq(vec![Circuit::apply(h(), &[1])]);
        assert_eq!(
            c.dump(),
            "SEQ\n  APPLY\n    GATE H is a Hadamard\n      0.7071 0.7071\n      0.7071 -0.7071\n    WIRE(Id:1)\n"
        );
        assert_eq!(Circuit::default().dump(), "SEQ\n");
    }

    #[test]
    fn bitcon_layout() {
        let c = Circuit::Seq(vec![
            Circuit::apply(measure(), &[1]),
            Circuit::BitCon {
                cond: Cond::One,
                ctrls: vec![1],
                body: Box::new(Circuit::apply(x(), &[2])),
            },
        ]);
        let d = c.dump();
        assert!(d.contains(
            "  BitCon\n    GATE BitControl\n    WIRE(Id:1)\n    WIRE(Id:2)\n      APPLY\n        GATE X is a Pauli X flip\n          0 1\n          1 0\n        WIRE(Id:2)\n"
        ));
        assert!(d.contains("GATE M is a Collapse State\n      1 0\n      0 1\n"));
        let back = parse_circuit(&d).unwrap();
        assert_eq!(back, c);
        assert_eq!(parse_circuit(&c.export()).unwrap(), c);
    }

    #[test]
    fn truncated_export_is_rejected() {
        let c = Circuit::Seq(vec![Circuit::apply(cnot(), &[0, 1])]);
        let e = c.export();
        let cut = &e[..e.len() - 10];
        assert!(matches!(parse_circuit(cut), Err(Error::Parse { .. })));
        assert!(matches!(parse_circuit("SEQ\n  BOGUS\n"), Err(Error::Parse { line: 2, col: 3, .. })));
    }
}
