use qdsl::circuit::{compile, labels};
use qdsl::gates::{measure, Side};
use qdsl::programs::teleport;
use qdsl::render::{render, to_svg, to_tikz, Cell, Format, LayoutGrid};
use qdsl::shor::qft_inv;
use qdsl::Circuit;

fn teleport_circuit() -> Circuit {
    compile(|em, qs| teleport(em, qs), &[0, 1, 2]).unwrap()
}

fn cells(g: &LayoutGrid) -> Vec<(usize, usize, Cell)> {
    let mut out = Vec::new();
    for (ci, col) in g.columns.iter().enumerate() {
        for p in col {
            for (r, c) in &p.cells {
                out.push((ci, *r, c.clone()));
            }
        }
    }
    out
}

#[test]
fn teleport_topology() {
    let g = LayoutGrid::new(&teleport_circuit());
    assert_eq!(g.rows, vec![0, 1, 2]);
    let all = cells(&g);
    let meters: Vec<usize> = all.iter().filter(|c| c.2 == Cell::Meter).map(|c| c.1).collect();
    assert_eq!(meters.len(), 2);
    assert!(meters.contains(&0) && meters.contains(&1));
    assert!(g.classical_from[0].is_some());
    assert!(g.classical_from[1].is_some());
    assert_eq!(g.classical_from[2], None);
    let classical: Vec<_> = g
        .columns
        .iter()
        .enumerate()
        .flat_map(|(ci, col)| col.iter().map(move |p| (ci, p)))
        .filter(|(_, p)| matches!(p.connector, Some((_, _, true))))
        .collect();
    assert_eq!(classical.len(), 2);
    for (ci, p) in classical {
        let (ctrl, _) = p.cells.iter().find(|(_, c)| *c == Cell::ClassicalCtrl).unwrap();
        assert!(g.is_classical(*ctrl, ci), "BC control must sit on a classical wire");
        assert!(p.cells.iter().any(|(r, c)| *r == 2 && matches!(c, Cell::Box(_))));
    }
    assert_eq!(g.left[0].as_deref(), Some("Src"));
    assert_eq!(g.right[2].as_deref(), Some("Dest"));
}

#[test]
fn labels_only_circuit_draws_wires() {
    let c = compile(|em, qs| labels(em, &["a", "b"], qs, Side::Left), &[0, 1]).unwrap();
    let g = LayoutGrid::new(&c);
    assert_eq!(g.rows.len(), 2);
    assert!(g.columns.is_empty());
    let svg = to_svg(&g);
    assert_eq!(svg.matches("<line").count(), 2);
    assert!(!svg.contains("<rect"));
}

#[test]
fn inverse_qft_on_five_qubits() {
    let qs: Vec<usize> = (0..5).collect();
    let c = compile(|em, qs| qft_inv(em, qs), &qs).unwrap();
    let g = LayoutGrid::new(&c);
    let all = cells(&g);
    assert_eq!(all.iter().filter(|c| c.2 == Cell::Box("H".into())).count(), 5);
    let connectors = g.columns.iter().flatten().filter(|p| p.connector.is_some()).count();
    assert_eq!(connectors, 10);
    assert!(to_tikz(&g).contains("^\\dagger"));
}

#[test]
fn every_apply_placed_once_and_columns_match_depth() {
    for c in [
        teleport_circuit(),
        compile(|em, qs| qft_inv(em, qs), &[0, 1, 2, 3]).unwrap(),
    ] {
        let g = LayoutGrid::new(&c);
        let physical = c
            .flatten()
            .leaves()
            .into_iter()
            .filter(|l| !matches!(l, Circuit::Apply(op) if op.gate.is_label()))
            .count();
        assert_eq!(g.columns.iter().map(Vec::len).sum::<usize>(), physical);
        assert_eq!(g.columns.len(), c.gate_count().depth);
        assert_eq!(LayoutGrid::new(&c.fold()), g);
    }
}

#[test]
fn classical_tagging_is_monotone() {
    let c = compile(
        |em, qs| {
            em.apply(&measure(), &qs[..1])?;
            em.apply(&qdsl::gates::h(), &qs[..1])?;
            em.apply(&measure(), &qs[..1])
        },
        &[0],
    )
    .unwrap();
    let g = LayoutGrid::new(&c);
    assert_eq!(g.classical_from[0], Some(1));
    assert!(!g.is_classical(0, 0));
    assert!(g.is_classical(0, 1) && g.is_classical(0, 2));
}

#[test]
fn files_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let c = teleport_circuit();
    let a = render(&c, &[Format::Svg, Format::Tikz], &dir.path().join("a"), None).unwrap();
    let b = render(&c, &[Format::Svg, Format::Tikz], &dir.path().join("b"), None).unwrap();
    assert_eq!(a.len(), 2);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
    }
    let tex = std::fs::read_to_string(&a[1]).unwrap();
    assert!(tex.starts_with("\\documentclass"));
    assert!(tex.contains("\\meter["));
    assert!(tex.contains("\\cw{"));
}

#[test]
fn pages_and_unwritable_path() {
    let qs: Vec<usize> = (0..5).collect();
    let c = compile(|em, qs| qft_inv(em, qs), &qs).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = render(&c, &[Format::Svg], &dir.path().join("q"), Some(3)).unwrap();
    let depth = c.gate_count().depth;
    assert_eq!(files.len(), depth.div_ceil(3));
    let bad = dir.path().join("missing").join("x");
    assert!(render(&c, &[Format::Svg], &bad, None).is_err());
}
