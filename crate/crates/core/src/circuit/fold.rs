use std::collections::HashMap;

use super::Circuit;
use crate::ket::QubitId;

/// Each leaf lands in the first column after the last one that uses any of
/// its wires. BitCon leaves count their control wires; Wrap leaves stay whole.
pub(super) fn fold(c: &Circuit) -> Circuit {
    let mut cols: Vec<Vec<Circuit>> = Vec::new();
    let mut next_free: HashMap<QubitId, usize> = HashMap::new();
    for leaf in c.leaves() {
        let ws = leaf.leaf_wires();
        let col = ws.iter().map(|w| next_free.get(w).copied().unwrap_or(0)).max().unwrap_or(0);
        if col == cols.len() {
            cols.push(Vec::new());
        }
        cols[col].push(leaf.clone());
        for w in ws {
            next_free.insert(w, col + 1);
        }
    }
    Circuit::Seq(cols.into_iter().map(Circuit::Par).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{cnot, h, x};

    #[test]
    fn packs_disjoint_gates() {
        let c = Circuit::Seq(vec![Circuit::apply(h(), &[0]), Circuit::apply(x(), &[1])]);
        assert_eq!(c.depth(), 1);
        let c = Circuit::Seq(vec![Circuit::apply(h(), &[0]), Circuit::apply(x(), &[0])]);
        assert_eq!(c.depth(), 2);
    }

    #[test]
    fn later_gate_slides_past_unrelated_columns() {
        let c = Circuit::Seq(vec![
            Circuit::apply(h(), &[0]),
            Circuit::apply(cnot(), &[0, 1]),
            Circuit::apply(x(), &[2]),
        ]);
        let f = c.fold();
        let Circuit::Seq(cols) = &f else { panic!() };
        assert_eq!(cols.len(), 2);
        let Circuit::Par(first) = &cols[0] else { panic!() };
        assert_eq!(first.len(), 2);
        assert_eq!(f.fold(), f);
    }
}
