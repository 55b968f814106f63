use std::collections::{HashMap, HashSet};

use super::Circuit;
use crate::error::{Error, Result};
use crate::gates::{Gate, GateKind};
use crate::ket::QubitId;
use crate::sparse::{fused_product, Placed, SparseMatrix, REUNITARIZE_TOL};

/// Fusions spanning at most this many wires are always taken.
const ALWAYS_FUSE_SPAN: usize = 4;

/// Per-gate cost on top of its row length: one extra sweep over the state.
const GATE_OVERHEAD: usize = 2;

/// Rounding added to the drift bound per fused entry.
const ROUNDING_PER_TERM: f64 = 4.0 * f64::EPSILON;

#[derive(Clone, Debug, PartialEq)]
pub struct GrowParams {
    /// Largest span of a fused gate.
    pub max_wires: usize,
    /// Largest nonzero fraction a fused gate wider than four wires may have.
    pub density_limit: f64,
    /// Also fuse gates that share no wire with the block they join.
    pub grow_non_adjacent: bool,
    /// Largest number of stored entries in one fused matrix.
    pub max_entries: usize,
}

/// 2^22 entries, 64 MiB per fused matrix.
pub const DEFAULT_MAX_ENTRIES: usize = 1 << 22;

impl Default for GrowParams {
    fn default() -> Self {
        GrowParams {
            max_wires: 30,
            density_limit: 0.5,
            grow_non_adjacent: false,
            max_entries: DEFAULT_MAX_ENTRIES,
        }
    }
}

impl GrowParams {
    pub fn new(max_wires: usize, density_limit: f64, grow_non_adjacent: bool) -> Result<Self> {
        if !(2..=30).contains(&max_wires) {
            return Err(Error::InvalidArgument(format!("max_wires {max_wires} outside 2..=30")));
        }
        if !(density_limit > 0.0 && density_limit <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "density limit {density_limit} outside (0, 1]"
            )));
        }
        Ok(GrowParams {
            max_wires,
            density_limit,
            grow_non_adjacent,
            max_entries: DEFAULT_MAX_ENTRIES,
        })
    }
}

/// Counters after one window of the grow pass.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GrowStep {
    pub wires: usize,
    /// Unitary operations entering this window.
    pub possibles: usize,
    /// Operations removed by fusion so far.
    pub did: usize,
    /// Fusions rejected by the cost model so far.
    pub big: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GrowLog {
    pub steps: Vec<GrowStep>,
    /// First window size that was not tried.
    pub ran_out: usize,
    /// Fused gates that had to be re-orthonormalized.
    pub reunitarized: usize,
}

impl GrowLog {
    pub fn lines(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .steps
            .iter()
            .map(|s| {
                format!(
                    "{:13} wires, possibles: {:4} (did= {:5} big= {:5})",
                    s.wires, s.possibles, s.did, s.big
                )
            })
            .collect();
        out.push(format!("{:13} = Ran out of wires", self.ran_out));
        out
    }
}

struct Block {
    id: usize,
    /// Wires in the order of the matrix's qubits.
    wires: Vec<QubitId>,
    mat: SparseMatrix,
    /// The original leaf while nothing has been fused into it.
    orig: Option<Circuit>,
    cost: usize,
    drift: f64,
}

enum Item {
    Barrier(Circuit),
    Block(Block),
}

struct Grower<'p> {
    params: &'p GrowParams,
    next_id: usize,
    did: usize,
    big: usize,
    reunitarized: usize,
    failed: HashSet<Vec<usize>>,
}

fn cost_of(m: &SparseMatrix) -> usize {
    m.max_row_nnz() + GATE_OVERHEAD
}

pub(super) fn grow_gates(c: &Circuit, params: &GrowParams) -> (Circuit, GrowLog) {
    let mut g = Grower {
        params,
        next_id: 0,
        did: 0,
        big: 0,
        reunitarized: 0,
        failed: HashSet::new(),
    };
    let flat = c.flatten();
    let mut items: Vec<Item> = Vec::new();
    for leaf in flat.leaves() {
        match leaf {
            Circuit::Apply(op) => match &op.gate.kind {
                GateKind::Unitary(m) => {
                    items.push(Item::Block(Block {
                        id: g.fresh_id(),
                        wires: op.wires.clone(),
                        mat: m.clone(),
                        orig: Some(leaf.clone()),
                        cost: cost_of(m),
                        drift: f64::EPSILON,
                    }));
                }
                _ => items.push(Item::Barrier(leaf.clone())),
            },
            _ => items.push(Item::Barrier(leaf.clone())),
        }
    }
    let mut log = GrowLog::default();
    for window in 2..=params.max_wires {
        let possibles = items.iter().filter(|i| matches!(i, Item::Block(_))).count();
        items = g.pass(items, window);
        log.steps.push(GrowStep {
            wires: window,
            possibles,
            did: g.did,
            big: g.big,
        });
    }
    log.ran_out = params.max_wires + 1;
    log.reunitarized = g.reunitarized;
    let out = items
        .into_iter()
        .map(|it| match it {
            Item::Barrier(c) => c,
            Item::Block(b) => match b.orig {
                Some(c) => c,
                None => Circuit::apply(Gate::grown(b.mat), &b.wires),
            },
        })
        .collect();
    (Circuit::Seq(out), log)
}

fn place<'a>(b: &'a Block, union: &[QubitId]) -> Placed<'a> {
    let span = union.len();
    Placed {
        m: &b.mat,
        bits: b
            .wires
            .iter()
            .map(|w| span - 1 - union.binary_search(w).expect("wire in union"))
            .collect(),
    }
}

impl Grower<'_> {
    fn fresh_id(&mut self) -> usize {
        self.next_id += 1;
        self.next_id
    }

    fn pass(&mut self, items: Vec<Item>, window: usize) -> Vec<Item> {
        let mut out: Vec<Item> = Vec::with_capacity(items.len());
        let mut open: Vec<Option<Block>> = Vec::new();
        let mut owner: HashMap<QubitId, usize> = HashMap::new();

        fn close(
            slots: &[usize],
            open: &mut [Option<Block>],
            owner: &mut HashMap<QubitId, usize>,
            out: &mut Vec<Item>,
        ) {
            for &s in slots {
                if let Some(b) = open[s].take() {
                    for w in &b.wires {
                        owner.remove(w);
                    }
                    out.push(Item::Block(b));
                }
            }
        }

        fn push_open(b: Block, open: &mut Vec<Option<Block>>, owner: &mut HashMap<QubitId, usize>) {
            for &w in &b.wires {
                owner.insert(w, open.len());
            }
            open.push(Some(b));
        }

        for item in items {
            match item {
                Item::Barrier(leaf) => {
                    let mut slots: Vec<usize> =
                        leaf.leaf_wires().iter().filter_map(|w| owner.get(w).copied()).collect();
                    slots.sort_unstable();
                    slots.dedup();
                    close(&slots, &mut open, &mut owner, &mut out);
                    out.push(Item::Barrier(leaf));
                }
                Item::Block(b) => {
                    let mut slots: Vec<usize> =
                        b.wires.iter().filter_map(|w| owner.get(w).copied()).collect();
                    slots.sort_unstable();
                    slots.dedup();
                    if slots.is_empty() && self.params.grow_non_adjacent {
                        if let Some(s) = open.iter().rposition(Option::is_some) {
                            slots.push(s);
                        }
                    }
                    if slots.is_empty() {
                        push_open(b, &mut open, &mut owner);
                        continue;
                    }
                    let parts: Vec<&Block> =
                        slots.iter().map(|&s| open[s].as_ref().expect("open slot")).collect();
                    match self.try_fuse(&parts, &b, window) {
                        Some(merged) => {
                            for &s in &slots {
                                let old = open[s].take().expect("open slot");
                                for w in &old.wires {
                                    owner.remove(w);
                                }
                            }
                            self.did += slots.len();
                            push_open(merged, &mut open, &mut owner);
                        }
                        None => {
                            let touching: Vec<usize> = slots
                                .into_iter()
                                .filter(|&s| {
                                    open[s]
                                        .as_ref()
                                        .is_some_and(|o| o.wires.iter().any(|w| b.wires.contains(w)))
                                })
                                .collect();
                            close(&touching, &mut open, &mut owner, &mut out);
                            push_open(b, &mut open, &mut owner);
                        }
                    }
                }
            }
        }
        let all: Vec<usize> = (0..open.len()).collect();
        close(&all, &mut open, &mut owner, &mut out);
        out
    }

    fn try_fuse(&mut self, parts: &[&Block], next: &Block, window: usize) -> Option<Block> {
        let mut union: Vec<QubitId> = parts
            .iter()
            .flat_map(|p| p.wires.iter().copied())
            .chain(next.wires.iter().copied())
            .collect();
        union.sort_unstable();
        union.dedup();
        let span = union.len();
        if span > window {
            return None;
        }
        let mut key: Vec<usize> = parts.iter().map(|p| p.id).collect();
        key.push(next.id);
        if self.failed.contains(&key) {
            return None;
        }
        let cost: usize = parts.iter().map(|p| p.cost).sum::<usize>() + next.cost;
        if (1usize << span) > self.params.max_entries {
            self.big += 1;
            self.failed.insert(key);
            return None;
        }
        let row_limit = if span <= ALWAYS_FUSE_SPAN {
            usize::MAX
        } else {
            cost.saturating_sub(GATE_OVERHEAD)
        };
        let factors: Vec<Placed<'_>> =
            parts.iter().map(|p| place(p, &union)).chain(std::iter::once(place(next, &union))).collect();
        let fused = fused_product(span, &factors, row_limit, self.params.max_entries)
            .filter(|m| span <= ALWAYS_FUSE_SPAN || m.density() <= self.params.density_limit);
        let Some(mut mat) = fused else {
            self.big += 1;
            self.failed.insert(key);
            return None;
        };
        let mut drift = parts.iter().map(|p| p.drift).sum::<f64>()
            + next.drift
            + ROUNDING_PER_TERM * mat.max_row_nnz() as f64;
        if drift > REUNITARIZE_TOL {
            let err = mat.unitarity_error();
            if err > REUNITARIZE_TOL {
                mat = mat.reunitarize().ok()?;
                self.reunitarized += 1;
                drift = mat.unitarity_error();
            } else {
                drift = err.max(f64::EPSILON);
            }
        }
        Some(Block {
            id: self.fresh_id(),
            wires: union,
            cost: cost_of(&mat),
            mat,
            orig: None,
            drift,
        })
    }
}
