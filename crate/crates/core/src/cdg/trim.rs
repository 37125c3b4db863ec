//! Recognition of compiler-generated structure that is not worth testing:
//! the selector dispatcher, an empty fallback, public state-variable getters
//! and the leading value check of non-payable functions.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::graph::BlockGraph;
use super::{CdgWarning, NodeKind};
use crate::cfg::{Cfg, PredicateKind};
use crate::evm::opcode::*;
use crate::evm::FunctionAbi;

#[derive(Debug, Clone, Default)]
pub(crate) struct TrimPlan {
    /// Why each removed node of the compacted graph goes away.
    pub labels: BTreeMap<usize, NodeKind>,
    /// Surviving method entries: ABI index (`None` for an unnamed region) and node.
    pub methods: Vec<(Option<usize>, usize)>,
    pub removed_edges: BTreeSet<(usize, usize)>,
    pub excluded_functions: BTreeSet<usize>,
    pub warnings: Vec<CdgWarning>,
}

struct View<'a> {
    cfg: &'a Cfg,
    g: &'a BlockGraph,
}

enum Shape {
    Selector(usize),
    Split,
}

const SIDE_EFFECTS: [u8; 9] = [SSTORE, LOG0, LOG1, LOG2, LOG3, LOG4, CALL, SELFDESTRUCT, CREATE];

impl View<'_> {
    fn last_block(&self, v: usize) -> usize {
        *self.g.nodes[v].last().expect("nodes are non-empty")
    }

    fn opcodes(&self, v: usize) -> impl Iterator<Item = u8> + '_ {
        self.g.nodes[v]
            .iter()
            .flat_map(|&b| self.cfg.blocks[b].instructions.iter().map(|i| i.opcode))
    }

    fn has_any(&self, v: usize, ops: &[u8]) -> bool {
        self.opcodes(v).any(|o| ops.contains(&o))
    }

    fn node_at_block(&self, block: Option<usize>) -> Option<usize> {
        self.g.node_starting_with(block?)
    }

    /// (jump target node, fall-through node) of a node ending in JUMPI.
    fn targets(&self, v: usize) -> Option<(usize, usize)> {
        let (t, f) = self.cfg.branch_targets(self.last_block(v))?;
        Some((self.node_at_block(t)?, self.node_at_block(f)?))
    }

    fn is_revert_only(&self, v: usize) -> bool {
        self.g.succ[v].is_empty()
            && matches!(
                self.cfg.blocks[self.last_block(v)].last().opcode,
                REVERT | INVALID
            )
            && !self.has_any(v, &SIDE_EFFECTS)
    }

    /// `CALLVALUE ... ISZERO JUMPI` whose fall-through only reverts.
    /// Returns (continuation, revert node).
    fn payable_check(&self, v: usize) -> Option<(usize, usize)> {
        let block = self.last_block(v);
        let p = self.cfg.predicate_of.get(&block)?;
        if p.kind != PredicateKind::IsZero || p.negations != 0 {
            return None;
        }
        let ins = &self.cfg.blocks[block].instructions;
        if !ins.iter().any(|i| i.opcode == CALLVALUE && i.offset < p.comparison_offset) {
            return None;
        }
        let (cont, rev) = self.targets(v)?;
        self.is_revert_only(rev).then_some((cont, rev))
    }

    fn dispatcher_shape(&self, v: usize, selectors: &BTreeMap<u32, usize>) -> Option<Shape> {
        let block = &self.cfg.blocks[self.last_block(v)];
        let p = self.cfg.predicate_of.get(&block.id)?;
        let has = |op: u8| block.instructions.iter().any(|i| i.opcode == op);
        let push4 = || {
            block
                .instructions
                .iter()
                .filter(|i| i.opcode == PUSH4)
                .filter_map(|i| i.push_payload)
                .map(|w| w.low_u32())
        };
        match p.kind {
            PredicateKind::Eq => push4().find_map(|s| selectors.get(&s).copied()).map(Shape::Selector),
            PredicateKind::Lt | PredicateKind::Gt if has(CALLDATASIZE) || push4().next().is_some() => {
                Some(Shape::Split)
            }
            PredicateKind::IsZero if has(CALLDATASIZE) => Some(Shape::Split),
            _ => None,
        }
    }

    /// Whether the region rooted at `v` does anything observable.
    fn region_is_empty(&self, v: usize, skip: &BTreeSet<(usize, usize)>) -> bool {
        let region = self.g.reachable_from(&[v], skip);
        region.iter().all(|&n| {
            let branching = self.g.succ[n].iter().filter(|&&s| !skip.contains(&(n, s))).count() >= 2;
            !branching && !self.has_any(n, &SIDE_EFFECTS)
        })
    }
}

pub(crate) fn plan(cfg: &Cfg, g: &BlockGraph, abi: &[FunctionAbi]) -> TrimPlan {
    let view = View { cfg, g };
    let mut plan = TrimPlan::default();
    if g.is_empty() {
        return plan;
    }
    let selectors: BTreeMap<u32, usize> = abi
        .iter()
        .enumerate()
        .filter_map(|(i, f)| f.selector.map(|s| (u32::from_be_bytes(s), i)))
        .collect();

    // Dispatcher prefix.
    let mut dispatcher = BTreeSet::new();
    let mut entries: BTreeMap<usize, usize> = BTreeMap::new();
    let mut exits: Vec<usize> = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    let mut seen = BTreeSet::from([0usize]);
    let mut push = |n: usize, queue: &mut VecDeque<usize>| {
        if seen.insert(n) {
            queue.push_back(n);
        }
    };
    while let Some(v) = queue.pop_front() {
        if let Some((cont, rev)) = view.payable_check(v) {
            // Contract-wide value check ahead of the selector switch.
            dispatcher.insert(v);
            plan.labels.insert(rev, NodeKind::PayableCheck);
            push(cont, &mut queue);
            continue;
        }
        match view.dispatcher_shape(v, &selectors) {
            Some(Shape::Selector(f)) => {
                dispatcher.insert(v);
                if let Some((taken, fall)) = view.targets(v) {
                    entries.entry(f).or_insert(taken);
                    push(fall, &mut queue);
                }
            }
            Some(Shape::Split) => {
                dispatcher.insert(v);
                for &s in &g.succ[v] {
                    push(s, &mut queue);
                }
            }
            None => exits.push(v),
        }
    }

    if entries.is_empty() {
        plan.warnings.push(CdgWarning::PatternMismatch(
            "no selector dispatcher found; treating the whole contract as one method".into(),
        ));
        plan.methods.push((None, 0));
        return plan;
    }
    for &d in &dispatcher {
        plan.labels.insert(d, NodeKind::Dispatcher);
    }

    let entry_nodes: BTreeSet<usize> = entries.values().copied().collect();
    let fallback = abi.iter().position(|f| f.is_fallback);
    let mut methods: Vec<(Option<usize>, usize)> = entries.iter().map(|(&f, &n)| (Some(f), n)).collect();
    for x in exits {
        if entry_nodes.contains(&x) {
            continue;
        }
        let mut skip = BTreeSet::new();
        if let Some((_, rev)) = view.payable_check(x) {
            skip.insert((x, rev));
        }
        if view.region_is_empty(x, &skip) {
            for n in g.reachable_from(&[x], &BTreeSet::new()) {
                plan.labels.entry(n).or_insert(NodeKind::EmptyFallback);
            }
            if let Some(fb) = fallback {
                plan.excluded_functions.insert(fb);
            }
        } else {
            if fallback.is_none() {
                plan.warnings.push(CdgWarning::PatternMismatch(format!(
                    "non-empty fallback region at node {x} without a fallback in the ABI"
                )));
            }
            methods.push((fallback, x));
        }
    }

    for (f, e) in methods {
        let func = f.map(|i| &abi[i]);
        if func.is_none_or(|func| !func.payable) {
            if let Some((_, rev)) = view.payable_check(e) {
                plan.removed_edges.insert((e, rev));
                plan.labels.insert(rev, NodeKind::PayableCheck);
            }
        }
        if let (Some(i), Some(func)) = (f, func) {
            let region = g.reachable_from(&[e], &plan.removed_edges);
            let getter = func.is_view()
                && !func.is_fallback
                && view.region_is_empty(e, &plan.removed_edges)
                && region.iter().any(|&n| view.has_any(n, &[SLOAD]));
            if getter {
                plan.excluded_functions.insert(i);
                for n in region {
                    plan.labels.entry(n).or_insert(NodeKind::StateVariable);
                }
                continue;
            }
        }
        plan.methods.push((f, e));
    }
    plan
}
