//! Node-merging over graphs whose nodes are runs of CFG blocks.

use std::collections::BTreeSet;

use crate::cfg::{BlockId, Cfg};

/// A directed graph whose nodes each stand for an ordered run of CFG blocks.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BlockGraph {
    pub nodes: Vec<Vec<BlockId>>,
    pub succ: Vec<Vec<usize>>,
}

impl BlockGraph {
    /// One node per reachable CFG block, in offset order.
    pub fn from_cfg(cfg: &Cfg) -> Self {
        let ids: Vec<BlockId> = cfg.reachable_blocks().map(|b| b.id).collect();
        let mut index = vec![usize::MAX; cfg.blocks.len()];
        for (i, &b) in ids.iter().enumerate() {
            index[b] = i;
        }
        let succ = ids
            .iter()
            .map(|&b| cfg.blocks[b].successors.iter().map(|&s| index[s]).collect())
            .collect();
        BlockGraph {
            nodes: ids.into_iter().map(|b| vec![b]).collect(),
            succ,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn preds(&self) -> Vec<Vec<usize>> {
        let mut p = vec![Vec::new(); self.len()];
        for (v, ss) in self.succ.iter().enumerate() {
            for &s in ss {
                p[s].push(v);
            }
        }
        p
    }

    /// Index of the node whose first block is `block`.
    pub fn node_starting_with(&self, block: BlockId) -> Option<usize> {
        self.nodes.iter().position(|n| n.first() == Some(&block))
    }

    /// Nodes reachable from `roots`, skipping the given edges.
    pub fn reachable_from(&self, roots: &[usize], skip: &BTreeSet<(usize, usize)>) -> BTreeSet<usize> {
        let mut seen: BTreeSet<usize> = roots.iter().copied().collect();
        let mut stack: Vec<usize> = roots.to_vec();
        while let Some(v) = stack.pop() {
            for &s in &self.succ[v] {
                if !skip.contains(&(v, s)) && seen.insert(s) {
                    stack.push(s);
                }
            }
        }
        seen
    }

    /// Keeps only `keep` (in their existing order) and drops `skip` edges.
    /// Returns the subgraph and the old-to-new index map.
    pub fn subgraph(&self, keep: &BTreeSet<usize>, skip: &BTreeSet<(usize, usize)>) -> (Self, Vec<Option<usize>>) {
        let mut map = vec![None; self.len()];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = Some(new);
        }
        let mut g = BlockGraph::default();
        for &old in keep {
            g.nodes.push(self.nodes[old].clone());
            g.succ.push(
                self.succ[old]
                    .iter()
                    .filter(|&&s| !skip.contains(&(old, s)))
                    .filter_map(|&s| map[s])
                    .collect(),
            );
        }
        (g, map)
    }
}

/// Merges single-exit chains (the node-set loop of the compaction algorithm).
///
/// `external` lists nodes with an incoming edge from outside the graph (the
/// root, method entries); they are never absorbed into a predecessor.
/// Returns the merged graph and the map from old node to the new node that
/// now contains it.
pub fn compactify_cfg(g: &BlockGraph, external: &[usize]) -> (BlockGraph, Vec<usize>) {
    let n = g.len();
    let mut blocks = g.nodes.clone();
    let mut succ: Vec<BTreeSet<usize>> = g.succ.iter().map(|s| s.iter().copied().collect()).collect();
    let mut pred: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (v, ss) in succ.iter().enumerate() {
        for &s in ss {
            pred[s].insert(v);
        }
    }
    let mut extra_in = vec![0usize; n];
    for &e in external {
        extra_in[e] += 1;
    }
    let mut owner: Vec<usize> = (0..n).collect();
    let mut alive = vec![true; n];
    // Order key: nodes are indexed by offset already.
    let mut unmerged: BTreeSet<usize> = (0..n).collect();
    let mut merged: Vec<usize> = Vec::new();

    while !unmerged.is_empty() {
        let seed = unmerged
            .iter()
            .copied()
            .find(|&v| pred[v].iter().all(|p| !unmerged.contains(p) || *p == v))
            .unwrap_or_else(|| *unmerged.iter().next().expect("non-empty"));
        unmerged.remove(&seed);
        merged.push(seed);
        compactify(
            seed,
            &mut blocks,
            &mut succ,
            &mut pred,
            &extra_in,
            &mut unmerged,
            &mut merged,
            &mut owner,
            &mut alive,
        );
    }

    let survivors: Vec<usize> = (0..n).filter(|&v| alive[v]).collect();
    let mut new_index = vec![usize::MAX; n];
    for (i, &v) in survivors.iter().enumerate() {
        new_index[v] = i;
    }
    let out = BlockGraph {
        nodes: survivors.iter().map(|&v| blocks[v].clone()).collect(),
        succ: survivors
            .iter()
            .map(|&v| succ[v].iter().map(|&s| new_index[s]).collect())
            .collect(),
    };
    let map = (0..n)
        .map(|v| {
            let mut r = v;
            while owner[r] != r {
                r = owner[r];
            }
            new_index[r]
        })
        .collect();
    (out, map)
}

/// Absorbs the successor chain of `node` while it is a single edge into a
/// single-predecessor node.
#[allow(clippy::too_many_arguments)]
fn compactify(
    node: usize,
    blocks: &mut [Vec<BlockId>],
    succ: &mut [BTreeSet<usize>],
    pred: &mut [BTreeSet<usize>],
    extra_in: &[usize],
    unmerged: &mut BTreeSet<usize>,
    merged: &mut Vec<usize>,
    owner: &mut [usize],
    alive: &mut [bool],
) {
    loop {
        if succ[node].len() != 1 {
            return;
        }
        let next = *succ[node].iter().next().expect("one successor");
        if next == node || pred[next].len() + extra_in[next] != 1 {
            return;
        }
        let absorbed = std::mem::take(&mut blocks[next]);
        blocks[node].extend(absorbed);
        let next_succ = std::mem::take(&mut succ[next]);
        for &s in &next_succ {
            pred[s].remove(&next);
            pred[s].insert(node);
        }
        succ[node] = next_succ;
        pred[next].clear();
        unmerged.remove(&next);
        merged.retain(|&m| m != next);
        owner[next] = node;
        alive[next] = false;
    }
}
