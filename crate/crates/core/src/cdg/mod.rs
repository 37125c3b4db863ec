//! Control-dependency graph: compacted, trimmed, with branch objectives.

mod control;
mod dominators;
mod dump;
mod graph;
mod trim;

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::Serialize;

use crate::cfg::{BlockId, Cfg, Predicate};
use crate::evm::FunctionAbi;

pub use control::{control_dependencies, ControlDependence};
pub use dominators::{immediate_dominators, immediate_post_dominators};
pub use dump::{cdg_to_dot, cdg_to_json};
pub use graph::{compactify_cfg, BlockGraph};

pub type NodeId = usize;
pub type BranchId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Normal,
    Dispatcher,
    StateVariable,
    EmptyFallback,
    PayableCheck,
    MethodEntry,
    Start,
    End,
}

#[derive(Debug, Clone, Serialize)]
pub struct CdgNode {
    pub id: NodeId,
    pub merged_blocks: Vec<BlockId>,
    pub kind: NodeKind,
    /// ABI index of the function a method-entry node belongs to.
    pub method: Option<usize>,
    pub start_offset: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Taken,
    Fallthrough,
}

impl Polarity {
    pub fn index(self) -> usize {
        match self {
            Polarity::Taken => 0,
            Polarity::Fallthrough => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Branch {
    pub id: BranchId,
    pub source: NodeId,
    pub target: NodeId,
    pub polarity: Polarity,
    pub predicate: Option<Predicate>,
    pub control_parent: Option<BranchId>,
    pub jumpi_offset: usize,
    /// Index into `Cdg::methods`.
    pub method: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Method {
    pub function: Option<usize>,
    pub entry: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum CdgWarning {
    PatternMismatch(String),
    DisconnectedGraph { node: NodeId },
}

/// Where an executed offset lands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OffsetClass {
    Node(NodeId),
    Trimmed,
    Unknown,
}

/// Branch data needed when a JUMPI executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BranchSite {
    pub node: NodeId,
    /// Indexed by `Polarity::index`.
    pub branches: [BranchId; 2],
    pub predicate: Option<Predicate>,
    /// Instruction count of the block ending in this JUMPI.
    pub block_len: usize,
}

#[derive(Debug, Clone)]
pub struct Cdg {
    pub nodes: Vec<CdgNode>,
    pub succ: Vec<Vec<NodeId>>,
    pub branches: Vec<Branch>,
    pub methods: Vec<Method>,
    pub start: NodeId,
    pub end: NodeId,
    /// Nodes removed by trimming, `kind` saying which pattern matched.
    pub trimmed: Vec<CdgNode>,
    pub excluded_functions: BTreeSet<usize>,
    pub ipdom: Vec<Option<NodeId>>,
    /// The branch each node is control-dependent on, if any.
    pub node_parent: Vec<Option<BranchId>>,
    pub depth: Vec<Option<usize>>,
    pub warnings: Vec<CdgWarning>,
    offset_class: Vec<OffsetClass>,
    sites: Vec<Option<BranchSite>>,
}

impl Cdg {
    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    pub fn is_real(&self, node: NodeId) -> bool {
        node != self.start && node != self.end
    }

    pub fn classify(&self, offset: usize) -> OffsetClass {
        self.offset_class.get(offset).copied().unwrap_or(OffsetClass::Unknown)
    }

    pub fn site(&self, jumpi_offset: usize) -> Option<&BranchSite> {
        self.sites.get(jumpi_offset).and_then(Option::as_ref)
    }

    /// Branch objectives with no control parent.
    pub fn roots(&self) -> impl Iterator<Item = BranchId> + '_ {
        self.branches.iter().filter(|b| b.control_parent.is_none()).map(|b| b.id)
    }

    pub fn children(&self, branch: BranchId) -> impl Iterator<Item = BranchId> + '_ {
        self.branches
            .iter()
            .filter(move |b| b.control_parent == Some(branch))
            .map(|b| b.id)
    }

    /// Length of the control-parent chain above `branch` (0 for roots).
    pub fn chain_depth(&self, branch: BranchId) -> usize {
        let mut d = 0;
        let mut cur = self.branches[branch].control_parent;
        while let Some(p) = cur {
            d += 1;
            cur = self.branches[p].control_parent;
        }
        d
    }

    /// ABI indices of functions worth calling during generation.
    pub fn callable_functions<'a>(&'a self, abi: &'a [FunctionAbi]) -> impl Iterator<Item = usize> + 'a {
        abi.iter()
            .enumerate()
            .filter(move |(i, f)| !f.is_constructor && !self.excluded_functions.contains(i))
            .map(|(i, _)| i)
    }

    /// Human-readable branch label such as `Bid@0x4f:taken`.
    pub fn branch_label(&self, branch: BranchId, abi: &[FunctionAbi]) -> String {
        let b = &self.branches[branch];
        let method = match self.methods[b.method].function {
            Some(i) if abi[i].is_fallback => "fallback".to_string(),
            Some(i) => abi[i].name.clone(),
            None => "code".to_string(),
        };
        let pol = match b.polarity {
            Polarity::Taken => "taken",
            Polarity::Fallthrough => "fallthrough",
        };
        format!("{method}@{:#x}:{pol}", b.jumpi_offset)
    }
}

/// Where the trace walk goes after leaving `current`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NextNode {
    Node { node: NodeId, position: usize },
    End,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("executed offset {offset:#x} does not belong to any graph node")]
pub struct TraceMismatch {
    pub offset: usize,
}

/// Follows the trace from `position` (the first offset of a visit to
/// `current`) to the first offset executed after leaving it.
pub fn find_next_node(cdg: &Cdg, current: NodeId, offsets: &[u32], position: usize) -> Result<NextNode, TraceMismatch> {
    let entry = cdg.nodes[current].start_offset;
    let mut i = position + 1;
    while i < offsets.len() {
        let off = offsets[i] as usize;
        match cdg.classify(off) {
            OffsetClass::Node(n) if n == current && Some(off) != entry => i += 1,
            OffsetClass::Node(n) => {
                if cdg.succ[current].contains(&n) && cdg.nodes[n].start_offset == Some(off) {
                    return Ok(NextNode::Node { node: n, position: i });
                }
                return Err(TraceMismatch { offset: off });
            }
            OffsetClass::Trimmed => return Ok(NextNode::End),
            OffsetClass::Unknown => return Err(TraceMismatch { offset: off }),
        }
    }
    Ok(NextNode::End)
}

/// Builds the trimmed control-dependency graph of the runtime code.
pub fn build_cdg(cfg: &Cfg, abi: &[FunctionAbi]) -> Cdg {
    let raw = BlockGraph::from_cfg(cfg);
    let external: &[usize] = if raw.is_empty() { &[] } else { &[0] };
    let (g0, _) = compactify_cfg(&raw, external);
    let plan = trim::plan(cfg, &g0, abi);

    let mut methods = plan.methods.clone();
    methods.sort_by_key(|&(f, n)| (f.is_none(), f, n));
    let roots: Vec<usize> = methods.iter().map(|&(_, n)| n).collect();
    let keep = g0.reachable_from(&roots, &plan.removed_edges);
    let (g1, map1) = g0.subgraph(&keep, &plan.removed_edges);
    let roots1: Vec<usize> = roots.iter().map(|&r| map1[r].expect("roots are kept")).collect();
    let (g2, map2) = compactify_cfg(&g1, &roots1);
    let roots2: Vec<usize> = roots1.iter().map(|&r| map2[r]).collect();

    let n = g2.len();
    let (start, end) = (n, n + 1);
    let block_start = |b: BlockId| cfg.blocks[b].start_offset;
    let mut nodes: Vec<CdgNode> = g2
        .nodes
        .iter()
        .enumerate()
        .map(|(id, blocks)| CdgNode {
            id,
            merged_blocks: blocks.clone(),
            kind: NodeKind::Normal,
            method: None,
            start_offset: Some(block_start(blocks[0])),
        })
        .collect();
    for (&(f, _), &r) in methods.iter().zip(&roots2) {
        nodes[r].kind = NodeKind::MethodEntry;
        nodes[r].method = f;
    }
    for (id, kind) in [(start, NodeKind::Start), (end, NodeKind::End)] {
        nodes.push(CdgNode {
            id,
            merged_blocks: Vec::new(),
            kind,
            method: None,
            start_offset: None,
        });
    }

    let mut succ = g2.succ.clone();
    for s in succ.iter_mut() {
        if s.is_empty() {
            s.push(end);
        }
    }
    let mut start_succ = Vec::new();
    for &r in &roots2 {
        if !start_succ.contains(&r) {
            start_succ.push(r);
        }
    }
    succ.push(start_succ);
    succ.push(Vec::new());

    let trimmed: Vec<CdgNode> = (0..g0.len())
        .filter(|v| !keep.contains(v))
        .enumerate()
        .map(|(id, v)| CdgNode {
            id,
            merged_blocks: g0.nodes[v].clone(),
            kind: plan.labels.get(&v).copied().unwrap_or(NodeKind::Dispatcher),
            method: None,
            start_offset: Some(block_start(g0.nodes[v][0])),
        })
        .collect();

    // BFS depth from START and the first method reaching each node.
    let mut depth = vec![None; n + 2];
    depth[start] = Some(0);
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &s in &succ[v] {
            if depth[s].is_none() {
                depth[s] = Some(depth[v].unwrap() + 1);
                queue.push_back(s);
            }
        }
    }
    let mut method_of = vec![usize::MAX; n + 2];
    for (m, &r) in roots2.iter().enumerate() {
        let mut stack = vec![r];
        while let Some(v) = stack.pop() {
            if v >= n || method_of[v] != usize::MAX {
                continue;
            }
            method_of[v] = m;
            stack.extend(succ[v].iter().copied());
        }
    }

    let cd = control_dependencies(&succ, end);
    let mut warnings = plan.warnings.clone();
    warnings.extend(cd.disconnected.iter().map(|&node| CdgWarning::DisconnectedGraph { node }));

    // Branch objectives: surviving nodes whose last block is a two-way JUMPI.
    let node_of_block = |b: Option<BlockId>| b.and_then(|b| g2.node_starting_with(b));
    let mut raw_branches = Vec::new();
    for v in 0..n {
        let last = *g2.nodes[v].last().unwrap();
        let Some((t, f)) = cfg.branch_targets(last) else { continue };
        let (Some(t), Some(f)) = (node_of_block(t), node_of_block(f)) else { continue };
        if t == f || !succ[v].contains(&t) || !succ[v].contains(&f) {
            continue;
        }
        let jumpi = cfg.blocks[last].last().offset;
        let pred = cfg.predicate_of.get(&last).copied();
        for (target, pol) in [(t, Polarity::Taken), (f, Polarity::Fallthrough)] {
            raw_branches.push((method_of[v], nodes[v].start_offset.unwrap(), pol, v, target, jumpi, pred));
        }
    }
    raw_branches.sort_by_key(|b| (b.0, b.1, b.2));
    let mut branches: Vec<Branch> = raw_branches
        .into_iter()
        .enumerate()
        .map(|(id, (m, _, polarity, source, target, jumpi_offset, predicate))| Branch {
            id,
            source,
            target,
            polarity,
            predicate,
            control_parent: None,
            jumpi_offset,
            method: m,
        })
        .collect();
    let edge_branch: HashMap<(NodeId, NodeId), BranchId> =
        branches.iter().map(|b| ((b.source, b.target), b.id)).collect();

    let mut node_parent = vec![None; n + 2];
    for v in 0..n {
        let Some(dv) = depth[v] else { continue };
        node_parent[v] = cd.deps[v]
            .iter()
            .filter_map(|&(s, t)| {
                let id = *edge_branch.get(&(s, t))?;
                let ds = depth[s]?;
                (ds < dv).then_some((ds, id))
            })
            .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)))
            .map(|(_, id)| id);
    }
    for b in branches.iter_mut() {
        b.control_parent = node_parent[b.source];
    }

    let code_len = cfg.blocks.last().map(|b| b.end_offset()).unwrap_or(0);
    let mut offset_class = vec![OffsetClass::Unknown; code_len];
    for (v, node) in nodes.iter().enumerate().take(n) {
        for &b in &node.merged_blocks {
            for ins in &cfg.blocks[b].instructions {
                offset_class[ins.offset] = OffsetClass::Node(v);
            }
        }
    }
    for node in &trimmed {
        for &b in &node.merged_blocks {
            for ins in &cfg.blocks[b].instructions {
                offset_class[ins.offset] = OffsetClass::Trimmed;
            }
        }
    }
    let mut sites: Vec<Option<BranchSite>> = vec![None; code_len];
    for b in &branches {
        let last = *nodes[b.source].merged_blocks.last().expect("non-empty");
        let site = sites[b.jumpi_offset].get_or_insert(BranchSite {
            node: b.source,
            branches: [usize::MAX; 2],
            predicate: b.predicate,
            block_len: cfg.blocks[last].instructions.len(),
        });
        site.branches[b.polarity.index()] = b.id;
    }

    Cdg {
        nodes,
        succ,
        branches,
        methods: methods
            .iter()
            .zip(&roots2)
            .map(|(&(function, _), &entry)| Method { function, entry })
            .collect(),
        start,
        end,
        trimmed,
        excluded_functions: plan.excluded_functions,
        ipdom: cd.ipdom,
        node_parent,
        depth,
        warnings,
        offset_class,
        sites,
    }
}

/// The ordered branch objectives of a graph.
pub fn enumerate_branches(cdg: &Cdg) -> Vec<Branch> {
    cdg.branches.clone()
}
