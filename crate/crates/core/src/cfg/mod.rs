//! Basic-block control-flow graph recovered from runtime bytecode.

mod dump;
pub mod jumps;
mod predicate;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use crate::evm::opcode::{self, JUMP, JUMPI};
use crate::evm::Instruction;

pub use dump::{cfg_to_dot, cfg_to_json};
pub use jumps::{resolve_jump_targets, resolve_jump_targets_with_cap, JumpTable, DEFAULT_VISIT_CAP};
pub use predicate::{predicate_of_block, Predicate, PredicateKind};

pub type BlockId = usize;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize)]
pub enum CfgError {
    #[error("jump at offset {offset} has an unresolvable destination")]
    UnresolvableJump { offset: usize },
    #[error("block {block} does not end in JUMPI")]
    NotBranching { block: BlockId },
    #[error("condition of the JUMPI in block {block} is not a relational predicate")]
    NoPredicate { block: BlockId },
}

#[derive(Debug, Clone)]
pub struct BasicBlock {
    pub id: BlockId,
    pub start_offset: usize,
    pub instructions: Vec<Instruction>,
    /// For JUMPI blocks: jump targets first, fall-through last.
    pub successors: Vec<BlockId>,
    pub predecessors: Vec<BlockId>,
    pub reachable: bool,
    pub unresolved_jump: bool,
}

impl BasicBlock {
    pub fn last(&self) -> &Instruction {
        self.instructions.last().expect("blocks are non-empty")
    }

    pub fn end_offset(&self) -> usize {
        self.last().next_offset()
    }

    pub fn is_branching(&self) -> bool {
        self.last().opcode == JUMPI
    }

    pub fn contains(&self, offset: usize) -> bool {
        offset >= self.start_offset && offset < self.end_offset()
    }
}

#[derive(Debug, Clone)]
pub struct Cfg {
    pub blocks: Vec<BasicBlock>,
    pub entry: BlockId,
    pub predicate_of: BTreeMap<BlockId, Predicate>,
    pub jump_targets: JumpTable,
    /// Non-fatal problems found while building (unresolved jumps).
    pub warnings: Vec<CfgError>,
}

impl Cfg {
    /// Block containing the instruction at `offset`.
    pub fn block_at(&self, offset: usize) -> Option<BlockId> {
        let idx = self
            .blocks
            .partition_point(|b| b.start_offset <= offset)
            .checked_sub(1)?;
        self.blocks[idx].contains(offset).then_some(idx)
    }

    /// Block starting exactly at `offset`.
    pub fn block_starting_at(&self, offset: usize) -> Option<BlockId> {
        let id = self.block_at(offset)?;
        (self.blocks[id].start_offset == offset).then_some(id)
    }

    pub fn reachable_blocks(&self) -> impl Iterator<Item = &BasicBlock> {
        self.blocks.iter().filter(|b| b.reachable)
    }

    /// The jump-taken successor of a JUMPI block and its fall-through.
    pub fn branch_targets(&self, block: BlockId) -> Option<(Option<BlockId>, Option<BlockId>)> {
        let b = &self.blocks[block];
        if !b.is_branching() {
            return None;
        }
        let fall = self.block_starting_at(b.end_offset());
        let taken = b.successors.iter().copied().find(|&s| Some(s) != fall);
        Some((taken, fall))
    }
}

/// Predicate for a branching block, or why there is none.
pub fn identify_predicate(cfg: &Cfg, block: BlockId) -> Result<Predicate, CfgError> {
    let b = &cfg.blocks[block];
    if !b.is_branching() {
        return Err(CfgError::NotBranching { block });
    }
    predicate_of_block(&b.instructions).ok_or(CfgError::NoPredicate { block })
}

pub fn build_cfg(instructions: &[Instruction]) -> Cfg {
    build_cfg_with_cap(instructions, DEFAULT_VISIT_CAP)
}

pub fn build_cfg_with_cap(instructions: &[Instruction], visit_cap: usize) -> Cfg {
    let jump_targets = resolve_jump_targets_with_cap(instructions, visit_cap);
    let ranges = jumps::split_blocks(instructions);
    let mut blocks: Vec<BasicBlock> = ranges
        .iter()
        .enumerate()
        .map(|(id, r)| BasicBlock {
            id,
            start_offset: instructions[r.start].offset,
            instructions: instructions[r.clone()].to_vec(),
            successors: Vec::new(),
            predecessors: Vec::new(),
            reachable: false,
            unresolved_jump: false,
        })
        .collect();
    let start_index: BTreeMap<usize, BlockId> =
        blocks.iter().map(|b| (b.start_offset, b.id)).collect();

    let mut warnings = Vec::new();
    for id in 0..blocks.len() {
        let last = blocks[id].last().clone();
        let mut succ = Vec::new();
        if last.opcode == JUMP || last.opcode == JUMPI {
            if let Some(targets) = jump_targets.targets.get(&last.offset) {
                succ.extend(targets.iter().filter_map(|t| start_index.get(t).copied()));
            }
            if jump_targets.unresolved.contains(&last.offset) {
                blocks[id].unresolved_jump = true;
                warnings.push(CfgError::UnresolvableJump {
                    offset: last.offset,
                });
            }
        }
        let falls_through = last.opcode == JUMPI
            || (last.opcode != JUMP && !opcode::is_terminator(last.opcode));
        if falls_through {
            if let Some(&next) = start_index.get(&last.next_offset()) {
                if !succ.contains(&next) {
                    succ.push(next);
                }
            }
        }
        blocks[id].successors = succ;
    }
    for id in 0..blocks.len() {
        for s in blocks[id].successors.clone() {
            blocks[s].predecessors.push(id);
        }
    }

    let mut queue = VecDeque::from([0usize]);
    let mut seen = BTreeSet::from([0usize]);
    while let Some(b) = queue.pop_front() {
        blocks[b].reachable = true;
        for &s in &blocks[b].successors {
            if seen.insert(s) {
                queue.push_back(s);
            }
        }
    }

    let predicate_of = blocks
        .iter()
        .filter(|b| b.reachable && b.is_branching())
        .filter_map(|b| predicate_of_block(&b.instructions).map(|p| (b.id, p)))
        .collect();

    Cfg {
        blocks,
        entry: 0,
        predicate_of,
        jump_targets,
        warnings,
    }
}
