//! Jump-target recovery by bounded abstract interpretation of the stack.
//!
//! Stack cells are either a known 256-bit constant or unknown. Constants are
//! folded through PUSH/DUP/SWAP/POP and ADD/SUB/AND; everything else yields
//! unknown cells. Exploration is path-sensitive on the abstract entry stack of
//! each block (so return addresses pushed by different callers stay distinct)
//! and bounded by a per-block visit cap.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::ops::Range;

use crate::evm::opcode::{self, *};
use crate::evm::Instruction;
use crate::U256;

pub const DEFAULT_VISIT_CAP: usize = 64;
const MAX_STACK: usize = 1024;

type Cell = Option<U256>;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct JumpTable {
    /// Jump instruction offset to the JUMPDEST offsets it may reach.
    pub targets: BTreeMap<usize, BTreeSet<usize>>,
    /// Jumps whose destination was an unknown cell on some explored path.
    pub unresolved: BTreeSet<usize>,
}

/// Instruction-index ranges of basic blocks: a block starts at index 0, at
/// every JUMPDEST and after every JUMP/JUMPI/terminator.
pub(crate) fn split_blocks(instructions: &[Instruction]) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, ins) in instructions.iter().enumerate() {
        if ins.is_jumpdest() && i > start {
            out.push(start..i);
            start = i;
        }
        if opcode::is_block_end(ins.opcode) {
            out.push(start..i + 1);
            start = i + 1;
        }
    }
    if start < instructions.len() {
        out.push(start..instructions.len());
    }
    out
}

fn pop(stack: &mut Vec<Cell>) -> Cell {
    stack.pop().flatten()
}

fn push(stack: &mut Vec<Cell>, cell: Cell) {
    if stack.len() >= MAX_STACK {
        stack.remove(0);
    }
    stack.push(cell);
}

fn ensure_depth(stack: &mut Vec<Cell>, depth: usize) {
    if stack.len() < depth {
        let missing = depth - stack.len();
        stack.splice(0..0, std::iter::repeat_n(None, missing));
    }
}

/// Applies one non-jump instruction to the abstract stack.
fn transfer(stack: &mut Vec<Cell>, ins: &Instruction) {
    let op = ins.opcode;
    match op {
        _ if opcode::is_push(op) => push(stack, ins.push_payload),
        PUSH0 => push(stack, Some(U256::zero())),
        PC => push(stack, Some(U256::from(ins.offset))),
        POP => {
            pop(stack);
        }
        DUP1..=DUP16 => {
            let n = (op - DUP1 + 1) as usize;
            ensure_depth(stack, n);
            let cell = stack[stack.len() - n];
            push(stack, cell);
        }
        SWAP1..=SWAP16 => {
            let n = (op - SWAP1 + 1) as usize;
            ensure_depth(stack, n + 1);
            let top = stack.len() - 1;
            stack.swap(top, top - n);
        }
        ADD | SUB | AND => {
            let a = pop(stack);
            let b = pop(stack);
            let folded = match (a, b) {
                (Some(a), Some(b)) => Some(match op {
                    ADD => a.overflowing_add(b).0,
                    SUB => a.overflowing_sub(b).0,
                    _ => a & b,
                }),
                _ => None,
            };
            push(stack, folded);
        }
        _ => {
            let (inputs, outputs) = opcode::info(op).map_or((0, 0), |i| (i.inputs, i.outputs));
            for _ in 0..inputs {
                pop(stack);
            }
            for _ in 0..outputs {
                push(stack, None);
            }
        }
    }
}

pub fn resolve_jump_targets(instructions: &[Instruction]) -> JumpTable {
    resolve_jump_targets_with_cap(instructions, DEFAULT_VISIT_CAP)
}

pub fn resolve_jump_targets_with_cap(instructions: &[Instruction], visit_cap: usize) -> JumpTable {
    let mut table = JumpTable::default();
    if instructions.is_empty() {
        return table;
    }
    let blocks = split_blocks(instructions);
    let block_at: BTreeMap<usize, usize> = blocks
        .iter()
        .enumerate()
        .map(|(b, r)| (instructions[r.start].offset, b))
        .collect();
    let is_jumpdest = |offset: usize| {
        block_at
            .get(&offset)
            .is_some_and(|&b| instructions[blocks[b].start].is_jumpdest())
    };

    let mut visits = vec![0usize; blocks.len()];
    let mut seen: HashSet<(usize, Vec<Cell>)> = HashSet::new();
    let mut work: VecDeque<(usize, Vec<Cell>)> = VecDeque::new();
    work.push_back((0, Vec::new()));

    let mut enqueue = |work: &mut VecDeque<(usize, Vec<Cell>)>, block: usize, stack: Vec<Cell>| {
        if seen.insert((block, stack.clone())) {
            work.push_back((block, stack));
        }
    };

    while let Some((b, mut stack)) = work.pop_front() {
        if visits[b] >= visit_cap {
            continue;
        }
        visits[b] += 1;
        let range = blocks[b].clone();
        let last = &instructions[range.end - 1];
        for ins in &instructions[range.start..range.end - 1] {
            transfer(&mut stack, ins);
        }
        let fallthrough = block_at.get(&last.next_offset()).copied();
        match last.opcode {
            JUMP | JUMPI => {
                let dest = pop(&mut stack);
                if last.opcode == JUMPI {
                    pop(&mut stack);
                }
                match dest {
                    Some(d) => {
                        let entry = table.targets.entry(last.offset).or_default();
                        if d <= U256::from(usize::MAX) && is_jumpdest(d.as_usize()) {
                            let d = d.as_usize();
                            entry.insert(d);
                            enqueue(&mut work, block_at[&d], stack.clone());
                        }
                    }
                    None => {
                        table.targets.entry(last.offset).or_default();
                        table.unresolved.insert(last.offset);
                    }
                }
                if last.opcode == JUMPI {
                    if let Some(next) = fallthrough {
                        enqueue(&mut work, next, stack);
                    }
                }
            }
            op if opcode::is_terminator(op) => {}
            _ => {
                transfer(&mut stack, last);
                if let Some(next) = fallthrough {
                    enqueue(&mut work, next, stack);
                }
            }
        }
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evm::{asm::assemble, disassemble};

    fn table(src: &str) -> JumpTable {
        resolve_jump_targets(&disassemble(&assemble(src).unwrap()).unwrap())
    }

    #[test]
    fn constant_target() {
        // offsets: 0 PUSH1, 2 JUMP, 3 STOP, 4 STOP, 5 JUMPDEST
        let t = table("PUSH1 0x05 JUMP STOP STOP JUMPDEST STOP");
        assert_eq!(t.targets[&2], BTreeSet::from([5]));
        assert!(t.unresolved.is_empty());
    }

    #[test]
    fn folded_add_target() {
        // 4 + 2 = 6
        let t = table("PUSH1 4 PUSH1 2 ADD JUMP JUMPDEST STOP");
        assert_eq!(t.targets[&5], BTreeSet::from([6]));
        let code = assemble("PUSH1 4 PUSH1 2 ADD JUMP JUMPDEST STOP").unwrap();
        assert_eq!(code[6], JUMPDEST);
    }

    #[test]
    fn storage_target_is_unresolved() {
        let t = table("PUSH1 0 SLOAD JUMP JUMPDEST STOP");
        assert!(t.unresolved.contains(&3));
    }

    #[test]
    fn return_address_pattern() {
        // Two call sites into a shared subroutine that jumps back to its caller.
        let src = "
            PUSH :ret1 PUSH :sub JUMP
            ret1: PUSH :ret2 PUSH :sub JUMP
            ret2: STOP
            sub: JUMP
        ";
        let code = assemble(src).unwrap();
        let ins = disassemble(&code).unwrap();
        let t = resolve_jump_targets(&ins);
        let sub_jump = ins.last().unwrap().offset;
        assert_eq!(t.targets[&sub_jump].len(), 2);
        assert!(t.unresolved.is_empty());
    }
}
