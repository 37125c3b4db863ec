use serde::Serialize;

use crate::evm::opcode::{self, *};
use crate::evm::Instruction;

/// Relational opcode that controls a conditional jump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PredicateKind {
    Lt,
    Gt,
    Slt,
    Sgt,
    Eq,
    IsZero,
}

impl PredicateKind {
    pub fn from_opcode(op: u8) -> Option<Self> {
        Some(match op {
            LT => PredicateKind::Lt,
            GT => PredicateKind::Gt,
            SLT => PredicateKind::Slt,
            SGT => PredicateKind::Sgt,
            EQ => PredicateKind::Eq,
            ISZERO => PredicateKind::IsZero,
            _ => return None,
        })
    }

    pub fn mnemonic(self) -> &'static str {
        match self {
            PredicateKind::Lt => "LT",
            PredicateKind::Gt => "GT",
            PredicateKind::Slt => "SLT",
            PredicateKind::Sgt => "SGT",
            PredicateKind::Eq => "EQ",
            PredicateKind::IsZero => "ISZERO",
        }
    }

    pub fn is_signed(self) -> bool {
        matches!(self, PredicateKind::Slt | PredicateKind::Sgt)
    }
}

/// The comparison feeding a JUMPI condition, with the number of ISZERO
/// negations layered on top of it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Predicate {
    pub kind: PredicateKind,
    pub negations: u32,
    pub comparison_offset: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Source {
    /// Value present on block entry.
    Entry,
    /// Produced by the instruction at this index within the block.
    Produced(usize),
}

/// Finds the predicate for a block that ends in JUMPI.
///
/// Walks intra-block stack provenance from the JUMPI condition operand back
/// through ISZERO chains to the producing comparison. Returns `None` when the
/// condition is not produced by a comparison or ISZERO inside the block.
pub fn predicate_of_block(instructions: &[Instruction]) -> Option<Predicate> {
    let last = instructions.last()?;
    if last.opcode != JUMPI {
        return None;
    }
    let mut stack: Vec<Source> = Vec::new();
    let mut operands: Vec<Vec<Source>> = Vec::with_capacity(instructions.len());
    for (idx, ins) in instructions.iter().enumerate() {
        let op = ins.opcode;
        let take = |stack: &mut Vec<Source>, n: usize| -> Vec<Source> {
            (0..n).map(|_| stack.pop().unwrap_or(Source::Entry)).collect()
        };
        match op {
            DUP1..=DUP16 => {
                let n = (op - DUP1 + 1) as usize;
                let src = if stack.len() >= n { stack[stack.len() - n] } else { Source::Entry };
                operands.push(vec![src]);
                stack.push(src);
            }
            SWAP1..=SWAP16 => {
                let n = (op - SWAP1 + 1) as usize;
                while stack.len() < n + 1 {
                    stack.insert(0, Source::Entry);
                }
                let top = stack.len() - 1;
                stack.swap(top, top - n);
                operands.push(Vec::new());
            }
            _ => {
                let (inputs, outputs) = opcode::info(op).map_or((0, 0), |i| (i.inputs, i.outputs));
                operands.push(take(&mut stack, inputs as usize));
                for _ in 0..outputs {
                    stack.push(Source::Produced(idx));
                }
            }
        }
    }
    // JUMPI operands: [dest, condition].
    let mut cond = *operands.last()?.get(1)?;
    let mut negations = 0u32;
    let mut innermost_iszero = None;
    loop {
        let Source::Produced(idx) = cond else { break };
        let ins = &instructions[idx];
        match ins.opcode {
            ISZERO => {
                negations += 1;
                innermost_iszero = Some(idx);
                cond = operands[idx][0];
            }
            op => {
                if let Some(kind) = PredicateKind::from_opcode(op) {
                    return Some(Predicate {
                        kind,
                        negations,
                        comparison_offset: ins.offset,
                    });
                }
                break;
            }
        }
    }
    innermost_iszero.map(|idx| Predicate {
        kind: PredicateKind::IsZero,
        negations: negations - 1,
        comparison_offset: instructions[idx].offset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evm::{asm::assemble, disassemble};

    fn pred(src: &str) -> Option<Predicate> {
        predicate_of_block(&disassemble(&assemble(src).unwrap()).unwrap())
    }

    #[test]
    fn negated_gt() {
        let p = pred("PUSH1 1 PUSH1 2 GT ISZERO PUSH1 0x20 JUMPI").unwrap();
        assert_eq!(p.kind, PredicateKind::Gt);
        assert_eq!(p.negations, 1);
        assert_eq!(p.comparison_offset, 4);
    }

    #[test]
    fn plain_eq() {
        let p = pred("PUSH1 1 PUSH1 2 EQ PUSH1 0x20 JUMPI").unwrap();
        assert_eq!((p.kind, p.negations), (PredicateKind::Eq, 0));
    }

    #[test]
    fn calldata_condition_has_no_predicate() {
        assert_eq!(pred("PUSH1 4 CALLDATALOAD PUSH1 0x20 JUMPI"), None);
    }

    #[test]
    fn bare_iszero_chain() {
        let p = pred("CALLVALUE DUP1 ISZERO PUSH1 0x20 JUMPI").unwrap();
        assert_eq!((p.kind, p.negations, p.comparison_offset), (PredicateKind::IsZero, 0, 2));
        let p = pred("CALLVALUE ISZERO ISZERO ISZERO PUSH1 0x20 JUMPI").unwrap();
        assert_eq!((p.kind, p.negations, p.comparison_offset), (PredicateKind::IsZero, 2, 1));
    }

    #[test]
    fn through_dup_and_swap() {
        let p = pred("PUSH1 1 PUSH1 2 LT PUSH1 7 SWAP1 PUSH1 0x20 SWAP1 SWAP2 POP JUMPI").unwrap();
        assert_eq!(p.kind, PredicateKind::Lt);
    }
}
