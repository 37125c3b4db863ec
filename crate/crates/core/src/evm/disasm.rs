use std::fmt;

use crate::evm::opcode;
use crate::evm::EvmError;
use crate::U256;

/// One decoded instruction of runtime bytecode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instruction {
    pub offset: usize,
    pub opcode: u8,
    pub mnemonic: &'static str,
    pub push_payload: Option<U256>,
}

impl Instruction {
    /// Encoded length in bytes, opcode included.
    pub fn size(&self) -> usize {
        1 + opcode::push_len(self.opcode)
    }

    pub fn next_offset(&self) -> usize {
        self.offset + self.size()
    }

    pub fn encode_into(&self, out: &mut Vec<u8>) {
        out.push(self.opcode);
        let len = opcode::push_len(self.opcode);
        if len > 0 {
            let word = self.push_payload.unwrap_or_default().to_big_endian();
            out.extend_from_slice(&word[32 - len..]);
        }
    }

    /// Raw payload bytes at their encoded width.
    pub fn payload_bytes(&self) -> Option<Vec<u8>> {
        let len = opcode::push_len(self.opcode);
        self.push_payload
            .map(|p| p.to_big_endian()[32 - len..].to_vec())
    }

    pub fn is_jumpdest(&self) -> bool {
        self.opcode == opcode::JUMPDEST
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.push_payload {
            Some(p) => write!(f, "{:#06x}: {} {:#x}", self.offset, self.mnemonic, p),
            None => write!(f, "{:#06x}: {}", self.offset, self.mnemonic),
        }
    }
}

pub fn disassemble(code: &[u8]) -> Result<Vec<Instruction>, EvmError> {
    if code.is_empty() {
        return Err(EvmError::EmptyBytecode);
    }
    let mut out = Vec::with_capacity(code.len());
    let mut pc = 0;
    while pc < code.len() {
        let byte = code[pc];
        let len = opcode::push_len(byte);
        let push_payload = if len > 0 {
            let end = pc + 1 + len;
            if end > code.len() {
                return Err(EvmError::TruncatedPush {
                    offset: pc,
                    needed: len,
                    available: code.len() - pc - 1,
                });
            }
            Some(U256::from_big_endian(&code[pc + 1..end]))
        } else {
            None
        };
        out.push(Instruction {
            offset: pc,
            opcode: byte,
            mnemonic: opcode::mnemonic(byte),
            push_payload,
        });
        pc += 1 + len;
    }
    Ok(out)
}

pub fn encode(instructions: &[Instruction]) -> Vec<u8> {
    let mut out = Vec::new();
    for ins in instructions {
        ins.encode_into(&mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decodes_push_add() {
        let ins = disassemble(&[0x60, 0x01, 0x60, 0x02, 0x01]).unwrap();
        let summary: Vec<_> = ins
            .iter()
            .map(|i| (i.mnemonic, i.push_payload.map(|p| p.as_u64()), i.offset))
            .collect();
        assert_eq!(
            summary,
            vec![("PUSH1", Some(1), 0), ("PUSH1", Some(2), 2), ("ADD", None, 4)]
        );
    }

    #[test]
    fn decodes_jumpdest() {
        let ins = disassemble(&[0x5b]).unwrap();
        assert_eq!(ins.len(), 1);
        assert_eq!(ins[0].mnemonic, "JUMPDEST");
        assert_eq!(ins[0].offset, 0);
    }

    #[test]
    fn truncated_push_is_an_error() {
        assert!(matches!(
            disassemble(&[0x61]),
            Err(EvmError::TruncatedPush { offset: 0, .. })
        ));
        assert!(matches!(disassemble(&[]), Err(EvmError::EmptyBytecode)));
    }

    #[test]
    fn unknown_bytes_become_invalid() {
        let ins = disassemble(&[0x0c, 0x00]).unwrap();
        assert_eq!(ins[0].mnemonic, "INVALID");
        assert_eq!(ins[0].opcode, 0x0c);
        assert_eq!(encode(&ins), vec![0x0c, 0x00]);
    }

    /// Byte strings whose final PUSH (if any) is complete.
    fn valid_code() -> impl Strategy<Value = Vec<u8>> {
        proptest::collection::vec(any::<u8>(), 1..300).prop_map(|mut code| {
            let mut pc = 0;
            let mut last_ok = 0;
            while pc < code.len() {
                let next = pc + 1 + opcode::push_len(code[pc]);
                if next <= code.len() {
                    last_ok = next;
                }
                pc = next;
            }
            code.truncate(last_ok.max(1));
            if opcode::push_len(code[0]) > 0 && code.len() == 1 {
                code[0] = 0x00;
            }
            code
        })
    }

    proptest! {
        #[test]
        fn round_trip(code in valid_code()) {
            let ins = disassemble(&code).unwrap();
            prop_assert_eq!(encode(&ins), code);
            for pair in ins.windows(2) {
                prop_assert!(pair[0].offset < pair[1].offset);
                prop_assert_eq!(pair[0].next_offset(), pair[1].offset);
            }
            for i in &ins {
                prop_assert_eq!(i.push_payload.is_some(), opcode::is_push(i.opcode));
            }
        }
    }
}
