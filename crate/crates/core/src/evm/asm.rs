//! A small two-pass assembler with symbolic jump labels.
//!
//! Used to build fixture contracts and hand-written test programs. Label
//! references are always encoded as PUSH2.

use std::collections::BTreeMap;

use crate::evm::opcode;
use crate::evm::EvmError;
use crate::U256;

#[derive(Debug, Clone)]
enum Item {
    Op(u8),
    Push { value: U256, width: usize },
    PushLabel(String),
    Jumpdest(String),
    Mark(String),
    Data(Vec<u8>),
}

impl Item {
    fn size(&self) -> usize {
        match self {
            Item::Op(_) => 1,
            Item::Push { width, .. } => 1 + width,
            Item::PushLabel(_) => 3,
            Item::Jumpdest(_) => 1,
            Item::Mark(_) => 0,
            Item::Data(d) => d.len(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Assembler {
    items: Vec<Item>,
    fresh: usize,
}

/// Minimal byte width needed to push `value` (at least one byte).
pub fn min_push_width(value: U256) -> usize {
    (value.bits().div_ceil(8)).max(1)
}

impl Assembler {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn op(&mut self, opcode: u8) -> &mut Self {
        self.items.push(Item::Op(opcode));
        self
    }

    pub fn ops(&mut self, opcodes: &[u8]) -> &mut Self {
        for &o in opcodes {
            self.op(o);
        }
        self
    }

    /// Pushes `value` with the narrowest PUSHn.
    pub fn push(&mut self, value: impl Into<U256>) -> &mut Self {
        let value = value.into();
        let width = min_push_width(value);
        self.items.push(Item::Push { value, width });
        self
    }

    pub fn push_n(&mut self, width: usize, value: impl Into<U256>) -> &mut Self {
        assert!((1..=32).contains(&width), "push width {width} out of range");
        self.items.push(Item::Push {
            value: value.into(),
            width,
        });
        self
    }

    pub fn push_label(&mut self, label: &str) -> &mut Self {
        self.items.push(Item::PushLabel(label.to_string()));
        self
    }

    /// Emits a JUMPDEST and binds `label` to it.
    pub fn label(&mut self, label: &str) -> &mut Self {
        self.items.push(Item::Jumpdest(label.to_string()));
        self
    }

    /// Binds `label` to the current offset without emitting code.
    pub fn mark(&mut self, label: &str) -> &mut Self {
        self.items.push(Item::Mark(label.to_string()));
        self
    }

    pub fn data(&mut self, bytes: &[u8]) -> &mut Self {
        self.items.push(Item::Data(bytes.to_vec()));
        self
    }

    pub fn jump(&mut self, label: &str) -> &mut Self {
        self.push_label(label).op(opcode::JUMP)
    }

    pub fn jumpi(&mut self, label: &str) -> &mut Self {
        self.push_label(label).op(opcode::JUMPI)
    }

    /// A label name that has not been handed out before.
    pub fn fresh_label(&mut self, hint: &str) -> String {
        self.fresh += 1;
        format!("{hint}__{}", self.fresh)
    }

    pub fn len(&self) -> usize {
        self.items.iter().map(Item::size).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn assemble(&self) -> Result<Vec<u8>, EvmError> {
        let mut labels = BTreeMap::new();
        let mut pc = 0;
        for item in &self.items {
            if let Item::Jumpdest(name) | Item::Mark(name) = item {
                if labels.insert(name.clone(), pc).is_some() {
                    return Err(EvmError::Assembly(format!("duplicate label `{name}`")));
                }
            }
            pc += item.size();
        }
        let mut out = Vec::with_capacity(pc);
        for item in &self.items {
            match item {
                Item::Op(o) => out.push(*o),
                Item::Push { value, width } => {
                    if min_push_width(*value) > *width && !value.is_zero() {
                        return Err(EvmError::Assembly(format!(
                            "value {value:#x} does not fit in PUSH{width}"
                        )));
                    }
                    out.push(opcode::PUSH1 + (*width as u8) - 1);
                    out.extend_from_slice(&value.to_big_endian()[32 - width..]);
                }
                Item::PushLabel(name) => {
                    let target = *labels
                        .get(name)
                        .ok_or_else(|| EvmError::Assembly(format!("unknown label `{name}`")))?;
                    if target > 0xffff {
                        return Err(EvmError::Assembly(format!("label `{name}` beyond PUSH2")));
                    }
                    out.push(opcode::PUSH2);
                    out.extend_from_slice(&(target as u16).to_be_bytes());
                }
                Item::Jumpdest(_) => out.push(opcode::JUMPDEST),
                Item::Mark(_) => {}
                Item::Data(d) => out.extend_from_slice(d),
            }
        }
        Ok(out)
    }

    /// Parses whitespace-separated assembly text.
    ///
    /// `name:` defines a JUMPDEST label, `PUSHn v` / `PUSH v` push a literal
    /// (decimal or 0x-hex) and `PUSH :name` pushes a label offset.
    pub fn parse(text: &str) -> Result<Self, EvmError> {
        let mut asm = Assembler::new();
        let mut tokens = text
            .lines()
            .map(|l| l.split(';').next().unwrap_or(""))
            .flat_map(str::split_whitespace)
            .peekable();
        while let Some(tok) = tokens.next() {
            if let Some(name) = tok.strip_suffix(':') {
                asm.label(name);
                continue;
            }
            let upper = tok.to_ascii_uppercase();
            if upper == "PUSH" || (upper.starts_with("PUSH") && upper != "PUSH0") {
                let operand = tokens
                    .next()
                    .ok_or_else(|| EvmError::Assembly(format!("`{tok}` needs an operand")))?;
                if let Some(label) = operand.strip_prefix(':') {
                    asm.push_label(label);
                    continue;
                }
                let value = parse_literal(operand)
                    .ok_or_else(|| EvmError::Assembly(format!("bad literal `{operand}`")))?;
                if upper == "PUSH" {
                    asm.push(value);
                } else {
                    let width: usize = upper[4..]
                        .parse()
                        .map_err(|_| EvmError::Assembly(format!("bad mnemonic `{tok}`")))?;
                    asm.push_n(width, value);
                }
                continue;
            }
            let byte = opcode::from_mnemonic(&upper)
                .ok_or_else(|| EvmError::Assembly(format!("unknown mnemonic `{tok}`")))?;
            asm.op(byte);
        }
        Ok(asm)
    }
}

fn parse_literal(s: &str) -> Option<U256> {
    if let Some(hex) = s.strip_prefix("0x") {
        U256::from_str_radix(hex, 16).ok()
    } else {
        U256::from_dec_str(s).ok()
    }
}

/// Assembles text in one step.
pub fn assemble(text: &str) -> Result<Vec<u8>, EvmError> {
    Assembler::parse(text)?.assemble()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_resolve_forward() {
        let code = assemble("PUSH :end JUMP STOP end: STOP").unwrap();
        assert_eq!(code, vec![0x61, 0x00, 0x05, 0x56, 0x00, 0x5b, 0x00]);
    }

    #[test]
    fn explicit_widths() {
        let code = assemble("PUSH4 0xdeadbeef PUSH 0").unwrap();
        assert_eq!(code, vec![0x63, 0xde, 0xad, 0xbe, 0xef, 0x60, 0x00]);
        assert!(assemble("PUSH1 0x100").is_err());
        assert!(assemble("PUSH :nowhere").is_err());
    }
}
