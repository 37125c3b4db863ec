use std::collections::HashSet;
use std::hash::Hash;

use crate::evm::Instruction;
use crate::{Address, U256};

/// Hard-coded values lifted from PUSH payloads, grouped by the ABI type
/// family they can seed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConstantPools {
    pub uints: Vec<U256>,
    /// Two's-complement words.
    pub ints: Vec<U256>,
    pub addresses: Vec<Address>,
    pub bytes: Vec<Vec<u8>>,
    pub bools: Vec<bool>,
}

impl ConstantPools {
    pub fn is_empty(&self) -> bool {
        self.uints.is_empty()
            && self.ints.is_empty()
            && self.addresses.is_empty()
            && self.bytes.is_empty()
            && self.bools.is_empty()
    }

    /// Adds every value of `other` not already present.
    pub fn merge(&mut self, other: &ConstantPools) {
        extend_unique(&mut self.uints, &other.uints);
        extend_unique(&mut self.ints, &other.ints);
        extend_unique(&mut self.addresses, &other.addresses);
        extend_unique(&mut self.bytes, &other.bytes);
        extend_unique(&mut self.bools, &other.bools);
    }
}

fn extend_unique<T: Clone + Eq + Hash>(into: &mut Vec<T>, from: &[T]) {
    let mut seen: HashSet<T> = into.iter().cloned().collect();
    for v in from {
        if seen.insert(v.clone()) {
            into.push(v.clone());
        }
    }
}

/// Classifies every PUSH payload into the pools, first occurrence order.
///
/// Bytecode carries no types, so 20-byte payloads land in both the address
/// and the unsigned pool, and every payload is also offered as a signed word.
pub fn scrape_constants(instructions: &[Instruction]) -> ConstantPools {
    let mut pools = ConstantPools::default();
    let mut uints = Vec::new();
    let mut addresses = Vec::new();
    let mut bytes = Vec::new();
    let mut bools = Vec::new();
    for ins in instructions {
        let (Some(value), Some(raw)) = (ins.push_payload, ins.payload_bytes()) else {
            continue;
        };
        uints.push(value);
        if raw.len() == 20 {
            addresses.push(Address::from_word(value));
        }
        if value <= U256::one() {
            bools.push(value == U256::one());
        }
        bytes.push(raw);
    }
    extend_unique(&mut pools.uints, &uints);
    extend_unique(&mut pools.ints, &uints);
    extend_unique(&mut pools.addresses, &addresses);
    extend_unique(&mut pools.bytes, &bytes);
    extend_unique(&mut pools.bools, &bools);
    pools
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evm::{asm::assemble, disassemble};

    #[test]
    fn push4_lands_in_uint_pool() {
        let code = assemble("PUSH4 0xdeadbeef POP STOP").unwrap();
        let pools = scrape_constants(&disassemble(&code).unwrap());
        assert!(pools.uints.contains(&U256::from(0xdead_beefu64)));
        assert!(pools.addresses.is_empty());
    }

    #[test]
    fn no_pushes_no_values() {
        let code = assemble("CALLER CALLVALUE ADD POP STOP").unwrap();
        assert!(scrape_constants(&disassemble(&code).unwrap()).is_empty());
    }

    #[test]
    fn push20_dual_classified() {
        let v = "0x1122334455667788990011223344556677889900";
        let code = assemble(&format!("PUSH20 {v} POP PUSH20 {v} POP")).unwrap();
        let pools = scrape_constants(&disassemble(&code).unwrap());
        let addr: Address = v.parse().unwrap();
        assert_eq!(pools.addresses, vec![addr]);
        assert_eq!(pools.uints, vec![addr.to_word()]);
    }
}
