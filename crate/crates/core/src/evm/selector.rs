use crate::keccak256;

/// First four bytes of keccak-256 over the canonical signature text.
pub fn compute_selector(signature: &str) -> [u8; 4] {
    let hash = keccak256(signature.as_bytes());
    [hash[0], hash[1], hash[2], hash[3]]
}

/// Parses `solc --hashes` output (`a9059cbb: transfer(address,uint256)` per line).
pub fn parse_signature_file(text: &str) -> Vec<(String, [u8; 4])> {
    text.lines()
        .filter_map(|line| {
            let (hex, sig) = line.split_once(':')?;
            let bytes = crate::types::hex_decode(hex.trim())?;
            let sel: [u8; 4] = bytes.try_into().ok()?;
            Some((sig.trim().to_string(), sel))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        assert_eq!(compute_selector("Bid()"), compute_selector("Bid()"));
        assert_ne!(compute_selector("Bid()"), compute_selector("Claim()"));
    }

    #[test]
    fn signature_file() {
        let parsed = parse_signature_file("a9059cbb: transfer(address,uint256)\n\njunk\n");
        assert_eq!(parsed, vec![("transfer(address,uint256)".to_string(), [0xa9, 0x05, 0x9c, 0xbb])]);
    }
}
