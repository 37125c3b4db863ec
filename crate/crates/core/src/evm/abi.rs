//! ABI descriptors, value types and call-data encoding.

use std::fmt;
use std::str::FromStr;

use serde::Deserialize;

use crate::evm::selector::compute_selector;
use crate::evm::EvmError;
use crate::types::{hex_encode, signed_to_string};
use crate::{Address, U256};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AbiType {
    Uint(u16),
    Int(u16),
    Bool,
    Address,
    FixedBytes(u8),
    Bytes,
    String,
    Array(Box<AbiType>, Option<usize>),
    Tuple(Vec<AbiType>),
}

impl AbiType {
    pub fn is_dynamic(&self) -> bool {
        match self {
            AbiType::Bytes | AbiType::String => true,
            AbiType::Array(_, None) => true,
            AbiType::Array(inner, Some(_)) => inner.is_dynamic(),
            AbiType::Tuple(items) => items.iter().any(AbiType::is_dynamic),
            _ => false,
        }
    }

    /// Number of bytes the type occupies in the head section.
    fn head_size(&self) -> usize {
        match self {
            t if t.is_dynamic() => 32,
            AbiType::Array(inner, Some(n)) => inner.head_size() * n,
            AbiType::Tuple(items) => items.iter().map(AbiType::head_size).sum(),
            _ => 32,
        }
    }
}

impl fmt::Display for AbiType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbiType::Uint(n) => write!(f, "uint{n}"),
            AbiType::Int(n) => write!(f, "int{n}"),
            AbiType::Bool => write!(f, "bool"),
            AbiType::Address => write!(f, "address"),
            AbiType::FixedBytes(n) => write!(f, "bytes{n}"),
            AbiType::Bytes => write!(f, "bytes"),
            AbiType::String => write!(f, "string"),
            AbiType::Array(inner, Some(n)) => write!(f, "{inner}[{n}]"),
            AbiType::Array(inner, None) => write!(f, "{inner}[]"),
            AbiType::Tuple(items) => {
                write!(f, "(")?;
                for (i, t) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl FromStr for AbiType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(stripped) = s.strip_suffix(']') {
            let open = stripped
                .rfind('[')
                .ok_or_else(|| format!("unbalanced array type `{s}`"))?;
            let inner: AbiType = stripped[..open].parse()?;
            let len = &stripped[open + 1..];
            let len = if len.is_empty() {
                None
            } else {
                Some(
                    len.parse::<usize>()
                        .map_err(|_| format!("bad array length in `{s}`"))?,
                )
            };
            return Ok(AbiType::Array(Box::new(inner), len));
        }
        let width = |digits: &str, default: u16| -> Result<u16, String> {
            if digits.is_empty() {
                return Ok(default);
            }
            let n: u16 = digits.parse().map_err(|_| format!("bad width in `{s}`"))?;
            if n == 0 || n > 256 || n % 8 != 0 {
                return Err(format!("invalid width in `{s}`"));
            }
            Ok(n)
        };
        match s {
            "bool" => Ok(AbiType::Bool),
            "address" => Ok(AbiType::Address),
            "bytes" => Ok(AbiType::Bytes),
            "string" => Ok(AbiType::String),
            "function" => Ok(AbiType::FixedBytes(24)),
            _ => {
                if let Some(rest) = s.strip_prefix("uint") {
                    Ok(AbiType::Uint(width(rest, 256)?))
                } else if let Some(rest) = s.strip_prefix("int") {
                    Ok(AbiType::Int(width(rest, 256)?))
                } else if let Some(rest) = s.strip_prefix("bytes") {
                    let n: u8 = rest.parse().map_err(|_| format!("bad width in `{s}`"))?;
                    if n == 0 || n > 32 {
                        return Err(format!("invalid width in `{s}`"));
                    }
                    Ok(AbiType::FixedBytes(n))
                } else {
                    Err(format!("unsupported type `{s}`"))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StateMutability {
    Pure,
    View,
    #[default]
    NonPayable,
    Payable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionAbi {
    pub name: String,
    pub inputs: Vec<AbiType>,
    pub mutability: StateMutability,
    pub payable: bool,
    pub is_constructor: bool,
    pub is_fallback: bool,
    pub selector: Option<[u8; 4]>,
}

impl FunctionAbi {
    /// Canonical signature, e.g. `transfer(address,uint256)`.
    pub fn signature(&self) -> String {
        let args: Vec<String> = self.inputs.iter().map(ToString::to_string).collect();
        format!("{}({})", self.name, args.join(","))
    }

    pub fn is_view(&self) -> bool {
        matches!(self.mutability, StateMutability::View | StateMutability::Pure)
    }

    pub fn selector_word(&self) -> Option<U256> {
        self.selector.map(|s| U256::from_big_endian(&s))
    }
}

#[derive(Deserialize)]
struct RawParam {
    #[serde(rename = "type")]
    ty: String,
    #[serde(default)]
    components: Vec<RawParam>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct RawEntry {
    #[serde(rename = "type", default = "default_kind")]
    kind: String,
    #[serde(default)]
    name: String,
    #[serde(default)]
    inputs: Vec<RawParam>,
    state_mutability: Option<String>,
    payable: Option<bool>,
    constant: Option<bool>,
}

fn default_kind() -> String {
    "function".to_string()
}

fn param_type(p: &RawParam) -> Result<AbiType, String> {
    if let Some(suffix) = p.ty.strip_prefix("tuple") {
        let items = p
            .components
            .iter()
            .map(param_type)
            .collect::<Result<Vec<_>, _>>()?;
        let mut ty = AbiType::Tuple(items);
        // Array suffixes apply outermost-last: tuple[2][] is an array of tuple[2].
        let mut rest = suffix;
        while let Some(open) = rest.strip_prefix('[') {
            let close = open.find(']').ok_or("unbalanced tuple array")?;
            let len = &open[..close];
            let len = if len.is_empty() {
                None
            } else {
                Some(len.parse().map_err(|_| "bad tuple array length")?)
            };
            ty = AbiType::Array(Box::new(ty), len);
            rest = &open[close + 1..];
        }
        return Ok(ty);
    }
    p.ty.parse()
}

/// Parses a compiler-emitted ABI document (a JSON array of entries).
///
/// Events, errors and `receive` entries are skipped.
pub fn parse_abi(document: &str) -> Result<Vec<FunctionAbi>, EvmError> {
    let entries: Vec<RawEntry> = serde_json::from_str(document).map_err(|e| EvmError::MalformedAbi {
        index: None,
        reason: e.to_string(),
    })?;
    let mut out = Vec::new();
    for (index, entry) in entries.iter().enumerate() {
        let malformed = |reason: String| EvmError::MalformedAbi {
            index: Some(index),
            reason,
        };
        let (is_constructor, is_fallback) = match entry.kind.as_str() {
            "function" => (false, false),
            "constructor" => (true, false),
            "fallback" => (false, true),
            "event" | "error" | "receive" => continue,
            other => return Err(malformed(format!("unknown entry kind `{other}`"))),
        };
        let inputs = entry
            .inputs
            .iter()
            .map(param_type)
            .collect::<Result<Vec<_>, _>>()
            .map_err(malformed)?;
        let mutability = match entry.state_mutability.as_deref() {
            Some("pure") => StateMutability::Pure,
            Some("view") => StateMutability::View,
            Some("payable") => StateMutability::Payable,
            Some("nonpayable") => StateMutability::NonPayable,
            Some(other) => return Err(malformed(format!("unknown stateMutability `{other}`"))),
            None if entry.payable == Some(true) => StateMutability::Payable,
            None if entry.constant == Some(true) => StateMutability::View,
            None => StateMutability::NonPayable,
        };
        let mut f = FunctionAbi {
            name: entry.name.clone(),
            inputs,
            mutability,
            payable: mutability == StateMutability::Payable,
            is_constructor,
            is_fallback,
            selector: None,
        };
        if !is_constructor && !is_fallback {
            if f.name.is_empty() {
                return Err(malformed("function entry without a name".into()));
            }
            f.selector = Some(compute_selector(&f.signature()));
        }
        out.push(f);
    }
    if out.iter().filter(|f| f.is_constructor).count() > 1 {
        return Err(EvmError::MalformedAbi {
            index: None,
            reason: "more than one constructor".into(),
        });
    }
    if out.iter().filter(|f| f.is_fallback).count() > 1 {
        return Err(EvmError::MalformedAbi {
            index: None,
            reason: "more than one fallback".into(),
        });
    }
    Ok(out)
}

/// A concrete argument value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AbiValue {
    Uint(U256),
    /// Two's-complement 256-bit representation.
    Int(U256),
    Bool(bool),
    Address(Address),
    FixedBytes(Vec<u8>),
    Bytes(Vec<u8>),
    String(String),
    Array(Vec<AbiValue>),
}

impl fmt::Display for AbiValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbiValue::Uint(v) => write!(f, "{v}"),
            AbiValue::Int(v) => write!(f, "{}", signed_to_string(*v)),
            AbiValue::Bool(b) => write!(f, "{b}"),
            AbiValue::Address(a) => write!(f, "{a}"),
            AbiValue::FixedBytes(b) | AbiValue::Bytes(b) => write!(f, "{}", hex_encode(b)),
            AbiValue::String(s) => {
                write!(f, "{}", serde_json::to_string(s).map_err(|_| fmt::Error)?)
            }
            AbiValue::Array(items) => {
                write!(f, "[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "]")
            }
        }
    }
}

fn word(v: U256) -> [u8; 32] {
    v.to_big_endian()
}

fn padded(bytes: &[u8]) -> Vec<u8> {
    let mut out = bytes.to_vec();
    let rem = out.len() % 32;
    if rem != 0 {
        out.resize(out.len() + 32 - rem, 0);
    }
    out
}

fn encode_value(ty: &AbiType, value: &AbiValue) -> Result<Vec<u8>, EvmError> {
    let mismatch = || EvmError::Encoding(format!("value {value} does not match type {ty}"));
    Ok(match (ty, value) {
        (AbiType::Uint(_), AbiValue::Uint(v)) | (AbiType::Int(_), AbiValue::Int(v)) => {
            word(*v).to_vec()
        }
        (AbiType::Bool, AbiValue::Bool(b)) => word(U256::from(*b as u8)).to_vec(),
        (AbiType::Address, AbiValue::Address(a)) => word(a.to_word()).to_vec(),
        (AbiType::FixedBytes(n), AbiValue::FixedBytes(b)) if b.len() == *n as usize => padded(b),
        (AbiType::Bytes, AbiValue::Bytes(b)) => {
            let mut out = word(U256::from(b.len())).to_vec();
            out.extend(padded(b));
            out
        }
        (AbiType::String, AbiValue::String(s)) => {
            let mut out = word(U256::from(s.len())).to_vec();
            out.extend(padded(s.as_bytes()));
            out
        }
        (AbiType::Array(inner, len), AbiValue::Array(items)) => {
            if let Some(n) = len {
                if items.len() != *n {
                    return Err(mismatch());
                }
            }
            let types = vec![(**inner).clone(); items.len()];
            let body = encode_sequence(&types, items)?;
            if len.is_none() {
                let mut out = word(U256::from(items.len())).to_vec();
                out.extend(body);
                out
            } else {
                body
            }
        }
        _ => return Err(mismatch()),
    })
}

fn encode_sequence(types: &[AbiType], values: &[AbiValue]) -> Result<Vec<u8>, EvmError> {
    if types.len() != values.len() {
        return Err(EvmError::Encoding(format!(
            "expected {} values, got {}",
            types.len(),
            values.len()
        )));
    }
    let head_len: usize = types.iter().map(AbiType::head_size).sum();
    let mut head = Vec::with_capacity(head_len);
    let mut tail = Vec::new();
    for (ty, value) in types.iter().zip(values) {
        let encoded = encode_value(ty, value)?;
        if ty.is_dynamic() {
            head.extend(word(U256::from(head_len + tail.len())));
            tail.extend(encoded);
        } else {
            head.extend(encoded);
        }
    }
    head.extend(tail);
    Ok(head)
}

/// Standard head/tail encoding of an argument list.
pub fn encode_args(types: &[AbiType], values: &[AbiValue]) -> Result<Vec<u8>, EvmError> {
    encode_sequence(types, values)
}

/// Selector followed by encoded arguments; empty for the fallback.
pub fn encode_call(function: &FunctionAbi, values: &[AbiValue]) -> Result<Vec<u8>, EvmError> {
    if function.is_fallback {
        return Ok(Vec::new());
    }
    let selector = function
        .selector
        .ok_or_else(|| EvmError::Encoding(format!("`{}` has no selector", function.name)))?;
    let mut out = selector.to_vec();
    out.extend(encode_args(&function.inputs, values)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn payable_function_without_type_field() {
        let abi = parse_abi(r#"[{"name":"Bid","inputs":[],"stateMutability":"payable"}]"#).unwrap();
        assert_eq!(abi.len(), 1);
        assert_eq!(abi[0].name, "Bid");
        assert!(abi[0].payable);
        assert!(!abi[0].is_constructor);
        assert!(abi[0].selector.is_some());
    }

    #[test]
    fn constructor_has_no_selector() {
        let abi = parse_abi(
            r#"[{"type":"constructor","inputs":[{"name":"t","type":"uint256"}],"stateMutability":"nonpayable"}]"#,
        )
        .unwrap();
        assert!(abi[0].is_constructor);
        assert_eq!(abi[0].selector, None);
        assert_eq!(abi[0].inputs, vec![AbiType::Uint(256)]);
    }

    #[test]
    fn invalid_width_is_malformed() {
        let err = parse_abi(r#"[{"type":"function","name":"f","inputs":[{"type":"uint257"}]}]"#)
            .unwrap_err();
        assert!(matches!(err, EvmError::MalformedAbi { index: Some(0), .. }));
        let err = parse_abi(r#"[{"type":"function","name":"f"},{"type":"wat","name":"g"}]"#)
            .unwrap_err();
        assert!(matches!(err, EvmError::MalformedAbi { index: Some(1), .. }));
    }

    #[test]
    fn legacy_flags_and_skipped_entries() {
        let abi = parse_abi(
            r#"[{"type":"function","name":"x","inputs":[],"constant":true,"payable":false},
                {"type":"event","name":"E","inputs":[]},
                {"type":"fallback","payable":true}]"#,
        )
        .unwrap();
        assert_eq!(abi.len(), 2);
        assert!(abi[0].is_view());
        assert!(abi[1].is_fallback && abi[1].payable);
    }

    #[test]
    fn type_parsing() {
        assert_eq!("uint".parse::<AbiType>().unwrap(), AbiType::Uint(256));
        assert_eq!(
            "address[3][]".parse::<AbiType>().unwrap(),
            AbiType::Array(
                Box::new(AbiType::Array(Box::new(AbiType::Address), Some(3))),
                None
            )
        );
        assert!("bytes33".parse::<AbiType>().is_err());
        assert!("int7".parse::<AbiType>().is_err());
    }

    #[test]
    fn encodes_static_and_dynamic() {
        let encoded = encode_args(
            &[AbiType::Uint(256), AbiType::Bytes],
            &[AbiValue::Uint(U256::from(5)), AbiValue::Bytes(vec![0xab])],
        )
        .unwrap();
        assert_eq!(encoded.len(), 32 * 4);
        assert_eq!(encoded[31], 5);
        assert_eq!(encoded[63], 0x40);
        assert_eq!(encoded[95], 1);
        assert_eq!(encoded[96], 0xab);
    }
}
