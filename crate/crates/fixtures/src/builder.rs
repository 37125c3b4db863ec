//! Compiler-shaped contract layout: a selector dispatcher in front of one
//! self-contained region per external function, and deploy code that
//! copies constructor arguments from the end of the init code.

use evmgen_core::evm::asm::Assembler;
use evmgen_core::evm::compute_selector;
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutability {
    View,
    NonPayable,
    Payable,
}

impl Mutability {
    fn as_str(self) -> &'static str {
        match self {
            Mutability::View => "view",
            Mutability::NonPayable => "nonpayable",
            Mutability::Payable => "payable",
        }
    }
}

pub struct Function {
    pub name: &'static str,
    pub inputs: Vec<(&'static str, &'static str)>,
    pub outputs: Vec<&'static str>,
    pub mutability: Mutability,
    /// Assembly text; labels must be unique within the contract.
    pub body: String,
}

impl Function {
    pub fn new(name: &'static str, mutability: Mutability, body: impl Into<String>) -> Self {
        Function {
            name,
            inputs: Vec::new(),
            outputs: Vec::new(),
            mutability,
            body: body.into(),
        }
    }

    pub fn inputs(mut self, inputs: &[(&'static str, &'static str)]) -> Self {
        self.inputs = inputs.to_vec();
        self
    }

    pub fn outputs(mut self, outputs: &[&'static str]) -> Self {
        self.outputs = outputs.to_vec();
        self
    }

    /// A public state-variable getter reading `slot`.
    pub fn getter(name: &'static str, ty: &'static str, slot: u8) -> Self {
        Function::new(name, Mutability::View, format!("PUSH1 {slot} SLOAD {RETURN_WORD}")).outputs(&[ty])
    }

    pub fn signature(&self) -> String {
        let types: Vec<&str> = self.inputs.iter().map(|(_, t)| *t).collect();
        format!("{}({})", self.name, types.join(","))
    }

    pub fn selector(&self) -> u32 {
        u32::from_be_bytes(compute_selector(&self.signature()))
    }
}

pub struct Constructor {
    pub inputs: Vec<(&'static str, &'static str)>,
    pub payable: bool,
    /// Arguments are available as words at memory 0x80, 0xa0, ...
    pub body: String,
}

pub struct Fallback {
    pub payable: bool,
    pub body: String,
}

pub struct Contract {
    pub name: &'static str,
    pub constructor: Option<Constructor>,
    pub functions: Vec<Function>,
    pub fallback: Option<Fallback>,
    /// Reject value ahead of the dispatcher instead of per function.
    pub global_value_check: bool,
}

/// Returns the word on top of the stack.
pub const RETURN_WORD: &str = "PUSH1 0 MSTORE PUSH1 0x20 PUSH1 0 RETURN";
pub const REVERT: &str = "PUSH1 0 DUP1 REVERT";

/// Storage slot of `mapping[key]` with the key on top of the stack.
pub fn mapping_slot(slot: u8) -> String {
    format!("PUSH1 0 MSTORE PUSH1 {slot} PUSH1 0x20 MSTORE PUSH1 0x40 PUSH1 0 SHA3")
}

/// `require` on the condition at the top of the stack.
pub fn require(label: &str) -> String {
    format!("PUSH :{label} JUMPI {REVERT} {label}:")
}

fn value_check(label: &str) -> String {
    format!("CALLVALUE DUP1 ISZERO PUSH :{label} JUMPI {REVERT} {label}: POP")
}

/// Plain-text pieces of one compiled contract.
pub struct Compiled {
    pub runtime: Vec<u8>,
    pub deploy: Vec<u8>,
    pub abi: String,
    pub signatures: String,
}

impl Contract {
    fn runtime_source(&self) -> String {
        let mut src = String::from("PUSH1 0x80 PUSH1 0x40 MSTORE\n");
        if self.global_value_check {
            src += &value_check("value_ok");
            src.push('\n');
        }
        src += "PUSH1 4 CALLDATASIZE LT PUSH :fallback JUMPI\n";
        src += "PUSH1 0 CALLDATALOAD PUSH1 0xe0 SHR\n";
        let mut sorted: Vec<&Function> = self.functions.iter().collect();
        sorted.sort_by_key(|f| f.selector());
        for f in &sorted {
            src += &format!("DUP1 PUSH4 {:#010x} EQ PUSH :fn_{} JUMPI\n", f.selector(), f.name);
        }
        src += "fallback:\n";
        match &self.fallback {
            Some(fb) => {
                if !fb.payable && !self.global_value_check {
                    src += &value_check("fallback_value_ok");
                    src.push('\n');
                }
                src += &fb.body;
            }
            None => src += REVERT,
        }
        src.push('\n');
        for f in &self.functions {
            src += &format!("fn_{}:\n", f.name);
            if f.mutability != Mutability::Payable && !self.global_value_check {
                src += &value_check(&format!("{}_value_ok", f.name));
                src.push('\n');
            }
            src += &f.body;
            src.push('\n');
        }
        src
    }

    fn deploy_code(&self, runtime: &[u8]) -> Vec<u8> {
        let mut src = String::from("PUSH1 0x80 PUSH1 0x40 MSTORE\n");
        if let Some(c) = &self.constructor {
            if !c.payable {
                src += &value_check("ctor_value_ok");
                src.push('\n');
            }
            if !c.inputs.is_empty() {
                src += &format!("PUSH1 {:#x} PUSH :args PUSH1 0x80 CODECOPY\n", 32 * c.inputs.len());
            }
            src += &c.body;
            src.push('\n');
        }
        let mut asm = Assembler::parse(&src).expect("constructor assembly");
        asm.push_n(2, runtime.len() as u64)
            .op(evmgen_core::evm::opcode::DUP1)
            .push_label("runtime")
            .push(0u64)
            .op(evmgen_core::evm::opcode::CODECOPY)
            .push(0u64)
            .op(evmgen_core::evm::opcode::RETURN)
            .op(evmgen_core::evm::opcode::INVALID)
            .mark("runtime")
            .data(runtime)
            .mark("args");
        asm.assemble().expect("deploy assembly")
    }

    fn abi_json(&self) -> Value {
        let params = |ps: &[(&str, &str)]| -> Vec<Value> {
            ps.iter().map(|(n, t)| json!({"internalType": t, "name": n, "type": t})).collect()
        };
        let mut entries = Vec::new();
        if let Some(c) = &self.constructor {
            entries.push(json!({
                "inputs": params(&c.inputs),
                "payable": c.payable,
                "stateMutability": if c.payable { "payable" } else { "nonpayable" },
                "type": "constructor"
            }));
        }
        if let Some(fb) = &self.fallback {
            entries.push(json!({
                "payable": fb.payable,
                "stateMutability": if fb.payable { "payable" } else { "nonpayable" },
                "type": "fallback"
            }));
        }
        for f in &self.functions {
            let outputs: Vec<Value> = f.outputs.iter().map(|t| json!({"internalType": t, "name": "", "type": t})).collect();
            entries.push(json!({
                "constant": f.mutability == Mutability::View,
                "inputs": params(&f.inputs),
                "name": f.name,
                "outputs": outputs,
                "payable": f.mutability == Mutability::Payable,
                "stateMutability": f.mutability.as_str(),
                "type": "function"
            }));
        }
        Value::Array(entries)
    }

    pub fn compile(&self) -> Compiled {
        let runtime = Assembler::parse(&self.runtime_source())
            .and_then(|a| a.assemble())
            .unwrap_or_else(|e| panic!("{}: {e}", self.name));
        let deploy = self.deploy_code(&runtime);
        let mut sigs: Vec<(u32, String)> = self.functions.iter().map(|f| (f.selector(), f.signature())).collect();
        sigs.sort();
        let signatures = sigs.iter().map(|(s, sig)| format!("{s:08x}: {sig}\n")).collect();
        Compiled {
            runtime,
            deploy,
            abi: serde_json::to_string(&self.abi_json()).expect("json"),
            signatures,
        }
    }
}
