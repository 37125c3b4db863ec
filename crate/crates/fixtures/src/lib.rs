//! Small contracts with the layout of Solidity compiler output, used as
//! benchmarks and end-to-end test subjects.
//!
//! Each fixture is assembled from text, so the checked-in `fixtures/`
//! directory can be regenerated with `cargo run -p evmgen-fixtures --bin
//! gen-fixtures` and verified byte-for-byte in tests.

pub mod builder;

use std::path::{Path, PathBuf};

use builder::{mapping_slot, require, Constructor, Contract, Fallback, Function, Mutability, RETURN_WORD};
use evmgen_core::evm::{parse_abi, EvmError};
use evmgen_core::ContractArtifact;

use Mutability::{NonPayable, Payable, View};

/// The three words `NestedMagic.unlock` expects, in argument order.
pub const NESTED_MAGIC: [u32; 3] = [0x1337c0de, 0xdeadbeef, 0xcafebabe];

/// Token supply ceiling enforced by `Token.mint` (10^24).
pub const SUPPLY_CAP: u128 = 1_000_000_000_000_000_000_000_000;

/// Fixture whose loop exhausts the gas budget for large inputs.
pub const LOOP: &str = "Loop";

/// The fixture excluded from the full-coverage requirement.
pub const NESTED: &str = "NestedMagic";

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub runtime: Vec<u8>,
    pub deploy: Vec<u8>,
    pub abi: String,
    pub signatures: String,
    /// Branches left after trimming compiler-generated structure.
    pub branches: usize,
}

impl Fixture {
    pub fn artifact(&self) -> ContractArtifact {
        let abi = parse_abi(&self.abi).expect("fixture abi");
        ContractArtifact::new(self.name, self.runtime.clone(), Some(self.deploy.clone()), abi).expect("fixture bytecode")
    }

    /// File name and contents of every file written for this fixture.
    pub fn files(&self) -> Vec<(String, String)> {
        vec![
            (format!("{}.bin", self.name), hex(&self.deploy)),
            (format!("{}.bin-runtime", self.name), hex(&self.runtime)),
            (format!("{}.abi", self.name), format!("{}\n", self.abi)),
            (format!("{}.signatures", self.name), self.signatures.clone()),
        ]
    }
}

fn hex(bytes: &[u8]) -> String {
    let mut s: String = bytes.iter().map(|b| format!("{b:02x}")).collect();
    s.push('\n');
    s
}

fn build(contract: Contract, branches: usize) -> Fixture {
    let compiled = contract.compile();
    Fixture {
        name: contract.name,
        runtime: compiled.runtime,
        deploy: compiled.deploy,
        abi: compiled.abi,
        signatures: compiled.signatures,
        branches,
    }
}

fn ctor(inputs: &[(&'static str, &'static str)], payable: bool, body: &str) -> Option<Constructor> {
    Some(Constructor {
        inputs: inputs.to_vec(),
        payable,
        body: body.to_string(),
    })
}

fn contract(name: &'static str, constructor: Option<Constructor>, functions: Vec<Function>) -> Contract {
    Contract {
        name,
        constructor,
        functions,
        fallback: None,
        global_value_check: false,
    }
}

fn auction() -> Fixture {
    let bid = format!(
        "PUSH1 2 SLOAD CALLVALUE GT {}
         PUSH1 0 DUP1 DUP1 DUP1 PUSH1 2 SLOAD PUSH1 1 SLOAD GAS CALL POP
         CALLER PUSH1 1 SSTORE CALLVALUE PUSH1 2 SSTORE STOP",
        require("bid_ok")
    );
    let claim = format!("PUSH1 3 SLOAD TIMESTAMP GT {} PUSH1 0 SLOAD SELFDESTRUCT", require("claim_ok"));
    build(
        contract(
            "Auction",
            ctor(&[("_CloseTime", "uint256")], true, "CALLER PUSH1 0 SSTORE PUSH1 0x80 MLOAD PUSH1 3 SSTORE"),
            vec![
                Function::new("Bid", Payable, bid),
                Function::new("Claim", NonPayable, claim),
                Function::getter("Seller", "address", 0),
                Function::getter("Frontrunner", "address", 1),
                Function::getter("HighBid", "uint256", 2),
                Function::getter("CloseTime", "uint256", 3),
            ],
        ),
        4,
    )
}

fn owner() -> Fixture {
    let only_owner = |label: &str| format!("PUSH1 0 SLOAD CALLER EQ {}", require(label));
    let transfer = format!(
        "{} PUSH1 4 CALLDATALOAD ISZERO ISZERO {} PUSH1 4 CALLDATALOAD PUSH1 0 SSTORE STOP",
        only_owner("to_owner"),
        require("to_nonzero")
    );
    let set_fee = format!(
        "{} PUSH1 4 CALLDATALOAD PUSH1 1 SSTORE
         PUSH1 100 PUSH1 1 SLOAD GT ISZERO PUSH :fee_done JUMPI
         PUSH1 100 PUSH1 1 SSTORE
         fee_done: STOP",
        only_owner("fee_owner")
    );
    let mut c = contract(
        "Owner",
        ctor(&[], false, "CALLER PUSH1 0 SSTORE"),
        vec![
            Function::new("transferOwnership", NonPayable, transfer).inputs(&[("newOwner", "address")]),
            Function::new("setFee", NonPayable, set_fee).inputs(&[("newFee", "uint256")]),
            Function::getter("owner", "address", 0),
            Function::getter("fee", "uint256", 1),
        ],
    );
    c.global_value_check = true;
    build(c, 8)
}

fn time_lock() -> Fixture {
    let deposit = format!(
        "PUSH1 0 CALLVALUE GT {} CALLVALUE PUSH1 3 SLOAD ADD PUSH1 3 SSTORE STOP",
        require("dep_ok")
    );
    let withdraw = format!(
        "PUSH1 1 SLOAD TIMESTAMP LT ISZERO {}
         PUSH1 2 SLOAD NUMBER LT ISZERO {}
         PUSH1 0 SLOAD CALLER EQ {}
         PUSH1 0 DUP1 DUP1 DUP1 PUSH1 3 SLOAD CALLER GAS CALL POP
         PUSH1 0 PUSH1 3 SSTORE STOP",
        require("wd_time"),
        require("wd_block"),
        require("wd_owner")
    );
    build(
        contract(
            "TimeLock",
            ctor(
                &[],
                true,
                "CALLER PUSH1 0 SSTORE
                 TIMESTAMP PUSH3 0x093a80 ADD PUSH1 1 SSTORE
                 NUMBER PUSH1 10 ADD PUSH1 2 SSTORE
                 CALLVALUE PUSH1 3 SSTORE",
            ),
            vec![
                Function::new("deposit", Payable, deposit),
                Function::new("withdraw", NonPayable, withdraw),
                Function::getter("owner", "address", 0),
                Function::getter("unlockTime", "uint256", 1),
                Function::getter("unlockBlock", "uint256", 2),
                Function::getter("deposits", "uint256", 3),
            ],
        ),
        8,
    )
}

fn nested_magic() -> Fixture {
    let mut unlock = String::new();
    for (i, magic) in NESTED_MAGIC.iter().enumerate() {
        unlock += &format!("PUSH4 {magic:#010x} PUSH1 {:#x} CALLDATALOAD EQ ISZERO PUSH :nm_end JUMPI\n", 4 + 32 * i);
    }
    unlock += "PUSH1 1 PUSH1 0 SSTORE nm_end: STOP";
    build(
        contract(
            NESTED,
            None,
            vec![
                Function::new("unlock", NonPayable, unlock).inputs(&[("a", "uint256"), ("b", "uint256"), ("c", "uint256")]),
                Function::getter("solved", "bool", 0),
            ],
        ),
        6,
    )
}

fn token() -> Fixture {
    let bal = mapping_slot(2);
    let transfer = format!(
        "PUSH1 0x24 CALLDATALOAD CALLER {bal} SLOAD LT ISZERO {}
         PUSH1 4 CALLDATALOAD ISZERO ISZERO {}
         PUSH1 0x24 CALLDATALOAD CALLER {bal} SLOAD SUB CALLER {bal} SSTORE
         PUSH1 0x24 CALLDATALOAD PUSH1 4 CALLDATALOAD {bal} SLOAD ADD PUSH1 4 CALLDATALOAD {bal} SSTORE
         PUSH1 1 {RETURN_WORD}",
        require("tr_funds"),
        require("tr_to")
    );
    let mint = format!(
        "PUSH1 0 SLOAD CALLER EQ {}
         PUSH10 {SUPPLY_CAP:#x} PUSH1 0x24 CALLDATALOAD PUSH1 1 SLOAD ADD GT ISZERO {}
         PUSH1 0x24 CALLDATALOAD PUSH1 4 CALLDATALOAD {bal} SLOAD ADD PUSH1 4 CALLDATALOAD {bal} SSTORE
         PUSH1 0x24 CALLDATALOAD PUSH1 1 SLOAD ADD PUSH1 1 SSTORE STOP",
        require("mint_owner"),
        require("mint_cap")
    );
    let balance_of = format!("PUSH1 4 CALLDATALOAD {bal} SLOAD {RETURN_WORD}");
    build(
        contract(
            "Token",
            ctor(
                &[("supply", "uint256")],
                false,
                &format!("CALLER PUSH1 0 SSTORE PUSH1 0x80 MLOAD DUP1 PUSH1 1 SSTORE CALLER {bal} SSTORE"),
            ),
            vec![
                Function::new("transfer", NonPayable, transfer)
                    .inputs(&[("to", "address"), ("amount", "uint256")])
                    .outputs(&["bool"]),
                Function::new("mint", NonPayable, mint).inputs(&[("to", "address"), ("amount", "uint256")]),
                Function::new("balanceOf", View, balance_of).inputs(&[("account", "address")]).outputs(&["uint256"]),
                Function::getter("totalSupply", "uint256", 1),
                Function::getter("owner", "address", 0),
            ],
        ),
        8,
    )
}

fn bank() -> Fixture {
    let dep = mapping_slot(0);
    let deposit = format!(
        "PUSH1 0 CALLVALUE GT {} CALLVALUE CALLER {dep} SLOAD ADD CALLER {dep} SSTORE STOP",
        require("bank_dep")
    );
    let withdraw = format!(
        "PUSH1 4 CALLDATALOAD CALLER {dep} SLOAD LT ISZERO {}
         PUSH1 4 CALLDATALOAD CALLER {dep} SLOAD SUB CALLER {dep} SSTORE
         PUSH1 0 DUP1 DUP1 DUP1 PUSH1 4 CALLDATALOAD CALLER GAS CALL POP STOP",
        require("bank_funds")
    );
    build(
        contract(
            "Bank",
            None,
            vec![
                Function::new("deposit", Payable, deposit),
                Function::new("withdraw", NonPayable, withdraw).inputs(&[("amount", "uint256")]),
                Function::new("deposits", View, format!("PUSH1 4 CALLDATALOAD {dep} SLOAD {RETURN_WORD}"))
                    .inputs(&[("account", "address")])
                    .outputs(&["uint256"]),
                Function::new("totalBalance", View, format!("ADDRESS BALANCE {RETURN_WORD}")).outputs(&["uint256"]),
            ],
        ),
        4,
    )
}

fn looping() -> Fixture {
    let process = "PUSH1 0
         loop_head: PUSH1 4 CALLDATALOAD DUP2 LT ISZERO PUSH :loop_end JUMPI
         DUP1 PUSH1 0 SLOAD ADD PUSH1 0 SSTORE
         PUSH1 1 ADD PUSH :loop_head JUMP
         loop_end: POP STOP";
    build(
        contract(
            LOOP,
            None,
            vec![
                Function::new("process", NonPayable, process).inputs(&[("n", "uint256")]),
                Function::new("reset", NonPayable, "PUSH1 0 PUSH1 0 SSTORE STOP"),
                Function::getter("total", "uint256", 0),
            ],
        ),
        2,
    )
}

fn guess() -> Fixture {
    let play = format!(
        "PUSH8 0x0de0b6b3a7640000 CALLVALUE EQ {}
         PUSH1 0xff NUMBER AND PUSH1 4 CALLDATALOAD EQ ISZERO PUSH :lose JUMPI
         PUSH1 0 DUP1 DUP1 DUP1 PUSH8 0x1bc16d674ec80000 CALLER GAS CALL POP
         PUSH1 0 SLOAD PUSH1 1 ADD PUSH1 0 SSTORE STOP
         lose: PUSH1 1 SLOAD PUSH1 1 ADD PUSH1 1 SSTORE STOP",
        require("stake_ok")
    );
    build(
        contract(
            "Guess",
            None,
            vec![
                Function::new("play", Payable, play).inputs(&[("guess", "uint8")]),
                Function::getter("wins", "uint256", 0),
                Function::getter("losses", "uint256", 1),
            ],
        ),
        4,
    )
}

fn signed() -> Fixture {
    let adjust = format!(
        "PUSH1 0x24 CALLDATALOAD ISZERO PUSH :loose JUMPI
         PUSH1 0 PUSH1 4 CALLDATALOAD SGT {}
         loose: PUSH32 0xffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffff9c
         PUSH1 4 CALLDATALOAD SLT ISZERO PUSH :not_low JUMPI
         PUSH1 1 PUSH1 1 SSTORE
         not_low: PUSH1 4 CALLDATALOAD PUSH1 0 SLOAD ADD PUSH1 0 SSTORE STOP",
        require("positive")
    );
    build(
        contract(
            "Signed",
            None,
            vec![
                Function::new("adjust", NonPayable, adjust).inputs(&[("delta", "int256"), ("strict", "bool")]),
                Function::getter("total", "int256", 0),
                Function::getter("low", "bool", 1),
            ],
        ),
        6,
    )
}

fn user_fallback() -> Fixture {
    let reset = format!(
        "PUSH1 2 SLOAD CALLER EQ {} PUSH1 0 DUP1 SSTORE PUSH1 0 PUSH1 1 SSTORE STOP",
        require("reset_owner")
    );
    let mut c = contract(
        "UserFallback",
        ctor(&[], false, "CALLER PUSH1 2 SSTORE"),
        vec![
            Function::new("reset", NonPayable, reset),
            Function::getter("big", "uint256", 0),
            Function::getter("small", "uint256", 1),
        ],
    );
    c.fallback = Some(Fallback {
        payable: true,
        body: "PUSH2 0x03e8 CALLVALUE GT ISZERO PUSH :small_tx JUMPI
               PUSH1 0 SLOAD PUSH1 1 ADD PUSH1 0 SSTORE STOP
               small_tx: PUSH1 1 SLOAD PUSH1 1 ADD PUSH1 1 SSTORE STOP"
            .to_string(),
    });
    build(c, 4)
}

/// Every fixture, in a fixed order.
pub fn all() -> Vec<Fixture> {
    vec![
        auction(),
        owner(),
        time_lock(),
        nested_magic(),
        token(),
        bank(),
        looping(),
        guess(),
        signed(),
        user_fallback(),
    ]
}

pub fn by_name(name: &str) -> Option<Fixture> {
    all().into_iter().find(|f| f.name == name)
}

/// Writes `.bin`, `.bin-runtime`, `.abi` and `.signatures` for every fixture.
pub fn write_all(dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for fixture in all() {
        for (file, contents) in fixture.files() {
            std::fs::write(dir.join(file), contents)?;
        }
    }
    Ok(())
}

/// The `fixtures/` directory at the workspace root.
pub fn checked_in_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// Loads a fixture from files, exercising the same path as the CLI.
pub fn load(dir: &Path, name: &str) -> Result<ContractArtifact, EvmError> {
    ContractArtifact::load_named(dir, name)
}
