use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Address, U256};

/// Wei amount written as a decimal or `0x` string, or a plain integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Wei(pub U256);

impl Serialize for Wei {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for Wei {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(v) => Ok(Wei(U256::from(v))),
            Raw::Text(t) => parse_u256(&t).map(Wei).map_err(serde::de::Error::custom),
        }
    }
}

pub fn parse_u256(text: &str) -> Result<U256, String> {
    let t = text.trim().replace('_', "");
    let parsed = match t.strip_prefix("0x") {
        Some(hex) if !hex.is_empty() => U256::from_str_radix(hex, 16).ok(),
        Some(_) => None,
        None => U256::from_dec_str(&t).ok(),
    };
    parsed.ok_or_else(|| format!("{text:?} is not a 256-bit unsigned integer"))
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("config: {0}")]
    Parse(String),
    #[error("config: {0}")]
    Invalid(String),
}

/// Search and generation settings. Every key is optional in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub population_size: usize,
    /// Search-loop iterations after the initial population.
    pub max_generations: usize,
    pub max_statements: usize,
    pub value_range: [Wei; 2],
    pub accounts: Vec<Address>,
    /// Starting balance per account; a single entry applies to all.
    pub balances: Vec<Wei>,
    pub nonexistent_accounts: Vec<Address>,
    pub include_zero_address: bool,
    pub seeding_probability: f64,
    pub crossover_probability: f64,
    pub mutation_probability: f64,
    pub tournament_size: usize,
    pub rng_seed: u64,
    pub pass_time: bool,
    pub pass_time_range: [u64; 2],
    pub pass_blocks: bool,
    pub pass_blocks_range: [u64; 2],
    /// Longest generated dynamic array, byte string or string.
    pub max_dynamic_length: usize,
    pub gas_budget: u64,
    pub block_gas_limit: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            population_size: 50,
            max_generations: 100,
            max_statements: 10,
            value_range: [Wei(U256::zero()), Wei(U256::exp10(18))],
            accounts: (0..10).map(|i| Address::derived(&format!("account-{i}"))).collect(),
            balances: vec![Wei(U256::exp10(20))],
            nonexistent_accounts: (0..2).map(|i| Address::derived(&format!("nonexistent-{i}"))).collect(),
            include_zero_address: true,
            seeding_probability: 0.5,
            crossover_probability: 0.75,
            mutation_probability: 1.0,
            tournament_size: 10,
            rng_seed: 0,
            pass_time: true,
            pass_time_range: [1, 1_000_000],
            pass_blocks: true,
            pass_blocks_range: [1, 100],
            max_dynamic_length: 8,
            gas_budget: crate::chain::DEFAULT_GAS_BUDGET,
            block_gas_limit: u64::MAX,
        }
    }
}

impl GenConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: GenConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        for (name, p) in [
            ("seeding_probability", self.seeding_probability),
            ("crossover_probability", self.crossover_probability),
            ("mutation_probability", self.mutation_probability),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if self.population_size < 2 {
            return bad("population_size must be at least 2".into());
        }
        if self.max_statements < 2 {
            return bad("max_statements must be at least 2".into());
        }
        if self.accounts.is_empty() {
            return bad("accounts must not be empty".into());
        }
        if self.balances.len() != 1 && self.balances.len() != self.accounts.len() {
            return bad("balances must have one entry or one per account".into());
        }
        if self.tournament_size == 0 {
            return bad("tournament_size must be positive".into());
        }
        if self.value_range[0] > self.value_range[1] {
            return bad("value_range is empty".into());
        }
        for (name, [lo, hi]) in [("pass_time_range", self.pass_time_range), ("pass_blocks_range", self.pass_blocks_range)] {
            if lo == 0 || lo > hi {
                return bad(format!("{name} must satisfy 1 <= min <= max"));
            }
        }
        Ok(())
    }

    pub fn balance_of(&self, index: usize) -> U256 {
        self.balances.get(index).or(self.balances.first()).map(|w| w.0).unwrap_or_default()
    }

    /// Every address a generated address argument may take.
    pub fn address_choices(&self) -> Vec<Address> {
        let mut v = self.accounts.clone();
        v.extend(self.nonexistent_accounts.iter().copied());
        if self.include_zero_address {
            v.push(Address::ZERO);
        }
        v
    }
}

/// Parses an accounts file: one `address [balance]` per line, `#` comments.
pub fn parse_accounts(text: &str) -> Result<Vec<(Address, Option<U256>)>, ConfigError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let addr: Address = parts
            .next()
            .unwrap_or_default()
            .parse()
            .map_err(|e| ConfigError::Parse(format!("accounts line {}: {e}", n + 1)))?;
        let balance = parts
            .next()
            .map(parse_u256)
            .transpose()
            .map_err(|e| ConfigError::Parse(format!("accounts line {}: {e}", n + 1)))?;
        out.push((addr, balance));
    }
    if out.is_empty() {
        return Err(ConfigError::Invalid("accounts file lists no accounts".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = GenConfig::default();
        c.validate().unwrap();
        assert_eq!((c.population_size, c.max_generations, c.max_statements), (50, 100, 10));
        assert_eq!(c.tournament_size, 10);
    }

    #[test]
    fn toml_overrides() {
        let c = GenConfig::from_toml_str(
            "population_size = 8\nvalue_range = [\"0\", \"0x10\"]\npass_time = false\nrng_seed = 3\n",
        )
        .unwrap();
        assert_eq!(c.population_size, 8);
        assert_eq!(c.value_range[1].0, U256::from(16));
        assert!(!c.pass_time);
        assert_eq!(c.rng_seed, 3);
    }

    #[test]
    fn rejects_bad_probability_and_unknown_keys() {
        assert!(GenConfig::from_toml_str("seeding_probability = 1.5").is_err());
        assert!(GenConfig::from_toml_str("populaton_size = 5").is_err());
    }

    #[test]
    fn accounts_file() {
        let text = "# test accounts\n0x00000000000000000000000000000000000000aa 1000\n0x00000000000000000000000000000000000000bb\n";
        let a = parse_accounts(text).unwrap();
        assert_eq!(a.len(), 2);
        assert_eq!(a[0].1, Some(U256::from(1000)));
        assert_eq!(a[1].1, None);
    }
}
