//! Exhaustive sweeps over party count, register width, power and secret tuples.
//!
//! ```toml
//! parties = 3                      # or { from = 3, to = 4 }, inclusive
//! qubits = { from = 1, to = 2 }
//! power = 1                        # optional, default 1
//! values = { from = 0, to = 1 }    # optional, default every value below 2^n
//! oracle_mode = "kickback"         # optional
//! shots = 64                       # optional
//! seed = 0                         # optional
//! ```

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use qsum_core::protocol::{brute_force_power_sum, run_power_summation};
use qsum_core::{OracleMode, Outcome, PartySecret, ProtocolConfig};

use crate::error::{CliError, Result};

/// Upper bound on the rows one sweep may enumerate.
pub const MAX_RUNS: u64 = 100_000;

pub const DEFAULT_SWEEP_SHOTS: u64 = 64;

/// A single value or an inclusive range; `from > to` is empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum Span {
    One(u64),
    Range { from: u64, to: u64 },
}

impl Span {
    fn bounds(self) -> (u64, u64) {
        match self {
            Span::One(v) => (v, v),
            Span::Range { from, to } => (from, to),
        }
    }

    pub fn iter(self) -> impl Iterator<Item = u64> {
        let (a, b) = self.bounds();
        a..=b
    }
}

fn one() -> Span {
    Span::One(1)
}

fn default_shots() -> u64 {
    DEFAULT_SWEEP_SHOTS
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parties: Span,
    pub qubits: Span,
    #[serde(default = "one")]
    pub power: Span,
    pub values: Option<Span>,
    #[serde(default)]
    pub oracle_mode: OracleMode,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SweepRow {
    pub parties: usize,
    pub qubits: usize,
    pub power: u32,
    pub secrets: Vec<u64>,
    pub result: Outcome,
    pub expected: u64,
    pub matches: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SweepTable {
    pub runs: usize,
    pub mismatches: usize,
    pub rows: Vec<SweepRow>,
}

/// One (m, n, k) block and the secret values it enumerates.
struct Block {
    parties: usize,
    qubits: usize,
    power: u32,
    values: Vec<u64>,
}

impl Block {
    fn runs(&self) -> Option<u64> {
        (self.values.len() as u64).checked_pow(self.parties as u32)
    }

    /// Tuple `index`, first party varying fastest.
    fn tuple(&self, mut index: u64) -> Vec<u64> {
        let base = self.values.len() as u64;
        (0..self.parties)
            .map(|_| {
                let v = self.values[(index % base) as usize];
                index /= base;
                v
            })
            .collect()
    }
}

impl SweepConfig {
    pub fn parse(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    fn blocks(&self) -> Result<Vec<Block>> {
        let mut blocks = Vec::new();
        let mut total = 0u64;
        for m in self.parties.iter() {
            if m < 3 {
                return Err(CliError::field(
                    "parties",
                    format!("at least 3 required, got {m}"),
                ));
            }
            for n in self.qubits.iter() {
                if n == 0 || n > 10 {
                    return Err(CliError::field("qubits", "must be between 1 and 10"));
                }
                let modulus = 1u64 << n;
                let values: Vec<u64> = match self.values {
                    Some(span) => span.iter().take_while(|&v| v < modulus).collect(),
                    None => (0..modulus).collect(),
                };
                for k in self.power.iter() {
                    let power = u32::try_from(k)
                        .ok()
                        .filter(|&p| p >= 1)
                        .ok_or_else(|| CliError::field("power", "must be between 1 and 2^32-1"))?;
                    let block = Block {
                        parties: m as usize,
                        qubits: n as usize,
                        power,
                        values: values.clone(),
                    };
                    total = block
                        .runs()
                        .and_then(|r| total.checked_add(r))
                        .filter(|&t| t <= MAX_RUNS)
                        .ok_or_else(|| {
                            CliError::field("parties", format!("sweep exceeds {MAX_RUNS} runs"))
                        })?;
                    blocks.push(block);
                }
            }
        }
        Ok(blocks)
    }

    /// Runs every tuple; rows come back in enumeration order whatever the
    /// worker scheduling.
    pub fn run(&self) -> Result<SweepTable> {
        if self.shots == 0 {
            return Err(CliError::field("shots", "must be positive"));
        }
        let blocks = self.blocks()?;
        let jobs: Vec<(&Block, u64)> = blocks
            .iter()
            .flat_map(|b| (0..b.runs().unwrap_or(0)).map(move |i| (b, i)))
            .collect();
        let rows = jobs
            .par_iter()
            .map(|&(b, i)| self.row(b, i))
            .collect::<Result<Vec<_>>>()?;
        let mismatches = rows.iter().filter(|r| !r.matches).count();
        Ok(SweepTable {
            runs: rows.len(),
            mismatches,
            rows,
        })
    }

    fn row(&self, block: &Block, index: u64) -> Result<SweepRow> {
        let secrets = block.tuple(index);
        let cfg = ProtocolConfig::new(block.parties, block.qubits)
            .with_mode(self.oracle_mode)
            .with_shots(self.shots)
            .with_seed(self.seed);
        let t = run_power_summation(&cfg, &PartySecret::from_values(&secrets), block.power)?;
        let expected = brute_force_power_sum(&secrets, cfg.modulus(), block.power);
        Ok(SweepRow {
            parties: block.parties,
            qubits: block.qubits,
            power: block.power,
            result: t.result,
            matches: t.result == Outcome::Sum(expected) && t.result_probability() == 1.0,
            expected,
            secrets,
        })
    }
}

impl SweepTable {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn summary(&self) -> String {
        format!("sweep: {} runs, {} mismatches", self.runs, self.mismatches)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("parties,qubits,power,secrets,result,expected,matches\n");
        for r in &self.rows {
            let secrets: Vec<String> = r.secrets.iter().map(u64::to_string).collect();
            let result = match r.result {
                Outcome::Sum(v) => v.to_string(),
                Outcome::Aborted => "aborted".into(),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.parties,
                r.qubits,
                r.power,
                secrets.join(" "),
                result,
                r.expected,
                r.matches
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spans() {
        let c = SweepConfig::parse("parties = 3\nqubits = { from = 1, to = 2 }\n").unwrap();
        assert_eq!(c.parties, Span::One(3));
        assert_eq!(c.qubits.iter().collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(c.power, Span::One(1));
        assert_eq!(Span::Range { from: 2, to: 1 }.iter().count(), 0);
    }

    #[test]
    fn tuples_enumerate_first_party_fastest() {
        let b = Block {
            parties: 3,
            qubits: 1,
            power: 1,
            values: vec![0, 1],
        };
        assert_eq!(b.runs(), Some(8));
        assert_eq!(b.tuple(1), vec![1, 0, 0]);
        assert_eq!(b.tuple(6), vec![0, 1, 1]);
    }

    #[test]
    fn guard_rejects_huge_sweeps() {
        let c = SweepConfig::parse("parties = 20\nqubits = 2\n").unwrap();
        assert!(c.run().unwrap_err().to_string().contains("exceeds"));
        let c = SweepConfig::parse("parties = 2\nqubits = 1\n").unwrap();
        assert!(c.run().unwrap_err().to_string().contains("parties"));
    }

    #[test]
    fn small_sweep() {
        let c = SweepConfig::parse("parties = 3\nqubits = 1\nshots = 8\n").unwrap();
        let t = c.run().unwrap();
        assert_eq!((t.runs, t.mismatches), (8, 0));
        assert_eq!(t.to_csv().lines().count(), 9);
        assert_eq!(t.summary(), "sweep: 8 runs, 0 mismatches");
    }
}
