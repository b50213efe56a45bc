//! Scenario files and the `run` command.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! name = "paper-eq9"
//! parties = 3
//! qubits = 1
//! secrets = [0, 1, 0]
//! seed = 7
//! # optional
//! power = 1
//! oracle_mode = "kickback"      # or "literal"
//! shots = 8192
//! noise_p = 0.0
//! readout_p = 0.0
//! behaviors = ["honest", { flip = 1 }, "honest"]
//! coupling_map = "ibmqx2.json"  # relative to the scenario file
//! ```

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use qsum_core::metrics::success_probability;
use qsum_core::protocol::{brute_force_power_sum, run_power_summation_with};
use qsum_core::state::bitstring;
use qsum_core::{
    CouplingMap, NoiseModel, OracleMode, Outcome, PartyBehavior, PartySecret, ProtocolConfig,
    RunOptions, ShotHistogram, TranspileReport,
};

use crate::error::{read, CliError, Result};

pub const DEFAULT_SHOTS: u64 = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BehaviorSpec {
    Honest,
    /// Bit-flip the transmitted register with this mask.
    Flip(u64),
}

impl From<BehaviorSpec> for PartyBehavior {
    fn from(b: BehaviorSpec) -> Self {
        match b {
            BehaviorSpec::Honest => PartyBehavior::Honest,
            BehaviorSpec::Flip(mask) => PartyBehavior::TamperBitFlip { mask },
        }
    }
}

fn default_power() -> u32 {
    1
}

fn default_shots() -> u64 {
    DEFAULT_SHOTS
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub parties: usize,
    pub qubits: usize,
    pub secrets: Vec<u64>,
    #[serde(default)]
    pub behaviors: Vec<BehaviorSpec>,
    #[serde(default = "default_power")]
    pub power: u32,
    #[serde(default)]
    pub oracle_mode: OracleMode,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub noise_p: f64,
    #[serde(default)]
    pub readout_p: f64,
    pub coupling_map: Option<PathBuf>,
}

/// Command-line values that replace the file's.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub shots: Option<u64>,
    pub seed: Option<u64>,
    pub noise_p: Option<f64>,
    pub oracle_mode: Option<OracleMode>,
}

impl Scenario {
    pub fn parse(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Reads a scenario and resolves its coupling-map path against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut s = Self::parse(&read(path)?).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if let Some(map) = &s.coupling_map {
            if map.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                s.coupling_map = Some(base.join(map));
            }
        }
        Ok(s)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.shots {
            self.shots = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.noise_p {
            self.noise_p = v;
        }
        if let Some(v) = o.oracle_mode {
            self.oracle_mode = v;
        }
    }

    /// Field-level checks, so diagnostics name the offending key.
    pub fn validate(&self) -> Result<()> {
        if self.parties < 3 {
            return Err(CliError::field(
                "parties",
                format!("at least 3 parties required, got {}", self.parties),
            ));
        }
        if self.qubits == 0 || self.qubits > 16 {
            return Err(CliError::field("qubits", "must be between 1 and 16"));
        }
        if self.secrets.len() != self.parties {
            return Err(CliError::field(
                "secrets",
                format!(
                    "expected {} values, got {}",
                    self.parties,
                    self.secrets.len()
                ),
            ));
        }
        let modulus = 1u64 << self.qubits;
        if self.secrets.iter().any(|&y| y >= modulus) {
            return Err(CliError::field(
                "secrets",
                format!("every value must be below {modulus}"),
            ));
        }
        if !self.behaviors.is_empty() {
            if self.behaviors.len() != self.parties {
                return Err(CliError::field(
                    "behaviors",
                    format!(
                        "expected {} entries, got {}",
                        self.parties,
                        self.behaviors.len()
                    ),
                ));
            }
            if self.behaviors[0] != BehaviorSpec::Honest {
                return Err(CliError::field("behaviors", "party 1 must be honest"));
            }
            if self
                .behaviors
                .iter()
                .any(|b| matches!(b, BehaviorSpec::Flip(m) if *m >= modulus))
            {
                return Err(CliError::field(
                    "behaviors",
                    format!("flip masks must be below {modulus}"),
                ));
            }
        }
        if self.power == 0 {
            return Err(CliError::field("power", "must be at least 1"));
        }
        if self.shots == 0 {
            return Err(CliError::field("shots", "must be positive"));
        }
        for (field, p) in [("noise_p", self.noise_p), ("readout_p", self.readout_p)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(CliError::field(field, "must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn config(&self) -> ProtocolConfig {
        ProtocolConfig::new(self.parties, self.qubits)
            .with_mode(self.oracle_mode)
            .with_shots(self.shots)
            .with_seed(self.seed)
    }

    pub fn behaviors(&self) -> Vec<PartyBehavior> {
        if self.behaviors.is_empty() {
            vec![PartyBehavior::Honest; self.parties]
        } else {
            self.behaviors.iter().map(|&b| b.into()).collect()
        }
    }

    /// Runs the scenario; the document never contains the secrets.
    pub fn run(&self) -> Result<RunDocument> {
        self.validate()?;
        let started = Instant::now();
        let map = match &self.coupling_map {
            Some(path) => {
                Some(
                    CouplingMap::from_json(&read(path)?).map_err(|e| CliError::Parse {
                        path: path.clone(),
                        message: e.to_string(),
                    })?,
                )
            }
            None => None,
        };
        let noise = (self.noise_p > 0.0 || self.readout_p > 0.0)
            .then(|| NoiseModel::with_readout(self.noise_p, self.readout_p, self.seed))
            .transpose()?;
        let options = RunOptions {
            noise,
            coupling_map: map.as_ref(),
        };
        let transcript = run_power_summation_with(
            &self.config(),
            &PartySecret::from_values(&self.secrets),
            &self.behaviors(),
            self.power,
            &options,
        )?;
        let expected = brute_force_power_sum(&self.secrets, 1 << self.qubits, self.power);
        let success = match &transcript.histogram {
            Some(h) => success_probability(h, &bitstring(expected, self.qubits))?,
            None => 0.0,
        };
        Ok(RunDocument {
            scenario: self.name.clone(),
            parties: self.parties,
            qubits: self.qubits,
            power: self.power,
            oracle_mode: self.oracle_mode,
            shots: self.shots,
            seed: self.seed,
            noise_p: self.noise_p,
            result: transcript.result,
            ancilla: bitstring(transcript.verification, self.qubits),
            histogram: transcript.histogram,
            success_probability: success,
            transpile: transcript.transpile,
            elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
        })
    }
}

/// Result of one `run`, emitted as JSON.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunDocument {
    pub scenario: String,
    pub parties: usize,
    pub qubits: usize,
    pub power: u32,
    pub oracle_mode: OracleMode,
    pub shots: u64,
    pub seed: u64,
    pub noise_p: f64,
    /// The declared sum, or `"aborted"`.
    pub result: Outcome,
    /// What the transmitted register read at the check.
    pub ancilla: String,
    pub histogram: Option<ShotHistogram>,
    /// Fraction of shots reading the correct sum.
    pub success_probability: f64,
    pub transpile: Option<TranspileReport>,
    pub elapsed_ms: f64,
}

impl RunDocument {
    pub fn aborted(&self) -> bool {
        self.result == Outcome::Aborted
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    /// `bitstring,count,probability` rows; empty body when the run aborted.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("bitstring,count,probability\n");
        if let Some(h) = &self.histogram {
            for (bits, count) in h.counts() {
                let p = *count as f64 / h.shots() as f64;
                out.push_str(&format!("{bits},{count},{p}\n"));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EQ9: &str = r#"
name = "eq9"
parties = 3
qubits = 1
secrets = [0, 1, 0]
"#;

    #[test]
    fn defaults() {
        let s = Scenario::parse(EQ9).unwrap();
        assert_eq!(s.power, 1);
        assert_eq!(s.shots, DEFAULT_SHOTS);
        assert_eq!(s.oracle_mode, OracleMode::Kickback);
        assert!(s.behaviors.is_empty());
        assert_eq!(s.noise_p, 0.0);
    }

    #[test]
    fn behaviors_parse() {
        let text = format!("{EQ9}behaviors = [\"honest\", {{ flip = 1 }}, \"honest\"]\n");
        let s = Scenario::parse(&text).unwrap();
        assert_eq!(
            s.behaviors(),
            vec![
                PartyBehavior::Honest,
                PartyBehavior::TamperBitFlip { mask: 1 },
                PartyBehavior::Honest
            ]
        );
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = Scenario::parse(&format!("{EQ9}sekrets = [1]\n")).unwrap_err();
        assert!(err.to_string().contains("sekrets"));
    }

    #[test]
    fn validation_names_fields() {
        let mut s = Scenario::parse(EQ9).unwrap();
        s.parties = 2;
        s.secrets = vec![0, 1];
        let msg = s.validate().unwrap_err().to_string();
        assert!(msg.contains("parties"), "{msg}");

        let mut s = Scenario::parse(EQ9).unwrap();
        s.secrets = vec![0, 5, 0];
        let msg = s.validate().unwrap_err().to_string();
        assert!(msg.contains("secrets") && !msg.contains('5'), "{msg}");

        let mut s = Scenario::parse(EQ9).unwrap();
        s.noise_p = 2.0;
        assert!(s.validate().unwrap_err().to_string().contains("noise_p"));
    }

    #[test]
    fn overrides_replace_file_values() {
        let mut s = Scenario::parse(EQ9).unwrap();
        s.apply(&Overrides {
            shots: Some(10),
            seed: Some(4),
            noise_p: None,
            oracle_mode: Some(OracleMode::Literal),
        });
        assert_eq!(
            (s.shots, s.seed, s.oracle_mode),
            (10, 4, OracleMode::Literal)
        );
    }

    #[test]
    fn run_document() {
        let doc = Scenario::parse(EQ9).unwrap().run().unwrap();
        assert_eq!(doc.result, Outcome::Sum(1));
        assert_eq!(doc.success_probability, 1.0);
        assert_eq!(doc.ancilla, "0");
        assert_eq!(
            doc.histogram_csv(),
            "bitstring,count,probability\n1,8192,1\n"
        );
    }

    #[test]
    fn aborted_run_has_no_histogram() {
        let text = format!("{EQ9}behaviors = [\"honest\", {{ flip = 1 }}, \"honest\"]\n");
        let doc = Scenario::parse(&text).unwrap().run().unwrap();
        assert!(doc.aborted());
        assert_eq!(doc.ancilla, "1");
        assert!(doc.histogram.is_none());
        assert_eq!(doc.histogram_csv(), "bitstring,count,probability\n");
    }
}
