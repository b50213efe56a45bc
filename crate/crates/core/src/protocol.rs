//! The m-party summation protocol driven over the statevector simulator.
//!
//! Party 1 prepares |y₁⟩ on the home register `h`, applies the QFT and copies
//! the basis index onto the transmitted register `t`. The register then
//! visits parties 2..m in turn; each multiplies the |j⟩_t branch by
//! e^{2πi·y_i·j/N}. After the last party returns `t`, party 1 repeats the
//! copy, which restores |0…0⟩_t unless the register was bit-flipped in
//! transit, measures `t` as the verification check, and finally applies the
//! inverse QFT to read Σ y_i mod N from `h`.
//!
//! Secret values are never logged, serialized or echoed in errors.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::circuit::{entangle_registers, iqft, oracle_circuit, qft, Circuit, OracleMode};
use crate::error::{Error, Result};
use crate::gate::GateOp;
use crate::noise::{run_noisy, NoiseModel};
use crate::rng::{shot_rng, Stream};
use crate::state::{ShotHistogram, StateVector, MAX_QUBITS};
use crate::transpile::{transpile, CouplingMap, TranspileReport};

/// Run parameters shared by every party.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProtocolConfig {
    pub parties: usize,
    pub qubits: usize,
    pub mode: OracleMode,
    pub shots: u64,
    pub seed: u64,
}

impl ProtocolConfig {
    pub fn new(parties: usize, qubits: usize) -> Self {
        Self {
            parties,
            qubits,
            mode: OracleMode::Kickback,
            shots: 8192,
            seed: 0,
        }
    }

    pub fn with_mode(mut self, mode: OracleMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_shots(mut self, shots: u64) -> Self {
        self.shots = shots;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// N = 2^n.
    pub fn modulus(&self) -> u64 {
        1u64 << self.qubits
    }

    /// Qubits the simulation needs: h and t, plus one secret register per
    /// party 2..m in literal mode.
    pub fn simulated_qubits(&self) -> usize {
        match self.mode {
            OracleMode::Kickback => self.qubits.saturating_mul(2),
            OracleMode::Literal => self.parties.saturating_add(1).saturating_mul(self.qubits),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.parties <= 2 {
            return Err(Error::Config(format!(
                "at least 3 parties required, got {}",
                self.parties
            )));
        }
        if self.qubits == 0 {
            return Err(Error::Config(
                "secret register needs at least 1 qubit".into(),
            ));
        }
        if self.shots == 0 {
            return Err(Error::NoShots);
        }
        let needed = self.simulated_qubits();
        if needed > MAX_QUBITS {
            return Err(Error::Capacity {
                qubit_count: needed,
                capacity: MAX_QUBITS,
            });
        }
        Ok(())
    }
}

/// A party's private input. `Debug` redacts the value.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct PartySecret {
    party: usize,
    value: u64,
}

impl PartySecret {
    /// `party` is 1-based.
    pub fn new(party: usize, value: u64) -> Self {
        Self { party, value }
    }

    /// Secrets for parties 1, 2, … in order.
    pub fn from_values(values: &[u64]) -> Vec<Self> {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| Self::new(i + 1, v))
            .collect()
    }

    pub fn party(&self) -> usize {
        self.party
    }

    pub fn value(&self) -> u64 {
        self.value
    }
}

impl fmt::Debug for PartySecret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PartySecret")
            .field("party", &self.party)
            .field("value", &"<redacted>")
            .finish()
    }
}

/// What a party does to the transmitted register before forwarding it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PartyBehavior {
    #[default]
    Honest,
    /// X on every transmitted qubit whose bit is set in `mask`.
    TamperBitFlip { mask: u64 },
}

impl PartyBehavior {
    fn mask(&self) -> u64 {
        match self {
            PartyBehavior::Honest => 0,
            PartyBehavior::TamperBitFlip { mask } => *mask,
        }
    }
}

/// One hop of the transmitted register.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Transmission {
    pub from: usize,
    pub to: usize,
    pub register: &'static str,
}

/// Declared result of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Sum(u64),
    Aborted,
}

impl Serialize for Outcome {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Outcome::Sum(v) => s.serialize_u64(*v),
            Outcome::Aborted => s.serialize_str("aborted"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolTranscript {
    pub transmissions: Vec<Transmission>,
    /// Value read from the transmitted register at the check; 0 when untampered.
    pub verification: u64,
    /// Home-register counts; absent when the run aborted.
    pub histogram: Option<ShotHistogram>,
    pub result: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transpile: Option<TranspileReport>,
}

impl ProtocolTranscript {
    pub fn aborted(&self) -> bool {
        self.result == Outcome::Aborted
    }

    /// Fraction of shots that read the declared sum.
    pub fn result_probability(&self) -> f64 {
        match (self.result, &self.histogram) {
            (Outcome::Sum(s), Some(h)) => h.count_value(s) as f64 / h.shots() as f64,
            _ => 0.0,
        }
    }
}

/// Qubit assignment: h = 0..n, t = n..2n, then one n-qubit secret register per
/// party 2..m in literal mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolLayout {
    pub home: Vec<usize>,
    pub transmitted: Vec<usize>,
    /// Secret registers of parties 2..m (empty in kickback mode).
    pub secret_registers: Vec<Vec<usize>>,
}

impl ProtocolLayout {
    pub fn new(config: &ProtocolConfig) -> Self {
        let n = config.qubits;
        let secret_registers = match config.mode {
            OracleMode::Kickback => Vec::new(),
            OracleMode::Literal => (0..config.parties - 1)
                .map(|p| ((2 + p) * n..(3 + p) * n).collect())
                .collect(),
        };
        Self {
            home: (0..n).collect(),
            transmitted: (n..2 * n).collect(),
            secret_registers,
        }
    }

    pub fn qubit_count(&self) -> usize {
        self.home.len() * (2 + self.secret_registers.len())
    }
}

/// Everything needed to execute one run: the unitary part of the protocol and
/// the basis state it starts from.
#[derive(Debug, Clone)]
pub struct ProtocolPlan {
    pub layout: ProtocolLayout,
    pub circuit: Circuit,
    /// Basis index encoding |y₁⟩_h and, in literal mode, each party's |y_i⟩.
    pub initial_index: u64,
    pub transmissions: Vec<Transmission>,
}

impl ProtocolPlan {
    pub fn initial_state(&self) -> Result<StateVector> {
        StateVector::new_basis_state(self.layout.qubit_count(), self.initial_index)
    }
}

fn ordered_secrets(config: &ProtocolConfig, secrets: &[PartySecret]) -> Result<Vec<u64>> {
    if secrets.len() != config.parties {
        return Err(Error::Config(format!(
            "expected {} secrets, got {}",
            config.parties,
            secrets.len()
        )));
    }
    let mut values = vec![None; config.parties];
    for s in secrets {
        let slot = s
            .party
            .checked_sub(1)
            .and_then(|i| values.get_mut(i))
            .ok_or_else(|| Error::Config(format!("party index {} out of range", s.party)))?;
        if slot.is_some() {
            return Err(Error::Config(format!("party {} listed twice", s.party)));
        }
        if s.value >= config.modulus() {
            return Err(Error::SecretOutOfRange {
                modulus: config.modulus(),
            });
        }
        *slot = Some(s.value);
    }
    Ok(values.into_iter().map(|v| v.unwrap_or(0)).collect())
}

/// Builds the protocol circuit up to and including party 1's check.
pub fn build_plan(
    config: &ProtocolConfig,
    secrets: &[PartySecret],
    behaviors: &[PartyBehavior],
) -> Result<ProtocolPlan> {
    config.validate()?;
    let values = ordered_secrets(config, secrets)?;
    if behaviors.len() != config.parties {
        return Err(Error::Config(format!(
            "expected {} behaviors, got {}",
            config.parties,
            behaviors.len()
        )));
    }
    if behaviors[0] != PartyBehavior::Honest {
        return Err(Error::Config(
            "party 1 runs the check and cannot tamper".into(),
        ));
    }
    if behaviors.iter().any(|b| b.mask() >= config.modulus()) {
        return Err(Error::MaskOutOfRange {
            qubits: config.qubits,
        });
    }

    let layout = ProtocolLayout::new(config);
    let m = config.parties;
    let (h, t) = (&layout.home, &layout.transmitted);
    let mut circuit = Circuit::new(layout.qubit_count())
        .with_register("h", h)?
        .with_register("t", t)?;
    for (i, reg) in layout.secret_registers.iter().enumerate() {
        circuit.add_register(&format!("y{}", i + 2), reg)?;
    }

    let mut initial_index = values[0];
    for (i, reg) in layout.secret_registers.iter().enumerate() {
        initial_index |= values[i + 1] << reg[0];
    }

    let mut transmissions = Vec::with_capacity(m);
    circuit.append(&qft(h)?);
    circuit.append(&entangle_registers(h, t)?);
    transmissions.push(Transmission {
        from: 1,
        to: 2,
        register: "t",
    });
    for party in 2..=m {
        let mask = behaviors[party - 1].mask();
        for (k, &q) in t.iter().enumerate() {
            if (mask >> k) & 1 == 1 {
                circuit.push(GateOp::x(q))?;
            }
        }
        let scratch = layout.secret_registers.get(party - 2).map(Vec::as_slice);
        circuit.append(&oracle_circuit(values[party - 1], t, config.mode, scratch)?);
        transmissions.push(Transmission {
            from: party,
            to: if party == m { 1 } else { party + 1 },
            register: "t",
        });
    }
    circuit.append(&entangle_registers(h, t)?);
    circuit.append(&iqft(h)?);
    debug_assert_eq!(circuit.qubit_count(), layout.qubit_count());

    Ok(ProtocolPlan {
        layout,
        circuit,
        initial_index,
        transmissions,
    })
}

/// Execution options beyond the protocol itself.
#[derive(Debug, Clone, Default)]
pub struct RunOptions<'a> {
    /// Trajectory noise; `None` runs the ideal simulator.
    pub noise: Option<NoiseModel>,
    /// Rewrite the circuit onto this device before running.
    pub coupling_map: Option<&'a CouplingMap>,
}

/// Runs the protocol with ideal simulation and no transpilation.
pub fn run_summation(
    config: &ProtocolConfig,
    secrets: &[PartySecret],
    behaviors: &[PartyBehavior],
) -> Result<ProtocolTranscript> {
    run_summation_with(config, secrets, behaviors, &RunOptions::default())
}

pub fn run_summation_with(
    config: &ProtocolConfig,
    secrets: &[PartySecret],
    behaviors: &[PartyBehavior],
    options: &RunOptions<'_>,
) -> Result<ProtocolTranscript> {
    let mut plan = build_plan(config, secrets, behaviors)?;
    let transpile_report = match options.coupling_map {
        Some(map) => {
            let (rewritten, report) = transpile(&plan.circuit, map)?;
            plan.circuit = rewritten;
            Some(report)
        }
        None => None,
    };
    let width = plan.circuit.qubit_count();
    let mut state = StateVector::new_basis_state(width, plan.initial_index)?;
    let (home, transmitted) = (&plan.layout.home, &plan.layout.transmitted);

    let (verification, histogram) = match options.noise.filter(|m| !m.is_noiseless()) {
        None => {
            // The closing inverse QFT acts on h only, so measuring t after it
            // is equivalent to measuring t before it.
            state.apply_circuit(&plan.circuit)?;
            let check = state.measure_register(transmitted)?;
            let verification = check.sample(&mut shot_rng(config.seed, 0, Stream::Verify));
            if verification != 0 {
                (verification, None)
            } else {
                let collapsed = check.collapse(0)?;
                let full = collapsed.measure_all(config.shots, config.seed)?;
                (0, Some(full.marginal(home)))
            }
        }
        Some(model) => {
            let full = run_noisy(&plan.circuit, &state, &model, config.shots)?;
            let verification = full.marginal(transmitted).mode().unwrap_or(0);
            let hist = (verification == 0).then(|| full.marginal(home));
            (verification, hist)
        }
    };
    let result = match &histogram {
        Some(h) => Outcome::Sum(h.mode().unwrap_or(0)),
        None => Outcome::Aborted,
    };
    Ok(ProtocolTranscript {
        transmissions: plan.transmissions,
        verification,
        histogram,
        result,
        transpile: transpile_report,
    })
}

/// y^k mod N by square-and-multiply.
fn pow_mod(base: u64, mut exp: u32, modulus: u64) -> u64 {
    let m = modulus as u128;
    let mut b = base as u128 % m;
    let mut acc = 1u128 % m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    acc as u64
}

/// Σ y_i^k mod N: each party raises its own secret locally, then the ordinary
/// summation runs on the transformed values.
pub fn run_power_summation(
    config: &ProtocolConfig,
    secrets: &[PartySecret],
    power: u32,
) -> Result<ProtocolTranscript> {
    let honest = vec![PartyBehavior::Honest; secrets.len()];
    run_power_summation_with(config, secrets, &honest, power, &RunOptions::default())
}

pub fn run_power_summation_with(
    config: &ProtocolConfig,
    secrets: &[PartySecret],
    behaviors: &[PartyBehavior],
    power: u32,
    options: &RunOptions<'_>,
) -> Result<ProtocolTranscript> {
    if power == 0 {
        return Err(Error::Config("power must be at least 1".into()));
    }
    let modulus = config.modulus();
    if secrets.iter().any(|s| s.value >= modulus) {
        return Err(Error::SecretOutOfRange { modulus });
    }
    let raised: Vec<PartySecret> = secrets
        .iter()
        .map(|s| PartySecret::new(s.party, pow_mod(s.value, power, modulus)))
        .collect();
    run_summation_with(config, &raised, behaviors, options)
}

/// Classical reference: (Σ y_i^k) mod N with plain integer arithmetic.
pub fn brute_force_power_sum(secrets: &[u64], modulus: u64, power: u32) -> u64 {
    let total: u128 = secrets
        .iter()
        .map(|&y| match (y as u128).checked_pow(power) {
            Some(v) => v % modulus as u128,
            None => (0..power).fold(1u128, |acc, _| acc * y as u128 % modulus as u128),
        })
        .sum();
    (total % modulus as u128) as u64
}

/// Runs the protocol with at least one bit-flipping party and reports what
/// the check saw.
pub fn detect_tamper(
    config: &ProtocolConfig,
    secrets: &[PartySecret],
    behaviors: &[PartyBehavior],
) -> Result<ProtocolTranscript> {
    if behaviors.iter().all(|b| b.mask() == 0) {
        return Err(Error::Config("no party tampers".into()));
    }
    run_summation(config, secrets, behaviors)
}
