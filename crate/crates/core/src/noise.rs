//! Monte-Carlo Pauli noise on statevector trajectories.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::rng::{shot_rng, Stream};
use crate::state::{ShotHistogram, StateVector};

/// Depolarizing-style gate noise plus optional readout flips.
///
/// After every gate, each qubit the gate touched suffers X, Y or Z (uniformly)
/// with probability `p_gate`. Each measured bit is flipped with probability
/// `p_readout`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub p_gate: f64,
    #[serde(default)]
    pub p_readout: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(p_gate: f64, seed: u64) -> Result<Self> {
        Self::with_readout(p_gate, 0.0, seed)
    }

    pub fn with_readout(p_gate: f64, p_readout: f64, seed: u64) -> Result<Self> {
        let model = Self {
            p_gate,
            p_readout,
            seed,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        for p in [self.p_gate, self.p_readout] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidProbability(p));
            }
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.p_gate == 0.0 && self.p_readout == 0.0
    }
}

fn inject<R: Rng>(state: &mut StateVector, qubit: usize, rng: &mut R) -> Result<()> {
    match rng.gen_range(0..3) {
        0 => state.apply_x(qubit),
        1 => state.apply_y(qubit),
        _ => state.apply_z(qubit),
    }
}

/// Runs one trajectory per shot. Shot `s` takes its error draws from the
/// [`Stream::Noise`] generator and its measurement draw from the
/// [`Stream::Measure`] generator of shot `s`, so with a noiseless model the
/// histogram equals [`StateVector::measure_all`] on the ideal final state.
pub fn run_noisy(
    circuit: &Circuit,
    initial: &StateVector,
    model: &NoiseModel,
    shots: u64,
) -> Result<ShotHistogram> {
    model.validate()?;
    if shots == 0 {
        return Err(Error::NoShots);
    }
    let width = initial.qubit_count();
    // Without gate noise every trajectory ends in the same state.
    let ideal = if model.p_gate == 0.0 {
        let mut s = initial.clone();
        s.apply_circuit(circuit)?;
        Some(s.cumulative())
    } else {
        None
    };
    let mut outcomes = Vec::with_capacity(shots as usize);
    for shot in 0..shots {
        let mut noise_rng = shot_rng(model.seed, shot, Stream::Noise);
        let cumulative = match &ideal {
            Some(c) => std::borrow::Cow::Borrowed(c),
            None => {
                let mut s = initial.clone();
                for op in circuit.ops() {
                    s.apply_gate(op)?;
                    for q in op.qubits() {
                        if noise_rng.gen::<f64>() < model.p_gate {
                            inject(&mut s, q, &mut noise_rng)?;
                        }
                    }
                }
                std::borrow::Cow::Owned(s.cumulative())
            }
        };
        let mut measure_rng = shot_rng(model.seed, shot, Stream::Measure);
        let mut outcome = StateVector::sample_index(&cumulative, &mut measure_rng) as u64;
        if model.p_readout > 0.0 {
            for q in 0..width {
                if noise_rng.gen::<f64>() < model.p_readout {
                    outcome ^= 1 << q;
                }
            }
        }
        outcomes.push(outcome);
    }
    Ok(ShotHistogram::from_outcomes(width, outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::GateOp;

    fn x_circuit() -> Circuit {
        let mut c = Circuit::new(1);
        c.push(GateOp::x(0)).unwrap();
        c
    }

    #[test]
    fn noiseless_matches_ideal_sampling() {
        let mut c = Circuit::new(2);
        c.push(GateOp::h(0)).unwrap();
        c.push(GateOp::h(1)).unwrap();
        let init = StateVector::new_basis_state(2, 0).unwrap();
        let noisy = run_noisy(&c, &init, &NoiseModel::new(0.0, 99).unwrap(), 3000).unwrap();
        let mut ideal = init.clone();
        ideal.apply_circuit(&c).unwrap();
        assert_eq!(noisy, ideal.measure_all(3000, 99).unwrap());
    }

    #[test]
    fn full_noise_corrupts() {
        let init = StateVector::new_basis_state(1, 0).unwrap();
        let h = run_noisy(&x_circuit(), &init, &NoiseModel::new(1.0, 5).unwrap(), 6000).unwrap();
        // X then a uniform Pauli: Z keeps |1⟩, X or Y returns to |0⟩.
        let p1 = h.count("1") as f64 / 6000.0;
        assert!(p1 < 1.0);
        assert!((p1 - 1.0 / 3.0).abs() < 0.03, "p1 = {p1}");
    }

    #[test]
    fn readout_flips() {
        let init = StateVector::new_basis_state(1, 0).unwrap();
        let m = NoiseModel::with_readout(0.0, 1.0, 1).unwrap();
        let h = run_noisy(&x_circuit(), &init, &m, 100).unwrap();
        assert_eq!(h.count("0"), 100);
    }

    #[test]
    fn rejects_bad_probability_and_zero_shots() {
        assert_eq!(NoiseModel::new(1.5, 0), Err(Error::InvalidProbability(1.5)));
        assert!(NoiseModel::with_readout(0.1, -0.1, 0).is_err());
        let init = StateVector::new_basis_state(1, 0).unwrap();
        let m = NoiseModel::new(0.1, 0).unwrap();
        assert_eq!(run_noisy(&x_circuit(), &init, &m, 0), Err(Error::NoShots));
    }

    #[test]
    fn replayable() {
        let init = StateVector::new_basis_state(1, 0).unwrap();
        let m = NoiseModel::new(0.3, 17).unwrap();
        let a = run_noisy(&x_circuit(), &init, &m, 500).unwrap();
        assert_eq!(a, run_noisy(&x_circuit(), &init, &m, 500).unwrap());
    }
}
