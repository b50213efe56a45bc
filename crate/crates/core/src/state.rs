//! Dense statevector simulation.
//!
//! Qubit 0 is the least significant bit of the basis-state index throughout the
//! crate. Bitstrings are written most significant qubit first, so basis index 6
//! on three qubits prints as `110`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::gate::{GateKind, GateOp};
use crate::rng::{shot_rng, Stream};

/// Largest register the dense simulator accepts.
pub const MAX_QUBITS: usize = 20;

/// Tolerance for normalization and other invariant checks.
pub const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    qubit_count: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Computational basis state `|index⟩`.
    pub fn new_basis_state(qubit_count: usize, index: u64) -> Result<Self> {
        check_capacity(qubit_count)?;
        let dim = 1u64 << qubit_count;
        if index >= dim {
            return Err(Error::BasisIndexOutOfRange { index, qubit_count });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim as usize];
        amplitudes[index as usize] = Complex64::new(1.0, 0.0);
        Ok(Self {
            qubit_count,
            amplitudes,
        })
    }

    /// Wraps an amplitude vector, checking length and normalization.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(len));
        }
        let qubit_count = len.trailing_zeros() as usize;
        check_capacity(qubit_count)?;
        let state = Self {
            qubit_count,
            amplitudes,
        };
        let norm = state.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > TOLERANCE {
            return Err(Error::NotNormalized(norm));
        }
        Ok(state)
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `self ⊗ high`: `self` keeps qubits `0..q`, `high` occupies the qubits above.
    pub fn tensor(&self, high: &StateVector) -> Result<StateVector> {
        check_capacity(self.qubit_count + high.qubit_count)?;
        let mut amplitudes = Vec::with_capacity(self.dim() * high.dim());
        for h in &high.amplitudes {
            amplitudes.extend(self.amplitudes.iter().map(|l| l * h));
        }
        Ok(StateVector {
            qubit_count: self.qubit_count + high.qubit_count,
            amplitudes,
        })
    }

    /// Inner product ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.qubit_count {
            return Err(Error::QubitOutOfRange {
                index: q,
                qubit_count: self.qubit_count,
            });
        }
        Ok(())
    }

    /// Applies `gate` in place by iterating amplitude pairs; never builds the
    /// full unitary.
    pub fn apply_gate(&mut self, gate: &GateOp) -> Result<()> {
        for q in gate.qubits() {
            self.check_qubit(q)?;
        }
        let t = gate.target();
        let cmask = gate.control().map_or(0, |c| 1usize << c);
        match gate.kind() {
            GateKind::H => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                self.for_each_pair(t, cmask, |a0, a1| {
                    let (x, y) = (*a0, *a1);
                    *a0 = (x + y) * s;
                    *a1 = (x - y) * s;
                });
            }
            GateKind::X | GateKind::Cnot => {
                self.for_each_pair(t, cmask, std::mem::swap);
            }
            GateKind::Phase(theta) | GateKind::CPhase(theta) => {
                let w = Complex64::from_polar(1.0, theta);
                self.scale_where(cmask | (1 << t), w);
            }
            GateKind::Cz => {
                self.scale_where(cmask | (1 << t), Complex64::new(-1.0, 0.0));
            }
            GateKind::Swap => {
                let (a, b) = (1usize << gate.targets()[0], 1usize << gate.targets()[1]);
                for i in 0..self.dim() {
                    if i & a != 0 && i & b == 0 {
                        self.amplitudes.swap(i, i ^ a ^ b);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.qubit_count() > self.qubit_count {
            return Err(Error::QubitOutOfRange {
                index: circuit.qubit_count() - 1,
                qubit_count: self.qubit_count,
            });
        }
        circuit.ops().iter().try_for_each(|op| self.apply_gate(op))
    }

    pub fn apply_x(&mut self, q: usize) -> Result<()> {
        self.check_qubit(q)?;
        self.for_each_pair(q, 0, std::mem::swap);
        Ok(())
    }

    pub fn apply_y(&mut self, q: usize) -> Result<()> {
        self.check_qubit(q)?;
        let i = Complex64::i();
        self.for_each_pair(q, 0, |a0, a1| {
            let (x, y) = (*a0, *a1);
            *a0 = -i * y;
            *a1 = i * x;
        });
        Ok(())
    }

    pub fn apply_z(&mut self, q: usize) -> Result<()> {
        self.check_qubit(q)?;
        self.scale_where(1 << q, Complex64::new(-1.0, 0.0));
        Ok(())
    }

    /// Calls `f(a0, a1)` for every index pair differing only in bit `target`
    /// whose control bits (`cmask`) are all set.
    fn for_each_pair<F>(&mut self, target: usize, cmask: usize, mut f: F)
    where
        F: FnMut(&mut Complex64, &mut Complex64),
    {
        let tbit = 1usize << target;
        for i in 0..self.amplitudes.len() {
            if i & tbit != 0 || i & cmask != cmask {
                continue;
            }
            let (lo, hi) = self.amplitudes.split_at_mut(i | tbit);
            f(&mut lo[i], &mut hi[0]);
        }
    }

    fn scale_where(&mut self, mask: usize, w: Complex64) {
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            if i & mask == mask {
                *a *= w;
            }
        }
    }

    /// Draws a basis index using one uniform variate from `rng`.
    pub(crate) fn sample_index<R: Rng>(cumulative: &[f64], rng: &mut R) -> usize {
        let total = *cumulative.last().expect("non-empty distribution");
        let u = rng.gen::<f64>() * total;
        // First index whose cumulative mass exceeds u; zero-probability
        // outcomes own an empty interval and are never selected.
        cumulative
            .partition_point(|&c| c <= u)
            .min(cumulative.len() - 1)
    }

    pub(crate) fn cumulative(&self) -> Vec<f64> {
        self.amplitudes
            .iter()
            .scan(0.0, |acc, a| {
                *acc += a.norm_sqr();
                Some(*acc)
            })
            .collect()
    }

    /// Samples `shots` full-register measurements. Shot `s` draws from the
    /// [`Stream::Measure`] generator of shot `s`, so results replay exactly.
    pub fn measure_all(&self, shots: u64, seed: u64) -> Result<ShotHistogram> {
        if shots == 0 {
            return Err(Error::NoShots);
        }
        let cumulative = self.cumulative();
        let outcomes = (0..shots).map(|s| {
            let mut rng = shot_rng(seed, s, Stream::Measure);
            Self::sample_index(&cumulative, &mut rng) as u64
        });
        Ok(ShotHistogram::from_outcomes(self.qubit_count, outcomes))
    }

    /// Outcome distribution of measuring `qubits`; `qubits[0]` is the least
    /// significant bit of the outcome value.
    pub fn measure_register(&self, qubits: &[usize]) -> Result<RegisterMeasurement> {
        if qubits.is_empty() {
            return Err(Error::EmptyRegister);
        }
        for (k, &q) in qubits.iter().enumerate() {
            self.check_qubit(q)?;
            if qubits[..k].contains(&q) {
                return Err(Error::DuplicateQubit(q));
            }
        }
        let mut probabilities = vec![0.0; 1 << qubits.len()];
        for (i, a) in self.amplitudes.iter().enumerate() {
            probabilities[extract_bits(i, qubits)] += a.norm_sqr();
        }
        Ok(RegisterMeasurement {
            qubits: qubits.to_vec(),
            probabilities,
            state: self.clone(),
        })
    }
}

/// Packs the bits of `index` at positions `qubits` into a new integer.
pub(crate) fn extract_bits(index: usize, qubits: &[usize]) -> usize {
    qubits
        .iter()
        .enumerate()
        .fold(0, |acc, (k, &q)| acc | (((index >> q) & 1) << k))
}

fn check_capacity(qubit_count: usize) -> Result<()> {
    if qubit_count == 0 || qubit_count > MAX_QUBITS {
        return Err(Error::Capacity {
            qubit_count,
            capacity: MAX_QUBITS,
        });
    }
    Ok(())
}

/// Result of a projective measurement on a sub-register.
#[derive(Debug, Clone)]
pub struct RegisterMeasurement {
    qubits: Vec<usize>,
    probabilities: Vec<f64>,
    state: StateVector,
}

impl RegisterMeasurement {
    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    /// Probability of each outcome value, indexed by value.
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, outcome: u64) -> f64 {
        self.probabilities
            .get(outcome as usize)
            .copied()
            .unwrap_or(0.0)
    }

    /// Draws one outcome with `rng`.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> u64 {
        let cumulative: Vec<f64> = self
            .probabilities
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect();
        StateVector::sample_index(&cumulative, rng) as u64
    }

    /// Post-measurement state for `outcome`, renormalized.
    pub fn collapse(&self, outcome: u64) -> Result<StateVector> {
        let p = self.probability(outcome);
        if p <= 0.0 {
            return Err(Error::ImpossibleOutcome { outcome });
        }
        let scale = 1.0 / p.sqrt();
        let amplitudes = self
            .state
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| {
                if extract_bits(i, &self.qubits) as u64 == outcome {
                    a * scale
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Ok(StateVector {
            qubit_count: self.state.qubit_count,
            amplitudes,
        })
    }
}

/// Counts of measured bitstrings over a fixed number of shots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotHistogram {
    shots: u64,
    width: usize,
    counts: BTreeMap<String, u64>,
}

impl ShotHistogram {
    /// Builds a histogram from outcome values on a `width`-bit register.
    pub fn from_outcomes(width: usize, outcomes: impl IntoIterator<Item = u64>) -> Self {
        let mut by_value: BTreeMap<u64, u64> = BTreeMap::new();
        let mut shots = 0;
        for o in outcomes {
            *by_value.entry(o).or_default() += 1;
            shots += 1;
        }
        let counts = by_value
            .into_iter()
            .map(|(v, c)| (bitstring(v, width), c))
            .collect();
        Self {
            shots,
            width,
            counts,
        }
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    pub fn count(&self, bits: &str) -> u64 {
        self.counts.get(bits).copied().unwrap_or(0)
    }

    pub fn count_value(&self, value: u64) -> u64 {
        self.count(&bitstring(value, self.width))
    }

    /// Most frequent outcome value; ties go to the smaller value.
    pub fn mode(&self) -> Option<u64> {
        self.values()
            .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
            .map(|(v, _)| v)
    }

    /// (value, count) pairs in ascending value order.
    pub fn values(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts
            .iter()
            .map(|(k, &c)| (u64::from_str_radix(k, 2).unwrap_or(0), c))
    }

    /// Histogram of the sub-register `qubits` (qubits[0] least significant).
    pub fn marginal(&self, qubits: &[usize]) -> Self {
        let mut by_value: BTreeMap<u64, u64> = BTreeMap::new();
        for (v, c) in self.values() {
            *by_value
                .entry(extract_bits(v as usize, qubits) as u64)
                .or_default() += c;
        }
        Self {
            shots: self.shots,
            width: qubits.len(),
            counts: by_value
                .into_iter()
                .map(|(v, c)| (bitstring(v, qubits.len()), c))
                .collect(),
        }
    }
}

/// `value` as a `width`-character bitstring, most significant bit first.
pub fn bitstring(value: u64, width: usize) -> String {
    (0..width)
        .rev()
        .map(|b| if (value >> b) & 1 == 1 { '1' } else { '0' })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_amplitudes(state: &StateVector, expected: &[Complex64]) {
        assert_eq!(state.dim(), expected.len());
        for (a, e) in state.amplitudes().iter().zip(expected) {
            assert_abs_diff_eq!(a.re, e.re, epsilon = 1e-12);
            assert_abs_diff_eq!(a.im, e.im, epsilon = 1e-12);
        }
    }

    fn bell() -> StateVector {
        let mut s = StateVector::new_basis_state(2, 0).unwrap();
        s.apply_gate(&GateOp::h(0)).unwrap();
        s.apply_gate(&GateOp::cnot(0, 1).unwrap()).unwrap();
        s
    }

    #[test]
    fn basis_states() {
        let one = c(1.0, 0.0);
        let zero = c(0.0, 0.0);
        assert_amplitudes(&StateVector::new_basis_state(1, 0).unwrap(), &[one, zero]);
        assert_amplitudes(
            &StateVector::new_basis_state(2, 3).unwrap(),
            &[zero, zero, zero, one],
        );
        let six = StateVector::new_basis_state(3, 6).unwrap();
        assert_eq!(six.amplitude(6), one);
        assert_eq!(six.measure_all(10, 0).unwrap().count("110"), 10);
    }

    #[test]
    fn basis_state_out_of_range() {
        assert_eq!(
            StateVector::new_basis_state(2, 4),
            Err(Error::BasisIndexOutOfRange {
                index: 4,
                qubit_count: 2
            })
        );
        assert!(matches!(
            StateVector::new_basis_state(MAX_QUBITS + 1, 0),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn hadamard_cnot_phase() {
        let s = FRAC_1_SQRT_2;
        let mut st = StateVector::new_basis_state(1, 0).unwrap();
        st.apply_gate(&GateOp::h(0)).unwrap();
        assert_amplitudes(&st, &[c(s, 0.0), c(s, 0.0)]);
        st.apply_gate(&GateOp::phase(0, PI)).unwrap();
        assert_amplitudes(&st, &[c(s, 0.0), c(-s, 0.0)]);

        assert_amplitudes(&bell(), &[c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]);
    }

    #[test]
    fn gate_errors() {
        let mut st = StateVector::new_basis_state(2, 0).unwrap();
        assert_eq!(
            st.apply_gate(&GateOp::h(2)),
            Err(Error::QubitOutOfRange {
                index: 2,
                qubit_count: 2
            })
        );
        assert!(st.apply_gate(&GateOp::cnot(0, 5).unwrap()).is_err());
    }

    #[test]
    fn swap_and_cz() {
        let mut st = StateVector::new_basis_state(2, 1).unwrap();
        st.apply_gate(&GateOp::swap(0, 1).unwrap()).unwrap();
        assert_eq!(st.amplitude(2), c(1.0, 0.0));
        let mut st = StateVector::new_basis_state(2, 3).unwrap();
        st.apply_gate(&GateOp::cz(0, 1).unwrap()).unwrap();
        assert_eq!(st.amplitude(3), c(-1.0, 0.0));
    }

    #[test]
    fn pauli_y_matches_definition() {
        let mut st = StateVector::new_basis_state(1, 0).unwrap();
        st.apply_y(0).unwrap();
        assert_amplitudes(&st, &[c(0.0, 0.0), c(0.0, 1.0)]);
        st.apply_y(0).unwrap();
        assert_amplitudes(&st, &[c(1.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn measure_basis_state() {
        let st = StateVector::new_basis_state(1, 1).unwrap();
        let h = st.measure_all(8192, 3).unwrap();
        assert_eq!(h.counts().len(), 1);
        assert_eq!(h.count("1"), 8192);
        assert_eq!(st.measure_all(0, 3), Err(Error::NoShots));
    }

    #[test]
    fn bell_never_yields_odd_parity() {
        let h = bell().measure_all(20_000, 11).unwrap();
        assert_eq!(h.count("01") + h.count("10"), 0);
        assert_eq!(h.count("00") + h.count("11"), 20_000);
        assert!(h.count("00") > 9_000 && h.count("11") > 9_000);
    }

    #[test]
    fn seeded_sampling_replays() {
        let mut st = StateVector::new_basis_state(2, 0).unwrap();
        st.apply_gate(&GateOp::h(0)).unwrap();
        st.apply_gate(&GateOp::h(1)).unwrap();
        let a = st.measure_all(4096, 1234).unwrap();
        let b = st.measure_all(4096, 1234).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, st.measure_all(4096, 1235).unwrap());
        assert_eq!(a.counts().values().sum::<u64>(), 4096);
    }

    #[test]
    fn register_measurement() {
        let m = bell().measure_register(&[0]).unwrap();
        assert_abs_diff_eq!(m.probability(0), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(m.probability(1), 0.5, epsilon = 1e-12);
        let collapsed = m.collapse(1).unwrap();
        assert_abs_diff_eq!(collapsed.amplitude(3).re, 1.0, epsilon = 1e-12);

        let st = StateVector::new_basis_state(2, 0b10).unwrap();
        let m = st.measure_register(&[1]).unwrap();
        assert_eq!(m.probabilities(), &[0.0, 1.0]);
        assert_eq!(m.collapse(0), Err(Error::ImpossibleOutcome { outcome: 0 }));

        assert_eq!(
            st.measure_register(&[0, 0]).err(),
            Some(Error::DuplicateQubit(0))
        );
        assert!(st.measure_register(&[2]).is_err());
        assert_eq!(st.measure_register(&[]).err(), Some(Error::EmptyRegister));
    }

    #[test]
    fn histogram_marginal_and_mode() {
        let h = ShotHistogram::from_outcomes(3, [0b110, 0b110, 0b011, 0b001]);
        let low = h.marginal(&[0]);
        assert_eq!(low.count("0"), 2);
        assert_eq!(low.count("1"), 2);
        assert_eq!(low.mode(), Some(0));
        assert_eq!(h.marginal(&[1, 2]).count("11"), 2);
        assert_eq!(h.mode(), Some(0b110));
    }

    #[test]
    fn from_amplitudes_checks() {
        assert_eq!(
            StateVector::from_amplitudes(vec![c(1.0, 0.0); 3]),
            Err(Error::NotPowerOfTwo(3))
        );
        assert!(matches!(
            StateVector::from_amplitudes(vec![c(1.0, 0.0); 2]),
            Err(Error::NotNormalized(_))
        ));
    }
}
