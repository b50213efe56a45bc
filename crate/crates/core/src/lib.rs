//! Statevector simulation of multiparty quantum summation.
//!
//! The crate is layered bottom-up:
//!
//! - [`state`] and [`density`]: dense amplitudes, measurement, density matrices.
//! - [`gate`] and [`circuit`]: the gate IR, QFT / entangler / oracle builders,
//!   the plain-text circuit format and the full-matrix verification oracle.
//! - [`transpile`]: rewriting onto a directed CNOT coupling map.
//! - [`protocol`]: the m-party summation, power sums and tamper checks.
//! - [`noise`] and [`metrics`]: Pauli trajectories, fidelity and deviations.

pub mod circuit;
pub mod density;
pub mod error;
pub mod gate;
pub mod metrics;
pub mod noise;
pub mod protocol;
pub mod rng;
pub mod state;
pub mod transpile;

pub use circuit::{Circuit, OracleMode};
pub use density::DensityMatrix;
pub use error::{Error, Result};
pub use gate::{GateKind, GateOp};
pub use noise::NoiseModel;
pub use protocol::{
    Outcome, PartyBehavior, PartySecret, ProtocolConfig, ProtocolTranscript, RunOptions,
};
pub use state::{ShotHistogram, StateVector};
pub use transpile::{CouplingMap, TranspileReport};
