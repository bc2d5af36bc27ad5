//! Simulation of many-body entanglement swapping: state-vector core, Schmidt
//! analytics, unitary synthesis, the swapping protocols, target-state
//! generators and noise models.

pub mod circuits;
pub mod error;
pub mod noise;
pub mod protocol;
pub mod schmidt;
pub mod state;
pub mod synth;

pub use error::{Error, Result};
pub use state::{MeasurementRecord, QubitPartition, StateVector, UnitaryMatrix};
