//! Correlated randomized benchmarking.
//!
//! Simulates simultaneous Clifford sequences on a noisy multi-qubit device,
//! measures every correlated Z-decay, fits them, and converts the decays into
//! the weight-parameterized error model and the crosstalk metric.

pub mod channel;
pub mod clifford;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod metrics;
pub mod optim;
pub mod pauli;
pub mod plot;
pub mod protocol;
pub mod rng;
pub mod simulator;

pub use error::{Error, Result};
pub use pauli::{Partition, PauliOperator, SupportPattern};
