//! Certified bounds on spin-system observables from moment relaxations and
//! finite-shot confidence bands.

pub mod confidence;
pub mod error;
pub mod models;
pub mod oracle;
pub mod pauli;
pub mod relax;
pub mod sampler;
pub mod scenario;
pub mod sdp;

pub use error::{Error, Result};
pub use pauli::{multiply, OperatorPoly, Pauli, PauliString, Phase, PhasedString};
