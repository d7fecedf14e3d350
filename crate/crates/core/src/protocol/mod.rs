//! Desk-scale simulation of the entanglement-based BB84 key agreement loop
//! (sifting, sampling, encrypted reconciliation, privacy amplification)
//! together with exact verifiers for the reductions the key-rate calculus
//! rests on: the hashed-measurement protocol equivalence, the predictability
//! to x-basis-purity argument, and the quantum-coin statistics.
//!
//! Everything is deterministic given a seed; independent runs never share
//! state.

mod channel;
mod coin;
mod run;
mod source_model;
mod suites;
mod verify;

pub use channel::{ChannelModel, ChannelSpec};
pub use coin::{coin_scenario, CoinRecord};
pub use run::{
    hash_bits, privacy_amplify, reconcile, run_bb84, run_simulation, RoundRecord, RunParams,
    SimulationConfig, Transcript, DECODER_CAP,
};
pub use source_model::{tilted_angles, SourceModel, SourceSpec};
pub use suites::{
    coin_suite, equivalence_suite, hashing_suite, uncertainty_suite, CoinCheck, HashingReport,
    UncertaintyReport,
};
pub use verify::{
    verify_assumption_purity, verify_protocol_equivalence, EquivalenceReport, Estimator,
    PurityReport,
};

use crate::gf2::Gf2Error;
use crate::quantum::QuantumError;
use crate::rates::RateError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("configuration: {0}")]
    BadConfig(String),
    #[error("not enough {what}: needed {needed}, got {got}")]
    InsufficientData { what: &'static str, needed: usize, got: usize },
    #[error("hashing {m} of {n} bits leaves no key")]
    EmptyKey { m: usize, n: usize },
    #[error("syndrome decoding found {0} equally likely corrections")]
    Ambiguous(usize),
    #[error("kraus operators miss trace preservation by {0}")]
    NotTracePreserving(f64),
    #[error("dimension {dim} exceeds the exact-computation cap {cap}")]
    SizeLimit { dim: usize, cap: usize },
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
    #[error(transparent)]
    Rate(#[from] RateError),
}
