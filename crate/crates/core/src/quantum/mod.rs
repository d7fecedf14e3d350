//! Exact dense simulation of small multi-qubit systems.
//!
//! Subsystem 0 is the leftmost tensor factor and the most significant part
//! of a basis index, matching the textual bit-string convention of [`crate::gf2`]:
//! basis state |b0 b1 .. b(N-1)> has index sum(b_i 2^(N-1-i)).
//!
//! Matrices are dense `nalgebra` arrays of `Complex64`; nothing here is meant
//! to scale past a dozen qubits.

mod pauli;
mod source;
mod state;

pub use pauli::{commutes, pauli_matrix, measure_string, PauliString};
pub use source::{coin_imbalance, coin_state, two_pure_source, Povm, SignalAngles, TwoPureSource};
pub use state::{
    basis_distribution, embed_operator, fidelity, measure_each, random_density, random_pure,
    von_neumann_entropy, DensityMatrix, PureState,
};

pub(crate) use state::sample_index;

use thiserror::Error;

/// Validation tolerance for state invariants (norm, hermiticity, trace,
/// positivity, POVM completeness).
pub const STATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error("dims {dims:?} do not multiply to the data dimension {dim}")]
    DimsMismatch { dims: Vec<usize>, dim: usize },
    #[error("state norm {0} is not 1 within tolerance")]
    NotNormalized(f64),
    #[error("matrix deviates from hermitian by {0}")]
    NotHermitian(f64),
    #[error("trace {0} is not 1 within tolerance")]
    BadTrace(f64),
    #[error("eigenvalue {0} below the positivity tolerance")]
    NotPositive(f64),
    #[error("probabilities {0:?} are not a distribution")]
    BadProbabilities(Vec<f64>),
    #[error("povm elements do not sum to the identity (deviation {0})")]
    IncompletePovm(f64),
    #[error("requested overlap {requested} exceeds the fidelity {available}")]
    OverlapInfeasible { requested: f64, available: f64 },
    #[error("imbalance {0} outside [0, 1/2]")]
    BadImbalance(f64),
}

/// Measurement axis for per-qubit and string observables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Z,
    X,
}
