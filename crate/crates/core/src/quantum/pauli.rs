//! Tensor products of a single Pauli over a support pattern, and their
//! projective measurement.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use super::state::sample_index;
use super::{Axis, DensityMatrix};
use crate::gf2::BitVector;

/// sigma_axis applied at every 1 of `pattern`, identity elsewhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PauliString {
    pub axis: Axis,
    pub pattern: BitVector,
}

impl PauliString {
    pub fn new(axis: Axis, pattern: BitVector) -> Self {
        Self { axis, pattern }
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.pattern.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        false
    }
}

fn single(axis: Axis) -> DMatrix<Complex64> {
    let z = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    match axis {
        Axis::Z => DMatrix::from_row_slice(2, 2, &[one, z, z, -one]),
        Axis::X => DMatrix::from_row_slice(2, 2, &[z, one, one, z]),
    }
}

/// Dense matrix of the string observable. Capped at 12 qubits; above that
/// the dense form stops being a desk-scale object.
#[must_use]
pub fn pauli_matrix(p: &PauliString) -> DMatrix<Complex64> {
    let n = p.len();
    assert!(n <= 12, "dense Pauli strings are capped at 12 qubits");
    let sigma = single(p.axis);
    let id = DMatrix::identity(2, 2);
    let mut out = DMatrix::identity(1, 1);
    for i in 0..n {
        let factor = if p.pattern.get(i) { &sigma } else { &id };
        out = out.kronecker(factor);
    }
    out
}

/// Strings over the same axis always commute; over conjugate axes they
/// commute exactly when the supports overlap in an even number of places.
#[must_use]
pub fn commutes(p: &PauliString, q: &PauliString) -> bool {
    assert_eq!(p.len(), q.len(), "strings must cover the same qubits");
    if p.axis == q.axis {
        return true;
    }
    !p.pattern.dot(&q.pattern)
}

/// Projective measurement of the +-1 string observable: samples an outcome
/// by the Born rule and collapses onto the corresponding eigenspace.
pub fn measure_string<R: Rng + ?Sized>(
    state: &DensityMatrix,
    p: &PauliString,
    rng: &mut R,
) -> (i8, DensityMatrix) {
    assert_eq!(
        state.dims(),
        &vec![2; p.len()][..],
        "state and string must cover the same qubits"
    );
    let m = pauli_matrix(p);
    let dim = state.dim();
    let id = DMatrix::identity(dim, dim);
    let half = Complex64::new(0.5, 0.0);
    let proj_plus = (&id + &m) * half;
    let proj_minus = (&id - &m) * half;
    let p_plus = state.expectation(&proj_plus).clamp(0.0, 1.0);
    let outcome = if sample_index(&[p_plus, 1.0 - p_plus], rng) == 0 { 1i8 } else { -1 };
    let (proj, prob) = if outcome == 1 {
        (proj_plus, p_plus)
    } else {
        (proj_minus, 1.0 - p_plus)
    };
    assert!(prob > 1e-15, "sampled outcome has no weight");
    let post = &proj * state.matrix() * &proj / Complex64::new(prob, 0.0);
    (
        outcome,
        DensityMatrix::from_matrix_unchecked(state.dims().to_vec(), post),
    )
}
