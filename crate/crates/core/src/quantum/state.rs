//! Pure states, density matrices, and the exact measurement primitives.

use nalgebra::linalg::SymmetricEigen;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Axis, QuantumError, STATE_TOL};
use crate::gf2::BitVector;

/// Roundoff headroom for eigenvalues of composite expressions (products of
/// validated matrices); stricter `STATE_TOL` applies to validation proper.
const CLIP_TOL: f64 = 1e-9;

pub(crate) fn herm_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let eig = SymmetricEigen::new(m.clone());
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// Clips the tiny negative eigenvalues roundoff produces; anything clearly
/// negative is a caller bug because every input is validated positive.
pub(crate) fn clip_eigenvalue(l: f64) -> f64 {
    assert!(l >= -CLIP_TOL, "eigenvalue {l} clearly negative");
    l.max(0.0)
}

pub(crate) fn psd_sqrt(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (evals, vecs) = herm_eigen(m);
    let d = DMatrix::from_diagonal(&DVector::from_iterator(
        evals.len(),
        evals
            .iter()
            .map(|&l| Complex64::new(clip_eigenvalue(l).sqrt(), 0.0)),
    ));
    &vecs * d * vecs.adjoint()
}

fn check_dims(dims: &[usize], dim: usize) -> Result<(), QuantumError> {
    let prod: usize = dims.iter().product();
    if dims.is_empty() || dims.contains(&0) || prod != dim {
        return Err(QuantumError::DimsMismatch { dims: dims.to_vec(), dim });
    }
    Ok(())
}

/// Normalized state vector over the listed subsystem dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    dims: Vec<usize>,
    amps: DVector<Complex64>,
}

impl PureState {
    pub fn new(dims: Vec<usize>, amps: Vec<Complex64>) -> Result<Self, QuantumError> {
        check_dims(&dims, amps.len())?;
        let amps = DVector::from_vec(amps);
        let norm = amps.norm();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(QuantumError::NotNormalized(norm));
        }
        Ok(Self { dims, amps })
    }

    /// Computational basis state |index> over the given dims.
    pub fn basis(dims: Vec<usize>, index: usize) -> Self {
        let dim: usize = dims.iter().product();
        assert!(index < dim);
        let mut amps = DVector::zeros(dim);
        amps[index] = Complex64::new(1.0, 0.0);
        Self { dims, amps }
    }

    pub(crate) fn from_vector_unchecked(dims: Vec<usize>, amps: DVector<Complex64>) -> Self {
        debug_assert!((amps.norm() - 1.0).abs() <= CLIP_TOL);
        Self { dims, amps }
    }

    #[must_use]
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    #[must_use]
    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    #[must_use]
    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amps
    }

    /// <self|other>.
    #[must_use]
    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!(self.dim(), other.dim(), "inner product needs equal dims");
        self.amps.dotc(&other.amps)
    }

    #[must_use]
    pub fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self { dims, amps: self.amps.kronecker(&other.amps) }
    }

    /// |self><self|.
    #[must_use]
    pub fn density(&self) -> DensityMatrix {
        DensityMatrix {
            dims: self.dims.clone(),
            mat: &self.amps * self.amps.adjoint(),
        }
    }
}

/// Trace-one positive matrix over the listed subsystem dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dims: Vec<usize>,
    mat: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates hermiticity, unit trace, and positivity, each within 1e-10.
    pub fn new(dims: Vec<usize>, mat: DMatrix<Complex64>) -> Result<Self, QuantumError> {
        if mat.nrows() != mat.ncols() {
            return Err(QuantumError::DimsMismatch { dims, dim: mat.nrows() });
        }
        check_dims(&dims, mat.nrows())?;
        let herm_dev = (&mat - mat.adjoint()).camax();
        if herm_dev > STATE_TOL {
            return Err(QuantumError::NotHermitian(herm_dev));
        }
        let trace = mat.trace();
        if (trace - Complex64::new(1.0, 0.0)).norm() > STATE_TOL {
            return Err(QuantumError::BadTrace(trace.re));
        }
        let (evals, _) = herm_eigen(&mat);
        let min = evals.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -STATE_TOL {
            return Err(QuantumError::NotPositive(min));
        }
        Ok(Self { dims, mat })
    }

    /// Maximally mixed state.
    pub fn mixed(dims: Vec<usize>) -> Self {
        let dim: usize = dims.iter().product();
        let mat = DMatrix::identity(dim, dim) * Complex64::new(1.0 / dim as f64, 0.0);
        Self { dims, mat }
    }

    pub(crate) fn from_matrix_unchecked(dims: Vec<usize>, mat: DMatrix<Complex64>) -> Self {
        Self { dims, mat }
    }

    #[must_use]
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    #[must_use]
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    #[must_use]
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    /// Re(tr(rho op)).
    #[must_use]
    pub fn expectation(&self, op: &DMatrix<Complex64>) -> f64 {
        assert_eq!(op.nrows(), self.dim());
        (&self.mat * op).trace().re
    }

    #[must_use]
    pub fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self { dims, mat: self.mat.kronecker(&other.mat) }
    }

    /// Traces out one subsystem.
    #[must_use]
    pub fn trace_out(&self, sub: usize) -> Self {
        assert!(sub < self.dims.len());
        let before: usize = self.dims[..sub].iter().product();
        let d = self.dims[sub];
        let after: usize = self.dims[sub + 1..].iter().product();
        let new_dim = before * after;
        let mut mat = DMatrix::zeros(new_dim, new_dim);
        for b in 0..before {
            for a in 0..after {
                for bp in 0..before {
                    for ap in 0..after {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for t in 0..d {
                            acc += self.mat[((b * d + t) * after + a, (bp * d + t) * after + ap)];
                        }
                        mat[(b * after + a, bp * after + ap)] = acc;
                    }
                }
            }
        }
        let mut dims: Vec<usize> = self.dims.clone();
        dims.remove(sub);
        if dims.is_empty() {
            dims.push(1);
        }
        Self { dims, mat }
    }

    /// Probability of computational outcome `outcome` on subsystem `sub` and
    /// the conditional state with that subsystem removed; `None` when the
    /// outcome has no weight.
    #[must_use]
    pub fn condition(&self, sub: usize, outcome: usize) -> (f64, Option<Self>) {
        assert!(sub < self.dims.len());
        let before: usize = self.dims[..sub].iter().product();
        let d = self.dims[sub];
        assert!(outcome < d);
        let after: usize = self.dims[sub + 1..].iter().product();
        let new_dim = before * after;
        let mut block = DMatrix::zeros(new_dim, new_dim);
        for b in 0..before {
            for a in 0..after {
                for bp in 0..before {
                    for ap in 0..after {
                        block[(b * after + a, bp * after + ap)] = self.mat
                            [((b * d + outcome) * after + a, (bp * d + outcome) * after + ap)];
                    }
                }
            }
        }
        let prob = block.trace().re.max(0.0);
        if prob < 1e-15 {
            return (0.0, None);
        }
        let mut dims: Vec<usize> = self.dims.clone();
        dims.remove(sub);
        if dims.is_empty() {
            dims.push(1);
        }
        (
            prob,
            Some(Self { dims, mat: block / Complex64::new(prob, 0.0) }),
        )
    }
}

/// I_before (x) op (x) I_after for an operator acting on subsystem `sub`.
#[must_use]
pub fn embed_operator(
    dims: &[usize],
    sub: usize,
    op: &DMatrix<Complex64>,
) -> DMatrix<Complex64> {
    assert!(sub < dims.len());
    assert_eq!(op.nrows(), dims[sub]);
    assert_eq!(op.ncols(), dims[sub]);
    let before: usize = dims[..sub].iter().product();
    let after: usize = dims[sub + 1..].iter().product();
    DMatrix::identity(before, before)
        .kronecker(op)
        .kronecker(&DMatrix::identity(after, after))
}

/// sqrt-fidelity Tr sqrt(sqrt(r1) r0 sqrt(r1)); 1 for identical states, and
/// |<psi0|psi1>| when both states are pure.
#[must_use]
pub fn fidelity(r0: &DensityMatrix, r1: &DensityMatrix) -> f64 {
    assert_eq!(r0.dim(), r1.dim(), "fidelity needs equal dimensions");
    let s = psd_sqrt(r1.matrix());
    let inner = &s * r0.matrix() * &s;
    let (evals, _) = herm_eigen(&inner);
    evals
        .iter()
        .map(|&l| clip_eigenvalue(l).sqrt())
        .sum::<f64>()
        .min(1.0)
}

/// Entropy of the spectrum, in bits.
#[must_use]
pub fn von_neumann_entropy(r: &DensityMatrix) -> f64 {
    let (evals, _) = herm_eigen(r.matrix());
    evals
        .iter()
        .map(|&l| {
            let l = clip_eigenvalue(l);
            if l > 0.0 {
                -l * l.log2()
            } else {
                0.0
            }
        })
        .sum()
}

fn hadamard_n(n: usize) -> DMatrix<Complex64> {
    let dim = 1usize << n;
    let scale = 1.0 / (dim as f64).sqrt();
    DMatrix::from_fn(dim, dim, |i, j| {
        let sign = if (i & j).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        Complex64::new(sign * scale, 0.0)
    })
}

fn qubit_count(state: &DensityMatrix) -> usize {
    assert!(
        state.dims().iter().all(|&d| d == 2),
        "per-qubit measurement needs an all-qubit state"
    );
    state.dims().len()
}

/// Exact outcome distribution of measuring every qubit along `axis`.
/// Index i of the result is the probability of the bit string with value i.
#[must_use]
pub fn basis_distribution(state: &DensityMatrix, axis: Axis) -> Vec<f64> {
    let n = qubit_count(state);
    let diag: Vec<f64> = match axis {
        Axis::Z => state.matrix().diagonal().iter().map(|c| c.re).collect(),
        Axis::X => {
            let h = hadamard_n(n);
            let rotated = &h * state.matrix() * &h;
            rotated.diagonal().iter().map(|c| c.re).collect()
        }
    };
    let clipped: Vec<f64> = diag.iter().map(|&p| clip_eigenvalue(p)).collect();
    let total: f64 = clipped.iter().sum();
    debug_assert!((total - 1.0).abs() < 1e-9);
    clipped.iter().map(|&p| p / total).collect()
}

/// Measures every qubit along `axis`; returns the outcome string and the
/// collapsed state (the projector onto the observed basis state).
pub fn measure_each<R: Rng + ?Sized>(
    state: &DensityMatrix,
    axis: Axis,
    rng: &mut R,
) -> (BitVector, DensityMatrix) {
    let n = qubit_count(state);
    let dist = basis_distribution(state, axis);
    let index = sample_index(&dist, rng);
    let outcome = BitVector::from_index(index, n);
    let post = match axis {
        Axis::Z => PureState::basis(state.dims().to_vec(), index).density(),
        Axis::X => {
            let h = hadamard_n(n);
            let amps = DVector::from_iterator(1 << n, h.column(index).iter().copied());
            PureState::from_vector_unchecked(state.dims().to_vec(), amps).density()
        }
    };
    (outcome, post)
}

pub(crate) fn sample_index<R: Rng + ?Sized>(dist: &[f64], rng: &mut R) -> usize {
    let mut draw = rng.gen::<f64>();
    for (i, &p) in dist.iter().enumerate() {
        if draw < p {
            return i;
        }
        draw -= p;
    }
    dist.len() - 1
}

/// Haar-like random pure state: complex normal amplitudes, normalized.
pub fn random_pure<R: Rng + ?Sized>(dims: Vec<usize>, rng: &mut R) -> PureState {
    let dim: usize = dims.iter().product();
    let mut amps = DVector::from_fn(dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    amps /= Complex64::new(amps.norm(), 0.0);
    PureState::from_vector_unchecked(dims, amps)
}

/// Full-rank random density matrix from a square Ginibre factor.
pub fn random_density<R: Rng + ?Sized>(dims: Vec<usize>, rng: &mut R) -> DensityMatrix {
    let dim: usize = dims.iter().product();
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let mut mat = &g * g.adjoint();
    let trace = mat.trace().re;
    mat /= Complex64::new(trace, 0.0);
    DensityMatrix::from_matrix_unchecked(dims, mat)
}

#[derive(Serialize, Deserialize)]
struct PureRepr {
    dims: Vec<usize>,
    amps: Vec<[f64; 2]>,
}

impl Serialize for PureState {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        PureRepr {
            dims: self.dims.clone(),
            amps: self.amps.iter().map(|c| [c.re, c.im]).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PureState {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = PureRepr::deserialize(deserializer)?;
        let amps = repr.amps.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        PureState::new(repr.dims, amps).map_err(D::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct DensityRepr {
    dims: Vec<usize>,
    /// Row-major entries.
    entries: Vec<[f64; 2]>,
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let dim = self.dim();
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                let c = self.mat[(i, j)];
                entries.push([c.re, c.im]);
            }
        }
        DensityRepr { dims: self.dims.clone(), entries }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = DensityRepr::deserialize(deserializer)?;
        let dim: usize = repr.dims.iter().product();
        if repr.entries.len() != dim * dim {
            return Err(D::Error::custom("entry count does not match dims"));
        }
        let mat = DMatrix::from_fn(dim, dim, |i, j| {
            let [re, im] = repr.entries[i * dim + j];
            Complex64::new(re, im)
        });
        DensityMatrix::new(repr.dims, mat).map_err(D::Error::custom)
    }
}
