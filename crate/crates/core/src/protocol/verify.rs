//! Exact verification of the two measurement-protocol reductions: hashing
//! z outcomes classically versus measuring parity observables directly, and
//! phase-error correction driving the state onto the reference x-basis ray.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::ProtocolError;
use crate::gf2::{hash_recover, BitVector, CandidateSet, VectorSet};
use crate::quantum::{basis_distribution, pauli_matrix, Axis, DensityMatrix, PauliString};

/// Maps an ancilla outcome and observed parity bits to the string whose
/// phase flip the corrector applies.
pub type Estimator = dyn Fn(usize, &BitVector) -> BitVector;

const EXACT_DIM_CAP: usize = 256;

/// Outcome of one equivalence instance: the exact total-variation distance
/// between the two final-key distributions, plus the instance shape.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub distance: f64,
    pub qubits: usize,
    pub ancilla_dim: usize,
    pub parity_set: VectorSet,
    pub hash_set: VectorSet,
}

/// Splits a state on ancilla (x) N qubits; errors unless every trailing
/// factor is a qubit matching the parity set length.
fn qubit_layout(state: &DensityMatrix, n: usize) -> Result<usize, ProtocolError> {
    let dims = state.dims();
    if dims.len() != n + 1 || dims[1..].iter().any(|&d| d != 2) {
        return Err(ProtocolError::BadConfig(format!(
            "state dims {dims:?} are not ancilla followed by {n} qubits"
        )));
    }
    if state.dim() > EXACT_DIM_CAP {
        return Err(ProtocolError::SizeLimit { dim: state.dim(), cap: EXACT_DIM_CAP });
    }
    Ok(dims[0])
}

fn key_index(z: usize, hash_masks: &[usize]) -> usize {
    let mut key = 0usize;
    for mask in hash_masks {
        key = (key << 1) | ((z & mask).count_ones() as usize & 1);
    }
    key
}

/// Computes the final-key distribution two ways and reports their exact
/// total-variation distance.
///
/// Route one ignores the ancilla and hashes plain z outcomes with the dual
/// set of `w`. Route two measures the ancilla, measures every x-type parity
/// of `w`, applies the z-type correction named by the estimator, and only
/// then reads the hashed key observables. The correction and the parity
/// measurements commute with every key observable, which is the claim under
/// test.
pub fn verify_protocol_equivalence(
    state: &DensityMatrix,
    w: &VectorSet,
    estimator: &Estimator,
) -> Result<EquivalenceReport, ProtocolError> {
    let n = w.n();
    let ancilla_dim = qubit_layout(state, n)?;
    let m = w.count();
    let v = w.dual_set()?;
    let hash_masks: Vec<usize> = v.vectors().iter().map(BitVector::to_index).collect();
    let keys = 1usize << v.count();

    // Route one: trace out the ancilla, measure z, hash.
    let mut p1 = vec![0.0f64; keys];
    let reduced = state.trace_out(0);
    for (z, q) in basis_distribution(&reduced, Axis::Z).iter().enumerate() {
        p1[key_index(z, &hash_masks)] += q;
    }

    // Route two, exactly, branch by branch.
    let mut p2 = vec![0.0f64; keys];
    let parity_ops: Vec<DMatrix<Complex64>> = w
        .vectors()
        .iter()
        .map(|pattern| pauli_matrix(&PauliString::new(Axis::X, pattern.clone())))
        .collect();
    let qdim = 1usize << n;
    let id = DMatrix::<Complex64>::identity(qdim, qdim);
    for mu in 0..ancilla_dim {
        let (p_mu, Some(branch)) = state.condition(0, mu) else {
            continue;
        };
        for p_idx in 0..(1usize << m) {
            let p_bits = BitVector::from_index(p_idx, m);
            let mut proj = id.clone();
            for (j, op) in parity_ops.iter().enumerate() {
                let sign = if p_bits.get(j) { -1.0 } else { 1.0 };
                proj *= (&id + op * Complex64::new(sign, 0.0)) * Complex64::new(0.5, 0.0);
            }
            let sigma = &proj * branch.matrix() * &proj;
            if sigma.trace().re < 1e-15 {
                continue;
            }
            let xstar = estimator(mu, &p_bits);
            if xstar.len() != n {
                return Err(ProtocolError::BadConfig(format!(
                    "estimator returned {} bits for {n} qubits",
                    xstar.len()
                )));
            }
            let flip = pauli_matrix(&PauliString::new(Axis::Z, xstar));
            let corrected = &flip * sigma * &flip;
            for z in 0..qdim {
                p2[key_index(z, &hash_masks)] += p_mu * corrected[(z, z)].re.max(0.0);
            }
        }
    }

    let distance = 0.5
        * p1.iter()
            .zip(&p2)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>();
    Ok(EquivalenceReport {
        distance,
        qubits: n,
        ancilla_dim,
        parity_set: w.clone(),
        hash_set: v,
    })
}

/// Exact recovery and overlap figures for the correction pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PurityReport {
    /// Probability that the recovered string equals the x-basis outcome.
    pub recovery_prob: f64,
    /// Weight of the corrected state on the reference x-basis ray.
    pub overlap: f64,
}

/// Runs the correction pipeline in closed form: measure the ancilla, measure
/// every parity of `w`, recover a string from the outcome's candidate set,
/// flip phases accordingly. Returns the probability the recovery names the
/// true x outcome and the corrected state's weight on the all-zero x string.
/// The overlap can never fall below the recovery probability: every branch
/// recovered correctly lands exactly on the reference ray.
pub fn verify_assumption_purity(
    state: &DensityMatrix,
    candidates: &[CandidateSet],
    w: &VectorSet,
) -> Result<PurityReport, ProtocolError> {
    let n = w.n();
    let ancilla_dim = qubit_layout(state, n)?;
    if candidates.len() != ancilla_dim {
        return Err(ProtocolError::BadConfig(format!(
            "{} candidate sets for ancilla dimension {ancilla_dim}",
            candidates.len()
        )));
    }
    for t in candidates {
        if t.n() != n {
            return Err(ProtocolError::BadConfig(format!(
                "candidate strings of {} bits for {n} qubits",
                t.n()
            )));
        }
    }
    let m = w.count();

    let mut recovery = 0.0f64;
    let mut overlap = 0.0f64;
    for (mu, t) in candidates.iter().enumerate() {
        let (p_mu, Some(branch)) = state.condition(0, mu) else {
            continue;
        };
        let xdist = basis_distribution(&branch, Axis::X);
        for p_idx in 0..(1usize << m) {
            let p_bits = BitVector::from_index(p_idx, m);
            let parities: Vec<(BitVector, bool)> = w
                .vectors()
                .iter()
                .enumerate()
                .map(|(j, wv)| (wv.clone(), p_bits.get(j)))
                .collect();
            match hash_recover(t, &parities) {
                Ok(xstar) => {
                    let mass = p_mu * xdist[xstar.to_index()];
                    recovery += mass;
                    overlap += mass;
                }
                // Failed branches keep their phases; only the all-zero
                // parity class holds any weight on the reference ray.
                Err(_) if p_idx == 0 => overlap += p_mu * xdist[0],
                Err(_) => {}
            }
        }
    }
    Ok(PurityReport {
        recovery_prob: recovery.clamp(0.0, 1.0),
        overlap: overlap.clamp(0.0, 1.0),
    })
}
