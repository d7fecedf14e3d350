//! Two-pure-state source construction and the quantum-coin gadget.
//!
//! A basis-dependent source is modeled by two pure states chi_a on a steering
//! qubit S and the emitted qubit Q, one per basis choice, together with a
//! POVM on S per basis whose outcomes steer Q into the marginal signal
//! states. The construction below fixes the overlap <chi0|chi1> to exactly
//! 1 - 2 Delta (real, nonnegative), which is possible whenever that target
//! does not exceed the fidelity of the two averaged signal ensembles.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::state::{clip_eigenvalue, herm_eigen};
use super::{DensityMatrix, PureState, QuantumError, STATE_TOL};

/// Positive operators on one system summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    elements: Vec<DMatrix<Complex64>>,
}

impl Povm {
    pub fn new(elements: Vec<DMatrix<Complex64>>) -> Result<Self, QuantumError> {
        let Some(first) = elements.first() else {
            return Err(QuantumError::IncompletePovm(1.0));
        };
        let dim = first.nrows();
        let mut sum = DMatrix::<Complex64>::zeros(dim, dim);
        for e in &elements {
            if e.nrows() != dim || e.ncols() != dim {
                return Err(QuantumError::DimsMismatch { dims: vec![dim], dim: e.nrows() });
            }
            let herm_dev = (e - e.adjoint()).camax();
            if herm_dev > STATE_TOL {
                return Err(QuantumError::NotHermitian(herm_dev));
            }
            let (evals, _) = herm_eigen(e);
            let min = evals.iter().copied().fold(f64::INFINITY, f64::min);
            if min < -STATE_TOL {
                return Err(QuantumError::NotPositive(min));
            }
            sum += e;
        }
        let dev = (&sum - DMatrix::identity(dim, dim)).camax();
        if dev > STATE_TOL {
            return Err(QuantumError::IncompletePovm(dev));
        }
        Ok(Self { elements })
    }

    #[must_use]
    pub fn elements(&self) -> &[DMatrix<Complex64>] {
        &self.elements
    }

    #[must_use]
    pub fn dim(&self) -> usize {
        self.elements[0].nrows()
    }

    /// Born probability of one outcome on a state of the POVM's dimension.
    #[must_use]
    pub fn probability(&self, index: usize, state: &DensityMatrix) -> f64 {
        state.expectation(&self.elements[index]).clamp(0.0, 1.0)
    }
}

/// Joint state of the source register and a coin qubit recording which basis
/// the source acted in: (|chi0>|0> + |chi1>|1>) / sqrt(2), coin last.
#[must_use]
pub fn coin_state(chi0: &PureState, chi1: &PureState) -> PureState {
    assert_eq!(chi0.dims(), chi1.dims(), "coin branches must match");
    let dim = chi0.dim();
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut amps = DVector::zeros(2 * dim);
    for i in 0..dim {
        amps[2 * i] = chi0.amplitudes()[i] * s;
        amps[2 * i + 1] = chi1.amplitudes()[i] * s;
    }
    let mut dims = chi0.dims().to_vec();
    dims.push(2);
    PureState::from_vector_unchecked(dims, amps)
}

/// Weight of the coin's |1_x> component: the probability that an x-basis
/// measurement of the coin (last subsystem) yields 1. For a `coin_state`
/// this equals (1 - Re<chi0|chi1>) / 2.
#[must_use]
pub fn coin_imbalance(psi: &PureState) -> f64 {
    let dims = psi.dims();
    assert_eq!(*dims.last().expect("nonempty dims"), 2, "coin must be a qubit");
    let half = psi.dim() / 2;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut weight = 0.0;
    for i in 0..half {
        let contracted = (psi.amplitudes()[2 * i] - psi.amplitudes()[2 * i + 1]) * s;
        weight += contracted.norm_sqr();
    }
    weight
}

/// Bloch angles of the four signal states, indexed by basis then bit.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SignalAngles {
    pub theta: [[f64; 2]; 2],
    pub phi: [[f64; 2]; 2],
}

impl SignalAngles {
    /// z-basis pair and x-basis pair.
    #[must_use]
    pub fn ideal() -> Self {
        use std::f64::consts::{FRAC_PI_2, PI};
        Self {
            theta: [[0.0, PI], [FRAC_PI_2, FRAC_PI_2]],
            phi: [[0.0, 0.0], [0.0, PI]],
        }
    }

    /// Signal state for basis `a`, bit `b`.
    #[must_use]
    pub fn signal(&self, a: usize, b: usize) -> PureState {
        let th = self.theta[a][b];
        let ph = self.phi[a][b];
        let amps = DVector::from_vec(vec![
            Complex64::new((th / 2.0).cos(), 0.0),
            Complex64::from_polar((th / 2.0).sin(), ph),
        ]);
        PureState::from_vector_unchecked(vec![2], amps)
    }
}

/// The assembled model: one purification per basis, both on S (x) Q, and the
/// steering POVM on S for each basis.
#[derive(Debug, Clone)]
pub struct TwoPureSource {
    pub chi0: PureState,
    pub chi1: PureState,
    pub povm0: Povm,
    pub povm1: Povm,
    pub probs: [[f64; 2]; 2],
    pub signals: [[DensityMatrix; 2]; 2],
}

impl TwoPureSource {
    #[must_use]
    pub fn chi(&self, a: usize) -> &PureState {
        if a == 0 { &self.chi0 } else { &self.chi1 }
    }

    #[must_use]
    pub fn povm(&self, a: usize) -> &Povm {
        if a == 0 { &self.povm0 } else { &self.povm1 }
    }
}

/// Builds the canonical two-qubit-per-signal model: purifies each averaged
/// signal ensemble on a steering qubit, rotates one purification so the
/// overlap is exactly 1 - 2 `imbalance`, and derives the steering POVMs that
/// reproduce `probs[a][b] * signal(a, b)` on the emitted qubit. Errors when
/// the requested overlap exceeds the ensemble fidelity.
pub fn two_pure_source(
    imbalance: f64,
    probs: [[f64; 2]; 2],
    angles: &SignalAngles,
) -> Result<TwoPureSource, QuantumError> {
    if !(0.0..=0.5).contains(&imbalance) {
        return Err(QuantumError::BadImbalance(imbalance));
    }
    for row in &probs {
        if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (row[0] + row[1] - 1.0).abs() > 1e-12
        {
            return Err(QuantumError::BadProbabilities(row.to_vec()));
        }
    }

    let signal_vec =
        |a: usize, b: usize| -> DVector<Complex64> { angles.signal(a, b).amplitudes().clone() };
    let rho = |a: usize| -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(2, 2);
        for (b, &p_ab) in probs[a].iter().enumerate() {
            let v = signal_vec(a, b);
            m += (&v * v.adjoint()) * Complex64::new(p_ab, 0.0);
        }
        m
    };

    // Purification of rho_a on S (x) Q through its eigendecomposition.
    let purify = |m: &DMatrix<Complex64>| -> DVector<Complex64> {
        let (evals, vecs) = herm_eigen(m);
        let mut u = DVector::zeros(4);
        for s in 0..2 {
            let w = Complex64::new(clip_eigenvalue(evals[s]).sqrt(), 0.0);
            for q in 0..2 {
                u[s * 2 + q] = w * vecs[(q, s)];
            }
        }
        u
    };
    let u0 = purify(&rho(0));
    let u1 = purify(&rho(1));

    // <u0|(U (x) 1)|u1> = tr(U K); the singular values of K sum to the
    // ensemble fidelity, the largest overlap any purification pair attains.
    let k: DMatrix<Complex64> = DMatrix::from_fn(2, 2, |sp, s| {
        (0..2).map(|q| u1[sp * 2 + q] * u0[s * 2 + q].conj()).sum::<Complex64>()
    });
    let svd = k.svd(true, true);
    let root_fidelity: f64 = svd.singular_values.iter().sum();
    let target = 1.0 - 2.0 * imbalance;
    if target > root_fidelity + 1e-9 {
        return Err(QuantumError::OverlapInfeasible {
            requested: target,
            available: root_fidelity,
        });
    }
    let cos_r = (target / root_fidelity).min(1.0);
    let sin_r = (1.0 - cos_r * cos_r).max(0.0).sqrt();
    let rot = DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(cos_r, 0.0),
            Complex64::new(-sin_r, 0.0),
            Complex64::new(sin_r, 0.0),
            Complex64::new(cos_r, 0.0),
        ],
    );
    let u_svd = svd.u.expect("svd with u");
    let v_svd = svd.v_t.expect("svd with v_t").adjoint();
    let rotate_s: DMatrix<Complex64> = v_svd * rot * u_svd.adjoint();

    let mut chi1_amps = DVector::zeros(4);
    for s in 0..2 {
        for q in 0..2 {
            for sp in 0..2 {
                chi1_amps[s * 2 + q] += rotate_s[(s, sp)] * u1[sp * 2 + q];
            }
        }
    }
    let chi0 = PureState::from_vector_unchecked(vec![2, 2], u0);
    let chi1 = PureState::from_vector_unchecked(vec![2, 2], chi1_amps);

    let overlap = chi0.inner(&chi1);
    assert!(
        (overlap.re - target).abs() <= 1e-9 && overlap.im.abs() <= 1e-9,
        "overlap {overlap} misses target {target}"
    );

    let povm_for = |chi: &PureState, a: usize| -> Result<Povm, QuantumError> {
        // B maps steering-side coefficients to emitted-side vectors.
        let b_mat = DMatrix::from_fn(2, 2, |q, s| chi.amplitudes()[s * 2 + q]);
        let pinv = b_mat
            .clone()
            .svd(true, true)
            .pseudo_inverse(1e-12)
            .expect("pseudo inverse of 2x2");
        let mut elements = Vec::with_capacity(2);
        for (b, &p_ab) in probs[a].iter().enumerate() {
            let y = signal_vec(a, b) * Complex64::new(p_ab.sqrt(), 0.0);
            let v = &pinv * &y;
            let residual = (&b_mat * &v - &y).norm();
            assert!(residual <= 1e-8, "steering target misses the purification range");
            let w = v.map(|c| c.conj());
            elements.push(&w * w.adjoint());
        }
        // The raw elements complete to the identity only on the steering
        // support; split the complement evenly. It steers nothing.
        let gap = DMatrix::identity(2, 2) - &elements[0] - &elements[1];
        let gap = (&gap + gap.adjoint()) * Complex64::new(0.5, 0.0);
        let elements = elements
            .into_iter()
            .map(|e| e + &gap * Complex64::new(0.5, 0.0))
            .collect();
        Povm::new(elements)
    };
    let povm0 = povm_for(&chi0, 0)?;
    let povm1 = povm_for(&chi1, 1)?;

    let signals = [0, 1].map(|a| {
        [0, 1].map(|b| {
            let v = signal_vec(a, b);
            DensityMatrix::from_matrix_unchecked(vec![2], &v * v.adjoint())
        })
    });

    let source = TwoPureSource { chi0, chi1, povm0, povm1, probs, signals };
    verify_steering(&source)?;
    Ok(source)
}

/// Checks tr_S[(F_ab (x) 1) |chi_a><chi_a|] = p_ab |phi_ab><phi_ab| entrywise
/// within 1e-10.
fn verify_steering(src: &TwoPureSource) -> Result<(), QuantumError> {
    for a in 0..2 {
        let chi = src.chi(a);
        for b in 0..2 {
            let f = &src.povm(a).elements()[b];
            let mut steered = DMatrix::<Complex64>::zeros(2, 2);
            for q in 0..2 {
                for qp in 0..2 {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for s in 0..2 {
                        for spp in 0..2 {
                            acc += f[(s, spp)]
                                * chi.amplitudes()[spp * 2 + q]
                                * chi.amplitudes()[s * 2 + qp].conj();
                        }
                    }
                    steered[(q, qp)] = acc;
                }
            }
            let want = src.signals[a][b].matrix() * Complex64::new(src.probs[a][b], 0.0);
            let dev = (&steered - want).camax();
            if dev > STATE_TOL {
                return Err(QuantumError::IncompletePovm(dev));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{fidelity, random_pure};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn coin_imbalance_tracks_overlap() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..30 {
            let a = random_pure(vec![2], &mut rng);
            let b = random_pure(vec![2], &mut rng);
            let psi = coin_state(&a, &b);
            assert_relative_eq!(
                coin_imbalance(&psi),
                (1.0 - a.inner(&b).re) / 2.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn equal_branches_balance_the_coin() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let a = random_pure(vec![2, 2], &mut rng);
        let psi = coin_state(&a, &a);
        assert!(coin_imbalance(&psi) < 1e-12);
        assert_eq!(psi.dims(), &[2, 2, 2]);
    }

    #[test]
    fn ideal_angles_hit_requested_imbalance() {
        let src = two_pure_source(0.1, [[0.5, 0.5], [0.5, 0.5]], &SignalAngles::ideal()).unwrap();
        let psi = coin_state(&src.chi0, &src.chi1);
        assert_relative_eq!(coin_imbalance(&psi), 0.1, epsilon = 1e-10);
        assert_relative_eq!(src.chi0.inner(&src.chi1).re, 0.8, epsilon = 1e-10);
    }

    #[test]
    fn zero_imbalance_merges_the_purifications() {
        let src = two_pure_source(0.0, [[0.5, 0.5], [0.5, 0.5]], &SignalAngles::ideal()).unwrap();
        assert_relative_eq!(
            (src.chi0.amplitudes() - src.chi1.amplitudes()).camax(),
            0.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn half_imbalance_makes_branches_orthogonal() {
        let src = two_pure_source(0.5, [[0.5, 0.5], [0.5, 0.5]], &SignalAngles::ideal()).unwrap();
        assert!(src.chi0.inner(&src.chi1).norm() < 1e-9);
    }

    // Independent check of the steering identity through the generic
    // embedding and partial-trace machinery.
    #[test]
    fn steering_reproduces_weighted_signals() {
        let src = two_pure_source(0.15, [[0.5, 0.5], [0.5, 0.5]], &SignalAngles::ideal()).unwrap();
        for a in 0..2 {
            let rho = src.chi(a).density();
            for b in 0..2 {
                let f = crate::quantum::embed_operator(&[2, 2], 0, &src.povm(a).elements()[b]);
                let product = &f * rho.matrix();
                // partial trace over S of a plain matrix product
                let mut steered = DMatrix::<Complex64>::zeros(2, 2);
                for q in 0..2 {
                    for qp in 0..2 {
                        for s in 0..2 {
                            steered[(q, qp)] += product[(s * 2 + q, s * 2 + qp)];
                        }
                    }
                }
                let want = src.signals[a][b].matrix() * Complex64::new(src.probs[a][b], 0.0);
                assert_relative_eq!((&steered - want).camax(), 0.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn biased_probabilities_still_steer() {
        let probs = [[0.7, 0.3], [0.4, 0.6]];
        let src = two_pure_source(0.4, probs, &SignalAngles::ideal()).unwrap();
        assert_relative_eq!(src.chi0.inner(&src.chi1).re, 0.2, epsilon = 1e-9);
        // POVM outcome probabilities on the steering side match p_ab.
        for (a, row) in probs.iter().enumerate() {
            let reduced = src.chi(a).density().trace_out(1);
            for (b, &p_ab) in row.iter().enumerate() {
                assert_relative_eq!(
                    src.povm(a).probability(b, &reduced),
                    p_ab,
                    epsilon = 1e-9
                );
            }
        }
    }

    #[test]
    fn overlap_beyond_fidelity_is_rejected() {
        // Tilt the x-basis pair so the two ensembles differ, then ask for a
        // larger overlap than their fidelity allows.
        let mut angles = SignalAngles::ideal();
        angles.theta[1] = [0.3, 0.3 + std::f64::consts::PI];
        let rho0 = {
            let mut m = DMatrix::zeros(2, 2);
            for b in 0..2 {
                let v = angles.signal(0, b).amplitudes().clone();
                m += (&v * v.adjoint()) * Complex64::new(0.5, 0.0);
            }
            DensityMatrix::from_matrix_unchecked(vec![2], m)
        };
        let rho1 = {
            let mut m = DMatrix::zeros(2, 2);
            for b in 0..2 {
                let v = angles.signal(1, b).amplitudes().clone();
                m += (&v * v.adjoint()) * Complex64::new(0.5, 0.0);
            }
            DensityMatrix::from_matrix_unchecked(vec![2], m)
        };
        let root_f = fidelity(&rho0, &rho1);
        assert!(root_f < 1.0 - 1e-6);

        let err = two_pure_source(0.0, [[0.5, 0.5], [0.5, 0.5]], &angles);
        assert!(matches!(err, Err(QuantumError::OverlapInfeasible { .. })));

        // A compatible imbalance succeeds and lands on the target overlap.
        let ok_delta = (1.0 - root_f) / 2.0 + 0.05;
        let src = two_pure_source(ok_delta, [[0.5, 0.5], [0.5, 0.5]], &angles).unwrap();
        assert_relative_eq!(
            src.chi0.inner(&src.chi1).re,
            1.0 - 2.0 * ok_delta,
            epsilon = 1e-9
        );
    }

    #[test]
    fn povm_validation_rejects_bad_sums() {
        let id = DMatrix::<Complex64>::identity(2, 2);
        let err = Povm::new(vec![id.clone(), id]);
        assert!(matches!(err, Err(QuantumError::IncompletePovm(_))));
    }

    #[test]
    fn bad_probability_rows_are_rejected() {
        let err = two_pure_source(0.1, [[0.6, 0.6], [0.5, 0.5]], &SignalAngles::ideal());
        assert!(matches!(err, Err(QuantumError::BadProbabilities(_))));
    }
}
