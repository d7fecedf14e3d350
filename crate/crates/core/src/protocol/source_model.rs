//! Alice's source as seen by the simulator: four signal states with their
//! emission probabilities, the declared basis-dependence bound, and the
//! purification-plus-steering model behind the quantum-coin checks.

use serde::{Deserialize, Serialize};

use super::ProtocolError;
use crate::quantum::{fidelity, two_pure_source, DensityMatrix, SignalAngles, TwoPureSource};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceSpec {
    /// The four textbook signal states.
    Ideal,
    /// All four signals rotated by a common angle: noisy but with identical
    /// averaged ensembles in both bases.
    BasisIndependent { tilt: f64 },
    /// Ideal signals whose purifications overlap by exactly 1 - 2 imbalance.
    BasisDependent { imbalance: f64 },
}

/// Ideal angles rotated by `tilt` about the axis orthogonal to both encoding
/// axes, keeping the two averaged ensembles maximally mixed.
#[must_use]
pub fn tilted_angles(tilt: f64) -> SignalAngles {
    let mut angles = SignalAngles::ideal();
    for (a, b) in [(0, 0), (0, 1), (1, 0)] {
        angles.theta[a][b] += tilt;
    }
    angles.theta[1][1] -= tilt;
    angles
}

#[derive(Debug, Clone)]
pub struct SourceModel {
    spec: SourceSpec,
    signals: [[DensityMatrix; 2]; 2],
    probs: [[f64; 2]; 2],
    delta: f64,
    coin: TwoPureSource,
}

impl SourceModel {
    pub fn build(spec: &SourceSpec) -> Result<Self, ProtocolError> {
        let (angles, delta) = match spec {
            SourceSpec::Ideal => (SignalAngles::ideal(), 0.0),
            SourceSpec::BasisIndependent { tilt } => {
                if !tilt.is_finite() || tilt.abs() > std::f64::consts::PI {
                    return Err(ProtocolError::BadConfig(format!(
                        "tilt {tilt} outside [-pi, pi]"
                    )));
                }
                (tilted_angles(*tilt), 0.0)
            }
            SourceSpec::BasisDependent { imbalance } => (SignalAngles::ideal(), *imbalance),
        };
        let probs = [[0.5, 0.5], [0.5, 0.5]];
        let coin = two_pure_source(delta, probs, &angles)?;
        let signals = coin.signals.clone();

        let averaged = |a: usize| {
            let mut m = signals[a][0].matrix() * num_complex::Complex64::new(probs[a][0], 0.0);
            m += signals[a][1].matrix() * num_complex::Complex64::new(probs[a][1], 0.0);
            DensityMatrix::from_matrix_unchecked(vec![2], m)
        };
        let fid = fidelity(&averaged(0), &averaged(1));
        let bound = 1.0 - 2.0 * delta;
        if fid < bound - 1e-9 {
            return Err(ProtocolError::BadConfig(format!(
                "ensemble fidelity {fid} below the declared bound {bound}"
            )));
        }

        Ok(Self { spec: *spec, signals, probs, delta, coin })
    }

    #[must_use]
    pub fn spec(&self) -> &SourceSpec {
        &self.spec
    }

    #[must_use]
    pub fn signal(&self, a: usize, b: usize) -> &DensityMatrix {
        &self.signals[a][b]
    }

    #[must_use]
    pub fn probs(&self) -> [[f64; 2]; 2] {
        self.probs
    }

    /// Declared basis-dependence bound; 0 for the basis-independent kinds.
    #[must_use]
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Purifications and steering POVMs underlying this source.
    #[must_use]
    pub fn coin(&self) -> &TwoPureSource {
        &self.coin
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{coin_imbalance, coin_state};
    use approx::assert_relative_eq;

    fn averaged(src: &SourceModel, a: usize) -> DensityMatrix {
        let mut m = src.signal(a, 0).matrix() * num_complex::Complex64::new(0.5, 0.0);
        m += src.signal(a, 1).matrix() * num_complex::Complex64::new(0.5, 0.0);
        DensityMatrix::from_matrix_unchecked(vec![2], m)
    }

    #[test]
    fn ideal_ensembles_are_identical() {
        let src = SourceModel::build(&SourceSpec::Ideal).unwrap();
        let f = fidelity(&averaged(&src, 0), &averaged(&src, 1));
        assert_relative_eq!(f, 1.0, epsilon = 1e-9);
        assert_eq!(src.delta(), 0.0);
    }

    #[test]
    fn tilt_keeps_the_ensembles_identical() {
        let src = SourceModel::build(&SourceSpec::BasisIndependent { tilt: 0.3 }).unwrap();
        let f = fidelity(&averaged(&src, 0), &averaged(&src, 1));
        assert_relative_eq!(f, 1.0, epsilon = 1e-9);
        // Matched-basis readout error of a tilted signal: sin^2(tilt/2).
        let wrong = SignalAngles::ideal().signal(0, 1).density();
        let qber = src.signal(0, 0).expectation(wrong.matrix());
        assert_relative_eq!(qber, (0.15f64).sin().powi(2), epsilon = 1e-12);
    }

    #[test]
    fn declared_imbalance_shows_up_on_the_coin() {
        let src = SourceModel::build(&SourceSpec::BasisDependent { imbalance: 0.1 }).unwrap();
        let psi = coin_state(&src.coin().chi0, &src.coin().chi1);
        assert_relative_eq!(coin_imbalance(&psi), 0.1, epsilon = 1e-10);
        assert_relative_eq!(src.delta(), 0.1);
    }

    #[test]
    fn declared_bound_honors_the_fidelity_relation() {
        for d in [0.0, 0.05, 0.2, 0.5] {
            let src = SourceModel::build(&SourceSpec::BasisDependent { imbalance: d }).unwrap();
            let f = fidelity(&averaged(&src, 0), &averaged(&src, 1));
            assert!(1.0 - 2.0 * src.delta() <= f + 1e-9);
        }
    }

    #[test]
    fn wild_tilt_is_rejected() {
        assert!(matches!(
            SourceModel::build(&SourceSpec::BasisIndependent { tilt: 7.0 }),
            Err(ProtocolError::BadConfig(_))
        ));
    }
}
