//! Qubit channels between the source and the measurement, given as Kraus
//! operator sets. The adversary is a fixed channel here; nothing adapts.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ProtocolError;
use crate::quantum::{embed_operator, Axis, DensityMatrix, STATE_TOL};

/// Raw 2x2 complex matrix as nested [re, im] pairs, row major.
pub type KrausEntry = [[[f64; 2]; 2]; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelSpec {
    Identity,
    /// Full depolarizing noise of strength p: both-basis error rate p/2.
    Depolarizing { p: f64 },
    /// Measure in a random one of the two bases and resend the outcome
    /// eigenstate: both-basis error rate 1/4.
    InterceptResend,
    CustomKraus { kraus: Vec<KrausEntry> },
}

/// A validated channel: Kraus operators K_i with sum K_i^dag K_i = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    spec: ChannelSpec,
    kraus: Vec<DMatrix<Complex64>>,
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

impl ChannelModel {
    pub fn build(spec: &ChannelSpec) -> Result<Self, ProtocolError> {
        let kraus = match spec {
            ChannelSpec::Identity => vec![DMatrix::identity(2, 2)],
            ChannelSpec::Depolarizing { p } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(ProtocolError::BadConfig(format!(
                        "depolarizing strength {p} outside [0, 1]"
                    )));
                }
                let keep = (1.0 - 0.75 * p).sqrt();
                let flip = (0.25 * p).sqrt();
                vec![
                    DMatrix::identity(2, 2) * c(keep),
                    DMatrix::from_row_slice(2, 2, &[c(0.0), c(flip), c(flip), c(0.0)]),
                    DMatrix::from_row_slice(
                        2,
                        2,
                        &[
                            c(0.0),
                            Complex64::new(0.0, -flip),
                            Complex64::new(0.0, flip),
                            c(0.0),
                        ],
                    ),
                    DMatrix::from_row_slice(2, 2, &[c(flip), c(0.0), c(0.0), c(-flip)]),
                ]
            }
            ChannelSpec::InterceptResend => {
                let w = c(std::f64::consts::FRAC_1_SQRT_2);
                vec![
                    DMatrix::from_row_slice(2, 2, &[w, c(0.0), c(0.0), c(0.0)]),
                    DMatrix::from_row_slice(2, 2, &[c(0.0), c(0.0), c(0.0), w]),
                    DMatrix::from_row_slice(2, 2, &[w * c(0.5), w * c(0.5), w * c(0.5), w * c(0.5)]),
                    DMatrix::from_row_slice(
                        2,
                        2,
                        &[w * c(0.5), w * c(-0.5), w * c(-0.5), w * c(0.5)],
                    ),
                ]
            }
            ChannelSpec::CustomKraus { kraus } => {
                if kraus.is_empty() {
                    return Err(ProtocolError::BadConfig("empty kraus list".into()));
                }
                kraus
                    .iter()
                    .map(|k| {
                        DMatrix::from_fn(2, 2, |r, col| {
                            Complex64::new(k[r][col][0], k[r][col][1])
                        })
                    })
                    .collect()
            }
        };
        let mut completeness = DMatrix::<Complex64>::zeros(2, 2);
        for k in &kraus {
            completeness += k.adjoint() * k;
        }
        let dev = (&completeness - DMatrix::identity(2, 2)).camax();
        if dev > STATE_TOL {
            return Err(ProtocolError::NotTracePreserving(dev));
        }
        Ok(Self { spec: spec.clone(), kraus })
    }

    #[must_use]
    pub fn spec(&self) -> &ChannelSpec {
        &self.spec
    }

    #[must_use]
    pub fn kraus(&self) -> &[DMatrix<Complex64>] {
        &self.kraus
    }

    /// sum_i K_i rho K_i^dag on a bare 2x2 matrix.
    #[must_use]
    pub fn apply_matrix(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(2, 2);
        for k in &self.kraus {
            out += k * rho * k.adjoint();
        }
        out
    }

    /// The channel on a single-qubit state.
    #[must_use]
    pub fn apply_state(&self, rho: &DensityMatrix) -> DensityMatrix {
        assert_eq!(rho.dims(), &[2], "single-qubit channel");
        DensityMatrix::from_matrix_unchecked(vec![2], self.apply_matrix(rho.matrix()))
    }

    /// The channel on subsystem `sub` of a larger state.
    #[must_use]
    pub fn apply_on(&self, rho: &DensityMatrix, sub: usize) -> DensityMatrix {
        assert_eq!(rho.dims()[sub], 2, "channel acts on a qubit");
        let mut out = DMatrix::zeros(rho.dim(), rho.dim());
        for k in &self.kraus {
            let big = embed_operator(rho.dims(), sub, k);
            out += &big * rho.matrix() * big.adjoint();
        }
        DensityMatrix::from_matrix_unchecked(rho.dims().to_vec(), out)
    }
}

/// Rank-one projector onto the `bit` outcome of a single-qubit measurement
/// along `axis`.
pub(crate) fn qubit_projector(axis: Axis, bit: usize) -> DMatrix<Complex64> {
    match axis {
        Axis::Z => {
            let one = c(f64::from(u8::from(bit == 1)));
            DMatrix::from_row_slice(2, 2, &[c(1.0) - one, c(0.0), c(0.0), one])
        }
        Axis::X => {
            let s = c(if bit == 0 { 0.5 } else { -0.5 });
            DMatrix::from_row_slice(2, 2, &[c(0.5), s, s, c(0.5)])
        }
    }
}
