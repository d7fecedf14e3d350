//! Asymptotic key-rate calculus.
//!
//! All gains are per emitted key bit. The basis-dependent calculus bounds the
//! phase-error rate `f` of the key basis from the sampled conjugate-basis
//! error rate `delta1` and the source imbalance `Delta`, then charges
//! `h(f)` of privacy amplification against the key. Two bounds are
//! implemented: method 1 (entropy balance) and method 2 (fidelity balance).
//! Method 2 is never worse where both are feasible.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RateError {
    #[error("{name} = {value} outside [{lo}, {hi}]")]
    Domain { name: &'static str, value: f64, lo: f64, hi: f64 },
    #[error("block size must be positive")]
    ZeroBlock,
}

/// Which phase-error bound to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    M1,
    M2,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::M1 => "m1",
            Method::M2 => "m2",
        })
    }
}

/// One evaluation point of the basis-dependent calculus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateInputs {
    /// Bit-error rate of the key-generating basis.
    pub delta0: f64,
    /// Error rate sampled on the conjugate basis.
    pub delta1: f64,
    /// Source imbalance in [0, 1/2]; 0 means basis-independent.
    pub imbalance: f64,
    pub method: Method,
}

impl RateInputs {
    pub fn evaluate(&self) -> Result<RateResult, RateError> {
        key_gain_basis_dependent(self.delta0, self.delta1, self.imbalance, self.method)
    }
}

/// Per-bit cost breakdown. `gain_per_bit` always equals
/// `1 - cost_ec - cost_pa`; `feasible` means it is strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub gain_per_bit: f64,
    pub cost_ec: f64,
    pub cost_pa: f64,
    pub feasible: bool,
    /// Phase-error bound used for `cost_pa`, absent for the two-rate forms.
    pub phase_bound: Option<f64>,
}

/// Binary entropy in bits. Errors when `y` falls outside [0, 1].
pub fn binary_entropy(y: f64) -> Result<f64, RateError> {
    check_range("y", y, 0.0, 1.0)?;
    Ok(entropy(y))
}

fn entropy(y: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&y));
    if y <= 0.0 || y >= 1.0 {
        return 0.0;
    }
    -(y * y.log2() + (1.0 - y) * (1.0 - y).log2())
}

/// Entropy cost of an error rate; rates above 1/2 are charged the full bit.
fn entropy_cost(rate: f64) -> f64 {
    entropy(rate.min(0.5))
}

fn check_range(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<(), RateError> {
    if !(lo..=hi).contains(&value) || value.is_nan() {
        return Err(RateError::Domain { name, value, lo, hi });
    }
    Ok(())
}

fn two_rate_gain(cost_ec_rate: f64, cost_pa_rate: f64) -> RateResult {
    let cost_ec = entropy_cost(cost_ec_rate);
    let cost_pa = entropy_cost(cost_pa_rate);
    let gain_per_bit = 1.0 - cost_ec - cost_pa;
    RateResult {
        gain_per_bit,
        cost_ec,
        cost_pa,
        feasible: gain_per_bit > 0.0,
        phase_bound: None,
    }
}

/// Gain for a sifted pair with bit-error rate `delta_bit` and phase-error
/// rate `delta_ph`: 1 - h(delta_bit) - h(delta_ph) per bit.
pub fn key_gain_sp(delta_bit: f64, delta_ph: f64) -> Result<RateResult, RateError> {
    check_range("delta_bit", delta_bit, 0.0, 1.0)?;
    check_range("delta_ph", delta_ph, 0.0, 1.0)?;
    Ok(two_rate_gain(delta_bit, delta_ph))
}

/// Gain for a basis-independent source: 1 - h(delta0) - h(delta1) per bit.
/// The conjugate-basis rate stands in for the phase-error rate directly.
pub fn key_gain_basis_independent(delta0: f64, delta1: f64) -> Result<RateResult, RateError> {
    check_range("delta0", delta0, 0.0, 1.0)?;
    check_range("delta1", delta1, 0.0, 1.0)?;
    Ok(two_rate_gain(delta0, delta1))
}

const GRID_STEP: f64 = 1e-3;
const BISECT_WIDTH: f64 = 1e-12;

/// Supremum of the feasible phase-error rates in [anchor, 1]. `anchor` is
/// feasible by construction (the constraint saturates there), so a coarse
/// upward scan finds the largest feasible grid point and a bisection refines
/// the bracketing step. The scan covers the whole range rather than stopping
/// at the first infeasible point, which guards against narrow islands.
fn sup_feasible(anchor: f64, feasible: impl Fn(f64) -> bool) -> f64 {
    if feasible(1.0) {
        return 1.0;
    }
    let mut best = anchor;
    let mut x = anchor;
    while x < 1.0 {
        x = (x + GRID_STEP).min(1.0);
        if feasible(x) {
            best = x;
        }
    }
    let mut lo = best;
    let mut hi = (best + GRID_STEP).min(1.0);
    while hi - lo > BISECT_WIDTH {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Slack of the method-1 entropy balance at a trial phase-error rate:
/// nonnegative means `dph` is consistent with the observed `delta1` and
/// imbalance. The balance weighs the error split of test rounds against the
/// entropy the imbalance leaks.
fn m1_slack(delta1: f64, dph: f64, imbalance: f64) -> f64 {
    let s = delta1 + dph;
    let first = if s > 0.0 { 0.5 * s * entropy(delta1 / s) } else { 0.0 };
    let u = 2.0 - delta1 - dph;
    let second = if u > 0.0 {
        0.5 * u * entropy((1.0 - dph) / u)
    } else {
        0.0
    };
    first + second - (1.0 - entropy(imbalance))
}

/// Slack of the method-2 fidelity balance; nonnegative means feasible.
fn m2_slack(delta1: f64, dph: f64, imbalance: f64) -> f64 {
    2.0 * imbalance - (1.0 - ((1.0 - delta1) * (1.0 - dph)).sqrt() - (delta1 * dph).sqrt())
}

/// Method-1 phase-error bound: the largest rate consistent with the entropy
/// balance. At zero imbalance the feasible set degenerates to the single
/// point `delta1`, which is returned exactly.
pub fn phase_error_bound_m1(delta1: f64, imbalance: f64) -> Result<f64, RateError> {
    check_range("delta1", delta1, 0.0, 1.0)?;
    check_range("imbalance", imbalance, 0.0, 0.5)?;
    if imbalance == 0.0 {
        return Ok(delta1);
    }
    Ok(sup_feasible(delta1, |dph| m1_slack(delta1, dph, imbalance) >= 0.0))
}

/// Method-2 phase-error bound: the largest rate consistent with the fidelity
/// balance. At zero imbalance this is `delta1` exactly; at `delta1 = 0` it
/// has the closed form 1 - (1 - 2 Delta)^2.
pub fn phase_error_bound_m2(delta1: f64, imbalance: f64) -> Result<f64, RateError> {
    check_range("delta1", delta1, 0.0, 1.0)?;
    check_range("imbalance", imbalance, 0.0, 0.5)?;
    if imbalance == 0.0 {
        return Ok(delta1);
    }
    Ok(sup_feasible(delta1, |dph| m2_slack(delta1, dph, imbalance) >= 0.0))
}

pub fn phase_error_bound(method: Method, delta1: f64, imbalance: f64) -> Result<f64, RateError> {
    match method {
        Method::M1 => phase_error_bound_m1(delta1, imbalance),
        Method::M2 => phase_error_bound_m2(delta1, imbalance),
    }
}

/// Gain for a basis-dependent source. The privacy-amplification cost is
/// h(f) for the bounded phase-error rate f; once f reaches 1/2 the whole
/// bit is spent and the point is infeasible.
pub fn key_gain_basis_dependent(
    delta0: f64,
    delta1: f64,
    imbalance: f64,
    method: Method,
) -> Result<RateResult, RateError> {
    check_range("delta0", delta0, 0.0, 1.0)?;
    let f = phase_error_bound(method, delta1, imbalance)?;
    let cost_ec = entropy_cost(delta0);
    let cost_pa = if f < 0.5 { entropy(f) } else { 1.0 };
    let gain_per_bit = 1.0 - cost_ec - cost_pa;
    Ok(RateResult {
        gain_per_bit,
        cost_ec,
        cost_pa,
        feasible: gain_per_bit > 0.0,
        phase_bound: Some(f),
    })
}

/// Largest imbalance that still leaves a positive gain at the given error
/// rates; 0 when no imbalance does. Gain is nonincreasing in the imbalance,
/// so a plain bisection on [0, 1/2] applies.
pub fn positive_gain_threshold(
    method: Method,
    delta0: f64,
    delta1: f64,
) -> Result<f64, RateError> {
    let positive = |d: f64| -> Result<bool, RateError> {
        Ok(key_gain_basis_dependent(delta0, delta1, d, method)?.gain_per_bit > 0.0)
    };
    if !positive(0.0)? {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 0.5;
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if positive(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Secret bits consumed by encrypted reconciliation of an N-bit block at
/// error rate `delta`: ceil(N (h(delta) + epsilon)).
pub fn reconciliation_cost(delta: f64, epsilon: f64, n: u64) -> Result<u64, RateError> {
    check_range("delta", delta, 0.0, 1.0)?;
    check_range("epsilon", epsilon, 0.0, f64::INFINITY)?;
    if n == 0 {
        return Err(RateError::ZeroBlock);
    }
    Ok((n as f64 * (entropy_cost(delta) + epsilon)).ceil() as u64)
}

/// Upper bound on the information available about the final key when the
/// phase-error correction fails with probability at most `eta` before the
/// 2^(-N epsilon) hashing slack is added.
pub fn secrecy_bound(eta: f64, epsilon: f64, n: u64) -> Result<f64, RateError> {
    check_range("eta", eta, 0.0, 1.0)?;
    check_range("epsilon", epsilon, 0.0, f64::INFINITY)?;
    if n == 0 {
        return Err(RateError::ZeroBlock);
    }
    let eta_prime = eta + (2.0f64).powf(-(n as f64) * epsilon);
    Ok(entropy(eta_prime.min(0.5)) + n as f64 * eta_prime)
}

/// Occurrence rates of the error indicator t and the conditional coin
/// outcomes in the fictitious coin scenario, expressed through the two error
/// rates. Conditionals with empty conditioning events are absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoinStatistics {
    /// Fraction of rounds flagged as errors: (delta1 + delta_ph) / 2.
    pub r_t1: f64,
    /// Coin z-outcome 1 rate among error rounds.
    pub r_a1_given_t1: Option<f64>,
    /// Coin z-outcome 0 rate among error-free rounds.
    pub r_a0_given_t0: Option<f64>,
}

pub fn coin_statistics_relations(delta1: f64, delta_ph: f64) -> Result<CoinStatistics, RateError> {
    check_range("delta1", delta1, 0.0, 1.0)?;
    check_range("delta_ph", delta_ph, 0.0, 1.0)?;
    let s = delta1 + delta_ph;
    let u = 2.0 - delta1 - delta_ph;
    Ok(CoinStatistics {
        r_t1: 0.5 * s,
        r_a1_given_t1: (s > 0.0).then(|| delta1 / s),
        r_a0_given_t0: (u > 0.0).then(|| (1.0 - delta_ph) / u),
    })
}
