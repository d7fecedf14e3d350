//! Batch verification suites behind the `verify` command: randomized
//! instance families for the two exact reductions, a Monte Carlo bound on
//! hash-recovery failure, the entropic z/x trade-off, and the coin balance
//! identities under noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::coin::{coin_scenario, CoinRecord};
use super::verify::{verify_protocol_equivalence, EquivalenceReport, Estimator};
use super::{ChannelModel, ChannelSpec, ProtocolError, SourceModel, SourceSpec};
use crate::gf2::{hash_recover, BitVector, CandidateSet, SetKind, VectorSet};
use crate::quantum::{basis_distribution, random_density, Axis};

/// Runs `instances` randomized equivalence instances: random states on up to
/// three qubits plus an ancilla of up to four levels, random parity sets,
/// and rotating estimator strategies including an adversarial one. Every
/// report should show zero distance; the caller judges.
pub fn equivalence_suite(
    instances: usize,
    seed: u64,
) -> Result<Vec<EquivalenceReport>, ProtocolError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reports = Vec::with_capacity(instances);
    for i in 0..instances {
        let n = rng.gen_range(2..=3usize);
        let anc_dim = 1usize << rng.gen_range(0..=2usize);
        let mut dims = vec![anc_dim];
        dims.extend(std::iter::repeat_n(2, n));
        let state = if i % 3 == 0 {
            // Product of independent factors.
            let mut acc = random_density(vec![anc_dim], &mut rng);
            for _ in 0..n {
                acc = acc.tensor(&random_density(vec![2], &mut rng));
            }
            acc
        } else {
            random_density(dims, &mut rng)
        };
        let m = rng.gen_range(1..n);
        let w = VectorSet::random_li_set(n, m, SetKind::Parity, &mut rng)?;

        let estimator: Box<Estimator> = match i % 3 {
            0 => Box::new(move |_, _: &BitVector| BitVector::zeros(n)),
            1 => {
                // Recover from per-outcome candidate sets like the real
                // corrector would; fall back to no correction.
                let candidates: Vec<CandidateSet> = (0..anc_dim)
                    .map(|mu| {
                        let count = rng.gen_range(1..=4usize);
                        let mut members: Vec<BitVector> = Vec::new();
                        while members.len() < count {
                            let cand = BitVector::random(n, &mut rng);
                            if !members.contains(&cand) {
                                members.push(cand);
                            }
                        }
                        CandidateSet::new(mu as u64, members).expect("distinct members")
                    })
                    .collect();
                let wc = w.clone();
                Box::new(move |mu: usize, p: &BitVector| {
                    let parities: Vec<(BitVector, bool)> = wc
                        .vectors()
                        .iter()
                        .enumerate()
                        .map(|(j, wv)| (wv.clone(), p.get(j)))
                        .collect();
                    hash_recover(&candidates[mu], &parities)
                        .unwrap_or_else(|_| BitVector::zeros(n))
                })
            }
            _ => {
                // Adversarial: an arbitrary deterministic function of the
                // observed outcomes.
                let salt = rng.gen::<u64>();
                Box::new(move |mu: usize, p: &BitVector| {
                    let mut r = ChaCha8Rng::seed_from_u64(
                        salt ^ ((mu as u64) << 32) ^ p.to_index() as u64,
                    );
                    BitVector::random(n, &mut r)
                })
            }
        };
        reports.push(verify_protocol_equivalence(&state, &w, &*estimator)?);
    }
    Ok(reports)
}

/// Outcome of the hash-recovery failure study at block length 16 with 16
/// candidate strings and 8 parity bits: 4 surplus parities put the failure
/// bound at 2^-4.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HashingReport {
    pub trials: u64,
    pub failures: u64,
    pub failure_rate: f64,
    pub bound: f64,
    pub sigma: f64,
    pub block: usize,
    pub candidate_count: usize,
    pub parity_count: usize,
    pub passed: bool,
}

/// Estimates the probability that 8 random independent parities fail to pin
/// down the true string among 16 candidates of 16 bits, and checks it
/// against the union bound 15 * 2^-8 < 2^-4 with three-sigma slack.
pub fn hashing_suite(trials: u64, seed: u64) -> Result<HashingReport, ProtocolError> {
    const BLOCK: usize = 16;
    const CANDIDATES: usize = 16;
    const PARITIES: usize = 8;
    if trials == 0 {
        return Err(ProtocolError::BadConfig("hashing study needs trials".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0u64;
    for trial in 0..trials {
        let truth = BitVector::random(BLOCK, &mut rng);
        let mut members = vec![truth.clone()];
        while members.len() < CANDIDATES {
            let cand = BitVector::random(BLOCK, &mut rng);
            if !members.contains(&cand) {
                members.push(cand);
            }
        }
        let t = CandidateSet::new(trial, members).expect("distinct members");
        let w = VectorSet::random_li_set(BLOCK, PARITIES, SetKind::Parity, &mut rng)?;
        let parities: Vec<(BitVector, bool)> = w
            .vectors()
            .iter()
            .map(|wv| (wv.clone(), truth.dot(wv)))
            .collect();
        match hash_recover(&t, &parities) {
            Ok(found) => debug_assert_eq!(found, truth),
            Err(_) => failures += 1,
        }
    }
    let failure_rate = failures as f64 / trials as f64;
    let bound = 2.0f64.powi(-((PARITIES - 4) as i32));
    let sigma = (bound * (1.0 - bound) / trials as f64).sqrt();
    Ok(HashingReport {
        trials,
        failures,
        failure_rate,
        bound,
        sigma,
        block: BLOCK,
        candidate_count: CANDIDATES,
        parity_count: PARITIES,
        passed: failure_rate <= bound + 3.0 * sigma,
    })
}

/// Outcome of the entropic trade-off sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UncertaintyReport {
    pub states: usize,
    /// Smallest observed H(Z) + H(X) - N over the sweep.
    pub min_slack: f64,
    pub passed: bool,
}

fn shannon(dist: &[f64]) -> f64 {
    dist.iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

/// Measures H(Z) + H(X) >= N on random mixed states of up to six qubits:
/// the two measured distributions cannot both be sharp.
pub fn uncertainty_suite(states: usize, seed: u64) -> UncertaintyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_slack = f64::INFINITY;
    for _ in 0..states {
        let n = rng.gen_range(1..=6usize);
        let state = random_density(vec![2; n], &mut rng);
        let hz = shannon(&basis_distribution(&state, Axis::Z));
        let hx = shannon(&basis_distribution(&state, Axis::X));
        min_slack = min_slack.min(hz + hx - n as f64);
    }
    UncertaintyReport { states, min_slack, passed: min_slack >= -1e-9 }
}

/// One audited source/channel combination with both balance identities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoinCheck {
    pub imbalance: f64,
    pub channel: String,
    /// Mixture of conditional coin-x rates weighted by indicator rates; its
    /// expectation equals the imbalance whatever the channel.
    pub balance_lhs: f64,
    pub balance_sigma: f64,
    pub balance_pass: bool,
    /// Largest (1-2r_x)^2 + (1-2r_z)^2 - 1 over indicator values, minus the
    /// statistical slack; conditional coin states must fit a unit disc.
    pub circle_excess: f64,
    pub circle_pass: bool,
    pub record: CoinRecord,
}

fn channel_label(spec: &ChannelSpec) -> String {
    match spec {
        ChannelSpec::Identity => "identity".into(),
        ChannelSpec::Depolarizing { p } => format!("depolarizing(p={p})"),
        ChannelSpec::InterceptResend => "intercept-resend".into(),
        ChannelSpec::CustomKraus { kraus } => format!("custom({} kraus)", kraus.len()),
    }
}

fn check_coin(imbalance: f64, spec: &ChannelSpec, rounds: u64, seed: u64) -> Result<CoinCheck, ProtocolError> {
    let source = SourceModel::build(&SourceSpec::BasisDependent { imbalance })?;
    let channel = ChannelModel::build(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rec = coin_scenario(&source, &channel, rounds, 0.5, &mut rng)?;

    let p = [1.0 - rec.r_t1, rec.r_t1];
    let q = [rec.r_x0.unwrap_or(0.0), rec.r_x1.unwrap_or(0.0)];
    let nx = [rec.n_x0, rec.n_x1];
    let lhs = p[0] * q[0] + p[1] * q[1];
    let mut var = (p[0] * q[0] * q[0] + p[1] * q[1] * q[1] - lhs * lhs).max(0.0)
        / rec.rounds as f64;
    for j in 0..2 {
        if nx[j] > 0 {
            var += p[j] * p[j] * q[j] * (1.0 - q[j]) / nx[j] as f64;
        }
    }
    let balance_sigma = var.sqrt();
    let balance_pass = (lhs - imbalance).abs() <= 3.0 * balance_sigma + 1e-6;

    let rx = [rec.r_x0, rec.r_x1];
    let rz = [rec.r_z0, rec.r_z1];
    let nz = [rec.n_z0, rec.n_z1];
    let mut circle_excess = f64::NEG_INFINITY;
    for j in 0..2 {
        let (Some(x), Some(z)) = (rx[j], rz[j]) else {
            continue;
        };
        let lhs_j = (1.0 - 2.0 * x).powi(2) + (1.0 - 2.0 * z).powi(2);
        let sx = (x * (1.0 - x) / nx[j] as f64).sqrt() + 1.0 / nx[j] as f64;
        let sz = (z * (1.0 - z) / nz[j] as f64).sqrt() + 1.0 / nz[j] as f64;
        let slack =
            3.0 * (4.0 * (1.0 - 2.0 * x).abs() * sx + 4.0 * (1.0 - 2.0 * z).abs() * sz)
                + 1e-9;
        circle_excess = circle_excess.max(lhs_j - 1.0 - slack);
    }
    Ok(CoinCheck {
        imbalance,
        channel: channel_label(spec),
        balance_lhs: lhs,
        balance_sigma,
        balance_pass,
        circle_excess,
        circle_pass: circle_excess <= 0.0,
        record: rec,
    })
}

/// Audits imbalances 0, 0.05, and 0.1 against the identity and a
/// depolarizing channel, `rounds` rounds each.
pub fn coin_suite(rounds: u64, seed: u64) -> Result<Vec<CoinCheck>, ProtocolError> {
    let channels = [ChannelSpec::Identity, ChannelSpec::Depolarizing { p: 0.1 }];
    let mut out = Vec::new();
    for (i, &imbalance) in [0.0, 0.05, 0.1].iter().enumerate() {
        for (k, spec) in channels.iter().enumerate() {
            out.push(check_coin(
                imbalance,
                spec,
                rounds,
                seed.wrapping_add((i * channels.len() + k) as u64),
            )?);
        }
    }
    Ok(out)
}
