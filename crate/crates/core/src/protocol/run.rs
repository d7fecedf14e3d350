//! One full key-agreement run: per-round transmission and measurement,
//! matched-basis sampling, encrypted syndrome reconciliation, and hashing
//! down to the final key, with exact bit accounting throughout.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::channel::qubit_projector;
use super::{ChannelModel, ChannelSpec, ProtocolError, SourceModel, SourceSpec};
use crate::gf2::{BitVector, SetKind, VectorSet};
use crate::quantum::Axis;
use crate::rates::{binary_entropy, phase_error_bound, reconciliation_cost, Method};

/// Largest block the brute-force syndrome decoder accepts.
pub const DECODER_CAP: usize = 24;

fn default_sample_fraction() -> f64 {
    0.5
}

fn default_method() -> Method {
    Method::M2
}

/// Scalar knobs of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunParams {
    pub rounds: u64,
    pub block_n: usize,
    pub epsilon: f64,
    pub seed: u64,
    #[serde(default = "default_sample_fraction")]
    pub sample_fraction: f64,
    #[serde(default = "default_method")]
    pub method: Method,
}

/// A full run description, the shape accepted as a JSON config document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub source: SourceSpec,
    pub channel: ChannelSpec,
    #[serde(flatten)]
    pub params: RunParams,
}

/// One transmitted signal: Alice's basis and bit, Bob's basis and outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub a: u8,
    pub a_prime: u8,
    pub alice_bit: u8,
    pub bob_bit: u8,
    pub sampled: bool,
}

/// Complete record of one run. `net_gain` always equals
/// (block_n - hash_count) - reconciliation_bits, aborted or not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub seed: u64,
    pub method: Method,
    pub epsilon: f64,
    pub sample_fraction: f64,
    pub rounds: Vec<RoundRecord>,
    pub sampled_z: u64,
    pub sampled_x: u64,
    pub delta0_estimate: f64,
    pub delta1_estimate: f64,
    pub block_n: usize,
    pub phase_bound: f64,
    pub hash_count: u64,
    pub reconciliation_bits: u64,
    pub net_gain: i64,
    pub kappa_rec: Option<BitVector>,
    pub kappa_fin: Option<BitVector>,
    pub hash_set: Option<VectorSet>,
    pub aborted: bool,
    pub abort_reason: Option<String>,
}

/// Parses and runs a full configuration.
pub fn run_simulation(config: &SimulationConfig) -> Result<Transcript, ProtocolError> {
    let source = SourceModel::build(&config.source)?;
    let channel = ChannelModel::build(&config.channel)?;
    run_bb84(&source, &channel, &config.params)
}

/// Simulates `rounds` transmissions, estimates both matched-basis error
/// rates from sampled rounds, builds the key block from unsampled z rounds,
/// reconciles and hashes. Runs whose computed gain is not positive (or whose
/// reconciliation fails) still return a transcript, flagged aborted.
pub fn run_bb84(
    source: &SourceModel,
    channel: &ChannelModel,
    params: &RunParams,
) -> Result<Transcript, ProtocolError> {
    let n = params.block_n;
    if n == 0 || n > DECODER_CAP {
        return Err(ProtocolError::BadConfig(format!(
            "block size {n} outside 1..={DECODER_CAP}"
        )));
    }
    if !(params.epsilon > 0.0 && params.epsilon < 1.0) {
        return Err(ProtocolError::BadConfig(format!(
            "epsilon {} outside (0, 1)",
            params.epsilon
        )));
    }
    if !(params.sample_fraction > 0.0 && params.sample_fraction < 1.0) {
        return Err(ProtocolError::BadConfig(format!(
            "sample fraction {} outside (0, 1)",
            params.sample_fraction
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    // P(bob reads 1 | alice basis a, bit b, bob basis a').
    let mut p_one = [[[0.0f64; 2]; 2]; 2];
    for (a, plane) in p_one.iter_mut().enumerate() {
        for (b, row) in plane.iter_mut().enumerate() {
            let received = channel.apply_state(source.signal(a, b));
            for (ap, slot) in row.iter_mut().enumerate() {
                let axis = if ap == 0 { Axis::Z } else { Axis::X };
                *slot = received.expectation(&qubit_projector(axis, 1)).clamp(0.0, 1.0);
            }
        }
    }

    let mut records = Vec::with_capacity(params.rounds as usize);
    let mut errs = [0u64; 2];
    let mut cnts = [0u64; 2];
    let mut pool_alice: Vec<bool> = Vec::new();
    let mut pool_bob: Vec<bool> = Vec::new();
    for _ in 0..params.rounds {
        let a = usize::from(rng.gen_bool(0.5));
        let b = usize::from(rng.gen_bool(source.probs()[a][1]));
        let ap = usize::from(rng.gen_bool(0.5));
        let bp = usize::from(rng.gen_bool(p_one[a][b][ap]));
        let mut sampled = false;
        if a == ap {
            sampled = rng.gen_bool(params.sample_fraction);
            if sampled {
                cnts[a] += 1;
                errs[a] += u64::from(b != bp);
            } else if a == 0 {
                pool_alice.push(b == 1);
                pool_bob.push(bp == 1);
            }
        }
        records.push(RoundRecord {
            a: a as u8,
            a_prime: ap as u8,
            alice_bit: b as u8,
            bob_bit: bp as u8,
            sampled,
        });
    }

    for (a, cnt) in cnts.iter().enumerate() {
        if *cnt == 0 {
            return Err(ProtocolError::InsufficientData {
                what: if a == 0 { "sampled z rounds" } else { "sampled x rounds" },
                needed: 1,
                got: 0,
            });
        }
    }
    if pool_alice.len() < n {
        return Err(ProtocolError::InsufficientData {
            what: "unsampled key rounds",
            needed: n,
            got: pool_alice.len(),
        });
    }

    let delta0 = errs[0] as f64 / cnts[0] as f64;
    let delta1 = errs[1] as f64 / cnts[1] as f64;

    let phase = phase_error_bound(params.method, delta1.min(0.5), source.delta())?;
    let pa_cost = if phase < 0.5 { binary_entropy(phase)? } else { 1.0 };
    // One epsilon of finite-sample margin on the phase estimate, one for the
    // hashing failure slack.
    let m_raw = (n as f64 * (pa_cost + 2.0 * params.epsilon)).ceil() as u64;
    let m = m_raw.min(n as u64);
    let r = reconciliation_cost(delta0, params.epsilon, n as u64)?;
    let net_gain = n as i64 - m as i64 - r as i64;

    let mut transcript = Transcript {
        seed: params.seed,
        method: params.method,
        epsilon: params.epsilon,
        sample_fraction: params.sample_fraction,
        rounds: records,
        sampled_z: cnts[0],
        sampled_x: cnts[1],
        delta0_estimate: delta0,
        delta1_estimate: delta1,
        block_n: n,
        phase_bound: phase,
        hash_count: m,
        reconciliation_bits: r,
        net_gain,
        kappa_rec: None,
        kappa_fin: None,
        hash_set: None,
        aborted: true,
        abort_reason: None,
    };

    if net_gain <= 0 {
        transcript.abort_reason = Some("nonpositive gain".into());
        return Ok(transcript);
    }

    let alice = BitVector::new(pool_alice[..n].to_vec()).expect("nonempty block");
    let bob = BitVector::new(pool_bob[..n].to_vec()).expect("nonempty block");
    let corrected = match reconcile(&alice, &bob, delta0, params.epsilon, &mut rng) {
        Ok((corrected, consumed)) => {
            debug_assert_eq!(consumed, r);
            corrected
        }
        Err(ProtocolError::Ambiguous(k)) => {
            transcript.abort_reason = Some(format!("reconciliation ambiguity ({k} candidates)"));
            return Ok(transcript);
        }
        Err(other) => return Err(other),
    };
    if corrected != bob {
        transcript.abort_reason = Some("reconciliation mismatch".into());
        return Ok(transcript);
    }

    let (fin, v) = privacy_amplify(&bob, m as usize, &mut rng)?;
    transcript.kappa_rec = Some(bob);
    transcript.kappa_fin = Some(fin);
    transcript.hash_set = Some(v);
    transcript.aborted = false;
    Ok(transcript)
}

/// Corrects Alice's block toward Bob's using the encrypted syndrome of a
/// fresh random linear code with ceil(N (h(delta) + epsilon)) parity bits,
/// decoded by minimum-weight search. Returns Alice's corrected block and the
/// consumed bit count. A tie among minimum-weight corrections is an error.
pub fn reconcile<R: Rng + ?Sized>(
    alice: &BitVector,
    bob: &BitVector,
    delta: f64,
    epsilon: f64,
    rng: &mut R,
) -> Result<(BitVector, u64), ProtocolError> {
    let n = alice.len();
    if bob.len() != n {
        return Err(ProtocolError::BadConfig(format!(
            "block lengths differ: {n} vs {}",
            bob.len()
        )));
    }
    if n > DECODER_CAP {
        return Err(ProtocolError::BadConfig(format!(
            "block size {n} exceeds the decoder cap {DECODER_CAP}"
        )));
    }
    let consumed = reconciliation_cost(delta, epsilon, n as u64)?;
    // Beyond n parities the syndrome already determines the block.
    let rows = (consumed as usize).min(n);

    let mut cols = vec![0u32; n];
    for j in 0..rows {
        let row = BitVector::random(n, rng);
        for (i, col) in cols.iter_mut().enumerate() {
            if row.get(i) {
                *col |= 1 << j;
            }
        }
    }
    let mut syndrome = 0u32;
    for (i, col) in cols.iter().enumerate() {
        if alice.get(i) != bob.get(i) {
            syndrome ^= col;
        }
    }
    if syndrome == 0 {
        return Ok((alice.clone(), consumed));
    }

    for weight in 1..=n {
        let mut found: Option<u32> = None;
        let mut matches = 0usize;
        // Gosper's hack: all n-bit masks of the given weight, ascending.
        let mut mask: u32 = (1 << weight) - 1;
        let limit: u32 = 1 << n;
        while mask < limit {
            let mut s = 0u32;
            let mut rest = mask;
            while rest != 0 {
                let i = rest.trailing_zeros() as usize;
                s ^= cols[i];
                rest &= rest - 1;
            }
            if s == syndrome {
                matches += 1;
                found.get_or_insert(mask);
            }
            let c = mask & mask.wrapping_neg();
            let r = mask + c;
            mask = (((r ^ mask) >> 2) / c) | r;
        }
        match matches {
            0 => continue,
            1 => {
                let pattern = found.expect("recorded match");
                let bits = (0..n)
                    .map(|i| alice.get(i) ^ ((pattern >> i) & 1 == 1))
                    .collect();
                let corrected = BitVector::new(bits).expect("nonempty block");
                return Ok((corrected, consumed));
            }
            k => return Err(ProtocolError::Ambiguous(k)),
        }
    }
    unreachable!("the syndrome is in the code's image by construction")
}

/// Scalar products of one block against every vector of a set.
#[must_use]
pub fn hash_bits(bits: &BitVector, set: &VectorSet) -> BitVector {
    assert_eq!(set.n(), bits.len(), "hash set must match the block length");
    let out = set.vectors().iter().map(|v| bits.dot(v)).collect();
    BitVector::new(out).expect("vector sets are nonempty")
}

/// Shrinks an N-bit reconciled block to N - m final bits: scalar products
/// against a fresh uniformly random linearly independent set.
pub fn privacy_amplify<R: Rng + ?Sized>(
    kappa_rec: &BitVector,
    m: usize,
    rng: &mut R,
) -> Result<(BitVector, VectorSet), ProtocolError> {
    let n = kappa_rec.len();
    if m >= n {
        return Err(ProtocolError::EmptyKey { m, n });
    }
    let v = VectorSet::random_li_set(n, n - m, SetKind::Hash, rng)?;
    Ok((hash_bits(kappa_rec, &v), v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn bv(s: &str) -> BitVector {
        s.parse().unwrap()
    }

    fn ideal_setup() -> (SourceModel, ChannelModel) {
        (
            SourceModel::build(&SourceSpec::Ideal).unwrap(),
            ChannelModel::build(&ChannelSpec::Identity).unwrap(),
        )
    }

    #[test]
    fn hashing_two_products() {
        let v = VectorSet::new(SetKind::Hash, vec![bv("1100"), bv("0011")]).unwrap();
        assert_eq!(hash_bits(&bv("1010"), &v), bv("11"));
    }

    #[test]
    fn hashing_with_the_standard_basis_is_identity() {
        let basis = VectorSet::new(
            SetKind::Hash,
            (0..6)
                .map(|i| {
                    let mut v = BitVector::zeros(6);
                    v.set(i, true);
                    v
                })
                .collect(),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let k = BitVector::random(6, &mut rng);
            assert_eq!(hash_bits(&k, &basis), k);
        }
    }

    #[test]
    fn amplification_output_length_is_n_minus_m() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let k = bv("1010");
        let (fin, v) = privacy_amplify(&k, 2, &mut rng).unwrap();
        assert_eq!(fin.len(), 2);
        assert_eq!(v.count(), 2);
        assert_eq!(fin, hash_bits(&k, &v));
        assert!(matches!(
            privacy_amplify(&k, 4, &mut rng),
            Err(ProtocolError::EmptyKey { m: 4, n: 4 })
        ));
    }

    #[test]
    fn single_flips_diffuse_through_the_hash() {
        // Flipping one input bit flips output bit k iff V_k reads position
        // i, which happens about half the time over random sets.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 12;
        let m = 4;
        let draws = 2000;
        let kappa = BitVector::random(n, &mut rng);
        let mut flipped = kappa.clone();
        flipped.set(5, !flipped.get(5));
        let mut flips = vec![0u64; n - m];
        for _ in 0..draws {
            let (fin, v) = privacy_amplify(&kappa, m, &mut rng).unwrap();
            let fin2 = hash_bits(&flipped, &v);
            for (k, f) in flips.iter_mut().enumerate() {
                *f += u64::from(fin.get(k) != fin2.get(k));
            }
        }
        let sigma = (0.25 / draws as f64).sqrt();
        for f in flips {
            let rate = f as f64 / draws as f64;
            assert!(
                (rate - 0.5).abs() < 3.0 * sigma + 0.01,
                "flip rate {rate} strays from 1/2"
            );
        }
    }

    #[test]
    fn identical_blocks_reconcile_for_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let k = BitVector::random(16, &mut rng);
        let (rec, consumed) = reconcile(&k, &k, 0.0, 0.2, &mut rng).unwrap();
        assert_eq!(rec, k);
        assert_eq!(consumed, 4); // ceil(16 * 0.2)
    }

    #[test]
    fn consumed_bits_follow_the_cost_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for (delta, epsilon) in [(0.0, 0.1), (1.0 / 16.0, 0.2), (0.2, 0.3)] {
            let a = BitVector::random(16, &mut rng);
            let out = reconcile(&a, &a, delta, epsilon, &mut rng).unwrap();
            assert_eq!(out.1, reconciliation_cost(delta, epsilon, 16).unwrap());
        }
    }

    // One fixed code (drawn once per trial from the same seed), data varying
    // per trial: a much sharper success rate than re-drawing codes, since
    // most 9-parity draws separate all single flips.
    #[test]
    fn single_flip_recovery_rate() {
        let mut data_rng = ChaCha8Rng::seed_from_u64(1000);
        let trials = 1000;
        let mut ok = 0;
        for _ in 0..trials {
            let bob = BitVector::random(16, &mut data_rng);
            let mut alice = bob.clone();
            let pos = data_rng.gen_range(0..16);
            alice.set(pos, !alice.get(pos));
            let mut code_rng = ChaCha8Rng::seed_from_u64(3);
            if let Ok((rec, _)) = reconcile(&alice, &bob, 1.0 / 16.0, 0.2, &mut code_rng) {
                ok += u64::from(rec == bob);
            }
        }
        assert!(ok >= 990, "recovered {ok} of {trials}");
    }

    #[test]
    fn crowded_syndromes_are_reported_ambiguous() {
        // With one parity bit, two equally light corrections usually exist.
        let mut hit = false;
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let bob = bv("0000");
            let alice = bv("1000");
            match reconcile(&alice, &bob, 0.0, 0.05, &mut rng) {
                Err(ProtocolError::Ambiguous(k)) => {
                    assert!(k >= 2);
                    hit = true;
                    break;
                }
                Ok(_) | Err(_) => continue,
            }
        }
        assert!(hit, "no ambiguous decode in 50 seeds");
    }

    #[test]
    fn noiseless_run_accounting_is_exact() {
        let (source, channel) = ideal_setup();
        let params = RunParams {
            rounds: 4000,
            block_n: 24,
            epsilon: 0.05,
            seed: 42,
            sample_fraction: 0.5,
            method: Method::M2,
        };
        let t = run_bb84(&source, &channel, &params).unwrap();
        assert!(!t.aborted);
        assert_eq!(t.delta0_estimate, 0.0);
        assert_eq!(t.delta1_estimate, 0.0);
        assert_eq!(t.phase_bound, 0.0);
        // m = ceil(24 * 2 * 0.05) = 3, r = ceil(24 * 0.05) = 2.
        assert_eq!(t.hash_count, 3);
        assert_eq!(t.reconciliation_bits, 2);
        assert_eq!(t.net_gain, 19);
        let fin = t.kappa_fin.as_ref().unwrap();
        assert_eq!(fin.len(), 21);
        let rec = t.kappa_rec.as_ref().unwrap();
        let v = t.hash_set.as_ref().unwrap();
        assert_eq!(*fin, hash_bits(rec, v));
    }

    #[test]
    fn replaying_a_seed_reproduces_the_transcript() {
        let (source, channel) = ideal_setup();
        let params = RunParams {
            rounds: 1500,
            block_n: 16,
            epsilon: 0.05,
            seed: 9,
            sample_fraction: 0.5,
            method: Method::M1,
        };
        let t1 = run_bb84(&source, &channel, &params).unwrap();
        let t2 = run_bb84(&source, &channel, &params).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(
            serde_json::to_string(&t1).unwrap(),
            serde_json::to_string(&t2).unwrap()
        );
    }

    #[test]
    fn depolarizing_estimates_track_the_noise() {
        let source = SourceModel::build(&SourceSpec::Ideal).unwrap();
        let channel = ChannelModel::build(&ChannelSpec::Depolarizing { p: 0.1 }).unwrap();
        for seed in [1, 2, 3] {
            let params = RunParams {
                rounds: 20_000,
                block_n: 16,
                epsilon: 0.05,
                seed,
                sample_fraction: 0.5,
                method: Method::M2,
            };
            let t = run_bb84(&source, &channel, &params).unwrap();
            for (est, cnt) in [
                (t.delta0_estimate, t.sampled_z),
                (t.delta1_estimate, t.sampled_x),
            ] {
                let sigma = (0.05 * 0.95 / cnt as f64).sqrt();
                assert!(
                    (est - 0.05).abs() < 4.0 * sigma,
                    "estimate {est} misses 0.05 (sigma {sigma})"
                );
            }
            assert_eq!(
                t.net_gain,
                t.block_n as i64 - t.hash_count as i64 - t.reconciliation_bits as i64
            );
        }
    }

    #[test]
    fn intercept_resend_aborts() {
        let source = SourceModel::build(&SourceSpec::Ideal).unwrap();
        let channel = ChannelModel::build(&ChannelSpec::InterceptResend).unwrap();
        let params = RunParams {
            rounds: 8000,
            block_n: 16,
            epsilon: 0.05,
            seed: 11,
            sample_fraction: 0.5,
            method: Method::M2,
        };
        let t = run_bb84(&source, &channel, &params).unwrap();
        assert!(t.aborted);
        assert_eq!(t.abort_reason.as_deref(), Some("nonpositive gain"));
        assert!(t.net_gain <= 0);
        let sigma = (0.25 * 0.75 / t.sampled_z as f64).sqrt();
        assert!((t.delta0_estimate - 0.25).abs() < 4.0 * sigma);
        assert!(t.kappa_fin.is_none());
    }

    #[test]
    fn short_runs_report_missing_data() {
        let (source, channel) = ideal_setup();
        let params = RunParams {
            rounds: 10,
            block_n: 24,
            epsilon: 0.05,
            seed: 1,
            sample_fraction: 0.5,
            method: Method::M2,
        };
        assert!(matches!(
            run_bb84(&source, &channel, &params),
            Err(ProtocolError::InsufficientData { .. })
        ));
    }

    #[test]
    fn config_round_trips_through_json() {
        let text = r#"{
            "source": {"kind": "basis_dependent", "imbalance": 0.05},
            "channel": {"kind": "depolarizing", "p": 0.04},
            "rounds": 2000,
            "block_n": 16,
            "epsilon": 0.05,
            "seed": 7
        }"#;
        let config: SimulationConfig = serde_json::from_str(text).unwrap();
        assert_eq!(config.params.sample_fraction, 0.5);
        assert_eq!(config.params.method, Method::M2);
        let t = run_simulation(&config).unwrap();
        assert_eq!(
            t.net_gain,
            t.block_n as i64 - t.hash_count as i64 - t.reconciliation_bits as i64
        );
        let back: SimulationConfig =
            serde_json::from_str(&serde_json::to_string(&config).unwrap()).unwrap();
        assert_eq!(back, config);
    }
}

