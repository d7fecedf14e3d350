//! Acceptance gate: every headline number and structural guarantee this
//! workspace is built around, each checked at its stated tolerance and time
//! budget, one reported line per check.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qkd_core::protocol::{
    coin_suite, equivalence_suite, hashing_suite, run_simulation, uncertainty_suite,
    ChannelSpec, SimulationConfig, SourceSpec, RunParams, Transcript,
};
use qkd_core::rates::{
    key_gain_basis_dependent, key_gain_basis_independent, phase_error_bound,
    positive_gain_threshold, Method,
};

fn check(label: &str, ok: bool, detail: &str) {
    println!("{} {label} ({detail})", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{label}: {detail}");
}

fn within_budget(start: Instant, seconds: f64) -> (bool, f64) {
    let elapsed = start.elapsed().as_secs_f64();
    (elapsed < seconds, elapsed)
}

#[test]
fn method_two_threshold_matches_the_closed_form() {
    let start = Instant::now();
    let star = positive_gain_threshold(Method::M2, 0.0, 0.0).expect("clean rates");
    let closed = (1.0 - std::f64::consts::FRAC_1_SQRT_2) / 2.0;
    let err = (star - closed).abs();
    let (in_time, elapsed) = within_budget(start, 1.0);
    check(
        "method-2 zero-error threshold is 0.146447 within 1e-4",
        err < 1e-4 && (star - 0.146447f64).abs() < 1e-4 && in_time,
        &format!("threshold {star:.9}, closed form {closed:.9}, {elapsed:.3}s"),
    );
}

#[test]
fn method_one_threshold_sits_below_five_point_six_percent() {
    let start = Instant::now();
    let star = positive_gain_threshold(Method::M1, 0.0, 0.0).expect("clean rates");
    let err = (star - 0.056f64).abs();
    let (in_time, elapsed) = within_budget(start, 5.0);
    check(
        "method-1 zero-error threshold is 0.056 within 1e-3",
        err < 1e-3 && in_time,
        &format!("threshold {star:.9}, {elapsed:.3}s"),
    );
}

#[test]
fn balanced_sources_keep_the_phase_bound_at_the_conjugate_rate() {
    let mut worst = 0.0f64;
    for i in 0..=25 {
        let d1 = f64::from(i) * 0.01;
        for method in [Method::M1, Method::M2] {
            let f = phase_error_bound(method, d1, 0.0).expect("in range");
            worst = worst.max((f - d1).abs());
        }
    }
    check(
        "f(delta1, 0) = delta1 within 1e-9 for both methods over 0..=0.25",
        worst < 1e-9,
        &format!("worst deviation {worst:.3e}"),
    );
}

#[test]
fn hashed_keys_match_direct_parity_measurements_exactly() {
    let start = Instant::now();
    let reports = equivalence_suite(50, 2024).expect("instances build");
    let max = reports.iter().map(|r| r.distance).fold(0.0, f64::max);
    let (in_time, elapsed) = within_budget(start, 60.0);
    check(
        "50 randomized protocol-equivalence instances stay below 1e-9",
        reports.len() == 50 && max < 1e-9 && in_time,
        &format!("max total-variation distance {max:.3e}, {elapsed:.1}s"),
    );
}

#[test]
fn parity_recovery_failures_stay_under_the_surplus_bound() {
    let start = Instant::now();
    let report = hashing_suite(10_000, 77).expect("trials run");
    let (in_time, elapsed) = within_budget(start, 120.0);
    check(
        "16-candidate recovery failure rate under 2^-4 plus 3 sigma at 10^4 trials",
        report.passed && report.trials >= 10_000 && in_time,
        &format!(
            "rate {:.5} vs bound {:.5} + 3 x {:.5}, {elapsed:.1}s",
            report.failure_rate, report.bound, report.sigma
        ),
    );
}

#[test]
fn measured_entropies_always_cover_the_qubit_count() {
    let start = Instant::now();
    let report = uncertainty_suite(100, 41);
    let (in_time, elapsed) = within_budget(start, 60.0);
    check(
        "H(Z) + H(X) >= N within 1e-9 on 100 random states up to six qubits",
        report.passed && report.states == 100 && in_time,
        &format!("min slack {:.3e}, {elapsed:.1}s", report.min_slack),
    );
}

#[test]
fn coin_balance_and_circle_constraints_hold_under_noise() {
    let start = Instant::now();
    let checks = coin_suite(100_000, 19).expect("audits run");
    let all = checks.iter().all(|c| c.balance_pass && c.circle_pass);
    let worst_balance = checks
        .iter()
        .map(|c| (c.balance_lhs - c.imbalance).abs())
        .fold(0.0, f64::max);
    let (in_time, elapsed) = within_budget(start, 120.0);
    check(
        "coin balance within 3 sigma and circle slack on 6 source/channel combos",
        checks.len() == 6 && all && in_time,
        &format!("worst balance gap {worst_balance:.2e}, {elapsed:.1}s"),
    );
}

fn run_config(source: SourceSpec, channel: ChannelSpec, seed: u64, rounds: u64) -> Transcript {
    let config = SimulationConfig {
        source,
        channel,
        params: RunParams {
            rounds,
            block_n: 16,
            epsilon: 0.05,
            seed,
            sample_fraction: 0.5,
            method: Method::M2,
        },
    };
    run_simulation(&config).expect("run completes")
}

fn accounting_holds(t: &Transcript) -> bool {
    t.net_gain == t.block_n as i64 - t.hash_count as i64 - t.reconciliation_bits as i64
}

#[test]
fn simulations_estimate_noise_and_keep_exact_accounts() {
    let mut all_ok = true;
    let mut detail = String::new();

    // Depolarizing noise p puts both sampled rates at p/2.
    let mut worst_pulls = 0.0f64;
    for p in [0.06, 0.12, 0.2] {
        for seed in 0..6 {
            let t = run_config(
                SourceSpec::Ideal,
                ChannelSpec::Depolarizing { p },
                900 + seed,
                20_000,
            );
            all_ok &= accounting_holds(&t);
            let q = p / 2.0;
            for (est, n) in [
                (t.delta0_estimate, t.sampled_z),
                (t.delta1_estimate, t.sampled_x),
            ] {
                let sigma = (q * (1.0 - q) / n as f64).sqrt();
                let pulls = (est - q).abs() / sigma;
                worst_pulls = worst_pulls.max(pulls);
                all_ok &= pulls < 4.0;
            }
        }
    }
    detail.push_str(&format!("depolarizing worst pull {worst_pulls:.2} sigma"));

    // Intercept-resend drives both rates to 1/4 and kills the gain.
    let t = run_config(SourceSpec::Ideal, ChannelSpec::InterceptResend, 4242, 20_000);
    let sigma0 = (0.25f64 * 0.75 / t.sampled_z as f64).sqrt();
    let pull = (t.delta0_estimate - 0.25).abs() / sigma0;
    all_ok &= t.aborted && pull < 4.0 && accounting_holds(&t);
    detail.push_str(&format!(
        ", intercept-resend estimate {:.4} ({pull:.2} sigma), aborted {}",
        t.delta0_estimate, t.aborted
    ));

    // The ledger identity must also survive clean and near-threshold runs.
    let clean = run_config(SourceSpec::Ideal, ChannelSpec::Identity, 7, 20_000);
    all_ok &= accounting_holds(&clean) && !clean.aborted && clean.net_gain > 0;

    check(
        "delta estimates track channel noise within 4 sigma; net gain = N - m - r in every run",
        all_ok,
        &detail,
    );
}

#[test]
fn zero_imbalance_rate_formula_reduces_to_the_two_rate_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let d0 = rng.gen::<f64>();
        let d1 = rng.gen::<f64>();
        let a = key_gain_basis_dependent(d0, d1, 0.0, Method::M2).expect("in range");
        let b = key_gain_basis_independent(d0, d1).expect("in range");
        worst = worst
            .max((a.gain_per_bit - b.gain_per_bit).abs())
            .max((a.cost_ec - b.cost_ec).abs())
            .max((a.cost_pa - b.cost_pa).abs());
    }
    check(
        "basis-dependent gain at zero imbalance equals the two-rate form within 1e-9",
        worst < 1e-9,
        &format!("worst field gap {worst:.3e} over 100 random pairs"),
    );
}
