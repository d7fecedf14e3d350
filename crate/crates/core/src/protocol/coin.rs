//! The balance audit: a purified sender whose branch choice is stored on an
//! extra coin qubit. The receiver's x-basis disagreement with the reported
//! branch, split by coin outcome, ties the observable error rates to the
//! coin's x-basis bias no matter what the channel does.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use super::channel::{qubit_projector, ChannelModel};
use super::source_model::SourceModel;
use super::ProtocolError;
use crate::quantum::{coin_state, sample_index, Axis, DensityMatrix};

/// Empirical tallies from one audit run. Conditional rates are absent when
/// their conditioning event never occurred.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoinRecord {
    pub rounds: u64,
    /// Rounds whose coin was read in the x basis.
    pub coin_x_rounds: u64,
    pub coin_z_rounds: u64,
    /// Error-indicator rate over every round, coin unread.
    pub r_t1: f64,
    /// P(coin-x = 1 | t = j) estimates.
    pub r_x0: Option<f64>,
    pub r_x1: Option<f64>,
    /// P(coin-z = 1 | t = j) estimates.
    pub r_z0: Option<f64>,
    pub r_z1: Option<f64>,
    pub n_x0: u64,
    pub n_x1: u64,
    pub n_z0: u64,
    pub n_z1: u64,
    /// Unconditional coin-x rate, the imbalance estimate.
    pub delta_estimate: Option<f64>,
}

/// Joint distribution over (reported branch b, received x outcome b',
/// coin outcome c) with the coin read along `coin_axis`.
fn outcome_table(
    rho: &DensityMatrix,
    source: &SourceModel,
    coin_axis: Axis,
) -> [f64; 8] {
    let mut table = [0.0f64; 8];
    let mut total = 0.0;
    for b in 0..2 {
        let f = &source.coin().povm1.elements()[b];
        for bp in 0..2 {
            let px = qubit_projector(Axis::X, bp);
            for cbit in 0..2 {
                let pc = qubit_projector(coin_axis, cbit);
                let op: DMatrix<Complex64> = f.kronecker(&px).kronecker(&pc);
                let p = rho.expectation(&op).clamp(0.0, 1.0);
                table[(b << 2) | (bp << 1) | cbit] = p;
                total += p;
            }
        }
    }
    debug_assert!((total - 1.0).abs() < 1e-9, "table mass {total}");
    table
}

/// Runs `rounds` audit rounds: the purification's branch register is
/// measured with the second sender measurement, the transmitted qubit is
/// read in the x basis after the channel, and the coin is read in a basis
/// chosen fresh each round (x with probability `x_fraction`).
pub fn coin_scenario<R: Rng + ?Sized>(
    source: &SourceModel,
    channel: &ChannelModel,
    rounds: u64,
    x_fraction: f64,
    rng: &mut R,
) -> Result<CoinRecord, ProtocolError> {
    if rounds == 0 {
        return Err(ProtocolError::BadConfig("audit needs at least one round".into()));
    }
    if !(0.0..=1.0).contains(&x_fraction) {
        return Err(ProtocolError::BadConfig(format!(
            "coin x fraction {x_fraction} outside [0, 1]"
        )));
    }

    let psi = coin_state(source.coin().chi(0), source.coin().chi(1));
    let rho = channel.apply_on(&psi.density(), 1);
    let table_z = outcome_table(&rho, source, Axis::Z);
    let table_x = outcome_table(&rho, source, Axis::X);

    let mut t1 = 0u64;
    let mut n = [[0u64; 2]; 2]; // [x?][t]
    let mut ones = [[0u64; 2]; 2];
    for _ in 0..rounds {
        let read_x = rng.gen_bool(x_fraction);
        let table = if read_x { &table_x } else { &table_z };
        let idx = sample_index(table, rng);
        let b = idx >> 2;
        let bp = (idx >> 1) & 1;
        let cbit = idx & 1;
        let t = usize::from(b != bp);
        t1 += t as u64;
        let basis = usize::from(read_x);
        n[basis][t] += 1;
        ones[basis][t] += cbit as u64;
    }

    let rate = |basis: usize, t: usize| {
        (n[basis][t] > 0).then(|| ones[basis][t] as f64 / n[basis][t] as f64)
    };
    let coin_x_rounds = n[1][0] + n[1][1];
    let delta_estimate = (coin_x_rounds > 0)
        .then(|| (ones[1][0] + ones[1][1]) as f64 / coin_x_rounds as f64);
    Ok(CoinRecord {
        rounds,
        coin_x_rounds,
        coin_z_rounds: n[0][0] + n[0][1],
        r_t1: t1 as f64 / rounds as f64,
        r_x0: rate(1, 0),
        r_x1: rate(1, 1),
        r_z0: rate(0, 0),
        r_z1: rate(0, 1),
        n_x0: n[1][0],
        n_x1: n[1][1],
        n_z0: n[0][0],
        n_z1: n[0][1],
        delta_estimate,
    })
}
