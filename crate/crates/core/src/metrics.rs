//! Amplify-and-forward sum rate, Monte Carlo SNR sweeps and DoF estimation.

use rayon::prelude::*;

use crate::channel::{sample_channel_set, ChannelSet, TrialSeed};
use crate::error::{Error, Result};
use crate::linalg::{log_det_hermitian_pd, CMatrix};
use crate::scheme::{gsa_feasible, GsaScheme};
use crate::transceiver::{destination_channel, LinkBudget};

/// Noise variance used by sweeps; only the SNR matters for the rate.
pub const SWEEP_NOISE_VARIANCE: f64 = 1.0;

/// Per-destination and total rates at one SNR, in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub snr_db: f64,
    pub per_node_rate: [f64; 4],
    pub sum_rate: f64,
}

/// Rate of every destination for a fixed channel and scheme.
///
/// Node `i` sees the desired partner symbols through `beta G_i [U_p U_q]`
/// with covariance `P_s I` once its own symbols are cancelled, against noise
/// `sigma2 (beta^2 G_i U A A^H U^H G_i^H + I)` forwarded from the relay plus
/// its own receiver noise. `log2 det(I + N^-1 S)` is evaluated as
/// `log2 det(N + S) - log2 det(N)` so both terms stay Hermitian.
pub fn sum_rate_af(
    scheme: &GsaScheme,
    ch: &ChannelSet,
    snr_db: f64,
    sigma2: f64,
) -> Result<RatePoint> {
    if sigma2.is_nan() || sigma2 <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "noise variance must be positive, got {sigma2}"
        )));
    }
    let budget = LinkBudget::from_snr_db(scheme, snr_db, sigma2);
    let beta = budget.relay_gain(scheme);
    let m = scheme.m_antennas();
    let eye = CMatrix::identity(m);
    let ua = &scheme.u * &scheme.a;
    let mut per_node_rate = [0.0; 4];
    for (node, rate) in per_node_rate.iter_mut().enumerate() {
        let forwarded = (ch.downlink(node) * &ua).scale(beta);
        let noise_cov = (&(&forwarded * &forwarded.hermitian()) + &eye).scale(sigma2);
        let g_eff = destination_channel(scheme, ch, node).scale(beta);
        let signal_cov = (&g_eff * &g_eff.hermitian()).scale(budget.per_stream_power);
        let r =
            log_det_hermitian_pd(&(&noise_cov + &signal_cov))? - log_det_hermitian_pd(&noise_cov)?;
        // Round-off can push a vanishing rate just below zero.
        *rate = r.max(0.0);
    }
    Ok(RatePoint {
        snr_db,
        per_node_rate,
        sum_rate: per_node_rate.iter().sum(),
    })
}

/// Statistics of one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub mean_sum_rate: f64,
    pub std_error: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Serial,
    /// Run trials on a rayon pool; `0` uses the global pool, any other value
    /// a dedicated pool with that many threads.
    Parallel(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub m: usize,
    pub n: usize,
    pub snr_grid_db: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    pub execution: Execution,
}

/// Sum rate of one trial at every grid point. The channel depends only on
/// `(master_seed, trial_index)`, so all grid points share it.
pub fn trial_sum_rates(
    m: usize,
    n: usize,
    snr_grid_db: &[f64],
    seed: TrialSeed,
) -> Result<Vec<f64>> {
    let ch = sample_channel_set(m, n, seed)?;
    let scheme = GsaScheme::build(&ch)?;
    snr_grid_db
        .iter()
        .map(|&snr| sum_rate_af(&scheme, &ch, snr, SWEEP_NOISE_VARIANCE).map(|p| p.sum_rate))
        .collect()
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty SNR grid".into()));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("SNR grid must be finite".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "SNR grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Mean and standard error of the sum rate at every grid point.
///
/// Per-trial results are collected in trial order and reduced sequentially,
/// so the output is bit-identical for any execution mode.
pub fn monte_carlo_sweep(config: &SweepConfig) -> Result<SweepResult> {
    let SweepConfig {
        m,
        n,
        trials,
        master_seed,
        ..
    } = *config;
    if !gsa_feasible(m, n) {
        return Err(Error::Infeasible { m, n });
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let grid = &config.snr_grid_db;
    check_grid(grid)?;

    let run = |t: usize| trial_sum_rates(m, n, grid, TrialSeed::new(master_seed, t as u64));
    let per_trial: Vec<Vec<f64>> = match config.execution {
        Execution::Serial => (0..trials).map(run).collect::<Result<_>>()?,
        Execution::Parallel(0) => (0..trials)
            .into_par_iter()
            .map(run)
            .collect::<Result<_>>()?,
        Execution::Parallel(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
            pool.install(|| (0..trials).into_par_iter().map(run).collect::<Result<_>>())?
        }
    };

    let points = grid
        .iter()
        .enumerate()
        .map(|(g, &snr_db)| {
            let (mean, std_error) = mean_and_std_error(per_trial.iter().map(|r| r[g]));
            SweepPoint {
                snr_db,
                mean_sum_rate: mean,
                std_error,
                trials,
            }
        })
        .collect();
    Ok(SweepResult { points })
}

/// Sample mean and `sd / sqrt(n)` with the unbiased sample deviation; the
/// standard error of a single sample is zero.
fn mean_and_std_error(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Least-squares slope of mean sum rate against SNR over the points inside
/// `window_db` (inclusive), expressed in bits per 3 dB.
pub fn estimate_dof(sweep: &SweepResult, window_db: (f64, f64)) -> Result<f64> {
    let (lo, hi) = window_db;
    let eps = 1e-9;
    let pts: Vec<(f64, f64)> = sweep
        .points
        .iter()
        .filter(|p| p.snr_db >= lo - eps && p.snr_db <= hi + eps)
        .map(|p| (p.snr_db, p.mean_sum_rate))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InsufficientPoints { found: pts.len() });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    Ok(3.0 * sxy / sxx)
}
