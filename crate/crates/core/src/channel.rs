//! Rayleigh-fading channel realizations for the four uplinks and downlinks.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, CMatrix};

/// Rank-deficient draws are redrawn at most this many times in total.
pub const MAX_CHANNEL_ATTEMPTS: usize = 8;

/// Independent random substreams carved out of one trial seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    Channel = 0,
    Symbols = 1,
    RelayNoise = 2,
    DestinationNoise = 3,
}

/// Seed of one Monte Carlo trial.
///
/// Every `(master_seed, trial_index, stream)` triple maps to its own ChaCha
/// stream id, so trials can run in any order or in parallel without changing
/// what each one draws. Injective for `trial_index < 2^32`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TrialSeed {
    pub master_seed: u64,
    pub trial_index: u64,
}

impl TrialSeed {
    pub fn new(master_seed: u64, trial_index: u64) -> Self {
        TrialSeed {
            master_seed,
            trial_index,
        }
    }

    pub fn rng(&self, stream: Stream) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(((stream as u64) << 32) | (self.trial_index & 0xffff_ffff));
        rng
    }
}

/// One circularly-symmetric complex Gaussian with `E|z|^2 = variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * scale, im * scale)
}

pub fn gaussian_matrix<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    variance: f64,
    rng: &mut R,
) -> CMatrix {
    // Draw in row-major order so the stream layout does not depend on storage.
    let entries: Vec<Complex64> = (0..rows * cols)
        .map(|_| complex_gaussian(rng, variance))
        .collect();
    CMatrix::from_row_slice(rows, cols, &entries).expect("entry count matches shape")
}

/// Channel matrices of one realization. Index `k` in the arrays is source
/// node `k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub m_antennas: usize,
    pub n_antennas: usize,
    /// `H_{i,r}`, each `N x M`.
    pub uplinks: [CMatrix; 4],
    /// `G_{r,i}`, each `M x N`.
    pub downlinks: [CMatrix; 4],
}

impl ChannelSet {
    pub fn uplink(&self, node: usize) -> &CMatrix {
        &self.uplinks[node]
    }

    pub fn downlink(&self, node: usize) -> &CMatrix {
        &self.downlinks[node]
    }

    pub fn check_dimensions(&self, m: usize, n: usize) -> Result<()> {
        let ok = self.m_antennas == m
            && self.n_antennas == n
            && self.uplinks.iter().all(|h| h.shape() == (n, m))
            && self.downlinks.iter().all(|g| g.shape() == (m, n));
        if ok {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "channel set does not match M = {m}, N = {n}"
            )))
        }
    }
}

fn draw_full_rank<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rng: &mut R,
    attempts: &mut usize,
) -> Result<CMatrix> {
    loop {
        let mat = gaussian_matrix(rows, cols, 1.0, rng);
        if numerical_rank(&mat, 0.0) == rows.min(cols) {
            return Ok(mat);
        }
        *attempts += 1;
        if *attempts >= MAX_CHANNEL_ATTEMPTS {
            return Err(Error::ChannelDegenerate {
                attempts: *attempts,
            });
        }
    }
}

/// Draws all eight channel matrices with i.i.d. unit-variance
/// circularly-symmetric complex Gaussian entries. Uplinks are drawn before
/// downlinks from the trial's channel stream, so the two sets are independent.
pub fn sample_channel_set(m: usize, n: usize, seed: TrialSeed) -> Result<ChannelSet> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "antenna counts must be positive (M = {m}, N = {n})"
        )));
    }
    let mut rng = seed.rng(Stream::Channel);
    let mut attempts = 0;
    let mut draw = |rows, cols| draw_full_rank(rows, cols, &mut rng, &mut attempts);
    let uplinks = [draw(n, m)?, draw(n, m)?, draw(n, m)?, draw(n, m)?];
    let downlinks = [draw(m, n)?, draw(m, n)?, draw(m, n)?, draw(m, n)?];
    Ok(ChannelSet {
        m_antennas: m,
        n_antennas: n,
        uplinks,
        downlinks,
    })
}
