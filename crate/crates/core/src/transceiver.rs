//! One end-to-end two-hop transmission with amplify-and-forward relaying.
//!
//! MAC phase: every source sends `x_i = V_i s_i`, the relay receives
//! `y_r = sum_i H_i x_i + n_r` and combines it into `A y_r = P s + A n_r`,
//! i.e. the network-coded sums plus filtered noise. BC phase: the relay
//! forwards `x_r = beta U A y_r`, and node `i` hears `y_i = G_i x_r + n_i`.
//! Because the non-member blocks of `U` are invisible to node `i`, the node
//! sees exactly its two pair sums, inverts its `M x M` effective channel,
//! and strips its own symbols out.

use rand::Rng;

use crate::channel::{gaussian_matrix, ChannelSet, Stream, TrialSeed};
use crate::error::{Error, Result};
use crate::linalg::{invert, stack_rows, CMatrix};
use crate::scheme::{member_blocks, partner, GsaScheme, StreamAllocation};

/// Power levels of one transmission.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// Expected `|symbol|^2`, identical for every stream.
    pub per_stream_power: f64,
    /// Expected `||x_r||^2` at the relay.
    pub relay_power: f64,
    /// Per-entry noise variance at the relay and at every destination.
    pub sigma2: f64,
}

impl LinkBudget {
    /// SNR is the total expected source transmit power over `sigma2`. The
    /// relay transmits the same total power.
    pub fn from_snr_db(scheme: &GsaScheme, snr_db: f64, sigma2: f64) -> LinkBudget {
        let total = 10f64.powf(snr_db / 10.0) * sigma2;
        LinkBudget {
            per_stream_power: total / precoder_energy(scheme),
            relay_power: total,
            sigma2,
        }
    }

    /// `P_s * sum_i tr(V_i V_i^H)`.
    pub fn source_power(&self, scheme: &GsaScheme) -> f64 {
        self.per_stream_power * precoder_energy(scheme)
    }

    /// Amplitude gain `beta` with `E||beta U (s_sum + A n_r)||^2 = relay_power`.
    ///
    /// Every network-coded symbol carries two independent streams, hence the
    /// signal covariance `2 P_s I`; forwarded noise has covariance
    /// `sigma2 A A^H`.
    pub fn relay_gain(&self, scheme: &GsaScheme) -> f64 {
        let signal = 2.0 * self.per_stream_power * scheme.u.frobenius_norm().powi(2);
        let noise = self.sigma2 * (&scheme.u * &scheme.a).frobenius_norm().powi(2);
        let denom = signal + noise;
        if denom > 0.0 {
            (self.relay_power / denom).sqrt()
        } else {
            0.0
        }
    }
}

fn precoder_energy(scheme: &GsaScheme) -> f64 {
    scheme.v.iter().map(|v| v.frobenius_norm().powi(2)).sum()
}

/// Stacked symbol vector `[s_13 s_14 | s_23 s_24 | s_31 s_32 | s_41 s_42]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFrame {
    pub symbols: CMatrix,
    pub per_stream_power: f64,
}

impl SymbolFrame {
    pub fn new(symbols: CMatrix, per_stream_power: f64) -> Result<SymbolFrame> {
        if symbols.cols() != 1 || !symbols.rows().is_multiple_of(4) || symbols.rows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "symbol frame must be a 4M x 1 column, got {}x{}",
                symbols.rows(),
                symbols.cols()
            )));
        }
        Ok(SymbolFrame {
            symbols,
            per_stream_power,
        })
    }

    /// Circularly-symmetric Gaussian symbols with variance `per_stream_power`.
    pub fn gaussian<R: Rng + ?Sized>(m: usize, per_stream_power: f64, rng: &mut R) -> SymbolFrame {
        SymbolFrame {
            symbols: gaussian_matrix(4 * m, 1, per_stream_power, rng),
            per_stream_power,
        }
    }

    pub fn m_antennas(&self) -> usize {
        self.symbols.rows() / 4
    }

    /// `s_i`: the node's `M` outgoing symbols, partners ascending.
    pub fn outgoing(&self, node: usize) -> CMatrix {
        let m = self.m_antennas();
        self.symbols.row_block(node * m, m)
    }

    /// Symbols addressed to `node`, ordered by its member pair blocks.
    pub fn incoming(&self, alloc: &StreamAllocation, node: usize) -> CMatrix {
        let (p, q) = member_blocks(node);
        let parts: Vec<CMatrix> = [p, q]
            .into_iter()
            .map(|blk| {
                let from = partner(blk, node);
                self.symbols
                    .row_block(alloc.stream_offset(from, node), alloc.streams(from, node))
            })
            .collect();
        stack_rows(&parts).expect("single-column blocks")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacOutput {
    /// Raw relay observation, `N x 1`.
    pub y_r: CMatrix,
    /// `A y_r`, `2M x 1`.
    pub relay_estimate: CMatrix,
}

fn check_scheme(scheme: &GsaScheme, ch: &ChannelSet) -> Result<()> {
    ch.check_dimensions(scheme.m_antennas(), scheme.n_antennas)
}

/// First hop: all four sources transmit simultaneously.
pub fn mac_phase<R: Rng + ?Sized>(
    scheme: &GsaScheme,
    ch: &ChannelSet,
    frame: &SymbolFrame,
    sigma2: f64,
    rng: &mut R,
) -> Result<MacOutput> {
    check_scheme(scheme, ch)?;
    let m = scheme.m_antennas();
    if frame.symbols.rows() != 4 * m {
        return Err(Error::DimensionMismatch(format!(
            "frame has {} symbols, scheme carries {}",
            frame.symbols.rows(),
            4 * m
        )));
    }
    let mut y_r = gaussian_matrix(scheme.n_antennas, 1, sigma2, rng);
    for node in 0..4 {
        let x = &scheme.v[node] * &frame.outgoing(node);
        y_r = &y_r + &(ch.uplink(node) * &x);
    }
    let relay_estimate = &scheme.a * &y_r;
    Ok(MacOutput {
        y_r,
        relay_estimate,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BcOutput {
    pub beta: f64,
    /// `y_i` for each node, `M x 1`.
    pub received: [CMatrix; 4],
}

/// Second hop: the relay scales, precodes with `U` and broadcasts.
pub fn bc_phase<R: Rng + ?Sized>(
    scheme: &GsaScheme,
    ch: &ChannelSet,
    relay_estimate: &CMatrix,
    budget: &LinkBudget,
    rng: &mut R,
) -> Result<BcOutput> {
    check_scheme(scheme, ch)?;
    let m = scheme.m_antennas();
    if relay_estimate.shape() != (2 * m, 1) {
        return Err(Error::DimensionMismatch(format!(
            "relay estimate must be {}x1",
            2 * m
        )));
    }
    let beta = budget.relay_gain(scheme);
    let x_r = (&scheme.u * relay_estimate).scale(beta);
    let received = [0, 1, 2, 3].map(|node| {
        let noise = gaussian_matrix(m, 1, budget.sigma2, rng);
        &(ch.downlink(node) * &x_r) + &noise
    });
    Ok(BcOutput { beta, received })
}

/// `G_i [U_p U_q]`: what node `i` sees of its own two pair blocks.
pub fn destination_channel(scheme: &GsaScheme, ch: &ChannelSet, node: usize) -> CMatrix {
    ch.downlink(node) * &scheme.member_u(node)
}

/// Zero-forcing equalization followed by self-interference cancellation.
/// Returns the symbols the partners sent to `node`, in member-block order.
pub fn decode_destination(
    node: usize,
    y: &CMatrix,
    scheme: &GsaScheme,
    ch: &ChannelSet,
    own_symbols: &CMatrix,
    beta: f64,
) -> Result<CMatrix> {
    let m = scheme.m_antennas();
    if y.shape() != (m, 1) || own_symbols.shape() != (m, 1) {
        return Err(Error::DimensionMismatch(format!(
            "destination vectors must be {m}x1"
        )));
    }
    if beta.is_nan() || beta <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "relay gain must be positive, got {beta}"
        )));
    }
    let g_eff = destination_channel(scheme, ch, node);
    let g_inv = invert(&g_eff).map_err(|e| match e {
        Error::SingularMatrix { .. } => Error::SingularEffectiveChannel { node: node + 1 },
        other => other,
    })?;
    // Member blocks line up with the node's own outgoing blocks, so the
    // network-coded sums and `own_symbols` share one ordering.
    let sums = (&g_inv * y).scale(1.0 / beta);
    Ok(&sums - own_symbols)
}

/// Everything observed during one transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionResult {
    pub relay_estimate: CMatrix,
    pub received: [CMatrix; 4],
    pub recovered: [CMatrix; 4],
    pub beta: f64,
    pub noise_variance: f64,
}

/// Runs both hops and decodes at all four nodes. Noise comes from the relay
/// and destination streams of `seed`.
pub fn transmit(
    scheme: &GsaScheme,
    ch: &ChannelSet,
    frame: &SymbolFrame,
    budget: &LinkBudget,
    seed: TrialSeed,
) -> Result<TransmissionResult> {
    let mac = mac_phase(
        scheme,
        ch,
        frame,
        budget.sigma2,
        &mut seed.rng(Stream::RelayNoise),
    )?;
    let bc = bc_phase(
        scheme,
        ch,
        &mac.relay_estimate,
        budget,
        &mut seed.rng(Stream::DestinationNoise),
    )?;
    let mut recovered = Vec::with_capacity(4);
    for node in 0..4 {
        recovered.push(decode_destination(
            node,
            &bc.received[node],
            scheme,
            ch,
            &frame.outgoing(node),
            bc.beta,
        )?);
    }
    Ok(TransmissionResult {
        relay_estimate: mac.relay_estimate,
        received: bc.received,
        recovered: recovered.try_into().expect("four nodes"),
        beta: bc.beta,
        noise_variance: budget.sigma2,
    })
}

/// Largest absolute symbol error across all four destinations.
pub fn max_recovery_error(
    scheme: &GsaScheme,
    frame: &SymbolFrame,
    result: &TransmissionResult,
) -> f64 {
    (0..4)
        .map(|node| (&result.recovered[node] - &frame.incoming(&scheme.alloc, node)).max_abs())
        .fold(0.0, f64::max)
}
