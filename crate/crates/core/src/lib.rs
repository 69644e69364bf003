//! Generalized signal alignment (GSA) for the MIMO two-way X relay channel.
//!
//! Four sources with `M` antennas each exchange messages through a relay with
//! `N >= 2M` antennas. The relay combines its observation with a matrix `A`
//! whose row blocks null out all but one exchanging pair, so the sources can
//! precode such that the relay sees network-coded sums `s_ij + s_ji`. The
//! relay then amplifies and broadcasts with a block precoder `U`, and every
//! destination removes its own symbols to recover what its partners sent.
//!
//! Modules, bottom-up:
//! - [`linalg`]: complex matrix kernel (null spaces, inverses, log-det).
//! - [`channel`]: seeded Rayleigh-fading channel draws.
//! - [`scheme`]: stream allocation, feasibility and the `A`, `V`, `U` builders.
//! - [`transceiver`]: one two-hop amplify-and-forward transmission.
//! - [`metrics`]: sum rate, Monte Carlo sweeps, DoF slope estimation.
//! - [`cli`]: the `gsa-relay` command-line front end.

pub mod channel;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod scheme;
pub mod transceiver;

pub use channel::{sample_channel_set, ChannelSet, TrialSeed};
pub use error::{Error, Result};
pub use linalg::CMatrix;
pub use metrics::{
    estimate_dof, monte_carlo_sweep, sum_rate_af, Execution, SweepConfig, SweepResult,
};
pub use scheme::{
    allocate_streams, dof_upper_bound, gsa_feasible, sa_feasible, AlignmentPattern, GsaScheme,
    StreamAllocation,
};
