//! Command-line front end: feasibility report, scheme verification and
//! Monte Carlo SNR sweeps with CSV output.
//!
//! Exit codes: 0 on success, 1 on a failed check or I/O error, 2 on an
//! invalid or infeasible configuration.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use crate::channel::{sample_channel_set, Stream, TrialSeed};
use crate::error::Error;
use crate::metrics::{estimate_dof, monte_carlo_sweep, Execution, SweepConfig, SweepResult};
use crate::scheme::{
    allocate_streams, dof_upper_bound, gsa_feasible, min_relay_antennas, required_block_height,
    sa_feasible, GsaScheme, SchemeResiduals, StreamAllocation,
};
use crate::transceiver::{max_recovery_error, transmit, LinkBudget, SymbolFrame};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Thresholds `verify` holds every trial to.
pub const ALIGNMENT_TOL: f64 = 1e-8;
pub const EXCLUSION_TOL: f64 = 1e-8;
pub const RECOVERY_TOL: f64 = 1e-6;

/// Width of the high-SNR window the sweep's DoF estimate is fitted over.
pub const DOF_WINDOW_DB: f64 = 9.0;

pub const CSV_HEADER: &str = "snr_db,mean_sum_rate_bits,std_err,trials";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Feasibility,
    Verify,
    Sweep,
}

/// Generalized signal alignment for the MIMO two-way X relay channel.
#[derive(Debug, Clone, Parser)]
#[command(name = "gsa-relay", version)]
pub struct RunConfig {
    #[arg(long, value_enum)]
    pub mode: Mode,
    /// Antennas per source node (M).
    #[arg(long = "m-antennas")]
    pub m: usize,
    /// Antennas at the relay (N).
    #[arg(long = "n-antennas")]
    pub n: usize,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub snr_start: f64,
    #[arg(long, default_value_t = 50.0, allow_negative_numbers = true)]
    pub snr_stop: f64,
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    pub snr_step: f64,
    #[arg(long, default_value_t = 500)]
    pub trials: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// CSV destination, `-` for standard output.
    #[arg(long, default_value = "-")]
    pub output: PathBuf,
    /// Worker threads for sweeps: 0 uses every core, 1 runs serially.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.m == 0 || self.n == 0 {
            return Err("antenna counts must be positive".into());
        }
        if self.trials == 0 && self.mode != Mode::Feasibility {
            return Err("--trials must be at least 1".into());
        }
        if self.mode == Mode::Sweep {
            snr_grid(self.snr_start, self.snr_stop, self.snr_step)?;
        }
        Ok(())
    }

    pub fn execution(&self) -> Execution {
        match self.threads {
            1 => Execution::Serial,
            t => Execution::Parallel(t),
        }
    }
}

/// `start, start + step, ...` up to and including `stop`.
pub fn snr_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, String> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
        return Err("SNR bounds must be finite".into());
    }
    if start > stop {
        return Err(format!("--snr-start ({start}) exceeds --snr-stop ({stop})"));
    }
    if step <= 0.0 {
        return Err(format!("--snr-step must be positive, got {step}"));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| start + k as f64 * step).collect())
}

fn describe_allocation(alloc: &StreamAllocation) -> String {
    let m = alloc.m_antennas();
    if m.is_multiple_of(2) {
        format!("d_ij = {} each", m / 2)
    } else {
        format!(
            "d_13 = d_24 = d_31 = d_42 = {}, d_14 = d_23 = d_32 = d_41 = {}",
            alloc.streams(0, 2),
            alloc.streams(0, 3)
        )
    }
}

/// Human-readable feasibility report for `(m, n)`.
pub fn run_feasibility(m: usize, n: usize) -> String {
    let mut out = String::new();
    let bound = dof_upper_bound(m, n);
    let _ = writeln!(out, "M = {m}, N = {n}");
    if sa_feasible(m, n) {
        let _ = writeln!(out, "SA: feasible (N < 2M)");
        let _ = writeln!(out, "GSA (N ≥ 2M branch): not applicable");
        let _ = writeln!(out, "DoF upper bound: {bound}");
        let _ = writeln!(
            out,
            "binding constraint: relay antennas, N = {n} < 2M = {}",
            2 * m
        );
        return out;
    }
    let _ = writeln!(out, "SA: infeasible (N ≥ 2M)");
    let available = n - 2 * m;
    let required = required_block_height(m);
    if gsa_feasible(m, n) {
        let alloc = allocate_streams(m);
        let _ = writeln!(
            out,
            "GSA: feasible; DoF bound {bound}; {}",
            describe_allocation(&alloc)
        );
    } else {
        let _ = writeln!(
            out,
            "GSA: infeasible (need N ≥ {} for M = {m})",
            min_relay_antennas(m)
        );
        let _ = writeln!(out, "DoF upper bound: {bound}");
    }
    let relation = if available >= required { "≥" } else { "<" };
    let _ = writeln!(
        out,
        "binding constraint: null-space dimension N - 2M = {available} {relation} required block height {required}"
    );
    out
}

/// Outcome of [`run_verify`].
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub residuals: SchemeResiduals,
    pub max_recovery_error: f64,
    pub trials: usize,
    pub failures: Vec<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn render(&self, m: usize, n: usize) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "verify M = {m}, N = {n}, {} trials", self.trials);
        let _ = writeln!(
            out,
            "max alignment residual     {:.3e} (limit {ALIGNMENT_TOL:.0e})",
            self.residuals.alignment
        );
        let _ = writeln!(
            out,
            "max relay exclusion        {:.3e} (limit {EXCLUSION_TOL:.0e})",
            self.residuals.relay_exclusion
        );
        let _ = writeln!(
            out,
            "max broadcast exclusion    {:.3e} (limit {EXCLUSION_TOL:.0e})",
            self.residuals.bc_exclusion
        );
        let _ = writeln!(
            out,
            "max zero-noise symbol err  {:.3e} (limit {RECOVERY_TOL:.0e})",
            self.max_recovery_error
        );
        for f in &self.failures {
            let _ = writeln!(out, "FAIL {f}");
        }
        let _ = writeln!(out, "{}", if self.passed() { "PASS" } else { "FAIL" });
        out
    }
}

/// Builds the scheme on `trials` seeded channel draws and checks alignment,
/// both exclusion identities and noiseless end-to-end recovery.
pub fn verify_scheme(
    m: usize,
    n: usize,
    trials: usize,
    master_seed: u64,
) -> Result<VerifyReport, Error> {
    if !gsa_feasible(m, n) {
        return Err(Error::Infeasible { m, n });
    }
    let mut residuals = SchemeResiduals::default();
    let mut max_err: f64 = 0.0;
    let mut failures = Vec::new();
    for t in 0..trials {
        let seed = TrialSeed::new(master_seed, t as u64);
        let outcome = (|| {
            let ch = sample_channel_set(m, n, seed)?;
            let scheme = GsaScheme::build(&ch)?;
            let r = scheme.residuals(&ch);
            let frame = SymbolFrame::gaussian(m, 1.0, &mut seed.rng(Stream::Symbols));
            let budget = LinkBudget {
                per_stream_power: 1.0,
                relay_power: 4.0 * m as f64,
                sigma2: 0.0,
            };
            let result = transmit(&scheme, &ch, &frame, &budget, seed)?;
            Ok::<_, Error>((r, max_recovery_error(&scheme, &frame, &result)))
        })();
        match outcome {
            Ok((r, err)) => {
                if r.alignment >= ALIGNMENT_TOL
                    || r.relay_exclusion >= EXCLUSION_TOL
                    || r.bc_exclusion >= EXCLUSION_TOL
                    || err.is_nan()
                    || err >= RECOVERY_TOL
                {
                    failures.push(format!("trial {t}: {r:?}, recovery error {err:.3e}"));
                }
                residuals = residuals.max(&r);
                max_err = max_err.max(err);
            }
            Err(e) => failures.push(format!("trial {t}: {e}")),
        }
    }
    Ok(VerifyReport {
        residuals,
        max_recovery_error: max_err,
        trials,
        failures,
    })
}

/// Report text and exit code of the `verify` mode.
pub fn run_verify(m: usize, n: usize, trials: usize, master_seed: u64) -> (String, i32) {
    match verify_scheme(m, n, trials, master_seed) {
        Ok(report) => {
            let code = if report.passed() {
                EXIT_OK
            } else {
                EXIT_FAILURE
            };
            (report.render(m, n), code)
        }
        Err(e @ Error::Infeasible { .. }) => (
            format!("{e} (need N ≥ {} for M = {m})\n", min_relay_antennas(m)),
            EXIT_CONFIG,
        ),
        Err(e) => (format!("{e}\n"), EXIT_FAILURE),
    }
}

/// At least ten significant digits, fixed-point.
fn format_value(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let decimals = (9 - x.abs().log10().floor() as i32).clamp(1, 20) as usize;
    format!("{x:.decimals$}")
}

/// CSV rendering of a sweep, with a trailing DoF comment when the top
/// [`DOF_WINDOW_DB`] of the grid holds at least two points.
pub fn render_sweep_csv(sweep: &SweepResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{CSV_HEADER}");
    for p in &sweep.points {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            p.snr_db,
            format_value(p.mean_sum_rate),
            format_value(p.std_error),
            p.trials
        );
    }
    if let Some(last) = sweep.points.last() {
        let window = (last.snr_db - DOF_WINDOW_DB, last.snr_db);
        if let Ok(dof) = estimate_dof(sweep, window) {
            let _ = writeln!(
                out,
                "# dof_estimate={dof:.6} window={}-{}dB",
                window.0, window.1
            );
        }
    }
    out
}

pub fn sweep_config(cfg: &RunConfig) -> Result<SweepConfig, String> {
    Ok(SweepConfig {
        m: cfg.m,
        n: cfg.n,
        snr_grid_db: snr_grid(cfg.snr_start, cfg.snr_stop, cfg.snr_step)?,
        trials: cfg.trials,
        master_seed: cfg.seed,
        execution: cfg.execution(),
    })
}

/// Runs the sweep and returns the CSV text.
pub fn run_sweep(cfg: &RunConfig) -> Result<String, Error> {
    let sweep_cfg = sweep_config(cfg).map_err(Error::InvalidArgument)?;
    let sweep = monte_carlo_sweep(&sweep_cfg)?;
    Ok(render_sweep_csv(&sweep))
}

fn write_output(path: &PathBuf, text: &str) -> io::Result<()> {
    if path.as_os_str() == "-" {
        let mut stdout = io::stdout().lock();
        stdout.write_all(text.as_bytes())?;
        stdout.flush()
    } else {
        let mut f = File::create(path)?;
        f.write_all(text.as_bytes())?;
        f.flush()
    }
}

/// Executes a parsed configuration and returns the process exit code.
pub fn run(cfg: &RunConfig) -> i32 {
    if let Err(msg) = cfg.validate() {
        eprintln!("error: {msg}");
        return EXIT_CONFIG;
    }
    match cfg.mode {
        Mode::Feasibility => {
            print!("{}", run_feasibility(cfg.m, cfg.n));
            EXIT_OK
        }
        Mode::Verify => {
            let (report, code) = run_verify(cfg.m, cfg.n, cfg.trials, cfg.seed);
            if code == EXIT_CONFIG {
                eprint!("error: {report}");
            } else {
                print!("{report}");
            }
            code
        }
        Mode::Sweep => match run_sweep(cfg) {
            Ok(csv) => match write_output(&cfg.output, &csv) {
                Ok(()) => EXIT_OK,
                Err(e) => {
                    eprintln!("error: writing {}: {e}", cfg.output.display());
                    EXIT_FAILURE
                }
            },
            Err(e @ (Error::Infeasible { .. } | Error::InvalidArgument(_))) => {
                eprintln!("error: {e}");
                EXIT_CONFIG
            }
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_FAILURE
            }
        },
    }
}

/// Parses `args` and runs; argument errors exit with code 2.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match RunConfig::try_parse_from(args) {
        Ok(cfg) => run(&cfg),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_CONFIG
            } else {
                EXIT_OK
            }
        }
    }
}
