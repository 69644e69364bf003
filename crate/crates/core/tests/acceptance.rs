//! Acceptance suite. Runs every exit criterion, prints one PASS/FAIL line per
//! criterion and exits non-zero if any fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use gsa_relay::channel::{sample_channel_set, Stream, TrialSeed};
use gsa_relay::cli::{run_sweep, RunConfig};
use gsa_relay::metrics::{estimate_dof, monte_carlo_sweep, Execution, SweepConfig};
use gsa_relay::scheme::{
    allocate_streams, build_bc_precoder, build_relay_combiner, dof_upper_bound, gsa_feasible,
    GsaScheme, PAIRS,
};
use gsa_relay::transceiver::{max_recovery_error, transmit, LinkBudget, SymbolFrame};
use gsa_relay::Error;

use clap::Parser;

const CONFIGS: [(usize, usize); 6] = [(2, 5), (2, 6), (2, 8), (3, 8), (4, 10), (5, 13)];
const DRAWS: u64 = 100;
const MASTER_SEED: u64 = 20_240_601;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn schemes(
    m: usize,
    n: usize,
) -> impl Iterator<Item = (TrialSeed, gsa_relay::ChannelSet, GsaScheme)> {
    (0..DRAWS).map(move |t| {
        let seed = TrialSeed::new(MASTER_SEED, t);
        let ch = sample_channel_set(m, n, seed).expect("channel draw");
        let scheme = GsaScheme::build(&ch).expect("feasible configuration");
        (seed, ch, scheme)
    })
}

fn alignment_exactness() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (m, n) in CONFIGS {
        for (_, ch, scheme) in schemes(m, n) {
            worst = worst.max(scheme.residuals(&ch).alignment);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst < 1e-8 && secs < 5.0,
        format!("max ||AHV - P||_F/||P||_F = {worst:.3e} (< 1e-8), {secs:.2} s (< 5 s)"),
    )
}

fn exclusion_identities() -> Outcome {
    let (mut relay, mut bc): (f64, f64) = (0.0, 0.0);
    for (m, n) in CONFIGS {
        for (_, ch, scheme) in schemes(m, n) {
            let r = scheme.residuals(&ch);
            relay = relay.max(r.relay_exclusion);
            bc = bc.max(r.bc_exclusion);
        }
    }
    outcome(
        relay < 1e-8 && bc < 1e-8,
        format!("max relay exclusion {relay:.3e}, max broadcast exclusion {bc:.3e} (< 1e-8)"),
    )
}

fn zero_noise_recovery() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut recovered = 0usize;
    for (m, n) in CONFIGS {
        for (seed, ch, scheme) in schemes(m, n) {
            let frame = SymbolFrame::gaussian(m, 1.0, &mut seed.rng(Stream::Symbols));
            let budget = LinkBudget {
                per_stream_power: 1.0,
                relay_power: 4.0 * m as f64,
                sigma2: 0.0,
            };
            let res =
                transmit(&scheme, &ch, &frame, &budget, seed).expect("noiseless transmission");
            worst = worst.max(max_recovery_error(&scheme, &frame, &res));
            recovered += res.recovered.iter().map(|r| r.rows()).sum::<usize>();
        }
    }
    outcome(
        worst < 1e-6,
        format!("{recovered} symbols recovered, max abs error {worst:.3e} (< 1e-6)"),
    )
}

/// Required block height taken straight from the allocation, and a
/// constructive check that the builders succeed exactly when it fits.
fn feasibility_table() -> Outcome {
    let mut mismatches = Vec::new();
    for m in 1..=8 {
        let alloc = allocate_streams(m);
        let required = PAIRS
            .iter()
            .map(|&(a, b)| alloc.streams(a, b).max(alloc.streams(b, a)))
            .max()
            .unwrap();
        for n in 1..=20 {
            let brute = n >= 2 * m && n - 2 * m >= required;
            let closed = if m % 2 == 0 {
                m <= 2 * n / 5
            } else {
                m <= (2 * n - 1) / 5
            };
            let predicate = gsa_feasible(m, n);
            let ch = sample_channel_set(m, n, TrialSeed::new(MASTER_SEED, (m * 100 + n) as u64))
                .expect("channel draw");
            let constructive =
                build_relay_combiner(&ch, &alloc).is_ok() && build_bc_precoder(&ch, &alloc).is_ok();
            if predicate != brute || predicate != closed || predicate != constructive {
                mismatches.push(format!(
                    "(M={m},N={n}) predicate={predicate} brute={brute} closed={closed} built={constructive}"
                ));
            }
        }
    }
    outcome(
        mismatches.is_empty(),
        if mismatches.is_empty() {
            "160 (M, N) cells agree across predicate, thresholds, brute force and construction"
                .to_string()
        } else {
            mismatches.join("; ")
        },
    )
}

fn dof_slope() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (m, n) in [(2, 5), (2, 6), (3, 8), (4, 10)] {
        let start = Instant::now();
        let cfg = SweepConfig {
            m,
            n,
            snr_grid_db: (40..=50).map(f64::from).collect(),
            trials: 500,
            master_seed: 42,
            execution: Execution::Parallel(0),
        };
        let sweep = monte_carlo_sweep(&cfg).expect("sweep");
        let dof = estimate_dof(&sweep, (40.0, 50.0)).expect("window has points");
        let secs = start.elapsed().as_secs_f64();
        let target = 4.0 * m as f64;
        let pass = (dof - target).abs() <= 0.1 * target && secs < 60.0;
        ok &= pass;
        parts.push(format!("({m},{n}) {dof:.3} vs {target} in {secs:.1} s"));
    }
    outcome(
        ok,
        format!("{} (within 10%, < 60 s each)", parts.join(", ")),
    )
}

fn dof_bound() -> Outcome {
    let mut ok = dof_upper_bound(2, 5) == 8;
    for m in 1..=8 {
        for n in 2 * m..=20 {
            ok &= dof_upper_bound(m, n) == 4 * m;
        }
    }
    outcome(
        ok,
        "dof_upper_bound(2,5) = 8 and = 4M whenever N >= 2M on the 8x20 grid",
    )
}

fn sweep_config(threads: &str) -> RunConfig {
    RunConfig::try_parse_from([
        "gsa-relay",
        "--mode",
        "sweep",
        "--m-antennas",
        "2",
        "--n-antennas",
        "5",
        "--snr-start",
        "0",
        "--snr-stop",
        "50",
        "--snr-step",
        "5",
        "--trials",
        "200",
        "--seed",
        "7",
        "--threads",
        threads,
    ])
    .expect("valid arguments")
}

fn determinism() -> Outcome {
    let a = run_sweep(&sweep_config("0")).expect("sweep");
    let b = run_sweep(&sweep_config("0")).expect("sweep");
    let serial = run_sweep(&sweep_config("1")).expect("sweep");
    let four = run_sweep(&sweep_config("4")).expect("sweep");

    // Byte-level comparison through the binary and files.
    let dir = tempfile::tempdir().expect("temp dir");
    let mut files = Vec::new();
    for (tag, threads) in [("p", "0"), ("s", "1")] {
        let path = dir.path().join(format!("{tag}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_gsa-relay"))
            .args([
                "--mode",
                "sweep",
                "--m-antennas",
                "2",
                "--n-antennas",
                "5",
                "--snr-step",
                "5",
                "--trials",
                "200",
                "--seed",
                "7",
                "--threads",
                threads,
                "--output",
            ])
            .arg(&path)
            .status()
            .expect("run binary");
        assert!(status.success());
        files.push(std::fs::read(&path).expect("read csv"));
    }
    let ok = a == b && a == serial && a == four && files[0] == files[1] && files[0] == a.as_bytes();
    outcome(
        ok,
        "repeat, serial, 4-thread and default-pool sweeps are byte-identical",
    )
}

fn infeasible_inputs() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for (m, n) in [(3, 7), (2, 4), (4, 9)] {
        let ch = sample_channel_set(m, n, TrialSeed::new(1, 0)).expect("channel draw");
        let alloc = allocate_streams(m);
        let combiner = build_relay_combiner(&ch, &alloc);
        let bc = build_bc_precoder(&ch, &alloc);
        let scheme = GsaScheme::build(&ch);
        let builder_fails = matches!(combiner, Err(Error::InsufficientNullSpace { .. }))
            && matches!(bc, Err(Error::InsufficientNullSpace { .. }))
            && scheme == Err(Error::Infeasible { m, n });
        let mut codes = Vec::new();
        for mode in ["verify", "sweep"] {
            let status = Command::new(env!("CARGO_BIN_EXE_gsa-relay"))
                .args([
                    "--mode",
                    mode,
                    "--m-antennas",
                    &m.to_string(),
                    "--n-antennas",
                    &n.to_string(),
                    "--trials",
                    "5",
                ])
                .output()
                .expect("run binary")
                .status;
            codes.push(status.code());
        }
        let cli_ok = codes.iter().all(|&c| c == Some(2));
        ok &= builder_fails && cli_ok;
        notes.push(format!("({m},{n}) builder={builder_fails} exit={codes:?}"));
    }
    outcome(ok, notes.join(", "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 alignment exactness", alignment_exactness),
        ("2 exclusion identities", exclusion_identities),
        ("3 zero-noise end-to-end DoF", zero_noise_recovery),
        ("4 feasibility table", feasibility_table),
        ("5 DoF slope", dof_slope),
        ("6 DoF upper bound", dof_bound),
        ("7 determinism", determinism),
        ("8 infeasible inputs", infeasible_inputs),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let o = check();
        println!(
            "[{}] criterion {name}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.passed {
            failed += 1;
        }
    }
    if failed == 0 {
        println!("acceptance: all {} criteria passed", criteria.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
