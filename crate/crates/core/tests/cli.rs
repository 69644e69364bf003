use std::process::{Command, Output};

fn gsa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gsa-relay"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn feasibility_mode() {
    let o = gsa(&[
        "--mode",
        "feasibility",
        "--m-antennas",
        "2",
        "--n-antennas",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("GSA: feasible; DoF bound 8; d_ij = 1 each"));

    let o = gsa(&[
        "--mode",
        "feasibility",
        "--m-antennas",
        "3",
        "--n-antennas",
        "7",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("GSA: infeasible (need N ≥ 8 for M = 3)"));
}

#[test]
fn verify_mode_exit_codes() {
    let o = gsa(&[
        "--mode",
        "verify",
        "--m-antennas",
        "2",
        "--n-antennas",
        "5",
        "--trials",
        "100",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS"));

    let o = gsa(&[
        "--mode",
        "verify",
        "--m-antennas",
        "4",
        "--n-antennas",
        "10",
        "--trials",
        "50",
    ]);
    assert_eq!(o.status.code(), Some(0));

    let o = gsa(&["--mode", "verify", "--m-antennas", "3", "--n-antennas", "7"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("infeasible"));
}

#[test]
fn bad_arguments_exit_2() {
    assert_eq!(gsa(&["--mode", "sweep"]).status.code(), Some(2));
    assert_eq!(
        gsa(&[
            "--mode",
            "sweep",
            "--m-antennas",
            "2",
            "--n-antennas",
            "5",
            "--snr-start",
            "10",
            "--snr-stop",
            "0"
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let o = gsa(&[
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
        "500",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "snr_db,mean_sum_rate_bits,std_err,trials");
    let rows: Vec<&str> = lines
        .iter()
        .copied()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .collect();
    assert_eq!(rows.len(), 11);
    for row in &rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 4);
        assert_eq!(fields[3], "500");
    }
    let comment = lines.last().unwrap();
    let dof: f64 = comment
        .strip_prefix("# dof_estimate=")
        .and_then(|rest| rest.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    assert!((dof - 8.0).abs() <= 0.8, "{comment}");
    assert!(comment.ends_with("window=41-50dB"));
}

#[test]
fn sweep_m2_n6_slope() {
    let o = gsa(&[
        "--mode",
        "sweep",
        "--m-antennas",
        "2",
        "--n-antennas",
        "6",
        "--snr-start",
        "0",
        "--snr-stop",
        "50",
        "--snr-step",
        "5",
        "--trials",
        "500",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let comment = out.lines().last().unwrap();
    let dof: f64 = comment["# dof_estimate=".len()..]
        .split(' ')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((dof - 8.0).abs() <= 0.8, "{comment}");
}

#[test]
fn unwritable_output_exits_1() {
    let o = gsa(&[
        "--mode",
        "sweep",
        "--m-antennas",
        "2",
        "--n-antennas",
        "5",
        "--trials",
        "2",
        "--output",
        "/nonexistent-dir/out.csv",
    ]);
    assert_eq!(o.status.code(), Some(1));
}
