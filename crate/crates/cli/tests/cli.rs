//! End-to-end tests of the binary: exit codes, artifact layout, environment
//! override, determinism, and the report's gap handling.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shocklab"))
}

fn run(args: &[&str], outdir: Option<&Path>) -> Output {
    let mut cmd = bin();
    cmd.args(args);
    match outdir {
        Some(dir) => cmd.env("SHOCKLAB_OUTPUT", dir),
        None => cmd.env_remove("SHOCKLAB_OUTPUT"),
    };
    cmd.output().expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("run.cfg");
    std::fs::write(&path, body).unwrap();
    path
}

const SMALL_RUN: &str = r#"
seed = 1

[shock]
eps = 0.1

[numerics]
L = 400.0
N = 257

[time]
T = 1.0
"#;

#[test]
fn endstates_example_prints_and_succeeds() {
    let output = run(
        &["endstates", "--v-minus", "1", "--u-minus", "0", "--eps", "0.1", "--family", "2"],
        None,
    );
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("sigma"), "{text}");
    assert!(text.contains("rh_residual"), "{text}");
    assert!(text.contains("v_plus"), "{text}");
}

#[test]
fn unknown_subcommand_prints_usage_and_exits_one() {
    let output = run(&["definitely-not-a-subcommand"], None);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr(&output).contains("Usage"), "{}", stderr(&output));
}

#[test]
fn config_violation_exits_one_with_error_record() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(&["contract", "--shock-eps", "2"], Some(dir.path()));
    assert_eq!(output.status.code(), Some(1), "{}", stderr(&output));
    assert!(
        stderr(&output).contains("amplitude exceeds p(v_minus)"),
        "{}",
        stderr(&output)
    );
    let record = std::fs::read_to_string(dir.path().join("error_record.csv")).unwrap();
    assert!(record.starts_with("exit_code,kind,message\n"), "{record}");
    assert!(record.contains("1,config"), "{record}");
}

#[test]
fn numerical_failure_exits_two_with_error_record() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        &format!(
            "{SMALL_RUN}\n[[perturbation]]\nfield = \"v\"\nshape = \"gaussian\"\ncenter = 0.0\nwidth = 5.0\namplitude = -1.5\n"
        ),
    );
    let output = run(&["contract", "--config", config.to_str().unwrap()], Some(dir.path()));
    assert_eq!(output.status.code(), Some(2), "{}", stderr(&output));
    let record = std::fs::read_to_string(dir.path().join("error_record.csv")).unwrap();
    assert!(record.contains("2,vacuum-proximity"), "{record}");
}

#[test]
fn zero_perturbation_contract_passes_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL_RUN);
    let output = run(&["contract", "--config", config.to_str().unwrap()], Some(dir.path()));
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    assert!(stdout(&output).contains("verdict: PASS"), "{}", stdout(&output));
    for artifact in [
        "profile.csv",
        "trace.csv",
        "shift_plot.csv",
        "reports.csv",
        "ledger.csv",
        "ledger_sensitivity.csv",
    ] {
        assert!(dir.path().join(artifact).exists(), "missing {artifact}");
    }
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with(
        "t,X,Xdot,wre,Gv_accum,D_accum,identity_residual,f_bound,Y,Jbad,Jpara,Jgood\n"
    ));
}

#[test]
fn identical_config_and_seed_reproduce_identical_bytes() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let config_a = write_config(dir_a.path(), SMALL_RUN);
    let output_a =
        run(&["contract", "--config", config_a.to_str().unwrap()], Some(dir_a.path()));
    let output_b =
        run(&["contract", "--config", config_a.to_str().unwrap()], Some(dir_b.path()));
    assert_eq!(output_a.status.code(), Some(0), "{}", stderr(&output_a));
    assert_eq!(output_b.status.code(), Some(0), "{}", stderr(&output_b));
    for artifact in ["trace.csv", "reports.csv", "ledger.csv", "profile.csv"] {
        let a = std::fs::read(dir_a.path().join(artifact)).unwrap();
        let b = std::fs::read(dir_b.path().join(artifact)).unwrap();
        assert_eq!(a, b, "{artifact} differs between identical runs");
    }
}

#[test]
fn env_var_overrides_output_directory_flag() {
    let flag_dir = tempfile::tempdir().unwrap();
    let env_dir = tempfile::tempdir().unwrap();
    let output = run(
        &[
            "profile",
            "--shock-eps",
            "0.1",
            "--numerics-l",
            "400",
            "--numerics-n",
            "257",
            "--output-directory",
            flag_dir.path().to_str().unwrap(),
        ],
        Some(env_dir.path()),
    );
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    assert!(env_dir.path().join("profile.csv").exists());
    assert!(!flag_dir.path().join("profile.csv").exists());
}

#[test]
fn report_on_empty_directory_lists_gaps_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(&["report"], Some(dir.path()));
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    let summary = std::fs::read_to_string(dir.path().join("summary.md")).unwrap();
    assert!(summary.contains("## Gaps"), "{summary}");
    assert!(summary.contains("trace.csv"), "{summary}");
}

#[test]
fn report_after_contract_includes_monotonicity_line() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL_RUN);
    let contract =
        run(&["contract", "--config", config.to_str().unwrap()], Some(dir.path()));
    assert_eq!(contract.status.code(), Some(0), "{}", stderr(&contract));
    let output = run(&["report"], Some(dir.path()));
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    let summary = std::fs::read_to_string(dir.path().join("summary.md")).unwrap();
    assert!(summary.contains("wre monotone: PASS"), "{summary}");
    assert!(summary.contains("sigma*t reference"), "{summary}");
    assert!(summary.contains("| locE |"), "{summary}");
}

#[test]
fn ledger_reads_stored_reports_and_rewrites_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL_RUN);
    let contract =
        run(&["contract", "--config", config.to_str().unwrap()], Some(dir.path()));
    assert_eq!(contract.status.code(), Some(0), "{}", stderr(&contract));
    std::fs::remove_file(dir.path().join("ledger.csv")).unwrap();
    let output = run(&["ledger", "--config", config.to_str().unwrap()], Some(dir.path()));
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    assert!(dir.path().join("ledger.csv").exists());
    let ledger = std::fs::read_to_string(dir.path().join("ledger.csv")).unwrap();
    assert!(ledger.starts_with("inequality-id,empirical-ratio,n-samples\n"), "{ledger}");
}

#[test]
fn ledger_without_reports_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(&["ledger"], Some(dir.path()));
    assert_eq!(output.status.code(), Some(2), "{}", stderr(&output));
    assert!(dir.path().join("error_record.csv").exists());
}

#[test]
fn simulate_writes_snapshots_and_monitor() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL_RUN);
    let output = run(&["simulate", "--config", config.to_str().unwrap()], Some(dir.path()));
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    assert!(dir.path().join("snapshots.csv").exists());
    assert!(dir.path().join("monitor.csv").exists());
    let snapshots = std::fs::read_to_string(dir.path().join("snapshots.csv")).unwrap();
    assert!(snapshots.starts_with("t,xi,v,h,u\n"), "{snapshots}");
}

#[test]
fn poincare_writes_argmax_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(
        &["poincare", "--delta", "0.05", "--c1", "4", "--samples", "60", "--seed", "1"],
        Some(dir.path()),
    );
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    assert!(stdout(&output).contains("nonpositive: yes"), "{}", stdout(&output));
    assert!(dir.path().join("poincare_argmax.csv").exists());
    let summary = std::fs::read_to_string(dir.path().join("poincare_summary.csv")).unwrap();
    assert!(summary.starts_with("delta,c1,n_samples,seed,max_r\n"), "{summary}");
}
