use std::fs;
use std::process::Command;

fn hetsched() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hetsched"))
}

#[test]
fn run_writes_csvs_and_prints_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "horizon = 5000\n[traffic]\nmtc_period_s = 1.0\n").unwrap();
    let out = dir.path().join("out");
    let res = hetsched()
        .args(["--config", cfg.to_str().unwrap(), "--seeds", "2", "--scheduler", "rr", "--horizon", "400", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let stdout = String::from_utf8(res.stdout).unwrap();
    assert!(stdout.starts_with("scheduler,class,mean_delay_ms,ci95_low,ci95_high,n_seeds\n"));
    let conv = fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert_eq!(conv.lines().count(), 1 + 2 * 400);
    assert!(out.join("delays.csv").exists() && out.join("summary.csv").exists());
}

#[test]
fn out_of_range_config_fails_with_field_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[learning]\nalpha = 1.5\n").unwrap();
    let res = hetsched().args(["--config", cfg.to_str().unwrap()]).output().unwrap();
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("learning.alpha"));
}

#[test]
fn unwritable_output_fails() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("f");
    fs::write(&blocker, "").unwrap();
    let res = hetsched()
        .args(["--scheduler", "rr", "--horizon", "20", "--out"])
        .arg(blocker.join("x"))
        .output()
        .unwrap();
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).starts_with("error:"));
}

#[test]
fn print_config_roundtrips() {
    let res = hetsched().args(["--print-config", "--horizon", "77"]).output().unwrap();
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    let cfg = hetsched::parse_config(&text).unwrap();
    assert_eq!(cfg.horizon, 77);
}

#[test]
fn unknown_scheduler_rejected() {
    let res = hetsched().args(["--scheduler", "fifo"]).output().unwrap();
    assert!(!res.status.success());
}
