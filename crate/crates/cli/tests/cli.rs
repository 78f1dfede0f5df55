use std::fs;
use std::process::{Command, Output};

fn roml(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roml"))
        .args(args)
        .env_remove("ROML_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn tau_of_two_is_two_and_a_half() {
    let o = roml(&["tau", "--T", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let row = out.lines().nth(1).unwrap();
    assert_eq!(row.split(',').nth(1), Some("2.5"));
}

#[test]
fn separation_prints_one_row_per_instance() {
    let o = roml(&["separation", "--T", "16", "--seeds", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "seed,T,k,regret,switches,violation_max,stop_time");
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[1], "0,16,2,8.5,,,");
    assert!(lines[2].starts_with("0,16,2,"));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(roml(&["delayed", "--seeds", "2"]).status.code(), Some(2));
    assert_eq!(roml(&["delayed", "--T", "64", "--bogus"]).status.code(), Some(2));
    assert_eq!(roml(&["switching", "--T", "64", "--generator", "nope"]).status.code(), Some(2));
    assert_eq!(roml(&["switching", "--T", "64", "--algo", "erm"]).status.code(), Some(2));
    assert_eq!(roml(&["delayed", "--T", "8", "--d", "8"]).status.code(), Some(2));
    assert_eq!(roml(&["constrained", "--T", "64", "--B", "128"]).status.code(), Some(2));
    assert_eq!(roml(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn dumped_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let first = roml(&[
        "delayed", "--T", "256,512", "--d", "4", "--seeds", "3,5,8", "--gap", "0.2", "--jobs", "2",
        "--out", a.to_str().unwrap(), "--dump-config", cfg.to_str().unwrap(),
    ]);
    assert_eq!(first.status.code(), Some(0));
    let second = roml(&["delayed", "--config", cfg.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert_eq!(second.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
    let read = |p: &std::path::Path| fs::read(p).unwrap();
    assert_eq!(read(&a.join("results.csv")), read(&b.join("results.csv")));
    let traj = "gap_bandit_T512/trajectory_8.csv";
    assert_eq!(read(&a.join(traj)), read(&b.join(traj)));
    let text = fs::read_to_string(a.join(traj)).unwrap();
    assert!(text.starts_with("t,cum_regret\n1,"));
    assert_eq!(text.lines().count(), 513);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"T": 128, "k": 3, "seeds": [1, 2]}"#).unwrap();
    let o = roml(&["switching", "--config", cfg.to_str().unwrap(), "--k", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.split(',').nth(2) == Some("4")));
    assert!(rows[0].starts_with("1,128,") && rows[1].starts_with("2,128,"));
}

#[test]
fn output_directory_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_roml"))
        .args(["separation", "--T", "32", "--seeds", "2"])
        .env("ROML_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("results.csv").exists());
    let adv = fs::read_to_string(dir.path().join("results_birthday_adversarial.csv")).unwrap();
    assert_eq!(adv.lines().count(), 3);
    assert!(dir.path().join("iid_uniform_support_T32/trajectory_1.csv").exists());
}

#[test]
fn constrained_budget_flag_sets_rho() {
    let o = roml(&["constrained", "--T", "512", "--k", "3", "--m", "2", "--B", "256", "--seeds", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    for row in out.lines().skip(1) {
        assert_eq!(row.split(',').nth(5), Some("0"));
    }
}

#[test]
fn classify_and_bounds_run() {
    let o = roml(&["classify", "--T", "300", "--grid", "16", "--noise", "0.05"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 2);
    let o = roml(&["bounds", "--trials", "2000"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("T,s,delta,eps_hoeffding,eps_serfling,exceed_hoeffding,exceed_serfling\n"));
    assert_eq!(out.lines().count(), 3);
}
