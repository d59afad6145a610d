use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mite(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mite")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read(p: &Path) -> String {
    fs::read_to_string(p).unwrap()
}

#[test]
fn run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    let o = mite(&["run", "--trajectories", "20", "--seed", "4", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let traj = read(&out.join("trajectories.csv"));
    assert!(traj.starts_with("traj_id,step,fidelity,z\n"));
    assert!(!traj.contains('\r'));
    assert_eq!(traj.lines().count(), 1 + 20 * 201);
    let summary = read(&out.join("summary.csv"));
    assert!(summary.starts_with("step,mean_fidelity,log_infidelity\n"));
    let last: Vec<&str> = summary.lines().last().unwrap().split(',').collect();
    assert_eq!(last[0], "200");
    assert!(last[1].parse::<f64>().unwrap() >= 0.99);
    let run: serde_json::Value = serde_json::from_str(&read(&out.join("run.json"))).unwrap();
    let angles: Vec<f64> =
        run["results"]["corrections"].as_array().unwrap().iter().map(|c| c["angle"].as_f64().unwrap()).collect();
    assert!((angles[0] + 0.2213).abs() < 1e-4 && (angles[1] - 0.1531).abs() < 1e-4);
    assert!(run["results"]["fit"]["r2"].as_f64().unwrap() >= 0.98);
    assert_eq!(run["steps"], 200);
}

#[test]
fn identical_seeds_give_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = mite(&["run", "--model", "search", "--dim", "8", "--epsilon", "0.1", "--trajectories", "30", "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
    }
    for f in ["trajectories.csv", "summary.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
}

#[test]
fn run_json_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let o = mite(&["run", "--model", "tfim", "-L", "2", "--epsilon", "0.05", "--steps", "60", "--trajectories", "10", "--seed", "3", "--out", first.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let second = dir.path().join("second");
    let cfg = first.join("run.json");
    let o = mite(&["run", "--config", cfg.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["trajectories.csv", "summary.csv"] {
        assert_eq!(fs::read(first.join(f)).unwrap(), fs::read(second.join(f)).unwrap());
    }
    let traj = read(&second.join("trajectories.csv"));
    assert!(traj.starts_with("traj_id,step,fidelity,energy\n"));
}

#[test]
fn uncorrected_runs_split_between_poles() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("off");
    let o = mite(&["run", "--correction", "off", "--steps", "500", "--trajectories", "60", "--seed", "8", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let traj = read(&out.join("trajectories.csv"));
    let finals: Vec<f64> = traj
        .lines()
        .skip(1)
        .filter(|l| l.split(',').nth(1) == Some("500"))
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    assert_eq!(finals.len(), 60);
    assert!(finals.iter().all(|z: &f64| z.abs() >= 0.99));
    assert!(finals.iter().any(|z| *z > 0.0) && finals.iter().any(|z| *z < 0.0));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let out = out.to_str().unwrap();
    assert_eq!(code(&mite(&["run", "--epsilon", "0.9", "--out", out])), 2);
    assert_eq!(code(&mite(&["run", "--model", "search", "--dim", "12", "--out", out])), 2);
    assert_eq!(code(&mite(&["run", "--trajectories", "0", "--out", out])), 2);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"epsilon": 0.1, "colour": "red"}"#).unwrap();
    let o = mite(&["run", "--config", bad.to_str().unwrap(), "--out", out]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&mite(&["run", "--config", missing.to_str().unwrap()])), 2);
}

#[test]
fn degenerate_model_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let o = mite(&["run", "--model", "tfim", "--lambda", "0", "--epsilon", "0.05", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn verify_passes_and_detects_corruption() {
    let o = mite(&["verify"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{text}");
    assert!(!text.contains("FAIL"));
    assert_eq!(text.lines().count(), 8);
    let again = mite(&["verify"]);
    assert_eq!(o.stdout, again.stdout);

    let bad = mite(&["verify", "--corrupt-kraus"]);
    assert_eq!(code(&bad), 1);
    let text = String::from_utf8_lossy(&bad.stdout);
    let line = text.lines().find(|l| l.starts_with("kraus completeness")).unwrap();
    assert!(line.contains("FAIL"));
}

#[test]
fn sweep_writes_rows_and_fits() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let o = mite(&[
        "sweep", "--variable", "epsilon", "--values", "0.04,0.08,0.16", "--model", "search", "--dim", "16",
        "--trajectories", "40", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(&out.join("sweep.csv"));
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "value,epsilon,dim,theta0,theta1,mean_t90,censored,trajectories,max_steps,max_residual,flagged"
    );
    assert_eq!(lines.count(), 3);
    let json: serde_json::Value = serde_json::from_str(&read(&out.join("sweep.json"))).unwrap();
    assert!(json["results"]["t90_vs_epsilon"]["slope"].as_f64().unwrap() < 0.0);
    assert_eq!(json["results"]["angle_vs_epsilon"].as_array().unwrap().len(), 2);
}

#[test]
fn sweep_flags_censored_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c");
    let o = mite(&[
        "sweep", "--values", "0.02,0.04", "--model", "search", "--dim", "16", "--steps", "5", "--trajectories", "10",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let csv = read(&out.join("sweep.csv"));
    for row in csv.lines().skip(1) {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells[6], "10");
        assert_eq!(cells[10], "1");
    }
}

#[test]
fn sweep_rejects_unordered_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("u");
    let o = mite(&["sweep", "--values", "0.08,0.04", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}
