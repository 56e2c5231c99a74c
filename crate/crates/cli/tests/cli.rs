use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn limset(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_limset")).args(args).current_dir(dir).output().unwrap()
}

fn with_config(text: &str, command: &str, extra: &[&str]) -> (tempfile::TempDir, Output) {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("exp.toml"), text).unwrap();
    let mut args = vec![command, "--config", "exp.toml", "--out", "run"];
    args.extend_from_slice(extra);
    let out = limset(&args, dir.path());
    (dir, out)
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join("run").join(name)).unwrap()
}

#[test]
fn corpus_list_prints_every_system() {
    let dir = tempfile::tempdir().unwrap();
    let out = limset(&["corpus-list"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for name in limset::systems::CORPUS_NAMES {
        assert!(text.contains(&format!("[{name}]")), "{name}");
    }
    assert!(text.contains("expected_limit"));
}

#[test]
fn quasipotential_run_writes_value_and_path() {
    let cfg = "system = \"prnot\"\n[quasipotential]\nx = [0.0, 0.0]\ny = [1.0, 0.0]\n";
    let (dir, out) = with_config(cfg, "quasipotential", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path(), "quasipotential.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("value,T_used,iters,converged"));
    let value: f64 = lines.next().unwrap().split(',').next().unwrap().parse().unwrap();
    assert!((value - 5.0 / 6.0).abs() < 0.1 * 5.0 / 6.0, "{value}");
    assert_eq!(read(dir.path(), "path.csv").lines().count(), 1 + 201);
    assert!(read(dir.path(), "report.txt").contains("converged"));
}

#[test]
fn simulate_is_reproducible_and_reconstructible() {
    let cfg = "system = \"prnot\"\nmaster_seed = 5\n[simulate]\nepsilon = 0.5\nn_steps = 200000\n";
    let (dir, out) = with_config(cfg, "simulate", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let hist = read(dir.path(), "histogram.csv");
    assert_eq!(hist.lines().count(), 1 + 80 * 80);
    assert_eq!(read(dir.path(), "trajectory.csv").lines().count(), 1 + 10_001);
    assert!(read(dir.path(), "report.txt").contains("tv_distance"));

    let again = limset(&["simulate", "--config", "exp.toml", "--out", "run"], dir.path());
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(read(dir.path(), "histogram.csv"), hist);

    fs::copy(dir.path().join("run/config.resolved.toml"), dir.path().join("resolved.toml")).unwrap();
    let replay = limset(&["simulate", "--config", "resolved.toml", "--out", "replay"], dir.path());
    assert_eq!(replay.status.code(), Some(0));
    assert_eq!(fs::read_to_string(dir.path().join("replay/histogram.csv")).unwrap(), hist);

    let other = limset(&["simulate", "--config", "exp.toml", "--out", "other", "--seed", "6"], dir.path());
    assert_eq!(other.status.code(), Some(0));
    assert_ne!(fs::read_to_string(dir.path().join("other/histogram.csv")).unwrap(), hist);
    assert!(fs::read_to_string(dir.path().join("other/config.resolved.toml")).unwrap().contains("master_seed = 6"));
}

#[test]
fn scan_writes_five_rows_and_a_summary() {
    let cfg = "system = \"closed_orbit_v1\"\n[scan]\nepsilons = [0.3, 0.25, 0.2, 0.175, 0.15]\nn_steps = 200000\n\
               region = { kind = \"annulus\", center = [0.0, 0.0], r_in = 1.7, r_out = 2.3 }\n";
    let (dir, out) = with_config(cfg, "scan", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path(), "decay.csv");
    assert_eq!(csv.lines().count(), 1 + 5 + 1);
    assert!(csv.starts_with("epsilon,mass,log_mass\n"));
}

#[test]
fn classify_reproduces_catalog_labels() {
    let (dir, out) = with_config("system = \"closed_orbit_v1\"\n", "classify", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path(), "classification.csv");
    assert!(csv.contains("disk,repeller,repeller"), "{csv}");
    assert!(csv.contains("circle_r2,attractor,attractor"), "{csv}");
}

#[test]
fn validate_passes_with_exit_zero() {
    let cfg = "system = \"closed_orbit_v1\"\n[validate]\nchecks = [\"classify\", \"probe\"]\n";
    let (dir, out) = with_config(cfg, "validate", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(read(dir.path(), "validation.csv").lines().skip(1).all(|l| l.ends_with(",PASS")));
}

#[test]
fn validate_failure_exits_two_and_still_reports() {
    let cfg = "system = \"prnot\"\n[validate]\nchecks = [\"quasipotential\"]\n";
    let (dir, out) = with_config(cfg, "validate", &[]);
    assert_eq!(out.status.code(), Some(2));
    let csv = read(dir.path(), "validation.csv");
    assert!(csv.lines().any(|l| l.starts_with("quasipotential,\"V(O,(1,0))\"") && l.ends_with(",PASS")), "{csv}");
    assert!(csv.lines().any(|l| l.ends_with(",FAIL")), "{csv}");
    assert!(read(dir.path(), "report.txt").contains("overall: FAIL"));
}

#[test]
fn bad_config_exits_one_with_line_and_no_output() {
    let (dir, out) = with_config("system = \"prnot\"\n[simulate]\nepsilon = 0.5\nstep_size = 0.1\n", "simulate", &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("exp.toml:line 4"), "{err}");
    assert!(!dir.path().join("run").exists());

    let (dir, out) = with_config("system = \"prnot\"\n[simulate]\nepsilon = 0.5\nx0 = [9.0, 9.0]\n", "simulate", &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("line 4"));
    assert!(!dir.path().join("run").exists());
}

#[test]
fn operational_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(limset(&["simulate"], dir.path()).status.code(), Some(1));
    assert_eq!(limset(&["simulate", "--config", "missing.toml"], dir.path()).status.code(), Some(1));
    assert_eq!(limset(&["frobnicate"], dir.path()).status.code(), Some(1));
    let out = Command::new(env!("CARGO_BIN_EXE_limset"))
        .arg("corpus-list")
        .env("LIMSET_WORKERS", "zero")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn worker_count_does_not_change_results() {
    let cfg = "system = \"twoco\"\n[simulate]\nepsilon = 0.3\nn_steps = 100000\nreplicas = 4\ntrajectory_steps = 0\n";
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("exp.toml"), cfg).unwrap();
    for (workers, out) in [("1", "one"), ("3", "three")] {
        let o = Command::new(env!("CARGO_BIN_EXE_limset"))
            .args(["simulate", "--config", "exp.toml", "--out", out])
            .env("LIMSET_WORKERS", workers)
            .current_dir(dir.path())
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = fs::read_to_string(dir.path().join("one/histogram.csv")).unwrap();
    let b = fs::read_to_string(dir.path().join("three/histogram.csv")).unwrap();
    assert_eq!(a, b);
    assert!(!dir.path().join("one/trajectory.csv").exists());
}
