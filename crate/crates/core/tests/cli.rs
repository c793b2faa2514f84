use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ncspred_core::cclsynth::CclStatus;
use ncspred_core::demo;
use ncspred_core::files::GainFile;
use ncspred_core::sim::{matrix_power_oracle, read_trace_csv, SimTrace};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ncspred"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn ncspred")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_trace(path: &Path) -> SimTrace {
    read_trace_csv(std::io::BufReader::new(fs::File::open(path).unwrap())).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn discretize_prints_models_and_eigenvalues() {
    let o = run(&["discretize", p(&fixture("dc_motor.json")), "--h", "0.1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.matches("eig(F)").count(), 3);
    assert!(text.contains("0.670274") && text.contains("0.164836"), "{text}");
    assert!(text.contains("0.5137") && text.contains("0.1354"));
}

#[test]
fn discretize_zero_dynamics_gives_identity() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("zero.json");
    fs::write(
        &model,
        r#"{"sample_period": 0.5, "n_drop": 1, "continuous_modes": [{"a": [[0.0]], "b": [[2.0]]}]}"#,
    )
    .unwrap();
    let out = dir.path().join("d.json");
    let o = run(&["discretize", p(&model), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let mode = &json["discrete_modes"][0];
    assert_eq!(mode["f"][0][0].as_f64(), Some(1.0));
    assert!((mode["g"][0][0].as_f64().unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn malformed_model_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("bad.json");
    fs::write(
        &model,
        r#"{"sample_period": 0.1, "n_drop": 3, "continuous_modes": [{"a": [[1.0, 2.0]], "b": [[1.0]]}]}"#,
    )
    .unwrap();
    let o = run(&["discretize", p(&model)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("continuous_modes"), "{}", stderr(&o));

    let o = run(&["discretize", p(&dir.path().join("missing.json"))]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(run(&["discretize"]).status.code(), Some(2));
}

#[test]
fn synthesize_then_verify_both_periods() {
    let dir = tempfile::tempdir().unwrap();
    for h in ["0.1", "0.2"] {
        let out = dir.path().join(format!("gains_{h}.json"));
        let o = run(&["synthesize", p(&fixture("dc_motor.json")), "--h", h, "--out", p(&out)]);
        assert_eq!(o.status.code(), Some(0), "h={h}: {}{}", stdout(&o), stderr(&o));
        assert!(stdout(&o).contains("Stabilized"));
        let file = GainFile::from_json(&fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(file.gains.len(), 3);
        for k in &file.gains {
            assert_eq!((k.len(), k[0].len()), (1, 2));
        }
        let o = run(&["verify", p(&fixture("dc_motor.json")), p(&out), "--h", h]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
        assert!(stdout(&o).contains("common P found: true"));
    }
}

#[test]
fn unstabilizable_model_fails_initialization() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.json");
    let o = run(&["synthesize", p(&fixture("unstabilizable_scalar.json")), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(4), "{}", stdout(&o));
    assert!(stdout(&o).contains("InitializationFailed"));
    let file = GainFile::from_json(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(file.status, Some(CclStatus::InitializationFailed));
}

#[test]
fn verify_published_gains() {
    for (h, gains) in [("0.1", "published_gains_h01.json"), ("0.2", "published_gains_h02.json")] {
        let o = run(&["verify", p(&fixture("dc_motor.json")), p(&fixture(gains)), "--h", h]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
        let text = stdout(&o);
        assert_eq!(text.matches("Schur stable true").count(), 9);
        assert!(text.contains("worst_margin"));
    }
}

#[test]
fn verify_zero_gains_reports() {
    let o = run(&["verify", p(&fixture("dc_motor.json")), p(&fixture("zero_gains.json"))]);
    let code = o.status.code().unwrap();
    assert!(code == 0 || code == 5, "{code}");
    let text = stdout(&o);
    assert_eq!(text.matches("Schur stable").count(), 9);
    assert!(text.contains("common P found:"));
}

fn simulate(dir: &Path, name: &str, extra: &[&str]) -> (Output, PathBuf) {
    let out = dir.join(name);
    let model = fixture("dc_motor.json");
    let gains = fixture("published_gains_h01.json");
    let o = bin()
        .args(["simulate", p(&model), p(&gains), "--out", p(&out)])
        .args(extra)
        .output()
        .unwrap();
    (o, out)
}

#[test]
fn simulate_seed_42_settles_at_frozen_step() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = simulate(dir.path(), "t.csv", &["--seed", "42", "--steps", "200", "--x0=-3,2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("settled_at: 8"), "{}", stdout(&o));
    let trace = read_trace(&out);
    assert_eq!(trace.records.len(), 200);
    assert_eq!(trace.summary.settled_at, Some(8));
    assert_eq!(trace.summary.effective_steps, 109);

    let (_, again) = simulate(dir.path(), "t2.csv", &["--seed", "42", "--steps", "200", "--x0=-3,2"]);
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn lossless_fixed_mode_matches_matrix_powers() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = simulate(
        dir.path(),
        "t.csv",
        &["--p-loss", "0", "--switch", "fixed", "--mode", "2", "--steps", "40", "--x0=-3,2"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let trace = read_trace(&out);
    let plant = demo::plant(0.1).unwrap();
    let gains = demo::published_gains(0.1).unwrap();
    let oracle = matrix_power_oracle(&plant, &gains, 2, &[-3.0, 2.0], 40).unwrap();
    for (r, x) in trace.records.iter().zip(&oracle) {
        assert_eq!(r.mode, 2);
        for (a, b) in r.x.iter().zip(x) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "step {}: {a} vs {b}", r.step);
        }
    }
}

#[test]
fn zero_initial_state_stays_zero() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = simulate(dir.path(), "t.csv", &["--x0", "0,0", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let trace = read_trace(&out);
    assert!(trace.records.iter().all(|r| r.x.iter().all(|&v| v == 0.0)));
}

#[test]
fn unbounded_drops_raise_model_violation() {
    let dir = tempfile::tempdir().unwrap();
    let (o, _) = simulate(
        dir.path(),
        "t.csv",
        &["--p-loss", "0.9", "--no-enforce-bound", "--seed", "42", "--x0=-3,2"],
    );
    assert_eq!(o.status.code(), Some(6), "{}", stderr(&o));
    assert!(stderr(&o).contains("n_drop"));
}

#[test]
fn plot_is_structural_and_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let (_, trace) = simulate(dir.path(), "t.csv", &["--seed", "42", "--x0=-3,2"]);
    let a = dir.path().join("a.svg");
    let b = dir.path().join("b.svg");
    for out in [&a, &b] {
        let o = run(&["plot", p(&trace), "--out", p(out)]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let svg = fs::read_to_string(&a).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let o = run(&["plot", p(&trace), "--out", p(&a), "--columns", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_to_string(&a).unwrap().matches("<polyline").count(), 1);
}

#[test]
fn plot_rejects_empty_and_malformed_traces() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "step,time,mode,s1_ok,s2_ok,effective,buffer_age,u,x1,x2\n").unwrap();
    let o = run(&["plot", p(&empty), "--out", p(&dir.path().join("e.svg"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!stderr(&o).is_empty());

    let junk = dir.path().join("junk.csv");
    fs::write(&junk, "not,a\ntrace\n").unwrap();
    let o = run(&["plot", p(&junk), "--out", p(&dir.path().join("j.svg"))]);
    assert_eq!(o.status.code(), Some(2));
}

fn demo_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn demo_is_reproducible() {
    let root = tempfile::tempdir().unwrap();
    let a = root.path().join("a");
    let b = root.path().join("b");
    for dir in [&a, &b] {
        let o = run(&["demo", "--h", "0.1", "--out-dir", p(dir)]);
        assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    }
    let fa = demo_files(&a);
    let names: Vec<&str> = fa.iter().map(|(n, _)| n.as_str()).collect();
    for expected in [
        "discretization.txt",
        "gains.json",
        "model.json",
        "synthesis.txt",
        "trace.csv",
        "trace.svg",
        "verification.txt",
    ] {
        assert!(names.contains(&expected), "{names:?}");
    }
    assert_eq!(fa, demo_files(&b));
}

#[test]
fn demo_at_second_sample_period() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["demo", "--h", "0.2", "--out-dir", p(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(!stdout(&o).contains("[FAIL]"));
}

#[test]
fn written_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.json");
    let o = run(&["discretize", p(&fixture("dc_motor.json")), "--out", p(&model)]);
    assert_eq!(o.status.code(), Some(0));
    let gains = dir.path().join("g.json");
    let o = run(&["synthesize", p(&model), "--out", p(&gains)]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let o = run(&["verify", p(&model), p(&gains)]);
    assert_eq!(o.status.code(), Some(0));
}
