use std::path::Path;
use std::process::{Command, Output};

const DESK: &str = r#"{"n": 200, "p": 40, "q": 40, "t": 30, "tail_window": 10}"#;

fn twostep(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twostep"))
        .args(args)
        .current_dir(dir)
        .env_remove("TWOSTEP_SEED")
        .output()
        .unwrap()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("defaults.json"), DESK).unwrap();
    dir
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

#[test]
fn simulate_writes_file() {
    let dir = setup();
    let out = twostep(dir.path(), &["simulate", "--config", "defaults.json", "--seed", "7", "--out", "run.csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(read(dir.path(), "run.csv")).unwrap();
    assert!(text.starts_with("t,leader_mean,leader_var,agent_mean,agent_var\n"));
    assert_eq!(text.lines().count(), 1 + 31);
    assert!(!text.contains('\r'));
}

#[test]
fn out_of_range_beta_grid_exits_two() {
    let dir = setup();
    let out = twostep(
        dir.path(),
        &["sweep", "--config", "defaults.json", "--param", "beta", "--values", "2,0.5", "--replicates", "1"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("beta"));
}

#[test]
fn invalid_config_exits_two_naming_field() {
    let dir = setup();
    std::fs::write(dir.path().join("bad.json"), r#"{"sigma": 1.5}"#).unwrap();
    let out = twostep(dir.path(), &["predict", "--config", "bad.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sigma"));
}

#[test]
fn usage_errors_exit_one() {
    let dir = setup();
    for args in [&["frobnicate"][..], &["simulate", "--bogus"], &[]] {
        let out = twostep(dir.path(), args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"), "{args:?}");
    }
}

#[test]
fn fit_constants_json() {
    let dir = setup();
    let out = twostep(dir.path(), &["fit-constants", "--out", "fit.json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&read(dir.path(), "fit.json")).unwrap();
    assert!(v["lambda"].as_f64().unwrap() > 0.0);
    assert!(v["kappa"].as_f64().unwrap() > 0.0);
    assert!(!v["per_point_residuals"].as_array().unwrap().is_empty());
    assert!(v["rms_residual"].as_f64().unwrap() >= 0.0);
}

#[test]
fn fixed_seed_output_is_byte_identical() {
    let dir = setup();
    let runs: [&[&str]; 3] = [
        &["simulate", "--full"],
        &["predict", "--method", "fixed-point"],
        &["sweep", "--param", "mu", "--values", "0.3,0.6", "--replicates", "2"],
    ];
    for args in runs {
        for name in ["a.csv", "b.csv"] {
            let mut full = args.to_vec();
            full.extend(["--config", "defaults.json", "--seed", "11", "--out", name]);
            assert_eq!(twostep(dir.path(), &full).status.code(), Some(0), "{args:?}");
        }
        assert_eq!(read(dir.path(), "a.csv"), read(dir.path(), "b.csv"), "{args:?}");
    }
}

#[test]
fn seed_from_environment() {
    let dir = setup();
    let base = ["simulate", "--config", "defaults.json", "--out"];
    let run = |out: &str, seed: Option<&str>, env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_twostep"));
        cmd.args(base).arg(out).current_dir(dir.path()).env_remove("TWOSTEP_SEED");
        if let Some(s) = seed {
            cmd.args(["--seed", s]);
        }
        if let Some(e) = env {
            cmd.env("TWOSTEP_SEED", e);
        }
        assert!(cmd.status().unwrap().success());
        read(dir.path(), out)
    };
    let flag = run("flag.csv", Some("5"), None);
    assert_eq!(run("env.csv", None, Some("5")), flag);
    // the flag wins over the environment
    assert_eq!(run("both.csv", Some("5"), Some("6")), flag);
    assert_ne!(run("other.csv", None, Some("6")), flag);

    let mut cmd = Command::new(env!("CARGO_BIN_EXE_twostep"));
    let bad = cmd.args(base).arg("x.csv").current_dir(dir.path()).env("TWOSTEP_SEED", "seven");
    assert_eq!(bad.output().unwrap().status.code(), Some(2));
}

#[test]
fn json_format_matches_csv_columns() {
    let dir = setup();
    let common = ["correlate", "--config", "defaults.json", "--n-values", "5,50", "--replicates", "2"];
    let csv = twostep(dir.path(), &[&common[..], &["--out", "c.csv"]].concat());
    let json = twostep(dir.path(), &[&common[..], &["--format", "json", "--out", "c.txt"]].concat());
    assert!(csv.status.success() && json.status.success());
    let text = String::from_utf8(read(dir.path(), "c.csv")).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let rows: Vec<serde_json::Map<String, serde_json::Value>> =
        serde_json::from_slice(&read(dir.path(), "c.txt")).unwrap();
    assert_eq!(rows.len(), 2);
    for row in &rows {
        let mut keys: Vec<&str> = row.keys().map(String::as_str).collect();
        let mut want = header.clone();
        keys.sort();
        want.sort();
        assert_eq!(keys, want);
    }
}

#[test]
fn dataset_commands() {
    let dir = setup();
    let synth = twostep(
        dir.path(),
        &["synth-dataset", "--scenarios", "2", "--leaders", "6", "--agents", "6", "--seed", "3", "--out", "data.csv"],
    );
    assert!(synth.status.success(), "{}", String::from_utf8_lossy(&synth.stderr));

    let est = twostep(dir.path(), &["estimate-prefs", "--data", "data.csv", "--out", "prefs.json"]);
    assert!(est.status.success(), "{}", String::from_utf8_lossy(&est.stderr));
    let v: serde_json::Value = serde_json::from_slice(&read(dir.path(), "prefs.json")).unwrap();
    assert!((v["alpha"].as_f64().unwrap() - 0.8).abs() < 0.05, "{v}");

    let cmp = twostep(
        dir.path(),
        &["compare", "--data", "data.csv", "--alpha", "0.8", "--beta", "2.1", "--runs", "2", "--steps", "10", "--baselines", "hk,lcsn", "--out", "cmp.csv"],
    );
    assert!(cmp.status.success(), "{}", String::from_utf8_lossy(&cmp.stderr));
    let text = String::from_utf8(read(dir.path(), "cmp.csv")).unwrap();
    assert!(text.starts_with("scenario,MP_leaders,MP_agents,HK_leaders,HK_agents,LCSN_leaders,LCSN_agents\n"), "{text}");
    assert!(text.lines().last().unwrap().starts_with("overall,"));

    std::fs::write(dir.path().join("broken.csv"), "scenario_id,subject_id\ns,1\n").unwrap();
    let bad = twostep(dir.path(), &["estimate-prefs", "--data", "broken.csv"]);
    assert_eq!(bad.status.code(), Some(2));
}
