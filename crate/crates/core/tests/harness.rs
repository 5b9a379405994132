use proptest::prelude::*;
use twostep::baselines::{synthetic_dataset, SyntheticPlan};
use twostep::harness::config::parse_config;
use twostep::harness::experiment::{replicate_means, pearson, run_correlation_experiment, run_sweep, SweepSpec};
use twostep::harness::{load_config, save_config, ExperimentConfig, MatrixMode, ObservedDataset, PerEntity};

fn per_entity(len: usize) -> impl Strategy<Value = PerEntity> {
    prop_oneof![
        (0.0..=1.0f64).prop_map(PerEntity::Scalar),
        prop::collection::vec(0.0..=1.0f64, len).prop_map(PerEntity::Vector),
        Just(PerEntity::random()),
    ]
}

fn config() -> impl Strategy<Value = ExperimentConfig> {
    (1usize..6, 1usize..6, 1usize..50, 1usize..20, any::<u64>())
        .prop_flat_map(|(p, q, t, n, seed)| {
            (
                per_entity(p),
                prop::bool::ANY,
                (0.1..9.0f64, 0.1..9.0f64, 0.1..9.0f64, 0.1..9.0f64),
                (0.5001..=1.0f64, 1.0001..8.0f64),
                1..=t,
                prop::bool::ANY,
            )
                .prop_map(move |(sigma, random_weights, shapes, (alpha, beta), tail, dense)| {
                    let (rho, pi, theta) = if random_weights {
                        (PerEntity::random(), PerEntity::random(), PerEntity::random())
                    } else {
                        (PerEntity::Scalar(0.2), PerEntity::Scalar(0.3), PerEntity::Scalar(0.5))
                    };
                    ExperimentConfig {
                        n,
                        p,
                        q,
                        t,
                        a: shapes.0,
                        b: shapes.1,
                        a_m: shapes.2,
                        b_x: shapes.3,
                        sigma,
                        rho,
                        pi,
                        theta,
                        alpha,
                        beta,
                        matrix_mode: if dense { MatrixMode::RandomRowNormalized } else { MatrixMode::Uniform },
                        tail_window: tail,
                        master_seed: seed,
                        ..ExperimentConfig::default()
                    }
                })
        })
}

proptest! {
    #[test]
    fn config_round_trip(cfg in config()) {
        cfg.validate().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        save_config(&cfg, &path).unwrap();
        prop_assert_eq!(load_config(&path).unwrap(), cfg);
    }
}

#[test]
fn omitted_fields_take_table_defaults() {
    let cfg = parse_config(r#"{"p": 10}"#, "inline").unwrap();
    assert_eq!(cfg, ExperimentConfig { p: 10, ..ExperimentConfig::default() });
}

#[test]
fn parse_error_carries_position() {
    let err = parse_config("{\n  \"n\": 10,\n  \"p\": ,\n}", "bad.json").unwrap_err().to_string();
    assert!(err.contains("bad.json") && err.contains("line 3"), "{err}");
}

fn scalar_regime() -> ExperimentConfig {
    ExperimentConfig {
        alpha: 1.0,
        beta: 1.0,
        a_m: 2.0,
        b_m: 5.0,
        a_x: 5.0,
        b_x: 2.0,
        ..ExperimentConfig::desk()
    }
}

#[test]
fn stubbornness_sweep_endpoints() {
    let rows = run_sweep(&SweepSpec {
        base: scalar_regime(),
        parameter: "sigma".into(),
        values: vec![0.0, 1.0],
        replicates: 2,
    })
    .unwrap();
    let sim = replicate_means(&rows, |r| r.sim_leader.mean);
    let pred = replicate_means(&rows, |r| r.pred_leader.mean);
    assert!((sim[0].1 - 0.5).abs() <= 0.01, "sigma = 0: {}", sim[0].1);
    assert!((sim[1].1 - pred[1].1).abs() <= 1e-12, "sigma = 1 keeps the initial opinions");
    assert!((sim[1].1 - 2.0 / 7.0).abs() <= 0.03, "sigma = 1: {}", sim[1].1);
}

#[test]
fn sweep_rows_ordered_and_reproducible() {
    let spec = SweepSpec {
        base: ExperimentConfig { n: 50, p: 20, q: 20, t: 30, ..ExperimentConfig::default() },
        parameter: "beta".into(),
        values: vec![1.5, 3.0],
        replicates: 3,
    };
    let a = run_sweep(&spec).unwrap();
    let b = run_sweep(&spec).unwrap();
    assert_eq!(a, b);
    let order: Vec<(f64, usize)> = a.iter().map(|r| (r.value, r.replicate)).collect();
    assert_eq!(order, vec![(1.5, 0), (1.5, 1), (1.5, 2), (3.0, 0), (3.0, 1), (3.0, 2)]);
}

#[test]
fn sweep_rejects_grid_naming_parameter() {
    let err = run_sweep(&SweepSpec {
        base: ExperimentConfig::desk(),
        parameter: "beta".into(),
        values: vec![2.0, 0.5],
        replicates: 1,
    })
    .unwrap_err()
    .to_string();
    assert!(err.contains("beta"), "{err}");
}

#[test]
fn frozen_system_correlation_undefined() {
    let cfg = ExperimentConfig {
        n: 20,
        p: 10,
        q: 10,
        t: 20,
        sigma: PerEntity::Scalar(1.0),
        rho: PerEntity::Scalar(1.0),
        pi: PerEntity::Scalar(0.0),
        theta: PerEntity::Scalar(0.0),
        ..ExperimentConfig::default()
    };
    let (rows, _) = run_correlation_experiment(&cfg, &[5], 2).unwrap();
    assert!(rows[0].max_abs_error < 1e-15);
    // initial opinions vary, so r is defined and exactly one
    assert!((rows[0].r_leaders.unwrap() - 1.0).abs() < 1e-12);

    // constant vectors have no correlation
    assert_eq!(pearson(&[0.4; 6], &[0.4; 6]), None);
}

#[test]
fn dataset_csv_round_trip() {
    let ds = synthetic_dataset(&SyntheticPlan { scenarios: 2, leaders: 4, agents: 5, ..SyntheticPlan::default() }).unwrap();
    let mut buf = Vec::new();
    ds.to_writer(&mut buf).unwrap();
    let back = ObservedDataset::from_reader(buf.as_slice()).unwrap();
    assert_eq!(back.rows().len(), ds.rows().len());
    for (a, b) in back.rows().iter().zip(ds.rows()) {
        assert_eq!((&a.scenario_id, &a.subject_id, a.role), (&b.scenario_id, &b.subject_id, b.role));
        assert!((a.final_opinion - b.final_opinion).abs() <= 1e-12);
        assert!(a.weights.iter().zip(&b.weights).all(|(x, y)| (x - y).abs() <= 1e-12));
    }
    // values are written at 12 significant digits, so a second pass is stable
    let mut again = Vec::new();
    back.to_writer(&mut again).unwrap();
    assert_eq!(again, buf);
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("scenario_id,subject_id,role,initial_opinion,final_opinion,stubbornness,weights,messages\n"));
}

#[test]
fn dataset_issues_reported_by_line() {
    let csv = "scenario_id,subject_id,role,initial_opinion,final_opinion,stubbornness,weights,messages\n\
               s,1,leader,0.5,1.5,0.5,,0.1;0.2\n\
               s,2,boss,0.5,0.5,0.5,,\n";
    let err = ObservedDataset::from_reader(csv.as_bytes()).unwrap_err().to_string();
    assert!(err.contains("line 2") && err.contains("line 3"), "{err}");
}
