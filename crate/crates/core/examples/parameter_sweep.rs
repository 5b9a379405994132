//! Sweeps one parameter and writes simulated and predicted sample statistics
//! as CSV, ready for plotting.
//!
//! ```bash
//! cargo run --release -p twostep --example parameter_sweep -- beta sweep_beta.csv
//! ```

use std::path::PathBuf;

use twostep::harness::experiment::{replicate_means, run_sweep, sweep_table, SweepSpec};
use twostep::harness::{save_results, ExperimentConfig, Format};

fn main() -> twostep::Result<()> {
    let mut args = std::env::args().skip(1);
    let parameter = args.next().unwrap_or_else(|| "beta".into());
    let out = PathBuf::from(args.next().unwrap_or_else(|| format!("sweep_{parameter}.csv")));
    let values: Vec<f64> = match parameter.as_str() {
        "beta" => vec![1.25, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5],
        "alpha" => vec![0.6, 0.7, 0.8, 0.9, 1.0],
        _ => (1..10).map(|i| i as f64 / 10.0).collect(),
    };
    let rows = run_sweep(&SweepSpec {
        base: ExperimentConfig::desk(),
        parameter: parameter.clone(),
        values,
        replicates: 2,
    })?;
    save_results(&sweep_table(&rows), &out, Format::Csv)?;

    let sim = replicate_means(&rows, |r| r.sim_leader.variance);
    let pred = replicate_means(&rows, |r| r.pred_leader.variance);
    println!("{parameter:>8} {:>14} {:>14}", "sim var(m)", "pred var(m)");
    for ((v, s), (_, p)) in sim.iter().zip(&pred) {
        println!("{v:>8.3} {s:>14.6} {p:>14.6}");
    }
    println!("\nwrote {}", out.display());
    Ok(())
}
