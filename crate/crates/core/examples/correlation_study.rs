//! Correlation between simulated and predicted steady states as the number
//! of message sources grows (p = q = 200, five seeds per point).
//!
//! ```bash
//! cargo run --release -p twostep --example correlation_study
//! ```

use twostep::harness::experiment::run_correlation_experiment;
use twostep::harness::ExperimentConfig;

fn main() -> twostep::Result<()> {
    let cfg = ExperimentConfig::desk();
    let n_values = [3, 10, 30, 100, 300, 1000];
    let start = std::time::Instant::now();
    let (rows, _) = run_correlation_experiment(&cfg, &n_values, 5)?;

    println!("{:>6} {:>10} {:>10} {:>10} {:>12}", "n", "r_leaders", "r_agents", "r_pooled", "max |error|");
    for r in &rows {
        let f = |v: Option<f64>| v.map_or("undefined".to_string(), |v| format!("{v:.5}"));
        println!(
            "{:>6} {:>10} {:>10} {:>10} {:>12.4}",
            r.n,
            f(r.r_leaders),
            f(r.r_agents),
            f(r.r_pooled),
            r.max_abs_error
        );
    }
    println!("\n{:.1?} elapsed", start.elapsed());
    Ok(())
}
