//! Runs the two-step dynamics at desk scale and reports how quickly the
//! populations settle.
//!
//! ```bash
//! cargo run --release -p twostep --example simulate
//! ```

use twostep::harness::experiment::build_instance;
use twostep::harness::ExperimentConfig;
use twostep::steady_state::sample_stats;

fn main() -> twostep::Result<()> {
    let cfg = ExperimentConfig::desk();
    let inst = build_instance(&cfg, 7)?;
    let traj = inst.simulate(&cfg)?;

    println!("{:>4} {:>12} {:>12} {:>12} {:>12}", "t", "leader mean", "leader var", "agent mean", "agent var");
    for t in [0, 1, 2, 5, 10, 20, 50, 100] {
        let m = sample_stats(&traj.leader_opinions[t])?;
        let x = sample_stats(&traj.agent_opinions[t])?;
        println!("{t:>4} {:>12.5} {:>12.6} {:>12.5} {:>12.6}", m.mean, m.variance, x.mean, x.variance);
    }

    let last = &traj.agent_opinions[cfg.t];
    let prev = &traj.agent_opinions[cfg.t - 1];
    let drift = last.iter().zip(prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("\nmax agent change over the final step: {drift:.2e}");
    Ok(())
}
