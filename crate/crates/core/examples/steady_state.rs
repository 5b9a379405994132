//! Steady-state prediction three ways (closed form, numerical fixed point,
//! simulation) and the scalar-regime closed forms.
//!
//! ```bash
//! cargo run --release -p twostep --example steady_state
//! ```

use twostep::harness::experiment::{build_instance, simulated_steady_state};
use twostep::harness::{ExperimentConfig, PerEntity};
use twostep::steady_state::{predicted_stats, Constants, ScalarRegime};
use twostep::{Method, PreferenceCoeffs, SampleStats};

fn main() -> twostep::Result<()> {
    let cfg = ExperimentConfig {
        alpha: 0.8,
        beta: 3.0,
        sigma: PerEntity::random(),
        ..ExperimentConfig::desk()
    };
    let inst = build_instance(&cfg, 1)?;
    let analytic = inst.predict(&cfg, Method::Analytic)?;
    let fixed = inst.predict(&cfg, Method::FixedPoint)?;
    let sim = simulated_steady_state(&cfg, &inst.simulate(&cfg)?);

    println!("leader  sigma    m0      closed   fixed-pt  simulated");
    for i in 0..6 {
        println!(
            "{i:>6}  {:.3}  {:.4}  {:.4}   {:.4}    {:.4}",
            inst.leaders.sigma()[i],
            inst.leaders.initial()[i],
            analytic.leader_ss[i],
            fixed.leader_ss[i],
            sim.leader_ss[i]
        );
    }
    let gap = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    println!("\nmax |closed - fixed point| = {:.4}", gap(&analytic.leader_ss, &fixed.leader_ss));
    println!("max |fixed point - simulation| = {:.4}", gap(&fixed.leader_ss, &sim.leader_ss));
    println!("max agent |closed - simulation| = {:.4}", gap(&analytic.agent_ss, &sim.agent_ss));

    // scalar regime: alpha = beta = 1, leader opinions ~ Beta(2,5), agents ~ Beta(5,2)
    let beta_stats = |a: f64, b: f64| SampleStats {
        mean: a / (a + b),
        variance: a * b / ((a + b).powi(2) * (a + b + 1.0)),
    };
    let (leaders, agents) = predicted_stats(&ScalarRegime {
        sigma: 0.5,
        rho: 0.2,
        theta: 0.4,
        prefs: PreferenceCoeffs::degenerate(),
        mu: 0.5,
        m0: beta_stats(2.0, 5.0),
        x0: beta_stats(5.0, 2.0),
        constants: Constants::default(),
    })?;
    println!("\nscalar regime: leader mean {:.6} (11/28 = {:.6})", leaders.mean, 11.0 / 28.0);
    println!("               agent mean {:.6}, agent variance {:.6}", agents.mean, agents.variance);
    Ok(())
}
