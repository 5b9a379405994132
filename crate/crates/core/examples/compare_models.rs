//! Generates an MP dataset, fits every baseline to it and prints the RMSE table.
//!
//! ```bash
//! cargo run --release -p twostep --example compare_models
//! ```

use twostep::baselines::{compare_models, synthetic_dataset, CompareOptions, SyntheticPlan};

fn main() -> twostep::Result<()> {
    let plan = SyntheticPlan::default();
    let dataset = synthetic_dataset(&plan)?;
    let report = compare_models(&dataset, &CompareOptions::default())?;

    println!(
        "planted (alpha, beta) = ({}, {}), estimated = ({:.3}, {:.3})\n",
        plan.prefs.alpha(),
        plan.prefs.beta(),
        report.mp_alpha,
        report.mp_beta
    );
    print!("{:<10}", "scenario");
    for m in &report.models {
        print!("{m:>16}");
    }
    println!();
    let mut scenarios = report.scenarios.clone();
    scenarios.push("overall".into());
    for sc in &scenarios {
        print!("{sc:<10}");
        for m in &report.models {
            let r = report.row(sc, m).expect("row");
            print!("{:>8.4}/{:<7.4}", r.leader_rmse, r.agent_rmse.unwrap_or(f64::NAN));
        }
        println!();
    }
    println!("\n(cells are leader RMSE / agent RMSE)");
    for f in &report.fitted {
        println!("{:<7} fitted {:?} (leader RMSE {:.4})", f.model, f.params, f.leader_rmse);
    }
    println!("\nlowest leader RMSE: {}", report.best_for_leaders());
    println!("lowest agent RMSE:  {}", report.best_for_agents().unwrap_or("-"));
    Ok(())
}
