//! Re-derives the modified-stubbornness constants from the numerical fixed point.
//!
//! ```bash
//! cargo run --release -p twostep --example fit_constants
//! ```

use twostep::calibration::{fit_constants, CalibrationPlan};
use twostep::MessageDistribution;

fn main() -> twostep::Result<()> {
    let plan = CalibrationPlan::default();
    let fit = fit_constants(&MessageDistribution::uniform(), &plan)?;

    println!("beta   w_beta   residual");
    for ((beta, w), r) in fit.kappa_fit.points.iter().zip(&fit.kappa_fit.per_point_residuals) {
        println!("{beta:<6} {w:.5}  {r:+.5}");
    }
    println!("kappa = {:.4} (rms {:.4})\n", fit.kappa, fit.kappa_fit.rms_residual);

    println!("alpha  w_alpha  residual");
    for ((alpha, w), r) in fit.lambda_fit.points.iter().zip(&fit.lambda_fit.per_point_residuals) {
        println!("{alpha:<6} {w:.5}  {r:+.5}");
    }
    println!("lambda = {:.4} (rms {:.4})", fit.lambda, fit.lambda_fit.rms_residual);
    Ok(())
}
