//! Recovers planted preference coefficients from noisy selective coefficients.
//!
//! ```bash
//! cargo run --release -p twostep --example estimate_preferences
//! ```

use twostep::calibration::{estimate_preference_coeffs, synthetic_observations};
use twostep::rng::{stream, Stream};
use twostep::PreferenceCoeffs;

fn main() -> twostep::Result<()> {
    let truth = PreferenceCoeffs::new(0.8, 2.1)?;
    println!("planted alpha = {}, beta = {}\n", truth.alpha(), truth.beta());
    println!("{:>6} {:>8} {:>8} {:>12}", "noise", "alpha", "beta", "objective");
    for noise in [0.0, 0.005, 0.01, 0.02] {
        let mut rng = stream(11, Stream::Noise);
        let obs = synthetic_observations(truth, 40, 12, noise, &mut rng);
        let est = estimate_preference_coeffs(&obs)?;
        println!("{noise:>6} {:>8.4} {:>8.4} {:>12.3e}", est.alpha, est.beta, est.objective);
    }
    Ok(())
}
