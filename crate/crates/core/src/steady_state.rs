//! Steady-state predictors: the fitted closed form for leaders, a numerical
//! fixed-point solver for the large-n leader equation, the linear solve for
//! agents, and the scalar-regime sample statistics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Error, Result};
use crate::model::{AgentPopulation, InfluenceMatrix, LeaderPopulation, MessageDistribution, PreferenceCoeffs};
use crate::quadrature::GaussLegendre;

/// Fitted constants (lambda, kappa) of the modified-stubbornness exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub lambda: f64,
    pub kappa: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            lambda: 1.15,
            kappa: 0.18,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Analytic,
    FixedPoint,
    Simulation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyStateResult {
    pub leader_ss: Vec<f64>,
    pub agent_ss: Vec<f64>,
    pub method: Method,
    /// Present whenever `method` is `Analytic`.
    pub constants_used: Option<Constants>,
}

/// Sample mean and population (1/k) variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub mean: f64,
    pub variance: f64,
}

pub fn sample_stats(v: &[f64]) -> Result<SampleStats> {
    if v.is_empty() {
        return Err(invalid("values", "sample statistics need at least one value"));
    }
    let k = v.len() as f64;
    let mean = v.iter().sum::<f64>() / k;
    let variance = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / k;
    Ok(SampleStats { mean, variance })
}

/// Exponent `(lambda ln alpha + 1) / (kappa (beta - 1) + 1)`.
pub fn modified_exponent(prefs: PreferenceCoeffs, constants: Constants) -> Result<f64> {
    if !(constants.lambda > 0.0) {
        return Err(invalid("lambda", "must be positive"));
    }
    if !(constants.kappa > 0.0) {
        return Err(invalid("kappa", "must be positive"));
    }
    let num = constants.lambda * prefs.alpha().ln() + 1.0;
    let den = constants.kappa * (prefs.beta() - 1.0) + 1.0;
    let e = num / den;
    if !(e > 0.0) {
        return Err(invalid(
            "alpha",
            format!("modified-stubbornness exponent {e} is not positive"),
        ));
    }
    Ok(e)
}

/// Modified stubbornness `z = sigma^exponent`.
pub fn modified_stubbornness(sigma: f64, prefs: PreferenceCoeffs, constants: Constants) -> Result<f64> {
    if !(0.0..=1.0).contains(&sigma) {
        return Err(invalid("sigma", format!("must lie in [0, 1], got {sigma}")));
    }
    let e = modified_exponent(prefs, constants)?;
    Ok(sigma.powf(e))
}

/// Leader steady state when every message is weighted equally.
pub fn leader_ss_degenerate(leaders: &LeaderPopulation, mu: f64) -> Result<Vec<f64>> {
    if !leaders.prefs().is_degenerate() {
        return Err(invalid(
            "alpha",
            "the degenerate steady state requires alpha = beta = 1",
        ));
    }
    Ok(leaders
        .initial()
        .iter()
        .zip(leaders.sigma())
        .map(|(m0, s)| s * m0 + (1.0 - s) * mu)
        .collect())
}

/// Closed-form leader steady state `z m0 + (1 - z) mu`.
pub fn leader_ss_analytic(leaders: &LeaderPopulation, mu: f64, constants: Constants) -> Result<Vec<f64>> {
    let prefs = leaders.prefs();
    leaders
        .initial()
        .iter()
        .zip(leaders.sigma())
        .map(|(m0, &s)| {
            let z = modified_stubbornness(s, prefs, constants)?;
            Ok(z * m0 + (1.0 - z) * mu)
        })
        .collect()
}

/// Preference-weighted moments `(E[k s], E[k])` under `density`, where
/// `k(s) = |s - m|^(2 alpha - 2) (1 - (s - m)^2)^(beta - 1)`.
///
/// The domain is split at `m`; on each side `u = |s - m|^(2 alpha - 1)`
/// removes the endpoint singularity, so the 64-point rule sees a smooth
/// integrand. `density` may be unnormalized; only the ratio matters.
pub fn preference_moments<D: Fn(f64) -> f64>(m: f64, alpha: f64, beta: f64, density: D) -> (f64, f64) {
    let rule = GaussLegendre::order64();
    let e = 2.0 * alpha - 1.0;
    let inv_e = 1.0 / e;
    let mut num = 0.0;
    let mut den = 0.0;
    for (sign, len) in [(-1.0, m), (1.0, 1.0 - m)] {
        if len <= 0.0 {
            continue;
        }
        let upper = len.powf(e);
        rule.for_each_point(0.0, upper, |u, w| {
            let d = if e == 1.0 { u } else { u.powf(inv_e) };
            let s = (m + sign * d).clamp(0.0, 1.0);
            let far = if beta == 1.0 {
                1.0
            } else {
                (1.0 - d * d).max(0.0).powf(beta - 1.0)
            };
            let k = inv_e * far * density(s) * w;
            num += k * s;
            den += k;
        });
    }
    (num, den)
}

/// `E[k s] / E[k]` under a Beta message law.
pub fn expected_selection(m: f64, prefs: PreferenceCoeffs, dist: &MessageDistribution) -> f64 {
    let (num, den) = preference_moments(m, prefs.alpha(), prefs.beta(), |s| {
        dist.unnormalized_density(s)
    });
    if den > 0.0 {
        (num / den).clamp(0.0, 1.0)
    } else {
        dist.mean()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FixedPointOptions {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            damping: 0.5,
            tol: 1e-8,
            max_iter: 10_000,
        }
    }
}

/// Solves `m = sigma m0 + (1 - sigma) E[k s] / E[k]` for one leader.
///
/// Damped iteration first; if that runs out of budget, bisection on
/// `g(m) - m`, which is nonnegative at 0 and nonpositive at 1.
pub fn leader_ss_fixed_point(
    sigma: f64,
    m0: f64,
    dist: &MessageDistribution,
    prefs: PreferenceCoeffs,
    tol: f64,
) -> Result<f64> {
    leader_ss_fixed_point_with(
        sigma,
        m0,
        dist,
        prefs,
        FixedPointOptions {
            tol,
            ..FixedPointOptions::default()
        },
    )
}

pub fn leader_ss_fixed_point_with(
    sigma: f64,
    m0: f64,
    dist: &MessageDistribution,
    prefs: PreferenceCoeffs,
    opts: FixedPointOptions,
) -> Result<f64> {
    if !(opts.tol > 0.0) {
        return Err(invalid("tol", "tolerance must be positive"));
    }
    if !(0.0..=1.0).contains(&sigma) {
        return Err(invalid("sigma", format!("must lie in [0, 1], got {sigma}")));
    }
    if !(0.0..=1.0).contains(&m0) {
        return Err(invalid("m0", format!("must lie in [0, 1], got {m0}")));
    }
    let g = |m: f64| sigma * m0 + (1.0 - sigma) * expected_selection(m, prefs, dist);
    if sigma == 1.0 {
        return Ok(m0);
    }

    let mut m = m0;
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_iter {
        let gm = g(m);
        residual = (gm - m).abs();
        if residual <= opts.tol {
            return Ok(m);
        }
        m = (1.0 - opts.damping) * m + opts.damping * gm;
    }

    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut iterations = opts.max_iter;
    while hi - lo > 1e-15 {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let h = g(mid) - mid;
        if h.abs() <= opts.tol {
            return Ok(mid);
        }
        if h > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        residual = h.abs();
    }
    Err(Error::NoConvergence {
        iterations,
        residual,
    })
}

/// Fixed-point steady state for every leader.
pub fn leader_ss_fixed_point_all(
    leaders: &LeaderPopulation,
    dist: &MessageDistribution,
    tol: f64,
) -> Result<Vec<f64>> {
    let prefs = leaders.prefs();
    leaders
        .initial()
        .par_iter()
        .zip(leaders.sigma().par_iter())
        .map(|(&m0, &s)| leader_ss_fixed_point(s, m0, dist, prefs, tol))
        .collect()
}

const DENSE_SOLVE_LIMIT: usize = 2000;

fn agent_rhs(agents: &AgentPopulation, leader_ss: &[f64]) -> Vec<f64> {
    let lead = agents.u().mul_vec(leader_ss);
    (0..agents.len())
        .map(|i| agents.rho()[i] * agents.initial()[i] + agents.theta()[i] * lead[i])
        .collect()
}

/// `||(I - Pi W) x - P x0 - Theta U m||_inf`.
pub fn agent_ss_residual(agents: &AgentPopulation, leader_ss: &[f64], x: &[f64]) -> f64 {
    let rhs = agent_rhs(agents, leader_ss);
    let wx = agents.w().mul_vec(x);
    (0..agents.len())
        .map(|i| (x[i] - agents.pi()[i] * wx[i] - rhs[i]).abs())
        .fold(0.0, f64::max)
}

/// Agent steady state: solves `(I - Pi W) x = P x0 + Theta U m`.
pub fn agent_ss(agents: &AgentPopulation, leader_ss: &[f64]) -> Result<Vec<f64>> {
    check_len("agent_ss leader steady state", agents.leader_count(), leader_ss.len())?;
    if let Some(i) = agents.pi().iter().position(|&p| p >= 1.0) {
        return Err(Error::SingularSystem(format!(
            "agent {i} has pi = 1 (rho + theta = 0)"
        )));
    }
    let q = agents.len();
    let rhs = agent_rhs(agents, leader_ss);

    let mut x = match agents.w() {
        // (I - Pi W) x = b with W = 11^T / q: x = b + pi c, c = mean(b) / (1 - mean(pi))
        InfluenceMatrix::Uniform { .. } => {
            let qf = q as f64;
            let mean_b = rhs.iter().sum::<f64>() / qf;
            let mean_pi = agents.pi().iter().sum::<f64>() / qf;
            let c = mean_b / (1.0 - mean_pi);
            rhs.iter()
                .zip(agents.pi())
                .map(|(b, p)| b + p * c)
                .collect()
        }
        InfluenceMatrix::Dense(w) if q <= DENSE_SOLVE_LIMIT => {
            let mut a = -w.clone();
            for i in 0..q {
                let pi = agents.pi()[i];
                a.row_mut(i).scale_mut(pi);
                a[(i, i)] += 1.0;
            }
            let lu = a.clone().lu();
            let b = nalgebra::DVector::from_vec(rhs.clone());
            let mut sol = lu
                .solve(&b)
                .ok_or_else(|| Error::SingularSystem("LU factorization failed".into()))?;
            // one step of iterative refinement
            let r = &b - &a * &sol;
            if let Some(delta) = lu.solve(&r) {
                sol += delta;
            }
            sol.iter().copied().collect()
        }
        InfluenceMatrix::Dense(_) => {
            let mut x = rhs.clone();
            for _ in 0..100_000 {
                let wx = agents.w().mul_vec(&x);
                let next: Vec<f64> = (0..q).map(|i| rhs[i] + agents.pi()[i] * wx[i]).collect();
                let change = next
                    .iter()
                    .zip(&x)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                x = next;
                if change <= 1e-14 {
                    break;
                }
            }
            x
        }
    };
    x.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    Ok(x)
}

/// Per-agent steady state in the scalar-matrix, uniform-influence regime.
pub fn agent_ss_scalar_closed_form(
    rho: f64,
    pi: f64,
    theta: f64,
    x0_i: f64,
    x0_mean: f64,
    leader_ss_mean: f64,
) -> Result<f64> {
    if !(rho + theta > 0.0) {
        return Err(invalid("rho", "rho + theta must be positive"));
    }
    if ((rho + pi + theta) - 1.0).abs() > 1e-12 {
        return Err(invalid("pi", "rho + pi + theta must equal 1"));
    }
    let s = rho + theta;
    Ok(rho * x0_i + (1.0 - rho - theta) * rho / s * x0_mean + theta / s * leader_ss_mean)
}

/// Parameters of the scalar regime: `Sigma = sigma I`, `P = rho I`,
/// `Theta = theta I`, uniform W and U.
#[derive(Debug, Clone, Copy)]
pub struct ScalarRegime {
    pub sigma: f64,
    pub rho: f64,
    pub theta: f64,
    pub prefs: PreferenceCoeffs,
    pub mu: f64,
    pub m0: SampleStats,
    pub x0: SampleStats,
    pub constants: Constants,
}

/// Predicted (leader, agent) sample statistics in the scalar regime.
pub fn predicted_stats(r: &ScalarRegime) -> Result<(SampleStats, SampleStats)> {
    if !(r.rho + r.theta > 0.0) {
        return Err(invalid("rho", "rho + theta must be positive"));
    }
    let z = modified_stubbornness(r.sigma, r.prefs, r.constants)?;
    let leaders = SampleStats {
        mean: z * r.m0.mean + (1.0 - z) * r.mu,
        variance: z * z * r.m0.variance,
    };
    let agents = SampleStats {
        mean: (r.rho * r.x0.mean + r.theta * leaders.mean) / (r.rho + r.theta),
        variance: r.rho * r.rho * r.x0.variance,
    };
    Ok((leaders, agents))
}

/// Leader and agent steady states by the requested route.
///
/// `Analytic` uses the closed form for leaders; `FixedPoint` solves the
/// large-n leader equation numerically. Agents always use the linear solve.
pub fn predict(
    dist: &MessageDistribution,
    leaders: &LeaderPopulation,
    agents: &AgentPopulation,
    method: Method,
    constants: Constants,
) -> Result<SteadyStateResult> {
    let (leader_ss, constants_used) = match method {
        Method::Analytic => (leader_ss_analytic(leaders, dist.mean(), constants)?, Some(constants)),
        Method::FixedPoint => (leader_ss_fixed_point_all(leaders, dist, 1e-10)?, None),
        Method::Simulation => {
            return Err(invalid(
                "method",
                "simulation steady states come from a trajectory, not a predictor",
            ))
        }
    };
    let agent_ss = agent_ss(agents, &leader_ss)?;
    Ok(SteadyStateResult {
        leader_ss,
        agent_ss,
        method,
        constants_used,
    })
}
