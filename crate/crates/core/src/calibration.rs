//! Calibration of the modified-stubbornness constants against the numerical
//! fixed point, and estimation of preference coefficients from observed
//! selective coefficients.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{selective_coefficients, MessageDistribution, PreferenceCoeffs};
use crate::steady_state::leader_ss_fixed_point;

/// Tolerance of the fixed-point solves used as fitting data.
const ORACLE_TOL: f64 = 1e-11;

/// (sigma, m0) pairs over which the steady-state exponent is fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitGrid {
    pub sigma: Vec<f64>,
    pub m0: Vec<f64>,
}

impl Default for FitGrid {
    fn default() -> Self {
        Self {
            sigma: (1..=9).map(|i| i as f64 / 10.0).collect(),
            m0: vec![0.1, 0.3, 0.5, 0.7, 0.9],
        }
    }
}

impl FitGrid {
    fn validate(&self) -> Result<()> {
        if self.sigma.is_empty() || self.m0.is_empty() {
            return Err(invalid("grid", "fitting grids must be nonempty"));
        }
        if let Some(s) = self.sigma.iter().find(|s| !(**s > 0.0 && **s < 1.0)) {
            return Err(invalid("sigma", format!("grid value {s} outside (0, 1)")));
        }
        if let Some(m) = self.m0.iter().find(|m| !(0.0..=1.0).contains(*m)) {
            return Err(invalid("m0", format!("grid value {m} outside [0, 1]")));
        }
        Ok(())
    }
}

/// Best exponent `w` in `m ~ sigma^w m0 + (1 - sigma^w) mu` for one (alpha, beta).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentFit {
    pub w: f64,
    pub rms_residual: f64,
}

/// Fit of a one-parameter law `w(param)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawFit {
    pub coefficient: f64,
    /// (parameter value, fitted exponent) pairs the law was fitted to.
    pub points: Vec<(f64, f64)>,
    pub per_point_residuals: Vec<f64>,
    pub rms_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub lambda: f64,
    pub kappa: f64,
    pub per_point_residuals: Vec<f64>,
    pub rms_residual: f64,
    pub kappa_fit: LawFit,
    pub lambda_fit: LawFit,
}

fn rms(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    (v.iter().map(|r| r * r).sum::<f64>() / v.len() as f64).sqrt()
}

/// Golden-section minimization of a unimodal function on [lo, hi].
fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Coarse scan then golden-section refinement inside the best bracket.
fn minimize_scalar<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> f64 {
    let steps = 400;
    let h = (hi - lo) / steps as f64;
    let best = (0..=steps)
        .map(|k| (k, f(lo + k as f64 * h)))
        .fold((0usize, f64::INFINITY), |acc, (k, v)| if v < acc.1 { (k, v) } else { acc })
        .0;
    let a = lo + best.saturating_sub(1) as f64 * h;
    let b = (lo + (best + 1) as f64 * h).min(hi);
    golden_section(f, a, b, 1e-13)
}

/// Fits the steady-state exponent for one (alpha, beta) against the fixed point.
pub fn solve_w(dist: &MessageDistribution, prefs: PreferenceCoeffs, grid: &FitGrid) -> Result<ExponentFit> {
    grid.validate()?;
    let mu = dist.mean();
    let pairs: Vec<(f64, f64)> = grid
        .sigma
        .iter()
        .flat_map(|&s| grid.m0.iter().map(move |&m| (s, m)))
        .collect();
    let data: Vec<(f64, f64, f64)> = pairs
        .par_iter()
        .map(|&(s, m0)| Ok((s, m0, leader_ss_fixed_point(s, m0, dist, prefs, ORACLE_TOL)?)))
        .collect::<Result<_>>()?;
    let sse = |w: f64| -> f64 {
        data.iter()
            .map(|&(s, m0, m)| {
                let z = s.powf(w);
                let r = m - (z * m0 + (1.0 - z) * mu);
                r * r
            })
            .sum()
    };
    let w = minimize_scalar(sse, 1e-3, 5.0);
    Ok(ExponentFit {
        w,
        rms_residual: (sse(w) / data.len() as f64).sqrt(),
    })
}

/// Exponent at `alpha = 1` for a given beta.
pub fn solve_w_beta(dist: &MessageDistribution, beta: f64, grid: &FitGrid) -> Result<ExponentFit> {
    if !(beta >= 1.0) {
        return Err(invalid("beta", format!("must exceed 1, got {beta}")));
    }
    solve_w(dist, PreferenceCoeffs::new(1.0, beta)?, grid)
}

/// Least-squares `kappa` in `w = 1 / (kappa (beta - 1) + 1)` for given (beta, w) points.
pub fn fit_kappa_to_exponents(points: &[(f64, f64)]) -> Result<LawFit> {
    if points.is_empty() {
        return Err(invalid("beta_grid", "no points to fit"));
    }
    let law = |k: f64, b: f64| 1.0 / (k * (b - 1.0) + 1.0);
    let sse = |k: f64| points.iter().map(|&(b, w)| (w - law(k, b)).powi(2)).sum::<f64>();
    let kappa = minimize_scalar(sse, 0.0, 10.0);
    let residuals: Vec<f64> = points.iter().map(|&(b, w)| w - law(kappa, b)).collect();
    Ok(LawFit {
        coefficient: kappa,
        points: points.to_vec(),
        rms_residual: rms(&residuals),
        per_point_residuals: residuals,
    })
}

/// Least-squares `lambda` in `w = lambda ln(alpha) + 1` for given (alpha, w) points.
/// The law passes through (1, 1), so the fit is a one-parameter regression.
pub fn fit_lambda_to_exponents(points: &[(f64, f64)]) -> Result<LawFit> {
    let sxx: f64 = points.iter().map(|(a, _)| a.ln().powi(2)).sum();
    if points.is_empty() || sxx == 0.0 {
        return Err(invalid("alpha_grid", "need at least one point with alpha != 1"));
    }
    let sxy: f64 = points.iter().map(|(a, w)| a.ln() * (w - 1.0)).sum();
    let lambda = sxy / sxx;
    let residuals: Vec<f64> = points.iter().map(|&(a, w)| w - (lambda * a.ln() + 1.0)).collect();
    Ok(LawFit {
        coefficient: lambda,
        points: points.to_vec(),
        rms_residual: rms(&residuals),
        per_point_residuals: residuals,
    })
}

/// Fits `kappa` from alpha = 1 fixed points over a beta grid in (1, 5].
pub fn fit_kappa(dist: &MessageDistribution, beta_grid: &[f64], grid: &FitGrid) -> Result<LawFit> {
    if beta_grid.len() < 5 {
        return Err(invalid("beta_grid", "need at least 5 points"));
    }
    if let Some(b) = beta_grid.iter().find(|b| !(**b > 1.0 && **b <= 5.0)) {
        return Err(invalid("beta", format!("grid value {b} outside (1, 5]")));
    }
    let points = beta_grid
        .iter()
        .map(|&b| Ok((b, solve_w_beta(dist, b, grid)?.w)))
        .collect::<Result<Vec<_>>>()?;
    fit_kappa_to_exponents(&points)
}

/// Fits `lambda` from fixed points over an alpha grid in (0.5, 1] at `beta_ref`.
///
/// Each `w_alpha` is the fitted exponent at (alpha, beta_ref) divided by the
/// exponent at (1, beta_ref), which pins the law to 1 at alpha = 1.
pub fn fit_lambda(
    dist: &MessageDistribution,
    alpha_grid: &[f64],
    beta_ref: f64,
    grid: &FitGrid,
) -> Result<LawFit> {
    if alpha_grid.len() < 5 {
        return Err(invalid("alpha_grid", "need at least 5 points"));
    }
    if let Some(a) = alpha_grid.iter().find(|a| !(**a > 0.5 && **a <= 1.0)) {
        return Err(invalid("alpha", format!("grid value {a} outside (0.5, 1]")));
    }
    if !(beta_ref > 1.0) {
        return Err(invalid("beta", format!("reference beta must exceed 1, got {beta_ref}")));
    }
    let base = solve_w(dist, PreferenceCoeffs::new(1.0, beta_ref)?, grid)?.w;
    let points = alpha_grid
        .iter()
        .map(|&a| {
            let w = if a == 1.0 {
                base
            } else {
                solve_w(dist, PreferenceCoeffs::new(a, beta_ref)?, grid)?.w
            };
            Ok((a, w / base))
        })
        .collect::<Result<Vec<_>>>()?;
    fit_lambda_to_exponents(&points)
}

/// Grids and reference values for a full constant fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPlan {
    pub beta_grid: Vec<f64>,
    pub alpha_grid: Vec<f64>,
    pub beta_ref: f64,
    pub grid: FitGrid,
}

impl Default for CalibrationPlan {
    fn default() -> Self {
        Self {
            beta_grid: vec![1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0],
            alpha_grid: vec![0.6, 0.7, 0.8, 0.9, 1.0],
            beta_ref: 2.0,
            grid: FitGrid::default(),
        }
    }
}

/// Fits both constants.
pub fn fit_constants(dist: &MessageDistribution, plan: &CalibrationPlan) -> Result<FitResult> {
    let kappa_fit = fit_kappa(dist, &plan.beta_grid, &plan.grid)?;
    let lambda_fit = fit_lambda(dist, &plan.alpha_grid, plan.beta_ref, &plan.grid)?;
    let per_point_residuals: Vec<f64> = kappa_fit
        .per_point_residuals
        .iter()
        .chain(&lambda_fit.per_point_residuals)
        .copied()
        .collect();
    Ok(FitResult {
        lambda: lambda_fit.coefficient,
        kappa: kappa_fit.coefficient,
        rms_residual: rms(&per_point_residuals),
        per_point_residuals,
        kappa_fit,
        lambda_fit,
    })
}

/// One leader's messages and the weights it was observed to give them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceObservation {
    pub m_prev: f64,
    pub messages: Vec<f64>,
    pub observed_weights: Vec<f64>,
}

impl PreferenceObservation {
    pub fn new(m_prev: f64, messages: Vec<f64>, observed_weights: Vec<f64>) -> Result<Self> {
        if !(0.0..=1.0).contains(&m_prev) {
            return Err(invalid("m_prev", format!("{m_prev} outside [0, 1]")));
        }
        if messages.is_empty() || messages.len() != observed_weights.len() {
            return Err(invalid(
                "weights",
                format!(
                    "{} weights for {} messages",
                    observed_weights.len(),
                    messages.len()
                ),
            ));
        }
        if messages.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(invalid("messages", "messages must lie in [0, 1]"));
        }
        if observed_weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(invalid("weights", "weights must be nonnegative"));
        }
        let sum: f64 = observed_weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(invalid("weights", format!("weights sum to {sum}, expected 1")));
        }
        Ok(Self {
            m_prev,
            messages,
            observed_weights,
        })
    }

    /// Has a message exactly at the leader's opinion.
    fn has_exact_match(&self) -> bool {
        self.messages.contains(&self.m_prev)
    }

    /// Some pair of messages lies at different distances from the opinion.
    fn is_informative(&self) -> bool {
        let d0 = (self.messages[0] - self.m_prev).abs();
        self.messages
            .iter()
            .any(|s| ((s - self.m_prev).abs() - d0).abs() > 1e-12)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreferenceEstimate {
    pub alpha: f64,
    pub beta: f64,
    /// Objective at the returned point.
    pub objective: f64,
    /// Objective at the best coarse-grid point.
    pub grid_objective: f64,
    pub used_observations: usize,
    pub excluded_exact_matches: usize,
}

/// Sum over observations of squared distance between predicted and observed coefficients.
pub fn preference_objective(observations: &[PreferenceObservation], prefs: PreferenceCoeffs) -> f64 {
    observations
        .iter()
        .map(|o| {
            selective_coefficients(o.m_prev, &o.messages, prefs)
                .iter()
                .zip(&o.observed_weights)
                .map(|(p, w)| (p - w) * (p - w))
                .sum::<f64>()
        })
        .sum()
}

const ALPHA_RANGE: (f64, f64) = (0.5, 1.0);
const BETA_RANGE: (f64, f64) = (1.0, 5.0);
const GRID_STEP: f64 = 0.01;

/// Nonlinear least-squares estimate of (alpha, beta).
///
/// Coarse grid over (0.5, 1] x (1, 5] at step 0.01 (plus the degenerate
/// pair), then coordinate-wise parabolic refinement that only accepts
/// improvements. Observations containing an exact opinion match are dropped.
pub fn estimate_preference_coeffs(observations: &[PreferenceObservation]) -> Result<PreferenceEstimate> {
    if observations.len() < 2 {
        return Err(Error::DegenerateData(format!(
            "need at least 2 observations, got {}",
            observations.len()
        )));
    }
    let kept: Vec<PreferenceObservation> = observations
        .iter()
        .filter(|o| !o.has_exact_match())
        .cloned()
        .collect();
    let excluded = observations.len() - kept.len();
    if !kept.iter().any(|o| o.is_informative()) {
        return Err(Error::DegenerateData(
            "every observation has its messages equidistant from the opinion".into(),
        ));
    }

    let na = ((ALPHA_RANGE.1 - ALPHA_RANGE.0) / GRID_STEP).round() as usize;
    let nb = ((BETA_RANGE.1 - BETA_RANGE.0) / GRID_STEP).round() as usize;
    let alpha_at = |i: usize| ALPHA_RANGE.0 + (i + 1) as f64 * GRID_STEP;
    let beta_at = |j: usize| BETA_RANGE.0 + (j + 1) as f64 * GRID_STEP;

    let row_best: Vec<(f64, f64, f64)> = (0..na)
        .into_par_iter()
        .map(|i| {
            let a = alpha_at(i);
            (0..nb)
                .map(|j| {
                    let b = beta_at(j);
                    let prefs = PreferenceCoeffs::new(a, b).expect("grid is admissible");
                    (preference_objective(&kept, prefs), a, b)
                })
                .fold((f64::INFINITY, a, 0.0), |acc, x| if x.0 < acc.0 { x } else { acc })
        })
        .collect();
    let degenerate = (
        preference_objective(&kept, PreferenceCoeffs::degenerate()),
        1.0,
        1.0,
    );
    let (grid_obj, mut alpha, mut beta) = row_best
        .into_iter()
        .chain(std::iter::once(degenerate))
        .fold((f64::INFINITY, 1.0, 1.0), |acc, x| if x.0 < acc.0 { x } else { acc });

    let mut best = grid_obj;
    if !(alpha == 1.0 && beta == 1.0) {
        let eval = |a: f64, b: f64| -> f64 {
            match PreferenceCoeffs::new(a, b) {
                Ok(p) => preference_objective(&kept, p),
                Err(_) => f64::INFINITY,
            }
        };
        let mut h = GRID_STEP;
        for _ in 0..12 {
            for axis in 0..2 {
                let (x, lo_lim, hi_lim) = if axis == 0 {
                    (alpha, ALPHA_RANGE.0 + 1e-9, ALPHA_RANGE.1)
                } else {
                    (beta, BETA_RANGE.0 + 1e-9, BETA_RANGE.1)
                };
                let at = |v: f64| if axis == 0 { eval(v, beta) } else { eval(alpha, v) };
                let (xl, xr) = ((x - h).max(lo_lim), (x + h).min(hi_lim));
                let (fl, fr) = (at(xl), at(xr));
                let denom = fl - 2.0 * best + fr;
                if !(denom > 0.0) || xl == x || xr == x {
                    continue;
                }
                let step = 0.5 * h * (fl - fr) / denom;
                let cand = (x + step).clamp(xl, xr);
                let fc = at(cand);
                if fc < best {
                    best = fc;
                    if axis == 0 {
                        alpha = cand;
                    } else {
                        beta = cand;
                    }
                }
            }
            h *= 0.5;
        }
    }

    Ok(PreferenceEstimate {
        alpha,
        beta,
        objective: best,
        grid_objective: grid_obj,
        used_observations: kept.len(),
        excluded_exact_matches: excluded,
    })
}

/// Observations drawn from the model itself: uniform opinion, `messages`
/// uniform messages, coefficients from `prefs`, optional Gaussian weight
/// noise (clipped at zero and renormalized).
pub fn synthetic_observations<R: Rng + ?Sized>(
    prefs: PreferenceCoeffs,
    count: usize,
    messages: usize,
    noise: f64,
    rng: &mut R,
) -> Vec<PreferenceObservation> {
    let normal = (noise > 0.0).then(|| Normal::new(0.0, noise).expect("noise scale is finite"));
    (0..count)
        .map(|_| {
            let m_prev: f64 = rng.random();
            let msgs: Vec<f64> = (0..messages).map(|_| rng.random::<f64>()).collect();
            let mut w = selective_coefficients(m_prev, &msgs, prefs);
            if let Some(normal) = &normal {
                for v in w.iter_mut() {
                    *v = (*v + normal.sample(rng)).max(0.0);
                }
                let sum: f64 = w.iter().sum();
                if sum > 0.0 {
                    w.iter_mut().for_each(|v| *v /= sum);
                } else {
                    w = vec![1.0 / messages as f64; messages];
                }
            }
            PreferenceObservation {
                m_prev,
                messages: msgs,
                observed_weights: w,
            }
        })
        .collect()
}
