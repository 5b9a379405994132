//! Experiment configuration. Every field is optional in the JSON file;
//! omitted fields take the default parameter table (n = 10^4 sources,
//! p = q = 10^3, T = 100, sigma = 1/2, rho = pi = theta = 1/3, alpha = 1,
//! beta = 2, every Beta shape 1).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{MessageDistribution, PreferenceCoeffs, STOCHASTIC_TOL};
use crate::steady_state::Constants;

/// Marker for per-entity values drawn at random.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RandomKeyword {
    Random,
}

/// A diagonal parameter: one shared value, one value per entity, or
/// `"random"`. For sigma, random means uniform on [0, 1]; for the agent
/// weights (rho, pi, theta), all three must be random together and each
/// agent draws its triple from the flat Dirichlet distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerEntity {
    Scalar(f64),
    Vector(Vec<f64>),
    Random(RandomKeyword),
}

impl PerEntity {
    pub fn random() -> Self {
        PerEntity::Random(RandomKeyword::Random)
    }

    pub fn is_random(&self) -> bool {
        matches!(self, PerEntity::Random(_))
    }

    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            PerEntity::Scalar(x) => Some(*x),
            _ => None,
        }
    }

    fn values(&self) -> &[f64] {
        match self {
            PerEntity::Scalar(x) => std::slice::from_ref(x),
            PerEntity::Vector(v) => v,
            PerEntity::Random(_) => &[],
        }
    }

    /// Value for entity `i` (not valid for `Random`).
    pub fn at(&self, i: usize) -> f64 {
        match self {
            PerEntity::Scalar(x) => *x,
            PerEntity::Vector(v) => v[i],
            PerEntity::Random(_) => f64::NAN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixMode {
    /// `W = E/q`, `U = E/p`.
    #[default]
    Uniform,
    /// Uniform(0, 1) entries, normalized row by row.
    RandomRowNormalized,
    /// Matrices given inline as `w` and `u`.
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Message sources per step.
    pub n: usize,
    /// Opinion leaders.
    pub p: usize,
    /// Normal agents.
    pub q: usize,
    /// Steps.
    pub t: usize,
    /// Message distribution shapes.
    pub a: f64,
    pub b: f64,
    /// Leader initial-opinion shapes.
    pub a_m: f64,
    pub b_m: f64,
    /// Agent initial-opinion shapes.
    pub a_x: f64,
    pub b_x: f64,
    pub sigma: PerEntity,
    pub rho: PerEntity,
    pub pi: PerEntity,
    pub theta: PerEntity,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub matrix_mode: MatrixMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<Vec<f64>>>,
    /// Trailing steps averaged into the simulated steady state.
    pub tail_window: usize,
    pub master_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let c = Constants::default();
        Self {
            n: 10_000,
            p: 1_000,
            q: 1_000,
            t: 100,
            a: 1.0,
            b: 1.0,
            a_m: 1.0,
            b_m: 1.0,
            a_x: 1.0,
            b_x: 1.0,
            sigma: PerEntity::Scalar(0.5),
            rho: PerEntity::Scalar(1.0 / 3.0),
            pi: PerEntity::Scalar(1.0 / 3.0),
            theta: PerEntity::Scalar(1.0 / 3.0),
            alpha: 1.0,
            beta: 2.0,
            lambda: c.lambda,
            kappa: c.kappa,
            matrix_mode: MatrixMode::Uniform,
            w: None,
            u: None,
            tail_window: 20,
            master_seed: 0,
        }
    }
}

impl ExperimentConfig {
    /// Desk-scale variant of the defaults: n = 10^3, p = q = 200.
    pub fn desk() -> Self {
        Self {
            n: 1_000,
            p: 200,
            q: 200,
            ..Self::default()
        }
    }

    pub fn message_distribution(&self) -> Result<MessageDistribution> {
        MessageDistribution::new(self.a, self.b)
    }

    pub fn prefs(&self) -> Result<PreferenceCoeffs> {
        PreferenceCoeffs::new(self.alpha, self.beta)
    }

    pub fn constants(&self) -> Constants {
        Constants {
            lambda: self.lambda,
            kappa: self.kappa,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("n", self.n), ("p", self.p), ("q", self.q), ("t", self.t)] {
            if v == 0 {
                return Err(invalid(name, "must be at least 1"));
            }
        }
        for (name, v) in [
            ("a", self.a),
            ("b", self.b),
            ("a_m", self.a_m),
            ("b_m", self.b_m),
            ("a_x", self.a_x),
            ("b_x", self.b_x),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("Beta shape must be positive, got {v}")));
            }
        }
        self.prefs()?;
        for (name, v) in [("lambda", self.lambda), ("kappa", self.kappa)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        if self.tail_window == 0 || self.tail_window > self.t {
            return Err(invalid("tail_window", "must lie in 1..=t"));
        }

        check_entity("sigma", &self.sigma, self.p)?;
        let weights = [("rho", &self.rho), ("pi", &self.pi), ("theta", &self.theta)];
        let random = weights.iter().filter(|(_, v)| v.is_random()).count();
        if random != 0 && random != 3 {
            let (name, _) = weights.iter().find(|(_, v)| !v.is_random()).unwrap();
            return Err(invalid(
                *name,
                "rho, pi and theta must all be \"random\" or all be given",
            ));
        }
        if random == 0 {
            for (name, v) in weights {
                check_entity(name, v, self.q)?;
            }
            for i in 0..self.q {
                let sum = self.rho.at(i) + self.pi.at(i) + self.theta.at(i);
                if (sum - 1.0).abs() > STOCHASTIC_TOL {
                    return Err(invalid(
                        "rho",
                        format!("rho + pi + theta = {sum} for agent {i}, expected 1"),
                    ));
                }
            }
        }

        match self.matrix_mode {
            MatrixMode::Explicit => {
                let w = self.w.as_ref().ok_or_else(|| invalid("w", "explicit mode needs `w`"))?;
                let u = self.u.as_ref().ok_or_else(|| invalid("u", "explicit mode needs `u`"))?;
                check_matrix("w", w, self.q, self.q)?;
                check_matrix("u", u, self.q, self.p)?;
            }
            _ => {
                if self.w.is_some() {
                    return Err(invalid("w", "only allowed with matrix_mode \"explicit\""));
                }
                if self.u.is_some() {
                    return Err(invalid("u", "only allowed with matrix_mode \"explicit\""));
                }
            }
        }
        Ok(())
    }
}

fn check_entity(name: &str, v: &PerEntity, len: usize) -> Result<()> {
    if let PerEntity::Vector(xs) = v {
        if xs.len() != len {
            return Err(invalid(name, format!("has {} entries, expected {len}", xs.len())));
        }
    }
    if let Some(x) = v.values().iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(invalid(name, format!("{x} is outside [0, 1]")));
    }
    Ok(())
}

fn check_matrix(name: &str, m: &[Vec<f64>], rows: usize, cols: usize) -> Result<()> {
    if m.len() != rows {
        return Err(invalid(name, format!("has {} rows, expected {rows}", m.len())));
    }
    for (i, r) in m.iter().enumerate() {
        if r.len() != cols {
            return Err(invalid(name, format!("row {i} has {} entries, expected {cols}", r.len())));
        }
        if r.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(invalid(name, format!("row {i} has an entry outside [0, 1]")));
        }
        let sum: f64 = r.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(invalid(name, format!("row {i} sums to {sum}, expected 1")));
        }
    }
    Ok(())
}

/// Parses and validates a JSON config.
pub fn parse_config(text: &str, origin: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_string(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, &path.display().to_string())
}

pub fn save_config(cfg: &ExperimentConfig, path: &Path) -> Result<()> {
    super::output::save_json(cfg, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = parse_config("{}", "inline").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!((cfg.n, cfg.p, cfg.q, cfg.t), (10_000, 1_000, 1_000, 100));
        assert_eq!(cfg.sigma, PerEntity::Scalar(0.5));
        assert_eq!(cfg.rho, PerEntity::Scalar(1.0 / 3.0));
        assert_eq!((cfg.alpha, cfg.beta), (1.0, 2.0));
    }

    #[test]
    fn out_of_range_sigma_named() {
        let err = parse_config(r#"{"sigma": 1.5}"#, "inline").unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { ref field, .. } if field == "sigma"));
    }

    #[test]
    fn unknown_key_named() {
        let err = parse_config(r#"{"sigmaa": 0.5}"#, "inline").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("sigmaa"), "{msg}");
        assert!(msg.contains("line 1"), "{msg}");
    }

    #[test]
    fn per_entity_forms() {
        let cfg = parse_config(
            r#"{"p": 2, "q": 2, "sigma": [0.1, 0.9], "rho": "random", "pi": "random", "theta": "random"}"#,
            "inline",
        )
        .unwrap();
        assert_eq!(cfg.sigma, PerEntity::Vector(vec![0.1, 0.9]));
        assert!(cfg.rho.is_random());
        let err = parse_config(r#"{"rho": "random"}"#, "inline").unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { ref field, .. } if field == "pi"));
    }

    #[test]
    fn inadmissible_beta_named() {
        let err = parse_config(r#"{"beta": 0.9}"#, "inline").unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { ref field, .. } if field == "beta"));
    }
}
