use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::STOCHASTIC_TOL;
use crate::error::{check_len, invalid, Result};

/// Preference coefficients (alpha, beta) of the message-preference kernel.
///
/// Admissible pairs are `alpha in (0.5, 1]` with `beta > 1`, plus the
/// degenerate pair `alpha = beta = 1` where every message is weighted equally.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreferenceCoeffs {
    alpha: f64,
    beta: f64,
}

impl PreferenceCoeffs {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(invalid("alpha", "preference coefficients must be finite"));
        }
        if alpha == 1.0 && beta == 1.0 {
            return Ok(Self { alpha, beta });
        }
        if !(alpha > 0.5 && alpha <= 1.0) {
            return Err(invalid(
                "alpha",
                format!("must lie in (0.5, 1], got {alpha}"),
            ));
        }
        if beta <= 1.0 {
            return Err(invalid(
                "beta",
                format!("must exceed 1 unless alpha = beta = 1, got {beta}"),
            ));
        }
        Ok(Self { alpha, beta })
    }

    pub fn degenerate() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn is_degenerate(&self) -> bool {
        self.alpha == 1.0 && self.beta == 1.0
    }
}

/// Row-stochastic influence matrix. The uniform variant stores no entries.
#[derive(Debug, Clone, PartialEq)]
pub enum InfluenceMatrix {
    /// Every entry equals `1 / cols`.
    Uniform { rows: usize, cols: usize },
    Dense(DMatrix<f64>),
}

impl InfluenceMatrix {
    pub fn uniform(rows: usize, cols: usize) -> Self {
        InfluenceMatrix::Uniform { rows, cols }
    }

    /// Wraps a dense matrix after checking entries lie in [0, 1] and rows sum to one.
    pub fn dense(name: &str, m: DMatrix<f64>) -> Result<Self> {
        for (i, row) in m.row_iter().enumerate() {
            if row.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(invalid(name, format!("row {i} has an entry outside [0, 1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(invalid(name, format!("row {i} sums to {sum}, expected 1")));
            }
        }
        Ok(InfluenceMatrix::Dense(m))
    }

    pub fn rows(&self) -> usize {
        match self {
            InfluenceMatrix::Uniform { rows, .. } => *rows,
            InfluenceMatrix::Dense(m) => m.nrows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            InfluenceMatrix::Uniform { cols, .. } => *cols,
            InfluenceMatrix::Dense(m) => m.ncols(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            InfluenceMatrix::Uniform { cols, .. } => 1.0 / *cols as f64,
            InfluenceMatrix::Dense(m) => m[(i, j)],
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols());
        match self {
            InfluenceMatrix::Uniform { rows, .. } => {
                let mean = v.iter().sum::<f64>() / v.len() as f64;
                vec![mean; *rows]
            }
            InfluenceMatrix::Dense(m) => m
                .row_iter()
                .map(|row| row.iter().zip(v).map(|(w, x)| w * x).sum())
                .collect(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            InfluenceMatrix::Uniform { rows, cols } => {
                DMatrix::from_element(*rows, *cols, 1.0 / *cols as f64)
            }
            InfluenceMatrix::Dense(m) => m.clone(),
        }
    }
}

fn check_unit_interval(name: &str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !(0.0..=1.0).contains(v)) {
        Some(i) => Err(invalid(
            name,
            format!("entry {i} = {} lies outside [0, 1]", values[i]),
        )),
        None => Ok(()),
    }
}

/// Opinion leaders: initial opinions, stubbornness diagonal, preference coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaderPopulation {
    initial: Vec<f64>,
    sigma: Vec<f64>,
    prefs: PreferenceCoeffs,
}

impl LeaderPopulation {
    pub fn new(initial: Vec<f64>, sigma: Vec<f64>, prefs: PreferenceCoeffs) -> Result<Self> {
        if initial.is_empty() {
            return Err(invalid("p", "at least one opinion leader is required"));
        }
        check_len("leader stubbornness", initial.len(), sigma.len())?;
        check_unit_interval("m0", &initial)?;
        check_unit_interval("sigma", &sigma)?;
        Ok(Self {
            initial,
            sigma,
            prefs,
        })
    }

    pub fn len(&self) -> usize {
        self.initial.len()
    }

    pub fn is_empty(&self) -> bool {
        self.initial.is_empty()
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn prefs(&self) -> PreferenceCoeffs {
        self.prefs
    }

    pub fn with_prefs(&self, prefs: PreferenceCoeffs) -> Self {
        Self {
            prefs,
            ..self.clone()
        }
    }
}

/// Normal agents: initial opinions, the (rho, pi, theta) diagonals and the
/// agent-agent (W) and agent-leader (U) influence matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentPopulation {
    initial: Vec<f64>,
    rho: Vec<f64>,
    pi: Vec<f64>,
    theta: Vec<f64>,
    w: InfluenceMatrix,
    u: InfluenceMatrix,
}

impl AgentPopulation {
    pub fn new(
        initial: Vec<f64>,
        rho: Vec<f64>,
        pi: Vec<f64>,
        theta: Vec<f64>,
        w: InfluenceMatrix,
        u: InfluenceMatrix,
    ) -> Result<Self> {
        let q = initial.len();
        if q == 0 {
            return Err(invalid("q", "at least one normal agent is required"));
        }
        check_len("agent rho", q, rho.len())?;
        check_len("agent pi", q, pi.len())?;
        check_len("agent theta", q, theta.len())?;
        check_len("W rows", q, w.rows())?;
        check_len("W cols", q, w.cols())?;
        check_len("U rows", q, u.rows())?;
        check_unit_interval("x0", &initial)?;
        check_unit_interval("rho", &rho)?;
        check_unit_interval("pi", &pi)?;
        check_unit_interval("theta", &theta)?;
        for i in 0..q {
            let sum = rho[i] + pi[i] + theta[i];
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(invalid(
                    "rho",
                    format!("rho + pi + theta = {sum} for agent {i}, expected 1"),
                ));
            }
        }
        Ok(Self {
            initial,
            rho,
            pi,
            theta,
            w,
            u,
        })
    }

    pub fn len(&self) -> usize {
        self.initial.len()
    }

    pub fn is_empty(&self) -> bool {
        self.initial.is_empty()
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn w(&self) -> &InfluenceMatrix {
        &self.w
    }

    pub fn u(&self) -> &InfluenceMatrix {
        &self.u
    }

    /// Number of leaders this population listens to.
    pub fn leader_count(&self) -> usize {
        self.u.cols()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn admissible_region() {
        assert!(PreferenceCoeffs::new(1.0, 1.0).is_ok());
        assert!(PreferenceCoeffs::new(0.51, 1.01).is_ok());
        assert!(PreferenceCoeffs::new(1.0, 7.0).is_ok());
        assert!(PreferenceCoeffs::new(0.5, 2.0).is_err());
        assert!(PreferenceCoeffs::new(1.1, 2.0).is_err());
        assert!(PreferenceCoeffs::new(0.8, 1.0).is_err());
        assert!(PreferenceCoeffs::new(1.0, 0.9).is_err());
    }

    #[test]
    fn dense_matrix_validation() {
        let ok = DMatrix::from_row_slice(2, 2, &[0.25, 0.75, 1.0, 0.0]);
        assert!(InfluenceMatrix::dense("W", ok).is_ok());
        let bad = DMatrix::from_row_slice(2, 2, &[0.5, 0.6, 1.0, 0.0]);
        let err = InfluenceMatrix::dense("W", bad).unwrap_err().to_string();
        assert!(err.contains("`W`"), "{err}");
    }

    #[test]
    fn uniform_matrix_mul() {
        let u = InfluenceMatrix::uniform(3, 2);
        assert_eq!(u.mul_vec(&[0.2, 0.6]), vec![0.4; 3]);
        assert_eq!(u.to_dense(), DMatrix::from_element(3, 2, 0.5));
    }

    #[test]
    fn agent_weights_must_sum_to_one() {
        let err = AgentPopulation::new(
            vec![0.5],
            vec![0.5],
            vec![0.5],
            vec![0.5],
            InfluenceMatrix::uniform(1, 1),
            InfluenceMatrix::uniform(1, 1),
        )
        .unwrap_err();
        assert!(err.to_string().contains("rho"));
    }

    #[test]
    fn leader_sigma_range() {
        let err = LeaderPopulation::new(vec![0.5], vec![1.5], PreferenceCoeffs::degenerate())
            .unwrap_err();
        assert!(err.to_string().contains("sigma"));
    }
}
