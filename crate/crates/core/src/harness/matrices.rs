//! Influence-matrix generation.

use nalgebra::DMatrix;
use rand::Rng;

use super::config::{ExperimentConfig, MatrixMode};
use crate::error::{invalid, Result};
use crate::model::InfluenceMatrix;

/// Uniform(0, 1) entries normalized row by row.
pub fn random_row_normalized<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    let mut m = DMatrix::from_fn(rows, cols, |_, _| rng.random::<f64>());
    for mut row in m.row_iter_mut() {
        let sum: f64 = row.iter().sum();
        if sum > 0.0 {
            row /= sum;
        } else {
            row.fill(1.0 / cols as f64);
        }
    }
    m
}

/// `(W, U)` for `q` agents and `p` leaders. Explicit matrices come from the
/// config instead, see [`matrices_for`].
pub fn generate_matrices<R: Rng + ?Sized>(
    mode: MatrixMode,
    q: usize,
    p: usize,
    rng: &mut R,
) -> Result<(InfluenceMatrix, InfluenceMatrix)> {
    match mode {
        MatrixMode::Uniform => Ok((InfluenceMatrix::uniform(q, q), InfluenceMatrix::uniform(q, p))),
        MatrixMode::RandomRowNormalized => {
            let w = random_row_normalized(q, q, rng);
            let u = random_row_normalized(q, p, rng);
            Ok((InfluenceMatrix::dense("W", w)?, InfluenceMatrix::dense("U", u)?))
        }
        MatrixMode::Explicit => Err(invalid(
            "matrix_mode",
            "explicit matrices are read from the config, not generated",
        )),
    }
}

fn from_rows(name: &str, rows: &[Vec<f64>]) -> Result<InfluenceMatrix> {
    let cols = rows.first().map_or(0, Vec::len);
    InfluenceMatrix::dense(name, DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

/// Matrices of a validated config.
pub fn matrices_for<R: Rng + ?Sized>(cfg: &ExperimentConfig, rng: &mut R) -> Result<(InfluenceMatrix, InfluenceMatrix)> {
    match (cfg.matrix_mode, &cfg.w, &cfg.u) {
        (MatrixMode::Explicit, Some(w), Some(u)) => Ok((from_rows("w", w)?, from_rows("u", u)?)),
        (MatrixMode::Explicit, None, _) => Err(invalid("w", "explicit mode needs `w`")),
        (MatrixMode::Explicit, _, None) => Err(invalid("u", "explicit mode needs `u`")),
        (mode, _, _) => generate_matrices(mode, cfg.q, cfg.p, rng),
    }
}
