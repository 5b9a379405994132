use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{AgentPopulation, LeaderPopulation, PreferenceCoeffs};
use crate::error::{check_len, Result};

/// Unnormalized message preference. `Infinite` only for an exact opinion match with alpha < 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PreferenceWeight {
    Finite(f64),
    Infinite,
}

impl PreferenceWeight {
    pub fn is_infinite(&self) -> bool {
        matches!(self, PreferenceWeight::Infinite)
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            PreferenceWeight::Finite(v) => Some(*v),
            PreferenceWeight::Infinite => None,
        }
    }
}

/// `(d^2)^(alpha-1) * (1-d^2)^(beta-1)` with `d = m_prev - s`.
pub fn message_preference(m_prev: f64, s: f64, prefs: PreferenceCoeffs) -> PreferenceWeight {
    let d = m_prev - s;
    let alpha = prefs.alpha();
    let beta = prefs.beta();
    if d == 0.0 && alpha < 1.0 {
        return PreferenceWeight::Infinite;
    }
    let d2 = d * d;
    let near = if alpha == 1.0 {
        1.0
    } else if d2 == 0.0 {
        // |d| below sqrt(MIN_POSITIVE) but nonzero
        f64::MAX
    } else {
        d2.powf(alpha - 1.0)
    };
    let rest = (1.0 - d2).max(0.0);
    let far = if beta == 1.0 {
        1.0
    } else if beta == 2.0 {
        rest
    } else {
        rest.powf(beta - 1.0)
    };
    let v = near * far;
    PreferenceWeight::Finite(if v.is_finite() { v } else { f64::MAX })
}

/// Running sums for the selective-coefficient weighted message average.
#[derive(Default)]
struct WeightedMessages {
    num: f64,
    den: f64,
    exact: usize,
    exact_sum: f64,
    plain_sum: f64,
    count: usize,
}

impl WeightedMessages {
    fn push(&mut self, s: f64, w: PreferenceWeight) {
        self.plain_sum += s;
        self.count += 1;
        match w {
            PreferenceWeight::Infinite => {
                self.exact += 1;
                self.exact_sum += s;
            }
            PreferenceWeight::Finite(w) => {
                self.num += w * s;
                self.den += w;
            }
        }
    }

    /// `sum_j gamma_j s_j`.
    fn average(&self) -> f64 {
        if self.exact > 0 {
            self.exact_sum / self.exact as f64
        } else if self.den > 0.0 {
            (self.num / self.den).clamp(0.0, 1.0)
        } else {
            self.plain_sum / self.count as f64
        }
    }
}

/// Normalized message preferences for one leader.
///
/// Exact matches (alpha < 1) share all the weight equally; an all-zero
/// preference vector falls back to uniform weights.
pub fn selective_coefficients(m_prev: f64, messages: &[f64], prefs: PreferenceCoeffs) -> Vec<f64> {
    let n = messages.len();
    if n == 0 {
        return Vec::new();
    }
    let weights: Vec<PreferenceWeight> = messages
        .iter()
        .map(|&s| message_preference(m_prev, s, prefs))
        .collect();
    let exact = weights.iter().filter(|w| w.is_infinite()).count();
    if exact > 0 {
        let share = 1.0 / exact as f64;
        return weights
            .iter()
            .map(|w| if w.is_infinite() { share } else { 0.0 })
            .collect();
    }
    let total: f64 = weights.iter().filter_map(|w| w.finite()).sum();
    if total > 0.0 {
        weights
            .iter()
            .map(|w| w.finite().unwrap_or(0.0) / total)
            .collect()
    } else {
        vec![1.0 / n as f64; n]
    }
}

fn leader_message_average(m_prev: f64, messages: &[f64], prefs: PreferenceCoeffs) -> f64 {
    if prefs.is_degenerate() {
        return messages.iter().sum::<f64>() / messages.len() as f64;
    }
    let mut acc = WeightedMessages::default();
    for &s in messages {
        acc.push(s, message_preference(m_prev, s, prefs));
    }
    acc.average()
}

fn check_leader_inputs(leaders: &LeaderPopulation, m_prev: &[f64], messages: &[f64]) -> Result<()> {
    check_len("leader_step previous opinions", leaders.len(), m_prev.len())?;
    if messages.is_empty() {
        return Err(crate::error::invalid("n", "at least one message is required"));
    }
    Ok(())
}

/// One synchronous leader update. Leaders read only the messages and their own past opinion.
pub fn leader_step(
    leaders: &LeaderPopulation,
    m_prev: &[f64],
    messages: &[f64],
) -> Result<Vec<f64>> {
    check_leader_inputs(leaders, m_prev, messages)?;
    let prefs = leaders.prefs();
    let update = |i: usize| {
        let sigma = leaders.sigma()[i];
        let avg = leader_message_average(m_prev[i], messages, prefs);
        (sigma * leaders.initial()[i] + (1.0 - sigma) * avg).clamp(0.0, 1.0)
    };
    let work = leaders.len() * messages.len();
    let next = if work >= 1 << 16 {
        (0..leaders.len()).into_par_iter().map(update).collect()
    } else {
        (0..leaders.len()).map(update).collect()
    };
    Ok(next)
}

/// Leader update that also returns the p x n selective-coefficient matrix.
pub fn leader_step_recorded(
    leaders: &LeaderPopulation,
    m_prev: &[f64],
    messages: &[f64],
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    check_leader_inputs(leaders, m_prev, messages)?;
    let prefs = leaders.prefs();
    let p = leaders.len();
    let n = messages.len();
    let mut gamma = DMatrix::zeros(p, n);
    let mut next = Vec::with_capacity(p);
    for i in 0..p {
        let row = selective_coefficients(m_prev[i], messages, prefs);
        let avg: f64 = row.iter().zip(messages).map(|(g, s)| g * s).sum();
        let sigma = leaders.sigma()[i];
        next.push((sigma * leaders.initial()[i] + (1.0 - sigma) * avg).clamp(0.0, 1.0));
        for (j, g) in row.into_iter().enumerate() {
            gamma[(i, j)] = g;
        }
    }
    Ok((next, gamma))
}

/// One synchronous agent update: stubbornness toward x0, peers at t-1, leaders at t.
pub fn agent_step(agents: &AgentPopulation, x_prev: &[f64], m_t: &[f64]) -> Result<Vec<f64>> {
    check_len("agent_step previous opinions", agents.len(), x_prev.len())?;
    check_len("agent_step leader opinions", agents.leader_count(), m_t.len())?;
    let peer = agents.w().mul_vec(x_prev);
    let lead = agents.u().mul_vec(m_t);
    Ok((0..agents.len())
        .map(|i| {
            (agents.rho()[i] * agents.initial()[i]
                + agents.pi()[i] * peer[i]
                + agents.theta()[i] * lead[i])
                .clamp(0.0, 1.0)
        })
        .collect())
}
