use nalgebra::DMatrix;
use serde::Serialize;

use super::dynamics::{agent_step, leader_step, leader_step_recorded};
use super::{AgentPopulation, LeaderPopulation, MessageDistribution};
use crate::error::{check_len, invalid, Result};
use crate::rng::{stream, Stream};

/// Opinion history of one run. Index 0 holds the initial opinions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub leader_opinions: Vec<Vec<f64>>,
    pub agent_opinions: Vec<Vec<f64>>,
    #[serde(skip)]
    pub selective_coeffs: Option<Vec<DMatrix<f64>>>,
    pub seed: u64,
}

impl Trajectory {
    /// Number of steps T (the trajectory holds T + 1 snapshots).
    pub fn steps(&self) -> usize {
        self.leader_opinions.len() - 1
    }

    pub fn final_leaders(&self) -> &[f64] {
        self.leader_opinions.last().expect("trajectory is never empty")
    }

    pub fn final_agents(&self) -> &[f64] {
        self.agent_opinions.last().expect("trajectory is never empty")
    }

    /// Per-entity mean over the last `window` snapshots (never reaching back to t = 0).
    pub fn leader_tail_mean(&self, window: usize) -> Vec<f64> {
        tail_mean(&self.leader_opinions, window)
    }

    pub fn agent_tail_mean(&self, window: usize) -> Vec<f64> {
        tail_mean(&self.agent_opinions, window)
    }
}

fn tail_mean(history: &[Vec<f64>], window: usize) -> Vec<f64> {
    let steps = history.len() - 1;
    let window = window.clamp(1, steps.max(1));
    let start = history.len() - window;
    let width = history[0].len();
    let mut acc = vec![0.0; width];
    for snap in &history[start..] {
        for (a, v) in acc.iter_mut().zip(snap) {
            *a += v;
        }
    }
    acc.iter_mut().for_each(|a| *a /= window as f64);
    acc
}

#[derive(Debug, Clone, Copy)]
pub struct SimulationOptions {
    /// Number of message sources.
    pub sources: usize,
    pub steps: usize,
    pub record_selective: bool,
}

/// Runs the two-step dynamics for `steps` steps with `sources` messages per step.
///
/// Each step draws fresh messages from the run's message stream, updates
/// the leaders, then feeds the new leader opinions to the agents.
pub fn simulate(
    dist: &MessageDistribution,
    leaders: &LeaderPopulation,
    agents: &AgentPopulation,
    sources: usize,
    steps: usize,
    seed: u64,
) -> Result<Trajectory> {
    simulate_with(
        dist,
        leaders,
        agents,
        SimulationOptions {
            sources,
            steps,
            record_selective: false,
        },
        seed,
    )
}

pub fn simulate_with(
    dist: &MessageDistribution,
    leaders: &LeaderPopulation,
    agents: &AgentPopulation,
    opts: SimulationOptions,
    seed: u64,
) -> Result<Trajectory> {
    if opts.steps == 0 {
        return Err(invalid("t", "at least one step is required"));
    }
    if opts.sources == 0 {
        return Err(invalid("n", "at least one message source is required"));
    }
    check_len("leader count seen by agents", leaders.len(), agents.leader_count())?;

    let mut rng = stream(seed, Stream::Messages);
    let mut leader_hist = Vec::with_capacity(opts.steps + 1);
    let mut agent_hist = Vec::with_capacity(opts.steps + 1);
    let mut coeffs = opts.record_selective.then(Vec::new);
    leader_hist.push(leaders.initial().to_vec());
    agent_hist.push(agents.initial().to_vec());

    for t in 1..=opts.steps {
        let messages = dist.sample(opts.sources, &mut rng);
        let m_prev = &leader_hist[t - 1];
        let m_t = match coeffs.as_mut() {
            Some(store) => {
                let (m_t, gamma) = leader_step_recorded(leaders, m_prev, &messages)?;
                store.push(gamma);
                m_t
            }
            None => leader_step(leaders, m_prev, &messages)?,
        };
        let x_t = agent_step(agents, &agent_hist[t - 1], &m_t)?;
        leader_hist.push(m_t);
        agent_hist.push(x_t);
    }

    Ok(Trajectory {
        leader_opinions: leader_hist,
        agent_opinions: agent_hist,
        selective_coeffs: coeffs,
        seed,
    })
}
