//! Sources, opinion leaders and normal agents, and the per-step dynamics
//! that connect them.

mod distribution;
mod dynamics;
mod population;
mod simulate;

pub use distribution::{sample_messages, MessageDistribution};
pub use dynamics::{
    agent_step, leader_step, leader_step_recorded, message_preference, selective_coefficients,
    PreferenceWeight,
};
pub use population::{AgentPopulation, InfluenceMatrix, LeaderPopulation, PreferenceCoeffs};
pub use simulate::{simulate, simulate_with, SimulationOptions, Trajectory};

/// Tolerance used when checking that weights sum to one.
pub const STOCHASTIC_TOL: f64 = 1e-12;
