//! Two-step opinion dynamics.
//!
//! Message sources emit i.i.d. Beta-distributed messages, opinion leaders
//! weigh those messages by selective exposure and blend them with their
//! initial opinion, and normal agents blend their initial opinion, their
//! peers and the leaders. The crate provides the exact dynamics, steady-state
//! predictors, constant calibration, baseline leader models, and an
//! experiment harness with a small command-line front end.

// `!(x > 0.0)` is used deliberately: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod calibration;
pub mod error;
pub mod harness;
pub mod model;
pub mod quadrature;
pub mod rng;
pub mod steady_state;

pub use error::{Error, Result};
pub use model::{
    AgentPopulation, InfluenceMatrix, LeaderPopulation, MessageDistribution, PreferenceCoeffs,
    Trajectory,
};
pub use steady_state::{Constants, Method, SampleStats, SteadyStateResult};
