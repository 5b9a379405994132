//! Experiment orchestration: building populations from a config, the
//! simulation-vs-prediction correlation study, and one-parameter sweeps.
//!
//! Run `r` of any experiment uses seed `derive_seed(master_seed, r)`, so the
//! same replicate sees the same initial opinions and message stream at every
//! point of a sweep.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, PerEntity};
use super::matrices::matrices_for;
use super::output::{Cell, Table};
use crate::error::{invalid, Error, Result};
use crate::model::{simulate, AgentPopulation, LeaderPopulation, MessageDistribution, Trajectory};
use crate::rng::{derive_seed, stream, Stream};
use crate::steady_state::{predict, sample_stats, Method, SampleStats, SteadyStateResult};

/// Everything needed to run one replicate.
#[derive(Debug, Clone)]
pub struct Instance {
    pub dist: MessageDistribution,
    pub leaders: LeaderPopulation,
    pub agents: AgentPopulation,
    pub seed: u64,
}

fn beta_draws<R: Rng + ?Sized>(a: f64, b: f64, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    MessageDistribution::new(a, b).map(|d| d.sample(n, rng))
}

/// Draws initial opinions, random diagonals and matrices for one run.
///
/// Draw order is fixed (leader opinions, agent opinions, sigma, agent
/// weights, matrices) so that changing a scalar parameter never shifts the
/// random draws of the others.
pub fn build_instance(cfg: &ExperimentConfig, seed: u64) -> Result<Instance> {
    cfg.validate()?;
    let mut rng = stream(seed, Stream::Population);
    let m0 = beta_draws(cfg.a_m, cfg.b_m, cfg.p, &mut rng)?;
    let x0 = beta_draws(cfg.a_x, cfg.b_x, cfg.q, &mut rng)?;

    let sigma = match &cfg.sigma {
        PerEntity::Random(_) => (0..cfg.p).map(|_| rng.random::<f64>()).collect(),
        s => (0..cfg.p).map(|i| s.at(i)).collect(),
    };

    let (mut rho, mut pi, mut theta) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..cfg.q {
        if cfg.rho.is_random() {
            let e: [f64; 3] = [Exp1.sample(&mut rng), Exp1.sample(&mut rng), Exp1.sample(&mut rng)];
            let s = e[0] + e[1] + e[2];
            rho.push(e[0] / s);
            pi.push(e[1] / s);
            theta.push((1.0 - e[0] / s - e[1] / s).max(0.0));
        } else {
            rho.push(cfg.rho.at(i));
            pi.push(cfg.pi.at(i));
            theta.push(cfg.theta.at(i));
        }
    }

    let (w, u) = matrices_for(cfg, &mut rng)?;
    Ok(Instance {
        dist: cfg.message_distribution()?,
        leaders: LeaderPopulation::new(m0, sigma, cfg.prefs()?)?,
        agents: AgentPopulation::new(x0, rho, pi, theta, w, u)?,
        seed,
    })
}

impl Instance {
    pub fn simulate(&self, cfg: &ExperimentConfig) -> Result<Trajectory> {
        simulate(&self.dist, &self.leaders, &self.agents, cfg.n, cfg.t, self.seed)
    }

    pub fn predict(&self, cfg: &ExperimentConfig, method: Method) -> Result<SteadyStateResult> {
        predict(&self.dist, &self.leaders, &self.agents, method, cfg.constants())
    }
}

/// Simulated steady state: the average over the last `tail_window` steps.
pub fn simulated_steady_state(cfg: &ExperimentConfig, traj: &Trajectory) -> SteadyStateResult {
    SteadyStateResult {
        leader_ss: traj.leader_tail_mean(cfg.tail_window),
        agent_ss: traj.agent_tail_mean(cfg.tail_window),
        method: Method::Simulation,
        constants_used: None,
    }
}

/// Pearson correlation; `None` when either input has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    // relative threshold: constant vectors leave only rounding noise
    let scale = (mx * mx + my * my).max(1e-300) * n;
    if sxx <= 1e-24 * scale || syy <= 1e-24 * scale {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// One replicate of the correlation study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRun {
    pub n: usize,
    pub replicate: usize,
    pub r_leaders: Option<f64>,
    pub r_agents: Option<f64>,
    pub r_pooled: Option<f64>,
    /// Largest absolute gap between simulated and predicted opinions.
    pub max_abs_error: f64,
}

/// Replicate-averaged correlations for one `n`. Averages skip undefined
/// replicates; `undefined_*` count them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub n: usize,
    pub replicates: usize,
    pub r_leaders: Option<f64>,
    pub r_agents: Option<f64>,
    pub r_pooled: Option<f64>,
    pub undefined_leaders: usize,
    pub undefined_agents: usize,
    pub max_abs_error: f64,
}

fn mean_defined(v: impl Iterator<Item = Option<f64>>) -> (Option<f64>, usize) {
    let (mut sum, mut k, mut missing) = (0.0, 0usize, 0usize);
    for x in v {
        match x {
            Some(x) => {
                sum += x;
                k += 1;
            }
            None => missing += 1,
        }
    }
    ((k > 0).then(|| sum / k as f64), missing)
}

/// Correlation between simulated and analytically predicted steady states,
/// for each number of message sources in `n_values`.
pub fn run_correlation_experiment(
    cfg: &ExperimentConfig,
    n_values: &[usize],
    replicates: usize,
) -> Result<(Vec<CorrelationRow>, Vec<CorrelationRun>)> {
    cfg.validate()?;
    if replicates == 0 {
        return Err(invalid("replicates", "must be at least 1"));
    }
    if let Some(n) = n_values.iter().find(|&&n| n < 2) {
        return Err(invalid("n", format!("correlation study needs n >= 2, got {n}")));
    }
    let jobs: Vec<(usize, usize)> = n_values
        .iter()
        .flat_map(|&n| (0..replicates).map(move |r| (n, r)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(n, rep)| {
            let cfg = ExperimentConfig { n, ..cfg.clone() };
            let inst = build_instance(&cfg, derive_seed(cfg.master_seed, rep as u64))?;
            let sim = simulated_steady_state(&cfg, &inst.simulate(&cfg)?);
            let pred = inst.predict(&cfg, Method::Analytic)?;
            let pooled_sim: Vec<f64> = sim.leader_ss.iter().chain(&sim.agent_ss).copied().collect();
            let pooled_pred: Vec<f64> = pred.leader_ss.iter().chain(&pred.agent_ss).copied().collect();
            let max_abs_error = pooled_sim
                .iter()
                .zip(&pooled_pred)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            Ok(CorrelationRun {
                n,
                replicate: rep,
                r_leaders: pearson(&sim.leader_ss, &pred.leader_ss),
                r_agents: pearson(&sim.agent_ss, &pred.agent_ss),
                r_pooled: pearson(&pooled_sim, &pooled_pred),
                max_abs_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let rows = runs
        .chunks(replicates)
        .map(|chunk| {
            let (r_leaders, undefined_leaders) = mean_defined(chunk.iter().map(|r| r.r_leaders));
            let (r_agents, undefined_agents) = mean_defined(chunk.iter().map(|r| r.r_agents));
            let (r_pooled, _) = mean_defined(chunk.iter().map(|r| r.r_pooled));
            CorrelationRow {
                n: chunk[0].n,
                replicates,
                r_leaders,
                r_agents,
                r_pooled,
                undefined_leaders,
                undefined_agents,
                max_abs_error: chunk.iter().map(|r| r.max_abs_error).fold(0.0, f64::max),
            }
        })
        .collect();
    Ok((rows, runs))
}

pub fn correlation_table(rows: &[CorrelationRow]) -> Table {
    let mut t = Table::new([
        "n",
        "replicates",
        "r_leaders",
        "r_agents",
        "r_pooled",
        "undefined_leaders",
        "undefined_agents",
        "max_abs_error",
    ]);
    for r in rows {
        t.push(vec![
            r.n.into(),
            r.replicates.into(),
            r.r_leaders.into(),
            r.r_agents.into(),
            r.r_pooled.into(),
            r.undefined_leaders.into(),
            r.undefined_agents.into(),
            r.max_abs_error.into(),
        ]);
    }
    t
}

/// Parameters a sweep can vary.
pub const SWEEPABLE: &[&str] = &[
    "sigma", "rho", "pi", "theta", "alpha", "beta", "mu", "m0_mean", "x0_mean", "a", "b", "a_m",
    "b_m", "a_x", "b_x", "lambda", "kappa", "n",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: ExperimentConfig,
    pub parameter: String,
    pub values: Vec<f64>,
    pub replicates: usize,
}

fn scalar(name: &str, v: &PerEntity) -> Result<f64> {
    v.as_scalar()
        .ok_or_else(|| invalid(name, "sweeping the agent weights needs scalar rho, pi and theta"))
}

/// Shape pair with the given mean, keeping the base concentration `a + b`.
fn shapes_with_mean(name: &str, mean: f64, a: f64, b: f64) -> Result<(f64, f64)> {
    if !(mean > 0.0 && mean < 1.0) {
        return Err(invalid(name, format!("mean must lie in (0, 1), got {mean}")));
    }
    let c = a + b;
    Ok((c * mean, c * (1.0 - mean)))
}

/// Sets one of the agent weights and rescales the other two so the three
/// still sum to one, preserving their ratio.
fn set_agent_weight(cfg: &mut ExperimentConfig, name: &str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(invalid(name, format!("{value} is outside [0, 1]")));
    }
    let mut w = [
        scalar("rho", &cfg.rho)?,
        scalar("pi", &cfg.pi)?,
        scalar("theta", &cfg.theta)?,
    ];
    let k = ["rho", "pi", "theta"].iter().position(|n| *n == name).unwrap();
    let rest: f64 = (0..3).filter(|&j| j != k).map(|j| w[j]).sum();
    for j in (0..3).filter(|&j| j != k) {
        w[j] = if rest > 0.0 { w[j] / rest * (1.0 - value) } else { (1.0 - value) / 2.0 };
    }
    w[k] = value;
    // absorb rounding into the last free weight
    let last = (0..3).rev().find(|&j| j != k).unwrap();
    w[last] = (1.0 - w.iter().enumerate().filter(|&(j, _)| j != last).map(|(_, x)| x).sum::<f64>()).max(0.0);
    cfg.rho = PerEntity::Scalar(w[0]);
    cfg.pi = PerEntity::Scalar(w[1]);
    cfg.theta = PerEntity::Scalar(w[2]);
    Ok(())
}

/// The base config with `parameter` set to `value`, validated.
pub fn apply_parameter(base: &ExperimentConfig, parameter: &str, value: f64) -> Result<ExperimentConfig> {
    let mut cfg = base.clone();
    match parameter {
        "sigma" => cfg.sigma = PerEntity::Scalar(value),
        "rho" | "pi" | "theta" => set_agent_weight(&mut cfg, parameter, value)?,
        "alpha" => cfg.alpha = value,
        "beta" => cfg.beta = value,
        "mu" => (cfg.a, cfg.b) = shapes_with_mean("mu", value, cfg.a, cfg.b)?,
        "m0_mean" => (cfg.a_m, cfg.b_m) = shapes_with_mean("m0_mean", value, cfg.a_m, cfg.b_m)?,
        "x0_mean" => (cfg.a_x, cfg.b_x) = shapes_with_mean("x0_mean", value, cfg.a_x, cfg.b_x)?,
        "a" => cfg.a = value,
        "b" => cfg.b = value,
        "a_m" => cfg.a_m = value,
        "b_m" => cfg.b_m = value,
        "a_x" => cfg.a_x = value,
        "b_x" => cfg.b_x = value,
        "lambda" => cfg.lambda = value,
        "kappa" => cfg.kappa = value,
        "n" => {
            if !(value >= 1.0 && value.fract() == 0.0) {
                return Err(invalid("n", format!("must be a positive integer, got {value}")));
            }
            cfg.n = value as usize;
        }
        other => {
            return Err(invalid(
                "parameter",
                format!("`{other}` is not sweepable; expected one of {}", SWEEPABLE.join(", ")),
            ))
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// One (grid value, replicate) cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub parameter: String,
    pub value: f64,
    pub replicate: usize,
    pub sim_leader: SampleStats,
    pub sim_agent: SampleStats,
    pub pred_leader: SampleStats,
    pub pred_agent: SampleStats,
}

/// Runs every (value, replicate) cell. Rows come back in grid order, then
/// replicate order, independent of scheduling.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    if spec.replicates == 0 {
        return Err(invalid("replicates", "must be at least 1"));
    }
    if spec.values.is_empty() {
        return Err(invalid("values", "grid is empty"));
    }
    // validate the whole grid before running anything
    let configs = spec
        .values
        .iter()
        .map(|&v| apply_parameter(&spec.base, &spec.parameter, v))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|k| (0..spec.replicates).map(move |r| (k, r)))
        .collect();
    jobs.par_iter()
        .map(|&(k, rep)| {
            let cfg = &configs[k];
            let value = spec.values[k];
            let context = |e: Error| match e {
                Error::InvalidParameter { field, reason } => Error::InvalidParameter {
                    field,
                    reason: format!("{reason} (at {} = {value})", spec.parameter),
                },
                other => other,
            };
            let inst = build_instance(cfg, derive_seed(cfg.master_seed, rep as u64)).map_err(context)?;
            let sim = simulated_steady_state(cfg, &inst.simulate(cfg).map_err(context)?);
            let pred = inst.predict(cfg, Method::Analytic).map_err(context)?;
            Ok(SweepRow {
                parameter: spec.parameter.clone(),
                value,
                replicate: rep,
                sim_leader: sample_stats(&sim.leader_ss)?,
                sim_agent: sample_stats(&sim.agent_ss)?,
                pred_leader: sample_stats(&pred.leader_ss)?,
                pred_agent: sample_stats(&pred.agent_ss)?,
            })
        })
        .collect()
}

pub fn sweep_table(rows: &[SweepRow]) -> Table {
    let mut t = Table::new([
        "parameter",
        "value",
        "replicate",
        "sim_leader_mean",
        "sim_leader_var",
        "sim_agent_mean",
        "sim_agent_var",
        "pred_leader_mean",
        "pred_leader_var",
        "pred_agent_mean",
        "pred_agent_var",
    ]);
    for r in rows {
        t.push(vec![
            Cell::Text(r.parameter.clone()),
            r.value.into(),
            r.replicate.into(),
            r.sim_leader.mean.into(),
            r.sim_leader.variance.into(),
            r.sim_agent.mean.into(),
            r.sim_agent.variance.into(),
            r.pred_leader.mean.into(),
            r.pred_leader.variance.into(),
            r.pred_agent.mean.into(),
            r.pred_agent.variance.into(),
        ]);
    }
    t
}

/// Replicate means per grid value, in grid order: `(value, mean of f(row))`.
pub fn replicate_means(rows: &[SweepRow], f: impl Fn(&SweepRow) -> f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64, usize)> = Vec::new();
    for r in rows {
        match out.last_mut() {
            Some(last) if last.0 == r.value => {
                last.1 += f(r);
                last.2 += 1;
            }
            _ => out.push((r.value, f(r), 1)),
        }
    }
    out.into_iter().map(|(v, s, k)| (v, s / k as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            n: 200,
            p: 30,
            q: 40,
            t: 40,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn pearson_basics() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(pearson(&[0.5, 0.5], &[0.1, 0.2]), None);
        assert_eq!(pearson(&[0.5], &[0.1]), None);
    }

    #[test]
    fn instance_is_seeded() {
        let cfg = small();
        let a = build_instance(&cfg, 5).unwrap();
        let b = build_instance(&cfg, 5).unwrap();
        assert_eq!(a.leaders, b.leaders);
        assert_eq!(a.agents, b.agents);
        // sigma changes do not move the opinion draws
        let c = build_instance(&ExperimentConfig { sigma: PerEntity::Scalar(0.9), ..cfg }, 5).unwrap();
        assert_eq!(a.leaders.initial(), c.leaders.initial());
    }

    #[test]
    fn random_agent_weights_sum_to_one() {
        let cfg = ExperimentConfig {
            rho: PerEntity::random(),
            pi: PerEntity::random(),
            theta: PerEntity::random(),
            sigma: PerEntity::random(),
            ..small()
        };
        let inst = build_instance(&cfg, 1).unwrap();
        let s = inst.leaders.sigma();
        assert!(s.iter().any(|&x| x != s[0]));
    }

    #[test]
    fn frozen_system_matches_exactly() {
        let cfg = ExperimentConfig {
            sigma: PerEntity::Scalar(1.0),
            rho: PerEntity::Scalar(1.0),
            pi: PerEntity::Scalar(0.0),
            theta: PerEntity::Scalar(0.0),
            ..small()
        };
        let (rows, _) = run_correlation_experiment(&cfg, &[5], 2).unwrap();
        assert!(rows[0].max_abs_error < 1e-15);
        assert!((rows[0].r_leaders.unwrap() - 1.0).abs() < 1e-12);
        // a single leader has no spread, so its correlation is undefined
        let single = ExperimentConfig { p: 1, ..cfg };
        let (rows, _) = run_correlation_experiment(&single, &[5], 2).unwrap();
        assert_eq!(rows[0].r_leaders, None);
        assert_eq!(rows[0].undefined_leaders, 2);
    }

    #[test]
    fn agent_weight_rescaling() {
        let cfg = apply_parameter(&small(), "rho", 0.4).unwrap();
        assert_eq!(cfg.rho, PerEntity::Scalar(0.4));
        assert!((cfg.pi.at(0) - 0.3).abs() < 1e-15);
        assert!((cfg.theta.at(0) - 0.3).abs() < 1e-15);
        let cfg = apply_parameter(&small(), "mu", 0.25).unwrap();
        assert_eq!((cfg.a, cfg.b), (0.5, 1.5));
    }

    #[test]
    fn sweep_rejects_bad_grid_naming_parameter() {
        let spec = SweepSpec {
            base: small(),
            parameter: "beta".into(),
            values: vec![2.0, 0.5],
            replicates: 1,
        };
        let err = run_sweep(&spec).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { ref field, .. } if field == "beta"));
    }

    #[test]
    fn sweep_rows_in_grid_order() {
        let spec = SweepSpec {
            base: small(),
            parameter: "sigma".into(),
            values: vec![0.2, 0.6],
            replicates: 2,
        };
        let rows = run_sweep(&spec).unwrap();
        let keys: Vec<(f64, usize)> = rows.iter().map(|r| (r.value, r.replicate)).collect();
        assert_eq!(keys, vec![(0.2, 0), (0.2, 1), (0.6, 0), (0.6, 1)]);
        assert_eq!(rows, run_sweep(&spec).unwrap());
        assert_eq!(replicate_means(&rows, |r| r.value).len(), 2);
    }
}
