//! Baseline leader models and the RMSE comparison protocol.
//!
//! Every baseline replaces only the leader update; agents always follow the
//! two-step agent update. Rules for a leader with previous opinion `m`,
//! initial opinion `m0`, stubbornness `sigma` and messages `s_1..s_n`
//! (`d_j = |m - s_j|`), each followed by `m' = sigma m0 + (1 - sigma) avg`:
//!
//! * **HK** (bounded confidence): `avg` is the mean of the messages with
//!   `d_j <= epsilon`; if there are none the leader keeps `m`.
//! * **BOF** (biased opinion formation): `avg = A / (A + B)` with
//!   `A = m^bias * sum s_j` and `B = (1 - m)^bias * sum (1 - s_j)`, so
//!   messages on the leader's own side weigh more as `bias` grows.
//! * **SBC** (stochastic bounded confidence): message `j` is read with
//!   probability `1 / (1 + (d_j / epsilon)^steepness)`, then HK averaging
//!   over the messages read.
//! * **CSN** (cognitive similarity): `avg = m + mean_j f(d_j) (s_j - m)` with
//!   `f(d) = c (1 - d)` (linear), `c ln(1 + (e - 1)(1 - d))` (log) or
//!   `c sin(pi (1 - d) / 2)` (sine), `c` = `strength` in (0, 1].

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::estimate_preference_coeffs;
use crate::error::{check_len, invalid, Error, Result};
use crate::harness::dataset::{DatasetRow, ObservedDataset, Role};
use crate::harness::output::{Cell, Table};
use crate::model::{
    agent_step, leader_step, selective_coefficients, AgentPopulation, InfluenceMatrix, LeaderPopulation,
    MessageDistribution, PreferenceCoeffs,
};
use crate::rng::{derive_seed, stream, Stream};
use crate::steady_state::agent_ss;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BaselineKind {
    Hk,
    Bof,
    Sbc,
    CsnLinear,
    CsnLog,
    CsnSine,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 6] = [
        BaselineKind::Hk,
        BaselineKind::Bof,
        BaselineKind::Sbc,
        BaselineKind::CsnLinear,
        BaselineKind::CsnLog,
        BaselineKind::CsnSine,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Hk => "HK",
            BaselineKind::Bof => "BOF",
            BaselineKind::Sbc => "SBC",
            BaselineKind::CsnLinear => "LCSN",
            BaselineKind::CsnLog => "LnCSN",
            BaselineKind::CsnSine => "SinCSN",
        }
    }

    pub fn required_params(self) -> &'static [&'static str] {
        match self {
            BaselineKind::Hk => &["epsilon"],
            BaselineKind::Bof => &["bias"],
            BaselineKind::Sbc => &["epsilon", "steepness"],
            BaselineKind::CsnLinear | BaselineKind::CsnLog | BaselineKind::CsnSine => &["strength"],
        }
    }

    /// Parameter grid searched when fitting to data.
    pub fn default_grid(self) -> Vec<BTreeMap<String, f64>> {
        let steps = |lo: f64, step: f64, k: usize| (0..k).map(move |i| ((lo + step * i as f64) * 1e9).round() / 1e9);
        let one = |key: &str, v: f64| BTreeMap::from([(key.to_string(), v)]);
        match self {
            BaselineKind::Hk => steps(0.05, 0.05, 20).map(|e| one("epsilon", e)).collect(),
            BaselineKind::Bof => steps(0.0, 0.25, 17).map(|b| one("bias", b)).collect(),
            BaselineKind::Sbc => steps(0.1, 0.1, 10)
                .flat_map(|e| {
                    [1.0, 2.0, 4.0, 8.0, 16.0].map(|k| {
                        BTreeMap::from([("epsilon".to_string(), e), ("steepness".to_string(), k)])
                    })
                })
                .collect(),
            _ => steps(0.05, 0.05, 20).map(|c| one("strength", c)).collect(),
        }
    }
}

impl std::str::FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BaselineKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| invalid("kind", format!("unknown baseline `{s}`")))
    }
}

/// A baseline rule with its parameters, validated on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSpec {
    kind: BaselineKind,
    params: BTreeMap<String, f64>,
}

impl BaselineSpec {
    pub fn new(kind: BaselineKind, params: BTreeMap<String, f64>) -> Result<Self> {
        let required = kind.required_params();
        for key in required {
            let v = *params
                .get(*key)
                .ok_or_else(|| invalid(*key, format!("{} needs parameter `{key}`", kind.name())))?;
            if !v.is_finite() {
                return Err(invalid(*key, "must be finite"));
            }
        }
        if let Some(extra) = params.keys().find(|k| !required.contains(&k.as_str())) {
            return Err(invalid(extra.as_str(), format!("{} has no parameter `{extra}`", kind.name())));
        }
        let get = |k: &str| params[k];
        match kind {
            BaselineKind::Hk | BaselineKind::Sbc if !(get("epsilon") > 0.0 && get("epsilon") <= 1.0) => {
                return Err(invalid("epsilon", "must lie in (0, 1]"))
            }
            BaselineKind::Sbc if get("steepness") <= 0.0 => {
                return Err(invalid("steepness", "must be positive"))
            }
            BaselineKind::Bof if get("bias") < 0.0 => return Err(invalid("bias", "must be nonnegative")),
            BaselineKind::CsnLinear | BaselineKind::CsnLog | BaselineKind::CsnSine
                if !(get("strength") > 0.0 && get("strength") <= 1.0) =>
            {
                return Err(invalid("strength", "must lie in (0, 1]"))
            }
            _ => {}
        }
        Ok(Self { kind, params })
    }

    pub fn hk(epsilon: f64) -> Result<Self> {
        Self::new(BaselineKind::Hk, BTreeMap::from([("epsilon".into(), epsilon)]))
    }

    pub fn bof(bias: f64) -> Result<Self> {
        Self::new(BaselineKind::Bof, BTreeMap::from([("bias".into(), bias)]))
    }

    pub fn sbc(epsilon: f64, steepness: f64) -> Result<Self> {
        Self::new(
            BaselineKind::Sbc,
            BTreeMap::from([("epsilon".into(), epsilon), ("steepness".into(), steepness)]),
        )
    }

    pub fn csn(kind: BaselineKind, strength: f64) -> Result<Self> {
        Self::new(kind, BTreeMap::from([("strength".into(), strength)]))
    }

    pub fn kind(&self) -> BaselineKind {
        self.kind
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    fn param(&self, key: &str) -> f64 {
        self.params[key]
    }

    /// The message average of one leader, before stubbornness blending.
    fn message_average<R: Rng + ?Sized>(&self, m: f64, messages: &[f64], rng: &mut R) -> f64 {
        match self.kind {
            BaselineKind::Hk => {
                let eps = self.param("epsilon");
                let (sum, k) = messages
                    .iter()
                    .filter(|s| (m - **s).abs() <= eps)
                    .fold((0.0, 0usize), |(a, k), s| (a + s, k + 1));
                if k == 0 {
                    m
                } else {
                    sum / k as f64
                }
            }
            BaselineKind::Bof => {
                let b = self.param("bias");
                let above: f64 = messages.iter().sum();
                let below = messages.len() as f64 - above;
                let a = m.powf(b) * above;
                let c = (1.0 - m).powf(b) * below;
                if a + c > 0.0 {
                    a / (a + c)
                } else {
                    above / messages.len() as f64
                }
            }
            BaselineKind::Sbc => {
                let eps = self.param("epsilon");
                let k = self.param("steepness");
                let (mut sum, mut count) = (0.0, 0usize);
                for &s in messages {
                    let p = 1.0 / (1.0 + ((m - s).abs() / eps).powf(k));
                    // one draw per message keeps the stream aligned across parameter values
                    if rng.random::<f64>() < p {
                        sum += s;
                        count += 1;
                    }
                }
                if count == 0 {
                    m
                } else {
                    sum / count as f64
                }
            }
            BaselineKind::CsnLinear | BaselineKind::CsnLog | BaselineKind::CsnSine => {
                let c = self.param("strength");
                let f = |d: f64| match self.kind {
                    BaselineKind::CsnLinear => c * (1.0 - d),
                    BaselineKind::CsnLog => c * (1.0 + (std::f64::consts::E - 1.0) * (1.0 - d)).ln(),
                    _ => c * (std::f64::consts::FRAC_PI_2 * (1.0 - d)).sin(),
                };
                let pull: f64 = messages.iter().map(|&s| f((m - s).abs()) * (s - m)).sum();
                m + pull / messages.len() as f64
            }
        }
    }
}

/// One synchronous leader update under a baseline rule. `rng` is consumed
/// only by the stochastic rule (SBC).
pub fn baseline_leader_step<R: Rng + ?Sized>(
    spec: &BaselineSpec,
    leaders: &LeaderPopulation,
    m_prev: &[f64],
    messages: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_len("baseline_leader_step previous opinions", leaders.len(), m_prev.len())?;
    if messages.is_empty() {
        return Err(invalid("n", "at least one message is required"));
    }
    Ok((0..leaders.len())
        .map(|i| {
            let sigma = leaders.sigma()[i];
            let avg = spec.message_average(m_prev[i], messages, rng);
            (sigma * leaders.initial()[i] + (1.0 - sigma) * avg).clamp(0.0, 1.0)
        })
        .collect())
}

/// Where each step's messages come from.
pub trait MessageSource: Sync {
    fn draw(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64>;
}

impl MessageSource for MessageDistribution {
    fn draw(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.sample(n, rng)
    }
}

/// Resamples, with replacement, from a fixed pool of observed messages.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMessages(pub Vec<f64>);

impl MessageSource for EmpiricalMessages {
    fn draw(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| self.0[rng.random_range(0..self.0.len())]).collect()
    }
}

/// A leader model: the selective-exposure update or a baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LeaderModel {
    Mp(PreferenceCoeffs),
    Baseline(BaselineSpec),
}

impl LeaderModel {
    pub fn name(&self) -> &'static str {
        match self {
            LeaderModel::Mp(_) => "MP",
            LeaderModel::Baseline(spec) => spec.kind.name(),
        }
    }

    pub fn step<R: Rng + ?Sized>(
        &self,
        leaders: &LeaderPopulation,
        m_prev: &[f64],
        messages: &[f64],
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        match self {
            LeaderModel::Mp(prefs) => leader_step(&leaders.with_prefs(*prefs), m_prev, messages),
            LeaderModel::Baseline(spec) => baseline_leader_step(spec, leaders, m_prev, messages, rng),
        }
    }
}

/// Monte Carlo run settings shared by all models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    /// Messages per step.
    pub sources: usize,
    pub steps: usize,
    pub runs: usize,
    pub seed: u64,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            sources: 200,
            steps: 20,
            runs: 8,
            seed: 0,
        }
    }
}

fn check_settings(s: &RunSettings) -> Result<()> {
    for (name, v) in [("n", s.sources), ("t", s.steps), ("runs", s.runs)] {
        if v == 0 {
            return Err(invalid(name, "must be at least 1"));
        }
    }
    Ok(())
}

/// Steady-state estimate of the leaders under `model`: the last-step
/// opinions averaged over `settings.runs` runs. Run `r` draws messages from
/// the message stream of `derive_seed(settings.seed, r)`, exactly as
/// `simulate` does, so a single MP run reproduces a simulation's final
/// leader opinions.
pub fn predict_leader_ss(
    model: &LeaderModel,
    leaders: &LeaderPopulation,
    source: &dyn MessageSource,
    settings: &RunSettings,
) -> Result<Vec<f64>> {
    check_settings(settings)?;
    let mut acc = vec![0.0; leaders.len()];
    for r in 0..settings.runs {
        let seed = derive_seed(settings.seed, r as u64);
        let mut msg_rng = stream(seed, Stream::Messages);
        let mut rule_rng = stream(seed, Stream::Baseline);
        let mut m = leaders.initial().to_vec();
        for _ in 0..settings.steps {
            let s = source.draw(settings.sources, &mut msg_rng);
            m = model.step(leaders, &m, &s, &mut rule_rng)?;
        }
        for (a, x) in acc.iter_mut().zip(&m) {
            *a += x;
        }
    }
    Ok(acc.into_iter().map(|a| a / settings.runs as f64).collect())
}

/// [`predict_leader_ss`] for a baseline rule.
pub fn baseline_predict_ss(
    spec: &BaselineSpec,
    leaders: &LeaderPopulation,
    source: &dyn MessageSource,
    settings: &RunSettings,
) -> Result<Vec<f64>> {
    predict_leader_ss(&LeaderModel::Baseline(spec.clone()), leaders, source, settings)
}

/// Root mean square error.
pub fn rmse(pred: &[f64], obs: &[f64]) -> Result<f64> {
    check_len("rmse", obs.len(), pred.len())?;
    if pred.is_empty() {
        return Err(invalid("pred", "rmse needs at least one value"));
    }
    let ss: f64 = pred.iter().zip(obs).map(|(p, o)| (p - o) * (p - o)).sum();
    Ok((ss / pred.len() as f64).sqrt())
}

/// Settings of the comparison protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareOptions {
    /// Preference coefficients of the MP model; estimated from the observed
    /// leader selective coefficients when absent.
    pub mp_prefs: Option<PreferenceCoeffs>,
    pub run: RunSettings,
    /// Fit baseline parameters separately in every scenario instead of once
    /// over the pooled data.
    pub per_scenario_fit: bool,
    /// Baselines to compare (all six by default).
    pub baselines: Vec<BaselineKind>,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            mp_prefs: None,
            run: RunSettings::default(),
            per_scenario_fit: false,
            baselines: BaselineKind::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    /// Scenario id, or `overall` for the pooled row.
    pub scenario: String,
    pub model: String,
    pub leader_rmse: f64,
    /// `None` when the scenario has no agents.
    pub agent_rmse: Option<f64>,
    pub leaders: usize,
    pub agents: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedParams {
    pub model: String,
    /// `None` for a global fit.
    pub scenario: Option<String>,
    pub params: BTreeMap<String, f64>,
    pub leader_rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub models: Vec<String>,
    pub scenarios: Vec<String>,
    pub mp_alpha: f64,
    pub mp_beta: f64,
    /// Per-scenario rows in scenario order, then the pooled `overall` rows.
    pub rows: Vec<ComparisonRow>,
    pub fitted: Vec<FittedParams>,
}

pub const OVERALL: &str = "overall";

impl ComparisonReport {
    pub fn row(&self, scenario: &str, model: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.scenario == scenario && r.model == model)
    }

    pub fn overall(&self, model: &str) -> Option<&ComparisonRow> {
        self.row(OVERALL, model)
    }

    /// Model with the lowest pooled leader RMSE.
    pub fn best_for_leaders(&self) -> &str {
        self.rows
            .iter()
            .filter(|r| r.scenario == OVERALL)
            .min_by(|a, b| a.leader_rmse.total_cmp(&b.leader_rmse))
            .map_or("", |r| r.model.as_str())
    }

    /// Model with the lowest pooled agent RMSE, if any scenario has agents.
    pub fn best_for_agents(&self) -> Option<&str> {
        self.rows
            .iter()
            .filter(|r| r.scenario == OVERALL)
            .filter_map(|r| r.agent_rmse.map(|e| (e, r.model.as_str())))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, m)| m)
    }

    /// Wide layout: one row per scenario plus `overall`, two columns
    /// (leaders, agents) per model.
    pub fn table(&self) -> Table {
        let mut cols = vec!["scenario".to_string()];
        for m in &self.models {
            cols.push(format!("{m}_leaders"));
            cols.push(format!("{m}_agents"));
        }
        let mut t = Table::new(cols);
        for sc in self.scenarios.iter().map(String::as_str).chain([OVERALL]) {
            let mut row = vec![Cell::Text(sc.to_string())];
            for m in &self.models {
                let r = self.row(sc, m);
                row.push(r.map(|r| r.leader_rmse).into());
                row.push(r.and_then(|r| r.agent_rmse).into());
            }
            t.push(row);
        }
        t
    }
}

/// Observed and model-independent inputs of one scenario.
struct PreparedScenario {
    id: String,
    leader_rows: Vec<DatasetRow>,
    agents: Option<AgentPopulation>,
    observed_leaders: Vec<f64>,
    observed_agents: Vec<f64>,
    pool: EmpiricalMessages,
    seed: u64,
}

impl PreparedScenario {
    fn leaders(&self, prefs: PreferenceCoeffs) -> Result<LeaderPopulation> {
        LeaderPopulation::new(
            self.leader_rows.iter().map(|r| r.initial_opinion).collect(),
            self.leader_rows.iter().map(|r| r.stubbornness).collect(),
            prefs,
        )
    }

    fn settings(&self, base: &RunSettings) -> RunSettings {
        RunSettings {
            seed: self.seed,
            ..*base
        }
    }
}

fn prepare(dataset: &ObservedDataset, run: &RunSettings) -> Result<Vec<PreparedScenario>> {
    dataset
        .scenarios()
        .iter()
        .enumerate()
        .map(|(k, sc)| {
            Ok(PreparedScenario {
                id: sc.id.clone(),
                leader_rows: dataset.leaders(sc).cloned().collect(),
                agents: dataset.agent_population(sc)?,
                observed_leaders: dataset.leaders(sc).map(|r| r.final_opinion).collect(),
                observed_agents: dataset.agents(sc).map(|r| r.final_opinion).collect(),
                pool: EmpiricalMessages(dataset.message_pool(sc)),
                seed: derive_seed(run.seed, k as u64),
            })
        })
        .collect()
}

fn leader_predictions(model: &LeaderModel, sc: &PreparedScenario, run: &RunSettings) -> Result<Vec<f64>> {
    let prefs = match model {
        LeaderModel::Mp(p) => *p,
        LeaderModel::Baseline(_) => PreferenceCoeffs::degenerate(),
    };
    predict_leader_ss(model, &sc.leaders(prefs)?, &sc.pool, &sc.settings(run))
}

fn squared_error(pred: &[f64], obs: &[f64]) -> f64 {
    pred.iter().zip(obs).map(|(p, o)| (p - o) * (p - o)).sum()
}

/// Grid search over a baseline's parameters, minimizing pooled leader RMSE
/// over `scenarios`. Ties go to the earlier grid point.
fn fit_baseline(
    kind: BaselineKind,
    scenarios: &[&PreparedScenario],
    run: &RunSettings,
) -> Result<(BaselineSpec, f64)> {
    let count: usize = scenarios.iter().map(|s| s.observed_leaders.len()).sum();
    let scored = kind
        .default_grid()
        .into_par_iter()
        .map(|params| {
            let spec = BaselineSpec::new(kind, params)?;
            let model = LeaderModel::Baseline(spec.clone());
            let mut ss = 0.0;
            for sc in scenarios {
                ss += squared_error(&leader_predictions(&model, sc, run)?, &sc.observed_leaders);
            }
            Ok((spec, (ss / count as f64).sqrt()))
        })
        .collect::<Result<Vec<_>>>()?;
    scored
        .into_iter()
        .reduce(|best, c| if c.1 < best.1 { c } else { best })
        .ok_or_else(|| invalid("kind", "empty parameter grid"))
}

/// Per-scenario and pooled RMSE of the MP model and the baselines against
/// the observed final opinions. Baseline parameters are fit by grid search
/// on the same data; agent predictions use the linear steady state driven
/// by each model's predicted leader opinions.
pub fn compare_models(dataset: &ObservedDataset, opts: &CompareOptions) -> Result<ComparisonReport> {
    check_settings(&opts.run)?;
    let prepared = prepare(dataset, &opts.run)?;
    let prefs = match opts.mp_prefs {
        Some(p) => p,
        None => {
            let obs = dataset.preference_observations()?;
            if obs.len() < 2 {
                return Err(Error::DegenerateData(
                    "no MP preference coefficients given and fewer than two leader rows carry observed weights".into(),
                ));
            }
            let est = estimate_preference_coeffs(&obs)?;
            PreferenceCoeffs::new(est.alpha, est.beta)?
        }
    };

    // (model name, per-scenario model)
    let mut fitted = Vec::new();
    let mut lineup: Vec<(String, Vec<LeaderModel>)> =
        vec![("MP".into(), vec![LeaderModel::Mp(prefs); prepared.len()])];
    for &kind in &opts.baselines {
        let per_scenario = if opts.per_scenario_fit {
            prepared
                .iter()
                .map(|sc| {
                    let (spec, err) = fit_baseline(kind, &[sc], &opts.run)?;
                    fitted.push(FittedParams {
                        model: kind.name().into(),
                        scenario: Some(sc.id.clone()),
                        params: spec.params.clone(),
                        leader_rmse: err,
                    });
                    Ok(LeaderModel::Baseline(spec))
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            let all: Vec<&PreparedScenario> = prepared.iter().collect();
            let (spec, err) = fit_baseline(kind, &all, &opts.run)?;
            fitted.push(FittedParams {
                model: kind.name().into(),
                scenario: None,
                params: spec.params.clone(),
                leader_rmse: err,
            });
            vec![LeaderModel::Baseline(spec); prepared.len()]
        };
        lineup.push((kind.name().into(), per_scenario));
    }

    let mut rows = Vec::new();
    let mut overall = Vec::new();
    for (name, models) in &lineup {
        let (mut l_ss, mut l_k, mut a_ss, mut a_k) = (0.0, 0usize, 0.0, 0usize);
        for (sc, model) in prepared.iter().zip(models) {
            let pred = leader_predictions(model, sc, &opts.run)?;
            let l = squared_error(&pred, &sc.observed_leaders);
            let agent_rmse = match &sc.agents {
                Some(agents) => {
                    let x = agent_ss(agents, &pred)?;
                    let a = squared_error(&x, &sc.observed_agents);
                    a_ss += a;
                    a_k += x.len();
                    Some((a / x.len() as f64).sqrt())
                }
                None => None,
            };
            l_ss += l;
            l_k += pred.len();
            rows.push(ComparisonRow {
                scenario: sc.id.clone(),
                model: name.clone(),
                leader_rmse: (l / pred.len() as f64).sqrt(),
                agent_rmse,
                leaders: pred.len(),
                agents: sc.observed_agents.len(),
            });
        }
        overall.push(ComparisonRow {
            scenario: OVERALL.into(),
            model: name.clone(),
            leader_rmse: (l_ss / l_k as f64).sqrt(),
            agent_rmse: (a_k > 0).then(|| (a_ss / a_k as f64).sqrt()),
            leaders: l_k,
            agents: a_k,
        });
    }
    // scenario-major order for the per-scenario rows
    rows.sort_by_key(|r| prepared.iter().position(|s| s.id == r.scenario));
    rows.extend(overall);

    Ok(ComparisonReport {
        models: lineup.into_iter().map(|(n, _)| n).collect(),
        scenarios: prepared.iter().map(|s| s.id.clone()).collect(),
        mp_alpha: prefs.alpha(),
        mp_beta: prefs.beta(),
        rows,
        fitted,
    })
}

/// Recipe for an MP-generated synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPlan {
    pub scenarios: usize,
    pub leaders: usize,
    pub agents: usize,
    pub prefs: PreferenceCoeffs,
    /// Message law of each scenario, as Beta shapes.
    pub message_shapes: Vec<(f64, f64)>,
    pub run: RunSettings,
    /// Messages listed on each leader row, with selective coefficients
    /// taken at the leader's final opinion.
    pub shown_messages: usize,
    /// Observed final opinions are averaged over this many trailing steps.
    pub tail_window: usize,
    pub seed: u64,
}

impl Default for SyntheticPlan {
    fn default() -> Self {
        Self {
            scenarios: 4,
            leaders: 20,
            agents: 30,
            prefs: PreferenceCoeffs::new(0.8, 2.1).expect("admissible"),
            message_shapes: vec![(1.0, 1.0), (2.0, 5.0), (5.0, 2.0), (0.5, 0.5)],
            run: RunSettings {
                steps: 50,
                ..RunSettings::default()
            },
            shown_messages: 30,
            tail_window: 20,
            seed: 0,
        }
    }
}

/// Generates a dataset whose final opinions come from one MP simulation per
/// scenario: random initial opinions and stubbornness, random row-normalized
/// influence, messages drawn from the scenario's Beta law. Final opinions
/// are averaged over the last `tail_window` steps; leader rows list fresh
/// messages with their selective coefficients at that final opinion.
pub fn synthetic_dataset(plan: &SyntheticPlan) -> Result<ObservedDataset> {
    if plan.scenarios == 0 || plan.leaders == 0 || plan.message_shapes.is_empty() {
        return Err(invalid("scenarios", "need at least one scenario, leader and message law"));
    }
    check_settings(&plan.run)?;
    if plan.tail_window == 0 || plan.tail_window > plan.run.steps {
        return Err(invalid("tail_window", "must lie in 1..=steps"));
    }
    let mut rows = Vec::new();
    for k in 0..plan.scenarios {
        let seed = derive_seed(plan.seed, k as u64);
        let mut rng = stream(seed, Stream::Population);
        let (a, b) = plan.message_shapes[k % plan.message_shapes.len()];
        let dist = MessageDistribution::new(a, b)?;
        let (p, q) = (plan.leaders, plan.agents);

        let m0: Vec<f64> = (0..p).map(|_| rng.random()).collect();
        let sigma: Vec<f64> = (0..p).map(|_| rng.random_range(0.1..0.9)).collect();
        let leaders = LeaderPopulation::new(m0, sigma, plan.prefs)?;

        let mut m = leaders.initial().to_vec();
        let mut msg_rng = stream(seed, Stream::Messages);
        let mut x = Vec::new();
        let mut agent_rows = Vec::new();
        let agents = if q > 0 {
            let x0: Vec<f64> = (0..q).map(|_| rng.random()).collect();
            let rho: Vec<f64> = (0..q).map(|_| rng.random_range(0.1..0.6)).collect();
            let share: Vec<f64> = (0..q).map(|_| rng.random_range(0.2..0.8)).collect();
            let pi: Vec<f64> = rho.iter().zip(&share).map(|(r, s)| (1.0 - r) * s).collect();
            let theta: Vec<f64> = rho.iter().zip(&pi).map(|(r, p)| (1.0 - r - p).max(0.0)).collect();
            let w = crate::harness::matrices::random_row_normalized(q, q, &mut rng);
            let u = crate::harness::matrices::random_row_normalized(q, p, &mut rng);
            // encode each agent's influence as one row over all subjects: leaders first
            for i in 0..q {
                let free = pi[i] + theta[i];
                let row: Vec<f64> = (0..p)
                    .map(|j| u[(i, j)] * theta[i] / free)
                    .chain((0..q).map(|j| w[(i, j)] * pi[i] / free))
                    .collect();
                agent_rows.push(row);
            }
            x = x0.clone();
            Some(AgentPopulation::new(
                x0,
                rho,
                pi,
                theta,
                InfluenceMatrix::dense("W", w)?,
                InfluenceMatrix::dense("U", u)?,
            )?)
        } else {
            None
        };

        let mut m_tail = vec![0.0; p];
        let mut x_tail = vec![0.0; q];
        for t in 0..plan.run.steps {
            let s = dist.sample(plan.run.sources, &mut msg_rng);
            m = leader_step(&leaders, &m, &s)?;
            if let Some(agents) = &agents {
                x = agent_step(agents, &x, &m)?;
            }
            if t + plan.tail_window >= plan.run.steps {
                m_tail.iter_mut().zip(&m).for_each(|(a, v)| *a += v);
                x_tail.iter_mut().zip(&x).for_each(|(a, v)| *a += v);
            }
        }
        let win = plan.tail_window as f64;
        let m: Vec<f64> = m_tail.iter().map(|v| (v / win).clamp(0.0, 1.0)).collect();
        let x: Vec<f64> = x_tail.iter().map(|v| (v / win).clamp(0.0, 1.0)).collect();

        let mut shown_rng = stream(seed, Stream::Noise);
        let scenario_id = format!("s{}", k + 1);
        for (i, &m_i) in m.iter().enumerate() {
            let shown = dist.sample(plan.shown_messages.max(1), &mut shown_rng);
            let gamma = selective_coefficients(m_i, &shown, plan.prefs);
            rows.push(DatasetRow {
                scenario_id: scenario_id.clone(),
                subject_id: format!("L{}", i + 1),
                role: Role::Leader,
                initial_opinion: leaders.initial()[i],
                final_opinion: m_i,
                stubbornness: leaders.sigma()[i],
                weights: gamma,
                messages: shown,
            });
        }
        if let Some(agents) = &agents {
            for i in 0..q {
                rows.push(DatasetRow {
                    scenario_id: scenario_id.clone(),
                    subject_id: format!("A{}", i + 1),
                    role: Role::Agent,
                    initial_opinion: agents.initial()[i],
                    final_opinion: x[i],
                    stubbornness: agents.rho()[i],
                    weights: agent_rows[i].clone(),
                    messages: Vec::new(),
                });
            }
        }
    }
    ObservedDataset::new(rows)
}
