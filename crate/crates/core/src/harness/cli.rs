//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data or validation
//! errors. Without `--out`, results go to stdout.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use super::config::{load_config, ExperimentConfig};
use super::dataset::ObservedDataset;
use super::experiment::{build_instance, correlation_table, run_correlation_experiment, run_sweep, sweep_table, SweepSpec};
use super::output::{Format, Table};
use crate::baselines::{compare_models, synthetic_dataset, BaselineKind, CompareOptions, RunSettings, SyntheticPlan};
use crate::calibration::{estimate_preference_coeffs, fit_constants, CalibrationPlan};
use crate::error::{invalid, Result};
use crate::model::{MessageDistribution, PreferenceCoeffs};
use crate::rng::derive_seed;
use crate::steady_state::{sample_stats, Method};

/// Environment variable supplying the master seed when `--seed` is absent.
pub const SEED_ENV: &str = "TWOSTEP_SEED";

#[derive(Debug, Parser)]
#[command(name = "twostep", version, about = "Two-step opinion dynamics: simulation, steady states, calibration and model comparison")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment config (JSON). Omitted fields take the default parameter table.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed; overrides TWOSTEP_SEED and the config's master_seed.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Output file (stdout when absent).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Output format; defaults to json for `.json` outputs and csv otherwise.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Start from the desk-scale preset (n = 1000, p = q = 200) instead of the full defaults.
    #[arg(long, global = true)]
    desk: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PredictMethod {
    Analytic,
    FixedPoint,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the dynamics and write per-step summary statistics.
    Simulate {
        /// Write every opinion (t, role, index, opinion) instead of summaries.
        #[arg(long)]
        full: bool,
    },
    /// Predict steady states for the configured populations.
    Predict {
        #[arg(long, value_enum, default_value_t = PredictMethod::Analytic)]
        method: PredictMethod,
    },
    /// Sweep one parameter, simulating and predicting at each grid value.
    Sweep {
        /// Parameter name (sigma, rho, pi, theta, alpha, beta, mu, m0_mean, x0_mean, a, b, ...).
        #[arg(long)]
        param: String,
        /// Comma-separated grid values.
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        values: Vec<f64>,
        #[arg(long, default_value_t = 3)]
        replicates: usize,
    },
    /// Correlation between simulated and predicted steady states for several n.
    Correlate {
        #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = [3usize, 10, 100, 1000])]
        n_values: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        replicates: usize,
    },
    /// Re-derive the modified-stubbornness constants against the fixed point.
    FitConstants {
        /// Message-law shapes used for the fit.
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
    },
    /// Estimate preference coefficients from a dataset's leader rows.
    EstimatePrefs {
        #[arg(long, value_name = "PATH")]
        data: PathBuf,
    },
    /// Compare MP against the baseline leader models on a dataset.
    Compare {
        #[arg(long, value_name = "PATH")]
        data: PathBuf,
        /// MP preference coefficients; estimated from the data when absent.
        #[arg(long, requires = "beta")]
        alpha: Option<f64>,
        #[arg(long, requires = "alpha")]
        beta: Option<f64>,
        #[arg(long, default_value_t = RunSettings::default().sources)]
        sources: usize,
        #[arg(long, default_value_t = RunSettings::default().steps)]
        steps: usize,
        #[arg(long, default_value_t = RunSettings::default().runs)]
        runs: usize,
        /// Fit baseline parameters per scenario instead of globally.
        #[arg(long)]
        per_scenario: bool,
        /// Comma-separated subset of HK, BOF, SBC, LCSN, LnCSN, SinCSN.
        #[arg(long, value_delimiter = ',')]
        baselines: Vec<String>,
    },
    /// Write an MP-generated synthetic dataset (CSV).
    SynthDataset {
        #[arg(long, default_value_t = 4)]
        scenarios: usize,
        #[arg(long, default_value_t = 20)]
        leaders: usize,
        #[arg(long, default_value_t = 30)]
        agents: usize,
        #[arg(long, default_value_t = 0.8)]
        alpha: f64,
        #[arg(long, default_value_t = 2.1)]
        beta: f64,
    },
}

/// Runs the command line and returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn base_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => load_config(path)?,
        None if common.desk => ExperimentConfig::desk(),
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = resolve_seed(common.seed)? {
        cfg.master_seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn resolve_seed(flag: Option<u64>) -> Result<Option<u64>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|_| invalid(SEED_ENV, format!("`{v}` is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

impl Common {
    fn format(&self) -> Format {
        self.format.unwrap_or_else(|| {
            let json = self
                .out
                .as_deref()
                .and_then(Path::extension)
                .is_some_and(|e| e.eq_ignore_ascii_case("json"));
            if json {
                Format::Json
            } else {
                Format::Csv
            }
        })
    }
}

fn open_out(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn emit_table(common: &Common, table: &Table) -> Result<()> {
    let mut w = open_out(common.out.as_deref())?;
    table.write(&mut w, common.format())?;
    w.flush()?;
    Ok(())
}

/// Writes a structured result: JSON as-is, CSV via the given flattening.
fn emit_value<T: Serialize>(common: &Common, value: &T, csv: impl FnOnce() -> Table) -> Result<()> {
    match common.format() {
        Format::Json => {
            let mut w = open_out(common.out.as_deref())?;
            serde_json::to_writer_pretty(&mut w, value)?;
            w.write_all(b"\n")?;
            w.flush()?;
            Ok(())
        }
        Format::Csv => emit_table(common, &csv()),
    }
}

fn run(cli: Cli) -> Result<()> {
    let common = &cli.common;
    match cli.command {
        Command::Simulate { full } => {
            let cfg = base_config(common)?;
            let inst = build_instance(&cfg, derive_seed(cfg.master_seed, 0))?;
            let traj = inst.simulate(&cfg)?;
            let table = if full {
                let mut t = Table::new(["t", "role", "index", "opinion"]);
                for (step, (m, x)) in traj.leader_opinions.iter().zip(&traj.agent_opinions).enumerate() {
                    for (i, v) in m.iter().enumerate() {
                        t.push(vec![step.into(), "leader".into(), i.into(), (*v).into()]);
                    }
                    for (i, v) in x.iter().enumerate() {
                        t.push(vec![step.into(), "agent".into(), i.into(), (*v).into()]);
                    }
                }
                t
            } else {
                let mut t = Table::new(["t", "leader_mean", "leader_var", "agent_mean", "agent_var"]);
                for (step, (m, x)) in traj.leader_opinions.iter().zip(&traj.agent_opinions).enumerate() {
                    let (ls, xs) = (sample_stats(m)?, sample_stats(x)?);
                    t.push(vec![step.into(), ls.mean.into(), ls.variance.into(), xs.mean.into(), xs.variance.into()]);
                }
                t
            };
            emit_table(common, &table)
        }
        Command::Predict { method } => {
            let cfg = base_config(common)?;
            let inst = build_instance(&cfg, derive_seed(cfg.master_seed, 0))?;
            let method = match method {
                PredictMethod::Analytic => Method::Analytic,
                PredictMethod::FixedPoint => Method::FixedPoint,
            };
            let res = inst.predict(&cfg, method)?;
            let mut t = Table::new(["role", "index", "initial", "predicted"]);
            for (i, (m0, v)) in inst.leaders.initial().iter().zip(&res.leader_ss).enumerate() {
                t.push(vec!["leader".into(), i.into(), (*m0).into(), (*v).into()]);
            }
            for (i, (x0, v)) in inst.agents.initial().iter().zip(&res.agent_ss).enumerate() {
                t.push(vec!["agent".into(), i.into(), (*x0).into(), (*v).into()]);
            }
            emit_table(common, &t)
        }
        Command::Sweep { param, values, replicates } => {
            let cfg = base_config(common)?;
            let rows = run_sweep(&SweepSpec {
                base: cfg,
                parameter: param,
                values,
                replicates,
            })?;
            emit_table(common, &sweep_table(&rows))
        }
        Command::Correlate { n_values, replicates } => {
            let cfg = base_config(common)?;
            let (rows, _) = run_correlation_experiment(&cfg, &n_values, replicates)?;
            emit_table(common, &correlation_table(&rows))
        }
        Command::FitConstants { a, b } => {
            let dist = MessageDistribution::new(a, b)?;
            let fit = fit_constants(&dist, &CalibrationPlan::default())?;
            emit_value(common, &fit, || {
                let mut t = Table::new(["law", "parameter", "w", "residual", "coefficient"]);
                for (law, f) in [("kappa", &fit.kappa_fit), ("lambda", &fit.lambda_fit)] {
                    for ((x, w), r) in f.points.iter().zip(&f.per_point_residuals) {
                        t.push(vec![law.into(), (*x).into(), (*w).into(), (*r).into(), f.coefficient.into()]);
                    }
                }
                t
            })
        }
        Command::EstimatePrefs { data } => {
            let ds = ObservedDataset::read_csv(&data)?;
            let est = estimate_preference_coeffs(&ds.preference_observations()?)?;
            emit_value(common, &est, || {
                let mut t = Table::new(["alpha", "beta", "objective", "grid_objective", "used_observations", "excluded_exact_matches"]);
                t.push(vec![
                    est.alpha.into(),
                    est.beta.into(),
                    est.objective.into(),
                    est.grid_objective.into(),
                    est.used_observations.into(),
                    est.excluded_exact_matches.into(),
                ]);
                t
            })
        }
        Command::Compare { data, alpha, beta, sources, steps, runs, per_scenario, baselines } => {
            let ds = ObservedDataset::read_csv(&data)?;
            let mp_prefs = match (alpha, beta) {
                (Some(a), Some(b)) => Some(PreferenceCoeffs::new(a, b)?),
                _ => None,
            };
            let baselines = if baselines.is_empty() {
                BaselineKind::ALL.to_vec()
            } else {
                baselines.iter().map(|b| b.parse()).collect::<Result<Vec<_>>>()?
            };
            let seed = resolve_seed(common.seed)?.unwrap_or(0);
            let opts = CompareOptions {
                mp_prefs,
                run: RunSettings { sources, steps, runs, seed },
                per_scenario_fit: per_scenario,
                baselines,
            };
            let report = compare_models(&ds, &opts)?;
            emit_value(common, &report, || report.table())
        }
        Command::SynthDataset { scenarios, leaders, agents, alpha, beta } => {
            let plan = SyntheticPlan {
                scenarios,
                leaders,
                agents,
                prefs: PreferenceCoeffs::new(alpha, beta)?,
                seed: resolve_seed(common.seed)?.unwrap_or(0),
                ..SyntheticPlan::default()
            };
            let ds = synthetic_dataset(&plan)?;
            if common.format() == Format::Json {
                return Err(invalid("format", "datasets are written as CSV only"));
            }
            let mut w = open_out(common.out.as_deref())?;
            ds.to_writer(&mut w)?;
            w.flush()?;
            Ok(())
        }
    }
}
