//! Observed initial/final opinions grouped by scenario.
//!
//! CSV columns, in order:
//!
//! `scenario_id, subject_id, role, initial_opinion, final_opinion, stubbornness, weights, messages`
//!
//! `weights` and `messages` are semicolon-joined lists and may be empty.
//!
//! * agent rows: `weights` is one entry per subject of the scenario, in file
//!   order, summing to 1. Entries on leaders form the leader-influence row,
//!   entries on agents the peer row; their totals split `1 - stubbornness`
//!   into the peer and leader weights.
//! * leader rows: `messages` are the messages the leader was shown; `weights`
//!   (optional) are the observed selective coefficients over those messages,
//!   taken at the leader's final opinion.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::calibration::PreferenceObservation;
use crate::error::{Error, Result, RowIssue};
use crate::model::{AgentPopulation, InfluenceMatrix, LeaderPopulation, PreferenceCoeffs};

const SUM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Leader,
    Agent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRow {
    pub scenario_id: String,
    pub subject_id: String,
    pub role: Role,
    pub initial_opinion: f64,
    pub final_opinion: f64,
    pub stubbornness: f64,
    pub weights: Vec<f64>,
    pub messages: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawRow {
    scenario_id: String,
    subject_id: String,
    role: String,
    initial_opinion: String,
    final_opinion: String,
    stubbornness: String,
    weights: String,
    messages: String,
}

/// A validated dataset. Construction checks every row and reports all
/// violations at once.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedDataset {
    rows: Vec<DatasetRow>,
    scenarios: Vec<Scenario>,
}

/// Row indices of one scenario, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    subjects: Vec<usize>,
    leaders: Vec<usize>,
    agents: Vec<usize>,
}

fn parse_list(field: &str, text: &str) -> std::result::Result<Vec<f64>, String> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(';')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("{field}: `{t}` is not a number"))
        })
        .collect()
}

fn parse_num(field: &str, text: &str) -> std::result::Result<f64, String> {
    text.trim()
        .parse::<f64>()
        .map_err(|_| format!("{field}: `{text}` is not a number"))
}

fn join_list(v: &[f64]) -> String {
    v.iter()
        .map(|x| super::output::format_float(*x))
        .collect::<Vec<_>>()
        .join(";")
}

fn in_unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

impl ObservedDataset {
    pub fn new(rows: Vec<DatasetRow>) -> Result<Self> {
        // line numbers assume the header occupies line 1
        let lines: Vec<usize> = (0..rows.len()).map(|i| i + 2).collect();
        Self::checked(rows, &lines, Vec::new())
    }

    /// Validates `rows` (row `i` came from line `lines[i]`), adding any
    /// issues to those already found while parsing.
    fn checked(rows: Vec<DatasetRow>, lines: &[usize], mut issues: Vec<RowIssue>) -> Result<Self> {
        let line = |i: usize| lines[i];
        let parse_failures = !issues.is_empty();
        let mut by_id: HashMap<&str, usize> = HashMap::new();
        let mut scenarios: Vec<Scenario> = Vec::new();
        let mut seen: HashMap<(&str, &str), usize> = HashMap::new();

        for (i, r) in rows.iter().enumerate() {
            for (name, v) in [
                ("initial_opinion", r.initial_opinion),
                ("final_opinion", r.final_opinion),
                ("stubbornness", r.stubbornness),
            ] {
                if !in_unit(v) {
                    issues.push(RowIssue {
                        line: line(i),
                        reason: format!("{name} = {v} is outside [0, 1]"),
                    });
                }
            }
            if r.messages.iter().any(|s| !in_unit(*s)) {
                issues.push(RowIssue {
                    line: line(i),
                    reason: "messages must lie in [0, 1]".into(),
                });
            }
            if r.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                issues.push(RowIssue {
                    line: line(i),
                    reason: "weights must be nonnegative".into(),
                });
            }
            if let Some(first) = seen.insert((&r.scenario_id, &r.subject_id), i) {
                issues.push(RowIssue {
                    line: line(i),
                    reason: format!(
                        "subject `{}` already appears in scenario `{}` on line {}",
                        r.subject_id,
                        r.scenario_id,
                        line(first)
                    ),
                });
                continue;
            }
            let k = *by_id.entry(&r.scenario_id).or_insert_with(|| {
                scenarios.push(Scenario {
                    id: r.scenario_id.clone(),
                    subjects: Vec::new(),
                    leaders: Vec::new(),
                    agents: Vec::new(),
                });
                scenarios.len() - 1
            });
            let sc = &mut scenarios[k];
            sc.subjects.push(i);
            match r.role {
                Role::Leader => sc.leaders.push(i),
                Role::Agent => sc.agents.push(i),
            }
        }

        for sc in &scenarios {
            if sc.leaders.is_empty() {
                issues.push(RowIssue {
                    line: line(sc.subjects[0]),
                    reason: format!("scenario `{}` has no leader rows", sc.id),
                });
            } else if sc.leaders.iter().all(|&i| rows[i].messages.is_empty()) {
                issues.push(RowIssue {
                    line: line(sc.leaders[0]),
                    reason: format!("scenario `{}` has no messages on any leader row", sc.id),
                });
            }
            for &i in &sc.agents {
                let w = &rows[i].weights;
                if w.len() != sc.subjects.len() {
                    issues.push(RowIssue {
                        line: line(i),
                        reason: format!(
                            "agent weights have {} entries, scenario `{}` has {} subjects",
                            w.len(),
                            sc.id,
                            sc.subjects.len()
                        ),
                    });
                } else if (w.iter().sum::<f64>() - 1.0).abs() > SUM_TOL {
                    issues.push(RowIssue {
                        line: line(i),
                        reason: "weights must sum to 1".into(),
                    });
                }
            }
            for &i in &sc.leaders {
                let r = &rows[i];
                if r.weights.is_empty() {
                    continue;
                }
                if r.weights.len() != r.messages.len() {
                    issues.push(RowIssue {
                        line: line(i),
                        reason: format!(
                            "leader weights have {} entries for {} messages",
                            r.weights.len(),
                            r.messages.len()
                        ),
                    });
                } else if (r.weights.iter().sum::<f64>() - 1.0).abs() > SUM_TOL {
                    issues.push(RowIssue {
                        line: line(i),
                        reason: "weights must sum to 1".into(),
                    });
                }
            }
        }

        if rows.is_empty() && !parse_failures {
            issues.push(RowIssue {
                line: 1,
                reason: "dataset has no rows".into(),
            });
        }
        if !issues.is_empty() {
            issues.sort_by_key(|i| i.line);
            return Err(Error::Schema(issues));
        }
        Ok(Self { rows, scenarios })
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut rows = Vec::new();
        let mut lines = Vec::new();
        let mut issues = Vec::new();
        for (i, rec) in rdr.deserialize::<RawRow>().enumerate() {
            let line = i + 2;
            let raw = match rec {
                Ok(r) => r,
                Err(e) => {
                    issues.push(RowIssue {
                        line,
                        reason: e.to_string(),
                    });
                    continue;
                }
            };
            match parse_row(raw) {
                Ok(r) => {
                    rows.push(r);
                    lines.push(line);
                }
                Err(reason) => issues.push(RowIssue { line, reason }),
            }
        }
        Self::checked(rows, &lines, issues)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    pub fn to_writer<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        for r in &self.rows {
            w.serialize(RawRow {
                scenario_id: r.scenario_id.clone(),
                subject_id: r.subject_id.clone(),
                role: match r.role {
                    Role::Leader => "leader".into(),
                    Role::Agent => "agent".into(),
                },
                initial_opinion: super::output::format_float(r.initial_opinion),
                final_opinion: super::output::format_float(r.final_opinion),
                stubbornness: super::output::format_float(r.stubbornness),
                weights: join_list(&r.weights),
                messages: join_list(&r.messages),
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.to_writer(f)
    }

    pub fn rows(&self) -> &[DatasetRow] {
        &self.rows
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    pub fn leaders<'a>(&'a self, sc: &'a Scenario) -> impl Iterator<Item = &'a DatasetRow> + 'a {
        sc.leaders.iter().map(move |&i| &self.rows[i])
    }

    pub fn agents<'a>(&'a self, sc: &'a Scenario) -> impl Iterator<Item = &'a DatasetRow> + 'a {
        sc.agents.iter().map(move |&i| &self.rows[i])
    }

    /// Leader population of a scenario with the given preference coefficients.
    pub fn leader_population(&self, sc: &Scenario, prefs: PreferenceCoeffs) -> Result<LeaderPopulation> {
        LeaderPopulation::new(
            self.leaders(sc).map(|r| r.initial_opinion).collect(),
            self.leaders(sc).map(|r| r.stubbornness).collect(),
            prefs,
        )
    }

    /// Agent population of a scenario, decoded from the per-subject weight rows.
    /// `None` when the scenario has no agents.
    pub fn agent_population(&self, sc: &Scenario) -> Result<Option<AgentPopulation>> {
        let q = sc.agents.len();
        if q == 0 {
            return Ok(None);
        }
        let p = sc.leaders.len();
        let mut w = DMatrix::zeros(q, q);
        let mut u = DMatrix::zeros(q, p);
        let (mut rho, mut pi, mut theta) = (Vec::new(), Vec::new(), Vec::new());
        for (a, &row) in sc.agents.iter().enumerate() {
            let r = &self.rows[row];
            let (mut wa, mut ul) = (0usize, 0usize);
            for (k, &subj) in sc.subjects.iter().enumerate() {
                match self.rows[subj].role {
                    Role::Agent => {
                        w[(a, wa)] = r.weights[k];
                        wa += 1;
                    }
                    Role::Leader => {
                        u[(a, ul)] = r.weights[k];
                        ul += 1;
                    }
                }
            }
            let peer: f64 = w.row(a).sum();
            let lead: f64 = u.row(a).sum();
            normalize_row(&mut w, a, peer);
            normalize_row(&mut u, a, lead);
            let free = 1.0 - r.stubbornness;
            let share = peer / (peer + lead);
            rho.push(r.stubbornness);
            pi.push(free * share);
            theta.push((1.0 - r.stubbornness - free * share).max(0.0));
        }
        let w = InfluenceMatrix::dense("W", w)?;
        let u = InfluenceMatrix::dense("U", u)?;
        let x0 = self.agents(sc).map(|r| r.initial_opinion).collect();
        AgentPopulation::new(x0, rho, pi, theta, w, u).map(Some)
    }

    /// All messages shown to the scenario's leaders, pooled in file order.
    pub fn message_pool(&self, sc: &Scenario) -> Vec<f64> {
        self.leaders(sc).flat_map(|r| r.messages.iter().copied()).collect()
    }

    /// Leader rows carrying observed selective coefficients, as estimator input.
    pub fn preference_observations(&self) -> Result<Vec<PreferenceObservation>> {
        self.rows
            .iter()
            .filter(|r| r.role == Role::Leader && !r.weights.is_empty())
            .map(|r| PreferenceObservation::new(r.final_opinion, r.messages.clone(), r.weights.clone()))
            .collect()
    }
}

/// Scales a row to sum to one; an all-zero row becomes uniform (its block
/// then carries zero weight, so the choice does not affect the dynamics).
fn normalize_row(m: &mut DMatrix<f64>, row: usize, sum: f64) {
    let cols = m.ncols();
    for j in 0..cols {
        m[(row, j)] = if sum > 0.0 {
            m[(row, j)] / sum
        } else {
            1.0 / cols as f64
        };
    }
}

fn parse_row(raw: RawRow) -> std::result::Result<DatasetRow, String> {
    let role = match raw.role.trim().to_ascii_lowercase().as_str() {
        "leader" => Role::Leader,
        "agent" => Role::Agent,
        other => return Err(format!("role: `{other}` is neither `leader` nor `agent`")),
    };
    if raw.scenario_id.trim().is_empty() {
        return Err("scenario_id is empty".into());
    }
    if raw.subject_id.trim().is_empty() {
        return Err("subject_id is empty".into());
    }
    Ok(DatasetRow {
        scenario_id: raw.scenario_id,
        subject_id: raw.subject_id,
        role,
        initial_opinion: parse_num("initial_opinion", &raw.initial_opinion)?,
        final_opinion: parse_num("final_opinion", &raw.final_opinion)?,
        stubbornness: parse_num("stubbornness", &raw.stubbornness)?,
        weights: parse_list("weights", &raw.weights)?,
        messages: parse_list("messages", &raw.messages)?,
    })
}
