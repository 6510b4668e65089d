//! File formats: trajectory CSV, controls JSON and run reports.

use std::fs::File;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use nalgebra::DVector;
use nashplan::dynamics::{AgentModel, JointLayout};
use nashplan::game::NashGapReport;
use nashplan::ilqr::SolveReport;
use nashplan::runner::MpcLog;
use serde::{Deserialize, Serialize};

/// Column names after `t,agent`. A single model kind uses its own names;
/// mixed kinds use generic names sized to the widest model.
pub fn column_names(models: &[AgentModel]) -> (Vec<String>, Vec<String>) {
    let owned = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    match models.first() {
        Some(&first) if models.iter().all(|&m| m == first) => (owned(first.state_names()), owned(first.input_names())),
        _ => {
            let n = models.iter().map(|m| m.state_dim()).max().unwrap_or(0);
            let m = models.iter().map(|m| m.input_dim()).max().unwrap_or(0);
            ((0..n).map(|k| format!("x{k}")).collect(), (0..m).map(|k| format!("u{k}")).collect())
        }
    }
}

fn knot_time(k: usize, dt: f64) -> f64 {
    (k as f64 * dt * 1e9).round() / 1e9
}

/// Long format: one row per (knot, agent). The last knot has no inputs.
pub fn write_trajectory_csv(
    path: &Path,
    layout: &JointLayout,
    dt: f64,
    states: &[DVector<f64>],
    controls: &[DVector<f64>],
) -> Result<()> {
    let (state_cols, input_cols) = column_names(layout.models());
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    let mut header = vec!["t".to_string(), "agent".to_string()];
    header.extend(state_cols.iter().cloned());
    header.extend(input_cols.iter().cloned());
    w.write_record(&header)?;
    for (k, x) in states.iter().enumerate() {
        for i in 0..layout.agents() {
            let mut row = vec![knot_time(k, dt).to_string(), i.to_string()];
            let xi = &x.as_slice()[layout.state_range(i)];
            row.extend(xi.iter().map(f64::to_string));
            row.resize(2 + state_cols.len(), String::new());
            if let Some(u) = controls.get(k) {
                row.extend(u.as_slice()[layout.input_range(i)].iter().map(f64::to_string));
            }
            row.resize(header.len(), String::new());
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One agent's executed trajectory read back from a CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub agent: usize,
    pub times: Vec<f64>,
    /// State rows; missing trailing cells of padded columns are dropped.
    pub states: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    pub state_columns: Vec<String>,
    pub tracks: Vec<Track>,
}

impl TrajectoryTable {
    /// Altitude column index, if the table has one.
    pub fn altitude_column(&self) -> Option<usize> {
        self.state_columns.iter().position(|c| c == "pz")
    }
}

pub fn read_trajectory_csv(path: &Path) -> Result<TrajectoryTable> {
    let file = File::open(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header: Vec<String> = r.headers().context("missing header")?.iter().map(str::to_string).collect();
    ensure!(header.len() >= 4 && header[0] == "t" && header[1] == "agent", "header must start with `t,agent` followed by state columns");
    let state_columns: Vec<String> = header[2..]
        .iter()
        .take_while(|c| {
            AgentModel::Unicycle4.state_names().contains(&c.as_str())
                || AgentModel::Quadrotor6.state_names().contains(&c.as_str())
                || (c.starts_with('x') && c[1..].parse::<usize>().is_ok())
        })
        .cloned()
        .collect();
    ensure!(state_columns.len() >= 2, "no position columns in header");

    let mut tracks: Vec<Track> = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record.with_context(|| format!("row {}", line + 2))?;
        let num = |k: usize| -> Result<f64> {
            let cell = record.get(k).unwrap_or("");
            cell.trim().parse::<f64>().with_context(|| format!("row {}: bad number `{cell}` in column {}", line + 2, header[k]))
        };
        let t = num(0)?;
        let agent: usize = record[1].trim().parse().with_context(|| format!("row {}: bad agent index", line + 2))?;
        let mut state = Vec::with_capacity(state_columns.len());
        for k in 0..state_columns.len() {
            match record.get(2 + k).map(str::trim) {
                Some("") | None => break,
                Some(_) => state.push(num(2 + k)?),
            }
        }
        ensure!(state.len() >= 2, "row {}: missing position", line + 2);
        ensure!(state.iter().all(|v| v.is_finite()) && t.is_finite(), "row {}: non-finite value", line + 2);
        match tracks.iter_mut().find(|tr| tr.agent == agent) {
            Some(tr) => {
                ensure!(t > *tr.times.last().unwrap(), "row {}: time does not increase for agent {agent}", line + 2);
                tr.times.push(t);
                tr.states.push(state);
            }
            None => tracks.push(Track { agent, times: vec![t], states: vec![state] }),
        }
    }
    if tracks.is_empty() {
        bail!("trajectory has no rows");
    }
    tracks.sort_by_key(|t| t.agent);
    Ok(TrajectoryTable { state_columns, tracks })
}

/// Open-loop joint controls, one row per time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlsFile {
    pub dt: f64,
    pub controls: Vec<Vec<f64>>,
}

impl ControlsFile {
    pub fn new(dt: f64, controls: &[DVector<f64>]) -> Self {
        Self {
            dt,
            controls: controls.iter().map(|u| u.as_slice().to_vec()).collect(),
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("malformed controls file {}", path.display()))
    }

    /// Checks dimensions against the game and converts to vectors.
    pub fn to_vectors(&self, horizon: usize, input_dim: usize, dt: f64) -> Result<Vec<DVector<f64>>> {
        ensure!((self.dt - dt).abs() <= 1e-12, "controls dt {} differs from scenario dt {dt}", self.dt);
        ensure!(self.controls.len() == horizon, "expected {horizon} control rows, found {}", self.controls.len());
        self.controls
            .iter()
            .enumerate()
            .map(|(t, u)| {
                ensure!(u.len() == input_dim, "control row {t} has {} entries, expected {input_dim}", u.len());
                ensure!(u.iter().all(|v| v.is_finite()), "control row {t} is not finite");
                Ok(DVector::from_column_slice(u))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveRunReport {
    pub scenario: String,
    pub agents: usize,
    pub horizon: usize,
    pub dt: f64,
    pub solve: SolveReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nash: Option<NashGapReport>,
    pub min_distance: f64,
    pub final_goal_errors: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplanSummary {
    pub step: usize,
    pub degraded: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<SolveReport>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MpcRunReport {
    pub scenario: String,
    pub agents: usize,
    pub dt: f64,
    pub plan_horizon: usize,
    pub executed_steps: usize,
    pub reached_goals: bool,
    pub degraded: bool,
    pub min_distance: f64,
    pub final_goal_errors: Vec<f64>,
    pub replans: Vec<ReplanSummary>,
}

impl MpcRunReport {
    pub fn new(scenario: String, plan_horizon: usize, log: &MpcLog) -> Self {
        Self {
            scenario,
            agents: log.goal_errors[0].len(),
            dt: log.dt,
            plan_horizon,
            executed_steps: log.controls.len(),
            reached_goals: log.reached_goals,
            degraded: log.any_degraded(),
            min_distance: log.overall_min_distance(),
            final_goal_errors: log.goal_errors.last().cloned().unwrap_or_default(),
            replans: log
                .replans
                .iter()
                .map(|r| ReplanSummary {
                    step: r.step,
                    degraded: r.degraded,
                    report: r.report.clone(),
                })
                .collect(),
        }
    }
}

/// Planned joint states of one replan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanRecord {
    pub step: usize,
    pub states: Vec<Vec<f64>>,
    pub controls: Vec<Vec<f64>>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
}
