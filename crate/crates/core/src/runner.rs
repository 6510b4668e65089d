//! Receding-horizon execution of the potential problem: plan over a short
//! horizon, execute the first control, advance, replan.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{build_potential_ocp, GameDefinition};
use crate::ilqr::{self, SolveReport, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WarmStart {
    /// Previous plan shifted one step, last control repeated.
    #[default]
    Shift,
    /// Zero controls on every replan.
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpcConfig {
    pub plan_horizon_steps: usize,
    pub dt: f64,
    pub total_duration: f64,
    pub warm_start: WarmStart,
    pub solver: SolverConfig,
    /// Stop once every agent is this close (meters) to its goal position.
    pub stop_tolerance: f64,
}

impl MpcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.plan_horizon_steps < 2 {
            return Err(Error::Config("plan horizon needs at least two steps".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidTimeStep(self.dt));
        }
        if !(self.total_duration >= self.dt * (1.0 - 1e-9)) {
            return Err(Error::Config("total duration must cover at least one step".into()));
        }
        if !(self.stop_tolerance >= 0.0) {
            return Err(Error::Config("stop tolerance must be non-negative".into()));
        }
        self.solver.validate()
    }

    /// Number of executed control intervals at full duration.
    pub fn total_steps(&self) -> usize {
        (self.total_duration / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replan {
    /// Index of the executed step this plan was computed for.
    pub step: usize,
    pub report: Option<SolveReport>,
    pub planned_states: Vec<DVector<f64>>,
    pub planned_controls: Vec<DVector<f64>>,
    /// The solve failed and the previous plan's next step was used.
    pub degraded: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpcLog {
    pub dt: f64,
    pub states: Vec<DVector<f64>>,
    pub controls: Vec<DVector<f64>>,
    pub replans: Vec<Replan>,
    /// Minimum pairwise distance at every executed state (infinite for one agent).
    pub min_distance: Vec<f64>,
    /// Per-agent distance to goal position at every executed state.
    pub goal_errors: Vec<Vec<f64>>,
    pub reached_goals: bool,
}

impl MpcLog {
    pub fn any_degraded(&self) -> bool {
        self.replans.iter().any(|r| r.degraded)
    }

    pub fn overall_min_distance(&self) -> f64 {
        self.min_distance.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Drops the first control and repeats the last one.
pub fn shift_warm_start(previous: &[DVector<f64>]) -> Vec<DVector<f64>> {
    match previous.split_first() {
        None => Vec::new(),
        Some((_, rest)) => {
            let mut out = rest.to_vec();
            out.push(previous.last().unwrap().clone());
            out
        }
    }
}

/// Minimum pairwise distance between agents as measured by their couplings.
pub fn min_pairwise_distance(game: &GameDefinition, x: &DVector<f64>) -> f64 {
    let layout = game.layout();
    let mut best = f64::INFINITY;
    for i in 0..game.num_agents() {
        for j in i + 1..game.num_agents() {
            let c = game.coupling(i, j).expect("complete coupling table");
            let xi = &x.as_slice()[layout.state_range(i)];
            let xj = &x.as_slice()[layout.state_range(j)];
            let d = c.offset(xi, xj).iter().map(|v| v * v).sum::<f64>().sqrt();
            best = best.min(d);
        }
    }
    best
}

/// Distance from each agent's position to its goal position.
pub fn goal_errors(game: &GameDefinition, x: &DVector<f64>) -> Vec<f64> {
    let layout = game.layout();
    game.agents()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let xi = &x.as_slice()[layout.state_range(i)];
            a.model
                .position_indices()
                .iter()
                .map(|&k| (xi[k] - a.tracking.x_ref[k]).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

pub fn run(game: &GameDefinition, x0: &DVector<f64>, config: &MpcConfig) -> Result<MpcLog> {
    config.validate()?;
    if (config.dt - game.dt()).abs() > 1e-12 {
        return Err(Error::Config(format!(
            "receding-horizon dt {} differs from the game dt {}",
            config.dt,
            game.dt()
        )));
    }
    let ocp = build_potential_ocp(&game.with_horizon(config.plan_horizon_steps)?)?;
    let layout = game.layout();
    if x0.len() != layout.state_dim() {
        return Err(Error::Dimension {
            context: "initial state",
            expected: layout.state_dim(),
            actual: x0.len(),
        });
    }

    let mut log = MpcLog {
        dt: config.dt,
        states: vec![x0.clone()],
        controls: Vec::new(),
        replans: Vec::new(),
        min_distance: vec![min_pairwise_distance(game, x0)],
        goal_errors: vec![goal_errors(game, x0)],
        reached_goals: false,
    };
    let mut plan: Option<Vec<DVector<f64>>> = None;

    for step in 0..config.total_steps() {
        let x = log.states.last().unwrap().clone();
        if log.goal_errors.last().unwrap().iter().all(|e| *e <= config.stop_tolerance) {
            log.reached_goals = true;
            break;
        }
        let init = match config.warm_start {
            WarmStart::Shift => plan.as_deref().map(shift_warm_start),
            WarmStart::Zero => None,
        };
        let solved = ilqr::solve(&ocp, &x, init.as_deref(), &config.solver);
        let replan = match (solved, plan.as_deref()) {
            (Ok(sol), _) if sol.report.converged => Replan {
                step,
                planned_states: sol.trajectory.states,
                planned_controls: sol.controls,
                report: Some(sol.report),
                degraded: false,
            },
            (solved, Some(previous)) => {
                let controls = shift_warm_start(previous);
                let states = ilqr::rollout(&ocp, &controls, &x)?.states;
                Replan {
                    step,
                    report: solved.ok().map(|s| s.report),
                    planned_states: states,
                    planned_controls: controls,
                    degraded: true,
                }
            }
            // No earlier plan to fall back on: keep the unconverged iterate.
            (Ok(sol), None) => Replan {
                step,
                planned_states: sol.trajectory.states,
                planned_controls: sol.controls,
                report: Some(sol.report),
                degraded: true,
            },
            (Err(e), None) => return Err(e),
        };
        let u = replan.planned_controls[0].clone();
        let next = layout.step(&x, &u, config.dt)?;
        plan = Some(replan.planned_controls.clone());
        log.replans.push(replan);
        log.controls.push(u);
        log.min_distance.push(min_pairwise_distance(game, &next));
        log.goal_errors.push(goal_errors(game, &next));
        log.states.push(next);
    }
    if !log.reached_goals {
        log.reached_goals = log.goal_errors.last().unwrap().iter().all(|e| *e <= config.stop_tolerance);
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_keeps_length_and_constants() {
        let c = vec![DVector::from_vec(vec![1.0, 2.0]); 5];
        assert_eq!(shift_warm_start(&c), c);
        let seq: Vec<_> = (0..4).map(|k| DVector::from_element(1, k as f64)).collect();
        let shifted = shift_warm_start(&seq);
        assert_eq!(shifted.len(), 4);
        let vals: Vec<f64> = shifted.iter().map(|v| v[0]).collect();
        assert_eq!(vals, vec![1.0, 2.0, 3.0, 3.0]);
    }

    #[test]
    fn config_validation() {
        let cfg = MpcConfig {
            plan_horizon_steps: 1,
            dt: 0.1,
            total_duration: 1.0,
            warm_start: WarmStart::Shift,
            solver: SolverConfig::default(),
            stop_tolerance: 0.1,
        };
        assert!(cfg.validate().is_err());
        let cfg = MpcConfig {
            plan_horizon_steps: 10,
            total_duration: 0.05,
            ..cfg
        };
        assert!(cfg.validate().is_err());
    }
}
