//! Monte-Carlo batches of full-horizon solves and their summary statistics.
//!
//! Everything except the wall-time fields is a pure function of the
//! Monte-Carlo config, the base scenario and the solver config.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::game::build_potential_ocp;
use crate::ilqr::{self, SolverConfig};
use crate::par::{map_indexed, Execution};
use crate::scenarios::{sample_initials, unicycle_agent, CouplingSpec, MonteCarloConfig, ScenarioConfig, TimingSpec};
use crate::runner::WarmStart;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub index: usize,
    pub converged: bool,
    pub iterations: usize,
    pub final_cost: f64,
    pub monotone: bool,
    pub wall_time_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Solves sample `k` of the batch. Failures are recorded, never raised.
pub fn solve_sample(mc: &MonteCarloConfig, base: &ScenarioConfig, k: usize) -> SampleOutcome {
    let failed = |e: crate::Error| SampleOutcome {
        index: k,
        converged: false,
        iterations: 0,
        final_cost: f64::NAN,
        monotone: true,
        wall_time_ms: 0.0,
        error: Some(e.to_string()),
    };
    let run = || -> Result<SampleOutcome> {
        let cfg = sample_initials(mc, base, k)?;
        let ocp = build_potential_ocp(&cfg.full_game()?)?;
        let sol = ilqr::solve(&ocp, &cfg.initial_state(), None, &cfg.solver)?;
        Ok(SampleOutcome {
            index: k,
            converged: sol.report.converged,
            iterations: sol.report.iterations,
            final_cost: sol.report.final_cost(),
            monotone: sol.report.is_monotone(),
            wall_time_ms: sol.report.wall_time_ms,
            error: None,
        })
    };
    run().unwrap_or_else(failed)
}

/// Runs every sample; results are ordered by sample index regardless of
/// scheduling.
pub fn run_monte_carlo(mc: &MonteCarloConfig, base: &ScenarioConfig, exec: Execution) -> Result<Vec<SampleOutcome>> {
    mc.validate()?;
    base.validate()?;
    Ok(map_indexed(mc.samples, exec, |k| solve_sample(mc, base, k)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub width: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Equal-width bins over `[min, max]` of the values.
    pub fn of(values: &[f64], bins: usize) -> Self {
        let bins = bins.max(1);
        if values.is_empty() {
            return Self { lo: 0.0, width: 0.0, counts: vec![0; bins] };
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
        let mut counts = vec![0; bins];
        for v in values {
            let b = (((v - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        Self { lo, width, counts }
    }

    /// Unit-width bins for integer data from `0` to the maximum.
    pub fn of_counts(values: &[usize]) -> Self {
        let max = values.iter().copied().max().unwrap_or(0);
        let mut counts = vec![0; max + 1];
        for &v in values {
            counts[v] += 1;
        }
        Self { lo: 0.0, width: 1.0, counts }
    }
}

/// Scheduling-independent part of the statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterministicStats {
    pub samples: usize,
    pub converged: usize,
    pub failed: usize,
    pub non_monotone: usize,
    pub iteration_mean: f64,
    pub iteration_std: f64,
    pub iteration_histogram: Histogram,
    pub cost_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub mean_ms: f64,
    pub std_ms: f64,
    pub min_ms: f64,
    pub p50_ms: f64,
    pub p90_ms: f64,
    pub p99_ms: f64,
    pub max_ms: f64,
    pub histogram: Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchStats {
    pub seed: u64,
    pub deterministic: DeterministicStats,
    /// Wall-clock measurements; excluded from reproducibility guarantees.
    pub timing: TimingStats,
}

impl BenchStats {
    pub fn convergence_rate(&self) -> f64 {
        self.deterministic.converged as f64 / self.deterministic.samples as f64
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Nearest-rank percentile of sorted data.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

pub fn summarize(seed: u64, outcomes: &[SampleOutcome], bins: usize) -> BenchStats {
    let iterations: Vec<usize> = outcomes.iter().map(|o| o.iterations).collect();
    let iter_f: Vec<f64> = iterations.iter().map(|&i| i as f64).collect();
    let (iteration_mean, iteration_std) = mean_std(&iter_f);
    let costs: Vec<f64> = outcomes.iter().filter(|o| o.converged).map(|o| o.final_cost).collect();
    let mut times: Vec<f64> = outcomes.iter().filter(|o| o.error.is_none()).map(|o| o.wall_time_ms).collect();
    times.sort_by(f64::total_cmp);
    let (mean_ms, std_ms) = mean_std(&times);
    BenchStats {
        seed,
        deterministic: DeterministicStats {
            samples: outcomes.len(),
            converged: outcomes.iter().filter(|o| o.converged).count(),
            failed: outcomes.iter().filter(|o| o.error.is_some()).count(),
            non_monotone: outcomes.iter().filter(|o| !o.monotone).count(),
            iteration_mean,
            iteration_std,
            iteration_histogram: Histogram::of_counts(&iterations),
            cost_mean: mean_std(&costs).0,
        },
        timing: TimingStats {
            mean_ms,
            std_ms,
            min_ms: times.first().copied().unwrap_or(f64::NAN),
            p50_ms: percentile(&times, 50.0),
            p90_ms: percentile(&times, 90.0),
            p99_ms: percentile(&times, 99.0),
            max_ms: times.last().copied().unwrap_or(f64::NAN),
            histogram: Histogram::of(&times, bins),
        },
    }
}

/// `n` unicycles evenly spaced on a circle of radius `radius`, each heading
/// for the antipodal point.
pub fn circle_scenario(n: usize, radius: f64, horizon_s: f64) -> ScenarioConfig {
    let agents = (0..n)
        .map(|k| {
            let b = 2.0 * PI * k as f64 / n as f64;
            let heading = crate::costs::wrap_angle(b + PI);
            let (s, c) = b.sin_cos();
            unicycle_agent([radius * c, radius * s, heading, 1.0], [-radius * c, -radius * s, heading, 0.0])
        })
        .collect();
    ScenarioConfig {
        name: Some(format!("circle{n}")),
        agents,
        coupling: CouplingSpec {
            beta: 50.0,
            d_prox: 2.4,
            pairs: Vec::new(),
        },
        timing: TimingSpec {
            dt: 0.1,
            plan_horizon_s: 1.0,
            duration_s: horizon_s,
            stop_tolerance_m: 0.1,
            warm_start: WarmStart::Shift,
        },
        solver: SolverConfig::default(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub agents: usize,
    pub state_dim: usize,
    /// Median wall time of one solver round.
    pub per_iteration_ms: f64,
}

/// Times solver rounds on [`circle_scenario`] for each agent count: the
/// median over every outer round of `repetitions` zero-initialized solves.
pub fn measure_scaling(agent_counts: &[usize], repetitions: usize, horizon_s: f64) -> Result<Vec<ScalingPoint>> {
    agent_counts
        .iter()
        .map(|&n| {
            let cfg = circle_scenario(n, 4.0 * n as f64, horizon_s);
            let game = cfg.full_game()?;
            let ocp = build_potential_ocp(&game)?;
            let x0 = cfg.initial_state();
            let mut rounds = Vec::new();
            for _ in 0..repetitions.max(1) {
                rounds.extend(ilqr::solve(&ocp, &x0, None, &cfg.solver)?.report.round_times_ms);
            }
            rounds.sort_by(f64::total_cmp);
            Ok(ScalingPoint {
                agents: n,
                state_dim: game.layout().state_dim(),
                per_iteration_ms: rounds[rounds.len() / 2],
            })
        })
        .collect()
}

/// Least-squares slope of `log t` against `log n`.
pub fn power_law_exponent(points: &[ScalingPoint]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| (p.state_dim as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.per_iteration_ms.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
