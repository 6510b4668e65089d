//! Scenario documents (strict JSON), built-in scenarios and seeded
//! Monte-Carlo sampling of initial conditions.
//!
//! Agent indices in documents are zero-based.
//!
//! Monte-Carlo draws use ChaCha8 seeded with the 64-bit batch seed, one
//! stream per sample (`set_stream(k)`), so sample `k` is a pure function of
//! `(seed, k)` on every platform and independent of evaluation order.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::costs::{wrap_angle, CollisionCost, TrackingCost};
use crate::dynamics::AgentModel;
use crate::error::{check_len, Error, Result};
use crate::game::{uniform_coupling, Agent, GameDefinition};
use crate::ilqr::SolverConfig;
use crate::runner::{MpcConfig, WarmStart};

/// Initial roll (rad) of the first quadrotor in the built-in swap scenarios.
pub const QUAD_INITIAL_ROLL: f64 = 0.02;

pub const BUILTIN_NAMES: [&str; 3] = ["intersection3", "quad_swap", "quad_diagonal"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub model: AgentModel,
    pub start: Vec<f64>,
    pub goal: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_diag: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_diag: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qt_diag: Option<Vec<f64>>,
}

impl AgentSpec {
    pub fn q(&self) -> Vec<f64> {
        self.q_diag.clone().unwrap_or_else(|| default_q(self.model))
    }

    pub fn r(&self) -> Vec<f64> {
        self.r_diag.clone().unwrap_or_else(|| vec![1.0; self.model.input_dim()])
    }

    pub fn qt(&self) -> Vec<f64> {
        self.qt_diag.clone().unwrap_or_else(|| self.q().iter().map(|w| 10.0 * w).collect())
    }

    fn tracking(&self) -> Result<TrackingCost> {
        TrackingCost::new(self.q(), self.r(), self.goal.clone(), self.model.angle_indices().to_vec())?.with_terminal(self.qt())
    }
}

/// Default running state weights per model kind.
pub fn default_q(model: AgentModel) -> Vec<f64> {
    match model {
        AgentModel::Unicycle4 => vec![10.0, 10.0, 1.0, 1.0],
        AgentModel::Quadrotor6 => vec![10.0, 10.0, 10.0, 1.0, 1.0, 1.0],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairOverride {
    pub i: usize,
    pub j: usize,
    pub beta: f64,
    pub d_prox: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSpec {
    pub beta: f64,
    pub d_prox: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pairs: Vec<PairOverride>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingSpec {
    pub dt: f64,
    pub plan_horizon_s: f64,
    pub duration_s: f64,
    #[serde(default = "default_stop_tolerance")]
    pub stop_tolerance_m: f64,
    #[serde(default)]
    pub warm_start: WarmStart,
}

fn default_stop_tolerance() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub agents: Vec<AgentSpec>,
    pub coupling: CouplingSpec,
    pub timing: TimingSpec,
    #[serde(default)]
    pub solver: SolverConfig,
}

/// Parses and validates a scenario document. Errors carry the JSON path and
/// line of the offending field.
pub fn load(document: &str) -> Result<ScenarioConfig> {
    let de = &mut serde_json::Deserializer::from_str(document);
    let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::Config(format!(
            "parse error at `{path}` (line {}, column {}): {inner}",
            inner.line(),
            inner.column()
        ))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_file(path: &std::path::Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    load(&text)
}

impl ScenarioConfig {
    /// Canonical JSON form.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.agents.is_empty() {
            return Err(Error::Config("scenario needs at least one agent".into()));
        }
        for (k, a) in self.agents.iter().enumerate() {
            let ctx = |what: &str| format!("agents[{k}].{what}");
            let n = a.model.state_dim();
            if a.start.len() != n {
                return Err(Error::Config(format!("{}: {} expects {n} entries, got {}", ctx("start"), a.model.name(), a.start.len())));
            }
            if a.goal.len() != n {
                return Err(Error::Config(format!("{}: {} expects {n} entries, got {}", ctx("goal"), a.model.name(), a.goal.len())));
            }
            check_len("agent input weights", a.model.input_dim(), a.r().len())?;
            check_len("agent state weights", n, a.q().len())?;
            check_len("agent terminal weights", n, a.qt().len())?;
            if a.start.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("agent start state"));
            }
            a.tracking().map_err(|e| Error::Config(format!("agents[{k}]: {e}")))?;
        }
        CollisionCost::new(self.coupling.d_prox, self.coupling.beta, vec![0], vec![0])?;
        let n = self.agents.len();
        for p in &self.coupling.pairs {
            if p.i >= n || p.j >= n || p.i == p.j {
                return Err(Error::Config(format!("invalid coupling pair ({}, {})", p.i, p.j)));
            }
            CollisionCost::new(p.d_prox, p.beta, vec![0], vec![0])?;
            for q in &self.coupling.pairs {
                let mirrored = (q.i == p.j && q.j == p.i) || (q.i == p.i && q.j == p.j);
                if mirrored && (q.beta != p.beta || q.d_prox != p.d_prox) {
                    let (a, b) = (p.i.min(p.j), p.i.max(p.j));
                    return Err(Error::Config(format!(
                        "asymmetric coupling for pair ({a}, {b}): beta {} vs {}, d_prox {} vs {}",
                        p.beta, q.beta, p.d_prox, q.d_prox
                    )));
                }
            }
        }
        let t = &self.timing;
        if !(t.dt > 0.0) {
            return Err(Error::InvalidTimeStep(t.dt));
        }
        if self.plan_horizon_steps() < 2 {
            return Err(Error::Config("timing.plan_horizon_s must cover at least two steps".into()));
        }
        if self.full_horizon_steps() < 1 {
            return Err(Error::Config("timing.duration_s must cover at least one step".into()));
        }
        if !(t.stop_tolerance_m >= 0.0) {
            return Err(Error::Config("timing.stop_tolerance_m must be non-negative".into()));
        }
        self.solver.validate()
    }

    pub fn plan_horizon_steps(&self) -> usize {
        (self.timing.plan_horizon_s / self.timing.dt).round() as usize
    }

    pub fn full_horizon_steps(&self) -> usize {
        (self.timing.duration_s / self.timing.dt).round() as usize
    }

    pub fn initial_state(&self) -> DVector<f64> {
        let n = self.agents.iter().map(|a| a.start.len()).sum();
        DVector::from_iterator(n, self.agents.iter().flat_map(|a| a.start.iter().copied()))
    }

    /// Game over `horizon` steps with the document's couplings.
    pub fn game(&self, horizon: usize) -> Result<GameDefinition> {
        let agents = self
            .agents
            .iter()
            .map(|a| Agent::new(a.model, a.tracking()?))
            .collect::<Result<Vec<_>>>()?;
        let mut couplings = Vec::new();
        for i in 0..agents.len() {
            for j in 0..agents.len() {
                if i == j {
                    continue;
                }
                let (beta, d_prox) = self
                    .coupling
                    .pairs
                    .iter()
                    .find(|p| (p.i == i && p.j == j) || (p.i == j && p.j == i))
                    .map_or((self.coupling.beta, self.coupling.d_prox), |p| (p.beta, p.d_prox));
                couplings.push((i, j, uniform_coupling(&agents[i], &agents[j], d_prox, beta)?));
            }
        }
        GameDefinition::new(agents, couplings, horizon, self.timing.dt)
    }

    /// Game over the full `duration_s` horizon.
    pub fn full_game(&self) -> Result<GameDefinition> {
        self.game(self.full_horizon_steps())
    }

    pub fn mpc_config(&self) -> MpcConfig {
        MpcConfig {
            plan_horizon_steps: self.plan_horizon_steps(),
            dt: self.timing.dt,
            total_duration: self.timing.duration_s,
            warm_start: self.timing.warm_start,
            solver: self.solver.clone(),
            stop_tolerance: self.timing.stop_tolerance_m,
        }
    }
}

pub(crate) fn unicycle_agent(start: [f64; 4], goal: [f64; 4]) -> AgentSpec {
    let q = default_q(AgentModel::Unicycle4);
    AgentSpec {
        model: AgentModel::Unicycle4,
        start: start.to_vec(),
        goal: goal.to_vec(),
        qt_diag: Some(q.iter().map(|w| 10.0 * w).collect()),
        q_diag: Some(q),
        r_diag: Some(vec![1.0, 1.0]),
    }
}

/// Quadrotor tuned for the swap scenarios: altitude deviations are cheap
/// relative to horizontal ones and translational velocity is penalized more
/// than body rates, so conflicts resolve by climbing or descending at
/// moderate speed.
fn quad_agent(start: [f64; 3], goal: [f64; 3], roll: f64) -> AgentSpec {
    let q = vec![10.0, 10.0, 1.0, 1.0, 1.0, 1.0];
    AgentSpec {
        model: AgentModel::Quadrotor6,
        start: vec![start[0], start[1], start[2], roll, 0.0, 0.0],
        goal: vec![goal[0], goal[1], goal[2], 0.0, 0.0, 0.0],
        qt_diag: Some(q.iter().map(|w| 10.0 * w).collect()),
        q_diag: Some(q),
        r_diag: Some(vec![10.0, 10.0, 10.0, 1.0, 1.0, 1.0]),
    }
}

/// Three unicycles 8 m from the origin at bearings 0, 120 and 240 degrees,
/// driving at 2 m/s toward the antipodal goal.
pub fn intersection3() -> ScenarioConfig {
    let agents = [0.0f64, 120.0, 240.0]
        .iter()
        .map(|deg| {
            let b = deg.to_radians();
            let heading = wrap_angle(b + PI);
            let (s, c) = b.sin_cos();
            unicycle_agent([8.0 * c, 8.0 * s, heading, 2.0], [-8.0 * c, -8.0 * s, heading, 0.0])
        })
        .collect();
    ScenarioConfig {
        name: Some("intersection3".into()),
        agents,
        coupling: CouplingSpec {
            beta: 50.0,
            d_prox: 2.4,
            pairs: Vec::new(),
        },
        timing: TimingSpec {
            dt: 0.1,
            plan_horizon_s: 1.0,
            duration_s: 12.0,
            stop_tolerance_m: 0.1,
            warm_start: WarmStart::Shift,
        },
        solver: SolverConfig::default(),
    }
}

fn quad_scenario(name: &str, a: ([f64; 3], [f64; 3]), b: ([f64; 3], [f64; 3])) -> ScenarioConfig {
    ScenarioConfig {
        name: Some(name.into()),
        // The swap is mirror-symmetric in altitude, which leaves the vertical
        // gradient exactly zero. A small initial roll on the first quad (a
        // non-level hover) breaks the tie.
        agents: vec![quad_agent(a.0, a.1, QUAD_INITIAL_ROLL), quad_agent(b.0, b.1, 0.0)],
        coupling: CouplingSpec {
            beta: 50.0,
            d_prox: 1.0,
            pairs: Vec::new(),
        },
        timing: TimingSpec {
            dt: 0.2,
            plan_horizon_s: 1.0,
            duration_s: 8.0,
            stop_tolerance_m: 0.1,
            warm_start: WarmStart::Shift,
        },
        solver: SolverConfig::default(),
    }
}

/// Two quadrotors at equal altitude swapping positions.
pub fn quad_swap() -> ScenarioConfig {
    quad_scenario("quad_swap", ([0.0, 1.0, 2.0], [1.5, 0.0, 2.0]), ([1.5, 0.0, 2.0], [0.0, 1.0, 2.0]))
}

/// Two quadrotors crossing diagonally while climbing one meter.
pub fn quad_diagonal() -> ScenarioConfig {
    quad_scenario("quad_diagonal", ([0.0, 1.0, 1.5], [1.5, 0.0, 2.5]), ([1.5, 0.0, 1.5], [0.0, 1.0, 2.5]))
}

pub fn builtin(name: &str) -> Result<ScenarioConfig> {
    match name {
        "intersection3" => Ok(intersection3()),
        "quad_swap" => Ok(quad_swap()),
        "quad_diagonal" => Ok(quad_diagonal()),
        other => Err(Error::UnknownScenario(other.to_string())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloConfig {
    pub samples: usize,
    pub seed: u64,
    /// Position box `[lo, hi]` applied to both planar coordinates (meters).
    pub position_range: (f64, f64),
    /// Heading range `[lo, hi)` in radians.
    pub heading_range: (f64, f64),
    /// Speed range in m/s.
    pub speed_range: (f64, f64),
    pub horizon_s: f64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            samples: 1000,
            seed: 42,
            position_range: (-10.0, 10.0),
            heading_range: (-PI, PI),
            speed_range: (0.0, 3.0),
            horizon_s: 5.0,
        }
    }
}

impl MonteCarloConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo < hi;
        if self.samples < 1 {
            return Err(Error::Config("sample count must be at least 1".into()));
        }
        if !ok(self.position_range) || !ok(self.heading_range) || !ok(self.speed_range) {
            return Err(Error::Config("sampling ranges must be non-degenerate".into()));
        }
        if !(self.horizon_s > 0.0) {
            return Err(Error::Config("prediction horizon must be positive".into()));
        }
        Ok(())
    }
}

/// Sample `k` of the batch: planar positions, headings and speeds drawn
/// uniformly; goals, weights and couplings inherited from `base`.
pub fn sample_initials(mc: &MonteCarloConfig, base: &ScenarioConfig, k: usize) -> Result<ScenarioConfig> {
    mc.validate()?;
    if k >= mc.samples {
        return Err(Error::Config(format!("sample index {k} out of range for {} samples", mc.samples)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mc.seed);
    rng.set_stream(k as u64);
    let mut cfg = base.clone();
    for agent in &mut cfg.agents {
        let (lo, hi) = mc.position_range;
        agent.start[0] = rng.gen_range(lo..hi);
        agent.start[1] = rng.gen_range(lo..hi);
        if agent.model == AgentModel::Unicycle4 {
            agent.start[2] = rng.gen_range(mc.heading_range.0..mc.heading_range.1);
            agent.start[3] = rng.gen_range(mc.speed_range.0..mc.speed_range.1);
        }
    }
    cfg.timing.duration_s = mc.horizon_s;
    cfg.name = Some(format!("{}#{k}", base.name.as_deref().unwrap_or("scenario")));
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_have_expected_layout() {
        let s = builtin("intersection3").unwrap();
        assert_eq!(s.agents.len(), 3);
        assert_eq!(s.timing.dt, 0.1);
        assert_eq!(s.coupling.d_prox, 2.4);
        assert_eq!(s.plan_horizon_steps(), 10);

        let q = builtin("quad_swap").unwrap();
        assert_eq!(&q.agents[0].start[..3], &[0.0, 1.0, 2.0]);
        assert_eq!(&q.agents[1].start[..3], &[1.5, 0.0, 2.0]);
        assert_eq!(&q.agents[0].goal[..3], &q.agents[1].start[..3]);
        assert_eq!(&q.agents[1].goal[..3], &q.agents[0].start[..3]);
        assert_eq!(q.plan_horizon_steps(), 5);

        let d = builtin("quad_diagonal").unwrap();
        for a in &d.agents {
            assert_eq!(a.goal[2] - a.start[2], 1.0);
        }
        assert_eq!(&d.agents[0].start[..3], &[0.0, 1.0, 1.5]);
        assert_eq!(&d.agents[0].goal[..3], &[1.5, 0.0, 2.5]);

        assert!(matches!(builtin("nope"), Err(Error::UnknownScenario(_))));
    }

    #[test]
    fn asymmetric_override_rejected() {
        let mut s = intersection3();
        s.coupling.pairs = vec![
            PairOverride {
                i: 0,
                j: 1,
                beta: 1.0,
                d_prox: 2.4,
            },
            PairOverride {
                i: 1,
                j: 0,
                beta: 2.0,
                d_prox: 2.4,
            },
        ];
        let err = load(&s.to_json()).unwrap_err().to_string();
        assert!(err.contains("pair (0, 1)"), "{err}");
    }

    #[test]
    fn wrong_state_length_rejected() {
        let mut s = intersection3();
        s.agents[0].start = vec![0.0; 6];
        let err = load(&s.to_json()).unwrap_err().to_string();
        assert!(err.contains("agents[0].start"), "{err}");
    }

    #[test]
    fn unknown_field_rejected_with_path() {
        let mut v: serde_json::Value = serde_json::from_str(&intersection3().to_json()).unwrap();
        v["timing"]["dtt"] = serde_json::json!(0.1);
        let err = load(&v.to_string()).unwrap_err().to_string();
        assert!(err.contains("timing"), "{err}");
    }

    #[test]
    fn single_override_applies_both_ways() {
        let mut s = intersection3();
        s.coupling.pairs = vec![PairOverride {
            i: 0,
            j: 2,
            beta: 5.0,
            d_prox: 3.0,
        }];
        let g = load(&s.to_json()).unwrap().full_game().unwrap();
        assert_eq!(g.coupling(2, 0).unwrap().beta, 5.0);
        assert!(g.validate_symmetry().passed());
    }

    #[test]
    fn sampling_is_deterministic_and_distinct() {
        let mc = MonteCarloConfig::default();
        let base = intersection3();
        let a = sample_initials(&mc, &base, 0).unwrap();
        let b = sample_initials(&mc, &base, 0).unwrap();
        let c = sample_initials(&mc, &base, 1).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.agents[0].start, c.agents[0].start);
        assert_eq!(a.agents[0].goal, base.agents[0].goal);
        assert!(sample_initials(&mc, &base, 1000).is_err());
    }
}
