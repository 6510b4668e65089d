//! Game definitions, symmetry validation, the potential optimal control
//! problem, per-agent costs and best-response Nash verification.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::costs::{collision_pair, project_psd, tracking_running, tracking_terminal, CollisionCost, Potential, TrackingCost};
use crate::dynamics::{self, AgentModel, JointLayout};
use crate::error::{check_len, Error, Result};
use crate::ilqr::{self, ControlProblem, SolveReport, SolverConfig};
use crate::par::{map_indexed, Execution};

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub model: AgentModel,
    pub tracking: TrackingCost,
}

impl Agent {
    pub fn new(model: AgentModel, tracking: TrackingCost) -> Result<Self> {
        check_len("tracking weights", model.state_dim(), tracking.state_dim())?;
        check_len("input weights", model.input_dim(), tracking.input_dim())?;
        tracking.validate()?;
        Ok(Self { model, tracking })
    }
}

/// N agents with decoupled dynamics, their tracking costs, and a collision
/// coupling for every ordered pair.
#[derive(Debug, Clone, PartialEq)]
pub struct GameDefinition {
    agents: Vec<Agent>,
    /// `couplings[i][j]` is `C_ij`, the penalty agent `i` pays for being near `j`.
    couplings: Vec<Vec<Option<CollisionCost>>>,
    layout: JointLayout,
    horizon: usize,
    dt: f64,
}

impl GameDefinition {
    /// Builds a game from explicit ordered couplings `(i, j, C_ij)`.
    pub fn new(
        agents: Vec<Agent>,
        couplings: impl IntoIterator<Item = (usize, usize, CollisionCost)>,
        horizon: usize,
        dt: f64,
    ) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::Config("a game needs at least one agent".into()));
        }
        if horizon < 1 {
            return Err(Error::Config("horizon must be at least one step".into()));
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidTimeStep(dt));
        }
        let n = agents.len();
        let mut table = vec![vec![None; n]; n];
        for (i, j, c) in couplings {
            if i >= n || j >= n {
                return Err(Error::AgentIndex {
                    index: i.max(j),
                    agents: n,
                });
            }
            if i == j {
                return Err(Error::Config(format!("self-coupling for agent {i}")));
            }
            c.validate()?;
            let dims_i = agents[i].model.state_dim();
            let dims_j = agents[j].model.state_dim();
            if c.position_indices_i.iter().any(|&k| k >= dims_i) || c.position_indices_j.iter().any(|&k| k >= dims_j) {
                return Err(Error::Config(format!("position index out of range for pair ({i}, {j})")));
            }
            table[i][j] = Some(c);
        }
        for (i, row) in table.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if i != j && c.is_none() {
                    return Err(Error::Config(format!("missing coupling for pair ({i}, {j})")));
                }
            }
        }
        let layout = JointLayout::new(agents.iter().map(|a| a.model).collect());
        Ok(Self {
            agents,
            couplings: table,
            layout,
            horizon,
            dt,
        })
    }

    /// Every ordered pair shares the same `d_prox` and `beta`, measured on
    /// each model's position entries.
    pub fn with_uniform_coupling(agents: Vec<Agent>, d_prox: f64, beta: f64, horizon: usize, dt: f64) -> Result<Self> {
        let mut couplings = Vec::new();
        for i in 0..agents.len() {
            for j in 0..agents.len() {
                if i != j {
                    couplings.push((i, j, uniform_coupling(&agents[i], &agents[j], d_prox, beta)?));
                }
            }
        }
        Self::new(agents, couplings, horizon, dt)
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn coupling(&self, i: usize, j: usize) -> Option<&CollisionCost> {
        self.couplings.get(i)?.get(j)?.as_ref()
    }

    pub fn layout(&self) -> &JointLayout {
        &self.layout
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Same game with a different horizon.
    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        if horizon < 1 {
            return Err(Error::Config("horizon must be at least one step".into()));
        }
        Ok(Self {
            horizon,
            ..self.clone()
        })
    }

    /// Joint state whose agent blocks are the tracking goals.
    pub fn goal_state(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.layout.state_dim(),
            self.agents.iter().flat_map(|a| a.tracking.x_ref.iter().copied()),
        )
    }

    /// Structural check that `C_ij` and `C_ji` carry identical parameters.
    pub fn validate_symmetry(&self) -> SymmetryReport {
        let n = self.agents.len();
        let mut offending = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let ok = match (self.coupling(i, j), self.coupling(j, i)) {
                    (Some(a), Some(b)) => a.d_prox == b.d_prox && a.beta == b.beta && *a == b.reversed(),
                    _ => false,
                };
                if !ok {
                    offending.push((i, j));
                }
            }
        }
        SymmetryReport { offending }
    }

    /// Numerical symmetry check: `C_ij(x_i, x_j) == C_ji(x_j, x_i)` exactly on
    /// `samples` random state pairs per unordered pair.
    pub fn sample_symmetry(&self, samples: usize, seed: u64) -> SymmetryReport {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.agents.len();
        let mut offending = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let (Some(cij), Some(cji)) = (self.coupling(i, j), self.coupling(j, i)) else {
                    offending.push((i, j));
                    continue;
                };
                let scale = 2.0 * cij.d_prox.max(cji.d_prox);
                let ok = (0..samples).all(|_| {
                    let xi: Vec<f64> = (0..self.agents[i].model.state_dim()).map(|_| rng.gen_range(-scale..scale)).collect();
                    let xj: Vec<f64> = (0..self.agents[j].model.state_dim()).map(|_| rng.gen_range(-scale..scale)).collect();
                    collision_pair(cij, &xi, &xj) == collision_pair(cji, &xj, &xi)
                });
                if !ok {
                    offending.push((i, j));
                }
            }
        }
        SymmetryReport { offending }
    }

    /// Discrete cost of agent `i`:
    /// `dt * sum_t [C_i^tr + sum_{j != i} C_ij] + C_{i,T}^tr`.
    pub fn agent_cost(&self, i: usize, states: &[DVector<f64>], controls: &[DVector<f64>]) -> Result<f64> {
        if i >= self.agents.len() {
            return Err(Error::AgentIndex {
                index: i,
                agents: self.agents.len(),
            });
        }
        check_len("trajectory states", controls.len() + 1, states.len())?;
        let xs = self.layout.state_range(i);
        let us = self.layout.input_range(i);
        let tracking = &self.agents[i].tracking;
        let mut running = 0.0;
        for (x, u) in states.iter().zip(controls) {
            check_len("joint state", self.layout.state_dim(), x.len())?;
            check_len("joint input", self.layout.input_dim(), u.len())?;
            let xi = &x.as_slice()[xs.clone()];
            running += tracking_running(tracking, xi, &u.as_slice()[us.clone()])?;
            running += self.coupling_sum(i, xi, x);
        }
        let last = states.last().unwrap();
        Ok(self.dt * running + tracking_terminal(tracking, &last.as_slice()[xs])?)
    }

    /// `sum_{j != i} C_ij(x_i, x_j)` with `x_j` read from the joint state.
    fn coupling_sum(&self, i: usize, xi: &[f64], joint: &DVector<f64>) -> f64 {
        (0..self.agents.len())
            .filter(|&j| j != i)
            .map(|j| {
                let c = self.couplings[i][j].as_ref().expect("complete coupling table");
                collision_pair(c, xi, &joint.as_slice()[self.layout.state_range(j)])
            })
            .sum()
    }

    /// Simulates the joint system under `controls`.
    pub fn simulate(&self, x0: &DVector<f64>, controls: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
        check_len("initial state", self.layout.state_dim(), x0.len())?;
        let mut states = Vec::with_capacity(controls.len() + 1);
        states.push(x0.clone());
        for u in controls {
            let next = self.layout.step(states.last().unwrap(), u, self.dt)?;
            states.push(next);
        }
        Ok(states)
    }
}

/// Coupling on the position entries of both agents.
pub fn uniform_coupling(a: &Agent, b: &Agent, d_prox: f64, beta: f64) -> Result<CollisionCost> {
    let pa = a.model.position_indices();
    let pb = b.model.position_indices();
    // A planar agent meeting a 3D one is compared in the horizontal plane.
    let k = pa.len().min(pb.len());
    CollisionCost::new(d_prox, beta, pa[..k].to_vec(), pb[..k].to_vec())
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SymmetryReport {
    /// Unordered pairs `(i, j)`, `i < j`, whose couplings differ.
    pub offending: Vec<(usize, usize)>,
}

impl SymmetryReport {
    pub fn passed(&self) -> bool {
        self.offending.is_empty()
    }
}

impl fmt::Display for SymmetryReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.offending.is_empty() {
            return write!(f, "all couplings symmetric");
        }
        write!(f, "asymmetric pairs:")?;
        for (i, j) in &self.offending {
            write!(f, " ({i}, {j})")?;
        }
        Ok(())
    }
}

/// The single optimal control problem whose minimizers are open-loop Nash
/// equilibria of a symmetric game.
#[derive(Debug, Clone)]
pub struct PotentialOcp {
    game: GameDefinition,
    potential: Potential,
}

/// Refuses asymmetric games.
pub fn build_potential_ocp(game: &GameDefinition) -> Result<PotentialOcp> {
    let report = game.validate_symmetry();
    if !report.passed() {
        return Err(Error::Asymmetric(report));
    }
    let n = game.num_agents();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            pairs.push((i, j, game.coupling(i, j).unwrap().clone()));
        }
    }
    let tracking = game.agents.iter().map(|a| a.tracking.clone()).collect();
    Ok(PotentialOcp {
        potential: Potential::new(game.layout.clone(), tracking, pairs),
        game: game.clone(),
    })
}

impl PotentialOcp {
    pub fn game(&self) -> &GameDefinition {
        &self.game
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn layout(&self) -> &JointLayout {
        self.game.layout()
    }

    pub fn dt(&self) -> f64 {
        self.game.dt
    }

    /// Discrete potential objective `dt * sum_t p + s_bar(x_T)` of `controls`.
    pub fn objective(&self, x0: &DVector<f64>, controls: &[DVector<f64>]) -> Result<f64> {
        Ok(ilqr::rollout(self, controls, x0)?.total_cost)
    }

    /// Same problem over a different horizon.
    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        Ok(Self {
            game: self.game.with_horizon(horizon)?,
            potential: self.potential.clone(),
        })
    }
}

impl ControlProblem for PotentialOcp {
    fn state_dim(&self) -> usize {
        self.game.layout.state_dim()
    }

    fn input_dim(&self) -> usize {
        self.game.layout.input_dim()
    }

    fn horizon(&self) -> usize {
        self.game.horizon
    }

    fn running_weight(&self) -> f64 {
        self.game.dt
    }

    fn step(&self, _t: usize, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        self.game.layout.step(x, u, self.game.dt)
    }

    fn linearize_into(
        &self,
        _t: usize,
        x: &DVector<f64>,
        u: &DVector<f64>,
        a: &mut DMatrix<f64>,
        b: &mut DMatrix<f64>,
    ) -> Result<()> {
        self.game.layout.linearize_into(x, u, self.game.dt, a, b)
    }

    fn running_cost(&self, _t: usize, x: &DVector<f64>, u: &DVector<f64>) -> Result<f64> {
        self.potential.running(x, u)
    }

    fn terminal_cost(&self, x: &DVector<f64>) -> Result<f64> {
        self.potential.terminal(x)
    }

    fn running_expansion_into(
        &self,
        _t: usize,
        x: &DVector<f64>,
        u: &DVector<f64>,
        lx: &mut DVector<f64>,
        lu: &mut DVector<f64>,
        lxx: &mut DMatrix<f64>,
        luu: &mut DMatrix<f64>,
        _lux: &mut DMatrix<f64>,
    ) {
        self.potential.running_expansion_into(x, u, lx, lu, lxx, luu);
    }

    fn terminal_expansion_into(&self, x: &DVector<f64>, lx: &mut DVector<f64>, lxx: &mut DMatrix<f64>) {
        self.potential.terminal_expansion_into(x, lx, lxx);
    }

    fn add_dynamics_curvature(&self, _t: usize, x: &DVector<f64>, vx: &DVector<f64>, qxx: &mut DMatrix<f64>) {
        self.game.layout.add_curvature(x, self.game.dt, vx, qxx);
    }
}

/// Agent `i`'s own optimal control problem with every other agent's state
/// trajectory frozen. Never evaluates the potential.
#[derive(Debug, Clone)]
pub struct BestResponseProblem<'a> {
    game: &'a GameDefinition,
    agent: usize,
    /// Joint states under the fixed controls; only the other agents' blocks
    /// are read.
    frozen: Vec<DVector<f64>>,
}

impl<'a> BestResponseProblem<'a> {
    pub fn new(game: &'a GameDefinition, agent: usize, x0: &DVector<f64>, fixed_controls: &[DVector<f64>]) -> Result<Self> {
        if agent >= game.num_agents() {
            return Err(Error::AgentIndex {
                index: agent,
                agents: game.num_agents(),
            });
        }
        check_len("fixed controls", game.horizon, fixed_controls.len())?;
        // Dynamics are decoupled, so the other agents' states do not depend
        // on agent i's block of the fixed controls.
        let frozen = game.simulate(x0, fixed_controls)?;
        Ok(Self { game, agent, frozen })
    }

    fn others<'b>(&'b self, t: usize) -> impl Iterator<Item = (&'b CollisionCost, &'b [f64])> + 'b {
        let i = self.agent;
        (0..self.game.num_agents()).filter(move |&j| j != i).map(move |j| {
            (
                self.game.couplings[i][j].as_ref().expect("complete coupling table"),
                &self.frozen[t].as_slice()[self.game.layout.state_range(j)],
            )
        })
    }

    fn model(&self) -> AgentModel {
        self.game.agents[self.agent].model
    }

    fn tracking(&self) -> &TrackingCost {
        &self.game.agents[self.agent].tracking
    }
}

impl ControlProblem for BestResponseProblem<'_> {
    fn state_dim(&self) -> usize {
        self.model().state_dim()
    }

    fn input_dim(&self) -> usize {
        self.model().input_dim()
    }

    fn horizon(&self) -> usize {
        self.game.horizon
    }

    fn running_weight(&self) -> f64 {
        self.game.dt
    }

    fn step(&self, _t: usize, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        dynamics::step(self.model(), x.as_slice(), u.as_slice(), self.game.dt)
    }

    fn linearize_into(
        &self,
        _t: usize,
        x: &DVector<f64>,
        u: &DVector<f64>,
        a: &mut DMatrix<f64>,
        b: &mut DMatrix<f64>,
    ) -> Result<()> {
        let (ai, bi) = dynamics::linearize_step(self.model(), x.as_slice(), u.as_slice(), self.game.dt)?;
        a.copy_from(&ai);
        b.copy_from(&bi);
        Ok(())
    }

    fn running_cost(&self, t: usize, x: &DVector<f64>, u: &DVector<f64>) -> Result<f64> {
        let tracking = tracking_running(self.tracking(), x.as_slice(), u.as_slice())?;
        let coupling: f64 = self.others(t).map(|(c, xj)| collision_pair(c, x.as_slice(), xj)).sum();
        Ok(tracking + coupling)
    }

    fn terminal_cost(&self, x: &DVector<f64>) -> Result<f64> {
        tracking_terminal(self.tracking(), x.as_slice())
    }

    fn running_expansion_into(
        &self,
        t: usize,
        x: &DVector<f64>,
        u: &DVector<f64>,
        lx: &mut DVector<f64>,
        lu: &mut DVector<f64>,
        lxx: &mut DMatrix<f64>,
        luu: &mut DMatrix<f64>,
        _lux: &mut DMatrix<f64>,
    ) {
        let tr = self.tracking();
        lxx.fill(0.0);
        luu.fill(0.0);
        let e = tr.state_error(x.as_slice());
        for k in 0..e.len() {
            lx[k] = 2.0 * tr.q[k] * e[k];
            lxx[(k, k)] = 2.0 * tr.q[k];
        }
        for k in 0..u.len() {
            lu[k] = 2.0 * tr.r[k] * (u[k] - tr.u_ref[k]);
            luu[(k, k)] = 2.0 * tr.r[k];
        }
        for (c, xj) in self.others(t) {
            let delta = c.offset(x.as_slice(), xj);
            let g = c.relative_gradient(&delta);
            if g.iter().all(|v| *v == 0.0) {
                continue;
            }
            let h = project_psd(&c.relative_hessian(&delta));
            for (a, &ra) in c.position_indices_i.iter().enumerate() {
                lx[ra] += g[a];
                for (b, &rb) in c.position_indices_i.iter().enumerate() {
                    lxx[(ra, rb)] += h[(a, b)];
                }
            }
        }
    }

    fn terminal_expansion_into(&self, x: &DVector<f64>, lx: &mut DVector<f64>, lxx: &mut DMatrix<f64>) {
        let tr = self.tracking();
        lxx.fill(0.0);
        let e = tr.state_error(x.as_slice());
        for k in 0..e.len() {
            lx[k] = 2.0 * tr.q_terminal[k] * e[k];
            lxx[(k, k)] = 2.0 * tr.q_terminal[k];
        }
    }

    fn add_dynamics_curvature(&self, _t: usize, x: &DVector<f64>, vx: &DVector<f64>, qxx: &mut DMatrix<f64>) {
        dynamics::add_step_curvature(self.model(), x.as_slice(), self.game.dt, vx.as_slice(), qxx, 0);
    }
}

#[derive(Debug, Clone)]
pub struct BestResponse {
    /// Agent `i`'s optimized open-loop controls.
    pub controls: Vec<DVector<f64>>,
    pub cost: f64,
    pub report: SolveReport,
}

/// Best response of agent `i` to the other agents' blocks of `controls`,
/// warm-started from agent `i`'s own block. Non-convergence is flagged in
/// the report, not raised.
pub fn best_response(
    game: &GameDefinition,
    i: usize,
    controls: &[DVector<f64>],
    x0: &DVector<f64>,
    config: &SolverConfig,
) -> Result<BestResponse> {
    let problem = BestResponseProblem::new(game, i, x0, controls)?;
    let range = game.layout.input_range(i);
    let warm: Vec<DVector<f64>> = controls.iter().map(|u| u.rows(range.start, range.len()).into_owned()).collect();
    let xi0 = x0.rows(game.layout.state_range(i).start, game.agents[i].model.state_dim()).into_owned();
    let sol = ilqr::solve(&problem, &xi0, Some(&warm), config)?;
    Ok(BestResponse {
        cost: sol.trajectory.total_cost,
        controls: sol.controls,
        report: sol.report,
    })
}

/// Replaces agent `i`'s block of a joint control sequence.
pub fn splice_controls(
    layout: &JointLayout,
    controls: &[DVector<f64>],
    i: usize,
    agent_controls: &[DVector<f64>],
) -> Vec<DVector<f64>> {
    let range = layout.input_range(i);
    controls
        .iter()
        .zip(agent_controls)
        .map(|(u, ui)| {
            let mut u = u.clone();
            u.rows_mut(range.start, range.len()).copy_from(ui);
            u
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentGap {
    pub agent: usize,
    pub equilibrium_cost: f64,
    pub best_response_cost: f64,
    pub absolute_gap: f64,
    pub relative_gap: f64,
    pub best_response_converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashGapReport {
    pub agents: Vec<AgentGap>,
}

impl NashGapReport {
    pub fn max_relative_gap(&self) -> f64 {
        self.agents.iter().map(|a| a.relative_gap).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn certifies(&self, tolerance: f64) -> bool {
        self.max_relative_gap() <= tolerance
    }
}

/// Best-response gap `J_i(u*) - J_i(BR_i, u*_{-i})` of every agent. Agents are
/// solved independently and merged in index order.
pub fn nash_gap(
    game: &GameDefinition,
    controls: &[DVector<f64>],
    x0: &DVector<f64>,
    config: &SolverConfig,
    exec: Execution,
) -> Result<NashGapReport> {
    check_len("controls", game.horizon, controls.len())?;
    for u in controls {
        check_len("joint input", game.layout.input_dim(), u.len())?;
    }
    let states = game.simulate(x0, controls)?;
    let results = map_indexed(game.num_agents(), exec, |i| -> Result<AgentGap> {
        let equilibrium_cost = game.agent_cost(i, &states, controls)?;
        let br = best_response(game, i, controls, x0, config)?;
        let absolute_gap = equilibrium_cost - br.cost;
        Ok(AgentGap {
            agent: i,
            equilibrium_cost,
            best_response_cost: br.cost,
            absolute_gap,
            relative_gap: absolute_gap / equilibrium_cost.abs().max(1e-9),
            best_response_converged: br.report.converged,
        })
    });
    Ok(NashGapReport {
        agents: results.into_iter().collect::<Result<_>>()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unicycle(goal: [f64; 4]) -> Agent {
        let tracking = TrackingCost::new(vec![10.0, 10.0, 1.0, 1.0], vec![1.0, 1.0], goal.to_vec(), vec![2]).unwrap();
        Agent::new(AgentModel::Unicycle4, tracking).unwrap()
    }

    fn three_agents() -> GameDefinition {
        GameDefinition::with_uniform_coupling(
            vec![
                unicycle([5.0, 0.0, 0.0, 0.0]),
                unicycle([0.0, 5.0, 0.0, 0.0]),
                unicycle([-5.0, 0.0, 0.0, 0.0]),
            ],
            2.4,
            1.0,
            10,
            0.1,
        )
        .unwrap()
    }

    #[test]
    fn symmetric_game_passes() {
        assert!(three_agents().validate_symmetry().passed());
        assert!(three_agents().sample_symmetry(1000, 7).passed());
    }

    #[test]
    fn single_agent_vacuously_symmetric() {
        let g = GameDefinition::with_uniform_coupling(vec![unicycle([1.0; 4])], 2.4, 1.0, 5, 0.1).unwrap();
        assert!(g.validate_symmetry().passed());
    }

    fn asymmetric() -> GameDefinition {
        let agents = vec![unicycle([1.0; 4]), unicycle([2.0; 4])];
        let c = |beta| CollisionCost::new(2.4, beta, vec![0, 1], vec![0, 1]).unwrap();
        GameDefinition::new(agents, vec![(0, 1, c(1.0)), (1, 0, c(2.0))], 5, 0.1).unwrap()
    }

    #[test]
    fn asymmetric_pair_is_reported() {
        let g = asymmetric();
        let report = g.validate_symmetry();
        assert_eq!(report.offending, vec![(0, 1)]);
        assert_eq!(g.sample_symmetry(100, 1).offending, vec![(0, 1)]);
        assert!(matches!(build_potential_ocp(&g), Err(Error::Asymmetric(_))));
    }

    #[test]
    fn incomplete_table_rejected() {
        let agents = vec![unicycle([1.0; 4]), unicycle([2.0; 4])];
        let c = CollisionCost::new(2.4, 1.0, vec![0, 1], vec![0, 1]).unwrap();
        assert!(GameDefinition::new(agents, vec![(0, 1, c)], 5, 0.1).is_err());
    }

    #[test]
    fn potential_has_all_terms_once() {
        let ocp = build_potential_ocp(&three_agents()).unwrap();
        assert_eq!(ocp.potential().tracking_terms().len(), 3);
        let pairs: Vec<_> = ocp.potential().pair_terms().iter().map(|(i, j, _)| (*i, *j)).collect();
        assert_eq!(pairs, vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn single_agent_objective_is_agent_cost() {
        let g = GameDefinition::with_uniform_coupling(vec![unicycle([3.0, 1.0, 0.0, 0.0])], 2.4, 1.0, 8, 0.1).unwrap();
        let ocp = build_potential_ocp(&g).unwrap();
        let x0 = DVector::from_vec(vec![0.0, 0.0, 0.3, 1.0]);
        let u: Vec<_> = (0..8).map(|t| DVector::from_vec(vec![0.1 * t as f64, -0.2])).collect();
        let states = g.simulate(&x0, &u).unwrap();
        let j = g.agent_cost(0, &states, &u).unwrap();
        let p = ocp.objective(&x0, &u).unwrap();
        assert!((j - p).abs() <= 1e-12 * j.abs());
    }

    #[test]
    fn agent_index_checked() {
        let g = three_agents();
        let x0 = DVector::zeros(12);
        let u = vec![DVector::zeros(6); 10];
        let states = g.simulate(&x0, &u).unwrap();
        assert!(matches!(g.agent_cost(3, &states, &u), Err(Error::AgentIndex { .. })));
    }
}
