//! Iterative LQR: rollout, Riccati backward pass with Levenberg-style
//! regularization on the control Hessian, and a backtracking forward pass.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::costs::QuadraticExpansion;
use crate::dynamics::LinearizedStep;
use crate::error::{check_len, Error, Result};

/// A discrete-time optimal control problem
/// `min w * sum_t l(t, x_t, u_t) + l_T(x_T)` subject to `x_{t+1} = f(t, x_t, u_t)`.
pub trait ControlProblem {
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn horizon(&self) -> usize;

    /// Weight applied to every running-cost term (the time step for a
    /// discretized integral).
    fn running_weight(&self) -> f64;

    fn step(&self, t: usize, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>>;

    fn linearize_into(
        &self,
        t: usize,
        x: &DVector<f64>,
        u: &DVector<f64>,
        a: &mut DMatrix<f64>,
        b: &mut DMatrix<f64>,
    ) -> Result<()>;

    /// Unweighted running cost.
    fn running_cost(&self, t: usize, x: &DVector<f64>, u: &DVector<f64>) -> Result<f64>;

    fn terminal_cost(&self, x: &DVector<f64>) -> Result<f64>;

    /// Derivatives of the unweighted running cost. `lux` is left untouched
    /// when the cost has no state-input cross terms.
    #[allow(clippy::too_many_arguments)]
    fn running_expansion_into(
        &self,
        t: usize,
        x: &DVector<f64>,
        u: &DVector<f64>,
        lx: &mut DVector<f64>,
        lu: &mut DVector<f64>,
        lxx: &mut DMatrix<f64>,
        luu: &mut DMatrix<f64>,
        lux: &mut DMatrix<f64>,
    );

    fn terminal_expansion_into(&self, x: &DVector<f64>, lx: &mut DVector<f64>, lxx: &mut DMatrix<f64>);

    /// Adds `sum_k vx[k] * d2 f_k / dx2` to `qxx`, where `vx` is the
    /// value gradient at `t + 1`. The default leaves the Gauss-Newton model.
    fn add_dynamics_curvature(&self, _t: usize, _x: &DVector<f64>, _vx: &DVector<f64>, _qxx: &mut DMatrix<f64>) {}
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Step sizes tried in order by the line search.
    pub line_search: Vec<f64>,
    pub reg_init: f64,
    /// First nonzero value used when growing from zero.
    pub reg_min: f64,
    pub reg_max: f64,
    pub reg_grow: f64,
    pub reg_shrink: f64,
    /// Include second-order dynamics terms in the state Hessian (DDP-style)
    /// where the problem provides them.
    pub second_order: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            rel_tol: 1e-6,
            abs_tol: 1e-9,
            line_search: (0..=10).map(|k| 0.5f64.powi(k)).collect(),
            reg_init: 0.0,
            reg_min: 1e-6,
            reg_max: 1e8,
            reg_grow: 10.0,
            reg_shrink: 0.5,
            second_order: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(Error::Config("solver tolerances must be positive".into()));
        }
        if self.line_search.is_empty()
            || self.line_search[0] > 1.0
            || self.line_search.windows(2).any(|w| !(w[1] < w[0]))
            || self.line_search.iter().any(|a| !(*a > 0.0))
        {
            return Err(Error::Config(
                "line-search schedule must be strictly decreasing in (0, 1]".into(),
            ));
        }
        if !(self.reg_init >= 0.0)
            || !(self.reg_min > 0.0)
            || !(self.reg_max >= self.reg_min)
            || !(self.reg_grow > 1.0)
            || !(self.reg_shrink > 0.0 && self.reg_shrink < 1.0)
        {
            return Err(Error::Config("invalid regularization schedule".into()));
        }
        Ok(())
    }

    fn grow(&self, reg: f64) -> f64 {
        (reg * self.reg_grow).max(self.reg_min)
    }

    fn shrink(&self, reg: f64) -> f64 {
        let r = reg * self.reg_shrink;
        if r < self.reg_min {
            0.0
        } else {
            r
        }
    }
}

/// States `x_0..x_T`, controls `u_0..u_{T-1}` and their costs.
#[derive(Debug, Clone, PartialEq)]
pub struct NominalTrajectory {
    pub states: Vec<DVector<f64>>,
    pub controls: Vec<DVector<f64>>,
    /// Weighted running cost per step followed by the terminal cost.
    pub step_costs: Vec<f64>,
    pub total_cost: f64,
}

impl NominalTrajectory {
    pub fn horizon(&self) -> usize {
        self.controls.len()
    }

    pub fn is_finite(&self) -> bool {
        self.states
            .iter()
            .chain(&self.controls)
            .all(|v| v.iter().all(|x| x.is_finite()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackPolicy {
    pub feedforward: Vec<DVector<f64>>,
    pub gains: Vec<DMatrix<f64>>,
}

/// Terms of the predicted cost change `alpha * linear + alpha^2 * quadratic`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExpectedDecrease {
    pub linear: f64,
    pub quadratic: f64,
}

impl ExpectedDecrease {
    /// Predicted change in cost for step size `alpha` (negative on descent).
    pub fn at(&self, alpha: f64) -> f64 {
        alpha * self.linear + alpha * alpha * self.quadratic
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Tolerance,
    MaxIterations,
    LineSearchFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Backward/forward rounds performed, including rejected ones.
    pub iterations: usize,
    pub accepted_iterations: usize,
    /// Cost of the initial rollout followed by every accepted iterate.
    pub costs: Vec<f64>,
    /// Line-search step accepted at each accepted iterate.
    pub step_sizes: Vec<f64>,
    /// Wall time of each outer round: linearization, expansion, backward
    /// passes (with regularization retries) and line search.
    pub round_times_ms: Vec<f64>,
    pub converged: bool,
    pub termination: Termination,
    pub wall_time_ms: f64,
    pub final_regularization: f64,
}

impl SolveReport {
    pub fn final_cost(&self) -> f64 {
        *self.costs.last().expect("at least the initial cost")
    }

    pub fn is_monotone(&self) -> bool {
        self.costs.windows(2).all(|w| w[1] <= w[0])
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub controls: Vec<DVector<f64>>,
    pub trajectory: NominalTrajectory,
    pub policy: FeedbackPolicy,
    pub report: SolveReport,
}

fn check_controls<P: ControlProblem + ?Sized>(problem: &P, controls: &[DVector<f64>]) -> Result<()> {
    check_len("control sequence", problem.horizon(), controls.len())?;
    for u in controls {
        check_len("control", problem.input_dim(), u.len())?;
    }
    Ok(())
}

/// Simulates `controls` from `x0` and evaluates the discrete objective.
pub fn rollout<P: ControlProblem + ?Sized>(
    problem: &P,
    controls: &[DVector<f64>],
    x0: &DVector<f64>,
) -> Result<NominalTrajectory> {
    check_len("initial state", problem.state_dim(), x0.len())?;
    check_controls(problem, controls)?;
    let w = problem.running_weight();
    let mut states = Vec::with_capacity(controls.len() + 1);
    let mut step_costs = Vec::with_capacity(controls.len() + 1);
    states.push(x0.clone());
    for (t, u) in controls.iter().enumerate() {
        let x = &states[t];
        step_costs.push(w * problem.running_cost(t, x, u)?);
        let next = problem.step(t, x, u)?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::DivergedRollout { step: t + 1 });
        }
        states.push(next);
    }
    step_costs.push(problem.terminal_cost(states.last().unwrap())?);
    let total_cost: f64 = step_costs.iter().sum();
    if !total_cost.is_finite() {
        return Err(Error::DivergedRollout { step: controls.len() });
    }
    Ok(NominalTrajectory {
        states,
        controls: controls.to_vec(),
        step_costs,
        total_cost,
    })
}

/// Linearizes the dynamics along a trajectory.
pub fn linearize<P: ControlProblem + ?Sized>(problem: &P, trajectory: &NominalTrajectory) -> Result<Vec<LinearizedStep>> {
    let (n, m) = (problem.state_dim(), problem.input_dim());
    let mut out = vec![
        LinearizedStep {
            a: DMatrix::zeros(n, n),
            b: DMatrix::zeros(n, m),
        };
        trajectory.horizon()
    ];
    linearize_into(problem, trajectory, &mut out)?;
    Ok(out)
}

fn linearize_into<P: ControlProblem + ?Sized>(
    problem: &P,
    trajectory: &NominalTrajectory,
    out: &mut [LinearizedStep],
) -> Result<()> {
    for (t, lin) in out.iter_mut().enumerate() {
        problem.linearize_into(t, &trajectory.states[t], &trajectory.controls[t], &mut lin.a, &mut lin.b)?;
    }
    Ok(())
}

/// Second-order expansion of the problem's objective along a trajectory.
pub fn expand<P: ControlProblem + ?Sized>(problem: &P, trajectory: &NominalTrajectory) -> Result<QuadraticExpansion> {
    let mut exp = QuadraticExpansion::zeros(
        trajectory.horizon(),
        problem.state_dim(),
        problem.input_dim(),
        problem.running_weight(),
    );
    expand_into(problem, trajectory, &mut exp)?;
    Ok(exp)
}

fn expand_into<P: ControlProblem + ?Sized>(
    problem: &P,
    trajectory: &NominalTrajectory,
    exp: &mut QuadraticExpansion,
) -> Result<()> {
    if !trajectory.is_finite() {
        return Err(Error::NonFinite("nominal trajectory"));
    }
    for t in 0..trajectory.horizon() {
        problem.running_expansion_into(
            t,
            &trajectory.states[t],
            &trajectory.controls[t],
            &mut exp.lx[t],
            &mut exp.lu[t],
            &mut exp.lxx[t],
            &mut exp.luu[t],
            &mut exp.lux[t],
        );
    }
    problem.terminal_expansion_into(
        trajectory.states.last().unwrap(),
        &mut exp.terminal_x,
        &mut exp.terminal_xx,
    );
    Ok(())
}

/// Scratch buffers for the Riccati recursion, sized once per solve.
/// Adds `sum_k vx[k] * d2f_k/dx2` at step `t` to the state Hessian.
type Curvature<'a> = dyn Fn(usize, &DVector<f64>, &mut DMatrix<f64>) + 'a;

struct Workspace {
    vx: DVector<f64>,
    vxx: DMatrix<f64>,
    qx: DVector<f64>,
    qu: DVector<f64>,
    qxx: DMatrix<f64>,
    quu: DMatrix<f64>,
    qux: DMatrix<f64>,
    va: DMatrix<f64>,
    vb: DMatrix<f64>,
    quu_k: DMatrix<f64>,
    quu_k_ff: DVector<f64>,
    quu_reg: DMatrix<f64>,
    at: DMatrix<f64>,
    bt: DMatrix<f64>,
    gain_t: DMatrix<f64>,
    qux_t: DMatrix<f64>,
    tmp_nn: DMatrix<f64>,
}

impl Workspace {
    fn new(n: usize, m: usize) -> Self {
        Self {
            vx: DVector::zeros(n),
            vxx: DMatrix::zeros(n, n),
            qx: DVector::zeros(n),
            qu: DVector::zeros(m),
            qxx: DMatrix::zeros(n, n),
            quu: DMatrix::zeros(m, m),
            qux: DMatrix::zeros(m, n),
            va: DMatrix::zeros(n, n),
            vb: DMatrix::zeros(n, m),
            quu_k: DMatrix::zeros(m, n),
            quu_k_ff: DVector::zeros(m),
            quu_reg: DMatrix::zeros(m, m),
            at: DMatrix::zeros(n, n),
            bt: DMatrix::zeros(m, n),
            gain_t: DMatrix::zeros(n, m),
            qux_t: DMatrix::zeros(n, m),
            tmp_nn: DMatrix::zeros(n, n),
        }
    }
}

/// Riccati recursion on the LQ approximation with `reg * I` added to the
/// control Hessian before factorization.
pub fn backward_pass(
    expansion: &QuadraticExpansion,
    linearization: &[LinearizedStep],
    reg: f64,
) -> Result<(FeedbackPolicy, ExpectedDecrease)> {
    let horizon = expansion.horizon();
    check_len("linearization", horizon, linearization.len())?;
    let n = expansion.terminal_x.len();
    let m = expansion.lu.first().map_or(0, |v| v.len());
    let mut policy = FeedbackPolicy {
        feedforward: vec![DVector::zeros(m); horizon],
        gains: vec![DMatrix::zeros(m, n); horizon],
    };
    let mut ws = Workspace::new(n, m);
    let dv = backward_pass_into(expansion, linearization, reg, &|_, _, _| {}, &mut ws, &mut policy)?;
    Ok((policy, dv))
}

fn backward_pass_into(
    exp: &QuadraticExpansion,
    lin: &[LinearizedStep],
    reg: f64,
    curvature: &Curvature,
    ws: &mut Workspace,
    policy: &mut FeedbackPolicy,
) -> Result<ExpectedDecrease> {
    let w = exp.running_weight;
    ws.vx.copy_from(&exp.terminal_x);
    ws.vxx.copy_from(&exp.terminal_xx);
    let mut dv = ExpectedDecrease::default();
    for t in (0..exp.horizon()).rev() {
        let LinearizedStep { a, b } = &lin[t];

        ws.qx.gemv_tr(1.0, a, &ws.vx, 0.0);
        ws.qx.axpy(w, &exp.lx[t], 1.0);
        ws.qu.gemv_tr(1.0, b, &ws.vx, 0.0);
        ws.qu.axpy(w, &exp.lu[t], 1.0);

        ws.va.gemm(1.0, &ws.vxx, a, 0.0);
        ws.vb.gemm(1.0, &ws.vxx, b, 0.0);
        // Transposed copies let every product go through the blocked gemm.
        a.transpose_to(&mut ws.at);
        b.transpose_to(&mut ws.bt);
        ws.qxx.gemm(1.0, &ws.at, &ws.va, 0.0);
        ws.qxx.zip_apply(&exp.lxx[t], |q, l| *q += w * l);
        curvature(t, &ws.vx, &mut ws.qxx);
        ws.quu.gemm(1.0, &ws.bt, &ws.vb, 0.0);
        ws.quu.zip_apply(&exp.luu[t], |q, l| *q += w * l);
        ws.qux.gemm(1.0, &ws.bt, &ws.va, 0.0);
        ws.qux.zip_apply(&exp.lux[t], |q, l| *q += w * l);

        let mut quu_reg = std::mem::replace(&mut ws.quu_reg, DMatrix::zeros(0, 0));
        quu_reg.copy_from(&ws.quu);
        for i in 0..quu_reg.nrows() {
            quu_reg[(i, i)] += reg;
        }
        let m = quu_reg.nrows();
        let chol = match Cholesky::new(quu_reg) {
            Some(c) => c,
            None => {
                ws.quu_reg = DMatrix::zeros(m, m);
                return Err(Error::NotPositiveDefinite { step: t });
            }
        };

        let quu_inv = chol.inverse();
        let k = &mut policy.feedforward[t];
        k.gemv(-1.0, &quu_inv, &ws.qu, 0.0);
        let gain = &mut policy.gains[t];
        gain.gemm(-1.0, &quu_inv, &ws.qux, 0.0);
        gain.transpose_to(&mut ws.gain_t);
        ws.qux.transpose_to(&mut ws.qux_t);

        ws.quu_k_ff.gemv(1.0, &ws.quu, k, 0.0);
        dv.linear += k.dot(&ws.qu);
        dv.quadratic += 0.5 * k.dot(&ws.quu_k_ff);

        // Vx = Qx + K'Quu k + K'Qu + Qux'k
        ws.vx.copy_from(&ws.qx);
        ws.vx.gemv_tr(1.0, gain, &ws.quu_k_ff, 1.0);
        ws.vx.gemv_tr(1.0, gain, &ws.qu, 1.0);
        ws.vx.gemv_tr(1.0, &ws.qux, k, 1.0);

        // Vxx = Qxx + K'Quu K + K'Qux + Qux'K
        ws.quu_k.gemm(1.0, &ws.quu, gain, 0.0);
        ws.vxx.copy_from(&ws.qxx);
        ws.vxx.gemm(1.0, &ws.gain_t, &ws.quu_k, 1.0);
        ws.vxx.gemm(1.0, &ws.gain_t, &ws.qux, 1.0);
        ws.vxx.gemm(1.0, &ws.qux_t, gain, 1.0);
        ws.tmp_nn.copy_from(&ws.vxx);
        ws.vxx += ws.tmp_nn.transpose();
        ws.vxx *= 0.5;
        ws.quu_reg = chol.unpack();
    }
    Ok(dv)
}

/// Applies `u_t = ubar_t + alpha k_t + K_t (x_t - xbar_t)` from the nominal
/// initial state.
pub fn forward_pass<P: ControlProblem + ?Sized>(
    problem: &P,
    nominal: &NominalTrajectory,
    policy: &FeedbackPolicy,
    alpha: f64,
) -> Result<NominalTrajectory> {
    let horizon = nominal.horizon();
    let w = problem.running_weight();
    let mut states = Vec::with_capacity(horizon + 1);
    let mut controls = Vec::with_capacity(horizon);
    let mut step_costs = Vec::with_capacity(horizon + 1);
    states.push(nominal.states[0].clone());
    for t in 0..horizon {
        let x = &states[t];
        let dx = x - &nominal.states[t];
        let mut u = nominal.controls[t].clone();
        u.axpy(alpha, &policy.feedforward[t], 1.0);
        u.gemv(1.0, &policy.gains[t], &dx, 1.0);
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::DivergedRollout { step: t });
        }
        step_costs.push(w * problem.running_cost(t, x, &u)?);
        let next = problem.step(t, x, &u)?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::DivergedRollout { step: t + 1 });
        }
        states.push(next);
        controls.push(u);
    }
    step_costs.push(problem.terminal_cost(states.last().unwrap())?);
    let total_cost: f64 = step_costs.iter().sum();
    if !total_cost.is_finite() {
        return Err(Error::DivergedRollout { step: horizon });
    }
    Ok(NominalTrajectory {
        states,
        controls,
        step_costs,
        total_cost,
    })
}

/// Zero control sequence for `problem`.
pub fn zero_controls<P: ControlProblem + ?Sized>(problem: &P) -> Vec<DVector<f64>> {
    vec![DVector::zeros(problem.input_dim()); problem.horizon()]
}

/// Runs iLQR from `initial_controls` (zero sequence when `None`).
pub fn solve<P: ControlProblem + ?Sized>(
    problem: &P,
    x0: &DVector<f64>,
    initial_controls: Option<&[DVector<f64>]>,
    config: &SolverConfig,
) -> Result<Solution> {
    config.validate()?;
    let start = Instant::now();
    let (n, m, horizon) = (problem.state_dim(), problem.input_dim(), problem.horizon());
    let zeros;
    let init = match initial_controls {
        Some(c) => c,
        None => {
            zeros = zero_controls(problem);
            &zeros
        }
    };
    let mut nominal = rollout(problem, init, x0)?;
    let mut costs = vec![nominal.total_cost];
    let mut step_sizes = Vec::new();
    let mut round_times_ms = Vec::new();
    let mut lin = vec![
        LinearizedStep {
            a: DMatrix::zeros(n, n),
            b: DMatrix::zeros(n, m),
        };
        horizon
    ];
    let mut exp = QuadraticExpansion::zeros(horizon, n, m, problem.running_weight());
    let mut ws = Workspace::new(n, m);
    let mut policy = FeedbackPolicy {
        feedforward: vec![DVector::zeros(m); horizon],
        gains: vec![DMatrix::zeros(m, n); horizon],
    };
    let mut reg = config.reg_init;
    let mut iterations = 0;
    let mut accepted = 0;
    let mut termination = Termination::MaxIterations;

    let mut round_start = Instant::now();
    'outer: while iterations < config.max_iterations {
        if iterations > 0 {
            round_times_ms.push(round_start.elapsed().as_secs_f64() * 1e3);
        }
        round_start = Instant::now();
        linearize_into(problem, &nominal, &mut lin)?;
        expand_into(problem, &nominal, &mut exp)?;
        loop {
            iterations += 1;
            let curvature = |t: usize, vx: &DVector<f64>, qxx: &mut DMatrix<f64>| {
                if config.second_order {
                    problem.add_dynamics_curvature(t, &nominal.states[t], vx, qxx);
                }
            };
            let dv = match backward_pass_into(&exp, &lin, reg, &curvature, &mut ws, &mut policy) {
                Ok(dv) => dv,
                Err(Error::NotPositiveDefinite { .. }) => {
                    reg = config.grow(reg);
                    if reg > config.reg_max {
                        termination = Termination::LineSearchFailure;
                        break 'outer;
                    }
                    if iterations >= config.max_iterations {
                        break 'outer;
                    }
                    continue;
                }
                Err(e) => return Err(e),
            };
            let predicted = -dv.at(1.0);
            if predicted < config.abs_tol || predicted < config.rel_tol * nominal.total_cost.abs() {
                termination = Termination::Tolerance;
                break 'outer;
            }
            let candidate = config.line_search.iter().find_map(|&alpha| {
                forward_pass(problem, &nominal, &policy, alpha)
                    .ok()
                    .filter(|c| c.total_cost < nominal.total_cost)
                    .map(|c| (alpha, c))
            });
            match candidate {
                Some((alpha, c)) => {
                    step_sizes.push(alpha);
                    let decrease = nominal.total_cost - c.total_cost;
                    let rel = decrease / nominal.total_cost.abs().max(f64::MIN_POSITIVE);
                    nominal = c;
                    costs.push(nominal.total_cost);
                    accepted += 1;
                    reg = config.shrink(reg);
                    if decrease < config.abs_tol || rel < config.rel_tol {
                        termination = Termination::Tolerance;
                        break 'outer;
                    }
                    break;
                }
                None => {
                    reg = config.grow(reg);
                    if reg > config.reg_max {
                        termination = Termination::LineSearchFailure;
                        break 'outer;
                    }
                    if iterations >= config.max_iterations {
                        break 'outer;
                    }
                }
            }
        }
    }

    if iterations > 0 {
        round_times_ms.push(round_start.elapsed().as_secs_f64() * 1e3);
    }
    let report = SolveReport {
        iterations,
        accepted_iterations: accepted,
        converged: termination == Termination::Tolerance,
        termination,
        costs,
        step_sizes,
        round_times_ms,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        final_regularization: reg,
    };
    debug_assert!(report.is_monotone());
    Ok(Solution {
        controls: nominal.controls.clone(),
        trajectory: nominal,
        policy,
        report,
    })
}

/// A time-invariant linear-quadratic problem
/// `x' = A x + B u`, cost `w * sum (x'Qx + u'Ru) + x_T' Q_T x_T`.
#[derive(Debug, Clone)]
pub struct LinearQuadratic {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub q_terminal: DMatrix<f64>,
    pub horizon: usize,
    pub weight: f64,
}

impl ControlProblem for LinearQuadratic {
    fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn running_weight(&self) -> f64 {
        self.weight
    }

    fn step(&self, _t: usize, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(&self.a * x + &self.b * u)
    }

    fn linearize_into(
        &self,
        _t: usize,
        _x: &DVector<f64>,
        _u: &DVector<f64>,
        a: &mut DMatrix<f64>,
        b: &mut DMatrix<f64>,
    ) -> Result<()> {
        a.copy_from(&self.a);
        b.copy_from(&self.b);
        Ok(())
    }

    fn running_cost(&self, _t: usize, x: &DVector<f64>, u: &DVector<f64>) -> Result<f64> {
        Ok(x.dot(&(&self.q * x)) + u.dot(&(&self.r * u)))
    }

    fn terminal_cost(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(x.dot(&(&self.q_terminal * x)))
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
        lux: &mut DMatrix<f64>,
    ) {
        lx.gemv(2.0, &self.q, x, 0.0);
        lu.gemv(2.0, &self.r, u, 0.0);
        lxx.copy_from(&(&self.q * 2.0));
        luu.copy_from(&(&self.r * 2.0));
        lux.fill(0.0);
    }

    fn terminal_expansion_into(&self, x: &DVector<f64>, lx: &mut DVector<f64>, lxx: &mut DMatrix<f64>) {
        lx.gemv(2.0, &self.q_terminal, x, 0.0);
        lxx.copy_from(&(&self.q_terminal * 2.0));
    }
}
