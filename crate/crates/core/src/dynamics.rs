//! Per-agent kinematic models, explicit-Euler discretization and the
//! block-diagonal linearization of the joint system.
//!
//! Agents never interact through their dynamics. Every joint operation here
//! is a loop over agent blocks, and the joint Jacobians have exactly zero
//! cross-agent blocks.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Pitch magnitude at which the Z-Y-X Euler-rate matrix is rejected.
pub const PITCH_LIMIT: f64 = std::f64::consts::FRAC_PI_2 - 1e-6;

/// A continuous-time, time-invariant agent model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgentModel {
    /// State `[px, py, theta, v]`, input `[omega, accel]`.
    #[serde(rename = "unicycle4")]
    Unicycle4,
    /// State `[px, py, pz, roll, pitch, yaw]`, input body-frame
    /// `[vx, vy, vz, p, q, r]`.
    #[serde(rename = "quadrotor6")]
    Quadrotor6,
}

impl AgentModel {
    pub fn state_dim(self) -> usize {
        match self {
            AgentModel::Unicycle4 => 4,
            AgentModel::Quadrotor6 => 6,
        }
    }

    pub fn input_dim(self) -> usize {
        match self {
            AgentModel::Unicycle4 => 2,
            AgentModel::Quadrotor6 => 6,
        }
    }

    /// State entries that form the agent's position in the world.
    pub fn position_indices(self) -> &'static [usize] {
        match self {
            AgentModel::Unicycle4 => &[0, 1],
            AgentModel::Quadrotor6 => &[0, 1, 2],
        }
    }

    /// State entries holding angles (wrapped only by the tracking cost).
    pub fn angle_indices(self) -> &'static [usize] {
        match self {
            AgentModel::Unicycle4 => &[2],
            AgentModel::Quadrotor6 => &[3, 4, 5],
        }
    }

    pub fn state_names(self) -> &'static [&'static str] {
        match self {
            AgentModel::Unicycle4 => &["px", "py", "theta", "v"],
            AgentModel::Quadrotor6 => &["px", "py", "pz", "roll", "pitch", "yaw"],
        }
    }

    pub fn input_names(self) -> &'static [&'static str] {
        match self {
            AgentModel::Unicycle4 => &["omega", "accel"],
            AgentModel::Quadrotor6 => &["vbx", "vby", "vbz", "p", "q", "r"],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AgentModel::Unicycle4 => "unicycle4",
            AgentModel::Quadrotor6 => "quadrotor6",
        }
    }

    fn check(self, x: &[f64], u: &[f64]) -> Result<()> {
        check_len("agent state", self.state_dim(), x.len())?;
        check_len("agent input", self.input_dim(), u.len())?;
        if let AgentModel::Quadrotor6 = self {
            if x[4].abs() >= PITCH_LIMIT {
                return Err(Error::Singularity { pitch: x[4] });
            }
        }
        Ok(())
    }
}

/// Continuous-time state derivative. `_t` is accepted for interface
/// generality; both built-in models are time-invariant.
pub fn derivative(model: AgentModel, x: &[f64], u: &[f64], _t: f64) -> Result<DVector<f64>> {
    model.check(x, u)?;
    Ok(match model {
        AgentModel::Unicycle4 => {
            let (s, c) = x[2].sin_cos();
            DVector::from_vec(vec![x[3] * c, x[3] * s, u[0], u[1]])
        }
        AgentModel::Quadrotor6 => {
            let euler = Euler::new(x[3], x[4], x[5]);
            let vel = Vector3::new(u[0], u[1], u[2]);
            let rates = Vector3::new(u[3], u[4], u[5]);
            let p = euler.rotation() * vel;
            let a = euler.rate_matrix() * rates;
            DVector::from_vec(vec![p[0], p[1], p[2], a[0], a[1], a[2]])
        }
    })
}

/// One explicit-Euler step `x + dt * f(x, u)`.
pub fn step(model: AgentModel, x: &[f64], u: &[f64], dt: f64) -> Result<DVector<f64>> {
    if !(dt > 0.0) {
        return Err(Error::InvalidTimeStep(dt));
    }
    let xdot = derivative(model, x, u, 0.0)?;
    Ok(DVector::from_iterator(
        x.len(),
        x.iter().zip(xdot.iter()).map(|(xi, di)| xi + dt * di),
    ))
}

/// Exact Jacobians `(A, B)` of the Euler map at `(x, u)`.
pub fn linearize_step(
    model: AgentModel,
    x: &[f64],
    u: &[f64],
    dt: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if !(dt > 0.0) {
        return Err(Error::InvalidTimeStep(dt));
    }
    model.check(x, u)?;
    let n = model.state_dim();
    let m = model.input_dim();
    let mut a = DMatrix::identity(n, n);
    let mut b = DMatrix::zeros(n, m);
    fill_jacobians(model, x, u, dt, &mut a, &mut b, 0, 0);
    Ok((a, b))
}

/// Adds `dt * df/dx` into `a` and writes `dt * df/du` into `b` at the given
/// block offsets. `a` must already hold the identity on the block.
#[allow(clippy::too_many_arguments)]
/// Adds `sum_k w[k] * d2 f_k / dx2` of one agent's Euler map to `hxx` at
/// `offset`. Only the unicycle contributes: its map is linear in the input,
/// so the state block is the whole second-order term. Quadrotor attitude
/// curvature is left to the first-order model.
pub fn add_step_curvature(model: AgentModel, x: &[f64], dt: f64, w: &[f64], hxx: &mut DMatrix<f64>, offset: usize) {
    if model != AgentModel::Unicycle4 {
        return;
    }
    let (s, c) = x[2].sin_cos();
    let v = x[3];
    let (th, sp) = (offset + 2, offset + 3);
    hxx[(th, th)] += -dt * v * (w[0] * c + w[1] * s);
    let cross = dt * (w[1] * c - w[0] * s);
    hxx[(th, sp)] += cross;
    hxx[(sp, th)] += cross;
}

#[allow(clippy::too_many_arguments)]
fn fill_jacobians(
    model: AgentModel,
    x: &[f64],
    u: &[f64],
    dt: f64,
    a: &mut DMatrix<f64>,
    b: &mut DMatrix<f64>,
    row: usize,
    col: usize,
) {
    match model {
        AgentModel::Unicycle4 => {
            let (s, c) = x[2].sin_cos();
            let v = x[3];
            a[(row, row + 2)] += -dt * v * s;
            a[(row, row + 3)] += dt * c;
            a[(row + 1, row + 2)] += dt * v * c;
            a[(row + 1, row + 3)] += dt * s;
            b[(row + 2, col)] = dt;
            b[(row + 3, col + 1)] = dt;
        }
        AgentModel::Quadrotor6 => {
            let euler = Euler::new(x[3], x[4], x[5]);
            let vel = Vector3::new(u[0], u[1], u[2]);
            let rates = Vector3::new(u[3], u[4], u[5]);
            let rot = euler.rotation();
            let w = euler.rate_matrix();
            let [dr_roll, dr_pitch, dr_yaw] = euler.rotation_partials();
            let [dw_roll, dw_pitch] = euler.rate_matrix_partials();
            let cols_p = [dr_roll * vel, dr_pitch * vel, dr_yaw * vel];
            let cols_a = [dw_roll * rates, dw_pitch * rates, Vector3::zeros()];
            for k in 0..3 {
                for r in 0..3 {
                    a[(row + r, row + 3 + k)] += dt * cols_p[k][r];
                    a[(row + 3 + r, row + 3 + k)] += dt * cols_a[k][r];
                }
            }
            for r in 0..3 {
                for k in 0..3 {
                    b[(row + r, col + k)] = dt * rot[(r, k)];
                    b[(row + 3 + r, col + 3 + k)] = dt * w[(r, k)];
                }
            }
        }
    }
}

/// Z-Y-X (yaw-pitch-roll) Euler angles with cached trigonometry.
struct Euler {
    sr: f64,
    cr: f64,
    sp: f64,
    cp: f64,
    sy: f64,
    cy: f64,
}

impl Euler {
    fn new(roll: f64, pitch: f64, yaw: f64) -> Self {
        let (sr, cr) = roll.sin_cos();
        let (sp, cp) = pitch.sin_cos();
        let (sy, cy) = yaw.sin_cos();
        Self {
            sr,
            cr,
            sp,
            cp,
            sy,
            cy,
        }
    }

    fn rx(&self) -> Matrix3<f64> {
        Matrix3::new(1.0, 0.0, 0.0, 0.0, self.cr, -self.sr, 0.0, self.sr, self.cr)
    }

    fn ry(&self) -> Matrix3<f64> {
        Matrix3::new(self.cp, 0.0, self.sp, 0.0, 1.0, 0.0, -self.sp, 0.0, self.cp)
    }

    fn rz(&self) -> Matrix3<f64> {
        Matrix3::new(self.cy, -self.sy, 0.0, self.sy, self.cy, 0.0, 0.0, 0.0, 1.0)
    }

    /// World-from-body rotation `Rz(yaw) Ry(pitch) Rx(roll)`.
    fn rotation(&self) -> Matrix3<f64> {
        self.rz() * self.ry() * self.rx()
    }

    fn rotation_partials(&self) -> [Matrix3<f64>; 3] {
        let drx = Matrix3::new(0.0, 0.0, 0.0, 0.0, -self.sr, -self.cr, 0.0, self.cr, -self.sr);
        let dry = Matrix3::new(-self.sp, 0.0, self.cp, 0.0, 0.0, 0.0, -self.cp, 0.0, -self.sp);
        let drz = Matrix3::new(-self.sy, -self.cy, 0.0, self.cy, -self.sy, 0.0, 0.0, 0.0, 0.0);
        [
            self.rz() * self.ry() * drx,
            self.rz() * dry * self.rx(),
            drz * self.ry() * self.rx(),
        ]
    }

    /// Maps body rates `[p, q, r]` to Euler-angle rates.
    fn rate_matrix(&self) -> Matrix3<f64> {
        let tp = self.sp / self.cp;
        Matrix3::new(
            1.0,
            self.sr * tp,
            self.cr * tp,
            0.0,
            self.cr,
            -self.sr,
            0.0,
            self.sr / self.cp,
            self.cr / self.cp,
        )
    }

    fn rate_matrix_partials(&self) -> [Matrix3<f64>; 2] {
        let tp = self.sp / self.cp;
        let sec2 = 1.0 / (self.cp * self.cp);
        let d_roll = Matrix3::new(
            0.0,
            self.cr * tp,
            -self.sr * tp,
            0.0,
            -self.sr,
            -self.cr,
            0.0,
            self.cr / self.cp,
            -self.sr / self.cp,
        );
        let d_pitch = Matrix3::new(
            0.0,
            self.sr * sec2,
            self.cr * sec2,
            0.0,
            0.0,
            0.0,
            0.0,
            self.sr * self.sp * sec2,
            self.cr * self.sp * sec2,
        );
        [d_roll, d_pitch]
    }
}

/// Start index of every agent block inside a stacked vector.
fn offsets(dims: impl Iterator<Item = usize>) -> (Vec<usize>, usize) {
    let mut total = 0;
    let offsets = dims
        .map(|d| {
            let o = total;
            total += d;
            o
        })
        .collect();
    (offsets, total)
}

/// Stacked state and input bookkeeping for a fixed list of agent models.
#[derive(Debug, Clone, PartialEq)]
pub struct JointLayout {
    models: Vec<AgentModel>,
    state_offsets: Vec<usize>,
    input_offsets: Vec<usize>,
    state_dim: usize,
    input_dim: usize,
}

impl JointLayout {
    pub fn new(models: Vec<AgentModel>) -> Self {
        let (state_offsets, state_dim) = offsets(models.iter().map(|m| m.state_dim()));
        let (input_offsets, input_dim) = offsets(models.iter().map(|m| m.input_dim()));
        Self {
            models,
            state_offsets,
            input_offsets,
            state_dim,
            input_dim,
        }
    }

    pub fn models(&self) -> &[AgentModel] {
        &self.models
    }

    pub fn agents(&self) -> usize {
        self.models.len()
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn state_offsets(&self) -> &[usize] {
        &self.state_offsets
    }

    pub fn input_offsets(&self) -> &[usize] {
        &self.input_offsets
    }

    pub fn state_range(&self, agent: usize) -> std::ops::Range<usize> {
        let o = self.state_offsets[agent];
        o..o + self.models[agent].state_dim()
    }

    pub fn input_range(&self, agent: usize) -> std::ops::Range<usize> {
        let o = self.input_offsets[agent];
        o..o + self.models[agent].input_dim()
    }

    /// Joint Euler step on raw stacked vectors.
    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>, dt: f64) -> Result<DVector<f64>> {
        check_len("joint state", self.state_dim, x.len())?;
        check_len("joint input", self.input_dim, u.len())?;
        let mut next = DVector::zeros(self.state_dim);
        for (i, &model) in self.models.iter().enumerate() {
            let xs = self.state_range(i);
            let us = self.input_range(i);
            let xi = step(model, &x.as_slice()[xs.clone()], &u.as_slice()[us], dt)?;
            next.rows_mut(xs.start, xs.len()).copy_from(&xi);
        }
        Ok(next)
    }

    /// Joint Jacobians written into preallocated `a` (n x n) and `b` (n x m).
    /// Cross-agent blocks are left exactly zero.
    pub fn linearize_into(
        &self,
        x: &DVector<f64>,
        u: &DVector<f64>,
        dt: f64,
        a: &mut DMatrix<f64>,
        b: &mut DMatrix<f64>,
    ) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::InvalidTimeStep(dt));
        }
        a.fill_with_identity();
        b.fill(0.0);
        for (i, &model) in self.models.iter().enumerate() {
            let xs = self.state_range(i);
            let us = self.input_range(i);
            let xi = &x.as_slice()[xs.clone()];
            let ui = &u.as_slice()[us.clone()];
            model.check(xi, ui)?;
            fill_jacobians(model, xi, ui, dt, a, b, xs.start, us.start);
        }
        Ok(())
    }

    /// Adds the second-order dynamics term `sum_k w[k] * d2 f_k / dx2` of
    /// the joint step to `hxx`, block by block via [`add_step_curvature`].
    pub fn add_curvature(&self, x: &DVector<f64>, dt: f64, w: &DVector<f64>, hxx: &mut DMatrix<f64>) {
        for (i, &model) in self.models.iter().enumerate() {
            let xs = self.state_range(i);
            add_step_curvature(model, &x.as_slice()[xs.clone()], dt, &w.as_slice()[xs.clone()], hxx, xs.start);
        }
    }

    pub fn linearize(&self, x: &DVector<f64>, u: &DVector<f64>, dt: f64) -> Result<LinearizedStep> {
        let mut a = DMatrix::zeros(self.state_dim, self.state_dim);
        let mut b = DMatrix::zeros(self.state_dim, self.input_dim);
        self.linearize_into(x, u, dt, &mut a, &mut b)?;
        Ok(LinearizedStep { a, b })
    }
}

/// Stacked joint state with per-agent offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub values: DVector<f64>,
    pub offsets: Vec<usize>,
}

/// Stacked joint input with per-agent offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct JointControl {
    pub values: DVector<f64>,
    pub offsets: Vec<usize>,
}

impl JointState {
    pub fn new(layout: &JointLayout, values: DVector<f64>) -> Result<Self> {
        check_len("joint state", layout.state_dim(), values.len())?;
        Ok(Self {
            values,
            offsets: layout.state_offsets().to_vec(),
        })
    }

    pub fn from_blocks(blocks: &[Vec<f64>]) -> Self {
        let (offsets, _) = offsets(blocks.iter().map(Vec::len));
        Self {
            values: DVector::from_iterator(
                blocks.iter().map(Vec::len).sum(),
                blocks.iter().flatten().copied(),
            ),
            offsets,
        }
    }

    pub fn block(&self, agent: usize) -> &[f64] {
        block(self.values.as_slice(), &self.offsets, agent)
    }
}

impl JointControl {
    pub fn new(layout: &JointLayout, values: DVector<f64>) -> Result<Self> {
        check_len("joint input", layout.input_dim(), values.len())?;
        Ok(Self {
            values,
            offsets: layout.input_offsets().to_vec(),
        })
    }

    pub fn from_blocks(blocks: &[Vec<f64>]) -> Self {
        let (offsets, _) = offsets(blocks.iter().map(Vec::len));
        Self {
            values: DVector::from_iterator(
                blocks.iter().map(Vec::len).sum(),
                blocks.iter().flatten().copied(),
            ),
            offsets,
        }
    }

    pub fn block(&self, agent: usize) -> &[f64] {
        block(self.values.as_slice(), &self.offsets, agent)
    }
}

fn block<'a>(values: &'a [f64], offsets: &[usize], agent: usize) -> &'a [f64] {
    let end = offsets.get(agent + 1).copied().unwrap_or(values.len());
    &values[offsets[agent]..end]
}

/// Jacobians of one joint Euler step. Both matrices are block-diagonal
/// across agents.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedStep {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

/// Applies [`step`] to every agent block.
pub fn joint_step(
    models: &[AgentModel],
    x: &JointState,
    u: &JointControl,
    dt: f64,
) -> Result<JointState> {
    let layout = JointLayout::new(models.to_vec());
    if x.offsets != layout.state_offsets() {
        return Err(Error::Config("state offsets do not match agent models".into()));
    }
    if u.offsets != layout.input_offsets() {
        return Err(Error::Config("input offsets do not match agent models".into()));
    }
    let values = layout.step(&x.values, &u.values, dt)?;
    Ok(JointState {
        values,
        offsets: x.offsets.clone(),
    })
}
