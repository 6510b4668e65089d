//! Tracking and hinge-collision cost primitives, the potential function built
//! from them, and the second-order expansion consumed by the solver.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::dynamics::JointLayout;
use crate::error::{check_len, Error, Result};
use crate::ilqr::NominalTrajectory;

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// Diagonal quadratic tracking cost of a single agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingCost {
    pub q: Vec<f64>,
    pub r: Vec<f64>,
    pub q_terminal: Vec<f64>,
    pub x_ref: Vec<f64>,
    pub u_ref: Vec<f64>,
    pub angle_indices: Vec<usize>,
}

impl TrackingCost {
    /// Builds a cost with `q_terminal = q` and `u_ref = 0`.
    pub fn new(q: Vec<f64>, r: Vec<f64>, x_ref: Vec<f64>, angle_indices: Vec<usize>) -> Result<Self> {
        let cost = Self {
            q_terminal: q.clone(),
            u_ref: vec![0.0; r.len()],
            q,
            r,
            x_ref,
            angle_indices,
        };
        cost.validate()?;
        Ok(cost)
    }

    pub fn with_terminal(mut self, q_terminal: Vec<f64>) -> Result<Self> {
        self.q_terminal = q_terminal;
        self.validate()?;
        Ok(self)
    }

    pub fn state_dim(&self) -> usize {
        self.q.len()
    }

    pub fn input_dim(&self) -> usize {
        self.r.len()
    }

    pub fn validate(&self) -> Result<()> {
        check_len("terminal weights", self.q.len(), self.q_terminal.len())?;
        check_len("reference state", self.q.len(), self.x_ref.len())?;
        check_len("reference input", self.r.len(), self.u_ref.len())?;
        if self.q.iter().chain(&self.q_terminal).any(|w| !(*w >= 0.0)) {
            return Err(Error::Config("state weights must be non-negative".into()));
        }
        if self.r.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::Config("input weights must be positive".into()));
        }
        if let Some(&i) = self.angle_indices.iter().find(|&&i| i >= self.q.len()) {
            return Err(Error::Config(format!("angle index {i} out of range")));
        }
        if self.x_ref.iter().chain(&self.u_ref).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("tracking reference"));
        }
        Ok(())
    }

    /// `x - x_ref` with angle entries wrapped.
    pub fn state_error(&self, x: &[f64]) -> Vec<f64> {
        let mut e: Vec<f64> = x.iter().zip(&self.x_ref).map(|(a, b)| a - b).collect();
        for &i in &self.angle_indices {
            e[i] = wrap_angle(e[i]);
        }
        e
    }

    fn input_error<'a>(&'a self, u: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        u.iter().zip(&self.u_ref).map(|(a, b)| a - b)
    }
}

fn weighted_square(w: &[f64], e: impl IntoIterator<Item = f64>) -> f64 {
    w.iter().zip(e).map(|(w, e)| w * e * e).sum()
}

pub fn tracking_running(cost: &TrackingCost, x: &[f64], u: &[f64]) -> Result<f64> {
    check_len("tracking state", cost.state_dim(), x.len())?;
    check_len("tracking input", cost.input_dim(), u.len())?;
    Ok(weighted_square(&cost.q, cost.state_error(x)) + weighted_square(&cost.r, cost.input_error(u)))
}

pub fn tracking_terminal(cost: &TrackingCost, x: &[f64]) -> Result<f64> {
    check_len("tracking state", cost.state_dim(), x.len())?;
    Ok(weighted_square(&cost.q_terminal, cost.state_error(x)))
}

/// Hinge penalty `beta * (d - d_prox)^2` on the distance between two agents'
/// positions, zero at and beyond `d_prox`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionCost {
    pub d_prox: f64,
    pub beta: f64,
    pub position_indices_i: Vec<usize>,
    pub position_indices_j: Vec<usize>,
}

impl CollisionCost {
    pub fn new(d_prox: f64, beta: f64, position_indices_i: Vec<usize>, position_indices_j: Vec<usize>) -> Result<Self> {
        let c = Self {
            d_prox,
            beta,
            position_indices_i,
            position_indices_j,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d_prox > 0.0) || !self.d_prox.is_finite() {
            return Err(Error::Config(format!("d_prox must be positive, got {}", self.d_prox)));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::Config(format!("beta must be non-negative, got {}", self.beta)));
        }
        check_len(
            "collision position indices",
            self.position_indices_i.len(),
            self.position_indices_j.len(),
        )
    }

    /// The same coupling seen from the other agent.
    pub fn reversed(&self) -> Self {
        Self {
            d_prox: self.d_prox,
            beta: self.beta,
            position_indices_i: self.position_indices_j.clone(),
            position_indices_j: self.position_indices_i.clone(),
        }
    }

    /// Relative position `p_i - p_j`.
    pub fn offset(&self, xi: &[f64], xj: &[f64]) -> Vec<f64> {
        self.position_indices_i
            .iter()
            .zip(&self.position_indices_j)
            .map(|(&a, &b)| xi[a] - xj[b])
            .collect()
    }

    /// Gradient of the hinge with respect to the relative position.
    pub fn relative_gradient(&self, delta: &[f64]) -> Vec<f64> {
        let d = norm(delta);
        if d >= self.d_prox || d == 0.0 {
            return vec![0.0; delta.len()];
        }
        let s = 2.0 * self.beta * (d - self.d_prox) / d;
        delta.iter().map(|v| s * v).collect()
    }

    /// Exact Hessian with respect to the relative position (indefinite
    /// inside the hinge).
    pub fn relative_hessian(&self, delta: &[f64]) -> DMatrix<f64> {
        let k = delta.len();
        let d = norm(delta);
        if d >= self.d_prox || d == 0.0 {
            return DMatrix::zeros(k, k);
        }
        let n = DVector::from_iterator(k, delta.iter().map(|v| v / d));
        let nn = &n * n.transpose();
        let shrink = (d - self.d_prox) / d;
        (&nn + (DMatrix::identity(k, k) - &nn) * shrink) * (2.0 * self.beta)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn collision_pair(cost: &CollisionCost, xi: &[f64], xj: &[f64]) -> f64 {
    let d = norm(&cost.offset(xi, xj));
    if d < cost.d_prox {
        cost.beta * (d - cost.d_prox).powi(2)
    } else {
        0.0
    }
}

/// Clamps negative eigenvalues of a symmetric matrix to zero.
pub fn project_psd(h: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(h.clone());
    let clamped = eig.eigenvalues.map(|l| l.max(0.0));
    let v = &eig.eigenvectors;
    let p = v * DMatrix::from_diagonal(&clamped) * v.transpose();
    (&p + p.transpose()) * 0.5
}

/// Running and terminal potential of a symmetric game: all tracking costs
/// plus every unordered collision pair counted once.
///
/// Only constructed from a game whose couplings passed symmetry validation.
#[derive(Debug, Clone)]
pub struct Potential {
    layout: JointLayout,
    tracking: Vec<TrackingCost>,
    pairs: Vec<(usize, usize, CollisionCost)>,
}

impl Potential {
    pub(crate) fn new(
        layout: JointLayout,
        tracking: Vec<TrackingCost>,
        pairs: Vec<(usize, usize, CollisionCost)>,
    ) -> Self {
        Self {
            layout,
            tracking,
            pairs,
        }
    }

    pub fn layout(&self) -> &JointLayout {
        &self.layout
    }

    pub fn tracking_terms(&self) -> &[TrackingCost] {
        &self.tracking
    }

    /// Unordered pairs `(i, j, C_ij)` with `i < j`.
    pub fn pair_terms(&self) -> &[(usize, usize, CollisionCost)] {
        &self.pairs
    }

    fn check(&self, x: &DVector<f64>, u: Option<&DVector<f64>>) -> Result<()> {
        check_len("joint state", self.layout.state_dim(), x.len())?;
        if let Some(u) = u {
            check_len("joint input", self.layout.input_dim(), u.len())?;
        }
        Ok(())
    }

    pub fn running(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<f64> {
        self.check(x, Some(u))?;
        let mut total = 0.0;
        for (i, cost) in self.tracking.iter().enumerate() {
            total += tracking_running(
                cost,
                &x.as_slice()[self.layout.state_range(i)],
                &u.as_slice()[self.layout.input_range(i)],
            )?;
        }
        Ok(total + self.collision_sum(x))
    }

    fn collision_sum(&self, x: &DVector<f64>) -> f64 {
        self.pairs
            .iter()
            .map(|(i, j, c)| {
                collision_pair(
                    c,
                    &x.as_slice()[self.layout.state_range(*i)],
                    &x.as_slice()[self.layout.state_range(*j)],
                )
            })
            .sum()
    }

    pub fn terminal(&self, x: &DVector<f64>) -> Result<f64> {
        self.check(x, None)?;
        let mut total = 0.0;
        for (i, cost) in self.tracking.iter().enumerate() {
            total += tracking_terminal(cost, &x.as_slice()[self.layout.state_range(i)])?;
        }
        Ok(total)
    }

    /// Analytic gradient and PSD-projected Hessian of the running potential
    /// with respect to the joint state, written into `lx` and `lxx`.
    /// Input blocks are written into `lu` and `luu`.
    pub fn running_expansion_into(
        &self,
        x: &DVector<f64>,
        u: &DVector<f64>,
        lx: &mut DVector<f64>,
        lu: &mut DVector<f64>,
        lxx: &mut DMatrix<f64>,
        luu: &mut DMatrix<f64>,
    ) {
        lx.fill(0.0);
        lu.fill(0.0);
        lxx.fill(0.0);
        luu.fill(0.0);
        for (i, cost) in self.tracking.iter().enumerate() {
            let xs = self.layout.state_range(i);
            let us = self.layout.input_range(i);
            let e = cost.state_error(&x.as_slice()[xs.clone()]);
            for (k, r) in xs.enumerate() {
                lx[r] = 2.0 * cost.q[k] * e[k];
                lxx[(r, r)] = 2.0 * cost.q[k];
            }
            for (k, r) in us.enumerate() {
                lu[r] = 2.0 * cost.r[k] * (u[r] - cost.u_ref[k]);
                luu[(r, r)] = 2.0 * cost.r[k];
            }
        }
        self.add_collision_expansion(x, lx, lxx);
    }

    fn add_collision_expansion(&self, x: &DVector<f64>, lx: &mut DVector<f64>, lxx: &mut DMatrix<f64>) {
        for (i, j, c) in &self.pairs {
            let oi = self.layout.state_offsets()[*i];
            let oj = self.layout.state_offsets()[*j];
            let delta = c.offset(
                &x.as_slice()[self.layout.state_range(*i)],
                &x.as_slice()[self.layout.state_range(*j)],
            );
            if norm(&delta) >= c.d_prox {
                continue;
            }
            let g = c.relative_gradient(&delta);
            // The pair Hessian is [[H, -H], [-H, H]], which is PSD exactly
            // when H is, so projecting H projects the whole block.
            let h = project_psd(&c.relative_hessian(&delta));
            let ri: Vec<usize> = c.position_indices_i.iter().map(|k| oi + k).collect();
            let rj: Vec<usize> = c.position_indices_j.iter().map(|k| oj + k).collect();
            for a in 0..g.len() {
                lx[ri[a]] += g[a];
                lx[rj[a]] -= g[a];
                for b in 0..g.len() {
                    lxx[(ri[a], ri[b])] += h[(a, b)];
                    lxx[(rj[a], rj[b])] += h[(a, b)];
                    lxx[(ri[a], rj[b])] -= h[(a, b)];
                    lxx[(rj[a], ri[b])] -= h[(a, b)];
                }
            }
        }
    }

    /// Exact (unprojected) product of the running state Hessian with `v`.
    pub fn running_hessian_product(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check(x, None)?;
        check_len("direction", x.len(), v.len())?;
        let mut hv = DVector::zeros(x.len());
        for (i, cost) in self.tracking.iter().enumerate() {
            for (k, r) in self.layout.state_range(i).enumerate() {
                hv[r] = 2.0 * cost.q[k] * v[r];
            }
        }
        for (i, j, c) in &self.pairs {
            let oi = self.layout.state_offsets()[*i];
            let oj = self.layout.state_offsets()[*j];
            let delta = c.offset(
                &x.as_slice()[self.layout.state_range(*i)],
                &x.as_slice()[self.layout.state_range(*j)],
            );
            let h = c.relative_hessian(&delta);
            let w = DVector::from_iterator(
                delta.len(),
                c.position_indices_i
                    .iter()
                    .zip(&c.position_indices_j)
                    .map(|(a, b)| v[oi + a] - v[oj + b]),
            );
            let hw = h * w;
            for (a, (pi, pj)) in c.position_indices_i.iter().zip(&c.position_indices_j).enumerate() {
                hv[oi + pi] += hw[a];
                hv[oj + pj] -= hw[a];
            }
        }
        Ok(hv)
    }

    pub fn terminal_expansion_into(&self, x: &DVector<f64>, lx: &mut DVector<f64>, lxx: &mut DMatrix<f64>) {
        lx.fill(0.0);
        lxx.fill(0.0);
        for (i, cost) in self.tracking.iter().enumerate() {
            let xs = self.layout.state_range(i);
            let e = cost.state_error(&x.as_slice()[xs.clone()]);
            for (k, r) in xs.enumerate() {
                lx[r] = 2.0 * cost.q_terminal[k] * e[k];
                lxx[(r, r)] = 2.0 * cost.q_terminal[k];
            }
        }
    }
}

/// Second-order expansion of an objective `w * sum_t l(x_t, u_t) + l_T(x_T)`
/// around a nominal trajectory. Blocks hold derivatives of `l` itself; the
/// solver applies `running_weight`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticExpansion {
    pub running_weight: f64,
    pub lx: Vec<DVector<f64>>,
    pub lu: Vec<DVector<f64>>,
    pub lxx: Vec<DMatrix<f64>>,
    pub luu: Vec<DMatrix<f64>>,
    pub lux: Vec<DMatrix<f64>>,
    pub terminal_x: DVector<f64>,
    pub terminal_xx: DMatrix<f64>,
}

impl QuadraticExpansion {
    pub fn zeros(horizon: usize, n: usize, m: usize, running_weight: f64) -> Self {
        Self {
            running_weight,
            lx: vec![DVector::zeros(n); horizon],
            lu: vec![DVector::zeros(m); horizon],
            lxx: vec![DMatrix::zeros(n, n); horizon],
            luu: vec![DMatrix::zeros(m, m); horizon],
            lux: vec![DMatrix::zeros(m, n); horizon],
            terminal_x: DVector::zeros(n),
            terminal_xx: DMatrix::zeros(n, n),
        }
    }

    pub fn horizon(&self) -> usize {
        self.lx.len()
    }
}

/// Expansion of the potential objective along `trajectory` with running
/// weight `dt`.
pub fn quadraticize(potential: &Potential, trajectory: &NominalTrajectory, dt: f64) -> Result<QuadraticExpansion> {
    let horizon = trajectory.horizon();
    if horizon < 1 {
        return Err(Error::Config("trajectory needs at least two knots".into()));
    }
    let n = potential.layout.state_dim();
    let m = potential.layout.input_dim();
    let mut exp = QuadraticExpansion::zeros(horizon, n, m, dt);
    quadraticize_into(potential, trajectory, &mut exp)?;
    Ok(exp)
}

fn quadraticize_into(
    potential: &Potential,
    trajectory: &NominalTrajectory,
    exp: &mut QuadraticExpansion,
) -> Result<()> {
    if !trajectory.is_finite() {
        return Err(Error::NonFinite("nominal trajectory"));
    }
    for t in 0..trajectory.horizon() {
        potential.running_expansion_into(
            &trajectory.states[t],
            &trajectory.controls[t],
            &mut exp.lx[t],
            &mut exp.lu[t],
            &mut exp.lxx[t],
            &mut exp.luu[t],
        );
    }
    let last = trajectory.states.last().expect("non-empty trajectory");
    potential.terminal_expansion_into(last, &mut exp.terminal_x, &mut exp.terminal_xx);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unicycle_tracking() -> TrackingCost {
        TrackingCost::new(vec![1.0; 4], vec![1.0; 2], vec![1.0, 2.0, 0.5, 0.0], vec![2]).unwrap()
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!(wrap_angle(2.0 * PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn tracking_examples() {
        let c = unicycle_tracking();
        assert_eq!(tracking_running(&c, &c.x_ref.clone(), &[0.0, 0.0]).unwrap(), 0.0);
        let x = [2.0, 2.0, 0.5, 0.0];
        assert_eq!(tracking_running(&c, &x, &[0.0, 0.0]).unwrap(), 1.0);
        let x = [1.0, 2.0, 0.5 + 2.0 * PI, 0.0];
        assert!(tracking_running(&c, &x, &[0.0, 0.0]).unwrap() < 1e-24);
        assert!(tracking_running(&c, &[0.0; 3], &[0.0; 2]).is_err());
    }

    #[test]
    fn terminal_weights_scale() {
        let c = unicycle_tracking();
        let c2 = c.clone().with_terminal(vec![2.0; 4]).unwrap();
        let x = [0.0, -1.0, 1.0, 3.0];
        assert_eq!(tracking_terminal(&c, &c.x_ref.clone()).unwrap(), 0.0);
        assert_eq!(
            tracking_terminal(&c2, &x).unwrap(),
            2.0 * tracking_terminal(&c, &x).unwrap()
        );
    }

    #[test]
    fn invalid_weights_rejected() {
        assert!(TrackingCost::new(vec![-1.0; 4], vec![1.0; 2], vec![0.0; 4], vec![]).is_err());
        assert!(TrackingCost::new(vec![1.0; 4], vec![0.0; 2], vec![0.0; 4], vec![]).is_err());
        assert!(CollisionCost::new(0.0, 1.0, vec![0, 1], vec![0, 1]).is_err());
        assert!(CollisionCost::new(1.0, -1.0, vec![0, 1], vec![0, 1]).is_err());
    }

    #[test]
    fn hinge_examples() {
        let c = CollisionCost::new(2.4, 1.0, vec![0, 1], vec![0, 1]).unwrap();
        let origin = [0.0, 0.0, 0.0, 0.0];
        assert_eq!(collision_pair(&c, &origin, &[2.4, 0.0, 0.0, 0.0]), 0.0);
        let v = collision_pair(&c, &origin, &[1.4, 0.0, 0.0, 0.0]);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hinge_is_c1_at_threshold() {
        let beta = 3.0;
        let c = CollisionCost::new(2.4, beta, vec![0, 1], vec![0, 1]).unwrap();
        for eps in [1e-3, 1e-6] {
            let delta = [2.4 - eps, 0.0];
            let v = collision_pair(&c, &[delta[0], 0.0], &[0.0, 0.0]);
            assert!(v <= beta * eps * eps * (1.0 + 1e-9));
            assert!(norm(&c.relative_gradient(&delta)) <= 2.0 * beta * eps * (1.0 + 1e-9));
        }
        for d in [2.4, 2.5, 10.0] {
            assert_eq!(collision_pair(&c, &[d, 0.0], &[0.0, 0.0]), 0.0);
            assert!(c.relative_gradient(&[d, 0.0]).iter().all(|g| *g == 0.0));
        }
    }

    #[test]
    fn psd_projection_of_hinge_hessian() {
        let c = CollisionCost::new(2.4, 1.0, vec![0, 1], vec![0, 1]).unwrap();
        let h = c.relative_hessian(&[0.6, 0.8]);
        let eig = SymmetricEigen::new(h.clone()).eigenvalues;
        assert!(eig.min() < 0.0);
        let p = project_psd(&h);
        let eig = SymmetricEigen::new(p.clone()).eigenvalues;
        assert!(eig.min() > -1e-12);
        // Along the offset the curvature is 2 * beta and is preserved.
        let n = DVector::from_vec(vec![0.6, 0.8]);
        assert!(((n.transpose() * &p * &n)[0] - 2.0).abs() < 1e-12);
    }
}
