#![allow(dead_code)]

pub mod lq;

use nalgebra::{DMatrix, DVector};
use nashplan::dynamics::AgentModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(lo..hi))
}

/// A state away from the pitch singularity.
pub fn random_state(rng: &mut ChaCha8Rng, model: AgentModel) -> Vec<f64> {
    match model {
        AgentModel::Unicycle4 => vec![
            rng.gen_range(-10.0..10.0),
            rng.gen_range(-10.0..10.0),
            rng.gen_range(-3.1..3.1),
            rng.gen_range(-3.0..3.0),
        ],
        AgentModel::Quadrotor6 => vec![
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-5.0..5.0),
            rng.gen_range(0.0..5.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.2..1.2),
            rng.gen_range(-3.1..3.1),
        ],
    }
}

pub fn random_input(rng: &mut ChaCha8Rng, model: AgentModel) -> Vec<f64> {
    (0..model.input_dim()).map(|_| rng.gen_range(-2.0..2.0)).collect()
}

/// Central-difference Jacobian of `f` at `x`.
pub fn fd_jacobian(f: impl Fn(&DVector<f64>) -> DVector<f64>, x: &DVector<f64>, h: f64) -> DMatrix<f64> {
    let m = f(x).len();
    let mut jac = DMatrix::zeros(m, x.len());
    for k in 0..x.len() {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[k] += h;
        xm[k] -= h;
        let col = (f(&xp) - f(&xm)) / (2.0 * h);
        jac.set_column(k, &col);
    }
    jac
}

pub fn fd_gradient(f: impl Fn(&DVector<f64>) -> f64, x: &DVector<f64>, h: f64) -> DVector<f64> {
    DVector::from_fn(x.len(), |k, _| {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[k] += h;
        xm[k] -= h;
        (f(&xp) - f(&xm)) / (2.0 * h)
    })
}

/// Max-norm error relative to the reference, floored at one.
pub fn rel_err(a: &DMatrix<f64>, reference: &DMatrix<f64>) -> f64 {
    (a - reference).amax() / reference.amax().max(1.0)
}

pub fn rel_err_vec(a: &DVector<f64>, reference: &DVector<f64>) -> f64 {
    (a - reference).amax() / reference.amax().max(1.0)
}
