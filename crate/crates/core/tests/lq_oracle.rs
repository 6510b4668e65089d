//! Linear-quadratic instances checked against two independent solutions:
//! the textbook Riccati recursion and a condensed least-squares solve over
//! the stacked control vector.

mod common;

use common::lq::{random_instance, riccati_controls, riccati_gains};
use common::*;
use nalgebra::{DMatrix, DVector};
use nashplan::ilqr::{self, LinearQuadratic, SolverConfig, Termination};

/// Minimizes the objective as a quadratic in the stacked controls.
fn batch_controls(p: &LinearQuadratic, x0: &DVector<f64>) -> Vec<DVector<f64>> {
    let (n, m, big_t, w) = (p.a.nrows(), p.b.ncols(), p.horizon, p.weight);
    // x_t = Phi_t x0 + sum_{s<t} A^{t-1-s} B u_s
    let mut powers = vec![DMatrix::identity(n, n)];
    for k in 1..=big_t {
        powers.push(&p.a * &powers[k - 1]);
    }
    let mut hess = DMatrix::zeros(m * big_t, m * big_t);
    let mut lin = DVector::zeros(m * big_t);
    for t in 0..=big_t {
        let weight = if t == big_t { p.q_terminal.clone() } else { &p.q * w };
        let mut gamma = DMatrix::zeros(n, m * big_t);
        for s in 0..t {
            gamma.view_mut((0, s * m), (n, m)).copy_from(&(&powers[t - 1 - s] * &p.b));
        }
        hess += gamma.transpose() * &weight * &gamma;
        lin += gamma.transpose() * &weight * (&powers[t] * x0);
    }
    for s in 0..big_t {
        let mut block = hess.view_mut((s * m, s * m), (m, m));
        block += &p.r * w;
    }
    let u = hess.cholesky().expect("positive definite").solve(&(-lin));
    (0..big_t).map(|s| u.rows(s * m, m).into_owned()).collect()
}

fn max_entry_diff(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).amax()).fold(0.0, f64::max)
}

#[test]
fn oracles_agree_with_each_other() {
    let mut rng = rng(11);
    for _ in 0..20 {
        let (p, x0) = random_instance(&mut rng);
        let d = max_entry_diff(&riccati_controls(&p, &x0), &batch_controls(&p, &x0));
        assert!(d < 1e-7, "{d} n={} T={}", p.a.nrows(), p.horizon);
    }
}

#[test]
fn ilqr_matches_riccati_in_one_step() {
    let mut rng = rng(12);
    let config = SolverConfig::default();
    for _ in 0..20 {
        let (p, x0) = random_instance(&mut rng);
        let sol = ilqr::solve(&p, &x0, None, &config).unwrap();
        assert_eq!(sol.report.termination, Termination::Tolerance);
        assert_eq!(sol.report.accepted_iterations, 1, "costs {:?}", sol.report.costs);
        assert_eq!(sol.report.step_sizes, vec![1.0]);
        let expected = riccati_controls(&p, &x0);
        assert!(max_entry_diff(&sol.controls, &expected) < 1e-6);
        assert!(max_entry_diff(&sol.controls, &batch_controls(&p, &x0)) < 1e-6);
    }
}

#[test]
fn backward_pass_gains_are_riccati_gains() {
    let mut rng = rng(13);
    for _ in 0..20 {
        let (p, x0) = random_instance(&mut rng);
        let nominal = ilqr::rollout(&p, &ilqr::zero_controls(&p), &x0).unwrap();
        let lin = ilqr::linearize(&p, &nominal).unwrap();
        let exp = ilqr::expand(&p, &nominal).unwrap();
        let (policy, _) = ilqr::backward_pass(&exp, &lin, 0.0).unwrap();
        for (k, expected) in policy.gains.iter().zip(riccati_gains(&p)) {
            assert!((k - &expected).amax() < 1e-6 * expected.amax().max(1.0));
        }
    }
}

#[test]
fn predicted_decrease_is_exact_for_lq() {
    let mut rng = rng(14);
    for _ in 0..20 {
        let (p, x0) = random_instance(&mut rng);
        let nominal = ilqr::rollout(&p, &ilqr::zero_controls(&p), &x0).unwrap();
        let lin = ilqr::linearize(&p, &nominal).unwrap();
        let exp = ilqr::expand(&p, &nominal).unwrap();
        let (policy, dv) = ilqr::backward_pass(&exp, &lin, 0.0).unwrap();
        for alpha in [1.0, 0.5, 0.25] {
            let candidate = ilqr::forward_pass(&p, &nominal, &policy, alpha).unwrap();
            let actual = candidate.total_cost - nominal.total_cost;
            assert!((actual - dv.at(alpha)).abs() < 1e-8 * nominal.total_cost.abs().max(1.0));
        }
    }
}
