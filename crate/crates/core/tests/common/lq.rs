//! Random LQ instances and the textbook Riccati recursion used as an oracle.

use nalgebra::{DMatrix, DVector};
use nashplan::ilqr::LinearQuadratic;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::uniform;

pub fn random_psd(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> DMatrix<f64> {
    let l = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    &l * l.transpose() + DMatrix::identity(n, n) * floor
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> (LinearQuadratic, DVector<f64>) {
    let n = rng.gen_range(1..=8);
    let m = rng.gen_range(1..=4);
    let horizon = rng.gen_range(1..=50);
    // Keep the open-loop spectral radius near one so costs stay moderate.
    let a = DMatrix::identity(n, n) + DMatrix::from_fn(n, n, |_, _| rng.gen_range(-0.15..0.15));
    let b = DMatrix::from_fn(n, m, |_, _| rng.gen_range(-1.0..1.0));
    let problem = LinearQuadratic {
        a,
        b,
        q: random_psd(rng, n, 0.0),
        r: random_psd(rng, m, 0.1),
        q_terminal: random_psd(rng, n, 0.0),
        horizon,
        weight: rng.gen_range(0.05..1.0),
    };
    let x0 = uniform(rng, n, -3.0, 3.0);
    (problem, x0)
}

/// Backward Riccati recursion; returns the feedback gains `u_t = K_t x_t`.
pub fn riccati_gains(p: &LinearQuadratic) -> Vec<DMatrix<f64>> {
    let (a, b, w) = (&p.a, &p.b, p.weight);
    let mut s = p.q_terminal.clone();
    let mut gains = vec![DMatrix::zeros(b.ncols(), a.nrows()); p.horizon];
    for t in (0..p.horizon).rev() {
        let h = &p.r * w + b.transpose() * &s * b;
        let g = b.transpose() * &s * a;
        let k = -h.clone().lu().solve(&g).unwrap();
        s = &p.q * w + a.transpose() * &s * a + g.transpose() * &k;
        s = (&s + s.transpose()) * 0.5;
        gains[t] = k;
    }
    gains
}

pub fn riccati_controls(p: &LinearQuadratic, x0: &DVector<f64>) -> Vec<DVector<f64>> {
    let mut x = x0.clone();
    riccati_gains(p)
        .iter()
        .map(|k| {
            let u = k * &x;
            x = &p.a * &x + &p.b * &u;
            u
        })
        .collect()
}
