#![allow(dead_code)]

use bsi_core::{DMatrix, DVector, ForwardProblem, HyperParams, SolverState};
use rand::Rng;
use rand_xoshiro::rand_core::SeedableRng;
use rand_xoshiro::SplitMix64;

pub fn rng(seed: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(seed)
}

pub fn uniform_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn uniform_vector<R: Rng>(rng: &mut R, len: usize, lo: f64, hi: f64) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.random_range(lo..hi))
}

/// Diagonally dominated transform, comfortably invertible.
pub fn transform<R: Rng>(rng: &mut R, m: usize) -> DMatrix<f64> {
    DMatrix::identity(m, m) + uniform_matrix(rng, m, m) * (0.5 / m as f64)
}

pub fn problem<R: Rng>(rng: &mut R, n: usize, m: usize, indirect: bool) -> ForwardProblem {
    let h = uniform_matrix(rng, n, m);
    let g = uniform_vector(rng, n, -3.0, 3.0);
    if indirect {
        ForwardProblem::indirect(g, h, transform(rng, m)).unwrap()
    } else {
        ForwardProblem::direct(g, h).unwrap()
    }
}

pub fn hyper<R: Rng>(rng: &mut R) -> HyperParams {
    let mut draw = || rng.random_range(0.1..3.0);
    HyperParams {
        alpha_eps: draw(),
        beta_eps: draw(),
        alpha_xi: draw(),
        beta_xi: draw(),
        alpha_z: draw(),
        beta_z: draw(),
        alpha_f: draw(),
        beta_f: draw(),
    }
}

pub fn state<R: Rng>(rng: &mut R, p: &ForwardProblem) -> SolverState {
    let (n, m) = (p.n_obs(), p.n_unknowns());
    let indirect = p.d().is_some();
    SolverState {
        f_hat: uniform_vector(rng, m, -2.0, 2.0),
        z_hat: indirect.then(|| uniform_vector(rng, m, -2.0, 2.0)),
        v_eps: uniform_vector(rng, n, 0.1, 3.0),
        v_xi: uniform_vector(rng, m, 0.1, 3.0),
        v_z: indirect.then(|| uniform_vector(rng, m, 0.1, 3.0)),
        factors: None,
    }
}

pub fn rel_diff(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(f64::MIN_POSITIVE)
}
