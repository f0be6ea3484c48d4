#![allow(dead_code)]

use ecdwit_core::fock::{DensityOperator, FockSpace, PureState, State, C64};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn gauss(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c(re, im)
}

/// Random pure state with amplitudes decaying geometrically, so the top
/// levels are only weakly populated.
pub fn random_pure(space: &FockSpace, rng: &mut ChaCha8Rng) -> State {
    let v = DVector::from_fn(space.dim(), |i, _| {
        let n: usize = space.levels(i).iter().sum();
        gauss(rng) * 0.6f64.powi(n as i32)
    });
    let norm = v.norm();
    State::Pure(PureState::new(space.clone(), v / C64::new(norm, 0.0)).unwrap())
}

/// Random full-rank mixed state GG†/tr.
pub fn random_mixed(space: &FockSpace, rank: usize, rng: &mut ChaCha8Rng) -> State {
    let g = DMatrix::from_fn(space.dim(), rank, |i, _| {
        let n: usize = space.levels(i).iter().sum();
        gauss(rng) * 0.6f64.powi(n as i32)
    });
    let m = &g * g.adjoint();
    let tr = m.trace();
    State::Mixed(DensityOperator::new(space.clone(), m / tr).unwrap())
}

pub fn fidelity_pure(a: &State, b: &State) -> f64 {
    a.as_pure()
        .unwrap()
        .inner(b.as_pure().unwrap())
        .unwrap()
        .norm_sqr()
}

/// ⟨ψ|ρ|ψ⟩ for pure ψ and any state ρ on the same space.
pub fn overlap(psi: &State, rho: &State) -> f64 {
    let v = psi.as_pure().unwrap().amplitudes();
    (v.adjoint() * rho.to_density().matrix() * v)[(0, 0)].re
}

pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}
