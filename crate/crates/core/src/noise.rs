//! Photon loss: each affected mode meets a vacuum environment on a
//! beamsplitter of transmissivity 1 − η.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::{DensityOperator, State, C64, ZERO};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LossChannel {
    pub eta: f64,
    pub modes: Vec<usize>,
}

impl LossChannel {
    pub fn new(eta: f64, modes: Vec<usize>) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return invalid(format!("loss η = {eta} outside [0, 1]"));
        }
        Ok(Self { eta, modes })
    }

    /// The same loss on every one of `num_modes` modes.
    pub fn uniform(eta: f64, num_modes: usize) -> Result<Self> {
        Self::new(eta, (0..num_modes).collect())
    }
}

/// ⟨k|K_n|k+n⟩ = √(C(k+n, n) ηⁿ (1−η)^k) for K_n = √(ηⁿ/n!) (1−η)^{a†a/2} aⁿ.
pub fn kraus_coefficients(eta: f64, d: usize) -> Vec<Vec<f64>> {
    let mut lf = vec![0.0; d + 1];
    for n in 1..=d {
        lf[n] = lf[n - 1] + (n as f64).ln();
    }
    (0..d)
        .map(|n| {
            (0..d - n)
                .map(|k| {
                    let binom = (0.5 * (lf[k + n] - lf[k] - lf[n])).exp();
                    binom * eta.powi(n as i32).sqrt() * (1.0 - eta).powi(k as i32).sqrt()
                })
                .collect()
        })
        .collect()
}

/// ℒ_η applied mode by mode through its Kraus operators.
pub fn apply_loss(state: &State, channel: &LossChannel) -> Result<State> {
    if !(0.0..=1.0).contains(&channel.eta) {
        return invalid(format!("loss η = {} outside [0, 1]", channel.eta));
    }
    let space = state.space().clone();
    if channel.modes.iter().any(|&m| m >= space.num_modes()) {
        return invalid("loss channel names a mode the state does not have");
    }
    if channel.eta == 0.0 || channel.modes.is_empty() {
        return Ok(state.clone());
    }
    let mut rho = state.to_density().matrix().clone();
    let dim = space.dim();
    let strides = space.strides();
    for &m in &channel.modes {
        let d = space.cutoff(m);
        let s = strides[m];
        let c = kraus_coefficients(channel.eta, d);
        let level = |i: usize| (i / s) % d;
        let mut out = DMatrix::from_element(dim, dim, ZERO);
        for j in 0..dim {
            let kj = level(j);
            for i in 0..dim {
                let ki = level(i);
                let top = d - ki.max(kj);
                let mut acc = ZERO;
                for n in 0..top {
                    let w = c[n][ki] * c[n][kj];
                    if w != 0.0 {
                        acc += rho[(i + n * s, j + n * s)] * w;
                    }
                }
                out[(i, j)] = acc;
            }
        }
        rho = out;
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > 1e-6 {
        return Err(Error::Truncation(format!(
            "loss changed the trace to {}",
            tr.re
        )));
    }
    Ok(State::Mixed(DensityOperator::normalized(
        space,
        rho / C64::new(1.0, 0.0),
    )?))
}
