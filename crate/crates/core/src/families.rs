//! Point sets, initial guesses and single-mode reductions for the example
//! state families.

use std::f64::consts::{FRAC_PI_4, PI};

use crate::error::{invalid, Result};
use crate::fock::{State, C64};
use crate::gaussian::apply_gaussian;
use crate::noise::{apply_loss, LossChannel};
use crate::phase_space::{ntr_lower_bound, GridConfig};
use crate::points::PointSet;
use crate::states::{make_state, StateSpec};
use crate::symplectic::{transform_point_set, GaussianFrame, SymplecticMap};

/// ξ₀(θ) for the single-photon family with four points.
pub fn fock_xi0(theta: f64) -> C64 {
    let u = FRAC_PI_4 - theta;
    let im = 813.0 / 1217.0 + (1249.0 / 171.0 * u + 2179.0 / 215.0 * u.powi(4)).cos() / 1313.0;
    let re = 2531.0 / 2745.0 + 453.0 / 2083.0 * u * u;
    C64::new(re, im)
}

/// {±Re ξ₀, ±i Im ξ₀} with ξ^A = ξ^B.
pub fn fock_points(theta: f64) -> PointSet {
    let x = fock_xi0(theta);
    let pts = [
        C64::new(x.re, 0.0),
        C64::new(-x.re, 0.0),
        C64::new(0.0, x.im),
        C64::new(0.0, -x.im),
    ];
    PointSet::diagonal_one_mode(&pts).expect("finite points")
}

/// ξ±₀ = β ± iπ/(8β*).
pub fn cat_xi0(beta: C64) -> (C64, C64) {
    let off = C64::new(0.0, PI / 8.0) / beta.conj();
    (beta + off, beta - off)
}

/// {±ξ₊₀, ±ξ₋₀} with ξ^A = ξ^B.
pub fn cat_points(beta: C64) -> Result<PointSet> {
    if beta.norm() == 0.0 {
        return invalid("cat points need β ≠ 0");
    }
    let (p, m) = cat_xi0(beta);
    PointSet::diagonal_one_mode(&[p, -p, m, -m])
}

/// Two columns of `per_column` points at ±β, spaced iπ/(4β*) along the
/// fringe direction; two per column gives the {±ξ₊₀, ±ξ₋₀} set.
pub fn cat_column_points(beta: C64, per_column: usize) -> Result<PointSet> {
    if beta.norm() == 0.0 || per_column == 0 {
        return invalid("cat columns need β ≠ 0 and at least one point per column");
    }
    let step = C64::new(0.0, PI / 8.0) / beta.conj();
    let mut pts = Vec::with_capacity(2 * per_column);
    for sign in [1.0, -1.0] {
        for k in 0..per_column {
            pts.push(beta * sign + step * (2.0 * k as f64 + 1.0 - per_column as f64));
        }
    }
    PointSet::diagonal_one_mode(&pts)
}

/// side × side square lattice with the given spacing, centred on the origin
/// and paired as ξ^A = ξ^B when `paired`.
pub fn lattice_points(side: usize, spacing: f64, paired: bool) -> Result<PointSet> {
    if side < 2 || !(spacing > 0.0 && spacing.is_finite()) {
        return invalid("a lattice needs side ≥ 2 and a positive spacing");
    }
    let c = (side as f64 - 1.0) / 2.0;
    let pts: Vec<Vec<C64>> = (0..side * side)
        .map(|i| vec![C64::new((i / side) as f64 - c, (i % side) as f64 - c) * spacing])
        .collect();
    if paired {
        PointSet::diagonal(pts)
    } else {
        PointSet::single(pts)
    }
}

/// The frame carrying |θ = π/4⟩ to the photon-subtracted squeezed vacuum
/// with squeezing r: a collective squeezer on a₊ with map S(−r).
pub fn ps_tmsv_frame(r: f64) -> GaussianFrame {
    GaussianFrame::collective(SymplecticMap::squeeze(-r), vec![C64::new(0.0, 0.0)])
}

/// Fock points at θ = π/4 carried to the photon-subtracted state:
/// Re ξ e^{r} + i Im ξ e^{−r} for each point, with unit phases.
pub fn ps_tmsv_points(r: f64) -> Result<PointSet> {
    Ok(transform_point_set(&fock_points(FRAC_PI_4), &ps_tmsv_frame(r))?.0)
}

/// Re ξ e^{−r} + i Im ξ e^{r}: the same construction with the squeezing
/// direction reversed, matching the state at −r.
pub fn ps_tmsv_points_reversed(r: f64) -> Result<PointSet> {
    ps_tmsv_points(-r)
}

/// Points on a ring of radius 1/√(⟨n⟩ + 1) plus the origin. With `paired`
/// the state's modes are split in half and ξ^A = ξ^B.
pub fn generic_points(state: &State, n: usize, paired: bool) -> Result<PointSet> {
    if n < 2 {
        return invalid("a witness needs at least two points");
    }
    let mm = state.num_modes();
    if paired && !mm.is_multiple_of(2) {
        return invalid("a paired point set needs an even number of modes");
    }
    let per = if paired { mm / 2 } else { mm };
    let nbar: f64 = state.mean_photons().iter().sum();
    let radius = 1.0 / (nbar + 1.0).sqrt();
    let scale = radius / (per as f64).sqrt();
    let mut pts = vec![vec![C64::new(0.0, 0.0); per]];
    for k in 0..n - 1 {
        let phi = 2.0 * PI * k as f64 / (n - 1) as f64;
        pts.push(vec![C64::from_polar(scale, phi); per]);
    }
    if paired {
        PointSet::diagonal(pts)
    } else {
        PointSet::single(pts)
    }
}

/// Closed-form points for the example families at N = 4, cat columns for
/// larger even N, otherwise the ring.
pub fn heuristic_init(spec: &StateSpec, state: &State, n: usize) -> Result<PointSet> {
    match (spec, n) {
        (StateSpec::FockBell { theta }, 4) => Ok(fock_points(*theta)),
        (StateSpec::Cat2 { beta }, 4) if beta.norm() > 0.0 => cat_points(*beta),
        (StateSpec::Cat2 { beta }, n) if beta.norm() > 0.0 && n % 2 == 0 => {
            cat_column_points(*beta, n / 2)
        }
        (StateSpec::PsTmsv { r }, 4) => ps_tmsv_points(*r),
        _ => generic_points(state, n, spec.num_modes() == 2),
    }
}

/// Single-mode state with the same Wigner negativity volume as the
/// two-mode family member after loss η on both modes, plus grid settings.
///
/// The families are Gaussian-unitarily equivalent to a one-mode state times
/// a Gaussian state on the other mode, and equal loss commutes with the
/// passive part: |θ⟩ ~ |1⟩|0⟩, |r⟩ ~ S(−r)|1⟩ ⊗ S(r)|0⟩ and
/// Cat₂(β) ~ Cat₁(√2β)|0⟩.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub state: State,
    pub grid: GridConfig,
}

pub fn single_mode_reduction(
    spec: &StateSpec,
    eta: f64,
    cutoff: Option<usize>,
) -> Result<Option<Reduction>> {
    let loss = LossChannel::uniform(eta, 1)?;
    let (state, grid) = match spec {
        StateSpec::FockBell { .. } => {
            let s = make_state(&StateSpec::Fock { n: vec![1] }, cutoff)?;
            (apply_loss(&s, &loss)?, GridConfig::default())
        }
        StateSpec::PsTmsv { .. } if eta == 0.0 => (
            make_state(&StateSpec::Fock { n: vec![1] }, cutoff)?,
            GridConfig::default(),
        ),
        StateSpec::PsTmsv { r } => {
            let one = make_state(&StateSpec::Fock { n: vec![1] }, Some(2))?;
            let d = cutoff.unwrap_or(squeezed_cutoff(*r));
            let s = apply_gaussian(&one, &SymplecticMap::squeeze(-r), Some(vec![d]))?;
            let e = (2.0 * r.abs()).exp();
            let grid = GridConfig {
                half_widths: Some(vec![3.0 * e.sqrt() + 1.0, 3.0 * e.sqrt() + 1.0]),
                points: Some(vec![161 + 40 * (e.sqrt().ceil() as usize - 1); 2]),
                refine: None,
            };
            (apply_loss(&s, &loss)?, grid)
        }
        StateSpec::Cat2 { beta } => {
            let b1 = beta * 2f64.sqrt();
            let s = make_state(&StateSpec::Cat1 { beta: b1 }, cutoff)?;
            (apply_loss(&s, &loss)?, cat_grid(b1))
        }
        _ => return Ok(None),
    };
    Ok(Some(Reduction { state, grid }))
}

fn squeezed_cutoff(r: f64) -> usize {
    (40.0 + 60.0 * r.abs() * r.abs().max(1.0)).ceil() as usize
}

/// Grid resolving the interference fringes of a one-mode cat (period
/// π/(2|β|) along the axis orthogonal to β, here assumed real-dominated).
fn cat_grid(beta: C64) -> GridConfig {
    let b = beta.norm();
    let nbar = b * b;
    let lx = 3.0 + 2.0 * nbar.sqrt();
    let lp = 3.0 + 2.0 * beta.im.abs();
    let np = ((64.0 * lp * b / PI).ceil() as usize).max(161);
    let (ax, ap) = if beta.re.abs() >= beta.im.abs() {
        (lx, lp)
    } else {
        (lp, lx)
    };
    let (nx, npp) = if beta.re.abs() >= beta.im.abs() {
        (161, np)
    } else {
        (np, 161)
    };
    GridConfig {
        half_widths: Some(vec![ax, ap]),
        points: Some(vec![nx, npp]),
        refine: None,
    }
}

/// max[0, −(π/2) min W] of Cat₁(√2β) after loss η.
pub fn cat_ntr_lower_bound(beta: C64, eta: f64) -> Result<f64> {
    let s = make_state(
        &StateSpec::Cat1 {
            beta: beta * 2f64.sqrt(),
        },
        None,
    )?;
    ntr_lower_bound(&apply_loss(&s, &LossChannel::uniform(eta, 1)?)?)
}
