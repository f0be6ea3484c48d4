//! Characteristic functions, displaced-parity Wigner functions and the
//! Wigner negativity volume.
//!
//! Wigner functions use W(α) = (2/π)^M tr[ρ D(α)ΠD(α)†] = (2/π)^M tr[ρ D(2α)Π],
//! normalised so that ∫W d^{2M}α = 1 with d²α = d(Re α) d(Im α).

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::{displacement, partial_trace, DensityOperator, State, C64};
use crate::gaussian::apply_gaussian;
use crate::output::{Cell, Csv};
use crate::symplectic::SymplecticMap;

pub use crate::fock::partial_transpose;

/// tr[ρ D(ξ⃗)].
pub fn char_fn(state: &State, xi: &[C64]) -> Result<C64> {
    let ops: Vec<DMatrix<C64>> = state
        .space()
        .cutoffs()
        .iter()
        .zip(xi)
        .map(|(&d, &z)| displacement(d, z))
        .collect();
    if xi.len() != state.num_modes() {
        return Err(Error::Dimension(format!(
            "{} arguments for {} modes",
            xi.len(),
            state.num_modes()
        )));
    }
    state.expect_product(&ops)
}

fn displaced_parity(d: usize, alpha: C64) -> DMatrix<C64> {
    let mut m = displacement(d, alpha * 2.0);
    for n in (1..d).step_by(2) {
        m.column_mut(n).neg_mut();
    }
    m
}

/// W(α⃗) by displaced parity. Fails if the imaginary residue exceeds 1e−8.
pub fn wigner(state: &State, alpha: &[C64]) -> Result<f64> {
    if alpha.len() != state.num_modes() {
        return Err(Error::Dimension(format!(
            "{} coordinates for {} modes",
            alpha.len(),
            state.num_modes()
        )));
    }
    let ops: Vec<DMatrix<C64>> = state
        .space()
        .cutoffs()
        .iter()
        .zip(alpha)
        .map(|(&d, &a)| displaced_parity(d, a))
        .collect();
    let v = state.expect_product(&ops)? * (2.0 / PI).powi(alpha.len() as i32);
    if v.im.abs() > 1e-8 * v.re.abs().max(1.0) {
        return Err(Error::Truncation(format!(
            "Wigner value has imaginary residue {:.3e}",
            v.im
        )));
    }
    Ok(v.re)
}

/// Reduced state of the collective modes a₊ = (a_A + Λa_B)/√2, with A the
/// first half of the modes and B the second.
pub fn collective_marginal(state: &State, pairing: &SymplecticMap) -> Result<DensityOperator> {
    let mm = state.num_modes();
    let m = pairing.modes();
    if mm != 2 * m {
        return Err(Error::Dimension(format!(
            "pairing on {m} modes for a {mm}-mode state"
        )));
    }
    let rotated = apply_gaussian(state, &SymplecticMap::collective(pairing), None)?;
    let out: Vec<usize> = (m..2 * m).collect();
    partial_trace(&rotated, &out)
}

/// Wigner function of the collective marginal at α₊.
pub fn reduced_collective_wigner(
    state: &State,
    pairing: &SymplecticMap,
    alpha_plus: &[C64],
) -> Result<f64> {
    let marginal = collective_marginal(state, pairing)?;
    wigner(&State::Mixed(marginal), alpha_plus)
}

/// Quadrature settings for [`negativity_volume`] and [`wigner_grid`].
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Half-width per axis (x₀, p₀, x₁, p₁, …); default 3 + 2√⟨n⟩ of that mode.
    pub half_widths: Option<Vec<f64>>,
    /// Points per axis; rounded up to 1 mod 4 so the half grid is also Simpson-compatible.
    pub points: Option<Vec<usize>>,
    /// Subdivisions of each sign-changing Simpson panel (single-mode only); default 8.
    pub refine: Option<usize>,
}

pub const DEFAULT_GRID_POINTS: usize = 161;
pub const DEFAULT_REFINE: usize = 8;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct NegativityVolume {
    pub value: f64,
    /// Richardson estimate |S_n − S_{n/2}|/15.
    pub error_estimate: f64,
    pub half_widths: Vec<f64>,
    pub points: Vec<usize>,
}

fn round_up_simpson(n: usize) -> usize {
    let n = n.max(5);
    n + (4 - (n - 1) % 4) % 4
}

fn resolve_grid(state: &State, cfg: &GridConfig) -> Result<(Vec<f64>, Vec<usize>)> {
    let axes = 2 * state.num_modes();
    let widths = match &cfg.half_widths {
        Some(w) => w.clone(),
        None => state
            .mean_photons()
            .iter()
            .flat_map(|n| [3.0 + 2.0 * n.max(0.0).sqrt(); 2])
            .collect(),
    };
    let points = match &cfg.points {
        Some(p) => p.iter().map(|&n| round_up_simpson(n)).collect(),
        None => vec![DEFAULT_GRID_POINTS; axes],
    };
    if widths.len() != axes || points.len() != axes {
        return invalid(format!("grid needs {axes} axes"));
    }
    if widths.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return invalid("grid half-widths must be positive");
    }
    Ok((widths, points))
}

/// Sum in a fixed binary-tree order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n if n <= 8 => v.iter().sum(),
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let w = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect()
}

fn axis(l: f64, n: usize) -> Vec<f64> {
    let h = 2.0 * l / (n - 1) as f64;
    (0..n).map(|i| -l + h * i as f64).collect()
}

/// Wigner evaluator specialised to a fixed state.
struct WignerEval<'a> {
    state: &'a State,
}

impl WignerEval<'_> {
    fn at(&self, coords: &[f64]) -> f64 {
        let alpha: Vec<C64> = coords.chunks(2).map(|c| C64::new(c[0], c[1])).collect();
        wigner(self.state, &alpha).unwrap_or(f64::NAN)
    }
}

/// Single-mode Simpson integral of max(−W, 0), with each 3×3 panel whose
/// samples change sign re-integrated on a (2k+1)² Simpson sub-grid.
fn nv_single(state: &State, l: (f64, f64), n: (usize, usize), refine: usize) -> f64 {
    let ev = WignerEval { state };
    let (xs, ps) = (axis(l.0, n.0), axis(l.1, n.1));
    let grid: Vec<Vec<f64>> = xs
        .par_iter()
        .map(|&x| ps.iter().map(|&p| ev.at(&[x, p])).collect())
        .collect();
    let (hx, hp) = (xs[1] - xs[0], ps[1] - ps[0]);
    let base = [1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0];
    let panels: Vec<(usize, usize)> = (0..(n.0 - 1) / 2)
        .flat_map(|i| (0..(n.1 - 1) / 2).map(move |j| (2 * i, 2 * j)))
        .collect();
    let contributions: Vec<f64> = panels
        .par_iter()
        .map(|&(i, j)| {
            let vals: Vec<f64> = (0..3)
                .flat_map(|a| (0..3).map(move |b| (a, b)))
                .map(|(a, b)| grid[i + a][j + b])
                .collect();
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if lo < 0.0 && hi >= 0.0 && refine > 1 {
                let m = 2 * refine + 1;
                let sx = axis_between(xs[i], xs[i + 2], m);
                let sp = axis_between(ps[j], ps[j + 2], m);
                let wx = simpson_weights(m, sx[1] - sx[0]);
                let wp = simpson_weights(m, sp[1] - sp[0]);
                let mut acc = Vec::with_capacity(m * m);
                for (a, &x) in sx.iter().enumerate() {
                    for (b, &p) in sp.iter().enumerate() {
                        acc.push(wx[a] * wp[b] * (-ev.at(&[x, p])).max(0.0));
                    }
                }
                pairwise_sum(&acc)
            } else {
                let mut acc = [0.0; 9];
                for a in 0..3 {
                    for b in 0..3 {
                        acc[3 * a + b] =
                            base[a] * hx * base[b] * hp * (-grid[i + a][j + b]).max(0.0);
                    }
                }
                acc.iter().sum()
            }
        })
        .collect();
    pairwise_sum(&contributions)
}

fn axis_between(a: f64, b: f64, m: usize) -> Vec<f64> {
    (0..m)
        .map(|k| a + (b - a) * k as f64 / (m - 1) as f64)
        .collect()
}

/// Plain tensor Simpson integral of max(−W, 0) over 2M axes.
fn nv_tensor(state: &State, widths: &[f64], points: &[usize]) -> f64 {
    let ev = WignerEval { state };
    let axes: Vec<Vec<f64>> = widths
        .iter()
        .zip(points)
        .map(|(&l, &n)| axis(l, n))
        .collect();
    let weights: Vec<Vec<f64>> = axes
        .iter()
        .map(|a| simpson_weights(a.len(), a[1] - a[0]))
        .collect();
    let total: usize = points.iter().product();
    let terms: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut coords = vec![0.0; axes.len()];
            let mut w = 1.0;
            for k in (0..axes.len()).rev() {
                let i = idx % points[k];
                idx /= points[k];
                coords[k] = axes[k][i];
                w *= weights[k][i];
            }
            w * (-ev.at(&coords)).max(0.0)
        })
        .collect();
    pairwise_sum(&terms)
}

/// 𝒩_V(ρ) = ½∫(|W| − W) = ∫max(−W, 0) on a Simpson grid, with a Richardson
/// error estimate from the grid with every other point.
///
/// Multimode states use a plain tensor grid, which is slow; register a
/// single-mode reduction where one exists.
pub fn negativity_volume(state: &State, cfg: &GridConfig) -> Result<NegativityVolume> {
    let (widths, points) = resolve_grid(state, cfg)?;
    let refine = cfg.refine.unwrap_or(DEFAULT_REFINE);
    let half: Vec<usize> = points.iter().map(|n| n.div_ceil(2)).collect();
    let (full, coarse) = if state.num_modes() == 1 {
        let l = (widths[0], widths[1]);
        (
            nv_single(state, l, (points[0], points[1]), refine),
            nv_single(state, l, (half[0], half[1]), refine),
        )
    } else {
        (
            nv_tensor(state, &widths, &points),
            nv_tensor(state, &widths, &half),
        )
    };
    if !full.is_finite() {
        return Err(Error::Truncation(
            "Wigner evaluation failed on the grid".into(),
        ));
    }
    Ok(NegativityVolume {
        value: full,
        error_estimate: (full - coarse).abs() / 15.0,
        half_widths: widths,
        points,
    })
}

/// Wigner values on a full grid, for export.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WignerGrid {
    pub half_widths: Vec<f64>,
    pub points: Vec<usize>,
    /// Row-major over axes (x₀, p₀, x₁, p₁, …), last axis fastest.
    pub values: Vec<f64>,
}

impl WignerGrid {
    pub fn axis_names(&self) -> Vec<String> {
        (0..self.points.len() / 2)
            .flat_map(|m| [format!("x{m}"), format!("p{m}")])
            .collect()
    }

    pub fn coordinates(&self, mut idx: usize) -> Vec<f64> {
        let mut c = vec![0.0; self.points.len()];
        for k in (0..self.points.len()).rev() {
            let i = idx % self.points[k];
            idx /= self.points[k];
            let l = self.half_widths[k];
            c[k] = -l + 2.0 * l * i as f64 / (self.points[k] - 1) as f64;
        }
        c
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// One row per grid point: axis coordinates then W.
    pub fn to_csv(&self) -> String {
        let mut head = self.axis_names();
        head.push("W".into());
        let mut t = Csv::new(&head);
        for (i, &w) in self.values.iter().enumerate() {
            let mut row: Vec<Cell> = self.coordinates(i).into_iter().map(Cell::from).collect();
            row.push(w.into());
            t.push(row);
        }
        t.render()
    }
}

pub fn wigner_grid(state: &State, cfg: &GridConfig) -> Result<WignerGrid> {
    let (widths, points) = resolve_grid(state, cfg)?;
    let mut g = WignerGrid {
        half_widths: widths,
        points,
        values: Vec::new(),
    };
    let total: usize = g.points.iter().product();
    let ev = WignerEval { state };
    g.values = (0..total)
        .into_par_iter()
        .map(|i| ev.at(&g.coordinates(i)))
        .collect();
    if g.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Truncation(
            "Wigner evaluation failed on the grid".into(),
        ));
    }
    Ok(g)
}

/// Minimum of a single-mode Wigner function: grid search then a shrinking
/// compass search from the best grid point. Returns (min W, argmin).
pub fn wigner_minimum(state: &State, half_width: f64, n: usize) -> Result<(f64, C64)> {
    if state.num_modes() != 1 {
        return invalid("wigner_minimum is single-mode");
    }
    let ev = WignerEval { state };
    let xs = axis(half_width, n.max(3));
    let best =
        xs.par_iter()
            .map(|&x| {
                xs.iter().map(|&p| (ev.at(&[x, p]), x, p)).fold(
                    (f64::INFINITY, 0.0, 0.0),
                    |a, b| if b.0 < a.0 { b } else { a },
                )
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(
                (f64::INFINITY, 0.0, 0.0),
                |a, b| if b.0 < a.0 { b } else { a },
            );
    let (mut f, mut x, mut p) = best;
    let mut step = xs[1] - xs[0];
    while step > 1e-10 {
        let mut moved = false;
        for (dx, dp) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
            let v = ev.at(&[x + dx, p + dp]);
            if v < f {
                f = v;
                x += dx;
                p += dp;
                moved = true;
                break;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    if !f.is_finite() {
        return Err(Error::Truncation("Wigner evaluation failed".into()));
    }
    Ok((f, C64::new(x, p)))
}

/// max[0, −(π/2) min_α W] of a single-mode state: a lower bound on its
/// trace-distance Wigner negativity.
pub fn ntr_lower_bound(state: &State) -> Result<f64> {
    let l = 3.0 + 2.0 * state.mean_photons()[0].sqrt();
    let n = 201 + 40 * state.mean_photons()[0].sqrt().ceil() as usize;
    let (w, _) = wigner_minimum(state, l, n)?;
    Ok((-(PI / 2.0) * w).max(0.0))
}
