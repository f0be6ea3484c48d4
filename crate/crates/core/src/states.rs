//! Constructors for the example states and a few standard ones.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::{DensityOperator, FockSpace, PureState, State, C64, ZERO};

/// Smallest per-mode cutoff used by automatic selection.
pub const MIN_CUTOFF: usize = 12;
/// Discarded population allowed by automatic cutoff selection.
pub const AUTO_TAIL: f64 = 1e-15;
/// Automatic-cutoff tail for mixed states, whose cost grows as dim².
pub const MIXED_AUTO_TAIL: f64 = 1e-10;
/// Discarded population beyond which an explicit cutoff is rejected.
pub const EXPLICIT_TAIL: f64 = 1e-8;
const MAX_CUTOFF: usize = 400;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateSpec {
    Vacuum {
        modes: usize,
    },
    Fock {
        n: Vec<usize>,
    },
    Coherent {
        alpha: Vec<C64>,
    },
    Thermal {
        nbar: Vec<f64>,
    },
    /// cos θ|1,0⟩ + sin θ|0,1⟩
    FockBell {
        theta: f64,
    },
    /// ∝ Σ tanhⁿ r |n,n⟩
    Tmsv {
        r: f64,
    },
    /// ∝ (a₁ + a₂)|TMSV(r)⟩
    PsTmsv {
        r: f64,
    },
    /// ∝ |β,β⟩ + |−β,−β⟩
    Cat2 {
        beta: C64,
    },
    /// ∝ |β⟩ + |−β⟩
    Cat1 {
        beta: C64,
    },
}

impl StateSpec {
    pub fn num_modes(&self) -> usize {
        match self {
            StateSpec::Vacuum { modes } => *modes,
            StateSpec::Fock { n } => n.len(),
            StateSpec::Coherent { alpha } => alpha.len(),
            StateSpec::Thermal { nbar } => nbar.len(),
            StateSpec::FockBell { .. }
            | StateSpec::Tmsv { .. }
            | StateSpec::PsTmsv { .. }
            | StateSpec::Cat2 { .. } => 2,
            StateSpec::Cat1 { .. } => 1,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            StateSpec::Vacuum { .. } => "vacuum",
            StateSpec::Fock { .. } => "fock",
            StateSpec::Coherent { .. } => "coherent",
            StateSpec::Thermal { .. } => "thermal",
            StateSpec::FockBell { .. } => "fock-bell",
            StateSpec::Tmsv { .. } => "tmsv",
            StateSpec::PsTmsv { .. } => "ps-tmsv",
            StateSpec::Cat2 { .. } => "cat2",
            StateSpec::Cat1 { .. } => "cat1",
        }
    }
}

/// e^{−|β|²/2} βⁿ/√n! for n < d.
pub fn coherent_amplitudes(beta: C64, d: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(d);
    let mut c = C64::new((-0.5 * beta.norm_sqr()).exp(), 0.0);
    for n in 0..d {
        out.push(c);
        c = c * beta / ((n + 1) as f64).sqrt();
    }
    out
}

/// Σ_{n≥d} e^{−|β|²}|β|^{2n}/n!, or only even n with `even_only`.
fn coherent_tail(beta: C64, d: usize, even_only: bool) -> f64 {
    let x = beta.norm_sqr();
    if x == 0.0 {
        return if d == 0 { 1.0 } else { 0.0 };
    }
    let lf: f64 = (1..=d).map(|k| (k as f64).ln()).sum();
    let mut term = (-x + d as f64 * x.ln() - lf).exp();
    let mut sum = 0.0;
    let mut n = d;
    loop {
        if !even_only || n.is_multiple_of(2) {
            sum += term;
        }
        n += 1;
        term *= x / n as f64;
        if n > d && (n as f64) > x && term < 1e-30 * sum.max(1e-300) {
            break;
        }
        if term == 0.0 {
            break;
        }
    }
    sum
}

/// Amplitudes on a uniform cutoff plus the population they leave out.
type Builder = dyn Fn(usize) -> Result<(FockSpace, Vec<C64>, f64)>;

fn kron_vecs(parts: &[Vec<C64>]) -> Vec<C64> {
    parts.iter().fold(vec![C64::new(1.0, 0.0)], |acc, p| {
        acc.iter()
            .flat_map(|a| p.iter().map(move |b| a * b))
            .collect()
    })
}

fn pure_builder(spec: &StateSpec) -> Result<Box<Builder>> {
    Ok(match spec.clone() {
        StateSpec::Vacuum { modes } => {
            if modes == 0 {
                return invalid("vacuum needs at least one mode");
            }
            Box::new(move |d| {
                let space = FockSpace::uniform(modes, d)?;
                let mut v = vec![ZERO; space.dim()];
                v[0] = C64::new(1.0, 0.0);
                Ok((space, v, 0.0))
            })
        }
        StateSpec::Fock { n } => {
            if n.is_empty() {
                return invalid("Fock state needs at least one mode");
            }
            Box::new(move |d| {
                let top = n.iter().copied().max().unwrap_or(0);
                if top + 1 >= d {
                    return Ok((FockSpace::uniform(n.len(), d)?, Vec::new(), 1.0));
                }
                let space = FockSpace::uniform(n.len(), d)?;
                let mut v = vec![ZERO; space.dim()];
                v[space.index(&n)] = C64::new(1.0, 0.0);
                Ok((space, v, 0.0))
            })
        }
        StateSpec::Coherent { alpha } => {
            if alpha.is_empty() {
                return invalid("coherent state needs at least one mode");
            }
            Box::new(move |d| {
                let parts: Vec<Vec<C64>> =
                    alpha.iter().map(|&a| coherent_amplitudes(a, d)).collect();
                let log_kept: f64 = alpha
                    .iter()
                    .map(|&a| (-coherent_tail(a, d, false)).ln_1p())
                    .sum();
                Ok((
                    FockSpace::uniform(alpha.len(), d)?,
                    kron_vecs(&parts),
                    -log_kept.exp_m1(),
                ))
            })
        }
        StateSpec::FockBell { theta } => {
            if !theta.is_finite() {
                return invalid("theta must be finite");
            }
            Box::new(move |d| {
                let space = FockSpace::uniform(2, d)?;
                let mut v = vec![ZERO; space.dim()];
                v[space.index(&[1, 0])] = C64::new(theta.cos(), 0.0);
                v[space.index(&[0, 1])] = C64::new(theta.sin(), 0.0);
                Ok((space, v, 0.0))
            })
        }
        StateSpec::Tmsv { r } => {
            let t = r.tanh();
            if !r.is_finite() || t.abs() >= 1.0 {
                return invalid("squeezing must be finite and representable");
            }
            Box::new(move |d| {
                let space = FockSpace::uniform(2, d)?;
                let mut v = vec![ZERO; space.dim()];
                let norm = (1.0 - t * t).sqrt();
                let mut tp = 1.0;
                for n in 0..d {
                    v[space.index(&[n, n])] = C64::new(tp * norm, 0.0);
                    tp *= t;
                }
                Ok((space, v, (t * t).powi(d as i32)))
            })
        }
        StateSpec::PsTmsv { r } => {
            if !r.is_finite() {
                return invalid("squeezing must be finite");
            }
            let t = r.tanh();
            if t.abs() >= 1.0 {
                return invalid("squeezing too large to represent");
            }
            Box::new(move |d| {
                // Σ_{n≥1} t^{n−1}√n (|n−1,n⟩ + |n,n−1⟩), norm² = 2/(1−t²)²
                let space = FockSpace::uniform(2, d)?;
                let mut v = vec![ZERO; space.dim()];
                let norm2 = 2.0 / (1.0 - t * t).powi(2);
                let mut tp = 1.0;
                for n in 1..d {
                    let amp = tp * (n as f64).sqrt();
                    v[space.index(&[n - 1, n])] = C64::new(amp, 0.0);
                    v[space.index(&[n, n - 1])] = C64::new(amp, 0.0);
                    tp *= t;
                }
                // levels n ≥ d, each with weight 2 t^{2(n−1)} n
                let mut tail = 0.0;
                let mut n = d.max(1);
                let mut w = 2.0 * (t * t).powi(n as i32 - 1) * n as f64;
                while w > 1e-30 * tail || (n as f64) * (1.0 - t * t) < 1.0 {
                    tail += w;
                    n += 1;
                    w = 2.0 * (t * t).powi(n as i32 - 1) * n as f64;
                    if w == 0.0 {
                        break;
                    }
                }
                Ok((space, v, tail / norm2))
            })
        }
        StateSpec::Cat2 { beta } => Box::new(move |d| {
            let c = coherent_amplitudes(beta, d);
            let norm2 = 2.0 * (1.0 + (-4.0 * beta.norm_sqr()).exp());
            let space = FockSpace::uniform(2, d)?;
            let mut v = vec![ZERO; space.dim()];
            for m in 0..d {
                for n in 0..d {
                    if (m + n) % 2 == 0 {
                        v[m * d + n] = c[m] * c[n] * 2.0;
                    }
                }
            }
            // 4 Σ_{m+n even, max(m,n) ≥ d} |c_m c_n|² ≤ 4(2T − T²) with T the coherent tail
            let tail = coherent_tail(beta, d, false);
            Ok((space, v, (4.0 * tail * (2.0 - tail) / norm2).min(1.0)))
        }),
        StateSpec::Cat1 { beta } => Box::new(move |d| {
            let c = coherent_amplitudes(beta, d);
            let norm2 = 2.0 * (1.0 + (-2.0 * beta.norm_sqr()).exp());
            let v: Vec<C64> = c
                .iter()
                .enumerate()
                .map(|(n, z)| if n % 2 == 0 { z * 2.0 } else { ZERO })
                .collect();
            let tail = 4.0 * coherent_tail(beta, d, true) / norm2;
            Ok((FockSpace::uniform(1, d)?, v, tail.min(1.0)))
        }),
        StateSpec::Thermal { .. } => unreachable!("thermal states are mixed"),
    })
}

fn thermal(nbar: &[f64], cutoff: Option<usize>) -> Result<State> {
    if nbar.is_empty() || nbar.iter().any(|&n| !(n >= 0.0 && n.is_finite())) {
        return invalid("thermal occupations must be finite and non-negative");
    }
    let discarded = |d: usize| -> f64 {
        -nbar
            .iter()
            .map(|&n| (-(n / (1.0 + n)).powi(d as i32)).ln_1p())
            .sum::<f64>()
            .exp_m1()
    };
    let d = pick_cutoff(cutoff, MIXED_AUTO_TAIL, discarded)?;
    let space = FockSpace::uniform(nbar.len(), d)?;
    let dim = space.dim();
    let mut m = DMatrix::from_element(dim, dim, ZERO);
    for i in 0..dim {
        let p: f64 = space
            .levels(i)
            .iter()
            .zip(nbar)
            .map(|(&k, &n)| (n / (1.0 + n)).powi(k as i32) / (1.0 + n))
            .product();
        m[(i, i)] = C64::new(p, 0.0);
    }
    Ok(State::Mixed(DensityOperator::normalized(space, m)?))
}

fn pick_cutoff(
    cutoff: Option<usize>,
    auto_tail: f64,
    discarded: impl Fn(usize) -> f64,
) -> Result<usize> {
    match cutoff {
        Some(d) => {
            let lost = discarded(d);
            if lost > EXPLICIT_TAIL {
                return Err(Error::Truncation(format!(
                    "cutoff {d} discards {lost:.3e} of the population"
                )));
            }
            Ok(d)
        }
        None => {
            let mut d = MIN_CUTOFF;
            while discarded(d) >= auto_tail {
                d += 1;
                if d > MAX_CUTOFF {
                    return Err(Error::Truncation(format!(
                        "no cutoff up to {MAX_CUTOFF} reaches tail {auto_tail:e}"
                    )));
                }
            }
            Ok(d)
        }
    }
}

/// Build a normalised state. With `cutoff = None` the per-mode cutoff is the
/// smallest value (at least [`MIN_CUTOFF`]) discarding less than
/// [`AUTO_TAIL`] of the population; an explicit cutoff is rejected if it
/// discards more than [`EXPLICIT_TAIL`].
pub fn make_state(spec: &StateSpec, cutoff: Option<usize>) -> Result<State> {
    if let StateSpec::Thermal { nbar } = spec {
        return thermal(nbar, cutoff);
    }
    if cutoff == Some(0) {
        return invalid("cutoff must be positive");
    }
    let build = pure_builder(spec)?;
    let d = pick_cutoff(cutoff, AUTO_TAIL, |d| build(d).map(|b| b.2).unwrap_or(1.0))?;
    let (space, v, _) = build(d)?;
    Ok(State::Pure(PureState::new(space, DVector::from_vec(v))?))
}
