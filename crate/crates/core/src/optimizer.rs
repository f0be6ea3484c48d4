//! Gradient descent on λ₋ over the A-side points, pairing held fixed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fock::{State, C64, ZERO};
use crate::output::Csv;
use crate::points::PointSet;
use crate::witness::{build_with, evaluate, min_eigenpair, CharFnEvaluator, WitnessResult};

/// Gap below which λ₋ is treated as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-10;
const MIN_STEP: f64 = 1e-14;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub gamma: f64,
    pub max_iters: usize,
    pub grad_norm_threshold: f64,
    /// Step shrink factor on rejection; 1 gives the plain fixed-γ update.
    pub backtracking: f64,
    pub restarts: usize,
    pub jitter: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            gamma: 0.05,
            max_iters: 2000,
            grad_norm_threshold: 1e-7,
            backtracking: 0.5,
            restarts: 8,
            jitter: 0.1,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return invalid("gamma must be positive");
        }
        if self.grad_norm_threshold.is_nan() || self.grad_norm_threshold <= 0.0 {
            return invalid("grad_norm_threshold must be positive");
        }
        if !(self.backtracking > 0.0 && self.backtracking <= 1.0) {
            return invalid("backtracking factor must lie in (0, 1]");
        }
        if self.restarts == 0 {
            return invalid("at least one restart is needed");
        }
        if self.jitter.is_nan() || self.jitter < 0.0 {
            return invalid("jitter must be non-negative");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub lambda_min: f64,
    pub grad_norm: f64,
    /// Step accepted to move to the next row; 0 on the final row.
    pub step: f64,
    pub degenerate: bool,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct OptimizerTrace {
    pub rows: Vec<TraceRow>,
    pub converged: bool,
    pub restart: usize,
}

impl OptimizerTrace {
    pub fn to_csv(&self) -> String {
        let mut t = Csv::new(&["iter", "lambda_min", "grad_norm", "step"]);
        for r in &self.rows {
            t.push(vec![
                r.iter.into(),
                r.lambda_min.into(),
                r.grad_norm.into(),
                r.step.into(),
            ]);
        }
        t.render()
    }
}

#[derive(Clone, Debug)]
pub struct Gradient {
    pub lambda_min: f64,
    /// ∂λ₋/∂ξ_k^{A*} per point and A mode.
    pub grad: Vec<Vec<C64>>,
    pub degenerate: bool,
}

impl Gradient {
    pub fn norm_sqr(&self) -> f64 {
        self.grad.iter().flatten().map(|z| z.norm_sqr()).sum()
    }
}

/// G(δ) = ∂f/∂δ^{A*} + Σ_b [−Q_ab ∂f/∂δ_b^B + P_ab ∂f/∂δ_b^{B*}], the total
/// derivative of f along ξ^{A*} when ξ^B = P†ξ^A − Qᵀξ^{A*}.
fn total_derivative(points: &PointSet, df: &[C64], dfc: &[C64]) -> Vec<C64> {
    let ma = points.modes_a();
    let Some(l) = points.pairing() else {
        return dfc.to_vec();
    };
    let (p, q) = (l.p(), l.q());
    (0..ma)
        .map(|a| {
            let mut g = dfc[a];
            for b in 0..l.modes() {
                g += -q[(a, b)] * df[ma + b] + p[(a, b)] * dfc[ma + b];
            }
            g
        })
        .collect()
}

pub fn grad_with(eval: &CharFnEvaluator, points: &PointSet) -> Result<Gradient> {
    let n = points.len();
    let c = build_with(eval, points)?;
    let (lambda_min, v, evals) = min_eigenpair(&c.entries);
    let degenerate = evals.len() > 1 && evals[1] - evals[0] < DEGENERACY_GAP;
    let joint: Vec<Vec<C64>> = (0..n).map(|k| points.joint(k)).collect();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|j| (j + 1..n).map(move |k| (j, k)))
        .collect();
    // G(δ_jk) and G(δ_kj) = G(−δ_jk) for every j < k.
    let gs: Vec<(Vec<C64>, Vec<C64>)> = pairs
        .par_iter()
        .map(|&(j, k)| {
            let delta: Vec<C64> = joint[j].iter().zip(&joint[k]).map(|(x, y)| x - y).collect();
            let (_, df, dfc) = eval.value_and_grad(&delta)?;
            let df_neg: Vec<C64> = dfc.iter().map(|z| -z.conj()).collect();
            let dfc_neg: Vec<C64> = df.iter().map(|z| -z.conj()).collect();
            Ok((
                total_derivative(points, &df, &dfc),
                total_derivative(points, &df_neg, &dfc_neg),
            ))
        })
        .collect::<Result<_>>()?;
    let ma = points.modes_a();
    let mut grad = vec![vec![ZERO; ma]; n];
    let inv = 1.0 / n as f64;
    for (&(j, k), (g_jk, g_kj)) in pairs.iter().zip(&gs) {
        // ∂C_jk/∂ξ_j* = G(δ_jk)/N, ∂C_jk/∂ξ_k* = −G(δ_jk)/N, same for (k, j).
        for a in 0..ma {
            let t_jk = v[j].conj() * g_jk[a] * v[k] * inv;
            let t_kj = v[k].conj() * g_kj[a] * v[j] * inv;
            grad[j][a] += t_jk - t_kj;
            grad[k][a] += t_kj - t_jk;
        }
    }
    Ok(Gradient {
        lambda_min,
        grad,
        degenerate,
    })
}

/// ∂λ₋/∂ξ_k^{A*} = v†(∂C/∂ξ_k^{A*})v for unit v.
pub fn grad_lambda_min(state: &State, points: &PointSet) -> Result<Gradient> {
    grad_with(&CharFnEvaluator::new(state), points)
}

fn lambda_of(eval: &CharFnEvaluator, points: &PointSet) -> Result<f64> {
    Ok(min_eigenpair(&build_with(eval, points)?.entries).0)
}

fn step_points(points: &PointSet, g: &Gradient, gamma: f64) -> Result<PointSet> {
    let a = points
        .a_points()
        .iter()
        .zip(&g.grad)
        .map(|(p, d)| p.iter().zip(d).map(|(x, y)| x - y * gamma).collect())
        .collect();
    points.with_a(a)
}

/// One descent run from `init`.
pub fn descend(
    eval: &CharFnEvaluator,
    init: &PointSet,
    cfg: &OptimizerConfig,
) -> Result<(PointSet, OptimizerTrace)> {
    let mut points = init.clone();
    let mut trace = OptimizerTrace::default();
    let mut gamma = cfg.gamma;
    let plain = cfg.backtracking >= 1.0;
    for iter in 0..=cfg.max_iters {
        let g = grad_with(eval, &points)?;
        let norm2 = g.norm_sqr();
        let mut row = TraceRow {
            iter,
            lambda_min: g.lambda_min,
            grad_norm: norm2.sqrt(),
            step: 0.0,
            degenerate: g.degenerate,
        };
        if norm2 < cfg.grad_norm_threshold {
            trace.converged = true;
            trace.rows.push(row);
            break;
        }
        if iter == cfg.max_iters {
            trace.rows.push(row);
            break;
        }
        if plain {
            points = step_points(&points, &g, gamma)?;
            row.step = gamma;
            trace.rows.push(row);
            continue;
        }
        let mut accepted = None;
        while gamma >= MIN_STEP {
            let cand = step_points(&points, &g, gamma)?;
            if lambda_of(eval, &cand)? < g.lambda_min {
                accepted = Some(cand);
                break;
            }
            gamma *= cfg.backtracking;
        }
        match accepted {
            Some(next) => {
                points = next;
                row.step = gamma;
                trace.rows.push(row);
                gamma /= cfg.backtracking.sqrt();
            }
            None => {
                trace.rows.push(row);
                break;
            }
        }
    }
    Ok((points, trace))
}

fn jittered(init: &PointSet, sigma: f64, seed: u64, restart: usize) -> Result<PointSet> {
    if restart == 0 || sigma == 0.0 {
        return Ok(init.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    let a = init
        .a_points()
        .iter()
        .map(|p| {
            p.iter()
                .map(|z| z + C64::new(normal.sample(&mut rng), normal.sample(&mut rng)))
                .collect()
        })
        .collect();
    init.with_a(a)
}

#[derive(Clone, Debug)]
pub struct Optimized {
    pub points: PointSet,
    pub result: WitnessResult,
    pub trace: OptimizerTrace,
}

/// Multi-restart descent; restart 0 starts at `init`, the others at jittered
/// copies. The lowest λ₋ wins, ties going to the lower restart index.
pub fn optimize(state: &State, init: &PointSet, cfg: &OptimizerConfig) -> Result<Optimized> {
    cfg.validate()?;
    let eval = CharFnEvaluator::new(state);
    let runs: Vec<(PointSet, OptimizerTrace)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let start = jittered(init, cfg.jitter, cfg.seed, r)?;
            let (p, mut t) = descend(&eval, &start, cfg)?;
            t.restart = r;
            Ok((p, t))
        })
        .collect::<Result<_>>()?;
    let mut best: Option<(f64, usize)> = None;
    for (i, (_, t)) in runs.iter().enumerate() {
        let l = t.rows.last().map_or(f64::INFINITY, |r| r.lambda_min);
        if best.is_none_or(|(b, _)| l < b) {
            best = Some((l, i));
        }
    }
    let (_, i) = best.expect("at least one restart");
    let (points, trace) = runs.into_iter().nth(i).expect("index in range");
    let result = evaluate(&build_with(&eval, &points)?)?;
    Ok(Optimized {
        points,
        result,
        trace,
    })
}
