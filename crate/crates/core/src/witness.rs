//! Bochner matrices C(ρ,Ξ) and C₂(ρ,Ξ), their minimum eigenvalue and the
//! certification rule with finite-precision entries.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::{displacement, displacement_block, hermitian_eigen, PureState, State, C64, ZERO};
use crate::points::PointSet;

/// Marginal population below which Fock levels are dropped before repeated
/// characteristic-function evaluation.
pub const COMPACT_THRESHOLD: f64 = 1e-24;
/// Eigenvalues of a mixed state with magnitude below this are dropped from
/// the ensemble used for evaluation.
pub const ENSEMBLE_CUTOFF: f64 = 1e-16;
/// ℰ_C above this counts as a detection when reading thresholds off sweeps;
/// smaller values are at the level of rounding in λ₋.
pub const DETECTION_THRESHOLD: f64 = 1e-12;
/// Hermiticity tolerance for exact-mode matrices.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WitnessKind {
    C,
    C2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixMode {
    Exact,
    Measured,
}

/// Quantities the certified value ℰ − δ bounds from below.
pub fn bounded_quantities(kind: WitnessKind) -> Vec<&'static str> {
    match kind {
        WitnessKind::C => vec!["N_V", "N_tr"],
        WitnessKind::C2 => vec!["N_V", "N_tr", "E_SEP", "E_PPT"],
    }
}

/// Repeated tr[ρ ⊗_m D(δ_m)] evaluations on one state.
#[derive(Clone, Debug)]
pub struct CharFnEvaluator {
    state: State,
    /// ρ = Σ w_i |ψ_i⟩⟨ψ_i|; a mixed state of rank r then costs r vector
    /// contractions instead of one over the full density matrix.
    ensemble: Vec<(f64, State)>,
}

impl CharFnEvaluator {
    pub fn new(state: &State) -> Self {
        let state = state.compact(COMPACT_THRESHOLD);
        let ensemble = match &state {
            State::Pure(_) => vec![(1.0, state.clone())],
            State::Mixed(rho) => {
                let eig = hermitian_eigen(rho.matrix());
                eig.eigenvalues
                    .iter()
                    .zip(eig.eigenvectors.column_iter())
                    .filter(|(w, _)| w.abs() > ENSEMBLE_CUTOFF)
                    .filter_map(|(&w, v)| {
                        let psi = PureState::new(rho.space().clone(), v.into_owned()).ok()?;
                        Some((w, State::Pure(psi)))
                    })
                    .collect()
            }
        };
        Self { state, ensemble }
    }

    fn expect(&self, ops: &[DMatrix<C64>]) -> Result<C64> {
        let mut acc = ZERO;
        for (w, psi) in &self.ensemble {
            acc += psi.expect_product(ops)? * *w;
        }
        Ok(acc)
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn num_modes(&self) -> usize {
        self.state.num_modes()
    }

    fn check(&self, delta: &[C64]) -> Result<()> {
        if delta.len() != self.num_modes() {
            return Err(Error::Dimension(format!(
                "{} displacement arguments for {} modes",
                delta.len(),
                self.num_modes()
            )));
        }
        Ok(())
    }

    pub fn value(&self, delta: &[C64]) -> Result<C64> {
        self.check(delta)?;
        let ops: Vec<_> = self
            .state
            .space()
            .cutoffs()
            .iter()
            .zip(delta)
            .map(|(&d, &z)| displacement(d, z))
            .collect();
        self.expect(&ops)
    }

    /// f(δ) together with ∂f/∂δ_c and ∂f/∂δ_c* for every mode c, from
    /// ∂D/∂δ = D(a† + δ*/2) and ∂D/∂δ* = −D(a + δ/2).
    pub fn value_and_grad(&self, delta: &[C64]) -> Result<(C64, Vec<C64>, Vec<C64>)> {
        self.check(delta)?;
        let cut = self.state.space().cutoffs().to_vec();
        let wide: Vec<DMatrix<C64>> = cut
            .iter()
            .zip(delta)
            .map(|(&d, &z)| displacement_block(d, d + 1, z))
            .collect();
        let base: Vec<DMatrix<C64>> = wide
            .iter()
            .zip(&cut)
            .map(|(w, &d)| w.columns(0, d).into_owned())
            .collect();
        let f = self.expect(&base)?;
        let mut df = Vec::with_capacity(cut.len());
        let mut df_conj = Vec::with_capacity(cut.len());
        for (c, &d) in cut.iter().enumerate() {
            // (D a†)_{mn} = √(n+1) D_{m,n+1},  (D a)_{mn} = √n D_{m,n−1}
            let d_adag =
                DMatrix::from_fn(d, d, |m, n| wide[c][(m, n + 1)] * ((n + 1) as f64).sqrt());
            let d_a = DMatrix::from_fn(d, d, |m, n| {
                if n == 0 {
                    ZERO
                } else {
                    base[c][(m, n - 1)] * (n as f64).sqrt()
                }
            });
            let mut ops = base.clone();
            ops[c] = d_adag;
            let up = self.expect(&ops)?;
            ops[c] = d_a;
            let down = self.expect(&ops)?;
            df.push(up + f * delta[c].conj() * 0.5);
            df_conj.push(-down - f * delta[c] * 0.5);
        }
        Ok((f, df, df_conj))
    }
}

#[derive(Clone, Debug)]
pub struct WitnessMatrix {
    pub kind: WitnessKind,
    pub mode: MatrixMode,
    pub entries: DMatrix<C64>,
    pub radii: DMatrix<f64>,
}

impl WitnessMatrix {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.entries - self.entries.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn to_record(&self) -> WitnessMatrixRecord {
        let n = self.n();
        WitnessMatrixRecord {
            n,
            kind: self.kind,
            mode: self.mode,
            entries: (0..n)
                .map(|j| {
                    (0..n)
                        .map(|k| [self.entries[(j, k)].re, self.entries[(j, k)].im])
                        .collect()
                })
                .collect(),
            radii: (0..n)
                .map(|j| (0..n).map(|k| self.radii[(j, k)]).collect())
                .collect(),
        }
    }
}

/// JSON form of a [`WitnessMatrix`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessMatrixRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub kind: WitnessKind,
    pub mode: MatrixMode,
    pub entries: Vec<Vec<[f64; 2]>>,
    pub radii: Vec<Vec<f64>>,
}

/// Entries (1/N) f(joint_j − joint_k) for j < k, conjugate below.
fn build(eval: &CharFnEvaluator, points: &PointSet, kind: WitnessKind) -> Result<WitnessMatrix> {
    let n = points.len();
    if n < 2 {
        return invalid("a witness needs at least two points");
    }
    let joint: Vec<Vec<C64>> = (0..n).map(|k| points.joint(k)).collect();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|j| (j + 1..n).map(move |k| (j, k)))
        .collect();
    let vals: Vec<C64> = pairs
        .par_iter()
        .map(|&(j, k)| {
            let delta: Vec<C64> = joint[j].iter().zip(&joint[k]).map(|(x, y)| x - y).collect();
            eval.value(&delta)
        })
        .collect::<Result<_>>()?;
    let inv = 1.0 / n as f64;
    let mut m = DMatrix::from_element(n, n, C64::new(inv, 0.0));
    for (&(j, k), v) in pairs.iter().zip(vals) {
        m[(j, k)] = v * inv;
        m[(k, j)] = v.conj() * inv;
    }
    Ok(WitnessMatrix {
        kind,
        mode: MatrixMode::Exact,
        entries: m,
        radii: DMatrix::zeros(n, n),
    })
}

/// [C]_{jk} = (1/N) tr[ρ D(ξ_j − ξ_k)] for a single-list Ξ.
pub fn build_c(state: &State, points: &PointSet) -> Result<WitnessMatrix> {
    if points.is_paired() {
        return invalid("C needs a single-list point set");
    }
    build(&CharFnEvaluator::new(state), points, WitnessKind::C)
}

/// [C₂]_{jk} = (1/N) tr[ρ D_A(ξ_j^A − ξ_k^A) D_B(ξ_j^B − ξ_k^B)], with the A
/// modes first in ρ.
pub fn build_c2(state: &State, points: &PointSet) -> Result<WitnessMatrix> {
    if !points.is_paired() {
        return invalid("C₂ needs a paired point set");
    }
    build(&CharFnEvaluator::new(state), points, WitnessKind::C2)
}

/// C or C₂ according to the point set, reusing a prepared evaluator.
pub fn build_with(eval: &CharFnEvaluator, points: &PointSet) -> Result<WitnessMatrix> {
    if points.total_modes() != eval.num_modes() {
        return Err(Error::Dimension(format!(
            "point set spans {} modes, state has {}",
            points.total_modes(),
            eval.num_modes()
        )));
    }
    let kind = if points.is_paired() {
        WitnessKind::C2
    } else {
        WitnessKind::C
    };
    build(eval, points, kind)
}

pub fn build_witness(state: &State, points: &PointSet) -> Result<WitnessMatrix> {
    build_with(&CharFnEvaluator::new(state), points)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessResult {
    pub lambda_min: f64,
    pub value: f64,
    pub delta: f64,
    pub certified: bool,
    pub kind: WitnessKind,
    pub mode: MatrixMode,
    /// value − δ, a lower bound on every quantity in `lower_bound_of`.
    pub lower_bound: f64,
    pub lower_bound_of: Vec<String>,
    /// Gap between the two smallest eigenvalues.
    pub spectral_gap: f64,
    #[serde(skip)]
    pub eigenvalues: Vec<f64>,
    #[serde(skip)]
    pub min_eigenvector: Vec<C64>,
}

/// Normalise the phase so the largest-magnitude component (smallest index
/// among ties) is real and positive.
pub fn fix_phase(v: &mut [C64]) {
    let mut best = 0;
    for (i, z) in v.iter().enumerate() {
        if z.norm() > v[best].norm() * (1.0 + 1e-12) {
            best = i;
        }
    }
    let z = v[best];
    if z.norm() > 0.0 {
        let ph = z.conj() / z.norm();
        v.iter_mut().for_each(|x| *x *= ph);
    }
}

/// Smallest eigenvalue and its unit eigenvector plus the sorted spectrum.
pub fn min_eigenpair(m: &DMatrix<C64>) -> (f64, Vec<C64>, Vec<f64>) {
    let eig = hermitian_eigen(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .total_cmp(&eig.eigenvalues[b])
            .then(a.cmp(&b))
    });
    let i = order[0];
    let mut v: Vec<C64> = eig.eigenvectors.column(i).iter().copied().collect();
    fix_phase(&mut v);
    (
        eig.eigenvalues[i],
        v,
        order.iter().map(|&k| eig.eigenvalues[k]).collect(),
    )
}

/// δ = max_j Σ_{k≠j} δ_{jk} / N.
pub fn propagate_error(radii: &DMatrix<f64>) -> Result<f64> {
    let n = radii.nrows();
    if radii.ncols() != n {
        return Err(Error::Dimension("radii must be square".into()));
    }
    if radii.iter().any(|&r| r.is_nan() || r < 0.0) {
        return invalid("error radii must be non-negative");
    }
    Ok((0..n)
        .map(|j| {
            (0..n)
                .filter(|&k| k != j)
                .map(|k| radii[(j, k)])
                .sum::<f64>()
                / n as f64
        })
        .fold(0.0, f64::max))
}

pub fn evaluate(m: &WitnessMatrix) -> Result<WitnessResult> {
    let (lambda_min, v, evals) = min_eigenpair(&m.entries);
    let delta = propagate_error(&m.radii)?;
    let value = (-lambda_min).max(0.0);
    Ok(WitnessResult {
        lambda_min,
        value,
        delta,
        certified: value > delta,
        kind: m.kind,
        mode: m.mode,
        lower_bound: value - delta,
        lower_bound_of: bounded_quantities(m.kind)
            .into_iter()
            .map(String::from)
            .collect(),
        spectral_gap: evals.get(1).map_or(f64::INFINITY, |e| e - evals[0]),
        eigenvalues: evals,
        min_eigenvector: v,
    })
}

/// Steps (1)–(4) with exact characteristic values.
pub fn certify_exact(state: &State, points: &PointSet) -> Result<WitnessResult> {
    evaluate(&build_witness(state, points)?)
}

/// Steps (1)–(4) from a measured upper triangle: `upper[j][k − j − 1]` holds
/// the estimate d̂_{jk} of tr[ρ D D] (not yet divided by N) and its radius.
pub fn certify_measured(
    n: usize,
    kind: WitnessKind,
    upper: &[Vec<(C64, f64)>],
) -> Result<WitnessResult> {
    evaluate(&measured_matrix(n, kind, upper)?)
}

pub fn measured_matrix(
    n: usize,
    kind: WitnessKind,
    upper: &[Vec<(C64, f64)>],
) -> Result<WitnessMatrix> {
    if n < 2 || upper.len() + 1 < n || (0..n - 1).any(|j| upper[j].len() != n - j - 1) {
        return invalid(format!(
            "measured entries do not form the upper triangle of a {n}x{n} matrix"
        ));
    }
    let inv = 1.0 / n as f64;
    let mut m = DMatrix::from_element(n, n, C64::new(inv, 0.0));
    let mut r = DMatrix::zeros(n, n);
    for j in 0..n - 1 {
        for (o, &(d, rad)) in upper[j].iter().enumerate() {
            let k = j + 1 + o;
            if rad.is_nan() || rad < 0.0 {
                return invalid("error radii must be non-negative");
            }
            m[(j, k)] = d * inv;
            m[(k, j)] = d.conj() * inv;
            r[(j, k)] = rad;
            r[(k, j)] = rad;
        }
    }
    Ok(WitnessMatrix {
        kind,
        mode: MatrixMode::Measured,
        entries: m,
        radii: r,
    })
}
