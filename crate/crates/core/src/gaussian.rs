//! Gaussian unitaries realising a symplectic map, applied to states.
//!
//! Λ is split by polar decomposition Λ = O·H into a passive part O and a
//! positive part H = exp[[0, B], [B*, 0]]. With
//!   U_O = exp(Σ (log W)_{ij} a_i†a_j),   U_H = exp(½Σ B_ij a_i†a_j† − B*_ij a_i a_j)
//! one has U_O†aU_O = W a, U_H†(a, a†)U_H = H(a, a†) and U = U_O U_H.
//! Both exponentials are applied to vectors by a scaled Taylor series on a
//! sparse generator, on a working space large enough for the output.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fock::{
    apply_axis, hermitian_eigen, DensityOperator, FockSpace, PureState, State, C64, ZERO,
};
use crate::symplectic::{GaussianFrame, SymplecticMap};

/// Tail population above which a Gaussian action is reported unreliable.
pub const GAUSSIAN_TAIL_TOL: f64 = 1e-8;

struct Sparse {
    entries: Vec<(usize, usize, C64)>,
    norm1: f64,
}

impl Sparse {
    fn new(dim: usize, entries: Vec<(usize, usize, C64)>) -> Self {
        let mut cols = vec![0.0; dim];
        for &(_, c, v) in &entries {
            cols[c] += v.norm();
        }
        let norm1 = cols.into_iter().fold(0.0, f64::max);
        Self { entries, norm1 }
    }

    fn apply(&self, v: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|z| *z = ZERO);
        for &(r, c, val) in &self.entries {
            out[r] += val * v[c];
        }
    }

    /// exp(G) v by s steps of a truncated Taylor series.
    fn exp_action(&self, v: &[C64]) -> Vec<C64> {
        let steps = self.norm1.ceil().max(1.0) as usize;
        let scale = C64::new(1.0 / steps as f64, 0.0);
        let mut cur = v.to_vec();
        let mut term = vec![ZERO; v.len()];
        let mut tmp = vec![ZERO; v.len()];
        for _ in 0..steps {
            let mut acc = cur.clone();
            term.copy_from_slice(&cur);
            let base = cur
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>()
                .sqrt()
                .max(1e-300);
            for k in 1..200 {
                self.apply(&term, &mut tmp);
                let f = scale / k as f64;
                let mut tn = 0.0;
                for (t, x) in term.iter_mut().zip(&tmp) {
                    *t = x * f;
                    tn += t.norm_sqr();
                }
                for (a, t) in acc.iter_mut().zip(&term) {
                    *a += t;
                }
                if tn.sqrt() <= 1e-17 * base {
                    break;
                }
            }
            cur = acc;
        }
        cur
    }
}

/// Sparse quadratic generator Σ h_ij a_i†a_j + ½Σ(B_ij a_i†a_j† − B*_ij a_i a_j).
fn quadratic_generator(space: &FockSpace, h: &DMatrix<C64>, b: &DMatrix<C64>) -> Sparse {
    let m = space.num_modes();
    let dim = space.dim();
    let cut = space.cutoffs();
    let mut entries = Vec::new();
    for col in 0..dim {
        let l = space.levels(col);
        for i in 0..m {
            for j in 0..m {
                // a_i† a_j
                let hij = h[(i, j)];
                if hij != ZERO && l[j] > 0 {
                    let mut t = l.clone();
                    let mut amp = (t[j] as f64).sqrt();
                    t[j] -= 1;
                    if t[i] + 1 < cut[i] {
                        amp *= ((t[i] + 1) as f64).sqrt();
                        t[i] += 1;
                        entries.push((space.index(&t), col, hij * amp));
                    }
                }
                let bij = b[(i, j)];
                if bij == ZERO {
                    continue;
                }
                // ½ B_ij a_i† a_j†
                {
                    let mut t = l.clone();
                    let mut ok = true;
                    let mut amp = 1.0;
                    for &q in &[j, i] {
                        if t[q] + 1 < cut[q] {
                            amp *= ((t[q] + 1) as f64).sqrt();
                            t[q] += 1;
                        } else {
                            ok = false;
                        }
                    }
                    if ok {
                        entries.push((space.index(&t), col, bij * (0.5 * amp)));
                    }
                }
                // −½ B*_ij a_i a_j
                {
                    let mut t = l.clone();
                    let mut ok = true;
                    let mut amp = 1.0;
                    for &q in &[j, i] {
                        if t[q] > 0 {
                            amp *= (t[q] as f64).sqrt();
                            t[q] -= 1;
                        } else {
                            ok = false;
                        }
                    }
                    if ok {
                        entries.push((space.index(&t), col, bij.conj() * (-0.5 * amp)));
                    }
                }
            }
        }
    }
    Sparse::new(dim, entries)
}

/// Polar split of Λ: returns (log W, B) with O = diag(W, W*), log H = [[0,B],[B*,0]].
fn polar_generators(lambda: &SymplecticMap) -> (DMatrix<C64>, DMatrix<C64>) {
    let m = lambda.modes();
    let l = lambda.matrix();
    let gram = l.adjoint() * l;
    let eig = hermitian_eigen(&gram);
    let v = &eig.eigenvectors;
    let sqrt_inv = DMatrix::from_fn(2 * m, 2 * m, |i, j| {
        if i == j {
            C64::new(eig.eigenvalues[i].max(1e-300).sqrt().recip(), 0.0)
        } else {
            ZERO
        }
    });
    let half_log = DMatrix::from_fn(2 * m, 2 * m, |i, j| {
        if i == j {
            C64::new(0.5 * eig.eigenvalues[i].max(1e-300).ln(), 0.0)
        } else {
            ZERO
        }
    });
    let log_h = v * half_log * v.adjoint();
    let o = l * (v * sqrt_inv * v.adjoint());
    let w = o.view((0, 0), (m, m)).into_owned();
    let b = log_h.view((0, m), (m, m)).into_owned();
    // W is unitary hence normal: its Schur form is diagonal.
    let (q, t) = w.schur().unpack();
    let logd = DMatrix::from_fn(m, m, |i, j| if i == j { t[(i, i)].ln() } else { ZERO });
    let log_w = &q * logd * q.adjoint();
    (log_w, b)
}

/// Default working cutoffs: passive maps conserve total photon number, so
/// Σ(d−1)+1 per mode is exact; active maps get twice that plus ten.
pub fn working_cutoffs(space: &FockSpace, lambda: &SymplecticMap) -> Vec<usize> {
    let total: usize = space.cutoffs().iter().map(|d| d - 1).sum::<usize>() + 1;
    let w = if lambda.is_passive(1e-14) {
        total
    } else {
        2 * total + 10
    };
    vec![w; space.num_modes()]
}

struct GaussianAction {
    input: FockSpace,
    work: FockSpace,
    passive: Option<Sparse>,
    active: Option<Sparse>,
}

impl GaussianAction {
    fn new(space: &FockSpace, lambda: &SymplecticMap, working: Option<Vec<usize>>) -> Result<Self> {
        if lambda.modes() != space.num_modes() {
            return Err(Error::Dimension(format!(
                "map acts on {} modes, state has {}",
                lambda.modes(),
                space.num_modes()
            )));
        }
        let (ok, res) = crate::symplectic::validate(lambda.matrix());
        if !ok {
            return Err(Error::NotSymplectic(res));
        }
        let cut = working.unwrap_or_else(|| working_cutoffs(space, lambda));
        if cut.len() != space.num_modes() || cut.iter().zip(space.cutoffs()).any(|(w, d)| w < d) {
            return Err(Error::Dimension(
                "working cutoffs must cover the input space".into(),
            ));
        }
        let work = FockSpace::new(cut)?;
        let (log_w, b) = polar_generators(lambda);
        let m = space.num_modes();
        let zero = DMatrix::from_element(m, m, ZERO);
        let passive = (log_w.iter().any(|z| z.norm() > 1e-15))
            .then(|| quadratic_generator(&work, &log_w, &zero));
        let active =
            (b.iter().any(|z| z.norm() > 1e-15)).then(|| quadratic_generator(&work, &zero, &b));
        Ok(Self {
            input: space.clone(),
            work,
            passive,
            active,
        })
    }

    fn apply(&self, v: &DVector<C64>) -> Vec<C64> {
        let mut w = vec![ZERO; self.work.dim()];
        for (i, z) in v.iter().enumerate() {
            w[self.work.index(&self.input.levels(i))] = *z;
        }
        if let Some(g) = &self.active {
            w = g.exp_action(&w);
        }
        if let Some(g) = &self.passive {
            w = g.exp_action(&w);
        }
        w
    }
}

/// U|ψ⟩ or UρU† for the Gaussian unitary U with U†(a, a†)U = Λ(a, a†).
///
/// The output lives on the working space (default [`working_cutoffs`]) and
/// is rejected when its top-level population exceeds [`GAUSSIAN_TAIL_TOL`],
/// unless the map is passive on default cutoffs.
pub fn apply_gaussian(
    state: &State,
    lambda: &SymplecticMap,
    working: Option<Vec<usize>>,
) -> Result<State> {
    // default cutoffs are exact for passive maps
    let exact = working.is_none() && lambda.is_passive(1e-14);
    let act = GaussianAction::new(state.space(), lambda, working)?;
    let out = match state {
        State::Pure(p) => {
            let w = act.apply(p.amplitudes());
            State::Pure(PureState::new(act.work.clone(), DVector::from_vec(w))?)
        }
        State::Mixed(r) => {
            let eig = hermitian_eigen(r.matrix());
            let dim = act.work.dim();
            let mut acc = DMatrix::from_element(dim, dim, ZERO);
            for (k, &p) in eig.eigenvalues.iter().enumerate() {
                if p <= 1e-15 {
                    continue;
                }
                let col: DVector<C64> = eig.eigenvectors.column(k).into_owned();
                let w = DVector::from_vec(act.apply(&col));
                acc += (&w * w.adjoint()) * C64::new(p, 0.0);
            }
            State::Mixed(DensityOperator::normalized(act.work.clone(), acc)?)
        }
    };
    if !exact && out.tail_mass() > GAUSSIAN_TAIL_TOL {
        return Err(Error::Truncation(format!(
            "Gaussian unitary pushes {:.3e} of the population to the working cutoff {:?}",
            out.tail_mass(),
            act.work.cutoffs()
        )));
    }
    Ok(out)
}

/// Rotate ρ into the mode basis defined by Λ: returns UρU† with
/// U†(a, a†)U = Λ(a, a†), so mode k of the output carries the combination
/// of input modes in row k of Λ.
pub fn mode_rotation_to_collective(state: &State, lambda: &SymplecticMap) -> Result<State> {
    apply_gaussian(state, lambda, None)
}

/// D(α)ρD(α)† on `working` cutoffs (default: input cutoff + 4|α|² + 20 per mode).
pub fn apply_displacement(
    state: &State,
    alpha: &[C64],
    working: Option<Vec<usize>>,
) -> Result<State> {
    let space = state.space();
    if alpha.len() != space.num_modes() {
        return Err(Error::Dimension(format!(
            "{} displacements for {} modes",
            alpha.len(),
            space.num_modes()
        )));
    }
    let cut = working.unwrap_or_else(|| {
        space
            .cutoffs()
            .iter()
            .zip(alpha)
            .map(|(&d, a)| {
                if a.norm() == 0.0 {
                    d
                } else {
                    d + (4.0 * a.norm_sqr() + 8.0 * a.norm()).ceil() as usize + 20
                }
            })
            .collect()
    });
    if cut.len() != space.num_modes() || cut.iter().zip(space.cutoffs()).any(|(w, d)| w < d) {
        return Err(Error::Dimension(
            "working cutoffs must cover the input space".into(),
        ));
    }
    let work = FockSpace::new(cut)?;
    let padded = state.project(&work)?;
    let ops: Vec<DMatrix<C64>> = work
        .cutoffs()
        .iter()
        .zip(alpha)
        .map(|(&d, &a)| crate::fock::displacement(d, a))
        .collect();
    let apply = |v: &[C64]| -> Vec<C64> {
        let mut v = v.to_vec();
        for (m, op) in ops.iter().enumerate() {
            v = apply_axis(&work, m, op, &v);
        }
        v
    };
    let out = match &padded {
        State::Pure(p) => {
            let v: Vec<C64> = p.amplitudes().iter().copied().collect();
            State::Pure(PureState::new(work.clone(), DVector::from_vec(apply(&v)))?)
        }
        State::Mixed(r) => {
            let full = ops
                .iter()
                .skip(1)
                .fold(ops[0].clone(), |acc, o| acc.kronecker(o));
            let m = &full * r.matrix() * full.adjoint();
            State::Mixed(DensityOperator::normalized(work.clone(), m)?)
        }
    };
    if out.tail_mass() > GAUSSIAN_TAIL_TOL {
        return Err(Error::Truncation(format!(
            "displacement pushes {:.3e} of the population to the working cutoff",
            out.tail_mass()
        )));
    }
    Ok(out)
}

/// ρ̃ = U₊U_AU_B ρ U_B†U_A†U₊† for a frame, with A the first half of the
/// modes, B the second, and U₊ acting on a₊ = (a_A + Λa_B)/√2.
/// Each layer is U = D(α)G with G the Gaussian unitary of the layer's map.
pub fn apply_frame(
    state: &State,
    frame: &GaussianFrame,
    pairing: &SymplecticMap,
    working: Option<Vec<usize>>,
) -> Result<State> {
    let m = frame.modes();
    if state.num_modes() != 2 * m || pairing.modes() != m {
        return Err(Error::Dimension(
            "frame, pairing and state disagree on mode counts".into(),
        ));
    }
    let local = frame.lambda_a.direct_sum(&frame.lambda_b);
    let mut st = if local.is_identity(1e-14) {
        state.clone()
    } else {
        apply_gaussian(state, &local, working.clone())?
    };
    let alpha_local: Vec<C64> = frame
        .alpha_a
        .iter()
        .chain(&frame.alpha_b)
        .copied()
        .collect();
    if alpha_local.iter().any(|z| z.norm() > 0.0) {
        st = apply_displacement(&st, &alpha_local, None)?;
    }
    let r = SymplecticMap::collective(pairing);
    let plus = frame.lambda_plus.direct_sum(&SymplecticMap::identity(m));
    let full = r.inverse().compose(&plus)?.compose(&r)?;
    if !full.is_identity(1e-14) {
        st = apply_gaussian(&st, &full, working)?;
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let half: Vec<C64> = frame.alpha_plus.iter().map(|z| z * h).collect();
    if half.iter().any(|z| z.norm() > 0.0) {
        let mut alpha: Vec<C64> = half.clone();
        alpha.extend(pairing.inverse().apply(&half));
        st = apply_displacement(&st, &alpha, None)?;
    }
    Ok(st)
}
