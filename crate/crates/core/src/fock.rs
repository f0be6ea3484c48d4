//! Truncated multimode Fock spaces, states on them, and the single-mode
//! operator algebra (displacement, squeezing, beamsplitters, ladders).
//!
//! Basis ordering is row-major over modes: mode 0 is the most significant
//! digit of the flat index.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Levels this far below the cutoff are treated as free of boundary effects.
pub const SAFE_MARGIN: usize = 5;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockSpace {
    cutoffs: Vec<usize>,
}

impl FockSpace {
    pub fn new(cutoffs: Vec<usize>) -> Result<Self> {
        if cutoffs.is_empty() {
            return invalid("a Fock space needs at least one mode");
        }
        if cutoffs.contains(&0) {
            return invalid("every mode needs a cutoff of at least 1");
        }
        Ok(Self { cutoffs })
    }

    pub fn uniform(modes: usize, cutoff: usize) -> Result<Self> {
        Self::new(vec![cutoff; modes])
    }

    pub fn num_modes(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    pub fn cutoff(&self, mode: usize) -> usize {
        self.cutoffs[mode]
    }

    pub fn dim(&self) -> usize {
        self.cutoffs.iter().product()
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.cutoffs.len()];
        for m in (0..self.cutoffs.len().saturating_sub(1)).rev() {
            s[m] = s[m + 1] * self.cutoffs[m + 1];
        }
        s
    }

    pub fn index(&self, levels: &[usize]) -> usize {
        levels
            .iter()
            .zip(&self.cutoffs)
            .fold(0, |acc, (&n, &d)| acc * d + n)
    }

    pub fn levels(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.cutoffs.len()];
        for m in (0..self.cutoffs.len()).rev() {
            out[m] = index % self.cutoffs[m];
            index /= self.cutoffs[m];
        }
        out
    }

    /// Subspace made of the listed modes, in the given order.
    pub fn select(&self, modes: &[usize]) -> Result<Self> {
        Self::new(modes.iter().map(|&m| self.cutoffs[m]).collect())
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.num_modes() {
            return invalid(format!(
                "mode {mode} out of range for {} modes",
                self.num_modes()
            ));
        }
        Ok(())
    }
}

/// Rows `0..rows`, columns `0..cols` of the infinite displacement matrix
/// D(ξ) = exp(ξa† − ξ*a), from the associated-Laguerre closed form.
///
/// Entries are exact restrictions of the untruncated operator, so they do
/// not depend on the sizes requested. Each diagonal is produced by a
/// normalised three-term Laguerre recurrence to avoid factorial overflow.
pub fn displacement_block(rows: usize, cols: usize, xi: C64) -> DMatrix<C64> {
    let mut out = DMatrix::from_element(rows, cols, ZERO);
    if rows == 0 || cols == 0 {
        return out;
    }
    let x = xi.norm_sqr();
    let envelope = (-0.5 * x).exp();
    let down = -xi.conj();

    // b_k = e^{-x/2} ξ^k / √k!  (lower diagonals), and the analogue with −ξ*.
    let kmax = rows.max(cols);
    let mut lower = Vec::with_capacity(kmax);
    let mut upper = Vec::with_capacity(kmax);
    let (mut bl, mut bu) = (C64::new(envelope, 0.0), C64::new(envelope, 0.0));
    for k in 0..kmax {
        lower.push(bl);
        upper.push(bu);
        let s = ((k + 1) as f64).sqrt();
        bl = bl * xi / s;
        bu = bu * down / s;
    }

    // λ_n^{(k)} = √(n!/(n+k)!) L_n^{(k)}(x) · √k!
    let fill = |k: usize, len: usize, place: &mut dyn FnMut(usize, f64)| {
        let kf = k as f64;
        let mut prev = 0.0;
        let mut cur = 1.0;
        for n in 0..len {
            place(n, cur);
            let nf = n as f64;
            let next = ((2.0 * nf + 1.0 + kf - x) * cur - (nf * (nf + kf)).sqrt() * prev)
                / ((nf + 1.0) * (nf + kf + 1.0)).sqrt();
            prev = cur;
            cur = next;
        }
    };

    for k in 0..rows {
        // entries (n + k, n)
        let len = (rows - k).min(cols);
        let b = lower[k];
        fill(k, len, &mut |n, l| out[(n + k, n)] = b * l);
    }
    for k in 1..cols {
        // entries (n, n + k)
        let len = (cols - k).min(rows);
        let b = upper[k];
        fill(k, len, &mut |n, l| out[(n, n + k)] = b * l);
    }
    out
}

/// Square d×d displacement block.
pub fn displacement(d: usize, xi: C64) -> DMatrix<C64> {
    displacement_block(d, d, xi)
}

/// Largest deviation of a column norm from one over columns `0..cols`.
pub fn column_norm_defect(m: &DMatrix<C64>, cols: usize) -> f64 {
    (0..cols.min(m.ncols()))
        .map(|c| (m.column(c).norm() - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Single-mode displacement embedded on the full space.
///
/// Fails when a column more than [`SAFE_MARGIN`] levels below the cutoff
/// loses more than `norm_tol` of its norm, which means the displaced
/// low-lying states leak out of the truncated space.
pub fn displacement_matrix(
    space: &FockSpace,
    mode: usize,
    xi: C64,
    norm_tol: f64,
) -> Result<DMatrix<C64>> {
    space.check_mode(mode)?;
    if !(xi.re.is_finite() && xi.im.is_finite()) {
        return invalid("displacement argument must be finite");
    }
    let d = space.cutoff(mode);
    let block = displacement(d, xi);
    check_columns(&block, d, norm_tol, xi)?;
    Ok(embed(space, mode, &block))
}

fn check_columns(block: &DMatrix<C64>, d: usize, tol: f64, xi: C64) -> Result<()> {
    let safe = d.saturating_sub(SAFE_MARGIN).max(1);
    let defect = column_norm_defect(block, safe);
    if defect > tol {
        return Err(Error::Truncation(format!(
            "displacement by {xi} at cutoff {d}: column norm defect {defect:.3e}"
        )));
    }
    Ok(())
}

/// D(ξ₀) ⊗ D(ξ₁) ⊗ … on the full space.
pub fn multimode_displacement(
    space: &FockSpace,
    xis: &[C64],
    norm_tol: f64,
) -> Result<DMatrix<C64>> {
    if xis.len() != space.num_modes() {
        return Err(Error::Dimension(format!(
            "{} displacement arguments for {} modes",
            xis.len(),
            space.num_modes()
        )));
    }
    let mut out = DMatrix::from_element(1, 1, ONE);
    for (m, &xi) in xis.iter().enumerate() {
        let d = space.cutoff(m);
        let block = displacement(d, xi);
        check_columns(&block, d, norm_tol, xi)?;
        out = out.kronecker(&block);
    }
    Ok(out)
}

pub fn annihilation(d: usize) -> DMatrix<C64> {
    let mut a = DMatrix::from_element(d, d, ZERO);
    for n in 1..d {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

pub fn number(d: usize) -> DMatrix<C64> {
    DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            C64::new(i as f64, 0.0)
        } else {
            ZERO
        }
    })
}

pub fn parity(d: usize) -> DMatrix<C64> {
    DMatrix::from_fn(d, d, |i, j| {
        if i != j {
            ZERO
        } else if i % 2 == 0 {
            ONE
        } else {
            -ONE
        }
    })
}

/// Embed a single-mode operator on `mode` of the full space.
pub fn embed(space: &FockSpace, mode: usize, op: &DMatrix<C64>) -> DMatrix<C64> {
    let mut out = DMatrix::from_element(1, 1, ONE);
    for m in 0..space.num_modes() {
        if m == mode {
            out = out.kronecker(op);
        } else {
            out = out.kronecker(&DMatrix::<C64>::identity(space.cutoff(m), space.cutoff(m)));
        }
    }
    out
}

/// Eigen-decomposition of a Hermitian matrix. The QR iteration can return
/// NaN on nearly rank-deficient inputs with graded entries; those are retried
/// on M + cI with c = ‖M‖_F + 1 and shifted back.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> nalgebra::SymmetricEigen<C64, nalgebra::Dyn> {
    let eig = m.clone().symmetric_eigen();
    if eig.eigenvalues.iter().all(|x| x.is_finite())
        && eig
            .eigenvectors
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    {
        return eig;
    }
    let n = m.nrows();
    let c = m.norm() + 1.0;
    let mut eig = (m + DMatrix::<C64>::identity(n, n) * C64::new(c, 0.0)).symmetric_eigen();
    eig.eigenvalues.iter_mut().for_each(|x| *x -= c);
    eig
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let mut ev: Vec<f64> = hermitian_eigen(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Beamsplitter B(θ) between modes i and j with B(θ)|1,0⟩ = cos θ|1,0⟩ + sin θ|0,1⟩.
///
/// The generator conserves n_i + n_j, so each photon-number sector is
/// exponentiated on its own; sectors that fit under both cutoffs are exact.
pub fn beamsplitter(space: &FockSpace, modes: (usize, usize), theta: f64) -> Result<DMatrix<C64>> {
    let (i, j) = modes;
    space.check_mode(i)?;
    space.check_mode(j)?;
    if i == j {
        return invalid("beamsplitter needs two distinct modes");
    }
    let (di, dj) = (space.cutoff(i), space.cutoff(j));
    // two-mode block in (n_i, n_j) ordering
    let mut pair = DMatrix::from_element(di * dj, di * dj, ZERO);
    for total in 0..(di + dj - 1) {
        let ks: Vec<usize> = (0..=total).filter(|&k| k < di && total - k < dj).collect();
        let s = ks.len();
        // generator θ(a_i a_j† − a_i† a_j) on |k, total−k⟩
        let mut g = DMatrix::from_element(s, s, ZERO);
        for (c, &k) in ks.iter().enumerate() {
            let l = total - k;
            if k > 0 {
                if let Some(r) = ks.iter().position(|&q| q == k - 1) {
                    g[(r, c)] += C64::new(theta * ((k * (l + 1)) as f64).sqrt(), 0.0);
                }
            }
            if l > 0 {
                if let Some(r) = ks.iter().position(|&q| q == k + 1) {
                    g[(r, c)] -= C64::new(theta * (((k + 1) * l) as f64).sqrt(), 0.0);
                }
            }
        }
        let u = g.exp();
        for (c, &k) in ks.iter().enumerate() {
            for (r, &q) in ks.iter().enumerate() {
                pair[(q * dj + (total - q), k * dj + (total - k))] = u[(r, c)];
            }
        }
    }
    Ok(embed_pair(space, (i, j), &pair))
}

/// Embed an operator on the ordered mode pair (i, j) given in (n_i, n_j) ordering.
pub fn embed_pair(space: &FockSpace, (i, j): (usize, usize), op: &DMatrix<C64>) -> DMatrix<C64> {
    let dim = space.dim();
    let dj = space.cutoff(j);
    let mut out = DMatrix::from_element(dim, dim, ZERO);
    for col in 0..dim {
        let lc = space.levels(col);
        let pc = lc[i] * dj + lc[j];
        for (pr, val) in op.column(pc).iter().enumerate() {
            if *val == ZERO {
                continue;
            }
            let mut lr = lc.clone();
            lr[i] = pr / dj;
            lr[j] = pr % dj;
            out[(space.index(&lr), col)] = *val;
        }
    }
    out
}

/// Working cutoff used when a squeezer is built by exponentiation.
pub fn squeeze_working_cutoff(d: usize) -> usize {
    2 * d + 10
}

/// S(r) = exp[(r/2)(a² − a†²)] on one mode, exponentiated at an enlarged
/// cutoff and projected back.
pub fn squeeze(space: &FockSpace, mode: usize, r: f64, r_max: f64) -> Result<DMatrix<C64>> {
    space.check_mode(mode)?;
    if !r.is_finite() || r.abs() > r_max {
        return invalid(format!(
            "squeezing |r| = {} exceeds the limit {r_max}",
            r.abs()
        ));
    }
    let d = space.cutoff(mode);
    let w = squeeze_working_cutoff(d);
    let a = annihilation(w);
    let ad = a.adjoint();
    let gen = (&a * &a - &ad * &ad) * C64::new(0.5 * r, 0.0);
    let full = gen.exp();
    let tail: f64 = (d..w).map(|n| full[(n, 0)].norm_sqr()).sum();
    if tail > 1e-8 {
        return Err(Error::Truncation(format!(
            "squeezed vacuum at r = {r} leaves {tail:.3e} outside cutoff {d}"
        )));
    }
    let block = full.view((0, 0), (d, d)).into_owned();
    Ok(embed(space, mode, &block))
}

/// Apply a single-mode operator along one axis of a flat amplitude vector.
pub(crate) fn apply_axis(space: &FockSpace, mode: usize, op: &DMatrix<C64>, v: &[C64]) -> Vec<C64> {
    let d = space.cutoff(mode);
    let post: usize = space.cutoffs()[mode + 1..].iter().product();
    let pre = v.len() / (d * post);
    let mut out = vec![ZERO; v.len()];
    for p in 0..pre {
        let base = p * d * post;
        for k in 0..d {
            let orow = base + k * post;
            for n in 0..d {
                let c = op[(k, n)];
                if c == ZERO {
                    continue;
                }
                let irow = base + n * post;
                for q in 0..post {
                    out[orow + q] += c * v[irow + q];
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct PureState {
    space: FockSpace,
    amps: DVector<C64>,
}

impl PureState {
    /// Normalise and fix the global phase so the largest amplitude is real
    /// and positive.
    pub fn new(space: FockSpace, amps: DVector<C64>) -> Result<Self> {
        if amps.len() != space.dim() {
            return Err(Error::Dimension(format!(
                "{} amplitudes for a space of dimension {}",
                amps.len(),
                space.dim()
            )));
        }
        let norm = amps.norm();
        if !(norm.is_finite() && norm > 1e-300) {
            return invalid("state vector has zero or non-finite norm");
        }
        let mut amps = amps / C64::new(norm, 0.0);
        let mut best = 0;
        for (i, a) in amps.iter().enumerate() {
            if a.norm() > amps[best].norm() * (1.0 + 1e-12) {
                best = i;
            }
        }
        let phase = amps[best].conj() / amps[best].norm();
        amps *= phase;
        Ok(Self { space, amps })
    }

    pub fn basis(space: FockSpace, levels: &[usize]) -> Result<Self> {
        if levels.len() != space.num_modes()
            || levels.iter().zip(space.cutoffs()).any(|(n, d)| n >= d)
        {
            return invalid("basis levels do not fit the space");
        }
        let mut amps = DVector::from_element(space.dim(), ZERO);
        amps[space.index(levels)] = ONE;
        Self::new(space, amps)
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn tail_mass(&self) -> f64 {
        tail_of(&self.space, self.amps.iter().map(|a| a.norm_sqr()))
    }

    pub fn to_density(&self) -> DensityOperator {
        let m = &self.amps * self.amps.adjoint();
        DensityOperator::trusted(self.space.clone(), m)
    }

    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.space != other.space {
            return Err(Error::Dimension("states live on different spaces".into()));
        }
        Ok(self.amps.dotc(&other.amps))
    }
}

/// Population sitting on the top level of any mode.
fn tail_of(space: &FockSpace, pops: impl Iterator<Item = f64>) -> f64 {
    pops.enumerate()
        .filter(|(i, _)| {
            space
                .levels(*i)
                .iter()
                .zip(space.cutoffs())
                .any(|(&n, &d)| d > 1 && n == d - 1)
        })
        .map(|(_, p)| p)
        .sum()
}

#[derive(Clone, Debug)]
pub struct DensityOperator {
    space: FockSpace,
    matrix: DMatrix<C64>,
    tail_mass: f64,
}

impl DensityOperator {
    /// Validates Hermiticity and unit trace; the stored matrix is the exact
    /// Hermitian part of the input.
    pub fn new(space: FockSpace, matrix: DMatrix<C64>) -> Result<Self> {
        let dim = space.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::Dimension(format!(
                "{}x{} matrix for dimension {dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let asym = (&matrix - matrix.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if asym > 1e-10 {
            return invalid(format!(
                "density matrix is not Hermitian (residual {asym:.3e})"
            ));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
            return invalid(format!("density matrix trace is {tr}"));
        }
        Ok(Self::trusted(space, matrix))
    }

    /// Divide by the trace first; for outputs of truncating maps.
    pub fn normalized(space: FockSpace, matrix: DMatrix<C64>) -> Result<Self> {
        let tr = matrix.trace().re;
        if tr.is_nan() || tr <= 0.0 {
            return invalid("matrix has non-positive trace");
        }
        Self::new(space, matrix / C64::new(tr, 0.0))
    }

    pub(crate) fn trusted(space: FockSpace, matrix: DMatrix<C64>) -> Self {
        let matrix = (&matrix + matrix.adjoint()) * C64::new(0.5, 0.0);
        let tail_mass = tail_of(&space, matrix.diagonal().iter().map(|z| z.re));
        Self {
            space,
            matrix,
            tail_mass,
        }
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }
}

/// A state on a truncated Fock space, kept as a vector when pure so large
/// cutoffs stay affordable.
#[derive(Clone, Debug)]
pub enum State {
    Pure(PureState),
    Mixed(DensityOperator),
}

impl From<PureState> for State {
    fn from(p: PureState) -> Self {
        State::Pure(p)
    }
}

impl From<DensityOperator> for State {
    fn from(r: DensityOperator) -> Self {
        State::Mixed(r)
    }
}

impl State {
    pub fn space(&self) -> &FockSpace {
        match self {
            State::Pure(p) => &p.space,
            State::Mixed(r) => &r.space,
        }
    }

    pub fn num_modes(&self) -> usize {
        self.space().num_modes()
    }

    pub fn tail_mass(&self) -> f64 {
        match self {
            State::Pure(p) => p.tail_mass(),
            State::Mixed(r) => r.tail_mass,
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, State::Pure(_))
    }

    pub fn as_pure(&self) -> Option<&PureState> {
        match self {
            State::Pure(p) => Some(p),
            State::Mixed(_) => None,
        }
    }

    pub fn to_density(&self) -> DensityOperator {
        match self {
            State::Pure(p) => p.to_density(),
            State::Mixed(r) => r.clone(),
        }
    }

    /// Diagonal of the density matrix.
    pub fn populations(&self) -> Vec<f64> {
        match self {
            State::Pure(p) => p.amps.iter().map(|a| a.norm_sqr()).collect(),
            State::Mixed(r) => r.matrix.diagonal().iter().map(|z| z.re).collect(),
        }
    }

    /// Photon-number distribution of each mode.
    pub fn marginal_populations(&self) -> Vec<Vec<f64>> {
        let space = self.space();
        let mut out: Vec<Vec<f64>> = space.cutoffs().iter().map(|&d| vec![0.0; d]).collect();
        for (i, p) in self.populations().into_iter().enumerate() {
            for (m, n) in space.levels(i).into_iter().enumerate() {
                out[m][n] += p;
            }
        }
        out
    }

    pub fn mean_photons(&self) -> Vec<f64> {
        self.marginal_populations()
            .iter()
            .map(|p| p.iter().enumerate().map(|(n, q)| n as f64 * q).sum())
            .collect()
    }

    /// tr[ρ (X₀ ⊗ X₁ ⊗ …)] for square single-mode operators X_m.
    pub fn expect_product(&self, ops: &[DMatrix<C64>]) -> Result<C64> {
        let space = self.space();
        if ops.len() != space.num_modes() {
            return Err(Error::Dimension(format!(
                "{} factors for {} modes",
                ops.len(),
                space.num_modes()
            )));
        }
        for (m, op) in ops.iter().enumerate() {
            let d = space.cutoff(m);
            if op.nrows() != d || op.ncols() != d {
                return Err(Error::Dimension(format!("factor {m} is not {d}x{d}")));
            }
        }
        Ok(match self {
            State::Pure(p) => {
                let mut v: Vec<C64> = p.amps.iter().copied().collect();
                for (m, op) in ops.iter().enumerate() {
                    v = apply_axis(space, m, op, &v);
                }
                p.amps.iter().zip(&v).map(|(a, b)| a.conj() * b).sum()
            }
            State::Mixed(r) => contract_product(space, &r.matrix, ops),
        })
    }

    /// Drop Fock levels whose marginal population is below `threshold` in
    /// every mode (never below one level). Exact for levels that are empty.
    pub fn compact(&self, threshold: f64) -> State {
        let marg = self.marginal_populations();
        let cut: Vec<usize> = marg
            .iter()
            .map(|p| p.iter().rposition(|&q| q > threshold).map_or(1, |n| n + 1))
            .collect();
        if cut == self.space().cutoffs() {
            return self.clone();
        }
        self.project(&FockSpace::new(cut).expect("positive cutoffs"))
            .expect("compaction keeps the mode count")
    }

    /// Restrict or zero-pad to another space with the same mode count.
    /// No renormalisation is applied.
    pub fn project(&self, target: &FockSpace) -> Result<State> {
        let space = self.space();
        if target.num_modes() != space.num_modes() {
            return Err(Error::Dimension(
                "projection must keep the mode count".into(),
            ));
        }
        let map: Vec<Option<usize>> = (0..space.dim())
            .map(|i| {
                let l = space.levels(i);
                if l.iter().zip(target.cutoffs()).all(|(n, d)| n < d) {
                    Some(target.index(&l))
                } else {
                    None
                }
            })
            .collect();
        Ok(match self {
            State::Pure(p) => {
                let mut amps = DVector::from_element(target.dim(), ZERO);
                for (i, t) in map.iter().enumerate() {
                    if let Some(t) = t {
                        amps[*t] = p.amps[i];
                    }
                }
                State::Pure(PureState {
                    space: target.clone(),
                    amps,
                })
            }
            State::Mixed(r) => {
                let mut m = DMatrix::from_element(target.dim(), target.dim(), ZERO);
                for (j, tj) in map.iter().enumerate() {
                    let Some(tj) = tj else { continue };
                    for (i, ti) in map.iter().enumerate() {
                        if let Some(ti) = ti {
                            m[(*ti, *tj)] = r.matrix[(i, j)];
                        }
                    }
                }
                State::Mixed(DensityOperator::trusted(target.clone(), m))
            }
        })
    }

    pub fn trace(&self) -> f64 {
        self.populations().iter().sum()
    }
}

/// tr[ρ ⊗X_m] by contracting modes from last to first; O(dim²).
pub(crate) fn contract_product(space: &FockSpace, rho: &DMatrix<C64>, ops: &[DMatrix<C64>]) -> C64 {
    let mut dim = space.dim();
    // row-major working copy
    let mut cur: Vec<C64> = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            cur.push(rho[(i, j)]);
        }
    }
    for m in (0..space.num_modes()).rev() {
        let d = space.cutoff(m);
        let rest = dim / d;
        let x = &ops[m];
        let mut next = vec![ZERO; rest * rest];
        for r1 in 0..rest {
            for n in 0..d {
                let row = (r1 * d + n) * dim;
                for r2 in 0..rest {
                    let mut acc = ZERO;
                    let base = row + r2 * d;
                    for np in 0..d {
                        acc += cur[base + np] * x[(np, n)];
                    }
                    next[r1 * rest + r2] += acc;
                }
            }
        }
        cur = next;
        dim = rest;
    }
    cur[0]
}

/// Trace out `modes_out`, keeping the remaining modes in order.
pub fn partial_trace(state: &State, modes_out: &[usize]) -> Result<DensityOperator> {
    let space = state.space();
    let mm = space.num_modes();
    if modes_out.is_empty() || modes_out.len() >= mm || modes_out.iter().any(|&m| m >= mm) {
        return invalid("modes to trace out must be a nonempty proper subset");
    }
    let keep: Vec<usize> = (0..mm).filter(|m| !modes_out.contains(m)).collect();
    let gone: Vec<usize> = (0..mm).filter(|m| modes_out.contains(m)).collect();
    let ks = space.select(&keep)?;
    let gs = space.select(&gone)?;
    let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::new(); gs.dim()];
    for i in 0..space.dim() {
        let l = space.levels(i);
        let kl: Vec<usize> = keep.iter().map(|&m| l[m]).collect();
        let gl: Vec<usize> = gone.iter().map(|&m| l[m]).collect();
        groups[gs.index(&gl)].push((ks.index(&kl), i));
    }
    let mut out = DMatrix::from_element(ks.dim(), ks.dim(), ZERO);
    match state {
        State::Pure(p) => {
            for g in &groups {
                for &(a, i) in g {
                    for &(b, j) in g {
                        out[(a, b)] += p.amps[i] * p.amps[j].conj();
                    }
                }
            }
        }
        State::Mixed(r) => {
            for g in &groups {
                for &(a, i) in g {
                    for &(b, j) in g {
                        out[(a, b)] += r.matrix[(i, j)];
                    }
                }
            }
        }
    }
    Ok(DensityOperator::trusted(ks, out))
}

/// Partial transpose over `modes_b`. The result is Hermitian with unit trace
/// but need not be positive, so it is returned as a bare matrix.
pub fn partial_transpose(rho: &DensityOperator, modes_b: &[usize]) -> Result<DMatrix<C64>> {
    let space = rho.space();
    let mm = space.num_modes();
    if modes_b.is_empty() || modes_b.len() >= mm || modes_b.iter().any(|&m| m >= mm) {
        return invalid("transposed modes must be a nonempty proper subset");
    }
    let dim = space.dim();
    let levels: Vec<Vec<usize>> = (0..dim).map(|i| space.levels(i)).collect();
    let mut out = DMatrix::from_element(dim, dim, ZERO);
    for i in 0..dim {
        for j in 0..dim {
            let (mut li, mut lj) = (levels[i].clone(), levels[j].clone());
            for &m in modes_b {
                std::mem::swap(&mut li[m], &mut lj[m]);
            }
            out[(space.index(&li), space.index(&lj))] = rho.matrix()[(i, j)];
        }
    }
    Ok(out)
}
