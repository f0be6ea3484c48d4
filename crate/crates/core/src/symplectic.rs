//! Symplectic maps in the complex (a, a†) ordering, and how witness point
//! sets move under local Gaussian unitaries.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::{C64, ONE, ZERO};
use crate::points::PointSet;

pub const SYMPLECTIC_TOL: f64 = 1e-10;

/// A 2m×2m matrix Λ acting on (a₁…a_m, a₁†…a_m†) with Λ†KΛ = K,
/// K = diag(𝟙, −𝟙), and lower blocks the conjugates of the upper ones.
///
/// For a Gaussian unitary U with U†aU = Λ(a, a†) + α, `Λ` is the map stored
/// here; applying it to (ξ, ξ*) gives the transformed phase-space point.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticMap {
    m: usize,
    matrix: DMatrix<C64>,
}

fn k_sign(i: usize, m: usize) -> f64 {
    if i < m {
        1.0
    } else {
        -1.0
    }
}

/// Returns whether Λ is symplectic together with the residual
/// max|Λ†KΛ − K| (including the block-conjugate structure).
pub fn validate(matrix: &DMatrix<C64>) -> (bool, f64) {
    let n = matrix.nrows();
    if n != matrix.ncols() || !n.is_multiple_of(2) || n == 0 {
        return (false, f64::INFINITY);
    }
    let m = n / 2;
    let mut kl = matrix.clone();
    for i in 0..n {
        let s = k_sign(i, m);
        for j in 0..n {
            kl[(i, j)] *= s;
        }
    }
    let g = matrix.adjoint() * kl;
    let mut res = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { k_sign(i, m) } else { 0.0 };
            res = res.max((g[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    for i in 0..m {
        for j in 0..m {
            res = res.max((matrix[(i + m, j + m)] - matrix[(i, j)].conj()).norm());
            res = res.max((matrix[(i + m, j)] - matrix[(i, j + m)].conj()).norm());
        }
    }
    (res < SYMPLECTIC_TOL, res)
}

impl SymplecticMap {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        let (ok, res) = validate(&matrix);
        if !ok {
            return Err(Error::NotSymplectic(res));
        }
        Ok(Self {
            m: matrix.nrows() / 2,
            matrix,
        })
    }

    /// Λ = [[P, Q], [Q*, P*]].
    pub fn from_blocks(p: &DMatrix<C64>, q: &DMatrix<C64>) -> Result<Self> {
        let m = p.nrows();
        if p.ncols() != m || q.nrows() != m || q.ncols() != m {
            return Err(Error::Dimension(
                "P and Q must be square and equal-sized".into(),
            ));
        }
        let mut full = DMatrix::from_element(2 * m, 2 * m, ZERO);
        full.view_mut((0, 0), (m, m)).copy_from(p);
        full.view_mut((0, m), (m, m)).copy_from(q);
        full.view_mut((m, 0), (m, m))
            .copy_from(&q.map(|z| z.conj()));
        full.view_mut((m, m), (m, m))
            .copy_from(&p.map(|z| z.conj()));
        Self::new(full)
    }

    pub fn identity(m: usize) -> Self {
        Self {
            m,
            matrix: DMatrix::identity(2 * m, 2 * m),
        }
    }

    /// Passive map a → W a for a unitary W.
    pub fn passive(w: &DMatrix<C64>) -> Result<Self> {
        let m = w.nrows();
        Self::from_blocks(w, &DMatrix::from_element(m, m, ZERO))
    }

    pub fn phase_rotation(phis: &[f64]) -> Self {
        let m = phis.len();
        let w = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                C64::from_polar(1.0, phis[i])
            } else {
                ZERO
            }
        });
        Self::passive(&w).expect("diagonal phases are unitary")
    }

    /// Map of the single-mode squeezer S(r) = exp[(r/2)(a² − a†²)]:
    /// S†aS = a cosh r − a† sinh r.
    pub fn squeeze(r: f64) -> Self {
        let (c, s) = (r.cosh(), r.sinh());
        Self {
            m: 1,
            matrix: DMatrix::from_row_slice(
                2,
                2,
                &[
                    C64::new(c, 0.0),
                    C64::new(-s, 0.0),
                    C64::new(-s, 0.0),
                    C64::new(c, 0.0),
                ],
            ),
        }
    }

    /// Map of the two-mode beamsplitter B(θ) with B(θ)|1,0⟩ = cos θ|1,0⟩ + sin θ|0,1⟩:
    /// B†a₁B = a₁ cos θ − a₂ sin θ, B†a₂B = a₁ sin θ + a₂ cos θ.
    pub fn beamsplitter(theta: f64) -> Self {
        let (c, s) = (theta.cos(), theta.sin());
        let w = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(c, 0.0),
                C64::new(-s, 0.0),
                C64::new(s, 0.0),
                C64::new(c, 0.0),
            ],
        );
        Self::passive(&w).expect("rotation is unitary")
    }

    /// Map taking (a_A, a_B) to collective modes
    /// a₊ = (a_A + Λa_B)/√2 (first half) and a₋ = (a_A − Λa_B)/√2 (second half).
    pub fn collective(pairing: &SymplecticMap) -> Self {
        let m = pairing.m;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let (p, q) = (pairing.p(), pairing.q());
        let mut big_p = DMatrix::from_element(2 * m, 2 * m, ZERO);
        let mut big_q = DMatrix::from_element(2 * m, 2 * m, ZERO);
        for i in 0..m {
            big_p[(i, i)] = C64::new(h, 0.0);
            big_p[(i + m, i)] = C64::new(h, 0.0);
            for j in 0..m {
                big_p[(i, j + m)] = p[(i, j)] * h;
                big_p[(i + m, j + m)] = -p[(i, j)] * h;
                big_q[(i, j + m)] = q[(i, j)] * h;
                big_q[(i + m, j + m)] = -q[(i, j)] * h;
            }
        }
        Self::from_blocks(&big_p, &big_q)
            .expect("collective map of a symplectic pairing is symplectic")
    }

    pub fn modes(&self) -> usize {
        self.m
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn p(&self) -> DMatrix<C64> {
        self.matrix.view((0, 0), (self.m, self.m)).into_owned()
    }

    pub fn q(&self) -> DMatrix<C64> {
        self.matrix.view((0, self.m), (self.m, self.m)).into_owned()
    }

    pub fn residual(&self) -> f64 {
        validate(&self.matrix).1
    }

    /// Λ⁻¹ = KΛ†K.
    pub fn inverse(&self) -> Self {
        let n = 2 * self.m;
        let adj = self.matrix.adjoint();
        let inv = DMatrix::from_fn(n, n, |i, j| {
            adj[(i, j)] * (k_sign(i, self.m) * k_sign(j, self.m))
        });
        Self {
            m: self.m,
            matrix: inv,
        }
    }

    pub fn compose(&self, rhs: &SymplecticMap) -> Result<Self> {
        if self.m != rhs.m {
            return Err(Error::Dimension(
                "composing maps on different mode counts".into(),
            ));
        }
        Ok(Self {
            m: self.m,
            matrix: &self.matrix * &rhs.matrix,
        })
    }

    /// Block-diagonal sum acting on (a_self, a_other).
    pub fn direct_sum(&self, other: &SymplecticMap) -> Self {
        let (m1, m2) = (self.m, other.m);
        let m = m1 + m2;
        let mut p = DMatrix::from_element(m, m, ZERO);
        let mut q = DMatrix::from_element(m, m, ZERO);
        p.view_mut((0, 0), (m1, m1)).copy_from(&self.p());
        q.view_mut((0, 0), (m1, m1)).copy_from(&self.q());
        p.view_mut((m1, m1), (m2, m2)).copy_from(&other.p());
        q.view_mut((m1, m1), (m2, m2)).copy_from(&other.q());
        Self::from_blocks(&p, &q).expect("direct sum of symplectic maps")
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        let n = 2 * self.m;
        (0..n).all(|i| {
            (0..n).all(|j| (self.matrix[(i, j)] - if i == j { ONE } else { ZERO }).norm() <= tol)
        })
    }

    pub fn is_passive(&self, tol: f64) -> bool {
        self.q().iter().all(|z| z.norm() <= tol)
    }

    /// Upper half of Λ(ξ, ξ*).
    pub fn apply(&self, xi: &[C64]) -> Vec<C64> {
        assert_eq!(xi.len(), self.m, "point dimension must match the map");
        let (p, q) = (self.p(), self.q());
        (0..self.m)
            .map(|i| {
                (0..self.m)
                    .map(|j| p[(i, j)] * xi[j] + q[(i, j)] * xi[j].conj())
                    .sum()
            })
            .collect()
    }

    /// Row-major (re, im) pairs.
    pub fn to_rows(&self) -> Vec<Vec<[f64; 2]>> {
        (0..2 * self.m)
            .map(|i| {
                (0..2 * self.m)
                    .map(|j| [self.matrix[(i, j)].re, self.matrix[(i, j)].im])
                    .collect()
            })
            .collect()
    }

    pub fn from_rows(rows: &[Vec<[f64; 2]>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension(
                "symplectic matrix rows must be square".into(),
            ));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| {
            C64::new(rows[i][j][0], rows[i][j][1])
        }))
    }
}

impl Serialize for SymplecticMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymplecticMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        Self::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// ω(x, y) = Σ (x_m* y_m − x_m y_m*), the exponent of the displacement
/// commutation phase D(y)D(x)D(y)† = D(x) e^{ω(x,y)}. It equals the scalar
/// wedge x∧y = Σ(y_m x_m* − y_m* x_m).
pub fn wedge(x: &[C64], y: &[C64]) -> C64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| a.conj() * b - a * b.conj())
        .sum()
}

/// Data of local Gaussian unitaries U_A, U_B and a collective U₊ with
/// U_μ†a_μU_μ = Λ_μ(a_μ, a_μ†) + α_μ. The transformed state is
/// ρ̃ = U₊U_AU_B ρ U_B†U_A†U₊†; a collective U₋ never affects the witness.
#[derive(Clone, Debug)]
pub struct GaussianFrame {
    pub lambda_a: SymplecticMap,
    pub lambda_b: SymplecticMap,
    pub lambda_plus: SymplecticMap,
    pub alpha_a: Vec<C64>,
    pub alpha_b: Vec<C64>,
    pub alpha_plus: Vec<C64>,
}

impl GaussianFrame {
    pub fn identity(m: usize) -> Self {
        Self {
            lambda_a: SymplecticMap::identity(m),
            lambda_b: SymplecticMap::identity(m),
            lambda_plus: SymplecticMap::identity(m),
            alpha_a: vec![ZERO; m],
            alpha_b: vec![ZERO; m],
            alpha_plus: vec![ZERO; m],
        }
    }

    /// Only a collective unitary on the a₊ modes.
    pub fn collective(lambda_plus: SymplecticMap, alpha_plus: Vec<C64>) -> Self {
        let m = lambda_plus.modes();
        Self {
            lambda_plus,
            alpha_plus,
            ..Self::identity(m)
        }
    }

    /// Only local unitaries.
    pub fn local(
        lambda_a: SymplecticMap,
        alpha_a: Vec<C64>,
        lambda_b: SymplecticMap,
        alpha_b: Vec<C64>,
    ) -> Self {
        let m = lambda_a.modes();
        Self {
            lambda_a,
            lambda_b,
            alpha_a,
            alpha_b,
            ..Self::identity(m)
        }
    }

    pub fn modes(&self) -> usize {
        self.lambda_a.modes()
    }

    fn has_local(&self) -> bool {
        !(self.lambda_a.is_identity(1e-14)
            && self.lambda_b.is_identity(1e-14)
            && self
                .alpha_a
                .iter()
                .chain(&self.alpha_b)
                .all(|z| z.norm() == 0.0))
    }

    fn has_collective(&self) -> bool {
        !(self.lambda_plus.is_identity(1e-14) && self.alpha_plus.iter().all(|z| z.norm() == 0.0))
    }

    /// The frame undoing this one. Only defined when the frame is purely
    /// local or purely collective, since the inverse of a mixed frame
    /// reverses the order of the layers.
    pub fn inverse(&self) -> Result<Self> {
        if self.has_local() && self.has_collective() {
            return invalid("inverse is only defined for purely local or purely collective frames");
        }
        let inv = |l: &SymplecticMap, a: &[C64]| {
            let li = l.inverse();
            let back: Vec<C64> = li.apply(a).into_iter().map(|z| -z).collect();
            (li, back)
        };
        let (la, aa) = inv(&self.lambda_a, &self.alpha_a);
        let (lb, ab) = inv(&self.lambda_b, &self.alpha_b);
        let (lp, ap) = inv(&self.lambda_plus, &self.alpha_plus);
        Ok(Self {
            lambda_a: la,
            lambda_b: lb,
            lambda_plus: lp,
            alpha_a: aa,
            alpha_b: ab,
            alpha_plus: ap,
        })
    }

    fn check(&self) -> Result<()> {
        let m = self.modes();
        let dims = [
            self.lambda_b.modes(),
            self.lambda_plus.modes(),
            self.alpha_a.len(),
            self.alpha_b.len(),
            self.alpha_plus.len(),
        ];
        if dims.iter().any(|&d| d != m) {
            return Err(Error::Dimension(
                "frame components have inconsistent mode counts".into(),
            ));
        }
        Ok(())
    }
}

fn sub(x: &[C64], y: &[C64]) -> Vec<C64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

/// Pair each ξ^A with ξ^B via (ξ^B, ξ^B*) = Λ⁻¹(ξ^A, ξ^A*).
pub fn pair_points(xi_a: Vec<Vec<C64>>, lambda: &SymplecticMap) -> Result<PointSet> {
    PointSet::paired(xi_a, lambda.clone())
}

/// Transform Ξ to Ξ̃ for the state ρ̃ obtained from ρ by `frame`, so that
/// [C₂(ρ, Ξ)]_{jk} = [C₂(ρ̃, Ξ̃)]_{jk} · phases_{jk} entrywise.
///
/// ξ̃^A = Λ₊Λ_A ξ^A and ξ̃^B = Λ⁻¹ξ̃^A, which keeps the pairing Λ. The
/// phases are exp[ω(ξ̃_j^μ − ξ̃_k^μ, α̃^μ)] summed over parties with
/// α̃^A = Λ₊α_A + α₊/√2 and α̃^B = Λ⁻¹(Λ₊Λ α_B + α₊/√2); they form a
/// diagonal unitary similarity, so λ₋ is unchanged.
///
/// For a single-list Ξ only Λ_A and α_A are used.
pub fn transform_point_set(
    xi: &PointSet,
    frame: &GaussianFrame,
) -> Result<(PointSet, DMatrix<C64>)> {
    frame.check()?;
    let m = frame.modes();
    if xi.modes_a() != m {
        return Err(Error::Dimension(format!(
            "frame acts on {m} modes per party, points have {}",
            xi.modes_a()
        )));
    }
    let n = xi.len();
    let Some(pairing) = xi.pairing() else {
        if frame.has_collective() {
            return invalid("a collective frame needs a paired point set");
        }
        let pts: Vec<Vec<C64>> = (0..n).map(|k| frame.lambda_a.apply(xi.a(k))).collect();
        let out = PointSet::single(pts)?;
        let phases = DMatrix::from_fn(n, n, |j, k| {
            wedge(&sub(out.a(j), out.a(k)), &frame.alpha_a).exp()
        });
        return Ok((out, phases));
    };

    // Local layers must map paired points to paired points.
    let lhs = frame.lambda_b.compose(&pairing.inverse())?;
    let rhs = pairing.inverse().compose(&frame.lambda_a)?;
    let mismatch = (lhs.matrix() - rhs.matrix())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if mismatch > 1e-10 {
        return invalid(format!(
            "local maps do not respect the pairing (mismatch {mismatch:.3e})"
        ));
    }

    let total = frame.lambda_plus.compose(&frame.lambda_a)?;
    let new_a: Vec<Vec<C64>> = (0..n).map(|k| total.apply(xi.a(k))).collect();
    let out = PointSet::paired(new_a, pairing.clone())?;

    let h = std::f64::consts::FRAC_1_SQRT_2;
    let half_plus: Vec<C64> = frame.alpha_plus.iter().map(|z| z * h).collect();
    let lp = &frame.lambda_plus;
    let alpha_a: Vec<C64> = lp
        .apply(&frame.alpha_a)
        .iter()
        .zip(&half_plus)
        .map(|(a, b)| a + b)
        .collect();
    let lambda_alpha_b = lp.apply(&pairing.apply(&frame.alpha_b));
    let pre_b: Vec<C64> = lambda_alpha_b
        .iter()
        .zip(&half_plus)
        .map(|(a, b)| a + b)
        .collect();
    let alpha_b = pairing.inverse().apply(&pre_b);

    let phases = DMatrix::from_fn(n, n, |j, k| {
        let da = sub(out.a(j), out.a(k));
        let db = sub(out.b(j), out.b(k));
        (wedge(&da, &alpha_a) + wedge(&db, &alpha_b)).exp()
    });
    Ok((out, phases))
}
