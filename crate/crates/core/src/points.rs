//! The phase-space point set Ξ that defines a witness instance.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::C64;
use crate::symplectic::SymplecticMap;

/// Ξ = {ξ_k} (single list, for the negativity witness C) or
/// Ξ = {(ξ_k^A, ξ_k^B)} with (ξ^A, ξ^A*) = Λ(ξ^B, ξ^B*) for one fixed Λ.
#[derive(Clone, Debug)]
pub struct PointSet {
    a: Vec<Vec<C64>>,
    b: Vec<Vec<C64>>,
    pairing: Option<SymplecticMap>,
}

fn check_dims(points: &[Vec<C64>]) -> Result<usize> {
    let m = points.first().map_or(0, |p| p.len());
    if points.iter().any(|p| p.len() != m) {
        return Err(Error::Dimension(
            "all points need the same number of modes".into(),
        ));
    }
    if points
        .iter()
        .flatten()
        .any(|z| !(z.re.is_finite() && z.im.is_finite()))
    {
        return invalid("phase-space points must be finite");
    }
    Ok(m)
}

impl PointSet {
    pub fn single(points: Vec<Vec<C64>>) -> Result<Self> {
        check_dims(&points)?;
        Ok(Self {
            a: points,
            b: Vec::new(),
            pairing: None,
        })
    }

    /// One-mode single list.
    pub fn single_mode(points: &[C64]) -> Result<Self> {
        Self::single(points.iter().map(|&z| vec![z]).collect())
    }

    pub fn paired(a: Vec<Vec<C64>>, pairing: SymplecticMap) -> Result<Self> {
        let m = check_dims(&a)?;
        if !a.is_empty() && m != pairing.modes() {
            return Err(Error::Dimension(format!(
                "pairing acts on {} modes, points have {m}",
                pairing.modes()
            )));
        }
        let inv = pairing.inverse();
        let b = a.iter().map(|p| inv.apply(p)).collect();
        Ok(Self {
            a,
            b,
            pairing: Some(pairing),
        })
    }

    /// The shorthand Ξ = {ξ_k} for paired points with ξ^A = ξ^B.
    pub fn diagonal(points: Vec<Vec<C64>>) -> Result<Self> {
        let m = check_dims(&points)?;
        Self::paired(points, SymplecticMap::identity(m.max(1)))
    }

    pub fn diagonal_one_mode(points: &[C64]) -> Result<Self> {
        Self::diagonal(points.iter().map(|&z| vec![z]).collect())
    }

    /// Same structure with new A-side points (B recomputed from the pairing).
    pub fn with_a(&self, a: Vec<Vec<C64>>) -> Result<Self> {
        match &self.pairing {
            Some(l) => Self::paired(a, l.clone()),
            None => Self::single(a),
        }
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn is_paired(&self) -> bool {
        self.pairing.is_some()
    }

    pub fn pairing(&self) -> Option<&SymplecticMap> {
        self.pairing.as_ref()
    }

    pub fn modes_a(&self) -> usize {
        match (&self.pairing, self.a.first()) {
            (Some(l), _) => l.modes(),
            (None, Some(p)) => p.len(),
            (None, None) => 0,
        }
    }

    pub fn modes_b(&self) -> usize {
        self.pairing.as_ref().map_or(0, |l| l.modes())
    }

    pub fn total_modes(&self) -> usize {
        self.modes_a() + self.modes_b()
    }

    pub fn a(&self, k: usize) -> &[C64] {
        &self.a[k]
    }

    pub fn b(&self, k: usize) -> &[C64] {
        if self.pairing.is_some() {
            &self.b[k]
        } else {
            &[]
        }
    }

    pub fn a_points(&self) -> &[Vec<C64>] {
        &self.a
    }

    /// Concatenated (ξ^A, ξ^B) for point k.
    pub fn joint(&self, k: usize) -> Vec<C64> {
        let mut v = self.a[k].clone();
        v.extend_from_slice(self.b(k));
        v
    }

    /// Largest violation of the stored pairing.
    pub fn pairing_residual(&self) -> f64 {
        let Some(l) = &self.pairing else { return 0.0 };
        self.a
            .iter()
            .zip(&self.b)
            .flat_map(|(pa, pb)| {
                l.apply(pb)
                    .into_iter()
                    .zip(pa.iter())
                    .map(|(x, y)| (x - y).norm())
            })
            .fold(0.0, f64::max)
    }

    /// Largest displacement magnitude any ECD gate needs: max over j<k and
    /// parties of the Euclidean norm of ξ_j − ξ_k.
    pub fn max_displacement(&self) -> f64 {
        let n = self.len();
        let norm = |x: &[C64], y: &[C64]| {
            x.iter()
                .zip(y)
                .map(|(u, v)| (u - v).norm_sqr())
                .sum::<f64>()
                .sqrt()
        };
        let mut best = 0.0f64;
        for j in 0..n {
            for k in j + 1..n {
                best = best.max(norm(self.a(j), self.a(k)));
                if self.is_paired() {
                    best = best.max(norm(self.b(j), self.b(k)));
                }
            }
        }
        best
    }

    pub fn to_record(&self) -> PointSetRecord {
        let points = (0..self.len())
            .map(|k| {
                (0..self.modes_a())
                    .map(|m| PointRecord {
                        re_a: self.a[k][m].re,
                        im_a: self.a[k][m].im,
                        re_b: self.pairing.as_ref().map(|_| self.b[k][m].re),
                        im_b: self.pairing.as_ref().map(|_| self.b[k][m].im),
                    })
                    .collect()
            })
            .collect();
        PointSetRecord {
            pairing: self.pairing.clone(),
            points,
        }
    }

    /// Rebuild from a record. B-side entries, when present, must agree with
    /// the pairing to 1e−10.
    pub fn from_record(rec: &PointSetRecord) -> Result<Self> {
        let a: Vec<Vec<C64>> = rec
            .points
            .iter()
            .map(|p| p.iter().map(|r| C64::new(r.re_a, r.im_a)).collect())
            .collect();
        let set = match &rec.pairing {
            Some(l) => Self::paired(a, l.clone())?,
            None => Self::single(a)?,
        };
        if set.is_paired() {
            for (k, p) in rec.points.iter().enumerate() {
                for (m, r) in p.iter().enumerate() {
                    if let (Some(re), Some(im)) = (r.re_b, r.im_b) {
                        if (C64::new(re, im) - set.b[k][m]).norm() > 1e-10 {
                            return invalid(format!(
                                "point {k} mode {m}: B side violates the pairing"
                            ));
                        }
                    }
                }
            }
        }
        Ok(set)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PointRecord {
    #[serde(rename = "re_A")]
    pub re_a: f64,
    #[serde(rename = "im_A")]
    pub im_a: f64,
    #[serde(rename = "re_B", default, skip_serializing_if = "Option::is_none")]
    pub re_b: Option<f64>,
    #[serde(rename = "im_B", default, skip_serializing_if = "Option::is_none")]
    pub im_b: Option<f64>,
}

/// JSON form: `{"pairing": Λ | null, "points": [[{re_A, im_A, re_B, im_B} per mode] per point]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PointSetRecord {
    pub pairing: Option<SymplecticMap>,
    pub points: Vec<Vec<PointRecord>>,
}
