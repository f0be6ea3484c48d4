//! Reference entanglement and negativity measures for two-party states.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::{hermitian_eigenvalues, partial_transpose, PureState, State, C64};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SchmidtSpectrum {
    /// Descending, summing to one.
    pub coefficients: Vec<f64>,
}

/// Schmidt coefficients of a pure state across (first `modes_a` modes | rest).
pub fn schmidt(psi: &PureState, modes_a: usize) -> Result<SchmidtSpectrum> {
    let space = psi.space();
    if modes_a == 0 || modes_a >= space.num_modes() {
        return invalid("bipartition must leave modes on both sides");
    }
    let rows: usize = space.cutoffs()[..modes_a].iter().product();
    let cols = space.dim() / rows;
    // row-major basis ordering: index = row * cols + col
    let m = DMatrix::from_fn(rows, cols, |r, c| psi.amplitudes()[r * cols + c]);
    let mut p: Vec<f64> = m.singular_values().iter().map(|s| s * s).collect();
    p.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    Ok(SchmidtSpectrum { coefficients: p })
}

/// ℰ_SEP(|ψ⟩) = 2√(1 − max_k p_k).
pub fn e_sep(psi: &PureState, modes_a: usize) -> Result<f64> {
    let s = schmidt(psi, modes_a)?;
    Ok(2.0 * (1.0 - s.coefficients[0]).max(0.0).sqrt())
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PptValue {
    pub value: f64,
    /// True when computed as tr|ρ^{T_B}| − 1 for a mixed state, whose
    /// equality with ℰ_PPT is conjectured.
    pub conjectured: bool,
    pub label: String,
}

/// (Σ_k √p_k)² − 1 for pure states; tr|ρ^{T_B}| − 1 otherwise.
pub fn e_ppt(state: &State, modes_a: usize) -> Result<PptValue> {
    match state {
        State::Pure(p) => {
            let s = schmidt(p, modes_a)?;
            let r: f64 = s.coefficients.iter().map(|x| x.max(0.0).sqrt()).sum();
            Ok(PptValue {
                value: (r * r - 1.0).max(0.0),
                conjectured: false,
                label: "E_PPT".into(),
            })
        }
        State::Mixed(_) => Ok(PptValue {
            value: pt_negativity(state, modes_a)?,
            conjectured: true,
            label: "PT negativity (conjectured E_PPT)".into(),
        }),
    }
}

/// tr|ρ^{T_B}| − 1 with B the modes from `modes_a` on.
pub fn pt_negativity(state: &State, modes_a: usize) -> Result<f64> {
    let mm = state.num_modes();
    if modes_a == 0 || modes_a >= mm {
        return invalid("bipartition must leave modes on both sides");
    }
    let rho = state.to_density();
    let b: Vec<usize> = (modes_a..mm).collect();
    let pt: DMatrix<C64> = partial_transpose(&rho, &b)?;
    let ev = hermitian_eigenvalues(&pt);
    if ev.iter().any(|x| !x.is_finite()) {
        return Err(Error::Truncation(
            "partial transpose spectrum not finite".into(),
        ));
    }
    Ok((ev.iter().map(|x| x.abs()).sum::<f64>() - 1.0).max(0.0))
}

/// Trace-distance Wigner negativity of the single-photon family, which is 1.
pub fn n_tr_fock() -> f64 {
    1.0
}
