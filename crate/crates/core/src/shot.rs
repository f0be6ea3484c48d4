//! Finite-shot simulation of qubit-mediated ECD readout.
//!
//! Layout `Chained`: one qubit, ECD gates on A then B; ⟨σx⟩ + i⟨σy⟩ equals
//! tr[ρ D_A(δ^A) D_B(δ^B)] for gate arguments (−δ^A, δ^B), the sign flip on A
//! coming from the phase accumulated by chaining two echoed gates.
//!
//! Layout `Local`: one qubit per party. With L = (σx + iσy)/2 on each qubit,
//! ⟨L_A L_B⟩ = z₊/4 and ⟨L_A L_B†⟩ = z₋/4, z± = tr[ρ D_A(δ^A) D_B(±δ^B)], so the
//! four correlators ⟨σ_a σ_b⟩ determine z₊ = ⟨xx⟩ − ⟨yy⟩ + i(⟨xy⟩ + ⟨yx⟩).

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::{State, C64};
use crate::points::PointSet;
use crate::witness::{measured_matrix, CharFnEvaluator, WitnessKind, WitnessMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    Chained,
    Local,
}

impl Layout {
    pub fn qubits(self) -> usize {
        match self {
            Layout::Chained => 1,
            Layout::Local => 2,
        }
    }

    pub fn bases(self) -> &'static [&'static str] {
        match self {
            Layout::Chained => &["x", "y"],
            Layout::Local => &["xx", "xy", "yx", "yy"],
        }
    }
}

/// Ideal qubit expectations for one displacement setting, keyed by basis label.
pub fn ecd_expectations(
    eval: &CharFnEvaluator,
    delta_a: &[C64],
    delta_b: &[C64],
    layout: Layout,
) -> Result<Vec<(String, f64)>> {
    let joint = |sign: f64| -> Vec<C64> {
        delta_a
            .iter()
            .copied()
            .chain(delta_b.iter().map(|z| z * sign))
            .collect()
    };
    Ok(match layout {
        Layout::Chained => {
            let z = eval.value(&joint(1.0))?;
            vec![("x".into(), z.re), ("y".into(), z.im)]
        }
        Layout::Local => {
            if delta_b.is_empty() {
                return invalid("the two-qubit layout needs a B party");
            }
            let zp = eval.value(&joint(1.0))?;
            let zm = eval.value(&joint(-1.0))?;
            vec![
                ("xx".into(), 0.5 * (zp.re + zm.re)),
                ("xy".into(), 0.5 * (zp.im - zm.im)),
                ("yx".into(), 0.5 * (zp.im + zm.im)),
                ("yy".into(), 0.5 * (zm.re - zp.re)),
            ]
        }
    })
}

/// Gate arguments actually programmed on the hardware for a setting.
pub fn gate_arguments(delta_a: &[C64], delta_b: &[C64], layout: Layout) -> (Vec<C64>, Vec<C64>) {
    match layout {
        Layout::Chained => (delta_a.iter().map(|z| -z).collect(), delta_b.to_vec()),
        Layout::Local => (delta_a.to_vec(), delta_b.to_vec()),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Setting {
    pub id: usize,
    /// Matrix entry (j, k), j < k, this setting serves.
    pub pair: (usize, usize),
    pub basis: String,
    pub delta_a: Vec<C64>,
    pub delta_b: Vec<C64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MeasurementPlan {
    pub layout: Layout,
    pub kind: WitnessKind,
    pub n: usize,
    pub shots: u64,
    pub confidence: f64,
    pub seed: u64,
    pub settings: Vec<Setting>,
    /// Entries (j, k) served by each distinct displacement, with a flag for
    /// conjugation; identical to `settings` order when not deduplicated.
    pub entry_map: Vec<((usize, usize), usize, bool)>,
}

/// n_q · N(N−1), the setting count before any symmetry reduction.
pub fn nominal_setting_count(n: usize, layout: Layout) -> usize {
    layout.qubits() * n * (n.saturating_sub(1))
}

fn key(v: &[C64]) -> Vec<(i64, i64)> {
    v.iter()
        .map(|z| ((z.re * 1e10).round() as i64, (z.im * 1e10).round() as i64))
        .collect()
}

impl MeasurementPlan {
    /// One setting per basis and pair j < k. With `dedup`, pairs whose joint
    /// difference equals ± that of an earlier pair reuse its settings.
    pub fn for_points(
        points: &PointSet,
        layout: Layout,
        shots: u64,
        confidence: f64,
        seed: u64,
        dedup: bool,
    ) -> Result<Self> {
        if shots == 0 {
            return invalid("shots must be at least 1");
        }
        if !(confidence > 0.0 && confidence < 1.0) {
            return invalid("confidence must lie in (0, 1)");
        }
        if layout == Layout::Local && !points.is_paired() {
            return invalid("the two-qubit layout needs a paired point set");
        }
        let n = points.len();
        let ma = points.modes_a();
        let mut settings = Vec::new();
        let mut entry_map = Vec::new();
        let mut seen: HashMap<Vec<(i64, i64)>, usize> = HashMap::new();
        for j in 0..n {
            for k in j + 1..n {
                let a = points.joint(j);
                let b = points.joint(k);
                let delta: Vec<C64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
                if dedup {
                    let neg: Vec<C64> = delta.iter().map(|z| -z).collect();
                    if let Some(&first) = seen.get(&key(&delta)) {
                        entry_map.push(((j, k), first, false));
                        continue;
                    }
                    if let Some(&first) = seen.get(&key(&neg)) {
                        entry_map.push(((j, k), first, true));
                        continue;
                    }
                }
                let first = settings.len();
                seen.insert(key(&delta), first);
                for basis in layout.bases() {
                    settings.push(Setting {
                        id: settings.len(),
                        pair: (j, k),
                        basis: basis.to_string(),
                        delta_a: delta[..ma].to_vec(),
                        delta_b: delta[ma..].to_vec(),
                    });
                }
                entry_map.push(((j, k), first, false));
            }
        }
        let kind = if points.is_paired() {
            WitnessKind::C2
        } else {
            WitnessKind::C
        };
        Ok(Self {
            layout,
            kind,
            n,
            shots,
            confidence,
            seed,
            settings,
            entry_map,
        })
    }

    /// Settings actually run (2 n_q per distinct displacement).
    pub fn setting_count(&self) -> usize {
        self.settings.len()
    }

    pub fn nominal_setting_count(&self) -> usize {
        nominal_setting_count(self.n, self.layout)
    }

    /// Half-width on a ±1 sample mean: twice the frequency bound.
    pub fn radius(&self) -> f64 {
        2.0 * hoeffding_radius(self.shots, self.confidence)
    }
}

/// √(ln(2/(1−conf)) / (2·shots)), the bound on the +1 frequency.
pub fn hoeffding_radius(shots: u64, confidence: f64) -> f64 {
    ((2.0 / (1.0 - confidence)).ln() / (2.0 * shots as f64)).sqrt()
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MeasurementRecord {
    pub setting: usize,
    pub basis: String,
    pub shots: u64,
    pub plus_count: u64,
    pub estimator: f64,
    pub radius: f64,
}

/// Outcome sampling with an independent ChaCha stream per setting id.
pub fn sample(plan: &MeasurementPlan, state: &State) -> Result<Vec<MeasurementRecord>> {
    let eval = CharFnEvaluator::new(state);
    let radius = plan.radius();
    plan.settings
        .par_iter()
        .map(|s| {
            let ideal = ecd_expectations(&eval, &s.delta_a, &s.delta_b, plan.layout)?;
            let e = ideal
                .iter()
                .find(|(b, _)| *b == s.basis)
                .map(|x| x.1)
                .expect("basis of layout");
            let p = (0.5 * (1.0 + e)).clamp(0.0, 1.0);
            let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
            rng.set_stream(s.id as u64);
            let plus = Binomial::new(plan.shots, p)
                .expect("valid probability")
                .sample(&mut rng);
            Ok(MeasurementRecord {
                setting: s.id,
                basis: s.basis.clone(),
                shots: plan.shots,
                plus_count: plus,
                estimator: (2.0 * plus as f64 - plan.shots as f64) / plan.shots as f64,
                radius,
            })
        })
        .collect()
}

/// Infinite-shot records: estimators equal the ideal expectations, radius 0.
pub fn ideal_records(plan: &MeasurementPlan, state: &State) -> Result<Vec<MeasurementRecord>> {
    let eval = CharFnEvaluator::new(state);
    plan.settings
        .iter()
        .map(|s| {
            let ideal = ecd_expectations(&eval, &s.delta_a, &s.delta_b, plan.layout)?;
            let e = ideal
                .iter()
                .find(|(b, _)| *b == s.basis)
                .map(|x| x.1)
                .expect("basis of layout");
            Ok(MeasurementRecord {
                setting: s.id,
                basis: s.basis.clone(),
                shots: 0,
                plus_count: 0,
                estimator: e,
                radius: 0.0,
            })
        })
        .collect()
}

/// Estimate of tr[ρ D D] for the setting group starting at `first`, and its radius.
fn combine(
    plan: &MeasurementPlan,
    by_id: &HashMap<usize, &MeasurementRecord>,
    first: usize,
) -> Result<(C64, f64)> {
    let bases = plan.layout.bases();
    let mut est = Vec::with_capacity(bases.len());
    for o in 0..bases.len() {
        let id = first + o;
        let s = &plan.settings[id];
        let r = by_id
            .get(&id)
            .ok_or(Error::MissingSetting(s.pair.0, s.pair.1))?;
        if r.basis != s.basis {
            return invalid(format!(
                "record for setting {id} has basis {}, expected {}",
                r.basis, s.basis
            ));
        }
        est.push((r.estimator, r.radius));
    }
    Ok(match plan.layout {
        Layout::Chained => {
            let (x, rx) = est[0];
            let (y, ry) = est[1];
            (C64::new(x, y), rx.hypot(ry))
        }
        Layout::Local => {
            let (xx, rxx) = est[0];
            let (xy, rxy) = est[1];
            let (yx, ryx) = est[2];
            let (yy, ryy) = est[3];
            (C64::new(xx - yy, xy + yx), (rxx + ryy).hypot(rxy + ryx))
        }
    })
}

/// Measured-mode C or C₂ from records: diagonal 1/N, upper triangle from the
/// estimates, lower triangle conjugate-filled.
pub fn assemble_measured_witness(
    records: &[MeasurementRecord],
    plan: &MeasurementPlan,
) -> Result<WitnessMatrix> {
    let by_id: HashMap<usize, &MeasurementRecord> =
        records.iter().map(|r| (r.setting, r)).collect();
    let n = plan.n;
    let mut upper: Vec<Vec<(C64, f64)>> = (0..n.saturating_sub(1))
        .map(|j| vec![(C64::new(0.0, 0.0), 0.0); n - j - 1])
        .collect();
    let mut filled = vec![vec![false; n]; n];
    for &((j, k), first, conj) in &plan.entry_map {
        let (z, r) = combine(plan, &by_id, first)?;
        upper[j][k - j - 1] = (if conj { z.conj() } else { z }, r);
        filled[j][k] = true;
    }
    for (j, row) in filled.iter().enumerate() {
        if let Some(k) = (j + 1..n).find(|&k| !row[k]) {
            return Err(Error::MissingSetting(j, k));
        }
    }
    measured_matrix(n, plan.kind, &upper)
}

/// JSON-lines serialisation of records.
pub fn records_to_jsonl(records: &[MeasurementRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("record serialises") + "\n")
        .collect()
}
