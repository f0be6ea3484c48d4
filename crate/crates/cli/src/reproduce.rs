//! Figure data: one CSV per panel, rows in sweep order.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use clap::ValueEnum;
use ecdwit_core::families::{
    cat_points, fock_points, heuristic_init, lattice_points, ps_tmsv_points, single_mode_reduction,
};
use ecdwit_core::measures::{e_ppt, e_sep, n_tr_fock, pt_negativity};
use ecdwit_core::optimizer::{optimize, Optimized};
use ecdwit_core::output::{Cell, Csv};
use ecdwit_core::phase_space::{negativity_volume, ntr_lower_bound};
use ecdwit_core::witness::certify_exact;
use ecdwit_core::{PointSet, State, StateSpec, C64};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::commands::build_state;
use crate::config::{RunConfig, Sweep};
use crate::error::CliError;
use crate::Context;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

impl Figure {
    fn name(self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
        }
    }

    pub fn default_sweep(self) -> Sweep {
        match self {
            Figure::Fig2 => Sweep {
                start: 0.0,
                stop: FRAC_PI_2,
                points: 51,
            },
            Figure::Fig3 => Sweep {
                start: 0.0,
                stop: 1.5,
                points: 16,
            },
            Figure::Fig4 => Sweep {
                start: 0.1,
                stop: 4.0,
                points: 40,
            },
            Figure::Fig5 => Sweep {
                start: 0.0,
                stop: 0.5,
                points: 11,
            },
        }
    }
}

type Row = Vec<Cell>;

/// Evaluate `f` on every sweep value in parallel; rows keep sweep order.
fn sweep_rows(
    values: &[f64],
    f: impl Fn(f64) -> Result<Row, CliError> + Sync,
) -> Result<Vec<Row>, CliError> {
    values.par_iter().map(|&x| f(x)).collect()
}

fn table(header: &[&str], rows: Vec<Row>) -> String {
    let mut t = Csv::new(header);
    rows.into_iter().for_each(|r| t.push(r));
    t.render()
}

fn value(state: &State, points: &PointSet) -> Result<f64, CliError> {
    Ok(certify_exact(state, points)?.value)
}

/// 𝒩_V of a family member through its one-mode reduction.
fn family_nv(spec: &StateSpec, eta: f64) -> Result<(f64, f64), CliError> {
    let red = single_mode_reduction(spec, eta, None)?.expect("example family");
    let nv = negativity_volume(&red.state, &red.grid)?.value;
    Ok((nv, ntr_lower_bound(&red.state)?))
}

fn pure_measures(state: &State) -> Result<(f64, f64), CliError> {
    let p = state.as_pure().expect("lossless family states are pure");
    Ok((e_sep(p, 1)?, e_ppt(state, 1)?.value))
}

pub fn run(fig: Figure, cfg: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    let sweep = cfg
        .reproduce
        .sweep
        .clone()
        .unwrap_or_else(|| fig.default_sweep());
    let xs = sweep.values();
    let outputs: Vec<(String, String)> = match fig {
        Figure::Fig2 => vec![("fig2.csv".into(), fig2(&xs, cfg)?)],
        Figure::Fig3 => vec![("fig3.csv".into(), fig3(&xs, cfg)?)],
        Figure::Fig4 => vec![("fig4.csv".into(), fig4(&xs, cfg)?)],
        Figure::Fig5 => {
            let a = fig5(&StateSpec::FockBell { theta: FRAC_PI_4 }, &xs, cfg)?;
            let b = fig5(
                &StateSpec::Cat2 {
                    beta: C64::new(2.0, 0.0),
                },
                &xs,
                cfg,
            )?;
            vec![("fig5a.csv".into(), a), ("fig5b.csv".into(), b)]
        }
    };
    for (name, text) in &outputs {
        ctx.write(name, text)?;
    }
    ctx.write_json(
        &format!("{}.json", fig.name()),
        &json!({
            "metadata": ctx.metadata("reproduce", cfg),
            "figure": fig,
            "sweep": sweep,
            "files": outputs.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
        }),
    )
}

/// Single-photon family against θ; the second ℰ_C column uses an optimised
/// point set of size `large_n`.
fn fig2(xs: &[f64], cfg: &RunConfig) -> Result<String, CliError> {
    let large = cfg.reproduce.large_n;
    let (nv, _) = family_nv(&StateSpec::FockBell { theta: FRAC_PI_4 }, 0.0)?;
    let rows = sweep_rows(xs, |theta| {
        let spec = StateSpec::FockBell { theta };
        let s = build_state(&spec, cfg.cutoff, 0.0)?;
        let p4 = fock_points(theta);
        let (sep, ppt) = pure_measures(&s)?;
        let mut row: Row = vec![theta.into(), value(&s, &p4)?.into()];
        let mut disp_large = None;
        if large > 0 {
            let o = optimize(&s, &heuristic_init(&spec, &s, large)?, &cfg.optimizer)?;
            row.push(o.result.value.into());
            disp_large = Some(o.points.max_displacement());
        }
        row.extend([
            nv.into(),
            n_tr_fock().into(),
            sep.into(),
            ppt.into(),
            p4.max_displacement().into(),
        ]);
        row.extend(disp_large.map(Cell::from));
        Ok(row)
    })?;
    let (ec_large, disp_large) = (format!("E_C_N{large}"), format!("max_disp_N{large}"));
    let mut header = vec!["theta", "E_C_N4"];
    if large > 0 {
        header.push(&ec_large);
    }
    header.extend(["N_V", "N_tr", "E_SEP", "E_PPT", "max_disp_N4"]);
    if large > 0 {
        header.push(&disp_large);
    }
    Ok(table(&header, rows))
}

/// Photon-subtracted squeezed vacua against r.
fn fig3(xs: &[f64], cfg: &RunConfig) -> Result<String, CliError> {
    let rows = sweep_rows(xs, |r| {
        let spec = StateSpec::PsTmsv { r };
        let s = build_state(&spec, cfg.cutoff, 0.0)?;
        let p = ps_tmsv_points(r)?;
        let (nv, ntr) = family_nv(&spec, 0.0)?;
        let (sep, ppt) = pure_measures(&s)?;
        Ok(vec![
            r.into(),
            value(&s, &p)?.into(),
            nv.into(),
            ntr.into(),
            sep.into(),
            ppt.into(),
            p.max_displacement().into(),
        ])
    })?;
    Ok(table(
        &[
            "r",
            "E_C_N4",
            "N_V",
            "N_tr_lower",
            "E_SEP",
            "E_PPT",
            "max_disp_N4",
        ],
        rows,
    ))
}

/// Entangled cats against real β.
fn fig4(xs: &[f64], cfg: &RunConfig) -> Result<String, CliError> {
    let rows = sweep_rows(xs, |b| {
        let beta = C64::new(b, 0.0);
        let spec = StateSpec::Cat2 { beta };
        let s = build_state(&spec, cfg.cutoff, 0.0)?;
        let p = cat_points(beta)?;
        let (nv, ntr) = family_nv(&spec, 0.0)?;
        let (sep, ppt) = pure_measures(&s)?;
        Ok(vec![
            b.into(),
            value(&s, &p)?.into(),
            nv.into(),
            ntr.into(),
            sep.into(),
            ppt.into(),
            p.max_displacement().into(),
        ])
    })?;
    Ok(table(
        &[
            "beta",
            "E_C_N4",
            "N_V",
            "N_tr_lower",
            "E_SEP",
            "E_PPT",
            "max_disp_N4",
        ],
        rows,
    ))
}

/// Re-optimised Ξ for a noisy state: the better of descents started from the
/// naive points and, when enabled, from a lattice.
fn reoptimize(state: &State, naive: &PointSet, cfg: &RunConfig) -> Result<Optimized, CliError> {
    let mut best = optimize(state, naive, &cfg.optimizer)?;
    let side = cfg.reproduce.lattice_side;
    if side >= 2 {
        let nbar: f64 = state.mean_photons().iter().sum();
        let spacing = 6.0 / (side as f64 * (nbar + 1.0).sqrt());
        let o = optimize(state, &lattice_points(side, spacing, true)?, &cfg.optimizer)?;
        if o.result.lambda_min < best.result.lambda_min {
            best = o;
        }
    }
    Ok(best)
}

/// Loss sweep with the lossless optimum reused (naive) and re-optimised per η.
fn fig5(spec: &StateSpec, xs: &[f64], cfg: &RunConfig) -> Result<String, CliError> {
    let s0 = build_state(spec, cfg.cutoff, 0.0)?;
    let naive = optimize(
        &s0,
        &heuristic_init(spec, &s0, cfg.reproduce.noisy_n)?,
        &cfg.optimizer,
    )?
    .points;
    let rows = sweep_rows(xs, |eta| {
        let s = build_state(spec, cfg.cutoff, eta)?;
        let re = reoptimize(&s, &naive, cfg)?;
        let (nv, ntr) = family_nv(spec, eta)?;
        let ppt = if s.is_pure() {
            e_ppt(&s, 1)?.value
        } else {
            pt_negativity(&s, 1)?
        };
        Ok(vec![
            eta.into(),
            value(&s, &naive)?.into(),
            naive.max_displacement().into(),
            re.result.value.into(),
            re.points.max_displacement().into(),
            nv.into(),
            ntr.into(),
            ppt.into(),
        ])
    })?;
    Ok(table(
        &[
            "eta",
            "E_C_naive",
            "max_disp_naive",
            "E_C_reopt",
            "max_disp_reopt",
            "N_V",
            "N_tr_lower",
            "E_PPT",
        ],
        rows,
    ))
}
