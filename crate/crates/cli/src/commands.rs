use std::path::Path;

use ecdwit_core::families::{heuristic_init, single_mode_reduction};
use ecdwit_core::measures::{e_ppt, e_sep};
use ecdwit_core::noise::{apply_loss, LossChannel};
use ecdwit_core::optimizer::optimize;
use ecdwit_core::output::Csv;
use ecdwit_core::phase_space::{negativity_volume, wigner_grid};
use ecdwit_core::points::PointSetRecord;
use ecdwit_core::shot::{assemble_measured_witness, records_to_jsonl, sample, MeasurementPlan};
use ecdwit_core::witness::{build_witness, evaluate};
use ecdwit_core::{make_state, PointSet, State, StateSpec};
use serde_json::{json, Value};

use crate::config::{PointsSource, RunConfig};
use crate::error::CliError;
use crate::Context;

pub fn build_state(spec: &StateSpec, cutoff: Option<usize>, eta: f64) -> Result<State, CliError> {
    let s = make_state(spec, cutoff)?;
    if eta == 0.0 {
        return Ok(s);
    }
    Ok(apply_loss(&s, &LossChannel::uniform(eta, s.num_modes())?)?)
}

pub fn state_summary(cfg: &RunConfig, state: &State) -> Value {
    json!({
        "family": cfg.state.label(),
        "spec": cfg.state,
        "eta": cfg.noise.eta,
        "cutoffs": state.space().cutoffs(),
        "pure": state.is_pure(),
        "tail_mass": state.tail_mass(),
    })
}

/// Ξ from the configured source, plus an optional optimisation summary.
fn resolve_points(cfg: &RunConfig, state: &State) -> Result<(PointSet, Option<Value>), CliError> {
    match cfg.points.source {
        PointsSource::Paper => Ok((heuristic_init(&cfg.state, state, cfg.points.n)?, None)),
        PointsSource::File => {
            let path = cfg.points.path.as_ref().expect("validated");
            Ok((read_points(path)?, None))
        }
        PointsSource::Optimize => {
            let init = heuristic_init(&cfg.state, state, cfg.points.n)?;
            let o = optimize(state, &init, &cfg.optimizer)?;
            let summary = json!({
                "iterations": o.trace.rows.len().saturating_sub(1),
                "converged": o.trace.converged,
                "restart": o.trace.restart,
            });
            Ok((o.points, Some(summary)))
        }
    }
}

pub fn read_points(path: &Path) -> Result<PointSet, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let rec: PointSetRecord = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    PointSet::from_record(&rec).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn check_points(points: &PointSet, state: &State) -> Result<(), CliError> {
    if points.total_modes() != state.num_modes() {
        return Err(CliError::Config(format!(
            "point set spans {} modes, state has {}",
            points.total_modes(),
            state.num_modes()
        )));
    }
    Ok(())
}

pub fn witness(cfg: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    let state = build_state(&cfg.state, cfg.cutoff, cfg.noise.eta)?;
    let (points, opt) = resolve_points(cfg, &state)?;
    check_points(&points, &state)?;
    let m = build_witness(&state, &points)?;
    let result = evaluate(&m)?;
    let mut csv = Csv::new(&["j", "k", "re", "im"]);
    for j in 0..m.n() {
        for k in 0..m.n() {
            let z = m.entries[(j, k)];
            csv.push(vec![j.into(), k.into(), z.re.into(), z.im.into()]);
        }
    }
    ctx.write("witness_matrix.csv", &csv.render())?;
    ctx.write_json(
        "witness.json",
        &json!({
            "metadata": ctx.metadata("witness", cfg),
            "state": state_summary(cfg, &state),
            "optimization": opt,
            "points": points.to_record(),
            "result": result,
            "matrix": m.to_record(),
        }),
    )
}

pub fn optimize_cmd(cfg: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    let state = build_state(&cfg.state, cfg.cutoff, cfg.noise.eta)?;
    let init = match cfg.points.source {
        PointsSource::File => read_points(cfg.points.path.as_ref().expect("validated"))?,
        _ => heuristic_init(&cfg.state, &state, cfg.points.n)?,
    };
    check_points(&init, &state)?;
    let o = optimize(&state, &init, &cfg.optimizer)?;
    ctx.write_json(
        "points.json",
        &serde_json::to_value(o.points.to_record()).expect("record serialises"),
    )?;
    ctx.write("trace.csv", &o.trace.to_csv())?;
    ctx.write_json(
        "optimize.json",
        &json!({
            "metadata": ctx.metadata("optimize", cfg),
            "state": state_summary(cfg, &state),
            "initial": evaluate(&build_witness(&state, &init)?)?,
            "result": o.result,
            "iterations": o.trace.rows.len().saturating_sub(1),
            "converged": o.trace.converged,
            "restart": o.trace.restart,
            "max_displacement": o.points.max_displacement(),
        }),
    )
}

pub fn measure(cfg: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    let state = build_state(&cfg.state, cfg.cutoff, cfg.noise.eta)?;
    let (points, opt) = resolve_points(cfg, &state)?;
    check_points(&points, &state)?;
    let s = &cfg.shots;
    let plan =
        MeasurementPlan::for_points(&points, s.layout, s.shots, s.confidence, ctx.seed, s.dedup)?;
    let records = sample(&plan, &state)?;
    let m = assemble_measured_witness(&records, &plan)?;
    let result = evaluate(&m)?;
    let exact = evaluate(&build_witness(&state, &points)?)?;
    ctx.write("records.jsonl", &records_to_jsonl(&records))?;
    ctx.write_json(
        "measure.json",
        &json!({
            "metadata": ctx.metadata("measure", cfg),
            "state": state_summary(cfg, &state),
            "optimization": opt,
            "points": points.to_record(),
            "settings": plan.setting_count(),
            "nominal_settings": plan.nominal_setting_count(),
            "radius": plan.radius(),
            "result": result,
            "exact": exact,
            "matrix": m.to_record(),
        }),
    )
}

pub fn state_info(cfg: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    let state = build_state(&cfg.state, cfg.cutoff, cfg.noise.eta)?;
    let mm = state.num_modes();
    let rho = state.to_density();
    let mut info = json!({
        "metadata": ctx.metadata("state-info", cfg),
        "state": state_summary(cfg, &state),
        "modes": mm,
        "dim": state.space().dim(),
        "trace": state.trace(),
        "purity": rho.purity(),
        "mean_photons": state.mean_photons(),
    });
    if mm == 2 {
        info["E_PPT"] = serde_json::to_value(e_ppt(&state, 1)?).expect("serialises");
        if let Some(p) = state.as_pure() {
            info["E_SEP"] = json!(e_sep(p, 1)?);
        }
    }
    // 𝒩_V directly on one mode, through the one-mode reduction for the families
    let nv_state = match mm {
        1 => Some((state.clone(), cfg.grid.clone())),
        _ => single_mode_reduction(&cfg.state, cfg.noise.eta, None)?.map(|r| (r.state, r.grid)),
    };
    if let Some((s, grid)) = nv_state {
        let nv = negativity_volume(&s, &grid)?;
        info["N_V"] = serde_json::to_value(&nv).expect("serialises");
        if mm == 1 {
            ctx.write("wigner.csv", &wigner_grid(&s, &grid)?.to_csv())?;
        }
    }
    ctx.write_json("state_info.json", &info)
}
