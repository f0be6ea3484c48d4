use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

struct Run {
    code: i32,
    dir: TempDir,
    stderr: String,
}

impl Run {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join("out").join(name)
    }

    fn json(&self, name: &str) -> Value {
        serde_json::from_str(&fs::read_to_string(self.path(name)).unwrap()).unwrap()
    }

    fn text(&self, name: &str) -> String {
        fs::read_to_string(self.path(name)).unwrap()
    }
}

fn ecdwit(args: &[&str], config: Option<&str>) -> Run {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ecdwit"));
    cmd.args(args)
        .arg("--out")
        .arg(&out)
        .args(["--threads", "1"]);
    if let Some(c) = config {
        let p = dir.path().join("config.json");
        fs::write(&p, c).unwrap();
        cmd.arg("--config").arg(&p);
    }
    let o = cmd.output().unwrap();
    Run {
        code: o.status.code().unwrap(),
        dir,
        stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
    }
}

/// Parse a CSV into its header and numeric rows.
fn csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name} in {header:?}"))
}

fn is_printf_e12(s: &str) -> bool {
    let s = s.strip_prefix('-').unwrap_or(s);
    let Some((mant, exp)) = s.split_once('e') else {
        return false;
    };
    let exp_ok = exp.len() >= 3
        && (exp.starts_with('+') || exp.starts_with('-'))
        && exp[1..].chars().all(|c| c.is_ascii_digit());
    mant.len() == 14
        && mant.as_bytes()[1] == b'.'
        && mant
            .chars()
            .filter(|c| *c != '.')
            .all(|c| c.is_ascii_digit())
        && exp_ok
}

#[test]
fn witness_certifies_the_bell_state_by_default() {
    let r = ecdwit(&["witness"], None);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let j = r.json("witness.json");
    assert_eq!(j["result"]["certified"], true);
    assert!((j["result"]["value"].as_f64().unwrap() - 4.793641785882036e-2).abs() < 1e-10);
    assert_eq!(j["metadata"]["config"]["schema"], "ecdwit/1");
    assert_eq!(j["metadata"]["config"]["optimizer"]["gamma"], 0.05);
    let m = r.text("witness_matrix.csv");
    assert!(m.starts_with("j,k,re,im\n"));
    assert_eq!(m.lines().count(), 17);
    for line in m.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert!(is_printf_e12(f[2]) && is_printf_e12(f[3]), "{line}");
    }
}

#[test]
fn witness_examples() {
    let cat = ecdwit(
        &["witness"],
        Some(r#"{"schema": "ecdwit/1", "state": {"family": "cat2", "beta": [2.0, 0.0]}}"#),
    );
    assert_eq!(cat.code, 0, "{}", cat.stderr);
    assert_eq!(cat.json("witness.json")["result"]["certified"], true);

    let vac = ecdwit(
        &["witness"],
        Some(r#"{"schema": "ecdwit/1", "state": {"family": "vacuum", "modes": 2}}"#),
    );
    assert_eq!(vac.code, 0, "{}", vac.stderr);
    assert_eq!(vac.json("witness.json")["result"]["value"], 0.0);

    let theta = 0.1 * std::f64::consts::PI;
    let cfg = format!(
        r#"{{"schema": "ecdwit/1", "state": {{"family": "fock-bell", "theta": {theta}}}}}"#
    );
    let weak = ecdwit(&["witness"], Some(&cfg));
    assert_eq!(weak.code, 0, "not certifying is not an error");
    assert_eq!(weak.json("witness.json")["result"]["certified"], false);
}

#[test]
fn config_errors_exit_with_2() {
    for cfg in [
        r#"{"schema": "ecdwit/0"}"#,
        r#"{"schema": "ecdwit/1", "colour": 1}"#,
        r#"{"schema": "ecdwit/1", "points": {"source": "file"}}"#,
        r#"{"schema": "ecdwit/1", "noise": {"eta": 1.5}}"#,
        r#"{"schema": "ecdwit/1", "optimizer": {"gamma": -1}}"#,
        r#"{"schema": "ecdwit/1", "state": {"family": "fock-bell"}}"#,
        "not json",
    ] {
        let r = ecdwit(&["witness"], Some(cfg));
        assert_eq!(r.code, 2, "{cfg}: {}", r.stderr);
    }
    let missing = Command::new(env!("CARGO_BIN_EXE_ecdwit"))
        .args(["witness", "--config", "/nonexistent.json"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn truncation_failure_exits_with_3() {
    let r = ecdwit(
        &["witness"],
        Some(
            r#"{"schema": "ecdwit/1", "state": {"family": "cat2", "beta": [3.0, 0.0]}, "cutoff": 6}"#,
        ),
    );
    assert_eq!(r.code, 3, "{}", r.stderr);
}

#[test]
fn optimize_is_seeded() {
    let cfg = r#"{"schema": "ecdwit/1", "state": {"family": "fock", "n": [1]}, "points": {"source": "optimize", "n": 4},
                  "optimizer": {"max_iters": 60, "restarts": 3, "jitter": 0.3}}"#;
    let a = ecdwit(&["optimize", "--seed", "1"], Some(cfg));
    let b = ecdwit(&["optimize", "--seed", "1"], Some(cfg));
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert_eq!(a.text("points.json"), b.text("points.json"));
    assert_eq!(a.text("trace.csv"), b.text("trace.csv"));
    assert_eq!(a.json("optimize.json")["metadata"]["seed"], 1);
    assert!(a
        .text("trace.csv")
        .starts_with("iter,lambda_min,grad_norm,step\n"));
}

#[test]
fn optimize_with_zero_iterations_returns_the_start() {
    let cfg = r#"{"schema": "ecdwit/1", "optimizer": {"max_iters": 0, "restarts": 1}}"#;
    let r = ecdwit(&["optimize"], Some(cfg));
    assert_eq!(r.code, 0, "{}", r.stderr);
    let j = r.json("optimize.json");
    assert_eq!(j["initial"]["lambda_min"], j["result"]["lambda_min"]);
    // the file round-trips as a point source
    let pts = r.path("points.json");
    let cfg = format!(
        r#"{{"schema": "ecdwit/1", "points": {{"source": "file", "path": {:?}}}}}"#,
        pts.display().to_string()
    );
    let w = ecdwit(&["witness"], Some(&cfg));
    assert_eq!(w.code, 0, "{}", w.stderr);
    assert_eq!(
        w.json("witness.json")["result"]["lambda_min"],
        j["result"]["lambda_min"]
    );
}

#[test]
fn measure_writes_records_and_a_certified_result() {
    let r = ecdwit(&["measure", "--seed", "7"], None);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let j = r.json("measure.json");
    let lines: Vec<Value> = r
        .text("records.jsonl")
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len() as u64, j["settings"].as_u64().unwrap());
    assert_eq!(j["nominal_settings"], 12);
    assert!(lines.iter().all(|l| l["shots"] == 10_000));
    assert_eq!(j["result"]["certified"], true);
    assert_eq!(j["result"]["mode"], "measured");
}

#[test]
fn state_info_reports_negativity_volume() {
    let r = ecdwit(
        &["state-info"],
        Some(r#"{"schema": "ecdwit/1", "state": {"family": "fock", "n": [1]}}"#),
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let nv = r.json("state_info.json")["N_V"]["value"].as_f64().unwrap();
    assert!((nv - (2.0 * (-0.5f64).exp() - 1.0)).abs() < 1e-4);
    let (header, rows) = csv(&r.text("wigner.csv"));
    assert_eq!(header, ["x0", "p0", "W"]);
    assert!(rows.iter().any(|row| row[2] < 0.0));

    let two = ecdwit(&["state-info"], None);
    let j = two.json("state_info.json");
    assert!((j["E_SEP"].as_f64().unwrap() - 2.0 * std::f64::consts::FRAC_PI_4.sin()).abs() < 1e-10);
    assert!((j["E_PPT"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-10);
}

fn sweep_config(start: f64, stop: f64, points: usize, extra: &str) -> String {
    format!(
        r#"{{"schema": "ecdwit/1", "reproduce": {{"sweep": {{"start": {start}, "stop": {stop}, "points": {points}}}, "large_n": 0{extra}}}}}"#
    )
}

#[test]
fn fig2_threshold_on_the_default_sweep() {
    let r = ecdwit(
        &["reproduce", "fig2"],
        Some(r#"{"schema": "ecdwit/1", "reproduce": {"large_n": 0}}"#),
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let (h, rows) = csv(&r.text("fig2.csv"));
    assert_eq!(
        h,
        [
            "theta",
            "E_C_N4",
            "N_V",
            "N_tr",
            "E_SEP",
            "E_PPT",
            "max_disp_N4"
        ]
    );
    assert_eq!(rows.len(), 51);
    let ec = column(&h, "E_C_N4");
    let first = rows.iter().position(|row| row[ec] > 1e-12).unwrap();
    let theta_star = rows[first][0] / std::f64::consts::PI;
    assert!(
        (theta_star - 0.146).abs() <= 0.01,
        "theta* = {theta_star} pi"
    );
    assert!(rows.windows(2).all(|w| w[0][0] < w[1][0]));
}

#[test]
fn fig3_value_is_constant_in_r() {
    let r = ecdwit(&["reproduce", "fig3"], Some(&sweep_config(0.0, 1.5, 4, "")));
    assert_eq!(r.code, 0, "{}", r.stderr);
    let (h, rows) = csv(&r.text("fig3.csv"));
    let ec = column(&h, "E_C_N4");
    assert!(rows
        .iter()
        .all(|row| (row[ec] - rows[0][ec]).abs() < 1e-6 && row[ec] > 0.0));
    assert!(rows.windows(2).all(|w| w[0][0] < w[1][0]));
}

#[test]
fn fig4_detects_large_cats_and_is_cutoff_stable() {
    let base = ecdwit(&["reproduce", "fig4"], Some(&sweep_config(0.5, 1.1, 3, "")));
    assert_eq!(base.code, 0, "{}", base.stderr);
    let (h, rows) = csv(&base.text("fig4.csv"));
    let ec = column(&h, "E_C_N4");
    assert!(rows[0][ec] == 0.0 && rows[2][ec] > 0.0, "{rows:?}");

    let cfg = |cut: usize| {
        format!(
            r#"{{"schema": "ecdwit/1", "cutoff": {cut}, "reproduce": {{"sweep": {{"start": 0.5, "stop": 1.1, "points": 3}}}}}}"#
        )
    };
    let (a, b) = (
        ecdwit(&["reproduce", "fig4"], Some(&cfg(20))),
        ecdwit(&["reproduce", "fig4"], Some(&cfg(40))),
    );
    assert_eq!(a.code, 0, "{}", a.stderr);
    let ((_, ra), (_, rb)) = (csv(&a.text("fig4.csv")), csv(&b.text("fig4.csv")));
    let nv = column(&h, "N_V");
    for (x, y) in ra.iter().zip(&rb) {
        for (i, (u, v)) in x.iter().zip(y).enumerate() {
            let tol = if i == nv { 1e-4 } else { 1e-6 };
            assert!((u - v).abs() <= tol, "column {}: {u} vs {v}", h[i]);
        }
    }
}

#[test]
fn fig5_has_naive_and_reoptimised_groups() {
    let cfg = r#"{"schema": "ecdwit/1", "optimizer": {"max_iters": 20, "restarts": 1},
                  "reproduce": {"sweep": {"start": 0.0, "stop": 0.2, "points": 2}, "noisy_n": 4, "lattice_side": 0}}"#;
    let r = ecdwit(&["reproduce", "fig5"], Some(cfg));
    assert_eq!(r.code, 0, "{}", r.stderr);
    for panel in ["fig5a.csv", "fig5b.csv"] {
        let (h, rows) = csv(&r.text(panel));
        assert_eq!(
            h,
            [
                "eta",
                "E_C_naive",
                "max_disp_naive",
                "E_C_reopt",
                "max_disp_reopt",
                "N_V",
                "N_tr_lower",
                "E_PPT"
            ]
        );
        assert_eq!(rows.len(), 2);
        // re-optimisation starts from the naive points and never does worse
        assert!(rows.iter().all(|row| row[3] >= row[1] - 1e-12));
        assert!(rows[1][column(&h, "N_V")] < rows[0][column(&h, "N_V")]);
    }
    assert_eq!(r.json("fig5.json")["files"][1], "fig5b.csv");
}

#[test]
fn reproduce_is_deterministic() {
    let cfg = sweep_config(0.2, 1.2, 5, "");
    let (a, b) = (
        ecdwit(&["reproduce", "fig2"], Some(&cfg)),
        ecdwit(&["reproduce", "fig2"], Some(&cfg)),
    );
    assert_eq!(a.text("fig2.csv"), b.text("fig2.csv"));
    let text = a.text("fig2.csv");
    for line in text.lines().skip(1) {
        assert!(line.split(',').all(is_printf_e12), "{line}");
    }
}

#[test]
fn unknown_figure_is_a_usage_error() {
    let r = ecdwit(&["reproduce", "fig9"], None);
    assert_eq!(r.code, 2);
    assert!(!Path::new(&r.path("fig9.csv")).exists());
}
