mod common;

use std::f64::consts::FRAC_PI_4;

use common::*;
use ecdwit_core::families::{fock_points, generic_points};
use ecdwit_core::fock::FockSpace;
use ecdwit_core::optimizer::*;
use ecdwit_core::witness::{build_witness, min_eigenpair};
use ecdwit_core::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn lambda(state: &State, pts: &PointSet) -> f64 {
    min_eigenpair(&build_witness(state, pts).unwrap().entries).0
}

/// ∂λ/∂ξ* = (∂λ/∂x + i ∂λ/∂y)/2 by central differences on each A coordinate.
fn fd_gradient(state: &State, pts: &PointSet, h: f64) -> Vec<Vec<C64>> {
    let a = pts.a_points().to_vec();
    let shifted = |k: usize, m: usize, dz: C64| {
        let mut b = a.clone();
        b[k][m] += dz;
        lambda(state, &pts.with_a(b).unwrap())
    };
    (0..a.len())
        .map(|k| {
            (0..a[k].len())
                .map(|m| {
                    let dx = (shifted(k, m, c(h, 0.0)) - shifted(k, m, c(-h, 0.0))) / (2.0 * h);
                    let dy = (shifted(k, m, c(0.0, h)) - shifted(k, m, c(0.0, -h))) / (2.0 * h);
                    c(dx, dy) * 0.5
                })
                .collect()
        })
        .collect()
}

fn relative_error(g: &[Vec<C64>], fd: &[Vec<C64>]) -> f64 {
    let num: f64 = g
        .iter()
        .flatten()
        .zip(fd.iter().flatten())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum();
    let den: f64 = fd.iter().flatten().map(|z| z.norm_sqr()).sum();
    (num / den).sqrt()
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 20 {
        let (state, pts) = match checked % 3 {
            0 => {
                let s = make_state(&StateSpec::Fock { n: vec![1] }, None).unwrap();
                let p = PointSet::single((0..3).map(|_| vec![gauss(&mut rng) * 0.7]).collect())
                    .unwrap();
                (s, p)
            }
            1 => {
                let s = random_pure(&FockSpace::uniform(2, 4).unwrap(), &mut rng);
                let p = PointSet::diagonal((0..4).map(|_| vec![gauss(&mut rng) * 0.6]).collect())
                    .unwrap();
                (s, p)
            }
            _ => {
                let s = random_mixed(&FockSpace::uniform(2, 4).unwrap(), 2, &mut rng);
                let pairing = SymplecticMap::squeeze(uniform(&mut rng, -0.5, 0.5))
                    .compose(&SymplecticMap::phase_rotation(&[uniform(
                        &mut rng, 0.0, 6.0,
                    )]))
                    .unwrap();
                let a = (0..4).map(|_| vec![gauss(&mut rng) * 0.6]).collect();
                (s, PointSet::paired(a, pairing).unwrap())
            }
        };
        let g = grad_lambda_min(&state, &pts).unwrap();
        if g.degenerate || g.norm_sqr() < 1e-12 {
            continue;
        }
        let fd = fd_gradient(&state, &pts, 1e-5);
        let err = relative_error(&g.grad, &fd);
        assert!(err < 1e-4, "instance {checked}: relative error {err:e}");
        checked += 1;
    }
}

#[test]
fn coincident_points_have_zero_gradient() {
    let s = make_state(&StateSpec::FockBell { theta: 0.5 }, None).unwrap();
    let xi = c(0.4, -0.2);
    let g = grad_lambda_min(&s, &PointSet::diagonal_one_mode(&[xi, xi, xi]).unwrap()).unwrap();
    assert!(g.norm_sqr() < 1e-24);
}

#[test]
fn descent_from_closed_form_points() {
    let s = make_state(&StateSpec::FockBell { theta: 0.6 }, None).unwrap();
    let init = fock_points(0.6);
    let start = lambda(&s, &init);
    let cfg = OptimizerConfig {
        restarts: 2,
        ..Default::default()
    };
    let o = optimize(&s, &init, &cfg).unwrap();
    assert!(o.result.lambda_min <= start);
    for w in o.trace.rows.windows(2) {
        assert!(w[1].lambda_min < w[0].lambda_min, "iteration {}", w[1].iter);
    }
    assert!(o.points.pairing_residual() < 1e-10);
}

#[test]
fn squeezed_pairing_survives_optimisation() {
    let s = make_state(&StateSpec::PsTmsv { r: 0.3 }, None).unwrap();
    let pairing = SymplecticMap::squeeze(0.2);
    let init = PointSet::paired(
        vec![
            vec![c(0.0, 0.0)],
            vec![c(0.6, 0.1)],
            vec![c(-0.3, 0.5)],
            vec![c(-0.2, -0.5)],
        ],
        pairing,
    )
    .unwrap();
    let cfg = OptimizerConfig {
        restarts: 1,
        max_iters: 100,
        ..Default::default()
    };
    let o = optimize(&s, &init, &cfg).unwrap();
    assert!(o.points.pairing_residual() < 1e-10);
}

#[test]
fn vacuum_terminates_at_zero() {
    let s = make_state(&StateSpec::Vacuum { modes: 2 }, None).unwrap();
    let init = generic_points(&s, 4, true).unwrap();
    let cfg = OptimizerConfig {
        restarts: 2,
        max_iters: 200,
        ..Default::default()
    };
    let o = optimize(&s, &init, &cfg).unwrap();
    assert_eq!(o.result.value, 0.0);
    assert!(o.trace.rows.len() <= 201);
}

#[test]
fn seeded_runs_are_identical() {
    let s = make_state(&StateSpec::FockBell { theta: FRAC_PI_4 }, None).unwrap();
    let init = generic_points(&s, 5, true).unwrap();
    let cfg = OptimizerConfig {
        restarts: 4,
        max_iters: 60,
        seed: 42,
        ..Default::default()
    };
    let a = optimize(&s, &init, &cfg).unwrap();
    let b = optimize(&s, &init, &cfg).unwrap();
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.points.a_points(), b.points.a_points());
    assert_eq!(a.trace.to_csv(), b.trace.to_csv());
}

#[test]
fn zero_iterations_returns_the_start() {
    let s = make_state(&StateSpec::FockBell { theta: FRAC_PI_4 }, None).unwrap();
    let init = fock_points(FRAC_PI_4);
    let cfg = OptimizerConfig {
        restarts: 1,
        max_iters: 0,
        ..Default::default()
    };
    let o = optimize(&s, &init, &cfg).unwrap();
    assert_eq!(o.trace.rows.len(), 1);
    assert_eq!(o.points.a_points(), init.a_points());
}

#[test]
fn plain_update_takes_fixed_steps() {
    let s = make_state(&StateSpec::FockBell { theta: 0.5 }, None).unwrap();
    let cfg = OptimizerConfig {
        restarts: 1,
        max_iters: 5,
        backtracking: 1.0,
        gamma: 0.01,
        grad_norm_threshold: 1e-30,
        ..Default::default()
    };
    let o = optimize(&s, &generic_points(&s, 4, true).unwrap(), &cfg).unwrap();
    assert_eq!(o.trace.rows.len(), 6);
    assert!(o.trace.rows[..5].iter().all(|r| r.step == 0.01));
}

#[test]
fn config_validation() {
    assert!(OptimizerConfig {
        gamma: 0.0,
        ..Default::default()
    }
    .validate()
    .is_err());
    assert!(OptimizerConfig {
        backtracking: 1.5,
        ..Default::default()
    }
    .validate()
    .is_err());
    assert!(OptimizerConfig {
        restarts: 0,
        ..Default::default()
    }
    .validate()
    .is_err());
    let cfg: OptimizerConfig = serde_json::from_str(r#"{"gamma": 0.1}"#).unwrap();
    assert_eq!(cfg.max_iters, 2000);
    assert!(serde_json::from_str::<OptimizerConfig>(r#"{"gama": 0.1}"#).is_err());
}

#[test]
fn trace_csv_layout() {
    let t = OptimizerTrace {
        rows: vec![TraceRow {
            iter: 0,
            lambda_min: -0.5,
            grad_norm: 1.0,
            step: 0.05,
            degenerate: false,
        }],
        converged: false,
        restart: 0,
    };
    assert_eq!(t.to_csv(), "iter,lambda_min,grad_norm,step\n0,-5.000000000000e-01,1.000000000000e+00,5.000000000000e-02\n");
}
