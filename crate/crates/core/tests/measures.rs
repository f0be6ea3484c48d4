mod common;

use std::f64::consts::{FRAC_PI_4, PI};

use common::*;
use ecdwit_core::families::{cat_points, fock_points};
use ecdwit_core::gaussian::apply_gaussian;
use ecdwit_core::measures::*;
use ecdwit_core::witness::certify_exact;
use ecdwit_core::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pure(spec: &StateSpec) -> PureState {
    make_state(spec, None).unwrap().as_pure().unwrap().clone()
}

#[test]
fn product_state_has_trivial_spectrum() {
    let s = pure(&StateSpec::Coherent {
        alpha: vec![c(0.4, 0.1), c(-0.3, 0.8)],
    });
    let sp = schmidt(&s, 1).unwrap();
    assert!((sp.coefficients[0] - 1.0).abs() < 1e-12);
    assert!(e_sep(&s, 1).unwrap() < 1e-5);
    assert!(e_ppt(&State::Pure(s), 1).unwrap().value < 1e-10);
}

#[test]
fn fock_bell_closed_forms() {
    for k in 1..=10 {
        let th = FRAC_PI_4 * k as f64 / 10.0;
        let s = pure(&StateSpec::FockBell { theta: th });
        let sp = schmidt(&s, 1).unwrap();
        assert!((sp.coefficients[0] - th.cos().powi(2)).abs() < 1e-12);
        assert!((sp.coefficients[1] - th.sin().powi(2)).abs() < 1e-12);
        assert!((e_sep(&s, 1).unwrap() - 2.0 * th.sin()).abs() < 1e-10);
        let p = e_ppt(&State::Pure(s), 1).unwrap();
        assert!(!p.conjectured);
        assert!((p.value - (2.0 * th).sin()).abs() < 1e-10);
    }
    let s = pure(&StateSpec::FockBell { theta: FRAC_PI_4 });
    assert!((e_sep(&s, 1).unwrap() - 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn small_angle_is_linear() {
    let th = 0.01 * PI;
    let s = pure(&StateSpec::FockBell { theta: th });
    for v in [
        e_sep(&s, 1).unwrap(),
        e_ppt(&State::Pure(s), 1).unwrap().value,
    ] {
        assert!((v / (2.0 * th) - 1.0).abs() < 0.05);
    }
}

#[test]
fn tmsv_spectrum_is_geometric() {
    let r: f64 = 0.8;
    let s = pure(&StateSpec::Tmsv { r });
    let sp = schmidt(&s, 1).unwrap();
    let t2 = r.tanh().powi(2);
    for (n, p) in sp.coefficients.iter().take(20).enumerate() {
        assert!((p - (1.0 - t2) * t2.powi(n as i32)).abs() < 1e-12);
    }
    assert!((sp.coefficients.iter().sum::<f64>() - 1.0).abs() < 1e-10);
}

#[test]
fn large_cat_approaches_one_ebit_of_negativity() {
    let s = State::Pure(pure(&StateSpec::Cat2 { beta: c(3.0, 0.0) }));
    let p = e_ppt(&s, 1).unwrap().value;
    assert!((p - 1.0).abs() < 1e-6);
}

#[test]
fn schmidt_and_matrix_routes_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut states = vec![
        make_state(&StateSpec::FockBell { theta: 0.3 }, None).unwrap(),
        make_state(&StateSpec::Cat2 { beta: c(0.9, 0.3) }, Some(14)).unwrap(),
        make_state(&StateSpec::PsTmsv { r: 0.3 }, Some(14)).unwrap(),
    ];
    for _ in 0..3 {
        states.push(random_pure(&FockSpace::uniform(2, 5).unwrap(), &mut rng));
    }
    for s in &states {
        let closed = e_ppt(s, 1).unwrap().value;
        let matrix = pt_negativity(s, 1).unwrap();
        assert!((closed - matrix).abs() < 1e-8, "{closed} vs {matrix}");
    }
    let mixed = make_state(
        &StateSpec::Thermal {
            nbar: vec![0.2, 0.3],
        },
        None,
    )
    .unwrap();
    let p = e_ppt(&mixed, 1).unwrap();
    assert!(p.conjectured);
    assert!(p.value < 1e-10);
}

#[test]
fn spectrum_is_locally_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let s = make_state(&StateSpec::FockBell { theta: 0.5 }, Some(3)).unwrap();
    let base = schmidt(s.as_pure().unwrap(), 1).unwrap();
    for _ in 0..5 {
        let local = |rng: &mut ChaCha8Rng| {
            SymplecticMap::squeeze(uniform(rng, -0.3, 0.3))
                .compose(&SymplecticMap::phase_rotation(&[uniform(rng, 0.0, 6.0)]))
                .unwrap()
        };
        let l = local(&mut rng).direct_sum(&local(&mut rng));
        let out = apply_gaussian(&s, &l, Some(vec![40, 40])).unwrap();
        let sp = schmidt(out.as_pure().unwrap(), 1).unwrap();
        for k in 0..3 {
            assert!((sp.coefficients[k] - base.coefficients[k]).abs() < 1e-8);
        }
    }
}

#[test]
fn witness_never_exceeds_the_measures() {
    for k in 1..=10 {
        let th = FRAC_PI_4 * k as f64 / 10.0;
        let s = make_state(&StateSpec::FockBell { theta: th }, None).unwrap();
        let ec = certify_exact(&s, &fock_points(th)).unwrap().value;
        let bound = e_sep(s.as_pure().unwrap(), 1)
            .unwrap()
            .min(e_ppt(&s, 1).unwrap().value);
        assert!(ec <= bound + 1e-6);
        assert!(ec <= n_tr_fock());
    }
    for k in 1..=10 {
        let b = c(0.4 * k as f64, 0.0);
        let s = make_state(&StateSpec::Cat2 { beta: b }, None).unwrap();
        let ec = certify_exact(&s, &cat_points(b).unwrap()).unwrap().value;
        let bound = e_sep(s.as_pure().unwrap(), 1)
            .unwrap()
            .min(e_ppt(&s, 1).unwrap().value);
        assert!(ec <= bound + 1e-6);
    }
}

#[test]
fn bipartition_checks() {
    let s = pure(&StateSpec::FockBell { theta: 0.2 });
    assert!(schmidt(&s, 0).is_err());
    assert!(schmidt(&s, 2).is_err());
}
