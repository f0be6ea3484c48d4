mod common;

use std::f64::consts::{FRAC_PI_4, PI};

use common::*;
use ecdwit_core::families::{cat_ntr_lower_bound, single_mode_reduction};
use ecdwit_core::fock::{partial_transpose, DensityOperator};
use ecdwit_core::phase_space::*;
use ecdwit_core::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const NV_ONE: f64 = 0.21306131942526685; // 2e^{−1/2} − 1

#[test]
fn char_fn_examples() {
    let vac = make_state(&StateSpec::Vacuum { modes: 2 }, None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let s = random_mixed(&FockSpace::uniform(1, 8).unwrap(), 3, &mut rng);
    assert!((char_fn(&s, &[c(0.0, 0.0)]).unwrap() - c(1.0, 0.0)).norm() < 1e-14);
    for _ in 0..5 {
        let (a, b) = (gauss(&mut rng), gauss(&mut rng));
        let v = char_fn(&vac, &[a, b]).unwrap();
        assert!((v - c((-(a.norm_sqr() + b.norm_sqr()) / 2.0).exp(), 0.0)).norm() < 1e-13);
        let plus = char_fn(&s, &[a]).unwrap();
        let minus = char_fn(&s, &[-a]).unwrap();
        assert!((plus - minus.conj()).norm() < 1e-13);
    }
}

#[test]
fn wigner_at_the_origin() {
    let vac1 = make_state(&StateSpec::Vacuum { modes: 1 }, None).unwrap();
    let vac2 = make_state(&StateSpec::Vacuum { modes: 2 }, None).unwrap();
    let one = make_state(&StateSpec::Fock { n: vec![1] }, None).unwrap();
    assert!((wigner(&vac1, &[c(0.0, 0.0)]).unwrap() - 2.0 / PI).abs() < 1e-14);
    assert!((wigner(&vac2, &[c(0.0, 0.0), c(0.0, 0.0)]).unwrap() - 4.0 / PI / PI).abs() < 1e-14);
    assert!((wigner(&one, &[c(0.0, 0.0)]).unwrap() + 2.0 / PI).abs() < 1e-14);
    // off the origin: W_vac(α) = (2/π) e^{−2|α|²}
    let a = c(0.4, -0.7);
    assert!((wigner(&vac1, &[a]).unwrap() - 2.0 / PI * (-2.0 * a.norm_sqr()).exp()).abs() < 1e-14);
}

#[test]
fn wigner_integrates_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let s = random_mixed(&FockSpace::uniform(1, 6).unwrap(), 2, &mut rng);
    let g = wigner_grid(
        &s,
        &GridConfig {
            half_widths: Some(vec![6.0, 6.0]),
            points: Some(vec![121, 121]),
            refine: None,
        },
    )
    .unwrap();
    let h = (12.0 / 120.0) * (12.0 / 120.0);
    let total: f64 = g.values.iter().sum::<f64>() * h;
    assert!((total - 1.0).abs() < 1e-4);
}

#[test]
fn wigner_matches_the_fourier_transform_of_the_char_fn() {
    // W(α) = (1/π²) ∫ d²ξ χ(ξ) e^{αξ* − α*ξ}
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..2 {
        let s = random_mixed(&FockSpace::uniform(1, 10).unwrap(), 2, &mut rng);
        let (l, n) = (7.0, 141);
        let h = 2.0 * l / (n - 1) as f64;
        let mut chi = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let xi = c(-l + h * i as f64, -l + h * j as f64);
                chi.push((xi, char_fn(&s, &[xi]).unwrap()));
            }
        }
        for _ in 0..3 {
            let a = gauss(&mut rng) * 0.5;
            let ft: C64 = chi
                .iter()
                .map(|&(xi, v)| v * (a * xi.conj() - a.conj() * xi).exp())
                .sum::<C64>()
                * (h * h / PI / PI);
            assert!((ft.re - wigner(&s, &[a]).unwrap()).abs() < 1e-3);
            assert!(ft.im.abs() < 1e-3);
        }
    }
}

#[test]
fn reduced_collective_wigner_examples() {
    let id = SymplecticMap::identity(1);
    let b = c(0.6, 0.2);
    let prod = make_state(&StateSpec::Coherent { alpha: vec![b, b] }, None).unwrap();
    let bell = make_state(&StateSpec::FockBell { theta: FRAC_PI_4 }, None).unwrap();
    let marg_p = collective_marginal(&prod, &id).unwrap();
    let marg_b = collective_marginal(&bell, &id).unwrap();
    let (mut min_p, mut min_b) = (f64::INFINITY, f64::INFINITY);
    for i in 0..41 {
        for j in 0..41 {
            let a = c(-3.0 + 0.15 * i as f64, -3.0 + 0.15 * j as f64);
            min_p = min_p.min(wigner(&State::Mixed(marg_p.clone()), &[a]).unwrap());
            min_b = min_b.min(wigner(&State::Mixed(marg_b.clone()), &[a]).unwrap());
        }
    }
    assert!(min_p >= -1e-10);
    assert!(
        (min_b + 2.0 / PI).abs() < 1e-10,
        "a₊ of |θ=π/4⟩ is one photon"
    );
    let direct = reduced_collective_wigner(&bell, &id, &[c(0.1, 0.2)]).unwrap();
    assert_eq!(
        direct,
        wigner(&State::Mixed(marg_b), &[c(0.1, 0.2)]).unwrap()
    );
}

#[test]
fn collective_marginal_is_the_wigner_marginal() {
    // W₊(α₊) = ∫ d²α₋ W(α_A, α_B), α_A = (α₊+α₋)/√2, α_B = (α₊−α₋)/√2
    let s = make_state(&StateSpec::FockBell { theta: 0.4 }, None).unwrap();
    let id = SymplecticMap::identity(1);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let (l, n) = (5.0, 81);
    let h = 2.0 * l / (n - 1) as f64;
    for ap in [c(0.0, 0.0), c(0.5, -0.3)] {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let am = c(-l + h * i as f64, -l + h * j as f64);
                acc += wigner(&s, &[(ap + am) * r, (ap - am) * r]).unwrap();
            }
        }
        let marginal = acc * h * h;
        let reduced = reduced_collective_wigner(&s, &id, &[ap]).unwrap();
        assert!((marginal - reduced).abs() < 1e-6, "{marginal} vs {reduced}");
    }
}

#[test]
fn partial_transpose_examples() {
    let bell = make_state(&StateSpec::FockBell { theta: FRAC_PI_4 }, None)
        .unwrap()
        .to_density();
    let pt = partial_transpose(&bell, &[1]).unwrap();
    let ev = pt.clone().symmetric_eigenvalues();
    assert!((ev.iter().copied().fold(f64::INFINITY, f64::min) + 0.5).abs() < 1e-12);
    let back = partial_transpose(
        &DensityOperator::new(bell.space().clone(), pt.clone()).unwrap(),
        &[1],
    )
    .unwrap();
    assert_eq!(&back, bell.matrix());
    let prod = make_state(
        &StateSpec::Coherent {
            alpha: vec![c(0.3, 0.1), c(0.2, -0.4)],
        },
        None,
    )
    .unwrap()
    .to_density();
    let ev = partial_transpose(&prod, &[1])
        .unwrap()
        .symmetric_eigenvalues();
    assert!(ev.iter().all(|&e| e > -1e-10));
}

#[test]
fn partial_transpose_conjugates_the_b_argument() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s = random_mixed(&FockSpace::uniform(2, 4).unwrap(), 3, &mut rng);
    let rho = s.to_density();
    let pt = State::Mixed(
        DensityOperator::new(rho.space().clone(), partial_transpose(&rho, &[1]).unwrap()).unwrap(),
    );
    for _ in 0..5 {
        let (a, b) = (gauss(&mut rng) * 0.6, gauss(&mut rng) * 0.6);
        let lhs = wigner(&pt, &[a, b]).unwrap();
        let rhs = wigner(&s, &[a, b.conj()]).unwrap();
        assert!((lhs - rhs).abs() < 1e-8);
    }
}

#[test]
fn negativity_volume_examples() {
    let vac = make_state(&StateSpec::Vacuum { modes: 1 }, None).unwrap();
    assert!(
        negativity_volume(&vac, &GridConfig::default())
            .unwrap()
            .value
            .abs()
            < 1e-10
    );
    let one = make_state(&StateSpec::Fock { n: vec![1] }, None).unwrap();
    let nv = negativity_volume(&one, &GridConfig::default()).unwrap();
    assert!((nv.value - NV_ONE).abs() < 1e-4);
    assert!(nv.error_estimate < 1e-3);
}

#[test]
fn negativity_volume_is_symplectic_invariant() {
    // the reductions of |θ⟩ and |r⟩ at zero loss, plus one direct 4D integral
    for spec in [
        StateSpec::FockBell { theta: 0.3 },
        StateSpec::PsTmsv { r: 0.5 },
        StateSpec::PsTmsv { r: 1.0 },
    ] {
        let red = single_mode_reduction(&spec, 0.0, None).unwrap().unwrap();
        let nv = negativity_volume(&red.state, &red.grid).unwrap().value;
        assert!((nv - NV_ONE).abs() < 1e-4);
    }
    let one = make_state(&StateSpec::Fock { n: vec![1] }, None).unwrap();
    let squeezed =
        ecdwit_core::gaussian::apply_gaussian(&one, &SymplecticMap::squeeze(0.5), Some(vec![60]))
            .unwrap();
    let e = 1f64.exp();
    let grid = GridConfig {
        half_widths: Some(vec![3.0 * e.sqrt() + 1.0; 2]),
        points: Some(vec![241, 241]),
        refine: None,
    };
    assert!((negativity_volume(&squeezed, &grid).unwrap().value - NV_ONE).abs() < 1e-4);
    let bell = make_state(&StateSpec::FockBell { theta: 0.6 }, None).unwrap();
    let grid = GridConfig {
        half_widths: Some(vec![3.0; 4]),
        points: Some(vec![41; 4]),
        refine: None,
    };
    let nv = negativity_volume(&bell, &grid).unwrap();
    assert!(
        (nv.value - NV_ONE).abs() < 5e-3,
        "4D grid gives {}",
        nv.value
    );
}

#[test]
fn cat_trace_negativity_bound() {
    assert!(cat_ntr_lower_bound(c(0.01, 0.0), 0.0).unwrap() < 1e-3);
    let b = cat_ntr_lower_bound(c(2.0, 0.0), 0.0).unwrap();
    assert!(b <= 2.0);
    // dense-grid oracle on Cat₁(2√2)
    let s = make_state(
        &StateSpec::Cat1 {
            beta: c(2.0 * 2f64.sqrt(), 0.0),
        },
        None,
    )
    .unwrap();
    let g = wigner_grid(
        &s,
        &GridConfig {
            half_widths: Some(vec![6.0, 6.0]),
            points: Some(vec![401, 401]),
            refine: None,
        },
    )
    .unwrap();
    let oracle = -(PI / 2.0) * g.min();
    assert!(b >= oracle - 1e-12);
    assert!(b - oracle < 1e-3);
}

#[test]
fn wigner_grid_csv() {
    let vac = make_state(&StateSpec::Vacuum { modes: 1 }, None).unwrap();
    let g = wigner_grid(
        &vac,
        &GridConfig {
            half_widths: Some(vec![1.0, 1.0]),
            points: Some(vec![5, 5]),
            refine: None,
        },
    )
    .unwrap();
    let csv = g.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x0,p0,W"));
    assert_eq!(
        lines.next(),
        Some(
            format!(
                "-1.000000000000e+00,-1.000000000000e+00,{}",
                ecdwit_core::output::sci(2.0 / PI * (-4.0f64).exp())
            )
            .as_str()
        )
    );
    assert_eq!(csv.lines().count(), 26);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn char_fn_is_bounded(seed in 0u64..10_000, re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_mixed(&FockSpace::uniform(2, 4).unwrap(), 2, &mut rng);
        let v = char_fn(&s, &[c(re, im), c(im, -re) * 0.5]).unwrap();
        prop_assert!(v.norm() <= 1.0 + 1e-10);
    }
}
