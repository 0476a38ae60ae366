mod common;

use common::*;
use gtd_core::expr::parse;
use gtd_core::phase::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn phase_point(n: usize) -> impl Strategy<Value = PhasePoint> {
    (
        -3.0f64..3.0,
        proptest::collection::vec(-3.0f64..3.0, n),
        proptest::collection::vec(-3.0f64..3.0, n),
    )
        .prop_map(|(phi, e, i)| PhasePoint::new(phi, e, i).unwrap())
}

fn close(a: &PhasePoint, b: &PhasePoint, tol: f64) -> bool {
    a.coords().iter().zip(b.coords()).all(|(x, y)| (x - y).abs() <= tol)
}

fn negated(p: &PhasePoint) -> PhasePoint {
    PhasePoint::new(p.phi, p.e.iter().map(|v| -v).collect(), p.i.iter().map(|v| -v).collect()).unwrap()
}

/// A random linear symplectic map on `(E, I)`, as `CoordinateMap` components.
fn symplectic_map(seed: u64, n: usize) -> (CoordinateMap, DMatrix<f64>) {
    let mut r = rng(seed);
    let sym = |r: &mut rand_chacha::ChaCha8Rng| {
        let m = DMatrix::from_fn(n, n, |_, _| r.random_range(-0.8..0.8));
        (&m + m.transpose()) * 0.5
    };
    let s = sym(&mut r);
    let t = sym(&mut r);
    let a = DMatrix::from_fn(n, n, |_, _| r.random_range(-0.5..0.5)) + DMatrix::identity(n, n) * 1.5;
    let a_inv_t = a.clone().try_inverse().unwrap().transpose();
    let id = DMatrix::<f64>::identity(n, n);
    let zero = DMatrix::<f64>::zeros(n, n);
    let block = |tl: &DMatrix<f64>, tr: &DMatrix<f64>, bl: &DMatrix<f64>, br: &DMatrix<f64>| {
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(tl);
        m.view_mut((0, n), (n, n)).copy_from(tr);
        m.view_mut((n, 0), (n, n)).copy_from(bl);
        m.view_mut((n, n), (n, n)).copy_from(br);
        m
    };
    let m = block(&a, &zero, &zero, &a_inv_t) * block(&id, &zero, &s, &id) * block(&id, &t, &zero, &id);
    let names = phase_variable_names(n);
    let mut comps = vec!["Phi + 0.5*E1*E1".to_string()];
    for row in 0..2 * n {
        let terms: Vec<String> = (0..2 * n)
            .map(|col| format!("({:.17e})*{}", m[(row, col)], names[1 + col]))
            .collect();
        comps.push(terms.join(" + "));
    }
    let refs: Vec<&str> = comps.iter().map(String::as_str).collect();
    (CoordinateMap::parse(n, &refs).unwrap(), m)
}

#[test]
fn random_symplectic_maps_are_integrable_with_unit_factor() {
    let one = parse("1").unwrap();
    for n in 1..=3 {
        let (map, m) = symplectic_map(100 + n as u64, n);
        let mut omega = DMatrix::zeros(2 * n, 2 * n);
        for a in 0..n {
            omega[(a, n + a)] = 1.0;
            omega[(n + a, a)] = -1.0;
        }
        assert!((m.transpose() * &omega * &m - &omega).abs().max() < 1e-12);
        let points = random_phase_points(7 + n as u64, n, 20, -2.0, 2.0);
        let report = verify_integrability(&map, &one, &points).unwrap();
        assert!(report.max() < 1e-12, "{report:?}");
    }
}

#[test]
fn scaled_map_needs_matching_factor() {
    let map = CoordinateMap::parse(1, &["2*Phi", "2*E1", "I1"]).unwrap();
    let points = random_phase_points(3, 1, 10, -2.0, 2.0);
    let good = verify_integrability(&map, &parse("1/2").unwrap(), &points).unwrap();
    assert!(good.max() < 1e-14);
    let bad = verify_integrability(&map, &parse("1").unwrap(), &points).unwrap();
    assert!((bad.e_i - 1.0).abs() < 1e-14);
}

#[test]
fn every_legendre_spec_is_integrable() {
    let one = parse("1").unwrap();
    for n in 1..=3 {
        let points = random_phase_points(20 + n as u64, n, 15, -2.0, 2.0);
        for spec in LegendreSpec::all(n) {
            assert!(verify_integrability(&spec, &one, &points).unwrap().max() < 1e-14);
        }
    }
}

#[test]
fn contact_volume_is_unit() {
    for n in 1..=3 {
        for p in random_phase_points(n as u64, n, 5, -2.0, 2.0) {
            assert!((contact_volume(&p).unwrap().abs() - 1.0).abs() < 1e-15);
        }
    }
    let big = random_phase_points(1, 4, 1, -1.0, 1.0);
    assert!(contact_volume(&big[0]).is_err());
}

#[test]
fn coordinate_map_rejects_unknown_variables() {
    assert!(CoordinateMap::parse(1, &["Phi", "E1", "I2"]).is_err());
    assert!(CoordinateMap::parse(1, &["Phi", "E1"]).is_err());
    assert!(LegendreSpec::new(2, &[0, 0]).is_err());
    assert!(LegendreSpec::new(2, &[2]).is_err());
}

#[test]
fn jacobian_of_legendre_map_matches_oracle() {
    let points = random_phase_points(31, 3, 10, -2.0, 2.0);
    for spec in LegendreSpec::all(3) {
        for p in &points {
            let j = jacobian(&spec, p).unwrap();
            let oracle = legendre_jacobian_oracle(p, spec.indices());
            assert!((j - oracle).abs().max() < 1e-15);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn legendre_twice_is_parity(p in phase_point(3), mask in 0usize..8) {
        let indices: Vec<usize> = (0..3).filter(|a| mask & (1 << a) != 0).collect();
        let spec = LegendreSpec::new(3, &indices).unwrap();
        let once = spec.apply(&p).unwrap();
        let twice = spec.apply(&once).unwrap();
        let mut expect = p.clone();
        for &a in &indices {
            expect.e[a] = -p.e[a];
            expect.i[a] = -p.i[a];
        }
        prop_assert!(close(&twice, &expect, 1e-12));
        let four = spec.apply(&spec.apply(&twice).unwrap()).unwrap();
        prop_assert!(close(&four, &p, 1e-12));
        prop_assert!(close(&once, &legendre_oracle(&p, &indices), 0.0));
    }

    #[test]
    fn total_transform_composes_from_single_indices(p in phase_point(2)) {
        let total = LegendreSpec::total(2).apply(&p).unwrap();
        let first = LegendreSpec::new(2, &[0]).unwrap().apply(&p).unwrap();
        let both = LegendreSpec::new(2, &[1]).unwrap().apply(&first).unwrap();
        prop_assert!(close(&total, &both, 1e-12));
        let back = LegendreSpec::total(2).apply(&total).unwrap();
        prop_assert!(close(&back, &negated(&p), 1e-12));
    }

    #[test]
    fn curly_brackets_are_antisymmetric(p in phase_point(2), c in -1.0f64..1.0) {
        let x1 = format!("E1 + ({c})*I2*I2");
        let y1 = format!("I1*exp(({c})*E2)");
        let map = CoordinateMap::parse(2, &["Phi", &x1, "E2*I1", &y1, "I2 + E1*E1"]).unwrap();
        let br = Brackets::at(&map, &p).unwrap();
        for za in 0..5 {
            prop_assert!(br.curly(za, za).abs() < 1e-15);
            for zb in 0..5 {
                prop_assert!((br.curly(za, zb) + br.curly(zb, za)).abs() < 1e-12);
                let split: f64 = (0..2).map(|a| br.curly_label(a, za, zb)).sum();
                prop_assert!((split - br.curly(za, zb)).abs() < 1e-12);
                prop_assert!((br.curly(za, zb) - (br.round(za, zb) - br.round(zb, za))).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn transported_contact_form_is_preserved(p in phase_point(3), mask in 0usize..8) {
        let indices: Vec<usize> = (0..3).filter(|a| mask & (1 << a) != 0).collect();
        let spec = LegendreSpec::new(3, &indices).unwrap();
        let target = contact_form(&spec.apply(&p).unwrap());
        let pulled = transform_form(&spec, &p, &target).unwrap();
        prop_assert!(pulled.max_abs_diff(&contact_form(&p)) < 1e-12);
    }
}
