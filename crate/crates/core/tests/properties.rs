//! Property-based invariants.

use proptest::prelude::*;

use dwell::effective::{EffectiveTable, Provenance};
use dwell::export::{format_csv, parse_csv, Summary, Table};
use dwell::linalg::{lowest_eigenpairs_sym, SymTridiagonal};
use dwell::make_grid;
use dwell::spline::{CubicSpline, EndCondition};
use dwell::tdse::gaussian_packet;

/// Strictly ascending nodes from positive gaps.
fn nodes_from_gaps(start: f64, gaps: &[f64]) -> Vec<f64> {
    let mut x = vec![start];
    for g in gaps {
        x.push(x.last().unwrap() + g);
    }
    x
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spline_reproduces_node_values(
        start in -5.0..5.0f64,
        gaps in prop::collection::vec(0.05..1.0f64, 4..30),
        seed in prop::collection::vec(-10.0..10.0f64, 31),
        clamped in any::<bool>(),
    ) {
        let x = nodes_from_gaps(start, &gaps);
        let y = &seed[..x.len()];
        let end = if clamped { EndCondition::Clamped { left: seed[0], right: seed[1] } } else { EndCondition::Natural };
        let s = CubicSpline::new(&x, y, end).unwrap();
        for (xi, yi) in x.iter().zip(y) {
            prop_assert_eq!(s.eval(*xi, 0).unwrap(), *yi);
        }
        prop_assert!(s.eval(x[0] - 1e-9, 0).is_err());
        prop_assert!(s.eval(*x.last().unwrap() + 1e-9, 0).is_err());
    }

    #[test]
    fn spline_first_derivative_is_continuous(
        gaps in prop::collection::vec(0.1..1.0f64, 5..20),
        seed in prop::collection::vec(-3.0..3.0f64, 21),
    ) {
        let x = nodes_from_gaps(0.0, &gaps);
        let s = CubicSpline::new(&x, &seed[..x.len()], EndCondition::Natural).unwrap();
        for &xi in &x[1..x.len() - 1] {
            let left = s.eval(xi - 1e-9, 1).unwrap();
            let right = s.eval(xi + 1e-9, 1).unwrap();
            prop_assert!((left - right).abs() < 1e-6 * (1.0 + left.abs()));
        }
    }

    #[test]
    fn csv_round_trip_is_exact(
        a in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::ZERO | prop::num::f64::SUBNORMAL, 0..40),
    ) {
        let b: Vec<f64> = a.iter().map(|v| -v * 0.5).collect();
        let table = Table::new().with("a", &a).with("b", &b);
        let text = format_csv(&table).unwrap();
        prop_assert!(!text.contains('\r'));
        let back = parse_csv(&text).unwrap();
        prop_assert_eq!(back.columns, table.columns);
        for (col, orig) in back.data.iter().zip(&table.data) {
            prop_assert_eq!(col.len(), orig.len());
            for (p, q) in col.iter().zip(orig) {
                prop_assert_eq!(p.to_bits(), q.to_bits());
            }
        }
    }

    #[test]
    fn summary_round_trip(values in prop::collection::vec(-1e6..1e6f64, 1..10)) {
        let mut s = Summary::new();
        for (i, v) in values.iter().enumerate() {
            s.number(&format!("k{i}"), *v);
        }
        let back = Summary::parse(&s.render());
        for (i, v) in values.iter().enumerate() {
            let got: f64 = back.get(&format!("k{i}")).unwrap().parse().unwrap();
            prop_assert_eq!(got, *v);
        }
    }

    #[test]
    fn gaussian_packet_moments(x0 in -2.0..2.0f64, omega in 0.5..3.0f64, p0 in -2.0..2.0f64) {
        let grid = make_grid(-12.0, 12.0, 4001).unwrap();
        let psi = gaussian_packet(&grid, x0, omega, p0).unwrap();
        prop_assert!((psi.norm() - 1.0).abs() < 1e-12);
        prop_assert!((psi.mean_x() - x0).abs() < 1e-9);
        prop_assert!((psi.variance_x() - 0.5 / omega).abs() < 1e-5);
        // The lattice momentum is sin(p dx)/dx to leading order.
        prop_assert!((psi.mean_p() - p0).abs() < 1e-3);
    }

    #[test]
    fn eigenpairs_are_ordered_and_orthonormal(
        diag in prop::collection::vec(-5.0..5.0f64, 8..60),
        off_seed in prop::collection::vec(0.05..2.0f64, 60),
    ) {
        let n = diag.len();
        let t = SymTridiagonal::new(diag.clone(), off_seed[..n - 1].iter().map(|v| -v).collect()).unwrap();
        let m = n.min(6);
        let (energies, vectors) = lowest_eigenpairs_sym(&t, m).unwrap();
        for w in energies.windows(2) {
            prop_assert!(w[0] < w[1]);
        }
        prop_assert_eq!(t.sturm_count(energies[m - 1] + 1e-9), m);
        let mut av = vec![0.0; n];
        for (i, (e, v)) in energies.iter().zip(&vectors).enumerate() {
            t.apply(v, &mut av);
            let resid = av.iter().zip(v).map(|(a, b)| (a - e * b).powi(2)).sum::<f64>().sqrt();
            prop_assert!(resid < 1e-8, "residual {resid}");
            for (j, u) in vectors.iter().enumerate() {
                let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot - want).abs() < 1e-8, "<{i}|{j}> = {dot}");
            }
        }
    }

    #[test]
    fn convex_quadratic_tables_pass_invariants(a in 0.1..5.0f64, c in -1.0..1.0f64) {
        let nodes: Vec<f64> = (0..41).map(|k| -2.0 + 0.1 * k as f64).collect();
        let veff: Vec<f64> = nodes.iter().map(|x| 0.5 * a * x * x + c).collect();
        let zeff = vec![1.0; nodes.len()];
        let t = EffectiveTable::new(nodes, veff, zeff, None, None, Provenance::Spectral).unwrap();
        prop_assert!(t.check_invariants(true).is_ok());
        prop_assert_eq!(t.min_veff().0, 0.0);
    }
}
