//! Randomized structural invariants.

use infogeo_core::geometry::{alpha_connection, torsion};
use infogeo_core::simplex::{self, MeasureTangent, SimplexPoint};
use infogeo_core::{ManifoldModel, MetricField, Rank3};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn simplex_point(n: usize) -> impl Strategy<Value = SimplexPoint> {
    prop::collection::vec(0.02f64..1.0, n + 1).prop_map(|w| {
        let s: f64 = w.iter().sum();
        SimplexPoint::from_weights(w.iter().map(|v| v / s).collect()).unwrap()
    })
}

fn any_simplex_point() -> impl Strategy<Value = SimplexPoint> {
    (1usize..=4).prop_flat_map(simplex_point)
}

fn symmetric_tensor(n: usize) -> impl Strategy<Value = Rank3> {
    prop::collection::vec(-2.0f64..2.0, n * n * n).prop_map(move |raw| {
        let t = Rank3::from_fn(n, |i, j, k| raw[(i * n + j) * n + k]);
        // Average over the six index permutations.
        Rank3::from_fn(n, |i, j, k| {
            (t.get(i, j, k)
                + t.get(i, k, j)
                + t.get(j, i, k)
                + t.get(j, k, i)
                + t.get(k, i, j)
                + t.get(k, j, i))
                / 6.0
        })
    })
}

/// A smooth SPD metric field g(x) = A Aᵀ + (1 + |x|²) I built from a random matrix A.
fn random_metric(n: usize) -> impl Strategy<Value = ManifoldModel> {
    prop::collection::vec(-1.0f64..1.0, n * n).prop_map(move |a| {
        let a = DMatrix::from_vec(n, n, a);
        let base = &a * a.transpose();
        ManifoldModel::new(
            "random-spd",
            MetricField::new(n, move |x| {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                &base + DMatrix::identity(n, n) * (1.0 + r2)
            }),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn fisher_inverse_is_an_inverse(mu in any_simplex_point()) {
        let n = mu.n();
        let prod = simplex::fisher_matrix(&mu) * simplex::fisher_inverse(&mu);
        prop_assert!((prod - DMatrix::identity(n, n)).abs().max() < 1e-10);
    }

    #[test]
    fn e_and_m_are_dual_and_torsion_free(mu in any_simplex_point()) {
        let model = simplex::model(mu.n());
        let (e, m) = model.pair_at(mu.chart()).unwrap();
        prop_assert!(model.duality_residual(&e, &m, mu.chart()).unwrap() <= 1e-5);
        prop_assert!(torsion(&e).max_abs() <= 1e-8);
        prop_assert!(torsion(&m).max_abs() <= 1e-8);
    }

    #[test]
    fn alpha_family_algebra(mu in any_simplex_point()) {
        let model = simplex::model(mu.n());
        let x = mu.chart();
        let (e, m) = model.pair_at(x).unwrap();
        let lc = model.levi_civita(x).unwrap();
        for alpha in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            let plus = alpha_connection(&e, &m, alpha).unwrap();
            let minus = alpha_connection(&e, &m, -alpha).unwrap();
            prop_assert!(model.duality_residual(&plus, &minus, x).unwrap() <= 1e-5);
            prop_assert!(torsion(&plus).max_abs() <= 1e-8);
            prop_assert!((&plus + &minus).max_abs_diff(&lc.scale(2.0)) <= 2e-6);
        }
    }

    #[test]
    fn transport_preserves_fisher_pairing(
        (mu, nu, a, b) in (1usize..=4).prop_flat_map(|n| (
            simplex_point(n),
            simplex_point(n),
            prop::collection::vec(-3.0f64..3.0, n),
            prop::collection::vec(-3.0f64..3.0, n),
        ))
    ) {
        let (a, b) = (MeasureTangent::from_chart(&a), MeasureTangent::from_chart(&b));
        let before = simplex::fisher_inner(&mu, a.components(), b.components()).unwrap();
        let after = simplex::fisher_inner(
            &nu,
            &simplex::transport_e(&mu, &nu, &a).unwrap(),
            &simplex::transport_m(&mu, &nu, &b).unwrap(),
        ).unwrap();
        prop_assert!((before - after).abs() <= 1e-10 * before.abs().max(1.0));
    }

    #[test]
    fn tensor_pair_round_trips_on_random_metrics(
        (model, t, x) in (1usize..=3).prop_flat_map(|n| (
            random_metric(n),
            symmetric_tensor(n),
            prop::collection::vec(-1.0f64..1.0, n),
        ))
    ) {
        let (p, d) = model.dual_pair_from_tensor(&t, &x).unwrap();
        let back = model.amari_chentsov(&p, &d, &x).unwrap();
        prop_assert!(back.max_abs_diff(&t) <= 1e-6);
        let (p2, d2) = model.dual_pair_from_tensor(&back, &x).unwrap();
        prop_assert!(p2.max_abs_diff(&p) <= 1e-6 && d2.max_abs_diff(&d) <= 1e-6);
    }

    #[test]
    fn tensor_pair_round_trips_on_the_simplex(mu in any_simplex_point()) {
        let model = simplex::model(mu.n());
        let x = mu.chart();
        let t = simplex::ac_tensor_simplex(&mu);
        let (e, m) = model.dual_pair_from_tensor(&t, x).unwrap();
        prop_assert!(model.amari_chentsov(&e, &m, x).unwrap().max_abs_diff(&t) <= 1e-6 * t.max_abs().max(1.0));
        let (e0, m0) = model.pair_at(x).unwrap();
        let t0 = model.amari_chentsov(&e0, &m0, x).unwrap();
        let (e1, m1) = model.dual_pair_from_tensor(&t0, x).unwrap();
        let scale = e0.max_abs().max(1.0);
        prop_assert!(e1.max_abs_diff(&e0) <= 1e-6 * scale && m1.max_abs_diff(&m0) <= 1e-6 * scale);
    }
}
