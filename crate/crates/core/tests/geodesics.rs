//! Geodesic solver behaviour on models with known geodesics.

use infogeo_core::families::normal_model;
use infogeo_core::geodesic::{
    canonical_divergence, canonical_divergence_dual, geodesic_bvp, geodesic_ivp,
    riemannian_distance,
};
use infogeo_core::simplex::{self, SimplexPoint};
use infogeo_core::{GeomError, ShootingConfig};

fn kl_chart(p: &[f64], q: &[f64]) -> f64 {
    let lift = |c: &[f64]| {
        let mut w = c.to_vec();
        w.push(1.0 - c.iter().sum::<f64>());
        SimplexPoint::from_weights(w).unwrap()
    };
    simplex::kl_divergence(&lift(p), &lift(q)).unwrap()
}

#[test]
fn normal_geodesics_stay_on_semicircles() {
    // With u = μ/√2 the metric is 2(du² + dσ²)/σ², so geodesics are circles centred on σ = 0.
    let model = normal_model();
    let lc = model.connections().unwrap().0.clone();
    let (x0, v0) = ([0.2, 0.7], [0.9, 0.4]);
    let path = geodesic_ivp(&lc, &x0, &v0, &ShootingConfig::default()).unwrap();
    let (u0, du) = (x0[0] / 2f64.sqrt(), v0[0] / 2f64.sqrt());
    // Centre c satisfies (u0 − c) du + σ0 dσ = 0.
    let c = u0 + x0[1] * v0[1] / du;
    let r2 = (u0 - c).powi(2) + x0[1].powi(2);
    for x in &path.points {
        let u = x[0] / 2f64.sqrt();
        assert!(((u - c).powi(2) + x[1].powi(2) - r2).abs() < 1e-6);
    }
}

#[test]
fn shortest_path_between_normals_bulges_upward() {
    let model = normal_model();
    let path = geodesic_bvp(
        &model.levi_civita_field(),
        &[-0.75, 0.5],
        &[1.25, 0.5],
        &ShootingConfig::default(),
    )
    .unwrap();
    let apex = path.points.iter().map(|x| x[1]).fold(f64::MIN, f64::max);
    assert!(apex > 0.5 + 0.1, "{apex}");
}

#[test]
fn levi_civita_paths_reverse() {
    let model = normal_model();
    let lc = model.connections().unwrap().0.clone();
    let cfg = ShootingConfig::default();
    let (p, q) = ([-0.3, 0.6], [0.4, 1.1]);
    let fwd = geodesic_bvp(&lc, &p, &q, &cfg).unwrap();
    let bwd = geodesic_bvp(&lc, &q, &p, &cfg).unwrap();
    let n = fwd.points.len();
    for i in 0..n {
        let (a, b) = (&fwd.points[i], &bwd.points[n - 1 - i]);
        assert!((a[0] - b[0]).abs().max((a[1] - b[1]).abs()) < 1e-6);
    }
    let d1 = riemannian_distance(&model, &p, &q, &cfg).unwrap();
    let d2 = riemannian_distance(&model, &q, &p, &cfg).unwrap();
    assert!((d1 - d2).abs() < 1e-6);
}

#[test]
fn triangle_inequality_on_normals() {
    let model = normal_model();
    let cfg = ShootingConfig::default();
    let (a, b, c) = ([0.0, 1.0], [0.6, 0.7], [-0.4, 1.4]);
    let d = |x: &[f64], y: &[f64]| riemannian_distance(&model, x, y, &cfg).unwrap();
    assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-8);
    assert!(d(&a, &b) <= d(&a, &c) + d(&c, &b) + 1e-8);
}

#[test]
fn simplex_canonical_divergences_are_kl() {
    let model = simplex::model(2);
    let (e, m) = model.connections().unwrap().clone();
    let cfg = ShootingConfig::default();
    for (p, q) in [
        ([0.3, 0.3], [0.4, 0.2]),
        ([0.2, 0.5], [0.35, 0.3]),
        ([0.25, 0.25], [0.1, 0.4]),
    ] {
        let along_m = canonical_divergence(&model, &m, &p, &q, &cfg).unwrap();
        let along_e = canonical_divergence(&model, &e, &p, &q, &cfg).unwrap();
        // Mixture geodesics give KL(p‖q); exponential geodesics give KL(q‖p).
        assert!(
            (along_m - kl_chart(&p, &q)).abs() < 1e-3,
            "m {along_m} {}",
            kl_chart(&p, &q)
        );
        assert!(
            (along_e - kl_chart(&q, &p)).abs() < 1e-3,
            "e {along_e} {}",
            kl_chart(&q, &p)
        );
        let dual = canonical_divergence_dual(&model, &e, &p, &q, &cfg).unwrap();
        assert!((dual - kl_chart(&p, &q)).abs() < 1e-3);
        assert_eq!(canonical_divergence(&model, &e, &p, &p, &cfg).unwrap(), 0.0);
    }
}

#[test]
fn mixture_geodesics_are_chart_affine() {
    let model = simplex::model(2);
    let m = model.connections().unwrap().1.clone();
    let path = geodesic_ivp(&m, &[0.2, 0.3], &[0.2, -0.1], &ShootingConfig::default()).unwrap();
    for (t, x) in path.times.iter().zip(&path.points) {
        assert!((x[0] - (0.2 + 0.2 * t)).abs() < 1e-12 && (x[1] - (0.3 - 0.1 * t)).abs() < 1e-12);
    }
}

#[test]
fn shooting_out_of_the_simplex_reports_the_exit() {
    let model = simplex::model(1);
    let m = model.connections().unwrap().1.clone();
    match geodesic_ivp(&m, &[0.5], &[1.0], &ShootingConfig::default()) {
        Err(GeomError::LeftDomain { time }) => assert!(time > 0.45 && time < 0.55, "{time}"),
        other => panic!("{other:?}"),
    }
}
