//! Boundary samples of geodesic balls.

use std::f64::consts::TAU;
use std::io::{self, Write};

use infogeo_core::geodesic::geodesic_ivp;
use infogeo_core::tensor::cholesky;
use infogeo_core::GeomError;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::compute::to_chart;
use crate::config::RunConfig;
use crate::registry;
use crate::suites::Ctx;
use crate::CliError;

#[derive(Debug, Clone)]
pub struct BallRequest {
    pub model: String,
    pub center: String,
    pub radius: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BallSample {
    pub index: usize,
    /// `None` when the geodesic left the domain before reaching the radius.
    pub point: Option<Vec<f64>>,
}

/// Unit directions in an orthonormal frame: evenly spaced angles in two
/// dimensions, seeded Gaussian directions otherwise.
fn directions(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    if dim == 2 {
        return (0..count)
            .map(|j| TAU * j as f64 / count as f64)
            .map(|a| vec![a.cos(), a.sin()])
            .collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                break v.iter().map(|x| x / norm).collect();
            }
        })
        .collect()
}

/// Shoots unit-speed Levi-Civita geodesics from the center to arc length `radius`.
pub fn ball(req: &BallRequest, cfg: &RunConfig) -> Result<Vec<BallSample>, CliError> {
    if !(req.radius >= 0.0 && req.radius.is_finite()) {
        return Err(CliError::Usage(format!(
            "radius must be a non-negative number, got {}",
            req.radius
        )));
    }
    if req.samples == 0 {
        return Err(CliError::Usage("samples must be positive".into()));
    }
    let ctx = Ctx::new(cfg)?;
    let model = registry::model(&req.model)?.with_fd(cfg.metric_step());
    let raw = crate::compute::parse_points(&req.center, 1)?.remove(0);
    let center = to_chart(req.model.starts_with("simplex"), Some(model.dim()), raw);
    let g = model.metric_at(&center)?;
    let l = cholesky(&g)?;
    let lt = l.transpose();
    let lc = model.levi_civita_field();
    directions(model.dim(), req.samples, cfg.seed)
        .into_iter()
        .enumerate()
        .map(|(index, u)| {
            // v = L⁻ᵀ u has g(v, v) = |u|² = 1.
            let v = lt
                .solve_upper_triangular(&DVector::from_vec(u))
                .ok_or(CliError::Geometry(GeomError::NotSpd { min_pivot: 0.0 }))?;
            let v0: Vec<f64> = v.iter().map(|c| c * req.radius).collect();
            match geodesic_ivp(&lc, &center, &v0, &ctx.shooting) {
                Ok(path) => Ok(BallSample {
                    index,
                    point: Some(path.end().to_vec()),
                }),
                Err(GeomError::LeftDomain { .. }) => Ok(BallSample { index, point: None }),
                Err(e) => Err(e.into()),
            }
        })
        .collect()
}

/// CSV with header `index,status,x0,…`; rows that left the domain have status
/// `left_domain` and empty coordinates.
pub fn write_csv<W: Write>(samples: &[BallSample], dim: usize, mut w: W) -> io::Result<()> {
    let mut header = vec!["index".to_string(), "status".to_string()];
    header.extend((0..dim).map(|i| format!("x{i}")));
    writeln!(w, "{}", header.join(","))?;
    for s in samples {
        match &s.point {
            Some(p) => {
                let coords: Vec<String> = p.iter().map(|c| c.to_string()).collect();
                writeln!(w, "{},ok,{}", s.index, coords.join(","))?;
            }
            None => writeln!(w, "{},left_domain{}", s.index, ",".repeat(dim))?,
        }
    }
    Ok(())
}

/// Shoelace area of the polygon through the admissible two-dimensional samples.
pub fn shoelace_area(samples: &[BallSample]) -> f64 {
    let pts: Vec<&Vec<f64>> = samples.iter().filter_map(|s| s.point.as_ref()).collect();
    let n = pts.len();
    0.5 * (0..n)
        .map(|i| pts[i][0] * pts[(i + 1) % n][1] - pts[(i + 1) % n][0] * pts[i][1])
        .sum::<f64>()
        .abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(model: &str, center: &str, radius: f64, samples: usize) -> BallRequest {
        BallRequest {
            model: model.into(),
            center: center.into(),
            radius,
            samples,
        }
    }

    #[test]
    fn euclidean_ball_is_round() {
        let s = ball(
            &req("euclid:n=2", "[1.0, -2.0]", 0.5, 24),
            &RunConfig::default(),
        )
        .unwrap();
        for b in &s {
            let p = b.point.as_ref().unwrap();
            assert!((((p[0] - 1.0).powi(2) + (p[1] + 2.0).powi(2)).sqrt() - 0.5).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_radius_collapses_to_center() {
        let s = ball(&req("normal", "[0.2, 0.7]", 0.0, 8), &RunConfig::default()).unwrap();
        assert!(s
            .iter()
            .all(|b| b.point.as_deref() == Some(&[0.2, 0.7][..])));
    }

    #[test]
    fn simplex_balls_shrink_towards_the_boundary() {
        let cfg = RunConfig::default();
        let mid = ball(
            &req(
                "simplex:n=2",
                "[0.3333333333333333, 0.3333333333333333]",
                0.1,
                48,
            ),
            &cfg,
        )
        .unwrap();
        let edge = ball(&req("simplex:n=2", "[0.12, 0.08]", 0.1, 48), &cfg).unwrap();
        assert!(shoelace_area(&edge) < shoelace_area(&mid));
    }

    #[test]
    fn leaving_the_domain_is_flagged() {
        let s = ball(
            &req("simplex:n=2", "[0.05, 0.05]", 1.5, 16),
            &RunConfig::default(),
        )
        .unwrap();
        assert!(s.iter().any(|b| b.point.is_none()));
        let mut buf = Vec::new();
        write_csv(&s, 2, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("index,status,x0,x1\n"));
        assert!(text.contains(",left_domain,,"));
    }

    #[test]
    fn invalid_requests() {
        let cfg = RunConfig::default();
        assert!(matches!(
            ball(&req("normal", "[0, 1]", -1.0, 4), &cfg),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            ball(&req("normal", "[0, 1]", 1.0, 0), &cfg),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            ball(&req("normal", "[0, -1]", 1.0, 4), &cfg),
            Err(CliError::Geometry(_))
        ));
    }
}
