//! Certification suites: each check evaluates one residual against a threshold.
//!
//! Every check owns a ChaCha RNG seeded from the run seed and the check name,
//! so results do not depend on scheduling, and reports are ordered by name.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::Instant;

use infogeo_core::divergence::{
    check_divergence_axioms, induced_connection, induced_dual_connection, induced_metric,
    induced_tensor,
};
use infogeo_core::families::{
    normal_model, normal_to_natural_map, ExponentialFamilySpec, KlOrientation, QuadratureGrid,
    BREGMAN_KL_ORIENTATION,
};
use infogeo_core::geodesic::{
    canonical_divergence, geodesic_bvp, geodesic_ivp, riemannian_distance, GeodesicPath,
};
use infogeo_core::geometry::{alpha_connection, pullback_structure, torsion, SmoothMap};
use infogeo_core::simplex::{self, MeasureTangent, SimplexPoint};
use infogeo_core::tensor::min_eigenvalue;
use infogeo_core::warped::{self, WarpKind, WarpSpec, WarpedPoint};
use infogeo_core::{
    sweep, ConnectionField, CubicTensorField, DivergenceSteps, GeomError, ManifoldModel,
    MetricField, Rank3, ShootingConfig,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::config::RunConfig;
use crate::registry;
use crate::report::{CheckRecord, ErrorPayload, Relation, SuiteReport};
use crate::CliError;

pub const SUITES: [&str; 8] = [
    "dual-core",
    "simplex",
    "families",
    "divergence",
    "geodesic",
    "warped",
    "main-theorem",
    "counterexample",
];

type Outcome = Result<f64, GeomError>;
type CheckFn = fn(&Ctx, &mut ChaCha8Rng) -> Outcome;

/// Everything a check may read: configuration and derived solver settings.
pub struct Ctx<'a> {
    pub cfg: &'a RunConfig,
    pub shooting: ShootingConfig,
    pub steps: DivergenceSteps,
    pub warp: Option<WarpSpec>,
}

impl<'a> Ctx<'a> {
    pub fn new(cfg: &'a RunConfig) -> Result<Self, CliError> {
        let mut shooting = ShootingConfig::default();
        let parse = |key: &str| -> Result<Option<f64>, CliError> {
            cfg.param(key)
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| CliError::Usage(format!("{key}: `{v}` is not a number")))
                })
                .transpose()
        };
        if let Some(v) = parse("shoot.rk_steps")? {
            shooting.rk_steps = v as usize;
        }
        if let Some(v) = parse("shoot.newton_tol")? {
            shooting.newton_tol = v;
        }
        if let Some(v) = parse("shoot.max_newton")? {
            shooting.max_newton = v as usize;
        }
        if let Some(v) = parse("shoot.damping")? {
            shooting.damping = v;
        }
        shooting
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(Ctx {
            cfg,
            shooting,
            steps: cfg.divergence_steps(),
            warp: registry::warp_spec_from_config(cfg)?,
        })
    }

    fn model(&self, m: ManifoldModel) -> ManifoldModel {
        let fd = self.cfg.metric_step();
        m.with_fd(fd)
    }
}

pub struct Check {
    pub name: &'static str,
    pub threshold: f64,
    pub relation: Relation,
    run: CheckFn,
}

const fn at_most(name: &'static str, threshold: f64, run: CheckFn) -> Check {
    Check {
        name,
        threshold,
        relation: Relation::AtMost,
        run,
    }
}

const fn at_least(name: &'static str, threshold: f64, run: CheckFn) -> Check {
    Check {
        name,
        threshold,
        relation: Relation::AtLeast,
        run,
    }
}

/// 64-bit FNV-1a; stable across platforms and toolchains.
fn name_hash(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

pub fn checks(suite: &str) -> Option<Vec<Check>> {
    let list = match suite {
        "dual-core" => dual_core(),
        "simplex" => simplex_checks(),
        "families" => families(),
        "divergence" => divergence(),
        "geodesic" => geodesic(),
        "warped" => warped_checks(),
        "main-theorem" => main_theorem(),
        "counterexample" => counterexample(),
        "all" => SUITES
            .iter()
            .flat_map(|s| checks(s).expect("listed suites exist"))
            .collect(),
        _ => return None,
    };
    Some(list)
}

fn run_check(check: &Check, ctx: &Ctx) -> CheckRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed ^ name_hash(check.name));
    let threshold = ctx.cfg.tolerance(check.name, check.threshold);
    let start = Instant::now();
    let outcome = (check.run)(ctx, &mut rng);
    let runtime_ms = ctx.cfg.timings.then(|| start.elapsed().as_secs_f64() * 1e3);
    let (residual, error) = match outcome {
        Ok(r) if r.is_finite() => (Some(r), None),
        Ok(r) => (
            None,
            Some(ErrorPayload {
                kind: "NonFinite".into(),
                message: format!("residual evaluated to {r}"),
            }),
        ),
        Err(e) => (
            None,
            Some(ErrorPayload {
                kind: e.kind().into(),
                message: e.to_string(),
            }),
        ),
    };
    let pass = residual.is_some_and(|r| check.relation.holds(r, threshold));
    CheckRecord {
        name: check.name.to_string(),
        residual,
        threshold,
        relation: check.relation,
        pass,
        error,
        runtime_ms,
    }
}

pub fn run_suite(suite: &str, cfg: &RunConfig) -> Result<SuiteReport, CliError> {
    let list = checks(suite).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown suite `{suite}`; expected one of {} or all",
            SUITES.join(", ")
        ))
    })?;
    let ctx = Ctx::new(cfg)?;
    let records = sweep::map(&list, |c| run_check(c, &ctx));
    Ok(SuiteReport::new(suite, cfg.seed, records))
}

// ---------------------------------------------------------------- helpers

fn max_of(values: impl IntoIterator<Item = Outcome>) -> Outcome {
    values.into_iter().try_fold(0.0_f64, |m, v| {
        let v = v?;
        Ok(if v.is_nan() || m.is_nan() {
            f64::NAN
        } else {
            m.max(v)
        })
    })
}

fn min_of(values: impl IntoIterator<Item = Outcome>) -> Outcome {
    values
        .into_iter()
        .try_fold(f64::INFINITY, |m, v| Ok(m.min(v?)))
}

/// |a − b|∞ / max(1, |b|∞).
fn scaled(a: &Rank3, b: &Rank3) -> f64 {
    a.max_abs_diff(b) / b.max_abs().max(1.0)
}

fn rel_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max() / b.abs().max()
}

/// Interior simplex point with every weight ≥ floor/(n+1).
fn random_simplex(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> SimplexPoint {
    let raw: Vec<f64> = (0..=n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let s: f64 = raw.iter().sum();
    let k = (n + 1) as f64;
    SimplexPoint::from_weights(
        raw.iter()
            .map(|w| (1.0 - floor) * w / s + floor / k)
            .collect(),
    )
    .expect("mixture with the barycenter stays interior")
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

fn random_symmetric_tensor(rng: &mut ChaCha8Rng, n: usize) -> Rank3 {
    let t = Rank3::from_fn(n, |_, _, _| rng.random_range(-2.0..2.0));
    Rank3::from_fn(n, |i, j, k| {
        (t.get(i, j, k)
            + t.get(i, k, j)
            + t.get(j, i, k)
            + t.get(j, k, i)
            + t.get(k, i, j)
            + t.get(k, j, i))
            / 6.0
    })
}

/// g(x) = A Aᵀ + (1 + |x|²) I for a random A.
fn random_metric_model(rng: &mut ChaCha8Rng, n: usize) -> ManifoldModel {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let base = &a * a.transpose();
    ManifoldModel::new(
        "random-spd",
        MetricField::new(n, move |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            &base + DMatrix::identity(n, n) * (1.0 + r2)
        }),
    )
}

/// Fisher–Rao distance of the normal family in (μ, σ).
fn normal_distance(p: &[f64], q: &[f64]) -> f64 {
    let dmu = (q[0] - p[0]) / 2f64.sqrt();
    let ds = q[1] - p[1];
    2f64.sqrt() * (1.0 + (dmu * dmu + ds * ds) / (2.0 * p[1] * q[1])).acosh()
}

fn chart_kl(p: &[f64], q: &[f64]) -> f64 {
    let lift = |c: &[f64]| {
        let mut w = c.to_vec();
        w.push(1.0 - c.iter().sum::<f64>());
        w
    };
    lift(p)
        .iter()
        .zip(lift(q))
        .map(|(a, b)| a * (a / b).ln())
        .sum()
}

fn random_normal_pair(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let p = vec![rng.random_range(-1.0..1.0), rng.random_range(0.5..1.5)];
    let q = vec![
        p[0] + rng.random_range(-0.8..0.8),
        p[1] * rng.random_range(0.6..1.6),
    ];
    (p, q)
}

fn tensor_field_of(model: &ManifoldModel) -> CubicTensorField {
    let m = model.clone();
    CubicTensorField::new(model.dim(), move |x| m.tensor_at(x))
}

// ---------------------------------------------------------------- dual-core

fn dual_core() -> Vec<Check> {
    vec![
        at_most("dual-core/levi-civita-self-dual", 1e-5, |ctx, rng| {
            let model = ctx.model(normal_model());
            max_of((0..20).map(|_| {
                let x = [rng.random_range(-1.0..1.0), rng.random_range(0.3..2.0)];
                let lc = model.levi_civita(&x)?;
                model.duality_residual(&lc, &lc, &x)
            }))
        }),
        at_least("dual-core/e-not-self-dual", 1e-2, |ctx, _| {
            let model = ctx.model(simplex::model(2));
            let x = [1.0 / 3.0, 1.0 / 3.0];
            let (e, _) = model.pair_at(&x)?;
            model.duality_residual(&e, &e, &x)
        }),
        at_most("dual-core/tensor-roundtrip", 1e-6, |ctx, rng| {
            max_of((0..20).map(|_| {
                let n = rng.random_range(1..=3);
                let model = ctx.model(random_metric_model(rng, n));
                let t = random_symmetric_tensor(rng, n);
                let x = random_vec(rng, n, -1.0, 1.0);
                let (p, d) = model.dual_pair_from_tensor(&t, &x)?;
                let back = model.amari_chentsov(&p, &d, &x)?;
                let (p2, d2) = model.dual_pair_from_tensor(&back, &x)?;
                Ok(back
                    .max_abs_diff(&t)
                    .max(p2.max_abs_diff(&p))
                    .max(d2.max_abs_diff(&d)))
            }))
        }),
        at_most("dual-core/pair-from-tensor-torsion", 1e-8, |ctx, rng| {
            max_of((0..20).map(|_| {
                let n = rng.random_range(1..=3);
                let model = ctx.model(random_metric_model(rng, n));
                let t = random_symmetric_tensor(rng, n);
                let x = random_vec(rng, n, -1.0, 1.0);
                let (p, d) = model.dual_pair_from_tensor(&t, &x)?;
                Ok(torsion(&p).max_abs().max(torsion(&d).max_abs()))
            }))
        }),
        at_most("dual-core/pullback-identity", 1e-12, |ctx, rng| {
            let model = ctx.model(simplex::model(2));
            let x = random_simplex(rng, 2, 0.2);
            let (g, t) = pullback_structure(&SmoothMap::identity(2), &model, x.chart())?;
            Ok((g - model.metric_at(x.chart())?)
                .abs()
                .max()
                .max(t.max_abs_diff(&model.tensor_at(x.chart())?)))
        }),
    ]
}

// ---------------------------------------------------------------- simplex

fn simplex_checks() -> Vec<Check> {
    vec![
        at_most("simplex/fisher-barycenter", 1e-12, |_, _| {
            let mu = SimplexPoint::from_weights(vec![1.0 / 3.0; 3])?;
            let expected = DMatrix::from_row_slice(2, 2, &[6.0, 3.0, 3.0, 6.0]);
            Ok((simplex::fisher_matrix(&mu) - expected).abs().max())
        }),
        at_most("simplex/fisher-inverse", 1e-10, |_, rng| {
            max_of((1..=4).flat_map(|n| (0..100).map(move |_| n)).map(|n| {
                let mu = random_simplex(rng, n, 0.05);
                Ok((simplex::fisher_matrix(&mu) * simplex::fisher_inverse(&mu)
                    - DMatrix::identity(n, n))
                .abs()
                .max())
            }))
        }),
        at_most("simplex/duality", 1e-5, |ctx, rng| {
            max_of((0..100).map(|_| {
                let n = rng.random_range(1..=4);
                let mu = random_simplex(rng, n, 0.05);
                let model = ctx.model(simplex::model(n));
                let (e, m) = model.pair_at(mu.chart())?;
                model.duality_residual(&e, &m, mu.chart())
            }))
        }),
        at_most("simplex/torsion", 1e-8, |ctx, rng| {
            max_of((0..100).map(|_| {
                let n = rng.random_range(1..=4);
                let mu = random_simplex(rng, n, 0.05);
                let (e, m) = ctx.model(simplex::model(n)).pair_at(mu.chart())?;
                Ok(torsion(&e).max_abs().max(torsion(&m).max_abs()))
            }))
        }),
        at_most("simplex/alpha-duality", 1e-5, |ctx, rng| {
            alpha_sweep(ctx, rng, AlphaProbe::Duality)
        }),
        at_most("simplex/alpha-torsion", 1e-8, |ctx, rng| {
            alpha_sweep(ctx, rng, AlphaProbe::Torsion)
        }),
        at_most("simplex/alpha-sum", 2e-6, |ctx, rng| {
            alpha_sweep(ctx, rng, AlphaProbe::Sum)
        }),
        at_most("simplex/tensor-roundtrip", 1e-6, |ctx, rng| {
            max_of((0..50).map(|_| {
                let n = rng.random_range(1..=3);
                let mu = random_simplex(rng, n, 0.05);
                let model = ctx.model(simplex::model(n));
                let x = mu.chart();
                let t = simplex::ac_tensor_simplex(&mu);
                let (e, m) = model.dual_pair_from_tensor(&t, x)?;
                let t_back = model.amari_chentsov(&e, &m, x)?;
                let (e0, m0) = model.pair_at(x)?;
                let (e1, m1) =
                    model.dual_pair_from_tensor(&model.amari_chentsov(&e0, &m0, x)?, x)?;
                Ok(scaled(&t_back, &t)
                    .max(scaled(&e1, &e0))
                    .max(scaled(&m1, &m0)))
            }))
        }),
        at_most("simplex/transport", 1e-10, |_, rng| {
            max_of((0..1000).map(|_| {
                let n = rng.random_range(1..=4);
                let (mu, nu) = (random_simplex(rng, n, 0.05), random_simplex(rng, n, 0.05));
                let a = MeasureTangent::from_chart(&random_vec(rng, n, -3.0, 3.0));
                let b = MeasureTangent::from_chart(&random_vec(rng, n, -3.0, 3.0));
                let before = simplex::fisher_inner(&mu, a.components(), b.components())?;
                let after = simplex::fisher_inner(
                    &nu,
                    &simplex::transport_e(&mu, &nu, &a)?,
                    &simplex::transport_m(&mu, &nu, &b)?,
                )?;
                Ok((before - after).abs() / before.abs().max(1.0))
            }))
        }),
        at_most("simplex/kl-closed-form", 1e-12, |_, _| {
            let mu = SimplexPoint::from_weights(vec![0.5, 0.5])?;
            let nu = SimplexPoint::from_weights(vec![0.25, 0.75])?;
            let oracle = 0.5 * (0.5f64 / 0.25).ln() + 0.5 * (0.5f64 / 0.75).ln();
            Ok((simplex::kl_divergence(&mu, &nu)? - oracle).abs())
        }),
    ]
}

#[derive(Clone, Copy)]
enum AlphaProbe {
    Duality,
    Torsion,
    Sum,
}

fn alpha_sweep(ctx: &Ctx, rng: &mut ChaCha8Rng, probe: AlphaProbe) -> Outcome {
    max_of((0..50).map(|_| {
        let n = rng.random_range(1..=4);
        let mu = random_simplex(rng, n, 0.05);
        let model = ctx.model(simplex::model(n));
        let x = mu.chart();
        let (e, m) = model.pair_at(x)?;
        let lc = model.levi_civita(x)?;
        max_of([-1.0, -0.5, 0.0, 0.5, 1.0].map(|alpha| {
            let plus = alpha_connection(&e, &m, alpha)?;
            let minus = alpha_connection(&e, &m, -alpha)?;
            match probe {
                AlphaProbe::Duality => model.duality_residual(&plus, &minus, x),
                AlphaProbe::Torsion => Ok(torsion(&plus).max_abs()),
                AlphaProbe::Sum => Ok((&plus + &minus).max_abs_diff(&lc.scale(2.0))),
            }
        }))
    }))
}

// ---------------------------------------------------------------- families

fn families() -> Vec<Check> {
    vec![
        at_most("families/bernoulli-bregman", 1e-6, |_, _| {
            let b = ExponentialFamilySpec::bernoulli();
            // KL(Bern(¾) ‖ Bern(½)).
            let oracle = 0.75 * (0.75f64 / 0.5).ln() + 0.25 * (0.25f64 / 0.5).ln();
            Ok((b.bregman(&[0.0], &[3f64.ln()])? - oracle).abs())
        }),
        at_most("families/bregman-kl-orientation", 1e-6, |_, rng| {
            let b = ExponentialFamilySpec::bernoulli();
            let kl = |p: f64, q: f64| p * (p / q).ln() + (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln();
            let sigmoid = |t: f64| 1.0 / (1.0 + (-t).exp());
            max_of((0..50).map(|_| {
                let (tp, tq) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
                let (pp, pq) = (sigmoid(tp), sigmoid(tq));
                let expected = match BREGMAN_KL_ORIENTATION {
                    KlOrientation::Swapped => kl(pq, pp),
                    KlOrientation::SameOrder => kl(pp, pq),
                };
                Ok((b.bregman(&[tp], &[tq])? - expected).abs())
            }))
        }),
        at_most("families/bernoulli-third-derivative", 1e-4, |_, _| {
            let b = ExponentialFamilySpec::bernoulli();
            let p = 0.75;
            let oracle = p * (1.0 - p) * (1.0 - 2.0 * p);
            Ok((b.ac_tensor(&[3f64.ln()])?.get(0, 0, 0) - oracle).abs())
        }),
        at_most("families/gaussian-psi-quadrature", 1e-8, |_, rng| {
            let fam = ExponentialFamilySpec::gaussian_natural(QuadratureGrid::real_line());
            max_of((0..10).map(|_| {
                let (mu, sigma) = (rng.random_range(-1.0..1.0), rng.random_range(0.5..1.5));
                let theta = [mu / (sigma * sigma), -0.5 / (sigma * sigma)];
                Ok((fam.psi_by_quadrature(&theta)? - fam.psi(&theta)?).abs())
            }))
        }),
        at_most("families/legendre-logit", 1e-8, |_, rng| {
            let b = ExponentialFamilySpec::bernoulli();
            max_of((0..20).map(|_| {
                let eta: f64 = rng.random_range(0.1..0.9);
                let dual = b.legendre_dual(&[eta])?;
                let entropy = -(eta * eta.ln() + (1.0 - eta) * (1.0 - eta).ln());
                Ok((dual.theta[0] - (eta / (1.0 - eta)).ln())
                    .abs()
                    .max((dual.phi + entropy).abs()))
            }))
        }),
        at_most("families/legendre-gradient-roundtrip", 1e-6, |_, rng| {
            let b = ExponentialFamilySpec::bernoulli();
            max_of((0..10).map(|_| {
                let eta: f64 = rng.random_range(0.15..0.85);
                let h = 1e-5;
                let phi = |e: f64| b.legendre_dual(&[e]).map(|d| d.phi);
                let grad = (phi(eta + h)? - phi(eta - h)?) / (2.0 * h);
                Ok((grad - b.legendre_dual(&[eta])?.theta[0]).abs())
            }))
        }),
        at_most("families/normal-pullback", 1e-5, |_, rng| {
            let natural =
                ExponentialFamilySpec::gaussian_natural(QuadratureGrid::real_line()).model();
            let normal = normal_model();
            let map = normal_to_natural_map();
            max_of((0..10).map(|_| {
                let x = [rng.random_range(-1.0..1.0), rng.random_range(0.5..1.5)];
                let (g, _) = pullback_structure(&map, &natural, &x)?;
                Ok(rel_matrix(&g, &normal.metric_at(&x)?))
            }))
        }),
    ]
}

// ---------------------------------------------------------------- divergence

fn divergence() -> Vec<Check> {
    vec![
        at_most("divergence/kl-metric", 1e-3, |ctx, rng| {
            let d = simplex::kl_divergence_fn(2);
            max_of((0..10).map(|_| {
                let mu = random_simplex(rng, 2, 0.3);
                Ok(rel_matrix(
                    &induced_metric(&d, mu.chart(), ctx.steps)?,
                    &simplex::fisher_matrix(&mu),
                ))
            }))
        }),
        at_most("divergence/kl-tensor", 1e-2, |ctx, rng| {
            let d = simplex::kl_divergence_fn(2);
            max_of((0..10).map(|_| {
                let mu = random_simplex(rng, 2, 0.3);
                Ok(scaled(
                    &induced_tensor(&d, mu.chart(), ctx.steps)?,
                    &simplex::ac_tensor_simplex(&mu),
                ))
            }))
        }),
        at_most("divergence/kl-connections", 1e-2, |ctx, rng| {
            let d = simplex::kl_divergence_fn(2);
            max_of((0..10).map(|_| {
                let mu = random_simplex(rng, 2, 0.3);
                let gm = induced_connection(&d, mu.chart(), ctx.steps)?;
                let ge = induced_dual_connection(&d, mu.chart(), ctx.steps)?;
                Ok(scaled(&gm, &simplex::conn_m(&mu)?).max(scaled(&ge, &simplex::conn_e(&mu)?)))
            }))
        }),
        at_most("divergence/induced-duality", 1e-2, |ctx, rng| {
            let d = simplex::kl_divergence_fn(2);
            let model = ctx.model(simplex::model(2));
            max_of((0..10).map(|_| {
                let mu = random_simplex(rng, 2, 0.3);
                let x = mu.chart();
                let r = model.duality_residual(
                    &induced_connection(&d, x, ctx.steps)?,
                    &induced_dual_connection(&d, x, ctx.steps)?,
                    x,
                )?;
                Ok(r / model
                    .metric_partials(x)?
                    .iter()
                    .map(|m| m.abs().max())
                    .fold(1.0, f64::max))
            }))
        }),
        at_most("divergence/kl-axioms-diagonal", 1e-10, |ctx, rng| {
            let d = simplex::kl_divergence_fn(2);
            let samples: Vec<Vec<f64>> = (0..10)
                .map(|_| random_simplex(rng, 2, 0.3).chart().to_vec())
                .collect();
            Ok(check_divergence_axioms(&d, &samples, ctx.steps)?.max_diagonal)
        }),
        at_least("divergence/kl-axioms-definite", 1e-8, |ctx, rng| {
            let d = simplex::kl_divergence_fn(2);
            let samples: Vec<Vec<f64>> = (0..10)
                .map(|_| random_simplex(rng, 2, 0.3).chart().to_vec())
                .collect();
            let report = check_divergence_axioms(&d, &samples, ctx.steps)?;
            Ok(report
                .min_metric_eigenvalue
                .min(if report.min_offdiagonal > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }))
        }),
        at_most("divergence/sq-euclid-flat", 1e-6, |ctx, rng| {
            let d = infogeo_core::DivergenceFn::squared_euclidean(3);
            max_of((0..5).map(|_| {
                let x = random_vec(rng, 3, -2.0, 2.0);
                let g = induced_metric(&d, &x, ctx.steps)?;
                Ok((g - DMatrix::identity(3, 3))
                    .abs()
                    .max()
                    .max(induced_tensor(&d, &x, ctx.steps)?.max_abs()))
            }))
        }),
        at_most("divergence/bregman-metric", 1e-3, |ctx, rng| {
            let d = ExponentialFamilySpec::bernoulli().divergence();
            max_of((0..10).map(|_| {
                let t: f64 = rng.random_range(-2.0..2.0);
                let p = 1.0 / (1.0 + (-t).exp());
                let g = induced_metric(&d, &[t], ctx.steps)?[(0, 0)];
                Ok((g - p * (1.0 - p)).abs() / (p * (1.0 - p)))
            }))
        }),
    ]
}

// ---------------------------------------------------------------- geodesic

fn geodesic() -> Vec<Check> {
    vec![
        at_most("geodesic/euclid-canonical", 1e-8, |ctx, rng| {
            let model = ManifoldModel::euclidean(3);
            let conn = ConnectionField::zero(3);
            max_of((0..10).map(|_| {
                let (p, q) = (random_vec(rng, 3, -2.0, 2.0), random_vec(rng, 3, -2.0, 2.0));
                let half_sq = 0.5 * p.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
                Ok((canonical_divergence(&model, &conn, &p, &q, &ctx.shooting)? - half_sq).abs())
            }))
        }),
        at_most("geodesic/hyperbolic-canonical", 1e-4, |ctx, rng| {
            let model = normal_model();
            let lc = model
                .connections()
                .expect("normal model carries its Levi-Civita pair")
                .0
                .clone();
            max_of((0..5).map(|_| {
                let (p, q) = random_normal_pair(rng);
                let d = normal_distance(&p, &q);
                Ok(
                    (2.0 * canonical_divergence(&model, &lc, &p, &q, &ctx.shooting)? - d * d).abs()
                        / (d * d),
                )
            }))
        }),
        at_most("geodesic/hyperbolic-distance", 1e-4, |ctx, rng| {
            let model = ctx.model(normal_model());
            max_of((0..5).map(|_| {
                let (p, q) = random_normal_pair(rng);
                let d = normal_distance(&p, &q);
                Ok((riemannian_distance(&model, &p, &q, &ctx.shooting)? - d).abs() / d)
            }))
        }),
        at_least("geodesic/rk-order", 8.0, |_, _| {
            // μ(t) = √2 tanh t, σ(t) = sech t solves the geodesic equations with these initial data.
            let model = normal_model();
            let lc = model
                .connections()
                .expect("normal model carries its Levi-Civita pair")
                .0
                .clone();
            let exact = [2f64.sqrt() * 1f64.tanh(), 1.0 / 1f64.cosh()];
            let errors = [16, 32, 64, 128]
                .iter()
                .map(|&n| {
                    let cfg = ShootingConfig {
                        rk_steps: n,
                        ..Default::default()
                    };
                    let path = geodesic_ivp(&lc, &[0.0, 1.0], &[2f64.sqrt(), 0.0], &cfg)?;
                    Ok((path.end()[0] - exact[0])
                        .abs()
                        .max((path.end()[1] - exact[1]).abs()))
                })
                .collect::<Result<Vec<f64>, GeomError>>()?;
            min_of(errors.windows(2).map(|w| Ok(w[0] / w[1])))
        }),
        at_most("geodesic/bvp-roundtrip", 1e-6, |ctx, rng| {
            let model = normal_model();
            let lc = model
                .connections()
                .expect("normal model carries its Levi-Civita pair")
                .0
                .clone();
            max_of((0..5).map(|_| {
                let (p, q) = random_normal_pair(rng);
                let path = geodesic_bvp(&lc, &p, &q, &ctx.shooting)?;
                let again = geodesic_ivp(&lc, &p, path.initial_velocity(), &ctx.shooting)?;
                Ok((again.end()[0] - q[0])
                    .abs()
                    .max((again.end()[1] - q[1]).abs()))
            }))
        }),
        at_most("geodesic/reversal", 1e-6, |ctx, rng| {
            let model = normal_model();
            let lc = model
                .connections()
                .expect("normal model carries its Levi-Civita pair")
                .0
                .clone();
            let (p, q) = random_normal_pair(rng);
            let fwd = geodesic_bvp(&lc, &p, &q, &ctx.shooting)?;
            let bwd = geodesic_bvp(&lc, &q, &p, &ctx.shooting)?;
            let n = fwd.points.len();
            Ok((0..n)
                .flat_map(|i| (0..2).map(move |k| (i, k)))
                .map(|(i, k)| (fwd.points[i][k] - bwd.points[n - 1 - i][k]).abs())
                .fold(0.0, f64::max))
        }),
        at_most("geodesic/semicircle", 1e-6, |ctx, rng| {
            let model = normal_model();
            let lc = model
                .connections()
                .expect("normal model carries its Levi-Civita pair")
                .0
                .clone();
            let x0 = [rng.random_range(-1.0..1.0), rng.random_range(0.5..1.5)];
            let v0 = [rng.random_range(0.3..1.0), rng.random_range(-0.5..0.5)];
            let path = geodesic_ivp(&lc, &x0, &v0, &ctx.shooting)?;
            let (u0, du) = (x0[0] / 2f64.sqrt(), v0[0] / 2f64.sqrt());
            let c = u0 + x0[1] * v0[1] / du;
            let r2 = (u0 - c).powi(2) + x0[1].powi(2);
            Ok(path
                .points
                .iter()
                .map(|x| ((x[0] / 2f64.sqrt() - c).powi(2) + x[1].powi(2) - r2).abs())
                .fold(0.0, f64::max))
        }),
        at_least("geodesic/fig2-apex", 0.5 + 1e-3, |ctx, _| {
            let model = ctx.model(normal_model());
            let path = geodesic_bvp(
                &model.levi_civita_field(),
                &[-0.75, 0.5],
                &[1.25, 0.5],
                &ctx.shooting,
            )?;
            Ok(path.points.iter().map(|x| x[1]).fold(f64::MIN, f64::max))
        }),
        at_most("geodesic/simplex-canonical-kl", 1e-3, |ctx, rng| {
            let model = ctx.model(simplex::model(2));
            let (e, m) = model
                .connections()
                .expect("simplex model carries (e, m)")
                .clone();
            max_of((0..3).map(|_| {
                let p = random_simplex(rng, 2, 0.5).chart().to_vec();
                let q: Vec<f64> = p.iter().map(|c| c + rng.random_range(-0.1..0.1)).collect();
                let along_m = canonical_divergence(&model, &m, &p, &q, &ctx.shooting)?;
                let along_e = canonical_divergence(&model, &e, &p, &q, &ctx.shooting)?;
                Ok((along_m - chart_kl(&p, &q))
                    .abs()
                    .max((along_e - chart_kl(&q, &p)).abs()))
            }))
        }),
    ]
}

// ---------------------------------------------------------------- warped

fn default_warp() -> WarpSpec {
    WarpSpec::from_kind(
        simplex::model(1),
        simplex::model(2),
        WarpKind::Exp { c0: 1.0, c1: 0.8 },
    )
}

fn warp_of(ctx: &Ctx) -> WarpSpec {
    ctx.warp.clone().unwrap_or_else(default_warp)
}

/// Random point of B ×_f F from random points of the factors' domains.
fn random_warped_point(spec: &WarpSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let sample = |model: &ManifoldModel, rng: &mut ChaCha8Rng| -> Vec<f64> {
        let n = model.dim();
        if model.name().starts_with("simplex") {
            return random_simplex(rng, n, 0.3).chart().to_vec();
        }
        loop {
            let mut x = random_vec(rng, n, -1.0, 1.0);
            if model.name() == "normal" {
                x[1] = rng.random_range(0.5..1.5);
            }
            if !model.admits(&x) {
                x.iter_mut().for_each(|v| *v = v.abs() + 0.5);
            }
            if model.admits(&x) {
                return x;
            }
        }
    };
    loop {
        let mut z = sample(spec.base(), rng);
        z.extend(sample(spec.fiber(), rng));
        if spec.admits(&z) {
            return z;
        }
    }
}

fn lifted_pair(spec: &WarpSpec) -> Result<(ConnectionField, ConnectionField), GeomError> {
    let (pb, db) = spec
        .base()
        .connections()
        .ok_or(GeomError::MissingStructure("base connection pair"))?;
    let (pf, df) = spec
        .fiber()
        .connections()
        .ok_or(GeomError::MissingStructure("fiber connection pair"))?;
    Ok((
        warped::warped_connection_field(spec, pb, pf),
        warped::warped_connection_field(spec, db, df),
    ))
}

fn warped_checks() -> Vec<Check> {
    vec![
        at_most("warped/polar-christoffel", 1e-12, |_, rng| {
            let spec = warped::polar_spec();
            let conn = warped::warped_connection_field(
                &spec,
                &ConnectionField::zero(1),
                &ConnectionField::zero(1),
            );
            max_of((0..20).map(|_| {
                let z = [rng.random_range(0.2..3.0), rng.random_range(-PI..PI)];
                let g = conn.eval(&z)?;
                Ok((g.get(0, 1, 1) + z[0])
                    .abs()
                    .max((g.get(1, 0, 1) - 1.0 / z[0]).abs()))
            }))
        }),
        at_least("warped/metric-spd", 1e-12, |ctx, rng| {
            let spec = warp_of(ctx);
            min_of((0..100).map(|_| {
                Ok(min_eigenvalue(&warped::warped_metric(
                    &spec,
                    &random_warped_point(&spec, rng),
                )?))
            }))
        }),
        at_most("warped/torsion", 1e-8, |ctx, rng| {
            let spec = warp_of(ctx);
            let (p, d) = lifted_pair(&spec)?;
            max_of((0..100).map(|_| {
                let z = random_warped_point(&spec, rng);
                Ok(torsion(&p.eval(&z)?)
                    .max_abs()
                    .max(torsion(&d.eval(&z)?).max_abs()))
            }))
        }),
        at_most("warped/duality", 1e-5, |ctx, rng| {
            let spec = warp_of(ctx);
            let model = ctx.model(warped::warped_model(&spec)?);
            let (p, d) = lifted_pair(&spec)?;
            max_of((0..100).map(|_| {
                let z = random_warped_point(&spec, rng);
                model.duality_residual(&p.eval(&z)?, &d.eval(&z)?, &z)
            }))
        }),
        at_most("warped/tensor-symmetry", 1e-8, |ctx, rng| {
            let spec = warp_of(ctx);
            let (tb, tf) = (tensor_field_of(spec.base()), tensor_field_of(spec.fiber()));
            max_of((0..20).map(|_| {
                let z = random_warped_point(&spec, rng);
                Ok(warped::warped_tensor(&spec, &tb, &tf, &z)?.asymmetry())
            }))
        }),
        at_most("warped/tensor-closure", 1e-4, |ctx, rng| {
            let spec = warp_of(ctx);
            let model = ctx.model(warped::warped_model(&spec)?);
            let (p, d) = lifted_pair(&spec)?;
            let (tb, tf) = (tensor_field_of(spec.base()), tensor_field_of(spec.fiber()));
            max_of((0..20).map(|_| {
                let z = random_warped_point(&spec, rng);
                let t = warped::warped_tensor(&spec, &tb, &tf, &z)?;
                Ok(scaled(
                    &model.amari_chentsov(&p.eval(&z)?, &d.eval(&z)?, &z)?,
                    &t,
                ))
            }))
        }),
        at_most("warped/fiber-term-normalizations", 1e-12, |ctx, rng| {
            let spec = warp_of(ctx);
            let nb = spec.base().dim();
            let (p, _) = lifted_pair(&spec)?;
            max_of((0..20).map(|_| {
                let z = random_warped_point(&spec, rng);
                let g = p.eval(&z)?;
                let gf = warped::warped_metric(&spec, &z)?;
                let f = spec.warp(&z[..nb])?;
                let grad = spec.warp_gradient(&z[..nb])?;
                let n = spec.dim();
                max_of(
                    (0..nb)
                        .flat_map(|k| (nb..n).flat_map(move |a| (nb..n).map(move |b| (k, a, b))))
                        .map(|(k, a, b)| {
                            Ok((g.get(k, a, b) + gf[(a, b)] / f * grad[k]).abs()
                                / gf[(a, b)].abs().max(1.0))
                        }),
                )
            }))
        }),
        at_most("warped/divergence-metric", 1e-3, |ctx, rng| {
            let spec = warp_of(ctx);
            let model = warped::warped_model(&spec)?;
            let d = model
                .divergence()
                .ok_or(GeomError::MissingStructure("factor divergences"))?
                .clone();
            max_of((0..5).map(|_| {
                let z = random_warped_point(&spec, rng);
                Ok(rel_matrix(
                    &induced_metric(&d, &z, ctx.steps)?,
                    &warped::warped_metric(&spec, &z)?,
                ))
            }))
        }),
        at_most("warped/divergence-axioms", 1e-10, |ctx, rng| {
            let spec = warp_of(ctx);
            let model = warped::warped_model(&spec)?;
            let d = model
                .divergence()
                .ok_or(GeomError::MissingStructure("factor divergences"))?
                .clone();
            let samples: Vec<Vec<f64>> = (0..8).map(|_| random_warped_point(&spec, rng)).collect();
            let report = check_divergence_axioms(&d, &samples, ctx.steps)?;
            Ok(if report.pass {
                report.max_diagonal
            } else {
                f64::INFINITY
            })
        }),
        at_least("warped/product-of-geodesics-fails", 0.1, |_, _| {
            // α(t) = 1 + t and β(t) = t are geodesics of the flat factors, but their
            // product is not a geodesic of the polar warp.
            let spec = warped::polar_spec();
            let path = sampled_path(&spec, |t| (vec![1.0 + t, t], vec![1.0, 1.0]))?;
            let flat = ConnectionField::zero(1);
            Ok(warped::warped_geodesic_residual(&spec, &flat, &flat, &path)?.0)
        }),
        at_most("warped/base-geodesic-lifts", 1e-9, |_, _| {
            let spec = warped::polar_spec();
            let path = sampled_path(&spec, |t| (vec![1.0 + t, 0.4], vec![1.0, 0.0]))?;
            let flat = ConnectionField::zero(1);
            let (a, b) = warped::warped_geodesic_residual(&spec, &flat, &flat, &path)?;
            Ok(a.max(b))
        }),
    ]
}

fn sampled_path(
    spec: &WarpSpec,
    curve: impl Fn(f64) -> (Vec<f64>, Vec<f64>),
) -> Result<GeodesicPath, GeomError> {
    let n = 64;
    let times: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let (points, velocities) = times.iter().map(|&t| curve(t)).unzip();
    GeodesicPath::from_samples(times, points, velocities, ConnectionField::zero(spec.dim()))
}

// ---------------------------------------------------------------- main theorem

fn theorem_spec() -> WarpSpec {
    WarpSpec::from_kind(
        simplex::model(1),
        simplex::model(1),
        WarpKind::Linear { c0: 1.0, c1: 0.5 },
    )
}

fn theorem_points(rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
    (0..20)
        .map(|_| [rng.random_range(0.15..0.85), rng.random_range(0.15..0.85)])
        .collect()
}

fn main_theorem() -> Vec<Check> {
    vec![
        at_most("main-theorem/torsion", 1e-8, |_, rng| {
            let (e, m) = lifted_pair(&theorem_spec())?;
            max_of(theorem_points(rng).iter().map(|z| {
                Ok(torsion(&e.eval(z)?)
                    .max_abs()
                    .max(torsion(&m.eval(z)?).max_abs()))
            }))
        }),
        at_most("main-theorem/duality", 1e-5, |ctx, rng| {
            let spec = theorem_spec();
            let model = ctx.model(warped::warped_model(&spec)?);
            let (e, m) = lifted_pair(&spec)?;
            max_of(
                theorem_points(rng)
                    .iter()
                    .map(|z| model.duality_residual(&e.eval(z)?, &m.eval(z)?, z)),
            )
        }),
        at_most("main-theorem/tensor-closure", 1e-4, |ctx, rng| {
            let spec = theorem_spec();
            let model = ctx.model(warped::warped_model(&spec)?);
            let (e, m) = lifted_pair(&spec)?;
            max_of(theorem_points(rng).iter().map(|z| {
                let t = model.tensor_at(z)?;
                Ok(scaled(
                    &model.amari_chentsov(&e.eval(z)?, &m.eval(z)?, z)?,
                    &t,
                ))
            }))
        }),
        at_most("main-theorem/divergence-metric", 1e-3, |ctx, rng| {
            let spec = theorem_spec();
            let d = warped::warped_model(&spec)?
                .divergence()
                .ok_or(GeomError::MissingStructure("divergence"))?
                .clone();
            max_of(theorem_points(rng).iter().map(|z| {
                Ok(rel_matrix(
                    &induced_metric(&d, z, ctx.steps)?,
                    &warped::warped_metric(&spec, z)?,
                ))
            }))
        }),
        at_most("main-theorem/divergence-connections", 1e-2, |ctx, rng| {
            let spec = theorem_spec();
            let d = warped::warped_model(&spec)?
                .divergence()
                .ok_or(GeomError::MissingStructure("divergence"))?
                .clone();
            let (e, m) = lifted_pair(&spec)?;
            max_of(theorem_points(rng).iter().take(8).map(|z| {
                let gd = induced_connection(&d, z, ctx.steps)?;
                let gd_star = induced_dual_connection(&d, z, ctx.steps)?;
                Ok(scaled(&gd, &m.eval(z)?).max(scaled(&gd_star, &e.eval(z)?)))
            }))
        }),
        at_most("main-theorem/divergence-tensor", 1e-2, |ctx, rng| {
            let spec = theorem_spec();
            let model = warped::warped_model(&spec)?;
            let d = model
                .divergence()
                .ok_or(GeomError::MissingStructure("divergence"))?
                .clone();
            max_of(theorem_points(rng).iter().take(8).map(|z| {
                Ok(scaled(
                    &induced_tensor(&d, z, ctx.steps)?,
                    &model.tensor_at(z)?,
                ))
            }))
        }),
    ]
}

// ---------------------------------------------------------------- counterexample

fn polar_mismatch(ctx: &Ctx) -> Result<warped::CanonicalMismatch, GeomError> {
    let spec = warped::polar_spec();
    let p = WarpedPoint::new(&spec, vec![1.0], vec![0.0])?;
    let q = WarpedPoint::new(&spec, vec![1.0], vec![FRAC_PI_2])?;
    let flat = ConnectionField::zero(1);
    warped::canonical_mismatch_demo(&spec, &flat, &flat, &p, &q, &ctx.shooting)
}

fn counterexample() -> Vec<Check> {
    vec![
        at_most("counterexample/lifted", 1e-6, |ctx, _| {
            // Base points coincide; the fiber contributes f(1)²·½(π/2)².
            Ok((polar_mismatch(ctx)?.lifted - PI * PI / 8.0).abs())
        }),
        at_most("counterexample/true-canonical", 1e-4, |ctx, _| {
            // In Cartesian coordinates the points are (1, 0) and (0, 1): D = ½·chord².
            let chord2 = (1.0f64 - 0.0).powi(2) + (0.0f64 - 1.0).powi(2);
            Ok((polar_mismatch(ctx)?.true_canonical - 0.5 * chord2).abs())
        }),
        at_least("counterexample/gap", 0.2, |ctx, _| {
            Ok(polar_mismatch(ctx)?.gap)
        }),
        at_most("counterexample/same-point-gap", 1e-12, |ctx, _| {
            let spec = warped::polar_spec();
            let p = WarpedPoint::new(&spec, vec![1.3], vec![0.2])?;
            let flat = ConnectionField::zero(1);
            Ok(warped::canonical_mismatch_demo(&spec, &flat, &flat, &p, &p, &ctx.shooting)?.gap)
        }),
        at_most("counterexample/constant-warp-gap", 1e-6, |ctx, rng| {
            let spec = WarpSpec::from_kind(
                ManifoldModel::euclidean(1),
                ManifoldModel::euclidean(2),
                WarpKind::Constant(1.0),
            );
            let flat1 = ConnectionField::zero(1);
            let flat2 = ConnectionField::zero(2);
            max_of((0..5).map(|_| {
                let p = WarpedPoint::new(
                    &spec,
                    random_vec(rng, 1, -1.0, 1.0),
                    random_vec(rng, 2, -1.0, 1.0),
                )?;
                let q = WarpedPoint::new(
                    &spec,
                    random_vec(rng, 1, -1.0, 1.0),
                    random_vec(rng, 2, -1.0, 1.0),
                )?;
                Ok(
                    warped::canonical_mismatch_demo(&spec, &flat1, &flat2, &p, &q, &ctx.shooting)?
                        .gap,
                )
            }))
        }),
    ]
}
