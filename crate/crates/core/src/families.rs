//! Exponential and mixture families.
//!
//! An exponential family is described by its log-partition ψ over natural
//! parameters θ; metric and cubic tensor are the second and third derivatives
//! of ψ. A mixture family is described by a carrier and component functions
//! tabulated on a quadrature grid.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::divergence::DivergenceFn;
use crate::error::{check_dim, GeomError, Result};
use crate::fd::{gradient, hessian, third_partials, FdStep};
use crate::geometry::{ConnectionField, CubicTensorField, ManifoldModel, MetricField, SmoothMap};
use crate::tensor::{cholesky, Rank3};

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type Predicate = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;
type SampleFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Quadrature nodes and positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.len() != weights.len() || nodes.is_empty() {
            return Err(GeomError::Invalid(
                "grid needs equally many nodes and weights".into(),
            ));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(GeomError::Invalid(
                "quadrature weights must be positive".into(),
            ));
        }
        Ok(QuadratureGrid { nodes, weights })
    }

    /// Composite trapezoid rule on [lo, hi].
    pub fn trapezoid(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if count < 2 || !(hi > lo) {
            return Err(GeomError::Invalid(format!(
                "bad trapezoid grid [{lo}, {hi}] with {count} nodes"
            )));
        }
        let h = (hi - lo) / (count - 1) as f64;
        let nodes = (0..count).map(|i| lo + h * i as f64).collect();
        let weights = (0..count)
            .map(|i| if i == 0 || i == count - 1 { 0.5 * h } else { h })
            .collect();
        QuadratureGrid::new(nodes, weights)
    }

    /// Counting measure on the atoms 0, 1, …, count − 1.
    pub fn atoms(count: usize) -> Result<Self> {
        QuadratureGrid::new((0..count).map(|i| i as f64).collect(), vec![1.0; count])
    }

    /// The default real-line grid: trapezoid on [−12, 12] with 4001 nodes.
    pub fn real_line() -> Self {
        QuadratureGrid::trapezoid(-12.0, 12.0, 4001).expect("static grid is valid")
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Σ w_i v_i for values tabulated at the nodes.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    pub fn integrate_fn(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(*x))
            .sum()
    }
}

/// Sufficient statistics and carrier of an exponential family on a grid.
#[derive(Clone)]
pub struct SampleSpace {
    pub grid: QuadratureGrid,
    pub stats: Vec<SampleFn>,
    pub carrier: SampleFn,
}

#[derive(Clone)]
pub struct ExponentialFamilySpec {
    name: String,
    dim: usize,
    psi: ScalarFn,
    domain: Predicate,
    anchor: Vec<f64>,
    sample_space: Option<SampleSpace>,
    pub fd: FdStep,
    pub third_step: FdStep,
}

impl fmt::Debug for ExponentialFamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExponentialFamilySpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

/// Which KL argument order the Bregman divergence of ψ reproduces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KlOrientation {
    /// B_ψ(θ_p, θ_q) = KL(p ‖ q)
    SameOrder,
    /// B_ψ(θ_p, θ_q) = KL(q ‖ p)
    Swapped,
}

pub const BREGMAN_KL_ORIENTATION: KlOrientation = KlOrientation::Swapped;

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

impl ExponentialFamilySpec {
    /// `anchor` is an admissible starting point for Newton solves.
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        psi: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        domain: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
        anchor: Vec<f64>,
    ) -> Self {
        ExponentialFamilySpec {
            name: name.into(),
            dim,
            psi: Arc::new(psi),
            domain: Arc::new(domain),
            anchor,
            sample_space: None,
            fd: FdStep::new(1e-4),
            third_step: FdStep::new(1e-2),
        }
    }

    pub fn with_sample_space(mut self, space: SampleSpace) -> Self {
        self.sample_space = Some(space);
        self
    }

    /// ψ(θ) = ½|θ|².
    pub fn quadratic(dim: usize) -> Self {
        ExponentialFamilySpec::new(
            format!("quadratic:n={dim}"),
            dim,
            |t| 0.5 * t.iter().map(|v| v * v).sum::<f64>(),
            |_| true,
            vec![0.0; dim],
        )
    }

    /// ψ(θ) = ln(1 + e^θ) with sufficient statistic x on the atoms {0, 1}.
    pub fn bernoulli() -> Self {
        let space = SampleSpace {
            grid: QuadratureGrid::atoms(2).expect("two atoms"),
            stats: vec![Arc::new(|x| x)],
            carrier: Arc::new(|_| 0.0),
        };
        ExponentialFamilySpec::new("bernoulli", 1, |t| softplus(t[0]), |_| true, vec![0.0])
            .with_sample_space(space)
    }

    /// Normal family in natural parameters θ = (μ/σ², −1/(2σ²)) with
    /// statistics (x, x²) on the default real-line grid.
    pub fn gaussian_natural(grid: QuadratureGrid) -> Self {
        let space = SampleSpace {
            grid,
            stats: vec![Arc::new(|x| x), Arc::new(|x| x * x)],
            carrier: Arc::new(|_| 0.0),
        };
        ExponentialFamilySpec::new(
            "gaussian-natural",
            2,
            gaussian_psi,
            |t| t[1] < -1e-12,
            vec![0.0, -0.5],
        )
        .with_sample_space(space)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn admits(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim && theta.iter().all(|v| v.is_finite()) && (self.domain)(theta)
    }

    pub fn psi(&self, theta: &[f64]) -> Result<f64> {
        check_dim(self.dim, theta.len())?;
        if !self.admits(theta) {
            return Err(GeomError::Domain(format!(
                "{} does not admit θ = {theta:?}",
                self.name
            )));
        }
        Ok((self.psi)(theta))
    }

    /// Log-partition by quadrature, ln ∫ exp(Σ θ_i f_i(x) + γ(x)) dx.
    pub fn psi_by_quadrature(&self, theta: &[f64]) -> Result<f64> {
        check_dim(self.dim, theta.len())?;
        let space = self
            .sample_space
            .as_ref()
            .ok_or(GeomError::MissingStructure("sample space"))?;
        let exponent = |x: f64| {
            theta
                .iter()
                .zip(&space.stats)
                .map(|(t, f)| t * f(x))
                .sum::<f64>()
                + (space.carrier)(x)
        };
        Ok(space.grid.integrate_fn(|x| exponent(x).exp()).ln())
    }

    pub fn grad_psi(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let f = |t: &[f64]| self.psi(t);
        gradient(&f, theta, self.fd.at(theta))
    }

    /// Fisher metric: the Hessian of ψ by central differences.
    pub fn fisher(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        self.psi(theta)?;
        let f = |t: &[f64]| self.psi(t);
        let g = hessian(&f, theta, self.fd.at(theta))?;
        cholesky(&g)?;
        Ok(g)
    }

    /// Third partial derivatives of ψ.
    pub fn ac_tensor(&self, theta: &[f64]) -> Result<Rank3> {
        self.psi(theta)?;
        let f = |t: &[f64]| self.psi(t);
        third_partials(&f, theta, self.third_step.at(theta))
    }

    /// ψ(θ_p) − ψ(θ_q) − ∇ψ(θ_q)·(θ_p − θ_q).
    pub fn bregman(&self, theta_p: &[f64], theta_q: &[f64]) -> Result<f64> {
        let grad = self.grad_psi(theta_q)?;
        let lin: f64 = grad
            .iter()
            .zip(theta_p.iter().zip(theta_q))
            .map(|(g, (p, q))| g * (p - q))
            .sum();
        Ok(self.psi(theta_p)? - self.psi(theta_q)? - lin)
    }

    /// Solves ∇ψ(θ) = η by damped Newton and returns θ* with φ(η) = θ*·η − ψ(θ*).
    pub fn legendre_dual(&self, eta: &[f64]) -> Result<LegendreDual> {
        check_dim(self.dim, eta.len())?;
        const MAX_ITER: usize = 100;
        let tol = 1e-10 * eta.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let residual = |theta: &[f64]| -> Result<Vec<f64>> {
            Ok(self
                .grad_psi(theta)?
                .iter()
                .zip(eta)
                .map(|(g, e)| g - e)
                .collect())
        };
        let norm = |r: &[f64]| r.iter().fold(0.0_f64, |m, v| m.max(v.abs()));

        let mut theta = self.anchor.clone();
        let mut r = residual(&theta)?;
        let mut best = norm(&r);
        for iter in 0..MAX_ITER {
            if best <= tol {
                let psi = self.psi(&theta)?;
                let phi = theta.iter().zip(eta).map(|(t, e)| t * e).sum::<f64>() - psi;
                return Ok(LegendreDual {
                    theta,
                    phi,
                    iterations: iter,
                });
            }
            // A degenerate Hessian means θ ran off towards the boundary of the gradient image.
            let h = self.fisher(&theta).map_err(|_| GeomError::NoConvergence {
                iterations: iter,
                best_residual: best,
            })?;
            let step =
                h.lu()
                    .solve(&DVector::from_column_slice(&r))
                    .ok_or(GeomError::NoConvergence {
                        iterations: iter,
                        best_residual: best,
                    })?;
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let trial: Vec<f64> = theta
                    .iter()
                    .zip(step.iter())
                    .map(|(t, s)| t - lambda * s)
                    .collect();
                if self.admits(&trial) {
                    if let Ok(rt) = residual(&trial) {
                        let nt = norm(&rt);
                        if nt < best {
                            theta = trial;
                            r = rt;
                            best = nt;
                            accepted = true;
                            break;
                        }
                    }
                }
                lambda *= 0.5;
            }
            if !accepted {
                return Err(GeomError::NoConvergence {
                    iterations: iter,
                    best_residual: best,
                });
            }
        }
        Err(GeomError::NoConvergence {
            iterations: MAX_ITER,
            best_residual: best,
        })
    }

    /// Bregman divergence of ψ as a two-point divergence on natural parameters.
    pub fn divergence(&self) -> DivergenceFn {
        let spec = self.clone();
        let guard = self.clone();
        DivergenceFn::new(format!("bregman:{}", self.name), self.dim, move |p, q| {
            spec.bregman(p, q).unwrap_or(f64::NAN)
        })
        .with_guard(move |p, q| guard.admits(p) && guard.admits(q))
    }

    /// Dually flat model in natural coordinates: e-connection zero, m-connection its dual.
    pub fn model(&self) -> ManifoldModel {
        let spec = self.clone();
        let metric = MetricField::new(self.dim, move |t| {
            spec.fisher(t)
                .unwrap_or_else(|_| DMatrix::from_element(t.len(), t.len(), f64::NAN))
        });
        let guard = self.clone();
        let base = ManifoldModel::new(format!("expfam:{}", self.name), metric)
            .with_guard(move |t| guard.admits(t))
            .with_fd(FdStep::new(1e-3));
        let e_field = base.guarded(&ConnectionField::zero(self.dim));
        let m_field = base.dual_field(&e_field);
        let spec = self.clone();
        let tensor = CubicTensorField::new(self.dim, move |t| spec.ac_tensor(t));
        base.with_connections(e_field, m_field)
            .with_tensor(tensor)
            .with_divergence(self.divergence())
    }
}

fn gaussian_psi(t: &[f64]) -> f64 {
    -t[0] * t[0] / (4.0 * t[1]) + 0.5 * std::f64::consts::PI.ln() - 0.5 * (-t[1]).ln()
}

/// Result of [`ExponentialFamilySpec::legendre_dual`].
#[derive(Debug, Clone, PartialEq)]
pub struct LegendreDual {
    pub theta: Vec<f64>,
    pub phi: f64,
    pub iterations: usize,
}

/// Natural parameters of N(μ, σ²) and the log-partition there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalNatural {
    pub theta1: f64,
    pub theta2: f64,
    pub psi: f64,
}

pub fn normal_natural_params(mu: f64, sigma: f64) -> Result<NormalNatural> {
    if !(sigma > 0.0) || !mu.is_finite() || !sigma.is_finite() {
        return Err(GeomError::Domain(format!(
            "σ must be positive and finite, got {sigma}"
        )));
    }
    let theta1 = mu / (sigma * sigma);
    let theta2 = -1.0 / (2.0 * sigma * sigma);
    Ok(NormalNatural {
        theta1,
        theta2,
        psi: gaussian_psi(&[theta1, theta2]),
    })
}

/// Inverse of [`normal_natural_params`]: (μ, σ).
pub fn normal_from_natural(theta1: f64, theta2: f64) -> Result<(f64, f64)> {
    if !(theta2 < 0.0) {
        return Err(GeomError::Domain(format!(
            "θ² must be negative, got {theta2}"
        )));
    }
    Ok((-theta1 / (2.0 * theta2), (-1.0 / (2.0 * theta2)).sqrt()))
}

/// (μ, σ) ↦ natural parameters, with its analytic Jacobian.
pub fn normal_to_natural_map() -> SmoothMap {
    SmoothMap::new(2, 2, |x| {
        let n = normal_natural_params(x[0], x[1])?;
        Ok(vec![n.theta1, n.theta2])
    })
    .with_jacobian(|x| {
        let (m, s) = (x[0], x[1]);
        DMatrix::from_row_slice(
            2,
            2,
            &[
                1.0 / (s * s),
                -2.0 * m / (s * s * s),
                0.0,
                1.0 / (s * s * s),
            ],
        )
    })
}

/// Normal family in (μ, σ) with metric diag(1/σ², 2/σ²) and its Levi-Civita
/// connection as a self-dual pair.
pub fn normal_model() -> ManifoldModel {
    let metric = MetricField::new(2, |x| {
        let s2 = x[1] * x[1];
        DMatrix::from_diagonal(&nalgebra::dvector![1.0 / s2, 2.0 / s2])
    })
    .with_partials(|x| {
        let s3 = x[1] * x[1] * x[1];
        vec![
            DMatrix::zeros(2, 2),
            DMatrix::from_diagonal(&nalgebra::dvector![-2.0 / s3, -4.0 / s3]),
        ]
    });
    let base = ManifoldModel::new("normal", metric).with_guard(|x| x[1] > 1e-6);
    let lc = base.guarded(&ConnectionField::new(2, |x| {
        let s = x[1];
        let mut g = Rank3::zeros(2);
        g.set(0, 0, 1, -1.0 / s);
        g.set(0, 1, 0, -1.0 / s);
        g.set(1, 0, 0, 1.0 / (2.0 * s));
        g.set(1, 1, 1, -1.0 / s);
        Ok(g)
    }));
    base.with_connections(lc.clone(), lc)
}

/// Mixture family p(x; η) = c(x) + Σ η_i h^i(x) tabulated on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureFamilySpec {
    name: String,
    grid: QuadratureGrid,
    carrier: Vec<f64>,
    components: Vec<Vec<f64>>,
}

pub const MIXTURE_QUADRATURE_TOL: f64 = 1e-8;

impl MixtureFamilySpec {
    pub fn new(
        name: impl Into<String>,
        grid: QuadratureGrid,
        carrier: Vec<f64>,
        components: Vec<Vec<f64>>,
    ) -> Result<Self> {
        check_dim(grid.len(), carrier.len())?;
        for h in &components {
            check_dim(grid.len(), h.len())?;
        }
        let mass = grid.integrate(&carrier);
        if (mass - 1.0).abs() > MIXTURE_QUADRATURE_TOL {
            return Err(GeomError::Invalid(format!(
                "carrier integrates to {mass}, not 1"
            )));
        }
        for (i, h) in components.iter().enumerate() {
            let m = grid.integrate(h);
            if m.abs() > MIXTURE_QUADRATURE_TOL {
                return Err(GeomError::Invalid(format!(
                    "component {i} integrates to {m}, not 0"
                )));
            }
        }
        Ok(MixtureFamilySpec {
            name: name.into(),
            grid,
            carrier,
            components,
        })
    }

    /// Categorical distributions on n+1 atoms: c is the last atom's indicator
    /// and h^i = δ_i − δ_{n+1}, so η is the simplex chart.
    pub fn categorical(n: usize) -> Self {
        let grid = QuadratureGrid::atoms(n + 1).expect("n + 1 atoms");
        let mut carrier = vec![0.0; n + 1];
        carrier[n] = 1.0;
        let components = (0..n)
            .map(|i| {
                let mut h = vec![0.0; n + 1];
                h[i] = 1.0;
                h[n] = -1.0;
                h
            })
            .collect();
        MixtureFamilySpec::new(format!("categorical:n={n}"), grid, carrier, components)
            .expect("categorical family is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// Density values at the grid nodes; every value must be positive.
    pub fn density(&self, eta: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), eta.len())?;
        let mut p = self.carrier.clone();
        for (e, h) in eta.iter().zip(&self.components) {
            for (pi, hi) in p.iter_mut().zip(h) {
                *pi += e * hi;
            }
        }
        match p.iter().position(|v| !(*v > 0.0)) {
            Some(node) => Err(GeomError::NonPositiveDensity { node }),
            None => Ok(p),
        }
    }

    /// g_ij = Σ_nodes w h^i h^j / p.
    pub fn fisher(&self, eta: &[f64]) -> Result<DMatrix<f64>> {
        let p = self.density(eta)?;
        let n = self.dim();
        let w = self.grid.weights();
        let g = DMatrix::from_fn(n, n, |i, j| {
            let (hi, hj) = (&self.components[i], &self.components[j]);
            (0..p.len()).map(|x| w[x] * hi[x] * hj[x] / p[x]).sum()
        });
        cholesky(&g)?;
        Ok(g)
    }
}

/// Builds an exponential family from registry parameters.
///
/// Keys: `family` (quadratic | bernoulli | gaussian-natural), `dim` for the
/// quadratic potential, `grid.lo`, `grid.hi`, `grid.nodes` for the Gaussian grid.
pub fn family_from_params(params: &BTreeMap<String, String>) -> Result<ExponentialFamilySpec> {
    let get_f64 = |key: &str, default: f64| -> Result<f64> {
        params.get(key).map_or(Ok(default), |v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| GeomError::Invalid(format!("{key} = {v} is not a number")))
        })
    };
    let get_usize = |key: &str, default: usize| -> Result<usize> {
        params.get(key).map_or(Ok(default), |v| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| GeomError::Invalid(format!("{key} = {v} is not an integer")))
        })
    };
    let family = params
        .get("family")
        .map(|s| s.trim())
        .unwrap_or("quadratic");
    match family {
        "quadratic" => {
            let dim = get_usize("dim", 1)?;
            if dim == 0 {
                return Err(GeomError::Invalid("dim must be positive".into()));
            }
            Ok(ExponentialFamilySpec::quadratic(dim))
        }
        "bernoulli" => Ok(ExponentialFamilySpec::bernoulli()),
        "gaussian-natural" => {
            let grid = QuadratureGrid::trapezoid(
                get_f64("grid.lo", -12.0)?,
                get_f64("grid.hi", 12.0)?,
                get_usize("grid.nodes", 4001)?,
            )?;
            Ok(ExponentialFamilySpec::gaussian_natural(grid))
        }
        other => Err(GeomError::Invalid(format!("unknown family '{other}'"))),
    }
}
