//! Geodesics of arbitrary connection fields.
//!
//! Initial-value problems use classical RK4 on the first-order system
//! (x, v)' = (v, −Γ(x)(v, v)). Boundary problems are solved by single shooting
//! with a finite-difference Jacobian of the endpoint map. Path integrals use
//! composite Simpson on the RK grid.

use std::fmt;
use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, GeomError, Result};
use crate::geometry::{ConnectionField, ManifoldModel};
use crate::tensor::quad_form;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingConfig {
    /// RK4 steps on [0, 1]; even and at least 16.
    pub rk_steps: usize,
    /// Endpoint tolerance |γ(1) − q|∞.
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Initial Newton step fraction, in (0, 1].
    pub damping: f64,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        ShootingConfig {
            rk_steps: 200,
            newton_tol: 1e-10,
            max_newton: 50,
            damping: 1.0,
        }
    }
}

impl ShootingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rk_steps < 16 || !self.rk_steps.is_multiple_of(2) {
            return Err(GeomError::Invalid(format!(
                "rk_steps must be even and ≥ 16, got {}",
                self.rk_steps
            )));
        }
        if !(self.newton_tol > 0.0) {
            return Err(GeomError::Invalid("newton_tol must be positive".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(GeomError::Invalid(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        Ok(())
    }
}

/// A sampled geodesic on t ∈ [0, 1].
#[derive(Clone)]
pub struct GeodesicPath {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    connection: ConnectionField,
}

impl fmt::Debug for GeodesicPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeodesicPath")
            .field("nodes", &self.times.len())
            .field("start", &self.points.first())
            .field("end", &self.points.last())
            .finish()
    }
}

impl GeodesicPath {
    /// Wraps externally sampled curve data, e.g. a candidate curve to be tested
    /// against the geodesic equations.
    pub fn from_samples(
        times: Vec<f64>,
        points: Vec<Vec<f64>>,
        velocities: Vec<Vec<f64>>,
        connection: ConnectionField,
    ) -> Result<Self> {
        if times.len() < 3 || points.len() != times.len() || velocities.len() != times.len() {
            return Err(GeomError::Invalid(
                "a path needs at least three nodes with matching samples".into(),
            ));
        }
        if times[0] != 0.0
            || *times.last().unwrap() != 1.0
            || times.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(GeomError::Invalid(
                "path times must increase strictly from 0 to 1".into(),
            ));
        }
        for (x, v) in points.iter().zip(&velocities) {
            check_dim(connection.dim(), x.len())?;
            check_dim(connection.dim(), v.len())?;
        }
        Ok(GeodesicPath {
            times,
            points,
            velocities,
            connection,
        })
    }

    pub fn start(&self) -> &[f64] {
        &self.points[0]
    }

    pub fn end(&self) -> &[f64] {
        self.points.last().expect("paths have at least two nodes")
    }

    pub fn initial_velocity(&self) -> &[f64] {
        &self.velocities[0]
    }

    pub fn connection(&self) -> &ConnectionField {
        &self.connection
    }

    /// Largest |x″ + Γ(x)(x′, x′)| at interior nodes, with x″ from central
    /// differences of the stored velocities.
    pub fn equation_residual(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for i in 1..self.times.len() - 1 {
            let dt = self.times[i + 1] - self.times[i - 1];
            let gamma = self.connection.eval(&self.points[i])?;
            let quad = gamma.contract_lower(&self.velocities[i], &self.velocities[i]);
            for k in 0..quad.len() {
                let acc = (self.velocities[i + 1][k] - self.velocities[i - 1][k]) / dt;
                worst = worst.max((acc + quad[k]).abs());
            }
        }
        Ok(worst)
    }

    /// CSV with header `t,x0..,v0..`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let n = self.points[0].len();
        let mut header = vec!["t".to_string()];
        header.extend((0..n).map(|i| format!("x{i}")));
        header.extend((0..n).map(|i| format!("v{i}")));
        writeln!(w, "{}", header.join(","))?;
        for ((t, x), v) in self.times.iter().zip(&self.points).zip(&self.velocities) {
            let row: Vec<String> = std::iter::once(*t)
                .chain(x.iter().cloned())
                .chain(v.iter().cloned())
                .map(|f| f.to_string())
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn accel(conn: &ConnectionField, x: &[f64], v: &[f64], t: f64) -> Result<Vec<f64>> {
    match conn.eval(x) {
        Ok(g) => Ok(g.contract_lower(v, v).into_iter().map(|a| -a).collect()),
        Err(GeomError::Domain(_)) | Err(GeomError::Boundary(_)) => {
            Err(GeomError::LeftDomain { time: t })
        }
        Err(e) => Err(e),
    }
}

fn axpy(x: &[f64], a: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(xi, yi)| xi + a * yi).collect()
}

/// Integrates the geodesic with x(0) = x0, x'(0) = v0 up to t = 1.
pub fn geodesic_ivp(
    conn: &ConnectionField,
    x0: &[f64],
    v0: &[f64],
    cfg: &ShootingConfig,
) -> Result<GeodesicPath> {
    cfg.validate()?;
    check_dim(conn.dim(), x0.len())?;
    check_dim(conn.dim(), v0.len())?;
    // The start point itself must be admissible.
    conn.eval(x0)?;
    let steps = cfg.rk_steps;
    let h = 1.0 / steps as f64;
    let mut times = Vec::with_capacity(steps + 1);
    let mut points = Vec::with_capacity(steps + 1);
    let mut velocities = Vec::with_capacity(steps + 1);
    let (mut x, mut v) = (x0.to_vec(), v0.to_vec());
    times.push(0.0);
    points.push(x.clone());
    velocities.push(v.clone());
    for s in 0..steps {
        let t = s as f64 * h;
        let k1x = v.clone();
        let k1v = accel(conn, &x, &v, t)?;
        let x2 = axpy(&x, 0.5 * h, &k1x);
        let k2x = axpy(&v, 0.5 * h, &k1v);
        let k2v = accel(conn, &x2, &k2x, t + 0.5 * h)?;
        let x3 = axpy(&x, 0.5 * h, &k2x);
        let k3x = axpy(&v, 0.5 * h, &k2v);
        let k3v = accel(conn, &x3, &k3x, t + 0.5 * h)?;
        let x4 = axpy(&x, h, &k3x);
        let k4x = axpy(&v, h, &k3v);
        let k4v = accel(conn, &x4, &k4x, t + h)?;
        for i in 0..x.len() {
            x[i] += h / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
            v[i] += h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
        }
        if x.iter().chain(&v).any(|c| !c.is_finite()) {
            return Err(GeomError::LeftDomain { time: t + h });
        }
        times.push(if s + 1 == steps {
            1.0
        } else {
            (s + 1) as f64 * h
        });
        points.push(x.clone());
        velocities.push(v.clone());
    }
    // The end point must be admissible too.
    accel(conn, &x, &v, 1.0)?;
    Ok(GeodesicPath {
        times,
        points,
        velocities,
        connection: conn.clone(),
    })
}

fn max_norm(r: &[f64]) -> f64 {
    r.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Geodesic from `p` (t = 0) to `q` (t = 1) by damped Newton shooting on the
/// initial velocity, starting from the chart difference q − p.
pub fn geodesic_bvp(
    conn: &ConnectionField,
    p: &[f64],
    q: &[f64],
    cfg: &ShootingConfig,
) -> Result<GeodesicPath> {
    let guess: Vec<f64> = q.iter().zip(p).map(|(a, b)| a - b).collect();
    geodesic_bvp_from(conn, p, q, &guess, cfg)
}

/// Shooting with an explicit initial velocity guess.
pub fn geodesic_bvp_from(
    conn: &ConnectionField,
    p: &[f64],
    q: &[f64],
    guess: &[f64],
    cfg: &ShootingConfig,
) -> Result<GeodesicPath> {
    cfg.validate()?;
    check_dim(conn.dim(), q.len())?;
    let n = p.len();
    let miss = |v: &[f64]| -> Result<(GeodesicPath, Vec<f64>)> {
        let path = geodesic_ivp(conn, p, v, cfg)?;
        let r = path.end().iter().zip(q).map(|(a, b)| a - b).collect();
        Ok((path, r))
    };

    let mut v = guess.to_vec();
    let (mut path, mut r) = miss(&v)?;
    let mut best = max_norm(&r);
    for iter in 0..=cfg.max_newton {
        if best <= cfg.newton_tol {
            return Ok(path);
        }
        if iter == cfg.max_newton {
            break;
        }
        let delta = 1e-6 * v.iter().fold(1.0_f64, |m, c| m.max(c.abs()));
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut vp = v.clone();
            let mut vm = v.clone();
            vp[j] += delta;
            vm[j] -= delta;
            let (_, rp) = miss(&vp)?;
            let (_, rm) = miss(&vm)?;
            for i in 0..n {
                jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * delta);
            }
        }
        let step =
            jac.lu()
                .solve(&DVector::from_column_slice(&r))
                .ok_or(GeomError::NoConvergence {
                    iterations: iter,
                    best_residual: best,
                })?;
        let mut lambda = cfg.damping;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = v
                .iter()
                .zip(step.iter())
                .map(|(a, s)| a - lambda * s)
                .collect();
            if let Ok((tp, tr)) = miss(&trial) {
                let nt = max_norm(&tr);
                if nt < best {
                    v = trial;
                    path = tp;
                    r = tr;
                    best = nt;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(GeomError::NoConvergence {
                iterations: iter + 1,
                best_residual: best,
            });
        }
    }
    Err(GeomError::NoConvergence {
        iterations: cfg.max_newton,
        best_residual: best,
    })
}

/// Composite Simpson over uniformly spaced samples on [0, 1].
pub fn simpson(values: &[f64]) -> f64 {
    let m = values.len() - 1;
    assert!(
        m >= 2 && m.is_multiple_of(2),
        "Simpson needs an even number of intervals"
    );
    let h = 1.0 / m as f64;
    let mut s = values[0] + values[m];
    for (i, v) in values.iter().enumerate().take(m).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

/// ∫₀¹ t ‖γ̇(t)‖² dt along a sampled path.
pub fn energy_integral(model: &ManifoldModel, path: &GeodesicPath) -> Result<f64> {
    let integrand = path
        .times
        .iter()
        .zip(&path.points)
        .zip(&path.velocities)
        .map(|((t, x), v)| Ok(t * quad_form(&model.metric_at(x)?, v, v)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(simpson(&integrand))
}

/// ∫₀¹ ‖γ̇(t)‖ dt along a sampled path.
pub fn arc_length(model: &ManifoldModel, path: &GeodesicPath) -> Result<f64> {
    let integrand = path
        .points
        .iter()
        .zip(&path.velocities)
        .map(|(x, v)| Ok(quad_form(&model.metric_at(x)?, v, v).max(0.0).sqrt()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(simpson(&integrand))
}

/// Canonical divergence of (g, ∇): the energy integral along the ∇-geodesic from p to q.
pub fn canonical_divergence(
    model: &ManifoldModel,
    conn: &ConnectionField,
    p: &[f64],
    q: &[f64],
    cfg: &ShootingConfig,
) -> Result<f64> {
    model.check(p)?;
    model.check(q)?;
    if p == q {
        return Ok(0.0);
    }
    let path = geodesic_bvp(conn, p, q, cfg)?;
    Ok(energy_integral(model, &path)?.max(0.0))
}

/// Dual canonical divergence D*(p ‖ q) = D(q ‖ p), integrated along the ∇*-geodesic.
pub fn canonical_divergence_dual(
    model: &ManifoldModel,
    dual_conn: &ConnectionField,
    p: &[f64],
    q: &[f64],
    cfg: &ShootingConfig,
) -> Result<f64> {
    canonical_divergence(model, dual_conn, q, p, cfg)
}

/// Length of the Levi-Civita geodesic between p and q.
pub fn riemannian_distance(
    model: &ManifoldModel,
    p: &[f64],
    q: &[f64],
    cfg: &ShootingConfig,
) -> Result<f64> {
    model.check(p)?;
    model.check(q)?;
    if p == q {
        return Ok(0.0);
    }
    let path = geodesic_bvp(&model.levi_civita_field(), p, q, cfg)?;
    arc_length(model, &path)
}
