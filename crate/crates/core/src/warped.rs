//! Warped products B ×_f F.
//!
//! Points use the concatenated chart (b, x) with the base coordinates first.
//! The warp f is a positive function on the base; its gradient is taken in the
//! base metric, grad f = g_B⁻¹ df.
//!
//! Lifting rules for connections (indices b on the base, x on the fiber):
//!
//! ```text
//! Γ^{b_k}_{b_i b_j} = Γ_B^k_ij
//! Γ^{x_c}_{b_i x_a} = Γ^{x_c}_{x_a b_i} = δ_ac ∂_i f / f
//! Γ^{b_k}_{x_a x_b} = −f g_F,ab (grad f)^k
//! Γ^{x_c}_{x_a x_b} = Γ_F^c_ab
//! ```
//!
//! All other components vanish.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::divergence::DivergenceFn;
use crate::error::{check_dim, GeomError, Result};
use crate::geodesic::{canonical_divergence, GeodesicPath, ShootingConfig};
use crate::geometry::{ConnectionField, CubicTensorField, ManifoldModel, MetricField};
use crate::tensor::{quad_form, Rank3};

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Relative step of the central difference used when no analytic df is given.
const WARP_FD_STEP: f64 = 1e-6;

/// Warp functions expressible in configuration files; all act on the first
/// base coordinate b₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WarpKind {
    /// f ≡ c
    Constant(f64),
    /// f = c0 + c1·b₀
    Linear { c0: f64, c1: f64 },
    /// f = c0·exp(c1·b₀)
    Exp { c0: f64, c1: f64 },
}

impl WarpKind {
    pub fn eval(&self, b: &[f64]) -> f64 {
        match *self {
            WarpKind::Constant(c) => c,
            WarpKind::Linear { c0, c1 } => c0 + c1 * b[0],
            WarpKind::Exp { c0, c1 } => c0 * (c1 * b[0]).exp(),
        }
    }

    /// Coordinate partials ∂_i f.
    pub fn differential(&self, b: &[f64]) -> Vec<f64> {
        let mut df = vec![0.0; b.len()];
        match *self {
            WarpKind::Constant(_) => {}
            WarpKind::Linear { c1, .. } => df[0] = c1,
            WarpKind::Exp { c0, c1 } => df[0] = c0 * c1 * (c1 * b[0]).exp(),
        }
        df
    }
}

impl fmt::Display for WarpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WarpKind::Constant(c) => write!(f, "constant({c})"),
            WarpKind::Linear { c0, c1 } => write!(f, "linear({c0},{c1})"),
            WarpKind::Exp { c0, c1 } => write!(f, "exp({c0},{c1})"),
        }
    }
}

/// Base, fiber and warp of a warped product.
#[derive(Clone)]
pub struct WarpSpec {
    base: ManifoldModel,
    fiber: ManifoldModel,
    warp: ScalarFn,
    warp_diff: Option<VectorFn>,
    label: String,
}

impl fmt::Debug for WarpSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WarpSpec")
            .field("base", &self.base.name())
            .field("fiber", &self.fiber.name())
            .field("warp", &self.label)
            .finish()
    }
}

impl WarpSpec {
    pub fn new(
        base: ManifoldModel,
        fiber: ManifoldModel,
        warp: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        WarpSpec {
            base,
            fiber,
            warp: Arc::new(warp),
            warp_diff: None,
            label: "custom".into(),
        }
    }

    pub fn from_kind(base: ManifoldModel, fiber: ManifoldModel, kind: WarpKind) -> Self {
        WarpSpec {
            base,
            fiber,
            warp: Arc::new(move |b| kind.eval(b)),
            warp_diff: Some(Arc::new(move |b| kind.differential(b))),
            label: kind.to_string(),
        }
    }

    /// Supplies the coordinate partials ∂_i f analytically.
    pub fn with_warp_differential(
        mut self,
        df: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.warp_diff = Some(Arc::new(df));
        self
    }

    pub fn base(&self) -> &ManifoldModel {
        &self.base
    }

    pub fn fiber(&self) -> &ManifoldModel {
        &self.fiber
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.base.dim() + self.fiber.dim()
    }

    pub fn split<'a>(&self, z: &'a [f64]) -> Result<(&'a [f64], &'a [f64])> {
        check_dim(self.dim(), z.len())?;
        Ok(z.split_at(self.base.dim()))
    }

    pub fn warp(&self, b: &[f64]) -> Result<f64> {
        self.base.check(b)?;
        let f = (self.warp)(b);
        if !(f > 0.0 && f.is_finite()) {
            return Err(GeomError::Domain(format!(
                "warp is not positive at {b:?}: {f}"
            )));
        }
        Ok(f)
    }

    /// Coordinate partials ∂_i f; central differences when no analytic form was given.
    pub fn warp_differential(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.warp(b)?;
        if let Some(df) = &self.warp_diff {
            return Ok(df(b));
        }
        Ok(self.warp_differential_fd(b))
    }

    fn warp_differential_fd(&self, b: &[f64]) -> Vec<f64> {
        let h = WARP_FD_STEP * b.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        (0..b.len())
            .map(|i| {
                let mut bp = b.to_vec();
                let mut bm = b.to_vec();
                bp[i] += h;
                bm[i] -= h;
                ((self.warp)(&bp) - (self.warp)(&bm)) / (2.0 * h)
            })
            .collect()
    }

    /// Largest gap between the analytic and finite-difference differential.
    pub fn differential_consistency(&self, b: &[f64]) -> Result<f64> {
        let analytic = self.warp_differential(b)?;
        let fd = self.warp_differential_fd(b);
        Ok(analytic
            .iter()
            .zip(&fd)
            .fold(0.0_f64, |m, (a, c)| m.max((a - c).abs())))
    }

    /// grad f = g_B⁻¹ df.
    pub fn warp_gradient(&self, b: &[f64]) -> Result<Vec<f64>> {
        let df = self.warp_differential(b)?;
        let g_inv = self.base.metric_inverse(b)?;
        Ok((0..df.len())
            .map(|k| (0..df.len()).map(|m| g_inv[(k, m)] * df[m]).sum())
            .collect())
    }

    pub fn admits(&self, z: &[f64]) -> bool {
        if z.len() != self.dim() {
            return false;
        }
        let (b, x) = z.split_at(self.base.dim());
        self.base.admits(b) && self.fiber.admits(x) && {
            let f = (self.warp)(b);
            f > 0.0 && f.is_finite()
        }
    }

    pub fn check(&self, z: &[f64]) -> Result<()> {
        let (b, x) = self.split(z)?;
        self.base.check(b)?;
        self.fiber.check(x)?;
        self.warp(b)?;
        Ok(())
    }
}

/// A point of B ×_f F.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpedPoint {
    pub b: Vec<f64>,
    pub x: Vec<f64>,
}

impl WarpedPoint {
    pub fn new(spec: &WarpSpec, b: Vec<f64>, x: Vec<f64>) -> Result<Self> {
        let p = WarpedPoint { b, x };
        spec.check(&p.chart())?;
        Ok(p)
    }

    pub fn from_chart(spec: &WarpSpec, z: &[f64]) -> Result<Self> {
        let (b, x) = spec.split(z)?;
        WarpedPoint::new(spec, b.to_vec(), x.to_vec())
    }

    pub fn chart(&self) -> Vec<f64> {
        let mut z = self.b.clone();
        z.extend_from_slice(&self.x);
        z
    }
}

/// g_f = g_B ⊕ f² g_F.
pub fn warped_metric(spec: &WarpSpec, z: &[f64]) -> Result<DMatrix<f64>> {
    spec.check(z)?;
    let (b, x) = spec.split(z)?;
    let nb = b.len();
    let f = spec.warp(b)?;
    let gb = spec.base.metric_at(b)?;
    let gf = spec.fiber.metric_at(x)?;
    let mut g = DMatrix::zeros(spec.dim(), spec.dim());
    g.view_mut((0, 0), (nb, nb)).copy_from(&gb);
    g.view_mut((nb, nb), (x.len(), x.len()))
        .copy_from(&(gf * (f * f)));
    Ok(g)
}

/// Partials of g_f from those of the factors:
/// ∂_{b_i} g_f = ∂_i g_B ⊕ 2f ∂_i f g_F and ∂_{x_a} g_f = 0 ⊕ f² ∂_a g_F.
/// Requires closed-form partials on both factor metrics.
pub fn warped_metric_partials(spec: &WarpSpec, z: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    spec.check(z)?;
    let (b, x) = spec.split(z)?;
    let (nb, nf) = (b.len(), x.len());
    let missing = || GeomError::MissingStructure("closed-form metric partials");
    let dgb = spec.base.metric_field().partials(b).ok_or_else(missing)?;
    let dgf = spec.fiber.metric_field().partials(x).ok_or_else(missing)?;
    let f = spec.warp(b)?;
    let df = spec.warp_differential(b)?;
    let gf = spec.fiber.metric_at(x)?;
    let block = |base: &DMatrix<f64>, fiber: &DMatrix<f64>| {
        let mut g = DMatrix::zeros(nb + nf, nb + nf);
        g.view_mut((0, 0), (nb, nb)).copy_from(base);
        g.view_mut((nb, nb), (nf, nf)).copy_from(fiber);
        g
    };
    let mut out: Vec<DMatrix<f64>> = (0..nb)
        .map(|i| block(&dgb[i], &(&gf * (2.0 * f * df[i]))))
        .collect();
    out.extend((0..nf).map(|a| block(&DMatrix::zeros(nb, nb), &(&dgf[a] * (f * f)))));
    Ok(out)
}

/// Lift of a base connection and a fiber connection to B ×_f F at `z`.
pub fn warped_connection(
    spec: &WarpSpec,
    gb: &ConnectionField,
    gf: &ConnectionField,
    z: &[f64],
) -> Result<Rank3> {
    spec.check(z)?;
    check_dim(spec.base.dim(), gb.dim())?;
    check_dim(spec.fiber.dim(), gf.dim())?;
    let (b, x) = spec.split(z)?;
    let nb = b.len();
    let nf = x.len();
    let f = spec.warp(b)?;
    let df = spec.warp_differential(b)?;
    let grad = spec.warp_gradient(b)?;
    let gfib = spec.fiber.metric_at(x)?;
    let cb = gb.eval(b)?;
    let cf = gf.eval(x)?;
    let mut out = Rank3::zeros(nb + nf);
    for k in 0..nb {
        for i in 0..nb {
            for j in 0..nb {
                out.set(k, i, j, cb.get(k, i, j));
            }
        }
        for a in 0..nf {
            for c in 0..nf {
                out.set(k, nb + a, nb + c, -f * gfib[(a, c)] * grad[k]);
            }
        }
    }
    for c in 0..nf {
        for i in 0..nb {
            let v = df[i] / f;
            out.set(nb + c, i, nb + c, v);
            out.set(nb + c, nb + c, i, v);
        }
        for a in 0..nf {
            for d in 0..nf {
                out.set(nb + c, nb + a, nb + d, cf.get(c, a, d));
            }
        }
    }
    Ok(out)
}

/// The lift as a connection field on the concatenated chart.
pub fn warped_connection_field(
    spec: &WarpSpec,
    gb: &ConnectionField,
    gf: &ConnectionField,
) -> ConnectionField {
    let (spec, gb, gf) = (spec.clone(), gb.clone(), gf.clone());
    ConnectionField::new(spec.dim(), move |z| warped_connection(&spec, &gb, &gf, z))
}

/// T_f = T_B ⊕ f² T_F; mixed components vanish.
pub fn warped_tensor(
    spec: &WarpSpec,
    tb: &CubicTensorField,
    tf: &CubicTensorField,
    z: &[f64],
) -> Result<Rank3> {
    spec.check(z)?;
    let (b, x) = spec.split(z)?;
    let nb = b.len();
    let f2 = spec.warp(b)?.powi(2);
    let t_b = tb.eval(b)?;
    let t_f = tf.eval(x)?;
    check_dim(nb, t_b.dim())?;
    check_dim(x.len(), t_f.dim())?;
    Ok(Rank3::from_fn(spec.dim(), |i, j, k| {
        let base = [i, j, k].iter().filter(|&&s| s < nb).count();
        match base {
            3 => t_b.get(i, j, k),
            0 => f2 * t_f.get(i - nb, j - nb, k - nb),
            _ => 0.0,
        }
    }))
}

pub fn warped_tensor_field(
    spec: &WarpSpec,
    tb: &CubicTensorField,
    tf: &CubicTensorField,
) -> CubicTensorField {
    let (spec, tb, tf) = (spec.clone(), tb.clone(), tf.clone());
    CubicTensorField::new(spec.dim(), move |z| warped_tensor(&spec, &tb, &tf, z))
}

/// How the fiber divergence is weighted by the warp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WarpWeight {
    /// D_B(b, b') + f(b)² D_F(x, x'): the warp is read at the first argument only.
    /// Generates the warped metric, but its connections differ from the lifted
    /// pair by ±S with S_{b_i x_a, x_c} = f ∂_i f g_F,ac, and its cubic tensor
    /// carries mixed entries 2 f ∂_i f g_F,ac.
    FirstPoint,
    /// D_B(b, b') + f(b) f(b') D_F(x, x'): agrees with the first-point form to
    /// second order on the diagonal and generates exactly the lifted pair and
    /// the warped tensor.
    #[default]
    Symmetric,
}

/// Divergence on B ×_f F assembled from factor divergences.
pub fn warped_divergence(
    db: &DivergenceFn,
    dfib: &DivergenceFn,
    spec: &WarpSpec,
    weight: WarpWeight,
) -> Result<DivergenceFn> {
    check_dim(spec.base.dim(), db.dim())?;
    check_dim(spec.fiber.dim(), dfib.dim())?;
    let nb = spec.base.dim();
    let name = match weight {
        WarpWeight::Symmetric => format!("warped({},{})", db.name(), dfib.name()),
        WarpWeight::FirstPoint => format!("warped1({},{})", db.name(), dfib.name()),
    };
    let (db_e, df_e, warp) = (db.clone(), dfib.clone(), spec.warp.clone());
    let (db_g, df_g, spec_g) = (db.clone(), dfib.clone(), spec.clone());
    Ok(DivergenceFn::new(name, spec.dim(), move |p, q| {
        let (b1, x1) = p.split_at(nb);
        let (b2, x2) = q.split_at(nb);
        let weight = match weight {
            WarpWeight::FirstPoint => warp(b1).powi(2),
            WarpWeight::Symmetric => warp(b1) * warp(b2),
        };
        // Admissibility is enforced by the guard below.
        db_e.eval(b1, b2).unwrap_or(f64::NAN) + weight * df_e.eval(x1, x2).unwrap_or(f64::NAN)
    })
    .with_guard(move |p, q| {
        let (b1, x1) = p.split_at(nb);
        let (b2, x2) = q.split_at(nb);
        spec_g.admits(p) && spec_g.admits(q) && db_g.admits(b1, b2) && df_g.admits(x1, x2)
    }))
}

/// B ×_f F as a model. Connections, tensor and divergence are lifted from the
/// factors when both carry them; the divergence uses the symmetric weight.
pub fn warped_model(spec: &WarpSpec) -> Result<ManifoldModel> {
    let metric_spec = spec.clone();
    let dim = spec.dim();
    let mut metric = MetricField::new(dim, move |z| {
        warped_metric(&metric_spec, z).unwrap_or_else(|_| DMatrix::from_element(dim, dim, f64::NAN))
    });
    if spec.base.metric_field().has_partials() && spec.fiber.metric_field().has_partials() {
        let partial_spec = spec.clone();
        metric = metric.with_partials(move |z| {
            warped_metric_partials(&partial_spec, z)
                .unwrap_or_else(|_| vec![DMatrix::from_element(dim, dim, f64::NAN); dim])
        });
    }
    let guard_spec = spec.clone();
    let name = format!(
        "warped({},{},{})",
        spec.base.name(),
        spec.fiber.name(),
        spec.label
    );
    let mut model = ManifoldModel::new(name, metric).with_guard(move |z| guard_spec.admits(z));
    model.fd = spec.base.fd;
    if let (Some((pb, db)), Some((pf, dfib))) = (spec.base.connections(), spec.fiber.connections())
    {
        model = model.with_connections(
            warped_connection_field(spec, pb, pf),
            warped_connection_field(spec, db, dfib),
        );
    }
    if let (Some(tb), Some(tf)) = (spec.base.tensor_field(), spec.fiber.tensor_field()) {
        model = model.with_tensor(warped_tensor_field(spec, tb, tf));
    }
    if let (Some(db), Some(dfib)) = (spec.base.divergence(), spec.fiber.divergence()) {
        model = model.with_divergence(warped_divergence(db, dfib, spec, WarpWeight::Symmetric)?);
    }
    Ok(model)
}

/// Residuals of the warped geodesic equations along a sampled path, with
/// accelerations from central differences of the stored velocities:
///
/// ```text
/// (base)  α″ + Γ_B(α′, α′) − g_F(β′, β′) f grad f
/// (fiber) β″ + Γ_F(β′, β′) + (2/f)(df·α′) β′
/// ```
pub fn warped_geodesic_residual(
    spec: &WarpSpec,
    gb: &ConnectionField,
    gf: &ConnectionField,
    path: &GeodesicPath,
) -> Result<(f64, f64)> {
    let nb = spec.base.dim();
    let (mut worst_b, mut worst_f) = (0.0_f64, 0.0_f64);
    for i in 1..path.times.len() - 1 {
        let z = &path.points[i];
        spec.check(z)?;
        let (b, x) = spec.split(z)?;
        let v = &path.velocities[i];
        let (vb, vf) = v.split_at(nb);
        let dt = path.times[i + 1] - path.times[i - 1];
        let acc: Vec<f64> = (0..v.len())
            .map(|k| (path.velocities[i + 1][k] - path.velocities[i - 1][k]) / dt)
            .collect();
        let f = spec.warp(b)?;
        let df = spec.warp_differential(b)?;
        let grad = spec.warp_gradient(b)?;
        let fiber_speed = quad_form(&spec.fiber.metric_at(x)?, vf, vf);
        let qb = gb.eval(b)?.contract_lower(vb, vb);
        for k in 0..nb {
            worst_b = worst_b.max((acc[k] + qb[k] - fiber_speed * f * grad[k]).abs());
        }
        let rate: f64 = df.iter().zip(vb).map(|(a, c)| a * c).sum();
        let qf = gf.eval(x)?.contract_lower(vf, vf);
        for c in 0..vf.len() {
            worst_f = worst_f.max((acc[nb + c] + qf[c] + 2.0 / f * rate * vf[c]).abs());
        }
    }
    Ok((worst_b, worst_f))
}

/// Lifted versus true canonical divergence between two warped points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalMismatch {
    /// D_B(p_B, q_B) + f(p_B)² D_F(p_F, q_F), each from factor geodesics.
    pub lifted: f64,
    /// Canonical divergence of the lifted connection on B ×_f F.
    pub true_canonical: f64,
    pub gap: f64,
}

/// Compares the warped combination of factor canonical divergences with the
/// canonical divergence of the warped structure itself.
pub fn canonical_mismatch_demo(
    spec: &WarpSpec,
    gb: &ConnectionField,
    gf: &ConnectionField,
    p: &WarpedPoint,
    q: &WarpedPoint,
    cfg: &ShootingConfig,
) -> Result<CanonicalMismatch> {
    let (pz, qz) = (p.chart(), q.chart());
    spec.check(&pz)?;
    spec.check(&qz)?;
    let d_base = canonical_divergence(&spec.base, gb, &p.b, &q.b, cfg)?;
    let d_fiber = canonical_divergence(&spec.fiber, gf, &p.x, &q.x, cfg)?;
    let lifted = d_base + spec.warp(&p.b)?.powi(2) * d_fiber;
    let model = warped_model(spec)?;
    let conn = warped_connection_field(spec, gb, gf);
    let true_canonical = canonical_divergence(&model, &conn, &pz, &qz, cfg)?;
    Ok(CanonicalMismatch {
        lifted,
        true_canonical,
        gap: (lifted - true_canonical).abs(),
    })
}

/// Flat polar form: B = (0, ∞) and F = ℝ, both Euclidean, with f(b) = b.
pub fn polar_spec() -> WarpSpec {
    let base = ManifoldModel::euclidean(1).with_guard(|b| b[0] > 0.0);
    WarpSpec::from_kind(
        base,
        ManifoldModel::euclidean(1),
        WarpKind::Linear { c0: 0.0, c1: 1.0 },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesic::geodesic_ivp;
    use crate::geometry::torsion;

    fn flat_lc(spec: &WarpSpec) -> ConnectionField {
        warped_connection_field(
            spec,
            &spec.base().levi_civita_field(),
            &spec.fiber().levi_civita_field(),
        )
    }

    #[test]
    fn polar_metric_and_christoffels() {
        let spec = polar_spec();
        let z = [2.0, 0.3];
        let g = warped_metric(&spec, &z).unwrap();
        assert_eq!(g[(0, 0)], 1.0);
        assert_eq!(g[(1, 1)], 4.0);
        assert_eq!(g[(0, 1)], 0.0);
        let gamma = flat_lc(&spec).eval(&z).unwrap();
        assert!((gamma.get(0, 1, 1) + 2.0).abs() < 1e-12);
        assert!((gamma.get(1, 0, 1) - 0.5).abs() < 1e-12);
        assert!((gamma.get(1, 1, 0) - 0.5).abs() < 1e-12);
        assert!(torsion(&gamma).max_abs() < 1e-15);
        // The lift of the factor Levi-Civita connections is the Levi-Civita connection of g_f.
        let model = warped_model(&spec).unwrap();
        assert!(gamma.max_abs_diff(&model.levi_civita(&z).unwrap()) < 1e-7);
    }

    #[test]
    fn constant_warp_gives_direct_sum() {
        let spec = WarpSpec::from_kind(
            ManifoldModel::euclidean(1),
            ManifoldModel::euclidean(2),
            WarpKind::Constant(1.0),
        );
        let z = [0.4, -1.0, 3.0];
        let g = warped_metric(&spec, &z).unwrap();
        assert_eq!(g, DMatrix::identity(3, 3));
        assert_eq!(flat_lc(&spec).eval(&z).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn both_normalizations_of_the_fiber_term_agree() {
        // −f g_F(U,V) grad f = −(g_f(U,V)/f) grad f for vertical U, V.
        let spec = WarpSpec::from_kind(
            ManifoldModel::euclidean(1),
            ManifoldModel::euclidean(1),
            WarpKind::Exp { c0: 1.5, c1: 0.7 },
        );
        let z = [0.3, 1.1];
        let gamma = flat_lc(&spec).eval(&z).unwrap();
        let f = spec.warp(&z[..1]).unwrap();
        let grad = spec.warp_gradient(&z[..1]).unwrap();
        let gf = warped_metric(&spec, &z).unwrap();
        let alt = -gf[(1, 1)] / f * grad[0];
        assert!((gamma.get(0, 1, 1) - alt).abs() < 1e-12);
    }

    #[test]
    fn analytic_and_fd_differentials_agree() {
        let spec = WarpSpec::from_kind(
            ManifoldModel::euclidean(2),
            ManifoldModel::euclidean(1),
            WarpKind::Exp { c0: 0.5, c1: -1.2 },
        );
        assert!(spec.differential_consistency(&[0.2, 0.9]).unwrap() < 1e-6);
        let plain = WarpSpec::new(
            ManifoldModel::euclidean(2),
            ManifoldModel::euclidean(1),
            |b| 1.0 + b[0] * b[1],
        );
        let df = plain.warp_differential(&[2.0, 3.0]).unwrap();
        assert!((df[0] - 3.0).abs() < 1e-6 && (df[1] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn nonpositive_warp_is_a_domain_error() {
        let spec = WarpSpec::from_kind(
            ManifoldModel::euclidean(1),
            ManifoldModel::euclidean(1),
            WarpKind::Linear { c0: 0.0, c1: 1.0 },
        );
        assert!(matches!(
            warped_metric(&spec, &[-1.0, 0.0]),
            Err(GeomError::Domain(_))
        ));
    }

    #[test]
    fn warped_tensor_blocks() {
        let spec = polar_spec();
        let t = CubicTensorField::new(1, |_| Ok(Rank3::from_fn(1, |_, _, _| 1.0)));
        let w = warped_tensor(&spec, &t, &t, &[3.0, 0.0]).unwrap();
        assert_eq!(w.get(0, 0, 0), 1.0);
        assert_eq!(w.get(1, 1, 1), 9.0);
        assert_eq!(w.get(0, 1, 1), 0.0);
        assert_eq!(w.get(1, 0, 0), 0.0);
    }

    #[test]
    fn divergence_weights_differ_off_the_diagonal_only() {
        let spec = polar_spec();
        let d = DivergenceFn::squared_euclidean(1);
        let sym = warped_divergence(&d, &d, &spec, WarpWeight::Symmetric).unwrap();
        let first = warped_divergence(&d, &d, &spec, WarpWeight::FirstPoint).unwrap();
        let (p, q) = ([1.0, 0.0], [2.0, 1.0]);
        assert_eq!(sym.eval(&p, &p).unwrap(), 0.0);
        assert!((first.eval(&p, &q).unwrap() - (0.5 + 0.5)).abs() < 1e-15);
        assert!((sym.eval(&p, &q).unwrap() - (0.5 + 2.0 * 0.5)).abs() < 1e-15);
        assert!(sym.eval(&[-1.0, 0.0], &q).is_err());
    }

    #[test]
    fn polar_geodesic_satisfies_warped_equations() {
        let spec = polar_spec();
        let conn = flat_lc(&spec);
        let cfg = ShootingConfig {
            rk_steps: 400,
            ..Default::default()
        };
        let path = geodesic_ivp(&conn, &[1.0, 0.0], &[-0.5, 1.0], &cfg).unwrap();
        let lc = spec.base().levi_civita_field();
        let (rb, rf) =
            warped_geodesic_residual(&spec, &lc, &spec.fiber().levi_civita_field(), &path).unwrap();
        assert!(rb < 1e-4 && rf < 1e-4, "{rb} {rf}");
    }

    #[test]
    fn polar_mismatch_witness() {
        let spec = polar_spec();
        let (gb, gf) = (
            spec.base().levi_civita_field(),
            spec.fiber().levi_civita_field(),
        );
        let p = WarpedPoint::new(&spec, vec![1.0], vec![0.0]).unwrap();
        let q = WarpedPoint::new(&spec, vec![1.0], vec![std::f64::consts::FRAC_PI_2]).unwrap();
        let m =
            canonical_mismatch_demo(&spec, &gb, &gf, &p, &q, &ShootingConfig::default()).unwrap();
        assert!((m.lifted - std::f64::consts::PI.powi(2) / 8.0).abs() < 1e-9);
        assert!(
            (m.true_canonical - 1.0).abs() < 1e-4,
            "{}",
            m.true_canonical
        );
        assert!(m.gap > 0.2);
    }
}
