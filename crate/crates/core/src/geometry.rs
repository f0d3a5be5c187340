//! Chart-level Riemannian and statistical structure.
//!
//! A [`ManifoldModel`] bundles a metric field with optional dual connection
//! pair, cubic tensor and divergence. Everything is evaluated in one chart;
//! torsion-freeness is symmetry of Γ^k_ij in the lower indices and duality is
//! checked through the coordinate identity
//!
//! ```text
//! ∂_k g_ij = Σ_m Γ^m_ki g_mj + Γ*^m_kj g_im
//! ```

use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::divergence::DivergenceFn;
use crate::error::{check_dim, GeomError, Result};
use crate::fd::FdStep;
use crate::tensor::{cholesky, quad_form, spd_inverse, symmetrize, Rank3};

pub type Guard = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;
type MetricFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
type PartialsFn = Arc<dyn Fn(&[f64]) -> Vec<DMatrix<f64>> + Send + Sync>;
type Rank3Fn = Arc<dyn Fn(&[f64]) -> Result<Rank3> + Send + Sync>;
type MapFn = Arc<dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync>;
type JacobianFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// Residual above which a connection pair is rejected as non-dual.
pub const DUALITY_THRESHOLD: f64 = 1e-3;

/// Coordinates of a point in a chart. Entries are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint(Vec<f64>);

impl ChartPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().all(|c| c.is_finite()) {
            Ok(ChartPoint(coords))
        } else {
            Err(GeomError::Domain(format!(
                "non-finite coordinates {coords:?}"
            )))
        }
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ChartPoint {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// A tangent vector together with its base point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub base: ChartPoint,
    pub components: Vec<f64>,
}

impl TangentVector {
    pub fn new(base: ChartPoint, components: Vec<f64>) -> Result<Self> {
        check_dim(base.dim(), components.len())?;
        Ok(TangentVector { base, components })
    }
}

/// A metric g(x), optionally with closed-form partials ∂_k g. Without them,
/// models fall back to central differences.
#[derive(Clone)]
pub struct MetricField {
    dim: usize,
    eval: MetricFn,
    partials: Option<PartialsFn>,
}

impl MetricField {
    pub fn new(dim: usize, eval: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        MetricField {
            dim,
            eval: Arc::new(eval),
            partials: None,
        }
    }

    pub fn constant(g: DMatrix<f64>) -> Self {
        let dim = g.nrows();
        MetricField::new(dim, move |_| g.clone())
            .with_partials(move |_| vec![DMatrix::zeros(dim, dim); dim])
    }

    /// Attaches closed-form partials: entry k of the result is ∂_k g.
    pub fn with_partials(
        mut self,
        partials: impl Fn(&[f64]) -> Vec<DMatrix<f64>> + Send + Sync + 'static,
    ) -> Self {
        self.partials = Some(Arc::new(partials));
        self
    }

    pub fn has_partials(&self) -> bool {
        self.partials.is_some()
    }

    /// Closed-form partials at `x`, when attached.
    pub fn partials(&self, x: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        self.partials.as_ref().map(|p| p(x))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Raw evaluation without domain or definiteness checks.
    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        (self.eval)(x)
    }
}

impl fmt::Debug for MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricField")
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

/// Christoffel symbols Γ^k_ij as a function of chart coordinates.
#[derive(Clone)]
pub struct ConnectionField {
    dim: usize,
    eval: Rank3Fn,
}

impl ConnectionField {
    pub fn new(dim: usize, eval: impl Fn(&[f64]) -> Result<Rank3> + Send + Sync + 'static) -> Self {
        ConnectionField {
            dim,
            eval: Arc::new(eval),
        }
    }

    /// The flat connection of the chart (all coefficients zero).
    pub fn zero(dim: usize) -> Self {
        ConnectionField::new(dim, move |_| Ok(Rank3::zeros(dim)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64]) -> Result<Rank3> {
        check_dim(self.dim, x.len())?;
        (self.eval)(x)
    }
}

impl fmt::Debug for ConnectionField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConnectionField")
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

/// Covariant symmetric 3-tensor T_ijk as a function of chart coordinates.
#[derive(Clone)]
pub struct CubicTensorField {
    dim: usize,
    eval: Rank3Fn,
}

impl CubicTensorField {
    pub fn new(dim: usize, eval: impl Fn(&[f64]) -> Result<Rank3> + Send + Sync + 'static) -> Self {
        CubicTensorField {
            dim,
            eval: Arc::new(eval),
        }
    }

    pub fn zero(dim: usize) -> Self {
        CubicTensorField::new(dim, move |_| Ok(Rank3::zeros(dim)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64]) -> Result<Rank3> {
        check_dim(self.dim, x.len())?;
        (self.eval)(x)
    }
}

impl fmt::Debug for CubicTensorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CubicTensorField")
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

/// A chart model: metric plus optional statistical structure.
#[derive(Clone)]
pub struct ManifoldModel {
    name: String,
    metric: MetricField,
    conn_pair: Option<(ConnectionField, ConnectionField)>,
    tensor: Option<CubicTensorField>,
    divergence: Option<DivergenceFn>,
    guard: Guard,
    pub fd: FdStep,
    pub dual_threshold: f64,
    /// Absolute symmetry tolerance for input tensors, scaled by max(1, |T|∞).
    pub symmetry_tol: f64,
}

impl fmt::Debug for ManifoldModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManifoldModel")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("conn_pair", &self.conn_pair.is_some())
            .field("tensor", &self.tensor.is_some())
            .field("divergence", &self.divergence.is_some())
            .finish()
    }
}

impl ManifoldModel {
    pub fn new(name: impl Into<String>, metric: MetricField) -> Self {
        ManifoldModel {
            name: name.into(),
            metric,
            conn_pair: None,
            tensor: None,
            divergence: None,
            guard: Arc::new(|_| true),
            fd: FdStep::default(),
            dual_threshold: DUALITY_THRESHOLD,
            symmetry_tol: 1e-6,
        }
    }

    /// Flat ℝⁿ with the identity metric and the self-dual zero connection.
    pub fn euclidean(n: usize) -> Self {
        ManifoldModel::new(
            format!("euclid:n={n}"),
            MetricField::constant(DMatrix::identity(n, n)),
        )
        .with_connections(ConnectionField::zero(n), ConnectionField::zero(n))
        .with_tensor(CubicTensorField::zero(n))
        .with_divergence(DivergenceFn::squared_euclidean(n))
    }

    pub fn with_guard(mut self, guard: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> Self {
        self.guard = Arc::new(guard);
        self
    }

    pub fn with_connections(mut self, primal: ConnectionField, dual: ConnectionField) -> Self {
        self.conn_pair = Some((primal, dual));
        self
    }

    pub fn with_tensor(mut self, tensor: CubicTensorField) -> Self {
        self.tensor = Some(tensor);
        self
    }

    pub fn with_divergence(mut self, d: DivergenceFn) -> Self {
        self.divergence = Some(d);
        self
    }

    pub fn with_fd(mut self, fd: FdStep) -> Self {
        self.fd = fd;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn metric_field(&self) -> &MetricField {
        &self.metric
    }

    pub fn connections(&self) -> Option<&(ConnectionField, ConnectionField)> {
        self.conn_pair.as_ref()
    }

    pub fn tensor_field(&self) -> Option<&CubicTensorField> {
        self.tensor.as_ref()
    }

    pub fn divergence(&self) -> Option<&DivergenceFn> {
        self.divergence.as_ref()
    }

    pub fn guard(&self) -> Guard {
        self.guard.clone()
    }

    pub fn admits(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().all(|v| v.is_finite()) && (self.guard)(x)
    }

    pub fn check(&self, x: &[f64]) -> Result<()> {
        check_dim(self.dim(), x.len())?;
        if self.admits(x) {
            Ok(())
        } else {
            Err(GeomError::Domain(format!(
                "{} does not admit {x:?}",
                self.name
            )))
        }
    }

    /// g(x), symmetrized and verified positive definite.
    pub fn metric_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check(x)?;
        let g = symmetrize(&self.metric.eval(x));
        cholesky(&g)?;
        Ok(g)
    }

    pub fn metric_inverse(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        spd_inverse(&self.metric_at(x)?)
    }

    /// vᵀ g(x) w.
    pub fn inner(&self, v: &TangentVector, w: &TangentVector) -> Result<f64> {
        if v.base != w.base {
            return Err(GeomError::Invalid(
                "tangent vectors live at different base points".into(),
            ));
        }
        check_dim(self.dim(), v.components.len())?;
        check_dim(self.dim(), w.components.len())?;
        let g = self.metric_at(&v.base)?;
        Ok(quad_form(&g, &v.components, &w.components))
    }

    /// ∂_k g at `x`: closed form when the metric field carries it, otherwise a
    /// central difference.
    pub fn metric_partial(&self, x: &[f64], k: usize) -> Result<DMatrix<f64>> {
        self.check(x)?;
        if k >= self.dim() {
            return Err(GeomError::Invalid(format!("axis {k} out of range")));
        }
        if let Some(mut dg) = self.metric.partials(x) {
            return Ok(dg.swap_remove(k));
        }
        let h = self.fd.at(x);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[k] += h;
        xm[k] -= h;
        if !self.admits(&xp) || !self.admits(&xm) {
            return Err(GeomError::Domain(format!(
                "stencil along axis {k} leaves the domain at {x:?}"
            )));
        }
        Ok((self.metric.eval(&xp) - self.metric.eval(&xm)) / (2.0 * h))
    }

    pub fn metric_partials(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        if let Some(dg) = self.metric.partials(x) {
            self.check(x)?;
            return Ok(dg);
        }
        (0..self.dim()).map(|k| self.metric_partial(x, k)).collect()
    }

    /// Christoffel symbols of the Levi-Civita connection at `x`.
    pub fn levi_civita(&self, x: &[f64]) -> Result<Rank3> {
        let g_inv = self.metric_inverse(x)?;
        let dg = self.metric_partials(x)?;
        let n = self.dim();
        // First-kind symbols [ij,l] = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij).
        let first = Rank3::from_fn(n, |i, j, l| {
            0.5 * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)])
        });
        Ok(first.raise(&g_inv))
    }

    /// The unique connection dual to `gamma` with respect to g at `x`.
    pub fn dual_connection(&self, gamma: &Rank3, x: &[f64]) -> Result<Rank3> {
        check_dim(self.dim(), gamma.dim())?;
        let g = self.metric_at(x)?;
        let g_inv = spd_inverse(&g)?;
        let dg = self.metric_partials(x)?;
        let n = self.dim();
        let lowered = gamma.lower(&g);
        // Γ*_{kj,i} = ∂_k g_ij − Γ_{ki,j}
        let dual_low = Rank3::from_fn(n, |k, j, i| dg[k][(i, j)] - lowered.get(k, i, j));
        Ok(dual_low.raise(&g_inv))
    }

    /// max_{ijk} |∂_k g_ij − Σ_m (Γ^m_ki g_mj + Γ*^m_kj g_im)|.
    pub fn duality_residual(&self, primal: &Rank3, dual: &Rank3, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), primal.dim())?;
        check_dim(self.dim(), dual.dim())?;
        let g = self.metric_at(x)?;
        let dg = self.metric_partials(x)?;
        let p = primal.lower(&g);
        let d = dual.lower(&g);
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let r = dg[k][(i, j)] - p.get(k, i, j) - d.get(k, j, i);
                    worst = worst.max(r.abs());
                }
            }
        }
        Ok(worst)
    }

    /// T_ijk = Σ_m (Γ*^m_ij − Γ^m_ij) g_mk for a dual pair (Γ, Γ*).
    pub fn amari_chentsov(&self, primal: &Rank3, dual: &Rank3, x: &[f64]) -> Result<Rank3> {
        let residual = self.duality_residual(primal, dual, x)?;
        if !(residual <= self.dual_threshold) {
            return Err(GeomError::NotDualPair {
                residual,
                threshold: self.dual_threshold,
            });
        }
        let g = self.metric_at(x)?;
        Ok((dual - primal).lower(&g))
    }

    /// (Γ⁰ − ½𝒯, Γ⁰ + ½𝒯) with 𝒯^k_ij = Σ_m g^{km} T_ijm.
    pub fn dual_pair_from_tensor(&self, t: &Rank3, x: &[f64]) -> Result<(Rank3, Rank3)> {
        check_dim(self.dim(), t.dim())?;
        let asymmetry = t.asymmetry();
        if asymmetry > self.symmetry_tol * t.max_abs().max(1.0) {
            return Err(GeomError::NotSymmetric { asymmetry });
        }
        let lc = self.levi_civita(x)?;
        let half = t.raise(&self.metric_inverse(x)?).scale(0.5);
        Ok((&lc - &half, &lc + &half))
    }

    /// The model's cubic tensor at `x`: the stored field if present, otherwise
    /// the Amari–Chentsov tensor of the stored connection pair.
    pub fn tensor_at(&self, x: &[f64]) -> Result<Rank3> {
        if let Some(t) = &self.tensor {
            self.check(x)?;
            return t.eval(x);
        }
        let (p, d) = self
            .conn_pair
            .as_ref()
            .ok_or(GeomError::MissingStructure("cubic tensor"))?;
        self.amari_chentsov(&p.eval(x)?, &d.eval(x)?, x)
    }

    /// The stored connection pair evaluated at `x`.
    pub fn pair_at(&self, x: &[f64]) -> Result<(Rank3, Rank3)> {
        let (p, d) = self
            .conn_pair
            .as_ref()
            .ok_or(GeomError::MissingStructure("connection pair"))?;
        self.check(x)?;
        Ok((p.eval(x)?, d.eval(x)?))
    }

    /// Levi-Civita connection as a field; evaluation enforces the domain guard.
    pub fn levi_civita_field(&self) -> ConnectionField {
        let model = self.clone();
        ConnectionField::new(self.dim(), move |x| model.levi_civita(x))
    }

    /// Pointwise dual of a connection field.
    pub fn dual_field(&self, gamma: &ConnectionField) -> ConnectionField {
        let model = self.clone();
        let gamma = gamma.clone();
        ConnectionField::new(self.dim(), move |x| {
            let g = gamma.eval(x)?;
            model.dual_connection(&g, x)
        })
    }

    /// Wraps a field so that evaluation outside the guard fails with a domain error.
    pub fn guarded(&self, gamma: &ConnectionField) -> ConnectionField {
        let model = self.clone();
        let gamma = gamma.clone();
        ConnectionField::new(self.dim(), move |x| {
            model.check(x)?;
            gamma.eval(x)
        })
    }

    /// Largest duality residual of the stored pair over `samples`.
    pub fn validate_pair(&self, samples: &[Vec<f64>]) -> Result<f64> {
        let (p, d) = self
            .conn_pair
            .as_ref()
            .ok_or(GeomError::MissingStructure("connection pair"))?;
        crate::sweep::max_residual(samples, |x| {
            let (a, b) = (p.eval(x)?, d.eval(x)?);
            self.duality_residual(&a, &b, x)
        })
    }
}

/// Γ^k_ij − Γ^k_ji.
pub fn torsion(gamma: &Rank3) -> Rank3 {
    Rank3::from_fn(gamma.dim(), |k, i, j| {
        gamma.get(k, i, j) - gamma.get(k, j, i)
    })
}

/// ((1+α)/2) Γ⁽¹⁾ + ((1−α)/2) Γ⁽⁻¹⁾.
pub fn alpha_connection(primal: &Rank3, dual: &Rank3, alpha: f64) -> Result<Rank3> {
    check_dim(primal.dim(), dual.dim())?;
    if !(-1.0..=1.0).contains(&alpha) {
        return Err(GeomError::Invalid(format!("alpha {alpha} outside [-1, 1]")));
    }
    Ok(&primal.scale(0.5 * (1.0 + alpha)) + &dual.scale(0.5 * (1.0 - alpha)))
}

/// A smooth map between charts with analytic or finite-difference Jacobian.
#[derive(Clone)]
pub struct SmoothMap {
    in_dim: usize,
    out_dim: usize,
    apply: MapFn,
    jacobian: Option<JacobianFn>,
    pub fd: FdStep,
}

impl SmoothMap {
    pub fn new(
        in_dim: usize,
        out_dim: usize,
        apply: impl Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    ) -> Self {
        SmoothMap {
            in_dim,
            out_dim,
            apply: Arc::new(apply),
            jacobian: None,
            fd: FdStep::new(1e-6),
        }
    }

    pub fn with_jacobian(
        mut self,
        j: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.jacobian = Some(Arc::new(j));
        self
    }

    pub fn identity(n: usize) -> Self {
        SmoothMap::new(n, n, |x| Ok(x.to_vec())).with_jacobian(move |_| DMatrix::identity(n, n))
    }

    /// x ↦ A x.
    pub fn linear(a: DMatrix<f64>) -> Self {
        let (out_dim, in_dim) = a.shape();
        let a2 = a.clone();
        SmoothMap::new(in_dim, out_dim, move |x| {
            Ok((&a2 * nalgebra::DVector::from_column_slice(x))
                .iter()
                .cloned()
                .collect())
        })
        .with_jacobian(move |_| a.clone())
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.in_dim, x.len())?;
        let y = (self.apply)(x)?;
        check_dim(self.out_dim, y.len())?;
        Ok(y)
    }

    /// out_dim × in_dim Jacobian.
    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        check_dim(self.in_dim, x.len())?;
        if let Some(j) = &self.jacobian {
            return Ok(j(x));
        }
        let h = self.fd.at(x);
        let mut jac = DMatrix::zeros(self.out_dim, self.in_dim);
        for c in 0..self.in_dim {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[c] += h;
            xm[c] -= h;
            let (yp, ym) = (self.apply(&xp)?, self.apply(&xm)?);
            for r in 0..self.out_dim {
                jac[(r, c)] = (yp[r] - ym[r]) / (2.0 * h);
            }
        }
        Ok(jac)
    }
}

/// Pulls back the metric and cubic tensor of `target` through `map` at `x`.
pub fn pullback_structure(
    map: &SmoothMap,
    target: &ManifoldModel,
    x: &[f64],
) -> Result<(DMatrix<f64>, Rank3)> {
    check_dim(target.dim(), map.out_dim)?;
    let j = map.jacobian(x)?;
    if map.out_dim < map.in_dim {
        return Err(GeomError::NotImmersion { ratio: 0.0 });
    }
    let sv = j.clone().svd(false, false).singular_values;
    let (smax, smin) = sv
        .iter()
        .fold((0.0_f64, f64::INFINITY), |(a, b), &s| (a.max(s), b.min(s)));
    let ratio = if smax > 0.0 { smin / smax } else { 0.0 };
    if ratio < 1e-10 {
        return Err(GeomError::NotImmersion { ratio });
    }
    let y = map.apply(x)?;
    let g = target.metric_at(&y)?;
    let pulled_g = symmetrize(&(j.transpose() * g * &j));
    let pulled_t = target.tensor_at(&y)?.congruence(&j);
    Ok((pulled_g, pulled_t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(v: &[f64]) -> ChartPoint {
        ChartPoint::new(v.to_vec()).unwrap()
    }

    /// Upper half-plane style metric diag(1/y², 2/y²) used throughout the tests.
    fn hyperbolic() -> ManifoldModel {
        ManifoldModel::new(
            "hyp",
            MetricField::new(2, |x| {
                DMatrix::from_diagonal(&nalgebra::dvector![
                    1.0 / (x[1] * x[1]),
                    2.0 / (x[1] * x[1])
                ])
            }),
        )
        .with_guard(|x| x[1] > 1e-6)
    }

    #[test]
    fn euclidean_metric_is_identity() {
        let m = ManifoldModel::euclidean(3);
        assert_eq!(
            m.metric_at(&[0.3, -2.0, 5.0]).unwrap(),
            DMatrix::identity(3, 3)
        );
    }

    #[test]
    fn inner_products() {
        let m = ManifoldModel::euclidean(2);
        let x = point(&[0.0, 0.0]);
        let e1 = TangentVector::new(x.clone(), vec![1.0, 0.0]).unwrap();
        let zero = TangentVector::new(x.clone(), vec![0.0, 0.0]).unwrap();
        assert_eq!(m.inner(&e1, &e1).unwrap(), 1.0);
        assert_eq!(m.inner(&e1, &zero).unwrap(), 0.0);
        let other = TangentVector::new(point(&[1.0, 0.0]), vec![1.0, 0.0]).unwrap();
        assert!(m.inner(&e1, &other).is_err());
    }

    #[test]
    fn metric_outside_guard_is_domain_error() {
        let m = hyperbolic();
        assert!(matches!(
            m.metric_at(&[0.0, -1.0]),
            Err(GeomError::Domain(_))
        ));
    }

    #[test]
    fn indefinite_metric_is_rejected() {
        let m = ManifoldModel::new(
            "bad",
            MetricField::constant(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])),
        );
        assert!(matches!(
            m.metric_at(&[0.0, 0.0]),
            Err(GeomError::NotSpd { .. })
        ));
    }

    #[test]
    fn constant_metric_has_zero_partials() {
        let m = ManifoldModel::euclidean(2);
        assert_eq!(
            m.metric_partial(&[1.0, 2.0], 1).unwrap(),
            DMatrix::zeros(2, 2)
        );
    }

    #[test]
    fn hyperbolic_sigma_partial() {
        // ∂_σ diag(1/σ², 2/σ²) = diag(−2/σ³, −4/σ³) = diag(−2, −4) at σ = 1.
        let d = hyperbolic().metric_partial(&[0.0, 1.0], 1).unwrap();
        assert!((d[(0, 0)] + 2.0).abs() < 1e-7);
        assert!((d[(1, 1)] + 4.0).abs() < 1e-7);
        assert!(d[(0, 1)].abs() < 1e-12);
    }

    #[test]
    fn stencil_leaving_domain_is_reported() {
        let m = hyperbolic();
        assert!(matches!(
            m.metric_partial(&[0.0, 1.00001e-6], 1),
            Err(GeomError::Domain(_))
        ));
    }

    #[test]
    fn levi_civita_is_self_dual_and_symmetric() {
        let m = hyperbolic();
        let x = [0.4, 0.7];
        let lc = m.levi_civita(&x).unwrap();
        assert!(torsion(&lc).max_abs() < 1e-12);
        assert!(m.duality_residual(&lc, &lc, &x).unwrap() < 1e-6);
        let dual = m.dual_connection(&lc, &x).unwrap();
        assert!(dual.max_abs_diff(&lc) < 1e-8);
    }

    #[test]
    fn torsion_of_asymmetric_connection() {
        let mut g = Rank3::zeros(2);
        g.set(0, 0, 1, 1.0);
        let t = torsion(&g);
        assert_eq!(t.get(0, 0, 1), 1.0);
        assert_eq!(t.get(0, 1, 0), -1.0);
    }

    #[test]
    fn alpha_connection_endpoints_and_midpoints() {
        let a = Rank3::from_fn(2, |k, i, j| (k + i + j) as f64);
        let b = Rank3::from_fn(2, |k, i, j| (k * i + j) as f64 - 1.0);
        assert_eq!(alpha_connection(&a, &b, 1.0).unwrap(), a);
        assert_eq!(alpha_connection(&a, &b, -1.0).unwrap(), b);
        let half = alpha_connection(&a, &b, 0.5).unwrap();
        let expected = &a.scale(0.75) + &b.scale(0.25);
        assert!(half.max_abs_diff(&expected) < 1e-15);
        assert!(alpha_connection(&a, &b, 1.5).is_err());
    }

    #[test]
    fn zero_tensor_gives_levi_civita_pair() {
        let m = hyperbolic();
        let x = [0.0, 1.3];
        let (p, d) = m.dual_pair_from_tensor(&Rank3::zeros(2), &x).unwrap();
        let lc = m.levi_civita(&x).unwrap();
        assert_eq!(p, lc);
        assert_eq!(d, lc);
    }

    #[test]
    fn asymmetric_tensor_is_rejected() {
        let m = hyperbolic();
        let mut t = Rank3::zeros(2);
        t.set(0, 0, 1, 1.0);
        assert!(matches!(
            m.dual_pair_from_tensor(&t, &[0.0, 1.0]),
            Err(GeomError::NotSymmetric { .. })
        ));
    }

    #[test]
    fn non_dual_pair_is_rejected_by_amari_chentsov() {
        let m = hyperbolic();
        let x = [0.0, 1.0];
        let z = Rank3::zeros(2);
        assert!(matches!(
            m.amari_chentsov(&z, &z, &x),
            Err(GeomError::NotDualPair { .. })
        ));
    }

    #[test]
    fn pullback_through_identity_and_linear_map() {
        let m = ManifoldModel::euclidean(2);
        let (g, t) = pullback_structure(&SmoothMap::identity(2), &m, &[0.1, 0.2]).unwrap();
        assert_eq!(g, DMatrix::identity(2, 2));
        assert_eq!(t.max_abs(), 0.0);

        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 3.0]);
        let (g, _) = pullback_structure(&SmoothMap::linear(a.clone()), &m, &[0.1, 0.2]).unwrap();
        assert!((g - a.transpose() * &a).abs().max() < 1e-14);
    }

    #[test]
    fn rank_deficient_map_is_not_an_immersion() {
        let m = ManifoldModel::euclidean(2);
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(
            pullback_structure(&SmoothMap::linear(a), &m, &[0.0, 0.0]),
            Err(GeomError::NotImmersion { .. })
        ));
    }
}
