//! Statistical structure generated by a two-point divergence.
//!
//! With u the first and v the second argument of D, derivatives are taken on
//! the diagonal u = v = p:
//!
//! ```text
//! g_ij      = −∂u_i ∂v_j D
//! Γ_{ij,k}  = −∂u_i ∂u_j ∂v_k D          (connection of D)
//! T_ijk     = −∂u_i ∂u_j ∂v_k D + ∂u_k ∂v_i ∂v_j D
//! ```
//!
//! The dual connection is the connection of D*(p, q) = D(q, p). With these
//! conventions T equals the lowered difference Γ^(D) − Γ^(D*).

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{check_dim, GeomError, Result};
use crate::fd::mixed_partial;
use crate::tensor::{cholesky, min_eigenvalue, spd_inverse, symmetrize, Rank3};

type DivFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
type PairGuard = Arc<dyn Fn(&[f64], &[f64]) -> bool + Send + Sync>;

/// Relative steps for the mixed-partial stencils, scaled by max(1, |p|∞).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceSteps {
    pub second: f64,
    pub third: f64,
}

impl Default for DivergenceSteps {
    fn default() -> Self {
        DivergenceSteps {
            second: 1e-3,
            third: 1e-2,
        }
    }
}

impl DivergenceSteps {
    fn scaled(step: f64, p: &[f64]) -> f64 {
        step * p.iter().fold(1.0_f64, |m, v| m.max(v.abs()))
    }
}

#[derive(Clone)]
pub struct DivergenceFn {
    name: String,
    dim: usize,
    eval: DivFn,
    guard: PairGuard,
}

impl fmt::Debug for DivergenceFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DivergenceFn")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

impl DivergenceFn {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        eval: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        DivergenceFn {
            name: name.into(),
            dim,
            eval: Arc::new(eval),
            guard: Arc::new(|_, _| true),
        }
    }

    pub fn with_guard(
        mut self,
        guard: impl Fn(&[f64], &[f64]) -> bool + Send + Sync + 'static,
    ) -> Self {
        self.guard = Arc::new(guard);
        self
    }

    /// ½|p − q|².
    pub fn squared_euclidean(n: usize) -> Self {
        DivergenceFn::new("sq-euclid", n, |p, q| {
            0.5 * p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn admits(&self, p: &[f64], q: &[f64]) -> bool {
        p.len() == self.dim && q.len() == self.dim && (self.guard)(p, q)
    }

    pub fn eval(&self, p: &[f64], q: &[f64]) -> Result<f64> {
        check_dim(self.dim, p.len())?;
        check_dim(self.dim, q.len())?;
        if !(self.guard)(p, q) {
            return Err(GeomError::Domain(format!(
                "{} does not admit ({p:?}, {q:?})",
                self.name
            )));
        }
        Ok((self.eval)(p, q))
    }

    /// D*(p, q) = D(q, p).
    pub fn dual(&self) -> DivergenceFn {
        let eval = self.eval.clone();
        let guard = self.guard.clone();
        let name = match self.name.strip_suffix('*') {
            Some(base) => base.to_string(),
            None => format!("{}*", self.name),
        };
        DivergenceFn {
            name,
            dim: self.dim,
            eval: Arc::new(move |p, q| eval(q, p)),
            guard: Arc::new(move |p, q| guard(q, p)),
        }
    }

    /// D as a function of the concatenated argument (u, v).
    fn joint(&self) -> impl Fn(&[f64]) -> Result<f64> + '_ {
        move |z: &[f64]| {
            let (u, v) = z.split_at(self.dim);
            self.eval(u, v)
        }
    }

    fn diag_point(&self, p: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, p.len())?;
        let mut z = p.to_vec();
        z.extend_from_slice(p);
        Ok(z)
    }
}

/// Third-order mixed partial with one Richardson step, (4·M(h/2) − M(h)) / 3,
/// which cancels the O(h²) term of the central stencil.
fn third_partial(
    f: &impl Fn(&[f64]) -> Result<f64>,
    z: &[f64],
    axes: &[usize; 3],
    h: f64,
) -> Result<f64> {
    let coarse = mixed_partial(f, z, axes, h)?;
    let fine = mixed_partial(f, z, axes, 0.5 * h)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Symmetrized −∂u∂v D without the definiteness check.
fn raw_metric(d: &DivergenceFn, p: &[f64], steps: DivergenceSteps) -> Result<DMatrix<f64>> {
    let z = d.diag_point(p)?;
    let f = d.joint();
    let h = DivergenceSteps::scaled(steps.second, p);
    let n = d.dim;
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            g[(i, j)] = -mixed_partial(&f, &z, &[i, n + j], h)?;
        }
    }
    Ok(symmetrize(&g))
}

/// Metric generated by `d` at `p`.
pub fn induced_metric(d: &DivergenceFn, p: &[f64], steps: DivergenceSteps) -> Result<DMatrix<f64>> {
    let g = raw_metric(d, p, steps)?;
    cholesky(&g)?;
    Ok(g)
}

/// Connection generated by `d` at `p`, as Γ^k_ij.
pub fn induced_connection(d: &DivergenceFn, p: &[f64], steps: DivergenceSteps) -> Result<Rank3> {
    let g_inv = spd_inverse(&induced_metric(d, p, steps)?)?;
    let z = d.diag_point(p)?;
    let f = d.joint();
    let h = DivergenceSteps::scaled(steps.third, p);
    let n = d.dim;
    let mut lowered = Rank3::zeros(n);
    for i in 0..n {
        for j in i..n {
            for k in 0..n {
                let v = -third_partial(&f, &z, &[i, j, n + k], h)?;
                lowered.set(i, j, k, v);
                lowered.set(j, i, k, v);
            }
        }
    }
    Ok(lowered.raise(&g_inv))
}

/// Connection generated by the dual divergence D*.
pub fn induced_dual_connection(
    d: &DivergenceFn,
    p: &[f64],
    steps: DivergenceSteps,
) -> Result<Rank3> {
    induced_connection(&d.dual(), p, steps)
}

/// Cubic tensor generated by `d` at `p`.
pub fn induced_tensor(d: &DivergenceFn, p: &[f64], steps: DivergenceSteps) -> Result<Rank3> {
    let z = d.diag_point(p)?;
    let f = d.joint();
    let h = DivergenceSteps::scaled(steps.third, p);
    let n = d.dim;
    let mut t = Rank3::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let a = third_partial(&f, &z, &[i, j, n + k], h)?;
                let b = third_partial(&f, &z, &[k, n + i, n + j], h)?;
                t.set(i, j, k, -a + b);
            }
        }
    }
    Ok(t)
}

/// Outcome of [`check_divergence_axioms`].
#[derive(Debug, Clone, PartialEq)]
pub struct AxiomReport {
    /// max |D(p, p)| over the samples.
    pub max_diagonal: f64,
    /// Smallest eigenvalue of the induced metric over the samples.
    pub min_metric_eigenvalue: f64,
    /// Smallest D(p_i, p_{i+1}) over consecutive sample pairs.
    pub min_offdiagonal: f64,
    pub pass: bool,
}

pub const AXIOM_DIAGONAL_TOL: f64 = 1e-10;
pub const AXIOM_EIGENVALUE_FLOOR: f64 = 1e-8;

/// Checks vanishing on the diagonal, nonnegativity on sample pairs and
/// positive-definiteness of the induced metric.
pub fn check_divergence_axioms(
    d: &DivergenceFn,
    samples: &[Vec<f64>],
    steps: DivergenceSteps,
) -> Result<AxiomReport> {
    if samples.is_empty() {
        return Err(GeomError::Invalid("no sample points".into()));
    }
    let per_point = crate::sweep::map(samples, |p| -> Result<(f64, f64)> {
        let diag = d.eval(p, p)?.abs();
        let eig = min_eigenvalue(&raw_metric(d, p, steps)?);
        Ok((diag, eig))
    });
    let mut max_diagonal: f64 = 0.0;
    let mut min_metric_eigenvalue = f64::INFINITY;
    for r in per_point {
        let (diag, eig) = r?;
        max_diagonal = max_diagonal.max(diag);
        min_metric_eigenvalue = min_metric_eigenvalue.min(eig);
    }
    let mut min_offdiagonal = f64::INFINITY;
    for w in samples.windows(2) {
        if d.admits(&w[0], &w[1]) {
            min_offdiagonal = min_offdiagonal.min(d.eval(&w[0], &w[1])?);
        }
    }
    let pass = max_diagonal <= AXIOM_DIAGONAL_TOL
        && min_metric_eigenvalue >= AXIOM_EIGENVALUE_FLOOR
        && !(min_offdiagonal < -AXIOM_DIAGONAL_TOL);
    Ok(AxiomReport {
        max_diagonal,
        min_metric_eigenvalue,
        min_offdiagonal,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear() -> DivergenceFn {
        DivergenceFn::new("linear", 2, |p, q| p[0] - q[0])
    }

    #[test]
    fn squared_euclidean_generates_flat_structure() {
        let d = DivergenceFn::squared_euclidean(2);
        let p = [0.3, -1.2];
        let s = DivergenceSteps::default();
        let g = induced_metric(&d, &p, s).unwrap();
        assert!((g - DMatrix::<f64>::identity(2, 2)).abs().max() < 1e-8);
        assert!(induced_connection(&d, &p, s).unwrap().max_abs() < 1e-8);
        assert!(induced_dual_connection(&d, &p, s).unwrap().max_abs() < 1e-8);
        assert!(induced_tensor(&d, &p, s).unwrap().max_abs() < 1e-8);
    }

    #[test]
    fn axioms_accept_squared_euclidean() {
        let d = DivergenceFn::squared_euclidean(2);
        let samples = vec![vec![0.0, 0.0], vec![1.0, -1.0], vec![0.5, 2.0]];
        let r = check_divergence_axioms(&d, &samples, DivergenceSteps::default()).unwrap();
        assert!(r.pass, "{r:?}");
        assert!((r.min_metric_eigenvalue - 1.0).abs() < 1e-8);
    }

    #[test]
    fn axioms_reject_linear_function() {
        let samples = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![-1.0, 0.5]];
        let r = check_divergence_axioms(&linear(), &samples, DivergenceSteps::default()).unwrap();
        assert!(!r.pass);
        assert!(r.min_metric_eigenvalue.abs() < 1e-8);
        assert!(r.min_offdiagonal < 0.0);
    }

    #[test]
    fn linear_function_has_no_metric() {
        assert!(matches!(
            induced_metric(&linear(), &[0.0, 0.0], DivergenceSteps::default()),
            Err(GeomError::NotSpd { .. })
        ));
    }

    #[test]
    fn dual_swaps_arguments_and_is_an_involution() {
        let d = DivergenceFn::new("asym", 1, |p, q| (p[0] - q[0]).powi(2) * (1.0 + p[0]));
        let ds = d.dual();
        assert_eq!(
            ds.eval(&[0.2], &[0.7]).unwrap(),
            d.eval(&[0.7], &[0.2]).unwrap()
        );
        let dss = ds.dual();
        assert_eq!(dss.name(), "asym");
        for (p, q) in [(0.1, 0.4), (-0.3, 2.0)] {
            assert_eq!(dss.eval(&[p], &[q]).unwrap(), d.eval(&[p], &[q]).unwrap());
        }
    }

    #[test]
    fn symmetric_divergence_has_zero_tensor() {
        // D(p, q) = (p − q)² (1 + (p + q)²/4) is symmetric, so T^D vanishes.
        let d = DivergenceFn::new("sym", 1, |p, q| {
            (p[0] - q[0]).powi(2) * (1.0 + (p[0] + q[0]).powi(2) / 4.0)
        });
        let t = induced_tensor(&d, &[0.4], DivergenceSteps::default()).unwrap();
        assert!(t.max_abs() < 1e-8, "{}", t.max_abs());
    }
}
