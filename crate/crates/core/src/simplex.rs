//! The open probability simplex over a finite index set I = {1, …, n+1}.
//!
//! The chart keeps the first n weights; the last weight is 1 minus their
//! sum. A chart tangent vector lifts to a measure tangent whose last component
//! is the negative sum of the others.

use nalgebra::DMatrix;

use crate::divergence::DivergenceFn;
use crate::error::{GeomError, Result};
use crate::geometry::{
    alpha_connection, ConnectionField, CubicTensorField, ManifoldModel, MetricField,
};
use crate::tensor::Rank3;

/// Minimum weight for a point to count as interior.
pub const BOUNDARY_MARGIN: f64 = 1e-6;
const SUM_TOL: f64 = 1e-12;

/// An interior point of the simplex, stored as its full weight vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint {
    weights: Vec<f64>,
}

impl SimplexPoint {
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(GeomError::Invalid(
                "a simplex point needs at least two weights".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(GeomError::Boundary(format!("weights sum to {sum}, not 1")));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > BOUNDARY_MARGIN)) {
            return Err(GeomError::Boundary(format!(
                "weight {w} within {BOUNDARY_MARGIN:e} of the boundary"
            )));
        }
        Ok(SimplexPoint { weights })
    }

    /// Builds the point whose first n weights are `chart`.
    pub fn from_chart(chart: &[f64]) -> Result<Self> {
        let last = 1.0 - chart.iter().sum::<f64>();
        let mut weights = chart.to_vec();
        weights.push(last);
        if let Some(w) = weights.iter().find(|w| !(**w > BOUNDARY_MARGIN)) {
            return Err(GeomError::Boundary(format!(
                "weight {w} within {BOUNDARY_MARGIN:e} of the boundary"
            )));
        }
        Ok(SimplexPoint { weights })
    }

    /// Chart dimension n (one less than |I|).
    pub fn n(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn chart(&self) -> &[f64] {
        &self.weights[..self.n()]
    }

    fn last(&self) -> f64 {
        self.weights[self.n()]
    }
}

/// True when `chart` and its complement weight exceed the boundary margin.
pub fn chart_is_interior(chart: &[f64]) -> bool {
    let mut sum = 0.0;
    for c in chart {
        if !(*c > BOUNDARY_MARGIN) {
            return false;
        }
        sum += c;
    }
    1.0 - sum > BOUNDARY_MARGIN
}

/// Tangent vector to the simplex in measure coordinates (components sum to zero).
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureTangent {
    components: Vec<f64>,
}

impl MeasureTangent {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        let scale = components.iter().fold(1.0_f64, |m, c| m.max(c.abs()));
        let sum: f64 = components.iter().sum();
        if sum.abs() > SUM_TOL * scale {
            return Err(GeomError::Invalid(format!(
                "tangent components sum to {sum}, not 0"
            )));
        }
        Ok(MeasureTangent { components })
    }

    /// Lifts a chart vector: appends the negative sum of its components.
    pub fn from_chart(v: &[f64]) -> Self {
        let mut components = v.to_vec();
        components.push(-v.iter().sum::<f64>());
        MeasureTangent { components }
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }
}

fn same_size(mu: &SimplexPoint, len: usize) -> Result<()> {
    if mu.weights.len() == len {
        Ok(())
    } else {
        Err(GeomError::Dimension {
            expected: mu.weights.len(),
            got: len,
        })
    }
}

/// Fisher information in the chart: g_ij = δ_ij/μ_i + 1/μ_{n+1}.
pub fn fisher_matrix(mu: &SimplexPoint) -> DMatrix<f64> {
    let n = mu.n();
    let tail = 1.0 / mu.last();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0 / mu.weights[i] + tail
        } else {
            tail
        }
    })
}

/// Inverse Fisher matrix: the covariance μ_i(δ_ij − μ_j).
pub fn fisher_inverse(mu: &SimplexPoint) -> DMatrix<f64> {
    let n = mu.n();
    let w = &mu.weights;
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            w[i] * (1.0 - w[i])
        } else {
            -w[i] * w[j]
        }
    })
}

/// Fisher inner product of measure-coordinate vectors: Σ a_i b_i / μ_i.
pub fn fisher_inner(mu: &SimplexPoint, a: &[f64], b: &[f64]) -> Result<f64> {
    same_size(mu, a.len())?;
    same_size(mu, b.len())?;
    Ok(mu
        .weights
        .iter()
        .zip(a)
        .zip(b)
        .map(|((m, x), y)| x * y / m)
        .sum())
}

/// Exponential transport from μ to ν: a_i ↦ ν_i a_i / μ_i.
pub fn transport_e(mu: &SimplexPoint, nu: &SimplexPoint, a: &MeasureTangent) -> Result<Vec<f64>> {
    same_size(mu, nu.weights.len())?;
    same_size(mu, a.components.len())?;
    Ok(mu
        .weights
        .iter()
        .zip(&nu.weights)
        .zip(&a.components)
        .map(|((m, n), x)| n * x / m)
        .collect())
}

/// Mixture transport: components are unchanged.
pub fn transport_m(mu: &SimplexPoint, nu: &SimplexPoint, a: &MeasureTangent) -> Result<Vec<f64>> {
    same_size(mu, nu.weights.len())?;
    same_size(mu, a.components.len())?;
    Ok(a.components.clone())
}

/// Statistical model of the n-simplex: Fisher metric, (e, m) pair, Amari–Chentsov
/// tensor and the KL divergence, all in the chart.
pub fn model(n: usize) -> ManifoldModel {
    let lift = |c: &[f64]| {
        let mut w = c.to_vec();
        w.push(1.0 - c.iter().sum::<f64>());
        SimplexPoint { weights: w }
    };
    let metric = MetricField::new(n, move |c| fisher_matrix(&lift(c)))
        .with_partials(move |c| fisher_partials(&lift(c)));
    let base = ManifoldModel::new(format!("simplex:n={n}"), metric).with_guard(chart_is_interior);
    let m_field = base.guarded(&ConnectionField::zero(n));
    let e_field = base.guarded(&ConnectionField::new(n, |c| {
        conn_e(&SimplexPoint::from_chart(c)?)
    }));
    let tensor = CubicTensorField::new(n, |c| Ok(ac_tensor_simplex(&SimplexPoint::from_chart(c)?)));
    base.with_connections(e_field, m_field)
        .with_tensor(tensor)
        .with_divergence(kl_divergence_fn(n))
}

/// Chart partials of the Fisher metric: ∂_k g_ij = 1/μ_{n+1}² − δ_ij δ_jk/μ_i².
pub fn fisher_partials(mu: &SimplexPoint) -> Vec<DMatrix<f64>> {
    let n = mu.n();
    let tail = 1.0 / (mu.last() * mu.last());
    let w = &mu.weights;
    (0..n)
        .map(|k| {
            DMatrix::from_fn(n, n, |i, j| {
                if i == j && j == k {
                    tail - 1.0 / (w[i] * w[i])
                } else {
                    tail
                }
            })
        })
        .collect()
}

/// Mixture connection: the chart is affine for it, so every coefficient vanishes.
pub fn conn_m(mu: &SimplexPoint) -> Result<Rank3> {
    SimplexPoint::from_chart(mu.chart())?;
    Ok(Rank3::zeros(mu.n()))
}

/// Exponential connection. The chart is mixture-affine, so duality gives
/// Γ_e = −g⁻¹ T with T the Amari–Chentsov tensor.
pub fn conn_e(mu: &SimplexPoint) -> Result<Rank3> {
    SimplexPoint::from_chart(mu.chart())?;
    Ok(ac_tensor_simplex(mu).raise(&fisher_inverse(mu)).scale(-1.0))
}

/// α-connection with α = 1 the exponential and α = −1 the mixture end.
pub fn alpha_conn_simplex(mu: &SimplexPoint, alpha: f64) -> Result<Rank3> {
    alpha_connection(&conn_e(mu)?, &conn_m(mu)?, alpha)
}

/// Amari–Chentsov tensor on measure-coordinate vectors: Σ a_i b_i c_i / μ_i².
pub fn ac_tensor_eval(mu: &SimplexPoint, a: &[f64], b: &[f64], c: &[f64]) -> Result<f64> {
    same_size(mu, a.len())?;
    same_size(mu, b.len())?;
    same_size(mu, c.len())?;
    Ok((0..mu.weights.len())
        .map(|i| a[i] * b[i] * c[i] / (mu.weights[i] * mu.weights[i]))
        .sum())
}

/// Amari–Chentsov tensor in the chart basis.
pub fn ac_tensor_simplex(mu: &SimplexPoint) -> Rank3 {
    let n = mu.n();
    let basis: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            MeasureTangent::from_chart(&e).components
        })
        .collect();
    Rank3::from_fn(n, |i, j, k| {
        ac_tensor_eval(mu, &basis[i], &basis[j], &basis[k])
            .expect("basis vectors match the point size")
    })
}

/// Σ μ_i ln(μ_i / ν_i).
pub fn kl_divergence(mu: &SimplexPoint, nu: &SimplexPoint) -> Result<f64> {
    same_size(mu, nu.weights.len())?;
    Ok(kl_raw(&mu.weights, &nu.weights))
}

fn kl_raw(mu: &[f64], nu: &[f64]) -> f64 {
    mu.iter().zip(nu).map(|(m, n)| m * (m / n).ln()).sum()
}

/// −Σ μ_i ln μ_i.
pub fn entropy(mu: &SimplexPoint) -> f64 {
    -mu.weights.iter().map(|m| m * m.ln()).sum::<f64>()
}

/// −Σ μ_i ln ν_i.
pub fn cross_entropy(mu: &SimplexPoint, nu: &SimplexPoint) -> Result<f64> {
    same_size(mu, nu.weights.len())?;
    Ok(-mu
        .weights
        .iter()
        .zip(&nu.weights)
        .map(|(m, n)| m * n.ln())
        .sum::<f64>())
}

/// KL divergence as a function of two chart points.
pub fn kl_divergence_fn(n: usize) -> DivergenceFn {
    DivergenceFn::new("kl-simplex", n, |p, q| {
        let lift = |c: &[f64]| {
            let mut w = c.to_vec();
            w.push(1.0 - c.iter().sum::<f64>());
            w
        };
        kl_raw(&lift(p), &lift(q))
    })
    .with_guard(|p, q| chart_is_interior(p) && chart_is_interior(q))
}
