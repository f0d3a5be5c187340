//! Central finite-difference stencils.
//!
//! Mixed partials are built as tensor products of one-dimensional central
//! stencils, one per distinct axis. The stencil for ∂_i∂_j∂_k depends only on
//! the multiset {i, j, k}, so derivative arrays filled from it are exactly
//! symmetric.

use crate::error::Result;

/// Relative finite-difference step: h = rel_step · max(1, |x|∞).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdStep {
    pub rel_step: f64,
}

impl FdStep {
    pub const fn new(rel_step: f64) -> Self {
        FdStep { rel_step }
    }

    pub fn at(&self, x: &[f64]) -> f64 {
        let scale = x.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        self.rel_step * scale
    }
}

impl Default for FdStep {
    fn default() -> Self {
        FdStep { rel_step: 1e-4 }
    }
}

fn stencil(order: usize) -> (&'static [f64], &'static [f64]) {
    match order {
        1 => (&[-1.0, 1.0], &[-0.5, 0.5]),
        2 => (&[-1.0, 0.0, 1.0], &[1.0, -2.0, 1.0]),
        3 => (&[-2.0, -1.0, 1.0, 2.0], &[-0.5, 1.0, -1.0, 0.5]),
        _ => panic!("central stencil of order {order} not provided"),
    }
}

/// Mixed partial derivative of `f` at `x`.
///
/// `axes` lists the differentiation axes with repetition, e.g. `[0, 0, 3]`
/// for ∂²_0 ∂_3. Total order per axis is at most 3.
pub fn mixed_partial<F>(f: &F, x: &[f64], axes: &[usize], h: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + ?Sized,
{
    let mut counts: Vec<(usize, usize)> = Vec::new();
    for &a in axes {
        match counts.iter_mut().find(|(ax, _)| *ax == a) {
            Some((_, c)) => *c += 1,
            None => counts.push((a, 1)),
        }
    }
    counts.sort_unstable();
    let stencils: Vec<_> = counts.iter().map(|&(_, c)| stencil(c)).collect();
    let total_order = axes.len() as i32;

    let mut idx = vec![0usize; counts.len()];
    let mut point = x.to_vec();
    let mut acc = 0.0;
    loop {
        let mut w = 1.0;
        point.copy_from_slice(x);
        for (d, &(axis, _)) in counts.iter().enumerate() {
            let (offs, coefs) = stencils[d];
            point[axis] += offs[idx[d]] * h;
            w *= coefs[idx[d]];
        }
        if w != 0.0 {
            acc += w * f(&point)?;
        }
        // Odometer over the stencil product.
        let mut d = 0;
        loop {
            if d == idx.len() {
                return Ok(acc / h.powi(total_order));
            }
            idx[d] += 1;
            if idx[d] < stencils[d].0.len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

pub fn gradient<F>(f: &F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + ?Sized,
{
    (0..x.len()).map(|i| mixed_partial(f, x, &[i], h)).collect()
}

/// Symmetric Hessian; off-diagonal entries are computed once.
pub fn hessian<F>(f: &F, x: &[f64], h: f64) -> Result<nalgebra::DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + ?Sized,
{
    let n = x.len();
    let mut m = nalgebra::DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = mixed_partial(f, x, &[i, j], h)?;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Fully symmetric array of third partials, one stencil per index multiset.
pub fn third_partials<F>(f: &F, x: &[f64], h: f64) -> Result<crate::tensor::Rank3>
where
    F: Fn(&[f64]) -> Result<f64> + ?Sized,
{
    let n = x.len();
    let mut t = crate::tensor::Rank3::zeros(n);
    for i in 0..n {
        for j in i..n {
            for k in j..n {
                let v = mixed_partial(f, x, &[i, j, k], h)?;
                for (a, b, c) in [
                    (i, j, k),
                    (i, k, j),
                    (j, i, k),
                    (j, k, i),
                    (k, i, j),
                    (k, j, i),
                ] {
                    t.set(a, b, c, v);
                }
            }
        }
    }
    Ok(t)
}
