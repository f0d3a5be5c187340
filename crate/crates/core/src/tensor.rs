//! Dense rank-3 arrays and the small amount of linear algebra the kernels need.
//!
//! Connection coefficients are stored as `[k][i][j]` for Γ^k_ij, i.e. the
//! upper index first. Covariant cubic tensors are stored as `[i][j][k]`.

use nalgebra::DMatrix;
use std::ops::{Add, Mul, Sub};

use crate::error::{GeomError, Result};

/// Minimum Cholesky pivot accepted as positive definite.
pub const MIN_PIVOT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Rank3 {
    n: usize,
    data: Vec<f64>,
}

impl Rank3 {
    pub fn zeros(n: usize) -> Self {
        Rank3 {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n * n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    data.push(f(a, b, c));
                }
            }
        }
        Rank3 { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.data[(a * self.n + b) * self.n + c]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, c: usize, v: f64) {
        self.data[(a * self.n + b) * self.n + c] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest componentwise difference.
    pub fn max_abs_diff(&self, other: &Rank3) -> f64 {
        assert_eq!(self.n, other.n, "rank-3 dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn scale(&self, s: f64) -> Rank3 {
        Rank3 {
            n: self.n,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// Largest deviation from full permutation symmetry.
    pub fn asymmetry(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let v = self.get(i, j, k);
                    for w in [
                        self.get(i, k, j),
                        self.get(j, i, k),
                        self.get(j, k, i),
                        self.get(k, i, j),
                        self.get(k, j, i),
                    ] {
                        worst = worst.max((v - w).abs());
                    }
                }
            }
        }
        worst
    }

    /// Lowers the upper index of a connection: Γ_{ij,k} = Σ_m Γ^m_ij g_mk,
    /// returned in `[i][j][k]` layout.
    pub fn lower(&self, g: &DMatrix<f64>) -> Rank3 {
        let n = self.n;
        Rank3::from_fn(n, |i, j, k| {
            (0..n).map(|m| self.get(m, i, j) * g[(m, k)]).sum()
        })
    }

    /// Raises the last index of a covariant tensor: 𝒯^k_ij = Σ_m g^{km} T_ijm,
    /// returned in connection layout `[k][i][j]`.
    pub fn raise(&self, g_inv: &DMatrix<f64>) -> Rank3 {
        let n = self.n;
        Rank3::from_fn(n, |k, i, j| {
            (0..n).map(|m| g_inv[(k, m)] * self.get(i, j, m)).sum()
        })
    }

    /// Contracts every slot with the columns of `j` (n_out × n_in), giving a
    /// rank-3 array over the input dimension.
    pub fn congruence(&self, j: &DMatrix<f64>) -> Rank3 {
        assert_eq!(
            j.nrows(),
            self.n,
            "jacobian rows must match tensor dimension"
        );
        let n = self.n;
        let m = j.ncols();
        // Contract one slot at a time to keep this O(n^3 m).
        let mut t1 = vec![0.0; m * n * n];
        for a in 0..m {
            for q in 0..n {
                for r in 0..n {
                    t1[(a * n + q) * n + r] = (0..n).map(|p| self.get(p, q, r) * j[(p, a)]).sum();
                }
            }
        }
        let mut t2 = vec![0.0; m * m * n];
        for a in 0..m {
            for b in 0..m {
                for r in 0..n {
                    t2[(a * m + b) * n + r] =
                        (0..n).map(|q| t1[(a * n + q) * n + r] * j[(q, b)]).sum();
                }
            }
        }
        Rank3::from_fn(m, |a, b, c| {
            (0..n).map(|r| t2[(a * m + b) * n + r] * j[(r, c)]).sum()
        })
    }

    /// Contracts the two lower slots of a connection with `v` and `w`:
    /// returns the vector Σ_ij Γ^k_ij v^i w^j.
    pub fn contract_lower(&self, v: &[f64], w: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|k| {
                let mut s = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        s += self.get(k, i, j) * v[i] * w[j];
                    }
                }
                s
            })
            .collect()
    }
}

impl Add for &Rank3 {
    type Output = Rank3;
    fn add(self, rhs: &Rank3) -> Rank3 {
        assert_eq!(self.n, rhs.n);
        Rank3 {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &Rank3 {
    type Output = Rank3;
    fn sub(self, rhs: &Rank3) -> Rank3 {
        assert_eq!(self.n, rhs.n);
        Rank3 {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul<f64> for &Rank3 {
    type Output = Rank3;
    fn mul(self, s: f64) -> Rank3 {
        self.scale(s)
    }
}

/// Cholesky factorization with an explicit minimum-pivot test.
///
/// Returns the lower factor `L` with `L Lᵀ = a`.
pub fn cholesky(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    let mut min_pivot = f64::INFINITY;
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        min_pivot = min_pivot.min(d);
        if !(d >= MIN_PIVOT) {
            return Err(GeomError::NotSpd {
                min_pivot: if d.is_nan() { f64::NAN } else { d },
            });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Inverse of a symmetric positive-definite matrix through its Cholesky factor.
pub fn spd_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let l = cholesky(a)?;
    // Solve L Y = I then Lᵀ X = Y, column by column.
    let mut inv = DMatrix::<f64>::zeros(n, n);
    for c in 0..n {
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = if i == c { 1.0 } else { 0.0 };
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[(k, i)] * inv[(k, c)];
            }
            inv[(i, c)] = s / l[(i, i)];
        }
    }
    Ok(symmetrize(&inv))
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    symmetrize(a)
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

pub fn quad_form(g: &DMatrix<f64>, v: &[f64], w: &[f64]) -> f64 {
    let n = g.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += v[i] * g[(i, j)] * w[j];
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(cholesky(&a), Err(GeomError::NotSpd { .. })));
    }

    #[test]
    fn cholesky_rejects_tiny_pivot() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-14]);
        assert!(cholesky(&a).is_err());
    }

    #[test]
    fn spd_inverse_matches_identity() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let inv = spd_inverse(&a).unwrap();
        let id = &a * &inv;
        assert!((id - DMatrix::<f64>::identity(3, 3)).abs().max() < 1e-14);
    }

    #[test]
    fn lower_then_raise_is_identity() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let g_inv = spd_inverse(&g).unwrap();
        let gamma = Rank3::from_fn(2, |k, i, j| (k + 2 * i + 3 * j) as f64 * 0.1);
        let back = gamma.lower(&g).raise(&g_inv);
        assert!(back.max_abs_diff(&gamma) < 1e-14);
    }

    #[test]
    fn congruence_with_identity_is_noop() {
        let t = Rank3::from_fn(3, |i, j, k| (i * 9 + j * 3 + k) as f64);
        let id = DMatrix::<f64>::identity(3, 3);
        assert_eq!(t.congruence(&id), t);
    }
}
