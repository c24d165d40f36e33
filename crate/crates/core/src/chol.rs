//! Dense Cholesky factorization of support Gram matrices, with incremental
//! column insertion/removal for the model-space sampler.
//!
//! Factorizations fail (rather than being regularized) when a pivot falls
//! below the relative tolerance [`REL_PIVOT_TOL`]: a singular support is an
//! input error, and silent jitter would change the target posterior.

use nalgebra::{DMatrix, DVector};

/// Relative pivot tolerance: pivot `d_j` must exceed `REL_PIVOT_TOL * g_jj`.
pub const REL_PIVOT_TOL: f64 = 1e-10;

/// Raised when a pivot (or a downdate) drops below tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PivotFailure;

/// Lower-triangular factor `L` with `G = L Lᵀ` for a support Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CholFactor {
    l: DMatrix<f64>,
}

impl CholFactor {
    /// Factorizes a symmetric positive-definite matrix.
    pub fn from_gram(gram: &DMatrix<f64>) -> Result<Self, PivotFailure> {
        let n = gram.nrows();
        assert_eq!(n, gram.ncols(), "gram must be square");
        let mut l = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let gjj = gram[(j, j)];
            let mut d = gjj;
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if gjj.is_nan() || gjj <= 0.0 || d.is_nan() || d <= REL_PIVOT_TOL * gjj {
                return Err(PivotFailure);
            }
            let ljj = d.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let mut v = gram[(i, j)];
                for k in 0..j {
                    v -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = v / ljj;
            }
        }
        Ok(CholFactor { l })
    }

    /// The 0x0 factor for the empty support.
    pub fn empty() -> Self {
        CholFactor {
            l: DMatrix::zeros(0, 0),
        }
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// `log |G| = 2 Σ log L_jj`; zero for the empty factor.
    pub fn log_det_gram(&self) -> f64 {
        (0..self.dim()).map(|j| self.l[(j, j)].ln()).sum::<f64>() * 2.0
    }

    /// Solves `L w = b` (forward substitution).
    pub fn forward_solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        debug_assert_eq!(b.len(), n);
        let mut w = b.clone();
        for i in 0..n {
            for k in 0..i {
                let t = w[k];
                w[i] -= self.l[(i, k)] * t;
            }
            w[i] /= self.l[(i, i)];
        }
        w
    }

    /// Solves `Lᵀ x = b` (back substitution).
    pub fn back_solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        debug_assert_eq!(b.len(), n);
        let mut x = b.clone();
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let t = x[k];
                x[i] -= self.l[(k, i)] * t;
            }
            x[i] /= self.l[(i, i)];
        }
        x
    }

    /// Solves `G x = b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.back_solve(&self.forward_solve(b))
    }

    /// Reconstructs `G = L Lᵀ` (test and export helper).
    pub fn gram(&self) -> DMatrix<f64> {
        &self.l * self.l.transpose()
    }

    /// Computes `Lᵀ v`, so that `‖Lᵀ v‖² = vᵀ G v`.
    pub fn lt_mul(&self, v: &DVector<f64>) -> DVector<f64> {
        self.l.tr_mul(v)
    }

    /// Computes `L v`; `L z` has covariance `G` for standard normal `z`.
    pub fn l_mul(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.l * v
    }

    /// Scales the factor by `sqrt(factor)`, i.e. the factor of `factor * G`.
    pub fn scaled(&self, factor: f64) -> Self {
        assert!(factor > 0.0);
        CholFactor {
            l: &self.l * factor.sqrt(),
        }
    }

    /// Factor of the Gram after inserting a new column at position `k`.
    ///
    /// `cross[i]` is the inner product of the new design column with the
    /// existing column at position `i`; `diag` is its squared norm. Fails
    /// when the Schur-complement pivot falls below tolerance.
    pub fn insert(&self, k: usize, cross: &DVector<f64>, diag: f64) -> Result<Self, PivotFailure> {
        let s = self.dim();
        assert!(k <= s);
        assert_eq!(cross.len(), s);

        // l21 solves L11 l21 = g1 over the leading k x k block.
        let mut l21 = DVector::<f64>::zeros(k);
        for i in 0..k {
            let mut v = cross[i];
            for t in 0..i {
                v -= self.l[(i, t)] * l21[t];
            }
            l21[i] = v / self.l[(i, i)];
        }
        let pivot = diag - l21.norm_squared();
        if diag.is_nan() || diag <= 0.0 || pivot.is_nan() || pivot <= REL_PIVOT_TOL * diag {
            return Err(PivotFailure);
        }
        let lam = pivot.sqrt();

        // l32 = (g2 - L31 l21) / lam for the trailing rows.
        let m = s - k;
        let mut l32 = DVector::<f64>::zeros(m);
        for i in 0..m {
            let mut v = cross[k + i];
            for t in 0..k {
                v -= self.l[(k + i, t)] * l21[t];
            }
            l32[i] = v / lam;
        }

        let mut l = DMatrix::<f64>::zeros(s + 1, s + 1);
        for i in 0..k {
            for j in 0..=i {
                l[(i, j)] = self.l[(i, j)];
            }
        }
        for j in 0..k {
            l[(k, j)] = l21[j];
        }
        l[(k, k)] = lam;
        for i in 0..m {
            for j in 0..k {
                l[(k + 1 + i, j)] = self.l[(k + i, j)];
            }
            l[(k + 1 + i, k)] = l32[i];
            for j in 0..=i {
                l[(k + 1 + i, k + 1 + j)] = self.l[(k + i, k + j)];
            }
        }
        // Trailing block loses l32 l32ᵀ: rank-one downdate.
        let mut v = l32;
        rank_one(&mut l, k + 1, &mut v, -1.0)?;
        Ok(CholFactor { l })
    }

    /// Factor of the Gram after deleting the column at position `k`.
    /// Never fails: the trailing block gains a positive semidefinite term.
    pub fn remove(&self, k: usize) -> Self {
        let s = self.dim();
        assert!(k < s);
        let m = s - k - 1;
        let mut l = DMatrix::<f64>::zeros(s - 1, s - 1);
        for i in 0..k {
            for j in 0..=i {
                l[(i, j)] = self.l[(i, j)];
            }
        }
        let mut v = DVector::<f64>::zeros(m);
        for i in 0..m {
            for j in 0..k {
                l[(k + i, j)] = self.l[(k + 1 + i, j)];
            }
            for j in 0..=i {
                l[(k + i, k + j)] = self.l[(k + 1 + i, k + 1 + j)];
            }
            v[i] = self.l[(k + 1 + i, k)];
        }
        rank_one(&mut l, k, &mut v, 1.0).expect("rank-one update cannot fail");
        CholFactor { l }
    }
}

/// In-place rank-one update (`sign = +1`) or downdate (`sign = -1`) of the
/// trailing block `L[start.., start..]`; `v` is consumed as workspace.
fn rank_one(
    l: &mut DMatrix<f64>,
    start: usize,
    v: &mut DVector<f64>,
    sign: f64,
) -> Result<(), PivotFailure> {
    let m = l.nrows() - start;
    debug_assert_eq!(v.len(), m);
    for j in 0..m {
        let jj = start + j;
        let ljj = l[(jj, jj)];
        let vj = v[j];
        let arg = ljj * ljj + sign * vj * vj;
        if arg.is_nan() || arg <= REL_PIVOT_TOL * ljj * ljj {
            return Err(PivotFailure);
        }
        let r = arg.sqrt();
        let c = r / ljj;
        let s = vj / ljj;
        l[(jj, jj)] = r;
        for i in (j + 1)..m {
            let ii = start + i;
            l[(ii, jj)] = (l[(ii, jj)] + sign * s * v[i]) / c;
            v[i] = c * v[i] - s * l[(ii, jj)];
        }
    }
    Ok(())
}
