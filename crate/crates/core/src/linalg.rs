//! Dense kernels for the tiny systems the solver needs (p ≤ a handful).

use crate::Scalar;

/// LU factorisation with partial pivoting of a square row-major matrix.
#[derive(Debug, Clone)]
pub(crate) struct Lu<F> {
    n: usize,
    lu: Vec<F>,
    perm: Vec<usize>,
}

impl<F: Scalar> Lu<F> {
    /// Returns `None` when a pivot falls below `tol` in magnitude.
    pub(crate) fn factor(mut a: Vec<F>, n: usize, tol: F) -> Option<Self> {
        debug_assert_eq!(a.len(), n * n);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (piv_row, piv_val) = (k..n)
                .map(|r| (r, a[r * n + k].abs()))
                .fold((k, F::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if piv_val <= tol {
                return None;
            }
            if piv_row != k {
                for c in 0..n {
                    a.swap(k * n + c, piv_row * n + c);
                }
                perm.swap(k, piv_row);
            }
            let pivot = a[k * n + k];
            for r in (k + 1)..n {
                let factor = a[r * n + k] / pivot;
                a[r * n + k] = factor;
                for c in (k + 1)..n {
                    let v = a[k * n + c];
                    a[r * n + c] = a[r * n + c] - factor * v;
                }
            }
        }
        Some(Lu { n, lu: a, perm })
    }

    /// Solves `A x = b`.
    pub(crate) fn solve(&self, b: &[F]) -> Vec<F> {
        let n = self.n;
        let mut x: Vec<F> = self.perm.iter().map(|&i| b[i]).collect();
        for r in 0..n {
            let mut acc = x[r];
            for c in 0..r {
                acc = acc - self.lu[r * n + c] * x[c];
            }
            x[r] = acc;
        }
        for r in (0..n).rev() {
            let mut acc = x[r];
            for c in (r + 1)..n {
                acc = acc - self.lu[r * n + c] * x[c];
            }
            x[r] = acc / self.lu[r * n + r];
        }
        x
    }

    /// Solves `Aᵀ x = b`.
    pub(crate) fn solve_transpose(&self, b: &[F]) -> Vec<F> {
        let n = self.n;
        // Aᵀ = Uᵀ Lᵀ P, so solve Uᵀ z = b, Lᵀ w = z, then x = Pᵀ w.
        let mut z = b.to_vec();
        for r in 0..n {
            let mut acc = z[r];
            for c in 0..r {
                acc = acc - self.lu[c * n + r] * z[c];
            }
            z[r] = acc / self.lu[r * n + r];
        }
        for r in (0..n).rev() {
            let mut acc = z[r];
            for c in (r + 1)..n {
                acc = acc - self.lu[c * n + r] * z[c];
            }
            z[r] = acc;
        }
        let mut x = vec![F::zero(); n];
        for (k, &i) in self.perm.iter().enumerate() {
            x[i] = z[k];
        }
        x
    }
}

/// Singular values of a row-major `rows × cols` matrix by one-sided Jacobi,
/// in descending order.
pub(crate) fn singular_values<F: Scalar>(a: &[F], rows: usize, cols: usize) -> Vec<F> {
    // Column-major working copy.
    let mut u: Vec<Vec<F>> = (0..cols)
        .map(|c| (0..rows).map(|r| a[r * cols + c]).collect())
        .collect();
    let eps = F::epsilon();
    for _sweep in 0..60 {
        let mut rotated = false;
        for i in 0..cols {
            for j in (i + 1)..cols {
                let alpha: F = u[i].iter().map(|&x| x * x).sum();
                let beta: F = u[j].iter().map(|&x| x * x).sum();
                let gamma: F = u[i].iter().zip(&u[j]).map(|(&x, &y)| x * y).sum();
                if gamma == F::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let two = F::lit(2.0);
                let zeta = (beta - alpha) / (two * gamma);
                let t = zeta.signum() / (zeta.abs() + (F::one() + zeta * zeta).sqrt());
                let c = F::one() / (F::one() + t * t).sqrt();
                let s = c * t;
                for r in 0..rows {
                    let xi = u[i][r];
                    let xj = u[j][r];
                    u[i][r] = c * xi - s * xj;
                    u[j][r] = s * xi + c * xj;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<F> = u
        .iter()
        .map(|col| col.iter().map(|&x| x * x).sum::<F>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

/// Numerical rank: singular values above `rel_tol × σ_max`.
pub(crate) fn numerical_rank<F: Scalar>(a: &[F], rows: usize, cols: usize, rel_tol: F) -> usize {
    let sv = singular_values(a, rows, cols);
    let Some(&largest) = sv.first() else {
        return 0;
    };
    if largest == F::zero() {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * largest).count()
}
