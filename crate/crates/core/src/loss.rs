//! Losses, datasets and empirical risk.

use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

/// Design matrix (row-major, column 0 is the all-ones intercept) and
/// response vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<F> {
    design: Vec<F>,
    response: Vec<F>,
    rows: usize,
    cols: usize,
}

impl<F: Scalar> Dataset<F> {
    /// Builds a dataset from full design rows, which must already carry the
    /// intercept in column 0.
    pub fn new(rows: Vec<Vec<F>>, response: Vec<F>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if response.len() != n {
            return Err(Error::DimensionMismatch {
                context: "dataset response length",
                expected: n,
                found: response.len(),
            });
        }
        let p = rows[0].len();
        if p == 0 {
            return Err(Error::InvalidDataset("design has no columns".into()));
        }
        let mut design = Vec::with_capacity(n * p);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != p {
                return Err(Error::DimensionMismatch {
                    context: "design row length",
                    expected: p,
                    found: row.len(),
                });
            }
            if row[0] != F::one() {
                return Err(Error::InvalidDataset(format!(
                    "row {i}: intercept column must be 1, found {}",
                    row[0]
                )));
            }
            design.extend(row);
        }
        Self::from_parts(design, response, n, p)
    }

    /// Builds a dataset from covariate rows; the intercept column is
    /// prepended.
    pub fn from_covariates(covariates: &[Vec<F>], response: Vec<F>) -> Result<Self> {
        let rows = covariates
            .iter()
            .map(|c| std::iter::once(F::one()).chain(c.iter().copied()).collect())
            .collect();
        Self::new(rows, response)
    }

    fn from_parts(design: Vec<F>, response: Vec<F>, rows: usize, cols: usize) -> Result<Self> {
        if design.iter().chain(&response).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset"));
        }
        Ok(Dataset {
            design,
            response,
            rows,
            cols,
        })
    }

    pub fn n(&self) -> usize {
        self.rows
    }

    pub fn p(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.design[i * self.cols..(i + 1) * self.cols]
    }

    pub fn response(&self) -> &[F] {
        &self.response
    }

    pub fn design(&self) -> &[F] {
        &self.design
    }

    /// Rows at `indices`, in that order. Repeats are allowed (bootstrap
    /// resamples).
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut design = Vec::with_capacity(indices.len() * self.cols);
        let mut response = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.rows {
                return Err(Error::param("indices", format!("row {i} out of range")));
            }
            design.extend_from_slice(self.row(i));
            response.push(self.response[i]);
        }
        Ok(Dataset {
            design,
            response,
            rows: indices.len(),
            cols: self.cols,
        })
    }

    /// Same rows with the listed columns removed. The intercept cannot be
    /// removed.
    pub fn drop_columns(&self, drop: &[usize]) -> Result<Self> {
        if drop.contains(&0) {
            return Err(Error::param("columns", "the intercept column cannot be removed"));
        }
        let keep: Vec<usize> = (0..self.cols).filter(|c| !drop.contains(c)).collect();
        let mut design = Vec::with_capacity(self.rows * keep.len());
        for i in 0..self.rows {
            let row = self.row(i);
            design.extend(keep.iter().map(|&c| row[c]));
        }
        Ok(Dataset {
            design,
            response: self.response.clone(),
            rows: self.rows,
            cols: keep.len(),
        })
    }

    /// Same design with a replaced response.
    pub fn with_response(&self, response: Vec<F>) -> Result<Self> {
        if response.len() != self.rows {
            return Err(Error::DimensionMismatch {
                context: "replacement response length",
                expected: self.rows,
                found: response.len(),
            });
        }
        Self::from_parts(self.design.clone(), response, self.rows, self.cols)
    }
}

/// A coefficient vector θ (a fit, a truth, or a hypothesised value).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficients<F>(Vec<F>);

impl<F: Scalar> Coefficients<F> {
    pub fn new(theta: Vec<F>) -> Self {
        Coefficients(theta)
    }

    pub fn zeros(p: usize) -> Self {
        Coefficients(vec![F::zero(); p])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[F] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<F> {
        self.0
    }

    /// `y − xᵀθ`.
    pub fn residual(&self, x: &[F], y: F) -> Result<F> {
        if x.len() != self.0.len() {
            return Err(Error::DimensionMismatch {
                context: "row length vs coefficients",
                expected: self.0.len(),
                found: x.len(),
            });
        }
        let fit = x
            .iter()
            .zip(&self.0)
            .fold(F::zero(), |acc, (&a, &b)| acc + a * b);
        Ok(y - fit)
    }
}

impl<F> Index<usize> for Coefficients<F> {
    type Output = F;
    fn index(&self, i: usize) -> &F {
        &self.0[i]
    }
}

/// A loss ℓ(θ; x, y). Smaller is better; downstream code only sees this trait.
pub trait Loss<F: Scalar>: Sync {
    fn loss(&self, theta: &Coefficients<F>, x: &[F], y: F) -> Result<F>;
}

/// Check (pinball) loss at quantile level τ: `r·(τ − 1{r < 0})` with
/// `r = y − xᵀθ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckLoss<F> {
    tau: F,
}

impl<F: Scalar> CheckLoss<F> {
    pub fn new(tau: F) -> Result<Self> {
        if !(tau > F::zero() && tau < F::one()) {
            return Err(Error::param("tau", format!("{tau} must lie in (0, 1)")));
        }
        Ok(CheckLoss { tau })
    }

    pub fn tau(&self) -> F {
        self.tau
    }

    /// Loss as a function of the residual alone.
    #[inline]
    pub fn at_residual(&self, r: F) -> F {
        if r >= F::zero() {
            r * self.tau
        } else {
            r * (self.tau - F::one())
        }
    }
}

impl<F: Scalar> Loss<F> for CheckLoss<F> {
    fn loss(&self, theta: &Coefficients<F>, x: &[F], y: F) -> Result<F> {
        Ok(self.at_residual(theta.residual(x, y)?))
    }
}

/// Mean loss over the rows of `data`.
pub fn empirical_risk<F: Scalar, L: Loss<F> + ?Sized>(
    loss: &L,
    theta: &Coefficients<F>,
    data: &Dataset<F>,
) -> Result<F> {
    if data.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut total = F::zero();
    for i in 0..data.n() {
        total = total + loss.loss(theta, data.row(i), data.response()[i])?;
    }
    Ok(total / F::from_count(data.n()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn loss(tau: f64) -> CheckLoss<f64> {
        CheckLoss::new(tau).unwrap()
    }

    #[test]
    fn check_loss_worked_values() {
        let l = loss(0.3);
        let theta = Coefficients::new(vec![0.0]);
        assert!((l.loss(&theta, &[1.0], 1.0).unwrap() - 0.3).abs() < 1e-15);
        assert!((l.loss(&theta, &[1.0], -1.0).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(l.loss(&theta, &[1.0], 0.0).unwrap(), 0.0);
    }

    #[test]
    fn tau_boundaries_rejected() {
        assert!(CheckLoss::new(0.0).is_err());
        assert!(CheckLoss::new(1.0).is_err());
        assert!(CheckLoss::new(f64::NAN).is_err());
        assert!(CheckLoss::new(0.5f32).is_ok());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let theta = Coefficients::new(vec![0.0, 1.0]);
        assert!(matches!(
            loss(0.5).loss(&theta, &[1.0], 0.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn empirical_risk_means_row_losses() {
        let data = Dataset::from_covariates(&[vec![], vec![]], vec![1.0, -1.0]).unwrap();
        let r = empirical_risk(&loss(0.3), &Coefficients::new(vec![0.0]), &data).unwrap();
        assert!((r - 0.5).abs() < 1e-15);

        let single = Dataset::from_covariates(&[vec![2.0]], vec![3.0]).unwrap();
        let theta = Coefficients::new(vec![1.0, 1.0]);
        assert_eq!(empirical_risk(&loss(0.7), &theta, &single).unwrap(), 0.0);
    }

    #[test]
    fn empirical_risk_matches_rowwise_oracle() {
        // Independent recomputation from the defining formula.
        let xs = [0.3, -1.2, 2.5, 0.0, 0.9];
        let ys = [1.0, 0.4, -0.2, 3.1, 0.9];
        let theta = [0.25, -0.6];
        let tau = 0.37;
        let data = Dataset::from_covariates(
            &xs.iter().map(|&x| vec![x]).collect::<Vec<_>>(),
            ys.to_vec(),
        )
        .unwrap();
        let mut oracle = 0.0;
        for k in 0..5 {
            let r = ys[k] - (theta[0] + theta[1] * xs[k]);
            let ind = if r < 0.0 { 1.0 } else { 0.0 };
            oracle += r * (tau - ind);
        }
        oracle /= 5.0;
        let got = empirical_risk(&loss(tau), &Coefficients::new(theta.to_vec()), &data).unwrap();
        assert!((got - oracle).abs() < 1e-14);
    }

    #[test]
    fn dataset_rejects_bad_intercept_and_shapes() {
        assert!(Dataset::new(vec![vec![2.0, 1.0]], vec![0.0]).is_err());
        assert!(Dataset::<f64>::new(vec![], vec![]).is_err());
        assert!(Dataset::new(vec![vec![1.0]], vec![0.0, 1.0]).is_err());
        assert!(Dataset::new(vec![vec![1.0, 0.0], vec![1.0]], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn drop_columns_keeps_intercept() {
        let data = Dataset::from_covariates(&[vec![5.0, 6.0]], vec![1.0]).unwrap();
        assert!(data.drop_columns(&[0]).is_err());
        let reduced = data.drop_columns(&[1]).unwrap();
        assert_eq!(reduced.row(0), &[1.0, 6.0]);
    }

    proptest! {
        #[test]
        fn check_loss_is_convex(
            tau in 0.01f64..0.99,
            a in prop::collection::vec(-5.0f64..5.0, 2),
            b in prop::collection::vec(-5.0f64..5.0, 2),
            x in -3.0f64..3.0,
            y in -5.0f64..5.0,
            lam in 0.0f64..=1.0,
        ) {
            let l = loss(tau);
            let mix: Vec<f64> = a.iter().zip(&b).map(|(p, q)| lam * p + (1.0 - lam) * q).collect();
            let row = [1.0, x];
            let lhs = l.loss(&Coefficients::new(mix), &row, y).unwrap();
            let rhs = lam * l.loss(&Coefficients::new(a), &row, y).unwrap()
                + (1.0 - lam) * l.loss(&Coefficients::new(b), &row, y).unwrap();
            prop_assert!(lhs <= rhs + 1e-12);
        }

        #[test]
        fn check_loss_nonnegative_and_zero_iff_residual_zero(tau in 0.01f64..0.99, r in -10.0f64..10.0) {
            let v = loss(tau).at_residual(r);
            prop_assert!(v >= 0.0);
            prop_assert_eq!(v == 0.0, r == 0.0);
        }

        #[test]
        fn median_loss_is_half_absolute_residual(r in -10.0f64..10.0) {
            prop_assert!((loss(0.5).at_residual(r) - 0.5 * r.abs()).abs() < 1e-15);
        }

        #[test]
        fn empirical_risk_permutation_invariant(
            rows in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..12),
            tau in 0.05f64..0.95,
            rot in 0usize..12,
        ) {
            let xs: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.0]).collect();
            let ys: Vec<f64> = rows.iter().map(|r| r.1).collect();
            let data = Dataset::from_covariates(&xs, ys).unwrap();
            let mut idx: Vec<usize> = (0..data.n()).collect();
            idx.rotate_left(rot % data.n());
            idx.reverse();
            let permuted = data.select(&idx).unwrap();
            let theta = Coefficients::new(vec![0.1, -0.3]);
            let a = empirical_risk(&loss(tau), &theta, &data).unwrap();
            let b = empirical_risk(&loss(tau), &theta, &permuted).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
