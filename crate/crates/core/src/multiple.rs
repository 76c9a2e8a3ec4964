//! e-BH and the averaging merge of e-BH-adjusted e-values.
//!
//! With `e_(1) ≥ … ≥ e_(M)` the descending order statistics, the adjusted
//! values are `e*_m = m · e_(m) / M`. e-BH at level α discovers the top
//! `k = max{m : e*_m ≥ 1/α}` hypotheses; the merged e-value is the mean of
//! the adjusted values, `Ḡ_M = (1/M) Σ_m e*_m`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::universal::check_alpha;
use crate::{Error, Result, Scalar};

/// Raw e-values with hypothesis identifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EValueSet<F> {
    values: Vec<F>,
    ids: Vec<usize>,
}

impl<F: Scalar> EValueSet<F> {
    /// Identifiers default to positions `0..M`.
    pub fn new(values: Vec<F>) -> Result<Self> {
        let ids = (0..values.len()).collect();
        Self::with_ids(values, ids)
    }

    pub fn with_ids(values: Vec<F>, ids: Vec<usize>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::param("evalues", "at least one e-value is required"));
        }
        if ids.len() != values.len() {
            return Err(Error::DimensionMismatch {
                context: "e-value ids",
                expected: values.len(),
                found: ids.len(),
            });
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= F::zero()))
        {
            return Err(Error::param(
                "evalues",
                format!("value {v} at position {i} is not a finite non-negative number"),
            ));
        }
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::param("ids", "hypothesis ids must be distinct"));
        }
        Ok(EValueSet { values, ids })
    }

    /// From log-scale e-values, exponentiating with saturation at the
    /// largest finite value.
    pub fn from_log_values(log_values: &[F], ids: Vec<usize>) -> Result<Self> {
        if log_values.iter().any(|v| v.is_nan()) {
            return Err(Error::NonFinite("log e-values"));
        }
        Self::with_ids(log_values.iter().map(|&l| F::saturating_exp(l)).collect(), ids)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    /// Positions sorted by value descending; ties keep original order.
    fn descending_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.values.len()).collect();
        order.sort_by(|&a, &b| {
            self.values[b]
                .partial_cmp(&self.values[a])
                .unwrap_or(Ordering::Equal)
        });
        order
    }

    fn adjusted(&self, order: &[usize]) -> Vec<F> {
        let m_total = F::from_count(self.values.len());
        order
            .iter()
            .enumerate()
            .map(|(rank, &pos)| {
                let m = F::from_count(rank + 1);
                let e = self.values[pos];
                let scaled = m * e;
                if scaled.is_finite() {
                    scaled / m_total
                } else {
                    e / m_total * m
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EbhResult<F> {
    /// Positions into the input, by descending value.
    pub order: Vec<usize>,
    /// `e*_m` in the same order.
    pub transformed: Vec<F>,
    /// Ids of the `k` top-ranked hypotheses.
    pub discoveries: Vec<usize>,
    pub alpha: F,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergedEValue<F> {
    pub value: F,
}

pub fn ebh<F: Scalar>(evalues: &EValueSet<F>, alpha: F) -> Result<EbhResult<F>> {
    check_alpha(alpha)?;
    let order = evalues.descending_order();
    let transformed = evalues.adjusted(&order);
    let threshold = F::one() / alpha;
    let k = transformed
        .iter()
        .rposition(|&t| t >= threshold)
        .map_or(0, |i| i + 1);
    let discoveries = order[..k].iter().map(|&pos| evalues.ids[pos]).collect();
    Ok(EbhResult {
        order,
        transformed,
        discoveries,
        alpha,
    })
}

pub fn merge<F: Scalar>(evalues: &EValueSet<F>) -> MergedEValue<F> {
    let transformed = evalues.adjusted(&evalues.descending_order());
    let m_total = F::from_count(transformed.len());
    let sum: F = transformed.iter().copied().sum();
    let value = if sum.is_finite() {
        sum / m_total
    } else {
        transformed.iter().map(|&t| t / m_total).sum()
    };
    MergedEValue { value }
}

/// Rejects the intersection of all nulls iff `Ḡ_M ≥ 1/α`.
pub fn global_test<F: Scalar>(merged: &MergedEValue<F>, alpha: F) -> Result<bool> {
    check_alpha(alpha)?;
    Ok(merged.value >= F::one() / alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_example() {
        let set = EValueSet::new(vec![30.0, 6.0, 1.0]).unwrap();
        let r = ebh(&set, 0.1).unwrap();
        assert_eq!(r.transformed, vec![10.0, 4.0, 1.0]);
        assert_eq!(r.discoveries, vec![0]);
        assert_eq!(merge(&set).value, 5.0);
    }

    #[test]
    fn merge_small_cases() {
        assert_eq!(merge(&EValueSet::new(vec![5.0]).unwrap()).value, 5.0);
        assert_eq!(merge(&EValueSet::new(vec![2.0, 4.0]).unwrap()).value, 2.0);
    }

    #[test]
    fn single_value_reduces_to_single_test() {
        for &(v, expect) in &[(9.99, false), (10.0, true), (12.0, true)] {
            let r = ebh(&EValueSet::new(vec![v]).unwrap(), 0.1).unwrap();
            assert_eq!(r.transformed, vec![v]);
            assert_eq!(!r.discoveries.is_empty(), expect);
        }
    }

    #[test]
    fn zeros_never_discover() {
        let set = EValueSet::new(vec![0.0; 6]).unwrap();
        for &a in &[0.01, 0.5, 0.99] {
            assert!(ebh(&set, a).unwrap().discoveries.is_empty());
            assert!(!global_test(&merge(&set), a).unwrap());
        }
    }

    #[test]
    fn global_test_boundary() {
        assert!(!global_test(&MergedEValue { value: 5.0 }, 0.1).unwrap());
        assert!(global_test(&MergedEValue { value: 10.0 }, 0.1).unwrap());
        assert!(global_test(&MergedEValue { value: 10.0 }, 0.0).is_err());
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(EValueSet::<f64>::new(vec![]).is_err());
        assert!(EValueSet::new(vec![-1.0]).is_err());
        assert!(EValueSet::new(vec![f64::INFINITY]).is_err());
        assert!(EValueSet::with_ids(vec![1.0, 2.0], vec![3, 3]).is_err());
    }

    #[test]
    fn ties_break_by_original_position() {
        let set = EValueSet::with_ids(vec![2.0, 5.0, 2.0, 5.0], vec![10, 11, 12, 13]).unwrap();
        let r = ebh(&set, 0.5).unwrap();
        assert_eq!(r.order, vec![1, 3, 0, 2]);
    }

    #[test]
    fn saturated_values_still_reject() {
        let set = EValueSet::from_log_values(&[1e6, 0.0, -3.0], vec![0, 1, 2]).unwrap();
        assert_eq!(set.values()[0], f64::MAX);
        let r = ebh(&set, 0.05).unwrap();
        assert_eq!(r.discoveries, vec![0]);
        let merged = merge(&set);
        assert!(merged.value.is_finite());
        assert!(global_test(&merged, 0.05).unwrap());
    }

    fn evalue_sets() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..50.0, 0.0f64..2.0], 1..30)
    }

    proptest! {
        #[test]
        fn permutation_invariance(values in evalue_sets(), shift in 0usize..30, alpha in 0.01f64..0.5) {
            let ids: Vec<usize> = (0..values.len()).collect();
            let a = EValueSet::with_ids(values.clone(), ids.clone()).unwrap();
            let mut pv = values.clone();
            let mut pi = ids;
            let s = shift % values.len();
            pv.rotate_left(s);
            pi.rotate_left(s);
            let b = EValueSet::with_ids(pv, pi).unwrap();
            let (ra, rb) = (ebh(&a, alpha).unwrap(), ebh(&b, alpha).unwrap());
            prop_assert_eq!(&ra.transformed, &rb.transformed);
            let mut da = ra.discoveries.clone();
            let mut db = rb.discoveries.clone();
            da.sort_unstable();
            db.sort_unstable();
            prop_assert_eq!(da, db);
            prop_assert_eq!(merge(&a).value, merge(&b).value);
        }

        #[test]
        fn discoveries_grow_with_alpha(values in evalue_sets(), a1 in 0.01f64..0.9, a2 in 0.01f64..0.9) {
            let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
            let set = EValueSet::new(values).unwrap();
            let small = ebh(&set, lo).unwrap().discoveries;
            let large = ebh(&set, hi).unwrap().discoveries;
            prop_assert!(small.iter().all(|d| large.contains(d)));
        }

        #[test]
        fn merged_bounds(values in evalue_sets()) {
            let set = EValueSet::new(values).unwrap();
            let r = ebh(&set, 0.1).unwrap();
            let merged = merge(&set).value;
            let m_total = set.len() as f64;
            let max_adj = r.transformed.iter().cloned().fold(0.0, f64::max);
            prop_assert!(merged <= max_adj * (1.0 + 1e-15));
            prop_assert!(max_adj <= m_total * merged * (1.0 + 1e-15));
            let sorted: Vec<f64> = r.order.iter().map(|&i| set.values()[i]).collect();
            for (k, &e) in sorted.iter().enumerate() {
                prop_assert!(merged >= (k as f64 + 1.0) / (m_total * m_total) * e * (1.0 - 1e-15));
            }
        }
    }
}
