//! Bootstrap selection of the learning rate ω.
//!
//! The tested coordinates are pinned at their full-data ERM values, which
//! serve as the bootstrap's stand-in truth. Each bootstrap replicate
//! resamples the rows with replacement, splits the resample, and computes
//! the GUe-value of that pinned null. The search returns the largest ω in
//! `[omega_tolerance, omega_cap]` whose bootstrap rejection proportion at
//! level α is at most α, found by bisection on `log ω`.
//!
//! For a fixed replicate, `log G(ω) = ω · log G(1)`, so the risk gaps are
//! computed once and every probe of the search only counts rejections.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::erm::{solve_erm, NullSpec};
use crate::loss::{CheckLoss, Dataset};
use crate::rng::{derive_seed, rng_from_seed, STREAM_BOOTSTRAP, STREAM_SPLIT};
use crate::universal::{check_alpha, gue_value, make_split, DEFAULT_SPLIT_FRACTION};
use crate::{Error, Result, Scalar};

/// Redraws allowed per replicate when a resample is rank-deficient.
pub const MAX_RESAMPLE_ATTEMPTS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig<F> {
    pub alpha: F,
    pub bootstrap_reps: usize,
    pub omega_cap: F,
    pub omega_tolerance: F,
    pub seed: u64,
    /// Training fraction used when splitting each resample.
    pub split_fraction: f64,
}

impl<F: Scalar> CalibrationConfig<F> {
    pub fn new(alpha: F, seed: u64) -> Self {
        CalibrationConfig {
            alpha,
            bootstrap_reps: 100,
            omega_cap: F::lit(10.0),
            omega_tolerance: F::lit(1e-3),
            seed,
            split_fraction: DEFAULT_SPLIT_FRACTION,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.bootstrap_reps < 50 {
            return Err(Error::param(
                "bootstrap_reps",
                format!("{}; need at least 50", self.bootstrap_reps),
            ));
        }
        if !(self.omega_tolerance > F::zero() && self.omega_tolerance < self.omega_cap)
            || !self.omega_cap.is_finite()
        {
            return Err(Error::param(
                "omega_tolerance",
                format!(
                    "need 0 < omega_tolerance ({}) < omega_cap ({})",
                    self.omega_tolerance, self.omega_cap
                ),
            ));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::param(
                "split_fraction",
                format!("{} must lie in (0, 1)", self.split_fraction),
            ));
        }
        Ok(())
    }
}

/// One evaluation of the bootstrap rejection proportion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe<F> {
    pub omega: F,
    pub rejection_rate: F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedRate<F> {
    pub omega: F,
    /// `1 −` bootstrap rejection proportion at `omega`.
    pub achieved_coverage: F,
    pub search_evals: usize,
    /// Set when even `omega_tolerance` over-rejects; `achieved_coverage` is
    /// then below `1 − α`.
    pub under_covered: bool,
    pub probes: Vec<Probe<F>>,
}

/// Log GUe-values at ω = 1 for every bootstrap replicate.
fn bootstrap_unit_logs<F: Scalar>(
    loss: &CheckLoss<F>,
    data: &Dataset<F>,
    pinned: &NullSpec<F>,
    config: &CalibrationConfig<F>,
) -> Result<Vec<F>> {
    let n = data.n();
    (0..config.bootstrap_reps)
        .into_par_iter()
        .map(|b| {
            let rep_seed = derive_seed(config.seed, b as u64);
            for attempt in 0..MAX_RESAMPLE_ATTEMPTS {
                let draw_seed = derive_seed(derive_seed(rep_seed, STREAM_BOOTSTRAP), attempt as u64);
                let mut rng = rng_from_seed(draw_seed);
                let rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                let resample = data.select(&rows)?;
                let split = make_split(
                    n,
                    config.split_fraction,
                    derive_seed(draw_seed, STREAM_SPLIT),
                )?;
                match gue_value(loss, &resample, &split, pinned, F::one()) {
                    Ok(g) => return Ok(g.log_gue),
                    Err(Error::RankDeficient { .. } | Error::TooFewRows { .. }) => continue,
                    Err(e) => return Err(e),
                }
            }
            Err(Error::DegenerateResample {
                replicate: b,
                attempts: MAX_RESAMPLE_ATTEMPTS,
            })
        })
        .collect()
}

/// Selects ω for testing `null` on `data` under `loss`.
pub fn calibrate_omega<F: Scalar>(
    loss: &CheckLoss<F>,
    data: &Dataset<F>,
    null: &NullSpec<F>,
    config: &CalibrationConfig<F>,
) -> Result<CalibratedRate<F>> {
    config.validate()?;
    null.validate(data.p())?;
    let full = solve_erm(loss, data)?;
    let pinned = null.pinned_at(&full.theta_hat)?;
    let unit_logs = bootstrap_unit_logs(loss, data, &pinned, config)?;

    let threshold = -config.alpha.ln();
    let reps = F::from_count(unit_logs.len());
    let mut probes: Vec<Probe<F>> = Vec::new();
    let mut probe = |omega: F| -> F {
        let rejections = unit_logs
            .iter()
            .filter(|&&l| omega * l >= threshold)
            .count();
        let rate = F::from_count(rejections) / reps;
        probes.push(Probe {
            omega,
            rejection_rate: rate,
        });
        rate
    };

    let cap_rate = probe(config.omega_cap);
    let (omega, rate, under_covered) = if cap_rate <= config.alpha {
        (config.omega_cap, cap_rate, false)
    } else {
        let floor_rate = probe(config.omega_tolerance);
        if floor_rate > config.alpha {
            (config.omega_tolerance, floor_rate, true)
        } else {
            let (mut lo, mut lo_rate, mut hi) = (config.omega_tolerance, floor_rate, config.omega_cap);
            while hi - lo > config.omega_tolerance {
                let mid = ((lo.ln() + hi.ln()) / F::lit(2.0)).exp();
                if !(mid > lo && mid < hi) {
                    break;
                }
                let r = probe(mid);
                if r <= config.alpha {
                    lo = mid;
                    lo_rate = r;
                } else {
                    hi = mid;
                }
            }
            (lo, lo_rate, false)
        }
    };

    check_monotone(&probes)?;
    Ok(CalibratedRate {
        omega,
        achieved_coverage: F::one() - rate,
        search_evals: probes.len(),
        under_covered,
        probes,
    })
}

/// Rejection proportion must be non-decreasing in ω across the probes.
fn check_monotone<F: Scalar>(probes: &[Probe<F>]) -> Result<()> {
    let mut sorted: Vec<&Probe<F>> = probes.iter().collect();
    sorted.sort_by(|a, b| a.omega.partial_cmp(&b.omega).expect("finite probes"));
    if sorted
        .windows(2)
        .any(|w| w[1].rejection_rate < w[0].rejection_rate)
    {
        return Err(Error::NonMonotoneProbes);
    }
    Ok(())
}
