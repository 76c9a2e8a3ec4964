//! Simulation families and the Monte Carlo harness.
//!
//! Both families draw `X ~ Uniform(0, 1)` and then
//!
//! - triangle (signal Δ): `Y | X ~ Uniform(XΔ/2, 1 − XΔ/2)`, conditional
//!   τ-quantile `τ + XΔ(½ − τ)`;
//! - trapezoid (signal Γ): `Y | X ~ Uniform(0, 1 + Γ(X − 1))`, conditional
//!   τ-quantile `τ(1 − Γ) + τΓX`.
//!
//! A replication draws one dataset and one split shared by every τ in the
//! grid, calibrates ω and computes the slope GUe-value per τ, applies e-BH
//! across the grid, merges, and runs the global test.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{calibrate_omega, CalibrationConfig};
use crate::erm::NullSpec;
use crate::loss::{CheckLoss, Dataset};
use crate::multiple::{ebh, global_test, merge, EValueSet, EbhResult, MergedEValue};
use crate::rng::{derive_seed, rng_from_seed, STREAM_CALIBRATION, STREAM_DATA, STREAM_SPLIT};
use crate::universal::{gue_value, make_split, GueResult};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Triangle,
    Trapezoid,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Triangle => write!(f, "triangle"),
            Family::Trapezoid => write!(f, "trapezoid"),
        }
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "triangle" => Ok(Family::Triangle),
            "trapezoid" => Ok(Family::Trapezoid),
            other => Err(Error::param(
                "family",
                format!("unknown family `{other}` (expected triangle or trapezoid)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyConfig {
    pub family: Family,
    /// Δ for the triangle family, Γ for the trapezoid family.
    pub signal: f64,
}

impl FamilyConfig {
    pub fn new(family: Family, signal: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&signal) {
            return Err(Error::param("signal", format!("{signal} must lie in [0, 1]")));
        }
        Ok(FamilyConfig { family, signal })
    }

    /// Conditional support `(lower, upper)` of `Y` given `X = x`.
    pub fn support(&self, x: f64) -> (f64, f64) {
        match self.family {
            Family::Triangle => {
                let half = x * self.signal / 2.0;
                (half, 1.0 - half)
            }
            Family::Trapezoid => (0.0, 1.0 + self.signal * (x - 1.0)),
        }
    }

    /// Draws one `(x, y)` pair.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let x: f64 = rng.gen();
        let u: f64 = rng.gen();
        let (lo, hi) = self.support(x);
        (x, lo + (hi - lo) * u)
    }
}

/// `n` i.i.d. draws as a dataset with design `[1, X]`.
pub fn sample_family(config: &FamilyConfig, n: usize, seed: u64) -> Result<Dataset<f64>> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut rng = rng_from_seed(seed);
    let (xs, ys): (Vec<Vec<f64>>, Vec<f64>) = (0..n)
        .map(|_| {
            let (x, y) = config.draw(&mut rng);
            (vec![x], y)
        })
        .unzip();
    Dataset::from_covariates(&xs, ys)
}

/// Slope of the conditional τ-quantile line.
pub fn true_slope(config: &FamilyConfig, tau: f64) -> Result<f64> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::param("tau", format!("{tau} must lie in (0, 1)")));
    }
    Ok(match config.family {
        Family::Triangle => config.signal * (0.5 - tau),
        Family::Trapezoid => tau * config.signal,
    })
}

/// `{step, 2·step, …}` strictly inside (0, 1), each computed as `k / count`
/// so grid points such as ½ are exact.
pub fn tau_grid(count: usize) -> Vec<f64> {
    (1..=count).map(|k| k as f64 / (count + 1) as f64).collect()
}

/// The 49-point grid {0.02, 0.04, …, 0.98}.
pub fn default_taus() -> Vec<f64> {
    tau_grid(49)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub taus: Vec<f64>,
    pub alpha: f64,
    pub reps: usize,
    pub seed: u64,
    pub split_fraction: f64,
    /// Search settings. Its `seed` is ignored: each replication derives its
    /// own calibration seed from `seed`.
    pub calibration: CalibrationConfig<f64>,
}

impl SimConfig {
    pub fn new(n: usize, alpha: f64, reps: usize, seed: u64) -> Self {
        SimConfig {
            n,
            taus: default_taus(),
            alpha,
            reps,
            seed,
            split_fraction: crate::universal::DEFAULT_SPLIT_FRACTION,
            calibration: CalibrationConfig::new(alpha, seed),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::param("reps", "need at least one replication"));
        }
        if self.taus.is_empty() {
            return Err(Error::param("taus", "need at least one quantile level"));
        }
        if let Some((i, t)) = self
            .taus
            .iter()
            .enumerate()
            .find(|(_, &t)| !(t > 0.0 && t < 1.0))
        {
            return Err(Error::param("taus", format!("taus[{i}] = {t} must lie in (0, 1)")));
        }
        if self.taus.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("taus", "must be strictly increasing"));
        }
        crate::universal::check_alpha(self.alpha)?;
        // Surfaces n / fraction problems before any work is done.
        make_split(self.n, self.split_fraction, 0)?;
        let mut cal = self.calibration.clone();
        cal.alpha = self.alpha;
        cal.validate()
    }
}

/// Everything one replication produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub rep_index: usize,
    pub gue: Vec<GueResult<f64>>,
    pub omegas: Vec<f64>,
    pub ebh: EbhResult<f64>,
    pub merged: MergedEValue<f64>,
    pub global_reject: bool,
    /// Discoveries whose null (`true_slope = 0`) holds.
    pub false_discoveries: usize,
}

impl Replication {
    pub fn false_discovery_proportion(&self) -> f64 {
        self.false_discoveries as f64 / self.ebh.discoveries.len().max(1) as f64
    }
}

pub fn run_replication(
    family: &FamilyConfig,
    sim: &SimConfig,
    rep_index: usize,
) -> Result<Replication> {
    let rep_seed = derive_seed(sim.seed, rep_index as u64);
    let data = sample_family(family, sim.n, derive_seed(rep_seed, STREAM_DATA))?;
    let split = make_split(sim.n, sim.split_fraction, derive_seed(rep_seed, STREAM_SPLIT))?;
    let null = NullSpec::zeroed(&[1])?;
    let mut calibration = sim.calibration.clone();
    calibration.alpha = sim.alpha;
    calibration.split_fraction = sim.split_fraction;
    calibration.seed = derive_seed(rep_seed, STREAM_CALIBRATION);

    let mut gue = Vec::with_capacity(sim.taus.len());
    let mut omegas = Vec::with_capacity(sim.taus.len());
    for &tau in &sim.taus {
        let wrap = |e: Error| Error::Replication {
            rep: rep_index,
            tau,
            source: Box::new(e),
        };
        let loss = CheckLoss::new(tau).map_err(wrap)?;
        let rate = calibrate_omega(&loss, &data, &null, &calibration).map_err(wrap)?;
        let g = gue_value(&loss, &data, &split, &null, rate.omega).map_err(wrap)?;
        omegas.push(rate.omega);
        gue.push(g);
    }

    let logs: Vec<f64> = gue.iter().map(|g| g.log_gue).collect();
    let set = EValueSet::from_log_values(&logs, (0..logs.len()).collect())?;
    let ebh = ebh(&set, sim.alpha)?;
    let merged = merge(&set);
    let global_reject = global_test(&merged, sim.alpha)?;
    let mut false_discoveries = 0;
    for &id in &ebh.discoveries {
        if true_slope(family, sim.taus[id])? == 0.0 {
            false_discoveries += 1;
        }
    }
    Ok(Replication {
        rep_index,
        gue,
        omegas,
        ebh,
        merged,
        global_reject,
        false_discoveries,
    })
}

/// Mean and standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

impl MeanSe {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let se = if values.len() > 1 {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        MeanSe { mean, se }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub family: FamilyConfig,
    pub n: usize,
    pub alpha: f64,
    pub reps: usize,
    /// Whether some τ in the grid has a non-zero true slope.
    pub has_false_null: bool,
    pub rejection_rate: f64,
    /// `1 − rejection_rate`.
    pub type2_rate: f64,
    /// Mean false discovery proportion of the per-τ e-BH discoveries.
    pub empirical_fdr: f64,
    pub mean_omega_per_tau: Vec<MeanSe>,
}

/// Runs `sim.reps` replications (in parallel) and aggregates them in
/// replication order.
pub fn run_experiment(family: &FamilyConfig, sim: &SimConfig) -> Result<SimMetrics> {
    sim.validate()?;
    let outcomes: Vec<Result<Replication>> = (0..sim.reps)
        .into_par_iter()
        .map(|r| run_replication(family, sim, r))
        .collect();
    let failed = outcomes.iter().filter(|o| o.is_err()).count();
    let mut reps = Vec::with_capacity(sim.reps);
    let mut first = None;
    for o in outcomes {
        match o {
            Ok(r) => reps.push(r),
            Err(e) => {
                first.get_or_insert(e);
            }
        }
    }
    if let Some(first) = first {
        return Err(Error::Experiment {
            failed,
            total: sim.reps,
            first: Box::new(first),
        });
    }
    summarize(family, sim, &reps)
}

pub fn summarize(family: &FamilyConfig, sim: &SimConfig, reps: &[Replication]) -> Result<SimMetrics> {
    let count = reps.len() as f64;
    let rejections = reps.iter().filter(|r| r.global_reject).count() as f64;
    let rejection_rate = rejections / count;
    let empirical_fdr = reps
        .iter()
        .map(Replication::false_discovery_proportion)
        .sum::<f64>()
        / count;
    let mean_omega_per_tau = (0..sim.taus.len())
        .map(|t| MeanSe::of(&reps.iter().map(|r| r.omegas[t]).collect::<Vec<_>>()))
        .collect();
    let mut has_false_null = false;
    for &tau in &sim.taus {
        has_false_null |= true_slope(family, tau)? != 0.0;
    }
    Ok(SimMetrics {
        family: *family,
        n: sim.n,
        alpha: sim.alpha,
        reps: reps.len(),
        has_false_null,
        rejection_rate,
        type2_rate: 1.0 - rejection_rate,
        empirical_fdr,
        mean_omega_per_tau,
    })
}
