//! Simulation config files (TOML).
//!
//! ```toml
//! seed = 2024
//! alpha = 0.1
//! reps = 100
//! tau_count = 49          # or: taus = [0.25, 0.5, 0.75]
//!
//! [calibration]
//! bootstrap_reps = 100
//! omega_cap = 10.0
//!
//! [[experiment]]
//! family = "triangle"
//! signals = [0.0, 0.1]
//! n = [50, 250]
//! ```

use gue::sim::{tau_grid, Family, FamilyConfig, SimConfig};
use gue::CalibrationConfig;
use serde::{Deserialize, Serialize};

use crate::failure::Failure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default = "default_split_fraction")]
    pub split_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taus: Option<Vec<f64>>,
    #[serde(default)]
    pub calibration: CalibrationSection,
    #[serde(rename = "experiment")]
    pub experiments: Vec<Experiment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSection {
    #[serde(default = "default_bootstrap_reps")]
    pub bootstrap_reps: usize,
    #[serde(default = "default_omega_cap")]
    pub omega_cap: f64,
    #[serde(default = "default_omega_tolerance")]
    pub omega_tolerance: f64,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        let base = CalibrationConfig::<f64>::new(0.1, 0);
        CalibrationSection {
            bootstrap_reps: base.bootstrap_reps,
            omega_cap: base.omega_cap,
            omega_tolerance: base.omega_tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub family: Family,
    pub signals: Vec<f64>,
    pub n: Vec<usize>,
}

fn default_alpha() -> f64 {
    0.1
}
fn default_reps() -> usize {
    100
}
fn default_split_fraction() -> f64 {
    gue::universal::DEFAULT_SPLIT_FRACTION
}
fn default_bootstrap_reps() -> usize {
    CalibrationSection::default().bootstrap_reps
}
fn default_omega_cap() -> f64 {
    CalibrationSection::default().omega_cap
}
fn default_omega_tolerance() -> f64 {
    CalibrationSection::default().omega_tolerance
}

/// One (family, signal, n) cell of the sweep.
pub struct Cell {
    pub family: FamilyConfig,
    pub sim: SimConfig,
}

fn invalid(field: impl std::fmt::Display, reason: impl std::fmt::Display) -> Failure {
    Failure::usage(format!("config field `{field}`: {reason}"))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, Failure> {
        toml::from_str(text).map_err(|e| Failure::usage(format!("config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Replaces `tau_count` by the explicit grid so the resolved file is self-contained.
    pub fn resolve_taus(&mut self) -> Result<(), Failure> {
        match (&self.taus, self.tau_count) {
            (Some(_), Some(_)) => {
                return Err(invalid("taus", "give either `taus` or `tau_count`, not both"))
            }
            (Some(_), None) => {}
            (None, count) => {
                let count = count.unwrap_or(49);
                if count == 0 {
                    return Err(invalid("tau_count", "must be at least 1"));
                }
                self.taus = Some(tau_grid(count));
            }
        }
        self.tau_count = None;
        Ok(())
    }

    pub fn validate(&self) -> Result<(), Failure> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid("alpha", format!("{} must lie in (0, 1)", self.alpha)));
        }
        if self.reps == 0 {
            return Err(invalid("reps", "must be at least 1"));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(invalid(
                "split_fraction",
                format!("{} must lie in (0, 1)", self.split_fraction),
            ));
        }
        if let Some(taus) = &self.taus {
            if taus.is_empty() {
                return Err(invalid("taus", "must not be empty"));
            }
            for (i, t) in taus.iter().enumerate() {
                if !(*t > 0.0 && *t < 1.0) {
                    return Err(invalid(format!("taus[{i}]"), format!("{t} must lie in (0, 1)")));
                }
            }
            if taus.windows(2).any(|w| w[1] <= w[0]) {
                return Err(invalid("taus", "must be strictly increasing"));
            }
        }
        let c = &self.calibration;
        if c.bootstrap_reps < 50 {
            return Err(invalid("calibration.bootstrap_reps", "must be at least 50"));
        }
        if !(c.omega_cap.is_finite() && c.omega_cap > 0.0) {
            return Err(invalid("calibration.omega_cap", "must be positive and finite"));
        }
        if !(c.omega_tolerance > 0.0 && c.omega_tolerance < c.omega_cap) {
            return Err(invalid(
                "calibration.omega_tolerance",
                "must lie strictly between 0 and omega_cap",
            ));
        }
        if self.experiments.is_empty() {
            return Err(invalid("experiment", "need at least one [[experiment]] table"));
        }
        for (e, exp) in self.experiments.iter().enumerate() {
            if exp.signals.is_empty() {
                return Err(invalid(format!("experiment[{e}].signals"), "must not be empty"));
            }
            for (i, s) in exp.signals.iter().enumerate() {
                if !(0.0..=1.0).contains(s) {
                    return Err(invalid(
                        format!("experiment[{e}].signals[{i}]"),
                        format!("{s} must lie in [0, 1]"),
                    ));
                }
            }
            if exp.n.is_empty() {
                return Err(invalid(format!("experiment[{e}].n"), "must not be empty"));
            }
            for (i, &n) in exp.n.iter().enumerate() {
                if n < 8 {
                    return Err(invalid(
                        format!("experiment[{e}].n[{i}]"),
                        format!("{n}; need at least 8 rows"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Expands experiments into cells, in file order then signal then n.
    /// Every cell uses the top-level seed.
    pub fn cells(&self) -> Result<Vec<Cell>, Failure> {
        let taus = self.taus.clone().unwrap_or_else(|| tau_grid(49));
        let mut cells = Vec::new();
        for (e, exp) in self.experiments.iter().enumerate() {
            for (i, &signal) in exp.signals.iter().enumerate() {
                let family = FamilyConfig::new(exp.family, signal)
                    .map_err(|err| invalid(format!("experiment[{e}].signals[{i}]"), err))?;
                for &n in &exp.n {
                    let mut calibration = CalibrationConfig::new(self.alpha, self.seed);
                    calibration.bootstrap_reps = self.calibration.bootstrap_reps;
                    calibration.omega_cap = self.calibration.omega_cap;
                    calibration.omega_tolerance = self.calibration.omega_tolerance;
                    calibration.split_fraction = self.split_fraction;
                    let sim = SimConfig {
                        n,
                        taus: taus.clone(),
                        alpha: self.alpha,
                        reps: self.reps,
                        seed: self.seed,
                        split_fraction: self.split_fraction,
                        calibration,
                    };
                    sim.validate()
                        .map_err(|err| invalid(format!("experiment[{e}]"), err))?;
                    cells.push(Cell { family, sim });
                }
            }
        }
        Ok(cells)
    }
}
