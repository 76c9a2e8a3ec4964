//! Generalized universal e-values (GUe-values) for hypotheses about risk
//! minimizers.
//!
//! The crate is organised bottom-up:
//!
//! - [`loss`]: the check (pinball) loss, datasets and empirical risk.
//! - [`erm`]: exact empirical risk minimisation for the check loss, i.e.
//!   quantile regression, solved as a linear program by a bounded-variable
//!   simplex on the dual.
//! - [`universal`]: sample splitting, the split-sample GUe-value for point
//!   and composite nulls, and a Monte Carlo check of the strong central
//!   condition.
//! - [`calibration`]: bootstrap selection of the learning rate.
//! - [`multiple`]: the e-BH procedure and the averaging merge of
//!   e-BH-adjusted e-values.
//! - [`sim`]: the triangle/trapezoid simulation families and the Monte Carlo
//!   harness that runs the full per-quantile pipeline.
//!
//! All numerical code is generic over [`Scalar`]; the `*64` aliases below fix
//! the scalar to `f64`, which is what the simulation harness uses.

pub mod calibration;
pub mod erm;
mod error;
mod linalg;
pub mod loss;
pub mod multiple;
pub mod rng;
mod scalar;
pub mod sim;
pub mod universal;


pub use calibration::{calibrate_omega, CalibratedRate, CalibrationConfig, Probe};
pub use erm::{solve_erm, solve_erm_constrained, ErmSolution, ErmStatus, NullSpec};
pub use error::{Error, Result};
pub use loss::{empirical_risk, CheckLoss, Coefficients, Dataset, Loss};
pub use multiple::{ebh, global_test, merge, EValueSet, EbhResult, MergedEValue};
pub use scalar::Scalar;
pub use universal::{
    central_condition_diagnostic, gue_value, gue_value_point, make_split, reject, GueResult,
    MomentEstimate, SplitPlan,
};

pub type Dataset64 = Dataset<f64>;
pub type CheckLoss64 = CheckLoss<f64>;
pub type Coefficients64 = Coefficients<f64>;
pub type NullSpec64 = NullSpec<f64>;
pub type ErmSolution64 = ErmSolution<f64>;
pub type CalibrationConfig64 = CalibrationConfig<f64>;
pub type CalibratedRate64 = CalibratedRate<f64>;
pub type GueResult64 = GueResult<f64>;
pub type EValueSet64 = EValueSet<f64>;
pub type EbhResult64 = EbhResult<f64>;
pub type MergedEValue64 = MergedEValue<f64>;

pub type Dataset32 = Dataset<f32>;
pub type CheckLoss32 = CheckLoss<f32>;
pub type EValueSet32 = EValueSet<f32>;
