//! Split-sample generalized universal e-values.
//!
//! For a split `S = S₁ ⊔ S₂`, learning rate `ω > 0` and a null set `Θ₀`,
//!
//! ```text
//!   log G(Θ₀) = −ω · |S₂| · ( R̂_{S₂}(θ̂_{S₁}) − inf_{θ∈Θ₀} R̂_{S₂}(θ) ).
//! ```
//!
//! G is increasing in `R̂_{S₂}(θ)`, so the infimum over Θ₀ is attained at the
//! Θ₀-constrained risk minimiser on `S₂`, which [`solve_erm_constrained`]
//! computes exactly. Values stay on the log scale here; callers exponentiate
//! with [`GueResult::evalue`] when they need raw e-values.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::erm::{solve_erm, solve_erm_constrained, NullSpec};
use crate::loss::{empirical_risk, CheckLoss, Coefficients, Dataset, Loss};
use crate::rng::rng_from_seed;
use crate::{Error, Result, Scalar};

/// Default training-set fraction.
pub const DEFAULT_SPLIT_FRACTION: f64 = 0.5;

/// Partition of `0..n` into a training part `s1` and a validation part `s2`,
/// each listed in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub s1_indices: Vec<usize>,
    pub s2_indices: Vec<usize>,
    pub fraction: f64,
    pub seed: u64,
}

impl SplitPlan {
    pub fn n(&self) -> usize {
        self.s1_indices.len() + self.s2_indices.len()
    }
}

/// Uniformly random split with `|S₁| = round(fraction · n)`, a pure function
/// of the arguments.
pub fn make_split(n: usize, fraction: f64, seed: u64) -> Result<SplitPlan> {
    if n < 4 {
        return Err(Error::param("n", format!("{n} rows; a split needs at least 4")));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::param("fraction", format!("{fraction} must lie in (0, 1)")));
    }
    let k = (fraction * n as f64).round() as usize;
    if k == 0 || k == n {
        return Err(Error::param(
            "fraction",
            format!("{fraction} of {n} rows leaves one side of the split empty"),
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng_from_seed(seed);
    order.shuffle(&mut rng);
    let mut s1 = order[..k].to_vec();
    let mut s2 = order[k..].to_vec();
    s1.sort_unstable();
    s2.sort_unstable();
    Ok(SplitPlan {
        s1_indices: s1,
        s2_indices: s2,
        fraction,
        seed,
    })
}

/// One GUe-value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GueResult<F> {
    /// Natural log of G.
    pub log_gue: F,
    pub omega: F,
    pub theta_hat_s1: Coefficients<F>,
    /// `inf_{θ∈Θ₀} R̂_{S₂}(θ)` (or `R̂_{S₂}(θ)` for a point null).
    pub null_risk_s2: F,
    /// `R̂_{S₂}(θ̂_{S₁})`.
    pub trained_risk_s2: F,
    pub s2_len: usize,
    pub null: NullSpec<F>,
}

impl<F: Scalar> GueResult<F> {
    /// Log GUe-value the same split would give at another learning rate.
    pub fn log_gue_at(&self, omega: F) -> F {
        -omega * F::from_count(self.s2_len) * (self.trained_risk_s2 - self.null_risk_s2)
    }

    /// `G`, saturating at the largest finite value.
    pub fn evalue(&self) -> F {
        F::saturating_exp(self.log_gue)
    }
}

fn check_omega<F: Scalar>(omega: F) -> Result<()> {
    if !(omega > F::zero() && omega.is_finite()) {
        return Err(Error::param("omega", format!("{omega} must be positive and finite")));
    }
    Ok(())
}

fn split_parts<F: Scalar>(data: &Dataset<F>, split: &SplitPlan) -> Result<(Dataset<F>, Dataset<F>)> {
    if split.n() != data.n() {
        return Err(Error::DimensionMismatch {
            context: "split size vs dataset rows",
            expected: data.n(),
            found: split.n(),
        });
    }
    Ok((data.select(&split.s1_indices)?, data.select(&split.s2_indices)?))
}

fn finish<F: Scalar>(
    omega: F,
    theta_hat_s1: Coefficients<F>,
    trained: F,
    null_risk: F,
    s2_len: usize,
    null: NullSpec<F>,
) -> Result<GueResult<F>> {
    if !trained.is_finite() || !null_risk.is_finite() {
        return Err(Error::NonFinite("validation risk"));
    }
    let mut g = GueResult {
        log_gue: F::zero(),
        omega,
        theta_hat_s1,
        null_risk_s2: null_risk,
        trained_risk_s2: trained,
        s2_len,
        null,
    };
    g.log_gue = g.log_gue_at(omega);
    Ok(g)
}

/// GUe-value for the composite null `null`.
pub fn gue_value<F: Scalar>(
    loss: &CheckLoss<F>,
    data: &Dataset<F>,
    split: &SplitPlan,
    null: &NullSpec<F>,
    omega: F,
) -> Result<GueResult<F>> {
    check_omega(omega)?;
    null.validate(data.p())?;
    let (s1, s2) = split_parts(data, split)?;
    let trained_fit = solve_erm(loss, &s1)?;
    let trained = empirical_risk(loss, &trained_fit.theta_hat, &s2)?;
    let null_risk = solve_erm_constrained(loss, &s2, null)?.achieved_risk;
    finish(omega, trained_fit.theta_hat, trained, null_risk, s2.n(), null.clone())
}

/// GUe-value for the point null `θ* = theta`.
pub fn gue_value_point<F: Scalar>(
    loss: &CheckLoss<F>,
    data: &Dataset<F>,
    split: &SplitPlan,
    theta: &Coefficients<F>,
    omega: F,
) -> Result<GueResult<F>> {
    check_omega(omega)?;
    let (s1, s2) = split_parts(data, split)?;
    let trained_fit = solve_erm(loss, &s1)?;
    let trained = empirical_risk(loss, &trained_fit.theta_hat, &s2)?;
    let at_theta = empirical_risk(loss, theta, &s2)?;
    let pins = (1..theta.len()).map(|j| (j, theta[j])).collect();
    finish(omega, trained_fit.theta_hat, trained, at_theta, s2.n(), NullSpec::pinned(pins)?)
}

/// Level-α decision: reject iff `G ≥ 1/α`.
pub fn reject<F: Scalar>(g: &GueResult<F>, alpha: F) -> Result<bool> {
    check_alpha(alpha)?;
    Ok(g.log_gue >= -alpha.ln())
}

pub(crate) fn check_alpha<F: Scalar>(alpha: F) -> Result<()> {
    if !(alpha > F::zero() && alpha < F::one()) {
        return Err(Error::param("alpha", format!("{alpha} must lie in (0, 1)")));
    }
    Ok(())
}

/// Monte Carlo mean and standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate<F> {
    pub mean: F,
    pub std_error: F,
    pub draws: usize,
}

/// Estimates `E exp[−ω{ℓ(θ_alt; Z) − ℓ(θ*; Z)}]` from `draws` i.i.d. draws of
/// `sampler`, an empirical check of the strong central condition (the
/// moment should not exceed 1).
///
/// Exponents are clamped at [`Scalar::exp_ceiling`]. `omega = 0` is accepted
/// and gives exactly 1.
pub fn central_condition_diagnostic<F, L, S>(
    loss: &L,
    mut sampler: S,
    theta_star: &Coefficients<F>,
    theta_alt: &Coefficients<F>,
    omega: F,
    draws: usize,
    seed: u64,
) -> Result<MomentEstimate<F>>
where
    F: Scalar,
    L: Loss<F> + ?Sized,
    S: FnMut(&mut ChaCha8Rng) -> Result<(Vec<F>, F)>,
{
    if draws < 100 {
        return Err(Error::param("draws", format!("{draws}; need at least 100")));
    }
    if !(omega >= F::zero() && omega.is_finite()) {
        return Err(Error::param("omega", format!("{omega} must be non-negative")));
    }
    let mut rng = rng_from_seed(seed);
    let mut values = Vec::with_capacity(draws);
    for _ in 0..draws {
        let (x, y) = sampler(&mut rng)?;
        let diff = loss.loss(theta_alt, &x, y)? - loss.loss(theta_star, &x, y)?;
        let exponent = -omega * diff;
        values.push(F::saturating_exp(exponent.min(F::exp_ceiling())));
    }
    let count = F::from_count(draws);
    let mean = values.iter().copied().sum::<F>() / count;
    let var = values
        .iter()
        .map(|&v| (v - mean) * (v - mean))
        .sum::<F>()
        / F::from_count(draws - 1);
    Ok(MomentEstimate {
        mean,
        std_error: (var / count).sqrt(),
        draws,
    })
}
