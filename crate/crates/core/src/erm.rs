//! Exact empirical risk minimisation for the check loss (quantile
//! regression).
//!
//! The primal problem `min_θ Σ ρ_τ(y_i − x_iᵀθ)` has the dual
//!
//! ```text
//!   max  yᵀd   subject to  Xᵀd = 0,   τ − 1 ≤ d_i ≤ τ,
//! ```
//!
//! a linear program with only `p` equality rows. It is solved by a
//! bounded-variable primal simplex with Bland's rule (lowest-index entering
//! variable, lowest-index leaving variable on ratio ties), so the basis is a
//! `p × p` matrix of design rows and every iteration costs `O(np)`. The
//! optimal simplex multipliers are the primal coefficients: θ interpolates
//! the `p` basic observations exactly, i.e. the fit is a vertex of the
//! primal polytope.

use serde::{Deserialize, Serialize};

use crate::linalg::{numerical_rank, Lu};
use crate::loss::{empirical_risk, CheckLoss, Coefficients, Dataset};
use crate::{Error, Result, Scalar};

/// Singular values below this fraction of the largest mark the design as
/// rank-deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// A composite null fixing some coordinates of θ.
///
/// The usual case pins coordinates at zero (`θ_j = 0`); the bootstrap in
/// [`crate::calibration`] also pins them at non-zero values. The intercept
/// (column 0) is never constrainable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullSpec<F> {
    constraints: Vec<(usize, F)>,
}

impl<F: Scalar> NullSpec<F> {
    /// The unconstrained parameter space.
    pub fn none() -> Self {
        NullSpec {
            constraints: Vec::new(),
        }
    }

    /// `θ_j = 0` for every `j` in `indices`.
    pub fn zeroed(indices: &[usize]) -> Result<Self> {
        Self::pinned(indices.iter().map(|&j| (j, F::zero())).collect())
    }

    /// `θ_j = v` for every `(j, v)`.
    pub fn pinned(mut constraints: Vec<(usize, F)>) -> Result<Self> {
        constraints.sort_by_key(|c| c.0);
        for w in constraints.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::param("null", format!("index {} repeated", w[0].0)));
            }
        }
        if let Some(&(j, v)) = constraints.iter().find(|c| c.0 == 0 || !c.1.is_finite()) {
            let reason = if j == 0 {
                "the intercept (index 0) cannot be constrained".to_string()
            } else {
                format!("pinned value {v} for index {j} is not finite")
            };
            return Err(Error::param("null", reason));
        }
        Ok(NullSpec { constraints })
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.constraints.iter().map(|c| c.0).collect()
    }

    pub fn constraints(&self) -> &[(usize, F)] {
        &self.constraints
    }

    /// Same coordinates, pinned at the values they take in `theta`.
    pub fn pinned_at(&self, theta: &Coefficients<F>) -> Result<Self> {
        self.validate(theta.len())?;
        Self::pinned(self.constraints.iter().map(|&(j, _)| (j, theta[j])).collect())
    }

    /// Whether `theta` lies in the null set (exact comparison).
    pub fn contains(&self, theta: &Coefficients<F>) -> bool {
        self.constraints
            .iter()
            .all(|&(j, v)| j < theta.len() && theta[j] == v)
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        match self.constraints.iter().find(|c| c.0 >= p) {
            Some(&(j, _)) => Err(Error::param(
                "null",
                format!("index {j} out of range for {p} columns"),
            )),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErmStatus {
    Optimal,
    /// Optimal, but some basic variable sits at a bound.
    DegenerateOptimal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErmSolution<F> {
    pub theta_hat: Coefficients<F>,
    pub achieved_risk: F,
    pub iterations: usize,
    pub status: ErmStatus,
}

/// Global minimiser of the empirical check-loss risk.
pub fn solve_erm<F: Scalar>(loss: &CheckLoss<F>, data: &Dataset<F>) -> Result<ErmSolution<F>> {
    let (n, p) = (data.n(), data.p());
    if n < p {
        return Err(Error::TooFewRows {
            rows: n,
            columns: p,
        });
    }
    let rank = numerical_rank(data.design(), n, p, F::lit(RANK_TOLERANCE));
    if rank < p {
        return Err(Error::RankDeficient { rank, columns: p });
    }
    let mut simplex = DualSimplex::new(data, loss.tau());
    let (theta, degenerate) = simplex.run()?;
    let theta_hat = Coefficients::new(theta);
    let achieved_risk = empirical_risk(loss, &theta_hat, data)?;
    if !achieved_risk.is_finite() {
        return Err(Error::NonFinite("achieved risk"));
    }
    Ok(ErmSolution {
        theta_hat,
        achieved_risk,
        iterations: simplex.iterations,
        status: if degenerate {
            ErmStatus::DegenerateOptimal
        } else {
            ErmStatus::Optimal
        },
    })
}

/// Minimiser over `{θ : θ_j = v_j for (j, v_j) in null}`: the pinned columns
/// are moved into the response, the reduced problem is solved, and the
/// pinned values are re-inserted.
pub fn solve_erm_constrained<F: Scalar>(
    loss: &CheckLoss<F>,
    data: &Dataset<F>,
    null: &NullSpec<F>,
) -> Result<ErmSolution<F>> {
    null.validate(data.p())?;
    if null.is_empty() {
        return solve_erm(loss, data);
    }
    let offset_response: Vec<F> = (0..data.n())
        .map(|i| {
            let row = data.row(i);
            null.constraints
                .iter()
                .fold(data.response()[i], |acc, &(j, v)| acc - row[j] * v)
        })
        .collect();
    let reduced = data
        .drop_columns(&null.indices())?
        .with_response(offset_response)?;
    let inner = solve_erm(loss, &reduced)?;

    let mut free = inner.theta_hat.as_slice().iter();
    let mut pinned = null.constraints.iter().peekable();
    let theta: Vec<F> = (0..data.p())
        .map(|j| match pinned.peek() {
            Some(&&(k, v)) if k == j => {
                pinned.next();
                v
            }
            _ => *free.next().expect("reduced solution has the free coordinates"),
        })
        .collect();
    let theta_hat = Coefficients::new(theta);
    let achieved_risk = empirical_risk(loss, &theta_hat, data)?;
    Ok(ErmSolution {
        theta_hat,
        achieved_risk,
        iterations: inner.iterations,
        status: inner.status,
    })
}

/// Bounded-variable simplex on the dual. Variables `0..n` are the dual
/// weights `d_i`; `n..n+p` are phase-one artificials.
struct DualSimplex<'a, F> {
    data: &'a Dataset<F>,
    n: usize,
    p: usize,
    lower: Vec<F>,
    upper: Vec<F>,
    value: Vec<F>,
    at_upper: Vec<bool>,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    art_sign: Vec<F>,
    iterations: usize,
    max_iterations: usize,
    tol_cost: F,
    tol_pivot: F,
    tol_ratio: F,
    tol_singular: F,
}

#[derive(Clone, Copy, PartialEq)]
enum Phase {
    Feasibility,
    Optimality,
}

impl<'a, F: Scalar> DualSimplex<'a, F> {
    fn new(data: &'a Dataset<F>, tau: F) -> Self {
        let (n, p) = (data.n(), data.p());
        let scale_y = data
            .response()
            .iter()
            .fold(F::zero(), |m, v| m.max(v.abs()));
        let scale_x = data.design().iter().fold(F::zero(), |m, v| m.max(v.abs()));
        let eps = F::epsilon();

        let mut lower = vec![tau - F::one(); n];
        let mut upper = vec![tau; n];
        // Start every weight at its upper bound, i.e. from a fit lying below
        // all observations, so ties resolve towards the lowest vertex.
        let mut value = upper.clone();
        lower.extend(std::iter::repeat_n(F::zero(), p));
        upper.extend(std::iter::repeat_n(F::infinity(), p));

        // Artificials absorb the initial infeasibility: Xᵀd₀ + S a = 0.
        let mut art_sign = Vec::with_capacity(p);
        for j in 0..p {
            let col_sum = (0..n).fold(F::zero(), |acc, i| acc + data.row(i)[j] * value[i]);
            let r = -col_sum;
            art_sign.push(if r >= F::zero() { F::one() } else { -F::one() });
            value.push(r.abs());
        }
        let mut in_basis = vec![false; n + p];
        in_basis[n..].iter_mut().for_each(|b| *b = true);

        DualSimplex {
            data,
            n,
            p,
            lower,
            upper,
            value,
            at_upper: (0..n + p).map(|j| j < n).collect(),
            basis: (n..n + p).collect(),
            in_basis,
            art_sign,
            iterations: 0,
            max_iterations: 50 * (n + p) + 1000,
            tol_cost: eps * F::lit(1e3) * (scale_y + F::one()),
            tol_pivot: eps.sqrt(),
            tol_ratio: eps * F::lit(1e2),
            tol_singular: eps * F::lit(16.0) * (scale_x + F::one()),
        }
    }

    fn cost(&self, phase: Phase, j: usize) -> F {
        match (phase, j < self.n) {
            (Phase::Feasibility, true) => F::zero(),
            (Phase::Feasibility, false) => -F::one(),
            (Phase::Optimality, true) => self.data.response()[j],
            (Phase::Optimality, false) => F::zero(),
        }
    }

    fn dot_column(&self, v: &[F], j: usize) -> F {
        if j < self.n {
            self.data
                .row(j)
                .iter()
                .zip(v)
                .fold(F::zero(), |acc, (&a, &b)| acc + a * b)
        } else {
            let k = j - self.n;
            v[k] * self.art_sign[k]
        }
    }

    fn column(&self, j: usize) -> Vec<F> {
        if j < self.n {
            self.data.row(j).to_vec()
        } else {
            let mut c = vec![F::zero(); self.p];
            c[j - self.n] = self.art_sign[j - self.n];
            c
        }
    }

    fn factor(&self) -> Result<Lu<F>> {
        let p = self.p;
        let mut b = vec![F::zero(); p * p];
        for (k, &j) in self.basis.iter().enumerate() {
            for (r, v) in self.column(j).into_iter().enumerate() {
                b[r * p + k] = v;
            }
        }
        Lu::factor(b, p, self.tol_singular).ok_or(Error::RankDeficient {
            rank: p.saturating_sub(1),
            columns: p,
        })
    }

    /// `x_B = B⁻¹ (0 − N x_N)`.
    fn refresh_basics(&mut self, lu: &Lu<F>) {
        let mut rhs = vec![F::zero(); self.p];
        for j in (0..self.n + self.p).filter(|&j| !self.in_basis[j]) {
            let v = self.value[j];
            if v == F::zero() {
                continue;
            }
            if j < self.n {
                for (r, &x) in self.data.row(j).iter().enumerate() {
                    rhs[r] = rhs[r] - x * v;
                }
            } else {
                let k = j - self.n;
                rhs[k] = rhs[k] - self.art_sign[k] * v;
            }
        }
        let xb = lu.solve(&rhs);
        for (k, &j) in self.basis.iter().enumerate() {
            self.value[j] = xb[k];
        }
    }

    fn optimise(&mut self, phase: Phase) -> Result<Lu<F>> {
        loop {
            let lu = self.factor()?;
            self.refresh_basics(&lu);
            let cb: Vec<F> = self.basis.iter().map(|&j| self.cost(phase, j)).collect();
            let pi = lu.solve_transpose(&cb);

            let entering = (0..self.n + self.p)
                .filter(|&j| !self.in_basis[j] && self.lower[j] < self.upper[j])
                .find_map(|j| {
                    let rc = self.cost(phase, j) - self.dot_column(&pi, j);
                    if !self.at_upper[j] && rc > self.tol_cost {
                        Some((j, F::one()))
                    } else if self.at_upper[j] && rc < -self.tol_cost {
                        Some((j, -F::one()))
                    } else {
                        None
                    }
                });
            let Some((enter, dir)) = entering else {
                return Ok(lu);
            };
            if self.iterations >= self.max_iterations {
                return Err(Error::IterationLimit(self.max_iterations));
            }
            self.iterations += 1;

            let w = lu.solve(&self.column(enter));
            // Ratio test. `best == None` is the entering variable's own bound
            // flip; on ties a basic variable leaves (lowest index first).
            let mut best_t = self.upper[enter] - self.lower[enter];
            let mut best_var = usize::MAX;
            let mut best: Option<(usize, bool)> = None;
            for (k, &bv) in self.basis.iter().enumerate() {
                let rate = -dir * w[k];
                let (room, hits_upper) = if rate < -self.tol_pivot {
                    ((self.value[bv] - self.lower[bv]) / -rate, false)
                } else if rate > self.tol_pivot && self.upper[bv].is_finite() {
                    ((self.upper[bv] - self.value[bv]) / rate, true)
                } else {
                    continue;
                };
                let t = room.max(F::zero());
                let tie = (t - best_t).abs() <= self.tol_ratio;
                if (t < best_t && !tie) || (tie && bv < best_var) {
                    best_t = t;
                    best_var = bv;
                    best = Some((k, hits_upper));
                }
            }
            if !best_t.is_finite() {
                return Err(Error::Infeasible);
            }
            match best {
                None => {
                    self.at_upper[enter] = dir > F::zero();
                    self.value[enter] = if dir > F::zero() {
                        self.upper[enter]
                    } else {
                        self.lower[enter]
                    };
                }
                Some((k, hits_upper)) => {
                    let leave = self.basis[k];
                    self.value[leave] = if hits_upper {
                        self.upper[leave]
                    } else {
                        self.lower[leave]
                    };
                    self.at_upper[leave] = hits_upper;
                    self.in_basis[leave] = false;
                    self.in_basis[enter] = true;
                    self.basis[k] = enter;
                }
            }
        }
    }

    /// Pivots any artificial left in the basis (at value zero) out of it.
    fn expel_artificials(&mut self) -> Result<()> {
        for k in 0..self.p {
            if self.basis[k] < self.n {
                continue;
            }
            let lu = self.factor()?;
            let mut unit = vec![F::zero(); self.p];
            unit[k] = F::one();
            let rho = lu.solve_transpose(&unit);
            let replacement = (0..self.n)
                .find(|&j| !self.in_basis[j] && self.dot_column(&rho, j).abs() > self.tol_pivot)
                .ok_or(Error::RankDeficient {
                    rank: self.p - 1,
                    columns: self.p,
                })?;
            let leave = self.basis[k];
            self.value[leave] = F::zero();
            self.at_upper[leave] = false;
            self.in_basis[leave] = false;
            self.in_basis[replacement] = true;
            self.basis[k] = replacement;
        }
        for j in self.n..self.n + self.p {
            self.upper[j] = F::zero();
            self.value[j] = F::zero();
        }
        Ok(())
    }

    /// Returns `(θ, degenerate)`.
    fn run(&mut self) -> Result<(Vec<F>, bool)> {
        self.optimise(Phase::Feasibility)?;
        let infeasibility = self.value[self.n..]
            .iter()
            .fold(F::zero(), |acc, &v| acc + v.abs());
        let scale = F::from_count(self.n) * (self.tol_singular + F::one());
        if infeasibility > F::lit(1e3) * F::epsilon() * scale {
            return Err(Error::Infeasible);
        }
        self.expel_artificials()?;
        let lu = self.optimise(Phase::Optimality)?;

        let yb: Vec<F> = self
            .basis
            .iter()
            .map(|&j| self.cost(Phase::Optimality, j))
            .collect();
        let theta = lu.solve_transpose(&yb);
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("ERM coefficients"));
        }
        let bound_tol = F::epsilon().sqrt();
        let degenerate = self.basis.iter().any(|&j| {
            (self.value[j] - self.lower[j]).abs() <= bound_tol
                || (self.upper[j] - self.value[j]).abs() <= bound_tol
        });
        Ok((theta, degenerate))
    }
}
