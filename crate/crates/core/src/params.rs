//! Model coefficients and distributional constants, with validation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Every coefficient of the stage game and its sampling distributions.
///
/// The model uses one Greek letter per channel: `alpha` scales capability
/// growth, `beta` knowledge accumulation, `gamma` the transparency bonus,
/// `lambda_econ`/`mu`/`phi` the economic payoff weights, `sigma`/`xi` the
/// security weights, `eta`/`theta` the cost weights. The economic weight and
/// the entry rate are distinct parameters here even though the source model
/// reuses one symbol for both roles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Parameters {
    /// Capability growth coefficient.
    pub alpha: f64,
    /// Knowledge accumulation coefficient.
    pub beta: f64,
    /// Transparency bonus to own capability growth.
    pub gamma: f64,
    /// Economic weight on private capability.
    pub lambda_econ: f64,
    /// Economic weight on shared knowledge.
    pub mu: f64,
    /// Network multiplier on `s_i * K`.
    pub phi: f64,
    /// Security weight on the collective security stock.
    pub sigma: f64,
    /// Security penalty weight on rivals' capability; doubles as the
    /// punishment payoff in the equilibrium diagnostics.
    pub xi: f64,
    /// Quadratic resource cost coefficient.
    pub eta: f64,
    /// Per-step cost of unverified status.
    pub theta: f64,
    /// Discount factor, strictly inside (0, 1).
    pub delta: f64,
    /// Log-normal location of the compute distribution.
    pub mu_c: f64,
    /// Log-normal scale of the compute distribution (strictly positive).
    pub sigma_c: f64,
    /// Probability that a conducted audit verifies the auditee.
    pub p_audit: f64,
    /// Probability that an audit of a true defector flags the defection.
    pub p_detection: f64,
    /// Poisson rate of new-player arrival per timestep.
    pub lambda_entry: f64,
    /// Upper bound of the Uniform(0, t_bar) entrant initial capability.
    pub t_bar: f64,
    /// Episode length in timesteps.
    pub horizon: u32,
    /// Initial player count.
    pub n_initial: u32,
}

impl Default for Parameters {
    fn default() -> Self {
        Parameters {
            alpha: 0.1,
            beta: 0.5,
            gamma: 0.2,
            lambda_econ: 0.1,
            mu: 0.5,
            phi: 0.1,
            sigma: 0.05,
            xi: 0.05,
            eta: 0.1,
            theta: 0.1,
            delta: 0.9,
            mu_c: 0.0,
            sigma_c: 0.5,
            p_audit: 0.9,
            p_detection: 0.8,
            lambda_entry: 0.05,
            t_bar: 1.0,
            horizon: 100,
            n_initial: 4,
        }
    }
}

/// A parameter outside its admissible range.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parameter `{field}` out of range: {requirement}")]
pub struct OutOfRange {
    pub field: &'static str,
    pub requirement: &'static str,
}

fn check(ok: bool, field: &'static str, requirement: &'static str) -> Result<(), OutOfRange> {
    if ok {
        Ok(())
    } else {
        Err(OutOfRange { field, requirement })
    }
}

impl Parameters {
    /// Check every invariant, reporting the first violated field.
    pub fn validate(&self) -> Result<(), OutOfRange> {
        let nonneg = |v: f64| v >= 0.0 && v.is_finite();
        let prob = |v: f64| (0.0..=1.0).contains(&v);
        check(nonneg(self.alpha), "alpha", "must be nonnegative and finite")?;
        check(nonneg(self.beta), "beta", "must be nonnegative and finite")?;
        check(nonneg(self.gamma), "gamma", "must be nonnegative and finite")?;
        check(
            nonneg(self.lambda_econ),
            "lambda_econ",
            "must be nonnegative and finite",
        )?;
        check(nonneg(self.mu), "mu", "must be nonnegative and finite")?;
        check(
            self.phi > 0.0 && self.phi.is_finite(),
            "phi",
            "must be strictly positive and finite",
        )?;
        check(nonneg(self.sigma), "sigma", "must be nonnegative and finite")?;
        check(nonneg(self.xi), "xi", "must be nonnegative and finite")?;
        check(nonneg(self.eta), "eta", "must be nonnegative and finite")?;
        check(nonneg(self.theta), "theta", "must be nonnegative and finite")?;
        check(
            self.delta > 0.0 && self.delta < 1.0,
            "delta",
            "must lie strictly inside (0, 1)",
        )?;
        check(self.mu_c.is_finite(), "mu_c", "must be finite")?;
        check(
            self.sigma_c > 0.0 && self.sigma_c.is_finite(),
            "sigma_c",
            "must be strictly positive and finite",
        )?;
        check(prob(self.p_audit), "p_audit", "must lie in [0, 1]")?;
        check(prob(self.p_detection), "p_detection", "must lie in [0, 1]")?;
        check(
            nonneg(self.lambda_entry),
            "lambda_entry",
            "must be nonnegative and finite",
        )?;
        check(nonneg(self.t_bar), "t_bar", "must be nonnegative and finite")?;
        check(self.horizon >= 1, "horizon", "must be at least 1")?;
        check(self.n_initial >= 2, "n_initial", "must be at least 2")?;
        Ok(())
    }

    /// Validate and return the record unchanged.
    pub fn validated(self) -> Result<Parameters, OutOfRange> {
        self.validate()?;
        Ok(self)
    }
}
