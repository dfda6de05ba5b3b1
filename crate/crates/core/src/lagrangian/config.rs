use crate::error::{invalid, Error, Result};
use crate::methods::Method;
use crate::oracle::NoiseModel;
use crate::scalar::Scalar;

use super::schedule::{StepSchedule, ThetaSchedule};

/// How `w_{k+1} ≈ c(x_{k+1})` is produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tracker<T> {
    /// `w⁺ = c(x⁺)`; deterministic constraints only.
    Exact,
    /// Moving average with a correction term, see [`super::track_correction`].
    Correction { tau_tilde: T },
}

/// Multiplier update rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DualUpdate<T> {
    /// `λ⁺ = λ + θ(regu(w⁺) - λ/β)`.
    Regu,
    /// Increasing-penalty baseline: the primal loop runs `inner_steps`
    /// iterations per outer step, then `λ⁺ = λ + min{θ̃/‖c⁺‖, β̃σ^j} c⁺` with
    /// `j` the outer index and `c⁺` the tracked constraint value.
    Ialm {
        beta_tilde: T,
        sigma: T,
        theta_tilde: T,
        inner_steps: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig<T> {
    pub rho: T,
    pub beta: T,
    pub theta: ThetaSchedule<T>,
    pub eta: StepSchedule<T>,
    pub method: Method<T>,
    pub tracker: Tracker<T>,
    pub dual: DualUpdate<T>,
    /// Additive noise on the primal direction.
    pub noise: NoiseModel<T>,
    pub max_iters: usize,
    pub record_every: usize,
    /// Seeds the sample-token stream.
    pub seed: u64,
    /// Trial step for the KKT residual.
    pub kkt_probe: T,
}

impl<T: Scalar> SolverConfig<T> {
    /// Defaults: exact tracker, regu dual, no noise, records every 10 steps.
    pub fn new(rho: T, beta: T, theta: T, eta: StepSchedule<T>, method: Method<T>) -> Self {
        Self {
            rho,
            beta,
            theta: ThetaSchedule::Constant(theta),
            eta,
            method,
            tracker: Tracker::Exact,
            dual: DualUpdate::Regu,
            noise: NoiseModel::none(),
            max_iters: 1000,
            record_every: 10,
            seed: 0,
            kkt_probe: T::lit(1e-3),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho >= T::zero() && self.rho.is_finite()) {
            return Err(invalid("rho must be finite and >= 0"));
        }
        if !(self.beta > T::zero() && self.beta.is_finite()) {
            return Err(invalid("beta must be finite and > 0"));
        }
        let (tmin, tmax) = self.theta.bounds();
        if !(tmin > T::zero()) || tmax >= self.beta || !tmax.is_finite() {
            return Err(Error::DualStepOutOfRange {
                theta: if tmin > T::zero() { tmax.as_f64() } else { tmin.as_f64() },
                beta: self.beta.as_f64(),
            });
        }
        self.eta.validate()?;
        if !self.eta.is_diminishing() || !self.eta.has_divergent_sum() {
            return Err(invalid("primal stepsize must diminish with a divergent sum"));
        }
        let eta0 = self.eta.max_value();
        if let Some(limit) = self.method.max_step() {
            if eta0 > limit {
                return Err(Error::StepTooLarge {
                    value: eta0.as_f64(),
                    limit: limit.as_f64(),
                    rule: "method stepsize limit",
                });
            }
        }
        if let Tracker::Correction { tau_tilde } = self.tracker {
            if !(tau_tilde > T::zero()) {
                return Err(invalid("tau_tilde must be > 0"));
            }
            if tau_tilde * eta0 > T::one() {
                return Err(Error::StepTooLarge {
                    value: (tau_tilde * eta0).as_f64(),
                    limit: 1.0,
                    rule: "tau_tilde * eta <= 1 for the correction tracker",
                });
            }
        }
        if let DualUpdate::Ialm {
            beta_tilde,
            sigma,
            theta_tilde,
            inner_steps,
        } = self.dual
        {
            if !(beta_tilde > T::zero()) || !(sigma > T::one()) || !(theta_tilde > T::zero()) || inner_steps == 0 {
                return Err(invalid(
                    "baseline dual update needs beta_tilde > 0, sigma > 1, theta_tilde > 0, inner_steps >= 1",
                ));
            }
        }
        self.noise.validate()?;
        if self.record_every == 0 {
            return Err(invalid("record_every must be >= 1"));
        }
        if !(self.kkt_probe > T::zero()) {
            return Err(invalid("kkt_probe must be > 0"));
        }
        Ok(())
    }
}
