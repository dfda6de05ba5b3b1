use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Primal stepsize sequence `η_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule<T> {
    Constant(T),
    /// `c / √(s + 1)` where `s = ⌊k / epoch_len⌋` is the epoch index.
    InvSqrtEpoch {
        scale: T,
        epoch_len: usize,
    },
    /// `c / (k + 1)^p`, `p ∈ (0, 1]`.
    Power {
        scale: T,
        exponent: T,
    },
    /// `c / √(1 + k / horizon)`.
    InvSqrtTime {
        scale: T,
        horizon: T,
    },
}

impl<T: Scalar> StepSchedule<T> {
    pub fn at(&self, k: usize) -> T {
        let kf = T::from_usize(k).unwrap_or_else(T::max_value);
        match *self {
            Self::Constant(c) => c,
            Self::InvSqrtEpoch { scale, epoch_len } => {
                let s = T::from_usize(k / epoch_len).unwrap_or_else(T::max_value);
                scale / (s + T::one()).sqrt()
            }
            Self::Power { scale, exponent } => scale / (kf + T::one()).powf(exponent),
            Self::InvSqrtTime { scale, horizon } => scale / (T::one() + kf / horizon).sqrt(),
        }
    }

    /// Largest emitted value; every built-in schedule is nonincreasing.
    pub fn max_value(&self) -> T {
        self.at(0)
    }

    pub fn validate(&self) -> Result<()> {
        let (scale, ok) = match *self {
            Self::Constant(c) => (c, true),
            Self::InvSqrtEpoch { scale, epoch_len } => (scale, epoch_len >= 1),
            Self::Power { scale, exponent } => (scale, exponent > T::zero() && exponent <= T::one()),
            Self::InvSqrtTime { scale, horizon } => (scale, horizon > T::zero() && horizon.is_finite()),
        };
        if !(scale > T::zero() && scale.is_finite()) {
            return Err(invalid("stepsize scale must be positive and finite"));
        }
        if !ok {
            return Err(invalid(format!("malformed stepsize schedule {self:?}")));
        }
        Ok(())
    }

    /// `η_k → 0`.
    pub fn is_diminishing(&self) -> bool {
        !matches!(self, Self::Constant(_))
    }

    /// `Σ η_k = ∞`; holds for every built-in kind with valid parameters.
    pub fn has_divergent_sum(&self) -> bool {
        match *self {
            Self::Power { exponent, .. } => exponent <= T::one(),
            _ => true,
        }
    }
}

/// Dual stepsize sequence `θ_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaSchedule<T> {
    Constant(T),
    /// Linear interpolation from `start` to `end` over `over` iterations, then flat.
    Linear {
        start: T,
        end: T,
        over: usize,
    },
}

impl<T: Scalar> ThetaSchedule<T> {
    pub fn at(&self, k: usize) -> T {
        match *self {
            Self::Constant(t) => t,
            Self::Linear { start, end, over } => {
                if over == 0 || k >= over {
                    end
                } else {
                    let frac = T::from_usize(k).unwrap() / T::from_usize(over).unwrap();
                    start + (end - start) * frac
                }
            }
        }
    }

    /// `(θ_min, θ_max)`
    pub fn bounds(&self) -> (T, T) {
        match *self {
            Self::Constant(t) => (t, t),
            Self::Linear { start, end, .. } => (start.min(end), start.max(end)),
        }
    }
}
