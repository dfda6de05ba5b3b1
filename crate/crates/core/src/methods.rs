//! Embeddable stochastic subgradient methods: one-step maps
//! `(x, y) -> (x⁺, y⁺)` driven by a subgradient estimate `g` and stepsize `η`.
//!
//! * proximal SGD:  `x⁺ = P_X(x - η g)`
//! * proximal SGDM: `y⁺ = y - τη(y - g)`, `x⁺ = (1-η)x + η P_X(x - α y⁺)`
//! * proximal ADAM: `y⁺ = y - τ₁η(y - g)`, `v⁺ = v - τ₂η(v - g⊙g)`,
//!   `x⁺ = (1-η)x + η prox̃_X(x, y⁺; √(v⁺+ε)/α)` (no bias correction)

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::FeasibleSet;
use crate::linalg::{check_dim, norm, sub};
use crate::scalar::Scalar;

/// Primal point plus method-specific auxiliary state.
///
/// `aux` is empty for SGD, the momentum for SGDM, and `[y; v]` (momentum
/// followed by second moment) for ADAM.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodState<T> {
    pub x: Vec<T>,
    pub aux: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    ProxSgd,
    ProxSgdm,
    ProxAdam,
}

/// Validated method parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method<T> {
    ProxSgd,
    ProxSgdm { tau: T, alpha: T },
    ProxAdam { tau1: T, tau2: T, alpha: T, eps: T },
}

impl<T: Scalar> Method<T> {
    pub fn sgd() -> Self {
        Self::ProxSgd
    }

    pub fn sgdm(tau: T, alpha: T) -> Result<Self> {
        positive("tau", tau)?;
        positive("alpha", alpha)?;
        Ok(Self::ProxSgdm { tau, alpha })
    }

    /// Requires `0 < τ₂ <= 4τ₁`, the range on which the ADAM Lyapunov function decreases.
    pub fn adam(tau1: T, tau2: T, alpha: T, eps: T) -> Result<Self> {
        positive("tau1", tau1)?;
        positive("tau2", tau2)?;
        positive("alpha", alpha)?;
        positive("eps", eps)?;
        if tau2 > T::lit(4.0) * tau1 {
            return Err(invalid(format!(
                "ADAM requires 0 < tau2 <= 4*tau1 (got tau1={tau1}, tau2={tau2})"
            )));
        }
        Ok(Self::ProxAdam { tau1, tau2, alpha, eps })
    }

    pub fn kind(&self) -> MethodKind {
        match self {
            Self::ProxSgd => MethodKind::ProxSgd,
            Self::ProxSgdm { .. } => MethodKind::ProxSgdm,
            Self::ProxAdam { .. } => MethodKind::ProxAdam,
        }
    }

    /// Dimension of the auxiliary state for a primal dimension `n`.
    pub fn aux_dim(&self, n: usize) -> usize {
        match self {
            Self::ProxSgd => 0,
            Self::ProxSgdm { .. } => n,
            Self::ProxAdam { .. } => 2 * n,
        }
    }

    /// Zero auxiliary state at `x`.
    pub fn init_state(&self, x: Vec<T>) -> MethodState<T> {
        let aux = vec![T::zero(); self.aux_dim(x.len())];
        MethodState { x, aux }
    }

    /// Largest admissible stepsize.
    pub fn max_step(&self) -> Option<T> {
        match self {
            Self::ProxSgd => None,
            Self::ProxSgdm { .. } => Some(T::one()),
            Self::ProxAdam { tau2, .. } => Some(T::one().min(T::one() / *tau2)),
        }
    }

    pub fn step(&self, set: &FeasibleSet<T>, g: &[T], state: &MethodState<T>, eta: T) -> Result<MethodState<T>> {
        check_dim("method auxiliary state", self.aux_dim(state.x.len()), state.aux.len())?;
        match *self {
            Self::ProxSgd => Ok(MethodState {
                x: step_prox_sgd(set, g, &state.x, eta)?,
                aux: Vec::new(),
            }),
            Self::ProxSgdm { tau, alpha } => {
                let (x, y) = step_prox_sgdm(set, g, &state.x, &state.aux, eta, tau, alpha)?;
                Ok(MethodState { x, aux: y })
            }
            Self::ProxAdam { tau1, tau2, alpha, eps } => {
                let n = state.x.len();
                let (y, v) = state.aux.split_at(n);
                let params = AdamParams { tau1, tau2, alpha, eps };
                let (x, mut y, v) = step_prox_adam(set, g, &state.x, y, v, eta, &params)?;
                y.extend(v);
                Ok(MethodState { x, aux: y })
            }
        }
    }

    /// Computable `T_Φ(g, x, y)` with `||Φ(g,x,y,η) - (x,y)|| <= η T_Φ` for
    /// every admissible `η`.
    pub fn displacement_bound(&self, set: &FeasibleSet<T>, g: &[T], state: &MethodState<T>) -> Result<T> {
        let x = &state.x;
        match *self {
            // Nonexpansive projection of a feasible point.
            Self::ProxSgd => Ok(norm(g)),
            Self::ProxSgdm { tau, alpha } => {
                let y = &state.aux;
                let lead = norm(&sub(x, &set.project(&crate::linalg::axpy(x, -alpha, y))?));
                let drift = tau * norm(&sub(y, g));
                Ok(lead + (T::one() + alpha) * drift)
            }
            Self::ProxAdam { tau1, tau2, alpha, eps } => {
                let n = x.len();
                let (y, v) = state.aux.split_at(n);
                let y_drift = tau1 * norm(&sub(y, g));
                let v_drift = tau2 * norm(&v.iter().zip(g).map(|(&vi, &gi)| vi - gi * gi).collect::<Vec<_>>());
                // Preconditioner weights are bounded below by √ε / α.
                let x_move = alpha * (norm(y) + y_drift) / eps.sqrt();
                Ok(x_move + y_drift + v_drift)
            }
        }
    }
}

fn positive<T: Scalar>(name: &str, v: T) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite (got {v})")))
    }
}

fn check_step<T: Scalar>(eta: T) -> Result<()> {
    if eta > T::zero() && eta.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("stepsize must be positive (got {eta})")))
    }
}

fn check_unit_step<T: Scalar>(eta: T) -> Result<()> {
    check_step(eta)?;
    if eta > T::one() {
        return Err(Error::StepTooLarge {
            value: eta.as_f64(),
            limit: 1.0,
            rule: "eta <= 1 keeps the averaged iterate feasible",
        });
    }
    Ok(())
}

/// `P_X(x - η g)`.
pub fn step_prox_sgd<T: Scalar>(set: &FeasibleSet<T>, g: &[T], x: &[T], eta: T) -> Result<Vec<T>> {
    check_step(eta)?;
    check_dim("subgradient", x.len(), g.len())?;
    set.project(&crate::linalg::axpy(x, -eta, g))
}

/// One proximal heavy-ball step; returns `(x⁺, y⁺)`.
pub fn step_prox_sgdm<T: Scalar>(
    set: &FeasibleSet<T>,
    g: &[T],
    x: &[T],
    y: &[T],
    eta: T,
    tau: T,
    alpha: T,
) -> Result<(Vec<T>, Vec<T>)> {
    check_unit_step(eta)?;
    check_dim("subgradient", x.len(), g.len())?;
    check_dim("momentum", x.len(), y.len())?;
    let te = tau * eta;
    let y_next: Vec<T> = y.iter().zip(g).map(|(&yi, &gi)| yi - te * (yi - gi)).collect();
    let target = set.project(&crate::linalg::axpy(x, -alpha, &y_next))?;
    let x_next = convex_step(x, &target, eta);
    Ok((x_next, y_next))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams<T> {
    pub tau1: T,
    pub tau2: T,
    pub alpha: T,
    pub eps: T,
}

/// One proximal ADAM step; returns `(x⁺, y⁺, v⁺)`.
pub fn step_prox_adam<T: Scalar>(
    set: &FeasibleSet<T>,
    g: &[T],
    x: &[T],
    y: &[T],
    v: &[T],
    eta: T,
    params: &AdamParams<T>,
) -> Result<(Vec<T>, Vec<T>, Vec<T>)> {
    let AdamParams { tau1, tau2, alpha, eps } = *params;
    check_unit_step(eta)?;
    if eta * tau2 > T::one() {
        return Err(Error::StepTooLarge {
            value: (eta * tau2).as_f64(),
            limit: 1.0,
            rule: "eta * tau2 <= 1 keeps the second moment nonnegative",
        });
    }
    check_dim("subgradient", x.len(), g.len())?;
    check_dim("first moment", x.len(), y.len())?;
    check_dim("second moment", x.len(), v.len())?;
    if v.iter().any(|&vi| vi < T::zero()) {
        return Err(invalid("second moment must be nonnegative"));
    }
    let a = tau1 * eta;
    let b = tau2 * eta;
    let y_next: Vec<T> = y.iter().zip(g).map(|(&yi, &gi)| yi - a * (yi - gi)).collect();
    let v_next: Vec<T> = v
        .iter()
        .zip(g)
        .map(|(&vi, &gi)| (vi - b * (vi - gi * gi)).max(T::zero()))
        .collect();
    let weights: Vec<T> = v_next.iter().map(|&vi| (vi + eps).sqrt() / alpha).collect();
    let target = set.prox_preconditioned(x, &y_next, &weights)?;
    let x_next = convex_step(x, &target, eta);
    Ok((x_next, y_next, v_next))
}

fn convex_step<T: Scalar>(x: &[T], target: &[T], eta: T) -> Vec<T> {
    // `(1-η)x + ηt` written as `x + η(t - x)`, so `t = x` leaves `x` unchanged exactly.
    x.iter().zip(target).map(|(&xi, &ti)| xi + eta * (ti - xi)).collect()
}
