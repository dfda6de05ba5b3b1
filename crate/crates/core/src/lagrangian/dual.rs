use crate::error::{invalid, Error, Result};
use crate::linalg::{check_dim, norm};
use crate::scalar::Scalar;

/// Norms at or below this are treated as zero by [`regu`].
pub const REGU_ZERO_TOL: f64 = 1e-14;

/// `y / ‖y‖`, or `0` when `‖y‖ <= REGU_ZERO_TOL`.
pub fn regu<T: Scalar>(y: &[T]) -> Vec<T> {
    let n = norm(y);
    if n <= T::lit(REGU_ZERO_TOL) {
        vec![T::zero(); y.len()]
    } else {
        y.iter().map(|&v| v / n).collect()
    }
}

/// `λ⁺ = λ + θ (regu(w⁺) - λ/β)`; requires `0 <= θ < β`.
pub fn dual_step_elm<T: Scalar>(lambda: &[T], w_next: &[T], theta: T, beta: T) -> Result<Vec<T>> {
    check_dim("dual step", lambda.len(), w_next.len())?;
    if !(beta > T::zero()) || !(theta >= T::zero()) || theta >= beta {
        return Err(Error::DualStepOutOfRange {
            theta: theta.as_f64(),
            beta: beta.as_f64(),
        });
    }
    let r = regu(w_next);
    Ok(lambda
        .iter()
        .zip(&r)
        .map(|(&l, &ri)| l + theta * (ri - l / beta))
        .collect())
}

/// `(‖λ⁺‖ - β) - (1 - θ/β)(‖λ‖ - β)`; nonpositive up to rounding for every
/// regu-based dual step.
pub fn contraction_excess<T: Scalar>(lambda: &[T], lambda_next: &[T], theta: T, beta: T) -> T {
    (norm(lambda_next) - beta) - (T::one() - theta / beta) * (norm(lambda) - beta)
}

/// Baseline step `λ⁺ = λ + min{θ̃/‖c⁺‖, β̃ σ^k} c⁺`; a no-op when `c⁺ = 0`.
pub fn dual_step_ialm<T: Scalar>(
    lambda: &[T],
    c_next: &[T],
    theta_tilde: T,
    beta_tilde: T,
    sigma: T,
    k: usize,
) -> Result<Vec<T>> {
    check_dim("dual step", lambda.len(), c_next.len())?;
    if !(beta_tilde > T::zero()) || !(sigma > T::one()) || !(theta_tilde > T::zero()) {
        return Err(invalid(
            "baseline dual step needs beta_tilde > 0, sigma > 1, theta_tilde > 0",
        ));
    }
    let cn = norm(c_next);
    if cn == T::zero() {
        return Ok(lambda.to_vec());
    }
    let growth = match i32::try_from(k) {
        Ok(e) => beta_tilde * sigma.powi(e),
        Err(_) => T::infinity(),
    };
    let step = (theta_tilde / cn).min(growth);
    Ok(lambda.iter().zip(c_next).map(|(&l, &c)| l + step * c).collect())
}
