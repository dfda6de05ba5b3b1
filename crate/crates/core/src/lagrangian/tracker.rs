use crate::error::{Error, Result};
use crate::linalg::check_dim;
use crate::oracle::{eval_constraints, Problem};
use crate::scalar::Scalar;

/// `w⁺ = c(x⁺)` for deterministic constraints.
pub fn track_exact<T: Scalar, P: Problem<T> + ?Sized>(prob: &P, x_next: &[T]) -> Result<Vec<T>> {
    eval_constraints(prob, x_next)
}

/// Single-timescale correction tracker
/// `w⁺ = w - τ̃η(w - C(x,ω)) + C(x⁺,ω) - C(x,ω)`; requires `τ̃η <= 1`.
pub fn track_correction<T: Scalar>(w: &[T], c_at_x: &[T], c_at_next: &[T], tau_tilde: T, eta: T) -> Result<Vec<T>> {
    check_dim("tracker", w.len(), c_at_x.len())?;
    check_dim("tracker", w.len(), c_at_next.len())?;
    let a = tau_tilde * eta;
    if a > T::one() {
        return Err(Error::StepTooLarge {
            value: a.as_f64(),
            limit: 1.0,
            rule: "tau_tilde * eta <= 1 for the correction tracker",
        });
    }
    Ok((0..w.len())
        .map(|i| w[i] - a * (w[i] - c_at_x[i]) + c_at_next[i] - c_at_x[i])
        .collect())
}
