//! Computable surrogates for the quantities behind the convergence theory:
//! the exact penalty `g`, the merit functions `L_ρ` and `H_{ρ,β}`, a
//! projected-subgradient KKT residual, the auxiliary functions `u_S`, `u_A`
//! and the Lyapunov functions built from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::FeasibleSet;
use crate::linalg::{axpy, check_dim, dot, norm, sub};
use crate::oracle::{eval_constraint_jacobian, eval_constraints, eval_objective, Problem};
use crate::scalar::Scalar;

/// One row of a solver trajectory. Field names are the JSON keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsRecord {
    pub k: usize,
    pub f_val: f64,
    /// `||c(x)||`
    pub feas: f64,
    pub g_val: f64,
    #[serde(rename = "L_val")]
    pub l_val: f64,
    #[serde(rename = "H_val")]
    pub h_val: f64,
    pub lambda_norm: f64,
    pub kkt_residual: f64,
    /// `||w - c(x)||`
    pub tracker_err: f64,
    pub lyapunov: Option<f64>,
}

/// `f + β‖c‖ + (ρ/2)‖c‖²` from its parts. Every penalty value in the crate,
/// including the serialized `g_val`, goes through this expression.
pub fn penalty_value<T: Scalar>(f: T, feas: T, beta: T, rho: T) -> T {
    f + beta * feas + rho / T::lit(2.0) * feas * feas
}

/// Exact penalty `g(x) = f(x) + β‖c(x)‖ + (ρ/2)‖c(x)‖²`.
pub fn penalty_g<T: Scalar, P: Problem<T> + ?Sized>(prob: &P, x: &[T], beta: T, rho: T) -> Result<T> {
    let f = eval_objective(prob, x)?;
    let feas = norm(&eval_constraints(prob, x)?);
    Ok(penalty_value(f, feas, beta, rho))
}

/// Augmented Lagrangian `L_ρ(x, λ) = f + ⟨λ, c⟩ + (ρ/2)‖c‖²`.
pub fn merit_l<T: Scalar, P: Problem<T> + ?Sized>(prob: &P, x: &[T], lambda: &[T], rho: T) -> Result<T> {
    let f = eval_objective(prob, x)?;
    let c = eval_constraints(prob, x)?;
    check_dim("multiplier", c.len(), lambda.len())?;
    Ok(lagrangian_value(f, &c, lambda, rho))
}

fn lagrangian_value<T: Scalar>(f: T, c: &[T], lambda: &[T], rho: T) -> T {
    f + dot(lambda, c) + rho / T::lit(2.0) * dot(c, c)
}

/// Modified merit `H_{ρ,β}(x, λ) = L_ρ(x, λ) - ‖c‖‖λ‖²/(2β)`.
pub fn merit_h<T: Scalar, P: Problem<T> + ?Sized>(prob: &P, x: &[T], lambda: &[T], rho: T, beta: T) -> Result<T> {
    let f = eval_objective(prob, x)?;
    let c = eval_constraints(prob, x)?;
    check_dim("multiplier", c.len(), lambda.len())?;
    Ok(modified_value(
        lagrangian_value(f, &c, lambda, rho),
        norm(&c),
        norm(lambda),
        beta,
    ))
}

fn modified_value<T: Scalar>(l: T, feas: T, lambda_norm: T, beta: T) -> T {
    l - feas * lambda_norm * lambda_norm / (T::lit(2.0) * beta)
}

/// `‖x - P_X(x - t(d + Jλ))‖ / t` with the fixed selections `d`, `J`.
pub fn kkt_residual<T: Scalar, P: Problem<T> + ?Sized>(prob: &P, x: &[T], lambda: &[T], probe: T) -> Result<T> {
    if !(probe > T::zero()) {
        return Err(Error::InvalidParameter("KKT probe step must be positive".into()));
    }
    let d = prob.objective_subgradient(x);
    check_dim("subgradient oracle output", prob.dim(), d.len())?;
    let jac = eval_constraint_jacobian(prob, x)?;
    check_dim("multiplier", jac.cols(), lambda.len())?;
    let grad = crate::linalg::add(&d, &jac.mul_vec(lambda));
    let moved = prob.feasible_set().project(&axpy(x, -probe, &grad))?;
    Ok(norm(&sub(x, &moved)) / probe)
}

/// `u_S(x, y) = min_{w∈X} ⟨w - x, y⟩ + (κ/2)‖w - x‖²`, attained at `P_X(x - y/κ)`.
///
/// `curvature` is `κ`. The SGDM step `P_X(x - α y)` pairs with `κ = 1/α`;
/// see [`lyapunov_s`].
pub fn u_s<T: Scalar>(set: &FeasibleSet<T>, x: &[T], y: &[T], curvature: T) -> Result<T> {
    check_dim("u_S direction", x.len(), y.len())?;
    let w = set.project(&axpy(x, -T::one() / curvature, y))?;
    let d = sub(&w, x);
    Ok(dot(&d, y) + curvature / T::lit(2.0) * dot(&d, &d))
}

/// Value, minimizer and closed-form gradients of `u_A`.
#[derive(Debug, Clone, PartialEq)]
pub struct UaEval<T> {
    pub value: T,
    pub minimizer: Vec<T>,
    pub grad_x: Vec<T>,
    pub grad_y: Vec<T>,
    pub grad_v: Vec<T>,
}

/// `u_A(x, y, v) = min_{z∈X} ⟨z - x, y⟩ + (1/2α)⟨√(v+ε) ⊙ (z - x), z - x⟩`.
///
/// Gradients with `z̃` the minimizer:
/// `∇_x = -y + (1/α)√(v+ε) ⊙ (x - z̃)`, `∇_y = z̃ - x`,
/// `∇_v = (1/4α)(v+ε)^{-1/2} ⊙ (z̃ - x)²`.
pub fn u_a<T: Scalar>(set: &FeasibleSet<T>, x: &[T], y: &[T], v: &[T], alpha: T, eps: T) -> Result<UaEval<T>> {
    check_dim("u_A first moment", x.len(), y.len())?;
    check_dim("u_A second moment", x.len(), v.len())?;
    if v.iter().any(|&vi| vi < T::zero()) || !(eps > T::zero()) || !(alpha > T::zero()) {
        return Err(Error::InvalidParameter("u_A needs v >= 0, eps > 0, alpha > 0".into()));
    }
    let root: Vec<T> = v.iter().map(|&vi| (vi + eps).sqrt()).collect();
    let weights: Vec<T> = root.iter().map(|&r| r / alpha).collect();
    let z = set.prox_preconditioned(x, y, &weights)?;
    let d = sub(&z, x);
    let value = dot(&d, y) + d.iter().zip(&weights).map(|(&di, &wi)| wi * di * di).sum::<T>() / T::lit(2.0);
    let grad_x = (0..x.len()).map(|i| -y[i] - weights[i] * d[i]).collect();
    let quarter = T::one() / (T::lit(4.0) * alpha);
    let grad_v = (0..x.len()).map(|i| quarter / root[i] * d[i] * d[i]).collect();
    Ok(UaEval {
        value,
        minimizer: z,
        grad_x,
        grad_y: d,
        grad_v,
    })
}

/// `Ψ_S(x, y) = h(x) - u_S(x, y)/τ` for the SGDM step with prox scale `α`.
pub fn lyapunov_s<T: Scalar>(
    h: impl Fn(&[T]) -> T,
    set: &FeasibleSet<T>,
    x: &[T],
    y: &[T],
    tau: T,
    alpha: T,
) -> Result<T> {
    Ok(h(x) - u_s(set, x, y, T::one() / alpha)? / tau)
}

/// `Ψ_A(x, y, v) = h(x) - u_A(x, y, v)/τ₁`.
#[allow(clippy::too_many_arguments)]
pub fn lyapunov_a<T: Scalar>(
    h: impl Fn(&[T]) -> T,
    set: &FeasibleSet<T>,
    x: &[T],
    y: &[T],
    v: &[T],
    tau1: T,
    alpha: T,
    eps: T,
) -> Result<T> {
    Ok(h(x) - u_a(set, x, y, v, alpha, eps)?.value / tau1)
}

/// Smallest observed `dist(-J c(x), N_X(x)) / ‖c(x)‖` over infeasible samples.
pub fn estimate_regularity<T: Scalar, P: Problem<T> + ?Sized>(prob: &P, samples: &[Vec<T>]) -> Result<T> {
    let mut best: Option<T> = None;
    for x in samples {
        let c = eval_constraints(prob, x)?;
        let feas = norm(&c);
        if feas == T::zero() {
            continue;
        }
        let jc = eval_constraint_jacobian(prob, x)?.mul_vec(&c);
        let ratio = prob.feasible_set().normal_cone_distance(x, &jc)? / feas;
        best = Some(best.map_or(ratio, |b: T| b.min(ratio)));
    }
    best.ok_or(Error::AllSamplesFeasible)
}

/// Everything a [`MetricsRecord`] needs besides the iterate.
#[derive(Debug, Clone, Copy)]
pub struct RecordContext<T> {
    pub beta: T,
    pub rho: T,
    pub kkt_probe: T,
}

/// Method-specific Lyapunov data for the record.
#[derive(Debug, Clone, Copy)]
pub enum LyapunovSpec<T> {
    None,
    Sgdm { tau: T, alpha: T },
    Adam { tau1: T, alpha: T, eps: T },
}

/// Evaluates a full metrics row at `(x, aux, λ, w)`.
#[allow(clippy::too_many_arguments)]
pub fn metrics_record<T: Scalar, P: Problem<T> + ?Sized>(
    prob: &P,
    k: usize,
    x: &[T],
    aux: &[T],
    lambda: &[T],
    w: &[T],
    ctx: &RecordContext<T>,
    lyap: LyapunovSpec<T>,
) -> Result<MetricsRecord> {
    let f = eval_objective(prob, x)?;
    let c = eval_constraints(prob, x)?;
    let feas = norm(&c);
    let l = lagrangian_value(f, &c, lambda, ctx.rho);
    let h = modified_value(l, feas, norm(lambda), ctx.beta);
    // The primal step sees the multiplier λ + ρw.
    let effective = axpy(lambda, ctx.rho, w);
    let kkt = kkt_residual(prob, x, &effective, ctx.kkt_probe)?;
    let g = penalty_value(f, feas, ctx.beta, ctx.rho);
    let set = prob.feasible_set();
    let n = x.len();
    let lyapunov = match lyap {
        LyapunovSpec::None => None,
        LyapunovSpec::Sgdm { tau, alpha } => Some(lyapunov_s(|_| g, set, x, aux, tau, alpha)?),
        LyapunovSpec::Adam { tau1, alpha, eps } => {
            Some(lyapunov_a(|_| g, set, x, &aux[..n], &aux[n..], tau1, alpha, eps)?)
        }
    };
    let f_val = f.as_f64();
    let feas_val = feas.as_f64();
    Ok(MetricsRecord {
        k,
        f_val,
        feas: feas_val,
        // Recomputed in f64 so the identity holds bit-exactly on the serialized values.
        g_val: penalty_value(f_val, feas_val, ctx.beta.as_f64(), ctx.rho.as_f64()),
        l_val: l.as_f64(),
        h_val: h.as_f64(),
        lambda_norm: norm(lambda).as_f64(),
        kkt_residual: kkt.as_f64(),
        tracker_err: norm(&sub(w, &c)).as_f64(),
        lyapunov: lyapunov.map(Scalar::as_f64),
    })
}
