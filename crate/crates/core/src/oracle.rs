//! Problem model: value and subgradient-selection oracles for
//! `min f(x) s.t. c(x) = 0, x in X`, sample tokens for expectation
//! problems, and bounded evaluation noise.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::FeasibleSet;
use crate::linalg::{check_dim, check_finite, sub, Jacobian};
use crate::scalar::Scalar;

/// Opaque sample identifier `ω`. Per-sample oracles derive all of their
/// randomness from it, so the same token always denotes the same sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SampleToken(pub u64);

impl SampleToken {
    /// Deterministic generator for the randomness attached to this sample.
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

/// Deterministic oracles for a constrained problem. Implementations must be
/// immutable after construction.
///
/// Subgradient and Jacobian oracles return one fixed selection from a
/// conservative field; at kinks the selection is deterministic.
pub trait Problem<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;
    fn num_constraints(&self) -> usize;
    fn feasible_set(&self) -> &FeasibleSet<T>;

    fn objective(&self, x: &[T]) -> T;
    fn objective_subgradient(&self, x: &[T]) -> Vec<T>;
    fn constraints(&self, x: &[T]) -> Vec<T>;
    /// `n x p` selection; column `j` is a subgradient of `c_j`.
    fn constraint_jacobian(&self, x: &[T]) -> Jacobian<T>;

    /// Subgradient selection used by the solvers. Problems with a finite-sum
    /// objective may answer with a minibatch estimate keyed by `token`.
    fn sampled_objective_subgradient(&self, x: &[T], _token: SampleToken) -> Vec<T> {
        self.objective_subgradient(x)
    }

    /// Lipschitz constant of `f` over `X`, when known.
    fn lipschitz_bound(&self) -> Option<T> {
        None
    }

    /// Constant `ν` with `ν ||c(x)|| <= dist(-J c(x), N_X(x))`, when known.
    fn regularity_constant(&self) -> Option<T> {
        None
    }
}

/// Problem whose objective and constraints are expectations
/// `f = E[F(·, ω_f)]`, `c = E[C(·, ω_c)]`. The [`Problem`] supertrait
/// exposes the expected quantities, used for diagnostics only.
pub trait StochasticProblem<T: Scalar>: Problem<T> {
    fn sample_objective_subgradient(&self, x: &[T], token: SampleToken) -> Vec<T>;
    fn sample_constraints(&self, x: &[T], token: SampleToken) -> Vec<T>;
    fn sample_constraint_jacobian(&self, x: &[T], token: SampleToken) -> Jacobian<T>;

    fn sample_objective(&self, x: &[T], _token: SampleToken) -> T {
        self.objective(x)
    }
}

/// Seeded stream of sample tokens.
#[derive(Debug, Clone)]
pub struct Sampler {
    rng: ChaCha8Rng,
    drawn: u64,
    limit: Option<u64>,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            drawn: 0,
            limit: None,
        }
    }

    /// Sampler that refuses to produce more than `limit` tokens.
    pub fn with_limit(seed: u64, limit: u64) -> Self {
        Self {
            limit: Some(limit),
            ..Self::new(seed)
        }
    }

    pub fn draws(&self) -> u64 {
        self.drawn
    }

    pub fn next_token(&mut self) -> Result<SampleToken> {
        if let Some(limit) = self.limit {
            if self.drawn >= limit {
                return Err(Error::SamplerExhausted(limit));
            }
        }
        self.drawn += 1;
        Ok(SampleToken(self.rng.next_u64()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    None,
    UniformBox,
    TruncatedGaussian,
}

/// Additive, independent, zero-mean noise with `||ξ||_∞ <= bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel<T> {
    pub kind: NoiseKind,
    pub bound: T,
    pub seed: u64,
}

impl<T: Scalar> NoiseModel<T> {
    pub fn none() -> Self {
        Self {
            kind: NoiseKind::None,
            bound: T::zero(),
            seed: 0,
        }
    }

    pub fn uniform(bound: T, seed: u64) -> Self {
        Self {
            kind: NoiseKind::UniformBox,
            bound,
            seed,
        }
    }

    pub fn truncated_gaussian(bound: T, seed: u64) -> Self {
        Self {
            kind: NoiseKind::TruncatedGaussian,
            bound,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bound >= T::zero()) || !self.bound.is_finite() {
            return Err(invalid("noise bound must be finite and nonnegative"));
        }
        Ok(())
    }

    pub fn source(&self) -> NoiseSource<T> {
        NoiseSource {
            model: *self,
            rng: ChaCha8Rng::seed_from_u64(self.seed),
        }
    }
}

/// Stateful draw stream for a [`NoiseModel`].
#[derive(Debug, Clone)]
pub struct NoiseSource<T> {
    model: NoiseModel<T>,
    rng: ChaCha8Rng,
}

impl<T: Scalar> NoiseSource<T> {
    pub fn model(&self) -> &NoiseModel<T> {
        &self.model
    }

    pub fn draw(&mut self, n: usize) -> Vec<T> {
        let m = self.model.bound.as_f64();
        match self.model.kind {
            _ if m == 0.0 => vec![T::zero(); n],
            NoiseKind::None => vec![T::zero(); n],
            NoiseKind::UniformBox => (0..n)
                .map(|_| {
                    T::lit(self.rng.random_range(-m..=m))
                        .max(-self.model.bound)
                        .min(self.model.bound)
                })
                .collect(),
            NoiseKind::TruncatedGaussian => {
                // Standard deviation m/2, rejected outside [-m, m]; symmetric so zero-mean.
                let normal = Normal::new(0.0, m / 2.0).expect("valid normal parameters");
                (0..n)
                    .map(|_| loop {
                        let z: f64 = normal.sample(&mut self.rng);
                        if z.abs() <= m {
                            break T::lit(z).max(-self.model.bound).min(self.model.bound);
                        }
                    })
                    .collect()
            }
        }
    }
}

/// `f(x)` with dimension and finiteness checks.
pub fn eval_objective<T: Scalar, P: Problem<T> + ?Sized>(prob: &P, x: &[T]) -> Result<T> {
    check_dim("objective argument", prob.dim(), x.len())?;
    let v = prob.objective(x);
    if !v.is_finite() {
        return Err(Error::NonFinite("objective oracle"));
    }
    Ok(v)
}

/// `d + ξ` where `d` is the fixed selection from the objective's conservative field.
pub fn sample_objective_subgradient<T: Scalar, P: Problem<T> + ?Sized>(
    prob: &P,
    x: &[T],
    noise: &mut NoiseSource<T>,
) -> Result<Vec<T>> {
    check_dim("subgradient argument", prob.dim(), x.len())?;
    let d = prob.objective_subgradient(x);
    check_dim("subgradient oracle output", prob.dim(), d.len())?;
    check_finite("subgradient oracle", &d)?;
    let xi = noise.draw(d.len());
    Ok(d.iter().zip(&xi).map(|(&a, &b)| a + b).collect())
}

/// `c(x)` with dimension and finiteness checks.
pub fn eval_constraints<T: Scalar, P: Problem<T> + ?Sized>(prob: &P, x: &[T]) -> Result<Vec<T>> {
    check_dim("constraint argument", prob.dim(), x.len())?;
    let c = prob.constraints(x);
    check_dim("constraint oracle output", prob.num_constraints(), c.len())?;
    check_finite("constraint oracle", &c)?;
    Ok(c)
}

/// Jacobian selection with shape and finiteness checks.
pub fn eval_constraint_jacobian<T: Scalar, P: Problem<T> + ?Sized>(prob: &P, x: &[T]) -> Result<Jacobian<T>> {
    check_dim("jacobian argument", prob.dim(), x.len())?;
    let j = prob.constraint_jacobian(x);
    check_dim("jacobian rows", prob.dim(), j.rows())?;
    check_dim("jacobian columns", prob.num_constraints(), j.cols())?;
    if !j.is_finite() {
        return Err(Error::NonFinite("jacobian oracle"));
    }
    Ok(j)
}

/// Constraint samples at two consecutive points under one shared token, plus
/// an independent Jacobian sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintPair<T> {
    pub at_x: Vec<T>,
    pub at_next: Vec<T>,
    pub jacobian: Jacobian<T>,
}

/// Draws `ω_c` for the pair and a fresh `ω̃_c` for the Jacobian (evaluated at `x`).
pub fn sample_constraint_pair<T: Scalar, P: StochasticProblem<T> + ?Sized>(
    prob: &P,
    sampler: &mut Sampler,
    x: &[T],
    x_next: &[T],
) -> Result<ConstraintPair<T>> {
    check_dim("constraint pair argument", prob.dim(), x.len())?;
    check_dim("constraint pair argument", prob.dim(), x_next.len())?;
    let shared = sampler.next_token()?;
    let fresh = sampler.next_token()?;
    let at_x = prob.sample_constraints(x, shared);
    let at_next = prob.sample_constraints(x_next, shared);
    check_finite("sampled constraint oracle", &at_x)?;
    check_finite("sampled constraint oracle", &at_next)?;
    let jacobian = prob.sample_constraint_jacobian(x, fresh);
    if !jacobian.is_finite() {
        return Err(Error::NonFinite("sampled jacobian oracle"));
    }
    Ok(ConstraintPair {
        at_x,
        at_next,
        jacobian,
    })
}

/// Views a deterministic problem as a degenerate expectation problem.
#[derive(Debug, Clone)]
pub struct AsStochastic<P>(pub P);

impl<T: Scalar, P: Problem<T>> Problem<T> for AsStochastic<P> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn num_constraints(&self) -> usize {
        self.0.num_constraints()
    }
    fn feasible_set(&self) -> &FeasibleSet<T> {
        self.0.feasible_set()
    }
    fn objective(&self, x: &[T]) -> T {
        self.0.objective(x)
    }
    fn objective_subgradient(&self, x: &[T]) -> Vec<T> {
        self.0.objective_subgradient(x)
    }
    fn constraints(&self, x: &[T]) -> Vec<T> {
        self.0.constraints(x)
    }
    fn constraint_jacobian(&self, x: &[T]) -> Jacobian<T> {
        self.0.constraint_jacobian(x)
    }
    fn sampled_objective_subgradient(&self, x: &[T], token: SampleToken) -> Vec<T> {
        self.0.sampled_objective_subgradient(x, token)
    }
    fn lipschitz_bound(&self) -> Option<T> {
        self.0.lipschitz_bound()
    }
    fn regularity_constant(&self) -> Option<T> {
        self.0.regularity_constant()
    }
}

impl<T: Scalar, P: Problem<T>> StochasticProblem<T> for AsStochastic<P> {
    fn sample_objective_subgradient(&self, x: &[T], token: SampleToken) -> Vec<T> {
        self.0.sampled_objective_subgradient(x, token)
    }
    fn sample_constraints(&self, x: &[T], _token: SampleToken) -> Vec<T> {
        self.0.constraints(x)
    }
    fn sample_constraint_jacobian(&self, x: &[T], _token: SampleToken) -> Jacobian<T> {
        self.0.constraint_jacobian(x)
    }
}

type ScalarFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
type VectorFn<T> = Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;
type JacobianFn<T> = Arc<dyn Fn(&[T]) -> Jacobian<T> + Send + Sync>;

/// Problem assembled from closures.
#[derive(Clone)]
pub struct ProblemInstance<T: Scalar> {
    dim: usize,
    num_constraints: usize,
    set: FeasibleSet<T>,
    objective: ScalarFn<T>,
    subgradient: VectorFn<T>,
    constraints: VectorFn<T>,
    jacobian: JacobianFn<T>,
    lipschitz: Option<T>,
    regularity: Option<T>,
}

impl<T: Scalar> std::fmt::Debug for ProblemInstance<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("dim", &self.dim)
            .field("num_constraints", &self.num_constraints)
            .field("set", &self.set)
            .finish_non_exhaustive()
    }
}

impl<T: Scalar> ProblemInstance<T> {
    /// Unconstrained-by-equalities problem (`p = 0`) with the given objective.
    pub fn new(
        dim: usize,
        set: FeasibleSet<T>,
        objective: impl Fn(&[T]) -> T + Send + Sync + 'static,
        subgradient: impl Fn(&[T]) -> Vec<T> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            num_constraints: 0,
            set,
            objective: Arc::new(objective),
            subgradient: Arc::new(subgradient),
            constraints: Arc::new(|_| Vec::new()),
            jacobian: Arc::new(move |_| Jacobian::zeros(dim, 0)),
            lipschitz: None,
            regularity: None,
        }
    }

    pub fn with_constraints(
        mut self,
        num_constraints: usize,
        constraints: impl Fn(&[T]) -> Vec<T> + Send + Sync + 'static,
        jacobian: impl Fn(&[T]) -> Jacobian<T> + Send + Sync + 'static,
    ) -> Self {
        self.num_constraints = num_constraints;
        self.constraints = Arc::new(constraints);
        self.jacobian = Arc::new(jacobian);
        self
    }

    pub fn with_lipschitz_bound(mut self, m: T) -> Result<Self> {
        if !(m > T::zero()) {
            return Err(invalid("Lipschitz bound must be positive"));
        }
        self.lipschitz = Some(m);
        Ok(self)
    }

    pub fn with_regularity_constant(mut self, nu: T) -> Result<Self> {
        if !(nu > T::zero()) {
            return Err(invalid("regularity constant must be positive"));
        }
        self.regularity = Some(nu);
        Ok(self)
    }
}

impl<T: Scalar> Problem<T> for ProblemInstance<T> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn num_constraints(&self) -> usize {
        self.num_constraints
    }
    fn feasible_set(&self) -> &FeasibleSet<T> {
        &self.set
    }
    fn objective(&self, x: &[T]) -> T {
        (self.objective)(x)
    }
    fn objective_subgradient(&self, x: &[T]) -> Vec<T> {
        (self.subgradient)(x)
    }
    fn constraints(&self, x: &[T]) -> Vec<T> {
        (self.constraints)(x)
    }
    fn constraint_jacobian(&self, x: &[T]) -> Jacobian<T> {
        (self.jacobian)(x)
    }
    fn lipschitz_bound(&self) -> Option<T> {
        self.lipschitz
    }
    fn regularity_constant(&self) -> Option<T> {
        self.regularity
    }
}

/// Wraps a problem so that the `k`-th objective subgradient query is evaluated
/// at a point displaced by at most `radius0 / sqrt(k + 1)`, i.e. a selection
/// from a decaying expansion of the conservative field.
pub struct InexactSubgradient<P> {
    inner: P,
    radius0: f64,
    seed: u64,
    calls: AtomicU64,
}

impl<P> InexactSubgradient<P> {
    pub fn new(inner: P, radius0: f64, seed: u64) -> Self {
        Self {
            inner,
            radius0,
            seed,
            calls: AtomicU64::new(0),
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn radius_at(&self, k: u64) -> f64 {
        self.radius0 / ((k + 1) as f64).sqrt()
    }

    fn displaced<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let k = self.calls.fetch_add(1, Ordering::Relaxed);
        let radius = self.radius_at(k);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let dir: Vec<f64> = x.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
        let len = dir.iter().map(|d| d * d).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let scale = radius * rng.random_range(0.0..1.0) / len;
        x.iter().zip(&dir).map(|(&xi, &d)| xi + T::lit(d * scale)).collect()
    }
}

impl<T: Scalar, P: Problem<T>> Problem<T> for InexactSubgradient<P> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn num_constraints(&self) -> usize {
        self.inner.num_constraints()
    }
    fn feasible_set(&self) -> &FeasibleSet<T> {
        self.inner.feasible_set()
    }
    fn objective(&self, x: &[T]) -> T {
        self.inner.objective(x)
    }
    fn objective_subgradient(&self, x: &[T]) -> Vec<T> {
        self.inner.objective_subgradient(&self.displaced(x))
    }
    fn constraints(&self, x: &[T]) -> Vec<T> {
        self.inner.constraints(x)
    }
    fn constraint_jacobian(&self, x: &[T]) -> Jacobian<T> {
        self.inner.constraint_jacobian(x)
    }
    fn sampled_objective_subgradient(&self, x: &[T], token: SampleToken) -> Vec<T> {
        self.inner.sampled_objective_subgradient(&self.displaced(x), token)
    }
    fn lipschitz_bound(&self) -> Option<T> {
        self.inner.lipschitz_bound()
    }
    fn regularity_constant(&self) -> Option<T> {
        self.inner.regularity_constant()
    }
}

/// `C(x_next, ω) - C(x, ω)`, exposed for the correction tracker tests.
pub fn correction_term<T: Scalar>(pair: &ConstraintPair<T>) -> Vec<T> {
    sub(&pair.at_next, &pair.at_x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l1_problem() -> ProblemInstance<f64> {
        ProblemInstance::new(
            2,
            FeasibleSet::WholeSpace,
            |x: &[f64]| x.iter().map(|v| v.abs()).sum(),
            |x: &[f64]| x.iter().map(|&v| sign0(v)).collect(),
        )
        .with_constraints(
            1,
            |x: &[f64]| vec![x[0] + x[1] - 1.0],
            |_| Jacobian::from_columns(2, &[vec![1.0, 1.0]]).unwrap(),
        )
    }

    fn sign0(v: f64) -> f64 {
        if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else {
            0.0
        }
    }

    #[test]
    fn objective_and_constraint_examples() {
        let p = l1_problem();
        assert_eq!(eval_objective(&p, &[1.0, -2.0]).unwrap(), 3.0);
        assert_eq!(eval_constraints(&p, &[1.0, 0.0]).unwrap(), vec![0.0]);
        assert!(matches!(
            eval_objective(&p, &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        let zero = ProblemInstance::new(3, FeasibleSet::WholeSpace, |_: &[f64]| 0.0, |_: &[f64]| vec![0.0; 3]);
        assert_eq!(eval_objective(&zero, &[4.0, 5.0, 6.0]).unwrap(), 0.0);
    }

    #[test]
    fn non_finite_oracles_are_reported() {
        let p = ProblemInstance::new(
            1,
            FeasibleSet::WholeSpace,
            |_: &[f64]| f64::NAN,
            |_: &[f64]| vec![f64::INFINITY],
        );
        assert_eq!(eval_objective(&p, &[0.0]), Err(Error::NonFinite("objective oracle")));
        let mut noise = NoiseModel::none().source();
        assert!(sample_objective_subgradient(&p, &[0.0], &mut noise).is_err());
    }

    #[test]
    fn subgradient_selection_examples() {
        let p = l1_problem();
        let mut none = NoiseModel::none().source();
        assert_eq!(
            sample_objective_subgradient(&p, &[2.0, -3.0], &mut none).unwrap(),
            vec![1.0, -1.0]
        );
        assert_eq!(
            sample_objective_subgradient(&p, &[0.0, 0.0], &mut none).unwrap(),
            vec![0.0, 0.0]
        );
        let mut noisy = NoiseModel::uniform(0.1, 3).source();
        for _ in 0..1000 {
            let g = sample_objective_subgradient(&p, &[2.0, -3.0], &mut noisy).unwrap();
            assert!((g[0] - 1.0).abs() <= 0.1 && (g[1] + 1.0).abs() <= 0.1);
        }
    }

    #[test]
    fn noise_is_bounded_zero_mean_and_deterministic() {
        for model in [
            NoiseModel::<f64>::uniform(0.3, 42),
            NoiseModel::truncated_gaussian(0.3, 42),
        ] {
            let mut src = model.source();
            let draws = 100_000;
            let mut mean = [0.0; 3];
            for _ in 0..draws {
                let xi = src.draw(3);
                for (m, x) in mean.iter_mut().zip(&xi) {
                    assert!(x.abs() <= 0.3);
                    *m += x / draws as f64;
                }
            }
            let tol = 4.0 * 0.3 / (draws as f64).sqrt();
            assert!(mean.iter().all(|m| m.abs() <= tol), "{mean:?} > {tol}");
            let a = model.source().draw(16);
            let b = model.source().draw(16);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn degenerate_sampler_pairs() {
        let p = AsStochastic(l1_problem());
        let mut sampler = Sampler::new(1);
        let pair = sample_constraint_pair(&p, &mut sampler, &[0.5, 0.5], &[1.0, 2.0]).unwrap();
        assert_eq!(pair.at_x, vec![0.0]);
        assert_eq!(pair.at_next, vec![2.0]);
        assert_eq!(correction_term(&pair), vec![2.0]);
    }

    #[test]
    fn sampler_limit_and_determinism() {
        let mut s = Sampler::with_limit(9, 2);
        let a = s.next_token().unwrap();
        s.next_token().unwrap();
        assert_eq!(s.next_token(), Err(Error::SamplerExhausted(2)));
        assert_eq!(Sampler::new(9).next_token().unwrap(), a);
    }

    #[test]
    fn inexact_wrapper_radius_decays() {
        let p = InexactSubgradient::new(l1_problem(), 0.5, 3);
        // Far from kinks the displaced selection is unchanged.
        for _ in 0..10 {
            assert_eq!(p.objective_subgradient(&[2.0, -3.0]), vec![1.0, -1.0]);
        }
        assert_eq!(p.calls(), 10);
        assert!(p.radius_at(99) < p.radius_at(0) / 9.0);
    }
}
