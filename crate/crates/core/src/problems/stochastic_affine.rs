use rand::Rng;

use crate::error::{invalid, Result};
use crate::geometry::FeasibleSet;
use crate::linalg::Jacobian;
use crate::oracle::{Problem, SampleToken, StochasticProblem};
use crate::scalar::Scalar;

use super::affine_l1::{make_affine_l1, AffineL1};
use super::{ProblemKind, ProblemRecipe};

/// Expectation version of [`AffineL1`]:
/// `C(x, ω) = Ax - b + s(E(ω)x - e(ω))`, `F(x, ω) = ‖x - x₀‖₁ + s⟨ζ(ω), x⟩`
/// with `E, e, ζ` uniform, zero-mean, and entries of `E, e` bounded by `1/√(n+1)`.
#[derive(Debug, Clone)]
pub struct StochasticAffine<T: Scalar> {
    base: AffineL1<T>,
    scale: T,
}

impl<T: Scalar> StochasticAffine<T> {
    pub fn base(&self) -> &AffineL1<T> {
        &self.base
    }

    pub fn noise_scale(&self) -> T {
        self.scale
    }

    fn entry_bound(&self) -> f64 {
        1.0 / ((self.base.dim() + 1) as f64).sqrt()
    }

    /// `(E, e)` for a constraint sample.
    fn perturbation(&self, token: SampleToken) -> (Vec<Vec<T>>, Vec<T>) {
        let (n, p) = (self.base.dim(), self.base.num_constraints());
        let m = self.entry_bound();
        let mut rng = token.rng();
        let e_mat = (0..p)
            .map(|_| (0..n).map(|_| T::lit(rng.random_range(-m..=m))).collect())
            .collect();
        let e_vec = (0..p).map(|_| T::lit(rng.random_range(-m..=m))).collect();
        (e_mat, e_vec)
    }
}

impl<T: Scalar> Problem<T> for StochasticAffine<T> {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn num_constraints(&self) -> usize {
        self.base.num_constraints()
    }
    fn feasible_set(&self) -> &FeasibleSet<T> {
        self.base.feasible_set()
    }
    fn objective(&self, x: &[T]) -> T {
        self.base.objective(x)
    }
    fn objective_subgradient(&self, x: &[T]) -> Vec<T> {
        self.base.objective_subgradient(x)
    }
    fn constraints(&self, x: &[T]) -> Vec<T> {
        self.base.constraints(x)
    }
    fn constraint_jacobian(&self, x: &[T]) -> Jacobian<T> {
        self.base.constraint_jacobian(x)
    }
    fn lipschitz_bound(&self) -> Option<T> {
        self.base.lipschitz_bound()
    }
    fn regularity_constant(&self) -> Option<T> {
        self.base.regularity_constant()
    }
}

impl<T: Scalar> StochasticProblem<T> for StochasticAffine<T> {
    fn sample_objective_subgradient(&self, x: &[T], token: SampleToken) -> Vec<T> {
        let mut rng = token.rng();
        self.base
            .objective_subgradient(x)
            .into_iter()
            .map(|d| d + self.scale * T::lit(rng.random_range(-1.0..=1.0)))
            .collect()
    }

    fn sample_objective(&self, x: &[T], token: SampleToken) -> T {
        let mut rng = token.rng();
        let tilt: T = x.iter().map(|&v| v * T::lit(rng.random_range(-1.0..=1.0))).sum();
        self.base.objective(x) + self.scale * tilt
    }

    fn sample_constraints(&self, x: &[T], token: SampleToken) -> Vec<T> {
        let mut c = self.base.constraints(x);
        if self.scale == T::zero() {
            return c;
        }
        let (e_mat, e_vec) = self.perturbation(token);
        for (ci, (row, ei)) in c.iter_mut().zip(e_mat.iter().zip(e_vec)) {
            let ex: T = row.iter().zip(x).map(|(&a, &v)| a * v).sum();
            *ci = *ci + self.scale * (ex - ei);
        }
        c
    }

    fn sample_constraint_jacobian(&self, x: &[T], token: SampleToken) -> Jacobian<T> {
        let mut j = self.base.constraint_jacobian(x);
        if self.scale == T::zero() {
            return j;
        }
        let (e_mat, _) = self.perturbation(token);
        for (col, row) in e_mat.iter().enumerate() {
            for (c, &e) in j.column_mut(col).iter_mut().zip(row) {
                *c = *c + self.scale * e;
            }
        }
        j
    }
}

/// Wraps the `affine_l1` instance drawn from the same seed; `noise_scale = 0`
/// gives back that instance exactly.
pub fn make_stochastic_affine<T: Scalar>(
    n: usize,
    p: usize,
    noise_scale: T,
    seed: u64,
) -> Result<ProblemRecipe<T, StochasticAffine<T>>> {
    if !(noise_scale >= T::zero() && noise_scale.is_finite()) {
        return Err(invalid("noise_scale must be finite and >= 0"));
    }
    let r = make_affine_l1(n, p, seed)?;
    Ok(ProblemRecipe {
        kind: ProblemKind::StochasticAffine,
        seed,
        problem: StochasticAffine {
            base: r.problem,
            scale: noise_scale,
        },
        initial_point: r.initial_point,
        oracle: r.oracle,
    })
}
