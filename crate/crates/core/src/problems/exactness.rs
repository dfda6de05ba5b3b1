use crate::error::{invalid, Result};
use crate::geometry::FeasibleSet;
use crate::linalg::Jacobian;
use crate::oracle::Problem;
use crate::scalar::Scalar;

use super::{OracleSolution, ProblemKind, ProblemRecipe};

/// `min -Mx  s.t. x = 0, x ∈ [-1,1]`: Lipschitz constant `M`, `ν = 1`.
#[derive(Debug, Clone)]
pub struct Exactness1d<T: Scalar> {
    slope: T,
    set: FeasibleSet<T>,
}

impl<T: Scalar> Exactness1d<T> {
    pub fn slope(&self) -> T {
        self.slope
    }
}

impl<T: Scalar> Problem<T> for Exactness1d<T> {
    fn dim(&self) -> usize {
        1
    }
    fn num_constraints(&self) -> usize {
        1
    }
    fn feasible_set(&self) -> &FeasibleSet<T> {
        &self.set
    }
    fn objective(&self, x: &[T]) -> T {
        -self.slope * x[0]
    }
    fn objective_subgradient(&self, _x: &[T]) -> Vec<T> {
        vec![-self.slope]
    }
    fn constraints(&self, x: &[T]) -> Vec<T> {
        vec![x[0]]
    }
    fn constraint_jacobian(&self, _x: &[T]) -> Jacobian<T> {
        Jacobian::from_columns(1, &[vec![T::one()]]).expect("1 x 1")
    }
    fn lipschitz_bound(&self) -> Option<T> {
        Some(self.slope)
    }
    fn regularity_constant(&self) -> Option<T> {
        Some(T::one())
    }
}

/// Starts at `x = 1`; the only feasible point `x* = 0` is the oracle solution.
pub fn make_exactness_1d<T: Scalar>(slope: T) -> Result<ProblemRecipe<T, Exactness1d<T>>> {
    if !(slope > T::zero() && slope.is_finite()) {
        return Err(invalid("exactness_1d slope must be positive and finite"));
    }
    Ok(ProblemRecipe {
        kind: ProblemKind::Exactness1d,
        seed: 0,
        problem: Exactness1d {
            slope,
            set: FeasibleSet::cube(1, -T::one(), T::one())?,
        },
        initial_point: vec![T::one()],
        oracle: Some(OracleSolution {
            x: vec![T::zero()],
            objective: T::zero(),
            multipliers: Some(vec![slope]),
        }),
    })
}

/// Closed-form minimizer over `[-1,1]` of `g(x) = -Mx + β|x| + (ρ/2)x²`:
/// `0` when `β >= M`, otherwise `min{(M - β)/ρ, 1}`.
pub fn penalty_minimizer_1d<T: Scalar>(slope: T, beta: T, rho: T) -> T {
    if beta >= slope {
        T::zero()
    } else if rho > T::zero() {
        ((slope - beta) / rho).min(T::one())
    } else {
        T::one()
    }
}
