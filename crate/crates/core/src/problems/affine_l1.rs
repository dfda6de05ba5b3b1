use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::geometry::FeasibleSet;
use crate::linalg::Jacobian;
use crate::oracle::Problem;
use crate::scalar::Scalar;

use super::{lp_oracle, sign0, OracleSolution, ProblemKind, ProblemRecipe};

const MAX_RETRIES: usize = 32;

/// `min ‖x - x₀‖₁  s.t. Ax = b, x ∈ [-1,1]ⁿ`.
#[derive(Debug, Clone)]
pub struct AffineL1<T: Scalar> {
    rows: Vec<Vec<T>>,
    b: Vec<T>,
    anchor: Vec<T>,
    set: FeasibleSet<T>,
    regularity: Option<T>,
}

impl<T: Scalar> AffineL1<T> {
    /// Instance from explicit data; `rows` holds `A` row by row.
    pub fn new(rows: Vec<Vec<T>>, b: Vec<T>, anchor: Vec<T>) -> Result<Self> {
        let n = anchor.len();
        if n == 0 || rows.len() != b.len() || rows.iter().any(|r| r.len() != n) {
            return Err(invalid("affine_l1 needs n >= 1 and A of shape p x n matching b"));
        }
        Ok(Self {
            rows,
            b,
            anchor,
            set: FeasibleSet::cube(n, -T::one(), T::one())?,
            regularity: None,
        })
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    pub fn rhs(&self) -> &[T] {
        &self.b
    }

    pub fn anchor(&self) -> &[T] {
        &self.anchor
    }
}

impl<T: Scalar> Problem<T> for AffineL1<T> {
    fn dim(&self) -> usize {
        self.anchor.len()
    }

    fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    fn feasible_set(&self) -> &FeasibleSet<T> {
        &self.set
    }

    fn objective(&self, x: &[T]) -> T {
        x.iter().zip(&self.anchor).map(|(&v, &a)| (v - a).abs()).sum()
    }

    fn objective_subgradient(&self, x: &[T]) -> Vec<T> {
        x.iter().zip(&self.anchor).map(|(&v, &a)| sign0(v - a)).collect()
    }

    fn constraints(&self, x: &[T]) -> Vec<T> {
        self.rows
            .iter()
            .zip(&self.b)
            .map(|(r, &bi)| r.iter().zip(x).map(|(&a, &v)| a * v).sum::<T>() - bi)
            .collect()
    }

    fn constraint_jacobian(&self, _x: &[T]) -> Jacobian<T> {
        Jacobian::from_columns(self.dim(), &self.rows).expect("rows have length n")
    }

    fn lipschitz_bound(&self) -> Option<T> {
        Some(T::from_usize(self.dim()).unwrap().sqrt())
    }

    fn regularity_constant(&self) -> Option<T> {
        self.regularity
    }
}

/// Orthonormal rows from Gram-Schmidt on Gaussian rows; `None` if the draw is
/// numerically rank deficient.
pub(super) fn orthonormal_rows(rng: &mut ChaCha8Rng, p: usize, n: usize) -> Option<Vec<Vec<f64>>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(p);
    for _ in 0..p {
        let mut r: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        for q in &rows {
            let d: f64 = r.iter().zip(q).map(|(a, b)| a * b).sum();
            r.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
        }
        let nrm = r.iter().map(|a| a * a).sum::<f64>().sqrt();
        if nrm < 1e-6 {
            return None;
        }
        r.iter_mut().for_each(|a| *a /= nrm);
        rows.push(r);
    }
    Some(rows)
}

pub(super) struct AffineDraw {
    pub rows: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub anchor: Vec<f64>,
}

/// Rows of `A`, `b = A x_feas` with `x_feas ∈ [-1/2, 1/2]ⁿ`, anchor `x₀ ∈ [-1,1]ⁿ`.
pub(super) fn draw_affine(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Result<AffineDraw> {
    for _ in 0..MAX_RETRIES {
        let Some(rows) = orthonormal_rows(rng, p, n) else {
            continue;
        };
        let x_feas: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
        let anchor: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = rows
            .iter()
            .map(|r| r.iter().zip(&x_feas).map(|(a, v)| a * v).sum())
            .collect();
        return Ok(AffineDraw { rows, b, anchor });
    }
    Err(invalid("could not draw a full-rank constraint matrix"))
}

fn cast<T: Scalar>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&a| T::lit(a)).collect()
}

/// Random instance with orthonormal `A` (so `ν = 1`), a nonempty feasible
/// region, the origin as starting point, and the brute-force LP solution
/// when `n <= lp_oracle::MAX_DIM`.
pub fn make_affine_l1<T: Scalar>(n: usize, p: usize, seed: u64) -> Result<ProblemRecipe<T, AffineL1<T>>> {
    if n == 0 || p > n {
        return Err(invalid(format!("affine_l1 needs 1 <= n and p <= n (got n={n}, p={p})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = draw_affine(&mut rng, n, p)?;
    let oracle = if n <= lp_oracle::MAX_DIM {
        let s = lp_oracle::solve(&draw.rows, &draw.b, &draw.anchor)
            .ok_or_else(|| invalid("generated affine_l1 instance has no feasible vertex"))?;
        Some(OracleSolution {
            x: cast(&s.x),
            objective: T::lit(s.value),
            multipliers: None,
        })
    } else {
        None
    };
    let mut problem = AffineL1::new(
        draw.rows.iter().map(|r| cast(r)).collect(),
        cast(&draw.b),
        cast(&draw.anchor),
    )?;
    problem.regularity = Some(T::one());
    Ok(ProblemRecipe {
        kind: ProblemKind::AffineL1,
        seed,
        problem,
        initial_point: vec![T::zero(); n],
        oracle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::estimate_regularity;
    use crate::oracle::{eval_constraints, eval_objective};

    #[test]
    fn explicit_examples() {
        let p = AffineL1::new(vec![vec![1.0, 1.0]], vec![1.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(eval_objective(&p, &[0.5, 0.5]).unwrap(), 1.0);
        assert_eq!(eval_constraints(&p, &[0.5, 0.5]).unwrap(), vec![0.0]);
        assert_eq!(p.constraint_jacobian(&[0.0, 0.0]).column(0), &[1.0, 1.0]);
    }

    #[test]
    fn generated_rows_are_orthonormal() {
        let r = make_affine_l1::<f64>(8, 3, 5).unwrap();
        let rows = r.problem.rows();
        for i in 0..3 {
            for j in 0..3 {
                let d: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum();
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn oracle_solution_round_trips_through_instance() {
        for seed in 0..5 {
            let r = make_affine_l1::<f64>(6, 2, seed).unwrap();
            let sol = r.oracle.unwrap();
            let feas = crate::linalg::norm(&eval_constraints(&r.problem, &sol.x).unwrap());
            assert!(feas <= 1e-9, "{feas}");
            assert!(r.problem.feasible_set().contains(&sol.x, 1e-12));
            assert!((eval_objective(&r.problem, &sol.x).unwrap() - sol.objective).abs() <= 1e-9);
        }
    }

    #[test]
    fn unit_regularity_on_interior_points() {
        let r = make_affine_l1::<f64>(10, 3, 11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let samples: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..10).map(|_| rng.random_range(-0.9..0.9)).collect())
            .collect();
        let nu = estimate_regularity(&r.problem, &samples).unwrap();
        assert!((0.99..=1.0 + 1e-9).contains(&nu), "{nu}");
        assert_eq!(r.problem.regularity_constant(), Some(1.0));
    }

    #[test]
    fn generation_is_deterministic() {
        let a = make_affine_l1::<f64>(5, 2, 3).unwrap();
        let b = make_affine_l1::<f64>(5, 2, 3).unwrap();
        assert_eq!(a.problem.rows(), b.problem.rows());
        assert_eq!(a.oracle, b.oracle);
    }
}
