//! Closed convex feasible sets: Euclidean projection, preconditioned proximal
//! mapping and normal-cone distances.

use crate::error::{invalid, Error, Result};
use crate::linalg::{check_dim, norm};
use crate::scalar::Scalar;

/// Membership tolerance used for "x in set" preconditions.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

const BISECTION_MAX_ITERS: usize = 300;

/// A block of a product set: `dim` consecutive coordinates constrained by `set`.
#[derive(Debug, Clone, PartialEq)]
pub struct Block<T> {
    pub dim: usize,
    pub set: FeasibleSet<T>,
}

/// Nonempty closed convex subset of R^n.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet<T> {
    WholeSpace,
    Box { lower: Vec<T>, upper: Vec<T> },
    Ball { center: Vec<T>, radius: T },
    NonnegativeOrthant,
    Product(Vec<Block<T>>),
}

impl<T: Scalar> FeasibleSet<T> {
    pub fn whole_space() -> Self {
        Self::WholeSpace
    }

    pub fn nonnegative_orthant() -> Self {
        Self::NonnegativeOrthant
    }

    pub fn boxed(lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        check_dim("box bounds", lower.len(), upper.len())?;
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(invalid("box requires lower <= upper coordinatewise"));
        }
        Ok(Self::Box { lower, upper })
    }

    /// The cube `[lo, hi]^n`.
    pub fn cube(n: usize, lo: T, hi: T) -> Result<Self> {
        Self::boxed(vec![lo; n], vec![hi; n])
    }

    pub fn ball(center: Vec<T>, radius: T) -> Result<Self> {
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(invalid("ball radius must be positive and finite"));
        }
        Ok(Self::Ball { center, radius })
    }

    pub fn product(blocks: Vec<Block<T>>) -> Result<Self> {
        for b in &blocks {
            if let Some(d) = b.set.fixed_dim() {
                check_dim("product block", b.dim, d)?;
            }
        }
        Ok(Self::Product(blocks))
    }

    /// Dimension pinned by the set description, if any.
    pub fn fixed_dim(&self) -> Option<usize> {
        match self {
            Self::WholeSpace | Self::NonnegativeOrthant => None,
            Self::Box { lower, .. } => Some(lower.len()),
            Self::Ball { center, .. } => Some(center.len()),
            Self::Product(blocks) => Some(blocks.iter().map(|b| b.dim).sum()),
        }
    }

    fn check(&self, x: &[T]) -> Result<()> {
        match self.fixed_dim() {
            Some(d) => check_dim("feasible set", d, x.len()),
            None => Ok(()),
        }
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, x: &[T]) -> Result<Vec<T>> {
        self.check(x)?;
        let mut out = x.to_vec();
        self.project_in_place(&mut out);
        Ok(out)
    }

    fn project_in_place(&self, x: &mut [T]) {
        match self {
            Self::WholeSpace => {}
            Self::NonnegativeOrthant => x.iter_mut().for_each(|v| *v = v.max(T::zero())),
            Self::Box { lower, upper } => {
                for ((v, &l), &u) in x.iter_mut().zip(lower).zip(upper) {
                    *v = v.max(l).min(u);
                }
            }
            Self::Ball { center, radius } => {
                let r = dist_to(x, center);
                // Points within rounding of the sphere count as inside, so projection is idempotent.
                if r > *radius * (T::one() + T::lit(64.0) * T::epsilon()) {
                    let s = *radius / r;
                    for (v, &c) in x.iter_mut().zip(center) {
                        *v = c + (*v - c) * s;
                    }
                }
            }
            Self::Product(blocks) => {
                let mut start = 0;
                for b in blocks {
                    b.set.project_in_place(&mut x[start..start + b.dim]);
                    start += b.dim;
                }
            }
        }
    }

    /// Distance-like violation of membership (0 inside).
    pub fn violation(&self, x: &[T]) -> Result<T> {
        self.check(x)?;
        Ok(self.violation_unchecked(x))
    }

    fn violation_unchecked(&self, x: &[T]) -> T {
        match self {
            Self::WholeSpace => T::zero(),
            Self::NonnegativeOrthant => x.iter().fold(T::zero(), |m, &v| m.max(-v)),
            Self::Box { lower, upper } => x
                .iter()
                .zip(lower)
                .zip(upper)
                .fold(T::zero(), |m, ((&v, &l), &u)| m.max(l - v).max(v - u)),
            Self::Ball { center, radius } => (dist_to(x, center) - *radius).max(T::zero()),
            Self::Product(blocks) => {
                let mut start = 0;
                let mut worst = T::zero();
                for b in blocks {
                    worst = worst.max(b.set.violation_unchecked(&x[start..start + b.dim]));
                    start += b.dim;
                }
                worst
            }
        }
    }

    pub fn contains(&self, x: &[T], tol: T) -> bool {
        self.violation(x).map(|v| v <= tol).unwrap_or(false)
    }

    /// `argmin_{z in X} <y, z - x> + 1/2 <v ⊙ (z - x), z - x>` for `v > 0`.
    pub fn prox_preconditioned(&self, x: &[T], y: &[T], v: &[T]) -> Result<Vec<T>> {
        self.check(x)?;
        check_dim("prox direction", x.len(), y.len())?;
        check_dim("prox weights", x.len(), v.len())?;
        if v.iter().any(|&w| !(w > T::zero())) {
            return Err(Error::NonPositiveWeight);
        }
        let mut out = vec![T::zero(); x.len()];
        self.prox_into(x, y, v, &mut out);
        Ok(out)
    }

    fn prox_into(&self, x: &[T], y: &[T], v: &[T], out: &mut [T]) {
        match self {
            // Uniform weights: the prox is the projection of the unconstrained minimizer.
            Self::Ball { .. } if v.iter().all(|&w| w == v[0]) => {
                for i in 0..x.len() {
                    out[i] = x[i] - y[i] / v[i];
                }
                self.project_in_place(out);
            }
            Self::Ball { center, radius } => weighted_ball_prox(center, *radius, x, y, v, out),
            Self::Product(blocks) => {
                let mut start = 0;
                for b in blocks {
                    let r = start..start + b.dim;
                    b.set
                        .prox_into(&x[r.clone()], &y[r.clone()], &v[r.clone()], &mut out[r]);
                    start += b.dim;
                }
            }
            // Separable sets: clamp the unconstrained minimizer coordinatewise.
            _ => {
                for i in 0..x.len() {
                    out[i] = x[i] - y[i] / v[i];
                }
                self.project_in_place(out);
            }
        }
    }

    /// `dist(-v, N_X(x))`, the stationarity residual of direction `v` at `x`.
    pub fn normal_cone_distance(&self, x: &[T], v: &[T]) -> Result<T> {
        self.check(x)?;
        check_dim("normal cone direction", x.len(), v.len())?;
        let violation = self.violation_unchecked(x);
        if violation > T::lit(MEMBERSHIP_TOL) {
            return Err(Error::NotInSet {
                violation: violation.as_f64(),
            });
        }
        Ok(self.normal_cone_dist_sq(x, v).sqrt())
    }

    fn normal_cone_dist_sq(&self, x: &[T], v: &[T]) -> T {
        let tol = T::lit(MEMBERSHIP_TOL);
        match self {
            Self::WholeSpace => v.iter().map(|&a| a * a).sum(),
            Self::NonnegativeOrthant => x
                .iter()
                .zip(v)
                .map(|(&xi, &vi)| {
                    // Active coordinate: N = (-inf, 0], so only vi < 0 is a residual.
                    let r = if xi <= tol { (-vi).max(T::zero()) } else { vi.abs() };
                    r * r
                })
                .sum(),
            Self::Box { lower, upper } => x
                .iter()
                .zip(v)
                .zip(lower.iter().zip(upper))
                .map(|((&xi, &vi), (&l, &u))| {
                    let at_lower = xi <= l + tol;
                    let at_upper = xi >= u - tol;
                    let r = match (at_lower, at_upper) {
                        (true, true) => T::zero(),
                        (false, true) => vi.max(T::zero()),
                        (true, false) => (-vi).max(T::zero()),
                        (false, false) => vi.abs(),
                    };
                    r * r
                })
                .sum(),
            Self::Ball { center, radius } => {
                let offset: Vec<T> = x.iter().zip(center).map(|(&a, &c)| a - c).collect();
                let r = norm(&offset);
                let v_sq: T = v.iter().map(|&a| a * a).sum();
                if r < *radius - tol || r == T::zero() {
                    return v_sq;
                }
                // N_X(x) is the ray spanned by the outward normal.
                let s = -v.iter().zip(&offset).map(|(&a, &o)| a * o).sum::<T>() / r;
                if s > T::zero() {
                    (v_sq - s * s).max(T::zero())
                } else {
                    v_sq
                }
            }
            Self::Product(blocks) => {
                let mut start = 0;
                let mut total = T::zero();
                for b in blocks {
                    let r = start..start + b.dim;
                    total = total + b.set.normal_cone_dist_sq(&x[r.clone()], &v[r]);
                    start += b.dim;
                }
                total
            }
        }
    }
}

fn dist_to<T: Scalar>(x: &[T], c: &[T]) -> T {
    x.iter().zip(c).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt()
}

/// Weighted prox onto a ball via bisection on the multiplier `mu` of
/// `||z - c|| <= r`: `z(mu) - c = v ⊙ (u - c) / (v + mu)`, `u = x - y / v`.
fn weighted_ball_prox<T: Scalar>(c: &[T], r: T, x: &[T], y: &[T], v: &[T], out: &mut [T]) {
    let scaled: Vec<T> = (0..x.len()).map(|i| v[i] * (x[i] - y[i] / v[i] - c[i])).collect();
    let radius_at = |mu: T| -> T {
        scaled
            .iter()
            .zip(v)
            .map(|(&s, &vi)| {
                let d = s / (vi + mu);
                d * d
            })
            .sum::<T>()
            .sqrt()
    };
    if radius_at(T::zero()) <= r {
        for i in 0..x.len() {
            out[i] = c[i] + scaled[i] / v[i];
        }
        return;
    }
    let mut lo = T::zero();
    let mut hi = norm(&scaled) / r;
    for _ in 0..BISECTION_MAX_ITERS {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if radius_at(mid) > r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // `hi` satisfies the norm constraint; the active constraint puts the
    // minimizer on the sphere, so rescale onto it.
    for i in 0..x.len() {
        out[i] = c[i] + scaled[i] / (v[i] + hi);
    }
    let d = dist_to(out, c);
    if d > T::zero() {
        let s = r / d;
        for i in 0..x.len() {
            out[i] = c[i] + (out[i] - c[i]) * s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_box(n: usize) -> FeasibleSet<f64> {
        FeasibleSet::cube(n, -1.0, 1.0).unwrap()
    }

    #[test]
    fn projection_examples() {
        assert_eq!(unit_box(1).project(&[1.5]).unwrap(), vec![1.0]);
        assert_eq!(
            FeasibleSet::<f64>::WholeSpace.project(&[3.0, -7.0]).unwrap(),
            vec![3.0, -7.0]
        );
        let ball: FeasibleSet<f64> = FeasibleSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        let p = ball.project(&[3.0, 4.0]).unwrap();
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn construction_rejects_bad_sets() {
        assert!(FeasibleSet::boxed(vec![1.0], vec![0.0]).is_err());
        assert!(FeasibleSet::ball(vec![0.0], 0.0).is_err());
        assert!(FeasibleSet::product(vec![Block {
            dim: 2,
            set: unit_box(3)
        }])
        .is_err());
        assert!(unit_box(2).project(&[0.0]).is_err());
    }

    #[test]
    fn prox_examples() {
        let whole = FeasibleSet::<f64>::WholeSpace;
        assert_eq!(whole.prox_preconditioned(&[0.0], &[0.5], &[1.0]).unwrap(), vec![-0.5]);
        assert_eq!(
            unit_box(1).prox_preconditioned(&[0.0], &[2.0], &[1.0]).unwrap(),
            vec![-1.0]
        );
        assert_eq!(
            whole.prox_preconditioned(&[0.0], &[1.0], &[0.0]),
            Err(Error::NonPositiveWeight)
        );
    }

    // Dense-grid minimization of the preconditioned prox objective on the unit disc.
    #[test]
    fn weighted_ball_prox_matches_grid_oracle() {
        let ball: FeasibleSet<f64> = FeasibleSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        let z = ball.prox_preconditioned(&[0.0, 0.0], &[3.0, 0.0], &[1.0, 4.0]).unwrap();

        let objective = |a: f64, b: f64| 3.0 * a + 0.5 * (a * a + 4.0 * b * b);
        // Optimum lies on the boundary; scan the circle densely, then refine.
        let mut best = (f64::INFINITY, 0.0);
        let m = 2_000_000;
        for i in 0..m {
            let t = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
            let val = objective(t.cos(), t.sin());
            if val < best.0 {
                best = (val, t);
            }
        }
        let (zx, zy) = (best.1.cos(), best.1.sin());
        assert!(
            (z[0] - zx).abs() < 1e-6 && (z[1] - zy).abs() < 1e-6,
            "{z:?} vs ({zx}, {zy})"
        );
        // Interior candidates are never better.
        for i in 0..200 {
            for j in 0..200 {
                let (a, b) = (-1.0 + i as f64 / 100.0, -1.0 + j as f64 / 100.0);
                if a * a + b * b <= 1.0 {
                    assert!(objective(a, b) >= objective(z[0], z[1]) - 1e-9);
                }
            }
        }
    }

    #[test]
    fn normal_cone_examples() {
        let whole = FeasibleSet::<f64>::WholeSpace;
        assert_eq!(whole.normal_cone_distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(
            unit_box(2).normal_cone_distance(&[1.0, 0.0], &[-2.0, 1.0]).unwrap(),
            1.0
        );
        let ball: FeasibleSet<f64> = FeasibleSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        assert_eq!(ball.normal_cone_distance(&[0.1, 0.2], &[3.0, 4.0]).unwrap(), 5.0);
        // -v along the outward normal at a boundary point is in the cone.
        assert!(ball.normal_cone_distance(&[0.6, 0.8], &[-0.6, -0.8]).unwrap() < 1e-15);
        // Tangential component survives.
        let d = ball.normal_cone_distance(&[1.0, 0.0], &[-1.0, 2.0]).unwrap();
        assert!((d - 2.0).abs() < 1e-15);
        assert!(matches!(
            unit_box(1).normal_cone_distance(&[1.5], &[0.0]),
            Err(Error::NotInSet { .. })
        ));
    }

    #[test]
    fn normal_cone_zero_iff_in_cone_on_active_faces() {
        let orth = FeasibleSet::<f64>::NonnegativeOrthant;
        assert_eq!(orth.normal_cone_distance(&[0.0, 2.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(orth.normal_cone_distance(&[0.0, 2.0], &[-1.0, 0.0]).unwrap(), 1.0);
        let b = unit_box(2);
        assert_eq!(b.normal_cone_distance(&[-1.0, 1.0], &[1.0, -1.0]).unwrap(), 0.0);
        assert!(b.normal_cone_distance(&[-1.0, 1.0], &[-1.0, -1.0]).unwrap() > 0.0);
    }

    fn random_sets(rng: &mut ChaCha8Rng) -> Vec<FeasibleSet<f64>> {
        let n = 3;
        vec![
            FeasibleSet::WholeSpace,
            FeasibleSet::NonnegativeOrthant,
            FeasibleSet::boxed(vec![-1.0, 0.0, -2.0], vec![1.0, 0.5, -1.0]).unwrap(),
            FeasibleSet::ball((0..n).map(|_| rng.random_range(-1.0..1.0)).collect(), 0.7).unwrap(),
            FeasibleSet::product(vec![
                Block {
                    dim: 2,
                    set: FeasibleSet::ball(vec![0.0, 0.0], 1.0).unwrap(),
                },
                Block {
                    dim: 1,
                    set: FeasibleSet::NonnegativeOrthant,
                },
            ])
            .unwrap(),
        ]
    }

    #[test]
    fn projection_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for set in random_sets(&mut rng) {
            for _ in 0..1000 {
                let a: Vec<f64> = (0..3).map(|_| rng.random_range(-4.0..4.0)).collect();
                let b: Vec<f64> = (0..3).map(|_| rng.random_range(-4.0..4.0)).collect();
                let pa = set.project(&a).unwrap();
                let pb = set.project(&b).unwrap();
                assert!(set.contains(&pa, 1e-12));
                assert_eq!(set.project(&pa).unwrap(), pa, "idempotence for {set:?}");
                assert!(crate::linalg::distance(&pa, &pb) <= crate::linalg::distance(&a, &b) + 1e-12);

                // Unit weights reduce the preconditioned prox to projection.
                let y: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
                let z = set.prox_preconditioned(&pa, &y, &[1.0; 3]).unwrap();
                let q = set.project(&crate::linalg::sub(&pa, &y)).unwrap();
                assert!(crate::linalg::distance(&z, &q) <= 1e-12, "{set:?}");
            }
        }
    }

    #[test]
    fn prox_objective_optimality_against_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for set in random_sets(&mut rng) {
            for _ in 0..20 {
                let x = set
                    .project(&(0..3).map(|_| rng.random_range(-2.0..2.0)).collect::<Vec<_>>())
                    .unwrap();
                let y: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
                let v: Vec<f64> = (0..3).map(|_| rng.random_range(0.1..5.0)).collect();
                let obj = |z: &[f64]| -> f64 {
                    (0..3)
                        .map(|i| y[i] * (z[i] - x[i]) + 0.5 * v[i] * (z[i] - x[i]).powi(2))
                        .sum()
                };
                let z = set.prox_preconditioned(&x, &y, &v).unwrap();
                assert!(set.contains(&z, 1e-12));
                let best = obj(&z);
                for _ in 0..1000 {
                    let cand = set
                        .project(&(0..3).map(|_| rng.random_range(-3.0..3.0)).collect::<Vec<_>>())
                        .unwrap();
                    assert!(best <= obj(&cand) + 1e-9, "{set:?}");
                }
                // First-order optimality: -(y + v ⊙ (z - x)) lies in N_X(z).
                let grad: Vec<f64> = (0..3).map(|i| y[i] + v[i] * (z[i] - x[i])).collect();
                assert!(set.normal_cone_distance(&z, &grad).unwrap() < 1e-6, "{set:?}");
            }
        }
    }

    #[test]
    fn works_in_single_precision() {
        let b = FeasibleSet::<f32>::cube(2, -1.0, 1.0).unwrap();
        assert_eq!(b.project(&[2.0, -0.5]).unwrap(), vec![1.0, -0.5]);
        let ball = FeasibleSet::<f32>::ball(vec![0.0, 0.0], 1.0).unwrap();
        let z = ball.prox_preconditioned(&[0.0, 0.0], &[3.0, 0.0], &[1.0, 4.0]).unwrap();
        assert!(ball.contains(&z, 1e-6));
    }
}
