//! Brute-force solver for `min ‖x - x₀‖₁  s.t. Ax = b, -1 <= x <= 1`.
//!
//! The objective is linear on every cell cut out by the breakpoints
//! `xᵢ ∈ {-1, x₀ᵢ, 1}`, so some optimal point has at least `n - p`
//! coordinates at a breakpoint. The solver enumerates every choice of
//! `n - p` fixed coordinates and breakpoint values, solves the remaining
//! `p x p` system, and keeps the best box-feasible candidate.
//!
//! Self-contained: it uses none of the crate's linear algebra or geometry.

/// Largest dimension accepted by [`solve`].
pub const MAX_DIM: usize = 12;

const PIVOT_TOL: f64 = 1e-10;
const BOX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
}

/// Global minimizer, or `None` when the problem is infeasible (or every
/// candidate basis is singular). `a` is given row by row.
pub fn solve(a: &[Vec<f64>], b: &[f64], x0: &[f64]) -> Option<LpSolution> {
    let n = x0.len();
    let p = a.len();
    assert!(n <= MAX_DIM, "brute-force oracle is limited to n <= {MAX_DIM}");
    assert!(p <= n && b.len() == p && a.iter().all(|r| r.len() == n));
    let mut best: Option<LpSolution> = None;
    let mut free = Vec::with_capacity(p);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != p {
            continue;
        }
        free.clear();
        free.extend((0..n).filter(|i| mask & (1 << i) != 0));
        let fixed: Vec<usize> = (0..n).filter(|i| mask & (1 << i) == 0).collect();
        let combos = 3usize.pow(fixed.len() as u32);
        for code in 0..combos {
            let mut x = vec![0.0; n];
            let mut c = code;
            for &i in &fixed {
                x[i] = match c % 3 {
                    0 => -1.0,
                    1 => x0[i],
                    _ => 1.0,
                };
                c /= 3;
            }
            if !solve_free(a, b, &free, &mut x) {
                continue;
            }
            if x.iter().any(|v| v.abs() > 1.0 + BOX_TOL) {
                continue;
            }
            for v in &mut x {
                *v = v.clamp(-1.0, 1.0);
            }
            let value: f64 = x.iter().zip(x0).map(|(v, t)| (v - t).abs()).sum();
            if best.as_ref().is_none_or(|s| value < s.value) {
                best = Some(LpSolution { x, value });
            }
        }
    }
    best
}

/// Fills `x[free]` so that `Ax = b` given the other coordinates.
fn solve_free(a: &[Vec<f64>], b: &[f64], free: &[usize], x: &mut [f64]) -> bool {
    let p = free.len();
    if p == 0 {
        return a.iter().zip(b).all(|(row, bi)| {
            let lhs: f64 = row.iter().zip(x.iter()).map(|(r, v)| r * v).sum();
            (lhs - bi).abs() <= BOX_TOL
        });
    }
    // Augmented p x (p+1) system.
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let rhs = bi
                - (0..row.len())
                    .filter(|j| !free.contains(j))
                    .map(|j| row[j] * x[j])
                    .sum::<f64>();
            let mut r: Vec<f64> = free.iter().map(|&j| row[j]).collect();
            r.push(rhs);
            r
        })
        .collect();
    for col in 0..p {
        let piv = (col..p)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[piv][col].abs() < PIVOT_TOL {
            return false;
        }
        m.swap(col, piv);
        let pivot_row = m[col].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r != col {
                let factor = row[col] / pivot_row[col];
                for (a, b) in row.iter_mut().zip(&pivot_row).skip(col) {
                    *a -= factor * b;
                }
            }
        }
    }
    for (k, &j) in free.iter().enumerate() {
        x[j] = m[k][p] / m[k][k];
    }
    true
}
