//! Built-in test problems with independent solution oracles.
//!
//! | kind | problem |
//! |------|---------|
//! | `affine_l1` | `min ‖x - x₀‖₁  s.t. Ax = b, x ∈ [-1,1]ⁿ` |
//! | `slack_l1_net` | ReLU network, absolute-deviation loss, `‖xᵢ‖₁ + sᵢ = rᵢ` per layer |
//! | `stochastic_affine` | `affine_l1` with sampled constraint rows and objective tilt |
//! | `exactness_1d` | `min -Mx  s.t. x = 0, x ∈ [-1,1]` |

mod affine_l1;
mod exactness;
pub mod lp_oracle;
mod slack_net;
mod stochastic_affine;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

pub use affine_l1::{make_affine_l1, AffineL1};
pub use exactness::{make_exactness_1d, penalty_minimizer_1d, Exactness1d};
pub use slack_net::{make_slack_l1_net, make_slack_l1_net_with, Dataset, SlackL1Net, SlackNetOptions};
pub use stochastic_affine::{make_stochastic_affine, StochasticAffine};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    AffineL1,
    SlackL1Net,
    StochasticAffine,
    #[serde(rename = "exactness_1d")]
    Exactness1d,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 4] = [
        Self::AffineL1,
        Self::SlackL1Net,
        Self::StochasticAffine,
        Self::Exactness1d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::AffineL1 => "affine_l1",
            Self::SlackL1Net => "slack_l1_net",
            Self::StochasticAffine => "stochastic_affine",
            Self::Exactness1d => "exactness_1d",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Self::AffineL1 => "min |x - x0|_1 s.t. Ax = b, x in [-1,1]^n; A has orthonormal rows",
            Self::SlackL1Net => "ReLU network with absolute-deviation loss, per-layer |x_i|_1 + s_i = r_i",
            Self::StochasticAffine => "affine_l1 with zero-mean sampled perturbations of constraints and objective",
            Self::Exactness1d => "min -Mx s.t. x = 0 on [-1,1]; exact penalty needs beta > M",
        }
    }

    /// Whether the problem has expectation constraints.
    pub fn is_stochastic(self) -> bool {
        matches!(self, Self::StochasticAffine)
    }
}

/// Known solution of a generated instance.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution<T> {
    pub x: Vec<T>,
    pub objective: T,
    pub multipliers: Option<Vec<T>>,
}

/// A generated problem together with its starting point and, when
/// available, an independently computed solution.
#[derive(Debug, Clone)]
pub struct ProblemRecipe<T: Scalar, P> {
    pub kind: ProblemKind,
    pub seed: u64,
    pub problem: P,
    pub initial_point: Vec<T>,
    pub oracle: Option<OracleSolution<T>>,
}

pub(crate) fn sign0<T: Scalar>(v: T) -> T {
    if v > T::zero() {
        T::one()
    } else if v < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}
