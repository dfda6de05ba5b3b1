//! Single-loop stochastic Lagrangian methods for nonsmooth nonconvex
//! problems `min f(x) s.t. c(x) = 0, x ∈ X`, with proximal SGD, SGDM and
//! ADAM embedded as the primal step.
//!
//! Everything is generic over [`Scalar`] (`f32`, `f64`); the aliases at the
//! crate root fix the precision to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod lagrangian;
pub mod linalg;
pub mod methods;
pub mod oracle;
pub mod problems;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type FeasibleSet = geometry::FeasibleSet<f64>;
pub type Jacobian = linalg::Jacobian<f64>;
pub type Method = methods::Method<f64>;
pub type MethodState = methods::MethodState<f64>;
pub type NoiseModel = oracle::NoiseModel<f64>;
pub type SolverConfig = lagrangian::SolverConfig<f64>;
pub type StepSchedule = lagrangian::StepSchedule<f64>;
pub type LagrangianState = lagrangian::LagrangianState<f64>;
pub type RunOutcome = lagrangian::RunOutcome<f64>;
pub type ProblemInstance = oracle::ProblemInstance<f64>;

pub type FeasibleSetF32 = geometry::FeasibleSet<f32>;
pub type SolverConfigF32 = lagrangian::SolverConfig<f32>;
