//! Single-loop Lagrangian drivers with constraint tracking and a
//! regularized dual update, plus an increasing-penalty baseline.
//!
//! One iteration runs the primal step, then the tracker, then the dual step,
//! which consumes the freshly tracked `w⁺`.

mod config;
mod driver;
mod dual;
mod schedule;
mod tracker;

pub use config::{DualUpdate, SolverConfig, Tracker};
pub use driver::{record, run, run_eclm, run_elm, Eclm, Elm, Iteration, LagrangianState, RunOutcome, StepInfo};
pub use dual::{contraction_excess, dual_step_elm, dual_step_ialm, regu, REGU_ZERO_TOL};
pub use schedule::{StepSchedule, ThetaSchedule};
pub use tracker::{track_correction, track_exact};

#[cfg(test)]
mod tests;
