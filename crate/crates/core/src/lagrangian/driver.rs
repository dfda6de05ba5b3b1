use crate::diagnostics::{metrics_record, LyapunovSpec, MetricsRecord, RecordContext};
use crate::error::{invalid, Error, Result};
use crate::geometry::MEMBERSHIP_TOL;
use crate::linalg::{add, all_finite, axpy, check_dim, check_finite};
use crate::methods::{Method, MethodState};
use crate::oracle::{eval_constraint_jacobian, eval_constraints, NoiseSource, Problem, Sampler, StochasticProblem};
use crate::scalar::Scalar;

use super::config::{DualUpdate, SolverConfig, Tracker};
use super::dual::{contraction_excess, dual_step_elm, dual_step_ialm};
use super::tracker::track_correction;

/// Full solver state `(x, y, λ, w)` at iteration `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianState<T> {
    pub method: MethodState<T>,
    pub lambda: Vec<T>,
    pub w: Vec<T>,
    pub k: usize,
}

impl<T: Scalar> LagrangianState<T> {
    pub fn x(&self) -> &[T] {
        &self.method.x
    }

    fn is_finite(&self) -> bool {
        all_finite(&self.method.x) && all_finite(&self.method.aux) && all_finite(&self.lambda) && all_finite(&self.w)
    }
}

/// Per-step values that are not part of the state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo<T> {
    pub eta: T,
    pub theta: T,
    /// `(‖λ⁺‖ - β) - (1 - θ/β)(‖λ‖ - β)` for regu dual steps.
    pub contraction_excess: Option<T>,
}

/// Single-loop iteration scheme shared by [`run`].
pub trait Iteration<T: Scalar> {
    type Prob: Problem<T> + ?Sized;

    fn problem(&self) -> &Self::Prob;
    fn config(&self) -> &SolverConfig<T>;
    /// `λ₀ = 0`, zero method state, `w₀` from the tracker.
    fn initial_state(&mut self, x0: Vec<T>) -> Result<LagrangianState<T>>;
    fn step(&mut self, state: &LagrangianState<T>) -> Result<(LagrangianState<T>, StepInfo<T>)>;

    /// One step followed by a metrics row at the new state.
    fn iterate(&mut self, state: &LagrangianState<T>) -> Result<(LagrangianState<T>, MetricsRecord)> {
        let (next, _) = self.step(state)?;
        let rec = record(self.problem(), self.config(), &next)?;
        Ok((next, rec))
    }
}

/// Metrics row for `state` under `cfg`.
pub fn record<T: Scalar, P: Problem<T> + ?Sized>(
    prob: &P,
    cfg: &SolverConfig<T>,
    state: &LagrangianState<T>,
) -> Result<MetricsRecord> {
    let ctx = RecordContext {
        beta: cfg.beta,
        rho: cfg.rho,
        kkt_probe: cfg.kkt_probe,
    };
    metrics_record(
        prob,
        state.k,
        &state.method.x,
        &state.method.aux,
        &state.lambda,
        &state.w,
        &ctx,
        lyapunov_spec(&cfg.method),
    )
}

fn lyapunov_spec<T: Scalar>(method: &Method<T>) -> LyapunovSpec<T> {
    match *method {
        Method::ProxSgd => LyapunovSpec::None,
        Method::ProxSgdm { tau, alpha } => LyapunovSpec::Sgdm { tau, alpha },
        Method::ProxAdam { tau1, alpha, eps, .. } => LyapunovSpec::Adam { tau1, alpha, eps },
    }
}

fn check_start<T: Scalar, P: Problem<T> + ?Sized>(prob: &P, x0: &[T]) -> Result<()> {
    check_dim("initial point", prob.dim(), x0.len())?;
    check_finite("initial point", x0)?;
    let viol = prob.feasible_set().violation(x0)?;
    if viol > T::lit(MEMBERSHIP_TOL) {
        return Err(Error::NotInSet {
            violation: viol.as_f64(),
        });
    }
    Ok(())
}

fn dual_update<T: Scalar>(
    cfg: &SolverConfig<T>,
    lambda: &[T],
    w_next: &[T],
    k: usize,
) -> Result<(Vec<T>, T, Option<T>)> {
    let theta = cfg.theta.at(k);
    match cfg.dual {
        DualUpdate::Regu => {
            let next = dual_step_elm(lambda, w_next, theta, cfg.beta)?;
            let excess = contraction_excess(lambda, &next, theta, cfg.beta);
            Ok((next, theta, Some(excess)))
        }
        DualUpdate::Ialm {
            beta_tilde,
            sigma,
            theta_tilde,
            inner_steps,
        } => {
            if !(k + 1).is_multiple_of(inner_steps) {
                return Ok((lambda.to_vec(), theta, None));
            }
            let outer = (k + 1) / inner_steps - 1;
            let next = dual_step_ialm(lambda, w_next, theta_tilde, beta_tilde, sigma, outer)?;
            Ok((next, theta, None))
        }
    }
}

/// Primal direction `d + J(λ + ρw) + ξ`.
fn primal_direction<T: Scalar>(
    d: &[T],
    jac: &crate::linalg::Jacobian<T>,
    state: &LagrangianState<T>,
    rho: T,
    noise: &mut NoiseSource<T>,
) -> Result<Vec<T>> {
    let mult = axpy(&state.lambda, rho, &state.w);
    let mut l = add(d, &jac.mul_vec(&mult));
    for (li, xi) in l.iter_mut().zip(noise.draw(d.len())) {
        *li = *li + xi;
    }
    if !all_finite(&l) {
        return Err(Error::NonFinite("primal direction"));
    }
    Ok(l)
}

/// Deterministic-constraint scheme: `l = d + J(λ+ρw) + ξ`, method step,
/// tracker, then the dual step on `w⁺`.
pub struct Elm<'a, T: Scalar, P: Problem<T> + ?Sized> {
    prob: &'a P,
    cfg: SolverConfig<T>,
    sampler: Sampler,
    noise: NoiseSource<T>,
}

impl<'a, T: Scalar, P: Problem<T> + ?Sized> Elm<'a, T, P> {
    pub fn new(prob: &'a P, cfg: SolverConfig<T>) -> Result<Self> {
        cfg.validate()?;
        Ok(Self::new_unchecked(prob, cfg))
    }

    /// Skips [`SolverConfig::validate`]. Per-step preconditions are still
    /// enforced; useful for degenerate settings such as `θ = 0`.
    pub fn new_unchecked(prob: &'a P, cfg: SolverConfig<T>) -> Self {
        Self {
            prob,
            sampler: Sampler::new(cfg.seed),
            noise: cfg.noise.source(),
            cfg,
        }
    }
}

impl<T: Scalar, P: Problem<T> + ?Sized> Iteration<T> for Elm<'_, T, P> {
    type Prob = P;

    fn problem(&self) -> &P {
        self.prob
    }

    fn config(&self) -> &SolverConfig<T> {
        &self.cfg
    }

    fn initial_state(&mut self, x0: Vec<T>) -> Result<LagrangianState<T>> {
        check_start(self.prob, &x0)?;
        let w = eval_constraints(self.prob, &x0)?;
        Ok(LagrangianState {
            method: self.cfg.method.init_state(x0),
            lambda: vec![T::zero(); self.prob.num_constraints()],
            w,
            k: 0,
        })
    }

    fn step(&mut self, state: &LagrangianState<T>) -> Result<(LagrangianState<T>, StepInfo<T>)> {
        let prob = self.prob;
        let k = state.k;
        let eta = self.cfg.eta.at(k);
        let x = &state.method.x;
        let token = self.sampler.next_token()?;
        let d = prob.sampled_objective_subgradient(x, token);
        check_dim("subgradient oracle output", prob.dim(), d.len())?;
        check_finite("subgradient oracle", &d)?;
        let jac = eval_constraint_jacobian(prob, x)?;
        let l = primal_direction(&d, &jac, state, self.cfg.rho, &mut self.noise)?;
        let method = self.cfg.method.step(prob.feasible_set(), &l, &state.method, eta)?;
        let w = match self.cfg.tracker {
            Tracker::Exact => eval_constraints(prob, &method.x)?,
            Tracker::Correction { tau_tilde } => {
                let c_x = eval_constraints(prob, x)?;
                let c_next = eval_constraints(prob, &method.x)?;
                track_correction(&state.w, &c_x, &c_next, tau_tilde, eta)?
            }
        };
        let (lambda, theta, excess) = dual_update(&self.cfg, &state.lambda, &w, k)?;
        let next = LagrangianState {
            method,
            lambda,
            w,
            k: k + 1,
        };
        Ok((
            next,
            StepInfo {
                eta,
                theta,
                contraction_excess: excess,
            },
        ))
    }
}

/// Expectation-constrained scheme: independent samples for the objective
/// subgradient and the Jacobian, and a shared sample for the constraint pair
/// consumed by the correction tracker.
pub struct Eclm<'a, T: Scalar, P: StochasticProblem<T> + ?Sized> {
    prob: &'a P,
    cfg: SolverConfig<T>,
    tau_tilde: T,
    sampler: Sampler,
    noise: NoiseSource<T>,
}

impl<'a, T: Scalar, P: StochasticProblem<T> + ?Sized> Eclm<'a, T, P> {
    pub fn new(prob: &'a P, cfg: SolverConfig<T>) -> Result<Self> {
        cfg.validate()?;
        Self::new_unchecked(prob, cfg)
    }

    /// Skips [`SolverConfig::validate`]; the tracker must still be a correction tracker.
    pub fn new_unchecked(prob: &'a P, cfg: SolverConfig<T>) -> Result<Self> {
        let Tracker::Correction { tau_tilde } = cfg.tracker else {
            return Err(invalid("expectation constraints require the correction tracker"));
        };
        Ok(Self {
            prob,
            tau_tilde,
            sampler: Sampler::new(cfg.seed),
            noise: cfg.noise.source(),
            cfg,
        })
    }
}

impl<T: Scalar, P: StochasticProblem<T> + ?Sized> Iteration<T> for Eclm<'_, T, P> {
    type Prob = P;

    fn problem(&self) -> &P {
        self.prob
    }

    fn config(&self) -> &SolverConfig<T> {
        &self.cfg
    }

    fn initial_state(&mut self, x0: Vec<T>) -> Result<LagrangianState<T>> {
        check_start(self.prob, &x0)?;
        let token = self.sampler.next_token()?;
        let w = self.prob.sample_constraints(&x0, token);
        check_dim("sampled constraint oracle output", self.prob.num_constraints(), w.len())?;
        check_finite("sampled constraint oracle", &w)?;
        Ok(LagrangianState {
            method: self.cfg.method.init_state(x0),
            lambda: vec![T::zero(); self.prob.num_constraints()],
            w,
            k: 0,
        })
    }

    fn step(&mut self, state: &LagrangianState<T>) -> Result<(LagrangianState<T>, StepInfo<T>)> {
        let prob = self.prob;
        let k = state.k;
        let eta = self.cfg.eta.at(k);
        let x = &state.method.x;
        let omega_f = self.sampler.next_token()?;
        let omega_c = self.sampler.next_token()?;
        let omega_j = self.sampler.next_token()?;

        let g = prob.sample_objective_subgradient(x, omega_f);
        check_dim("sampled subgradient oracle output", prob.dim(), g.len())?;
        check_finite("sampled subgradient oracle", &g)?;
        let jac = prob.sample_constraint_jacobian(x, omega_j);
        check_dim("jacobian rows", prob.dim(), jac.rows())?;
        check_dim("jacobian columns", prob.num_constraints(), jac.cols())?;
        if !jac.is_finite() {
            return Err(Error::NonFinite("sampled jacobian oracle"));
        }
        let l = primal_direction(&g, &jac, state, self.cfg.rho, &mut self.noise)?;
        let method = self.cfg.method.step(prob.feasible_set(), &l, &state.method, eta)?;

        let c_x = prob.sample_constraints(x, omega_c);
        let c_next = prob.sample_constraints(&method.x, omega_c);
        check_dim("sampled constraint oracle output", prob.num_constraints(), c_x.len())?;
        check_dim("sampled constraint oracle output", prob.num_constraints(), c_next.len())?;
        check_finite("sampled constraint oracle", &c_x)?;
        check_finite("sampled constraint oracle", &c_next)?;
        let w = track_correction(&state.w, &c_x, &c_next, self.tau_tilde, eta)?;

        let (lambda, theta, excess) = dual_update(&self.cfg, &state.lambda, &w, k)?;
        let next = LagrangianState {
            method,
            lambda,
            w,
            k: k + 1,
        };
        Ok((
            next,
            StepInfo {
                eta,
                theta,
                contraction_excess: excess,
            },
        ))
    }
}

/// Result of [`run`]. A run that hit an error mid-way keeps its partial
/// trajectory and the last good state, and reports the error in `aborted`.
#[derive(Debug, Clone)]
pub struct RunOutcome<T> {
    pub trajectory: Vec<MetricsRecord>,
    pub final_state: LagrangianState<T>,
    /// Largest observed dual contraction excess (regu dual steps only).
    pub max_contraction_excess: Option<f64>,
    pub aborted: Option<Error>,
}

impl<T> RunOutcome<T> {
    pub fn completed(&self) -> bool {
        self.aborted.is_none()
    }

    pub fn first(&self) -> &MetricsRecord {
        &self.trajectory[0]
    }

    pub fn last(&self) -> &MetricsRecord {
        self.trajectory.last().expect("trajectory holds the initial record")
    }
}

/// Runs `max_iters` steps from `x0`, recording at `k = 0`, every
/// `record_every` steps and at the final step.
///
/// Setup failures (bad start, oracle errors at `x0`) are returned as `Err`.
pub fn run<T: Scalar, I: Iteration<T>>(it: &mut I, x0: Vec<T>) -> Result<RunOutcome<T>> {
    let mut state = it.initial_state(x0)?;
    let mut trajectory = vec![record(it.problem(), it.config(), &state)?];
    let max_iters = it.config().max_iters;
    let every = it.config().record_every.max(1);
    let mut max_excess: Option<f64> = None;
    let mut aborted = None;
    for _ in 0..max_iters {
        let (next, info) = match it.step(&state) {
            Ok(v) => v,
            Err(e) => {
                aborted = Some(e);
                break;
            }
        };
        if !next.is_finite() {
            aborted = Some(Error::NonFinite("iterate"));
            break;
        }
        if let Some(e) = info.contraction_excess {
            let e = e.as_f64();
            max_excess = Some(max_excess.map_or(e, |m| m.max(e)));
        }
        state = next;
        if state.k % every == 0 || state.k == max_iters {
            match record(it.problem(), it.config(), &state) {
                Ok(r) => trajectory.push(r),
                Err(e) => {
                    aborted = Some(e);
                    break;
                }
            }
        }
    }
    Ok(RunOutcome {
        trajectory,
        final_state: state,
        max_contraction_excess: max_excess,
        aborted,
    })
}

/// Validates `cfg` and runs the deterministic-constraint scheme.
pub fn run_elm<T: Scalar, P: Problem<T> + ?Sized>(prob: &P, cfg: SolverConfig<T>, x0: Vec<T>) -> Result<RunOutcome<T>> {
    run(&mut Elm::new(prob, cfg)?, x0)
}

/// Validates `cfg` and runs the expectation-constrained scheme.
pub fn run_eclm<T: Scalar, P: StochasticProblem<T> + ?Sized>(
    prob: &P,
    cfg: SolverConfig<T>,
    x0: Vec<T>,
) -> Result<RunOutcome<T>> {
    run(&mut Eclm::new(prob, cfg)?, x0)
}
