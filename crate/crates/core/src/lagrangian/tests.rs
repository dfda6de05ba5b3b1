use super::*;
use crate::error::Error;
use crate::geometry::FeasibleSet;
use crate::linalg::{norm, Jacobian};
use crate::methods::{step_prox_sgd, Method};
use crate::oracle::{AsStochastic, NoiseModel, Problem, ProblemInstance};

fn sign0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `f = 0`, `c(x) = x` on the real line.
fn identity_constraint() -> ProblemInstance<f64> {
    ProblemInstance::new(1, FeasibleSet::WholeSpace, |_| 0.0, |_| vec![0.0]).with_constraints(
        1,
        |x: &[f64]| vec![x[0]],
        |_| Jacobian::from_columns(1, &[vec![1.0]]).unwrap(),
    )
}

/// `f = ‖x - a‖₁` on `[-1,1]²` with `c(x) = x₀ + x₁ - 0.5`.
fn l1_box() -> ProblemInstance<f64> {
    let a = [0.8, 0.6];
    ProblemInstance::new(
        2,
        FeasibleSet::cube(2, -1.0, 1.0).unwrap(),
        move |x: &[f64]| x.iter().zip(&a).map(|(v, t)| (v - t).abs()).sum(),
        move |x: &[f64]| x.iter().zip(&a).map(|(v, t)| sign0(v - t)).collect(),
    )
    .with_constraints(
        1,
        |x: &[f64]| vec![x[0] + x[1] - 0.5],
        |_| Jacobian::from_columns(2, &[vec![1.0, 1.0]]).unwrap(),
    )
}

fn cfg(rho: f64, beta: f64, theta: f64, eta: StepSchedule<f64>, method: Method<f64>) -> SolverConfig<f64> {
    SolverConfig::new(rho, beta, theta, eta, method)
}

fn state(x: f64, lambda: f64, w: f64) -> LagrangianState<f64> {
    LagrangianState {
        method: Method::sgd().init_state(vec![x]),
        lambda: vec![lambda],
        w: vec![w],
        k: 0,
    }
}

#[test]
fn hand_computed_chain() {
    let p = identity_constraint();
    let c = cfg(0.0, 1.0, 0.5, StepSchedule::Constant(0.1), Method::sgd());
    let mut elm = Elm::new_unchecked(&p, c);
    let (next, info) = elm.step(&state(1.0, 0.5, 1.0)).unwrap();
    assert!((next.method.x[0] - 0.95).abs() < 1e-15);
    assert_eq!(next.w, next.method.x);
    assert!((next.lambda[0] - 0.75).abs() < 1e-15);
    assert_eq!(next.k, 1);
    assert!(info.contraction_excess.unwrap() <= 1e-12);
}

#[test]
fn feasible_stationary_point_is_fixed() {
    let p = ProblemInstance::new(
        1,
        FeasibleSet::WholeSpace,
        |x: &[f64]| x[0].abs(),
        |x: &[f64]| vec![sign0(x[0])],
    )
    .with_constraints(
        1,
        |x: &[f64]| vec![x[0]],
        |_| Jacobian::from_columns(1, &[vec![1.0]]).unwrap(),
    );
    let c = cfg(
        1.0,
        2.0,
        0.5,
        StepSchedule::Power {
            scale: 0.5,
            exponent: 0.5,
        },
        Method::sgd(),
    );
    let mut elm = Elm::new(&p, c.clone()).unwrap();
    let s0 = state(0.0, 0.0, 0.0);
    let (s1, _) = elm.step(&s0).unwrap();
    assert_eq!(
        (s1.method.x.clone(), s1.lambda.clone()),
        (s0.method.x.clone(), s0.lambda.clone())
    );

    let mut c2 = c;
    c2.tracker = Tracker::Correction { tau_tilde: 1.0 };
    let sp = AsStochastic(p);
    let mut eclm = Eclm::new(&sp, c2).unwrap();
    let (s2, _) = eclm.step(&s0).unwrap();
    assert_eq!(s2.method, s0.method);
    assert_eq!(s2.lambda, s0.lambda);
    assert_eq!(s2.w, s0.w);
}

// c changes sign across the primal step, so regu(w_k) and regu(w_{k+1})
// point in opposite directions and the dual step reveals which one it used.
#[test]
fn dual_step_consumes_updated_tracker() {
    let p = identity_constraint();
    let c = cfg(0.0, 1.0, 0.5, StepSchedule::Constant(0.1), Method::sgd());
    let mut elm = Elm::new_unchecked(&p, c);
    let (next, _) = elm.step(&state(0.02, 0.5, 0.02)).unwrap();
    assert!((next.method.x[0] + 0.03).abs() < 1e-15);
    assert!((next.lambda[0] + 0.25).abs() < 1e-15, "{}", next.lambda[0]);
}

#[test]
fn exact_tracker_matches_constraints_bitwise() {
    let p = l1_box();
    let mut c = cfg(
        1.0,
        3.0,
        0.5,
        StepSchedule::Power {
            scale: 0.5,
            exponent: 0.5,
        },
        Method::sgdm(1.0, 0.1).unwrap(),
    );
    c.noise = NoiseModel::uniform(0.1, 4);
    let mut elm = Elm::new(&p, c).unwrap();
    let mut s = elm.initial_state(vec![-1.0, 1.0]).unwrap();
    for _ in 0..500 {
        assert_eq!(s.w, p.constraints(&s.method.x));
        s = elm.step(&s).unwrap().0;
    }
    assert_eq!(s.w, track_exact(&p, &s.method.x).unwrap());
}

#[test]
fn degenerates_to_projected_subgradient_descent() {
    let p = l1_box();
    let eta = StepSchedule::Power {
        scale: 0.3,
        exponent: 0.5,
    };
    let mut c = cfg(0.0, 1.0, 0.0, eta, Method::sgd());
    c.max_iters = 300;
    c.record_every = 1;
    let mut elm = Elm::new_unchecked(&p, c);
    let mut s = elm.initial_state(vec![0.1, -0.9]).unwrap();
    let mut x = s.method.x.clone();
    for k in 0..300 {
        s = elm.step(&s).unwrap().0;
        x = step_prox_sgd(p.feasible_set(), &p.objective_subgradient(&x), &x, eta.at(k)).unwrap();
        assert_eq!(s.method.x, x, "step {k}");
        assert_eq!(s.lambda, vec![0.0]);
    }
}

#[test]
fn zero_iterations_give_initial_record_only() {
    let p = l1_box();
    let mut c = cfg(
        1.0,
        3.0,
        0.5,
        StepSchedule::Power {
            scale: 0.5,
            exponent: 0.5,
        },
        Method::sgd(),
    );
    c.max_iters = 0;
    let out = run_elm(&p, c, vec![0.0, 0.0]).unwrap();
    assert_eq!(out.trajectory.len(), 1);
    assert_eq!(out.first().k, 0);
    assert!(out.completed());
    assert_eq!(out.max_contraction_excess, None);
}

#[test]
fn record_schedule() {
    let p = l1_box();
    let mut c = cfg(
        1.0,
        3.0,
        0.5,
        StepSchedule::Power {
            scale: 0.5,
            exponent: 0.5,
        },
        Method::sgd(),
    );
    c.max_iters = 25;
    c.record_every = 10;
    let out = run_elm(&p, c, vec![0.0, 0.0]).unwrap();
    let ks: Vec<usize> = out.trajectory.iter().map(|r| r.k).collect();
    assert_eq!(ks, vec![0, 10, 20, 25]);
}

#[test]
fn runs_are_deterministic() {
    let p = l1_box();
    let mut c = cfg(
        1.0,
        3.0,
        0.5,
        StepSchedule::Power {
            scale: 0.5,
            exponent: 0.5,
        },
        Method::adam(1.0, 0.1, 0.1, 1e-8).unwrap(),
    );
    c.noise = NoiseModel::truncated_gaussian(0.2, 9);
    c.max_iters = 2000;
    let a = run_elm(&p, c.clone(), vec![1.0, 1.0]).unwrap();
    let b = run_elm(&p, c, vec![1.0, 1.0]).unwrap();
    assert_eq!(a.trajectory, b.trajectory);
    assert_eq!(a.final_state, b.final_state);
}

#[test]
fn multiplier_stays_in_beta_ball_after_entering() {
    let p = l1_box();
    let beta = 1.5;
    let mut c = cfg(
        0.5,
        beta,
        0.7,
        StepSchedule::Power {
            scale: 0.5,
            exponent: 0.5,
        },
        Method::sgdm(1.0, 0.1).unwrap(),
    );
    c.noise = NoiseModel::uniform(0.5, 1);
    let mut elm = Elm::new(&p, c).unwrap();
    let mut s = elm.initial_state(vec![1.0, 1.0]).unwrap();
    for _ in 0..5000 {
        let (next, info) = elm.step(&s).unwrap();
        assert!(info.contraction_excess.unwrap() <= 1e-12);
        assert!(norm(&next.lambda) <= beta + 1e-9);
        s = next;
    }
}

#[test]
fn expectation_scheme_with_degenerate_sampler_matches_deterministic_scheme() {
    let p = l1_box();
    let mut c = cfg(
        1.0,
        3.0,
        0.5,
        StepSchedule::Power {
            scale: 0.5,
            exponent: 0.5,
        },
        Method::sgdm(1.0, 0.1).unwrap(),
    );
    c.tracker = Tracker::Correction { tau_tilde: 1.0 };
    c.max_iters = 1000;
    c.record_every = 1;
    let a = run_elm(&p, c.clone(), vec![0.5, -0.5]).unwrap();
    let sp = AsStochastic(p);
    let b = run_eclm(&sp, c, vec![0.5, -0.5]).unwrap();
    assert_eq!(a.trajectory, b.trajectory);
}

#[test]
fn expectation_scheme_requires_correction_tracker() {
    let sp = AsStochastic(l1_box());
    let c = cfg(
        1.0,
        3.0,
        0.5,
        StepSchedule::Power {
            scale: 0.5,
            exponent: 0.5,
        },
        Method::sgd(),
    );
    assert!(matches!(Eclm::new(&sp, c), Err(Error::InvalidParameter(_))));
}

#[test]
fn non_finite_oracle_aborts_with_partial_trajectory() {
    let p = ProblemInstance::new(
        1,
        FeasibleSet::WholeSpace,
        |x: &[f64]| x[0],
        |x: &[f64]| vec![if x[0] < -0.5 { f64::NAN } else { 1.0 }],
    )
    .with_constraints(1, |_| vec![0.0], |_| Jacobian::from_columns(1, &[vec![0.0]]).unwrap());
    let mut c = cfg(
        0.0,
        1.0,
        0.5,
        StepSchedule::Power {
            scale: 0.1,
            exponent: 1.0,
        },
        Method::sgd(),
    );
    c.max_iters = 1000;
    c.record_every = 1;
    let out = run_elm(&p, c, vec![0.0]).unwrap();
    assert!(matches!(out.aborted, Some(Error::NonFinite(_))));
    assert!(out.trajectory.len() > 1 && out.trajectory.len() < 1001);
    assert!(out.final_state.method.x[0] < -0.5);
}

#[test]
fn infeasible_start_is_rejected() {
    let p = l1_box();
    let c = cfg(
        1.0,
        3.0,
        0.5,
        StepSchedule::Power {
            scale: 0.5,
            exponent: 0.5,
        },
        Method::sgd(),
    );
    assert!(matches!(run_elm(&p, c, vec![2.0, 0.0]), Err(Error::NotInSet { .. })));
}

#[test]
fn baseline_dual_updates_once_per_outer_step() {
    let p = l1_box();
    let mut c = cfg(
        0.0,
        3.0,
        0.5,
        StepSchedule::Power {
            scale: 0.5,
            exponent: 0.5,
        },
        Method::sgd(),
    );
    c.dual = DualUpdate::Ialm {
        beta_tilde: 1.0,
        sigma: 1.5,
        theta_tilde: 1.0,
        inner_steps: 5,
    };
    let mut elm = Elm::new(&p, c).unwrap();
    let mut s = elm.initial_state(vec![1.0, 1.0]).unwrap();
    for k in 0..30 {
        let (next, info) = elm.step(&s).unwrap();
        assert!(info.contraction_excess.is_none());
        if (k + 1) % 5 == 0 {
            let outer = (k + 1) / 5 - 1;
            let expected = dual_step_ialm(&s.lambda, &next.w, 1.0, 1.0, 1.5, outer).unwrap();
            assert_eq!(next.lambda, expected);
        } else {
            assert_eq!(next.lambda, s.lambda);
        }
        s = next;
    }
}

#[test]
fn iterate_records_the_new_state() {
    let p = l1_box();
    let c = cfg(
        1.0,
        3.0,
        0.5,
        StepSchedule::Power {
            scale: 0.5,
            exponent: 0.5,
        },
        Method::sgd(),
    );
    let mut elm = Elm::new(&p, c).unwrap();
    let s = elm.initial_state(vec![0.0, 0.0]).unwrap();
    let (next, rec) = elm.iterate(&s).unwrap();
    assert_eq!(rec.k, 1);
    assert_eq!(rec.feas, norm(&p.constraints(&next.method.x)));
}
