//! The shift ODE coupled to the solver, and the contraction monitor: the
//! weighted relative entropy between the shifted state and the profile must
//! not increase, and its exact rate identity must be reproduced by the
//! recorded trace.

use crate::dynamics::{FieldState, PerturbationSpec, Stepper, DEFAULT_POSITIVITY_FLOOR};
use crate::error::{Error, Result};
use crate::functionals::{decompose, shifted_field, FunctionalReport, Weight};
use crate::numerics::deriv_nonuniform;
use crate::profiles::ShockProfile;

/// The saturated response function driving the shift: linear with slope
/// -1/eps^4 on the plateau |y| <= eps^2, clamped to +-1/eps^2 outside.
pub fn phi_eps(y: f64, eps: f64) -> f64 {
    let e2 = eps * eps;
    if y <= -e2 {
        1.0 / e2
    } else if y >= e2 {
        -1.0 / e2
    } else {
        -y / (e2 * e2)
    }
}

/// One evaluation of the shift ODE right side at a given state and shift.
#[derive(Debug, Clone)]
pub struct ShiftRhs {
    pub x_dot: f64,
    /// The bracketed sum 2|J_bad| + 2|J_para| without the constant.
    pub f: f64,
    /// Full decomposition of the shifted state, reusable by the caller.
    pub report: FunctionalReport,
}

pub fn shift_rhs(
    state: &FieldState,
    x: f64,
    profile: &ShockProfile,
    weight: &Weight,
    delta3: f64,
) -> Result<ShiftRhs> {
    let shifted = shifted_field(state, x)?;
    let report = decompose(&shifted, profile, weight, delta3)?;
    let f = 2.0 * report.j_bad.abs() + 2.0 * report.j_para.abs();
    let x_dot = phi_eps(report.y, profile.end_states.eps) * (f + 1.0);
    Ok(ShiftRhs { x_dot, f, report })
}

/// Recorded time series of a contraction run. The first twelve columns are
/// the exported trace; the last three are plain (unweighted) quantities kept
/// for viscosity sweeps: the relative entropy without the weight, and the
/// accumulated layer-weighted volume entropy and plain dissipation.
#[derive(Debug, Clone, Default)]
pub struct ShiftTrace {
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    pub x_dot: Vec<f64>,
    pub wre: Vec<f64>,
    pub gv_accum: Vec<f64>,
    pub d_accum: Vec<f64>,
    pub identity_residual: Vec<f64>,
    pub f_bound: Vec<f64>,
    pub y: Vec<f64>,
    pub j_bad: Vec<f64>,
    pub j_para: Vec<f64>,
    pub j_good: Vec<f64>,
    pub eta_plain: Vec<f64>,
    pub layer_phi_accum: Vec<f64>,
    pub diss_plain_accum: Vec<f64>,
}

impl ShiftTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Outcome of the contraction monitor.
#[derive(Debug, Clone)]
pub struct ContractionVerdict {
    pub pass: bool,
    /// Time and description of the first violated condition, if any.
    pub first_violation: Option<(f64, String)>,
    /// Per-step slack granted to the monotonicity check, tied to the
    /// measured identity residual (a grid-convergence estimate).
    pub slack: f64,
    pub max_identity_residual: f64,
    /// Realized ratio of the time integral of f against (lambda/(delta0 eps))
    /// times the initial weighted relative entropy. Reported, not asserted.
    pub f_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct ContractionParams {
    pub t_end: f64,
    pub cfl: f64,
    pub positivity_floor: f64,
    pub delta3: f64,
    pub delta0: f64,
}

impl Default for ContractionParams {
    fn default() -> Self {
        ContractionParams {
            t_end: 10.0,
            cfl: 0.4,
            positivity_floor: DEFAULT_POSITIVITY_FLOOR,
            delta3: 0.1,
            delta0: 0.05,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ContractionRun {
    pub trace: ShiftTrace,
    /// Full functional decomposition at every recorded time (one per trace row).
    pub reports: Vec<FunctionalReport>,
    pub verdict: ContractionVerdict,
    pub final_x: f64,
    pub final_state: FieldState,
}

/// Largest admissible time step at the current state: the solver's CFL bound,
/// the relaxation rate of the shift ODE on its linear plateau, and a cap on
/// the shift travel per step.
fn shift_dt_bound(
    pde_bound: f64,
    rhs: &ShiftRhs,
    eps: f64,
    dx: f64,
) -> f64 {
    let mut dt = pde_bound;
    if rhs.report.y.abs() < eps * eps {
        let rate = (rhs.f + 1.0) * rhs.report.dy_dx.abs() / eps.powi(4);
        if rate > 0.0 {
            dt = dt.min(1.0 / rate);
        }
    }
    if rhs.x_dot != 0.0 {
        dt = dt.min(4.0 * dx / rhs.x_dot.abs());
    }
    dt
}

/// Co-integrates the shift ODE with the solver and monitors the contraction,
/// starting from the perturbed profile.
pub fn run_contraction(
    profile: &ShockProfile,
    weight: &Weight,
    perturbation: &PerturbationSpec,
    params: &ContractionParams,
) -> Result<ContractionRun> {
    let state = perturbation.apply(profile)?;
    run_contraction_from(profile, weight, state, params)
}

/// Co-integrates the shift ODE with the solver from an arbitrary prepared
/// initial state. The state and the shift advance together through the same
/// RK4 stages with explicit coupling: each stage evaluates the shift right
/// side at that stage's own state and shift value.
pub fn run_contraction_from(
    profile: &ShockProfile,
    weight: &Weight,
    initial: FieldState,
    params: &ContractionParams,
) -> Result<ContractionRun> {
    if !(params.t_end >= 0.0) {
        return Err(Error::Domain(format!("t_end = {} must be nonnegative", params.t_end)));
    }
    if !(params.cfl > 0.0 && params.cfl <= 1.0) {
        return Err(Error::Domain(format!("cfl = {} must lie in (0, 1]", params.cfl)));
    }
    if !(params.delta0 > 0.0 && params.delta0 < 1.0) {
        return Err(Error::Domain(format!("delta0 = {} must lie in (0, 1)", params.delta0)));
    }
    let eps = profile.end_states.eps;
    let dx = profile.grid.dx;
    let stepper = Stepper::balanced(profile, params.positivity_floor)?;

    let mut state = initial;
    let mut x = 0.0_f64;
    let mut rhs = shift_rhs(&state, x, profile, weight, params.delta3)?;

    let mut trace = ShiftTrace::default();
    let mut reports = Vec::new();
    let mut f_integral = 0.0;
    let push_row = |trace: &mut ShiftTrace, t: f64, x: f64, rhs: &ShiftRhs| {
        trace.times.push(t);
        trace.x.push(x);
        trace.x_dot.push(rhs.x_dot);
        trace.wre.push(rhs.report.wre);
        trace.f_bound.push(rhs.f);
        trace.y.push(rhs.report.y);
        trace.j_bad.push(rhs.report.j_bad);
        trace.j_para.push(rhs.report.j_para);
        trace.j_good.push(rhs.report.j_good);
        trace.eta_plain.push(rhs.report.eta_unweighted);
    };
    push_row(&mut trace, state.t, x, &rhs);
    reports.push(rhs.report);
    trace.gv_accum.push(0.0);
    trace.d_accum.push(0.0);
    trace.layer_phi_accum.push(0.0);
    trace.diss_plain_accum.push(0.0);

    let fracs = [0.5, 0.5, 1.0];
    let weights = [1.0 / 6.0, 2.0 / 6.0, 2.0 / 6.0, 1.0 / 6.0];
    while state.t < params.t_end - 1e-12 * params.t_end.max(1.0) {
        let pde_bound = stepper.dt_bound(&state, params.cfl);
        let mut dt = shift_dt_bound(pde_bound, &rhs, eps, dx);
        dt = dt.min(params.t_end - state.t);
        if !(dt > 1e-12 * params.t_end.max(1.0)) {
            return Err(Error::NumericalBlowup {
                t: state.t,
                what: "time step collapsed in the contraction run".into(),
            });
        }

        // RK4 stages for the coupled (state, shift) system. The state does
        // not feel the shift, so its stages are the solver's; the shift sees
        // each stage's state at its own lagged shift value.
        let n = state.grid.n;
        let k1 = stepper.eval(&state)?;
        let k1x = rhs.x_dot;
        let mut ku = vec![(k1.dv, k1.dh)];
        let mut kx = vec![k1x];
        let mut stage = state.clone();
        for s in 0..3 {
            let (dv, dh) = &ku[s];
            let frac = fracs[s];
            for i in 0..n {
                stage.v[i] = state.v[i] + frac * dt * dv[i];
                stage.h[i] = state.h[i] + frac * dt * dh[i];
            }
            stage.t = state.t + frac * dt;
            let xs = x + frac * dt * kx[s];
            let stage_rhs = shift_rhs(&stage, xs, profile, weight, params.delta3)?;
            kx.push(stage_rhs.x_dot);
            let ks = stepper.eval(&stage)?;
            ku.push((ks.dv, ks.dh));
        }
        for i in 0..n {
            let mut dv = 0.0;
            let mut dh = 0.0;
            for s in 0..4 {
                dv += weights[s] * ku[s].0[i];
                dh += weights[s] * ku[s].1[i];
            }
            state.v[i] += dt * dv;
            state.h[i] += dt * dh;
        }
        let mut dxs = 0.0;
        for s in 0..4 {
            dxs += weights[s] * kx[s];
        }
        x += dt * dxs;
        state.t += dt;
        if state.min_v() <= params.positivity_floor {
            return Err(Error::VacuumProximity {
                t: state.t,
                min_v: state.min_v(),
                floor: params.positivity_floor,
            });
        }
        for i in 0..n {
            if !state.v[i].is_finite() || !state.h[i].is_finite() {
                return Err(Error::NumericalBlowup { t: state.t, what: "state".into() });
            }
        }

        let prev = rhs;
        rhs = shift_rhs(&state, x, profile, weight, params.delta3)?;
        push_row(&mut trace, state.t, x, &rhs);
        reports.push(rhs.report);
        let g_prev = trace.gv_accum.last().copied().unwrap_or(0.0);
        let d_prev = trace.d_accum.last().copied().unwrap_or(0.0);
        trace
            .gv_accum
            .push(g_prev + 0.5 * dt * (prev.report.gv + rhs.report.gv));
        trace
            .d_accum
            .push(d_prev + 0.5 * dt * (prev.report.d_diss + rhs.report.d_diss));
        let lp_prev = trace.layer_phi_accum.last().copied().unwrap_or(0.0);
        let dp_prev = trace.diss_plain_accum.last().copied().unwrap_or(0.0);
        trace
            .layer_phi_accum
            .push(lp_prev + 0.5 * dt * (prev.report.gv_vtilde + rhs.report.gv_vtilde));
        trace
            .diss_plain_accum
            .push(dp_prev + 0.5 * dt * (prev.report.d_unweighted + rhs.report.d_unweighted));
        f_integral += 0.5 * dt * (prev.f + rhs.f);
    }

    // Identity residual: time derivative of the recorded weighted relative
    // entropy against the recorded analytic rate.
    let m = trace.len();
    let dwre = deriv_nonuniform(&trace.times, &trace.wre);
    trace.identity_residual = (0..m)
        .map(|k| {
            let rate = trace.x_dot[k] * trace.y[k] + trace.j_bad[k] + trace.j_para[k]
                - trace.j_good[k];
            (dwre[k] - rate).abs()
        })
        .collect();

    let verdict = judge(&trace, weight.lambda, params.delta0, eps, f_integral);
    Ok(ContractionRun { trace, reports, verdict, final_x: x, final_state: state })
}

fn judge(
    trace: &ShiftTrace,
    lambda: f64,
    delta0: f64,
    eps: f64,
    f_integral: f64,
) -> ContractionVerdict {
    let m = trace.len();
    let max_res = trace
        .identity_residual
        .iter()
        .fold(0.0_f64, |acc, &r| acc.max(r));
    let slack = 10.0 * max_res;
    let mut first_violation: Option<(f64, String)> = None;

    for k in 0..m.saturating_sub(1) {
        let dt = trace.times[k + 1] - trace.times[k];
        if trace.wre[k + 1] - trace.wre[k] > slack * dt {
            first_violation = Some((
                trace.times[k + 1],
                format!(
                    "weighted relative entropy rose by {:e} against slack {:e}",
                    trace.wre[k + 1] - trace.wre[k],
                    slack * dt
                ),
            ));
            break;
        }
    }
    if first_violation.is_none() {
        for k in 0..m {
            let rate = trace.x_dot[k] * trace.y[k] + trace.j_bad[k] + trace.j_para[k]
                - trace.j_good[k];
            let scale = (trace.x_dot[k] * trace.y[k]).abs()
                + trace.j_bad[k].abs()
                + trace.j_para[k].abs()
                + trace.j_good[k].abs();
            if rate > 1e-8 * scale.max(1.0) {
                first_violation = Some((
                    trace.times[k],
                    format!("contraction rate {rate:e} is positive beyond tolerance"),
                ));
                break;
            }
        }
    }

    let denom = lambda / (delta0 * eps) * trace.wre.first().copied().unwrap_or(0.0);
    let f_ratio = if denom > 0.0 {
        f_integral / denom
    } else if f_integral == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };

    ContractionVerdict {
        pass: first_violation.is_none(),
        first_violation,
        slack,
        max_identity_residual: max_res,
        f_ratio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{Bump, BumpField, BumpShape};
    use crate::functionals::build_weight;
    use crate::model::{solve_rankine_hugoniot, GasModel, ShockFamily};
    use crate::profiles::build_profile;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn setup() -> (ShockProfile, Weight) {
        let es = solve_rankine_hugoniot(1.0, 0.0, 0.1, ShockFamily::Two).unwrap();
        let model = GasModel::new(0.0).unwrap();
        let profile = build_profile(&es, &model, 400.0, 2048, 1e-12).unwrap();
        let weight = build_weight(&profile, 0.3).unwrap();
        (profile, weight)
    }

    #[test]
    fn phi_eps_frozen_values() {
        assert_eq!(phi_eps(0.0, 0.1), 0.0);
        assert_abs_diff_eq!(phi_eps(0.02, 0.1), -100.0, epsilon = 1e-10);
        assert_abs_diff_eq!(phi_eps(0.005, 0.1), -50.0, epsilon = 1e-10);
        assert_abs_diff_eq!(phi_eps(-0.02, 0.1), 100.0, epsilon = 1e-10);
        // Continuity at the junction |y| = eps^2 (the junction itself sits at
        // the rounded square, so compare with a tolerance).
        assert_abs_diff_eq!(phi_eps(0.01 - 1e-12, 0.1), -100.0, epsilon = 1e-6);
        assert_abs_diff_eq!(phi_eps(0.01, 0.1), -100.0, epsilon = 1e-9);
    }

    #[test]
    fn shift_rhs_vanishes_on_the_profile() {
        let (profile, weight) = setup();
        let state = FieldState::from_profile(&profile);
        let rhs = shift_rhs(&state, 0.0, &profile, &weight, 0.1).unwrap();
        assert_eq!(rhs.x_dot, 0.0);
        assert_eq!(rhs.f, 0.0);
        assert_eq!(rhs.report.y, 0.0);
    }

    #[test]
    fn shift_rhs_respects_saturation_bound() {
        let (profile, weight) = setup();
        let pert = PerturbationSpec {
            bumps: vec![Bump {
                field: BumpField::V,
                shape: BumpShape::Gaussian,
                center: -30.0,
                width: 6.0,
                amplitude: 0.15,
            }],
        };
        let state = pert.apply(&profile).unwrap();
        let eps = profile.end_states.eps;
        for &x in &[-5.0, 0.0, 2.5, 10.0] {
            let rhs = shift_rhs(&state, x, &profile, &weight, 0.1).unwrap();
            let cap = (2.0 * rhs.report.j_bad.abs() + 2.0 * rhs.report.j_para.abs() + 1.0)
                / (eps * eps);
            assert!(rhs.x_dot.abs() <= cap * (1.0 + 1e-12));
        }
    }

    #[test]
    fn zero_perturbation_stays_exactly_steady() {
        let (profile, weight) = setup();
        let params = ContractionParams { t_end: 2.0, ..Default::default() };
        let run = run_contraction(&profile, &weight, &PerturbationSpec::default(), &params)
            .unwrap();
        assert!(run.verdict.pass);
        assert_eq!(run.final_x, 0.0);
        assert!(run.trace.wre.iter().all(|&w| w == 0.0));
        assert!(run.trace.x.iter().all(|&z| z == 0.0));
        assert_eq!(run.verdict.f_ratio, 0.0);
        assert_eq!(run.final_state.v, profile.v);
    }

    #[test]
    fn perturbed_run_contracts() {
        let (profile, weight) = setup();
        let pert = PerturbationSpec {
            bumps: vec![Bump {
                field: BumpField::V,
                shape: BumpShape::Gaussian,
                center: -25.0,
                width: 5.0,
                amplitude: 0.05,
            }],
        };
        let params = ContractionParams { t_end: 4.0, ..Default::default() };
        let run = run_contraction(&profile, &weight, &pert, &params).unwrap();
        assert!(run.verdict.pass, "violation: {:?}", run.verdict.first_violation);
        let w0 = run.trace.wre[0];
        let wt = *run.trace.wre.last().unwrap();
        assert!(w0 > 0.0);
        assert!(wt < w0, "wre did not decay: {w0} -> {wt}");
        // Trace invariants.
        assert!(run.trace.times.windows(2).all(|p| p[1] > p[0]));
        assert!(run.trace.wre.iter().all(|&w| w >= 0.0));
        assert!(run.trace.gv_accum.windows(2).all(|p| p[1] >= p[0]));
        assert!(run.trace.d_accum.windows(2).all(|p| p[1] >= p[0]));
        assert!(run.verdict.f_ratio.is_finite());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn phi_eps_is_odd_and_bounded(y in -1.0f64..1.0, eps in 0.05f64..0.5) {
            let cap = 1.0 / (eps * eps);
            prop_assert!((phi_eps(y, eps) + phi_eps(-y, eps)).abs() <= 1e-12 * cap);
            prop_assert!(phi_eps(y, eps).abs() <= cap * (1.0 + 1e-12));
        }
    }
}
