//! Finite-volume solver for the viscous system in the frame moving with the
//! shock: second-order limited reconstruction with a local Lax-Friedrichs
//! flux, central diffusion, RK4 in time, and conservation, entropy, and
//! boundary monitors.
//!
//! The production stepper integrates the deviation of the semidiscrete
//! operator from its value on the sampled profile, so the discrete traveling
//! wave is an exact fixed point of the scheme and long-run drift measures
//! genuine perturbation dynamics rather than truncation error.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{pressure, GasModel};
use crate::numerics::{deriv2, trapz, Grid};
use crate::profiles::ShockProfile;

pub const DEFAULT_POSITIVITY_FLOOR: f64 = 1e-6;

/// Radius (in widths) beyond which a Gaussian bump is below 1e-12 of its peak.
pub const BUMP_SUPPORT_RADIUS: f64 = 5.2565;

/// Discrete state (v, h) on the solver grid at time t, in the moving frame.
#[derive(Debug, Clone)]
pub struct FieldState {
    pub grid: Arc<Grid>,
    pub model: GasModel,
    pub nu: f64,
    pub t: f64,
    pub v: Vec<f64>,
    pub h: Vec<f64>,
}

impl FieldState {
    pub fn from_profile(profile: &ShockProfile) -> Self {
        Self {
            grid: Arc::clone(&profile.grid),
            model: profile.model,
            nu: profile.nu,
            t: 0.0,
            v: profile.v.clone(),
            h: profile.h.clone(),
        }
    }

    pub fn min_v(&self) -> f64 {
        self.v.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_v(&self) -> f64 {
        self.v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Fluid velocity u = h + nu v_xi / v^(1+alpha), differenced on the grid.
    pub fn recover_u(&self) -> Vec<f64> {
        let dv = deriv2(&self.v, self.grid.dx);
        let ap1 = 1.0 + self.model.alpha();
        (0..self.grid.n)
            .map(|i| self.h[i] + self.nu * dv[i] / self.v[i].powf(ap1))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BumpField {
    V,
    H,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BumpShape {
    Gaussian,
    SinePacket,
}

/// A localized smooth perturbation added to one field of the profile.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Bump {
    pub field: BumpField,
    pub shape: BumpShape,
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
}

impl Bump {
    pub fn eval(&self, xi: f64) -> f64 {
        if self.amplitude == 0.0 {
            return 0.0;
        }
        let r = (xi - self.center) / self.width;
        if r.abs() > BUMP_SUPPORT_RADIUS {
            return 0.0;
        }
        let envelope = (-r * r).exp();
        match self.shape {
            BumpShape::Gaussian => self.amplitude * envelope,
            BumpShape::SinePacket => {
                self.amplitude * (2.0 * std::f64::consts::PI * r).sin() * envelope
            }
        }
    }
}

/// Perturbation of the profile: a sum of bumps on v and on h.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub bumps: Vec<Bump>,
}

impl PerturbationSpec {
    pub fn is_zero(&self) -> bool {
        self.bumps.iter().all(|b| b.amplitude == 0.0)
    }

    /// Sum of the bumps acting on the given field.
    pub fn eval_field(&self, field: BumpField, xi: f64) -> f64 {
        self.bumps
            .iter()
            .filter(|b| b.field == field)
            .map(|b| b.eval(xi))
            .sum()
    }

    /// Bumps must live in the middle half of the domain so the far field
    /// stays constant.
    pub fn validate(&self, l: f64) -> Result<()> {
        let mut violations = Vec::new();
        for (k, b) in self.bumps.iter().enumerate() {
            if !(b.width > 0.0) || !b.width.is_finite() {
                violations.push(format!("bump {k}: width {} must be positive", b.width));
                continue;
            }
            if !b.amplitude.is_finite() || !b.center.is_finite() {
                violations.push(format!("bump {k}: center/amplitude must be finite"));
                continue;
            }
            if b.amplitude == 0.0 {
                continue;
            }
            let reach = b.center.abs() + BUMP_SUPPORT_RADIUS * b.width;
            if reach > 0.5 * l {
                violations.push(format!(
                    "bump {k}: support radius {reach} exceeds L/2 = {}",
                    0.5 * l
                ));
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::Config { violations })
        }
    }

    /// Adds the bumps to the profile fields. Zero amplitudes reproduce the
    /// profile bitwise.
    pub fn apply(&self, profile: &ShockProfile) -> Result<FieldState> {
        self.validate(profile.grid.l)?;
        let mut state = FieldState::from_profile(profile);
        if self.is_zero() {
            return Ok(state);
        }
        for (i, &xi) in profile.grid.xi.iter().enumerate() {
            state.v[i] += self.eval_field(BumpField::V, xi);
            state.h[i] += self.eval_field(BumpField::H, xi);
        }
        if state.min_v() <= DEFAULT_POSITIVITY_FLOOR {
            return Err(Error::VacuumProximity {
                t: 0.0,
                min_v: state.min_v(),
                floor: DEFAULT_POSITIVITY_FLOOR,
            });
        }
        Ok(state)
    }

    /// Stretches centers and widths by the given factor (used by the
    /// viscosity-rescaled runs); amplitudes are unchanged.
    pub fn dilate(&self, factor: f64) -> PerturbationSpec {
        PerturbationSpec {
            bumps: self
                .bumps
                .iter()
                .map(|b| Bump {
                    center: b.center * factor,
                    width: b.width * factor,
                    ..*b
                })
                .collect(),
        }
    }
}

/// Semidiscrete right-hand side together with the total (advective plus
/// diffusive) numerical fluxes at the first and last interior faces, used for
/// exact conservation accounting.
pub struct RhsEval {
    pub dv: Vec<f64>,
    pub dh: Vec<f64>,
    pub flux_v_in: f64,
    pub flux_v_out: f64,
    pub flux_h_in: f64,
    pub flux_h_out: f64,
}

#[inline]
fn van_leer(a: f64, b: f64) -> f64 {
    if a * b > 0.0 {
        2.0 * a * b / (a + b)
    } else {
        0.0
    }
}

fn rhs_raw(state: &FieldState, sigma: f64, floor: f64) -> Result<RhsEval> {
    let n = state.grid.n;
    let dx = state.grid.dx;
    let v = &state.v;
    let h = &state.h;
    let min_v = state.min_v();
    if min_v <= floor {
        return Err(Error::VacuumProximity { t: state.t, min_v, floor });
    }
    let ap1 = 1.0 + state.model.alpha();

    // Limited slopes (undivided differences); boundary nodes are first order.
    let mut sv = vec![0.0; n];
    let mut sh = vec![0.0; n];
    for i in 1..n - 1 {
        sv[i] = van_leer(v[i] - v[i - 1], v[i + 1] - v[i]);
        sh[i] = van_leer(h[i] - h[i - 1], h[i + 1] - h[i]);
    }

    // Total flux through each face k between nodes k and k+1.
    let mut gv = vec![0.0; n - 1];
    let mut gh = vec![0.0; n - 1];
    let kdiff: Vec<f64> = v.iter().map(|&vi| state.nu / vi.powf(ap1)).collect();
    for k in 0..n - 1 {
        let vl = v[k] + 0.5 * sv[k];
        let vr = v[k + 1] - 0.5 * sv[k + 1];
        let hl = h[k] + 0.5 * sh[k];
        let hr = h[k + 1] - 0.5 * sh[k + 1];
        let speed = (sigma.abs() + 1.0 / vl).max(sigma.abs() + 1.0 / vr);
        let f1l = -sigma * vl - hl;
        let f1r = -sigma * vr - hr;
        let f2l = -sigma * hl + pressure(vl);
        let f2r = -sigma * hr + pressure(vr);
        let diff = 0.5 * (kdiff[k] + kdiff[k + 1]) * (v[k + 1] - v[k]) / dx;
        gv[k] = 0.5 * (f1l + f1r) - 0.5 * speed * (vr - vl) - diff;
        gh[k] = 0.5 * (f2l + f2r) - 0.5 * speed * (hr - hl);
    }

    let mut dv = vec![0.0; n];
    let mut dh = vec![0.0; n];
    for i in 1..n - 1 {
        dv[i] = -(gv[i] - gv[i - 1]) / dx;
        dh[i] = -(gh[i] - gh[i - 1]) / dx;
    }
    Ok(RhsEval {
        dv,
        dh,
        flux_v_in: gv[0],
        flux_v_out: gv[n - 2],
        flux_h_in: gh[0],
        flux_h_out: gh[n - 2],
    })
}

/// Raw semidiscrete operator: exactly zero on constant states, and second
/// order accurate on the smooth profile.
pub fn semidiscrete_rhs(state: &FieldState, profile: &ShockProfile) -> Result<(Vec<f64>, Vec<f64>)> {
    state.grid.ensure_matches(&profile.grid)?;
    let eval = rhs_raw(state, profile.end_states.sigma, DEFAULT_POSITIVITY_FLOOR)?;
    Ok((eval.dv, eval.dh))
}

/// Time-integrated boundary fluxes of one step, stage-weighted exactly as the
/// RK4 update itself, so conservation accounting telescopes to roundoff.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepFluxes {
    pub net_v: f64,
    pub net_h: f64,
}

/// RK4 stepper with the profile-residual correction baked in.
pub struct Stepper<'a> {
    pub profile: &'a ShockProfile,
    pub floor: f64,
    correction: Option<RhsEval>,
}

impl<'a> Stepper<'a> {
    /// Stepper whose fixed point is the sampled profile: advances
    /// F(U) = RHS(U) - RHS(profile).
    pub fn balanced(profile: &'a ShockProfile, floor: f64) -> Result<Self> {
        let base = FieldState::from_profile(profile);
        let correction = rhs_raw(&base, profile.end_states.sigma, floor)?;
        Ok(Self { profile, floor, correction: Some(correction) })
    }

    /// Uncorrected stepper advancing the raw semidiscrete operator.
    pub fn raw(profile: &'a ShockProfile, floor: f64) -> Self {
        Self { profile, floor, correction: None }
    }

    pub fn eval(&self, state: &FieldState) -> Result<RhsEval> {
        let mut eval = rhs_raw(state, self.profile.end_states.sigma, self.floor)?;
        if let Some(corr) = &self.correction {
            for i in 0..eval.dv.len() {
                eval.dv[i] -= corr.dv[i];
                eval.dh[i] -= corr.dh[i];
            }
            eval.flux_v_in -= corr.flux_v_in;
            eval.flux_v_out -= corr.flux_v_out;
            eval.flux_h_in -= corr.flux_h_in;
            eval.flux_h_out -= corr.flux_h_out;
        }
        Ok(eval)
    }

    /// Largest stable step at the configured CFL number, from the advective
    /// and diffusive restrictions.
    pub fn dt_bound(&self, state: &FieldState, cfl: f64) -> f64 {
        let sigma = self.profile.end_states.sigma;
        let min_v = state.min_v();
        let s_max = sigma.abs() + 1.0 / min_v;
        let dx = state.grid.dx;
        let dt_adv = dx / s_max;
        let dt_diff = dx * dx * min_v.powf(1.0 + state.model.alpha()) / (2.0 * state.nu);
        cfl * dt_adv.min(dt_diff)
    }

    /// One RK4 step in place; returns the stage-weighted boundary fluxes.
    pub fn advance(&self, state: &mut FieldState, dt: f64) -> Result<StepFluxes> {
        let n = state.grid.n;
        let t0 = state.t;
        let v0 = state.v.clone();
        let h0 = state.h.clone();

        let mut fluxes = StepFluxes::default();
        let mut acc_dv = vec![0.0; n];
        let mut acc_dh = vec![0.0; n];

        let stage = |state: &mut FieldState,
                         acc_dv: &mut [f64],
                         acc_dh: &mut [f64],
                         fluxes: &mut StepFluxes,
                         frac: f64,
                         weight: f64|
         -> Result<()> {
            let k = self.eval(state)?;
            for i in 0..n {
                acc_dv[i] += weight * k.dv[i];
                acc_dh[i] += weight * k.dh[i];
            }
            fluxes.net_v += weight * (k.flux_v_in - k.flux_v_out);
            fluxes.net_h += weight * (k.flux_h_in - k.flux_h_out);
            if frac > 0.0 {
                for i in 0..n {
                    state.v[i] = v0[i] + dt * frac * k.dv[i];
                    state.h[i] = h0[i] + dt * frac * k.dh[i];
                }
                state.t = t0 + dt * frac;
            }
            Ok(())
        };

        stage(state, &mut acc_dv, &mut acc_dh, &mut fluxes, 0.5, 1.0 / 6.0)?;
        stage(state, &mut acc_dv, &mut acc_dh, &mut fluxes, 0.5, 2.0 / 6.0)?;
        stage(state, &mut acc_dv, &mut acc_dh, &mut fluxes, 1.0, 2.0 / 6.0)?;
        stage(state, &mut acc_dv, &mut acc_dh, &mut fluxes, 0.0, 1.0 / 6.0)?;

        for i in 0..n {
            state.v[i] = v0[i] + dt * acc_dv[i];
            state.h[i] = h0[i] + dt * acc_dh[i];
        }
        state.t = t0 + dt;
        fluxes.net_v *= dt;
        fluxes.net_h *= dt;

        let mut max_abs: f64 = 0.0;
        for i in 0..n {
            if !state.v[i].is_finite() || !state.h[i].is_finite() {
                return Err(Error::NumericalBlowup {
                    t: state.t,
                    what: "non-finite field value".into(),
                });
            }
            max_abs = max_abs.max(state.v[i].abs()).max(state.h[i].abs());
        }
        if max_abs > 1e9 {
            return Err(Error::NumericalBlowup {
                t: state.t,
                what: format!("field magnitude {max_abs:e}"),
            });
        }
        Ok(fluxes)
    }
}

/// One profile-preserving RK4 step of length dt.
pub fn step(state: &mut FieldState, dt: f64, profile: &ShockProfile) -> Result<()> {
    state.grid.ensure_matches(&profile.grid)?;
    let stepper = Stepper::balanced(profile, DEFAULT_POSITIVITY_FLOOR)?;
    stepper.advance(state, dt)?;
    Ok(())
}

/// Health metrics of the run, recorded every step.
#[derive(Debug, Clone, Copy)]
pub struct MonitorRecord {
    pub t: f64,
    pub min_v: f64,
    pub max_v: f64,
    pub mass_defect: f64,
    pub entropy_residual: f64,
    pub boundary_leak: f64,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub v: Vec<f64>,
    pub h: Vec<f64>,
    pub u: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub monitors: Vec<MonitorRecord>,
}

#[derive(Debug, Clone, Copy)]
pub struct SimulationParams {
    pub t_end: f64,
    pub cfl: f64,
    pub floor: f64,
    pub snapshot_cadence: f64,
}

struct ConservationLedger {
    mass_v0: f64,
    mass_h0: f64,
    flux_v: f64,
    flux_h: f64,
}

impl ConservationLedger {
    fn new(state: &FieldState, profile: &ShockProfile) -> Self {
        Self {
            mass_v0: relative_mass(state, &profile.v, true),
            mass_h0: relative_mass(state, &profile.h, false),
            flux_v: 0.0,
            flux_h: 0.0,
        }
    }

    fn absorb(&mut self, fluxes: &StepFluxes) {
        self.flux_v += fluxes.net_v;
        self.flux_h += fluxes.net_h;
    }

    fn defect(&self, state: &FieldState, profile: &ShockProfile) -> f64 {
        let dm_v = relative_mass(state, &profile.v, true) - self.mass_v0 - self.flux_v;
        let dm_h = relative_mass(state, &profile.h, false) - self.mass_h0 - self.flux_h;
        dm_v.abs() + dm_h.abs()
    }
}

fn relative_mass(state: &FieldState, reference: &[f64], use_v: bool) -> f64 {
    let field = if use_v { &state.v } else { &state.h };
    let diff: Vec<f64> = field.iter().zip(reference).map(|(a, b)| a - b).collect();
    trapz(&diff, state.grid.dx)
}

/// Signed defect of the semidiscrete entropy identity: the dt-weighted change
/// of the total entropy plus dissipation minus the boundary entropy flux.
pub fn entropy_residual(state: &FieldState, stepper: &Stepper) -> Result<f64> {
    let eval = stepper.eval(state)?;
    let g = &state.grid;
    let n = g.n;
    let beta = state.model.beta();
    let p: Vec<f64> = state.v.iter().map(|&vi| pressure(vi)).collect();
    let dp = deriv2(&p, g.dx);

    let mut d_eta = 0.0;
    let mut diss = 0.0;
    for i in 0..n {
        let w = g.weight(i);
        d_eta += w * (-p[i] * eval.dv[i] + state.h[i] * eval.dh[i]);
        diss += w * state.nu * state.v[i].powf(beta) * dp[i] * dp[i];
    }

    let sigma = stepper.profile.end_states.sigma;
    let eta = |i: usize| 0.5 * state.h[i] * state.h[i] - state.v[i].ln();
    let bflux = |i: usize| {
        sigma * eta(i) - p[i] * state.h[i] + state.nu * p[i] * state.v[i].powf(beta) * dp[i]
    };
    let e_flux = bflux(n - 1) - bflux(0);

    Ok(d_eta + diss - e_flux)
}

fn boundary_leak(state: &FieldState, profile: &ShockProfile) -> f64 {
    let n = state.grid.n;
    let mut worst: f64 = 0.0;
    for &i in &[0, 1, 2, n - 3, n - 2, n - 1] {
        worst = worst
            .max((state.v[i] - profile.v[i]).abs() + (state.h[i] - profile.h[i]).abs());
    }
    worst
}

fn monitor(
    state: &FieldState,
    profile: &ShockProfile,
    stepper: &Stepper,
    ledger: &ConservationLedger,
) -> Result<MonitorRecord> {
    Ok(MonitorRecord {
        t: state.t,
        min_v: state.min_v(),
        max_v: state.max_v(),
        mass_defect: ledger.defect(state, profile),
        entropy_residual: entropy_residual(state, stepper)?,
        boundary_leak: boundary_leak(state, profile),
    })
}

fn snapshot(state: &FieldState) -> Snapshot {
    Snapshot {
        t: state.t,
        v: state.v.clone(),
        h: state.h.clone(),
        u: state.recover_u(),
    }
}

/// Runs the perturbed profile to t_end with the profile-preserving stepper,
/// recording monitors every step and snapshots at the given cadence.
pub fn simulate(
    profile: &ShockProfile,
    pert: &PerturbationSpec,
    params: &SimulationParams,
) -> Result<Trajectory> {
    if !(params.t_end >= 0.0) || !params.t_end.is_finite() {
        return Err(Error::Domain(format!("t_end = {} must be nonnegative", params.t_end)));
    }
    if !(params.cfl > 0.0 && params.cfl <= 1.0) {
        return Err(Error::Domain(format!("cfl = {} must lie in (0, 1]", params.cfl)));
    }
    let mut state = pert.apply(profile)?;
    let stepper = Stepper::balanced(profile, params.floor)?;
    let mut ledger = ConservationLedger::new(&state, profile);

    let mut snapshots = vec![snapshot(&state)];
    let mut monitors = vec![monitor(&state, profile, &stepper, &ledger)?];
    let mut next_snap = params.snapshot_cadence;

    while state.t < params.t_end {
        let dt = stepper.dt_bound(&state, params.cfl).min(params.t_end - state.t);
        let fluxes = stepper.advance(&mut state, dt)?;
        ledger.absorb(&fluxes);
        monitors.push(monitor(&state, profile, &stepper, &ledger)?);
        if state.t >= next_snap - 1e-12 || state.t >= params.t_end {
            snapshots.push(snapshot(&state));
            while next_snap <= state.t + 1e-12 {
                next_snap += params.snapshot_cadence;
            }
        }
    }
    Ok(Trajectory { snapshots, monitors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{solve_rankine_hugoniot, ShockFamily};
    use crate::profiles::build_profile;
    use approx::assert_abs_diff_eq;

    fn setup(n: usize) -> ShockProfile {
        let es = solve_rankine_hugoniot(1.0, 0.0, 0.1, ShockFamily::Two).unwrap();
        let model = GasModel::new(0.0).unwrap();
        build_profile(&es, &model, 400.0, n, 1e-12).unwrap()
    }

    #[test]
    fn rhs_vanishes_on_constant_state() {
        let profile = setup(512);
        let mut state = FieldState::from_profile(&profile);
        let vc = profile.end_states.v_minus;
        let hc = profile.end_states.u_minus;
        state.v.iter_mut().for_each(|x| *x = vc);
        state.h.iter_mut().for_each(|x| *x = hc);
        let (dv, dh) = semidiscrete_rhs(&state, &profile).unwrap();
        for i in 0..state.grid.n {
            assert_eq!(dv[i], 0.0);
            assert_eq!(dh[i], 0.0);
        }
    }

    #[test]
    fn rhs_on_profile_is_second_order_small() {
        let mut prev = f64::INFINITY;
        for n in [1024usize, 2048, 4096] {
            let profile = setup(n);
            let state = FieldState::from_profile(&profile);
            let (dv, dh) = semidiscrete_rhs(&state, &profile).unwrap();
            let worst = dv
                .iter()
                .chain(dh.iter())
                .fold(0.0f64, |acc, &x| acc.max(x.abs()));
            assert!(worst < prev / 3.0, "n = {n}: {worst:e} vs prev {prev:e}");
            prev = worst;
        }
        assert!(prev < 1e-5);
    }

    #[test]
    fn balanced_stepper_fixes_the_profile_bitwise() {
        let profile = setup(1024);
        let mut state = FieldState::from_profile(&profile);
        let stepper = Stepper::balanced(&profile, 1e-6).unwrap();
        let dt = stepper.dt_bound(&state, 0.4);
        for _ in 0..50 {
            stepper.advance(&mut state, dt).unwrap();
        }
        assert_eq!(state.v, profile.v);
        assert_eq!(state.h, profile.h);
    }

    #[test]
    fn vacuum_aborts_the_step() {
        let profile = setup(512);
        let mut state = FieldState::from_profile(&profile);
        state.v[200] = 5e-7;
        let err = semidiscrete_rhs(&state, &profile).unwrap_err();
        assert!(matches!(err, Error::VacuumProximity { .. }));
    }

    #[test]
    fn simulate_small_bump_conserves_and_stays_positive() {
        let profile = setup(1024);
        let pert = PerturbationSpec {
            bumps: vec![Bump {
                field: BumpField::V,
                shape: BumpShape::Gaussian,
                center: -20.0,
                width: 5.0,
                amplitude: 0.05,
            }],
        };
        let params = SimulationParams {
            t_end: 2.0,
            cfl: 0.4,
            floor: 1e-6,
            snapshot_cadence: 1.0,
        };
        let traj = simulate(&profile, &pert, &params).unwrap();
        assert!(traj.snapshots.len() >= 3);
        let last = traj.monitors.last().unwrap();
        assert!(last.min_v > 0.5);
        assert!(last.mass_defect < 1e-10, "mass defect {:e}", last.mass_defect);
        assert!(last.boundary_leak < 1e-12);
        for m in &traj.monitors {
            assert!(m.entropy_residual.abs() < 1e-4, "entropy residual {:e}", m.entropy_residual);
        }
        assert_abs_diff_eq!(last.t, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_time_returns_single_snapshot() {
        let profile = setup(512);
        let params = SimulationParams {
            t_end: 0.0,
            cfl: 0.4,
            floor: 1e-6,
            snapshot_cadence: 1.0,
        };
        let traj = simulate(&profile, &PerturbationSpec::default(), &params).unwrap();
        assert_eq!(traj.snapshots.len(), 1);
        assert_eq!(traj.monitors.len(), 1);
    }

    #[test]
    fn zero_amplitude_reproduces_profile_run() {
        let profile = setup(512);
        let pert = PerturbationSpec {
            bumps: vec![Bump {
                field: BumpField::H,
                shape: BumpShape::Gaussian,
                center: 0.0,
                width: 1.0,
                amplitude: 0.0,
            }],
        };
        let params = SimulationParams {
            t_end: 1.0,
            cfl: 0.4,
            floor: 1e-6,
            snapshot_cadence: 0.5,
        };
        let traj = simulate(&profile, &pert, &params).unwrap();
        let last = traj.snapshots.last().unwrap();
        assert_eq!(last.v, profile.v);
        assert_eq!(last.h, profile.h);
    }

    #[test]
    fn bump_support_validation() {
        let pert = PerturbationSpec {
            bumps: vec![Bump {
                field: BumpField::V,
                shape: BumpShape::Gaussian,
                center: -190.0,
                width: 5.0,
                amplitude: 0.1,
            }],
        };
        assert!(pert.validate(400.0).is_err());
        assert!(pert.validate(800.0).is_ok());
    }

    #[test]
    fn recover_u_matches_profile_u() {
        let profile = setup(4096);
        let state = FieldState::from_profile(&profile);
        let u = state.recover_u();
        let mut worst: f64 = 0.0;
        for (ui, pi) in u.iter().zip(&profile.u) {
            worst = worst.max((ui - pi).abs());
        }
        assert!(worst < 1e-6, "u recovery error {worst:e}");
    }
}
