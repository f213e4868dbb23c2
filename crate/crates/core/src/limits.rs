//! Vanishing-viscosity machinery: well-prepared initial data built from the
//! inviscid shock plus mollified bumps, viscosity sweeps realized through the
//! exact rescaling of the nu = 1 solver, and the drift statistics that bound
//! the limiting shift.

use rayon::prelude::*;

use crate::dynamics::{FieldState, PerturbationSpec, BUMP_SUPPORT_RADIUS};
use crate::error::{Error, Result};
use crate::functionals::build_weight;
use crate::model::{phi, GasModel, RiemannShock};
use crate::numerics::{deriv2, linear_interp, Grid};
use crate::profiles::{build_profile, build_profile_nu, ShockProfile};
use crate::shift::{run_contraction_from, ContractionParams, ContractionRun, ShiftTrace};

/// Smooth compactly supported kernel convolution on the grid. The kernel is
/// the standard bump exp(-1/(1-r^2)) scaled to the half-width, discretized on
/// the nodes and normalized to unit mass; indices are clamped at the ends
/// (the data this smooths is supported well inside the domain).
pub fn mollify(values: &[f64], grid: &Grid, width: f64) -> Vec<f64> {
    let radius = (width / grid.dx).ceil() as i64;
    let mut kernel = Vec::with_capacity((2 * radius + 1) as usize);
    let mut total = 0.0;
    for j in -radius..=radius {
        let r = j as f64 * grid.dx / width;
        let k = if r.abs() < 1.0 {
            (-1.0 / (1.0 - r * r)).exp()
        } else {
            0.0
        };
        kernel.push(k);
        total += k;
    }
    let n = values.len() as i64;
    let mut out = vec![0.0; values.len()];
    for i in 0..n {
        let mut acc = 0.0;
        for (idx, j) in (-radius..=radius).enumerate() {
            let src = (i - j).clamp(0, n - 1) as usize;
            acc += kernel[idx] * values[src];
        }
        out[i as usize] = acc / total;
    }
    out
}

/// Initial state and the entropy bookkeeping that certifies it well prepared.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub state: FieldState,
    /// Relative entropy of the unsmoothed data against the inviscid shock.
    pub e0: f64,
    /// The same quantity at the viscous level: smoothed data against the
    /// profile, measured through the effective velocity.
    pub bd: f64,
    /// |bd - e0|; shrinks with the viscosity.
    pub gap: f64,
}

/// Builds well-prepared initial data for the profile's viscosity: the profile
/// itself lifted by the bumps smoothed at width 8 nu, with the effective
/// velocity recomputed from the smoothed volume. A zero perturbation
/// reproduces the profile bit for bit.
pub fn prepare_initial(
    profile: &ShockProfile,
    perturbation: &PerturbationSpec,
    floor: f64,
) -> Result<PreparedData> {
    let grid = &profile.grid;
    perturbation.validate(grid.l)?;
    if perturbation.is_zero() {
        return Ok(PreparedData {
            state: FieldState::from_profile(profile),
            e0: 0.0,
            bd: 0.0,
            gap: 0.0,
        });
    }
    let nu = profile.nu;
    let width = 8.0 * nu;
    let reach = perturbation
        .bumps
        .iter()
        .map(|b| b.center.abs() + BUMP_SUPPORT_RADIUS * b.width)
        .fold(0.0_f64, f64::max);
    if width >= grid.l - reach {
        return Err(Error::Domain(format!(
            "mollification width {width} reaches the boundary (margin {})",
            grid.l - reach
        )));
    }

    let riemann = RiemannShock { end_states: profile.end_states };
    let bump_v: Vec<f64> = grid
        .xi
        .iter()
        .map(|&xi| perturbation.eval_field(crate::dynamics::BumpField::V, xi))
        .collect();
    let bump_u: Vec<f64> = grid
        .xi
        .iter()
        .map(|&xi| perturbation.eval_field(crate::dynamics::BumpField::H, xi))
        .collect();

    // Euler-level relative entropy of the raw data against the inviscid shock.
    let mut e0 = 0.0;
    for i in 0..grid.n {
        let (vb, ub) = riemann.eval(grid.xi[i]);
        let v0 = vb + bump_v[i];
        if v0 <= floor {
            return Err(Error::VacuumProximity { t: 0.0, min_v: v0, floor });
        }
        let _ = ub;
        e0 += grid.weight(i) * (phi(v0 / vb) + 0.5 * bump_u[i] * bump_u[i]);
    }

    let smooth_v = mollify(&bump_v, grid, width);
    let smooth_u = mollify(&bump_u, grid, width);
    let mut state = FieldState::from_profile(profile);
    let ap1 = 1.0 + state.model.alpha();
    let mut v0 = vec![0.0; grid.n];
    let mut u0 = vec![0.0; grid.n];
    for i in 0..grid.n {
        v0[i] = profile.v[i] + smooth_v[i];
        u0[i] = profile.u[i] + smooth_u[i];
        if v0[i] <= floor {
            return Err(Error::VacuumProximity { t: 0.0, min_v: v0[i], floor });
        }
    }
    let dv0 = deriv2(&v0, grid.dx);
    let mut bd = 0.0;
    for i in 0..grid.n {
        let h0 = u0[i] - nu * dv0[i] / v0[i].powf(ap1);
        state.v[i] = v0[i];
        state.h[i] = h0;
        bd += grid.weight(i)
            * (phi(v0[i] / profile.v[i]) + 0.5 * (h0 - profile.h[i]) * (h0 - profile.h[i]));
    }
    Ok(PreparedData { state, e0, bd, gap: (bd - e0).abs() })
}

/// Geometry and physics of a viscosity sweep. The base fields describe the
/// nu = 1 member; smaller viscosities reuse the same solver on dilated
/// geometry through the exact rescaling (v, u)(t, x) -> (v, u)(nu t, nu x).
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub end_states: crate::model::EndStates,
    pub nu_list: Vec<f64>,
    pub l: f64,
    pub n: usize,
    pub t_end: f64,
    pub lambda: f64,
    pub anchor_tol: f64,
    pub perturbation: PerturbationSpec,
    pub contraction: ContractionParams,
}

pub fn validate_nu_list(nu_list: &[f64], n: usize) -> Result<()> {
    let mut violations = Vec::new();
    if nu_list.is_empty() {
        violations.push("nu_list must not be empty".to_string());
    }
    if let Some(&first) = nu_list.first() {
        if first != 1.0 {
            violations.push(format!("nu_list must start at 1, found {first}"));
        }
    }
    for w in nu_list.windows(2) {
        if !(w[1] < w[0]) {
            violations.push(format!("nu_list must be strictly decreasing at {} -> {}", w[0], w[1]));
        }
    }
    for &nu in nu_list {
        if !(nu > 0.0) {
            violations.push(format!("viscosity {nu} must be positive"));
            continue;
        }
        let m = (n - 1) as f64 / nu;
        if (m - m.round()).abs() > 1e-9 {
            violations.push(format!(
                "(n - 1)/nu = {m} must be an integer so member grids align (nu = {nu})"
            ));
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::Config { violations })
    }
}

/// Per-viscosity results mapped back to physical variables.
#[derive(Debug, Clone)]
pub struct SweepMemberData {
    pub e0: f64,
    pub bd: f64,
    pub bd_gap: f64,
    /// Largest |X_nu(t)| over the physical horizon.
    pub max_abs_x: f64,
    /// max |X_nu| |v_- - v_+| / (sqrt(E0) + E0); zero when the shift never
    /// moves, infinite when it moves with E0 = 0.
    pub drift_ratio: f64,
    /// Physical uniform-estimate triple: sup of the plain relative entropy,
    /// accumulated layer-weighted volume entropy, accumulated plain
    /// dissipation.
    pub triple: [f64; 3],
    /// Physical times and shift X_nu(t) = nu X(t / nu).
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    /// Member-frame trace as recorded by the contraction run.
    pub trace: ShiftTrace,
    pub verdict_pass: bool,
}

#[derive(Debug, Clone)]
pub struct SweepMember {
    pub nu: f64,
    pub outcome: std::result::Result<SweepMemberData, String>,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub members: Vec<SweepMember>,
    /// L1(0, T) distances between consecutive successful shift curves.
    pub l1_gaps: Vec<f64>,
    /// Largest drift ratio across the sweep: the measured C(T).
    pub c_drift: f64,
}

fn run_member(config: &SweepConfig, model: &GasModel, nu: f64) -> Result<SweepMemberData> {
    let l_m = config.l / nu;
    let n_m = ((config.n - 1) as f64 / nu).round() as usize + 1;
    let profile = build_profile(&config.end_states, model, l_m, n_m, config.anchor_tol)?;
    let weight = build_weight(&profile, config.lambda)?;
    let pert = config.perturbation.dilate(1.0 / nu);
    let prep = prepare_initial(&profile, &pert, config.contraction.positivity_floor)?;
    let params = ContractionParams {
        t_end: config.t_end / nu,
        ..config.contraction.clone()
    };
    let run = run_contraction_from(&profile, &weight, prep.state.clone(), &params)?;
    Ok(member_data(nu, &prep, run, config.end_states.amplitude()))
}

fn member_data(
    nu: f64,
    prep: &PreparedData,
    run: ContractionRun,
    jump: f64,
) -> SweepMemberData {
    // Physical quantities: x-integrals gain a factor nu, times dilate by nu.
    let e0 = nu * prep.e0;
    let bd = nu * prep.bd;
    let times: Vec<f64> = run.trace.times.iter().map(|&t| nu * t).collect();
    let x: Vec<f64> = run.trace.x.iter().map(|&z| nu * z).collect();
    let max_abs_x = x.iter().fold(0.0_f64, |acc, &z| acc.max(z.abs()));
    let drift_ratio = if max_abs_x == 0.0 {
        0.0
    } else if e0 > 0.0 {
        max_abs_x * jump / (e0.sqrt() + e0)
    } else {
        f64::INFINITY
    };
    let sup_eta = run
        .trace
        .eta_plain
        .iter()
        .fold(0.0_f64, |acc, &e| acc.max(e));
    let triple = [
        nu * sup_eta,
        nu * run.trace.layer_phi_accum.last().copied().unwrap_or(0.0),
        nu * run.trace.diss_plain_accum.last().copied().unwrap_or(0.0),
    ];
    SweepMemberData {
        e0,
        bd,
        bd_gap: (bd - e0).abs(),
        max_abs_x,
        drift_ratio,
        triple,
        times,
        x,
        verdict_pass: run.verdict.pass,
        trace: run.trace,
    }
}

/// Runs the sweep: one member per viscosity, in parallel, each through the
/// rescaled nu = 1 problem; failures annotate the report instead of aborting
/// the other members.
pub fn run_sweep(config: &SweepConfig, model: &GasModel) -> Result<SweepReport> {
    validate_nu_list(&config.nu_list, config.n)?;
    let members: Vec<SweepMember> = config
        .nu_list
        .par_iter()
        .map(|&nu| SweepMember {
            nu,
            outcome: run_member(config, model, nu).map_err(|e| e.to_string()),
        })
        .collect();

    // L1 gaps between consecutive successful members on a shared time grid.
    let mut l1_gaps = Vec::new();
    let samples = 1025;
    for pair in members.windows(2) {
        if let (Ok(a), Ok(b)) = (&pair[0].outcome, &pair[1].outcome) {
            let mut gap = 0.0;
            let t_end = config.t_end;
            let dt = t_end / (samples - 1) as f64;
            let mut prev = 0.0;
            for s in 0..samples {
                let t = s as f64 * dt;
                let xa = linear_interp(&a.times, &a.x, t);
                let xb = linear_interp(&b.times, &b.x, t);
                let d = (xa - xb).abs();
                if s > 0 {
                    gap += 0.5 * dt * (prev + d);
                }
                prev = d;
            }
            l1_gaps.push(gap);
        }
    }
    let c_drift = members
        .iter()
        .filter_map(|m| m.outcome.as_ref().ok())
        .map(|d| d.drift_ratio)
        .filter(|r| r.is_finite())
        .fold(0.0_f64, f64::max);
    Ok(SweepReport { members, l1_gaps, c_drift })
}

/// A contraction run at the physical viscosity on the physical grid, without
/// rescaling; used to certify the rescaling against a direct solve.
#[derive(Debug)]
pub struct DirectRun {
    pub profile: ShockProfile,
    pub prepared: PreparedData,
    pub run: ContractionRun,
}

#[allow(clippy::too_many_arguments)]
pub fn run_direct(
    end_states: &crate::model::EndStates,
    model: &GasModel,
    nu: f64,
    l: f64,
    n: usize,
    anchor_tol: f64,
    lambda: f64,
    perturbation: &PerturbationSpec,
    params: &ContractionParams,
) -> Result<DirectRun> {
    let profile = build_profile_nu(end_states, model, l, n, anchor_tol, nu)?;
    let weight = build_weight(&profile, lambda)?;
    let prepared = prepare_initial(&profile, perturbation, params.positivity_floor)?;
    let run = run_contraction_from(&profile, &weight, prepared.state.clone(), params)?;
    Ok(DirectRun { profile, prepared, run })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{Bump, BumpField, BumpShape};
    use crate::model::{solve_rankine_hugoniot, ShockFamily};
    use approx::assert_relative_eq;

    fn base() -> (crate::model::EndStates, GasModel) {
        let es = solve_rankine_hugoniot(1.0, 0.0, 0.1, ShockFamily::Two).unwrap();
        let model = GasModel::new(0.0).unwrap();
        (es, model)
    }

    fn one_bump(amp: f64) -> PerturbationSpec {
        PerturbationSpec {
            bumps: vec![Bump {
                field: BumpField::V,
                shape: BumpShape::Gaussian,
                center: -30.0,
                width: 5.0,
                amplitude: amp,
            }],
        }
    }

    #[test]
    fn mollifier_preserves_mass_and_smooths() {
        let grid = Grid::symmetric(50.0, 1001).unwrap();
        let spike: Vec<f64> = grid
            .xi
            .iter()
            .map(|&x| if x.abs() < 2.0 { 1.0 } else { 0.0 })
            .collect();
        let smooth = mollify(&spike, &grid, 4.0);
        let mass_in: f64 = spike.iter().sum::<f64>() * grid.dx;
        let mass_out: f64 = smooth.iter().sum::<f64>() * grid.dx;
        assert_relative_eq!(mass_in, mass_out, max_relative = 1e-10);
        // The smoothed field has no jumps of the original size.
        let max_step = smooth
            .windows(2)
            .map(|p| (p[1] - p[0]).abs())
            .fold(0.0_f64, f64::max);
        assert!(max_step < 0.2);
        // Narrow kernels degenerate to the identity.
        let tiny = mollify(&spike, &grid, 0.01);
        assert_eq!(tiny, spike);
    }

    #[test]
    fn zero_perturbation_prepares_the_profile_bitwise() {
        let (es, model) = base();
        let profile = build_profile(&es, &model, 400.0, 1024, 1e-10).unwrap();
        let prep = prepare_initial(&profile, &PerturbationSpec::default(), 1e-6).unwrap();
        assert_eq!(prep.state.v, profile.v);
        assert_eq!(prep.state.h, profile.h);
        assert_eq!(prep.e0, 0.0);
        assert_eq!(prep.bd, 0.0);
        assert_eq!(prep.gap, 0.0);
    }

    #[test]
    fn prepared_entropy_is_viscosity_independent() {
        let (es, model) = base();
        let pert = one_bump(0.3);
        let p1 = build_profile_nu(&es, &model, 400.0, 2048, 1e-10, 1.0).unwrap();
        let p2 = build_profile_nu(&es, &model, 400.0, 2048, 1e-10, 0.5).unwrap();
        let prep1 = prepare_initial(&p1, &pert, 1e-6).unwrap();
        let prep2 = prepare_initial(&p2, &pert, 1e-6).unwrap();
        assert!(prep1.e0 > 0.0);
        // E0 is an inviscid quantity: identical across viscosities.
        assert_relative_eq!(prep1.e0, prep2.e0, max_relative = 1e-13);
        // The viscous-level entropy approaches E0 as nu shrinks.
        assert!(prep2.gap < prep1.gap);
    }

    #[test]
    fn vacuum_touching_data_is_rejected() {
        let (es, model) = base();
        let profile = build_profile(&es, &model, 400.0, 1024, 1e-10).unwrap();
        let pert = one_bump(-1.5);
        assert!(matches!(
            prepare_initial(&profile, &pert, 1e-6),
            Err(Error::VacuumProximity { .. })
        ));
    }

    #[test]
    fn nu_list_validation_collects_violations() {
        assert!(validate_nu_list(&[1.0, 0.5, 0.25], 1025).is_ok());
        let err = validate_nu_list(&[0.5, 0.6, 0.3], 1025).unwrap_err();
        match err {
            Error::Config { violations } => {
                assert!(violations.len() >= 2, "{violations:?}");
            }
            other => panic!("unexpected error {other:?}"),
        }
        // Member grids must align: (n-1)/nu integral.
        assert!(validate_nu_list(&[1.0, 0.3], 1025).is_err());
    }

    #[test]
    fn quiet_sweep_never_shifts() {
        let (es, model) = base();
        let config = SweepConfig {
            end_states: es,
            nu_list: vec![1.0, 0.5],
            l: 400.0,
            n: 1025,
            t_end: 0.5,
            lambda: 0.3,
            anchor_tol: 1e-10,
            perturbation: PerturbationSpec::default(),
            contraction: ContractionParams {
                t_end: 0.0,
                ..Default::default()
            },
        };
        let report = run_sweep(&config, &model).unwrap();
        assert_eq!(report.members.len(), 2);
        for member in &report.members {
            let data = member.outcome.as_ref().unwrap();
            assert_eq!(data.e0, 0.0);
            assert_eq!(data.max_abs_x, 0.0);
            assert_eq!(data.drift_ratio, 0.0);
            assert!(data.verdict_pass);
        }
        assert_eq!(report.c_drift, 0.0);
        assert_eq!(report.l1_gaps, vec![0.0]);
    }

    #[test]
    fn perturbed_sweep_produces_finite_statistics() {
        let (es, model) = base();
        let config = SweepConfig {
            end_states: es,
            nu_list: vec![1.0, 0.5],
            l: 400.0,
            n: 1025,
            t_end: 1.0,
            lambda: 0.3,
            anchor_tol: 1e-10,
            perturbation: one_bump(0.1),
            contraction: ContractionParams::default(),
        };
        let report = run_sweep(&config, &model).unwrap();
        let mut e0s = Vec::new();
        for member in &report.members {
            let data = member.outcome.as_ref().expect("member failed");
            assert!(data.e0 > 0.0);
            assert!(data.drift_ratio.is_finite());
            assert!(data.triple.iter().all(|t| t.is_finite() && *t >= 0.0));
            assert!(data.verdict_pass);
            // Physical times span [0, T].
            assert_relative_eq!(*data.times.last().unwrap(), 1.0, max_relative = 1e-9);
            e0s.push(data.e0);
        }
        // The physical E0 agrees across members up to quadrature error.
        assert_relative_eq!(e0s[0], e0s[1], max_relative = 1e-5);
        assert_eq!(report.l1_gaps.len(), 1);
        assert!(report.l1_gaps[0].is_finite());
        assert!(report.c_drift.is_finite());
    }
}
