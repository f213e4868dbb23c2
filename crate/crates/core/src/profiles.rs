//! Construction of viscous shock profiles: the traveling-wave ODE is
//! integrated outward from the anchor at xi = 0 directly onto the grid nodes,
//! with the velocity components slaved to the volume profile in closed form.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{pressure, pressure_deriv, EndStates, GasModel};
use crate::numerics::{cubic_interp, deriv4, fit_line, Grid};

/// Chord of the pressure between the end states: the line through
/// (v_minus, p_minus) with slope -sigma^2.
#[inline]
fn chord(v: f64, es: &EndStates) -> f64 {
    pressure(es.v_minus) - es.sigma * es.sigma * (v - es.v_minus)
}

/// Right-hand side of the scalar profile ODE dv/dxi = f(v). The profile is a
/// heteroclinic connection between the zeros at v_minus and v_plus.
pub fn profile_rhs(v: f64, es: &EndStates, model: &GasModel, nu: f64) -> f64 {
    v.powf(1.0 + model.alpha()) * (chord(v, es) - pressure(v)) / (nu * es.sigma)
}

/// Exponential decay rate of the profile tail at the given end state value.
fn tail_rate(v_end: f64, es: &EndStates, model: &GasModel, nu: f64) -> f64 {
    v_end.powf(1.0 + model.alpha()) * pressure(v_end) * es.eps / (nu * es.sigma.abs())
}

/// A monotone viscous shock profile sampled on a symmetric grid, with the
/// effective velocity h and the fluid velocity u slaved to v.
#[derive(Debug, Clone)]
pub struct ShockProfile {
    pub grid: Arc<Grid>,
    pub model: GasModel,
    pub end_states: EndStates,
    pub nu: f64,
    /// Volume profile at the grid nodes.
    pub v: Vec<f64>,
    /// Fluid velocity u = u_minus - sigma (v - v_minus).
    pub u: Vec<f64>,
    /// Effective velocity h = u_minus + (p(v) - p_minus) / sigma.
    pub h: Vec<f64>,
    /// Profile slope from the ODE right-hand side (analytic, not differenced).
    pub dv: Vec<f64>,
    /// Pressure p(v) at the nodes.
    pub p: Vec<f64>,
    /// Pressure slope p'(v) dv at the nodes.
    pub dp: Vec<f64>,
    /// v^beta at the nodes.
    pub vbeta: Vec<f64>,
    /// xi beyond which the profile is held constant on the left / right.
    pub stop_left: f64,
    pub stop_right: f64,
}

impl ShockProfile {
    /// Midpoint volume pinned at xi = 0.
    pub fn anchor(&self) -> f64 {
        0.5 * (self.end_states.v_minus + self.end_states.v_plus)
    }

    pub fn sample_v(&self, xi: f64) -> f64 {
        cubic_interp(-self.grid.l, self.grid.dx, &self.v, xi)
    }

    pub fn sample_u(&self, xi: f64) -> f64 {
        cubic_interp(-self.grid.l, self.grid.dx, &self.u, xi)
    }

    pub fn sample_h(&self, xi: f64) -> f64 {
        cubic_interp(-self.grid.l, self.grid.dx, &self.h, xi)
    }

    pub fn sample_dv(&self, xi: f64) -> f64 {
        cubic_interp(-self.grid.l, self.grid.dx, &self.dv, xi)
    }

    /// Far-field gaps |v(-L) - v_minus| and |v(L) - v_plus|.
    pub fn tail_gaps(&self) -> (f64, f64) {
        let es = &self.end_states;
        (
            (self.v[0] - es.v_minus).abs(),
            (self.v[self.grid.n - 1] - es.v_plus).abs(),
        )
    }
}

/// Empirical tail decay rates of the profile slope against the expected
/// linearization rates at the two end states.
#[derive(Debug, Clone, Copy)]
pub struct TailReport {
    pub rate_left: f64,
    pub rate_right: f64,
    pub expected_left: f64,
    pub expected_right: f64,
    pub gap_left: f64,
    pub gap_right: f64,
}

/// Builds the unit-viscosity profile. See [`build_profile_nu`].
pub fn build_profile(
    end_states: &EndStates,
    model: &GasModel,
    l: f64,
    n: usize,
    anchor_tol: f64,
) -> Result<ShockProfile> {
    build_profile_nu(end_states, model, l, n, anchor_tol, 1.0)
}

/// Builds the profile for viscosity strength nu by marching the profile ODE
/// from the anchor v(0) = (v_minus + v_plus)/2 outward to both boundaries with
/// substepped fixed-step RK4. Integration stops once v is within
/// 1e-12 |v_plus - v_minus| of the end value; beyond that the profile is
/// constant.
pub fn build_profile_nu(
    end_states: &EndStates,
    model: &GasModel,
    l: f64,
    n: usize,
    anchor_tol: f64,
    nu: f64,
) -> Result<ShockProfile> {
    if !(anchor_tol > 0.0) || !anchor_tol.is_finite() {
        return Err(Error::Domain(format!("anchor_tol = {anchor_tol} must be positive")));
    }
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::Domain(format!("viscosity strength nu = {nu} must be positive")));
    }
    let eps_l = end_states.eps * l / nu;
    if eps_l < 20.0 {
        return Err(Error::DomainTooShort { eps_l });
    }
    let grid = Grid::symmetric(l, n)?;
    let es = *end_states;
    let mid = 0.5 * (es.v_minus + es.v_plus);
    let amp = (es.v_plus - es.v_minus).abs();
    let stop_tol = 1e-12 * amp;

    // Substep count keeps the RK4 sampling error near anchor_tol relative to
    // the jump amplitude: global error scales like (h * rate)^4.
    let rate_max = tail_rate(es.v_minus, &es, model, nu).max(tail_rate(es.v_plus, &es, model, nu));
    let m = ((grid.dx * rate_max / anchor_tol.powf(0.25)).ceil() as usize).clamp(2, 1024);

    let f = |v: f64| profile_rhs(v, &es, model, nu);

    // March from (0, mid) to the first node on each side, then node to node.
    let n_nodes = grid.n;
    let mut v = vec![0.0; n_nodes];
    // First node at xi > 0 (grid is symmetric, so nodes straddle or hit 0).
    let i_right = grid.xi.partition_point(|&x| x <= 0.0);
    if i_right == 0 || i_right == n_nodes {
        return Err(Error::ProfileConstruction("anchor xi = 0 outside grid".into()));
    }

    // The march integrates the gap w = v - v_end so the exponential tail stays
    // fully resolved; updating v itself would quantize at the ulp of the end
    // state long before the stop threshold is reached.
    let march = |indices: &mut dyn Iterator<Item = usize>,
                 v: &mut [f64],
                 v_end: f64|
     -> Result<f64> {
        let mut cur_x = 0.0;
        let mut cur_w = mid - v_end;
        let mut stopped_at: Option<f64> = None;
        for i in indices {
            let target = grid.xi[i];
            if stopped_at.is_none() {
                let span = target - cur_x;
                let steps = ((span.abs() / grid.dx).ceil() as usize).max(1) * m;
                let h = span / steps as f64;
                for _ in 0..steps {
                    let k1 = f(v_end + cur_w);
                    let k2 = f(v_end + cur_w + 0.5 * h * k1);
                    let k3 = f(v_end + cur_w + 0.5 * h * k2);
                    let k4 = f(v_end + cur_w + h * k3);
                    let prev = cur_w;
                    cur_w += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                    if !cur_w.is_finite() || v_end + cur_w <= 0.0 {
                        return Err(Error::ProfileConstruction(format!(
                            "profile left the admissible region near xi = {cur_x}"
                        )));
                    }
                    // The end value is an equilibrium; crossing it means the
                    // step outran the contraction, so pull back onto the
                    // approach side.
                    if prev * cur_w < 0.0 {
                        cur_w = 0.5 * prev;
                    }
                }
                cur_x = target;
                if cur_w.abs() < stop_tol {
                    stopped_at = Some(target);
                }
            }
            v[i] = v_end + cur_w;
        }
        Ok(stopped_at.unwrap_or(grid.xi[if v_end == es.v_plus { n_nodes - 1 } else { 0 }]))
    };

    let stop_right = march(&mut (i_right..n_nodes), &mut v, es.v_plus)?;
    let stop_left = march(&mut (0..i_right).rev(), &mut v, es.v_minus)?;

    // Slaved fields and cached derived arrays.
    let p_minus = pressure(es.v_minus);
    let beta = model.beta();
    let mut u = vec![0.0; n_nodes];
    let mut h_arr = vec![0.0; n_nodes];
    let mut dv = vec![0.0; n_nodes];
    let mut p = vec![0.0; n_nodes];
    let mut dp = vec![0.0; n_nodes];
    let mut vbeta = vec![0.0; n_nodes];
    for i in 0..n_nodes {
        let vi = v[i];
        p[i] = pressure(vi);
        u[i] = es.u_minus - es.sigma * (vi - es.v_minus);
        h_arr[i] = es.u_minus + (p[i] - p_minus) / es.sigma;
        dv[i] = f(vi);
        dp[i] = pressure_deriv(vi) * dv[i];
        vbeta[i] = vi.powf(beta);
    }

    let profile = ShockProfile {
        grid: Arc::new(grid),
        model: *model,
        end_states: es,
        nu,
        v,
        u,
        h: h_arr,
        dv,
        p,
        dp,
        vbeta,
        stop_left,
        stop_right,
    };
    validate_profile(&profile)?;
    Ok(profile)
}

/// Structural checks: monotonicity in the direction set by the family, slope
/// sign, and resolved tails.
fn validate_profile(profile: &ShockProfile) -> Result<()> {
    let es = &profile.end_states;
    let sgn = es.family.sign();
    for w in profile.v.windows(2) {
        if sgn * (w[1] - w[0]) < 0.0 {
            return Err(Error::InvalidProfile("volume profile is not monotone".into()));
        }
    }
    for &d in &profile.dv {
        if sgn * d <= 0.0 {
            return Err(Error::InvalidProfile(
                "profile slope must keep the sign of the jump direction".into(),
            ));
        }
    }
    let (gap_l, gap_r) = profile.tail_gaps();
    let allowed = 1e-8 * es.amplitude().max(1.0);
    if gap_l > allowed || gap_r > allowed {
        return Err(Error::InvalidProfile(format!(
            "far-field gaps ({gap_l:e}, {gap_r:e}) exceed {allowed:e}; enlarge the domain"
        )));
    }
    Ok(())
}

/// Max-norm residual of the integrated traveling-wave relation
/// nu v^beta d/dxi p(v) = sigma (v - v_minus) + (h - u_minus),
/// with the pressure differentiated by fourth-order stencils.
pub fn shock_residual(profile: &ShockProfile) -> f64 {
    let es = &profile.end_states;
    let dpress = deriv4(&profile.p, profile.grid.dx);
    let mut worst: f64 = 0.0;
    for (i, &dp) in dpress.iter().enumerate() {
        let lhs = profile.nu * profile.vbeta[i] * dp;
        let rhs = es.sigma * (profile.v[i] - es.v_minus) + (profile.h[i] - es.u_minus);
        worst = worst.max((lhs - rhs).abs());
    }
    worst
}

/// Fits the tail decay rates of the slope and reports them with the far-field gaps.
pub fn verify_tails(profile: &ShockProfile) -> Result<TailReport> {
    let es = &profile.end_states;
    let model = &profile.model;
    let expected_left = tail_rate(es.v_minus, es, model, profile.nu);
    let expected_right = tail_rate(es.v_plus, es, model, profile.nu);
    let (gap_left, gap_right) = profile.tail_gaps();

    let fit_side = |side: f64, lo: f64, hi: f64| -> Result<f64> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (i, &x) in profile.grid.xi.iter().enumerate() {
            let r = x.abs();
            if side * x > 0.0 && r >= lo && r <= hi {
                let d = profile.dv[i].abs();
                if d > 0.0 {
                    xs.push(r);
                    ys.push(d.ln());
                }
            }
        }
        if xs.len() < 8 {
            return Err(Error::InvalidProfile(
                "too few tail nodes to fit a decay rate; refine the grid".into(),
            ));
        }
        Ok(-fit_line(&xs, &ys).0)
    };

    let span_r = profile.stop_right.abs().max(profile.grid.dx * 16.0);
    let span_l = profile.stop_left.abs().max(profile.grid.dx * 16.0);
    let rate_right = fit_side(1.0, 0.55 * span_r, 0.95 * span_r)?;
    let rate_left = fit_side(-1.0, 0.55 * span_l, 0.95 * span_l)?;

    Ok(TailReport {
        rate_left,
        rate_right,
        expected_left,
        expected_right,
        gap_left,
        gap_right,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{solve_rankine_hugoniot, ShockFamily};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn example_states() -> (EndStates, GasModel) {
        (
            solve_rankine_hugoniot(1.0, 0.0, 0.1, ShockFamily::Two).unwrap(),
            GasModel::new(0.0).unwrap(),
        )
    }

    #[test]
    fn rhs_frozen_value() {
        let (es, model) = example_states();
        let vt = 0.5 * (es.v_minus + es.v_plus);
        assert_abs_diff_eq!(vt, 1.0555555555555556, epsilon = 1e-12);
        assert_abs_diff_eq!(profile_rhs(vt, &es, &model, 1.0), 0.0029281, epsilon = 1e-6);
    }

    #[test]
    fn rhs_vanishes_at_end_states() {
        let (es, model) = example_states();
        assert_abs_diff_eq!(profile_rhs(es.v_minus, &es, &model, 1.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(profile_rhs(es.v_plus, &es, &model, 1.0), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn profile_anchor_and_slaved_values() {
        let (es, model) = example_states();
        let profile = build_profile(&es, &model, 400.0, 8192, 1e-12).unwrap();
        assert_abs_diff_eq!(profile.sample_v(0.0), 1.0555555555555556, epsilon = 1e-9);
        assert_abs_diff_eq!(profile.sample_h(0.0), -0.0554786, epsilon = 1e-6);
        assert_abs_diff_eq!(profile.sample_u(0.0), -0.0527046, epsilon = 1e-6);
        let (gap_l, gap_r) = profile.tail_gaps();
        assert!(gap_l <= 1e-8, "left gap {gap_l:e}");
        assert!(gap_r <= 1e-8, "right gap {gap_r:e}");
    }

    #[test]
    fn profile_is_monotone_with_positive_slope() {
        let (es, model) = example_states();
        let profile = build_profile(&es, &model, 400.0, 4096, 1e-12).unwrap();
        for w in profile.v.windows(2) {
            assert!(w[1] >= w[0]);
        }
        for &d in &profile.dv {
            assert!(d > 0.0);
        }
        assert!(profile.v[0] >= es.v_minus - 1e-12);
        assert!(profile.v[profile.grid.n - 1] <= es.v_plus + 1e-12);
    }

    #[test]
    fn slaving_identity_holds_pointwise() {
        let (es, model) = example_states();
        let profile = build_profile(&es, &model, 400.0, 2048, 1e-12).unwrap();
        for i in 0..profile.grid.n {
            let lhs = profile.u[i] - profile.h[i];
            let rhs = profile.nu * profile.dv[i]
                / profile.v[i].powf(1.0 + profile.model.alpha());
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-13);
        }
    }

    #[test]
    fn residual_converges_at_fourth_order() {
        let (es, model) = example_states();
        let mut prev = f64::INFINITY;
        for n in [1024usize, 2048, 4096, 8192] {
            let profile = build_profile(&es, &model, 400.0, n, 1e-12).unwrap();
            let r = shock_residual(&profile);
            assert!(r < prev / 3.0 || r <= 1e-12, "n = {n}, residual {r:e}, prev {prev:e}");
            prev = r;
        }
        assert!(prev <= 1e-8, "finest residual {prev:e}");
    }

    #[test]
    fn tail_rates_match_linearization() {
        let (es, model) = example_states();
        let profile = build_profile(&es, &model, 400.0, 8192, 1e-12).unwrap();
        let report = verify_tails(&profile).unwrap();
        assert_relative_eq!(report.rate_left, report.expected_left, max_relative = 0.2);
        assert_relative_eq!(report.rate_right, report.expected_right, max_relative = 0.2);
    }

    #[test]
    fn family_one_profile_is_decreasing() {
        let es = solve_rankine_hugoniot(1.0, 0.0, 0.1, ShockFamily::One).unwrap();
        let model = GasModel::new(0.0).unwrap();
        let profile = build_profile(&es, &model, 400.0, 4096, 1e-12).unwrap();
        for w in profile.v.windows(2) {
            assert!(w[1] <= w[0]);
        }
        for &d in &profile.dv {
            assert!(d < 0.0);
        }
        assert!(shock_residual(&profile) <= 1e-7);
    }

    #[test]
    fn alpha_one_profile_builds() {
        let es = solve_rankine_hugoniot(1.0, 0.0, 0.1, ShockFamily::Two).unwrap();
        let model = GasModel::new(1.0).unwrap();
        let profile = build_profile(&es, &model, 400.0, 4096, 1e-12).unwrap();
        assert!(shock_residual(&profile) <= 1e-7);
    }

    #[test]
    fn nu_scaling_dilates_the_profile() {
        let (es, model) = example_states();
        let p1 = build_profile_nu(&es, &model, 400.0, 8192, 1e-12, 1.0).unwrap();
        let p2 = build_profile_nu(&es, &model, 400.0, 8192, 1e-12, 0.5).unwrap();
        // v_nu(xi) = v_1(xi / nu): the nu = 1/2 profile is compressed by 2.
        for xi in [-40.0, -3.0, 1.7, 25.0] {
            assert_abs_diff_eq!(p2.sample_v(xi), p1.sample_v(xi / 0.5), epsilon = 1e-8);
        }
    }

    #[test]
    fn short_domain_is_rejected() {
        let (es, model) = example_states();
        assert!(matches!(
            build_profile(&es, &model, 100.0, 1024, 1e-12),
            Err(Error::DomainTooShort { .. })
        ));
    }
}
