//! Weighted relative-entropy functionals: the weight built from the profile
//! pressure, the relative entropy itself, the shift derivative Y, the
//! hyperbolic and parabolic flux terms with their bad/good splits, truncated
//! and normalized variants, and the empirical ledger of the inequalities that
//! close the contraction estimate.

use serde::{Deserialize, Serialize};

use crate::dynamics::FieldState;
use crate::error::{Error, Result};
use crate::model::{phi, pressure, EndStates, GasModel};
use crate::numerics::{cubic_interp, deriv2, linear_interp, Grid};
use crate::profiles::ShockProfile;

/// Weight a(xi) = 1 - (lambda/eps) (p(v(xi)) - p(v_minus)) and its analytic
/// slope. The weight increases across waves of the second family and
/// decreases across the first, so that sigma a' > 0 either way.
#[derive(Debug, Clone)]
pub struct Weight {
    pub lambda: f64,
    pub a: Vec<f64>,
    pub a_prime: Vec<f64>,
}

pub fn build_weight(profile: &ShockProfile, lambda: f64) -> Result<Weight> {
    if !(lambda > 0.0 && lambda < 1.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("weight strength lambda = {lambda} must lie in (0, 1)")));
    }
    let es = &profile.end_states;
    let p_minus = pressure(es.v_minus);
    let scale = lambda / es.eps;
    let n = profile.grid.n;
    let mut a = vec![0.0; n];
    let mut a_prime = vec![0.0; n];
    for i in 0..n {
        a[i] = 1.0 - scale * (profile.p[i] - p_minus);
        a_prime[i] = -scale * profile.dp[i];
    }
    let weight = Weight { lambda, a, a_prime };
    for i in 0..n {
        if weight.a[i] <= 0.0 {
            return Err(Error::Domain(format!("weight not positive at node {i}")));
        }
        if es.sigma * weight.a_prime[i] < 0.0 {
            return Err(Error::Domain(format!(
                "weight slope has the wrong sign at node {i}"
            )));
        }
    }
    Ok(weight)
}

/// Relative entropy density phi(v1/v2) + (h1 - h2)^2 / 2 and its integral.
pub fn eta_rel(
    v1: &[f64],
    h1: &[f64],
    v2: &[f64],
    h2: &[f64],
    grid: &Grid,
) -> (Vec<f64>, f64) {
    let mut density = vec![0.0; grid.n];
    let mut integral = 0.0;
    for i in 0..grid.n {
        density[i] = phi(v1[i] / v2[i]) + 0.5 * (h1[i] - h2[i]) * (h1[i] - h2[i]);
        integral += grid.weight(i) * density[i];
    }
    (density, integral)
}

/// Relative entropy between two (v, u) pairs measured through the effective
/// velocity h = u - nu v_xi / v^(1+alpha), with v_xi differenced on the grid.
pub fn bd_rel_e(
    v1: &[f64],
    u1: &[f64],
    v2: &[f64],
    u2: &[f64],
    nu: f64,
    model: &GasModel,
    grid: &Grid,
) -> f64 {
    let ap1 = 1.0 + model.alpha();
    let dv1 = deriv2(v1, grid.dx);
    let dv2 = deriv2(v2, grid.dx);
    let mut integral = 0.0;
    for i in 0..grid.n {
        let h1 = u1[i] - nu * dv1[i] / v1[i].powf(ap1);
        let h2 = u2[i] - nu * dv2[i] / v2[i].powf(ap1);
        integral += grid.weight(i) * (phi(v1[i] / v2[i]) + 0.5 * (h1 - h2) * (h1 - h2));
    }
    integral
}

/// The state translated by the shift: U^X(xi) = U(xi + X), interpolated
/// cubically, with constant extension past the boundary. X = 0 returns the
/// state unchanged, bit for bit.
pub fn shifted_field(state: &FieldState, x: f64) -> Result<FieldState> {
    let window = state.grid.l / 4.0;
    if x.abs() > window || !x.is_finite() {
        return Err(Error::ShiftWindow { t: state.t, x, window });
    }
    if x == 0.0 {
        return Ok(state.clone());
    }
    let g = &state.grid;
    let mut out = state.clone();
    for i in 0..g.n {
        let q = g.xi[i] + x;
        out.v[i] = cubic_interp(-g.l, g.dx, &state.v, q);
        out.h[i] = cubic_interp(-g.l, g.dx, &state.h, q);
    }
    Ok(out)
}

/// How the pressure deviation is clipped before rebuilding the volume field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationMode {
    /// Clip to [-k, k].
    TwoSided,
    /// Clip from below at -k, leaving large positive deviations alone.
    LowerOnly,
    /// Clip from above at k, leaving large negative deviations alone.
    UpperOnly,
}

/// Truncated volume field: v_bar = 1 / (p(v_tilde) + psi_k(p(v) - p(v_tilde))).
pub fn truncate(v: &[f64], profile: &ShockProfile, k: f64, mode: TruncationMode) -> Vec<f64> {
    let n = profile.grid.n;
    let mut out = vec![0.0; n];
    for i in 0..n {
        let rel = pressure(v[i]) - profile.p[i];
        let psi = match mode {
            TruncationMode::TwoSided => rel.clamp(-k, k),
            TruncationMode::LowerOnly => rel.max(-k),
            TruncationMode::UpperOnly => rel.min(k),
        };
        out[i] = 1.0 / (profile.p[i] + psi);
    }
    out
}

/// Every term of the contraction-rate decomposition, evaluated on one
/// (already shifted) state against the fixed profile and weight. All
/// integrals are trapezoid sums; the derivative of the pressure deviation is
/// differenced on the grid, while profile and weight slopes are analytic.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    /// Weighted relative entropy between the state and the profile.
    pub wre: f64,
    /// Derivative of the weighted relative entropy with respect to the shift.
    pub y: f64,
    pub j_bad: f64,
    pub j_para: f64,
    pub j_good: f64,
    pub b1_plus: f64,
    pub b1_minus: f64,
    pub b2: f64,
    pub gh_plus: f64,
    pub gh_minus: f64,
    pub gv: f64,
    pub d_diss: f64,
    pub b3: f64,
    pub b4: f64,
    pub b5: f64,
    pub y_g: f64,
    pub y_b: f64,
    pub y_l: f64,
    pub y_s: f64,
    /// Quadratic model of Y evaluated on the truncated volume field.
    pub i_gy: f64,
    pub i1: f64,
    pub i2: f64,
    pub gv_trunc: f64,
    /// Extra diagnostics: the h-part of the localization integral, the
    /// sensitivity of Y to the shift, and the unweighted quantities tracked
    /// through viscosity sweeps.
    pub aprime_h2: f64,
    pub dy_dx: f64,
    pub eta_unweighted: f64,
    pub gv_vtilde: f64,
    pub d_unweighted: f64,
    pub delta3: f64,
}

impl FunctionalReport {
    pub fn b_delta(&self) -> f64 {
        self.b1_plus + self.b1_minus + self.b2
    }

    pub fn g_delta(&self) -> f64 {
        self.gh_plus + self.gh_minus + self.gv + self.d_diss
    }

    /// (J_bad - J_good) - (B - G); identically zero up to roundoff.
    pub fn identity_bg(&self) -> f64 {
        (self.j_bad - self.j_good) - (self.b_delta() - self.g_delta())
    }

    /// Y - (Y_g + Y_b + Y_l + Y_s); identically zero up to roundoff.
    pub fn identity_y(&self) -> f64 {
        self.y - (self.y_g + self.y_b + self.y_l + self.y_s)
    }

    /// Magnitude scale of the report, for relative tolerances.
    pub fn scale(&self) -> f64 {
        self.wre.abs()
            + self.y.abs()
            + self.j_bad.abs()
            + self.j_para.abs()
            + self.j_good.abs()
            + self.b_delta().abs()
            + self.g_delta()
    }
}

/// Evaluates the full decomposition of the contraction rate on a state.
pub fn decompose(
    state: &FieldState,
    profile: &ShockProfile,
    weight: &Weight,
    delta3: f64,
) -> Result<FunctionalReport> {
    state.grid.ensure_matches(&profile.grid)?;
    if state.nu != profile.nu {
        return Err(Error::Domain(format!(
            "state viscosity {} does not match profile viscosity {}",
            state.nu, profile.nu
        )));
    }
    if !(delta3 > 0.0) {
        return Err(Error::Domain(format!("delta3 = {delta3} must be positive")));
    }
    let g = &state.grid;
    let n = g.n;
    let es = &profile.end_states;
    let sigma = es.sigma;
    let nu = state.nu;
    let beta = state.model.beta();

    let p: Vec<f64> = state.v.iter().map(|&vi| pressure(vi)).collect();
    let rel: Vec<f64> = (0..n).map(|i| p[i] - profile.p[i]).collect();
    let drel = deriv2(&rel, g.dx);
    let dvs = deriv2(&state.v, g.dx);
    let dhs = deriv2(&state.h, g.dx);

    let mut r = FunctionalReport { delta3, ..Default::default() };

    for i in 0..n {
        let w = g.weight(i);
        let a = weight.a[i];
        let ap = weight.a_prime[i];
        let vt = profile.v[i];
        let ht = profile.h[i];
        let dvt = profile.dv[i];
        let dpt = profile.dp[i];
        let hdt = dpt / sigma;
        let v = state.v[i];
        let dh = state.h[i] - ht;
        let rl = rel[i];
        let ph = phi(v / vt);
        let eta = ph + 0.5 * dh * dh;
        let vb = v.powf(beta);
        let vtb = profile.vbeta[i];
        let relp = v * rl * rl;
        let in_omega = rl <= delta3;

        r.wre += w * a * eta;
        r.eta_unweighted += w * eta;
        r.aprime_h2 += w * ap * dh * dh;
        r.gv_vtilde += w * dvt.abs() * ph;

        r.y += w * (-ap * eta + a * (-dpt * (v - vt) + hdt * dh));
        r.dy_dx += w * (-ap * (-rl * dvs[i] + dh * dhs[i]) + a * (-dpt * dvs[i] + hdt * dhs[i]));

        r.j_bad += w * (ap * rl * dh + sigma * a * dvt * relp);
        r.b3 += w * (-nu * ap * vb * rl * drel[i]);
        r.b4 += w * (-nu * ap * rl * (vb - vtb) * dpt);
        r.b5 += w * (-nu * a * drel[i] * (vb - vtb) * dpt);
        r.j_good += w * (sigma * ap * ph + 0.5 * sigma * ap * dh * dh
            + nu * a * vb * drel[i] * drel[i]);

        r.b2 += w * sigma * a * dvt * relp;
        r.gv += w * sigma * ap * ph;
        r.d_diss += w * nu * a * vb * drel[i] * drel[i];
        r.d_unweighted += w * vb * drel[i] * drel[i];

        let gq = dh - rl / sigma;
        if in_omega {
            r.b1_plus += w * ap * rl * rl / (2.0 * sigma);
            r.gh_plus += w * 0.5 * sigma * ap * gq * gq;
            r.y_g += w * (-ap * rl * rl / (2.0 * sigma * sigma) - ap * ph - a * dpt * (v - vt)
                + a * hdt * rl / sigma);
            r.y_b += w * (-0.5 * ap * gq * gq - ap * rl * gq / sigma);
            r.y_l += w * a * hdt * gq;
        } else {
            r.b1_minus += w * ap * rl * dh;
            r.gh_minus += w * 0.5 * sigma * ap * dh * dh;
            r.y_s += w * (-ap * ph - a * dpt * (v - vt) - 0.5 * ap * dh * dh + a * hdt * dh);
        }
    }
    r.j_para = r.b3 + r.b4 + r.b5;

    // Quadratic model terms on the two-sided truncated volume field.
    let v_bar = truncate(&state.v, profile, delta3, TruncationMode::TwoSided);
    for (i, &vb) in v_bar.iter().enumerate() {
        let w = g.weight(i);
        let a = weight.a[i];
        let ap = weight.a_prime[i];
        let psi = pressure(vb) - profile.p[i];
        let ph_bar = phi(vb / profile.v[i]);
        let hdt = profile.dp[i] / sigma;
        r.i1 += w * ap * psi * psi / (2.0 * sigma);
        r.i2 += w * sigma * a * profile.dv[i] * vb * psi * psi;
        r.gv_trunc += w * sigma * ap * ph_bar;
        r.i_gy += w * (-ap * psi * psi / (2.0 * sigma * sigma) - ap * ph_bar
            - a * profile.dp[i] * (vb - profile.v[i])
            + a * hdt * psi);
    }

    Ok(r)
}

/// Normalized variables: the layer coordinate y in [0, 1] carried by the
/// profile pressure, the pressure deviation w of the state, and its weighted
/// version W = (lambda/eps) w, resampled onto a uniform interior y-grid.
#[derive(Debug, Clone)]
pub struct NormalizedVars {
    /// Layer coordinate at each xi-node.
    pub y_of_xi: Vec<f64>,
    /// Uniform interior y-grid.
    pub y: Vec<f64>,
    /// Pressure deviation p(v) - p(v_tilde) composed with xi(y).
    pub w: Vec<f64>,
    /// (lambda/eps) w.
    pub cap_w: Vec<f64>,
}

/// Layer coordinate of the profile: 0 at the left state, 1 at the right.
pub fn layer_coordinate(profile: &ShockProfile) -> Vec<f64> {
    let es = &profile.end_states;
    let p_minus = pressure(es.v_minus);
    let sgn = es.family.sign();
    profile
        .p
        .iter()
        .map(|&pt| sgn * (p_minus - pt) / es.eps)
        .collect()
}

pub fn normalized_vars(
    v: &[f64],
    profile: &ShockProfile,
    lambda: f64,
    m: usize,
) -> Result<NormalizedVars> {
    if v.len() != profile.grid.n {
        return Err(Error::GridMismatch("state/profile length".into()));
    }
    if m < 3 {
        return Err(Error::Domain("normalized grid needs at least 3 points".into()));
    }
    let y_of_xi = layer_coordinate(profile);
    // Strictly increasing backbone for inversion.
    let mut ys = Vec::with_capacity(y_of_xi.len());
    let mut ws = Vec::with_capacity(y_of_xi.len());
    let mut last = f64::NEG_INFINITY;
    for i in 0..y_of_xi.len() {
        if y_of_xi[i] > last {
            last = y_of_xi[i];
            ys.push(y_of_xi[i]);
            ws.push(pressure(v[i]) - profile.p[i]);
        }
    }
    if ys.len() < 8 {
        return Err(Error::InvalidProfile("layer coordinate is not resolved".into()));
    }
    let mut y = vec![0.0; m];
    let mut w = vec![0.0; m];
    let mut cap_w = vec![0.0; m];
    let scale = lambda / profile.end_states.eps;
    for j in 0..m {
        let yj = (j + 1) as f64 / (m + 1) as f64;
        y[j] = yj;
        w[j] = linear_interp(&ys, &ws, yj);
        cap_w[j] = scale * w[j];
    }
    Ok(NormalizedVars { y_of_xi, y, w, cap_w })
}

/// Discrete check of the change-of-variables identity
/// v_tilde^beta / (y(1-y)) dy/dxi = (eps / (nu |sigma|)) v_tilde,
/// restricted to y in [1e-6, 1 - 1e-6], together with its small-shock
/// normalized form |LHS - eps v_minus^2| / eps^2.
#[derive(Debug, Clone, Copy)]
pub struct JacobianReport {
    pub max_abs_dev: f64,
    pub lemma_sup: f64,
    pub n_nodes: usize,
}

pub fn jacobian_check(profile: &ShockProfile) -> JacobianReport {
    let es = &profile.end_states;
    let eps = es.eps;
    let y = layer_coordinate(profile);
    let dy = deriv2(&y, profile.grid.dx);
    let v_minus_sq = es.v_minus * es.v_minus;
    let mut max_abs_dev: f64 = 0.0;
    let mut lemma_sup: f64 = 0.0;
    let mut count = 0;
    for i in 0..profile.grid.n {
        if y[i] < 1e-6 || y[i] > 1.0 - 1e-6 {
            continue;
        }
        let lhs = profile.vbeta[i] * dy[i] / (y[i] * (1.0 - y[i]));
        let rhs = eps * profile.v[i] / (profile.nu * es.sigma.abs());
        max_abs_dev = max_abs_dev.max((lhs - rhs).abs());
        lemma_sup = lemma_sup.max((lhs - eps * v_minus_sq).abs() / (eps * eps));
        count += 1;
    }
    JacobianReport { max_abs_dev, lemma_sup, n_nodes: count }
}

/// One inequality of the ledger: the worst observed ratio of its left side to
/// its right side over the sampled states.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LedgerRow {
    pub id: String,
    /// None when every sample had both sides at zero (nothing to compare).
    pub ratio: Option<f64>,
    pub n_samples: usize,
}

/// Empirical sup of LHS/RHS for each inequality family (with every constant
/// set to 1), over the reports with |Y| <= eps^2. Samples where both sides
/// vanish are skipped; a family with no usable sample reports no ratio.
pub fn estimate_ledger(
    reports: &[FunctionalReport],
    end_states: &EndStates,
    lambda: f64,
) -> Vec<LedgerRow> {
    let eps = end_states.eps;
    let sigma = end_states.sigma;
    struct Fam {
        id: &'static str,
        lhs: Box<dyn Fn(&FunctionalReport) -> f64>,
        rhs: Box<dyn Fn(&FunctionalReport) -> f64>,
    }
    let el = eps / lambda;
    let families: Vec<Fam> = vec![
        Fam {
            id: "locE",
            lhs: Box::new(move |r| (r.gv / sigma + r.aprime_h2).abs()),
            rhs: Box::new(move |_| eps * eps / lambda),
        },
        Fam {
            id: "bo1p",
            lhs: Box::new(|r| (r.b1_plus - r.i1).abs()),
            rhs: Box::new(move |r| el * r.d_diss + eps.powi(6) / lambda.powi(4) * r.gv),
        },
        Fam {
            id: "bo1m",
            lhs: Box::new(|r| r.b1_minus.abs()),
            rhs: Box::new(move |r| {
                r.delta3 * r.gh_minus + el.powf(0.75) * r.d_diss
                    + eps.powi(6) / lambda.powi(4) * r.gv
            }),
        },
        Fam {
            id: "bo2",
            lhs: Box::new(|r| (r.b2 - r.i2).abs()),
            rhs: Box::new(move |r| {
                el * el * r.d_diss + eps.powi(7) / lambda.powi(5) * r.gv
                    + el * (r.gv - r.gv_trunc)
            }),
        },
        Fam {
            id: "bo",
            lhs: Box::new(|r| r.b_delta().abs() + r.b1_plus.abs()),
            rhs: Box::new(move |r| eps * eps / lambda + el.powf(0.75) * r.d_diss),
        },
        Fam {
            id: "para-B3",
            lhs: Box::new(|r| r.b3.abs()),
            rhs: Box::new(move |r| lambda * r.d_diss + eps * r.gv),
        },
        Fam {
            id: "para-B4",
            lhs: Box::new(|r| r.b4.abs()),
            rhs: Box::new(move |r| eps.powi(3) / lambda * r.d_diss + eps * eps * r.gv),
        },
        Fam {
            id: "para-B5",
            lhs: Box::new(|r| r.b5.abs()),
            rhs: Box::new(move |r| el * r.d_diss + eps * eps * r.gv),
        },
        Fam {
            id: "para-tot",
            lhs: Box::new(|r| r.j_para.abs()),
            rhs: Box::new(move |r| eps * eps / lambda + (lambda + el) * r.d_diss),
        },
        Fam {
            id: "Y-conc",
            lhs: Box::new(|r| {
                (r.y_g - r.i_gy).powi(2) + r.y_b.powi(2) + r.y_l.powi(2) + r.y_s.powi(2)
            }),
            rhs: Box::new(move |r| {
                eps * eps / lambda
                    * (el * r.d_diss
                        + el.sqrt() * r.gv
                        + (r.gv - r.gv_trunc)
                        + r.gh_minus
                        + (lambda / eps).sqrt() * r.gh_plus)
            }),
        },
    ];

    families
        .iter()
        .map(|fam| {
            let mut ratio: Option<f64> = None;
            let mut n = 0;
            for r in reports {
                if r.y.abs() > eps * eps {
                    continue;
                }
                let tiny = 1e-14 * r.scale().max(1e-300);
                let lhs = (fam.lhs)(r);
                let rhs = (fam.rhs)(r);
                if lhs <= tiny && rhs <= tiny {
                    continue;
                }
                n += 1;
                let q = lhs / rhs;
                ratio = Some(ratio.map_or(q, |cur: f64| cur.max(q)));
            }
            LedgerRow { id: fam.id.to_string(), ratio, n_samples: n }
        })
        .collect()
}

/// The sign-definite combination the contraction proof drives below zero: all
/// bad terms, their safety margins, and the negated good terms. Valid on
/// reports with |Y| <= eps^2.
#[derive(Debug, Clone, Copy)]
pub struct RCheck {
    pub r: f64,
    pub scale: f64,
}

pub fn r_combination(rep: &FunctionalReport, eps: f64, lambda: f64, delta0: f64) -> RCheck {
    let e4 = eps.powi(4);
    let el = eps / lambda;
    let b = rep.b_delta();
    let terms = [
        -rep.y * rep.y / e4,
        b,
        delta0 * el * b.abs(),
        delta0 * el * rep.b1_plus,
        rep.j_para,
        delta0 * rep.j_para.abs(),
        -rep.gh_minus,
        -0.5 * rep.gh_plus,
        -(1.0 - delta0 * el) * rep.gv,
        -(1.0 - delta0) * rep.d_diss,
    ];
    let r = terms.iter().sum();
    let scale = terms.iter().map(|t| t.abs()).sum();
    RCheck { r, scale }
}
