//! Isothermal gas law, entropy building blocks, and the jump-condition solver
//! connecting the two constant far-field states of a shock.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Isothermal gas with pressure p(v) = 1/v and viscosity mu(v) = v^(-alpha).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasModel {
    alpha: f64,
}

impl GasModel {
    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Domain(format!(
                "viscosity exponent alpha = {alpha} must lie in [0, 1]"
            )));
        }
        Ok(Self { alpha })
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Exponent of the diffusion coefficient v^beta acting on p(v); always 1 - alpha.
    #[inline]
    pub fn beta(&self) -> f64 {
        1.0 - self.alpha
    }
}

/// p(v) = 1/v. Caller guarantees v > 0; see [`try_pressure`] for the checked form.
#[inline]
pub fn pressure(v: f64) -> f64 {
    debug_assert!(v > 0.0);
    1.0 / v
}

/// p'(v) = -1/v^2.
#[inline]
pub fn pressure_deriv(v: f64) -> f64 {
    debug_assert!(v > 0.0);
    -1.0 / (v * v)
}

pub fn try_pressure(v: f64) -> Result<f64> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::Domain(format!("specific volume v = {v} must be positive")));
    }
    Ok(pressure(v))
}

/// Strictly convex entropy kernel phi(z) = z - 1 - log z, nonnegative, zero only at z = 1.
#[inline]
pub fn phi(z: f64) -> f64 {
    debug_assert!(z > 0.0);
    z - 1.0 - z.ln()
}

pub fn try_phi(z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("phi argument z = {z} must be positive")));
    }
    Ok(phi(z))
}

/// Relative pressure p(v|w) = v (p(v) - p(w))^2, the quadratic entropy remainder
/// of the pressure: equals p(v) - p(w) - p'(w)(v - w) exactly for p(v) = 1/v.
#[inline]
pub fn rel_pressure(v: f64, w: f64) -> f64 {
    debug_assert!(v > 0.0 && w > 0.0);
    let dp = pressure(v) - pressure(w);
    v * dp * dp
}

/// Which of the two shock families the jump belongs to. The first family moves
/// left (sigma < 0, v decreasing across the wave), the second moves right
/// (sigma > 0, v increasing).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShockFamily {
    One,
    Two,
}

impl ShockFamily {
    /// Sign of the wave speed: -1 for the first family, +1 for the second.
    #[inline]
    pub fn sign(&self) -> f64 {
        match self {
            ShockFamily::One => -1.0,
            ShockFamily::Two => 1.0,
        }
    }
}

impl std::fmt::Display for ShockFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ShockFamily::One => write!(f, "one"),
            ShockFamily::Two => write!(f, "two"),
        }
    }
}

/// Far-field states and speed of an entropic shock of strength eps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndStates {
    pub v_minus: f64,
    pub v_plus: f64,
    pub u_minus: f64,
    pub u_plus: f64,
    pub sigma: f64,
    pub eps: f64,
    pub family: ShockFamily,
}

impl EndStates {
    /// Residual of the two jump conditions; analytically zero.
    pub fn rh_residual(&self) -> f64 {
        let dv = self.v_plus - self.v_minus;
        let du = self.u_plus - self.u_minus;
        let dp = pressure(self.v_plus) - pressure(self.v_minus);
        (-self.sigma * dv - du).abs() + (-self.sigma * du + dp).abs()
    }

    /// Sound-speed reference 1/v_minus that the speed approaches as eps -> 0.
    pub fn sigma_star(&self) -> f64 {
        1.0 / self.v_minus
    }

    /// Jump amplitude |v_plus - v_minus|.
    pub fn amplitude(&self) -> f64 {
        (self.v_plus - self.v_minus).abs()
    }
}

/// Solves the jump conditions for the shock of the chosen family with pressure
/// drop (family two) or rise (family one) of size eps across the wave.
pub fn solve_rankine_hugoniot(
    v_minus: f64,
    u_minus: f64,
    eps: f64,
    family: ShockFamily,
) -> Result<EndStates> {
    if !(v_minus > 0.0) || !v_minus.is_finite() {
        return Err(Error::Domain(format!(
            "left state v_minus = {v_minus} must be positive"
        )));
    }
    if !u_minus.is_finite() {
        return Err(Error::Domain(format!("left state u_minus = {u_minus} must be finite")));
    }
    if !eps.is_finite() || eps < 0.0 {
        return Err(Error::Domain(format!("shock strength eps = {eps} must be nonnegative")));
    }
    if eps == 0.0 {
        return Err(Error::DegenerateShock);
    }
    let p_minus = pressure(v_minus);
    if eps >= p_minus {
        return Err(Error::AmplitudeTooLarge { eps, p_minus });
    }

    // One code path for both families: only the sign of the pressure jump and
    // of the speed differ. sqrt(p_plus * p_minus) equals sqrt(eps / |dv|).
    let sgn = family.sign();
    let p_plus = p_minus - sgn * eps;
    let v_plus = 1.0 / p_plus;
    let sigma = sgn * (p_plus * p_minus).sqrt();
    let u_plus = u_minus - sigma * (v_plus - v_minus);

    let states = EndStates {
        v_minus,
        v_plus,
        u_minus,
        u_plus,
        sigma,
        eps,
        family,
    };
    let residual = states.rh_residual();
    if residual > 1e-12 {
        return Err(Error::Domain(format!(
            "jump conditions not satisfied to 1e-12 (residual {residual:e})"
        )));
    }
    Ok(states)
}

/// The inviscid shock: a pure jump at xi = 0 in the frame moving with the wave.
#[derive(Debug, Clone, Copy)]
pub struct RiemannShock {
    pub end_states: EndStates,
}

impl RiemannShock {
    pub fn new(end_states: EndStates) -> Self {
        Self { end_states }
    }

    /// Pointwise evaluation; the jump location xi = 0 carries the left state.
    pub fn eval(&self, xi: f64) -> (f64, f64) {
        if xi <= 0.0 {
            (self.end_states.v_minus, self.end_states.u_minus)
        } else {
            (self.end_states.v_plus, self.end_states.u_plus)
        }
    }
}
