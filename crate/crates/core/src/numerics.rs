//! Shared numerical kernels: uniform grids, quadrature, difference stencils,
//! and local interpolation.

use crate::error::{Error, Result};

/// Uniform symmetric grid on [-l, l] with n nodes including both endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub l: f64,
    pub n: usize,
    pub dx: f64,
    pub xi: Vec<f64>,
}

impl Grid {
    pub fn symmetric(l: f64, n: usize) -> Result<Self> {
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::Domain(format!("grid half-width l = {l} must be positive")));
        }
        if n < 8 {
            return Err(Error::Domain(format!("grid needs at least 8 nodes, got {n}")));
        }
        let m = (n - 1) as f64;
        let dx = 2.0 * l / m;
        // Convex blend keeps the endpoints exact in floating point.
        let xi = (0..n)
            .map(|i| {
                let w = i as f64 / m;
                -l * (1.0 - w) + l * w
            })
            .collect();
        Ok(Self { l, n, dx, xi })
    }

    /// Trapezoid weight of node i.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.n - 1 {
            0.5 * self.dx
        } else {
            self.dx
        }
    }

    /// Checks that another grid is the same discretization.
    pub fn ensure_matches(&self, other: &Grid) -> Result<()> {
        if self.n != other.n || self.l != other.l {
            return Err(Error::GridMismatch(format!(
                "expected n = {}, l = {}, got n = {}, l = {}",
                self.n, self.l, other.n, other.l
            )));
        }
        Ok(())
    }
}

/// Trapezoid rule on a uniform grid.
pub fn trapz(values: &[f64], dx: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for &v in values {
        sum += v;
    }
    dx * (sum - 0.5 * (values[0] + values[n - 1]))
}

/// Second-order first derivative: centered interior, one-sided 3-point at the ends.
pub fn deriv2(values: &[f64], dx: f64) -> Vec<f64> {
    let n = values.len();
    let mut d = vec![0.0; n];
    if n < 3 {
        return d;
    }
    let inv2 = 1.0 / (2.0 * dx);
    d[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) * inv2;
    for i in 1..n - 1 {
        d[i] = (values[i + 1] - values[i - 1]) * inv2;
    }
    d[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) * inv2;
    d
}

/// Fourth-order first derivative: 5-point centered interior, one-sided 5-point
/// stencils on the two nodes nearest each boundary.
pub fn deriv4(values: &[f64], dx: f64) -> Vec<f64> {
    let n = values.len();
    let mut d = vec![0.0; n];
    if n < 5 {
        return deriv2(values, dx);
    }
    let inv12 = 1.0 / (12.0 * dx);
    d[0] = (-25.0 * values[0] + 48.0 * values[1] - 36.0 * values[2] + 16.0 * values[3]
        - 3.0 * values[4])
        * inv12;
    d[1] = (-3.0 * values[0] - 10.0 * values[1] + 18.0 * values[2] - 6.0 * values[3]
        + values[4])
        * inv12;
    for i in 2..n - 2 {
        d[i] = (values[i - 2] - 8.0 * values[i - 1] + 8.0 * values[i + 1] - values[i + 2]) * inv12;
    }
    d[n - 2] = (3.0 * values[n - 1] + 10.0 * values[n - 2] - 18.0 * values[n - 3]
        + 6.0 * values[n - 4]
        - values[n - 5])
        * inv12;
    d[n - 1] = (25.0 * values[n - 1] - 48.0 * values[n - 2] + 36.0 * values[n - 3]
        - 16.0 * values[n - 4]
        + 3.0 * values[n - 5])
        * inv12;
    d
}

/// Cubic Lagrange interpolation of samples on a uniform grid starting at x0.
/// Queries beyond either end return the end value (constant extension).
pub fn cubic_interp(x0: f64, dx: f64, values: &[f64], q: f64) -> f64 {
    let n = values.len();
    debug_assert!(n >= 4);
    let x_end = x0 + dx * (n - 1) as f64;
    if q <= x0 {
        return values[0];
    }
    if q >= x_end {
        return values[n - 1];
    }
    let j = (((q - x0) / dx).floor() as isize).clamp(0, n as isize - 2) as usize;
    let k = j.saturating_sub(1).min(n - 4);
    let s = (q - (x0 + dx * k as f64)) / dx;
    let (s1, s2, s3) = (s - 1.0, s - 2.0, s - 3.0);
    let l0 = -s1 * s2 * s3 / 6.0;
    let l1 = s * s2 * s3 / 2.0;
    let l2 = -s * s1 * s3 / 2.0;
    let l3 = s * s1 * s2 / 6.0;
    l0 * values[k] + l1 * values[k + 1] + l2 * values[k + 2] + l3 * values[k + 3]
}

/// Linear interpolation on a strictly increasing abscissa, constant beyond ends.
pub fn linear_interp(xs: &[f64], ys: &[f64], q: f64) -> f64 {
    let n = xs.len();
    debug_assert_eq!(n, ys.len());
    if q <= xs[0] {
        return ys[0];
    }
    if q >= xs[n - 1] {
        return ys[n - 1];
    }
    let mut lo = 0;
    let mut hi = n - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if xs[mid] <= q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = (q - xs[lo]) / (xs[hi] - xs[lo]);
    ys[lo] * (1.0 - t) + ys[hi] * t
}

/// First derivative of a time series on possibly nonuniform times, 3-point
/// stencils, returned at every sample.
pub fn deriv_nonuniform(times: &[f64], values: &[f64]) -> Vec<f64> {
    let n = times.len();
    debug_assert_eq!(n, values.len());
    let mut d = vec![0.0; n];
    if n < 3 {
        if n == 2 {
            let s = (values[1] - values[0]) / (times[1] - times[0]);
            d[0] = s;
            d[1] = s;
        }
        return d;
    }
    for i in 1..n - 1 {
        let h1 = times[i] - times[i - 1];
        let h2 = times[i + 1] - times[i];
        d[i] = -h2 / (h1 * (h1 + h2)) * values[i - 1]
            + (h2 - h1) / (h1 * h2) * values[i]
            + h1 / (h2 * (h1 + h2)) * values[i + 1];
    }
    // One-sided 3-point stencils at the ends.
    {
        let h1 = times[1] - times[0];
        let h2 = times[2] - times[1];
        d[0] = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * values[0]
            + (h1 + h2) / (h1 * h2) * values[1]
            - h1 / (h2 * (h1 + h2)) * values[2];
        let g1 = times[n - 1] - times[n - 2];
        let g2 = times[n - 2] - times[n - 3];
        d[n - 1] = (2.0 * g1 + g2) / (g1 * (g1 + g2)) * values[n - 1]
            - (g1 + g2) / (g1 * g2) * values[n - 2]
            + g1 / (g2 * (g1 + g2)) * values[n - 3];
    }
    d
}

/// Least-squares straight line y = slope * x + intercept.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    debug_assert!(xs.len() == ys.len() && xs.len() >= 2);
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_endpoints_are_exact() {
        let g = Grid::symmetric(400.0, 4096).unwrap();
        assert_eq!(g.xi[0], -400.0);
        assert_eq!(g.xi[4095], 400.0);
        assert_eq!(g.n, 4096);
        assert_relative_eq!(g.dx, 800.0 / 4095.0, max_relative = 1e-15);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(Grid::symmetric(0.0, 64).is_err());
        assert!(Grid::symmetric(1.0, 4).is_err());
    }

    #[test]
    fn trapz_integrates_linear_exactly() {
        let g = Grid::symmetric(1.0, 101).unwrap();
        let f: Vec<f64> = g.xi.iter().map(|x| 2.0 * x + 3.0).collect();
        assert_relative_eq!(trapz(&f, g.dx), 6.0, max_relative = 1e-13);
    }

    #[test]
    fn deriv2_is_second_order() {
        let errs: Vec<f64> = [201usize, 401]
            .iter()
            .map(|&n| {
                let g = Grid::symmetric(1.0, n).unwrap();
                let f: Vec<f64> = g.xi.iter().map(|x| x.sin()).collect();
                let d = deriv2(&f, g.dx);
                g.xi
                    .iter()
                    .zip(&d)
                    .map(|(x, di)| (di - x.cos()).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        assert!(errs[0] / errs[1] > 3.5, "ratio {}", errs[0] / errs[1]);
    }

    #[test]
    fn deriv4_is_fourth_order() {
        let errs: Vec<f64> = [201usize, 401]
            .iter()
            .map(|&n| {
                let g = Grid::symmetric(1.0, n).unwrap();
                let f: Vec<f64> = g.xi.iter().map(|x| x.sin()).collect();
                let d = deriv4(&f, g.dx);
                g.xi
                    .iter()
                    .zip(&d)
                    .map(|(x, di)| (di - x.cos()).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        assert!(errs[0] / errs[1] > 14.0, "ratio {}", errs[0] / errs[1]);
    }

    #[test]
    fn cubic_interp_reproduces_cubics_and_nodes() {
        let g = Grid::symmetric(2.0, 41).unwrap();
        let f: Vec<f64> = g.xi.iter().map(|x| x * x * x - x + 0.5).collect();
        for q in [-1.93, -0.311, 0.0, 0.77, 1.999] {
            let exact = q * q * q - q + 0.5;
            assert_relative_eq!(cubic_interp(-2.0, g.dx, &f, q), exact, epsilon = 1e-12);
        }
        for (i, &x) in g.xi.iter().enumerate() {
            assert_relative_eq!(cubic_interp(-2.0, g.dx, &f, x), f[i], epsilon = 1e-13);
        }
        assert_eq!(cubic_interp(-2.0, g.dx, &f, -5.0), f[0]);
        assert_eq!(cubic_interp(-2.0, g.dx, &f, 5.0), f[40]);
    }

    #[test]
    fn nonuniform_derivative_exact_on_quadratics() {
        let times = [0.0, 0.1, 0.25, 0.5, 0.55];
        let values: Vec<f64> = times.iter().map(|t| 3.0 * t * t - t + 1.0).collect();
        let d = deriv_nonuniform(&times, &values);
        for (t, di) in times.iter().zip(&d) {
            assert_relative_eq!(*di, 6.0 * t - 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn fit_line_recovers_slope() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [2.1, 4.1, 6.1, 8.1];
        let (s, b) = fit_line(&xs, &ys);
        assert_relative_eq!(s, 2.0, epsilon = 1e-12);
        assert_relative_eq!(b, 0.1, epsilon = 1e-12);
    }
}
