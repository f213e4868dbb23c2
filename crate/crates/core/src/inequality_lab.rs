//! Standalone verifiers for the analytic kernel: global and local bounds on
//! the volume entropy Phi, and randomized plus adversarial search over the
//! nonlinear Poincare functional whose nonpositivity closes the contraction
//! argument.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{phi, pressure, rel_pressure};

/// A candidate function for the Poincare functional, tabulated on a uniform
/// grid over [0, 1], with the inequality's delta and the L2-ball radius C1.
#[derive(Debug, Clone)]
pub struct PoincareSample {
    pub w: Vec<f64>,
    pub delta: f64,
    pub c1: f64,
}

fn trapezoid_weights(m: usize) -> (f64, Vec<f64>) {
    let h = 1.0 / (m - 1) as f64;
    let mut tw = vec![h; m];
    tw[0] = 0.5 * h;
    tw[m - 1] = 0.5 * h;
    (h, tw)
}

fn centered_diff(w: &[f64], h: f64) -> Vec<f64> {
    let n = w.len();
    let mut d = vec![0.0; n];
    for j in 1..n - 1 {
        d[j] = (w[j + 1] - w[j - 1]) / (2.0 * h);
    }
    d[0] = (-3.0 * w[0] + 4.0 * w[1] - w[2]) / (2.0 * h);
    d[n - 1] = (3.0 * w[n - 1] - 4.0 * w[n - 2] + w[n - 3]) / (2.0 * h);
    d
}

/// Evaluates R_delta(W) = -(1/delta)(S + 2I)^2 + (1 + delta)S + (2/3)K +
/// delta A - (1 - delta)P with S = int W^2, I = int W, K = int W^3, A =
/// int |W|^3, P = int y(1-y)|W'|^2, all by trapezoid quadrature and
/// centered differences.
pub fn poincare_r(sample: &PoincareSample) -> Result<f64> {
    let m = sample.w.len();
    if m < 3 {
        return Err(Error::GridMismatch(format!(
            "Poincare sample needs at least 3 points, found {m}"
        )));
    }
    if !(sample.delta > 0.0) {
        return Err(Error::Domain(format!("delta = {} must be positive", sample.delta)));
    }
    let (h, tw) = trapezoid_weights(m);
    let d = centered_diff(&sample.w, h);
    let mut s = 0.0;
    let mut i = 0.0;
    let mut k = 0.0;
    let mut a = 0.0;
    let mut p = 0.0;
    for j in 0..m {
        let y = j as f64 * h;
        let w = sample.w[j];
        s += tw[j] * w * w;
        i += tw[j] * w;
        k += tw[j] * w * w * w;
        a += tw[j] * w.abs().powi(3);
        p += tw[j] * y * (1.0 - y) * d[j] * d[j];
    }
    let delta = sample.delta;
    Ok(-(s + 2.0 * i) * (s + 2.0 * i) / delta + (1.0 + delta) * s + (2.0 / 3.0) * k
        + delta * a
        - (1.0 - delta) * p)
}

/// Gradient of the discrete R_delta with respect to the tabulated values,
/// used by the ascent refinement (and validated against finite differences).
pub fn poincare_grad(sample: &PoincareSample) -> Result<Vec<f64>> {
    let m = sample.w.len();
    if m < 3 {
        return Err(Error::GridMismatch("gradient needs at least 3 points".into()));
    }
    let (h, tw) = trapezoid_weights(m);
    let w = &sample.w;
    let d = centered_diff(w, h);
    let delta = sample.delta;
    let mut s = 0.0;
    let mut i = 0.0;
    for j in 0..m {
        s += tw[j] * w[j] * w[j];
        i += tw[j] * w[j];
    }
    let front = s + 2.0 * i;
    let mut grad = vec![0.0; m];
    // Local terms.
    for j in 0..m {
        grad[j] += -(2.0 * front / delta) * (2.0 * tw[j] * w[j] + 2.0 * tw[j])
            + (1.0 + delta) * 2.0 * tw[j] * w[j]
            + 2.0 * tw[j] * w[j] * w[j]
            + delta * 3.0 * tw[j] * w[j].abs() * w[j];
    }
    // Derivative term: P = sum tw_j q_j d_j^2 with d = D w; grad -= (1-delta) D^T u,
    // u_j = 2 tw_j q_j d_j.
    let mut u = vec![0.0; m];
    for j in 0..m {
        let y = j as f64 * h;
        u[j] = 2.0 * tw[j] * y * (1.0 - y) * d[j];
    }
    let c = -(1.0 - delta);
    for j in 1..m - 1 {
        grad[j + 1] += c * u[j] / (2.0 * h);
        grad[j - 1] -= c * u[j] / (2.0 * h);
    }
    grad[0] -= c * u[0] * 3.0 / (2.0 * h);
    grad[1] += c * u[0] * 4.0 / (2.0 * h);
    grad[2] -= c * u[0] / (2.0 * h);
    grad[m - 1] += c * u[m - 1] * 3.0 / (2.0 * h);
    grad[m - 2] -= c * u[m - 1] * 4.0 / (2.0 * h);
    grad[m - 3] += c * u[m - 1] / (2.0 * h);
    Ok(grad)
}

const POINCARE_GRID: usize = 513;
const FOURIER_MODES: usize = 16;
const REFINE_CANDIDATES: usize = 32;
const REFINE_ITERS: usize = 300;

fn fourier_eval(coeffs: &[f64], y: &[f64]) -> Vec<f64> {
    let mut w = vec![coeffs[0]; y.len()];
    for m in 1..=FOURIER_MODES {
        let am = coeffs[2 * m - 1];
        let bm = coeffs[2 * m];
        for (j, &yj) in y.iter().enumerate() {
            let arg = 2.0 * std::f64::consts::PI * m as f64 * yj;
            w[j] += am * arg.cos() + bm * arg.sin();
        }
    }
    w
}

/// Exact L2 norm squared of the truncated Fourier series on [0, 1].
fn fourier_q(coeffs: &[f64]) -> f64 {
    let mut q = coeffs[0] * coeffs[0];
    for c in &coeffs[1..] {
        q += 0.5 * c * c;
    }
    q
}

/// Outcome of the randomized/adversarial search: the largest value of the
/// functional found inside the L2 ball and the function attaining it.
#[derive(Debug, Clone)]
pub struct PoincareSearchResult {
    pub max_r: f64,
    pub y: Vec<f64>,
    pub argmax_w: Vec<f64>,
    pub n_samples: usize,
}

/// Random truncated Fourier candidates in the ball int W^2 <= C1, refined by
/// projected gradient ascent on the best of them. The search moves in
/// coefficient space throughout: tabulated-value ascent could exploit the
/// null space of the centered difference (mesh-frequency sawtooth has zero
/// discrete derivative) and manufacture false positives the continuum
/// functional never attains.
pub fn poincare_search(
    delta: f64,
    c1: f64,
    n_samples: usize,
    seed: u64,
) -> Result<PoincareSearchResult> {
    if !(delta > 0.0) || !(c1 > 0.0) {
        return Err(Error::Domain(format!(
            "delta = {delta} and C1 = {c1} must be positive"
        )));
    }
    let m = POINCARE_GRID;
    let h = 1.0 / (m - 1) as f64;
    let y: Vec<f64> = (0..m).map(|j| j as f64 * h).collect();
    let dim = 2 * FOURIER_MODES + 1;

    let eval_coeffs = |coeffs: &[f64]| -> Result<f64> {
        let w = fourier_eval(coeffs, &y);
        poincare_r(&PoincareSample { w, delta, c1 })
    };

    // Deterministic parallel sampling: one counter-mode stream per sample.
    let sampled: Vec<(f64, Vec<f64>)> = (0..n_samples)
        .into_par_iter()
        .map(|idx| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(idx as u64 + 1);
            let mut coeffs = vec![0.0; dim];
            let normal = Normal::new(0.0, 1.0).unwrap();
            coeffs[0] = normal.sample(&mut rng);
            for mm in 1..=FOURIER_MODES {
                let std = 1.0 / mm as f64;
                coeffs[2 * mm - 1] = std * normal.sample(&mut rng);
                coeffs[2 * mm] = std * normal.sample(&mut rng);
            }
            let q = fourier_q(&coeffs);
            let target = c1 * rng.gen::<f64>();
            if q > 0.0 {
                let scale = (target / q).sqrt();
                for c in coeffs.iter_mut() {
                    *c *= scale;
                }
            }
            let r = eval_coeffs(&coeffs).unwrap_or(f64::NEG_INFINITY);
            (r, coeffs)
        })
        .collect();

    let mut order: Vec<usize> = (0..sampled.len()).collect();
    order.sort_by(|&a, &b| {
        sampled[b].0
            .partial_cmp(&sampled[a].0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let refine = |start: &[f64]| -> (f64, Vec<f64>) {
        let mut coeffs = start.to_vec();
        let mut best = match eval_coeffs(&coeffs) {
            Ok(r) => r,
            Err(_) => return (f64::NEG_INFINITY, coeffs),
        };
        let mut step = 0.05 * c1.sqrt();
        for _ in 0..REFINE_ITERS {
            let w = fourier_eval(&coeffs, &y);
            let gw = match poincare_grad(&PoincareSample { w, delta, c1 }) {
                Ok(g) => g,
                Err(_) => break,
            };
            // Pull the gradient back to coefficient space.
            let mut gc = vec![0.0; dim];
            for (j, &g) in gw.iter().enumerate() {
                gc[0] += g;
                for mm in 1..=FOURIER_MODES {
                    let arg = 2.0 * std::f64::consts::PI * mm as f64 * y[j];
                    gc[2 * mm - 1] += g * arg.cos();
                    gc[2 * mm] += g * arg.sin();
                }
            }
            let norm = gc.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm == 0.0 || step < 1e-14 {
                break;
            }
            let mut improved = false;
            let mut s = step;
            for _ in 0..25 {
                let mut trial: Vec<f64> =
                    coeffs.iter().zip(&gc).map(|(c, g)| c + s * g / norm).collect();
                let q = fourier_q(&trial);
                if q > c1 {
                    let scale = (c1 / q).sqrt();
                    for c in trial.iter_mut() {
                        *c *= scale;
                    }
                }
                if let Ok(r) = eval_coeffs(&trial) {
                    if r > best {
                        best = r;
                        coeffs = trial;
                        improved = true;
                        break;
                    }
                }
                s *= 0.5;
            }
            if improved {
                step = (s * 1.5).min(0.5 * c1.sqrt());
            } else {
                break;
            }
        }
        (best, coeffs)
    };

    let refined: Vec<(f64, Vec<f64>)> = order
        .iter()
        .take(REFINE_CANDIDATES.min(order.len()))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&&idx| refine(&sampled[idx].1))
        .collect();

    let mut max_r = f64::NEG_INFINITY;
    let mut best_coeffs = vec![0.0; dim];
    for (r, coeffs) in sampled
        .iter()
        .map(|(r, c)| (*r, c.clone()))
        .chain(refined)
    {
        if r > max_r {
            max_r = r;
            best_coeffs = coeffs;
        }
    }
    if n_samples == 0 {
        max_r = 0.0;
    }
    Ok(PoincareSearchResult {
        max_r,
        argmax_w: fourier_eval(&best_coeffs, &y),
        y,
        n_samples,
    })
}

/// Empirical largest delta for which the search still finds no positive
/// value; bisection against the search oracle, reported rather than asserted.
pub fn poincare_delta_max(c1: f64, probe_samples: usize, seed: u64) -> Result<f64> {
    let feasible = |delta: f64| -> Result<bool> {
        let result = poincare_search(delta, c1, probe_samples, seed)?;
        Ok(result.max_r <= 1e-9)
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    if feasible(hi)? {
        return Ok(hi);
    }
    for _ in 0..12 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Fitted constants for the global entropy bounds.
#[derive(Debug, Clone, Copy)]
pub struct PhiBoundsReport {
    /// Largest c with c (v - w)^2 <= Phi(v/w) on the inner band.
    pub c1_low: f64,
    /// Smallest C with Phi(v/w) <= C (v - w)^2 on the inner band.
    pub c1_high: f64,
    /// Largest c with c |v - w| <= Phi(v/w) outside the band.
    pub c2: f64,
    /// Cubic-correction constant: sup of (Phi(v/w) - x^2/2) / |x|^3 over
    /// v < w with x = v/w - 1 restricted to |x| <= 0.3.
    pub c3: f64,
    pub ordering_violations: usize,
    pub n_samples: usize,
}

/// Samples the global bounds: the quadratic envelope on the inner band
/// v in (v_minus/3, 3 v_minus), the linear lower bound outside, the
/// monotonicity of Phi(./w) away from 1, and the signed cubic correction.
pub fn check_phi_bounds(v_minus: f64, n_samples: usize, seed: u64) -> Result<PhiBoundsReport> {
    if !(v_minus > 0.0) {
        return Err(Error::Domain(format!("v_minus = {v_minus} must be positive")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c1_low = f64::INFINITY;
    let mut c1_high = 0.0_f64;
    let mut c2 = f64::INFINITY;
    let mut c3 = 0.0_f64;
    let mut ordering_violations = 0usize;

    for _ in 0..n_samples {
        let w = v_minus * (0.5 + 1.5 * rng.gen::<f64>());

        // Inner band: v in (v_minus/3, 3 v_minus).
        let v_in = v_minus * (1.0 / 3.0 + (3.0 - 1.0 / 3.0) * rng.gen::<f64>());
        let dvw = v_in - w;
        if dvw.abs() > 1e-10 {
            let ratio = phi(v_in / w) / (dvw * dvw);
            c1_low = c1_low.min(ratio);
            c1_high = c1_high.max(ratio);
        }

        // Outside the band: log-uniform on both sides.
        let side: bool = rng.gen();
        let v_out = if side {
            // (3 v_minus, 60 v_minus]
            3.0 * v_minus * (20.0_f64).powf(rng.gen::<f64>())
        } else {
            // [v_minus/60, v_minus/3)
            v_minus / 3.0 * (1.0 / 20.0_f64).powf(rng.gen::<f64>())
        };
        let d_out = (v_out - w).abs();
        if d_out > 1e-10 {
            c2 = c2.min(phi(v_out / w) / d_out);
        }

        // Ordering: w <= u <= v implies Phi(v/w) >= Phi(u/w).
        let span = 3.0 * v_minus * rng.gen::<f64>();
        let (t1, t2) = (rng.gen::<f64>(), rng.gen::<f64>());
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        let u = w + lo * span;
        let v_ord = w + hi * span;
        if phi(v_ord / w) < phi(u / w) - 1e-14 {
            ordering_violations += 1;
        }

        // Signed cubic correction for v < w.
        let x = -0.3 * rng.gen::<f64>();
        if x < -1e-8 {
            let gain = (phi(1.0 + x) - 0.5 * x * x) / x.abs().powi(3);
            c3 = c3.max(gain);
        }
    }
    Ok(PhiBoundsReport {
        c1_low,
        c1_high,
        c2,
        c3,
        ordering_violations,
        n_samples,
    })
}

/// Per-delta results of the local-expansion scan.
#[derive(Debug, Clone, Copy)]
pub struct LocalExpansionRow {
    pub delta: f64,
    /// Phi(v/w) <= (v/w - 1)^2 / 2 for v >= w: violations over the lattice.
    pub phi_upper_violations: usize,
    /// x^2/2 - x^3/3 <= Phi(1 + x): violations over the lattice.
    pub phi_cubic_violations: usize,
    /// Smallest C with p(v|w) <= C |p(v) - p(w)|^2 on the band.
    pub c_p_est: f64,
    /// Smallest C with (v - w)^2 <= C Phi(v/w) on the band.
    pub c_v_quad: f64,
    /// Smallest C with |p(v) - p(w)|^2 <= C Phi(v/w) on the band.
    pub c_p_quad: f64,
}

#[derive(Debug, Clone)]
pub struct LocalExpansionReport {
    pub rows: Vec<LocalExpansionRow>,
    /// Largest scanned delta with zero violations in both bounds.
    pub largest_delta_ok: Option<f64>,
}

/// Scans deterministic (w, pressure-offset) lattices per delta: w ranges over
/// [v_minus/2, 2 v_minus] and p(v) over [p(w) - delta, p(w) + delta].
pub fn check_local_expansions(v_minus: f64, delta_grid: &[f64]) -> Result<LocalExpansionReport> {
    if !(v_minus > 0.0) {
        return Err(Error::Domain(format!("v_minus = {v_minus} must be positive")));
    }
    let p_edge = 1.0 / (2.0 * v_minus);
    for &d in delta_grid {
        if !(d > 0.0 && d < p_edge) {
            return Err(Error::Domain(format!(
                "delta = {d} must lie in (0, {p_edge}) so volumes stay positive"
            )));
        }
    }
    let side = 1000usize;
    let mut rows = Vec::with_capacity(delta_grid.len());
    for &delta in delta_grid {
        let mut row = LocalExpansionRow {
            delta,
            phi_upper_violations: 0,
            phi_cubic_violations: 0,
            c_p_est: 0.0,
            c_v_quad: 0.0,
            c_p_quad: 0.0,
        };
        for iw in 0..side {
            let w = v_minus * (0.5 + 1.5 * iw as f64 / (side - 1) as f64);
            let pw = pressure(w);
            for is in 0..side {
                let s = delta * (2.0 * is as f64 / (side - 1) as f64 - 1.0);
                let v = 1.0 / (pw + s);
                let z = v / w;
                let x = z - 1.0;
                let ph = phi(z);
                if v >= w && ph > 0.5 * x * x + 1e-14 {
                    row.phi_upper_violations += 1;
                }
                if 0.5 * x * x - x * x * x / 3.0 > ph + 1e-14 {
                    row.phi_cubic_violations += 1;
                }
                if s.abs() > 1e-12 && ph > 0.0 {
                    row.c_p_est = row.c_p_est.max(rel_pressure(v, w) / (s * s));
                    row.c_v_quad = row.c_v_quad.max((v - w) * (v - w) / ph);
                    row.c_p_quad = row.c_p_quad.max(s * s / ph);
                }
            }
        }
        rows.push(row);
    }
    let largest_delta_ok = rows
        .iter()
        .filter(|r| r.phi_upper_violations == 0 && r.phi_cubic_violations == 0)
        .map(|r| r.delta)
        .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.max(d))));
    Ok(LocalExpansionReport { rows, largest_delta_ok })
}
