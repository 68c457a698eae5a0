use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::point_process::{unit_ball_volume, Shape};

/// Geometric terms of the multivariate bounds for `B = B_n` and local
/// windows of scale `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gammas {
    pub gamma3: f64,
    pub gamma4: f64,
    pub gamma5: f64,
    /// `λ(B)`
    pub volume: f64,
    /// `λ²(B² \ B²_Δ)`
    pub non_disjoint: f64,
}

fn inv_sum(sigmas: &[f64]) -> Result<f64> {
    if sigmas.is_empty() || sigmas.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(GeoError::param("sigmas", "need at least one positive finite value"));
    }
    Ok(sigmas.iter().map(|s| 1.0 / s).sum())
}

fn check_scales(n: f64, b: f64) -> Result<()> {
    if !(n > 0.0) || !n.is_finite() {
        return Err(GeoError::param("n", "window scale must be positive"));
    }
    if !(b >= 0.0) || !b.is_finite() {
        return Err(GeoError::param("b", "local scale must be nonnegative"));
    }
    Ok(())
}

/// `λ²{(x, y) ∈ B_n² : |x - y|_shape < 2b}`, the pairs whose local windows
/// meet. Exact for cubes; for balls (`d <= 3`) the radial convolution
/// integral is evaluated by adaptive Simpson quadrature to relative
/// tolerance `1e-6`.
pub fn non_disjoint_measure(n: f64, b: f64, d: usize, shape: Shape) -> Result<f64> {
    check_scales(n, b)?;
    if d == 0 {
        return Err(GeoError::UnsupportedDimension(d));
    }
    let l = 2.0 * n;
    let w = 2.0 * b;
    if shape == Shape::Cube || d == 1 {
        let axis = if w >= l { l * l } else { 2.0 * w * l - w * w };
        return Ok(axis.powi(d as i32));
    }
    let lens = |rho: f64| -> f64 {
        match d {
            2 => 2.0 * n * n * (rho / l).clamp(-1.0, 1.0).acos() - 0.5 * rho * (l * l - rho * rho).max(0.0).sqrt(),
            _ => PI * (4.0 * n + rho) * (l - rho).powi(2) / 12.0,
        }
    };
    let shell = |rho: f64| -> f64 {
        match d {
            2 => 2.0 * PI * rho,
            _ => 4.0 * PI * rho * rho,
        }
    };
    if d > 3 {
        return Err(GeoError::UnsupportedDimension(d));
    }
    let top = w.min(l);
    if top == 0.0 {
        return Ok(0.0);
    }
    let f = |rho: f64| shell(rho) * lens(rho);
    let full = unit_ball_volume(d) * n.powi(d as i32);
    Ok(adaptive_simpson(&f, 0.0, top, 1e-6 * full * full, 40).min(full * full))
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// `γ₃ = S² √λ²(B² \ B²_Δ)`, `γ₄ = S³ λ(B)`, `γ₅ = S² √λ(B)` with
/// `S = Σ 1/σ_i`.
pub fn gamma_geometric(n: f64, b: f64, d: usize, sigmas: &[f64], shape: Shape) -> Result<Gammas> {
    let s = inv_sum(sigmas)?;
    let non_disjoint = non_disjoint_measure(n, b, d, shape)?;
    let volume = match shape {
        Shape::Cube => (2.0 * n).powi(d as i32),
        Shape::Ball => unit_ball_volume(d) * n.powi(d as i32),
    };
    Ok(Gammas {
        gamma3: s * s * non_disjoint.sqrt(),
        gamma4: s.powi(3) * volume,
        gamma5: s * s * volume.sqrt(),
        volume,
        non_disjoint,
    })
}

/// Upper plug-in for `γ₂^{q,p}`: the integrand is replaced by
/// `sup_est^{1 - q/p}` over `B²_Δ`, whose measure is `disjoint_measure`.
/// `p = ∞` is allowed.
pub fn gamma2_plugin(sigmas: &[f64], disjoint_measure: f64, sup_est: f64, q: f64, p: f64) -> Result<f64> {
    let s = inv_sum(sigmas)?;
    if !(disjoint_measure >= 0.0) || !(sup_est >= 0.0) {
        return Err(GeoError::param("gamma2", "measure and estimate must be nonnegative"));
    }
    if !(p > q && q > 0.0) {
        return Err(GeoError::param("p", "need p > q > 0"));
    }
    let e = if p.is_infinite() { 1.0 } else { 1.0 - q / p };
    Ok(s * s * (disjoint_measure * sup_est.powf(e)).sqrt())
}
