//! Direct evaluation of the finite-interval integrals
//!
//! ```text
//! I_{ε,γ,ρ} = ∫_{−1}^{1} e^{−iρt} t^ε (1+t)^{γ−1−iν} (1−t)^{γ+iν} dt,   ε ∈ {0, 1},
//! ```
//!
//! by adaptive Gauss–Kronrod quadrature along the real segment.
//!
//! Subintervals are capped at length `π/(4|ρ|)` so that every Kronrod panel
//! sees at most an eighth of an oscillation. For `γ < 1` the integrable
//! singularity `(1+t)^{γ−1}` is removed exactly by the substitution
//! `1 + t = w^{1/γ}`, which turns `(1+t)^{γ−1} dt` into `dw/γ`; the same
//! substitution at the right end makes `(1−t)^γ dt` smooth.

use crate::error::{Error, Result};
use crate::quad::{integrate_adaptive_vec, AdaptiveOptions};
use crate::saddle::phase_h;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Parameters of one integral `I_{ε,γ,ρ}` (with the Coulomb strength `ν`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralParams {
    pub eps: u8,
    pub gamma: f64,
    pub nu: f64,
    pub rho: f64,
}

impl IntegralParams {
    /// Validated constructor.
    ///
    /// # Errors
    ///
    /// [`Error::Domain`] unless `ε ∈ {0,1}`, `γ ≥ 0`, `|ν| ≤ 1` and all
    /// values are finite.
    pub fn new(eps: u8, gamma: f64, nu: f64, rho: f64) -> Result<Self> {
        if eps > 1 {
            return Err(Error::domain(format!("ε must be 0 or 1, got {eps}")));
        }
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::domain(format!("γ must be finite and ≥ 0, got {gamma}")));
        }
        if !(nu.abs() <= 1.0) {
            return Err(Error::domain(format!("|ν| must be ≤ 1, got {nu}")));
        }
        if !rho.is_finite() {
            return Err(Error::domain("ρ must be finite"));
        }
        Ok(IntegralParams {
            eps,
            gamma,
            nu,
            rho,
        })
    }
}

/// The integrand `e^{−iρt} t^ε (1+t)^{γ−1−iν} (1−t)^{γ+iν}` with principal
/// powers.
///
/// # Errors
///
/// [`Error::Domain`] unless `−1 < t < 1`.
pub fn integrand(p: &IntegralParams, t: f64) -> Result<Complex64> {
    if !(t > -1.0 && t < 1.0) {
        return Err(Error::domain(format!("integrand requires −1 < t < 1, got {t}")));
    }
    let [v0, v1] = integrand_pair(p.gamma, p.nu, p.rho, t, (1.0 + t).ln(), (1.0 - t).ln());
    Ok(if p.eps == 0 { v0 } else { v1 })
}

/// The same integrand written as `g_ε(t)·e^{ρ h_q(t)}` with
/// `q = (γ−1)/ρ`, `g_ε(t) = t^ε (1+t)^{−iν} (1−t)^{1+iν}` and
/// `h_q(t) = −it + q ln(1−t²)`.
///
/// # Errors
///
/// [`Error::Domain`] unless `−1 < t < 1` and `ρ ≠ 0`.
pub fn integrand_gh(p: &IntegralParams, t: f64) -> Result<Complex64> {
    if p.rho == 0.0 {
        return Err(Error::domain("the (g, h) form requires ρ ≠ 0"));
    }
    if !(t > -1.0 && t < 1.0) {
        return Err(Error::domain(format!("integrand requires −1 < t < 1, got {t}")));
    }
    let q = (p.gamma - 1.0) / p.rho;
    let z = Complex64::new(t, 0.0);
    let i = Complex64::i();
    let g = z.powu(p.eps as u32)
        * (-i * p.nu * (1.0 + z).ln()).exp()
        * ((1.0 + i * p.nu) * (1.0 - z).ln()).exp();
    Ok(g * (p.rho * phase_h(q, z)?).exp())
}

#[inline]
fn integrand_pair(gamma: f64, nu: f64, rho: f64, t: f64, ln1p: f64, ln1m: f64) -> [Complex64; 2] {
    // (γ−1−iν)ln(1+t) + (γ+iν)ln(1−t) − iρt
    let re = (gamma - 1.0) * ln1p + gamma * ln1m;
    let im = -nu * ln1p + nu * ln1m - rho * t;
    let v = Complex64::from_polar(re.exp(), im);
    [v, v * t]
}

/// Both integrals `[I_{0,γ,ρ}, I_{1,γ,ρ}]` with a summed error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralPair {
    pub values: [Complex64; 2],
    pub error: f64,
}

/// Evaluate `I_{0,γ,ρ}` and `I_{1,γ,ρ}` together on shared quadrature nodes.
///
/// # Errors
///
/// [`Error::Domain`] for `γ ≤ 0` or `|ν| > 1`; [`Error::Accuracy`] if the
/// adaptive refinement does not converge.
pub fn integral_direct_pair(gamma: f64, nu: f64, rho: f64) -> Result<IntegralPair> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::domain(format!("integral_direct requires γ > 0, got {gamma}")));
    }
    if !(nu.abs() <= 1.0) || !rho.is_finite() {
        return Err(Error::domain("integral_direct requires |ν| ≤ 1 and finite ρ"));
    }
    let opts = AdaptiveOptions {
        abs_tol: 1e-15,
        rel_tol: 1e-13,
        max_pieces: 20_000,
    };
    let cap = if rho == 0.0 { 0.5 } else { (PI / (4.0 * rho.abs())).min(0.5) };
    let n_half = (1.0 / cap).ceil() as usize;
    let h = 1.0 / n_half as f64;
    let mut total = [Complex64::new(0.0, 0.0); 2];
    let mut err = 0.0;

    // End pieces [−1, −1+h] and [1−h, 1].
    let end_len = h;
    if gamma < 1.0 {
        let wmax = end_len.powf(gamma);
        let inv_g = 1.0 / gamma;
        // Left: 1+t = w^{1/γ}; (1+t)^{γ−1} dt = dw/γ.
        let left = integrate_adaptive_vec(
            |w: f64| {
                if w <= 0.0 {
                    return [Complex64::new(0.0, 0.0); 2];
                }
                let ln1p = w.ln() * inv_g;
                let onep = ln1p.exp();
                let t = onep - 1.0;
                let ln1m = (2.0 - onep).ln();
                let re = gamma * ln1m;
                let im = -nu * ln1p + nu * ln1m - rho * t;
                let v = Complex64::from_polar(re.exp() * inv_g, im);
                [v, v * t]
            },
            &[0.0, wmax],
            opts,
        )?;
        // Right: 1−t = w^{1/γ}; (1−t)^γ dt = w^{1/γ}·dw/γ (orientation absorbed).
        let right = integrate_adaptive_vec(
            |w: f64| {
                if w <= 0.0 {
                    return [Complex64::new(0.0, 0.0); 2];
                }
                let ln1m = w.ln() * inv_g;
                let onem = ln1m.exp();
                let t = 1.0 - onem;
                let ln1p = (2.0 - onem).ln();
                let re = (gamma - 1.0) * ln1p + ln1m;
                let im = -nu * ln1p + nu * ln1m - rho * t;
                let v = Complex64::from_polar(re.exp() * inv_g, im);
                [v, v * t]
            },
            &[0.0, wmax],
            opts,
        )?;
        for c in 0..2 {
            total[c] += left.value[c] + right.value[c];
        }
        err += left.error + right.error;
        let breaks: Vec<f64> = (1..2 * n_half).map(|j| -1.0 + j as f64 * h).collect();
        if breaks.len() >= 2 {
            let mid = integrate_adaptive_vec(
                |t: f64| integrand_pair(gamma, nu, rho, t, t.ln_1p(), (-t).ln_1p()),
                &breaks,
                opts,
            )?;
            for c in 0..2 {
                total[c] += mid.value[c];
            }
            err += mid.error;
        }
    } else {
        let breaks: Vec<f64> = (0..=2 * n_half).map(|j| -1.0 + j as f64 * h).collect();
        let all = integrate_adaptive_vec(
            |t: f64| {
                if t <= -1.0 || t >= 1.0 {
                    return [Complex64::new(0.0, 0.0); 2];
                }
                integrand_pair(gamma, nu, rho, t, t.ln_1p(), (-t).ln_1p())
            },
            &breaks,
            opts,
        )?;
        total = all.value;
        err = all.error;
    }
    Ok(IntegralPair {
        values: total,
        error: err,
    })
}

/// Evaluate `I_{ε,γ,ρ}` by direct adaptive quadrature.
///
/// # Errors
///
/// See [`integral_direct_pair`].
///
/// # Examples
///
/// ```
/// use dcwave::quadrep::{integral_direct, IntegralParams};
///
/// // At ρ = 0, γ = 1, ν = 0: ∫(1−t) dt = 2.
/// let p = IntegralParams::new(0, 1.0, 0.0, 0.0).unwrap();
/// let v = integral_direct(&p).unwrap();
/// assert!((v.re - 2.0).abs() < 1e-12 && v.im.abs() < 1e-12);
/// ```
pub fn integral_direct(p: &IntegralParams) -> Result<Complex64> {
    let pair = integral_direct_pair(p.gamma, p.nu, p.rho)?;
    Ok(pair.values[p.eps as usize])
}
