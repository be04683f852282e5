//! Generalized eigenfunctions `ψ_k(ρ) = (F_k(ρ), G_k(ρ))` of the radial
//! Dirac–Coulomb operator.
//!
//! The real pair is encoded in the complex combination
//!
//! ```text
//! G + iF = √2 |Γ(γ+1+iν)| / Γ(2γ+1) · e^{πν/2} e^{i(ρ+ξ)} |2ρ|^{γ−1} ₁F₁(γ−iν, 2γ+1, −2iρ),
//! ```
//!
//! with `γ = √(k²−ν²)` and the phase shift `ξ` fixed by `e^{−2iξ} = (γ−iν)/k`.
//! The Euler integral of `₁F₁` turns this into
//!
//! ```text
//! G + iF = K · |ρ|^{γ−1} · I_{0,γ,ρ},      (G + iF)′ = (γ−1)/ρ · (G + iF) − i K |ρ|^{γ−1} I_{1,γ,ρ},
//! |K| = e^{πν/2} / (2^{γ+1/2} |Γ(γ−iν)|),  arg K = ξ − arg(γ+iν),
//! ```
//!
//! so that `j₀ = |ψ| = |K||ρ|^{γ−1}|I₀|` and `j₁ = |ψ′ − (γ−1)ρ^{−1}ψ| = |K||ρ|^{γ−1}|I₁|`.
//!
//! Three backends evaluate the combination:
//!
//! * [`EvalMethod::Series`]: the `₁F₁` series in double-double arithmetic;
//! * [`EvalMethod::Quadrature`]: the integrals `I_ε` along `[−1, 1]`;
//! * [`EvalMethod::SteepestDescent`]: the integrals `I_ε` along the
//!   steepest-descent contours of [`crate::saddle`].
//!
//! Negative `ρ` is reduced to positive `ρ` through
//! `I_ε(ν, −ρ) = conj(I_ε(−ν, ρ))`.

use crate::error::{Error, Result};
use crate::quadrep::integral_direct_pair;
use crate::saddle::{contour_integral_pair, select_contour, PhaseParams, SaddleConfig};
use crate::specfun::{kummer_1f1_with_error, ln_gamma, ln_gamma_real};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};

/// One partial-wave channel `(k, ν, γ, ξ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub k: i32,
    pub nu: f64,
    pub gamma: f64,
    pub xi: f64,
}

/// Build the channel for `k ≠ 0`, `|ν| ≤ 1`.
///
/// The phase shift is `ξ = ½ arg(γ+iν) ∈ (−π/2, π/2]` for `k > 0` and
/// `ξ = π/2 + ½ arg(γ+iν) ∈ (0, π]` for `k < 0`.
///
/// # Errors
///
/// [`Error::Domain`] for `k = 0`, `|ν| > 1`, or the unsupported edge
/// `γ = 0` (`|k| = 1`, `|ν| = 1`).
///
/// # Examples
///
/// ```
/// use dcwave::eigenwave::make_channel;
///
/// let ch = make_channel(-1, 0.0).unwrap();
/// assert_eq!(ch.gamma, 1.0);
/// assert!((ch.xi - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
/// assert!(make_channel(1, 1.0).is_err());
/// ```
pub fn make_channel(k: i32, nu: f64) -> Result<ChannelParams> {
    if k == 0 {
        return Err(Error::domain("k must be a nonzero integer"));
    }
    if !(nu.abs() <= 1.0) {
        return Err(Error::domain(format!("|ν| must be ≤ 1, got {nu}")));
    }
    let kf = k as f64;
    // (|k| − ν)(|k| + ν) avoids cancellation for |ν| close to |k|.
    let gamma = ((kf.abs() - nu.abs()) * (kf.abs() + nu.abs())).sqrt();
    if gamma == 0.0 {
        return Err(Error::domain(
            "unsupported edge: γ = 0 (|k| = 1, |ν| = 1) is excluded",
        ));
    }
    let half_arg = 0.5 * nu.atan2(gamma);
    let xi = if k > 0 { half_arg } else { PI / 2.0 + half_arg };
    Ok(ChannelParams { k, nu, gamma, xi })
}

/// A real two-component value `(F, G)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SpinorValue {
    pub f: f64,
    pub g: f64,
}

impl SpinorValue {
    /// Euclidean norm `√(F² + G²)`.
    pub fn norm(&self) -> f64 {
        self.f.hypot(self.g)
    }

    fn from_combination(c: Complex64) -> Self {
        SpinorValue { f: c.im, g: c.re }
    }
}

/// Evaluation backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EvalMethod {
    Series,
    Quadrature,
    SteepestDescent,
    Auto,
}

impl EvalMethod {
    pub fn name(&self) -> &'static str {
        match self {
            EvalMethod::Series => "series",
            EvalMethod::Quadrature => "quadrature",
            EvalMethod::SteepestDescent => "steepest_descent",
            EvalMethod::Auto => "auto",
        }
    }

    /// Parse the names produced by [`EvalMethod::name`].
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "series" => Some(EvalMethod::Series),
            "quadrature" => Some(EvalMethod::Quadrature),
            "steepest_descent" | "saddle" => Some(EvalMethod::SteepestDescent),
            "auto" => Some(EvalMethod::Auto),
            _ => None,
        }
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho == 0.0 || !rho.is_finite() {
        return Err(Error::domain(format!("ρ must be finite and nonzero, got {rho}")));
    }
    Ok(())
}

/// Natural logarithm of [`prefactor`].
pub fn ln_prefactor(ch: &ChannelParams, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    let lg = ln_gamma(Complex64::new(ch.gamma, -ch.nu))?;
    Ok(PI * ch.nu / 2.0 + (ch.gamma - 1.0) * rho.abs().ln() - (ch.gamma + 0.5) * LN_2 - lg.re)
}

/// The factor `e^{πν/2} |ρ|^{γ−1} / (2^{γ+1/2} |Γ(γ−iν)|)`, computed in log
/// space.
///
/// # Errors
///
/// [`Error::Domain`] for `ρ = 0`; [`Error::Range`] on overflow.
///
/// # Examples
///
/// ```
/// use dcwave::eigenwave::{make_channel, prefactor};
///
/// let ch = make_channel(1, 0.0).unwrap();
/// assert!((prefactor(&ch, 1.0).unwrap() - 2f64.powf(-1.5)).abs() < 1e-15);
/// ```
pub fn prefactor(ch: &ChannelParams, rho: f64) -> Result<f64> {
    let l = ln_prefactor(ch, rho)?;
    if l > 709.0 {
        return Err(Error::Range(format!("prefactor overflows (ln = {l})")));
    }
    Ok(l.exp())
}

/// Exponent of the cancellation in `I_{ε,γ,ρ}`: `|I| ≈ e^{ρ·E(q)}` with
/// `E(q) = Re h_q` at the dominant saddle. Zero for `q ≤ 0`.
pub fn cancellation_exponent(q: f64) -> f64 {
    if q <= 0.0 {
        0.0
    } else if q < 1.0 {
        q * (2.0 * q / std::f64::consts::E).ln()
    } else {
        let r = (q * q - 1.0).sqrt();
        q * (2.0 * q / std::f64::consts::E).ln() + r - q * (q + r).ln()
    }
}

/// Backends whose accuracy window contains `(ch, ρ)`.
///
/// * series: `2|ρ| ≤ 36`;
/// * quadrature: `q ≤ 0`, or `|ρ| ≤ 72` and `|ρ|·E(q) ≥ −12` (at most
///   `e^{12}` cancellation along the real segment);
/// * steepest descent: `|ρ| ≥ 12` and `q ≤ 2`.
pub fn applicable_methods(ch: &ChannelParams, rho: f64) -> Vec<EvalMethod> {
    let r = rho.abs();
    let q = (ch.gamma - 1.0) / r;
    let mut out = Vec::with_capacity(3);
    if 2.0 * r <= 36.0 {
        out.push(EvalMethod::Series);
    }
    if q <= 0.0 || (r <= 72.0 && r * cancellation_exponent(q) >= -12.0) {
        out.push(EvalMethod::Quadrature);
    }
    if r >= 12.0 && q <= 2.0 {
        out.push(EvalMethod::SteepestDescent);
    }
    out
}

/// Deterministic backend choice: series for `2|ρ| ≤ 30`, steepest descent
/// for `|ρ| ≥ 15` with `0 < q ≤ 2`, quadrature otherwise.
pub fn auto_method(ch: &ChannelParams, rho: f64) -> EvalMethod {
    let r = rho.abs();
    let q = (ch.gamma - 1.0) / r;
    if 2.0 * r <= 30.0 {
        EvalMethod::Series
    } else if r >= 15.0 && q > 0.0 && q <= 2.0 {
        EvalMethod::SteepestDescent
    } else {
        EvalMethod::Quadrature
    }
}

/// Fastest backend with an accuracy window containing `(ch, ρ)`: steepest
/// descent wherever it applies beyond the series range, otherwise
/// [`auto_method`]. Used by bulk scans.
pub fn scan_method(ch: &ChannelParams, rho: f64) -> EvalMethod {
    let r = rho.abs();
    let q = (ch.gamma - 1.0) / r;
    if 2.0 * r > 30.0 && r >= 12.0 && q <= 2.0 {
        EvalMethod::SteepestDescent
    } else {
        auto_method(ch, rho)
    }
}

/// Full result of one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// `ψ = (F, G)`.
    pub psi: SpinorValue,
    /// `ψ′ = (F′, G′)`.
    pub dpsi: SpinorValue,
    /// `G + iF`.
    pub combination: Complex64,
    /// `(G + iF)′`.
    pub derivative: Complex64,
    /// `j₀ = |ψ|`.
    pub j0: f64,
    /// `j₁ = |ψ′ − (γ−1)ρ^{−1}ψ|`.
    pub j1: f64,
    /// Backend actually used.
    pub method: EvalMethod,
    /// Estimated relative error of the backend.
    pub est_error: f64,
}

/// Accuracy target of every backend; worse estimates are reported as
/// [`Error::Accuracy`].
const BACKEND_TOLERANCE: f64 = 1e-9;

/// Evaluate `ψ`, `ψ′`, `j₀`, `j₁` with the given backend and saddle
/// configuration.
///
/// # Errors
///
/// [`Error::Domain`] for `ρ = 0` or a steepest-descent request with
/// `q > 2`; [`Error::Accuracy`] if the backend's error estimate exceeds
/// `1e-9` (the achieved bound is attached).
pub fn evaluate_with(
    ch: &ChannelParams,
    rho: f64,
    method: EvalMethod,
    cfg: &SaddleConfig,
) -> Result<Evaluation> {
    check_rho(rho)?;
    let method = match method {
        EvalMethod::Auto => auto_method(ch, rho),
        m => m,
    };
    let (comb, deriv, j1, est) = match method {
        EvalMethod::Series => series_backend(ch, rho)?,
        EvalMethod::Quadrature | EvalMethod::SteepestDescent => {
            integral_backend(ch, rho, method, cfg)?
        }
        EvalMethod::Auto => unreachable!("resolved above"),
    };
    if !(est <= BACKEND_TOLERANCE) {
        return Err(Error::accuracy(format!("{} backend", method.name()), est));
    }
    Ok(Evaluation {
        psi: SpinorValue::from_combination(comb),
        dpsi: SpinorValue::from_combination(deriv),
        combination: comb,
        derivative: deriv,
        j0: comb.norm(),
        j1,
        method,
        est_error: est,
    })
}

/// [`evaluate_with`] using the default saddle thresholds.
pub fn evaluate(ch: &ChannelParams, rho: f64, method: EvalMethod) -> Result<Evaluation> {
    evaluate_with(ch, rho, method, &SaddleConfig::default())
}

/// `ψ_k(ρ) = (F_k(ρ), G_k(ρ))`.
///
/// # Errors
///
/// See [`evaluate_with`].
///
/// # Examples
///
/// ```
/// use dcwave::eigenwave::{make_channel, psi, EvalMethod};
///
/// // k = 1, ν = 0 reduces to spherical Bessel functions: at ρ = π,
/// // F = (√2/2)·(1/π) and G = 0.
/// let ch = make_channel(1, 0.0).unwrap();
/// let v = psi(&ch, std::f64::consts::PI, EvalMethod::Auto).unwrap();
/// assert!((v.f - 0.5f64.sqrt() / std::f64::consts::PI).abs() < 1e-12);
/// assert!(v.g.abs() < 1e-12);
/// ```
pub fn psi(ch: &ChannelParams, rho: f64, method: EvalMethod) -> Result<SpinorValue> {
    evaluate(ch, rho, method).map(|e| e.psi)
}

/// `ψ_k′(ρ)`.
///
/// # Errors
///
/// See [`evaluate_with`].
pub fn psi_derivative(ch: &ChannelParams, rho: f64, method: EvalMethod) -> Result<SpinorValue> {
    evaluate(ch, rho, method).map(|e| e.dpsi)
}

/// `(j₀, j₁)` with automatic backend selection.
///
/// # Errors
///
/// See [`evaluate_with`].
pub fn j_values(ch: &ChannelParams, rho: f64) -> Result<(f64, f64)> {
    evaluate(ch, rho, EvalMethod::Auto).map(|e| (e.j0, e.j1))
}

/// `ln` of the modulus and the phase of the series normalization
/// `√2 |Γ(γ+1+iν)| e^{πν/2} |2ρ|^{γ−1} / Γ(2γ+1)`.
fn series_log_modulus(ch: &ChannelParams, rho: f64) -> Result<f64> {
    let g = ch.gamma;
    let lg_num = ln_gamma(Complex64::new(g + 1.0, ch.nu))?.re;
    let lg_den = ln_gamma_real(2.0 * g + 1.0)?;
    Ok(0.5 * LN_2 + lg_num - lg_den + PI * ch.nu / 2.0 + (g - 1.0) * (2.0 * rho.abs()).ln())
}

type BackendOut = (Complex64, Complex64, f64, f64);

fn series_backend(ch: &ChannelParams, rho: f64) -> Result<BackendOut> {
    let g = ch.gamma;
    let a = Complex64::new(g, -ch.nu);
    let b = Complex64::new(2.0 * g + 1.0, 0.0);
    let z = Complex64::new(0.0, -2.0 * rho);
    let f0 = kummer_1f1_with_error(a, b, z)?;
    let f1 = kummer_1f1_with_error(a + 1.0, b + 1.0, z)?;
    let lm = series_log_modulus(ch, rho)?;
    let n = Complex64::from_polar(1.0, rho + ch.xi) * lm.exp();
    let comb = n * f0.value;
    let i = Complex64::i();
    // d/dρ of the series part: −2i (a/b) ₁F₁(a+1, b+1, −2iρ).
    let tail = n * (-2.0 * i) * (a / b) * f1.value;
    let deriv = comb * (i + (g - 1.0) / rho) + tail;
    // j₁ = |(G+iF)′ − (γ−1)/ρ (G+iF)| = |i(G+iF) + tail|.
    let j1 = (comb * i + tail).norm();
    let e0 = f0.abs_error / f0.value.norm().max(f64::MIN_POSITIVE);
    let e1 = f1.abs_error * (a / b).norm() * 2.0 / (f0.value.norm() + (f1.value * a / b).norm() * 2.0);
    Ok((comb, deriv, j1, e0.max(e1)))
}

fn integral_backend(
    ch: &ChannelParams,
    rho: f64,
    method: EvalMethod,
    cfg: &SaddleConfig,
) -> Result<BackendOut> {
    let r = rho.abs();
    // I_ε(ν, −ρ) = conj(I_ε(−ν, ρ)).
    let nu_eff = if rho > 0.0 { ch.nu } else { -ch.nu };
    let (mut vals, log_scale, est) = if method == EvalMethod::Quadrature {
        let p = integral_direct_pair(ch.gamma, nu_eff, r)?;
        let mag = p.values[0].norm().max(p.values[1].norm());
        (p.values, 0.0, p.error / mag.max(f64::MIN_POSITIVE))
    } else {
        let pp = PhaseParams::new(ch.gamma, nu_eff, r)?;
        let c = select_contour(&pp, cfg)?;
        let s = contour_integral_pair(&pp, &c)?;
        (s.values, s.log_scale, s.rel_error)
    };
    if rho < 0.0 {
        vals = [vals[0].conj(), vals[1].conj()];
    }
    let ln_k = ln_prefactor(ch, rho)? + log_scale;
    let phase = ch.xi - ch.nu.atan2(ch.gamma);
    let kfac = Complex64::from_polar(ln_k.exp(), phase);
    let comb = kfac * vals[0];
    let corr = kfac * (-Complex64::i()) * vals[1];
    let deriv = comb * ((ch.gamma - 1.0) / rho) + corr;
    Ok((comb, deriv, corr.norm(), est))
}

/// Realness diagnostic of the series representation.
///
/// `G − iF` is computed independently of `G + iF` through Kummer's
/// transformation,
///
/// ```text
/// G − iF = √2 |Γ(γ+1+iν)| / Γ(2γ+1) · e^{πν/2} e^{i(ρ−ξ)} |2ρ|^{γ−1} ₁F₁(γ+1−iν, 2γ+1, −2iρ),
/// ```
///
/// and the returned value is the spurious imaginary part of the
/// reconstructed `(F, G)`, relative to `|ψ|`.
///
/// # Errors
///
/// [`Error::Domain`] for `ρ = 0`; series errors propagated.
pub fn realness_residual(ch: &ChannelParams, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    let g = ch.gamma;
    let b = Complex64::new(2.0 * g + 1.0, 0.0);
    let z = Complex64::new(0.0, -2.0 * rho);
    let lm = series_log_modulus(ch, rho)?.exp();
    let plus = Complex64::from_polar(lm, rho + ch.xi)
        * kummer_1f1_with_error(Complex64::new(g, -ch.nu), b, z)?.value;
    let minus = Complex64::from_polar(lm, rho - ch.xi)
        * kummer_1f1_with_error(Complex64::new(g + 1.0, -ch.nu), b, z)?.value;
    let gg = (plus + minus) / 2.0;
    let ff = (plus - minus) / (2.0 * Complex64::i());
    let mag = gg.re.hypot(ff.re).max(f64::MIN_POSITIVE);
    Ok((gg.im.abs() + ff.im.abs()) / mag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::spherical_bessel;

    #[test]
    fn channel_invariants() {
        for &k in &[1, -1, 2, -3, 7, -20] {
            for &nu in &[0.0, 0.3, -0.7, 0.99, 1.0, -1.0] {
                let Ok(ch) = make_channel(k, nu) else {
                    assert!(k.abs() == 1 && nu.abs() == 1.0);
                    continue;
                };
                let kf = k as f64;
                assert!((ch.gamma * ch.gamma + nu * nu - kf * kf).abs() <= 1e-14 * kf * kf);
                let lhs = Complex64::from_polar(1.0, -2.0 * ch.xi);
                let rhs = Complex64::new(ch.gamma, -nu) / kf;
                assert!((lhs - rhs).norm() < 1e-12);
                if k > 0 {
                    assert!(ch.xi > -PI / 2.0 && ch.xi <= PI / 2.0);
                } else {
                    assert!(ch.xi > 0.0 && ch.xi <= PI);
                }
            }
        }
    }

    #[test]
    fn channel_k2_nu1() {
        let ch = make_channel(2, 1.0).unwrap();
        assert!((ch.gamma - 3f64.sqrt()).abs() < 1e-15);
        let expect = 0.5 * (Complex64::new(2.0, 0.0) / Complex64::new(3f64.sqrt(), -1.0)).arg();
        assert!((ch.xi - expect).abs() < 1e-15);
    }

    #[test]
    fn prefactor_examples() {
        let ch = make_channel(1, 0.0).unwrap();
        assert!((prefactor(&ch, 2.0).unwrap() - 2f64.powf(-1.5)).abs() < 1e-15);
        assert!(prefactor(&ch, 0.0).is_err());
    }

    #[test]
    fn bessel_reduction_each_backend() {
        let ch = make_channel(1, 0.0).unwrap();
        let s = 0.5f64.sqrt();
        for &rho in &[0.3, 2.0, 9.0, 14.0, 20.0, 35.0] {
            let j0 = spherical_bessel(0, rho).unwrap();
            let j1 = spherical_bessel(1, rho).unwrap();
            for m in applicable_methods(&ch, rho) {
                let v = psi(&ch, rho, m).unwrap();
                assert!((v.f - s * j1).abs() < 1e-10, "{m:?} ρ={rho}");
                assert!((v.g - s * j0).abs() < 1e-10, "{m:?} ρ={rho}");
            }
        }
    }

    #[test]
    fn negative_rho_symmetry() {
        let ch = make_channel(3, 0.4).unwrap();
        let mirror = make_channel(3, -0.4).unwrap();
        for &rho in &[0.7, 5.0, 16.0, 40.0] {
            // The prefactor carries e^{πν/2}; the rest is symmetric.
            let w = (PI * 0.4).exp();
            let a = evaluate(&ch, -rho, EvalMethod::Auto).unwrap();
            let b = evaluate(&mirror, rho, EvalMethod::Auto).unwrap();
            assert!((a.j0 - w * b.j0).abs() <= 1e-10 * a.j0);
            assert!((a.j1 - w * b.j1).abs() <= 1e-10 * a.j1);
        }
    }

    #[test]
    fn realness_small() {
        for &(k, nu, rho) in &[(1, 0.3, 2.0), (-4, -0.99, 11.0), (7, 0.7, -3.0)] {
            let ch = make_channel(k, nu).unwrap();
            assert!(realness_residual(&ch, rho).unwrap() < 1e-12);
        }
    }
}
