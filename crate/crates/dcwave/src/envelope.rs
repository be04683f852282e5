//! The three-regime envelope of the generalized eigenfunctions and the
//! dyadic `L²` bounds that follow from it.
//!
//! With `a = |k|`, the envelope shape (constants `C = 1`) is
//!
//! ```text
//! (min(ρ/2, 1))^{γ−1} e^{−D a}           for ρ ≤ max(a/2, 2)      (inner)
//! a^{−3/4} (|a − ρ| + a^{1/3})^{−1/4}    for a/2 ≤ ρ ≤ 2a         (transition)
//! ρ^{−1}                                 for ρ ≥ 2a               (outer)
//! ```
//!
//! and the minimum of the applicable expressions on overlaps. The claim is
//! that `j₀ + j₁ ≤ C·shape` with one pair `(C, D)` for all channels; the
//! derivative variant replaces the inner exponent `γ − 1` by `γ − 2`.
//!
//! "There exist constants" is realized on a finite scan: [`fit_constants_from`]
//! returns the smallest `C` (rounded up to two significant digits) and then
//! the largest `D` on the two-significant-digit lattice compatible with it.

use crate::eigenwave::{evaluate, make_channel, scan_method, ChannelParams};
use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// The constants `(C, D)` of the envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeConstants {
    pub c: f64,
    pub d: f64,
}

/// Which expression of the envelope is active at a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Inner,
    Transition,
    Outer,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::Inner => "inner",
            Regime::Transition => "transition",
            Regime::Outer => "outer",
        }
    }
}

/// Envelope shape with `C = 1`, given the inner-regime exponent.
///
/// Returns the value and the regime attaining the minimum.
pub fn envelope_shape(k: i32, inner_exponent: f64, rho: f64, d: f64) -> (f64, Regime) {
    let a = (k as f64).abs();
    let mut best = (f64::INFINITY, Regime::Inner);
    if rho <= (a / 2.0).max(2.0) {
        let v = (rho / 2.0).min(1.0).powf(inner_exponent) * (-d * a).exp();
        best = (v, Regime::Inner);
    }
    if rho >= a / 2.0 && rho <= 2.0 * a {
        let v = a.powf(-0.75) * ((a - rho).abs() + a.cbrt()).powf(-0.25);
        if v < best.0 {
            best = (v, Regime::Transition);
        }
    }
    if rho >= 2.0 * a {
        let v = 1.0 / rho;
        if v < best.0 {
            best = (v, Regime::Outer);
        }
    }
    best
}

/// The envelope `C·shape` for `j₀ + j₁`.
///
/// # Examples
///
/// ```
/// use dcwave::envelope::{envelope_bound, EnvelopeConstants};
///
/// let c = EnvelopeConstants { c: 2.0, d: 0.1 };
/// // Outer regime: C/ρ.
/// assert!((envelope_bound(3, 3.0, 12.0, c) - 2.0 / 12.0).abs() < 1e-15);
/// ```
pub fn envelope_bound(k: i32, gamma: f64, rho: f64, c: EnvelopeConstants) -> f64 {
    c.c * envelope_shape(k, gamma - 1.0, rho, c.d).0
}

/// One scanned point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub k: i32,
    pub nu: f64,
    pub gamma: f64,
    pub rho: f64,
    pub j0: f64,
    pub j1: f64,
    /// `|ψ′|`.
    pub dpsi: f64,
}

/// Evaluate `j₀`, `j₁`, `|ψ′|` on the product of the given sets (in
/// parallel over channels).
///
/// # Errors
///
/// [`Error::Domain`] for empty sets or invalid channels; evaluation errors
/// propagated.
pub fn scan(k_set: &[i32], nu_set: &[f64], rho_grid: &[f64]) -> Result<Vec<ScanPoint>> {
    if k_set.is_empty() || nu_set.is_empty() || rho_grid.is_empty() {
        return Err(Error::domain("envelope scan needs nonempty k, ν and ρ sets"));
    }
    let channels: Vec<ChannelParams> = k_set
        .iter()
        .flat_map(|&k| nu_set.iter().map(move |&nu| make_channel(k, nu)))
        .collect::<Result<_>>()?;
    let per: Vec<Vec<ScanPoint>> = channels
        .par_iter()
        .map(|ch| {
            rho_grid
                .iter()
                .map(|&rho| {
                    let e = evaluate(ch, rho, scan_method(ch, rho))?;
                    Ok(ScanPoint {
                        k: ch.k,
                        nu: ch.nu,
                        gamma: ch.gamma,
                        rho,
                        j0: e.j0,
                        j1: e.j1,
                        dpsi: e.dpsi.norm(),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

/// Quantity bounded by the envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    /// `j₀ + j₁` with inner exponent `γ − 1`.
    JSum,
    /// `|ψ′|` with inner exponent `γ − 2`.
    Derivative,
}

impl Quantity {
    fn measure(&self, p: &ScanPoint) -> f64 {
        match self {
            Quantity::JSum => p.j0 + p.j1,
            Quantity::Derivative => p.dpsi,
        }
    }

    fn inner_exponent(&self, gamma: f64) -> f64 {
        match self {
            Quantity::JSum => gamma - 1.0,
            Quantity::Derivative => gamma - 2.0,
        }
    }
}

/// Round up to two significant digits.
pub fn ceil_2sig(x: f64) -> f64 {
    if !(x > 0.0) || !x.is_finite() {
        return x;
    }
    let e = x.log10().floor() as i32 - 1;
    let unit = 10f64.powi(e);
    let mut v = (x / unit - 1e-9).ceil() * unit;
    if v < x {
        v += unit;
    }
    v
}

/// Two-significant-digit lattice `{1.0, 1.1, …, 9.9}·10^e` on `[lo, hi]`.
fn lattice(lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut e = lo.log10().floor() as i32;
    loop {
        let unit = 10f64.powi(e - 1);
        for m in 10..100 {
            let v = m as f64 * unit;
            if v > hi * (1.0 + 1e-12) {
                return out;
            }
            if v >= lo * (1.0 - 1e-12) {
                out.push(v);
            }
        }
        e += 1;
    }
}

/// `C(D) = max over samples of measured/shape`.
fn required_c(points: &[ScanPoint], q: Quantity, d: f64) -> f64 {
    points
        .iter()
        .map(|p| q.measure(p) / envelope_shape(p.k, q.inner_exponent(p.gamma), p.rho, d).0)
        .fold(0.0, f64::max)
}

/// Smallest `D` considered by the fit.
pub const D_MIN: f64 = 1e-3;
/// Largest `D` considered by the fit.
pub const D_MAX: f64 = 10.0;

/// Fit `(C, D)` to precomputed samples.
///
/// # Errors
///
/// [`Error::Domain`] for an empty sample; [`Error::Verification`] if no
/// finite `C` exists at `D = 10⁻³`.
pub fn fit_constants_from(points: &[ScanPoint], q: Quantity) -> Result<EnvelopeConstants> {
    if points.is_empty() {
        return Err(Error::domain("cannot fit constants to an empty scan"));
    }
    let c_min = required_c(points, q, D_MIN);
    if !c_min.is_finite() || !(c_min > 0.0) {
        return Err(Error::Verification(format!(
            "no feasible envelope constants with D ≥ {D_MIN}: C = {c_min}"
        )));
    }
    let c = ceil_2sig(c_min);
    let grid = lattice(D_MIN, D_MAX);
    // C(D) is nondecreasing in D: binary search the last feasible lattice point.
    let (mut lo, mut hi) = (0usize, grid.len());
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if required_c(points, q, grid[mid]) <= c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(EnvelopeConstants { c, d: grid[lo] })
}

/// Scan and fit `(C, D)` for `j₀ + j₁`.
///
/// # Errors
///
/// See [`scan`] and [`fit_constants_from`].
pub fn fit_constants(k_set: &[i32], nu_set: &[f64], rho_grid: &[f64]) -> Result<EnvelopeConstants> {
    let pts = scan(k_set, nu_set, rho_grid)?;
    fit_constants_from(&pts, Quantity::JSum)
}

/// One row of an envelope report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSample {
    pub k: i32,
    pub nu: f64,
    pub rho: f64,
    pub regime: Regime,
    pub j0: f64,
    pub j1: f64,
    pub measured: f64,
    pub bound: f64,
    pub ratio: f64,
}

/// Envelope verification report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub quantity: Quantity,
    pub constants: EnvelopeConstants,
    pub worst_ratio: f64,
    pub worst: Option<EnvelopeSample>,
    pub samples: Vec<EnvelopeSample>,
}

impl EnvelopeReport {
    /// The bound holds on every sample.
    pub fn holds(&self) -> bool {
        self.worst_ratio <= 1.0
    }

    /// The bound is attained within a factor 4 somewhere.
    pub fn tight(&self) -> bool {
        self.worst_ratio >= 0.25
    }
}

/// Compare the samples with `C·shape`.
pub fn envelope_report(points: &[ScanPoint], q: Quantity, c: EnvelopeConstants) -> EnvelopeReport {
    let samples: Vec<EnvelopeSample> = points
        .iter()
        .map(|p| {
            let (shape, regime) = envelope_shape(p.k, q.inner_exponent(p.gamma), p.rho, c.d);
            let measured = q.measure(p);
            let bound = c.c * shape;
            EnvelopeSample {
                k: p.k,
                nu: p.nu,
                rho: p.rho,
                regime,
                j0: p.j0,
                j1: p.j1,
                measured,
                bound,
                ratio: measured / bound,
            }
        })
        .collect();
    let worst = samples
        .iter()
        .copied()
        .max_by(|a, b| a.ratio.total_cmp(&b.ratio));
    EnvelopeReport {
        quantity: q,
        constants: c,
        worst_ratio: worst.map_or(0.0, |w| w.ratio),
        worst,
        samples,
    }
}

/// Check `|ψ′| ≤ C·shape` (inner exponent `γ − 2`) with the given
/// constants.
///
/// # Errors
///
/// [`Error::Verification`] carrying the worst sample if the bound fails.
pub fn derivative_envelope_check(points: &[ScanPoint], c: EnvelopeConstants) -> Result<EnvelopeReport> {
    let r = envelope_report(points, Quantity::Derivative, c);
    if r.holds() {
        Ok(r)
    } else {
        Err(Error::Verification(format!(
            "derivative envelope fails: worst sample {:?}",
            r.worst
        )))
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Which function a dyadic norm is taken of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DyadicWhich {
    Psi,
    PsiPrime,
}

/// Both dyadic norms `(∫_R^{2R} |ψ|² r² dr)^{1/2}` and the same for `ψ′`.
///
/// Composite Gauss–Legendre with 64 nodes per panel; the panel count starts
/// at about one panel per 16 units of length (so that the oscillating part
/// of `|ψ|²` at large `R` is resolved from the start) and is doubled until
/// both values are stable to `1e-8` relative.
///
/// # Errors
///
/// [`Error::Domain`] unless `R = 2^j` with `−10 ≤ j ≤ 12`;
/// [`Error::Accuracy`] if 1024 panels do not reach the tolerance;
/// evaluation errors propagated.
pub fn dyadic_l2_pair(ch: &ChannelParams, r: f64) -> Result<(f64, f64)> {
    let j = r.log2();
    if !(r > 0.0) || j.fract() != 0.0 || !(-10.0..=12.0).contains(&j) {
        return Err(Error::domain(format!("R must be a power of two in [2^-10, 2^12], got {r}")));
    }
    let (x, w) = gauss_legendre(64);
    let integrate = |panels: usize| -> Result<(f64, f64)> {
        let h = r / panels as f64;
        let (mut s0, mut s1) = (0.0, 0.0);
        for p in 0..panels {
            let a = r + p as f64 * h;
            for (xi, wi) in x.iter().zip(&w) {
                let rr = a + 0.5 * h * (1.0 + xi);
                let e = evaluate(ch, rr, scan_method(ch, rr))?;
                let wt = wi * 0.5 * h * rr * rr;
                s0 += wt * e.j0 * e.j0;
                s1 += wt * e.dpsi.norm().powi(2);
            }
        }
        Ok((s0.sqrt(), s1.sqrt()))
    };
    let mut panels = ((r / 16.0).ceil() as usize).next_power_of_two();
    let mut prev = integrate(panels)?;
    let mut last = f64::INFINITY;
    while panels < 1024 {
        panels *= 2;
        let cur = integrate(panels)?;
        let d0 = (cur.0 - prev.0).abs() / cur.0;
        let d1 = (cur.1 - prev.1).abs() / cur.1;
        last = d0.max(d1);
        if last <= 1e-8 {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::accuracy("dyadic Gauss–Legendre quadrature", last))
}

/// One dyadic norm; see [`dyadic_l2_pair`].
///
/// # Errors
///
/// See [`dyadic_l2_pair`].
pub fn dyadic_l2(k: i32, nu: f64, r: f64, which: DyadicWhich) -> Result<f64> {
    let ch = make_channel(k, nu)?;
    let (a, b) = dyadic_l2_pair(&ch, r)?;
    Ok(match which {
        DyadicWhich::Psi => a,
        DyadicWhich::PsiPrime => b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_examples() {
        // ρ = |k| in the transition regime: |k|^{−5/6}.
        let (v, reg) = envelope_shape(64, 63.0, 64.0, 0.1);
        assert_eq!(reg, Regime::Transition);
        assert!((v - 64f64.powf(-5.0 / 6.0)).abs() < 1e-15);
        let (v, reg) = envelope_shape(5, 4.0, 20.0, 0.1);
        assert_eq!(reg, Regime::Outer);
        assert!((v - 0.05).abs() < 1e-15);
        let (v, _) = envelope_shape(1, 0.0, 1e-4, 0.2);
        assert!((v - (-0.2f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn rounding_and_lattice() {
        assert_eq!(ceil_2sig(1.234), 1.3);
        assert_eq!(ceil_2sig(0.05), 0.05);
        assert!((ceil_2sig(987.0) - 990.0).abs() < 1e-9);
        let l = lattice(1e-3, 0.02);
        assert_eq!(l.len(), 90 + 11);
        assert!(l.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn single_sample_fit_is_exact_ratio() {
        let p = ScanPoint {
            k: 2,
            nu: 0.0,
            gamma: 2.0,
            rho: 10.0,
            j0: 0.031,
            j1: 0.02,
            dpsi: 0.0,
        };
        let c = fit_constants_from(&[p], Quantity::JSum).unwrap();
        // Outer regime: C = ρ (j0 + j1) = 0.51, independent of D.
        assert!((c.c - 0.51).abs() < 1e-12);
        assert_eq!(c.d, D_MAX);
    }

    #[test]
    fn dyadic_domain() {
        assert!(dyadic_l2(1, 0.0, 3.0, DyadicWhich::Psi).is_err());
        assert!(dyadic_l2(1, 0.0, 2f64.powi(13), DyadicWhich::Psi).is_err());
    }
}
