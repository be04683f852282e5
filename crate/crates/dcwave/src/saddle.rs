//! Steepest-descent evaluation of `I_{ε,γ,ρ}`.
//!
//! The integrand is written as `g_ε(z)·e^{ρ h_q(z)}` with
//!
//! ```text
//! h_q(z) = −iz + q ln(1 − z²),      q = (γ − 1)/ρ,
//! g_ε(z) = z^ε (1+z)^{−iν} (1−z)^{1+iν},
//! ```
//!
//! analytic on `Ω = ℂ \ ((−∞,−1] ∪ [1,∞))`. The segment `[−1, 1]` is deformed
//! into the lower half plane along curves on which `Im h_q` is constant
//! (steepest-descent arcs), joined where needed by short affine pieces of
//! controlled descent. The saddle points solve `z² + 2iqz − 1 = 0`:
//!
//! * `q ≥ 1`: `z_± = −i(q ± √(q²−1))`, coalescing at `z = −i` for `q = 1`;
//! * `q < 1`: `z_± = ±√(1−q²) − iq = ±sin θ₀ − i cos θ₀`.
//!
//! Contour families (selected by [`select_contour`]):
//!
//! | kind            | range                         | shape                                   |
//! |-----------------|-------------------------------|-----------------------------------------|
//! | `VerticalLines` | `q ≤ 0` or `ρ ≥ max(2,(γ+1)²/2)` | rays `−1 → −1−i∞` and `1−i∞ → 1`     |
//! | `GammaMinus`    | `q₀ ≤ q ≤ 2`                  | one arc through `z₋`                    |
//! | `Modified1b`    | `1 ≤ q < q₀`                  | arc, two chords through `z₋`, arc       |
//! | `Modified2b`    | `q₁ ≤ q < 1`                  | arc, four chords `z₋ → C → z₊`, arc     |
//! | `GammaLr`       | `q₂ ≤ q < q₁`                 | two arcs through `z_±` with vertical asymptotes |
//! | `Rescaled2c`    | `0 < q < q₂`                  | as `GammaLr`, saddle windows rescaled  |
//!
//! All arcs are evaluated from closed-form parametrizations; the formulas
//! are rearranged so that no cancellation occurs near the saddles.

use crate::error::{Error, Result};
use crate::quad::{integrate_adaptive_vec, AdaptiveOptions};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const LN_1E18: f64 = 41.446_531_673_892_82;

/// Thresholds of the case dispatch and the free parameters of the modified
/// contours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddleConfig {
    /// Upper end of the coalescence window above `q = 1`.
    pub q0: f64,
    /// Lower end of the coalescence window below `q = 1`.
    pub q1: f64,
    /// Below this value the saddle windows are rescaled.
    pub q2: f64,
    /// Parameter offset `δ` of the chords in the `q ≥ 1` window.
    pub delta_1b: f64,
    /// Angle offset `δ` of the outer chords in the `q < 1` window.
    pub delta_2b: f64,
    /// Half-width `u₀` of the rescaled saddle window.
    pub u0: f64,
}

impl Default for SaddleConfig {
    fn default() -> Self {
        SaddleConfig {
            q0: 1.15,
            q1: 0.85,
            q2: 0.15,
            delta_1b: 0.1,
            delta_2b: 0.1,
            u0: 0.2,
        }
    }
}

impl SaddleConfig {
    /// Check the ordering `0 < q₂ < q₁ < 1 < q₀ ≤ 2` and the ranges of the
    /// free parameters.
    pub fn validate(&self) -> Result<()> {
        let ok = self.q2 > 0.0
            && self.q2 < self.q1
            && self.q1 < 1.0
            && self.q0 > 1.0
            && self.q0 <= 2.0
            && self.delta_1b > 0.0
            && self.delta_1b < 1.0
            && self.delta_2b > 0.0
            && self.u0 > 0.0
            && self.u0 <= 0.25;
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("invalid saddle thresholds {self:?}")))
        }
    }
}

/// Parameters of the phase: `q = (γ−1)/ρ` together with `γ`, `ν`, `ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseParams {
    pub q: f64,
    pub gamma: f64,
    pub nu: f64,
    pub rho: f64,
}

impl PhaseParams {
    /// Build the phase parameters for `ρ > 0`.
    ///
    /// `q` may be of any sign here; each contour constructor checks its own
    /// range (only the vertical-lines contour accepts `q ≤ 0`).
    ///
    /// # Errors
    ///
    /// [`Error::Domain`] unless `ρ > 0`, `γ > 0` and `|ν| ≤ 1`.
    pub fn new(gamma: f64, nu: f64, rho: f64) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::domain(format!("phase parameters need ρ > 0, got {rho}")));
        }
        if !(gamma > 0.0) || !gamma.is_finite() || !(nu.abs() <= 1.0) {
            return Err(Error::domain("phase parameters need γ > 0 and |ν| ≤ 1"));
        }
        Ok(PhaseParams {
            q: (gamma - 1.0) / rho,
            gamma,
            nu,
            rho,
        })
    }
}

fn on_branch_cut(z: Complex64) -> bool {
    z.im == 0.0 && z.re.abs() >= 1.0
}

/// The phase `h_q(z) = −iz + q ln(1 − z²)` with the principal logarithm.
///
/// # Errors
///
/// [`Error::Domain`] on the branch cuts `(−∞,−1] ∪ [1,∞)`.
///
/// # Examples
///
/// ```
/// use dcwave::saddle::phase_h;
/// use num_complex::Complex64;
///
/// let q = 0.7;
/// let h = phase_h(q, Complex64::new(0.0, -1.0)).unwrap();
/// assert!((h - Complex64::new(-1.0 + q * 2f64.ln(), 0.0)).norm() < 1e-15);
/// ```
pub fn phase_h(q: f64, z: Complex64) -> Result<Complex64> {
    if on_branch_cut(z) {
        return Err(Error::domain(format!("h_q evaluated on a branch cut at {z}")));
    }
    Ok(-Complex64::i() * z + q * (1.0 - z * z).ln())
}

/// Derivative `h_q′(z) = −i − 2qz/(1 − z²)`.
pub fn phase_h_prime(q: f64, z: Complex64) -> Complex64 {
    -Complex64::i() - 2.0 * q * z / (1.0 - z * z)
}

/// Saddle points of `h_q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddleData {
    pub z_minus: Complex64,
    pub z_plus: Complex64,
    /// `θ₀ = arccos q`, only for `q < 1`.
    pub theta0: Option<f64>,
    pub coalesced: bool,
}

/// Solve `z² + 2iqz − 1 = 0` for `q > 0`.
///
/// # Errors
///
/// [`Error::Domain`] for `q ≤ 0`.
pub fn saddle_points(q: f64) -> Result<SaddleData> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::domain(format!("saddle_points requires q > 0, got {q}")));
    }
    let coalesced = (q - 1.0).abs() <= 1e-12;
    if q >= 1.0 {
        let r = (q * q - 1.0).sqrt();
        // q − r computed as 1/(q + r) to avoid cancellation.
        Ok(SaddleData {
            z_minus: Complex64::new(0.0, -1.0 / (q + r)),
            z_plus: Complex64::new(0.0, -(q + r)),
            theta0: None,
            coalesced,
        })
    } else {
        let theta0 = q.acos();
        let s = (1.0 - q * q).sqrt();
        Ok(SaddleData {
            z_minus: Complex64::new(-s, -q),
            z_plus: Complex64::new(s, -q),
            theta0: Some(theta0),
            coalesced,
        })
    }
}

// ---------------------------------------------------------------------------
// Closed-form arcs.

/// Coefficients `c_n` of `s·cot s = 1 − Σ c_n s^{2n}`.
const COT_SERIES: [f64; 6] = [
    1.0 / 3.0,
    1.0 / 45.0,
    2.0 / 945.0,
    1.0 / 4725.0,
    2.0 / 93555.0,
    1382.0 / 638_512_875.0,
];

/// Returns `(1 − s·cot s, s²/sin² s − 1, d/ds(s·cot s), d/ds(s²/sin² s))`.
fn cot_family(s: f64) -> (f64, f64, f64, f64) {
    if s.abs() < 0.1 {
        let s2 = s * s;
        let mut p = 1.0; // s^{2n}
        let (mut one_m_c, mut s_m1, mut dc, mut ds) = (0.0, 0.0, 0.0, 0.0);
        for (i, &c) in COT_SERIES.iter().enumerate() {
            let n = (i + 1) as f64;
            let dp = p * s; // s^{2n−1}
            p *= s2;
            one_m_c += c * p;
            s_m1 += (2.0 * n - 1.0) * c * p;
            dc -= 2.0 * n * c * dp;
            ds += 2.0 * n * (2.0 * n - 1.0) * c * dp;
        }
        (one_m_c, s_m1, dc, ds)
    } else {
        let (sn, cs) = s.sin_cos();
        let c = s * cs / sn;
        let ratio = s / sn;
        let one_m_c = 1.0 - c;
        let s_m1 = ratio * ratio - 1.0;
        let dc = (sn * cs - s) / (sn * sn);
        let ds = 2.0 * s / (sn * sn) * one_m_c;
        (one_m_c, s_m1, dc, ds)
    }
}

/// Point and derivative of the `q ≥ 1` steepest-descent arc
/// `z_q(t) = t + i y₋(t)`, `y₋(t) = −t cot(t/q) + √(t²/sin²(t/q) − 1)`.
pub fn case1_arc(q: f64, t: f64) -> (Complex64, Complex64) {
    let s = t / q;
    let (one_m_c, s_m1, dc, ds) = cot_family(s);
    let w = (q * q - 1.0) + q * q * s_m1;
    let sw = w.max(0.0).sqrt();
    let y = -q * (1.0 - one_m_c) + sw;
    let dy = if sw > 0.0 { -dc + q * ds / (2.0 * sw) } else { -dc };
    (Complex64::new(t, y), Complex64::new(1.0, dy))
}

/// Geometry of the `q < 1` arcs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Case2Geom {
    pub q: f64,
    pub theta0: f64,
    pub sin0: f64,
    pub cos0: f64,
    /// `x_q = sin θ₀ − θ₀ cos θ₀`, abscissa of the vertical asymptotes.
    pub xq: f64,
    /// `θ_max = (1 − x_q)/q`, where the arc reaches `±1`.
    pub theta_max: f64,
}

impl Case2Geom {
    pub fn new(q: f64) -> Self {
        let theta0 = q.acos();
        let sin0 = (1.0 - q * q).sqrt();
        let xq = sin0 - theta0 * q;
        Case2Geom {
            q,
            theta0,
            sin0,
            cos0: q,
            xq,
            theta_max: (1.0 - xq) / q,
        }
    }

    /// `φ_q(θ)` and `φ_q′(θ)` for `0 < θ ≤ θ_max`.
    pub fn phi(&self, theta: f64) -> (f64, f64) {
        let q = self.q;
        let d = theta - self.theta0;
        let (sn, cs) = theta.sin_cos();
        let p = q * theta + self.xq;
        // (d − sin d)/d² and sinc(d/2)
        let (dms_over_d2, sinc_half) = if d.abs() < 0.1 {
            let d2 = d * d;
            (
                d * (1.0 / 6.0 - d2 * (1.0 / 120.0 - d2 * (1.0 / 5040.0 - d2 / 362_880.0))),
                1.0 - d2 / 24.0 * (1.0 - d2 / 80.0 * (1.0 - d2 / 168.0)),
            )
        } else {
            ((d - d.sin()) / (d * d), (d / 2.0).sin() / (d / 2.0))
        };
        // g = P − sin θ, G2 = g/d²
        let g2 = self.cos0 * dms_over_d2 + 0.5 * self.sin0 * sinc_half * sinc_half;
        let g = g2 * d * d;
        let rd = (g2 * (g + 2.0 * sn)).sqrt() / sn;
        let r = d * rd;
        let phi = p * cs / sn - r;
        // N/d with N = q sin θ − P cos θ
        let nd = 2.0 * (self.theta0 + d / 2.0).sin() * (0.5 * sinc_half) * sn - g2 * d * cs;
        let rp = p * nd / (sn * sn * sn * rd);
        let dphi = q * cs / sn - p / (sn * sn) - rp;
        (phi, dphi)
    }

    /// Point and derivative of `z_q(θ) = qθ + sgn(θ) x_q − i φ_q(|θ|)`.
    pub fn point(&self, theta: f64) -> (Complex64, Complex64) {
        let (phi, dphi) = self.phi(theta.abs());
        if theta > 0.0 {
            (
                Complex64::new(self.q * theta + self.xq, -phi),
                Complex64::new(self.q, -dphi),
            )
        } else {
            (
                Complex64::new(self.q * theta - self.xq, -phi),
                Complex64::new(self.q, dphi),
            )
        }
    }
}

/// One parametrized piece of a contour. The parameter increases in the
/// direction of integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Segment {
    /// `z = a + s(b − a)`, `s ∈ [0, 1]`.
    Affine { a: Complex64, b: Complex64 },
    /// Left ray `z = −1 − i w^p`, `w ∈ [0, w_max]`.
    LeftRay { w_max: f64, power: f64 },
    /// Right ray `z = 1 + i w`, `w ∈ [−w_max, 0]`.
    RightRay { w_max: f64 },
    /// `q ≥ 1` arc for `t ∈ [t0, t1]`.
    Case1Arc { q: f64, t0: f64, t1: f64 },
    /// `q < 1` arc for `θ ∈ [th0, th1]` (one sign of θ).
    Case2Arc { geom: Case2Geom, th0: f64, th1: f64 },
    /// `q < 1` arc reparametrized as `θ = center + q·u`, `u ∈ [u_a, u_b]`.
    Case2Window {
        geom: Case2Geom,
        center: f64,
        u_a: f64,
        u_b: f64,
    },
}

impl Segment {
    /// Parameter interval.
    pub fn range(&self) -> (f64, f64) {
        match *self {
            Segment::Affine { .. } => (0.0, 1.0),
            Segment::LeftRay { w_max, .. } => (0.0, w_max),
            Segment::RightRay { w_max } => (-w_max, 0.0),
            Segment::Case1Arc { t0, t1, .. } => (t0, t1),
            Segment::Case2Arc { th0, th1, .. } => (th0, th1),
            Segment::Case2Window { u_a, u_b, .. } => (u_a, u_b),
        }
    }

    /// Point `z(s)` and derivative `z′(s)`.
    pub fn eval(&self, s: f64) -> (Complex64, Complex64) {
        match *self {
            Segment::Affine { a, b } => (a + (b - a) * s, b - a),
            Segment::LeftRay { power, .. } => {
                let depth = s.powf(power);
                let d = if s > 0.0 {
                    power * s.powf(power - 1.0)
                } else {
                    0.0
                };
                (Complex64::new(-1.0, -depth), Complex64::new(0.0, -d))
            }
            Segment::RightRay { .. } => (Complex64::new(1.0, s), Complex64::new(0.0, 1.0)),
            Segment::Case1Arc { q, .. } => case1_arc(q, s),
            Segment::Case2Arc { geom, .. } => geom.point(s),
            Segment::Case2Window { geom, center, .. } => {
                let (z, dz) = geom.point(center + geom.q * s);
                (z, dz * geom.q)
            }
        }
    }

    /// Logarithms `ln(1+z)` and `ln(1−z)` at parameter `s`, computed without
    /// cancellation near the ray endpoints.
    fn logs(&self, s: f64, z: Complex64) -> (Complex64, Complex64) {
        match *self {
            Segment::LeftRay { power, .. } => {
                let ln_depth = power * s.ln();
                (
                    Complex64::new(ln_depth, -PI / 2.0),
                    Complex64::new(2.0, s.powf(power)).ln(),
                )
            }
            Segment::RightRay { .. } => (
                Complex64::new(2.0, s).ln(),
                Complex64::new((-s).ln(), PI / 2.0),
            ),
            _ => ((1.0 + z).ln(), (1.0 - z).ln()),
        }
    }

    /// Logarithm of `|z′(s)|` added to the integrand exponent (only the rays
    /// need this, to stay finite at `w → 0`).
    fn is_ray(&self) -> bool {
        matches!(self, Segment::LeftRay { .. } | Segment::RightRay { .. })
    }
}

/// Tag of the contour family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ContourKind {
    VerticalLines,
    GammaMinus,
    GammaLr,
    Modified1b,
    Modified2b,
    Rescaled2c,
}

impl ContourKind {
    pub fn name(&self) -> &'static str {
        match self {
            ContourKind::VerticalLines => "vertical_lines",
            ContourKind::GammaMinus => "gamma_minus",
            ContourKind::GammaLr => "gamma_lr",
            ContourKind::Modified1b => "modified_1b",
            ContourKind::Modified2b => "modified_2b",
            ContourKind::Rescaled2c => "rescaled_2c",
        }
    }
}

/// Fitted descent constant of the affine pieces of a modified contour:
/// the largest `κ` with `Re h(z) ≤ Re h(saddle) − κ·w(|z − saddle|)` on
/// all samples (`w` as documented at the constructor).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescentCheck {
    pub kappa: f64,
    pub samples: usize,
}

/// An oriented contour from `−1` to `+1` in the closed lower half plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub kind: ContourKind,
    pub segments: Vec<Segment>,
    /// Interior parameters (per segment) where the integrand peaks; used as
    /// quadrature breakpoints.
    pub hints: Vec<Vec<f64>>,
    /// Relative bound on the truncated tails of unbounded branches.
    pub truncation_error: f64,
    /// Descent verification of the affine pieces, if any.
    pub descent: Option<DescentCheck>,
}

impl Contour {
    fn new(kind: ContourKind) -> Self {
        Contour {
            kind,
            segments: Vec::new(),
            hints: Vec::new(),
            truncation_error: 0.0,
            descent: None,
        }
    }

    fn push(&mut self, s: Segment, hints: Vec<f64>) {
        self.segments.push(s);
        self.hints.push(hints);
    }

    /// Start and end points of the contour (at the truncation depth for
    /// unbounded branches).
    pub fn endpoints(&self) -> (Complex64, Complex64) {
        let first = self.segments.first().expect("contour has segments");
        let last = self.segments.last().expect("contour has segments");
        (first.eval(first.range().0).0, last.eval(last.range().1).0)
    }

    /// Sample `n` equally spaced parameters per segment and return
    /// `(segment index, parameter, z)`.
    pub fn sample(&self, n: usize) -> Vec<(usize, f64, Complex64)> {
        let mut out = Vec::with_capacity(n * self.segments.len());
        for (i, seg) in self.segments.iter().enumerate() {
            let (a, b) = seg.range();
            for j in 0..n {
                // Open at the ends so that ray endpoints at ±1 are avoided.
                let s = a + (b - a) * (j as f64 + 0.5) / n as f64;
                out.push((i, s, seg.eval(s).0));
            }
        }
        out
    }
}

/// Exponent `L(z) = −iρz + (γ−1−iν) ln(1+z) + (γ+iν) ln(1−z)` of the
/// integrand, so that `g_ε(z) e^{ρ h_q(z)} = z^ε e^{L(z)}`.
fn exponent(p: &PhaseParams, z: Complex64, ln1p: Complex64, ln1m: Complex64) -> Complex64 {
    let i = Complex64::i();
    -i * p.rho * z + Complex64::new(p.gamma - 1.0, -p.nu) * ln1p + Complex64::new(p.gamma, p.nu) * ln1m
}

/// `Re L + ln|z′|` at parameter `s` of `seg`.
fn log_weight(p: &PhaseParams, seg: &Segment, s: f64) -> f64 {
    let (z, dz) = seg.eval(s);
    let (l1, l2) = seg.logs(s, z);
    let mut v = exponent(p, z, l1, l2).re;
    if let Segment::LeftRay { power, .. } = seg {
        v += power.ln() + (power - 1.0) * s.ln();
    } else {
        v += dz.norm().ln();
    }
    v
}

/// The vertical-lines contour `(−1, −1−i∞) ∪ (1−i∞, 1)`.
///
/// Each ray is truncated at the depth where the remaining tail is below
/// `1e-18` of the ray's mass. For `γ < 1` the left ray uses the depth
/// variable `w` with `depth = w^{1/γ}`, which cancels the endpoint
/// singularity `(1+z)^{γ−1}` exactly.
pub fn contour_vertical(p: &PhaseParams) -> Result<Contour> {
    let mut c = Contour::new(ContourKind::VerticalLines);
    let power = if p.gamma < 1.0 { 1.0 / p.gamma } else { 1.0 };
    // Peak of e^{−ρs} s^{a}: s ≈ a/ρ with a ≈ γ (right) or γ−1 (left).
    let s_peak = (p.gamma.max(1.0) / p.rho).max(1e-3 / p.rho);
    let mut worst_tail: f64 = 0.0;
    let mut depth_for = |tail_log: &dyn Fn(f64) -> f64| -> f64 {
        let peak = tail_log(s_peak);
        let mass = peak + s_peak.ln();
        let mut s = 4.0 * s_peak;
        while tail_log(s) - (p.rho / 2.0).ln() > mass - LN_1E18 && s < 1e6 {
            s *= 1.5;
        }
        worst_tail = worst_tail.max((tail_log(s) - (p.rho / 2.0).ln() - mass).exp());
        s
    };
    let left_log = |s: f64| {
        let seg = Segment::LeftRay { w_max: 1.0, power: 1.0 };
        log_weight(p, &seg, s)
    };
    let right_log = |s: f64| {
        let seg = Segment::RightRay { w_max: 1.0 };
        log_weight(p, &seg, -s)
    };
    let dl = depth_for(&left_log);
    let dr = depth_for(&right_log);
    let wl = dl.powf(1.0 / power);
    let peak_w = s_peak.powf(1.0 / power);
    c.push(
        Segment::LeftRay { w_max: wl, power },
        vec![peak_w.min(0.5 * wl)],
    );
    c.push(Segment::RightRay { w_max: dr }, vec![-s_peak.min(0.5 * dr)]);
    c.truncation_error = worst_tail;
    Ok(c)
}

fn check_range(q: f64, lo: f64, hi: f64, lo_closed: bool, hi_closed: bool, what: &str) -> Result<()> {
    let ok_lo = if lo_closed { q >= lo } else { q > lo };
    let ok_hi = if hi_closed { q <= hi } else { q < hi };
    if ok_lo && ok_hi {
        Ok(())
    } else {
        Err(Error::domain(format!("{what}: q = {q} outside its range")))
    }
}

/// The single steepest-descent arc through `z₋` for `1 ≤ q ≤ 2`.
///
/// # Errors
///
/// [`Error::Domain`] for `q` outside `[1, 2]`.
pub fn contour_gamma_minus(p: &PhaseParams) -> Result<Contour> {
    check_range(p.q, 1.0, 2.0, true, true, "contour_gamma_minus")?;
    let mut c = Contour::new(ContourKind::GammaMinus);
    c.push(
        Segment::Case1Arc {
            q: p.q,
            t0: -1.0,
            t1: 1.0,
        },
        peak_hints(0.0, -1.0, 1.0),
    );
    Ok(c)
}

/// Breakpoints clustering geometrically around a peak at `center`.
fn peak_hints(center: f64, a: f64, b: f64) -> Vec<f64> {
    let mut h = vec![center];
    for j in 1..=10 {
        let f = 0.5f64.powi(j);
        h.push(center - (center - a) * f);
        h.push(center + (b - center) * f);
    }
    h
}

fn fit_kappa(
    q: f64,
    h0: f64,
    saddle: Complex64,
    seg_from_saddle: &[(Complex64, Complex64)],
    weight: &dyn Fn(f64) -> f64,
) -> Result<DescentCheck> {
    let n = 200;
    let mut kappa = f64::INFINITY;
    let mut count = 0;
    for &(a, b) in seg_from_saddle {
        let mut prev = h0;
        for j in 1..=n {
            let z = a + (b - a) * (j as f64 / n as f64);
            let rh = phase_h(q, z)?.re;
            if rh > prev + 1e-12 * (1.0 + prev.abs()) {
                return Err(Error::Verification(format!(
                    "descent check failed: Re h increases along the chord {a} → {b} at {z}"
                )));
            }
            prev = rh;
            let d = (z - saddle).norm();
            let w = weight(d);
            if w > 0.0 {
                kappa = kappa.min((h0 - rh) / w);
            }
            count += 1;
        }
    }
    if !(kappa > 0.0) {
        return Err(Error::Verification(format!(
            "descent check failed: fitted κ = {kappa} is not positive"
        )));
    }
    Ok(DescentCheck {
        kappa,
        samples: count,
    })
}

/// The modified contour for `1 ≤ q < q₀`: the arc on `[−1, −δ]`, chords
/// `z_q(−δ) → z₋ → z_q(δ)`, and the arc on `[δ, 1]`.
///
/// Construction verifies that `Re h_q` decreases along both chords away
/// from `z₋`, that `Re h_q(z₋) ≤ q ln(2q/e)`, and fits `κ′ > 0` in
/// `Re h_q(z) ≤ Re h_q(z₋) − κ′(√(q−1)·d² + d³)`, `d = |z − z₋|`.
///
/// # Errors
///
/// [`Error::Domain`] for `q` out of range or a bad `δ`;
/// [`Error::Verification`] if a descent assertion fails.
pub fn contour_modified_1b(p: &PhaseParams, delta: f64, cfg: &SaddleConfig) -> Result<Contour> {
    check_range(p.q, 1.0, cfg.q0, true, false, "contour_modified_1b")?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("δ must lie in (0, 1), got {delta}")));
    }
    let q = p.q;
    let sd = saddle_points(q)?;
    let z0 = sd.z_minus;
    let (zl, _) = case1_arc(q, -delta);
    let (zr, _) = case1_arc(q, delta);
    let h0 = phase_h(q, z0)?.re;
    if h0 > q * (2.0 * q / std::f64::consts::E).ln() + 1e-12 {
        return Err(Error::Verification("Re h_q(z₋) exceeds q ln(2q/e)".into()));
    }
    let sq = (q - 1.0).max(0.0).sqrt();
    let check = fit_kappa(q, h0, z0, &[(z0, zl), (z0, zr)], &|d| sq * d * d + d * d * d)?;
    let mut c = Contour::new(ContourKind::Modified1b);
    c.push(Segment::Case1Arc { q, t0: -1.0, t1: -delta }, vec![]);
    c.push(Segment::Affine { a: zl, b: z0 }, peak_hints(1.0, 0.0, 1.0));
    c.push(Segment::Affine { a: z0, b: zr }, peak_hints(0.0, 0.0, 1.0));
    c.push(Segment::Case1Arc { q, t0: delta, t1: 1.0 }, vec![]);
    c.descent = Some(check);
    Ok(c)
}

/// Smallest `θ` of the unbounded branch (by symmetry the same on both
/// sides): below it the integrand is under `1e-18` of its peak.
fn truncate_branch(p: &PhaseParams, geom: &Case2Geom) -> (f64, f64) {
    let seg = Segment::Case2Arc {
        geom: *geom,
        th0: 0.0,
        th1: geom.theta_max,
    };
    let f = |th: f64| log_weight(p, &seg, th) + th.ln();
    let target = f(geom.theta0) - LN_1E18 - 4.0;
    let mut lo = geom.theta0 * 1e-6;
    if f(lo) > target {
        lo = geom.theta0 * 1e-12;
    }
    let mut hi = geom.theta0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, (f(lo) - target - LN_1E18 - 4.0).exp())
}

/// The two steepest-descent arcs through `z_±` for `q₂ ≤ q ≤ q₁`.
///
/// # Errors
///
/// [`Error::Domain`] for `q` out of range.
pub fn contour_gamma_lr(p: &PhaseParams, cfg: &SaddleConfig) -> Result<Contour> {
    check_range(p.q, cfg.q2, cfg.q1, true, true, "contour_gamma_lr")?;
    let geom = Case2Geom::new(p.q);
    let (th_min, tail) = truncate_branch(p, &geom);
    let mut c = Contour::new(ContourKind::GammaLr);
    c.push(
        Segment::Case2Arc {
            geom,
            th0: -geom.theta_max,
            th1: -th_min,
        },
        peak_hints(-geom.theta0, -geom.theta_max, -th_min),
    );
    c.push(
        Segment::Case2Arc {
            geom,
            th0: th_min,
            th1: geom.theta_max,
        },
        peak_hints(geom.theta0, th_min, geom.theta_max),
    );
    c.truncation_error = tail;
    Ok(c)
}

/// The middle point `C` of the `q₁ ≤ q < 1` contour where the two chords
/// leaving `z_±` in the directions `β₊ = −3π/5`, `β₋ = −2π/5` meet:
/// `C = −i cos(2π/5 − θ₀)/cos(2π/5)`.
pub fn midpoint_2b(theta0: f64) -> Complex64 {
    Complex64::new(0.0, -(2.0 * PI / 5.0 - theta0).cos() / (2.0 * PI / 5.0).cos())
}

/// The modified contour for `q₁ ≤ q < 1`: outer arcs for `|θ| ≥ θ₀ + δ`,
/// chords `z_q(−θ₀−δ) → z₋ → C → z₊ → z_q(θ₀+δ)`.
///
/// Construction verifies monotone descent of `Re h_q` along every chord
/// away from its saddle end and fits `κ > 0` in
/// `Re h_q(z) ≤ Re h_q(z_±) − κ·d²`.
///
/// # Errors
///
/// [`Error::Domain`] for `q` out of range or `θ₀ + δ ≥ θ_max`;
/// [`Error::Verification`] if a descent assertion fails.
pub fn contour_modified_2b(p: &PhaseParams, delta: f64, cfg: &SaddleConfig) -> Result<Contour> {
    check_range(p.q, cfg.q1, 1.0, true, false, "contour_modified_2b")?;
    let q = p.q;
    let geom = Case2Geom::new(q);
    if !(delta > 0.0 && geom.theta0 + delta < geom.theta_max) {
        return Err(Error::domain(format!("δ = {delta} incompatible with θ_max")));
    }
    let sd = saddle_points(q)?;
    let (zp, zm) = (sd.z_plus, sd.z_minus);
    let cpt = midpoint_2b(geom.theta0);
    let (zr, _) = geom.point(geom.theta0 + delta);
    let (zl, _) = geom.point(-geom.theta0 - delta);
    let h0 = phase_h(q, zp)?.re;
    let kp = fit_kappa(q, h0, zp, &[(zp, cpt), (zp, zr)], &|d| d * d)?;
    let km = fit_kappa(q, h0, zm, &[(zm, cpt), (zm, zl)], &|d| d * d)?;
    let mut c = Contour::new(ContourKind::Modified2b);
    let th = geom.theta0 + delta;
    c.push(
        Segment::Case2Arc {
            geom,
            th0: -geom.theta_max,
            th1: -th,
        },
        vec![],
    );
    c.push(Segment::Affine { a: zl, b: zm }, peak_hints(1.0, 0.0, 1.0));
    c.push(Segment::Affine { a: zm, b: cpt }, peak_hints(0.0, 0.0, 1.0));
    c.push(Segment::Affine { a: cpt, b: zp }, peak_hints(1.0, 0.0, 1.0));
    c.push(Segment::Affine { a: zp, b: zr }, peak_hints(0.0, 0.0, 1.0));
    c.push(
        Segment::Case2Arc {
            geom,
            th0: th,
            th1: geom.theta_max,
        },
        vec![],
    );
    c.descent = Some(DescentCheck {
        kappa: kp.kappa.min(km.kappa),
        samples: kp.samples + km.samples,
    });
    Ok(c)
}

/// The `0 < q ≤ q₂` contour: as [`contour_gamma_lr`], with the windows
/// `|θ ∓ θ₀| ≤ q u₀` reparametrized by `θ = ±θ₀ + q u`.
///
/// Construction asserts `Re h_q(Z(q,u)) ≤ q ln(2q/e) − q u²` on the window.
///
/// # Errors
///
/// [`Error::Domain`] for `q` or `u₀` out of range; [`Error::Verification`]
/// if the window bound fails.
pub fn rescaled_window_2c(p: &PhaseParams, u0: f64, cfg: &SaddleConfig) -> Result<Contour> {
    check_range(p.q, 0.0, cfg.q2, false, true, "rescaled_window_2c")?;
    if !(u0 > 0.0 && u0 <= 0.25) {
        return Err(Error::domain(format!("u₀ must lie in (0, 1/4], got {u0}")));
    }
    let q = p.q;
    let geom = Case2Geom::new(q);
    let bound0 = q * (2.0 * q / std::f64::consts::E).ln();
    for j in 0..=100 {
        let u = -u0 + 2.0 * u0 * j as f64 / 100.0;
        let (z, _) = geom.point(geom.theta0 + q * u);
        let rh = phase_h(q, z)?.re;
        if rh > bound0 - q * u * u + 1e-13 {
            return Err(Error::Verification(format!(
                "window bound Re h ≤ q ln(2q/e) − q u² fails at u = {u}"
            )));
        }
    }
    let (th_min, tail) = truncate_branch(p, &geom);
    let inner = geom.theta0 - q * u0;
    let outer = geom.theta0 + q * u0;
    let mut c = Contour::new(ContourKind::Rescaled2c);
    c.push(
        Segment::Case2Arc {
            geom,
            th0: -geom.theta_max,
            th1: -outer,
        },
        vec![],
    );
    c.push(
        Segment::Case2Window {
            geom,
            center: -geom.theta0,
            u_a: -u0,
            u_b: u0,
        },
        peak_hints(0.0, -u0, u0),
    );
    if th_min < inner {
        c.push(
            Segment::Case2Arc {
                geom,
                th0: -inner,
                th1: -th_min,
            },
            vec![],
        );
        c.push(
            Segment::Case2Arc {
                geom,
                th0: th_min,
                th1: inner,
            },
            vec![],
        );
    } else {
        // The window already reaches the truncation depth: jump across the
        // (negligible) asymptotic branches with a horizontal chord at depth.
        let (a, _) = geom.point(-inner);
        let (b, _) = geom.point(inner);
        c.push(Segment::Affine { a, b }, vec![]);
    }
    c.push(
        Segment::Case2Window {
            geom,
            center: geom.theta0,
            u_a: -u0,
            u_b: u0,
        },
        peak_hints(0.0, -u0, u0),
    );
    c.push(
        Segment::Case2Arc {
            geom,
            th0: outer,
            th1: geom.theta_max,
        },
        vec![],
    );
    c.truncation_error = tail;
    Ok(c)
}

/// Choose the contour for `p` according to the case table of the module
/// documentation.
///
/// # Errors
///
/// [`Error::Domain`] for `q > 2` outside the vertical-lines region, and
/// construction errors of the chosen family.
pub fn select_contour(p: &PhaseParams, cfg: &SaddleConfig) -> Result<Contour> {
    let q = p.q;
    if q <= 0.0 || p.rho >= 2f64.max((p.gamma + 1.0).powi(2) / 2.0) {
        contour_vertical(p)
    } else if q > 2.0 {
        Err(Error::domain(format!("no steepest-descent contour for q = {q} > 2")))
    } else if q >= cfg.q0 {
        contour_gamma_minus(p)
    } else if q >= 1.0 {
        contour_modified_1b(p, cfg.delta_1b, cfg)
    } else if q >= cfg.q1 {
        contour_modified_2b(p, cfg.delta_2b, cfg)
    } else if q >= cfg.q2 {
        contour_gamma_lr(p, cfg)
    } else {
        rescaled_window_2c(p, cfg.u0, cfg)
    }
}

/// Both contour integrals in scaled form: the true values are
/// `values[ε]·e^{log_scale}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledPair {
    pub values: [Complex64; 2],
    pub log_scale: f64,
    /// Relative error estimate (quadrature plus truncation).
    pub rel_error: f64,
}

/// Integrate `z^ε e^{L(z)}` (ε = 0, 1) along `c`, each segment by adaptive
/// Gauss–Kronrod quadrature with breakpoints at the peak hints.
///
/// # Errors
///
/// [`Error::Accuracy`] if a segment integral does not converge.
pub fn contour_integral_pair(p: &PhaseParams, c: &Contour) -> Result<ScaledPair> {
    // Scale: maximum of Re L + ln|z'| over a coarse sample.
    let mut shift = f64::NEG_INFINITY;
    for (seg, hints) in c.segments.iter().zip(&c.hints) {
        let (a, b) = seg.range();
        let probes = (0..=32)
            .map(|j| a + (b - a) * (j as f64 + 0.5) / 33.0)
            .chain(hints.iter().copied());
        for s in probes {
            let v = log_weight(p, seg, s);
            if v.is_finite() {
                shift = shift.max(v);
            }
        }
    }
    if !shift.is_finite() {
        return Err(Error::accuracy("contour integrand scale", f64::INFINITY));
    }
    let opts = AdaptiveOptions {
        abs_tol: 1e-16,
        rel_tol: 1e-13,
        max_pieces: 4000,
    };
    let mut total = [Complex64::new(0.0, 0.0); 2];
    let mut abs_err = 0.0;
    for (seg, hints) in c.segments.iter().zip(&c.hints) {
        let (a, b) = seg.range();
        let mut breaks: Vec<f64> = (0..=16).map(|j| a + (b - a) * j as f64 / 16.0).collect();
        breaks.extend(hints.iter().copied().filter(|&h| h > a && h < b));
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|x, y| (*x - *y).abs() <= 1e-15 * (1.0 + y.abs()));
        let ray = seg.is_ray();
        let r = integrate_adaptive_vec(
            |s: f64| {
                let (z, dz) = seg.eval(s);
                let (l1, l2) = seg.logs(s, z);
                let mut l = exponent(p, z, l1, l2) - shift;
                let jac = if let (true, Segment::LeftRay { power, .. }) = (ray, seg) {
                    if s <= 0.0 {
                        return [Complex64::new(0.0, 0.0); 2];
                    }
                    l += power.ln() + (power - 1.0) * s.ln();
                    Complex64::new(0.0, -1.0)
                } else {
                    dz
                };
                let v = l.exp() * jac;
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return [Complex64::new(0.0, 0.0); 2];
                }
                [v, v * z]
            },
            &breaks,
            opts,
        )?;
        total[0] += r.value[0];
        total[1] += r.value[1];
        abs_err += r.error;
    }
    let mag = total[0].norm().max(total[1].norm());
    let rel_error = if mag > 0.0 { abs_err / mag } else { f64::INFINITY } + c.truncation_error;
    Ok(ScaledPair {
        values: total,
        log_scale: shift,
        rel_error,
    })
}

/// The path integral `∫_c g_ε(z) e^{ρ h_q(z)} dz`, which equals
/// `I_{ε,γ,ρ}` by Cauchy's theorem.
///
/// # Errors
///
/// As [`contour_integral_pair`], plus [`Error::Domain`] for `ε > 1` and
/// [`Error::Range`] if the unscaled value overflows.
pub fn contour_integral(p: &PhaseParams, c: &Contour, eps: u8) -> Result<Complex64> {
    if eps > 1 {
        return Err(Error::domain(format!("ε must be 0 or 1, got {eps}")));
    }
    let r = contour_integral_pair(p, c)?;
    if r.log_scale > 700.0 {
        return Err(Error::Range("contour integral overflows".into()));
    }
    Ok(r.values[eps as usize] * r.log_scale.exp())
}

/// One row of a contour dump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DumpRow {
    pub segment: usize,
    pub parameter: f64,
    pub z: Complex64,
    pub h: Complex64,
}

/// Sample a contour for plotting: `n` points per segment with the phase.
pub fn contour_dump(p: &PhaseParams, c: &Contour, n: usize) -> Result<Vec<DumpRow>> {
    c.sample(n)
        .into_iter()
        .map(|(segment, parameter, z)| {
            Ok(DumpRow {
                segment,
                parameter,
                z,
                h: phase_h(p.q, z)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saddles_examples() {
        let s = saddle_points(1.0).unwrap();
        assert!(s.coalesced);
        assert!((s.z_plus - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        let s = saddle_points(2.0).unwrap();
        assert!((s.z_minus.im + (2.0 - 3f64.sqrt())).abs() < 1e-15);
        assert!((s.z_plus.im + (2.0 + 3f64.sqrt())).abs() < 1e-15);
        let s = saddle_points(0.6).unwrap();
        assert!((s.z_plus - Complex64::new(0.8, -0.6)).norm() < 1e-15);
        assert_eq!(s.theta0, Some(0.6f64.acos()));
    }

    #[test]
    fn phase_rejects_cut() {
        assert!(phase_h(0.5, Complex64::new(1.5, 0.0)).is_err());
        assert_eq!(phase_h(0.5, Complex64::new(0.0, 0.0)).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn case1_arc_endpoints_and_saddle() {
        for &q in &[1.0, 1.3, 2.0] {
            let (z, _) = case1_arc(q, 0.0);
            assert!((z.im + (q - (q * q - 1.0f64).sqrt())).abs() < 1e-14);
            let (z1, _) = case1_arc(q, 1.0 - 1e-9);
            assert!((z1 - 1.0).norm() < 1e-6);
        }
    }

    #[test]
    fn case2_arc_hits_saddle() {
        for &q in &[0.1, 0.5, 0.84] {
            let g = Case2Geom::new(q);
            let (z, _) = g.point(g.theta0);
            assert!((z - Complex64::new((1.0 - q * q).sqrt(), -q)).norm() < 1e-14);
            let (phi_max, _) = g.phi(g.theta_max);
            assert!(phi_max.abs() < 1e-12);
        }
    }

    #[test]
    fn case2_derivative_matches_difference() {
        let g = Case2Geom::new(0.4);
        for &th in &[0.2, g.theta0, g.theta0 + 1e-9, 1.1] {
            let h = 1e-6;
            let (zp, _) = g.point(th + h);
            let (zm, _) = g.point(th - h);
            let (_, dz) = g.point(th);
            assert!(((zp - zm) / (2.0 * h) - dz).norm() < 1e-7, "θ = {th}");
        }
    }

    #[test]
    fn midpoint_limits() {
        assert!((midpoint_2b(0.0) - Complex64::new(0.0, -1.0)).norm() < 1e-15);
    }
}
