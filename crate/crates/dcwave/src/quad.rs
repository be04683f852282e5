//! Quadrature rules: globally adaptive Gauss–Kronrod (7/15) for complex
//! integrands and Gauss–Legendre nodes of arbitrary order.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::collections::BinaryHeap;

/// Kronrod abscissae on [−1, 1] (non-negative half, descending).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
/// Kronrod weights matching [`XGK`].
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
/// Gauss weights of the embedded 7-point rule (nodes are `XGK[1], XGK[3], …`).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

type Vals<const N: usize> = [Complex64; N];

#[inline]
fn axpy<const N: usize>(acc: &mut Vals<N>, w: f64, x: &Vals<N>) {
    for (a, v) in acc.iter_mut().zip(x) {
        *a += v * w;
    }
}

/// One application of the 15-point Kronrod rule on `[a, b]` to a vector of
/// `N` integrands, returning the estimates, the summed QUADPACK-style error
/// estimate and the Kronrod estimate of `Σ∫|f_c|` (which sets the attainable
/// round-off level).
pub fn gk15<const N: usize, F: FnMut(f64) -> Vals<N>>(
    f: &mut F,
    a: f64,
    b: f64,
) -> (Vals<N>, f64, f64) {
    let zero = [Complex64::new(0.0, 0.0); N];
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut fv = [zero; 15];
    fv[7] = f(c);
    for j in 0..7 {
        let dx = h * XGK[j];
        fv[j] = f(c - dx);
        fv[14 - j] = f(c + dx);
    }
    let mut rk = zero;
    let mut rg = zero;
    axpy(&mut rk, WGK[7], &fv[7]);
    axpy(&mut rg, WG[3], &fv[7]);
    for j in 0..7 {
        axpy(&mut rk, WGK[j], &fv[j]);
        axpy(&mut rk, WGK[j], &fv[14 - j]);
        if j % 2 == 1 {
            axpy(&mut rg, WG[j / 2], &fv[j]);
            axpy(&mut rg, WG[j / 2], &fv[14 - j]);
        }
    }
    let mut err_total = 0.0;
    let mut abs_total = 0.0;
    let mut result = zero;
    for comp in 0..N {
        let mean = rk[comp] * 0.5;
        let mut resasc = 0.0;
        let mut rabs = 0.0;
        for (j, v) in fv.iter().enumerate() {
            let w = WGK[if j <= 7 { j } else { 14 - j }];
            resasc += w * (v[comp] - mean).norm();
            rabs += w * v[comp].norm();
        }
        let resasc = resasc * h.abs();
        let mut err = ((rk[comp] - rg[comp]) * h).norm();
        if resasc != 0.0 && err != 0.0 {
            err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
        }
        err_total += err;
        abs_total += rabs * h.abs();
        result[comp] = rk[comp] * h;
    }
    (result, err_total, abs_total)
}

#[derive(Debug, Clone, Copy)]
struct Piece<const N: usize> {
    a: f64,
    b: f64,
    val: Vals<N>,
    err: f64,
    abs: f64,
}

impl<const N: usize> PartialEq for Piece<N> {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl<const N: usize> Eq for Piece<N> {}
impl<const N: usize> PartialOrd for Piece<N> {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl<const N: usize> Ord for Piece<N> {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Settings of the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOptions {
    /// Absolute tolerance.
    pub abs_tol: f64,
    /// Relative tolerance (with respect to the largest component).
    pub rel_tol: f64,
    /// Maximum number of subintervals.
    pub max_pieces: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions {
            abs_tol: 1e-14,
            rel_tol: 1e-13,
            max_pieces: 4000,
        }
    }
}

/// Result of an adaptive integration of `N` integrands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<const N: usize> {
    pub value: Vals<N>,
    /// Summed error estimate over the components.
    pub error: f64,
    pub pieces: usize,
}

fn max_norm<const N: usize>(v: &Vals<N>) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Globally adaptive Gauss–Kronrod integration of the vector integrand `f`
/// over the partition given by `breaks` (at least two increasing points).
///
/// The subinterval with the largest error estimate is bisected until the
/// summed estimate falls below `max(abs_tol, rel_tol·max|I_c|, 8ε·Σ∫|f_c|)`;
/// the last term is the round-off floor below which cancellation makes
/// further refinement pointless.
///
/// # Errors
///
/// [`Error::Accuracy`] if the tolerance is not met within `max_pieces`
/// subintervals, or if the integrand produces non-finite values.
pub fn integrate_adaptive_vec<const N: usize, F: FnMut(f64) -> Vals<N>>(
    mut f: F,
    breaks: &[f64],
    opts: AdaptiveOptions,
) -> Result<Integral<N>> {
    if breaks.len() < 2 {
        return Err(Error::domain("integrate_adaptive needs at least two breakpoints"));
    }
    let mut heap = BinaryHeap::with_capacity(breaks.len() * 4);
    let mut total = [Complex64::new(0.0, 0.0); N];
    let mut total_err = 0.0;
    let mut total_abs = 0.0;
    for w in breaks.windows(2) {
        let (val, err, abs) = gk15(&mut f, w[0], w[1]);
        axpy(&mut total, 1.0, &val);
        total_err += err;
        total_abs += abs;
        heap.push(Piece {
            a: w[0],
            b: w[1],
            val,
            err,
            abs,
        });
    }
    loop {
        if total.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::accuracy(
                "adaptive quadrature (non-finite integrand)",
                f64::INFINITY,
            ));
        }
        let target = opts
            .abs_tol
            .max(opts.rel_tol * max_norm(&total))
            .max(8.0 * f64::EPSILON * total_abs);
        if total_err <= target {
            return Ok(Integral {
                value: total,
                error: total_err,
                pieces: heap.len(),
            });
        }
        if heap.len() >= opts.max_pieces {
            return Err(Error::accuracy("adaptive quadrature", total_err));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::accuracy(
                "adaptive quadrature (interval underflow)",
                total_err,
            ));
        }
        let (v1, e1, a1) = gk15(&mut f, worst.a, mid);
        let (v2, e2, a2) = gk15(&mut f, mid, worst.b);
        axpy(&mut total, 1.0, &v1);
        axpy(&mut total, 1.0, &v2);
        axpy(&mut total, -1.0, &worst.val);
        total_err += e1 + e2 - worst.err;
        total_abs += a1 + a2 - worst.abs;
        heap.push(Piece {
            a: worst.a,
            b: mid,
            val: v1,
            err: e1,
            abs: a1,
        });
        heap.push(Piece {
            a: mid,
            b: worst.b,
            val: v2,
            err: e2,
            abs: a2,
        });
        // Guard against drift of the running sums.
        if heap.len() % 256 == 0 {
            total = [Complex64::new(0.0, 0.0); N];
            total_err = 0.0;
            total_abs = 0.0;
            for p in heap.iter() {
                axpy(&mut total, 1.0, &p.val);
                total_err += p.err;
                total_abs += p.abs;
            }
        }
    }
}

/// Scalar convenience wrapper around [`integrate_adaptive_vec`].
pub fn integrate_adaptive<F: FnMut(f64) -> Complex64>(
    mut f: F,
    breaks: &[f64],
    opts: AdaptiveOptions,
) -> Result<Integral<1>> {
    integrate_adaptive_vec(|x| [f(x)], breaks, opts)
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [−1, 1],
/// computed by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss–Legendre rule needs n ≥ 1");
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 16, 64, 128] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n).min(40) {
                let s: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((s - exact).abs() < 1e-13, "n={n} deg={deg} {s} {exact}");
            }
        }
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        // ∫_0^1 x^{-1/2} dx = 2
        let r = integrate_adaptive(
            |x| Complex64::new(x.powf(-0.5), 0.0),
            &[0.0, 1.0],
            AdaptiveOptions {
                abs_tol: 1e-12,
                rel_tol: 1e-12,
                max_pieces: 2000,
            },
        )
        .unwrap();
        assert!((r.value[0].re - 2.0).abs() < 1e-10);
    }

    #[test]
    fn adaptive_oscillatory() {
        // ∫_0^{10} e^{i 20 x} dx
        let r = integrate_adaptive(
            |x| Complex64::new(0.0, 20.0 * x).exp(),
            &[0.0, 10.0],
            AdaptiveOptions::default(),
        )
        .unwrap();
        let exact = (Complex64::new(0.0, 200.0).exp() - 1.0) / Complex64::new(0.0, 20.0);
        assert!((r.value[0] - exact).norm() < 1e-13);
    }
}
