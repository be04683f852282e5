use num_complex::Complex64;
use dcwave::quadrep::integral_direct_pair;
use dcwave::specfun::{kummer_1f1, ln_gamma};
use dcwave::saddle::{contour_gamma_lr, contour_integral_pair, contour_vertical, select_contour, PhaseParams, SaddleConfig};

fn check(gamma: f64, nu: f64, rho: f64) -> (String, f64) {
    let p = PhaseParams::new(gamma, nu, rho).unwrap();
    let c = select_contour(&p, &SaddleConfig::default()).unwrap();
    let s = contour_integral_pair(&p, &c).unwrap();
    let d = integral_direct_pair(gamma, nu, rho).unwrap();
    let mut worst: f64 = 0.0;
    for e in 0..2 {
        let v = s.values[e] * s.log_scale.exp();
        let scale = d.values[0].norm().max(d.values[1].norm());
        worst = worst.max((v - d.values[e]).norm() / scale);
    }
    (c.kind.name().to_string(), worst)
}

#[test]
fn contour_matches_direct_quadrature_in_every_case() {
    // (γ, ν, ρ) chosen so that q = (γ−1)/ρ visits every contour family.
    let cases = [
        (1.5, 0.3, 0.3),   // q ≈ 1.67
        (2.2, -0.5, 1.1),  // q ≈ 1.09
        (3.0, 0.7, 2.1),   // q ≈ 0.95
        (5.0, 0.2, 8.0),   // q = 0.5
    ];
    for &(g, n, r) in &cases {
        let (kind, err) = check(g, n, r);
        println!("γ={g} ν={n} ρ={r}: {kind} rel diff {err:e}");
        assert!(err < 1e-10, "{kind}: {err}");
    }
}

/// `I_0 = 2^{2γ} e^{iρ} B(γ−iν, γ+1+iν) ₁F₁(γ−iν; 2γ+1; −2iρ)`.
fn closed_form_i0(gamma: f64, nu: f64, rho: f64) -> Complex64 {
    let a = Complex64::new(gamma, -nu);
    let b = Complex64::new(gamma + 1.0, nu);
    let ln_beta = ln_gamma(a).unwrap() + ln_gamma(b).unwrap()
        - ln_gamma(Complex64::new(2.0 * gamma + 1.0, 0.0)).unwrap();
    let f = kummer_1f1(a, a + b, Complex64::new(0.0, -2.0 * rho)).unwrap();
    (ln_beta + Complex64::new(2.0 * gamma * 2f64.ln(), rho)).exp() * f
}

#[test]
fn vertical_contour_matches_closed_form() {
    for &(g, n, r) in &[(0.6, 0.9, 12.0), (2.0, 0.1, 14.0), (1.0, -1.0, 3.0), (5.0, 0.5, 20.0), (0.2, 0.3, 2.5)] {
        let p = PhaseParams::new(g, n, r).unwrap();
        let c = select_contour(&p, &SaddleConfig::default()).unwrap();
        assert_eq!(c.kind.name(), "vertical_lines");
        let s = contour_integral_pair(&p, &c).unwrap();
        let v = s.values[0] * s.log_scale.exp();
        let exact = closed_form_i0(g, n, r);
        let err = (v - exact).norm() / exact.norm();
        println!("γ={g} ν={n} ρ={r}: vertical rel diff {err:e}");
        assert!(err < 1e-10, "{err}");
    }
}

#[test]
fn rescaled_window_agrees_with_other_paths() {
    let cfg = SaddleConfig::default();
    for &(g, n, r) in &[(20.0, 0.4, 150.0), (12.0, -0.8, 80.0), (64.0, 0.1, 1000.0)] {
        let p = PhaseParams::new(g, n, r).unwrap();
        let c = select_contour(&p, &cfg).unwrap();
        assert_eq!(c.kind.name(), "rescaled_2c");
        let a = contour_integral_pair(&p, &c).unwrap();
        let loose = SaddleConfig { q2: p.q * 0.5, ..cfg };
        for other in [contour_vertical(&p).unwrap(), contour_gamma_lr(&p, &loose).unwrap()] {
            let b = contour_integral_pair(&p, &other).unwrap();
            for e in 0..2 {
                let va = a.values[e];
                let vb = b.values[e] * (b.log_scale - a.log_scale).exp();
                let err = (va - vb).norm() / va.norm();
                println!("γ={g} ν={n} ρ={r} ε={e}: 2c vs {} rel diff {err:e}", other.kind.name());
                assert!(err < 1e-10, "{err}");
            }
        }
    }
}
