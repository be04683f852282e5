use super::{k_set, require_nonempty};
use crate::config::merge;
use crate::error::{CliError, CliResult};
use crate::output::{jnum, num, Sink};
use clap::Args;
use dcwave::eigenwave::make_channel;
use dcwave::envelope::{dyadic_l2_pair, loglog_slope};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DyadicArgs {
    /// Explicit comma-separated k list (overrides --k-max).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub k: Option<Vec<i32>>,
    /// Scan k = ±1, …, ±k_max (default 20).
    #[arg(long)]
    pub k_max: Option<u32>,
    /// Comma-separated ν list (default 0,0.7,-0.7).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub nu: Option<Vec<f64>>,
    /// Smallest cell R = 2^j_min (≥ −10).
    #[arg(long, allow_hyphen_values = true)]
    pub j_min: Option<i32>,
    /// Largest cell R = 2^j_max (≤ 12).
    #[arg(long, allow_hyphen_values = true)]
    pub j_max: Option<i32>,
    /// Tolerance on the fitted slopes.
    #[arg(long)]
    pub slope_tol: Option<f64>,
    /// Allowed spread of the R ≥ 1 constants across k.
    #[arg(long)]
    pub spread: Option<f64>,
}

#[derive(Serialize)]
struct Resolved {
    k: Vec<i32>,
    nu: Vec<f64>,
    j_min: i32,
    j_max: i32,
    slope_tol: f64,
    spread: f64,
}

/// Fits for one channel.
#[derive(Serialize)]
struct ChannelFit {
    k: i32,
    nu: f64,
    gamma: f64,
    /// Slopes over the four smallest cells (R ≤ 1), ψ and ψ′.
    small_slopes: Option<[f64; 2]>,
    /// Slopes over up to four cells from max(4|k|, 32).
    large_slopes: Option<[f64; 2]>,
    /// max over R ≤ 1 of ‖·‖/R^{γ±1/2}.
    small_constants: Option<[f64; 2]>,
    /// max over R ≥ 1 of ‖·‖/R^{1/2}.
    large_constants: Option<[f64; 2]>,
    failures: Vec<String>,
}

pub fn run(flags: &DyadicArgs, cfg: &Value, sink: &mut Sink) -> CliResult<()> {
    let a = merge(flags, cfg, "verify_dyadic")?;
    let res = Resolved {
        k: k_set(&a.k, a.k_max, 20)?,
        nu: a.nu.unwrap_or_else(|| vec![0.0, 0.7, -0.7]),
        j_min: a.j_min.unwrap_or(-10),
        j_max: a.j_max.unwrap_or(10),
        slope_tol: a.slope_tol.unwrap_or(0.05),
        spread: a.spread.unwrap_or(10.0),
    };
    require_nonempty(&res.nu, "ν")?;
    if !(-10 <= res.j_min && res.j_min <= res.j_max && res.j_max <= 12) {
        return Err(CliError::usage("need −10 ≤ j_min ≤ j_max ≤ 12"));
    }
    let mut channels = Vec::new();
    for &k in &res.k {
        for &nu in &res.nu {
            channels.push(make_channel(k, nu)?);
        }
    }
    let rs: Vec<f64> = (res.j_min..=res.j_max).map(|j| 2f64.powi(j)).collect();

    let values: Vec<Vec<(f64, f64)>> = channels
        .par_iter()
        .map(|ch| rs.iter().map(|&r| dyadic_l2_pair(ch, r)).collect::<dcwave::Result<Vec<_>>>())
        .collect::<dcwave::Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for (ch, vals) in channels.iter().zip(&values) {
        for (r, v) in rs.iter().zip(vals) {
            rows.push(vec![ch.k.to_string(), num(ch.nu), num(*r), num(v.0), num(v.1)]);
        }
        fits.push(fit_channel(ch.k, ch.nu, ch.gamma, &rs, vals, res.slope_tol));
    }

    let spread = |pick: &dyn Fn(&ChannelFit) -> Option<f64>| {
        let v: Vec<f64> = fits.iter().filter_map(pick).collect();
        if v.is_empty() {
            return None;
        }
        let mx = v.iter().copied().fold(0.0, f64::max);
        let mn = v.iter().copied().fold(f64::INFINITY, f64::min);
        Some(mx / mn)
    };
    let large_spread = [
        spread(&|f| f.large_constants.map(|c| c[0])),
        spread(&|f| f.large_constants.map(|c| c[1])),
    ];
    let literal_small_spread = [
        spread(&|f| f.small_constants.map(|c| c[0])),
        spread(&|f| f.small_constants.map(|c| c[1])),
    ];
    let mut failures: Vec<String> = fits.iter().flat_map(|f| f.failures.clone()).collect();
    for s in large_spread.iter().flatten() {
        if *s > res.spread {
            failures.push(format!("R ≥ 1 constants vary by {s:.3}× across k (allowed {}×)", res.spread));
        }
    }

    sink.csv("dyadic.csv", &["k", "nu", "R", "psi", "psi_prime"], &rows)?;
    sink.json(
        "dyadic.json",
        "verify-dyadic",
        &res,
        json!({
            "channels": fits,
            "large_constant_spread": large_spread.map(|s| s.map(jnum)),
            "small_constant_spread": literal_small_spread.map(|s| s.map(jnum)),
            "failures": failures,
            "pass": failures.is_empty(),
        }),
    )?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(format!("{} dyadic checks failed: {}", failures.len(), failures.join("; "))))
    }
}

fn fit_channel(k: i32, nu: f64, gamma: f64, rs: &[f64], vals: &[(f64, f64)], tol: f64) -> ChannelFit {
    let mut failures = Vec::new();
    let small: Vec<usize> = (0..rs.len()).filter(|&i| rs[i] <= 1.0).collect();
    let small_slopes = (small.len() >= 4).then(|| {
        let idx = &small[..4];
        let x: Vec<f64> = idx.iter().map(|&i| rs[i]).collect();
        let s = [
            loglog_slope(&x, &idx.iter().map(|&i| vals[i].0).collect::<Vec<_>>()),
            loglog_slope(&x, &idx.iter().map(|&i| vals[i].1).collect::<Vec<_>>()),
        ];
        if (s[0] - (gamma + 0.5)).abs() > tol {
            failures.push(format!("k={k} nu={nu}: small-R ψ slope {:.4} vs {:.4}", s[0], gamma + 0.5));
        }
        // For γ = 1, ψ′ tends to a constant and the R^{γ−1/2} bound is not sharp.
        if (gamma - 1.0).abs() > 1e-12 && (s[1] - (gamma - 0.5)).abs() > tol {
            failures.push(format!("k={k} nu={nu}: small-R ψ′ slope {:.4} vs {:.4}", s[1], gamma - 0.5));
        }
        s
    });
    let start = (4.0 * k.unsigned_abs() as f64).max(32.0);
    let large: Vec<usize> = (0..rs.len()).filter(|&i| rs[i] >= start).take(4).collect();
    let large_slopes = (large.len() >= 2).then(|| {
        let x: Vec<f64> = large.iter().map(|&i| rs[i]).collect();
        let s = [
            loglog_slope(&x, &large.iter().map(|&i| vals[i].0).collect::<Vec<_>>()),
            loglog_slope(&x, &large.iter().map(|&i| vals[i].1).collect::<Vec<_>>()),
        ];
        for (w, v) in ["ψ", "ψ′"].iter().zip(s) {
            if (v - 0.5).abs() > tol {
                failures.push(format!("k={k} nu={nu}: large-R {w} slope {v:.4} vs 0.5"));
            }
        }
        s
    });
    let max_over = |pred: &dyn Fn(f64) -> bool, e: [f64; 2]| {
        let mut c = [0.0f64; 2];
        let mut any = false;
        for (r, v) in rs.iter().zip(vals) {
            if pred(*r) {
                any = true;
                c[0] = c[0].max(v.0 / r.powf(e[0]));
                c[1] = c[1].max(v.1 / r.powf(e[1]));
            }
        }
        any.then_some(c)
    };
    ChannelFit {
        k,
        nu,
        gamma,
        small_slopes,
        large_slopes,
        small_constants: max_over(&|r| r <= 1.0, [gamma + 0.5, gamma - 0.5]),
        large_constants: max_over(&|r| r >= 1.0, [0.5, 0.5]),
        failures,
    }
}
