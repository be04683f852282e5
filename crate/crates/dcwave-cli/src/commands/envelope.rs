use super::{k_set, log_grid, require_nonempty};
use crate::config::merge;
use crate::error::{CliError, CliResult};
use crate::output::{jnum, num, Sink};
use clap::Args;
use dcwave::eigenwave::{evaluate, make_channel, EvalMethod};
use dcwave::envelope::{
    envelope_report, fit_constants_from, loglog_slope, scan, EnvelopeConstants, Quantity,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeSet;

pub const DEFAULT_NUS: [f64; 7] = [0.0, 0.3, -0.3, 0.7, -0.7, 0.99, -0.99];

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeArgs {
    /// Explicit comma-separated k list (overrides --k-max).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub k: Option<Vec<i32>>,
    /// Scan k = ±1, …, ±k_max (default 20).
    #[arg(long)]
    pub k_max: Option<u32>,
    /// Comma-separated ν list.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub nu: Option<Vec<f64>>,
    #[arg(long)]
    pub rho_min: Option<f64>,
    #[arg(long)]
    pub rho_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    /// Check these constants instead of fitting (requires --d too).
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub d: Option<f64>,
}

#[derive(Serialize)]
struct Resolved {
    k: Vec<i32>,
    nu: Vec<f64>,
    rho_min: f64,
    rho_max: f64,
    points: usize,
    constants: Option<EnvelopeConstants>,
}

pub fn run(flags: &EnvelopeArgs, cfg: &Value, sink: &mut Sink) -> CliResult<()> {
    let a = merge(flags, cfg, "verify_envelope")?;
    let ks = k_set(&a.k, a.k_max, 20)?;
    let nus = a.nu.unwrap_or_else(|| DEFAULT_NUS.to_vec());
    require_nonempty(&nus, "ν")?;
    let res = Resolved {
        k: ks,
        nu: nus,
        rho_min: a.rho_min.unwrap_or(0.01),
        rho_max: a.rho_max.unwrap_or(400.0),
        points: a.points.unwrap_or(60),
        constants: match (a.c, a.d) {
            (Some(c), Some(d)) if c > 0.0 && d >= 0.0 => Some(EnvelopeConstants { c, d }),
            (None, None) => None,
            _ => return Err(CliError::usage("--c and --d must be given together, with C > 0 and D ≥ 0")),
        },
    };
    let grid = log_grid(res.rho_min, res.rho_max, res.points)?;
    for &k in &res.k {
        for &nu in &res.nu {
            make_channel(k, nu)?;
        }
    }

    let pts = scan(&res.k, &res.nu, &grid)?;
    let fitted = match res.constants {
        Some(c) => c,
        None => fit_constants_from(&pts, Quantity::JSum)?,
    };
    let rep = envelope_report(&pts, Quantity::JSum, fitted);

    let rows: Vec<Vec<String>> = rep
        .samples
        .iter()
        .map(|s| {
            vec![
                s.k.to_string(),
                num(s.nu),
                num(s.rho),
                s.regime.name().to_string(),
                num(s.j0),
                num(s.j1),
                num(s.bound),
                num(s.ratio),
            ]
        })
        .collect();
    sink.csv(
        "envelope.csv",
        &["k", "nu", "rho", "regime", "j0", "j1", "bound", "ratio"],
        &rows,
    )?;

    let slope = coalescence_slope(&res.k, &res.nu)?;
    sink.json(
        "envelope.json",
        "verify-envelope",
        &res,
        json!({
            "constants": fitted,
            "fitted": res.constants.is_none(),
            "worst_ratio": jnum(rep.worst_ratio),
            "worst": rep.worst,
            "holds": rep.holds(),
            "tight": rep.tight(),
            "samples": rep.samples.len(),
            "coalescence_slope": slope.map(|s| json!({
                "abs_k": s.0,
                "nu": s.1,
                "slope": jnum(s.2),
                "expected": -5.0 / 6.0,
            })),
        }),
    )?;
    if rep.holds() {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "envelope exceeded, worst ratio {:e} at {}",
            rep.worst_ratio,
            serde_json::to_string(&rep.worst)?
        )))
    }
}

/// Slope of `log j₀(ρ = |k|)` against `log |k|` over the distinct `|k| ≥ 8`
/// of the scan, at the ν closest to zero; `None` with fewer than two.
fn coalescence_slope(ks: &[i32], nus: &[f64]) -> CliResult<Option<(Vec<u32>, f64, f64)>> {
    let abs: Vec<u32> = ks
        .iter()
        .map(|k| k.unsigned_abs())
        .filter(|&a| a >= 8)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if abs.len() < 2 {
        return Ok(None);
    }
    let nu = nus
        .iter()
        .copied()
        .fold(f64::INFINITY, |best, v| if v.abs() < best.abs() { v } else { best });
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &a in &abs {
        let ch = make_channel(a as i32, nu)?;
        xs.push(a as f64);
        ys.push(evaluate(&ch, a as f64, EvalMethod::Auto)?.j0);
    }
    Ok(Some((abs, nu, loglog_slope(&xs, &ys))))
}
