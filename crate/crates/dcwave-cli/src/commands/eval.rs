use super::log_grid;
use crate::config::merge;
use crate::error::{CliError, CliResult};
use crate::output::{num, Sink};
use clap::Args;
use dcwave::eigenwave::{evaluate, make_channel, EvalMethod};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct EvalArgs {
    /// Channel index k ≠ 0.
    #[arg(long, allow_hyphen_values = true)]
    pub k: Option<i32>,
    /// Coulomb strength ν with |ν| ≤ 1.
    #[arg(long, allow_hyphen_values = true)]
    pub nu: Option<f64>,
    /// Single ρ (overrides the grid flags); negative ρ gives ψ(−ρ).
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub rho_min: Option<f64>,
    #[arg(long)]
    pub rho_max: Option<f64>,
    /// Number of log-spaced grid points.
    #[arg(long)]
    pub points: Option<usize>,
    /// auto, series, quadrature or steepest_descent.
    #[arg(long)]
    pub method: Option<String>,
}

#[derive(Serialize)]
struct Resolved {
    k: i32,
    nu: f64,
    rho: Vec<f64>,
    method: String,
}

pub fn run(flags: &EvalArgs, cfg: &Value, sink: &mut Sink) -> CliResult<()> {
    let a = merge(flags, cfg, "eval")?;
    let k = a.k.ok_or_else(|| CliError::usage("--k is required"))?;
    let nu = a.nu.unwrap_or(0.0);
    let method_name = a.method.unwrap_or_else(|| "auto".into());
    let method = EvalMethod::parse(&method_name)
        .ok_or_else(|| CliError::usage(format!("unknown method `{method_name}`")))?;
    let grid = match a.rho {
        Some(r) if r == 0.0 || !r.is_finite() => return Err(CliError::usage(format!("ρ must be finite and nonzero, got {r}"))),
        Some(r) => vec![r],
        None => log_grid(
            a.rho_min.unwrap_or(0.01),
            a.rho_max.unwrap_or(400.0),
            a.points.unwrap_or(60),
        )?,
    };
    let ch = make_channel(k, nu)?;

    let mut rows = Vec::with_capacity(grid.len());
    let mut failing = Vec::new();
    for &rho in &grid {
        match evaluate(&ch, rho, method) {
            Ok(e) => rows.push(vec![
                num(rho),
                num(e.psi.f),
                num(e.psi.g),
                num(e.j0),
                num(e.j1),
                e.method.name().to_string(),
                num(e.est_error),
            ]),
            Err(dcwave::Error::Accuracy { what, achieved }) => {
                failing.push(format!("rho={rho:e} ({what}: {achieved:e})"));
            }
            Err(e) => return Err(e.into()),
        }
    }
    sink.csv(
        "eval.csv",
        &["rho", "F", "G", "j0", "j1", "method_used", "est_error"],
        &rows,
    )?;
    let resolved = Resolved {
        k,
        nu,
        rho: grid,
        method: method_name,
    };
    sink.json(
        "eval.json",
        "eval",
        &resolved,
        json!({ "rows": rows.len(), "failing_rows": failing }),
    )?;
    if failing.is_empty() {
        Ok(())
    } else {
        Err(CliError::Accuracy(format!("{} rows: {}", failing.len(), failing.join("; "))))
    }
}
