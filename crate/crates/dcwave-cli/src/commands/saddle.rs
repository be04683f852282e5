use crate::config::merge;
use crate::error::{CliError, CliResult};
use crate::output::{num, Sink};
use clap::Args;
use dcwave::saddle::{contour_dump, saddle_points, select_contour, PhaseParams, SaddleConfig};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SaddleArgs {
    /// γ = √(k² − ν²) > 0.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub nu: Option<f64>,
    /// ρ > 0; the contour family is chosen from q = (γ − 1)/ρ.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Samples per contour segment.
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub q0: Option<f64>,
    #[arg(long)]
    pub q1: Option<f64>,
    #[arg(long)]
    pub q2: Option<f64>,
    #[arg(long)]
    pub delta_1b: Option<f64>,
    #[arg(long)]
    pub delta_2b: Option<f64>,
    #[arg(long)]
    pub u0: Option<f64>,
}

#[derive(Serialize)]
struct Resolved {
    gamma: f64,
    nu: f64,
    rho: f64,
    points: usize,
    thresholds: SaddleConfig,
}

pub fn run(flags: &SaddleArgs, cfg: &Value, sink: &mut Sink) -> CliResult<()> {
    let a = merge(flags, cfg, "saddle_dump")?;
    let d = SaddleConfig::default();
    let res = Resolved {
        gamma: a.gamma.ok_or_else(|| CliError::usage("--gamma is required"))?,
        nu: a.nu.unwrap_or(0.0),
        rho: a.rho.ok_or_else(|| CliError::usage("--rho is required"))?,
        points: a.points.unwrap_or(100),
        thresholds: SaddleConfig {
            q0: a.q0.unwrap_or(d.q0),
            q1: a.q1.unwrap_or(d.q1),
            q2: a.q2.unwrap_or(d.q2),
            delta_1b: a.delta_1b.unwrap_or(d.delta_1b),
            delta_2b: a.delta_2b.unwrap_or(d.delta_2b),
            u0: a.u0.unwrap_or(d.u0),
        },
    };
    if res.points < 2 {
        return Err(CliError::usage("--points must be at least 2"));
    }
    res.thresholds.validate()?;
    let p = PhaseParams::new(res.gamma, res.nu, res.rho)?;
    let contour = select_contour(&p, &res.thresholds)?;
    let case = contour.kind.name();
    let dump = contour_dump(&p, &contour, res.points)?;
    let rows: Vec<Vec<String>> = dump
        .iter()
        .map(|r| {
            vec![
                r.segment.to_string(),
                num(r.parameter),
                num(r.z.re),
                num(r.z.im),
                num(r.h.re),
                num(r.h.im),
                case.to_string(),
            ]
        })
        .collect();
    sink.csv(
        "saddle.csv",
        &["segment_index", "parameter", "re_z", "im_z", "re_h", "im_h", "case"],
        &rows,
    )?;

    let saddles = if p.q > 0.0 {
        let s = saddle_points(p.q)?;
        let pts = if s.coalesced { vec![s.z_minus] } else { vec![s.z_minus, s.z_plus] };
        json!({
            "points": pts.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
            "coalesced": s.coalesced,
            "theta0": s.theta0,
        })
    } else {
        Value::Null
    };
    sink.json(
        "saddle.json",
        "saddle-dump",
        &res,
        json!({
            "q": p.q,
            "case": case,
            "saddles": saddles,
            "segments": contour.segments.len(),
            "truncation_error": contour.truncation_error,
            "descent": contour.descent,
        }),
    )
}
