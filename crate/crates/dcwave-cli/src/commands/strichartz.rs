use super::require_nonempty;
use crate::config::merge;
use crate::error::CliResult;
use crate::output::{jnum, num, Sink};
use clap::Args;
use dcwave::spectral::{dyadic_q_sums, q_upper, strichartz_scan, unit_frequency_strichartz, StrichartzConfig};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct StrichartzArgs {
    /// Coulomb strength ν (the scan uses γ_min = √(1 − ν²)).
    #[arg(long, allow_hyphen_values = true)]
    pub nu: Option<f64>,
    /// Comma-separated exponents q.
    #[arg(long, value_delimiter = ',')]
    pub q: Option<Vec<f64>>,
    /// Comma-separated channel cutoffs K_max.
    #[arg(long, value_delimiter = ',')]
    pub k_cutoffs: Option<Vec<u32>>,
    /// Comma-separated dyadic frequencies N.
    #[arg(long, value_delimiter = ',')]
    pub frequencies: Option<Vec<f64>>,
    /// Comma-separated time windows T (norms over [−T, T]).
    #[arg(long, value_delimiter = ',')]
    pub t_windows: Option<Vec<f64>>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Energy step of the spectral grid.
    #[arg(long)]
    pub de: Option<f64>,
    /// Far-field radial spacing.
    #[arg(long)]
    pub dr: Option<f64>,
    /// Random Fourier modes per spectral bump.
    #[arg(long)]
    pub modes: Option<usize>,
    /// Unit-frequency variant (N = 1, s = 0).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub unit_frequency: Option<bool>,
}

#[derive(Serialize)]
struct Resolved {
    nu: f64,
    q: Vec<f64>,
    unit_frequency: bool,
    scan: StrichartzConfig,
}

pub fn run(flags: &StrichartzArgs, cfg: &Value, sink: &mut Sink) -> CliResult<()> {
    let a = merge(flags, cfg, "strichartz")?;
    let unit = a.unit_frequency.unwrap_or(false);
    let d = if unit {
        StrichartzConfig::unit_frequency()
    } else {
        StrichartzConfig::default()
    };
    let res = Resolved {
        nu: a.nu.unwrap_or(0.0),
        q: a.q.unwrap_or_else(|| vec![4.5, 6.0, 10.0]),
        unit_frequency: unit,
        scan: StrichartzConfig {
            k_cutoffs: a.k_cutoffs.unwrap_or(d.k_cutoffs),
            frequencies: a.frequencies.unwrap_or(d.frequencies),
            t_windows: a.t_windows.unwrap_or(d.t_windows),
            de: a.de.unwrap_or(d.de),
            dr: a.dr.unwrap_or(d.dr),
            modes: a.modes.unwrap_or(d.modes),
            trials: a.trials.unwrap_or(d.trials),
            seed: a.seed.unwrap_or(d.seed),
        },
    };
    require_nonempty(&res.q, "q")?;

    let report = if unit {
        let mut rows = Vec::new();
        let mut first = None;
        for &q in &res.q {
            let r = unit_frequency_strichartz(q, res.nu, &res.scan)?;
            rows.extend(r.rows.iter().copied());
            first.get_or_insert(r);
        }
        let mut r = first.expect("nonempty q list");
        r.rows = rows;
        r
    } else {
        strichartz_scan(res.nu, &res.q, &res.scan)?
    };

    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                num(r.q),
                num(r.s),
                r.trial.to_string(),
                r.k_max.to_string(),
                num(r.t_max),
                num(r.numerator),
                num(r.denominator),
                num(r.ratio),
            ]
        })
        .collect();
    sink.csv(
        "strichartz.csv",
        &["q", "s", "trial", "k_max", "t_max", "numerator", "denominator", "ratio"],
        &rows,
    )?;

    let gamma_min = (1.0 - res.nu * res.nu).sqrt();
    let per_q: Vec<Value> = res
        .q
        .iter()
        .map(|&q| {
            let mut cells = Vec::new();
            for &k in &res.scan.k_cutoffs {
                for &t in &res.scan.t_windows {
                    cells.push(json!({
                        "k_max": k,
                        "t_max": t,
                        "max_ratio": report.max_ratio(q, k, t).map(jnum),
                    }));
                }
            }
            json!({
                "q": q,
                "max_ratios": cells,
                "t_growth": report.t_growth(q).map(jnum),
                "k_growth": report.k_growth(q).map(jnum),
                "q_sums": dyadic_q_sums(q, res.nu, gamma_min).ok(),
            })
        })
        .collect();
    sink.json(
        "strichartz.json",
        "strichartz",
        &res,
        json!({ "q_upper": jnum(q_upper(res.nu)), "summary": per_q }),
    )
}
