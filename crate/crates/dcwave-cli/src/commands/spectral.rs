use crate::config::merge;
use crate::descriptor::{ChannelData, Descriptor, Profile};
use crate::error::{CliError, CliResult};
use crate::output::{jnum, num, Sink};
use clap::Args;
use dcwave::eigenwave::make_channel;
use dcwave::spectral::{HankelKernel, RadialFunction, RadialGrid, SpectralFunction};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::path::PathBuf;
use std::sync::Arc;

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct HankelArgs {
    /// JSON data descriptor.
    #[arg(long)]
    pub descriptor: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct EvolveArgs {
    /// JSON data descriptor.
    #[arg(long)]
    pub descriptor: Option<PathBuf>,
    /// Comma-separated output times (default 0).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub t: Option<Vec<f64>>,
}

/// Echo of the resolved inputs.
#[derive(Serialize)]
struct Resolved<'a> {
    descriptor: &'a Descriptor,
    grids: crate::descriptor::Grids,
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<&'a [f64]>,
}

/// One channel's kernel and data in both representations.
struct Prepared {
    kernel: HankelKernel,
    radial: RadialFunction,
    spectral: SpectralFunction,
    /// Whether the input was radial (gaussian) or spectral (spike).
    radial_input: bool,
}

fn prepare(d: &Descriptor, r: &Arc<RadialGrid>, e: &Arc<RadialGrid>) -> CliResult<Vec<Prepared>> {
    let channels: Vec<_> = d
        .channels
        .iter()
        .map(|c| make_channel(c.k, d.nu).map(|ch| (ch, c)))
        .collect::<dcwave::Result<_>>()?;
    channels
        .par_iter()
        .map(|(ch, c): &(_, &ChannelData)| {
            let kernel = HankelKernel::new(ch, r.clone(), e.clone())?;
            match c.profile {
                Profile::Gaussian {
                    center,
                    width,
                    amplitude,
                } => {
                    let amp = amplitude.map(|[re, im]| Complex64::new(re, im));
                    let radial = RadialFunction::gaussian(r.clone(), center, width, amp);
                    let spectral = kernel.forward(&radial)?;
                    Ok(Prepared {
                        kernel,
                        radial,
                        spectral,
                        radial_input: true,
                    })
                }
                Profile::Spike { energy, positive } => {
                    let spectral = SpectralFunction::spike(e.clone(), e.nearest(energy), positive)?;
                    let radial = kernel.inverse(&spectral)?;
                    Ok(Prepared {
                        kernel,
                        radial,
                        spectral,
                        radial_input: false,
                    })
                }
            }
        })
        .collect::<dcwave::Result<Vec<_>>>()
        .map_err(CliError::from)
}

fn load(path: &Option<PathBuf>) -> CliResult<Descriptor> {
    let p = path.as_ref().ok_or_else(|| CliError::usage("--descriptor is required"))?;
    Descriptor::load(p)
}

fn rel_max(diff: &RadialFunction, reference: &RadialFunction) -> f64 {
    diff.max_abs() / reference.max_abs()
}

fn push_rows(
    rows: &mut Vec<Vec<String>>,
    lead: &[String],
    c: &ChannelData,
    nodes: &[f64],
    plus: &[Complex64],
    minus: &[Complex64],
) {
    for i in 0..nodes.len() {
        let mut row = lead.to_vec();
        row.extend([
            c.k.to_string(),
            num(c.m),
            num(nodes[i]),
            num(plus[i].re),
            num(plus[i].im),
            num(minus[i].re),
            num(minus[i].im),
        ]);
        rows.push(row);
    }
}

pub fn run_hankel(flags: &HankelArgs, cfg: &Value, sink: &mut Sink) -> CliResult<()> {
    let a = merge(flags, cfg, "hankel")?;
    let d = load(&a.descriptor)?;
    let (r, e, grids) = d.grids()?;
    let prepared = prepare(&d, &r, &e)?;

    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for (c, p) in d.channels.iter().zip(&prepared) {
        push_rows(&mut rows, &["r".into()], c, r.nodes(), p.radial.plus(), p.radial.minus());
        push_rows(&mut rows, &["E".into()], c, e.nodes(), p.spectral.plus(), p.spectral.minus());
        // A spectral spike is an undamped wave in r, cut off by the radial
        // grid, so the norm comparisons only make sense for radial inputs.
        let (isometry, roundtrip) = if p.radial_input {
            let back = p.kernel.inverse(&p.spectral)?;
            (
                jnum((p.spectral.norm() / p.radial.norm() - 1.0).abs()),
                jnum(rel_max(&back.sub(&p.radial)?, &p.radial)),
            )
        } else {
            (Value::Null, Value::Null)
        };
        summary.push(json!({
            "k": c.k,
            "m": c.m,
            "norm_r": p.radial.norm(),
            "norm_e": p.spectral.norm(),
            "isometry_error": isometry,
            "roundtrip_error": roundtrip,
        }));
    }
    sink.csv(
        "hankel.csv",
        &["domain", "k", "m", "x", "plus_re", "plus_im", "minus_re", "minus_im"],
        &rows,
    )?;
    let res = Resolved {
        descriptor: &d,
        grids,
        t: None,
    };
    sink.json("hankel.json", "hankel", &res, json!({ "channels": summary }))
}

pub fn run_evolve(flags: &EvolveArgs, cfg: &Value, sink: &mut Sink) -> CliResult<()> {
    let a = merge(flags, cfg, "evolve")?;
    let times = a.t.clone().unwrap_or_else(|| vec![0.0]);
    if times.is_empty() || times.iter().any(|t| !t.is_finite()) {
        return Err(CliError::usage("--t needs finite times"));
    }
    let d = load(&a.descriptor)?;
    let (r, e, grids) = d.grids()?;
    let prepared = prepare(&d, &r, &e)?;

    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for &t in &times {
        let frames: Vec<RadialFunction> = prepared
            .par_iter()
            .map(|p| p.kernel.evolve_spectral(t, &p.spectral))
            .collect::<dcwave::Result<_>>()?;
        for ((c, p), f) in d.channels.iter().zip(&prepared).zip(&frames) {
            push_rows(&mut rows, &[num(t)], c, r.nodes(), f.plus(), f.minus());
            summary.push(json!({
                "t": t,
                "k": c.k,
                "m": c.m,
                "norm": f.norm(),
                "norm_change": jnum((f.norm() / p.radial.norm() - 1.0).abs()),
                "deviation_from_initial": jnum(rel_max(&f.sub(&p.radial)?, &p.radial)),
            }));
        }
    }
    sink.csv(
        "evolve.csv",
        &["t", "k", "m", "r", "plus_re", "plus_im", "minus_re", "minus_im"],
        &rows,
    )?;
    let res = Resolved {
        descriptor: &d,
        grids,
        t: Some(&times),
    };
    sink.json("evolve.json", "evolve", &res, json!({ "frames": summary }))
}
