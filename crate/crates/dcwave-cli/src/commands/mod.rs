pub mod dyadic;
pub mod envelope;
pub mod eval;
pub mod saddle;
pub mod spectral;
pub mod strichartz;

use crate::error::{CliError, CliResult};

/// `n` log-spaced points on `[a, b]` (a single point if `a == b`).
pub fn log_grid(a: f64, b: f64, n: usize) -> CliResult<Vec<f64>> {
    if n == 0 {
        return Err(CliError::usage("grid needs at least one point"));
    }
    if !(a > 0.0 && b >= a && b.is_finite()) {
        return Err(CliError::usage(format!("invalid grid range [{a}, {b}]")));
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    let ratio = b / a;
    Ok((0..n)
        .map(|i| if i + 1 == n { b } else { a * ratio.powf(i as f64 / (n - 1) as f64) })
        .collect())
}

/// The k set from an explicit list or `±1..=±k_max`.
pub fn k_set(list: &Option<Vec<i32>>, k_max: Option<u32>, default_max: u32) -> CliResult<Vec<i32>> {
    let ks = match list {
        Some(l) => l.clone(),
        None => {
            let m = k_max.unwrap_or(default_max) as i32;
            (1..=m).flat_map(|k| [k, -k]).collect()
        }
    };
    if ks.is_empty() {
        return Err(CliError::usage("empty k set"));
    }
    if let Some(k) = ks.iter().find(|&&k| k == 0) {
        return Err(CliError::usage(format!("k = {k} is not a valid channel")));
    }
    Ok(ks)
}

pub fn require_nonempty<T>(v: &[T], what: &str) -> CliResult<()> {
    if v.is_empty() {
        Err(CliError::usage(format!("empty {what} list")))
    } else {
        Ok(())
    }
}
