//! JSON data descriptors for `hankel` and `evolve`:
//!
//! ```json
//! {
//!   "nu": 0.3,
//!   "channels": [
//!     { "k": 1, "m": 0.5,
//!       "profile": { "type": "gaussian", "center": 3.0, "width": 0.75,
//!                    "amplitude": [[1.0, 0.0], [0.0, 0.0]] } },
//!     { "k": -2, "m": 1.5,
//!       "profile": { "type": "spike", "energy": 1.7, "positive": true } }
//!   ],
//!   "grids": { "r_min": 0.001, "r_max": 30.0, "r_points": 2048,
//!              "e_min": 1e-6, "e_max": 40.0 }
//! }
//! ```
//!
//! Gaussian profiles are radial data `(f⁺, f⁻)` with complex amplitudes
//! given as `[re, im]` pairs; spikes are spectral data concentrated on the
//! energy node nearest to `energy` (positive or negative branch).

use crate::error::{CliError, CliResult};
use dcwave::spectral::{AngularIndex, RadialGrid};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Descriptor {
    pub nu: f64,
    pub channels: Vec<ChannelData>,
    #[serde(default)]
    pub grids: Grids,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelData {
    pub k: i32,
    pub m: f64,
    pub profile: Profile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum Profile {
    Gaussian {
        center: f64,
        width: f64,
        #[serde(default = "unit_amplitude")]
        amplitude: [[f64; 2]; 2],
    },
    Spike {
        energy: f64,
        #[serde(default = "yes")]
        positive: bool,
    },
}

fn unit_amplitude() -> [[f64; 2]; 2] {
    [[1.0, 0.0], [0.0, 0.0]]
}

fn yes() -> bool {
    true
}

/// Log grids in r and (matched) E; omitted fields take the standard values
/// `[1e-3, 30]` with 2048 nodes and `[1e-6, 40]`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub r_points: Option<usize>,
    pub e_min: Option<f64>,
    pub e_max: Option<f64>,
}

impl Descriptor {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read descriptor {}: {e}", path.display())))?;
        let d: Descriptor = serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("invalid descriptor {}: {e}", path.display())))?;
        d.validate()?;
        Ok(d)
    }

    fn validate(&self) -> CliResult<()> {
        if self.channels.is_empty() {
            return Err(CliError::usage("descriptor has no channels"));
        }
        for c in &self.channels {
            AngularIndex::new(c.k, c.m)?;
            match c.profile {
                Profile::Gaussian { center, width, .. } if !(width > 0.0 && center.is_finite()) => {
                    return Err(CliError::usage(format!("invalid gaussian profile for k = {}", c.k)));
                }
                Profile::Spike { energy, .. } if !(energy > 0.0 && energy.is_finite()) => {
                    return Err(CliError::usage(format!("spike energy must be positive for k = {}", c.k)));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// The radial and energy grids with defaults filled in.
    pub fn grids(&self) -> CliResult<(Arc<RadialGrid>, Arc<RadialGrid>, Grids)> {
        let g = &self.grids;
        let resolved = Grids {
            r_min: Some(g.r_min.unwrap_or(1e-3)),
            r_max: Some(g.r_max.unwrap_or(30.0)),
            r_points: Some(g.r_points.unwrap_or(2048)),
            e_min: Some(g.e_min.unwrap_or(1e-6)),
            e_max: Some(g.e_max.unwrap_or(40.0)),
        };
        let r = RadialGrid::log(resolved.r_min.unwrap(), resolved.r_max.unwrap(), resolved.r_points.unwrap())?;
        let e = RadialGrid::log_matched(&r, resolved.e_min.unwrap(), resolved.e_max.unwrap())?;
        Ok((Arc::new(r), Arc::new(e), resolved))
    }
}
