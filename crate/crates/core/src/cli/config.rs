//! Run settings: a JSON config file merged with command-line flags.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolver::Splitting;
use crate::initial::InitialCondition;
use crate::picard::{Direction, InitialIterate};
use crate::propagator::SimulationParams;
use crate::spectral::GridSpec;

/// Every tunable of every subcommand. Absent fields take the documented
/// defaults; flags override values read from `--config`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub grid: Option<String>,
    #[serde(rename = "box")]
    pub box_size: Option<String>,
    pub k: Option<u32>,
    pub mu: Option<i8>,
    pub init: Option<String>,
    #[serde(rename = "T")]
    pub horizon: Option<f64>,
    pub dt: Option<f64>,
    pub cadence: Option<usize>,
    pub snapshot_every: Option<usize>,
    pub splitting: Option<Splitting>,
    pub nodes: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub constant: Option<f64>,
    pub calibrate: Option<bool>,
    pub initial_iterate: Option<InitialIterate>,
    pub dealias: Option<bool>,
    pub direction: Option<Direction>,
    pub suite: Option<String>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub band: Option<i64>,
    pub radius: Option<f64>,
    pub q: Option<Vec<f64>>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident, $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidParameter(format!("config {}: {e}", path.display())))
    }

    /// Values present in `other` replace those in `self`.
    pub fn overlay(&mut self, other: &Settings) {
        overlay!(
            self,
            other,
            grid,
            box_size,
            k,
            mu,
            init,
            horizon,
            dt,
            cadence,
            snapshot_every,
            splitting,
            nodes,
            tol,
            max_iter,
            constant,
            calibrate,
            initial_iterate,
            dealias,
            direction,
            suite,
            trials,
            seed,
            band,
            radius,
            q
        );
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        let (nx, ny) = parse_pair(self.grid.as_deref().unwrap_or("64"), "grid")?;
        let (lx, ly) = parse_pair(self.box_size.as_deref().unwrap_or("10"), "box")?;
        if nx.fract() != 0.0 || ny.fract() != 0.0 || nx < 0.0 || ny < 0.0 {
            return Err(Error::InvalidGrid("grid sizes must be integers".into()));
        }
        GridSpec::new(nx as usize, ny as usize, lx, ly)
    }

    pub fn params(&self, horizon: f64) -> Result<SimulationParams> {
        SimulationParams::new(self.mu.unwrap_or(1), self.k.unwrap_or(1), horizon)
    }

    pub fn initial(&self) -> Result<InitialCondition> {
        self.init.as_deref().unwrap_or("gaussian:1,1").parse()
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

/// `"64"` or `"64x32"`.
fn parse_pair(s: &str, what: &str) -> Result<(f64, f64)> {
    let bad = || Error::InvalidParameter(format!("bad {what} `{s}`"));
    let parts: Vec<&str> = s.split(['x', 'X']).collect();
    let nums = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<Vec<_>>>()?;
    match nums.as_slice() {
        [a] => Ok((*a, *a)),
        [a, b] => Ok((*a, *b)),
        _ => Err(bad()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs() {
        assert_eq!(parse_pair("64", "grid").unwrap(), (64.0, 64.0));
        assert_eq!(parse_pair("8x16", "grid").unwrap(), (8.0, 16.0));
        assert!(parse_pair("8x", "grid").is_err());
        assert!(parse_pair("1x2x3", "grid").is_err());
    }

    #[test]
    fn overlay_prefers_flags() {
        let mut file: Settings =
            serde_json::from_str(r#"{"grid": "32", "k": 2, "T": 0.5}"#).unwrap();
        let flags = Settings {
            k: Some(1),
            ..Default::default()
        };
        file.overlay(&flags);
        assert_eq!(file.k, Some(1));
        assert_eq!(file.horizon, Some(0.5));
        assert_eq!(file.grid_spec().unwrap().nx(), 32);
        assert!(serde_json::from_str::<Settings>(r#"{"gird": "32"}"#).is_err());
    }
}
