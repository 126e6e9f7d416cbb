//! Output directory handling and deterministic text formats.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::diagnostics::{energy, mass};
use crate::error::Result;
use crate::norms::{energy_norm, l2_norm, linf_norm, wiener_norm};
use crate::propagator::SimulationParams;
use crate::snapshot::write_snapshot;
use crate::spectral::Spectrum;

/// Shortest round-trip scientific notation (at most 17 significant digits).
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:e}")
    }
}

/// Single writer for one run directory; remembers every file it produced.
pub struct RunDir {
    root: PathBuf,
    outputs: Vec<String>,
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            outputs: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    fn record(&mut self, name: &str) {
        if !self.outputs.iter().any(|o| o == name) {
            self.outputs.push(name.to_string());
        }
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, text)?;
        self.record(name);
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_text(name, &text)
    }

    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut text = header.join(",");
        text.push('\n');
        for row in rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        self.write_text(name, &text)
    }

    pub fn write_snapshot(&mut self, name: &str, time: f64, s: &Spectrum) -> Result<()> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        write_snapshot(&path, time, &s.to_field()?)?;
        self.record(name);
        Ok(())
    }
}

pub const TIMESERIES_HEADER: [&str; 7] = ["t", "mass", "energy", "e_norm", "wiener", "linf", "l2"];

pub fn timeseries_row(t: f64, s: &Spectrum, params: &SimulationParams) -> Result<Vec<String>> {
    let f = s.to_field()?;
    Ok(vec![
        fmt_f64(t),
        fmt_f64(mass(&f)?),
        fmt_f64(energy(&f, params)?),
        fmt_f64(energy_norm(s)?),
        fmt_f64(wiener_norm(s)?),
        fmt_f64(linf_norm(&f)?),
        fmt_f64(l2_norm(&f)?),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0, 1e-7] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(0.1), "1e-1");
        assert_eq!(fmt_f64(f64::NAN), "nan");
    }
}
