//! Dispersion symbol, exact linear flow and the Fourier multipliers.

use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{GridSpec, Spectrum};

/// Equation parameters: sign `mu`, power `p = 2k + 1`, horizon `T`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationParams {
    mu: i8,
    k: u32,
    horizon: f64,
}

impl SimulationParams {
    pub fn new(mu: i8, k: u32, horizon: f64) -> Result<Self> {
        if mu != 1 && mu != -1 {
            return Err(Error::InvalidParameter(format!(
                "mu must be +1 or -1, got {mu}"
            )));
        }
        if k < 1 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if !(horizon.is_finite() && horizon >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "horizon must be finite and nonnegative, got {horizon}"
            )));
        }
        Ok(Self { mu, k, horizon })
    }

    pub fn mu(&self) -> f64 {
        self.mu as f64
    }

    pub fn mu_sign(&self) -> i8 {
        self.mu
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// The odd power `p = 2k + 1`.
    pub fn p(&self) -> u32 {
        2 * self.k + 1
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        Self::new(self.mu, self.k, horizon)
    }
}

/// `xi^2 + |eta|` for every mode, in storage order.
pub fn symbol(grid: &GridSpec) -> Vec<f64> {
    grid.frequencies()
        .into_iter()
        .map(|(xi, eta)| xi * xi + eta.abs())
        .collect()
}

/// Largest symbol value on the lattice.
pub fn max_symbol(grid: &GridSpec) -> f64 {
    symbol(grid).into_iter().fold(0.0, f64::max)
}

/// `S(t)`: multiplies mode `(j, m)` by `exp(-i t (xi_j^2 + |eta_m|))`.
pub fn apply_linear_flow(s: &Spectrum, t: f64) -> Result<Spectrum> {
    if !t.is_finite() {
        return Err(Error::NonFinite(format!("linear flow time {t}")));
    }
    if t == 0.0 {
        return Ok(s.clone());
    }
    let grid = *s.grid();
    let coeffs = s
        .coeffs()
        .iter()
        .zip(symbol(&grid))
        .map(|(c, sigma)| c * Complex64::cis(-t * sigma))
        .collect();
    Ok(Spectrum::from_raw(grid, coeffs))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Multiplier {
    /// `d/dx`, symbol `i xi`.
    Dx,
    /// `|D_y|`, symbol `|eta|`.
    AbsDy,
    /// `|D_y|^(1/2)`, symbol `|eta|^(1/2)`.
    SqrtAbsDy,
}

impl FromStr for Multiplier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dx" => Ok(Self::Dx),
            "abs_dy" => Ok(Self::AbsDy),
            "sqrt_abs_dy" => Ok(Self::SqrtAbsDy),
            other => Err(Error::InvalidParameter(format!(
                "unknown multiplier `{other}`"
            ))),
        }
    }
}

impl Multiplier {
    fn symbol_at(self, xi: f64, eta: f64) -> Complex64 {
        match self {
            Self::Dx => Complex64::new(0.0, xi),
            Self::AbsDy => Complex64::new(eta.abs(), 0.0),
            Self::SqrtAbsDy => Complex64::new(eta.abs().sqrt(), 0.0),
        }
    }
}

pub fn apply_multiplier(s: &Spectrum, which: Multiplier) -> Spectrum {
    let grid = *s.grid();
    let coeffs = s
        .coeffs()
        .iter()
        .zip(grid.frequencies())
        .map(|(c, (xi, eta))| c * which.symbol_at(xi, eta))
        .collect();
    Spectrum::from_raw(grid, coeffs)
}
