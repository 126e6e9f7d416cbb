//! Closed-form initial data.
//!
//! Descriptors parse from the compact CLI syntax, terms joined by `+`:
//!
//! ```text
//! gaussian:a,sigma[,xi0,eta0]   a exp(-(x^2 + y^2) / (2 sigma^2)) exp(i (xi0 x + eta0 y))
//! plane:j,m,amp                 amp exp(i (xi_j x + eta_m y))
//! constant:re[,im]              re + i im
//! ```

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Field, GridSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    Gaussian {
        amplitude: f64,
        width: f64,
        xi0: f64,
        eta0: f64,
    },
    PlaneWave {
        j: i64,
        m: i64,
        amplitude: f64,
    },
    Constant {
        value: Complex64,
    },
    Sum(Vec<InitialCondition>),
}

impl InitialCondition {
    pub fn gaussian(amplitude: f64, width: f64) -> Self {
        Self::Gaussian {
            amplitude,
            width,
            xi0: 0.0,
            eta0: 0.0,
        }
    }

    pub fn constant(value: Complex64) -> Self {
        Self::Constant { value }
    }

    fn eval(&self, grid: &GridSpec, x: f64, y: f64) -> Complex64 {
        match self {
            Self::Gaussian {
                amplitude,
                width,
                xi0,
                eta0,
            } => {
                let env = (-(x * x + y * y) / (2.0 * width * width)).exp();
                Complex64::from_polar(amplitude * env, xi0 * x + eta0 * y)
            }
            Self::PlaneWave { j, m, amplitude } => {
                let xi = PI * *j as f64 / grid.lx();
                let eta = PI * *m as f64 / grid.ly();
                Complex64::from_polar(*amplitude, xi * x + eta * y)
            }
            Self::Constant { value } => *value,
            Self::Sum(terms) => terms.iter().map(|t| t.eval(grid, x, y)).sum(),
        }
    }
}

/// Grid samples of a closed-form descriptor.
pub fn sample_function(grid: &GridSpec, init: &InitialCondition) -> Result<Field> {
    if let InitialCondition::Gaussian { width, .. } = init {
        if !(*width > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gaussian width must be positive, got {width}"
            )));
        }
    }
    Field::from_fn(*grid, |x, y| init.eval(grid, x, y))
        .map_err(|_| Error::NonFinite(format!("samples of {init}")))
}

fn parse_numbers(name: &str, body: &str) -> Result<Vec<f64>> {
    body.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad number `{t}` in {name}")))
        })
        .collect()
}

impl FromStr for InitialCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let terms: Vec<&str> = s.split('+').map(str::trim).collect();
        if terms.len() > 1 {
            return terms
                .iter()
                .map(|t| t.parse())
                .collect::<Result<Vec<_>>>()
                .map(Self::Sum);
        }
        let (name, body) = s
            .split_once(':')
            .ok_or_else(|| Error::UnknownInitial(s.to_string()))?;
        let nums = parse_numbers(name, body)?;
        let arity = |ok: &[usize]| {
            if ok.contains(&nums.len()) {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} takes {ok:?} parameters, got {}",
                    nums.len()
                )))
            }
        };
        match name.trim() {
            "gaussian" => {
                arity(&[2, 4])?;
                Ok(Self::Gaussian {
                    amplitude: nums[0],
                    width: nums[1],
                    xi0: nums.get(2).copied().unwrap_or(0.0),
                    eta0: nums.get(3).copied().unwrap_or(0.0),
                })
            }
            "plane" | "plane_wave" => {
                arity(&[3])?;
                if nums[0].fract() != 0.0 || nums[1].fract() != 0.0 {
                    return Err(Error::InvalidParameter(
                        "plane wave mode numbers must be integers".into(),
                    ));
                }
                Ok(Self::PlaneWave {
                    j: nums[0] as i64,
                    m: nums[1] as i64,
                    amplitude: nums[2],
                })
            }
            "constant" => {
                arity(&[1, 2])?;
                Ok(Self::Constant {
                    value: Complex64::new(nums[0], nums.get(1).copied().unwrap_or(0.0)),
                })
            }
            other => Err(Error::UnknownInitial(other.to_string())),
        }
    }
}

impl fmt::Display for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Gaussian {
                amplitude,
                width,
                xi0,
                eta0,
            } => {
                if *xi0 == 0.0 && *eta0 == 0.0 {
                    write!(f, "gaussian:{amplitude},{width}")
                } else {
                    write!(f, "gaussian:{amplitude},{width},{xi0},{eta0}")
                }
            }
            Self::PlaneWave { j, m, amplitude } => write!(f, "plane:{j},{m},{amplitude}"),
            Self::Constant { value } => {
                if value.im == 0.0 {
                    write!(f, "constant:{}", value.re)
                } else {
                    write!(f, "constant:{},{}", value.re, value.im)
                }
            }
            Self::Sum(terms) => {
                for (i, t) in terms.iter().enumerate() {
                    if i > 0 {
                        f.write_str("+")?;
                    }
                    write!(f, "{t}")?;
                }
                Ok(())
            }
        }
    }
}
