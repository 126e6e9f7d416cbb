//! Seeded random ensembles.
//!
//! The generator is counter based so any implementation can reproduce an
//! ensemble from `(seed, stream)` alone. Draw number `n` (starting at 0) is
//!
//! ```text
//! key  = mix64(seed ^ mix64(stream + GAMMA))
//! x_n  = mix64(key + (n + 1) * GAMMA)            (wrapping u64 arithmetic)
//! u_n  = (x_n >> 11) * 2^-53                     uniform in [0, 1)
//! ```
//!
//! where `GAMMA = 0x9E3779B97F4A7C15` and `mix64` is the SplitMix64 finalizer
//! (`z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27; z *= 0x94D049BB133111EB; z ^= z >> 31`).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::norms::y_norm;
use crate::propagator::apply_linear_flow;
use crate::spectral::{GridSpec, Spectrum};

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self {
            key: mix64(seed ^ mix64(stream.wrapping_add(GAMMA))),
            counter: 0,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GAMMA)))
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }
}

/// Random spectrum supported on modes `|j|, |m| <= band`.
///
/// Modes are visited with `m` outer and `j` inner, both ascending; each
/// coefficient draws `re` then `im` uniform in `[-1, 1)` and is weighted by
/// `1 / (1 + j^2 + m^2)`.
pub fn random_spectrum(grid: &GridSpec, band: i64, rng: &mut CounterRng) -> Result<Spectrum> {
    let max_band = (grid.nx().min(grid.ny()) / 2) as i64 - 1;
    if band < 0 || band > max_band {
        return Err(Error::InvalidParameter(format!(
            "band {band} must lie in 0..={max_band}"
        )));
    }
    let mut coeffs = vec![Complex64::default(); grid.len()];
    for m in -band..=band {
        for j in -band..=band {
            let w = 1.0 / (1.0 + (j * j + m * m) as f64);
            let re = rng.range(-1.0, 1.0);
            let im = rng.range(-1.0, 1.0);
            let idx = grid.mode_index(j, m).expect("band fits grid");
            coeffs[idx] = Complex64::new(re, im) * w;
        }
    }
    Spectrum::new(*grid, coeffs)
}

/// Random node trajectory `u(t_n) = S(t_n) (a + (t_n / T) b)` rescaled so that
/// its Y-norm equals `rho * radius` with `rho` uniform in `[0.05, 1)`.
pub fn random_trajectory(
    grid: &GridSpec,
    nodes: &[f64],
    band: i64,
    radius: f64,
    rng: &mut CounterRng,
) -> Result<Vec<Spectrum>> {
    let a = random_spectrum(grid, band, rng)?;
    let b = random_spectrum(grid, band, rng)?;
    let horizon = nodes.last().copied().unwrap_or(0.0);
    let mut traj = Vec::with_capacity(nodes.len());
    for &t in nodes {
        let frac = if horizon > 0.0 { t / horizon } else { 0.0 };
        let base = a.axpy(Complex64::new(frac, 0.0), &b)?;
        traj.push(apply_linear_flow(&base, t)?);
    }
    let rho = rng.range(0.05, 1.0);
    rescale_to(&traj, rho * radius)
}

/// Scales a trajectory to the given Y-norm (a zero trajectory is returned unchanged).
pub fn rescale_to(traj: &[Spectrum], target: f64) -> Result<Vec<Spectrum>> {
    let current = y_norm(traj)?;
    if current == 0.0 {
        return Ok(traj.to_vec());
    }
    let alpha = Complex64::new(target / current, 0.0);
    Ok(traj.iter().map(|s| s.scaled(alpha)).collect())
}
