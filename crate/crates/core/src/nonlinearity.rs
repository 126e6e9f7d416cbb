//! The odd power nonlinearity `|u|^(2k) u` and its exact pointwise flow.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{Field, Spectrum};

fn check_k(k: u32) -> Result<()> {
    if k < 1 {
        Err(Error::InvalidParameter("k must be at least 1".into()))
    } else {
        Ok(())
    }
}

#[inline]
fn power(z: Complex64, k: u32) -> Complex64 {
    z * z.norm_sqr().powi(k as i32)
}

fn pointwise(values: &[Complex64], k: u32) -> Vec<Complex64> {
    values.iter().map(|&z| power(z, k)).collect()
}

/// Spectrum of `|u|^(2k) u` given the spectrum of `u`.
///
/// With `dealias` the coefficients are zero padded to `(k + 1)` times the
/// resolution per axis before the pointwise power and truncated afterwards.
/// The product has degree `2k + 1` in `(u, conj u)`, so the padded grid holds
/// every product mode without wrap-around and the result is the exact
/// truncated convolution.
pub fn power_nonlinearity_spectrum(s: &Spectrum, k: u32, dealias: bool) -> Result<Spectrum> {
    check_k(k)?;
    if !s.is_finite() {
        return Err(Error::NonFinite("nonlinearity input".into()));
    }
    let grid = *s.grid();
    if !dealias {
        let f = s.to_field()?;
        let out = Field::from_raw(grid, pointwise(f.values(), k));
        return out.to_spectrum();
    }
    let fine = grid.refined(k as usize + 1)?;
    let f = s.padded(&fine)?.to_field()?;
    let product = Field::from_raw(fine, pointwise(f.values(), k));
    let out = product.to_spectrum()?.truncated(&grid)?;
    if out.is_finite() {
        Ok(out)
    } else {
        Err(Error::NonFinite("nonlinearity output".into()))
    }
}

/// Pointwise `z -> |z|^(2k) z`, optionally dealiased (see
/// [`power_nonlinearity_spectrum`]).
pub fn power_nonlinearity(f: &Field, k: u32, dealias: bool) -> Result<Field> {
    check_k(k)?;
    if !f.is_finite() {
        return Err(Error::NonFinite("nonlinearity input".into()));
    }
    if !dealias {
        let out = Field::from_raw(*f.grid(), pointwise(f.values(), k));
        if !out.is_finite() {
            return Err(Error::NonFinite("nonlinearity output".into()));
        }
        return Ok(out);
    }
    power_nonlinearity_spectrum(&f.to_spectrum()?, k, true)?.to_field()
}

/// Exact flow of `i u_t = mu |u|^(2k) u`: `z -> z exp(-i mu |z|^(2k) t)`.
pub fn nonlinear_flow(f: &Field, mu: f64, k: u32, t: f64) -> Result<Field> {
    check_k(k)?;
    if !t.is_finite() {
        return Err(Error::NonFinite(format!("nonlinear flow time {t}")));
    }
    let values = f
        .values()
        .iter()
        .map(|&z| z * Complex64::cis(-mu * z.norm_sqr().powi(k as i32) * t))
        .collect();
    Field::new(*f.grid(), values).map_err(|_| Error::NonFinite("nonlinear flow output".into()))
}
