//! Function-space norms on the periodic box.
//!
//! Physical-space norms use the rectangle rule with weight `dx dy`. Spectral
//! norms carry the box area `A` so that `sobolev_norm(s, 0, 0)` coincides with
//! the L^2 norm of the synthesized field. The Wiener norm is the plain l^1 sum
//! of Fourier-series coefficients, for which `|u|_inf <= |c|_1` and
//! `|coef(fg)|_1 <= |coef f|_1 |coef g|_1` hold with constant 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Field, GridSpec, Spectrum};

fn require_finite_field(f: &Field) -> Result<()> {
    if f.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite("field".into()))
    }
}

fn require_finite_spectrum(s: &Spectrum) -> Result<()> {
    if s.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite("spectrum".into()))
    }
}

fn weight(f: &Field) -> f64 {
    f.grid().dx() * f.grid().dy()
}

pub fn l2_norm(f: &Field) -> Result<f64> {
    require_finite_field(f)?;
    let sum: f64 = f.values().iter().map(|z| z.norm_sqr()).sum();
    Ok((sum * weight(f)).sqrt())
}

/// L^q norm for `q >= 1`; `q = f64::INFINITY` gives the sup norm.
pub fn lq_norm(f: &Field, q: f64) -> Result<f64> {
    if q.is_nan() || q < 1.0 {
        return Err(Error::InvalidParameter(format!("q must be >= 1, got {q}")));
    }
    if q.is_infinite() {
        return linf_norm(f);
    }
    if q == 2.0 {
        return l2_norm(f);
    }
    require_finite_field(f)?;
    let sum: f64 = f.values().iter().map(|z| z.norm().powf(q)).sum();
    Ok((sum * weight(f)).powf(1.0 / q))
}

pub fn linf_norm(f: &Field) -> Result<f64> {
    require_finite_field(f)?;
    Ok(f.values().iter().map(|z| z.norm()).fold(0.0, f64::max))
}

fn japanese(v: f64) -> f64 {
    (1.0 + v * v).sqrt()
}

/// Anisotropic Sobolev norm with weights `<xi>^s1 <eta>^s2`.
pub fn sobolev_norm(s: &Spectrum, s1: f64, s2: f64) -> Result<f64> {
    require_finite_spectrum(s)?;
    let g = s.grid();
    let sum: f64 = s
        .coeffs()
        .iter()
        .zip(g.frequencies())
        .map(|(c, (xi, eta))| {
            japanese(xi).powf(2.0 * s1) * japanese(eta).powf(2.0 * s2) * c.norm_sqr()
        })
        .sum();
    Ok((g.area() * sum).sqrt())
}

/// `(|d_x u|^2 + ||D_y|^(1/2) u|^2 + |u|^2)^(1/2)`, all in L^2.
pub fn energy_norm(s: &Spectrum) -> Result<f64> {
    require_finite_spectrum(s)?;
    let g = s.grid();
    let sum: f64 = s
        .coeffs()
        .iter()
        .zip(g.frequencies())
        .map(|(c, (xi, eta))| (xi * xi + eta.abs() + 1.0) * c.norm_sqr())
        .sum();
    Ok((g.area() * sum).sqrt())
}

pub fn wiener_norm(s: &Spectrum) -> Result<f64> {
    require_finite_spectrum(s)?;
    Ok(s.coeffs().iter().map(|c| c.norm()).sum())
}

/// The three suprema making up the Y-norm of a trajectory.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct YComponents {
    pub energy: f64,
    pub linf: f64,
    pub wiener: f64,
}

impl YComponents {
    pub fn total(&self) -> f64 {
        self.energy + self.linf + self.wiener
    }
}

/// Separate time-suprema of the energy, L^inf and Wiener norms.
pub fn y_components(trajectory: &[Spectrum]) -> Result<YComponents> {
    let first = trajectory.first().ok_or(Error::EmptyTrajectory)?;
    let mut out = YComponents::default();
    for s in trajectory {
        first.grid().check_same(s.grid())?;
        out.energy = out.energy.max(energy_norm(s)?);
        out.linf = out.linf.max(linf_norm(&s.to_field()?)?);
        out.wiener = out.wiener.max(wiener_norm(s)?);
    }
    Ok(out)
}

/// `sup_t |u|_E + sup_t |u|_inf + sup_t |u^|_1` over the stored nodes.
pub fn y_norm(trajectory: &[Spectrum]) -> Result<f64> {
    Ok(y_components(trajectory)?.total())
}

/// Node-wise Y-distance between two trajectories.
pub fn y_distance(a: &[Spectrum], b: &[Spectrum]) -> Result<f64> {
    Ok(y_difference(a, b)?.total())
}

pub fn y_difference(a: &[Spectrum], b: &[Spectrum]) -> Result<YComponents> {
    if a.len() != b.len() {
        return Err(Error::GridMismatch(format!(
            "trajectories have {} and {} nodes",
            a.len(),
            b.len()
        )));
    }
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| x.sub(y))
        .collect::<Result<Vec<_>>>()?;
    y_components(&diff)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevEntry {
    pub s1: f64,
    pub s2: f64,
    pub value: f64,
}

/// Measured norms of one snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub time: f64,
    pub l2: f64,
    pub linf: f64,
    pub energy_norm: f64,
    pub wiener: f64,
    pub sobolev: Vec<SobolevEntry>,
}

impl NormReport {
    pub fn measure(time: f64, s: &Spectrum, sobolev_pairs: &[(f64, f64)]) -> Result<Self> {
        let f = s.to_field()?;
        let sobolev = sobolev_pairs
            .iter()
            .map(|&(s1, s2)| {
                Ok(SobolevEntry {
                    s1,
                    s2,
                    value: sobolev_norm(s, s1, s2)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            time,
            l2: l2_norm(&f)?,
            linf: linf_norm(&f)?,
            energy_norm: energy_norm(s)?,
            wiener: wiener_norm(s)?,
            sobolev,
        })
    }

    pub fn sobolev(&self, s1: f64, s2: f64) -> Option<f64> {
        self.sobolev
            .iter()
            .find(|e| e.s1 == s1 && e.s2 == s2)
            .map(|e| e.value)
    }
}

/// One point of the anisotropic scaling probe.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingProbeRow {
    pub lambda: f64,
    pub q: f64,
    pub lq: f64,
    pub energy_norm: f64,
    pub ratio: f64,
}

/// `|u_l|_q / |u_l|_E` along `u_l(x, y) = l u(l x, l^2 y)`.
///
/// Each `u_l` is sampled on the box `[-lx/l, lx/l) x [-ly/l^2, ly/l^2)` with
/// the same number of points, so its samples are exactly `l` times those of
/// `u` and the discrete norms follow the continuum scaling without any
/// resolution loss.
pub fn anisotropic_scaling_probe(
    base: &Field,
    lambdas: &[f64],
    qs: &[f64],
) -> Result<Vec<ScalingProbeRow>> {
    require_finite_field(base)?;
    let g = base.grid();
    let mut rows = Vec::with_capacity(lambdas.len() * qs.len());
    for &lambda in lambdas {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "scaling {lambda} must be positive"
            )));
        }
        let grid = GridSpec::new(g.nx(), g.ny(), g.lx() / lambda, g.ly() / (lambda * lambda))?;
        let scaled = Field::new(grid, base.values().iter().map(|z| z * lambda).collect())?;
        let e = energy_norm(&scaled.to_spectrum()?)?;
        for &q in qs {
            let lq = lq_norm(&scaled, q)?;
            rows.push(ScalingProbeRow {
                lambda,
                q,
                lq,
                energy_norm: e,
                ratio: lq / e,
            });
        }
    }
    Ok(rows)
}
