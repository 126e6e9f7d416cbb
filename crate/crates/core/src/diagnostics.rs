//! Conserved quantities and the estimate checker.
//!
//! Every check returns an [`EstimateReport`] with `lhs`, `rhs` and
//! `margin = rhs - lhs`; a negative margin is a measurement, not an error.
//! The Wiener and L^inf chains hold with constant 1 in the discrete
//! convention. The energy chains involve an unspecified constant that is
//! supplied by the caller (typically from
//! [`calibrate_constant`](crate::picard::calibrate_constant)).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinearity::{power_nonlinearity, power_nonlinearity_spectrum};
use crate::norms::{energy_norm, lq_norm, wiener_norm, y_components, y_norm};
use crate::picard::{duhamel_integral, percentile};
use crate::propagator::{apply_linear_flow, SimulationParams};
use crate::spectral::{Field, Spectrum};

/// `M(u) = int |u|^2`.
pub fn mass(f: &Field) -> Result<f64> {
    if !f.is_finite() {
        return Err(Error::NonFinite("field".into()));
    }
    let w = f.grid().dx() * f.grid().dy();
    Ok(f.values().iter().map(|z| z.norm_sqr()).sum::<f64>() * w)
}

/// Kinetic part `1/2 int |d_x u|^2 + conj(u) |D_y| u`, computed spectrally.
pub fn kinetic_energy(s: &Spectrum) -> Result<f64> {
    if !s.is_finite() {
        return Err(Error::NonFinite("spectrum".into()));
    }
    let g = s.grid();
    let sum: f64 = s
        .coeffs()
        .iter()
        .zip(g.frequencies())
        .map(|(c, (xi, eta))| (xi * xi + eta.abs()) * c.norm_sqr())
        .sum();
    Ok(0.5 * g.area() * sum)
}

/// Conserved energy `1/2 int (|d_x u|^2 + conj(u) |D_y| u) + mu / (p + 1) int |u|^(p+1)`.
///
/// The potential term carries `+mu`: with `i u_t + u_xx - |D_y| u = mu |u|^(p-1) u`
/// this is the sign for which the functional is invariant under the flow.
pub fn energy(f: &Field, params: &SimulationParams) -> Result<f64> {
    let kinetic = kinetic_energy(&f.to_spectrum()?)?;
    let p = params.p() as f64;
    let potential = lq_norm(f, p + 1.0)?.powf(p + 1.0);
    Ok(kinetic + params.mu() * potential / (p + 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimateId {
    #[serde(rename = "linear")]
    Linear,
    #[serde(rename = "duhamel_E")]
    DuhamelE,
    #[serde(rename = "duhamel_Linf")]
    DuhamelLinf,
    #[serde(rename = "duhamel_L1")]
    DuhamelL1,
    #[serde(rename = "lipschitz_E")]
    LipschitzE,
    #[serde(rename = "lipschitz_wiener")]
    LipschitzWiener,
    #[serde(rename = "lipschitz_Linf")]
    LipschitzLinf,
}

impl EstimateId {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Linear => "linear",
            Self::DuhamelE => "duhamel_E",
            Self::DuhamelLinf => "duhamel_Linf",
            Self::DuhamelL1 => "duhamel_L1",
            Self::LipschitzE => "lipschitz_E",
            Self::LipschitzWiener => "lipschitz_wiener",
            Self::LipschitzLinf => "lipschitz_Linf",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimate_id: EstimateId,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub witness: String,
    /// Smallest constant for which the bound holds on this witness.
    pub empirical_constant: f64,
}

impl EstimateReport {
    fn new(id: EstimateId, lhs: f64, rhs: f64, unit_rhs: f64, witness: &str) -> Self {
        let empirical_constant = if unit_rhs > 0.0 { lhs / unit_rhs } else { 0.0 };
        Self {
            estimate_id: id,
            lhs,
            rhs,
            margin: rhs - lhs,
            witness: witness.to_string(),
            empirical_constant,
        }
    }

    pub fn holds(&self, slack: f64) -> bool {
        self.margin >= -slack
    }
}

/// `|S(t) u0|_Y <= |u0|_E + 2 |u0^|_1` over the given times.
pub fn check_linear_estimate(
    u0: &Spectrum,
    times: &[f64],
    witness: &str,
) -> Result<EstimateReport> {
    let free = times
        .iter()
        .map(|&t| apply_linear_flow(u0, t))
        .collect::<Result<Vec<_>>>()?;
    let lhs = y_norm(&free)?;
    let rhs = energy_norm(u0)? + 2.0 * wiener_norm(u0)?;
    // The bound has no free constant; report lhs / rhs.
    Ok(EstimateReport::new(
        EstimateId::Linear,
        lhs,
        rhs,
        rhs,
        witness,
    ))
}

fn require_ball(traj: &[Spectrum], r: f64) -> Result<()> {
    let y = y_norm(traj)?;
    if y > r * (1.0 + 1e-12) {
        Err(Error::BallViolation {
            y_norm: y,
            radius: r,
        })
    } else {
        Ok(())
    }
}

/// The three Duhamel-term bounds `<= C T r^p` (E chain uses `constant_e`, the
/// L^inf and Wiener chains use 1).
pub fn check_duhamel_estimates(
    nodes: &[f64],
    traj: &[Spectrum],
    params: &SimulationParams,
    r: f64,
    constant_e: f64,
    witness: &str,
) -> Result<Vec<EstimateReport>> {
    require_ball(traj, r)?;
    let horizon = nodes.last().copied().unwrap_or(0.0);
    let q = duhamel_integral(nodes, traj, params.k(), true)?;
    let yq = y_components(&q)?;
    let unit = horizon * r.powi(params.p() as i32);
    Ok(vec![
        EstimateReport::new(
            EstimateId::DuhamelE,
            yq.energy,
            constant_e * unit,
            unit,
            witness,
        ),
        EstimateReport::new(EstimateId::DuhamelLinf, yq.linf, unit, unit, witness),
        EstimateReport::new(EstimateId::DuhamelL1, yq.wiener, unit, unit, witness),
    ])
}

/// Lipschitz bounds for `N(u) - N(v)`:
/// E chain `<= C (2k+1)^2 r^(2k) (sup|u-v|_E + sup|u-v|_inf)`,
/// Wiener chain `<= (2k+1) r^(2k) sup|u^-v^|_1`,
/// pointwise chain `<= (2k+1) r^(2k) sup|u-v|_inf`.
pub fn check_lipschitz_estimates(
    u: &[Spectrum],
    v: &[Spectrum],
    params: &SimulationParams,
    r: f64,
    constant_e: f64,
    witness: &str,
) -> Result<Vec<EstimateReport>> {
    if u.len() != v.len() {
        return Err(Error::InvalidParameter(
            "trajectories differ in length".into(),
        ));
    }
    require_ball(u, r)?;
    require_ball(v, r)?;
    let k = params.k();
    let mut lhs_e: f64 = 0.0;
    let mut lhs_w: f64 = 0.0;
    let mut lhs_inf: f64 = 0.0;
    let mut diff = Vec::with_capacity(u.len());
    for (a, b) in u.iter().zip(v) {
        let na = power_nonlinearity_spectrum(a, k, true)?;
        let nb = power_nonlinearity_spectrum(b, k, true)?;
        let dn = na.sub(&nb)?;
        lhs_e = lhs_e.max(energy_norm(&dn)?);
        lhs_w = lhs_w.max(wiener_norm(&dn)?);

        let fa = power_nonlinearity(&a.to_field()?, k, false)?;
        let fb = power_nonlinearity(&b.to_field()?, k, false)?;
        let pointwise = fa
            .values()
            .iter()
            .zip(fb.values())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        lhs_inf = lhs_inf.max(pointwise);
        diff.push(a.sub(b)?);
    }
    let d = y_components(&diff)?;
    let kk = (2 * k + 1) as f64;
    let r2k = r.powi(2 * k as i32);
    let unit_e = kk * kk * r2k * (d.energy + d.linf);
    let unit_w = kk * r2k * d.wiener;
    let unit_inf = kk * r2k * d.linf;
    Ok(vec![
        EstimateReport::new(
            EstimateId::LipschitzE,
            lhs_e,
            constant_e * unit_e,
            unit_e,
            witness,
        ),
        EstimateReport::new(EstimateId::LipschitzWiener, lhs_w, unit_w, unit_w, witness),
        EstimateReport::new(
            EstimateId::LipschitzLinf,
            lhs_inf,
            unit_inf,
            unit_inf,
            witness,
        ),
    ])
}

/// Aggregate of one estimate over an ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateSummary {
    pub estimate_id: EstimateId,
    pub count: usize,
    pub min_margin: f64,
    pub max_constant: f64,
    pub p95_constant: f64,
}

pub fn summarize(reports: &[EstimateReport]) -> Vec<EstimateSummary> {
    let mut ids: Vec<EstimateId> = Vec::new();
    for r in reports {
        if !ids.contains(&r.estimate_id) {
            ids.push(r.estimate_id);
        }
    }
    ids.into_iter()
        .map(|id| {
            let rows: Vec<&EstimateReport> =
                reports.iter().filter(|r| r.estimate_id == id).collect();
            let constants: Vec<f64> = rows.iter().map(|r| r.empirical_constant).collect();
            EstimateSummary {
                estimate_id: id,
                count: rows.len(),
                min_margin: rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min),
                max_constant: constants.iter().copied().fold(0.0, f64::max),
                p95_constant: percentile(&constants, 0.95),
            }
        })
        .collect()
}
