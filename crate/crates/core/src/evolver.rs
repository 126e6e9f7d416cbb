//! Strang split-step integrator built from the two exact sub-flows.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinearity::nonlinear_flow;
use crate::picard::Direction;
use crate::propagator::{apply_linear_flow, max_symbol, SimulationParams};
use crate::spectral::{Field, Spectrum};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Splitting {
    /// `S(dt/2) N(dt) S(dt/2)`.
    #[default]
    Lnl,
    /// `N(dt/2) S(dt) N(dt/2)`.
    Nln,
}

fn stage<T>(r: Result<T>, tag: &str) -> Result<T> {
    r.map_err(|e| match e {
        Error::NonFinite(what) => Error::NonFinite(format!("{what} (stage {tag})")),
        other => other,
    })
}

fn step_spectral(
    s: &Spectrum,
    params: &SimulationParams,
    dt: f64,
    splitting: Splitting,
) -> Result<Spectrum> {
    let (mu, k) = (params.mu(), params.k());
    match splitting {
        Splitting::Lnl => {
            let half = stage(apply_linear_flow(s, 0.5 * dt), "linear-1")?;
            let f = stage(half.to_field(), "linear-1")?;
            let f = stage(nonlinear_flow(&f, mu, k, dt), "nonlinear")?;
            let s = stage(f.to_spectrum(), "nonlinear")?;
            stage(apply_linear_flow(&s, 0.5 * dt), "linear-2")
        }
        Splitting::Nln => {
            let f = stage(s.to_field(), "nonlinear-1")?;
            let f = stage(nonlinear_flow(&f, mu, k, 0.5 * dt), "nonlinear-1")?;
            let s = stage(f.to_spectrum(), "nonlinear-1")?;
            let s = stage(apply_linear_flow(&s, dt), "linear")?;
            let f = stage(s.to_field(), "linear")?;
            let f = stage(nonlinear_flow(&f, mu, k, 0.5 * dt), "nonlinear-2")?;
            stage(f.to_spectrum(), "nonlinear-2")
        }
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if dt.is_finite() && dt > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "dt must be positive, got {dt}"
        )))
    }
}

/// One Strang step `S(dt/2) N(dt) S(dt/2)`.
pub fn step_strang(f: &Field, params: &SimulationParams, dt: f64) -> Result<Field> {
    step_with(f, params, dt, Splitting::Lnl)
}

pub fn step_with(
    f: &Field,
    params: &SimulationParams,
    dt: f64,
    splitting: Splitting,
) -> Result<Field> {
    check_dt(dt)?;
    let s = stage(f.to_spectrum(), "input")?;
    step_spectral(&s, params, dt, splitting)?.to_field()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    pub dt: f64,
    /// Emit a snapshot every `cadence` steps (the final state is always emitted).
    pub cadence: usize,
    pub splitting: Splitting,
    pub direction: Direction,
}

impl EvolveOptions {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            cadence: 1,
            splitting: Splitting::Lnl,
            direction: Direction::Forward,
        }
    }
}

/// Repeated split steps over `[0, horizon]` (or `[-horizon, 0]` backward).
///
/// The horizon must be an integer multiple of `dt` to within `1e-12`; the
/// steps actually taken are `horizon / n` so the final time is exact.
pub fn evolve(
    u0: &Spectrum,
    params: &SimulationParams,
    opts: &EvolveOptions,
) -> Result<Vec<(f64, Spectrum)>> {
    check_dt(opts.dt)?;
    if opts.cadence == 0 {
        return Err(Error::InvalidParameter("cadence must be at least 1".into()));
    }
    let horizon = params.horizon();
    let steps_f = (horizon / opts.dt).round();
    if (steps_f * opts.dt - horizon).abs() > 1e-12 * horizon.max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "dt = {} does not divide horizon {horizon}",
            opts.dt
        )));
    }
    let steps = steps_f as usize;
    if opts.dt * max_symbol(u0.grid()) > 2.0 * PI {
        log::warn!(
            "dt * max symbol = {:.3} exceeds 2 pi; the linear phase wraps within one step",
            opts.dt * max_symbol(u0.grid())
        );
    }

    let sign = match opts.direction {
        Direction::Forward => 1.0,
        Direction::Backward => -1.0,
    };
    let orient = |s: &Spectrum| match opts.direction {
        Direction::Forward => s.clone(),
        Direction::Backward => s.conj(),
    };

    let mut state = orient(u0);
    let mut out = vec![(0.0, u0.clone())];
    if steps == 0 {
        return Ok(out);
    }
    let dt = horizon / steps as f64;
    for n in 1..=steps {
        state = step_spectral(&state, params, dt, opts.splitting)?;
        if n % opts.cadence == 0 || n == steps {
            let t = if n == steps { horizon } else { n as f64 * dt };
            out.push((sign * t, orient(&state)));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::{sample_function, InitialCondition};
    use crate::norms::l2_norm;
    use crate::spectral::make_grid;
    use num_complex::Complex64;

    #[test]
    fn constant_data_one_step() {
        let g = make_grid(8, 8, 2.0, 2.0).unwrap();
        let amp = Complex64::new(0.7, -0.2);
        let f = Field::from_fn(g, |_, _| amp).unwrap();
        let params = SimulationParams::new(-1, 2, 1.0).unwrap();
        let out = step_strang(&f, &params, 0.37).unwrap();
        let want = amp * Complex64::cis(amp.norm_sqr().powi(2) * 0.37);
        assert!(out.values().iter().all(|z| (z - want).norm() < 1e-14));
        let zero = step_strang(&Field::zeros(g), &params, 0.1).unwrap();
        assert!(zero.values().iter().all(|z| z.norm() == 0.0));
        assert!(step_strang(&f, &params, 0.0).is_err());
    }

    #[test]
    fn step_preserves_l2() {
        let g = make_grid(32, 32, 6.0, 6.0).unwrap();
        let f = sample_function(&g, &"gaussian:1.5,1,1,-2".parse().unwrap()).unwrap();
        let params = SimulationParams::new(1, 1, 1.0).unwrap();
        let out = step_strang(&f, &params, 0.05).unwrap();
        let (a, b) = (l2_norm(&f).unwrap(), l2_norm(&out).unwrap());
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn horizon_handling() {
        let g = make_grid(8, 8, 2.0, 2.0).unwrap();
        let u0 = Spectrum::single_mode(g, 1, 1, Complex64::new(0.2, 0.0)).unwrap();
        let p0 = SimulationParams::new(1, 1, 0.0).unwrap();
        let traj = evolve(&u0, &p0, &EvolveOptions::new(0.1)).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj[0], (0.0, u0.clone()));

        let p = SimulationParams::new(1, 1, 1.0).unwrap();
        assert!(evolve(&u0, &p, &EvolveOptions::new(0.3)).is_err());
        let traj = evolve(
            &u0,
            &p,
            &EvolveOptions {
                cadence: 3,
                ..EvolveOptions::new(0.1)
            },
        )
        .unwrap();
        let times: Vec<f64> = traj.iter().map(|(t, _)| *t).collect();
        assert_eq!(times.len(), 5);
        assert_eq!(*times.last().unwrap(), 1.0);
    }

    #[test]
    fn nln_agrees_with_lnl_to_second_order() {
        let g = make_grid(32, 32, 6.0, 6.0).unwrap();
        let u0 = sample_function(&g, &InitialCondition::gaussian(1.0, 1.0))
            .unwrap()
            .to_spectrum()
            .unwrap();
        let p = SimulationParams::new(1, 1, 0.2).unwrap();
        let gap = |dt: f64| {
            let a = evolve(&u0, &p, &EvolveOptions::new(dt)).unwrap();
            let b = evolve(
                &u0,
                &p,
                &EvolveOptions {
                    splitting: Splitting::Nln,
                    ..EvolveOptions::new(dt)
                },
            )
            .unwrap();
            let d = a.last().unwrap().1.sub(&b.last().unwrap().1).unwrap();
            l2_norm(&d.to_field().unwrap()).unwrap()
        };
        let (coarse, fine) = (gap(0.02), gap(0.01));
        assert!(
            coarse / fine > 3.0 && coarse / fine < 5.0,
            "{coarse} {fine}"
        );
    }
}
