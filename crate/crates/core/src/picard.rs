//! Duhamel map on a uniform time grid and its Picard iteration.
//!
//! For a trajectory `u` sampled at nodes `t_n = n h`, the map is
//!
//! ```text
//! Phi(u)(t_n) = S(t_n) u0 - i mu Q_n,   Q_n ~ int_0^{t_n} S(t_n - tau) N(u(tau)) dtau
//! ```
//!
//! with `N(u) = |u|^(2k) u` (dealiased by default) and `Q_n` the composite
//! trapezoid rule over the stored nodes. Since `S(t_n - tau_i) = S(t_n) S(-tau_i)`
//! exactly, the integrand is pulled back once per node and `Q_n` is a running
//! trapezoid sum pushed forward by `S(t_n)`, which makes one application of
//! `Phi` cost `O(M)` nonlinearity evaluations and multiplier sweeps.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{random_spectrum, random_trajectory, CounterRng};
use crate::error::{Error, Result};
use crate::nonlinearity::power_nonlinearity_spectrum;
use crate::norms::{energy_norm, linf_norm, wiener_norm, y_distance, y_norm};
use crate::propagator::{apply_linear_flow, SimulationParams};
use crate::spectral::{GridSpec, Spectrum};

/// `M + 1` uniform nodes on `[0, horizon]`.
pub fn uniform_nodes(horizon: f64, m: usize) -> Vec<f64> {
    (0..=m).map(|n| horizon * n as f64 / m as f64).collect()
}

fn node_step(nodes: &[f64]) -> Result<f64> {
    if nodes.len() < 2 {
        return Err(Error::InvalidParameter(
            "need at least two time nodes".into(),
        ));
    }
    let h = nodes[1] - nodes[0];
    for (n, t) in nodes.iter().enumerate() {
        let want = nodes[0] + n as f64 * h;
        if (t - want).abs() > 1e-12 * want.abs().max(1.0) {
            return Err(Error::InvalidParameter("time nodes must be uniform".into()));
        }
    }
    if nodes[0] != 0.0 || !(h >= 0.0) {
        return Err(Error::InvalidParameter(
            "time nodes must start at 0 and increase".into(),
        ));
    }
    Ok(h)
}

fn check_trajectory(grid: &GridSpec, traj: &[Spectrum]) -> Result<()> {
    for s in traj {
        grid.check_same(s.grid())?;
        if !s.is_finite() {
            return Err(Error::NonFinite("trajectory".into()));
        }
    }
    Ok(())
}

/// Trapezoid approximations `Q_n` of `int_0^{t_n} S(t_n - tau) N(u(tau)) dtau`.
pub fn duhamel_integral(
    nodes: &[f64],
    traj: &[Spectrum],
    k: u32,
    dealias: bool,
) -> Result<Vec<Spectrum>> {
    let h = node_step(nodes)?;
    if traj.len() != nodes.len() {
        return Err(Error::InvalidParameter(format!(
            "trajectory has {} entries for {} nodes",
            traj.len(),
            nodes.len()
        )));
    }
    let grid = *traj[0].grid();
    check_trajectory(&grid, traj)?;

    let pulled: Vec<Spectrum> = nodes
        .par_iter()
        .zip(traj.par_iter())
        .map(|(&tau, u)| {
            let n = power_nonlinearity_spectrum(u, k, dealias)?;
            apply_linear_flow(&n, -tau)
        })
        .collect::<Result<_>>()?;

    // running[n] = h (G_0 / 2 + G_1 + ... + G_{n-1} + G_n / 2)
    let len = grid.len();
    let mut acc = vec![Complex64::default(); len];
    let mut running = Vec::with_capacity(nodes.len());
    running.push(vec![Complex64::default(); len]);
    for n in 1..nodes.len() {
        let (a, b) = (&pulled[n - 1], &pulled[n]);
        for ((z, x), y) in acc.iter_mut().zip(a.coeffs()).zip(b.coeffs()) {
            *z += 0.5 * h * (x + y);
        }
        running.push(acc.clone());
    }

    running
        .into_par_iter()
        .zip(nodes.par_iter())
        .map(|(coeffs, &t)| {
            let s = Spectrum::new(grid, coeffs)?;
            apply_linear_flow(&s, t)
        })
        .collect()
}

/// `Phi(u)` at every node.
pub fn duhamel_apply(
    nodes: &[f64],
    traj: &[Spectrum],
    u0: &Spectrum,
    params: &SimulationParams,
    dealias: bool,
) -> Result<Vec<Spectrum>> {
    if let Some(first) = traj.first() {
        u0.grid().check_same(first.grid())?;
    }
    let q = duhamel_integral(nodes, traj, params.k(), dealias)?;
    let coupling = Complex64::new(0.0, -params.mu());
    nodes
        .iter()
        .zip(q)
        .map(|(&t, qn)| apply_linear_flow(u0, t)?.axpy(coupling, &qn))
        .collect()
}

/// Radius, data size and existence time from the smallness conditions
/// `3 delta <= r / 2`, `3 C T r^p <= r / 2` and `3 C T (2k+1)^2 r^(2k) = 1/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalTime {
    pub radius: f64,
    pub delta: f64,
    pub t_max: f64,
    /// Set when `delta` vanished and the radius was floored.
    pub floored: bool,
}

pub const DEFAULT_RADIUS_FLOOR: f64 = 1e-12;

pub fn select_local_time(u0_energy: f64, u0_wiener: f64, c: f64, k: u32) -> Result<LocalTime> {
    select_local_time_with_floor(u0_energy, u0_wiener, c, k, DEFAULT_RADIUS_FLOOR)
}

pub fn select_local_time_with_floor(
    u0_energy: f64,
    u0_wiener: f64,
    c: f64,
    k: u32,
    floor: f64,
) -> Result<LocalTime> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "constant C must be positive, got {c}"
        )));
    }
    if k < 1 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let valid = |v: f64| v.is_finite() && v >= 0.0;
    if !valid(u0_energy) || !valid(u0_wiener) {
        return Err(Error::InvalidParameter(format!(
            "data norms must be finite and nonnegative, got ({u0_energy}, {u0_wiener})"
        )));
    }
    if !(floor > 0.0) {
        return Err(Error::InvalidParameter(
            "radius floor must be positive".into(),
        ));
    }
    let delta = u0_energy.max(u0_wiener);
    let mut radius = 6.0 * delta;
    let floored = radius < floor;
    if floored {
        log::warn!("data size {delta:e} below floor; radius set to {floor:e}");
        radius = floor;
    }
    let p = (2 * k + 1) as i32;
    let kk = (2 * k + 1) as f64;
    let map_into_ball = radius / (6.0 * c * radius.powi(p));
    let contraction = 1.0 / (6.0 * c * kk * kk * radius.powi(2 * k as i32));
    Ok(LocalTime {
        radius,
        delta,
        t_max: map_into_ball.min(contraction),
        floored,
    })
}

/// Starting trajectory for the iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialIterate {
    /// `u^(0)(t) = S(t) u0`.
    FreeEvolution,
    Zero,
}

/// Time direction; backward runs solve the conjugated problem forward.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PicardOptions {
    /// Number of intervals `M`; the grid has `M + 1` nodes.
    pub nodes: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub constant_c: f64,
    pub initial: InitialIterate,
    pub dealias: bool,
    pub direction: Direction,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            nodes: 64,
            tol: 1e-10,
            max_iter: 100,
            constant_c: 1.0,
            initial: InitialIterate::FreeEvolution,
            dealias: true,
            direction: Direction::Forward,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub distance: f64,
    /// `distance / previous distance`, absent on the first iteration.
    pub ratio: Option<f64>,
    pub y_norm: f64,
    pub in_ball: bool,
}

#[derive(Clone, Debug)]
pub struct PicardState {
    pub params: SimulationParams,
    /// Signed node times (negative for backward runs).
    pub nodes: Vec<f64>,
    pub iterate: Vec<Spectrum>,
    pub iteration_index: usize,
    pub last_distance: f64,
    pub radius_r: f64,
    pub delta: f64,
    pub constant_c: f64,
    pub history: Vec<IterationRecord>,
}

impl PicardState {
    /// Contraction ratios measured after the first iteration.
    pub fn ratios(&self) -> Vec<f64> {
        self.history.iter().filter_map(|r| r.ratio).collect()
    }

    pub fn final_spectrum(&self) -> &Spectrum {
        self.iterate.last().expect("state has nodes")
    }
}

pub fn picard_solve(
    u0: &Spectrum,
    params: &SimulationParams,
    opts: &PicardOptions,
) -> Result<PicardState> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter("tol must be positive".into()));
    }
    if opts.nodes < 2 {
        return Err(Error::InvalidParameter(
            "need at least 2 node intervals".into(),
        ));
    }
    if opts.max_iter < 1 {
        return Err(Error::InvalidParameter(
            "max_iter must be at least 1".into(),
        ));
    }
    if !u0.is_finite() {
        return Err(Error::NonFinite("initial data".into()));
    }

    let data = match opts.direction {
        Direction::Forward => u0.clone(),
        Direction::Backward => u0.conj(),
    };
    let local = select_local_time(
        energy_norm(&data)?,
        wiener_norm(&data)?,
        opts.constant_c,
        params.k(),
    )?;
    let nodes = uniform_nodes(params.horizon(), opts.nodes);

    let mut iterate: Vec<Spectrum> = match opts.initial {
        InitialIterate::FreeEvolution => nodes
            .iter()
            .map(|&t| apply_linear_flow(&data, t))
            .collect::<Result<_>>()?,
        InitialIterate::Zero => vec![Spectrum::zeros(*data.grid()); nodes.len()],
    };

    let mut history = Vec::new();
    let mut previous: Option<f64> = None;
    let mut converged = false;
    for iteration in 1..=opts.max_iter {
        let next = duhamel_apply(&nodes, &iterate, &data, params, opts.dealias)?;
        let distance = y_distance(&next, &iterate)?;
        if !distance.is_finite() {
            return Err(Error::NonFinite(format!("picard iterate {iteration}")));
        }
        let y = y_norm(&next)?;
        let ratio = previous.filter(|p| *p > 0.0).map(|p| distance / p);
        log::debug!("picard iteration {iteration}: distance {distance:e}, y-norm {y:e}");
        history.push(IterationRecord {
            iteration,
            distance,
            ratio,
            y_norm: y,
            in_ball: y <= local.radius,
        });
        iterate = next;
        previous = Some(distance);
        if distance < opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            iterations: opts.max_iter,
            last_distance: previous.unwrap_or(f64::NAN),
            ratios: history.iter().filter_map(|r| r.ratio).collect(),
        });
    }

    let (nodes, iterate) = match opts.direction {
        Direction::Forward => (nodes, iterate),
        Direction::Backward => (
            nodes.iter().map(|t| -t).collect(),
            iterate.iter().map(Spectrum::conj).collect(),
        ),
    };
    Ok(PicardState {
        params: *params,
        nodes,
        iterate,
        iteration_index: history.len(),
        last_distance: previous.unwrap_or(0.0),
        radius_r: local.radius,
        delta: local.delta,
        constant_c: opts.constant_c,
        history,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub mean_ratio: f64,
    pub resampled: usize,
    pub radius: f64,
    pub horizon: f64,
}

/// Settings for [`measure_contraction`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContractionSetup {
    pub nodes: usize,
    pub trials: usize,
    pub radius: f64,
    pub band: i64,
    pub seed: u64,
    pub dealias: bool,
}

/// Ratios `|Phi(u) - Phi(v)|_Y / |u - v|_Y` over random pairs in the ball of
/// the given radius. Pairs closer than `1e-14` are redrawn.
pub fn measure_contraction(
    u0: &Spectrum,
    params: &SimulationParams,
    setup: &ContractionSetup,
) -> Result<ContractionReport> {
    if setup.trials < 1 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let grid = *u0.grid();
    let nodes = uniform_nodes(params.horizon(), setup.nodes);
    let run = |trial: usize| -> Result<(f64, usize)> {
        let mut rng = CounterRng::new(setup.seed, trial as u64);
        let mut redraws = 0;
        loop {
            let u = random_trajectory(&grid, &nodes, setup.band, setup.radius, &mut rng)?;
            let v = random_trajectory(&grid, &nodes, setup.band, setup.radius, &mut rng)?;
            let dist = y_distance(&u, &v)?;
            if dist < 1e-14 {
                redraws += 1;
                if redraws > 100 {
                    return Err(Error::InvalidParameter(
                        "could not draw a non-degenerate pair".into(),
                    ));
                }
                continue;
            }
            let pu = duhamel_apply(&nodes, &u, u0, params, setup.dealias)?;
            let pv = duhamel_apply(&nodes, &v, u0, params, setup.dealias)?;
            return Ok((y_distance(&pu, &pv)? / dist, redraws));
        }
    };
    let results: Vec<(f64, usize)> = (0..setup.trials)
        .into_par_iter()
        .map(run)
        .collect::<Result<_>>()?;
    let ratios: Vec<f64> = results.iter().map(|r| r.0).collect();
    Ok(ContractionReport {
        max_ratio: ratios.iter().copied().fold(0.0, f64::max),
        mean_ratio: ratios.iter().sum::<f64>() / ratios.len() as f64,
        resampled: results.iter().map(|r| r.1).sum(),
        ratios,
        radius: setup.radius,
        horizon: params.horizon(),
    })
}

/// Empirical constants of the product estimate
/// `| |u|^(2k) u |_E <= C |u|_inf^(2k) |u|_E` over a random ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub samples: Vec<f64>,
    pub max: f64,
    /// Nearest-rank 95th percentile; this is the value used as `C`.
    pub p95: f64,
    pub k: u32,
    pub grid: GridSpec,
}

/// Nearest-rank percentile of unsorted data, `q` in `(0, 1]`.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = (q * v.len() as f64).ceil().max(1.0) as usize;
    v[rank.min(v.len()) - 1]
}

pub fn calibrate_constant(
    grid: &GridSpec,
    k: u32,
    trials: usize,
    band: i64,
    seed: u64,
) -> Result<CalibrationReport> {
    if trials < 1 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = CounterRng::new(seed, trial as u64);
            let u = random_spectrum(grid, band, &mut rng)?;
            let n = power_nonlinearity_spectrum(&u, k, true)?;
            let linf = linf_norm(&u.to_field()?)?;
            let denom = linf.powi(2 * k as i32) * energy_norm(&u)?;
            Ok(if denom > 0.0 {
                energy_norm(&n)? / denom
            } else {
                0.0
            })
        })
        .collect::<Result<_>>()?;
    Ok(CalibrationReport {
        max: samples.iter().copied().fold(0.0, f64::max),
        p95: percentile(&samples, 0.95),
        samples,
        k,
        grid: *grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn local_time_examples() {
        let lt = select_local_time(1.0 / 6.0, 0.01, 1.0, 1).unwrap();
        assert!((lt.radius - 1.0).abs() < 1e-15);
        assert!((lt.t_max - 1.0 / 54.0).abs() < 1e-15);

        let lt2 = select_local_time(1.0 / 3.0, 0.01, 1.0, 1).unwrap();
        assert!((lt2.radius - 2.0).abs() < 1e-15);
        assert!(lt2.t_max < lt.t_max);

        let lt = select_local_time(0.0, 1.0 / 6.0, 1.0, 2).unwrap();
        assert!((lt.t_max - 1.0 / 150.0).abs() < 1e-15);

        let zero = select_local_time(0.0, 0.0, 1.0, 1).unwrap();
        assert!(zero.floored && zero.radius == DEFAULT_RADIUS_FLOOR && zero.t_max.is_finite());

        assert!(select_local_time(1.0, 1.0, 0.0, 1).is_err());
        assert!(select_local_time(1.0, 1.0, 1.0, 0).is_err());
        assert!(select_local_time(f64::NAN, 1.0, 1.0, 1).is_err());
    }

    #[test]
    fn zero_trajectory_gives_free_flow() {
        let g = make_grid(16, 16, 4.0, 4.0).unwrap();
        let mut rng = CounterRng::new(11, 0);
        let u0 = random_spectrum(&g, 5, &mut rng).unwrap();
        let params = SimulationParams::new(1, 1, 0.3).unwrap();
        let nodes = uniform_nodes(0.3, 8);
        let zeros = vec![Spectrum::zeros(g); nodes.len()];
        let phi = duhamel_apply(&nodes, &zeros, &u0, &params, true).unwrap();
        for (t, s) in nodes.iter().zip(&phi) {
            let free = apply_linear_flow(&u0, *t).unwrap();
            for (a, b) in s.coeffs().iter().zip(free.coeffs()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
        let zero_data = duhamel_apply(&nodes, &zeros, &Spectrum::zeros(g), &params, true).unwrap();
        assert!(zero_data
            .iter()
            .all(|s| s.coeffs().iter().all(|z| z.norm() == 0.0)));
    }

    #[test]
    fn first_iterate_of_constant_data() {
        let g = make_grid(8, 8, 1.0, 1.0).unwrap();
        let amp = c(0.3, 0.1);
        let u0 = Spectrum::single_mode(g, 0, 0, amp).unwrap();
        let params = SimulationParams::new(-1, 1, 0.2).unwrap();
        let nodes = uniform_nodes(0.2, 10);
        let seed: Vec<Spectrum> = nodes.iter().map(|_| u0.clone()).collect();
        let phi = duhamel_apply(&nodes, &seed, &u0, &params, true).unwrap();
        let lam = params.mu() * amp.norm_sqr();
        for (t, s) in nodes.iter().zip(&phi) {
            let linear = amp - c(0.0, 1.0) * lam * amp * *t;
            assert!((s.mode(0, 0) - linear).norm() < 1e-14);
            let exact = amp * Complex64::cis(-lam * t);
            assert!((s.mode(0, 0) - exact).norm() <= 0.6 * (lam * t).powi(2) * amp.norm() + 1e-15);
        }
    }

    #[test]
    fn zero_data_converges_immediately() {
        let g = make_grid(8, 8, 1.0, 1.0).unwrap();
        let params = SimulationParams::new(1, 1, 0.1).unwrap();
        let state = picard_solve(&Spectrum::zeros(g), &params, &PicardOptions::default()).unwrap();
        assert_eq!(state.iteration_index, 1);
        assert_eq!(state.last_distance, 0.0);
    }

    #[test]
    fn rejects_bad_options() {
        let g = make_grid(8, 8, 1.0, 1.0).unwrap();
        let params = SimulationParams::new(1, 1, 0.1).unwrap();
        let u0 = Spectrum::zeros(g);
        for opts in [
            PicardOptions {
                tol: 0.0,
                ..Default::default()
            },
            PicardOptions {
                nodes: 1,
                ..Default::default()
            },
            PicardOptions {
                max_iter: 0,
                ..Default::default()
            },
        ] {
            assert!(matches!(
                picard_solve(&u0, &params, &opts),
                Err(Error::InvalidParameter(_))
            ));
        }
        assert!(duhamel_integral(
            &[0.0, 0.1, 0.3],
            &[u0.clone(), u0.clone(), u0.clone()],
            1,
            true
        )
        .is_err());
    }

    #[test]
    fn non_convergence_reports_ratios() {
        let g = make_grid(8, 8, 1.0, 1.0).unwrap();
        let u0 = Spectrum::single_mode(g, 0, 0, c(1.0, 0.0)).unwrap();
        // |c|^2 T = 3 is far outside the contraction regime.
        let params = SimulationParams::new(1, 1, 3.0).unwrap();
        let opts = PicardOptions {
            max_iter: 5,
            ..Default::default()
        };
        match picard_solve(&u0, &params, &opts) {
            Err(Error::NonConvergence {
                iterations, ratios, ..
            }) => {
                assert_eq!(iterations, 5);
                assert_eq!(ratios.len(), 4);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn backward_direction_on_constant_data() {
        let g = make_grid(8, 8, 1.0, 1.0).unwrap();
        let amp = c(0.1, 0.0);
        let u0 = Spectrum::single_mode(g, 0, 0, amp).unwrap();
        let params = SimulationParams::new(1, 1, 0.1).unwrap();
        let opts = PicardOptions {
            direction: Direction::Backward,
            tol: 1e-13,
            ..Default::default()
        };
        let state = picard_solve(&u0, &params, &opts).unwrap();
        for (t, s) in state.nodes.iter().zip(&state.iterate) {
            assert!(*t <= 0.0);
            let exact = amp * Complex64::cis(-amp.norm_sqr() * t);
            assert!((s.mode(0, 0) - exact).norm() < 1e-9 * amp.norm());
        }
    }

    #[test]
    fn percentile_nearest_rank() {
        let v: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        assert_eq!(percentile(&v, 0.95), 19.0);
        assert_eq!(percentile(&v, 1.0), 20.0);
        assert_eq!(percentile(&[3.0], 0.95), 3.0);
        assert!(percentile(&[], 0.5).is_nan());
    }
}
