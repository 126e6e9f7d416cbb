use rayon::prelude::*;
use serde::Serialize;

use super::config::Settings;
use super::output::{fmt_f64, timeseries_row, RunDir, TIMESERIES_HEADER};
use super::RunInfo;
use crate::diagnostics::{
    check_duhamel_estimates, check_linear_estimate, check_lipschitz_estimates, energy, mass,
    summarize, EstimateId, EstimateReport, EstimateSummary,
};
use crate::ensemble::{random_spectrum, random_trajectory, CounterRng};
use crate::error::{Error, Result};
use crate::evolver::{evolve, EvolveOptions};
use crate::initial::sample_function;
use crate::norms::{
    anisotropic_scaling_probe, energy_norm, lq_norm, wiener_norm, NormReport, ScalingProbeRow,
};
use crate::picard::{
    calibrate_constant, measure_contraction, picard_solve, select_local_time, uniform_nodes,
    CalibrationReport, ContractionReport, ContractionSetup, Direction, InitialIterate,
    PicardOptions,
};
use crate::spectral::{GridSpec, Spectrum};

const DEFAULT_TRIALS: usize = 100;
const DEFAULT_CALIBRATION_TRIALS: usize = 200;
const DEFAULT_BAND: i64 = 8;
const SOBOLEV_PAIRS: [(f64, f64); 3] = [(1.0, 0.0), (0.0, 0.5), (1.0, 0.5)];
const PROBE_LAMBDAS: [f64; 4] = [1.0, 2.0, 4.0, 8.0];

fn initial_spectrum(settings: &Settings) -> Result<(GridSpec, Spectrum)> {
    let grid = settings.grid_spec()?;
    let field = sample_function(&grid, &settings.initial()?)?;
    Ok((grid, field.to_spectrum()?))
}

fn positive(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter(format!(
            "{what} must be positive, got {value}"
        )))
    }
}

fn relative_drift(values: &[f64]) -> f64 {
    let first = values.first().copied().unwrap_or(0.0);
    let scale = first.abs().max(f64::MIN_POSITIVE);
    values
        .iter()
        .map(|v| (v - first).abs() / scale)
        .fold(0.0, f64::max)
}

#[derive(Serialize)]
struct SimulateSummary {
    steps: usize,
    dt: f64,
    final_time: f64,
    rows: usize,
    mass_drift: f64,
    energy_drift: f64,
}

pub(crate) fn simulate(settings: &Settings, dir: &mut RunDir) -> Result<RunInfo> {
    let (grid, u0) = initial_spectrum(settings)?;
    let horizon = positive(settings.horizon.unwrap_or(0.05), "T")?;
    let dt = positive(settings.dt.unwrap_or(1e-3), "dt")?;
    let params = settings.params(horizon)?;
    let opts = EvolveOptions {
        dt,
        cadence: settings.cadence.unwrap_or(1),
        splitting: settings.splitting.unwrap_or_default(),
        direction: settings.direction.unwrap_or(Direction::Forward),
    };
    let snapshot_every = settings.snapshot_every.unwrap_or(10);
    if snapshot_every == 0 {
        return Err(Error::InvalidParameter(
            "snapshot_every must be at least 1".into(),
        ));
    }

    let frames = evolve(&u0, &params, &opts)?;
    let mut rows = Vec::with_capacity(frames.len());
    let mut masses = Vec::with_capacity(frames.len());
    let mut energies = Vec::with_capacity(frames.len());
    for (i, (t, s)) in frames.iter().enumerate() {
        rows.push(timeseries_row(*t, s, &params)?);
        let f = s.to_field()?;
        masses.push(mass(&f)?);
        energies.push(energy(&f, &params)?);
        if i % snapshot_every == 0 || i + 1 == frames.len() {
            dir.write_snapshot(&format!("snapshots/snap_{i:05}.hwnls"), *t, s)?;
        }
    }
    dir.write_csv("timeseries.csv", &TIMESERIES_HEADER, &rows)?;
    let steps = (horizon / dt).round() as usize;
    dir.write_json(
        "summary.json",
        &SimulateSummary {
            steps,
            dt: horizon / steps as f64,
            final_time: frames.last().map(|f| f.0).unwrap_or(0.0),
            rows: frames.len(),
            mass_drift: relative_drift(&masses),
            energy_drift: relative_drift(&energies),
        },
    )?;
    Ok(RunInfo {
        grid: Some(grid),
        params: Some(params),
    })
}

fn resolve_constant(settings: &Settings, grid: &GridSpec, k: u32, dir: &mut RunDir) -> Result<f64> {
    if settings.calibrate.unwrap_or(false) {
        let report = calibrate_constant(
            grid,
            k,
            settings.trials.unwrap_or(DEFAULT_CALIBRATION_TRIALS),
            settings.band.unwrap_or(DEFAULT_BAND),
            settings.seed(),
        )?;
        dir.write_json("calibration.json", &report)?;
        Ok(report.p95)
    } else {
        positive(settings.constant.unwrap_or(1.0), "constant")
    }
}

#[derive(Serialize)]
struct PicardReport {
    converged: bool,
    iterations: usize,
    last_distance: f64,
    ratios: Vec<f64>,
    max_ratio: f64,
    radius: f64,
    delta: f64,
    constant_c: f64,
    t_max: f64,
    horizon: f64,
    nodes: usize,
    initial_iterate: InitialIterate,
    direction: Direction,
}

pub(crate) fn picard(settings: &Settings, dir: &mut RunDir) -> Result<RunInfo> {
    let (grid, u0) = initial_spectrum(settings)?;
    let k = settings.k.unwrap_or(1);
    let constant = resolve_constant(settings, &grid, k, dir)?;
    let local = select_local_time(energy_norm(&u0)?, wiener_norm(&u0)?, constant, k)?;
    let horizon = positive(settings.horizon.unwrap_or(local.t_max), "T")?;
    let params = settings.params(horizon)?;
    let opts = PicardOptions {
        nodes: settings.nodes.unwrap_or(64),
        tol: settings.tol.unwrap_or(1e-10),
        max_iter: settings.max_iter.unwrap_or(100),
        constant_c: constant,
        initial: settings
            .initial_iterate
            .unwrap_or(InitialIterate::FreeEvolution),
        dealias: settings.dealias.unwrap_or(true),
        direction: settings.direction.unwrap_or(Direction::Forward),
    };

    let state = picard_solve(&u0, &params, &opts)?;
    let rows: Vec<Vec<String>> = state
        .history
        .iter()
        .map(|r| {
            vec![
                r.iteration.to_string(),
                fmt_f64(r.distance),
                r.ratio.map(fmt_f64).unwrap_or_default(),
                fmt_f64(r.y_norm),
                r.in_ball.to_string(),
            ]
        })
        .collect();
    dir.write_csv(
        "convergence.csv",
        &["iteration", "distance", "ratio", "y_norm", "in_ball"],
        &rows,
    )?;
    let series = state
        .nodes
        .iter()
        .zip(&state.iterate)
        .map(|(t, s)| timeseries_row(*t, s, &params))
        .collect::<Result<Vec<_>>>()?;
    dir.write_csv("timeseries.csv", &TIMESERIES_HEADER, &series)?;
    let ratios = state.ratios();
    dir.write_json(
        "report.json",
        &PicardReport {
            converged: true,
            iterations: state.iteration_index,
            last_distance: state.last_distance,
            max_ratio: ratios.iter().copied().fold(0.0, f64::max),
            ratios,
            radius: state.radius_r,
            delta: state.delta,
            constant_c: state.constant_c,
            t_max: local.t_max,
            horizon,
            nodes: opts.nodes,
            initial_iterate: opts.initial,
            direction: opts.direction,
        },
    )?;
    let t_final = state.nodes.last().copied().unwrap_or(0.0);
    dir.write_snapshot("final.hwnls", t_final, state.final_spectrum())?;
    Ok(RunInfo {
        grid: Some(grid),
        params: Some(params),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Suite {
    Linear,
    Wiener,
    Energy,
    Contraction,
}

impl Suite {
    fn parse(s: &str) -> Result<Vec<Suite>> {
        Ok(match s {
            "linear" => vec![Suite::Linear],
            "wiener" => vec![Suite::Wiener],
            "energy" => vec![Suite::Energy],
            "contraction" => vec![Suite::Contraction],
            "all" => vec![
                Suite::Linear,
                Suite::Wiener,
                Suite::Energy,
                Suite::Contraction,
            ],
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown suite `{s}` (linear, wiener, energy, contraction, all)"
                )))
            }
        })
    }

    /// Disjoint random streams per suite.
    fn stream(self, trial: usize) -> u64 {
        let base: u64 = match self {
            Suite::Linear => 1,
            Suite::Wiener => 2,
            Suite::Energy => 3,
            Suite::Contraction => 4,
        };
        (base << 32) | trial as u64
    }

    fn keeps(self, id: EstimateId) -> bool {
        match self {
            Suite::Linear => id == EstimateId::Linear,
            Suite::Wiener => matches!(
                id,
                EstimateId::DuhamelLinf
                    | EstimateId::DuhamelL1
                    | EstimateId::LipschitzWiener
                    | EstimateId::LipschitzLinf
            ),
            Suite::Energy => matches!(id, EstimateId::DuhamelE | EstimateId::LipschitzE),
            Suite::Contraction => false,
        }
    }
}

#[derive(Serialize)]
struct VerifySummary {
    suite: String,
    trials: usize,
    seed: u64,
    k: u32,
    radius: f64,
    horizon: f64,
    nodes: usize,
    constant_c: f64,
    min_margin: f64,
    estimates: Vec<EstimateSummary>,
    contraction: Option<ContractionReport>,
}

pub(crate) fn verify(settings: &Settings, dir: &mut RunDir) -> Result<RunInfo> {
    let grid = settings.grid_spec()?;
    let suite_name = settings.suite.clone().unwrap_or_else(|| "all".into());
    let suites = Suite::parse(&suite_name)?;
    let k = settings.k.unwrap_or(1);
    let trials = settings.trials.unwrap_or(DEFAULT_TRIALS);
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let seed = settings.seed();
    let band = settings.band.unwrap_or(DEFAULT_BAND);
    let radius = positive(settings.radius.unwrap_or(1.0), "radius")?;
    let m = settings.nodes.unwrap_or(16);
    let constant = resolve_constant(settings, &grid, k, dir)?;
    let mut horizon = positive(settings.horizon.unwrap_or(0.1), "T")?;
    let nodes = uniform_nodes(horizon, m);
    let params = settings.params(horizon)?;

    let mut reports: Vec<(usize, EstimateReport)> = Vec::new();
    let mut contraction = None;
    for suite in suites {
        let rows: Vec<Vec<(usize, EstimateReport)>> = match suite {
            Suite::Linear => (0..trials)
                .into_par_iter()
                .map(|trial| {
                    let mut rng = CounterRng::new(seed, suite.stream(trial));
                    let u0 = random_spectrum(&grid, band, &mut rng)?;
                    let r = check_linear_estimate(&u0, &nodes, &format!("trial {trial}"))?;
                    Ok(vec![(trial, r)])
                })
                .collect::<Result<_>>()?,
            Suite::Wiener | Suite::Energy => (0..trials)
                .into_par_iter()
                .map(|trial| {
                    let mut rng = CounterRng::new(seed, suite.stream(trial));
                    let witness = format!("trial {trial}");
                    let u = random_trajectory(&grid, &nodes, band, radius, &mut rng)?;
                    let v = random_trajectory(&grid, &nodes, band, radius, &mut rng)?;
                    let mut out =
                        check_duhamel_estimates(&nodes, &u, &params, radius, constant, &witness)?;
                    out.extend(check_lipschitz_estimates(
                        &u, &v, &params, radius, constant, &witness,
                    )?);
                    Ok(out
                        .into_iter()
                        .filter(|r| suite.keeps(r.estimate_id))
                        .map(|r| (trial, r))
                        .collect())
                })
                .collect::<Result<_>>()?,
            Suite::Contraction => {
                let (_, u0) = initial_spectrum(settings)?;
                let local = select_local_time(energy_norm(&u0)?, wiener_norm(&u0)?, constant, k)?;
                let t = settings.horizon.unwrap_or(local.t_max);
                let report = measure_contraction(
                    &u0,
                    &params.with_horizon(t)?,
                    &ContractionSetup {
                        nodes: m,
                        trials,
                        radius: settings.radius.unwrap_or(local.radius),
                        band,
                        seed,
                        dealias: true,
                    },
                )?;
                horizon = t;
                contraction = Some(report);
                Vec::new()
            }
        };
        reports.extend(rows.into_iter().flatten());
    }

    let csv: Vec<Vec<String>> = reports
        .iter()
        .map(|(trial, r)| {
            vec![
                r.estimate_id.as_str().to_string(),
                trial.to_string(),
                fmt_f64(r.lhs),
                fmt_f64(r.rhs),
                fmt_f64(r.margin),
                fmt_f64(r.empirical_constant),
            ]
        })
        .collect();
    dir.write_csv(
        "estimates.csv",
        &[
            "estimate_id",
            "trial",
            "lhs",
            "rhs",
            "margin",
            "empirical_constant",
        ],
        &csv,
    )?;
    let plain: Vec<EstimateReport> = reports.into_iter().map(|(_, r)| r).collect();
    let summary = VerifySummary {
        suite: suite_name,
        trials,
        seed,
        k,
        radius,
        horizon,
        nodes: m,
        constant_c: constant,
        min_margin: plain.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min),
        estimates: summarize(&plain),
        contraction,
    };
    dir.write_json("summary.json", &summary)?;
    Ok(RunInfo {
        grid: Some(grid),
        params: Some(params.with_horizon(horizon)?),
    })
}

#[derive(Serialize)]
struct LqEntry {
    q: f64,
    value: f64,
}

#[derive(Serialize)]
struct NormsOutput {
    norms: NormReport,
    lq: Vec<LqEntry>,
    scaling_probe: Vec<ScalingProbeRow>,
}

pub(crate) fn norms(settings: &Settings, dir: &mut RunDir) -> Result<RunInfo> {
    let (grid, u0) = initial_spectrum(settings)?;
    let field = u0.to_field()?;
    let qs = settings
        .q
        .clone()
        .unwrap_or_else(|| vec![3.0, 4.0, 5.0, 6.0, 8.0]);
    let report = NormReport::measure(0.0, &u0, &SOBOLEV_PAIRS)?;
    let lq = qs
        .iter()
        .map(|&q| {
            Ok(LqEntry {
                q,
                value: lq_norm(&field, q)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let probe = anisotropic_scaling_probe(&field, &PROBE_LAMBDAS, &qs)?;

    let mut header = vec!["t", "l2", "linf", "e_norm", "wiener"];
    let names: Vec<String> = report
        .sobolev
        .iter()
        .map(|e| format!("h_{}_{}", e.s1, e.s2))
        .collect();
    header.extend(names.iter().map(String::as_str));
    let mut row = vec![
        fmt_f64(report.time),
        fmt_f64(report.l2),
        fmt_f64(report.linf),
        fmt_f64(report.energy_norm),
        fmt_f64(report.wiener),
    ];
    row.extend(report.sobolev.iter().map(|e| fmt_f64(e.value)));
    dir.write_csv("norms.csv", &header, &[row])?;

    let probe_rows: Vec<Vec<String>> = probe
        .iter()
        .map(|r| {
            vec![
                fmt_f64(r.lambda),
                fmt_f64(r.q),
                fmt_f64(r.lq),
                fmt_f64(r.energy_norm),
                fmt_f64(r.ratio),
            ]
        })
        .collect();
    dir.write_csv(
        "scaling_probe.csv",
        &["lambda", "q", "lq", "e_norm", "ratio"],
        &probe_rows,
    )?;
    dir.write_json(
        "norms.json",
        &NormsOutput {
            norms: report,
            lq,
            scaling_probe: probe,
        },
    )?;
    Ok(RunInfo {
        grid: Some(grid),
        params: None,
    })
}

pub(crate) fn calibrate(settings: &Settings, dir: &mut RunDir) -> Result<RunInfo> {
    let grid = settings.grid_spec()?;
    let k = settings.k.unwrap_or(1);
    let report: CalibrationReport = calibrate_constant(
        &grid,
        k,
        settings.trials.unwrap_or(DEFAULT_CALIBRATION_TRIALS),
        settings.band.unwrap_or(DEFAULT_BAND),
        settings.seed(),
    )?;
    dir.write_json("calibration.json", &report)?;
    Ok(RunInfo {
        grid: Some(grid),
        params: None,
    })
}
