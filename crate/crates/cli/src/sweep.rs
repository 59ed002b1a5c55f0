use std::path::Path;

use delaybeam_core::integrator::{InitialData, Propagator, StepperConfig};
use delaybeam_core::model::{EnergyTrace, LyapunovWeights, SpaceGrid};
use delaybeam_core::stability::{sigma_member, symmetric_linspace};
use delaybeam_core::Error;
use rayon::prelude::*;

use crate::config::{RunConfig, SweepSection};
use crate::error::CliError;
use crate::output::{csv_writer, num, opt_num};
use crate::presets::initial_data;
use crate::setup::{beam_parameters, fit_window, grids, trajectory_weights};
use crate::simulate::fit_report;

pub const SWEEP_HEADER: [&str; 8] = [
    "alpha",
    "xi",
    "member",
    "nu",
    "fitted_rate",
    "fit_residual",
    "E_final_over_E0",
    "status",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointStatus {
    Ok,
    FullyDecayed,
    FitFailed,
    Blowup,
}

impl PointStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PointStatus::Ok => "ok",
            PointStatus::FullyDecayed => "fully_decayed",
            PointStatus::FitFailed => "fit_failed",
            PointStatus::Blowup => "blowup",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub xi: f64,
    pub member: bool,
    pub nu: Option<f64>,
    pub fitted_rate: Option<f64>,
    pub fit_residual: Option<f64>,
    pub e_final_over_e0: Option<f64>,
    pub status: PointStatus,
    /// Recorded samples with `t >= 2 tau` at which `V` exceeds the previous
    /// sample.
    pub lyapunov_increases: usize,
    /// Samples compared for [`Self::lyapunov_increases`].
    pub lyapunov_checked: usize,
}

fn axis(lo: f64, hi: f64, n: usize, name: &str) -> Result<Vec<f64>, CliError> {
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) || (n > 1 && lo == hi) {
        return Err(CliError::Config(format!(
            "sweep.{name} range [{lo}, {hi}] is empty"
        )));
    }
    Ok(if n == 1 {
        vec![lo]
    } else {
        symmetric_linspace(lo, hi, n)
    })
}

/// Grid points in row-major `(alpha, xi)` order. A single point per axis
/// sits at the lower end.
pub fn sweep_points(s: &SweepSection) -> Result<Vec<(f64, f64)>, CliError> {
    let alphas = axis(s.alpha_min, s.alpha_max, s.alpha_count, "alpha")?;
    let xis = axis(s.xi_min, s.xi_max, s.xi_count, "xi")?;
    if xis.iter().any(|&x| !(x > 0.0)) {
        return Err(CliError::Config("sweep.xi values must be positive".into()));
    }
    Ok(alphas
        .iter()
        .flat_map(|&a| xis.iter().map(move |&x| (a, x)))
        .collect())
}

fn lyapunov_increases(trace: &EnergyTrace, from: f64) -> (usize, usize) {
    let r = trace.records();
    let mut checked = 0;
    let mut up = 0;
    for w in r.windows(2) {
        if w[0].t >= from {
            checked += 1;
            if w[1].lyapunov > w[0].lyapunov {
                up += 1;
            }
        }
    }
    (up, checked)
}

struct Shared<'a> {
    base: Propagator,
    grid: &'a SpaceGrid,
    stepper: StepperConfig,
    init: InitialData,
    weights: LyapunovWeights,
    cfg: &'a RunConfig,
}

fn run_point(s: &Shared, alpha: f64, xi: f64) -> Result<SweepRow, CliError> {
    let p = s.base.parameters().with_alpha_xi(alpha, xi);
    let cert = sigma_member(alpha, xi, &p, &s.weights)?;
    let prop = s.base.with_parameters(&p)?;
    let mut row = SweepRow {
        alpha,
        xi,
        member: cert.member,
        nu: cert.nu,
        fitted_rate: None,
        fit_residual: None,
        e_final_over_e0: None,
        status: PointStatus::Blowup,
        lyapunov_increases: 0,
        lyapunov_checked: 0,
    };
    let trace = match prop.run(s.grid, &s.stepper, &s.init, Some(&s.weights)) {
        Ok(t) => t,
        Err(Error::NonFinite { .. }) => return Ok(row),
        Err(e) => return Err(e.into()),
    };
    let mut ignored = Vec::new();
    let (fit, fully_decayed) = fit_report(&trace, fit_window(s.cfg), &mut ignored);
    let e0 = trace.first().map_or(0.0, |r| r.energy);
    let ef = trace.last().map_or(0.0, |r| r.energy);
    row.e_final_over_e0 = (e0 > 0.0).then(|| ef / e0);
    row.fitted_rate = fit.map(|f| f.rate);
    row.fit_residual = fit.map(|f| f.residual);
    row.status = match (fit, fully_decayed) {
        (Some(_), _) => PointStatus::Ok,
        (None, true) => PointStatus::FullyDecayed,
        (None, false) => PointStatus::FitFailed,
    };
    (row.lyapunov_increases, row.lyapunov_checked) = lyapunov_increases(&trace, 2.0 * p.delay);
    Ok(row)
}

/// Runs every sweep point on a pool of `workers` threads (`None`: one per
/// core) and returns the rows sorted by `(alpha, xi)`.
pub fn sweep(cfg: &RunConfig, workers: Option<usize>) -> Result<Vec<SweepRow>, CliError> {
    let p = beam_parameters(cfg);
    let (g, tg) = grids(cfg)?;
    let points = sweep_points(&cfg.sweep)?;
    let weights = trajectory_weights(cfg, &p, &mut Vec::new())?
        .ok_or_else(|| CliError::Config("sweep needs admissible Lyapunov weights".into()))?
        .weights();
    let shared = Shared {
        base: Propagator::new(&p, &g, &tg)?,
        grid: &g,
        stepper: StepperConfig::new(tg, cfg.stride)?,
        init: initial_data(cfg.initial, &g, p.delay, cfg.initial_seed),
        weights,
        cfg,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    let mut rows = pool.install(|| {
        points
            .par_iter()
            .map(|&(a, x)| run_point(&shared, a, x))
            .collect::<Result<Vec<_>, _>>()
    })?;
    rows.sort_by(|a, b| a.alpha.total_cmp(&b.alpha).then(a.xi.total_cmp(&b.xi)));
    Ok(rows)
}

pub fn write_rows(path: &Path, rows: &[SweepRow]) -> Result<(), CliError> {
    let mut w = csv_writer(path, &SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            num(r.alpha),
            num(r.xi),
            r.member.to_string(),
            opt_num(r.nu),
            opt_num(r.fitted_rate),
            opt_num(r.fit_residual),
            opt_num(r.e_final_over_e0),
            r.status.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn run(cfg: &RunConfig, out: &Path, workers: Option<usize>) -> Result<(), CliError> {
    let rows = sweep(cfg, workers)?;
    write_rows(&out.join("sweep.csv"), &rows)
}
