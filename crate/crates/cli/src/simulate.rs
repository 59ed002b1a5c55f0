use std::path::Path;

use delaybeam_core::functionals::{fit_decay, sandwich_violations, DecayOutcome, FitWindow};
use delaybeam_core::integrator::{Propagator, StepperConfig, SCHEME};
use delaybeam_core::model::{validate_parameters, EnergyTrace};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{csv_writer, num, write_json};
use crate::presets::initial_data;
use crate::setup::{
    beam_parameters, certificate, fit_window, grids, trajectory_weights, CertificateReport,
    ParametersReport, WeightsReport,
};

pub const TRACE_HEADER: [&str; 6] = ["t", "E", "I1", "I2", "V", "tip_velocity"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitReport {
    pub rate: f64,
    pub prefactor: f64,
    pub window_start: f64,
    pub window_end: f64,
    pub residual: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridReport {
    #[serde(rename = "N")]
    pub n_cells: usize,
    #[serde(rename = "M")]
    pub steps_per_delay: usize,
    pub t_f: f64,
    pub dt: f64,
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub scheme: &'static str,
    pub parameters: ParametersReport,
    pub grid: GridReport,
    pub weights: Option<WeightsReport>,
    pub fit: Option<FitReport>,
    pub fully_decayed: bool,
    pub fit_window: [f64; 2],
    pub certificate: Option<CertificateReport>,
    pub sandwich_violations: Option<usize>,
    #[serde(rename = "E_initial")]
    pub e_initial: f64,
    #[serde(rename = "E_final")]
    pub e_final: f64,
    pub warnings: Vec<String>,
}

/// Fit outcome in report form; fit errors become warnings.
pub fn fit_report(
    trace: &EnergyTrace,
    window: FitWindow,
    warnings: &mut Vec<String>,
) -> (Option<FitReport>, bool) {
    match fit_decay(trace, window) {
        Ok(DecayOutcome::Fitted(f)) => (
            Some(FitReport {
                rate: f.rate,
                prefactor: f.prefactor,
                window_start: f.window.start,
                window_end: f.window.end,
                residual: f.residual,
                samples: f.samples,
            }),
            false,
        ),
        Ok(DecayOutcome::FullyDecayed) => (None, true),
        Err(e) => {
            warnings.push(format!("no decay fit: {e}"));
            (None, false)
        }
    }
}

/// Runs one trajectory and returns the trace with its summary.
pub fn simulate(cfg: &RunConfig) -> Result<(EnergyTrace, SimulationSummary), CliError> {
    let p = beam_parameters(cfg);
    let mut warnings = validate_parameters(&p).warnings();
    let (g, tg) = grids(cfg)?;
    let weights = trajectory_weights(cfg, &p, &mut warnings)?;
    let w = weights.map(|r| r.weights());
    let init = initial_data(cfg.initial, &g, p.delay, cfg.initial_seed);
    let stepper = StepperConfig::new(tg, cfg.stride)?;
    let trace = Propagator::new(&p, &g, &tg)?.run(&g, &stepper, &init, w.as_ref())?;

    let window = fit_window(cfg);
    let (fit, fully_decayed) = fit_report(&trace, window, &mut warnings);
    let certificate = certificate(&p, w.as_ref(), &mut warnings);
    let summary = SimulationSummary {
        scheme: SCHEME,
        parameters: (&p).into(),
        grid: GridReport {
            n_cells: g.n_cells(),
            steps_per_delay: tg.steps_per_delay(),
            t_f: tg.horizon(),
            dt: tg.dt(),
            stride: cfg.stride,
        },
        weights,
        fit,
        fully_decayed,
        fit_window: [window.start, window.end],
        certificate,
        sandwich_violations: w.map(|w| sandwich_violations(&trace, &p, &w)),
        e_initial: trace.first().map_or(0.0, |r| r.energy),
        e_final: trace.last().map_or(0.0, |r| r.energy),
        warnings,
    };
    Ok((trace, summary))
}

pub fn write_trace(path: &Path, trace: &EnergyTrace) -> Result<(), CliError> {
    let mut w = csv_writer(path, &TRACE_HEADER)?;
    for r in trace.records() {
        w.write_record([
            num(r.t),
            num(r.energy),
            num(r.i1),
            num(r.i2),
            num(r.lyapunov),
            num(r.tip_velocity),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let (trace, summary) = simulate(cfg)?;
    write_trace(&out.join("trace.csv"), &trace)?;
    write_json(&out.join("summary.json"), &summary)
}
