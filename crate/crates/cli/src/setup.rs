//! Conversions from the resolved config to core types.

use delaybeam_core::functionals::FitWindow;
use delaybeam_core::model::{
    default_weights, sandwich_weights, BeamParameters, LyapunovWeights, SpaceGrid, TimeGrid,
};
use delaybeam_core::stability::{sigma_member, StabilityCertificate};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

pub fn beam_parameters(cfg: &RunConfig) -> BeamParameters {
    let b = &cfg.beam;
    BeamParameters {
        length: b.length,
        tension: b.tension,
        gain: b.gain,
        alpha: b.alpha,
        delay: b.delay,
        xi: b.xi,
    }
}

pub fn grids(cfg: &RunConfig) -> Result<(SpaceGrid, TimeGrid), CliError> {
    let g = SpaceGrid::new(cfg.beam.length, cfg.grid.n_cells)?;
    let tg = TimeGrid::new(cfg.beam.delay, cfg.grid.steps_per_delay, cfg.grid.horizon)?;
    Ok((g, tg))
}

pub fn fit_window(cfg: &RunConfig) -> FitWindow {
    let d = FitWindow::default_for(cfg.beam.delay, cfg.grid.horizon);
    FitWindow {
        start: cfg.fit_start.unwrap_or(d.start),
        end: cfg.fit_end.unwrap_or(d.end),
    }
}

fn configured_weights(cfg: &RunConfig, p: &BeamParameters) -> Option<LyapunovWeights> {
    let w = &cfg.weights;
    let (d1, d2) = (w.delta1?, w.delta2?);
    let mut out = LyapunovWeights::with_deltas(p, d1, d2);
    if let Some(e) = w.eps1 {
        out.eps1 = e;
    }
    if let Some(e) = w.eps2 {
        out.eps2 = e;
    }
    Some(out)
}

/// Weights used to record `V` along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightsReport {
    pub delta1: f64,
    pub delta2: f64,
    pub eps1: f64,
    pub eps2: f64,
    /// `delta1` was shrunk to keep the equivalence with the energy strict.
    pub shrunk: bool,
    pub configured: bool,
}

impl WeightsReport {
    pub fn weights(&self) -> LyapunovWeights {
        LyapunovWeights {
            delta1: self.delta1,
            delta2: self.delta2,
            eps1: self.eps1,
            eps2: self.eps2,
        }
    }

    fn new(w: LyapunovWeights, shrunk: bool, configured: bool) -> Self {
        Self {
            delta1: w.delta1,
            delta2: w.delta2,
            eps1: w.eps1,
            eps2: w.eps2,
            shrunk,
            configured,
        }
    }
}

/// Configured weights must satisfy the sandwich conditions. Without
/// configured weights the shrunk defaults are used; when those do not exist
/// (for instance `T = 0`) the result is `None` and `V` is recorded as `E`.
pub fn trajectory_weights(
    cfg: &RunConfig,
    p: &BeamParameters,
    warnings: &mut Vec<String>,
) -> Result<Option<WeightsReport>, CliError> {
    if let Some(w) = configured_weights(cfg, p) {
        w.check_sandwich(p)?;
        return Ok(Some(WeightsReport::new(w, false, true)));
    }
    match sandwich_weights(p) {
        Ok(sel) => Ok(Some(WeightsReport::new(sel.weights, sel.shrunk, false))),
        Err(e) => {
            warnings.push(format!("no Lyapunov weights, V recorded as E: {e}"));
            Ok(None)
        }
    }
}

/// Configured weights, or the unshrunk closed-form defaults.
pub fn region_weights(cfg: &RunConfig, p: &BeamParameters) -> Result<LyapunovWeights, CliError> {
    p.require_subcritical()?;
    match configured_weights(cfg, p) {
        Some(w) => Ok(w),
        None => Ok(default_weights(p)?),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoefficientsReport {
    pub tip: f64,
    pub kinetic: f64,
    pub bending: f64,
    pub delayed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantsReport {
    pub gamma1_nominal: f64,
    pub gamma1_safe: f64,
    pub gamma2_nominal: f64,
    pub gamma2_safe: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertificateReport {
    pub alpha: f64,
    pub xi: f64,
    pub member: bool,
    pub marginal: bool,
    pub below_linear_bound: bool,
    pub above_quadratic_bound: bool,
    pub nu: Option<f64>,
    pub nu_safe: Option<f64>,
    pub coefficients: CoefficientsReport,
    pub constants: ConstantsReport,
}

impl From<StabilityCertificate> for CertificateReport {
    fn from(c: StabilityCertificate) -> Self {
        Self {
            alpha: c.alpha,
            xi: c.xi,
            member: c.member,
            marginal: c.marginal,
            below_linear_bound: c.below_linear_bound,
            above_quadratic_bound: c.above_quadratic_bound,
            nu: c.nu,
            nu_safe: c.nu_safe,
            coefficients: CoefficientsReport {
                tip: c.coefficients.tip,
                kinetic: c.coefficients.kinetic,
                bending: c.coefficients.bending,
                delayed: c.coefficients.delayed,
            },
            constants: ConstantsReport {
                gamma1_nominal: c.constants.gamma1_nominal,
                gamma1_safe: c.constants.gamma1_safe,
                gamma2_nominal: c.constants.gamma2_nominal,
                gamma2_safe: c.constants.gamma2_safe,
            },
        }
    }
}

/// Certificate for the configured `(alpha, xi)`, or `None` with a warning
/// when the weights or parameters do not admit one.
pub fn certificate(
    p: &BeamParameters,
    weights: Option<&LyapunovWeights>,
    warnings: &mut Vec<String>,
) -> Option<CertificateReport> {
    let w = match weights {
        Some(w) => *w,
        None => match default_weights(p) {
            Ok(w) => w,
            Err(e) => {
                warnings.push(format!("no stability certificate: {e}"));
                return None;
            }
        },
    };
    match sigma_member(p.alpha, p.xi, p, &w) {
        Ok(c) => Some(c.into()),
        Err(e) => {
            warnings.push(format!("no stability certificate: {e}"));
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParametersReport {
    pub length: f64,
    pub tension: f64,
    pub gain: f64,
    pub alpha: f64,
    pub delay: f64,
    pub xi: f64,
}

impl From<&BeamParameters> for ParametersReport {
    fn from(p: &BeamParameters) -> Self {
        Self {
            length: p.length,
            tension: p.tension,
            gain: p.gain,
            alpha: p.alpha,
            delay: p.delay,
            xi: p.xi,
        }
    }
}
