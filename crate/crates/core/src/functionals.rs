//! Energy, the auxiliary functionals `I1`, `I2`, the Lyapunov functional,
//! the energy-balance residual and exponential decay fits.
//!
//! Spatial integrals use the trapezoid weights of the grid, except the
//! tension term and `I1`, which live on cell midpoints. The midpoint form is
//! what makes the discrete energy exactly `1/2 v.W v + 1/2 y.W A y`, so the
//! scheme's energy identity holds without a quadrature defect.

use crate::discretization::{cell_slopes, curvature};
use crate::error::{check_len, Error, Result};
use crate::model::{
    BalanceTerms, BeamParameters, BeamState, DelayHistory, EnergyTrace, LyapunovWeights, SpaceGrid,
    TimeGrid, TraceRecord,
};
use crate::quadrature::trapezoid;

fn weighted_sum(g: &SpaceGrid, f: impl Fn(usize) -> f64) -> f64 {
    (0..g.n_nodes()).map(|j| g.trapezoid_weight(j) * f(j)).sum()
}

fn check_history(history: &DelayHistory, g: &SpaceGrid, tg: &TimeGrid) -> Result<()> {
    check_len("history slots", tg.steps_per_delay() + 1, history.len())?;
    check_len("history slot", g.n_nodes(), history.newest().len())
}

/// `1/2 (int v^2 + int y_xx^2 + T int y_x^2)`
pub fn beam_energy(state: &BeamState, p: &BeamParameters, g: &SpaceGrid) -> Result<f64> {
    state.check_dims(g)?;
    let kinetic = weighted_sum(g, |j| state.v[j] * state.v[j]);
    let z = curvature(&state.y, g)?;
    let bending = weighted_sum(g, |j| z[j] * z[j]);
    let stretch: f64 = cell_slopes(&state.y, g)?.iter().map(|s| s * s).sum::<f64>() * g.dx();
    Ok(0.5 * (kinetic + bending + p.tension * stretch))
}

/// `xi/2 int_0^l int_0^1 u(x, s)^2 ds dx`, trapezoid in `s` over the buffer.
pub fn history_energy(
    history: &DelayHistory,
    p: &BeamParameters,
    g: &SpaceGrid,
    tg: &TimeGrid,
) -> Result<f64> {
    check_history(history, g, tg)?;
    let per_slot: Vec<f64> = history
        .iter()
        .map(|u| weighted_sum(g, |j| u[j] * u[j]))
        .collect();
    Ok(0.5 * p.xi * trapezoid(&per_slot, 1.0 / tg.steps_per_delay() as f64))
}

/// Full energy: beam part plus the history term.
pub fn energy(
    state: &BeamState,
    history: &DelayHistory,
    p: &BeamParameters,
    g: &SpaceGrid,
    tg: &TimeGrid,
) -> Result<f64> {
    Ok(beam_energy(state, p, g)? + history_energy(history, p, g, tg)?)
}

/// `int x y_x v dx`, with slope and averaged velocity on cell midpoints.
pub fn functional_i1(state: &BeamState, g: &SpaceGrid) -> Result<f64> {
    state.check_dims(g)?;
    let dx = g.dx();
    let slopes = cell_slopes(&state.y, g)?;
    Ok(slopes
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let mid = (j as f64 + 0.5) * dx;
            mid * s * 0.5 * (state.v[j] + state.v[j + 1])
        })
        .sum::<f64>()
        * dx)
}

/// `int_0^l int_{t-tau}^t e^{s-t} v(x, s)^2 ds dx` over the buffer times.
pub fn functional_i2(history: &DelayHistory, g: &SpaceGrid, tg: &TimeGrid) -> Result<f64> {
    check_history(history, g, tg)?;
    let m = tg.steps_per_delay();
    let dt = tg.dt();
    let per_slot: Vec<f64> = history
        .iter()
        .enumerate()
        .map(|(k, u)| {
            let lag = (m - k) as f64 * dt;
            (-lag).exp() * weighted_sum(g, |j| u[j] * u[j])
        })
        .collect();
    Ok(trapezoid(&per_slot, dt))
}

/// `E + delta1 I1 + delta2 I2`; rejects weights outside the admissible set
/// or with `delta1 >= 1 / max{l, l/T}`.
pub fn lyapunov(
    state: &BeamState,
    history: &DelayHistory,
    p: &BeamParameters,
    g: &SpaceGrid,
    tg: &TimeGrid,
    w: &LyapunovWeights,
) -> Result<f64> {
    w.check_sandwich(p)?;
    Ok(energy(state, history, p, g, tg)?
        + w.delta1 * functional_i1(state, g)?
        + w.delta2 * functional_i2(history, g, tg)?)
}

/// Integrals entering the energy balance at the current time.
pub fn balance_terms(
    state: &BeamState,
    history: &DelayHistory,
    g: &SpaceGrid,
) -> Result<BalanceTerms> {
    state.check_dims(g)?;
    let d = history.oldest();
    check_len("delayed velocity", g.n_nodes(), d.len())?;
    let v = &state.v;
    Ok(BalanceTerms {
        kinetic: weighted_sum(g, |j| v[j] * v[j]),
        delayed: weighted_sum(g, |j| d[j] * d[j]),
        cross: weighted_sum(g, |j| d[j] * v[j]),
    })
}

/// Samples every functional at the current state. With `weights = None` the
/// Lyapunov column repeats the energy. Weights are not re-validated here.
pub fn trace_record(
    state: &BeamState,
    history: &DelayHistory,
    p: &BeamParameters,
    g: &SpaceGrid,
    tg: &TimeGrid,
    weights: Option<&LyapunovWeights>,
) -> Result<TraceRecord> {
    let beam = beam_energy(state, p, g)?;
    let e = beam + history_energy(history, p, g, tg)?;
    let i1 = functional_i1(state, g)?;
    let i2 = functional_i2(history, g, tg)?;
    let lyap = match weights {
        Some(w) => e + w.delta1 * i1 + w.delta2 * i2,
        None => e,
    };
    Ok(TraceRecord {
        t: state.t,
        energy: e,
        beam_energy: beam,
        i1,
        i2,
        lyapunov: lyap,
        tip_velocity: state.tip_velocity(),
        balance: balance_terms(state, history, g)?,
    })
}

/// Right-hand side of the exact energy identity:
/// `-(xi / 2 tau) int (v(t-tau)^2 - v(t)^2) - alpha int v(t-tau) v(t) - kappa v(l)^2`.
pub fn energy_rate(record: &TraceRecord, p: &BeamParameters) -> f64 {
    let b = &record.balance;
    -(p.xi / (2.0 * p.delay)) * (b.delayed - b.kinetic)
        - p.alpha * b.cross
        - p.gain * record.tip_velocity * record.tip_velocity
}

/// Centered-difference `dE/dt` minus [`energy_rate`] at every interior
/// sample. Needs a trace recorded at every step.
pub fn energy_balance_residual(trace: &EnergyTrace, p: &BeamParameters) -> Result<Vec<f64>> {
    if trace.stride() != 1 {
        return Err(Error::Trace(format!(
            "energy balance needs stride 1, trace has stride {}",
            trace.stride()
        )));
    }
    let r = trace.records();
    let h = trace.sample_interval();
    Ok(r.windows(3)
        .map(|w| (w[2].energy - w[0].energy) / (2.0 * h) - energy_rate(&w[1], p))
        .collect())
}

/// `sum |residual| dt` over samples with `t <= until`.
pub fn integrated_balance_residual(
    trace: &EnergyTrace,
    p: &BeamParameters,
    until: f64,
) -> Result<f64> {
    let res = energy_balance_residual(trace, p)?;
    let h = trace.sample_interval();
    Ok(trace.records()[1..]
        .iter()
        .zip(&res)
        .take_while(|(rec, _)| rec.t <= until + 0.5 * h)
        .map(|(_, r)| r.abs() * h)
        .sum())
}

/// Equivalence constants `(lower, upper)` with `lower E <= V <= upper E`:
/// `1 - delta1 max{l, l/T}` and `1 + delta1 max{l, l/T} + 2 tau delta2 / xi`.
pub fn sandwich_bounds(p: &BeamParameters, w: &LyapunovWeights) -> (f64, f64) {
    let m = p.cross_term_bound();
    (
        1.0 - w.delta1 * m,
        1.0 + w.delta1 * m + 2.0 * p.delay * w.delta2 / p.xi,
    )
}

/// Number of trace samples where `V` leaves the equivalence bounds.
pub fn sandwich_violations(trace: &EnergyTrace, p: &BeamParameters, w: &LyapunovWeights) -> usize {
    let (lo, hi) = sandwich_bounds(p, w);
    trace
        .records()
        .iter()
        .filter(|r| !(lo * r.energy <= r.lyapunov && r.lyapunov <= hi * r.energy))
        .count()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitWindow {
    pub start: f64,
    pub end: f64,
}

impl FitWindow {
    /// `[max(5, 2 tau), t_f]`
    pub fn default_for(delay: f64, horizon: f64) -> Self {
        Self {
            start: (2.0 * delay).max(5.0),
            end: horizon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// Decay exponent; positive means decay.
    pub rate: f64,
    /// `exp(intercept) / E(0)`
    pub prefactor: f64,
    pub window: FitWindow,
    /// RMS deviation of `ln E` from the fitted line.
    pub residual: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayOutcome {
    Fitted(DecayFit),
    /// The energy vanished (below `1e-300`) before the window started.
    FullyDecayed,
}

pub const MIN_FIT_SAMPLES: usize = 10;
pub const ENERGY_FLOOR: f64 = 1e-300;

/// Least-squares line through `(t, ln E)` on the window. Samples after the
/// energy first drops below `1e-300` are discarded.
pub fn fit_decay(trace: &EnergyTrace, window: FitWindow) -> Result<DecayOutcome> {
    let e0 = trace.first().map(|r| r.energy).unwrap_or(0.0);
    let (times, energies): (Vec<f64>, Vec<f64>) =
        trace.records().iter().map(|r| (r.t, r.energy)).unzip();
    fit_samples(&times, &energies, e0, window)
}

/// [`fit_decay`] on raw samples; `e0` normalizes the prefactor.
pub fn fit_samples(
    times: &[f64],
    energies: &[f64],
    e0: f64,
    window: FitWindow,
) -> Result<DecayOutcome> {
    if !(window.start < window.end) {
        return Err(Error::Fit(format!(
            "empty window [{}, {}]",
            window.start, window.end
        )));
    }
    check_len("energies", times.len(), energies.len())?;
    if e0 < ENERGY_FLOOR {
        return Ok(DecayOutcome::FullyDecayed);
    }
    let mut pts = Vec::new();
    for (&t, &e) in times.iter().zip(energies) {
        if e < ENERGY_FLOOR {
            if pts.is_empty() && t <= window.end {
                return Ok(DecayOutcome::FullyDecayed);
            }
            break;
        }
        if t >= window.start && t <= window.end {
            pts.push((t, e.ln()));
        }
    }
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(Error::Fit(format!(
            "window [{}, {}] holds {} samples, need {MIN_FIT_SAMPLES}",
            window.start,
            window.end,
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let lm = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let stl: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - lm)).sum();
    let slope = stl / stt;
    let intercept = lm - slope * tm;
    let residual = (pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(DecayOutcome::Fitted(DecayFit {
        rate: -slope,
        prefactor: intercept.exp() / e0,
        window,
        residual,
        samples: pts.len(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grids(n: usize, m: usize) -> (SpaceGrid, TimeGrid) {
        (
            SpaceGrid::new(1.0, n).unwrap(),
            TimeGrid::new(1.0, m, 10.0).unwrap(),
        )
    }

    fn history_of(tg: &TimeGrid, g: &SpaceGrid, f: impl Fn(f64, f64) -> f64) -> DelayHistory {
        let slots = (0..=tg.steps_per_delay())
            .map(|k| {
                let s = -tg.delay() + k as f64 * tg.dt();
                g.sample(|x| f(x, s))
            })
            .collect();
        DelayHistory::from_slots(slots, tg, g).unwrap()
    }

    #[test]
    fn constant_fields_have_unit_energy() {
        let (g, tg) = grids(16, 8);
        let p = BeamParameters {
            xi: 1.0,
            ..BeamParameters::default()
        };
        let state = BeamState {
            t: 0.0,
            y: vec![0.0; 17],
            v: vec![1.0; 17],
        };
        let h = history_of(&tg, &g, |_, _| 1.0);
        assert_relative_eq!(
            energy(&state, &h, &p, &g, &tg).unwrap(),
            1.0,
            epsilon = 1e-14
        );
        let zero = BeamState::zeros(&g);
        let h0 = history_of(&tg, &g, |_, _| 0.0);
        assert_eq!(energy(&zero, &h0, &p, &g, &tg).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_energy_converges_to_eight_thirds() {
        // x^2 has a nonzero moment at the tip, which the ghost closure sets to
        // zero, so the bending term converges only at first order.
        let p = BeamParameters::default();
        let mut errs = Vec::new();
        for n in [64, 128, 256] {
            let g = SpaceGrid::new(1.0, n).unwrap();
            let state = BeamState {
                t: 0.0,
                y: g.sample(|x| x * x),
                v: vec![0.0; n + 1],
            };
            errs.push((beam_energy(&state, &p, &g).unwrap() - 8.0 / 3.0).abs());
        }
        assert!(errs[2] < 5e-3);
        let order = (errs[0] / errs[2]).log2() / 2.0;
        assert!(order > 0.95, "{errs:?}");
    }

    #[test]
    fn moment_free_energy_converges_at_second_order() {
        // y = x^2 (6 - 4x + x^2): y'' = 12 (1 - x)^2 vanishes at the tip.
        let p = BeamParameters::default();
        let exact = {
            let bending = 144.0 / 5.0;
            // (12x - 12x^2 + 4x^3)^2 integrated over [0, 1]
            let stretch = {
                144.0 / 3.0 - 2.0 * 144.0 / 4.0 + (144.0 + 96.0) / 5.0 - 96.0 / 6.0 + 16.0 / 7.0
            };
            0.5 * (bending + p.tension * stretch)
        };
        let mut errs = Vec::new();
        for n in [64, 128, 256] {
            let g = SpaceGrid::new(1.0, n).unwrap();
            let state = BeamState {
                t: 0.0,
                y: g.sample(|x| x * x * (6.0 - 4.0 * x + x * x)),
                v: vec![0.0; n + 1],
            };
            errs.push((beam_energy(&state, &p, &g).unwrap() - exact).abs());
        }
        let order = (errs[0] / errs[2]).log2() / 2.0;
        assert!(order > 1.9, "{errs:?}");
    }

    #[test]
    fn i1_examples() {
        let g = SpaceGrid::new(1.0, 128).unwrap();
        let still = BeamState {
            t: 0.0,
            y: g.sample(|x| x * x),
            v: vec![0.0; 129],
        };
        assert_eq!(functional_i1(&still, &g).unwrap(), 0.0);
        let moving = BeamState {
            v: vec![1.0; 129],
            ..still
        };
        assert_relative_eq!(
            functional_i1(&moving, &g).unwrap(),
            2.0 / 3.0,
            epsilon = 1e-4
        );
    }

    #[test]
    fn i2_examples() {
        let g = SpaceGrid::new(1.0, 8).unwrap();
        let mut prev = f64::INFINITY;
        for m in [16, 32, 64] {
            let tg = TimeGrid::new(1.0, m, 1.0).unwrap();
            let ones = history_of(&tg, &g, |_, _| 1.0);
            let err = (functional_i2(&ones, &g, &tg).unwrap() - (1.0 - (-1.0f64).exp())).abs();
            assert!(err < prev / 3.5 && err < 1e-3);
            prev = err;
            let decaying = history_of(&tg, &g, |_, s| s.exp());
            let expect = (1.0 - (-3.0f64).exp()) / 3.0;
            assert!((functional_i2(&decaying, &g, &tg).unwrap() - expect).abs() < 2e-3);
        }
        let tg = TimeGrid::new(1.0, 8, 1.0).unwrap();
        assert_eq!(
            functional_i2(&history_of(&tg, &g, |_, _| 0.0), &g, &tg).unwrap(),
            0.0
        );
    }

    #[test]
    fn lyapunov_equals_energy_without_motion() {
        let (g, tg) = grids(32, 8);
        let p = BeamParameters {
            tension: 2.0,
            ..BeamParameters::default()
        };
        let w = crate::model::default_weights(&p).unwrap();
        let state = BeamState {
            t: 0.0,
            y: g.sample(|x| x * x * (1.0 - x)),
            v: vec![0.0; 33],
        };
        let h = history_of(&tg, &g, |_, _| 0.0);
        assert_eq!(
            lyapunov(&state, &h, &p, &g, &tg, &w).unwrap(),
            energy(&state, &h, &p, &g, &tg).unwrap()
        );
        let too_big = LyapunovWeights { delta1: 1.0, ..w };
        assert!(lyapunov(&state, &h, &p, &g, &tg, &too_big).is_err());
    }

    #[test]
    fn synthetic_fits() {
        let t: Vec<f64> = (0..60).map(|k| k as f64 * 0.5).collect();
        let e: Vec<f64> = t.iter().map(|t| 3.0 * (-0.7 * t).exp()).collect();
        let w = FitWindow {
            start: 5.0,
            end: 29.5,
        };
        let DecayOutcome::Fitted(fit) = fit_samples(&t, &e, e[0], w).unwrap() else {
            panic!("expected a fit")
        };
        assert_relative_eq!(fit.rate, 0.7, epsilon = 1e-12);
        assert_relative_eq!(fit.prefactor, 1.0, epsilon = 1e-10);
        assert!(fit.residual < 1e-12);

        let flat = vec![2.0; 60];
        let DecayOutcome::Fitted(fit) = fit_samples(&t, &flat, 2.0, w).unwrap() else {
            panic!("expected a fit")
        };
        assert!(fit.rate.abs() < 1e-14);

        let zeros = vec![0.0; 60];
        assert_eq!(
            fit_samples(&t, &zeros, 0.0, w).unwrap(),
            DecayOutcome::FullyDecayed
        );
        let short = FitWindow {
            start: 5.0,
            end: 8.0,
        };
        assert!(fit_samples(&t, &e, e[0], short).is_err());
    }
}
