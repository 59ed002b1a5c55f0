//! Time stepping of the delayed beam.
//!
//! Crank-Nicolson in `(y, v)` for the spatial operator and the tip
//! feedback, with the delayed velocity averaged between the two buffer
//! slots that bracket the step. Eliminating `y^{n+1}` leaves
//!
//! `S v^{n+1} = v^n - dt A (y^n + dt/4 v^n) - dt/2 b v^n_N e_N - dt/2 alpha (d^n + d^{n+1})`
//!
//! with `S = I + dt^2/4 A + dt/2 b e_N e_N^T`, which depends only on the
//! operator and the step. It is factorized once and can be shared between
//! runs that differ in `alpha` or `xi`.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::discretization::{assemble, SpatialOperator};
use crate::error::{check_len, Error, Result};
use crate::functionals::trace_record;
use crate::linalg::{BandedLu, BandedMatrix};
use crate::model::{
    BeamParameters, BeamState, DelayHistory, EnergyTrace, LyapunovWeights, SpaceGrid, TimeGrid,
};

pub const SCHEME: &str = "CN-AB-delay";

/// Default tolerance factor for `|f0(., 0-) - y1|_inf <= tol (1 + |y1|_inf)`.
pub const HISTORY_TOLERANCE: f64 = 1e-8;

pub type HistoryFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Velocity history on `s in [-tau, 0]`.
#[derive(Clone)]
pub enum History {
    /// `f0(x, s) = y1(x)` for every `s`.
    MatchVelocity,
    /// `f0(x, s)` evaluated on the node and buffer times.
    Function(HistoryFn),
    /// `M + 1` fields at `s = -tau, -tau + dt, ..., 0`.
    Table(Vec<Vec<f64>>),
}

impl std::fmt::Debug for History {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            History::MatchVelocity => write!(f, "MatchVelocity"),
            History::Function(_) => write!(f, "Function(..)"),
            History::Table(t) => write!(f, "Table({} slots)", t.len()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct InitialData {
    pub y0: Vec<f64>,
    pub y1: Vec<f64>,
    pub history: History,
    /// Accept a history whose value at `s = 0` disagrees with `y1`.
    pub allow_incompatible: bool,
}

impl InitialData {
    pub fn zero(g: &SpaceGrid) -> Self {
        Self {
            y0: vec![0.0; g.n_nodes()],
            y1: vec![0.0; g.n_nodes()],
            history: History::MatchVelocity,
            allow_incompatible: false,
        }
    }

    /// `y0 = 0`, `y1 = x^2`, constant history equal to `y1`.
    pub fn quadratic_velocity(g: &SpaceGrid) -> Self {
        Self {
            y0: vec![0.0; g.n_nodes()],
            y1: g.sample(|x| x * x),
            history: History::MatchVelocity,
            allow_incompatible: false,
        }
    }

    /// Beam at rest with the history `phi(x) chi(s)`, where `chi` is a smooth
    /// bump vanishing to all orders at `s = -tau` and `s = 0`, and
    /// `phi = sum_m c_m (1 - cos((2m - 1) pi x / (2 l)))`.
    ///
    /// All data are smooth in time, so the solution stays in the resolved
    /// low modes and refinement studies see the scheme's design order.
    pub fn smooth_pulse(g: &SpaceGrid, delay: f64, coefficients: &[f64]) -> Self {
        let length = g.length();
        let c = coefficients.to_vec();
        let f0 = move |x: f64, s: f64| {
            let phi: f64 = c
                .iter()
                .enumerate()
                .map(|(m, cm)| {
                    let k = (2 * m + 1) as f64 * PI / (2.0 * length);
                    cm * (1.0 - (k * x).cos())
                })
                .sum();
            phi * bump(s, delay)
        };
        Self {
            y0: vec![0.0; g.n_nodes()],
            y1: vec![0.0; g.n_nodes()],
            history: History::Function(Arc::new(f0)),
            allow_incompatible: false,
        }
    }
}

/// `exp(1 - 1/(1 - r^2))` with `r = 2s/tau + 1`, zero outside `(-tau, 0)`.
fn bump(s: f64, delay: f64) -> f64 {
    let r = 2.0 * s / delay + 1.0;
    if r.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r * r)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub time: TimeGrid,
    pub stride: usize,
}

impl StepperConfig {
    pub fn new(time: TimeGrid, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::InvalidParameter(
                "trace stride must be at least 1".into(),
            ));
        }
        Ok(Self { time, stride })
    }

    pub fn scheme(&self) -> &'static str {
        SCHEME
    }
}

fn check_simulation_parameters(p: &BeamParameters, tg: &TimeGrid) -> Result<()> {
    let finite = [p.length, p.tension, p.gain, p.alpha, p.delay, p.xi]
        .iter()
        .all(|v| v.is_finite());
    if !finite {
        return Err(Error::InvalidParameter("parameters must be finite".into()));
    }
    if p.length <= 0.0 || p.delay <= 0.0 {
        return Err(Error::InvalidParameter(
            "length and delay must be positive".into(),
        ));
    }
    if p.tension < 0.0 || p.gain < 0.0 || p.xi < 0.0 {
        return Err(Error::InvalidParameter(
            "tension, gain and xi must be non-negative".into(),
        ));
    }
    if (tg.delay() - p.delay).abs() > 1e-14 * p.delay {
        return Err(Error::InvalidGrid(format!(
            "time grid delay {} differs from beam delay {}",
            tg.delay(),
            p.delay
        )));
    }
    Ok(())
}

/// Sets up the state at `t = 0` and the history buffer covering `[-tau, 0]`.
pub fn initialize(
    p: &BeamParameters,
    g: &SpaceGrid,
    tg: &TimeGrid,
    init: &InitialData,
) -> Result<(BeamState, DelayHistory)> {
    check_simulation_parameters(p, tg)?;
    let n = g.n_nodes();
    check_len("initial displacement", n, init.y0.len())?;
    check_len("initial velocity", n, init.y1.len())?;
    let scale = init
        .y0
        .iter()
        .chain(&init.y1)
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if init.y0[0].abs() > 1e-12 * (1.0 + scale) || init.y1[0].abs() > 1e-12 * (1.0 + scale) {
        return Err(Error::UnclampedInitialData(format!(
            "clamped end needs y0(0) = y1(0) = 0, got {} and {}",
            init.y0[0], init.y1[0]
        )));
    }
    let m = tg.steps_per_delay();
    let mut slots: Vec<Vec<f64>> = match &init.history {
        History::MatchVelocity => vec![init.y1.clone(); m + 1],
        History::Function(f0) => (0..=m)
            .map(|k| {
                let s = if k == m {
                    0.0
                } else {
                    -tg.delay() + k as f64 * tg.dt()
                };
                g.nodes().iter().map(|&x| f0(x, s)).collect()
            })
            .collect(),
        History::Table(t) => t.clone(),
    };
    check_len("history slots", m + 1, slots.len())?;
    for slot in &slots {
        check_len("history slot", n, slot.len())?;
    }
    let y1_norm = init.y1.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let deviation = slots[m]
        .iter()
        .zip(&init.y1)
        .fold(0.0f64, |a, (h, v)| a.max((h - v).abs()));
    let tolerance = HISTORY_TOLERANCE * (1.0 + y1_norm);
    if !(deviation <= tolerance) && !init.allow_incompatible {
        return Err(Error::IncompatibleHistory {
            deviation,
            tolerance,
        });
    }
    // Continuity u(x, 0, t) = y_t(x, t): the newest slot is the velocity.
    slots[m].copy_from_slice(&init.y1);
    let history = DelayHistory::from_slots(slots, tg, g)?;
    let mut y = init.y0.clone();
    let mut v = init.y1.clone();
    y[0] = 0.0;
    v[0] = 0.0;
    Ok((BeamState { t: 0.0, y, v }, history))
}

#[derive(Debug)]
struct Factorized {
    op: SpatialOperator,
    system: BandedLu,
    dt: f64,
    tension: f64,
    gain: f64,
    length: f64,
    delay: f64,
    steps_per_delay: usize,
    n_nodes: usize,
}

/// One-step map for fixed `(l, T, kappa, tau, N, M)`. Cloning is cheap and
/// shares the factorization.
#[derive(Debug, Clone)]
pub struct Propagator {
    shared: Arc<Factorized>,
    params: BeamParameters,
}

fn implicit_matrix(op: &SpatialOperator, dt: f64) -> BandedMatrix {
    let a = op.matrix();
    let n = a.n();
    let mut s = BandedMatrix::identity(n, a.lower_bandwidth(), a.upper_bandwidth())
        .add_scaled(0.25 * dt * dt, a);
    s.add(n - 1, n - 1, 0.5 * dt * op.b_tip());
    s
}

impl Propagator {
    pub fn new(p: &BeamParameters, g: &SpaceGrid, tg: &TimeGrid) -> Result<Self> {
        check_simulation_parameters(p, tg)?;
        let op = assemble(p, g)?;
        let system = implicit_matrix(&op, tg.dt()).factorize()?;
        Ok(Self {
            shared: Arc::new(Factorized {
                system,
                dt: tg.dt(),
                tension: p.tension,
                gain: p.gain,
                length: p.length,
                delay: p.delay,
                steps_per_delay: tg.steps_per_delay(),
                n_nodes: g.n_nodes(),
                op,
            }),
            params: *p,
        })
    }

    /// Same factorization with a different delay coefficient and history
    /// weight. Any other parameter change is rejected.
    pub fn with_parameters(&self, p: &BeamParameters) -> Result<Self> {
        let f = &self.shared;
        let same = p.length == f.length
            && p.tension == f.tension
            && p.gain == f.gain
            && p.delay == f.delay;
        if !same {
            return Err(Error::InvalidParameter(
                "only alpha and xi may change when reusing a factorization".into(),
            ));
        }
        if !(p.alpha.is_finite() && p.xi.is_finite() && p.xi >= 0.0) {
            return Err(Error::InvalidParameter(
                "alpha and xi must be finite, xi >= 0".into(),
            ));
        }
        Ok(Self {
            shared: Arc::clone(&self.shared),
            params: *p,
        })
    }

    pub fn parameters(&self) -> &BeamParameters {
        &self.params
    }

    pub fn operator(&self) -> &SpatialOperator {
        &self.shared.op
    }

    pub fn shares_factorization_with(&self, other: &Propagator) -> bool {
        Arc::ptr_eq(&self.shared, &other.shared)
    }

    /// Advances one step. `scratch` must have the field length. On a
    /// non-finite result the state is left partially updated.
    pub fn step(
        &self,
        state: &mut BeamState,
        history: &mut DelayHistory,
        scratch: &mut Vec<f64>,
    ) -> Result<()> {
        let f = &*self.shared;
        let n = f.n_nodes;
        let dt = f.dt;
        let alpha = self.params.alpha;
        scratch.resize(n, 0.0);
        for j in 0..n {
            scratch[j] = state.y[j] + 0.25 * dt * state.v[j];
        }
        let mut rhs = vec![0.0; n];
        f.op.apply_into(scratch, &mut rhs);
        let d_now = history.slot(0);
        let d_next = history.slot(1);
        for j in 0..n {
            rhs[j] = state.v[j] - dt * rhs[j] - 0.5 * dt * alpha * (d_now[j] + d_next[j]);
        }
        rhs[n - 1] -= 0.5 * dt * f.op.b_tip() * state.v[n - 1];
        rhs[0] = 0.0;
        f.system.solve_in_place(&mut rhs);

        let k = (state.t / dt).round() as usize + 1;
        let mut finite = true;
        for j in 0..n {
            state.y[j] += 0.5 * dt * (rhs[j] + state.v[j]);
            finite &= state.y[j].is_finite() && rhs[j].is_finite();
        }
        state.v.copy_from_slice(&rhs);
        state.t = k as f64 * dt;
        if !finite {
            return Err(Error::NonFinite { step: k });
        }
        history.push(&state.v);
        Ok(())
    }

    /// Steps to the horizon, recording every `stride` steps (and at `t = 0`).
    pub fn run(
        &self,
        g: &SpaceGrid,
        cfg: &StepperConfig,
        init: &InitialData,
        weights: Option<&LyapunovWeights>,
    ) -> Result<EnergyTrace> {
        Ok(self.run_with_state(g, cfg, init, weights)?.0)
    }

    /// [`Self::run`], also returning the final state and history.
    pub fn run_with_state(
        &self,
        g: &SpaceGrid,
        cfg: &StepperConfig,
        init: &InitialData,
        weights: Option<&LyapunovWeights>,
    ) -> Result<(EnergyTrace, BeamState, DelayHistory)> {
        let tg = &cfg.time;
        let f = &*self.shared;
        if tg.dt() != f.dt || tg.steps_per_delay() != f.steps_per_delay || g.n_nodes() != f.n_nodes
        {
            return Err(Error::InvalidGrid(
                "grids differ from the factorized ones".into(),
            ));
        }
        let p = &self.params;
        if let Some(w) = weights {
            w.check_sandwich(p)?;
        }
        let (mut state, mut history) = initialize(p, g, tg, init)?;
        let mut trace = EnergyTrace::new(cfg.stride, tg.dt())?;
        trace.push(trace_record(&state, &history, p, g, tg, weights)?)?;
        let mut scratch = Vec::with_capacity(g.n_nodes());
        for k in 1..=tg.n_steps() {
            self.step(&mut state, &mut history, &mut scratch)?;
            if k % cfg.stride == 0 {
                trace.push(trace_record(&state, &history, p, g, tg, weights)?)?;
            }
        }
        Ok((trace, state, history))
    }
}

/// Single step with a freshly factorized system.
pub fn step(
    state: &mut BeamState,
    history: &mut DelayHistory,
    p: &BeamParameters,
    g: &SpaceGrid,
    tg: &TimeGrid,
) -> Result<()> {
    let prop = Propagator::new(p, g, tg)?;
    prop.step(state, history, &mut Vec::new())
}

/// Integrates to the horizon and samples every functional along the way.
/// `weights = None` records `V = E`.
pub fn run(
    p: &BeamParameters,
    g: &SpaceGrid,
    cfg: &StepperConfig,
    init: &InitialData,
    weights: Option<&LyapunovWeights>,
) -> Result<EnergyTrace> {
    Propagator::new(p, g, &cfg.time)?.run(g, cfg, init, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(n: usize, m: usize, horizon: f64) -> (SpaceGrid, TimeGrid) {
        (
            SpaceGrid::new(1.0, n).unwrap(),
            TimeGrid::new(1.0, m, horizon).unwrap(),
        )
    }

    #[test]
    fn initialize_examples() {
        let p = BeamParameters::default();
        let (g, tg) = setup(16, 8, 1.0);
        let (s, h) = initialize(&p, &g, &tg, &InitialData::zero(&g)).unwrap();
        assert!(s.y.iter().chain(&s.v).all(|v| *v == 0.0));
        assert!(h.iter().flatten().all(|v| *v == 0.0));

        let (_, h) = initialize(&p, &g, &tg, &InitialData::quadratic_velocity(&g)).unwrap();
        let xx = g.sample(|x| x * x);
        assert!(h.iter().all(|slot| slot == xx.as_slice()));

        let init = InitialData {
            history: History::Function(Arc::new(|x, s| x * x * s.exp())),
            ..InitialData::quadratic_velocity(&g)
        };
        let (_, h) = initialize(&p, &g, &tg, &init).unwrap();
        for k in 0..8 {
            let s = -1.0 + k as f64 * tg.dt();
            for (j, x) in g.nodes().iter().enumerate() {
                assert!((h.slot(k)[j] - x * x * s.exp()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn incompatible_history_is_rejected_unless_allowed() {
        let p = BeamParameters::default();
        let (g, tg) = setup(16, 8, 1.0);
        let mut init = InitialData {
            history: History::Function(Arc::new(|x, _| x)),
            ..InitialData::quadratic_velocity(&g)
        };
        assert!(matches!(
            initialize(&p, &g, &tg, &init),
            Err(Error::IncompatibleHistory { .. })
        ));
        init.allow_incompatible = true;
        let (s, h) = initialize(&p, &g, &tg, &init).unwrap();
        assert_eq!(h.newest(), s.v.as_slice());
    }

    #[test]
    fn unclamped_data_is_rejected() {
        let p = BeamParameters::default();
        let (g, tg) = setup(16, 8, 1.0);
        let init = InitialData {
            y0: vec![1.0; 17],
            ..InitialData::zero(&g)
        };
        assert!(matches!(
            initialize(&p, &g, &tg, &init),
            Err(Error::UnclampedInitialData(_))
        ));
    }

    #[test]
    fn zero_data_stays_zero() {
        let p = BeamParameters::default();
        let (g, tg) = setup(16, 8, 2.0);
        let cfg = StepperConfig::new(tg, 1).unwrap();
        let trace = run(&p, &g, &cfg, &InitialData::zero(&g), None).unwrap();
        assert_eq!(trace.len(), tg.n_steps() + 1);
        assert!(trace
            .records()
            .iter()
            .all(|r| r.energy == 0.0 && r.lyapunov == 0.0));
    }

    #[test]
    fn delayed_velocity_is_the_stored_field_from_m_steps_back() {
        let p = BeamParameters::default();
        let (g, tg) = setup(16, 4, 3.0);
        let prop = Propagator::new(&p, &g, &tg).unwrap();
        let (mut s, mut h) = initialize(&p, &g, &tg, &InitialData::quadratic_velocity(&g)).unwrap();
        let mut past = vec![s.v.clone()];
        let mut scratch = Vec::new();
        for k in 1..=12 {
            prop.step(&mut s, &mut h, &mut scratch).unwrap();
            past.push(s.v.clone());
            assert_eq!(h.len(), 5);
            assert_eq!(h.newest(), s.v.as_slice());
            if k >= 4 {
                assert_eq!(h.oldest(), past[k - 4].as_slice());
            }
        }
        assert_eq!(s.t, 12.0 * tg.dt());
    }

    #[test]
    fn blow_up_reports_step() {
        let p = BeamParameters {
            alpha: f64::MAX,
            ..BeamParameters::default()
        };
        let (g, tg) = setup(16, 4, 10.0);
        let cfg = StepperConfig::new(tg, 1).unwrap();
        let err = run(&p, &g, &cfg, &InitialData::quadratic_velocity(&g), None).unwrap_err();
        assert!(matches!(err, Error::NonFinite { step } if step >= 1));
    }

    #[test]
    fn factorization_is_shared_across_alpha_xi() {
        let p = BeamParameters::default();
        let (g, tg) = setup(16, 4, 1.0);
        let a = Propagator::new(&p, &g, &tg).unwrap();
        let b = a.with_parameters(&p.with_alpha_xi(-0.3, 0.05)).unwrap();
        assert!(a.shares_factorization_with(&b));
        let c = BeamParameters { gain: 2.0, ..p };
        assert!(a.with_parameters(&c).is_err());
    }
}
