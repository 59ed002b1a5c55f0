//! Shared domain types: physical parameters, Lyapunov weights, grids,
//! state fields, the delay history buffer and trace records.

use std::collections::VecDeque;

use crate::error::{check_len, Error, Result};

/// Physical and control constants of the delayed beam
///
/// `y_tt + y_xxxx - T y_xx + alpha y_t(x, t - tau) = 0` on `(0, length)`,
/// clamped at `x = 0`, with shear feedback `y_xxx - T y_x = gain * y_t` at
/// the free end. `xi` weights the history term of the energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamParameters {
    pub length: f64,
    pub tension: f64,
    pub gain: f64,
    pub alpha: f64,
    pub delay: f64,
    pub xi: f64,
}

impl Default for BeamParameters {
    fn default() -> Self {
        Self {
            length: 1.0,
            tension: 1.0,
            gain: 1.0,
            alpha: 0.1,
            delay: 1.0,
            xi: 0.2,
        }
    }
}

impl BeamParameters {
    /// `3 / l^2`, the tension bound below which the stability analysis applies.
    pub fn critical_tension(&self) -> f64 {
        3.0 / (self.length * self.length)
    }

    pub fn tension_subcritical(&self) -> bool {
        self.tension < self.critical_tension()
    }

    /// `3 - T l^2`
    pub fn tension_margin(&self) -> f64 {
        3.0 - self.tension * self.length * self.length
    }

    /// `max{l, l/T}`, the constant bounding `|I1|` by the energy.
    pub fn cross_term_bound(&self) -> f64 {
        self.length.max(self.length / self.tension)
    }

    pub fn with_alpha_xi(mut self, alpha: f64, xi: f64) -> Self {
        self.alpha = alpha;
        self.xi = xi;
        self
    }

    pub fn validate(&self) -> ValidationReport {
        validate_parameters(self)
    }

    /// Errors unless `T < 3/l^2`.
    pub fn require_subcritical(&self) -> Result<()> {
        if self.tension > 0.0 && self.tension_subcritical() {
            Ok(())
        } else {
            Err(Error::SupercriticalTension {
                tension: self.tension,
                limit: self.critical_tension(),
            })
        }
    }
}

/// Outcome of [`validate_parameters`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    /// Violated constraints, e.g. `"κ > 0"`.
    pub violations: Vec<String>,
    /// `T < 3/l^2`. Reported as a warning only: simulation is legal for
    /// any `T > 0`, the stability region needs it.
    pub tension_subcritical: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn warnings(&self) -> Vec<String> {
        if self.tension_subcritical {
            Vec::new()
        } else {
            vec!["T < 3/ℓ² does not hold; stability-region results do not apply".to_string()]
        }
    }
}

pub fn validate_parameters(p: &BeamParameters) -> ValidationReport {
    let mut violations = Vec::new();
    let mut positive = |value: f64, label: &str| {
        if !(value.is_finite() && value > 0.0) {
            violations.push(format!("{label} > 0"));
        }
    };
    positive(p.length, "ℓ");
    positive(p.tension, "T");
    positive(p.gain, "κ");
    positive(p.delay, "τ");
    positive(p.xi, "ξ");
    if !p.alpha.is_finite() {
        violations.push("α finite".to_string());
    }
    ValidationReport {
        violations,
        tension_subcritical: p.tension_subcritical(),
    }
}

/// Auxiliary constants of the Lyapunov analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovWeights {
    pub delta1: f64,
    pub delta2: f64,
    pub eps1: f64,
    pub eps2: f64,
}

impl LyapunovWeights {
    /// Weights `delta1`, `delta2` with the standard Young constants
    /// `eps1 = T/2`, `eps2 = (3 - T l^2) / (2 l)`.
    pub fn with_deltas(p: &BeamParameters, delta1: f64, delta2: f64) -> Self {
        Self {
            delta1,
            delta2,
            eps1: p.tension / 2.0,
            eps2: p.tension_margin() / (2.0 * p.length),
        }
    }

    /// Checks `delta1 <= kappa (l/2 + kappa^2 l^3 / (3 - T l^2))^-1` and
    /// `0 < delta2 < delta1 / 2`.
    pub fn check_admissible(&self, p: &BeamParameters) -> Result<()> {
        p.require_subcritical()?;
        let fields = [self.delta1, self.delta2, self.eps1, self.eps2];
        if fields.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InadmissibleWeights(format!(
                "all weights must be positive and finite, got {self:?}"
            )));
        }
        let bound = feedback_weight_bound(p);
        if self.delta1 > bound {
            return Err(Error::InadmissibleWeights(format!(
                "δ₁ = {} exceeds κ(ℓ/2 + κ²ℓ³/(3 − Tℓ²))⁻¹ = {}",
                self.delta1, bound
            )));
        }
        if self.delta2 >= self.delta1 / 2.0 {
            return Err(Error::InadmissibleWeights(format!(
                "δ₂ = {} is not below δ₁/2 = {}",
                self.delta2,
                self.delta1 / 2.0
            )));
        }
        Ok(())
    }

    /// [`Self::check_admissible`] plus `delta1 < 1 / max{l, l/T}`, which
    /// keeps the lower equivalence constant strictly positive.
    pub fn check_sandwich(&self, p: &BeamParameters) -> Result<()> {
        self.check_admissible(p)?;
        let limit = 1.0 / p.cross_term_bound();
        if self.delta1 >= limit {
            return Err(Error::InadmissibleWeights(format!(
                "δ₁ = {} is not below (max{{ℓ, ℓ/T}})⁻¹ = {}",
                self.delta1, limit
            )));
        }
        Ok(())
    }
}

/// `kappa (l/2 + kappa^2 l^3 / (3 - T l^2))^-1`
pub fn feedback_weight_bound(p: &BeamParameters) -> f64 {
    let l = p.length;
    let k = p.gain;
    k / (l / 2.0 + k * k * l * l * l / p.tension_margin())
}

/// The closed-form weight choice
/// `delta1 = min{(max{l, l/T})^-1, kappa (l/2 + kappa^2 l^3/(3 - T l^2))^-1}`,
/// `delta2 = delta1 / 4`, `eps1 = T/2`, `eps2 = (3 - T l^2)/(2 l)`.
pub fn default_weights(p: &BeamParameters) -> Result<LyapunovWeights> {
    p.require_subcritical()?;
    let delta1 = (1.0 / p.cross_term_bound()).min(feedback_weight_bound(p));
    Ok(LyapunovWeights::with_deltas(p, delta1, delta1 / 4.0))
}

/// Weights used when the Lyapunov functional must be strictly equivalent to
/// the energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightSelection {
    pub weights: LyapunovWeights,
    /// `delta1` hit `1 / max{l, l/T}` and was multiplied by 0.99.
    pub shrunk: bool,
}

pub const SANDWICH_SHRINK: f64 = 0.99;

/// [`default_weights`], with `delta1` shrunk by 0.99 when the closed-form
/// minimum lands on `1 / max{l, l/T}` (and `delta2 = delta1 / 4` recomputed).
pub fn sandwich_weights(p: &BeamParameters) -> Result<WeightSelection> {
    let w = default_weights(p)?;
    if w.delta1 >= 1.0 / p.cross_term_bound() {
        let delta1 = w.delta1 * SANDWICH_SHRINK;
        Ok(WeightSelection {
            weights: LyapunovWeights::with_deltas(p, delta1, delta1 / 4.0),
            shrunk: true,
        })
    } else {
        Ok(WeightSelection {
            weights: w,
            shrunk: false,
        })
    }
}

/// Uniform spatial grid `x_j = j dx`, `j = 0..=n_cells`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceGrid {
    n_cells: usize,
    dx: f64,
    nodes: Vec<f64>,
}

pub const MIN_CELLS: usize = 8;

impl SpaceGrid {
    pub fn new(length: f64, n_cells: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "length must be positive, got {length}"
            )));
        }
        if n_cells < MIN_CELLS {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_CELLS} cells, got {n_cells}"
            )));
        }
        let dx = length / n_cells as f64;
        let mut nodes: Vec<f64> = (0..=n_cells).map(|j| j as f64 * dx).collect();
        nodes[n_cells] = length;
        Ok(Self { n_cells, dx, nodes })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn length(&self) -> f64 {
        self.nodes[self.n_cells]
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&x| f(x)).collect()
    }

    /// Composite trapezoid weights.
    pub fn trapezoid_weight(&self, j: usize) -> f64 {
        if j == 0 || j == self.n_cells {
            0.5 * self.dx
        } else {
            self.dx
        }
    }
}

/// Time grid tied to the delay: `dt = tau / steps_per_delay` exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    delay: f64,
    steps_per_delay: usize,
    dt: f64,
    horizon: f64,
}

pub const MIN_STEPS_PER_DELAY: usize = 4;

impl TimeGrid {
    pub fn new(delay: f64, steps_per_delay: usize, horizon: f64) -> Result<Self> {
        if !(delay.is_finite() && delay > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "delay must be positive, got {delay}"
            )));
        }
        if steps_per_delay < MIN_STEPS_PER_DELAY {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_STEPS_PER_DELAY} steps per delay, got {steps_per_delay}"
            )));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        Ok(Self {
            delay,
            steps_per_delay,
            dt: delay / steps_per_delay as f64,
            horizon,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    pub fn steps_per_delay(&self) -> usize {
        self.steps_per_delay
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of steps needed to reach the horizon (rounded to the nearest step).
    pub fn n_steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    pub fn time(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }
}

/// Displacement and velocity on the grid at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamState {
    pub t: f64,
    pub y: Vec<f64>,
    pub v: Vec<f64>,
}

impl BeamState {
    pub fn zeros(grid: &SpaceGrid) -> Self {
        Self {
            t: 0.0,
            y: vec![0.0; grid.n_nodes()],
            v: vec![0.0; grid.n_nodes()],
        }
    }

    pub fn check_dims(&self, grid: &SpaceGrid) -> Result<()> {
        check_len("displacement", grid.n_nodes(), self.y.len())?;
        check_len("velocity", grid.n_nodes(), self.v.len())
    }

    pub fn tip_velocity(&self) -> f64 {
        *self.v.last().expect("non-empty state")
    }
}

/// Ring buffer of past velocity fields, oldest first, covering
/// `t - tau, t - tau + dt, ..., t`. Slot `s` of the transport variable
/// `u(x, s, t) = y_t(x, t - s tau)` corresponds to buffer index `M - s M`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayHistory {
    slots: VecDeque<Vec<f64>>,
}

impl DelayHistory {
    /// `slots` must hold `steps_per_delay + 1` fields of equal length,
    /// ordered oldest to newest.
    pub fn from_slots(slots: Vec<Vec<f64>>, tg: &TimeGrid, grid: &SpaceGrid) -> Result<Self> {
        check_len("history slots", tg.steps_per_delay() + 1, slots.len())?;
        for slot in &slots {
            check_len("history slot", grid.n_nodes(), slot.len())?;
        }
        Ok(Self {
            slots: slots.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// `y_t(., t - tau)`
    pub fn oldest(&self) -> &[f64] {
        &self.slots[0]
    }

    /// `y_t(., t)`
    pub fn newest(&self) -> &[f64] {
        &self.slots[self.slots.len() - 1]
    }

    /// Slot `k` holds the velocity at `t - tau + k dt`.
    pub fn slot(&self, k: usize) -> &[f64] {
        &self.slots[k]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.slots.iter().map(|s| s.as_slice())
    }

    /// Drops the oldest field and appends `newest`, reusing its allocation.
    pub fn push(&mut self, newest: &[f64]) {
        let mut recycled = self.slots.pop_front().expect("non-empty history");
        recycled.copy_from_slice(newest);
        self.slots.push_back(recycled);
    }
}

/// Quantities entering the exact energy balance at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BalanceTerms {
    /// `int v(x,t)^2 dx`
    pub kinetic: f64,
    /// `int v(x,t-tau)^2 dx`
    pub delayed: f64,
    /// `int v(x,t-tau) v(x,t) dx`
    pub cross: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    /// Full energy including the history term.
    pub energy: f64,
    /// Kinetic, bending and tension part of the energy.
    pub beam_energy: f64,
    pub i1: f64,
    pub i2: f64,
    pub lyapunov: f64,
    pub tip_velocity: f64,
    pub balance: BalanceTerms,
}

/// Time series of sampled functionals.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTrace {
    stride: usize,
    dt: f64,
    records: Vec<TraceRecord>,
}

impl EnergyTrace {
    pub fn new(stride: usize, dt: f64) -> Result<Self> {
        if stride == 0 {
            return Err(Error::Trace("stride must be at least 1".into()));
        }
        Ok(Self {
            stride,
            dt,
            records: Vec::new(),
        })
    }

    pub fn push(&mut self, record: TraceRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if record.t <= last.t {
                return Err(Error::Trace(format!(
                    "timestamps must increase: {} after {}",
                    record.t, last.t
                )));
            }
        }
        if !(record.energy >= 0.0) {
            return Err(Error::Trace(format!(
                "negative or undefined energy {} at t = {}",
                record.energy, record.t
            )));
        }
        self.records.push(record);
        Ok(())
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    /// Time between consecutive records.
    pub fn sample_interval(&self) -> f64 {
        self.dt * self.stride as f64
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn first(&self) -> Option<&TraceRecord> {
        self.records.first()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }
}

/// Sampled `(alpha, xi)` plane annotated with stability-region membership.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSample {
    pub alpha_values: Vec<f64>,
    pub xi_values: Vec<f64>,
    /// `membership[i][j]` refers to `(alpha_values[i], xi_values[j])`.
    pub membership: Vec<Vec<bool>>,
    pub nu: Vec<Vec<Option<f64>>>,
    pub linear_boundary: Vec<(f64, f64)>,
    pub quadratic_boundary: Vec<(f64, f64)>,
}

impl RegionSample {
    pub fn member_count(&self) -> usize {
        self.membership.iter().flatten().filter(|m| **m).count()
    }
}
