//! Closed-form stability certificates in the `(alpha, xi)` plane.

use crate::error::{Error, Result};
use crate::model::{default_weights, BeamParameters, LyapunovWeights, RegionSample};

/// The four bracketed coefficients of the Lyapunov derivative bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipationCoefficients {
    /// Multiplies `v(l)^2`: `-kappa + delta1 (l/2 + kappa^2 l^3 / (3 - T l^2))`.
    pub tip: f64,
    /// Multiplies `int v^2`: `delta2 - delta1/2 + (|alpha| + xi)/2`.
    pub kinetic: f64,
    /// Multiplies `int y_xx^2`: `-(3 - T l^2)/4`.
    pub bending: f64,
    /// Multiplies `int v(t - tau)^2`:
    /// `-(e^{-tau} delta2 - delta1 alpha^2 l^2 / T - (|alpha| - xi)/2)`.
    pub delayed: f64,
}

/// Lower and upper equivalence constants between `V` and `E`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceConstants {
    /// `1 - delta1 m + 2 delta2 / xi`, `m = max{l, l/T}`. Not a valid bound
    /// in general since `I2 >= 0`; reported for reference.
    pub gamma1_nominal: f64,
    /// `1 - delta1 m`
    pub gamma1_safe: f64,
    /// `1 + delta1 m + 2 delta2 / xi`
    pub gamma2_nominal: f64,
    /// `1 + delta1 m + 2 tau delta2 / xi`
    pub gamma2_safe: f64,
}

impl EquivalenceConstants {
    pub fn new(p: &BeamParameters, w: &LyapunovWeights, xi: f64) -> Self {
        let m = p.cross_term_bound();
        Self {
            gamma1_nominal: 1.0 - w.delta1 * m + 2.0 * w.delta2 / xi,
            gamma1_safe: 1.0 - w.delta1 * m,
            gamma2_nominal: 1.0 + w.delta1 * m + 2.0 * w.delta2 / xi,
            gamma2_safe: 1.0 + w.delta1 * m + 2.0 * p.delay * w.delta2 / xi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityCertificate {
    pub alpha: f64,
    pub xi: f64,
    pub member: bool,
    /// Both region inequalities hold but the decay constant is not positive.
    pub marginal: bool,
    /// `xi < delta1 - 2 delta2 - |alpha|`
    pub below_linear_bound: bool,
    /// `xi >= (2 delta1 l^2 / T) alpha^2 + |alpha| - 2 e^{-tau} delta2`
    pub above_quadratic_bound: bool,
    /// Decay constant `2 min{T delta1/4, (3 - T l^2)/4, e^{-tau} delta2/xi,
    /// delta1/2 - delta2 - (|alpha| + xi)/2}`; set for members.
    pub nu: Option<f64>,
    /// Decay constant matched to the discrete energy:
    /// `2 min{delta1/4, delta1 (3 - T l^2)/4, tau e^{-tau} delta2/xi,
    /// delta1/2 - delta2 - (|alpha| + xi)/2}`; set for members.
    pub nu_safe: Option<f64>,
    pub coefficients: DissipationCoefficients,
    pub constants: EquivalenceConstants,
}

fn check_point(alpha: f64, xi: f64) -> Result<()> {
    if !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "alpha must be finite, got {alpha}"
        )));
    }
    if !(xi.is_finite() && xi > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "xi must be positive, got {xi}"
        )));
    }
    Ok(())
}

fn check_weights_positive(p: &BeamParameters, w: &LyapunovWeights) -> Result<()> {
    p.require_subcritical()?;
    if !(p.length > 0.0 && p.delay > 0.0 && p.gain > 0.0) {
        return Err(Error::InvalidParameter(
            "length, delay and gain must be positive".into(),
        ));
    }
    if !(w.delta1 > 0.0 && w.delta2 > 0.0 && w.delta1.is_finite() && w.delta2.is_finite()) {
        return Err(Error::InadmissibleWeights(format!(
            "delta1, delta2 must be positive, got {} and {}",
            w.delta1, w.delta2
        )));
    }
    Ok(())
}

/// Both region inequalities and the decay constants, without checking the
/// weight admissibility conditions.
fn evaluate(alpha: f64, xi: f64, p: &BeamParameters, w: &LyapunovWeights) -> StabilityCertificate {
    let (d1, d2) = (w.delta1, w.delta2);
    let (l, t, tau) = (p.length, p.tension, p.delay);
    let a = alpha.abs();
    let decay = (-tau).exp();
    let margin = p.tension_margin();

    let below_linear_bound = xi < d1 - 2.0 * d2 - a;
    let above_quadratic_bound = xi >= quadratic_bound(alpha, p, w);

    let kinetic_term = d1 / 2.0 - d2 - (a + xi) / 2.0;
    let nu = 2.0
        * (t * d1 / 4.0)
            .min(margin / 4.0)
            .min(decay * d2 / xi)
            .min(kinetic_term);
    let nu_safe = 2.0
        * (d1 / 4.0)
            .min(d1 * margin / 4.0)
            .min(tau * decay * d2 / xi)
            .min(kinetic_term);

    let both = below_linear_bound && above_quadratic_bound;
    let member = both && nu > 0.0;
    let coefficients = DissipationCoefficients {
        tip: -p.gain + d1 * (l / 2.0 + p.gain * p.gain * l * l * l / margin),
        kinetic: d2 - d1 / 2.0 + (a + xi) / 2.0,
        bending: -margin / 4.0,
        delayed: -(decay * d2 - d1 * alpha * alpha * l * l / t - (a - xi) / 2.0),
    };
    StabilityCertificate {
        alpha,
        xi,
        member,
        marginal: both && !member,
        below_linear_bound,
        above_quadratic_bound,
        nu: member.then_some(nu),
        nu_safe: member.then_some(nu_safe),
        coefficients,
        constants: EquivalenceConstants::new(p, w, xi),
    }
}

/// `delta1 - 2 delta2 - |alpha|`
pub fn linear_bound(alpha: f64, w: &LyapunovWeights) -> f64 {
    w.delta1 - 2.0 * w.delta2 - alpha.abs()
}

/// `(2 delta1 l^2 / T) alpha^2 + |alpha| - 2 e^{-tau} delta2`
pub fn quadratic_bound(alpha: f64, p: &BeamParameters, w: &LyapunovWeights) -> f64 {
    2.0 * w.delta1 * p.length * p.length / p.tension * alpha * alpha + alpha.abs()
        - 2.0 * (-p.delay).exp() * w.delta2
}

/// Region membership of `(alpha, xi)` with its decay constant and the
/// coefficients of the Lyapunov derivative bound.
pub fn sigma_member(
    alpha: f64,
    xi: f64,
    p: &BeamParameters,
    w: &LyapunovWeights,
) -> Result<StabilityCertificate> {
    check_point(alpha, xi)?;
    w.check_admissible(p)?;
    Ok(evaluate(alpha, xi, p, w))
}

/// Symmetric roots `(alpha1, -alpha1)` of the quadratic region boundary.
pub fn roots_alpha(p: &BeamParameters, w: &LyapunovWeights) -> Result<(f64, f64)> {
    w.check_admissible(p)?;
    let (l, t) = (p.length, p.tension);
    let c = 4.0 * w.delta2 * (-p.delay).exp();
    let q = 16.0 * w.delta1 * w.delta2 * (-p.delay).exp() * l * l / t;
    // Rationalized form of T/(4 delta1 l^2) (sqrt(1 + q) - 1).
    let alpha1 = c / (1.0 + (1.0 + q).sqrt());
    Ok((alpha1, -alpha1))
}

/// `Psi(alpha) = -(2 delta1 l^2 / T) alpha^2 + |alpha| + e^{-tau} delta1 / 2`
pub fn threshold_function(alpha: f64, p: &BeamParameters, delta1: f64) -> f64 {
    -2.0 * delta1 * p.length * p.length / p.tension * alpha * alpha
        + alpha.abs()
        + 0.5 * (-p.delay).exp() * delta1
}

/// Roots `(alpha1*, -alpha1*)` of [`threshold_function`] with the default
/// `delta1`.
pub fn roots_alpha_star(p: &BeamParameters) -> Result<(f64, f64)> {
    let d1 = default_weights(p)?.delta1;
    let (l, t) = (p.length, p.tension);
    let root = t / (4.0 * d1 * l * l)
        * (1.0 + (1.0 + 4.0 * (-p.delay).exp() * d1 * d1 * l * l / t).sqrt());
    Ok((root, -root))
}

/// `min{delta1 / 6, alpha1*}` with the default `delta1`.
pub fn alpha_threshold(p: &BeamParameters) -> Result<f64> {
    let d1 = default_weights(p)?.delta1;
    Ok((d1 / 6.0).min(roots_alpha_star(p)?.0))
}

/// Axis ranges and resolution for [`sample_region`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionAxes {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub xi_min: f64,
    pub xi_max: f64,
    pub alpha_points: usize,
    pub xi_points: usize,
}

pub const MIN_REGION_POINTS: usize = 8;

impl RegionAxes {
    /// `alpha in [-0.7, 0.7]`, `xi in (0, delta1]` on a 201 x 201 grid.
    pub fn default_for(w: &LyapunovWeights) -> Self {
        let n = 201;
        Self {
            alpha_min: -0.7,
            alpha_max: 0.7,
            xi_min: w.delta1 / n as f64,
            xi_max: w.delta1,
            alpha_points: n,
            xi_points: n,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.alpha_points < MIN_REGION_POINTS || self.xi_points < MIN_REGION_POINTS {
            return Err(Error::InvalidRange(format!(
                "need at least {MIN_REGION_POINTS} points per axis"
            )));
        }
        let finite = [self.alpha_min, self.alpha_max, self.xi_min, self.xi_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || !(self.alpha_min < self.alpha_max) || !(self.xi_min < self.xi_max) {
            return Err(Error::InvalidRange(format!(
                "empty or non-finite range {self:?}"
            )));
        }
        if self.xi_min <= 0.0 {
            return Err(Error::InvalidRange("xi must stay positive".into()));
        }
        Ok(())
    }
}

/// `n` points from `lo` to `hi` (both included exactly), placed
/// symmetrically about the midpoint so that a range symmetric about zero
/// mirrors exactly.
pub fn symmetric_linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let last = (n - 1) as f64;
    (0..n)
        .map(|i| match i {
            0 => lo,
            _ if i == n - 1 => hi,
            _ => center + half * (2.0 * i as f64 - last) / last,
        })
        .collect()
}

/// Evaluates membership on a tensor grid and traces both region boundaries
/// along the alpha axis.
pub fn sample_region(
    p: &BeamParameters,
    w: &LyapunovWeights,
    axes: &RegionAxes,
) -> Result<RegionSample> {
    axes.validate()?;
    check_weights_positive(p, w)?;
    let alpha_values = symmetric_linspace(axes.alpha_min, axes.alpha_max, axes.alpha_points);
    let xi_values = symmetric_linspace(axes.xi_min, axes.xi_max, axes.xi_points);
    let mut membership = Vec::with_capacity(alpha_values.len());
    let mut nu = Vec::with_capacity(alpha_values.len());
    for &alpha in &alpha_values {
        let certs: Vec<StabilityCertificate> = xi_values
            .iter()
            .map(|&xi| evaluate(alpha, xi, p, w))
            .collect();
        membership.push(certs.iter().map(|c| c.member).collect());
        nu.push(certs.iter().map(|c| c.nu).collect());
    }
    Ok(RegionSample {
        linear_boundary: alpha_values
            .iter()
            .map(|&a| (a, linear_bound(a, w)))
            .collect(),
        quadratic_boundary: alpha_values
            .iter()
            .map(|&a| (a, quadratic_bound(a, p, w)))
            .collect(),
        alpha_values,
        xi_values,
        membership,
        nu,
    })
}
