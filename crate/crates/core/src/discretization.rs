//! Finite-difference operator for `y_xxxx - T y_xx` with the clamped-free
//! boundary closures.
//!
//! Ghost values: `y[-1] = y[1]` (zero slope at the clamp),
//! `y[N+1] = 2 y[N] - y[N-1]` (zero moment at the tip) and
//! `y[N+2] = 4 y[N] - 4 y[N-1] + y[N-2] + 2 T dx^2 (y[N] - y[N-1]) + 2 kappa dx^3 v[N]`
//! (shear condition). Row 0 is left empty because `y[0] = 0` is imposed
//! strongly by the integrator.

use crate::error::{check_len, Error, Result};
use crate::linalg::BandedMatrix;
use crate::model::{BeamParameters, SpaceGrid, MIN_CELLS};

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialOperator {
    matrix: BandedMatrix,
    b_tip: f64,
    tension: f64,
    dx: f64,
}

/// Builds the banded operator and the tip coupling `2 kappa / dx`.
///
/// Accepts `T >= 0` and `kappa >= 0` so that conservative limits can be
/// simulated.
pub fn assemble(p: &BeamParameters, g: &SpaceGrid) -> Result<SpatialOperator> {
    if !(p.tension.is_finite() && p.tension >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tension must be >= 0, got {}",
            p.tension
        )));
    }
    if !(p.gain.is_finite() && p.gain >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gain must be >= 0, got {}",
            p.gain
        )));
    }
    if (g.length() - p.length).abs() > 1e-12 * p.length.abs().max(1.0) {
        return Err(Error::InvalidGrid(format!(
            "grid length {} differs from beam length {}",
            g.length(),
            p.length
        )));
    }
    if g.n_cells() < MIN_CELLS {
        return Err(Error::InvalidGrid(format!(
            "need at least {MIN_CELLS} cells"
        )));
    }
    let n = g.n_cells();
    let dx = g.dx();
    let t = p.tension;
    let d4 = 1.0 / dx.powi(4);
    let d2 = t / (dx * dx);
    let mut a = BandedMatrix::zeros(n + 1, 2, 2);

    // Row 1 folds in the reflected ghost y[-1] = y[1].
    a.set(1, 0, -4.0 * d4 - d2);
    a.set(1, 1, 7.0 * d4 + 2.0 * d2);
    a.set(1, 2, -4.0 * d4 - d2);
    a.set(1, 3, d4);

    for j in 2..=n - 2 {
        a.set(j, j - 2, d4);
        a.set(j, j - 1, -4.0 * d4 - d2);
        a.set(j, j, 6.0 * d4 + 2.0 * d2);
        a.set(j, j + 1, -4.0 * d4 - d2);
        a.set(j, j + 2, d4);
    }

    a.set(n - 1, n - 3, d4);
    a.set(n - 1, n - 2, -4.0 * d4 - d2);
    a.set(n - 1, n - 1, 5.0 * d4 + 2.0 * d2);
    a.set(n - 1, n, -2.0 * d4 - d2);

    // The tension stencil cancels in the tip row once both ghosts are
    // eliminated; what remains comes from the shear ghost.
    a.set(n, n - 2, 2.0 * d4);
    a.set(n, n - 1, -4.0 * d4 - 2.0 * d2);
    a.set(n, n, 2.0 * d4 + 2.0 * d2);

    Ok(SpatialOperator {
        matrix: a,
        b_tip: 2.0 * p.gain / dx,
        tension: t,
        dx,
    })
}

impl SpatialOperator {
    pub fn matrix(&self) -> &BandedMatrix {
        &self.matrix
    }

    /// Coefficient of `v[N]` in the tip row.
    pub fn b_tip(&self) -> f64 {
        self.b_tip
    }

    pub fn tension(&self) -> f64 {
        self.tension
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn n_nodes(&self) -> usize {
        self.matrix.n()
    }

    /// `A y`, without the velocity coupling.
    pub fn apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.matrix.matvec(y)
    }

    pub fn apply_into(&self, y: &[f64], out: &mut [f64]) {
        self.matrix.matvec_into(y, out)
    }
}

/// One-sided second-order approximation of `y_x(l)`.
pub fn discrete_tip_slope(y: &[f64], g: &SpaceGrid) -> Result<f64> {
    check_len("displacement", g.n_nodes(), y.len())?;
    let n = g.n_cells();
    Ok((3.0 * y[n] - 4.0 * y[n - 1] + y[n - 2]) / (2.0 * g.dx()))
}

/// Nodal curvature `y_xx` with the boundary ghosts: the clamp reflection at
/// `x = 0` and zero at the free end.
pub fn curvature(y: &[f64], g: &SpaceGrid) -> Result<Vec<f64>> {
    check_len("displacement", g.n_nodes(), y.len())?;
    let n = g.n_cells();
    let h2 = g.dx() * g.dx();
    let mut z = vec![0.0; n + 1];
    z[0] = 2.0 * (y[1] - y[0]) / h2;
    for j in 1..n {
        z[j] = (y[j - 1] - 2.0 * y[j] + y[j + 1]) / h2;
    }
    z[n] = 0.0;
    Ok(z)
}

/// Forward differences `(y[j+1] - y[j]) / dx` on the `N` cells.
pub fn cell_slopes(y: &[f64], g: &SpaceGrid) -> Result<Vec<f64>> {
    check_len("displacement", g.n_nodes(), y.len())?;
    let dx = g.dx();
    Ok(y.windows(2).map(|w| (w[1] - w[0]) / dx).collect())
}
