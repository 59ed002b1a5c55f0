//! Static problem `y'''' - T y'' + psi = 0` on `(0, l)` with
//! `y(0) = y'(0) = 0`, `y''(l) = 0`, `y'''(l) - T y'(l) = kappa f(l)`.
//!
//! The closed form is `y = c1 + c2 x + c3 e^{rho x} + c4 e^{-rho x} + y_P`,
//! `rho = sqrt(T)`, with the variation-of-constants particular solution
//!
//! `y_P(x) = (1/rho^2) int_0^x (x - r) psi(r) dr - (1/rho^3) int_0^x sinh(rho (x - r)) psi(r) dr`.
//!
//! The four constants are solved in the `{cosh, sinh}` basis, scaled by
//! `cosh(rho l)`, and converted back on output. [`bvp_oracle`] solves the
//! same problem with the finite-difference operator for cross-checking.

use crate::discretization::assemble;
use crate::error::{check_len, Error, Result};
use crate::linalg::{dense_determinant, dense_solve};
use crate::model::{BeamParameters, SpaceGrid};
use crate::quadrature::{cubic_interpolate, simpson, trapezoid};

/// Right-hand side `F = (f, g, h)` of the static problem, sampled on the
/// space grid; `h[k]` is the field at `s = k / (h.len() - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticData {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub h: Vec<Vec<f64>>,
}

impl StaticData {
    pub fn zero(grid: &SpaceGrid, s_intervals: usize) -> Self {
        let n = grid.n_nodes();
        Self {
            f: vec![0.0; n],
            g: vec![0.0; n],
            h: vec![vec![0.0; n]; s_intervals + 1],
        }
    }

    pub fn check_dims(&self, grid: &SpaceGrid) -> Result<()> {
        let n = grid.n_nodes();
        check_len("f", n, self.f.len())?;
        check_len("g", n, self.g.len())?;
        if self.h.len() < 2 {
            return Err(Error::InvalidGrid("h needs at least two s-slots".into()));
        }
        for slot in &self.h {
            check_len("h slot", n, slot.len())?;
        }
        Ok(())
    }

    pub fn f_tip(&self) -> f64 {
        *self.f.last().expect("non-empty field")
    }
}

/// `psi = g + alpha (f - tau int_0^1 h(., s) ds)`, trapezoid in `s`.
pub fn source_psi(d: &StaticData, p: &BeamParameters, grid: &SpaceGrid) -> Result<Vec<f64>> {
    d.check_dims(grid)?;
    let ds = 1.0 / (d.h.len() - 1) as f64;
    let mut column = vec![0.0; d.h.len()];
    Ok((0..grid.n_nodes())
        .map(|j| {
            for (c, slot) in column.iter_mut().zip(&d.h) {
                *c = slot[j];
            }
            d.g[j] + p.alpha * (d.f[j] - p.delay * trapezoid(&column, ds))
        })
        .collect())
}

/// `-2 rho^5`, the Wronskian of `{1, x, e^{rho x}, e^{-rho x}}`.
pub fn wronskian(rho: f64) -> f64 {
    -2.0 * rho.powi(5)
}

/// Fundamental matrix of `{1, x, e^{rho x}, e^{-rho x}}` and its first three
/// derivatives at `x`.
pub fn fundamental_matrix(x: f64, rho: f64) -> [[f64; 4]; 4] {
    let (ep, em) = ((rho * x).exp(), (-rho * x).exp());
    let (r2, r3) = (rho * rho, rho * rho * rho);
    [
        [1.0, x, ep, em],
        [0.0, 1.0, rho * ep, -rho * em],
        [0.0, 0.0, r2 * ep, r2 * em],
        [0.0, 0.0, r3 * ep, -r3 * em],
    ]
}

/// Determinant of [`fundamental_matrix`] by pivoted elimination.
pub fn numeric_wronskian(x: f64, rho: f64) -> f64 {
    dense_determinant(fundamental_matrix(x, rho))
}

/// Derivatives of the varied constants solving `W(x) C' = (0, 0, 0, -psi)`.
pub fn varied_constant_rates(x: f64, rho: f64, psi: f64) -> [f64; 4] {
    let r2 = rho * rho;
    let r3 = r2 * rho;
    [
        -x * psi / r2,
        psi / r2,
        -(-rho * x).exp() * psi / (2.0 * r3),
        (rho * x).exp() * psi / (2.0 * r3),
    ]
}

/// `[y, y', y'', y''']` at one point.
pub type Jet = [f64; 4];

/// Convolution integrals of a sampled source against the Green kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticularSolution {
    psi: Vec<f64>,
    dx: f64,
    rho: f64,
}

/// Integrals `int_0^x k(x - r) psi(r) dr` for `k = 1, x - r, sinh, cosh`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Convolutions {
    plain: f64,
    ramp: f64,
    sinh: f64,
    cosh: f64,
}

impl ParticularSolution {
    pub fn new(psi: &[f64], rho: f64, grid: &SpaceGrid) -> Result<Self> {
        check_len("psi", grid.n_nodes(), psi.len())?;
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "rho must be positive, got {rho}"
            )));
        }
        Ok(Self {
            psi: psi.to_vec(),
            dx: grid.dx(),
            rho,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    fn psi_at(&self, r: f64) -> f64 {
        cubic_interpolate(&self.psi, self.dx, r)
    }

    /// Composite Simpson on an even partition of `[0, x]` whose spacing
    /// tracks the sampling grid.
    fn convolutions(&self, x: f64) -> Convolutions {
        if x <= 0.0 {
            return Convolutions::default();
        }
        let cells = (x / self.dx).round() as usize;
        let intervals = (cells + cells % 2).max(2);
        let h = x / intervals as f64;
        let nodes: Vec<(f64, f64)> = (0..=intervals)
            .map(|i| {
                let r = if i == intervals { x } else { i as f64 * h };
                (x - r, self.psi_at(r))
            })
            .collect();
        let rule = |k: &dyn Fn(f64) -> f64| {
            let vals: Vec<f64> = nodes.iter().map(|&(u, p)| k(u) * p).collect();
            simpson(&vals, h)
        };
        let rho = self.rho;
        Convolutions {
            plain: rule(&|_| 1.0),
            ramp: rule(&|u| u),
            sinh: rule(&|u| (rho * u).sinh()),
            cosh: rule(&|u| (rho * u).cosh()),
        }
    }

    /// `y_P` and its first three derivatives at `x`.
    pub fn evaluate(&self, x: f64) -> Jet {
        let c = self.convolutions(x);
        let rho = self.rho;
        let r2 = rho * rho;
        [
            c.ramp / r2 - c.sinh / (r2 * rho),
            (c.plain - c.cosh) / r2,
            -c.sinh / rho,
            -c.cosh,
        ]
    }
}

/// Closed-form solution of the static problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormSolution {
    /// `c1..c4` in the exponential basis.
    pub c: [f64; 4],
    pub rho: f64,
    pub psi: Vec<f64>,
    /// Determinant of the boundary system in the exponential basis.
    pub determinant: f64,
    /// `(c1, c2, a cosh(rho l), b sinh-coefficient * cosh(rho l))` in the
    /// scaled hyperbolic basis.
    scaled: [f64; 4],
    particular: ParticularSolution,
    length: f64,
}

/// Boundary system matrix in the exponential basis, `pi(rho) = rho^3 - T rho`.
pub fn boundary_matrix(rho: f64, tension: f64, length: f64) -> [[f64; 4]; 4] {
    let (ep, em) = ((rho * length).exp(), (-rho * length).exp());
    let pi = rho * rho * rho - tension * rho;
    [
        [1.0, 0.0, 1.0, 1.0],
        [0.0, 1.0, rho, -rho],
        [0.0, 0.0, ep, em],
        [0.0, -tension, pi * ep, -pi * em],
    ]
}

fn hadamard_bound(m: &[[f64; 4]; 4]) -> f64 {
    m.iter()
        .map(|row| row.iter().map(|v| v * v).sum::<f64>().sqrt())
        .product()
}

pub const SINGULARITY_TOLERANCE: f64 = 1e-12;

/// Solves for `c1..c4` and returns an evaluator for the full solution.
pub fn solve_coefficients(
    psi: &[f64],
    p: &BeamParameters,
    f_tip: f64,
    grid: &SpaceGrid,
) -> Result<ClosedFormSolution> {
    if !(p.tension.is_finite() && p.tension > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "static solution needs T > 0, got {}",
            p.tension
        )));
    }
    let rho = p.tension.sqrt();
    let length = grid.length();
    let particular = ParticularSolution::new(psi, rho, grid)?;

    let exponential = boundary_matrix(rho, p.tension, length);
    let determinant = dense_determinant(exponential);
    if !(determinant.abs() > SINGULARITY_TOLERANCE * hadamard_bound(&exponential)) {
        return Err(Error::Singular { determinant });
    }

    let c_l = (rho * length).cosh();
    let t_l = (rho * length).tanh();
    let r2 = rho * rho;
    let conv = particular.convolutions(length);
    // Unknowns (c1, c2, A, B) with y_H = c1 + c2 x + (A cosh(rho x) + B sinh(rho x)) / cosh(rho l).
    let system = [
        [1.0, 0.0, 1.0 / c_l, 0.0],
        [0.0, 1.0, 0.0, rho / c_l],
        [0.0, 0.0, r2, r2 * t_l],
        [0.0, -p.tension, 0.0, 0.0],
    ];
    let rhs = [
        0.0,
        0.0,
        conv.sinh / rho,
        p.gain * f_tip + conv.cosh + p.tension / r2 * (conv.plain - conv.cosh),
    ];
    let (det, solution) = dense_solve(system, rhs);
    let scaled = match solution {
        Some(s) if det != 0.0 && s.iter().all(|v| v.is_finite()) => s,
        _ => return Err(Error::Singular { determinant }),
    };
    let (a, b) = (scaled[2] / c_l, scaled[3] / c_l);
    Ok(ClosedFormSolution {
        c: [scaled[0], scaled[1], 0.5 * (a + b), 0.5 * (a - b)],
        rho,
        psi: psi.to_vec(),
        determinant,
        scaled,
        particular,
        length,
    })
}

impl ClosedFormSolution {
    /// `[y, y', y'', y''']` at `x in [0, l]`.
    pub fn evaluate(&self, x: f64) -> Jet {
        let rho = self.rho;
        // cosh(rho x) / cosh(rho l) and sinh(rho x) / cosh(rho l) without overflow.
        let shift = (rho * (x - self.length)).exp();
        let denom = 1.0 + (-2.0 * rho * self.length).exp();
        let ch = shift * (1.0 + (-2.0 * rho * x).exp()) / denom;
        let sh = shift * (1.0 - (-2.0 * rho * x).exp()) / denom;
        let [c1, c2, a, b] = self.scaled;
        let yp = self.particular.evaluate(x);
        let (r2, r3) = (rho * rho, rho * rho * rho);
        [
            c1 + c2 * x + a * ch + b * sh + yp[0],
            c2 + rho * (a * sh + b * ch) + yp[1],
            r2 * (a * ch + b * sh) + yp[2],
            r3 * (a * sh + b * ch) + yp[3],
        ]
    }

    pub fn sample(&self, grid: &SpaceGrid) -> Vec<f64> {
        grid.nodes().iter().map(|&x| self.evaluate(x)[0]).collect()
    }

    pub fn particular(&self) -> &ParticularSolution {
        &self.particular
    }
}

/// Residuals of the four boundary conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryResiduals {
    pub displacement: f64,
    pub slope: f64,
    pub moment: f64,
    pub shear: f64,
}

impl BoundaryResiduals {
    pub fn max_abs(&self) -> f64 {
        [self.displacement, self.slope, self.moment, self.shear]
            .iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn boundary_residuals(
    sol: &ClosedFormSolution,
    p: &BeamParameters,
    f_tip: f64,
) -> BoundaryResiduals {
    let left = sol.evaluate(0.0);
    let right = sol.evaluate(sol.length);
    BoundaryResiduals {
        displacement: left[0],
        slope: left[1],
        moment: right[2],
        shear: right[3] - p.tension * right[1] - p.gain * f_tip,
    }
}

/// Finite-difference solution of the static problem: `A y = -psi` with the
/// feedback datum entering the tip row and `y[0] = 0`.
pub fn bvp_oracle(
    psi: &[f64],
    p: &BeamParameters,
    grid: &SpaceGrid,
    f_tip: f64,
) -> Result<Vec<f64>> {
    check_len("psi", grid.n_nodes(), psi.len())?;
    let op = assemble(p, grid)?;
    let mut matrix = op.matrix().clone();
    let (lo, hi) = matrix.row_span(0);
    for j in lo..=hi {
        matrix.set(0, j, 0.0);
    }
    matrix.set(0, 0, 1.0);
    let n = grid.n_cells();
    let mut rhs: Vec<f64> = psi.iter().map(|v| -v).collect();
    rhs[0] = 0.0;
    rhs[n] -= op.b_tip() * f_tip;
    let lu = matrix
        .factorize()
        .map_err(|_| Error::Singular { determinant: 0.0 })?;
    lu.solve(&rhs)
}
