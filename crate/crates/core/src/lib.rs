//! Simulation and stability analysis for a clamped-free Euler-Bernoulli beam
//! under axial tension, boundary velocity feedback and an internal delayed
//! damping term.

pub mod discretization;
pub mod error;
pub mod functionals;
pub mod integrator;
pub mod linalg;
pub mod model;
pub mod quadrature;
pub mod resolvent;
pub mod stability;

pub use error::{Error, Result};
