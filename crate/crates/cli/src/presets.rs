//! Named initial-data and static-data presets.

use std::f64::consts::PI;
use std::sync::Arc;

use delaybeam_core::integrator::{History, InitialData};
use delaybeam_core::model::SpaceGrid;
use delaybeam_core::resolvent::StaticData;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{InitialPreset, StaticPreset};

const MODES: usize = 3;

/// `sum_m c_m (1 - cos((2m + 1) pi x / (2 l)))`: clamped at `x = 0`.
fn clamped_modes(coeffs: [f64; MODES], length: f64) -> impl Fn(f64) -> f64 {
    move |x| {
        coeffs
            .iter()
            .enumerate()
            .map(|(m, c)| c * (1.0 - ((2 * m + 1) as f64 * PI * x / (2.0 * length)).cos()))
            .sum()
    }
}

fn draw(rng: &mut ChaCha8Rng) -> [f64; MODES] {
    let mut c = [0.0; MODES];
    for v in &mut c {
        *v = rng.gen_range(-1.0..1.0);
    }
    c
}

/// Random clamped displacement and velocity built from the first three
/// cantilever-like shapes, with a history that starts at the velocity and
/// rotates towards a second random shape as `s` goes back to `-tau`.
pub fn random_initial(grid: &SpaceGrid, delay: f64, seed: u64) -> InitialData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = grid.length();
    let y0 = clamped_modes(draw(&mut rng), l);
    let y1 = clamped_modes(draw(&mut rng), l);
    let phi = clamped_modes(draw(&mut rng), l);
    let y1_field = grid.sample(&y1);
    let history = move |x: f64, s: f64| {
        let theta = 0.5 * PI * s / delay;
        y1(x) * theta.cos() - phi(x) * theta.sin()
    };
    InitialData {
        y0: grid.sample(y0),
        y1: y1_field,
        history: History::Function(Arc::new(history)),
        allow_incompatible: false,
    }
}

pub fn initial_data(preset: InitialPreset, grid: &SpaceGrid, delay: f64, seed: u64) -> InitialData {
    match preset {
        InitialPreset::Zero => InitialData::zero(grid),
        InitialPreset::QuadraticVelocity => InitialData::quadratic_velocity(grid),
        InitialPreset::Smooth => random_initial(grid, delay, seed),
    }
}

/// Static data `(f, g, h)` with `h` sampled on `s_intervals + 1` points.
pub fn static_data(
    preset: StaticPreset,
    grid: &SpaceGrid,
    tension: f64,
    gain: f64,
    delay: f64,
    s_intervals: usize,
    seed: u64,
) -> StaticData {
    let l = grid.length();
    match preset {
        StaticPreset::Zero => StaticData::zero(grid, s_intervals),
        StaticPreset::Smooth => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut c = [0.0; 9];
            for v in &mut c {
                *v = rng.gen_range(-1.0..1.0);
            }
            let field = move |x: f64, k: usize| {
                let u = x / l;
                c[3 * k] * (1.3 * u).sin() + c[3 * k + 1] * u * u + c[3 * k + 2] * (0.7 * u).cos()
            };
            StaticData {
                f: grid.sample(|x| field(x, 0)),
                g: grid.sample(|x| field(x, 1)),
                h: (0..=s_intervals)
                    .map(|k| {
                        let s = k as f64 / s_intervals as f64;
                        grid.sample(|x| (1.0 + s * s) * field(x, 2))
                    })
                    .collect(),
            }
        }
        StaticPreset::Manufactured => {
            // f and h are constant and cancel in the source term, so the
            // solution is manufactured_solution for any alpha and tau.
            let f_tip = -4.0 * tension * l * l * l / gain;
            StaticData {
                f: vec![f_tip; grid.n_nodes()],
                g: grid.sample(|x| -(24.0 - 12.0 * tension * (l - x) * (l - x))),
                h: vec![vec![f_tip / delay; grid.n_nodes()]; s_intervals + 1],
            }
        }
    }
}

/// `x^2 (6 l^2 - 4 l x + x^2)`, the solution for the manufactured preset.
pub fn manufactured_solution(x: f64, length: f64) -> f64 {
    x * x * (6.0 * length * length - 4.0 * length * x + x * x)
}
