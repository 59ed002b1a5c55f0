use std::path::Path;

use delaybeam_core::model::{BeamParameters, SpaceGrid};
use delaybeam_core::resolvent::{
    boundary_residuals, bvp_oracle, numeric_wronskian, solve_coefficients, source_psi, wronskian,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{RunConfig, StaticPreset};
use crate::error::CliError;
use crate::output::{csv_writer, num, write_json};
use crate::presets::{manufactured_solution, static_data};
use crate::setup::{beam_parameters, ParametersReport};

pub const RESOLVENT_HEADER: [&str; 4] = ["x", "y_closed", "y_oracle", "abs_diff"];
pub const LEVELS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualReport {
    pub displacement: f64,
    pub slope: f64,
    pub moment: f64,
    pub shear: f64,
    pub max_abs: f64,
    /// `max_abs` over `max(|psi|, kappa |f(l)|, |y|)`; zero for zero data.
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    #[serde(rename = "N")]
    pub levels: Vec<usize>,
    /// Sup-norm difference between closed form and oracle over the sup norm
    /// of the closed form.
    pub relative_differences: Vec<f64>,
    /// Observed order; `null` when a difference vanishes.
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WronskianSample {
    pub x: f64,
    pub rho: f64,
    pub numeric: f64,
    pub closed_form: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolventSummary {
    pub preset: &'static str,
    pub seed: u64,
    pub parameters: ParametersReport,
    pub rho: f64,
    pub coefficients: [f64; 4],
    pub determinant: f64,
    pub boundary_residuals: ResidualReport,
    pub convergence: ConvergenceReport,
    pub wronskian: Vec<WronskianSample>,
    /// Sup-norm error against the exact solution (manufactured preset only).
    pub exact_error: Option<f64>,
}

pub struct Level {
    pub grid: SpaceGrid,
    pub closed: Vec<f64>,
    pub oracle: Vec<f64>,
}

fn sup(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, |m, x| m.max(x.abs()))
}

fn preset_name(p: StaticPreset) -> &'static str {
    match p {
        StaticPreset::Zero => "zero",
        StaticPreset::Smooth => "smooth",
        StaticPreset::Manufactured => "manufactured",
    }
}

/// Least-squares slope of `-ln(err)` against `ln(N)`.
pub fn observed_order(levels: &[usize], errs: &[f64]) -> Option<f64> {
    if errs.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return None;
    }
    let xs: Vec<f64> = levels.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| -e.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

fn wronskian_samples(p: &BeamParameters, count: usize, seed: u64) -> Vec<WronskianSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    (0..count)
        .map(|_| {
            let x = rng.gen_range(0.0..p.length);
            let rho = rng.gen_range(0.2..2.0);
            let numeric = numeric_wronskian(x, rho);
            let closed_form = wronskian(rho);
            WronskianSample {
                x,
                rho,
                numeric,
                closed_form,
                relative_error: ((numeric - closed_form) / closed_form).abs(),
            }
        })
        .collect()
}

pub fn resolvent(cfg: &RunConfig) -> Result<(ResolventSummary, Level), CliError> {
    let p = beam_parameters(cfg);
    let r = &cfg.resolvent;
    let data_for = |g: &SpaceGrid| {
        static_data(
            r.preset,
            g,
            p.tension,
            p.gain,
            p.delay,
            r.s_intervals,
            r.seed,
        )
    };

    let mut levels = Vec::with_capacity(LEVELS);
    let mut diffs = Vec::with_capacity(LEVELS);
    let mut first = None;
    for k in 0..LEVELS {
        let n = r.base_n << k;
        let grid = SpaceGrid::new(p.length, n)?;
        let data = data_for(&grid);
        let psi = source_psi(&data, &p, &grid)?;
        let sol = solve_coefficients(&psi, &p, data.f_tip(), &grid)?;
        let closed = sol.sample(&grid);
        let oracle = bvp_oracle(&psi, &p, &grid, data.f_tip())?;
        let scale = sup(closed.iter().copied());
        let diff = sup(closed.iter().zip(&oracle).map(|(a, b)| a - b));
        diffs.push(if scale > 0.0 { diff / scale } else { diff });
        levels.push(n);
        if k == 0 {
            let res = boundary_residuals(&sol, &p, data.f_tip());
            let scale = sup(psi.iter().copied())
                .max(p.gain * data.f_tip().abs())
                .max(scale);
            let max_abs = res.max_abs();
            let exact_error = (r.preset == StaticPreset::Manufactured).then(|| {
                sup(grid
                    .nodes()
                    .iter()
                    .zip(&closed)
                    .map(|(&x, y)| y - manufactured_solution(x, p.length)))
            });
            let summary = ResolventSummary {
                preset: preset_name(r.preset),
                seed: r.seed,
                parameters: (&p).into(),
                rho: sol.rho,
                coefficients: sol.c,
                determinant: sol.determinant,
                boundary_residuals: ResidualReport {
                    displacement: res.displacement,
                    slope: res.slope,
                    moment: res.moment,
                    shear: res.shear,
                    max_abs,
                    relative: if scale > 0.0 {
                        max_abs / scale
                    } else {
                        max_abs
                    },
                },
                convergence: ConvergenceReport {
                    levels: Vec::new(),
                    relative_differences: Vec::new(),
                    slope: None,
                },
                wronskian: wronskian_samples(&p, r.wronskian_samples, r.seed),
                exact_error,
            };
            first = Some((
                summary,
                Level {
                    grid,
                    closed,
                    oracle,
                },
            ));
        }
    }
    let (mut summary, level) = first.expect("at least one level");
    summary.convergence = ConvergenceReport {
        slope: observed_order(&levels, &diffs),
        levels,
        relative_differences: diffs,
    };
    Ok((summary, level))
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let (summary, level) = resolvent(cfg)?;
    let mut w = csv_writer(&out.join("resolvent.csv"), &RESOLVENT_HEADER)?;
    for ((&x, &c), &o) in level
        .grid
        .nodes()
        .iter()
        .zip(&level.closed)
        .zip(&level.oracle)
    {
        w.write_record([num(x), num(c), num(o), num((c - o).abs())])?;
    }
    w.flush()?;
    write_json(&out.join("resolvent_summary.json"), &summary)
}
