use std::path::Path;

use delaybeam_core::model::RegionSample;
use delaybeam_core::stability::{sample_region, RegionAxes};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{csv_writer, num, opt_num};
use crate::setup::{beam_parameters, region_weights};

pub const REGION_HEADER: [&str; 4] = ["alpha", "xi", "member", "nu"];
pub const BOUNDARY_HEADER: [&str; 3] = ["curve", "alpha", "xi"];

pub const LINEAR_CURVE: &str = "xi = delta1 - 2 delta2 - |alpha|";
pub const QUADRATIC_CURVE: &str = "xi = (2 delta1 l^2 / T) alpha^2 + |alpha| - 2 exp(-tau) delta2";

pub fn region(cfg: &RunConfig) -> Result<RegionSample, CliError> {
    let p = beam_parameters(cfg);
    let w = region_weights(cfg, &p)?;
    let r = &cfg.region;
    let axes = RegionAxes {
        alpha_min: r.alpha_min,
        alpha_max: r.alpha_max,
        xi_min: r.xi_min.unwrap_or(w.delta1 / r.resolution as f64),
        xi_max: r.xi_max.unwrap_or(w.delta1),
        alpha_points: r.resolution,
        xi_points: r.resolution,
    };
    Ok(sample_region(&p, &w, &axes)?)
}

pub fn write_region(out: &Path, s: &RegionSample) -> Result<(), CliError> {
    let mut w = csv_writer(&out.join("region.csv"), &REGION_HEADER)?;
    for (i, &alpha) in s.alpha_values.iter().enumerate() {
        for (j, &xi) in s.xi_values.iter().enumerate() {
            w.write_record([
                num(alpha),
                num(xi),
                s.membership[i][j].to_string(),
                opt_num(s.nu[i][j]),
            ])?;
        }
    }
    w.flush()?;

    let mut b = csv_writer(&out.join("boundaries.csv"), &BOUNDARY_HEADER)?;
    for (curve, points) in [
        (LINEAR_CURVE, &s.linear_boundary),
        (QUADRATIC_CURVE, &s.quadratic_boundary),
    ] {
        for &(alpha, xi) in points {
            b.write_record([curve.to_string(), num(alpha), num(xi)])?;
        }
    }
    b.flush()?;
    Ok(())
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    write_region(out, &region(cfg)?)
}
