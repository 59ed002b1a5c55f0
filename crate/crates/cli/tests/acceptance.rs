//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use delaybeam_cli::config::ConfigMap;
use delaybeam_cli::presets::random_initial;
use delaybeam_cli::resolvent::observed_order;
use delaybeam_cli::{execute, resolvent, sweep, Command, Invocation};
use delaybeam_core::functionals::{integrated_balance_residual, sandwich_bounds};
use delaybeam_core::integrator::{run, InitialData, StepperConfig};
use delaybeam_core::model::{
    sandwich_weights, BeamParameters, LyapunovWeights, SpaceGrid, TimeGrid,
};
use delaybeam_core::stability::{
    alpha_threshold, quadratic_bound, roots_alpha, roots_alpha_star, sample_region, sigma_member,
    threshold_function, RegionAxes,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn config(overrides: &[&str]) -> ConfigMap {
    let mut m = ConfigMap::default();
    for o in overrides {
        m.apply_override(o).unwrap();
    }
    m
}

/// Beam energy drift with no dissipation: `alpha = kappa = T = 0`.
fn conservative_drift() -> Outcome {
    let p = BeamParameters {
        tension: 0.0,
        gain: 0.0,
        alpha: 0.0,
        ..BeamParameters::default()
    };
    let g = SpaceGrid::new(1.0, 128).unwrap();
    let tg = TimeGrid::new(1.0, 64, 20.0).unwrap();
    let trace = run(
        &p,
        &g,
        &StepperConfig::new(tg, 1).unwrap(),
        &InitialData::quadratic_velocity(&g),
        None,
    )
    .unwrap();
    let e0 = trace.first().unwrap().beam_energy;
    let drift = trace
        .records()
        .iter()
        .fold(0.0f64, |m, r| m.max((r.beam_energy - e0).abs()))
        / e0;
    outcome(
        drift <= 1e-6,
        format!("max relative drift {drift:.3e} (limit 1e-6)"),
    )
}

/// Time-integrated energy-identity residual over [0, 10] on three grids.
fn balance_convergence() -> Outcome {
    let p = BeamParameters::default();
    let levels = [64usize, 128, 256];
    let mut residuals = Vec::new();
    for &n in &levels {
        let g = SpaceGrid::new(1.0, n).unwrap();
        let tg = TimeGrid::new(1.0, n / 2, 10.0).unwrap();
        let init = InitialData::smooth_pulse(&g, p.delay, &[1.0, -0.5, 0.3]);
        let trace = run(&p, &g, &StepperConfig::new(tg, 1).unwrap(), &init, None).unwrap();
        residuals.push(integrated_balance_residual(&trace, &p, 10.0).unwrap());
    }
    let order = observed_order(&levels, &residuals).unwrap_or(f64::NAN);
    outcome(
        order >= 1.8,
        format!(
            "residuals {:?}, observed order {order:.3} (need >= 1.8)",
            residuals
                .iter()
                .map(|r| format!("{r:.3e}"))
                .collect::<Vec<_>>()
        ),
    )
}

/// Closed-form static solution against the finite-difference oracle.
fn static_oracle() -> Outcome {
    let cfg = config(&[
        "resolvent.preset=smooth",
        "resolvent.seed=2024",
        "resolvent.base_n=64",
    ])
    .resolve()
    .unwrap();
    let (s, _) = resolvent::resolvent(&cfg).unwrap();
    let slope = s.convergence.slope.unwrap_or(f64::NAN);
    let residual = s.boundary_residuals.relative;
    let wronskian = s
        .wronskian
        .iter()
        .fold(0.0f64, |m, w| m.max(w.relative_error));
    let pass = (1.8..=2.2).contains(&slope)
        && residual <= 1e-8
        && s.wronskian.len() == 5
        && wronskian <= 1e-10;
    outcome(
        pass,
        format!(
            "slope {slope:.4} in [1.8, 2.2], boundary residual {residual:.2e} <= 1e-8, \
             Wronskian max rel. error {wronskian:.2e} <= 1e-10 over {} samples",
            s.wronskian.len()
        ),
    )
}

fn region_correctness() -> Outcome {
    let p = BeamParameters::default();
    let w = LyapunovWeights::with_deltas(&p, 1.0, 0.25);
    let cert = sigma_member(0.1, 0.2, &p, &w).unwrap();
    let nu = cert.nu.unwrap_or(f64::NAN);
    let sample = sample_region(&p, &w, &RegionAxes::default_for(&w)).unwrap();
    let n = sample.alpha_values.len();
    let mirrored = (0..n).all(|i| {
        sample.alpha_values[i] == -sample.alpha_values[n - 1 - i]
            && sample.membership[i] == sample.membership[n - 1 - i]
    });
    let (a1, _) = roots_alpha(&p, &w).unwrap();
    let a1_residual = quadratic_bound(a1, &p, &w).abs();
    let (star, _) = roots_alpha_star(&p).unwrap();
    let star_residual = threshold_function(star, &p, 1.0).abs();
    let a0 = alpha_threshold(&p).unwrap();
    let pass = cert.member
        && (nu - 0.2).abs() <= 1e-12
        && mirrored
        && sample.member_count() > 0
        && a1_residual <= 1e-12
        && star_residual <= 1e-10
        && (star - 0.64303).abs() <= 5e-6
        && (a0 - 1.0 / 6.0).abs() <= 1e-10;
    outcome(
        pass,
        format!(
            "member {}, nu {nu:.15}, mirror-symmetric {mirrored}, alpha1 {a1:.12} (residual {a1_residual:.1e}), \
             alpha1* {star:.10} (residual {star_residual:.1e}), alpha0 {a0:.12}",
            cert.member
        ),
    )
}

/// Equivalence of `V` and `E` along random trajectories.
fn lyapunov_sandwich() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut violations = 0;
    let mut samples = 0;
    for seed in 0..20 {
        let p = BeamParameters {
            tension: rng.gen_range(0.3..2.5),
            alpha: rng.gen_range(-0.3..0.3),
            xi: rng.gen_range(0.05..0.5),
            ..BeamParameters::default()
        };
        let w = sandwich_weights(&p).unwrap().weights;
        let g = SpaceGrid::new(1.0, 64).unwrap();
        let tg = TimeGrid::new(1.0, 32, 20.0).unwrap();
        let init = random_initial(&g, p.delay, seed);
        let trace = run(&p, &g, &StepperConfig::new(tg, 1).unwrap(), &init, Some(&w)).unwrap();
        let (lo, hi) = sandwich_bounds(&p, &w);
        for r in trace.records() {
            samples += 1;
            if r.lyapunov < lo * r.energy || r.lyapunov > hi * r.energy {
                violations += 1;
            }
        }
    }
    outcome(
        violations == 0,
        format!("{violations} violations over {samples} samples on 20 trajectories"),
    )
}

/// Decay fits and monotonicity of `V` on a 5 x 5 sweep, members only.
fn qualitative_decay() -> Outcome {
    let cfg = ConfigMap::default().resolve().unwrap();
    let rows = sweep::sweep(&cfg, None).unwrap();
    let members: Vec<_> = rows.iter().filter(|r| r.member).collect();
    let mut failures = Vec::new();
    for r in &members {
        let rate = r.fitted_rate.unwrap_or(f64::NAN);
        let residual = r.fit_residual.unwrap_or(f64::NAN);
        if !(rate > 0.0 && residual < 0.1 && r.lyapunov_increases == 0) {
            failures.push(format!(
                "(alpha {:+.2}, xi {:.2}): rate {rate:.4}, residual {residual:.4}, V increased at {}/{} samples",
                r.alpha, r.xi, r.lyapunov_increases, r.lyapunov_checked
            ));
        }
    }
    let positive = members
        .iter()
        .filter(|r| r.fitted_rate.is_some_and(|k| k > 0.0))
        .count();
    let mut detail = format!(
        "{} members, {positive} with positive rate, {} failing (rate > 0, residual < 0.1, V non-increasing after 2 tau)",
        members.len(),
        failures.len()
    );
    if let Some(first) = failures.first() {
        detail.push_str(&format!("; e.g. {first}"));
    }
    outcome(!members.is_empty() && failures.is_empty(), detail)
}

fn sweep_determinism() -> Outcome {
    let overrides = [
        "grid.N=32",
        "grid.M=16",
        "grid.t_f=20",
        "sweep.alpha_count=4",
        "sweep.xi_count=3",
    ];
    let mut outputs = Vec::new();
    let dirs: Vec<_> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for (dir, workers) in dirs.iter().zip([1, 4]) {
        let inv = Invocation {
            command: Command::Sweep,
            config: config(&overrides),
            out: dir.path().to_path_buf(),
            workers: Some(workers),
        };
        execute(&inv).unwrap();
        outputs.push(std::fs::read(dir.path().join("sweep.csv")).unwrap());
    }
    let same = outputs[0] == outputs[1];
    outcome(
        same,
        format!("workers 1 vs 4: byte-identical sweep.csv = {same}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("conservative-limit energy drift", conservative_drift),
        ("energy-balance convergence", balance_convergence),
        ("static oracle equivalence", static_oracle),
        ("stability region correctness", region_correctness),
        ("Lyapunov sandwich", lyapunov_sandwich),
        ("qualitative decay on member sweep", qualitative_decay),
        ("sweep determinism", sweep_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("acceptance {}: {tag} {name}: {}", i + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
