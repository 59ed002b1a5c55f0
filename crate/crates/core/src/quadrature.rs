//! Composite quadrature rules and uniform-grid interpolation.

/// Composite trapezoid rule on uniformly spaced samples.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (0.5 * (values[0] + values[n - 1]) + values[1..n - 1].iter().sum::<f64>()),
    }
}

/// Composite Simpson rule; `values.len() - 1` must be even.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    assert!(
        (n - 1) % 2 == 0,
        "Simpson's rule needs an even number of intervals"
    );
    let mut s = values[0] + values[n - 1];
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

/// Piecewise cubic Lagrange interpolation of samples at `x_j = j h`.
///
/// Uses the four nearest samples, shifted inwards at the ends.
pub fn cubic_interpolate(values: &[f64], h: f64, x: f64) -> f64 {
    let n = values.len();
    assert!(n >= 4, "cubic interpolation needs at least four samples");
    let t = x / h;
    let base = (t.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let mut total = 0.0;
    for a in 0..4 {
        let mut basis = 1.0;
        for b in 0..4 {
            if a != b {
                basis *= (t - (base + b) as f64) / (a as f64 - b as f64);
            }
        }
        total += basis * values[base + a];
    }
    total
}
