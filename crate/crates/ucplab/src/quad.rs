//! Adaptive quadrature helpers: Simpson refinement on finite panels and
//! doubling-panel integration of decaying tails on half lines.

use crate::error::{Error, Result};

/// Adaptive Simpson on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, tol * 0.5, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, tol * 0.5, depth - 1)
    }
}

/// `∫_a^∞ f` for an eventually decaying integrand, by doubling panels
/// `[a 2^k, a 2^(k+1)]` (shifted when `a <= 0`). Converges when the panel
/// contributions fall below the relative tolerance; reports a divergent
/// tail when they fail to decay.
pub fn integrate_tail<F: Fn(f64) -> f64>(f: &F, a: f64, rel_tol: f64) -> Result<f64> {
    // tolerance scale per panel: a coarse 3-point estimate keeps the
    // adaptive recursion from chasing tolerances below what the panel
    // magnitude supports
    let panel_integral = |lo: f64, hi: f64, running: f64| -> f64 {
        let coarse = simpson(lo, hi, f(lo), f(0.5 * (lo + hi)), f(hi)).abs();
        let tol = rel_tol * 1e-2 * running.abs().max(coarse).max(1e-120);
        adaptive_simpson(f, lo, hi, tol)
    };
    let start = if a > 1.0 { a } else { a.max(0.0) + 1.0 };
    // head [a, start] if any
    let mut total = if start > a {
        panel_integral(a, start, 0.0)
    } else {
        0.0
    };
    let mut lo = start;
    let mut last_panels: Vec<f64> = Vec::new();
    for _ in 0..200 {
        let hi = lo * 2.0;
        let panel = panel_integral(lo, hi, total);
        total += panel;
        last_panels.push(panel.abs());
        if panel.abs() <= rel_tol * total.abs().max(1e-300) {
            // two consecutive negligible panels end the sweep
            if last_panels.len() >= 2
                && last_panels[last_panels.len() - 2] <= rel_tol * total.abs().max(1e-300)
            {
                return Ok(total);
            }
        }
        // non-decaying panels signal divergence
        if last_panels.len() >= 8 {
            let m = last_panels.len();
            let recent = &last_panels[m - 4..];
            let older = &last_panels[m - 8..m - 4];
            let recent_sum: f64 = recent.iter().sum();
            let older_sum: f64 = older.iter().sum();
            if recent_sum > 0.9 * older_sum && recent_sum > rel_tol * total.abs().max(1e-300) {
                return Err(Error::DivergentTail);
            }
        }
        lo = hi;
    }
    Err(Error::DivergentTail)
}
