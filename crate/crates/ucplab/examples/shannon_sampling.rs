//! Sampling-series benchmark: exact reconstruction in the band-limited
//! case, aliasing bound when the band condition fails, and the effect of
//! node jitter.
//!
//! Run: cargo run --example shannon_sampling

use rand::Rng;
use ucplab::seeding::seeded_rng;
use ucplab::shannon::{reconstruct, sinc, verify_aliasing, SamplingProblem};

fn main() -> ucplab::Result<()> {
    // band-limited: a short sinc combination reconstructs exactly
    let f = |x: f64| sinc(x - 1.0) + 0.5 * sinc(x + 2.0) - 1.5 * sinc(x - 4.0);
    let problem = SamplingProblem::from_function(f, 1.0, 200, None)?;
    let mut sup = 0.0f64;
    for i in 0..=400 {
        let x = -2.0 + 4.0 * i as f64 / 400.0;
        sup = sup.max((f(x) - reconstruct(&problem, x)).abs());
    }
    println!("band-limited sinc span, J = 200: sup error = {sup:.3e}");

    // Gaussian: not band-limited; the aliasing bound controls the error
    let gauss = |x: f64| (-0.5 * x * x).exp();
    let ghat = |p: f64| (-0.5 * p * p).exp();
    let eval: Vec<f64> = (0..=160).map(|i| -2.0 + 4.0 * i as f64 / 160.0).collect();
    println!("Gaussian against the aliasing bound:");
    for &k in &[1.0, 2.0, 4.0] {
        let report = verify_aliasing(gauss, ghat, k, &eval, 200, None)?;
        println!(
            "  K = {k}: sup|f - S_K f| = {:.3e} <= bound {:.3e} (+allowances) -> {:?}",
            report.sup_error, report.bound, report.verdict
        );
    }

    // node jitter: reconstruction error grows continuously with amplitude
    println!("node jitter at K = 1 (sinc span):");
    for &amp in &[0.0, 1e-3, 1e-2] {
        let mut rng = seeded_rng(5);
        let offsets: Vec<f64> = (0..401)
            .map(|_| if amp == 0.0 { 0.0 } else { rng.random_range(-amp..=amp) })
            .collect();
        let jittered = SamplingProblem::from_function(f, 1.0, 200, Some(&offsets))?;
        let mut sup = 0.0f64;
        for i in 0..=160 {
            let x = -2.0 + 4.0 * i as f64 / 160.0;
            sup = sup.max((f(x) - reconstruct(&jittered, x)).abs());
        }
        println!("  amplitude {amp:>6}: sup error = {sup:.3e}");
    }
    Ok(())
}
