//! Scale-free behavior of the uncertainty constant.
//!
//! Sweeps the cube side L at fixed delta and energy and prints the smallest
//! eigenvalue of the projected indicator form: it stabilizes instead of
//! decaying as the domain grows, and a delta-sweep at fixed L exposes the
//! polynomial small-radius behavior via a log-log fit.
//!
//! Run: cargo run --example scalefree_sweep

use ucplab::domain::BoundaryCondition::Dirichlet;
use ucplab::domain::{Domain, Grid, ScalarField};
use ucplab::geometry::{indicator, make_arrangement, ArrangementMode};
use ucplab::observability::{fit_exponent, uncertainty_constant_with_indicator};
use ucplab::operator::build_schrodinger;
use ucplab::spectral::{spectrum_below, EnergyWindow};

fn lambda_min(l: f64, delta: f64, energy: f64) -> ucplab::Result<f64> {
    let n = (50.0 * l) as usize - 1;
    let domain = Domain::new(1, l, Dirichlet)?;
    let grid = Grid::new(domain, n)?;
    let op = build_schrodinger(domain, n, &ScalarField::zeros(grid))?;
    let basis = spectrum_below(&op, EnergyWindow::BelowE(energy))?;
    let arr = make_arrangement(domain, delta, ArrangementMode::Periodic)?;
    let ind = indicator(&arr, &grid)?;
    uncertainty_constant_with_indicator(&basis, &ind)
}

fn main() -> ucplab::Result<()> {
    let energy = 10.0;

    println!("L-sweep at delta = 0.1 (scale-free: no decay with L)");
    for &l in &[1.0, 3.0, 5.0, 7.0, 9.0, 11.0] {
        println!("  L = {l:>4}: lambda_min = {:.6}", lambda_min(l, 0.1, energy)?);
    }

    println!("delta-sweep at L = 5 (polynomial small-radius behavior)");
    let deltas = [0.05, 0.1, 0.15, 0.2, 0.3, 0.4];
    let mut samples = Vec::new();
    for &delta in &deltas {
        let lam = lambda_min(5.0, delta, energy)?;
        println!("  delta = {delta:>5}: lambda_min = {lam:.6}");
        samples.push((delta, lam));
    }
    let fit = fit_exponent(&samples)?;
    println!(
        "log-log fit: lambda_min ~ delta^{:.3} (r^2 = {:.4})",
        fit.slope, fit.r2
    );
    Ok(())
}
