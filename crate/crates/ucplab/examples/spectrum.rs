//! Eigenpairs of a discretized Schrödinger operator below a threshold.
//!
//! Builds -Δ + V on a 1d cube with a seeded bounded potential, solves the
//! spectrum below E and prints the eigenvalues next to the V = 0 values.
//!
//! Run: cargo run --example spectrum

use ucplab::domain::BoundaryCondition::Dirichlet;
use ucplab::domain::{Domain, Grid, ScalarField};
use ucplab::operator::build_schrodinger;
use ucplab::spectral::{spectrum_below, EnergyWindow};

fn main() -> ucplab::Result<()> {
    let l = 5.0;
    let n = 400;
    let energy = 12.0;
    let domain = Domain::new(1, l, Dirichlet)?;
    let grid = Grid::new(domain, n)?;

    let v = ScalarField::random_uniform(grid, 42, 1.0)?;
    let op = build_schrodinger(domain, n, &v)?;
    let basis = spectrum_below(&op, EnergyWindow::BelowE(energy))?;

    let free = build_schrodinger(domain, n, &ScalarField::zeros(grid))?;
    let free_basis = spectrum_below(&free, EnergyWindow::BelowE(energy))?;

    println!("L = {l}, n = {n}, ||V||_inf <= 1, window (-inf, {energy}]");
    println!("{:>4} {:>14} {:>14}", "k", "E_k (V seeded)", "E_k (V = 0)");
    for k in 0..basis.len().max(free_basis.len()) {
        let with_v = basis
            .eigenvalues()
            .nth(k)
            .map_or("-".into(), |e| format!("{e:.8}"));
        let without = free_basis
            .eigenvalues()
            .nth(k)
            .map_or("-".into(), |e| format!("{e:.8}"));
        println!("{:>4} {:>14} {:>14}", k + 1, with_v, without);
    }

    basis.to_csv("spectrum_basis.csv")?;
    println!("wrote spectrum_basis.csv ({} eigenpairs)", basis.len());
    Ok(())
}
