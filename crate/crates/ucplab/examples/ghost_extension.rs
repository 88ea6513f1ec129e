//! Ghost-dimension extension: assemble F from a spectral basis, then check
//! its defining identities (the extra-dimension equation and the boundary
//! derivative) under mesh refinement.
//!
//! Run: cargo run --example ghost_extension

use ucplab::domain::BoundaryCondition::Dirichlet;
use ucplab::domain::{Domain, Grid, ScalarField};
use ucplab::extension::{build_extension, residual, s_case};
use ucplab::operator::build_schrodinger;
use ucplab::spectral::{random_in_range, spectrum_below, EnergyWindow};

fn main() -> ucplab::Result<()> {
    println!("case function branches: s(4, 1) = {:.6}, s(0, 0.7) = {}, s(-4, pi/4) = {:.6}",
        s_case(4.0, 1.0), s_case(0.0, 0.7), s_case(-4.0, std::f64::consts::FRAC_PI_4));

    let domain = Domain::new(1, 3.0, Dirichlet)?;
    println!("residual of the extension equation under refinement:");
    println!("{:>6} {:>6} {:>14} {:>16}", "n", "ny", "l2_residual", "boundary_error");
    let mut previous: Option<f64> = None;
    for level in 0..3 {
        let scale = 1usize << level;
        let n = 150 * scale - 1;
        let ny = 24 * scale;
        let grid = Grid::new(domain, n)?;
        let v = ScalarField::sinusoidal(grid, 0.8, &[2.0], 0.3)?;
        let op = build_schrodinger(domain, n, &v)?;
        let basis = spectrum_below(&op, EnergyWindow::BelowE(9.0))?;
        let psi = random_in_range(&basis, 11)?;
        let ext = build_extension(&basis, &psi, 1.0, ny)?;
        let rep = residual(&ext, &v)?;
        let factor = previous
            .map(|p| format!("  (x{:.2} smaller)", p / rep.l2_residual))
            .unwrap_or_default();
        println!(
            "{n:>6} {ny:>6} {:>14.6e} {:>16.6e}{factor}",
            rep.l2_residual, rep.boundary_error
        );
        previous = Some(rep.l2_residual);
    }
    println!("second-order convergence: each halving divides the residual by ~4");
    Ok(())
}
