//! Variable-coefficient elliptic operators and their structural hypotheses.
//!
//! Builds -div(a grad) in flux form, checks the two-sided ellipticity and
//! Lipschitz assumption on a ball, and verifies the pointwise differential
//! inequality for an exact eigenfield.
//!
//! Run: cargo run --example elliptic_operators

use ucplab::domain::BoundaryCondition::Dirichlet;
use ucplab::domain::{CoefficientField, Domain, EllipticityParams, Grid, ScalarField};
use ucplab::operator::{
    build_elliptic, build_schrodinger, check_assumption_a, check_differential_inequality,
};
use ucplab::spectral::{spectrum_below, EnergyWindow};

fn main() -> ucplab::Result<()> {
    let domain = Domain::new(2, 4.0, Dirichlet)?;
    let n = 60;
    let grid = Grid::new(domain, n)?;

    // slowly varying anisotropic coefficients
    let a = CoefficientField::from_fn(grid, |x| {
        let s = 0.15 * (x[0]).sin() * (0.7 * x[1]).cos();
        vec![1.3 + s, 0.1, 0.1, 1.1 - s]
    })?;
    let v = ScalarField::zeros(grid);
    let op = build_elliptic(domain, n, &a, &v)?;
    println!(
        "elliptic operator on {} nodes, matrix asymmetry = {:.2e}",
        grid.total_nodes(),
        op.matrix().asymmetry()
    );

    for (theta1, theta2) in [(1.6, 0.5), (1.2, 0.5), (1.6, 0.05)] {
        let params = EllipticityParams::new(1.9, theta1, theta2)?;
        let report = check_assumption_a(&a, &params)?;
        println!(
            "A(r=1.9, {theta1}, {theta2}): holds = {} (needs theta1 >= {:.3}, theta2 >= {:.3})",
            report.holds, report.worst_ellipticity, report.worst_lipschitz
        );
    }

    // an exact eigenfield satisfies |Δ psi| = |(V - E) psi| pointwise
    let basis = spectrum_below(&op, EnergyWindow::BelowE(3.0))?;
    let (e0, psi) = (basis.eigenvalue(0), basis.eigenfunction(0));
    let shifted = ScalarField::constant(grid, -e0)?;
    let report = check_differential_inequality(&op, psi, &shifted, None)?;
    println!(
        "ground state (E = {e0:.4}): |L psi| <= |(V - E) psi| holds = {}, max violation = {:.2e}",
        report.holds, report.max_violation
    );

    // the identity-coefficient operator reduces to the Laplacian exactly
    let identity = CoefficientField::identity(grid);
    let reduced = build_elliptic(domain, n, &identity, &v)?;
    let laplacian = build_schrodinger(domain, n, &v)?;
    println!(
        "identity coefficients reduce to the Laplacian: max entry diff = {:.2e}",
        reduced.matrix().max_entry_diff(laplacian.matrix())
    );
    Ok(())
}
