//! Hypothesis checks of the quantitative unique-continuation constellation
//! plus an empirical measurement of its ratios for a concrete field.
//!
//! Run: cargo run --example quc_hypotheses

use ucplab::domain::BoundaryCondition::Dirichlet;
use ucplab::domain::{Domain, EllipticityParams, Grid, ScalarField};
use ucplab::spectral::{spectrum_below, EnergyWindow};
use ucplab::geometry::{check_quc_hypotheses, QucGeometry, QucVariant, Region};
use ucplab::observability::empirical_quc;
use ucplab::operator::build_schrodinger;

fn main() -> ucplab::Result<()> {
    // the worked constellation: Theta a small ball at distance 1.2
    for &dist in &[1.2, 0.9] {
        let theta = Region::ball([dist, 0.0, 0.0], 0.1)?;
        let g = Region::ball([0.0; 3], 14.5)?;
        let geo = QucGeometry::new([0.0; 3], 1.0, 0.0, 0.5, theta, g, 2)?;
        let report = check_quc_hypotheses(&geo, &QucVariant::Schrodinger, 2);
        println!("|y| = {dist}: holds = {}", report.holds);
        for clause in &report.failed_clauses {
            println!("  failed: {clause}");
        }
    }

    // elliptic variant adds the weight-scale condition theta1 C3 < 1/(4R)
    let theta = Region::ball([1.5, 0.0, 0.0], 0.2)?;
    let g = Region::ball([0.0; 3], 25.0)?;
    let geo = QucGeometry::new([0.0; 3], 1.0, 5.0, 0.5, theta, g, 2)?;
    let params = EllipticityParams::new(22.0, 1.0, 1.0)?;
    let report = check_quc_hypotheses(&geo, &QucVariant::Elliptic { params, mu: 0.05 }, 2);
    println!(
        "elliptic (mu = 0.05): holds = {}, C3 = {:.4}, assumption radius = {}",
        report.holds,
        report.c3.unwrap(),
        report.required_assumption_radius.unwrap()
    );

    // empirical ratios for an exact eigenfield on a full constellation:
    // the grid must cover B(0, 14R), so the cube is generous
    let domain = Domain::new(2, 29.0, Dirichlet)?;
    let n = 190;
    let grid = Grid::new(domain, n)?;
    let v = ScalarField::zeros(grid);
    let laplacian = build_schrodinger(domain, n, &v)?;
    let basis = spectrum_below(&laplacian, EnergyWindow::BelowE(0.1))?;
    let psi = basis.eigenfunction(0).clone();
    let shifted = ScalarField::constant(grid, -basis.eigenvalue(0))?;
    let theta = Region::ball([1.4, 0.0, 0.0], 0.15)?;
    let g = Region::ball([0.0; 3], 14.2)?;
    let geo = QucGeometry::new([0.0; 3], 1.0, 0.0, 0.4, theta, g, 2)?;
    let measured = empirical_quc(&psi, &geo, &shifted, &QucVariant::Schrodinger, Some(&laplacian))?;
    println!("ground-state measurement on a gridded constellation:");
    println!("  observation/target mass ratio = {:.4}", measured.ratio_delta_theta);
    println!("  observed beta                 = {:.1}", measured.beta_observed);
    println!("  geometric hypotheses hold     = {}", measured.hypotheses.holds);
    println!(
        "  |Δpsi| <= |(V - E) psi| holds = {}",
        measured.differential_inequality.map(|r| r.holds).unwrap_or(false)
    );
    Ok(())
}
