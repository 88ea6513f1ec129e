//! Carleman weight construction and the weighted functional inequality.
//!
//! Verifies the two-sided weight bounds on seeded points of the unit ball,
//! then sweeps the weighted functional ratio (an empirical lower bound for
//! the inequality constant) over annulus bumps and alpha.
//!
//! Run: cargo run --example carleman_weight

use ucplab::carleman::{
    check_weight_bounds, estimate_c2, polynomial_annulus_bump, seeded_ball_points,
    CarlemanOptions, CarlemanWeight,
};
use ucplab::domain::BoundaryCondition::Dirichlet;
use ucplab::domain::{Domain, Grid, ScalarField};
use ucplab::operator::build_schrodinger;

fn main() -> ucplab::Result<()> {
    // weight bounds |x|/(C3 sqrt(t1)) <= w <= sqrt(t1)|x| at mu = 1
    let weight = CarlemanWeight::identity(2, 1.0)?;
    println!("mu = 1: C3 = e mu = {:.6}", weight.c3);
    println!("psi(0.5) = {:.12}", weight.psi(0.5)?);
    let points = seeded_ball_points(2, 10_000, 1);
    let report = check_weight_bounds(&weight, 1.0, &points)?;
    println!(
        "weight bounds on 10^4 seeded points: {} violations (margin {:.3e})",
        report.violations, report.margin
    );

    // functional sweep at mu = 4 where the alpha-trend is flat
    let mu = 4.0;
    let weight = CarlemanWeight::identity(2, mu)?;
    let n = 128;
    let domain = Domain::new(2, 2.0, Dirichlet)?;
    let grid = Grid::new(domain, n)?;
    let op = build_schrodinger(domain, n, &ScalarField::zeros(grid))?;
    let family = vec![
        polynomial_annulus_bump(grid, 0.20, 0.90, 3)?,
        polynomial_annulus_bump(grid, 0.21, 0.91, 3)?,
        polynomial_annulus_bump(grid, 0.22, 0.92, 3)?,
    ];
    let alphas: Vec<f64> = (3..=20).map(f64::from).collect();
    let estimate = estimate_c2(&weight, &op, &family, &alphas, &CarlemanOptions::default())?;
    println!("mu = {mu}, n = {n}: sup ratio (empirical C2 lower bound) = {:.3}", estimate.sup_ratio);
    println!("{:>6} {:>12} {:>12} {:>12}", "alpha", "bump 0", "bump 1", "bump 2");
    for alpha in 3..=20 {
        let row: Vec<f64> = estimate
            .rows
            .iter()
            .filter(|r| r.alpha == alpha as f64)
            .map(|r| r.ratio)
            .collect();
        println!("{alpha:>6} {:>12.4} {:>12.4} {:>12.4}", row[0], row[1], row[2]);
    }
    Ok(())
}
