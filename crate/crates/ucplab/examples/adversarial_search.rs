//! Worst-case ball placement search.
//!
//! Projected random-direction descent moves the ball centers inside their
//! unit cells to minimize the uncertainty constant, probing how much of the
//! periodic arrangement's constant is down to position.
//!
//! Run: cargo run --example adversarial_search

use ucplab::adversary::{minimize_ratio, SearchConfig, SearchSpace, SearchTarget};
use ucplab::domain::BoundaryCondition::Dirichlet;
use ucplab::domain::Domain;
use ucplab::spectral::EnergyWindow;

fn main() -> ucplab::Result<()> {
    let space = SearchSpace {
        domain: Domain::new(1, 5.0, Dirichlet)?,
        n: 249,
        delta: 0.1,
        window: EnergyWindow::BelowE(10.0),
        potential_bound: 0.0,
        base_potential: None,
    };
    let config = SearchConfig {
        target: SearchTarget::Centers,
        restarts: 6,
        iterations: 150,
        step_init: 0.1,
        step_decay: 0.985,
        seed: 7,
    };
    let outcome = minimize_ratio(&space, &config)?;

    println!("periodic arrangement: lambda_min = {:.6}", outcome.start_value);
    println!("worst found:          lambda_min = {:.6}", outcome.best_value);
    println!(
        "reduction factor {:.1}, still strictly positive",
        outcome.start_value / outcome.best_value
    );
    println!("restart values: {:?}", outcome.restart_values);
    println!("worst centers (offsets from lattice):");
    for (j, c) in outcome
        .best_centers
        .lattice_indices()
        .iter()
        .zip(outcome.best_centers.centers())
    {
        println!("  j = {:>2}: x_j - j = {:+.4}", j[0], c[0] - j[0] as f64);
    }
    println!("accepted steps: {}", outcome.trace.len());
    Ok(())
}
