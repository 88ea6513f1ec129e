//! Worst-case search: projected random-direction descent over ball centers
//! and coarse (per-unit-cell) potentials, minimizing the uncertainty
//! constant of the projected indicator form. Probes how far an adversary
//! can push the constant that the scale-free bounds control.
//!
//! No gradients: the objective is a smallest eigenvalue and is nonsmooth at
//! eigenvalue crossings. Restarts run concurrently and merge by minimum.

use rayon::prelude::*;

use crate::domain::{Coord, Domain, Grid, ScalarField, MAX_DIM};
use crate::error::{Error, Result};
use crate::geometry::{
    indicator_with, make_arrangement, ArrangementMode, BallArrangement, DEFAULT_SUBSAMPLES,
};
use crate::observability::uncertainty_constant_with_indicator;
use crate::seeding::{derive_seed, seeded_rng};
use crate::spectral::{spectrum_below, EnergyWindow, SpectralBasis};
use rand::Rng;

/// What the search perturbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchTarget {
    Centers,
    Potential,
    Both,
}

/// Search configuration; every iterate stays feasible by projection onto
/// `|x_j - j|_inf <= 1/2 - delta` and `|V| <= K`.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub target: SearchTarget,
    pub restarts: usize,
    pub iterations: usize,
    /// Initial step of the random-direction proposals.
    pub step_init: f64,
    /// Geometric decay applied per iteration.
    pub step_decay: f64,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            target: SearchTarget::Centers,
            restarts: 5,
            iterations: 200,
            step_init: 0.1,
            step_decay: 0.985,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.iterations == 0 {
            return Err(Error::InvalidParam(
                "restarts and iterations must be positive".into(),
            ));
        }
        if !(self.step_init > 0.0) || !(self.step_decay > 0.0 && self.step_decay <= 1.0) {
            return Err(Error::InvalidParam(
                "step_init must be > 0 and step_decay in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// The fixed data of the search problem.
#[derive(Debug, Clone)]
pub struct SearchSpace {
    pub domain: Domain,
    pub n: usize,
    pub delta: f64,
    pub window: EnergyWindow,
    /// Potential feasibility bound `K` (per-unit-cell constants in [-K, K]).
    pub potential_bound: f64,
    /// Potential used when the target does not move it.
    pub base_potential: Option<ScalarField>,
}

/// One accepted-step record.
#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub iteration: usize,
    pub value: f64,
    pub step: f64,
}

/// Search outcome: the best feasible configuration found.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best_value: f64,
    pub best_centers: BallArrangement,
    pub best_potential: ScalarField,
    /// Trace of the restart that produced the best value.
    pub trace: Vec<TraceRow>,
    /// Final value of every restart.
    pub restart_values: Vec<f64>,
    /// Objective value of the periodic/base starting point.
    pub start_value: f64,
}

struct Objective<'a> {
    space: &'a SearchSpace,
    grid: Grid,
    lattice_dim: usize,
    cell_count: usize,
    /// Basis cached when the potential never moves.
    fixed_basis: Option<SpectralBasis>,
}

impl<'a> Objective<'a> {
    /// Evaluate the uncertainty constant for a parameter vector.
    fn eval(&self, params: &ParamVector) -> Result<f64> {
        let arr = self.arrangement(params)?;
        let ind = indicator_with(&arr, &self.grid, DEFAULT_SUBSAMPLES)?;
        let basis = match &self.fixed_basis {
            Some(b) => b.clone(),
            None => {
                let v = self.potential_field(params)?;
                let op = crate::operator::build_schrodinger(self.space.domain, self.space.n, &v)?;
                spectrum_below(&op, self.space.window)?
            }
        };
        if basis.is_empty() {
            return Err(Error::EmptyBasis(
                "search window contains no spectrum".into(),
            ));
        }
        uncertainty_constant_with_indicator(&basis, &ind)
    }

    fn arrangement(&self, params: &ParamVector) -> Result<BallArrangement> {
        let d = self.space.domain.d;
        let centers: Vec<Coord> = (0..self.cell_count)
            .map(|cell| {
                let mut c = [0.0; MAX_DIM];
                for axis in 0..d {
                    c[axis] = params.centers[cell * d + axis];
                }
                c
            })
            .collect();
        make_arrangement(
            self.space.domain,
            self.space.delta,
            ArrangementMode::Explicit(centers),
        )
    }

    fn potential_field(&self, params: &ParamVector) -> Result<ScalarField> {
        let cells = params.potential.clone();
        let domain = self.space.domain;
        let probe = make_arrangement(domain, self.space.delta, ArrangementMode::Periodic)?;
        let lattice = probe.lattice_indices();
        let j_max = lattice
            .iter()
            .map(|j| j[..domain.d].iter().map(|v| v.abs()).max().unwrap_or(0))
            .max()
            .unwrap_or(0);
        let per_axis = (2 * j_max + 1) as usize;
        ScalarField::from_fn(self.grid, |x| {
            let mut flat = 0usize;
            for axis in 0..domain.d {
                let j = x[axis].round() as i64;
                let j = j.clamp(-j_max, j_max);
                flat = flat * per_axis + (j + j_max) as usize;
            }
            cells[flat]
        })
    }
}

impl SearchSpace {
    fn base_field(&self, grid: Grid) -> Result<ScalarField> {
        match &self.base_potential {
            Some(v) => {
                if v.grid != grid {
                    return Err(Error::GridMismatch(
                        "base potential grid does not match (domain, n)".into(),
                    ));
                }
                Ok(v.clone())
            }
            None => Ok(ScalarField::zeros(grid)),
        }
    }
}

/// Flattened search coordinates.
#[derive(Debug, Clone)]
struct ParamVector {
    /// Centers, cell-major then axis.
    centers: Vec<f64>,
    /// Per-unit-cell potential constants.
    potential: Vec<f64>,
}

fn periodic_start(space: &SearchSpace, cell_count: usize, lattice: &[crate::geometry::LatticeIndex]) -> ParamVector {
    let d = space.domain.d;
    let mut centers = vec![0.0; cell_count * d];
    for (cell, j) in lattice.iter().enumerate() {
        for axis in 0..d {
            centers[cell * d + axis] = j[axis] as f64;
        }
    }
    ParamVector {
        centers,
        potential: vec![0.0; cell_count],
    }
}

fn project(
    params: &mut ParamVector,
    lattice: &[crate::geometry::LatticeIndex],
    d: usize,
    center_margin: f64,
    k: f64,
) {
    for (cell, j) in lattice.iter().enumerate() {
        for axis in 0..d {
            let lo = j[axis] as f64 - center_margin;
            let hi = j[axis] as f64 + center_margin;
            let v = &mut params.centers[cell * d + axis];
            *v = v.clamp(lo, hi);
        }
    }
    for v in &mut params.potential {
        *v = v.clamp(-k, k);
    }
}

/// Projected random-direction descent with multi-restart, minimizing the
/// uncertainty constant over feasible centers and/or potentials.
///
/// Restart 0 starts from the periodic arrangement (and the base potential),
/// so the best value never exceeds the periodic one. Deterministic for a
/// given seed regardless of worker scheduling.
pub fn minimize_ratio(space: &SearchSpace, config: &SearchConfig) -> Result<SearchOutcome> {
    config.validate()?;
    if !(space.delta > 0.0 && space.delta < 0.5) {
        return Err(Error::InvalidParam(format!(
            "delta must be in (0, 1/2), got {}",
            space.delta
        )));
    }
    let move_centers = matches!(config.target, SearchTarget::Centers | SearchTarget::Both);
    let move_potential = matches!(config.target, SearchTarget::Potential | SearchTarget::Both);

    let grid = Grid::new(space.domain, space.n)?;
    let probe = make_arrangement(space.domain, space.delta, ArrangementMode::Periodic)?;
    let lattice = probe.lattice_indices();
    let cell_count = probe.ball_count();
    if cell_count == 0 {
        return Err(Error::InvalidParam(
            "domain has no unit lattice cell; enlarge L".into(),
        ));
    }

    // basis fixed unless the potential moves
    let fixed_basis = if move_potential {
        None
    } else {
        let v = space.base_field(grid)?;
        let op = crate::operator::build_schrodinger(space.domain, space.n, &v)?;
        let basis = spectrum_below(&op, space.window)?;
        if basis.is_empty() {
            return Err(Error::EmptyBasis(
                "search window contains no spectrum".into(),
            ));
        }
        Some(basis)
    };

    let objective = Objective {
        space,
        grid,
        lattice_dim: cell_count * space.domain.d,
        cell_count,
        fixed_basis,
    };
    let d = space.domain.d;
    let center_margin = 0.5 - space.delta;
    let k = space.potential_bound;

    let start = periodic_start(space, cell_count, &lattice);
    let start_value = objective.eval(&start)?;

    let dim = objective.lattice_dim * usize::from(move_centers)
        + cell_count * usize::from(move_potential);
    if dim == 0 || (move_potential && k == 0.0 && !move_centers) {
        // degenerate feasible set: nothing can move
        return Ok(SearchOutcome {
            best_value: start_value,
            best_centers: objective.arrangement(&start)?,
            best_potential: if move_potential {
                objective.potential_field(&start)?
            } else {
                space.base_field(grid)?
            },
            trace: vec![TraceRow {
                iteration: 0,
                value: start_value,
                step: 0.0,
            }],
            restart_values: vec![start_value],
            start_value,
        });
    }

    let run_restart = |restart: usize| -> Result<(f64, ParamVector, Vec<TraceRow>)> {
        let mut rng = seeded_rng(derive_seed(config.seed, restart as u64));
        let mut current = start.clone();
        if restart > 0 {
            // random feasible start
            if move_centers {
                for (cell, j) in lattice.iter().enumerate() {
                    for axis in 0..d {
                        current.centers[cell * d + axis] =
                            j[axis] as f64 + rng.random_range(-center_margin..=center_margin);
                    }
                }
            }
            if move_potential && k > 0.0 {
                for v in &mut current.potential {
                    *v = rng.random_range(-k..=k);
                }
            }
        }
        let mut value = objective.eval(&current)?;
        let mut trace = vec![TraceRow {
            iteration: 0,
            value,
            step: config.step_init,
        }];
        let mut step = config.step_init;
        for iteration in 1..=config.iterations {
            let mut candidate = current.clone();
            if move_centers {
                for v in &mut candidate.centers {
                    *v += step * rng.random_range(-1.0..=1.0);
                }
            }
            if move_potential && k > 0.0 {
                for v in &mut candidate.potential {
                    *v += step * k * rng.random_range(-1.0..=1.0);
                }
            }
            project(&mut candidate, &lattice, d, center_margin, k);
            let cand_value = objective.eval(&candidate)?;
            if cand_value < value {
                value = cand_value;
                current = candidate;
                trace.push(TraceRow {
                    iteration,
                    value,
                    step,
                });
            }
            step *= config.step_decay;
        }
        Ok((value, current, trace))
    };

    let results: Vec<Result<(f64, ParamVector, Vec<TraceRow>)>> = (0..config.restarts)
        .into_par_iter()
        .map(run_restart)
        .collect();

    let mut best: Option<(f64, ParamVector, Vec<TraceRow>)> = None;
    let mut restart_values = Vec::with_capacity(config.restarts);
    for r in results {
        let (value, params, trace) = r?;
        restart_values.push(value);
        let better = match &best {
            None => true,
            Some((bv, _, _)) => value < *bv,
        };
        if better {
            best = Some((value, params, trace));
        }
    }
    let (best_value, best_params, trace) = best.expect("at least one restart");
    let best_centers = objective.arrangement(&best_params)?;
    best_centers.validate()?;
    let best_potential = if move_potential {
        objective.potential_field(&best_params)?
    } else {
        space.base_field(grid)?
    };
    Ok(SearchOutcome {
        best_value,
        best_centers,
        best_potential,
        trace,
        restart_values,
        start_value,
    })
}
