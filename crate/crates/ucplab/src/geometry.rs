//! Equidistributed ball arrangements, their grid indicators, region
//! quadrature, and the geometric hypothesis checkers.
//!
//! One ball of radius `delta` per unit lattice cell `Lambda_1 + j`; the
//! containment `B(x_j, delta) ⊂ Lambda_1 + j` is equivalent to the axis
//! condition `|x_j - j|_inf <= 1/2 - delta`.

use std::path::Path;

use rand::Rng;

use crate::domain::{Coord, Domain, EllipticityParams, Grid, ScalarField, MAX_DIM};
use crate::error::{Error, Result};
use crate::seeding::seeded_rng;

/// Default sub-sampling resolution per axis when estimating cell coverage.
pub const DEFAULT_SUBSAMPLES: usize = 8;

pub type LatticeIndex = [i64; MAX_DIM];

/// Union of one delta-ball per unit lattice cell inside the cube.
#[derive(Debug, Clone)]
pub struct BallArrangement {
    pub domain: Domain,
    pub delta: f64,
    /// Largest |j_i| of the lattice; the lattice is the full integer box.
    j_max: i64,
    /// Centers in row-major lattice order.
    centers: Vec<Coord>,
}

/// How the centers of an arrangement are produced.
#[derive(Debug, Clone)]
pub enum ArrangementMode {
    /// `x_j = j`.
    Periodic,
    /// `x_j = j + uniform[-amplitude, amplitude]^d`, seeded.
    Jitter { seed: u64, amplitude: f64 },
    /// Caller-specified centers in row-major lattice order.
    Explicit(Vec<Coord>),
}

/// Lattice indices j with `Lambda_1 + j ⊂ closure(Lambda_L)`, i.e.
/// `|j_i| <= (L-1)/2`. For non-odd L the boundary layer carries no ball.
fn lattice_extent(domain: &Domain) -> i64 {
    let half = (domain.side - 1.0) / 2.0;
    if half < -1e-9 {
        -1
    } else {
        (half + 1e-9).floor() as i64
    }
}

fn lattice_points(domain: &Domain, j_max: i64) -> Vec<LatticeIndex> {
    if j_max < 0 {
        return Vec::new();
    }
    let per_axis = (2 * j_max + 1) as usize;
    let total = per_axis.pow(domain.d as u32);
    let mut out = Vec::with_capacity(total);
    for flat in 0..total {
        let mut j = [0i64; MAX_DIM];
        let mut rest = flat;
        for axis in (0..domain.d).rev() {
            j[axis] = (rest % per_axis) as i64 - j_max;
            rest /= per_axis;
        }
        out.push(j);
    }
    out
}

impl BallArrangement {
    pub fn ball_count(&self) -> usize {
        self.centers.len()
    }

    pub fn lattice_indices(&self) -> Vec<LatticeIndex> {
        lattice_points(&self.domain, self.j_max)
    }

    pub fn centers(&self) -> &[Coord] {
        &self.centers
    }

    /// Center of the ball whose unit cell contains `p`, if any.
    fn center_for_point(&self, p: &Coord) -> Option<&Coord> {
        if self.j_max < 0 {
            return None;
        }
        let per_axis = 2 * self.j_max + 1;
        let mut flat: i64 = 0;
        for axis in 0..self.domain.d {
            let j = p[axis].round() as i64;
            if j.abs() > self.j_max {
                return None;
            }
            flat = flat * per_axis + (j + self.j_max);
        }
        self.centers.get(flat as usize)
    }

    /// True iff `p` lies in the union of balls.
    pub fn covers(&self, p: &Coord) -> bool {
        match self.center_for_point(p) {
            None => false,
            Some(c) => {
                let mut dist2 = 0.0;
                for axis in 0..self.domain.d {
                    dist2 += (p[axis] - c[axis]).powi(2);
                }
                dist2 <= self.delta * self.delta
            }
        }
    }

    /// Re-validate the containment invariant for every center.
    pub fn validate(&self) -> Result<()> {
        let allowed = 0.5 - self.delta;
        for (j, x) in self.lattice_indices().iter().zip(&self.centers) {
            let mut margin = 0.0f64;
            for axis in 0..self.domain.d {
                margin = margin.max((x[axis] - j[axis] as f64).abs());
            }
            if margin > allowed + 1e-12 {
                return Err(Error::CenterOutOfCell {
                    j: j[..self.domain.d].to_vec(),
                    margin,
                    allowed,
                });
            }
        }
        Ok(())
    }

    /// Exact total measure of the union restricted to the cube. Every ball
    /// is contained in its cell, so the balls are disjoint and fully inside.
    pub fn measure(&self) -> f64 {
        let unit_ball = match self.domain.d {
            1 => 2.0,
            2 => std::f64::consts::PI,
            _ => 4.0 * std::f64::consts::PI / 3.0,
        };
        self.ball_count() as f64 * unit_ball * self.delta.powi(self.domain.d as i32)
    }

    /// CSV rows `j_1, ..., j_d, x_1, ..., x_d`.
    pub fn to_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        use std::io::Write;
        let mut out = std::fs::File::create(path)?;
        let d = self.domain.d;
        writeln!(out, "# ball arrangement: delta = {}", self.delta)?;
        let jh: Vec<String> = (0..d).map(|a| format!("j{a}")).collect();
        let xh: Vec<String> = (0..d).map(|a| format!("x{a}")).collect();
        writeln!(out, "{},{}", jh.join(","), xh.join(","))?;
        for (j, x) in self.lattice_indices().iter().zip(&self.centers) {
            let js: Vec<String> = j[..d].iter().map(|v| v.to_string()).collect();
            let xs: Vec<String> = x[..d].iter().map(|v| v.to_string()).collect();
            writeln!(out, "{},{}", js.join(","), xs.join(","))?;
        }
        Ok(())
    }
}

/// Build an arrangement; all centers are validated against the containment
/// invariant and explicit violations are rejected naming the offending cell.
pub fn make_arrangement(
    domain: Domain,
    delta: f64,
    mode: ArrangementMode,
) -> Result<BallArrangement> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::InvalidParam(format!(
            "delta must be in (0, 1/2), got {delta}"
        )));
    }
    let j_max = lattice_extent(&domain);
    let lattice = lattice_points(&domain, j_max);
    let centers: Vec<Coord> = match mode {
        ArrangementMode::Periodic => lattice
            .iter()
            .map(|j| {
                let mut c = [0.0; MAX_DIM];
                for axis in 0..domain.d {
                    c[axis] = j[axis] as f64;
                }
                c
            })
            .collect(),
        ArrangementMode::Jitter { seed, amplitude } => {
            if amplitude < 0.0 || amplitude > 0.5 - delta + 1e-12 {
                return Err(Error::InvalidParam(format!(
                    "jitter amplitude must be in [0, 1/2 - delta], got {amplitude}"
                )));
            }
            let mut rng = seeded_rng(seed);
            lattice
                .iter()
                .map(|j| {
                    let mut c = [0.0; MAX_DIM];
                    for axis in 0..domain.d {
                        c[axis] = j[axis] as f64 + rng.random_range(-amplitude..=amplitude);
                    }
                    c
                })
                .collect()
        }
        ArrangementMode::Explicit(centers) => {
            if centers.len() != lattice.len() {
                return Err(Error::InvalidParam(format!(
                    "explicit mode needs {} centers (one per lattice cell), got {}",
                    lattice.len(),
                    centers.len()
                )));
            }
            centers
        }
    };
    let arr = BallArrangement {
        domain,
        delta,
        j_max,
        centers,
    };
    arr.validate()?;
    Ok(arr)
}

/// Per-node coverage weights in [0, 1]: the sub-cell volume fraction of the
/// ball union inside each node's cell.
#[derive(Debug, Clone)]
pub struct IndicatorField {
    pub grid: Grid,
    weights: Vec<f64>,
}

impl IndicatorField {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Whole-domain weight (identically one).
    pub fn whole(grid: Grid) -> Self {
        IndicatorField {
            grid,
            weights: vec![1.0; grid.total_nodes()],
        }
    }

    /// Total mass `sum weights * h^d`.
    pub fn mass(&self) -> f64 {
        self.weights.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn from_weights(grid: Grid, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != grid.total_nodes() {
            return Err(Error::GridMismatch(
                "indicator weights do not match the grid".into(),
            ));
        }
        if weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::InvalidParam(
                "indicator weights must lie in [0, 1]".into(),
            ));
        }
        Ok(IndicatorField { grid, weights })
    }
}

/// Coverage fractions for a cell given a membership predicate, estimated by
/// `s^d` sub-samples.
fn cell_fraction_sampled<F: Fn(&Coord) -> bool>(
    grid: &Grid,
    node: usize,
    subsamples: usize,
    covered: F,
) -> f64 {
    let d = grid.domain.d;
    let center = grid.coord_of(node);
    let s = subsamples.max(1);
    let total = s.pow(d as u32);
    let mut hits = 0usize;
    let mut p = [0.0; MAX_DIM];
    for k in 0..total {
        let mut rest = k;
        for axis in (0..d).rev() {
            let t = rest % s;
            rest /= s;
            p[axis] = center[axis] + ((t as f64 + 0.5) / s as f64 - 0.5) * grid.h;
        }
        if covered(&p) {
            hits += 1;
        }
    }
    hits as f64 / total as f64
}

/// Indicator of the ball union on a grid with the default sub-sampling.
pub fn indicator(arr: &BallArrangement, grid: &Grid) -> Result<IndicatorField> {
    indicator_with(arr, grid, DEFAULT_SUBSAMPLES)
}

/// Indicator of the ball union on a grid; `subsamples` points per axis.
pub fn indicator_with(
    arr: &BallArrangement,
    grid: &Grid,
    subsamples: usize,
) -> Result<IndicatorField> {
    if grid.domain != arr.domain {
        return Err(Error::GridMismatch(
            "indicator grid must live on the arrangement's domain".into(),
        ));
    }
    let weights: Vec<f64> = (0..grid.total_nodes())
        .map(|node| cell_fraction_sampled(grid, node, subsamples, |p| arr.covers(p)))
        .collect();
    IndicatorField::from_weights(*grid, weights)
}

/// Quadrature weight for [`integrate_sq`].
#[derive(Debug, Clone, Copy)]
pub enum Weight<'a> {
    /// Whole cube.
    Whole,
    /// Masked by an indicator field.
    Masked(&'a IndicatorField),
}

/// ∫ f^2 against a weight: `sum f^2 * w * h^d`.
pub fn integrate_sq(field: &ScalarField, weight: Weight<'_>) -> Result<f64> {
    let vol = field.grid.cell_volume();
    match weight {
        Weight::Whole => Ok(field.values().iter().map(|v| v * v).sum::<f64>() * vol),
        Weight::Masked(ind) => {
            if ind.grid != field.grid {
                return Err(Error::GridMismatch(
                    "indicator and field live on different grids".into(),
                ));
            }
            Ok(field
                .values()
                .iter()
                .zip(ind.weights())
                .map(|(v, w)| v * v * w)
                .sum::<f64>()
                * vol)
        }
    }
}

/// Measurable subsets with exact diameter and distance: Euclidean balls and
/// axis-aligned boxes.
#[derive(Debug, Clone)]
pub enum Region {
    Ball { center: Coord, radius: f64 },
    Box { min: Coord, max: Coord },
}

impl Region {
    pub fn ball(center: Coord, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParam(format!(
                "ball radius must be > 0, got {radius}"
            )));
        }
        Ok(Region::Ball { center, radius })
    }

    pub fn aligned_box(min: Coord, max: Coord, d: usize) -> Result<Self> {
        for axis in 0..d {
            if !(min[axis] < max[axis]) {
                return Err(Error::InvalidParam(format!(
                    "box must have min < max on every axis; axis {axis}: [{}, {}]",
                    min[axis], max[axis]
                )));
            }
        }
        Ok(Region::Box { min, max })
    }

    pub fn diameter(&self, d: usize) -> f64 {
        match self {
            Region::Ball { radius, .. } => 2.0 * radius,
            Region::Box { min, max } => {
                let mut s = 0.0;
                for axis in 0..d {
                    s += (max[axis] - min[axis]).powi(2);
                }
                s.sqrt()
            }
        }
    }

    /// Euclidean distance from a point to the set.
    pub fn distance_from(&self, p: &Coord, d: usize) -> f64 {
        match self {
            Region::Ball { center, radius } => {
                let mut s = 0.0;
                for axis in 0..d {
                    s += (p[axis] - center[axis]).powi(2);
                }
                (s.sqrt() - radius).max(0.0)
            }
            Region::Box { min, max } => {
                let mut s = 0.0;
                for axis in 0..d {
                    let gap = (min[axis] - p[axis]).max(p[axis] - max[axis]).max(0.0);
                    s += gap * gap;
                }
                s.sqrt()
            }
        }
    }

    /// Exact containment `B(center, radius) ⊂ self`.
    pub fn contains_ball(&self, center: &Coord, radius: f64, d: usize) -> bool {
        match self {
            Region::Ball {
                center: c,
                radius: r,
            } => {
                let mut s = 0.0;
                for axis in 0..d {
                    s += (center[axis] - c[axis]).powi(2);
                }
                s.sqrt() + radius <= *r + 1e-12
            }
            Region::Box { min, max } => (0..d).all(|axis| {
                center[axis] - radius >= min[axis] - 1e-12
                    && center[axis] + radius <= max[axis] + 1e-12
            }),
        }
    }

    /// Exact containment `self ⊂ other`.
    pub fn contained_in(&self, other: &Region, d: usize) -> bool {
        match self {
            Region::Ball { center, radius } => other.contains_ball(center, *radius, d),
            Region::Box { min, max } => match other {
                Region::Box {
                    min: omin,
                    max: omax,
                } => (0..d).all(|axis| {
                    min[axis] >= omin[axis] - 1e-12 && max[axis] <= omax[axis] + 1e-12
                }),
                Region::Ball { .. } => {
                    // a box is inside a ball iff all corners are
                    let corners = 1usize << d;
                    (0..corners).all(|mask| {
                        let mut corner = [0.0; MAX_DIM];
                        for axis in 0..d {
                            corner[axis] = if mask & (1 << axis) != 0 {
                                max[axis]
                            } else {
                                min[axis]
                            };
                        }
                        other.distance_from(&corner, d) <= 1e-12
                    })
                }
            },
        }
    }

    pub fn contains_point(&self, p: &Coord, d: usize) -> bool {
        match self {
            Region::Ball { center, radius } => {
                let mut s = 0.0;
                for axis in 0..d {
                    s += (p[axis] - center[axis]).powi(2);
                }
                s <= radius * radius
            }
            Region::Box { min, max } => {
                (0..d).all(|axis| p[axis] >= min[axis] && p[axis] <= max[axis])
            }
        }
    }

    /// Lebesgue measure.
    pub fn measure(&self, d: usize) -> f64 {
        match self {
            Region::Ball { radius, .. } => {
                let unit = match d {
                    1 => 2.0,
                    2 => std::f64::consts::PI,
                    _ => 4.0 * std::f64::consts::PI / 3.0,
                };
                unit * radius.powi(d as i32)
            }
            Region::Box { min, max } => (0..d).map(|axis| max[axis] - min[axis]).product(),
        }
    }

    /// Fraction of a node's cell inside the region. Boxes (and 1-d balls,
    /// which are intervals) use exact axis-overlap products; higher
    /// dimensional balls fall back to sub-sampling.
    pub fn cell_fraction(&self, grid: &Grid, node: usize, subsamples: usize) -> f64 {
        let d = grid.domain.d;
        let center = grid.coord_of(node);
        let h = grid.h;
        let overlap_1d = |lo: f64, hi: f64, axis: usize| -> f64 {
            let cell_lo = center[axis] - 0.5 * h;
            let cell_hi = center[axis] + 0.5 * h;
            ((hi.min(cell_hi) - lo.max(cell_lo)).max(0.0) / h).min(1.0)
        };
        match self {
            Region::Box { min, max } => {
                let mut frac = 1.0;
                for axis in 0..d {
                    frac *= overlap_1d(min[axis], max[axis], axis);
                }
                frac
            }
            Region::Ball { center: c, radius } if d == 1 => {
                overlap_1d(c[0] - radius, c[0] + radius, 0)
            }
            Region::Ball { .. } => {
                cell_fraction_sampled(grid, node, subsamples, |p| self.contains_point(p, d))
            }
        }
    }

    /// Indicator field of the region on a grid.
    pub fn indicator(&self, grid: &Grid, subsamples: usize) -> Result<IndicatorField> {
        let weights: Vec<f64> = (0..grid.total_nodes())
            .map(|node| self.cell_fraction(grid, node, subsamples))
            .collect();
        IndicatorField::from_weights(*grid, weights)
    }
}

/// ∫ f^2 over a region.
pub fn integrate_sq_region(field: &ScalarField, region: &Region, subsamples: usize) -> Result<f64> {
    let ind = region.indicator(&field.grid, subsamples)?;
    integrate_sq(field, Weight::Masked(&ind))
}

/// Geometric constellation of the quantitative unique-continuation theorems:
/// observation ball `B(x, delta)`, target set `Theta`, ambient region `G`,
/// scale `R` and (elliptic case) offset `D0`.
#[derive(Debug, Clone)]
pub struct QucGeometry {
    pub x: Coord,
    pub r_scale: f64,
    pub d0: f64,
    pub delta: f64,
    pub theta: Region,
    pub g: Region,
}

impl QucGeometry {
    pub fn new(x: Coord, r_scale: f64, d0: f64, delta: f64, theta: Region, g: Region, d: usize) -> Result<Self> {
        if !(r_scale > 0.0) {
            return Err(Error::InvalidParam(format!(
                "scale R must be > 0, got {r_scale}"
            )));
        }
        if !(delta > 0.0) {
            return Err(Error::InvalidParam(format!(
                "delta must be > 0, got {delta}"
            )));
        }
        if !theta.contained_in(&g, d) {
            return Err(Error::InvalidParam(
                "Theta must be a subset of G".into(),
            ));
        }
        Ok(QucGeometry {
            x,
            r_scale,
            d0,
            delta,
            theta,
            g,
        })
    }
}

/// Which theorem's hypotheses to evaluate.
#[derive(Debug, Clone)]
pub enum QucVariant {
    Schrodinger,
    Elliptic { params: EllipticityParams, mu: f64 },
}

/// Outcome of the geometric hypothesis check; every clause is evaluated
/// exactly and failures are reported by name.
#[derive(Debug, Clone)]
pub struct HypothesisReport {
    pub holds: bool,
    pub failed_clauses: Vec<String>,
    /// `C3 = e * mu` (elliptic variant only).
    pub c3: Option<f64>,
    /// Radius `12R + 2 D0` on which the assumption `A(. , theta1, theta2)`
    /// must separately be verified (elliptic variant only).
    pub required_assumption_radius: Option<f64>,
}

/// Evaluate the geometric (and, for the elliptic variant, the weight-scale)
/// hypotheses of the quantitative unique-continuation theorems.
pub fn check_quc_hypotheses(geo: &QucGeometry, variant: &QucVariant, d: usize) -> HypothesisReport {
    let mut failed = Vec::new();
    let diam = geo.theta.diameter(d);
    let dist = geo.theta.distance_from(&geo.x, d);
    let r = geo.r_scale;

    if diam + dist > 2.0 * r + 1e-12 {
        failed.push(format!(
            "diam(Theta) + dist(x, Theta) <= 2R violated: {} > {}",
            diam + dist,
            2.0 * r
        ));
    }
    if 2.0 * r > 2.0 * dist + 1e-12 {
        failed.push(format!(
            "2R <= 2 dist(x, Theta) violated: {} > {}",
            2.0 * r,
            2.0 * dist
        ));
    }

    let mut c3 = None;
    let mut required_radius = None;
    match variant {
        QucVariant::Schrodinger => {
            if !(geo.delta < 4.0 * r) {
                failed.push(format!(
                    "delta < 4R violated: {} >= {}",
                    geo.delta,
                    4.0 * r
                ));
            }
            if !geo.g.contains_ball(&geo.x, 14.0 * r, d) {
                failed.push(format!("B(x, 14R) subset G violated: 14R = {}", 14.0 * r));
            }
        }
        QucVariant::Elliptic { params, mu } => {
            if !(geo.delta <= 4.0 * r + 1e-12) {
                failed.push(format!(
                    "delta <= 4R violated: {} > {}",
                    geo.delta,
                    4.0 * r
                ));
            }
            if !(geo.d0 < 6.0 * r) {
                failed.push(format!("D0 < 6R violated: {} >= {}", geo.d0, 6.0 * r));
            }
            let radius = 12.0 * r + 2.0 * geo.d0;
            required_radius = Some(radius);
            if !geo.g.contains_ball(&geo.x, radius, d) {
                failed.push(format!(
                    "B(x, 12R + 2 D0) subset G violated: radius = {radius}"
                ));
            }
            let c3_val = std::f64::consts::E * mu;
            c3 = Some(c3_val);
            if !(params.theta1 * c3_val < 1.0 / (4.0 * r)) {
                failed.push(format!(
                    "theta1 * C3 < 1/(4R) violated: {} >= {}",
                    params.theta1 * c3_val,
                    1.0 / (4.0 * r)
                ));
            }
        }
    }

    HypothesisReport {
        holds: failed.is_empty(),
        failed_clauses: failed,
        c3,
        required_assumption_radius: required_radius,
    }
}
