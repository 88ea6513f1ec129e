//! Discretized Schrödinger operators `-Δ + V` and variable-coefficient
//! elliptic operators `-Σ ∂_i(a^{ij} ∂_j)` on cubes, with checkers for the
//! structural hypotheses placed on coefficients and solutions.
//!
//! Second-order central differences throughout. The elliptic diagonal terms
//! use the flux form with midpoint coefficients, cross terms use symmetrized
//! central differences; both preserve symmetry of the assembled matrix.

use crate::domain::{
    BoundaryCondition, CoefficientField, Domain, EllipticityParams, Grid, MultiIndex, ScalarField,
};
use crate::error::{Error, Result};
use crate::seeding::seeded_rng;
use crate::sparse::CsrMatrix;
use rand::Rng;

/// Default slack factor `c` in the differential-inequality tolerance
/// `c * h^2 * sup|psi|`.
pub const DEFAULT_SLACK_FACTOR: f64 = 10.0;

/// Pairs of nodes examined exhaustively by the Lipschitz check when the grid
/// has at most this many nodes; larger grids fall back to random pairs.
const ALL_PAIRS_NODE_LIMIT: usize = 10_000;
const RANDOM_PAIR_COUNT: usize = 100_000;

#[derive(Debug, Clone)]
pub enum OperatorKind {
    Schrodinger { v: ScalarField },
    Elliptic { a: CoefficientField, v: ScalarField },
}

/// Sparse symmetric discretization of a Schrödinger or elliptic operator.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub grid: Grid,
    pub kind: OperatorKind,
    matrix: CsrMatrix,
}

impl DiscreteOperator {
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// Apply the operator to a field on the same grid.
    pub fn apply(&self, f: &ScalarField) -> Result<ScalarField> {
        if f.grid != self.grid {
            return Err(Error::GridMismatch(
                "operator applied to a field on a different grid".into(),
            ));
        }
        let mut out = vec![0.0; f.len()];
        self.matrix.mul_vec(f.values(), &mut out);
        ScalarField::from_values(self.grid, out)
    }

    /// Apply to a raw slice (hot paths; caller guarantees the length).
    pub fn apply_slice(&self, x: &[f64], y: &mut [f64]) {
        self.matrix.mul_vec(x, y);
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        self.matrix.to_dense()
    }

    /// Gershgorin upper bound on the spectral radius.
    pub fn norm_estimate(&self) -> f64 {
        self.matrix.norm_estimate()
    }

    /// Gershgorin lower bound on the spectrum.
    pub fn spectrum_lower_bound(&self) -> f64 {
        self.matrix.lower_bound()
    }
}

fn neighbor(grid: &Grid, idx: &MultiIndex, axis: usize, step: i64) -> Option<MultiIndex> {
    let mut out = *idx;
    let i = idx[axis] as i64 + step;
    match grid.domain.bc {
        BoundaryCondition::Dirichlet => {
            if i < 0 || i >= grid.n as i64 {
                None
            } else {
                out[axis] = i as usize;
                Some(out)
            }
        }
        BoundaryCondition::Periodic => {
            out[axis] = i.rem_euclid(grid.n as i64) as usize;
            Some(out)
        }
    }
}

/// Standard (2d+1)-point Laplacian plus diagonal potential.
pub fn build_schrodinger(domain: Domain, n: usize, v: &ScalarField) -> Result<DiscreteOperator> {
    let grid = Grid::new(domain, n)?;
    if v.grid != grid {
        return Err(Error::GridMismatch(
            "potential V is not sampled on the grid implied by (domain, n)".into(),
        ));
    }
    let inv_h2 = 1.0 / (grid.h * grid.h);
    let d = domain.d;
    let total = grid.total_nodes();
    let mut triplets = Vec::with_capacity(total * (2 * d + 1));
    for lin in 0..total {
        let idx = grid.multi(lin);
        let mut diag = v.values()[lin];
        for axis in 0..d {
            diag += 2.0 * inv_h2;
            for step in [-1i64, 1] {
                if let Some(nb) = neighbor(&grid, &idx, axis, step) {
                    triplets.push((lin, grid.linear(&nb), -inv_h2));
                }
            }
        }
        triplets.push((lin, lin, diag));
    }
    Ok(DiscreteOperator {
        grid,
        kind: OperatorKind::Schrodinger { v: v.clone() },
        matrix: CsrMatrix::from_triplets(total, triplets),
    })
}

/// Flux-form discretization of `-Σ ∂_i(a^{ij} ∂_j) + V`.
///
/// Rejects non-elliptic coefficients (a node where the quadratic form is not
/// positive definite). With identity coefficients the assembled matrix equals
/// the Schrödinger one entry for entry.
pub fn build_elliptic(
    domain: Domain,
    n: usize,
    a: &CoefficientField,
    v: &ScalarField,
) -> Result<DiscreteOperator> {
    let grid = Grid::new(domain, n)?;
    if a.grid != grid || v.grid != grid {
        return Err(Error::GridMismatch(
            "coefficients or potential not sampled on the grid implied by (domain, n)".into(),
        ));
    }
    let d = domain.d;
    let total = grid.total_nodes();
    // ellipticity screen: strictly positive definite at every node
    for node in 0..total {
        let m = a.matrix_at(node);
        let eig = m.symmetric_eigenvalues();
        let lambda_min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        if lambda_min <= 0.0 {
            return Err(Error::NotElliptic { node, lambda_min });
        }
    }

    let inv_h2 = 1.0 / (grid.h * grid.h);
    let quarter_inv_h2 = 0.25 * inv_h2;
    let mut triplets = Vec::with_capacity(total * (2 * d + 1 + 4 * d * d));

    // diagonal terms in flux form with midpoint coefficients
    for lin in 0..total {
        let idx = grid.multi(lin);
        for axis in 0..d {
            // edge towards +1 on this axis; each interior edge visited once
            match neighbor(&grid, &idx, axis, 1) {
                Some(nb) => {
                    let nb_lin = grid.linear(&nb);
                    if grid.domain.bc == BoundaryCondition::Periodic || nb[axis] > idx[axis] {
                        let mid = 0.5 * (a.entry(lin, axis, axis) + a.entry(nb_lin, axis, axis));
                        triplets.push((lin, lin, mid * inv_h2));
                        triplets.push((nb_lin, nb_lin, mid * inv_h2));
                        triplets.push((lin, nb_lin, -mid * inv_h2));
                        triplets.push((nb_lin, lin, -mid * inv_h2));
                    }
                }
                None => {
                    // Dirichlet boundary edge; coefficient extended constantly
                    triplets.push((lin, lin, a.entry(lin, axis, axis) * inv_h2));
                }
            }
            if grid.domain.bc == BoundaryCondition::Dirichlet && idx[axis] == 0 {
                triplets.push((lin, lin, a.entry(lin, axis, axis) * inv_h2));
            }
        }
    }

    // cross terms: D_i^T diag(a^{ij}) D_j over ordered pairs i != j,
    // with central differences D
    for lin in 0..total {
        let idx = grid.multi(lin);
        for i in 0..d {
            for j in 0..d {
                if i == j {
                    continue;
                }
                let aij = a.entry(lin, i, j);
                if aij == 0.0 {
                    continue;
                }
                for (si, step_i) in [(-1.0f64, -1i64), (1.0, 1)] {
                    let Some(row_idx) = neighbor(&grid, &idx, i, step_i) else {
                        continue;
                    };
                    let row = grid.linear(&row_idx);
                    for (sj, step_j) in [(-1.0f64, -1i64), (1.0, 1)] {
                        let Some(col_idx) = neighbor(&grid, &idx, j, step_j) else {
                            continue;
                        };
                        let col = grid.linear(&col_idx);
                        triplets.push((row, col, si * sj * aij * quarter_inv_h2));
                    }
                }
            }
        }
    }

    for lin in 0..total {
        triplets.push((lin, lin, v.values()[lin]));
    }

    Ok(DiscreteOperator {
        grid,
        kind: OperatorKind::Elliptic {
            a: a.clone(),
            v: v.clone(),
        },
        matrix: CsrMatrix::from_triplets(total, triplets),
    })
}

/// Outcome of the `A(r, theta1, theta2)` hypothesis check.
#[derive(Debug, Clone)]
pub struct AssumptionReport {
    pub holds: bool,
    /// Smallest admissible theta1: max over in-ball nodes of
    /// `max(lambda_max(a), 1/lambda_min(a))`.
    pub worst_ellipticity: f64,
    /// Largest sampled ratio `Σ_ij |a^ij(x) - a^ij(y)| / |x - y|`.
    pub worst_lipschitz: f64,
    pub nodes_checked: usize,
    pub pairs_checked: usize,
}

/// Check the two-sided ellipticity and Lipschitz hypotheses of the
/// assumption `A(r, theta1, theta2)` on the ball `B(0, r)`.
///
/// Node pairs are examined exhaustively when the grid has at most 10^4 nodes
/// and by 10^5 seeded random pairs otherwise.
pub fn check_assumption_a(
    a: &CoefficientField,
    params: &EllipticityParams,
) -> Result<AssumptionReport> {
    let grid = a.grid;
    let half_side = grid.domain.half_side();
    if params.r > half_side + 1e-12 {
        return Err(Error::Coverage {
            r: params.r,
            half_side,
        });
    }
    let d = grid.domain.d;
    let in_ball: Vec<usize> = (0..grid.total_nodes())
        .filter(|&lin| crate::domain::norm(&grid.coord_of(lin), d) < params.r)
        .collect();

    let mut worst_ellipticity = 0.0f64;
    for &node in &in_ball {
        let eig = a.matrix_at(node).symmetric_eigenvalues();
        let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let needed = if lo > 0.0 { hi.max(1.0 / lo) } else { f64::INFINITY };
        worst_ellipticity = worst_ellipticity.max(needed);
    }

    let sum_abs_diff = |x: usize, y: usize| -> f64 {
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                s += (a.entry(x, i, j) - a.entry(y, i, j)).abs();
            }
        }
        s
    };
    let pair_ratio = |x: usize, y: usize| -> f64 {
        let cx = grid.coord_of(x);
        let cy = grid.coord_of(y);
        let mut dist2 = 0.0;
        for axis in 0..d {
            dist2 += (cx[axis] - cy[axis]).powi(2);
        }
        if dist2 == 0.0 {
            0.0
        } else {
            sum_abs_diff(x, y) / dist2.sqrt()
        }
    };

    let mut worst_lipschitz = 0.0f64;
    let mut pairs_checked = 0usize;
    if grid.total_nodes() <= ALL_PAIRS_NODE_LIMIT {
        for (k, &x) in in_ball.iter().enumerate() {
            for &y in &in_ball[k + 1..] {
                worst_lipschitz = worst_lipschitz.max(pair_ratio(x, y));
                pairs_checked += 1;
            }
        }
    } else if in_ball.len() >= 2 {
        let mut rng = seeded_rng(0x5EED_A11A);
        for _ in 0..RANDOM_PAIR_COUNT {
            let x = in_ball[rng.random_range(0..in_ball.len())];
            let y = in_ball[rng.random_range(0..in_ball.len())];
            if x != y {
                worst_lipschitz = worst_lipschitz.max(pair_ratio(x, y));
                pairs_checked += 1;
            }
        }
    }

    let holds = worst_ellipticity <= params.theta1 + 1e-12
        && worst_lipschitz <= params.theta2 + 1e-12;
    Ok(AssumptionReport {
        holds,
        worst_ellipticity,
        worst_lipschitz,
        nodes_checked: in_ball.len(),
        pairs_checked,
    })
}

/// Outcome of the pointwise differential-inequality check `|Lpsi| <= |V psi|`.
#[derive(Debug, Clone)]
pub struct DifferentialInequalityReport {
    pub holds: bool,
    /// Max over nodes of `|(op psi)(x)| - |V(x) psi(x)|`.
    pub max_violation: f64,
    /// Discretization slack `c * h^2 * sup|psi|` used in the comparison.
    pub tol: f64,
}

/// Check `|(op psi)(x)| <= |V(x) psi(x)| + tol` at every node, with
/// `tol = slack_factor * h^2 * sup|psi|` absorbing truncation error.
///
/// `op` is the differential operator being compared (typically built with a
/// zero potential so only the second-order part acts); the potential of the
/// inequality is passed separately as `v`. `slack_factor` defaults to 10.
pub fn check_differential_inequality(
    op: &DiscreteOperator,
    psi: &ScalarField,
    v: &ScalarField,
    slack_factor: Option<f64>,
) -> Result<DifferentialInequalityReport> {
    if psi.grid != op.grid || v.grid != op.grid {
        return Err(Error::GridMismatch(
            "psi and V must live on the operator's grid".into(),
        ));
    }
    let c = slack_factor.unwrap_or(DEFAULT_SLACK_FACTOR);
    let tol = c * op.grid.h * op.grid.h * psi.sup_norm();
    let op_psi = op.apply(psi)?;
    let mut max_violation = f64::NEG_INFINITY;
    for ((&lhs, &p), &vv) in op_psi
        .values()
        .iter()
        .zip(psi.values())
        .zip(v.values())
    {
        max_violation = max_violation.max(lhs.abs() - (vv * p).abs());
    }
    Ok(DifferentialInequalityReport {
        holds: max_violation <= tol,
        max_violation,
        tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::BoundaryCondition::{Dirichlet, Periodic};
    use approx::assert_relative_eq;

    fn zero_potential(domain: Domain, n: usize) -> ScalarField {
        ScalarField::zeros(Grid::new(domain, n).unwrap())
    }

    #[test]
    fn dirichlet_1d_smallest_eigenvalue_closed_form() {
        // oracle: eigenvalues of the tridiagonal Toeplitz matrix,
        // lambda_k = (2 - 2 cos(k pi / (n+1))) / h^2
        let domain = Domain::new(1, 1.0, Dirichlet).unwrap();
        let v = zero_potential(domain, 3);
        let op = build_schrodinger(domain, 3, &v).unwrap();
        let eig = op.to_dense().symmetric_eigenvalues();
        let mut ev: Vec<f64> = eig.iter().cloned().collect();
        ev.sort_by(f64::total_cmp);
        assert_relative_eq!(ev[0], 32.0 * (1.0 - (std::f64::consts::PI / 4.0).cos()), epsilon = 1e-10);
        assert_relative_eq!(ev[0], 9.372583002030478, epsilon = 1e-9);
    }

    #[test]
    fn apply_to_zero_field_is_zero() {
        let domain = Domain::new(2, 2.0, Dirichlet).unwrap();
        let v = zero_potential(domain, 6);
        let op = build_schrodinger(domain, 6, &v).unwrap();
        let zero = ScalarField::zeros(op.grid);
        let out = op.apply(&zero).unwrap();
        assert_eq!(out.sup_norm(), 0.0);
    }

    #[test]
    fn periodic_constant_in_kernel() {
        let domain = Domain::new(1, 3.0, Periodic).unwrap();
        let v = zero_potential(domain, 12);
        let op = build_schrodinger(domain, 12, &v).unwrap();
        let one = ScalarField::constant(op.grid, 1.0).unwrap();
        let out = op.apply(&one).unwrap();
        assert!(out.sup_norm() < 1e-12);
    }

    #[test]
    fn mismatched_potential_grid_rejected() {
        let domain = Domain::new(1, 1.0, Dirichlet).unwrap();
        let v = zero_potential(domain, 5);
        assert!(matches!(
            build_schrodinger(domain, 7, &v),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn elliptic_identity_reduces_to_schrodinger() {
        for (d, bc) in [(1, Dirichlet), (2, Dirichlet), (2, Periodic)] {
            let domain = Domain::new(d, 2.0, bc).unwrap();
            let n = 7;
            let grid = Grid::new(domain, n).unwrap();
            let v = ScalarField::sinusoidal(grid, 0.7, &vec![2.0; d], 0.3).unwrap();
            let a = CoefficientField::identity(grid);
            let schrod = build_schrodinger(domain, n, &v).unwrap();
            let ellip = build_elliptic(domain, n, &a, &v).unwrap();
            assert!(schrod.matrix().max_entry_diff(ellip.matrix()) < 1e-11);
        }
    }

    #[test]
    fn elliptic_constant_two_scales_laplacian() {
        // oracle: quadratic-form scaling, eigenvalues exactly doubled
        let domain = Domain::new(1, 1.0, Dirichlet).unwrap();
        let n = 3;
        let grid = Grid::new(domain, n).unwrap();
        let v = ScalarField::zeros(grid);
        let a = CoefficientField::constant(grid, &[2.0]).unwrap();
        let lap = build_schrodinger(domain, n, &v).unwrap();
        let ell = build_elliptic(domain, n, &a, &v).unwrap();
        let mut ev_l: Vec<f64> = lap.to_dense().symmetric_eigenvalues().iter().cloned().collect();
        let mut ev_e: Vec<f64> = ell.to_dense().symmetric_eigenvalues().iter().cloned().collect();
        ev_l.sort_by(f64::total_cmp);
        ev_e.sort_by(f64::total_cmp);
        for (l, e) in ev_l.iter().zip(&ev_e) {
            assert_relative_eq!(2.0 * l, *e, epsilon = 1e-9);
        }
    }

    #[test]
    fn elliptic_cross_terms_symmetric_positive() {
        // oracle: dense eigensolve on a 10x10 grid
        let domain = Domain::new(2, 1.0, Dirichlet).unwrap();
        let n = 10;
        let grid = Grid::new(domain, n).unwrap();
        let v = ScalarField::zeros(grid);
        let a = CoefficientField::constant(grid, &[1.0, 0.1, 0.1, 1.0]).unwrap();
        let op = build_elliptic(domain, n, &a, &v).unwrap();
        assert!(op.matrix().asymmetry() < 1e-12);
        let ev = op.to_dense().symmetric_eigenvalues();
        let lambda_min = ev.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(lambda_min > 0.0, "smallest eigenvalue {lambda_min} not positive");
    }

    #[test]
    fn elliptic_rejects_indefinite_coefficients() {
        let domain = Domain::new(2, 1.0, Dirichlet).unwrap();
        let grid = Grid::new(domain, 4).unwrap();
        let v = ScalarField::zeros(grid);
        // symmetric but indefinite: eigenvalues 1 +- 2
        let a = CoefficientField::constant(grid, &[1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(matches!(
            build_elliptic(domain, 4, &a, &v),
            Err(Error::NotElliptic { .. })
        ));
    }

    #[test]
    fn convergence_order_dirichlet_laplacian() {
        // |lambda_k(h) - k^2| shrinks by ~4 when h halves, k = 1, 2, 3
        let domain = Domain::new(1, std::f64::consts::PI, Dirichlet).unwrap();
        let errs = |n: usize| -> Vec<f64> {
            let v = zero_potential(domain, n);
            let op = build_schrodinger(domain, n, &v).unwrap();
            let mut ev: Vec<f64> = op.to_dense().symmetric_eigenvalues().iter().cloned().collect();
            ev.sort_by(f64::total_cmp);
            (1..=3).map(|k| (ev[k - 1] - (k * k) as f64).abs()).collect()
        };
        // halving h: n+1 doubles
        let coarse = errs(63);
        let fine = errs(127);
        for k in 0..3 {
            let factor = coarse[k] / fine[k];
            assert!(
                (3.4..=4.6).contains(&factor),
                "k={} factor {factor}",
                k + 1
            );
        }
    }

    #[test]
    fn assumption_a_identity_holds() {
        let domain = Domain::new(2, 2.0, Dirichlet).unwrap();
        let grid = Grid::new(domain, 9).unwrap();
        let a = CoefficientField::identity(grid);
        let params = EllipticityParams::new(0.9, 1.0, 0.0).unwrap();
        let report = check_assumption_a(&a, &params).unwrap();
        assert!(report.holds);
        assert_relative_eq!(report.worst_ellipticity, 1.0);
        assert_relative_eq!(report.worst_lipschitz, 0.0);
    }

    #[test]
    fn assumption_a_sinusoidal_bounds() {
        // a(x) = 2 + sin(x): range [1, 3], Lipschitz constant 1
        let domain = Domain::new(1, 8.0, Dirichlet).unwrap();
        let grid = Grid::new(domain, 400).unwrap();
        let a = CoefficientField::from_fn(grid, |x| vec![2.0 + x[0].sin()]).unwrap();
        let ok = check_assumption_a(&a, &EllipticityParams::new(3.0, 3.0, 1.0).unwrap()).unwrap();
        assert!(ok.holds, "range [1,3] within [1/3, 3], |sin x - sin y| <= |x-y|");
        let too_tight =
            check_assumption_a(&a, &EllipticityParams::new(3.0, 2.0, 1.0).unwrap()).unwrap();
        assert!(!too_tight.holds, "values up to 3 exceed theta1 = 2");
        assert!(too_tight.worst_ellipticity > 2.0);
    }

    #[test]
    fn assumption_a_coverage_error() {
        let domain = Domain::new(1, 2.0, Dirichlet).unwrap();
        let grid = Grid::new(domain, 10).unwrap();
        let a = CoefficientField::identity(grid);
        let params = EllipticityParams::new(1.5, 1.0, 0.0).unwrap();
        assert!(matches!(
            check_assumption_a(&a, &params),
            Err(Error::Coverage { .. })
        ));
    }

    #[test]
    fn differential_inequality_eigenvector_equality_case() {
        // (-Δ + V) psi = E psi with E folded into V: |Δ psi| = |(V - E) psi|
        let domain = Domain::new(1, 2.0, Dirichlet).unwrap();
        let n = 40;
        let grid = Grid::new(domain, n).unwrap();
        let v = ScalarField::sinusoidal(grid, 0.5, &[3.0], 0.0).unwrap();
        let op = build_schrodinger(domain, n, &v).unwrap();
        let dense = op.to_dense();
        let eig = nalgebra::SymmetricEigen::new(dense);
        // ground state
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let k = order[0];
        let e0 = eig.eigenvalues[k];
        let psi =
            ScalarField::from_values(grid, eig.eigenvectors.column(k).iter().cloned().collect())
                .unwrap();
        // shifted potential V - E has (-Δ + (V - E)) psi = 0
        let shifted =
            ScalarField::from_values(grid, v.values().iter().map(|&x| x - e0).collect()).unwrap();
        let laplacian = build_schrodinger(domain, n, &ScalarField::zeros(grid)).unwrap();
        let report =
            check_differential_inequality(&laplacian, &psi, &shifted, Some(10.0)).unwrap();
        assert!(report.holds);
        assert!(report.max_violation <= 1e-8);
    }

    #[test]
    fn differential_inequality_gaussian_bump_fails() {
        let domain = Domain::new(1, 4.0, Dirichlet).unwrap();
        let n = 80;
        let grid = Grid::new(domain, n).unwrap();
        let psi = ScalarField::from_fn(grid, |x| (-8.0 * x[0] * x[0]).exp()).unwrap();
        let v = ScalarField::zeros(grid);
        let laplacian = build_schrodinger(domain, n, &v).unwrap();
        let report = check_differential_inequality(&laplacian, &psi, &v, None).unwrap();
        assert!(!report.holds, "Δ of a bump is nonzero while V psi is zero");
        assert!(report.max_violation > report.tol);
    }

    #[test]
    fn differential_inequality_zero_solution() {
        let domain = Domain::new(1, 1.0, Dirichlet).unwrap();
        let grid = Grid::new(domain, 10).unwrap();
        let zero = ScalarField::zeros(grid);
        let op = build_schrodinger(domain, 10, &zero).unwrap();
        let report = check_differential_inequality(&op, &zero, &zero, None).unwrap();
        assert!(report.holds);
        assert_eq!(report.max_violation, 0.0);
    }
}
