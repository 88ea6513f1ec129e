//! Eigenpairs of discrete operators and spectral projectors assembled as
//! orthonormal bases of their ranges.
//!
//! Problems with at most `dense_threshold` nodes go through a dense
//! symmetric eigensolve (the correctness anchor); larger ones use
//! shift-invert Lanczos with full reorthogonalization, the shift placed
//! below the Gershgorin bound so the shifted operator is positive definite
//! and the inverse is applied by conjugate gradients.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand_distr::Distribution;

use crate::domain::{Grid, ScalarField};
use crate::error::{Error, Result};
use crate::operator::DiscreteOperator;
use crate::seeding::seeded_rng;

/// Tolerance for including eigenvalues that sit on a window endpoint.
pub const WINDOW_EDGE_TOL: f64 = 1e-10;

/// Energy window selecting part of the spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnergyWindow {
    /// `(-inf, E]`
    BelowE(f64),
    /// `[a, b]`
    Interval(f64, f64),
}

impl EnergyWindow {
    pub fn validate(&self) -> Result<()> {
        match *self {
            EnergyWindow::BelowE(e) => {
                if !e.is_finite() {
                    return Err(Error::InvalidParam("energy threshold must be finite".into()));
                }
            }
            EnergyWindow::Interval(a, b) => {
                if !(a <= b) {
                    return Err(Error::InvalidParam(format!(
                        "interval window requires a <= b, got [{a}, {b}]"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Closed-window membership with endpoint tolerance.
    pub fn contains(&self, e: f64) -> bool {
        match *self {
            EnergyWindow::BelowE(top) => e <= top + WINDOW_EDGE_TOL,
            EnergyWindow::Interval(a, b) => e >= a - WINDOW_EDGE_TOL && e <= b + WINDOW_EDGE_TOL,
        }
    }

    pub fn upper(&self) -> f64 {
        match *self {
            EnergyWindow::BelowE(top) => top,
            EnergyWindow::Interval(_, b) => b,
        }
    }
}

/// Orthonormal eigenbasis of the spectral projector onto a window.
///
/// Eigenvalues are sorted ascending; eigenfunctions carry unit discrete
/// L2 norm (cell weight `h^d`).
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    pub grid: Grid,
    pub window: EnergyWindow,
    pub operator_kind: String,
    pairs: Vec<(f64, ScalarField)>,
}

impl SpectralBasis {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn eigenvalue(&self, k: usize) -> f64 {
        self.pairs[k].0
    }

    pub fn eigenfunction(&self, k: usize) -> &ScalarField {
        &self.pairs[k].1
    }

    pub fn eigenvalues(&self) -> impl Iterator<Item = f64> + '_ {
        self.pairs.iter().map(|(e, _)| *e)
    }

    pub fn iter(&self) -> impl Iterator<Item = &(f64, ScalarField)> {
        self.pairs.iter()
    }

    /// Replace the basis by `basis * rotation` (m x m orthogonal matrix);
    /// spans are unchanged. Used to probe basis independence.
    pub fn rotated(&self, rotation: &DMatrix<f64>) -> Result<SpectralBasis> {
        let m = self.len();
        if rotation.nrows() != m || rotation.ncols() != m {
            return Err(Error::InvalidParam(format!(
                "rotation must be {m} x {m}"
            )));
        }
        let fields: Vec<&ScalarField> = self.pairs.iter().map(|(_, f)| f).collect();
        let mut pairs = Vec::with_capacity(m);
        for col in 0..m {
            let coeffs: Vec<f64> = (0..m).map(|row| rotation[(row, col)]).collect();
            let f = ScalarField::linear_combination(&fields, &coeffs)?;
            pairs.push((self.pairs[col].0, f));
        }
        Ok(SpectralBasis {
            grid: self.grid,
            window: self.window,
            operator_kind: self.operator_kind.clone(),
            pairs,
        })
    }

    /// CSV export: one row per pair, `eigenvalue` then node values.
    pub fn to_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        use std::io::Write;
        let mut out = std::fs::File::create(path)?;
        writeln!(out, "# spectral basis: one row per eigenpair")?;
        let names: Vec<String> = (0..self.grid.total_nodes())
            .map(|i| format!("v{i}"))
            .collect();
        writeln!(out, "eigenvalue,{}", names.join(","))?;
        for (e, f) in &self.pairs {
            let vals: Vec<String> = f.values().iter().map(|v| v.to_string()).collect();
            writeln!(out, "{e},{}", vals.join(","))?;
        }
        Ok(())
    }
}

/// Eigensolver knobs; defaults match the documented behavior.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Dense symmetric eigensolve up to this many nodes.
    pub dense_threshold: usize,
    /// Relative residual tolerance `||op v - e v|| <= tol * ||op||`.
    pub residual_tol: f64,
    /// Hard cap on the Krylov dimension of the Lanczos path.
    pub max_lanczos_dim: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            dense_threshold: 2000,
            residual_tol: 1e-8,
            max_lanczos_dim: 600,
        }
    }
}

fn operator_kind_tag(op: &DiscreteOperator) -> String {
    match &op.kind {
        crate::operator::OperatorKind::Schrodinger { .. } => "schrodinger".into(),
        crate::operator::OperatorKind::Elliptic { .. } => "elliptic".into(),
    }
}

/// All eigenpairs of `op` inside `window`, with default solver options.
pub fn spectrum_below(op: &DiscreteOperator, window: EnergyWindow) -> Result<SpectralBasis> {
    spectrum_below_with(op, window, &SolverOptions::default())
}

/// All eigenpairs of `op` inside `window`.
///
/// An empty window is not an error: the returned basis has zero vectors.
pub fn spectrum_below_with(
    op: &DiscreteOperator,
    window: EnergyWindow,
    options: &SolverOptions,
) -> Result<SpectralBasis> {
    window.validate()?;
    let total = op.grid.total_nodes();
    let (eigenvalues, vectors) = if total <= options.dense_threshold {
        dense_eigenpairs_below(op, &window)?
    } else {
        lanczos_eigenpairs_below(op, &window, options)?
    };

    let scale = op.grid.cell_volume().sqrt();
    let mut pairs = Vec::with_capacity(eigenvalues.len());
    for (e, v) in eigenvalues.into_iter().zip(vectors) {
        // Euclidean-unit vector -> unit discrete L2 norm
        let values: Vec<f64> = v.iter().map(|x| x / scale).collect();
        pairs.push((e, ScalarField::from_values(op.grid, values)?));
    }
    let basis = SpectralBasis {
        grid: op.grid,
        window,
        operator_kind: operator_kind_tag(op),
        pairs,
    };
    verify_basis(op, &basis, options)?;
    Ok(basis)
}

/// Residual and orthonormality verification of a computed basis.
fn verify_basis(op: &DiscreteOperator, basis: &SpectralBasis, options: &SolverOptions) -> Result<()> {
    let norm = op.norm_estimate().max(1.0);
    let vol = op.grid.cell_volume();
    let mut work = vec![0.0; op.grid.total_nodes()];
    for (e, f) in basis.iter() {
        op.apply_slice(f.values(), &mut work);
        let mut res2 = 0.0;
        for (w, v) in work.iter().zip(f.values()) {
            let r = w - e * v;
            res2 += r * r;
        }
        let res = (res2 * vol).sqrt();
        if res > options.residual_tol * norm {
            return Err(Error::SolverFailure {
                residual: res / norm,
                iterations: 0,
            });
        }
    }
    for i in 0..basis.len() {
        for j in i..basis.len() {
            let g = basis.eigenfunction(i).inner(basis.eigenfunction(j))?;
            let target = if i == j { 1.0 } else { 0.0 };
            if (g - target).abs() > 1e-8 {
                return Err(Error::SolverFailure {
                    residual: (g - target).abs(),
                    iterations: 0,
                });
            }
        }
    }
    Ok(())
}

fn dense_eigenpairs_below(
    op: &DiscreteOperator,
    window: &EnergyWindow,
) -> Result<(Vec<f64>, Vec<DVector<f64>>)> {
    let dense = op.to_dense();
    let eig = nalgebra::SymmetricEigen::new(dense);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut evs = Vec::new();
    let mut vecs = Vec::new();
    for &k in &order {
        let e = eig.eigenvalues[k];
        if window.contains(e) {
            evs.push(e);
            vecs.push(DVector::from_iterator(n, eig.eigenvectors.column(k).iter().cloned()));
        }
    }
    Ok((evs, vecs))
}

/// Conjugate gradients for the positive definite shifted operator.
fn cg_solve(
    op: &DiscreteOperator,
    shift: f64,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<()> {
    let n = b.len();
    let mut r = b.to_vec();
    x.iter_mut().for_each(|v| *v = 0.0);
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let bnorm2: f64 = b.iter().map(|v| v * v).sum();
    if bnorm2 == 0.0 {
        return Ok(());
    }
    let mut rs: f64 = bnorm2;
    for _ in 0..max_iter {
        op.apply_slice(&p, &mut ap);
        for (a, pv) in ap.iter_mut().zip(&p) {
            *a -= shift * pv;
        }
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        let alpha = rs / pap;
        for ((xv, pv), (rv, av)) in x.iter_mut().zip(&p).zip(r.iter_mut().zip(&ap)) {
            *xv += alpha * pv;
            *rv -= alpha * av;
        }
        let rs_new: f64 = r.iter().map(|v| v * v).sum();
        if rs_new <= tol * tol * bnorm2 {
            return Ok(());
        }
        let beta = rs_new / rs;
        rs = rs_new;
        for (pv, rv) in p.iter_mut().zip(&r) {
            *pv = rv + beta * *pv;
        }
    }
    Err(Error::SolverFailure {
        residual: (rs / bnorm2).sqrt(),
        iterations: max_iter,
    })
}

/// Shift-invert Lanczos with full reorthogonalization.
fn lanczos_eigenpairs_below(
    op: &DiscreteOperator,
    window: &EnergyWindow,
    options: &SolverOptions,
) -> Result<(Vec<f64>, Vec<DVector<f64>>)> {
    let n = op.grid.total_nodes();
    let max_dim = options.max_lanczos_dim.min(n);
    let shift = op.spectrum_lower_bound() - 1.0;
    let top = window.upper();
    let cg_tol = 1e-13;
    let cg_max = (10 * n).max(20_000);

    let mut rng = seeded_rng(0x1A2C_05E5);
    let normal = rand_distr::StandardNormal;
    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();

    let mut v: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
    normalize(&mut v);
    q.push(v);

    let mut solved = vec![0.0; n];
    loop {
        let j = q.len() - 1;
        let iterations = j + 1;
        // w = B q_j, B = (A - shift)^{-1}
        cg_solve(op, shift, &q[j], &mut solved, cg_tol, cg_max)?;
        let mut w = solved.clone();
        let alpha: f64 = w.iter().zip(&q[j]).map(|(a, b)| a * b).sum();
        alphas.push(alpha);
        // full reorthogonalization, twice for stability
        for _ in 0..2 {
            for qi in &q {
                let proj: f64 = w.iter().zip(qi).map(|(a, b)| a * b).sum();
                for (wv, qv) in w.iter_mut().zip(qi) {
                    *wv -= proj * qv;
                }
            }
        }
        let beta = norm2(&w);

        // Ritz extraction on the tridiagonal
        let m = alphas.len();
        let mut t = DMatrix::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alphas[i];
            if i + 1 < m {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let eig = nalgebra::SymmetricEigen::new(t);
        // Ritz values of B sorted descending <-> eigenvalues of A ascending
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

        // inexact (CG) application of B floors the attainable residual at
        // roughly cg_tol * ||B||, so convergence is judged against theta_max
        let theta_max = eig.eigenvalues[order[0]].abs().max(1e-30);
        let mut in_window_converged = true;
        let mut have_guard = false;
        let mut count_below = 0usize;
        for &k in &order {
            let theta = eig.eigenvalues[k];
            if theta <= 0.0 {
                continue;
            }
            let lambda = shift + 1.0 / theta;
            let subspace_res = beta * eig.eigenvectors[(m - 1, k)].abs();
            let converged = subspace_res <= 1e-11 * theta_max;
            if lambda <= top + WINDOW_EDGE_TOL {
                count_below += 1;
                if !converged {
                    in_window_converged = false;
                }
            } else if converged {
                // a converged eigenvalue above the window certifies completeness
                have_guard = true;
            }
        }
        let exhausted = m == n;
        if (count_below > 0 || m > 8) && in_window_converged && (have_guard || exhausted) {
            // assemble Ritz vectors for window eigenvalues
            let mut evs = Vec::new();
            let mut vecs = Vec::new();
            for &k in order.iter().rev() {
                let theta = eig.eigenvalues[k];
                if theta <= 0.0 {
                    continue;
                }
                let lambda = shift + 1.0 / theta;
                if window.contains(lambda) {
                    let mut vec = vec![0.0; n];
                    for (i, qi) in q.iter().enumerate() {
                        let c = eig.eigenvectors[(i, k)];
                        for (vv, qv) in vec.iter_mut().zip(qi) {
                            *vv += c * qv;
                        }
                    }
                    normalize(&mut vec);
                    evs.push(lambda);
                    vecs.push(DVector::from_column_slice(&vec));
                }
            }
            let mut order2: Vec<usize> = (0..evs.len()).collect();
            order2.sort_by(|&a, &b| evs[a].total_cmp(&evs[b]));
            let evs_sorted: Vec<f64> = order2.iter().map(|&i| evs[i]).collect();
            let vecs_sorted: Vec<DVector<f64>> = order2.into_iter().map(|i| vecs[i].clone()).collect();
            return Ok((evs_sorted, vecs_sorted));
        }
        if m >= max_dim {
            return Err(Error::SolverFailure {
                residual: beta,
                iterations,
            });
        }
        if beta < 1e-14 {
            // invariant subspace hit; restart direction orthogonal to current
            let mut fresh: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
            for _ in 0..2 {
                for qi in &q {
                    let proj: f64 = fresh.iter().zip(qi).map(|(a, b)| a * b).sum();
                    for (fv, qv) in fresh.iter_mut().zip(qi) {
                        *fv -= proj * qv;
                    }
                }
            }
            let fn2 = norm2(&fresh);
            if fn2 < 1e-14 {
                return Err(Error::SolverFailure {
                    residual: beta,
                    iterations,
                });
            }
            for fv in fresh.iter_mut() {
                *fv /= fn2;
            }
            betas.push(0.0);
            q.push(fresh);
        } else {
            for wv in w.iter_mut() {
                *wv /= beta;
            }
            betas.push(beta);
            q.push(w);
        }
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize(v: &mut [f64]) {
    let n = norm2(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// Expansion coefficients `alpha_k = <psi_k, psi>` in the discrete inner
/// product with cell weight `h^d`.
pub fn expand(basis: &SpectralBasis, psi: &ScalarField) -> Result<Vec<f64>> {
    if psi.grid != basis.grid {
        return Err(Error::GridMismatch(
            "field expanded over a basis on a different grid".into(),
        ));
    }
    basis.iter().map(|(_, f)| f.inner(psi)).collect()
}

/// Unit-norm random element of the basis span: seeded standard normal
/// coefficients, normalized.
pub fn random_in_range(basis: &SpectralBasis, seed: u64) -> Result<ScalarField> {
    if basis.is_empty() {
        return Err(Error::EmptyBasis(
            "random element of an empty spectral subspace".into(),
        ));
    }
    let mut rng = seeded_rng(seed);
    let normal = rand_distr::StandardNormal;
    let mut coeffs: Vec<f64> = (0..basis.len()).map(|_| normal.sample(&mut rng)).collect();
    let nrm = norm2(&coeffs);
    if nrm == 0.0 {
        coeffs[0] = 1.0;
    } else {
        coeffs.iter_mut().for_each(|c| *c /= nrm);
    }
    let fields: Vec<&ScalarField> = basis.iter().map(|(_, f)| f).collect();
    ScalarField::linear_combination(&fields, &coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::BoundaryCondition::{Dirichlet, Periodic};
    use crate::domain::Domain;
    use crate::operator::build_schrodinger;
    use approx::assert_relative_eq;

    fn laplacian_1d(l: f64, n: usize, bc: crate::domain::BoundaryCondition) -> DiscreteOperator {
        let domain = Domain::new(1, l, bc).unwrap();
        let grid = Grid::new(domain, n).unwrap();
        build_schrodinger(domain, n, &ScalarField::zeros(grid)).unwrap()
    }

    #[test]
    fn dirichlet_modes_below_five() {
        // continuum eigenvalues k^2 on (0, pi); h^2 accuracy
        let op = laplacian_1d(std::f64::consts::PI, 400, Dirichlet);
        let basis = spectrum_below(&op, EnergyWindow::BelowE(5.0)).unwrap();
        assert_eq!(basis.len(), 2);
        assert_relative_eq!(basis.eigenvalue(0), 1.0, epsilon = 1e-3);
        assert_relative_eq!(basis.eigenvalue(1), 4.0, epsilon = 1e-3);
    }

    #[test]
    fn window_below_ground_state_is_empty() {
        let op = laplacian_1d(1.0, 30, Dirichlet);
        let basis = spectrum_below(&op, EnergyWindow::BelowE(1.0)).unwrap();
        assert!(basis.is_empty());
    }

    #[test]
    fn periodic_kernel_is_constant() {
        let op = laplacian_1d(3.0, 60, Periodic);
        let basis = spectrum_below(&op, EnergyWindow::BelowE(0.5)).unwrap();
        assert_eq!(basis.len(), 1);
        assert!(basis.eigenvalue(0).abs() < 1e-10);
        let f = basis.eigenfunction(0);
        let spread = f
            .values()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        assert!((spread.1 - spread.0).abs() < 1e-8, "kernel vector not constant");
    }

    #[test]
    fn expansion_recovers_coefficients() {
        let op = laplacian_1d(std::f64::consts::PI, 200, Dirichlet);
        let basis = spectrum_below(&op, EnergyWindow::BelowE(11.0)).unwrap();
        assert!(basis.len() >= 3);
        let fields: Vec<&ScalarField> = basis.iter().map(|(_, f)| f).collect();
        let mut coeffs = vec![0.0; basis.len()];
        coeffs[0] = 2.0;
        coeffs[1] = 3.0;
        let psi = ScalarField::linear_combination(&fields, &coeffs).unwrap();
        let alphas = expand(&basis, &psi).unwrap();
        assert_relative_eq!(alphas[0], 2.0, epsilon = 1e-10);
        assert_relative_eq!(alphas[1], 3.0, epsilon = 1e-10);
        for &a in &alphas[2..] {
            assert!(a.abs() < 1e-10);
        }
    }

    #[test]
    fn expansion_of_first_eigenfunction() {
        let op = laplacian_1d(2.0, 100, Dirichlet);
        let basis = spectrum_below(&op, EnergyWindow::BelowE(40.0)).unwrap();
        let alphas = expand(&basis, basis.eigenfunction(0)).unwrap();
        assert_relative_eq!(alphas[0].abs(), 1.0, epsilon = 1e-10);
        for &a in &alphas[1..] {
            assert!(a.abs() < 1e-10);
        }
    }

    #[test]
    fn random_element_deterministic_and_unit() {
        let op = laplacian_1d(2.0, 100, Dirichlet);
        let basis = spectrum_below(&op, EnergyWindow::BelowE(40.0)).unwrap();
        let f1 = random_in_range(&basis, 99).unwrap();
        let f2 = random_in_range(&basis, 99).unwrap();
        assert_eq!(f1.values(), f2.values());
        assert_relative_eq!(f1.norm_l2(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn random_element_of_singleton_basis() {
        let op = laplacian_1d(1.0, 40, Dirichlet);
        let basis = spectrum_below(&op, EnergyWindow::BelowE(15.0)).unwrap();
        assert_eq!(basis.len(), 1);
        let f = random_in_range(&basis, 3).unwrap();
        let alpha = f.inner(basis.eigenfunction(0)).unwrap();
        assert_relative_eq!(alpha.abs(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn empty_basis_random_errors() {
        let op = laplacian_1d(1.0, 40, Dirichlet);
        let basis = spectrum_below(&op, EnergyWindow::BelowE(-100.0)).unwrap();
        assert!(matches!(
            random_in_range(&basis, 1),
            Err(Error::EmptyBasis(_))
        ));
    }

    #[test]
    fn interval_window_selects_middle_modes() {
        let op = laplacian_1d(std::f64::consts::PI, 300, Dirichlet);
        // continuum eigenvalues 1, 4, 9, 16...
        let basis = spectrum_below(&op, EnergyWindow::Interval(2.0, 10.0)).unwrap();
        assert_eq!(basis.len(), 2);
        assert_relative_eq!(basis.eigenvalue(0), 4.0, epsilon = 1e-2);
        assert_relative_eq!(basis.eigenvalue(1), 9.0, epsilon = 1e-2);
    }

    #[test]
    fn lanczos_matches_dense_oracle() {
        // force the iterative path on a problem small enough to cross-check
        let op = laplacian_1d(std::f64::consts::PI, 350, Dirichlet);
        let window = EnergyWindow::BelowE(30.0);
        let dense = spectrum_below(&op, window).unwrap();
        let forced = SolverOptions {
            dense_threshold: 10,
            ..SolverOptions::default()
        };
        let lanczos = spectrum_below_with(&op, window, &forced).unwrap();
        assert_eq!(dense.len(), lanczos.len(), "eigenvalue count below E");
        for k in 0..dense.len() {
            assert_relative_eq!(
                dense.eigenvalue(k),
                lanczos.eigenvalue(k),
                max_relative = 1e-8
            );
        }
    }

    #[test]
    fn lanczos_with_potential_matches_dense() {
        let domain = Domain::new(1, 5.0, Dirichlet).unwrap();
        let n = 220;
        let grid = Grid::new(domain, n).unwrap();
        let v = ScalarField::random_uniform(grid, 11, 1.0).unwrap();
        let op = build_schrodinger(domain, n, &v).unwrap();
        let window = EnergyWindow::BelowE(8.0);
        let dense = spectrum_below(&op, window).unwrap();
        let forced = SolverOptions {
            dense_threshold: 10,
            ..SolverOptions::default()
        };
        let lanczos = spectrum_below_with(&op, window, &forced).unwrap();
        assert_eq!(dense.len(), lanczos.len());
        for k in 0..dense.len() {
            assert_relative_eq!(
                dense.eigenvalue(k),
                lanczos.eigenvalue(k),
                max_relative = 1e-8
            );
        }
    }

    #[test]
    fn exhausted_krylov_space_reports_failure() {
        let op = laplacian_1d(2.0, 60, Dirichlet);
        let starved = SolverOptions {
            dense_threshold: 1,
            max_lanczos_dim: 3,
            ..SolverOptions::default()
        };
        match spectrum_below_with(&op, EnergyWindow::BelowE(100.0), &starved) {
            Err(Error::SolverFailure { iterations, .. }) => assert!(iterations <= 3),
            other => panic!("expected solver failure, got {other:?}"),
        }
    }

    #[test]
    fn projector_monotonicity_subspace_nesting() {
        let op = laplacian_1d(std::f64::consts::PI, 250, Dirichlet);
        let big = spectrum_below(&op, EnergyWindow::BelowE(20.0)).unwrap();
        let small = spectrum_below(&op, EnergyWindow::Interval(3.0, 20.0)).unwrap();
        assert!(small.len() < big.len());
        // projection residual of each small vector onto the big span
        let big_fields: Vec<&ScalarField> = big.iter().map(|(_, f)| f).collect();
        for (_, f) in small.iter() {
            let alphas = expand(&big, f).unwrap();
            let proj = ScalarField::linear_combination(&big_fields, &alphas).unwrap();
            let mut res2 = 0.0;
            for (p, v) in proj.values().iter().zip(f.values()) {
                res2 += (p - v) * (p - v);
            }
            let res = (res2 * f.grid.cell_volume()).sqrt();
            assert!(res <= 1e-8, "projection residual {res}");
        }
    }

    #[test]
    fn coefficient_direction_uniform_on_circle() {
        // chi-square goodness of fit for the angle of (alpha_1, alpha_2)
        // over 10^4 draws; critical value for p = 0.01 at 15 dof.
        let op = laplacian_1d(std::f64::consts::PI, 120, Dirichlet);
        let basis = spectrum_below(&op, EnergyWindow::BelowE(5.0)).unwrap();
        assert_eq!(basis.len(), 2);
        let bins = 16usize;
        let draws = 10_000usize;
        let mut counts = vec![0usize; bins];
        for s in 0..draws {
            let f = random_in_range(&basis, s as u64).unwrap();
            let a1 = f.inner(basis.eigenfunction(0)).unwrap();
            let a2 = f.inner(basis.eigenfunction(1)).unwrap();
            let angle = a2.atan2(a1);
            let t = (angle + std::f64::consts::PI) / (2.0 * std::f64::consts::PI);
            let bin = ((t * bins as f64) as usize).min(bins - 1);
            counts[bin] += 1;
        }
        let expected = draws as f64 / bins as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        // chi2 inverse survival at p = 0.01, 15 dof
        assert!(chi2 < 30.577914166892494, "chi2 = {chi2}");
    }
}
