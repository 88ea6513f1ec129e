//! Extension of a spectral-subspace element to one extra dimension:
//! `F(x, y) = sum_k alpha_k psi_k(x) s_k(y)` with the case functions `s_k`
//! chosen so that `ΔF = V F` on the product domain and the y-derivative of
//! `F` at `y = 0` reproduces the projected field.

use std::path::Path;

use crate::domain::ScalarField;
use crate::error::{Error, Result};
use crate::operator::build_schrodinger;
use crate::spectral::{expand, SpectralBasis};

/// Energies with `|E|` below this go through the linear branch of [`s_case`].
pub const S_CASE_LINEAR_CUTOFF: f64 = 1e-12;

/// Growth guard: `max E_k * Y^2` above this flags a scaling warning.
pub const GROWTH_GUARD: f64 = 50.0;

/// The three-branch case function:
/// `sinh(sqrt(E) y)/sqrt(E)` for `E > 0`, `y` at `E = 0`,
/// `sin(sqrt(|E|) y)/sqrt(|E|)` for `E < 0`. Continuous in `E` at 0, odd in
/// `y`, with `s'(0) = 1` in every branch.
pub fn s_case(e: f64, y: f64) -> f64 {
    if e.abs() < S_CASE_LINEAR_CUTOFF {
        y
    } else if e > 0.0 {
        let a = e.sqrt();
        (a * y).sinh() / a
    } else {
        let a = (-e).sqrt();
        (a * y).sin() / a
    }
}

/// `F` on the product grid `base grid x {j dy : |j| <= ny}`.
#[derive(Debug, Clone)]
pub struct ExtensionField {
    /// Eigenvalues `E_k` of the modes entering the sum.
    pub energies: Vec<f64>,
    /// Expansion coefficients `alpha_k = <psi_k, psi>`.
    pub alphas: Vec<f64>,
    /// Projection of the boundary field onto the basis span,
    /// `sum_k alpha_k psi_k`; the target of the derivative identity.
    pub trace_target: ScalarField,
    /// Half-width of the ghost interval `[-Y, Y]`.
    pub y_max: f64,
    /// Steps per side; nodes `y_j = j dy`, `j = -ny ..= ny`.
    pub ny: usize,
    pub dy: f64,
    /// True when `max E_k * Y^2` exceeds the sinh growth guard.
    pub scaling_warning: bool,
    /// Row-major `(y index, base node)` values.
    values: Vec<f64>,
}

impl ExtensionField {
    pub fn base_nodes(&self) -> usize {
        self.trace_target.grid.total_nodes()
    }

    /// Value `F(node, j dy)`, `j` counted from `-ny`.
    pub fn value(&self, y_index: usize, node: usize) -> f64 {
        self.values[y_index * self.base_nodes() + node]
    }

    /// Slice of `F` at one y level.
    pub fn slice(&self, y_index: usize) -> &[f64] {
        let n = self.base_nodes();
        &self.values[y_index * n..(y_index + 1) * n]
    }

    pub fn y_coord(&self, y_index: usize) -> f64 {
        (y_index as f64 - self.ny as f64) * self.dy
    }

    pub fn y_levels(&self) -> usize {
        2 * self.ny + 1
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// CSV rows `y, i_1, ..., i_d, value`, one slice after another.
    pub fn to_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        use std::io::Write;
        let grid = self.trace_target.grid;
        let d = grid.domain.d;
        let mut out = std::fs::File::create(path)?;
        writeln!(out, "# ghost-dimension extension on the product grid")?;
        let idx_names: Vec<String> = (0..d).map(|a| format!("i{a}")).collect();
        writeln!(out, "y,{},value", idx_names.join(","))?;
        for j in 0..self.y_levels() {
            let y = self.y_coord(j);
            for node in 0..self.base_nodes() {
                let mi = grid.multi(node);
                let cols: Vec<String> = mi[..d].iter().map(|i| i.to_string()).collect();
                writeln!(out, "{y},{},{}", cols.join(","), self.value(j, node))?;
            }
        }
        Ok(())
    }
}

/// Assemble the extension of `psi` (projected onto the basis span) on the
/// product grid with `ny` steps per side of `[-y_max, y_max]`.
pub fn build_extension(
    basis: &SpectralBasis,
    psi: &ScalarField,
    y_max: f64,
    ny: usize,
) -> Result<ExtensionField> {
    if basis.is_empty() {
        return Err(Error::EmptyBasis(
            "extension of the empty spectral subspace".into(),
        ));
    }
    if !(y_max > 0.0) || ny < 2 {
        return Err(Error::InvalidParam(format!(
            "extension needs y_max > 0 and ny >= 2, got y_max = {y_max}, ny = {ny}"
        )));
    }
    let alphas = expand(basis, psi)?;
    let energies: Vec<f64> = basis.eigenvalues().collect();
    let fields: Vec<&ScalarField> = basis.iter().map(|(_, f)| f).collect();
    let trace_target = ScalarField::linear_combination(&fields, &alphas)?;

    let max_e = energies.iter().cloned().fold(0.0f64, f64::max);
    let scaling_warning = max_e * y_max * y_max > GROWTH_GUARD;

    let dy = y_max / ny as f64;
    let n = basis.grid.total_nodes();
    let levels = 2 * ny + 1;
    let mut values = vec![0.0; levels * n];
    for j in 0..levels {
        let y = (j as f64 - ny as f64) * dy;
        let slice = &mut values[j * n..(j + 1) * n];
        for ((&e, &alpha), (_, f)) in energies.iter().zip(&alphas).zip(basis.iter()) {
            let s = s_case(e, y);
            if alpha == 0.0 || s == 0.0 {
                continue;
            }
            let c = alpha * s;
            for (out, v) in slice.iter_mut().zip(f.values()) {
                *out += c * v;
            }
        }
    }
    Ok(ExtensionField {
        energies,
        alphas,
        trace_target,
        y_max,
        ny,
        dy,
        scaling_warning,
        values,
    })
}

/// Residuals of the defining identities of the extension.
#[derive(Debug, Clone, Copy)]
pub struct ResidualReport {
    /// `||Δ_{d+1} F - V F||_2 / ||F||_2` over interior product nodes.
    pub l2_residual: f64,
    /// `||∂_y F(., 0) - trace||_2 / ||trace||_2`, one-sided second-order
    /// differencing at `y = 0`.
    pub boundary_error: f64,
}

/// Evaluate the residual of `ΔF = VF` (base stencil plus second difference
/// in y) and of the boundary-derivative identity.
pub fn residual(ext: &ExtensionField, v: &ScalarField) -> Result<ResidualReport> {
    let grid = ext.trace_target.grid;
    if v.grid != grid {
        return Err(Error::GridMismatch(
            "potential must live on the extension's base grid".into(),
        ));
    }
    let laplacian = build_schrodinger(grid.domain, grid.n, &ScalarField::zeros(grid))?;
    let n = grid.total_nodes();
    let inv_dy2 = 1.0 / (ext.dy * ext.dy);

    let mut res2 = 0.0;
    let mut f2 = 0.0;
    let mut lap_slice = vec![0.0; n];
    for j in 1..(ext.y_levels() - 1) {
        let mid = ext.slice(j);
        let up = ext.slice(j + 1);
        let down = ext.slice(j - 1);
        laplacian.apply_slice(mid, &mut lap_slice);
        for i in 0..n {
            // Δ_x F = -(discrete -Δ) F; add the y second difference
            let lap = -lap_slice[i] + (up[i] - 2.0 * mid[i] + down[i]) * inv_dy2;
            let r = lap - v.values()[i] * mid[i];
            res2 += r * r;
            f2 += mid[i] * mid[i];
        }
    }
    if f2 == 0.0 {
        return Err(Error::UndefinedRatio(
            "residual of the identically zero extension".into(),
        ));
    }
    let l2_residual = (res2 / f2).sqrt();

    // one-sided O(dy^2) derivative at y = 0 into y > 0
    let at0 = ext.slice(ext.ny);
    let at1 = ext.slice(ext.ny + 1);
    let at2 = ext.slice(ext.ny + 2);
    let trace = ext.trace_target.values();
    let mut err2 = 0.0;
    let mut tr2 = 0.0;
    for i in 0..n {
        let deriv = (-3.0 * at0[i] + 4.0 * at1[i] - at2[i]) / (2.0 * ext.dy);
        err2 += (deriv - trace[i]).powi(2);
        tr2 += trace[i] * trace[i];
    }
    let boundary_error = if tr2 == 0.0 { 0.0 } else { (err2 / tr2).sqrt() };

    Ok(ResidualReport {
        l2_residual,
        boundary_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::BoundaryCondition::Dirichlet;
    use crate::domain::{Domain, Grid};
    use crate::spectral::{spectrum_below, EnergyWindow};
    use approx::assert_relative_eq;

    #[test]
    fn s_case_branch_values() {
        assert_eq!(s_case(0.0, 0.7), 0.7);
        assert_relative_eq!(s_case(4.0, 1.0), 2.0f64.sinh() / 2.0, max_relative = 1e-15);
        assert_relative_eq!(s_case(4.0, 1.0), 1.8134302039235092, max_relative = 1e-12);
        assert_relative_eq!(
            s_case(-4.0, std::f64::consts::FRAC_PI_4),
            0.5,
            max_relative = 1e-12
        );
    }

    #[test]
    fn s_case_continuity_at_zero_energy() {
        // both branches agree with the series y + E y^3/6 at |E| = 1e-8
        for &y in &[0.3, 0.7, 1.0, 2.0] {
            for &e in &[1e-8, -1e-8] {
                let series = y + e * y * y * y / 6.0;
                assert!(
                    (s_case(e, y) - series).abs() <= 1e-12,
                    "E = {e}, y = {y}: {} vs {series}",
                    s_case(e, y)
                );
                assert!((s_case(e, y) - y).abs() <= e.abs() * y.abs().powi(3));
            }
        }
    }

    #[test]
    fn s_case_odd_in_y() {
        for &e in &[-9.0, -1e-3, 0.0, 1e-3, 2.0, 25.0] {
            for &y in &[0.1, 0.5, 1.3] {
                let plus = s_case(e, y);
                let minus = s_case(e, -y);
                assert!((plus + minus).abs() <= 1e-15 * plus.abs().max(1.0));
            }
        }
    }

    fn dirichlet_basis(l: f64, n: usize, e_top: f64) -> (SpectralBasis, Grid) {
        let domain = Domain::new(1, l, Dirichlet).unwrap();
        let grid = Grid::new(domain, n).unwrap();
        let op = build_schrodinger(domain, n, &ScalarField::zeros(grid)).unwrap();
        (spectrum_below(&op, EnergyWindow::BelowE(e_top)).unwrap(), grid)
    }

    #[test]
    fn single_mode_extension_is_separable() {
        let (basis, _) = dirichlet_basis(std::f64::consts::PI, 60, 2.0);
        assert_eq!(basis.len(), 1);
        let psi = basis.eigenfunction(0).clone();
        let ext = build_extension(&basis, &psi, 1.0, 16).unwrap();
        let e1 = basis.eigenvalue(0);
        for j in 0..ext.y_levels() {
            let y = ext.y_coord(j);
            let s = s_case(e1, y);
            for (node, &v) in basis.eigenfunction(0).values().iter().enumerate() {
                assert_relative_eq!(ext.value(j, node), v * s, epsilon = 1e-12);
            }
        }
        assert!(!ext.scaling_warning);
    }

    #[test]
    fn orthogonal_field_extends_to_zero() {
        let (basis, grid) = dirichlet_basis(std::f64::consts::PI, 80, 2.0);
        let domain = grid.domain;
        let op = build_schrodinger(domain, 80, &ScalarField::zeros(grid)).unwrap();
        let wide = spectrum_below(&op, EnergyWindow::BelowE(10.0)).unwrap();
        // second excited mode is orthogonal to the one-mode basis
        let psi = wide.eigenfunction(2).clone();
        let ext = build_extension(&basis, &psi, 1.0, 8).unwrap();
        assert!(
            ext.max_abs() < 1e-9,
            "orthogonal field should extend to zero, got {}",
            ext.max_abs()
        );
    }

    #[test]
    fn derivative_identity_via_trace_target() {
        let (basis, grid) = dirichlet_basis(2.0, 100, 30.0);
        let psi = ScalarField::from_fn(grid, |x| (1.0 - x[0] * x[0]).max(0.0)).unwrap();
        let ext = build_extension(&basis, &psi, 0.5, 64).unwrap();
        let rep = residual(&ext, &ScalarField::zeros(grid)).unwrap();
        // one-sided O(dy^2) differencing against the stored trace
        let dy = ext.dy;
        let e_max = ext.energies.iter().cloned().fold(0.0f64, f64::max);
        assert!(
            rep.boundary_error <= 1e-6 + 4.0 * e_max * dy * dy,
            "boundary error {} too large",
            rep.boundary_error
        );
    }

    #[test]
    fn single_mode_residual_second_order() {
        let (basis, grid) = dirichlet_basis(std::f64::consts::PI, 120, 2.0);
        let psi = basis.eigenfunction(0).clone();
        let zero_v = ScalarField::zeros(grid);
        let coarse = build_extension(&basis, &psi, 1.0, 20).unwrap();
        let fine = build_extension(&basis, &psi, 1.0, 40).unwrap();
        let r_coarse = residual(&coarse, &zero_v).unwrap().l2_residual;
        let r_fine = residual(&fine, &zero_v).unwrap().l2_residual;
        let factor = r_coarse / r_fine;
        assert!(
            (3.0..=5.0).contains(&factor),
            "refinement factor {factor}, residuals {r_coarse} -> {r_fine}"
        );
    }

    #[test]
    fn generic_potential_residual_second_order() {
        // seeded mesh-independent potential: one constant per unit cell
        use rand::Rng;
        let domain = Domain::new(1, 3.0, Dirichlet).unwrap();
        let mut rng = crate::seeding::seeded_rng(33);
        let cells: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let run = |n: usize, ny: usize| -> f64 {
            let grid = Grid::new(domain, n).unwrap();
            let v = ScalarField::from_fn(grid, |x| {
                let cell = ((x[0] + 1.5).floor() as usize).min(2);
                cells[cell]
            })
            .unwrap();
            let op = build_schrodinger(domain, n, &v).unwrap();
            // 8.5 keeps the window edge away from every shifted eigenvalue,
            // so both meshes see the same basis size
            let basis = spectrum_below(&op, EnergyWindow::BelowE(8.5)).unwrap();
            let psi = crate::spectral::random_in_range(&basis, 4).unwrap();
            let ext = build_extension(&basis, &psi, 1.0, ny).unwrap();
            residual(&ext, &v).unwrap().l2_residual
        };
        // halving both meshes: the y-difference error dominates and is O(dy^2)
        let coarse = run(149, 24);
        let fine = run(299, 48);
        let factor = coarse / fine;
        assert!(
            (3.0..=5.0).contains(&factor),
            "refinement factor {factor}, residuals {coarse} -> {fine}"
        );
    }

    #[test]
    fn empty_basis_rejected() {
        let (basis, grid) = dirichlet_basis(1.0, 40, -5.0);
        assert!(basis.is_empty());
        let psi = ScalarField::constant(grid, 1.0).unwrap();
        assert!(matches!(
            build_extension(&basis, &psi, 1.0, 8),
            Err(Error::EmptyBasis(_))
        ));
    }

    #[test]
    fn growth_guard_flags_large_energy() {
        let (basis, grid) = dirichlet_basis(1.0, 60, 120.0);
        let psi = ScalarField::from_fn(grid, |x| 1.0 - 2.0 * x[0].abs()).unwrap();
        let ext = build_extension(&basis, &psi, 1.0, 8).unwrap();
        // E_2 ~ 4 pi^2 ~ 39.5, E_3 ~ 88.8 -> E Y^2 > 50 at Y = 1
        assert!(ext.scaling_warning);
    }
}
