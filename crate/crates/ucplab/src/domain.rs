//! Cubes, grids and grid-sampled fields.
//!
//! The region is always the centered cube `(-L/2, L/2)^d`. Grids are uniform
//! tensor grids; Dirichlet grids store interior nodes only, periodic grids
//! store one node per cell of the periodic lattice.

use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::seeding::seeded_rng;

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 3;

/// Point in `R^d`; only the first `d` entries are meaningful.
pub type Coord = [f64; MAX_DIM];

/// Per-axis node index; only the first `d` entries are meaningful.
pub type MultiIndex = [usize; MAX_DIM];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    Dirichlet,
    Periodic,
}

/// The cube `Lambda_L = (-L/2, L/2)^d` together with the boundary condition
/// imposed on operators built over it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub d: usize,
    pub side: f64,
    pub bc: BoundaryCondition,
}

impl Domain {
    pub fn new(d: usize, side: f64, bc: BoundaryCondition) -> Result<Self> {
        if d < 1 || d > MAX_DIM {
            return Err(Error::InvalidParam(format!(
                "dimension d must be in {{1, 2, 3}}, got {d}"
            )));
        }
        if !(side > 0.0) || !side.is_finite() {
            return Err(Error::InvalidParam(format!(
                "side length L must be positive, got {side}"
            )));
        }
        Ok(Domain { d, side, bc })
    }

    /// Half side length `L/2`.
    pub fn half_side(&self) -> f64 {
        self.side / 2.0
    }
}

/// Uniform tensor grid over a [`Domain`].
///
/// `n` interior points per axis; mesh width `h = L/(n+1)` for Dirichlet
/// (boundary nodes are eliminated) and `h = L/n` for periodic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub domain: Domain,
    pub n: usize,
    pub h: f64,
}

impl Grid {
    pub fn new(domain: Domain, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!(
                "n must be >= 2 interior points per axis, got {n}"
            )));
        }
        if domain.d == 3 && n > 40 {
            return Err(Error::InvalidGrid(format!(
                "n must be <= 40 when d = 3 (dense fallback memory), got {n}"
            )));
        }
        let h = match domain.bc {
            BoundaryCondition::Dirichlet => domain.side / (n as f64 + 1.0),
            BoundaryCondition::Periodic => domain.side / n as f64,
        };
        Ok(Grid { domain, n, h })
    }

    /// Total node count `n^d`.
    pub fn total_nodes(&self) -> usize {
        self.n.pow(self.domain.d as u32)
    }

    /// Row-major linear index of a multi-index.
    pub fn linear(&self, idx: &MultiIndex) -> usize {
        let mut lin = 0;
        for axis in 0..self.domain.d {
            lin = lin * self.n + idx[axis];
        }
        lin
    }

    /// Multi-index of a row-major linear index.
    pub fn multi(&self, mut lin: usize) -> MultiIndex {
        let mut idx = [0usize; MAX_DIM];
        for axis in (0..self.domain.d).rev() {
            idx[axis] = lin % self.n;
            lin /= self.n;
        }
        idx
    }

    /// Coordinate of the node with index `i` along one axis.
    pub fn axis_coord(&self, i: usize) -> f64 {
        let lo = -self.domain.half_side();
        match self.domain.bc {
            BoundaryCondition::Dirichlet => lo + (i as f64 + 1.0) * self.h,
            BoundaryCondition::Periodic => lo + i as f64 * self.h,
        }
    }

    /// Coordinate of a node.
    pub fn coord(&self, idx: &MultiIndex) -> Coord {
        let mut c = [0.0; MAX_DIM];
        for axis in 0..self.domain.d {
            c[axis] = self.axis_coord(idx[axis]);
        }
        c
    }

    /// Coordinate of a node given its linear index.
    pub fn coord_of(&self, lin: usize) -> Coord {
        self.coord(&self.multi(lin))
    }

    /// Cell volume `h^d` used as the quadrature weight of one node.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.domain.d as i32)
    }

    /// Linear index of the node closest to a point.
    pub fn nearest_node(&self, p: &Coord) -> usize {
        let mut idx = [0usize; MAX_DIM];
        for axis in 0..self.domain.d {
            let mut best = 0usize;
            let mut best_dist = f64::INFINITY;
            for i in 0..self.n {
                let dist = (self.axis_coord(i) - p[axis]).abs();
                if dist < best_dist {
                    best_dist = dist;
                    best = i;
                }
            }
            idx[axis] = best;
        }
        self.linear(&idx)
    }

    /// Linear index of the node closest to the origin.
    pub fn node_nearest_origin(&self) -> usize {
        let mut idx = [0usize; MAX_DIM];
        for axis in 0..self.domain.d {
            let mut best = 0usize;
            let mut best_dist = f64::INFINITY;
            for i in 0..self.n {
                let dist = self.axis_coord(i).abs();
                if dist < best_dist {
                    best_dist = dist;
                    best = i;
                }
            }
            idx[axis] = best;
        }
        self.linear(&idx)
    }
}

/// Real scalar field sampled on a grid, with the sup norm cached.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    values: Vec<f64>,
    sup_norm: f64,
}

impl ScalarField {
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.total_nodes() {
            return Err(Error::GridMismatch(format!(
                "field has {} values but the grid has {} nodes",
                values.len(),
                grid.total_nodes()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(bad));
        }
        let sup_norm = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(ScalarField {
            grid,
            values,
            sup_norm,
        })
    }

    pub fn from_fn<F: FnMut(&Coord) -> f64>(grid: Grid, mut f: F) -> Result<Self> {
        let values = (0..grid.total_nodes())
            .map(|lin| f(&grid.coord_of(lin)))
            .collect();
        Self::from_values(grid, values)
    }

    pub fn zeros(grid: Grid) -> Self {
        ScalarField {
            grid,
            values: vec![0.0; grid.total_nodes()],
            sup_norm: 0.0,
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        Self::from_values(grid, vec![c; grid.total_nodes()])
    }

    /// Product-of-sines potential `amp * prod_axis sin(freq_axis * x_axis + phase)`.
    pub fn sinusoidal(grid: Grid, amp: f64, freq: &[f64], phase: f64) -> Result<Self> {
        if freq.len() != grid.domain.d {
            return Err(Error::InvalidParam(format!(
                "sinusoidal generator needs {} frequencies, got {}",
                grid.domain.d,
                freq.len()
            )));
        }
        Self::from_fn(grid, |x| {
            let mut v = amp;
            for axis in 0..grid.domain.d {
                v *= (freq[axis] * x[axis] + phase).sin();
            }
            v
        })
    }

    /// Seeded node-wise uniform field with `|V| <= bound`.
    pub fn random_uniform(grid: Grid, seed: u64, bound: f64) -> Result<Self> {
        if bound < 0.0 {
            return Err(Error::InvalidParam(format!(
                "potential bound K must be >= 0, got {bound}"
            )));
        }
        let mut rng = seeded_rng(seed);
        let values = (0..grid.total_nodes())
            .map(|_| rng.random_range(-bound..=bound))
            .collect();
        Self::from_values(grid, values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Discrete L2 inner product with cell weight `h^d`.
    pub fn inner(&self, other: &ScalarField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(
                "inner product of fields on different grids".into(),
            ));
        }
        let dot: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum();
        Ok(dot * self.grid.cell_volume())
    }

    /// Discrete L2 norm with cell weight `h^d`.
    pub fn norm_l2(&self) -> f64 {
        let sq: f64 = self.values.iter().map(|v| v * v).sum();
        (sq * self.grid.cell_volume()).sqrt()
    }

    /// Linear combination `sum_k coeffs[k] * fields[k]`.
    pub fn linear_combination(fields: &[&ScalarField], coeffs: &[f64]) -> Result<Self> {
        if fields.is_empty() || fields.len() != coeffs.len() {
            return Err(Error::InvalidParam(
                "linear combination needs matching, nonempty field and coefficient lists".into(),
            ));
        }
        let grid = fields[0].grid;
        let mut values = vec![0.0; grid.total_nodes()];
        for (f, &c) in fields.iter().zip(coeffs) {
            if f.grid != grid {
                return Err(Error::GridMismatch(
                    "linear combination of fields on different grids".into(),
                ));
            }
            for (v, fv) in values.iter_mut().zip(f.values()) {
                *v += c * fv;
            }
        }
        Self::from_values(grid, values)
    }

    /// Load from CSV rows `i_1, ..., i_d, value` (0-based node indices).
    pub fn from_csv<P: AsRef<Path>>(grid: Grid, path: P) -> Result<Self> {
        let rows = read_numeric_csv(path.as_ref(), grid.domain.d + 1)?;
        let mut values = vec![f64::NAN; grid.total_nodes()];
        for row in &rows {
            let mut idx = [0usize; MAX_DIM];
            for axis in 0..grid.domain.d {
                let i = row[axis];
                if i < 0.0 || i.fract() != 0.0 || i as usize >= grid.n {
                    return Err(Error::CsvFormat {
                        path: path.as_ref().display().to_string(),
                        message: format!("node index {i} out of range for n = {}", grid.n),
                    });
                }
                idx[axis] = i as usize;
            }
            values[grid.linear(&idx)] = row[grid.domain.d];
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::CsvFormat {
                path: path.as_ref().display().to_string(),
                message: "missing nodes: csv does not cover the whole grid".into(),
            });
        }
        Self::from_values(grid, values)
    }

    /// Write as CSV rows `i_1, ..., i_d, value`.
    pub fn to_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        use std::io::Write;
        let mut out = std::fs::File::create(path)?;
        let d = self.grid.domain.d;
        writeln!(
            out,
            "{},value",
            (0..d).map(|a| format!("i{a}")).collect::<Vec<_>>().join(",")
        )?;
        for lin in 0..self.len() {
            let idx = self.grid.multi(lin);
            let cols: Vec<String> = idx[..d].iter().map(|i| i.to_string()).collect();
            writeln!(out, "{},{}", cols.join(","), self.values[lin])?;
        }
        Ok(())
    }
}

/// Symmetric coefficient matrix field `a^{ij}(x)` for elliptic operators,
/// with the inverse at the origin cached for the Carleman weight.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    pub grid: Grid,
    /// Node-major, then row-major `d x d` entries.
    entries: Vec<f64>,
    /// Entries of `a(0)^{-1}` (row-major `d x d`), `a(0)` taken at the node
    /// nearest the origin.
    a_inv_at_origin: Vec<f64>,
}

impl CoefficientField {
    /// Build from a matrix-valued function; symmetry is checked.
    pub fn from_fn<F: FnMut(&Coord) -> Vec<f64>>(grid: Grid, mut f: F) -> Result<Self> {
        let d = grid.domain.d;
        let mut entries = Vec::with_capacity(grid.total_nodes() * d * d);
        for lin in 0..grid.total_nodes() {
            let m = f(&grid.coord_of(lin));
            if m.len() != d * d {
                return Err(Error::InvalidParam(format!(
                    "coefficient function must return {} entries, got {}",
                    d * d,
                    m.len()
                )));
            }
            for i in 0..d {
                for j in (i + 1)..d {
                    if (m[i * d + j] - m[j * d + i]).abs() > 1e-12 {
                        return Err(Error::NotSymmetric { node: lin, i, j });
                    }
                }
            }
            entries.extend_from_slice(&m);
        }
        Self::from_entries(grid, entries)
    }

    fn from_entries(grid: Grid, entries: Vec<f64>) -> Result<Self> {
        let d = grid.domain.d;
        if let Some(bad) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(bad / (d * d)));
        }
        let origin = grid.node_nearest_origin();
        let a0 = nalgebra::DMatrix::from_row_slice(d, d, &entries[origin * d * d..(origin + 1) * d * d]);
        let a_inv = a0.clone().try_inverse().ok_or(Error::NotElliptic {
            node: origin,
            lambda_min: 0.0,
        })?;
        // a_inv * a0 = I to 1e-10 is automatic up to conditioning; re-check.
        let residual = (&a_inv * &a0 - nalgebra::DMatrix::identity(d, d)).abs().max();
        if residual > 1e-10 {
            return Err(Error::NotElliptic {
                node: origin,
                lambda_min: residual,
            });
        }
        Ok(CoefficientField {
            grid,
            entries,
            a_inv_at_origin: a_inv.transpose().as_slice().to_vec(),
        })
    }

    /// Identity coefficients (reduces the elliptic operator to the Laplacian).
    pub fn identity(grid: Grid) -> Self {
        let d = grid.domain.d;
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            m[i * d + i] = 1.0;
        }
        Self::from_fn(grid, |_| m.clone()).expect("identity coefficients are valid")
    }

    /// Constant coefficient matrix (row-major `d x d`, symmetric).
    pub fn constant(grid: Grid, m: &[f64]) -> Result<Self> {
        Self::from_fn(grid, |_| m.to_vec())
    }

    pub fn d(&self) -> usize {
        self.grid.domain.d
    }

    /// Entry `a^{ij}` at a node.
    pub fn entry(&self, node: usize, i: usize, j: usize) -> f64 {
        let d = self.d();
        self.entries[node * d * d + i * d + j]
    }

    /// The `d x d` matrix at a node.
    pub fn matrix_at(&self, node: usize) -> nalgebra::DMatrix<f64> {
        let d = self.d();
        nalgebra::DMatrix::from_row_slice(d, d, &self.entries[node * d * d..(node + 1) * d * d])
    }

    /// Row-major entries of `a(0)^{-1}`.
    pub fn a_inv_at_origin(&self) -> &[f64] {
        &self.a_inv_at_origin
    }

    /// Load from CSV rows `i_1, ..., i_d, a_11, a_12, ..., a_dd`
    /// (upper triangle, row-major).
    pub fn from_csv<P: AsRef<Path>>(grid: Grid, path: P) -> Result<Self> {
        let d = grid.domain.d;
        let tri = d * (d + 1) / 2;
        let rows = read_numeric_csv(path.as_ref(), d + tri)?;
        let mut entries = vec![f64::NAN; grid.total_nodes() * d * d];
        for row in &rows {
            let mut idx = [0usize; MAX_DIM];
            for axis in 0..d {
                let i = row[axis];
                if i < 0.0 || i.fract() != 0.0 || i as usize >= grid.n {
                    return Err(Error::CsvFormat {
                        path: path.as_ref().display().to_string(),
                        message: format!("node index {i} out of range for n = {}", grid.n),
                    });
                }
                idx[axis] = i as usize;
            }
            let node = grid.linear(&idx);
            let mut col = d;
            for i in 0..d {
                for j in i..d {
                    entries[node * d * d + i * d + j] = row[col];
                    entries[node * d * d + j * d + i] = row[col];
                    col += 1;
                }
            }
        }
        if entries.iter().any(|v| v.is_nan()) {
            return Err(Error::CsvFormat {
                path: path.as_ref().display().to_string(),
                message: "missing nodes: csv does not cover the whole grid".into(),
            });
        }
        Self::from_entries(grid, entries)
    }
}

/// Parameters of the structural hypothesis `A(r, theta1, theta2)`:
/// two-sided ellipticity constant and Lipschitz modulus on the ball `B(r)`.
#[derive(Debug, Clone, Copy)]
pub struct EllipticityParams {
    pub r: f64,
    pub theta1: f64,
    pub theta2: f64,
}

impl EllipticityParams {
    pub fn new(r: f64, theta1: f64, theta2: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::InvalidParam(format!("radius r must be > 0, got {r}")));
        }
        if !(theta1 > 0.0) {
            return Err(Error::InvalidParam(format!(
                "theta1 must be > 0, got {theta1}"
            )));
        }
        if theta2 < 0.0 {
            return Err(Error::InvalidParam(format!(
                "theta2 must be >= 0, got {theta2}"
            )));
        }
        Ok(EllipticityParams { r, theta1, theta2 })
    }
}

/// Euclidean norm of the first `d` entries.
pub fn norm(p: &Coord, d: usize) -> f64 {
    p[..d].iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn read_numeric_csv(path: &Path, cols: usize) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_path(path)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != cols {
            return Err(Error::CsvFormat {
                path: path.display().to_string(),
                message: format!("expected {cols} columns, got {}", record.len()),
            });
        }
        let row: std::result::Result<Vec<f64>, _> =
            record.iter().map(|s| s.parse::<f64>()).collect();
        rows.push(row.map_err(|e| Error::CsvFormat {
            path: path.display().to_string(),
            message: e.to_string(),
        })?);
    }
    Ok(rows)
}
