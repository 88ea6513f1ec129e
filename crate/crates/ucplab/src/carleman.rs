//! Carleman weight `w = psi ∘ sigma` built from the inverse coefficient
//! matrix at the origin, and empirical evaluation of the weighted
//! functional inequality
//! `∫ alpha w^{1-2a}|∇f|^2 + alpha^3 w^{-1-2a} f^2 <= C2 ∫ w^{2-2a} (Lf)^2`.

use nalgebra::DMatrix;
use rand::Rng;

use crate::domain::{CoefficientField, Coord, ScalarField, MAX_DIM};
use crate::error::{Error, Result};
use crate::operator::DiscreteOperator;
use crate::quad::adaptive_simpson;
use crate::seeding::seeded_rng;

/// Below this argument the weight integrand is evaluated by its series.
const SERIES_CUTOFF: f64 = 1e-3;
/// Knot spacing of the cached cumulative integral.
const TABLE_STEP: f64 = 1.0 / 64.0;
/// Absolute quadrature target per knot panel.
const PANEL_TOL: f64 = 1e-15;

/// Weight function data: `sigma(x) = (x' a_inv(0) x)^(1/2)`,
/// `psi(s) = s exp(-∫_0^s (1 - e^(-mu t))/t dt)`, `w = psi ∘ sigma`.
#[derive(Debug, Clone)]
pub struct CarlemanWeight {
    pub mu: f64,
    /// Derived constant `C3 = e * mu`.
    pub c3: f64,
    d: usize,
    /// Row-major `d x d` inverse coefficient matrix at the origin.
    a_inv: Vec<f64>,
    /// Cumulative integral of the weight integrand at knots `k * TABLE_STEP`.
    psi_table: Vec<f64>,
}

impl CarlemanWeight {
    /// Build from the inverse coefficient matrix at the origin (row-major);
    /// rejected unless symmetric positive definite.
    pub fn new(d: usize, a_inv_at_origin: &[f64], mu: f64) -> Result<Self> {
        if d == 0 || d > MAX_DIM {
            return Err(Error::InvalidParam(format!("dimension {d} unsupported")));
        }
        if a_inv_at_origin.len() != d * d {
            return Err(Error::InvalidParam(format!(
                "a_inv must have {} entries, got {}",
                d * d,
                a_inv_at_origin.len()
            )));
        }
        if !(mu > 0.0) {
            return Err(Error::InvalidParam(format!("mu must be > 0, got {mu}")));
        }
        let m = DMatrix::from_row_slice(d, d, a_inv_at_origin);
        if (&m - m.transpose()).abs().max() > 1e-10 {
            return Err(Error::NotSymmetric { node: 0, i: 0, j: 1 });
        }
        if m.clone().cholesky().is_none() {
            let lambda_min = m
                .symmetric_eigenvalues()
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            return Err(Error::NotElliptic {
                node: 0,
                lambda_min,
            });
        }
        let mut weight = CarlemanWeight {
            mu,
            c3: std::f64::consts::E * mu,
            d,
            a_inv: a_inv_at_origin.to_vec(),
            psi_table: vec![0.0],
        };
        weight.extend_table(4.0);
        Ok(weight)
    }

    /// Identity coefficients: `sigma(x) = |x|`.
    pub fn identity(d: usize, mu: f64) -> Result<Self> {
        let mut a = vec![0.0; d * d];
        for i in 0..d {
            a[i * d + i] = 1.0;
        }
        Self::new(d, &a, mu)
    }

    /// Take `a_inv(0)` from a coefficient field.
    pub fn from_coefficients(a: &CoefficientField, mu: f64) -> Result<Self> {
        Self::new(a.grid.domain.d, a.a_inv_at_origin(), mu)
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    /// The anisotropic radius `sigma(x) = (sum a_inv_ij x_i x_j)^(1/2)`;
    /// vanishes only at the origin, homogeneous of degree one.
    pub fn sigma(&self, x: &Coord) -> f64 {
        let mut q = 0.0;
        for i in 0..self.d {
            for j in 0..self.d {
                q += self.a_inv[i * self.d + j] * x[i] * x[j];
            }
        }
        q.max(0.0).sqrt()
    }

    fn integrand(&self, t: f64) -> f64 {
        (1.0 - (-self.mu * t).exp()) / t
    }

    /// Series of `∫_0^s (1-e^(-mu t))/t dt` (entire; alternating factorial
    /// decay), used below the cutoff and as the head of every evaluation.
    fn series_head(&self, s: f64) -> f64 {
        let x = self.mu * s;
        let mut term = x;
        let mut sum = x;
        for k in 2..60 {
            term *= -x / k as f64;
            let contrib = term / k as f64;
            sum += contrib;
            if contrib.abs() < 1e-18 {
                break;
            }
        }
        sum
    }

    fn extend_table(&mut self, s_max: f64) {
        let want = (s_max / TABLE_STEP).ceil() as usize + 1;
        while self.psi_table.len() < want {
            let k = self.psi_table.len();
            let lo = (k - 1) as f64 * TABLE_STEP;
            let hi = k as f64 * TABLE_STEP;
            let piece = if k == 1 {
                self.series_head(SERIES_CUTOFF)
                    + adaptive_simpson(&|t| self.integrand(t), SERIES_CUTOFF, hi, PANEL_TOL)
            } else {
                adaptive_simpson(&|t| self.integrand(t), lo, hi, PANEL_TOL)
            };
            let prev = *self.psi_table.last().unwrap();
            self.psi_table.push(prev + piece);
        }
    }

    /// The integral `∫_0^s (1-e^(-mu t))/t dt` to 1e-12 absolute.
    pub fn psi_integral(&self, s: f64) -> Result<f64> {
        if s < 0.0 {
            return Err(Error::InvalidParam(format!(
                "psi is defined for s >= 0, got {s}"
            )));
        }
        if s < SERIES_CUTOFF {
            return Ok(self.series_head(s));
        }
        let k = ((s / TABLE_STEP).floor() as usize).min(self.psi_table.len() - 1);
        let base = self.psi_table[k];
        let lo = k as f64 * TABLE_STEP;
        let tail = if k == 0 {
            // below the first knot: series head plus remainder
            self.series_head(SERIES_CUTOFF)
                + adaptive_simpson(&|t| self.integrand(t), SERIES_CUTOFF, s, PANEL_TOL)
        } else if s > lo {
            adaptive_simpson(&|t| self.integrand(t), lo, s, PANEL_TOL)
        } else {
            0.0
        };
        Ok(base + tail)
    }

    /// `psi(s) = s exp(-∫_0^s (1-e^(-mu t))/t dt)`; increasing, `psi(0)=0`,
    /// `psi'(0)=1`, `psi(s) <= s`.
    pub fn psi(&self, s: f64) -> Result<f64> {
        Ok(s * (-self.psi_integral(s)?).exp())
    }

    /// The weight `w(x) = psi(sigma(x))`.
    pub fn weight(&self, x: &Coord) -> f64 {
        self.psi(self.sigma(x)).expect("sigma is nonnegative")
    }
}

/// Outcome of the two-sided weight bound check
/// `|x|/(C3 sqrt(theta1)) <= w(x) <= sqrt(theta1) |x|`.
#[derive(Debug, Clone, Copy)]
pub struct WeightBoundsReport {
    pub violations: usize,
    /// Smallest slack across points and sides (negative when violated).
    pub margin: f64,
    pub checked: usize,
}

/// Check both weight bounds with 1e-12 slack at every point of `points`
/// (all must lie in the closed unit ball).
pub fn check_weight_bounds(
    weight: &CarlemanWeight,
    theta1: f64,
    points: &[Coord],
) -> Result<WeightBoundsReport> {
    if !(theta1 > 0.0) {
        return Err(Error::InvalidParam(format!(
            "theta1 must be > 0, got {theta1}"
        )));
    }
    let d = weight.dimension();
    let sqrt_t1 = theta1.sqrt();
    let mut violations = 0usize;
    let mut margin = f64::INFINITY;
    for p in points {
        let r = crate::domain::norm(p, d);
        if r > 1.0 + 1e-12 {
            return Err(Error::InvalidParam(format!(
                "weight bounds are stated on B(0,1); point has |x| = {r}"
            )));
        }
        let w = weight.weight(p);
        let lower = r / (weight.c3 * sqrt_t1);
        let upper = sqrt_t1 * r;
        let m = (w - lower).min(upper - w);
        margin = margin.min(m);
        if m < -1e-12 {
            violations += 1;
        }
    }
    Ok(WeightBoundsReport {
        violations,
        margin: if points.is_empty() { 0.0 } else { margin },
        checked: points.len(),
    })
}

/// Seeded uniform points in the closed unit ball (rejection sampling).
pub fn seeded_ball_points(d: usize, count: usize, seed: u64) -> Vec<Coord> {
    let mut rng = seeded_rng(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut p = [0.0; MAX_DIM];
        let mut r2 = 0.0;
        for axis in 0..d {
            p[axis] = rng.random_range(-1.0..=1.0);
            r2 += p[axis] * p[axis];
        }
        if r2 <= 1.0 {
            out.push(p);
        }
    }
    out
}

/// Knobs of the functional evaluation.
#[derive(Debug, Clone, Copy)]
pub struct CarlemanOptions {
    /// Inner support cutoff: `f` must vanish where `sigma(x) < rho_in`.
    pub rho_in: f64,
    /// Outer cutoff: `f` must vanish where `|x| > 1 - rho_out`.
    pub rho_out: f64,
}

impl Default for CarlemanOptions {
    fn default() -> Self {
        CarlemanOptions {
            rho_in: 0.05,
            rho_out: 0.05,
        }
    }
}

/// Evaluated sides of the weighted inequality for one test function and one
/// alpha.
#[derive(Debug, Clone, Copy)]
pub struct CarlemanFunctionals {
    /// `∫ alpha w^(1-2a) |∇f|^2`.
    pub lhs_grad: f64,
    /// `∫ alpha^3 w^(-1-2a) f^2`.
    pub lhs_cube: f64,
    /// `∫ w^(2-2a) (Lf)^2` (no C2 factor).
    pub rhs: f64,
    /// `(lhs_grad + lhs_cube)/rhs`; an empirical lower bound for C2.
    /// Zero by convention for `f = 0`.
    pub ratio: f64,
    /// True when `rhs = 0` with a nonzero left side.
    pub anomaly: bool,
    /// True when the sums were accumulated in log space.
    pub log_space: bool,
}

/// Online log-sum-exp accumulator for sums of positive terms whose
/// magnitudes can overflow f64.
struct LogAccumulator {
    max_log: f64,
    sum: f64,
}

impl LogAccumulator {
    fn new() -> Self {
        LogAccumulator {
            max_log: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    fn add_log(&mut self, log_term: f64) {
        if log_term == f64::NEG_INFINITY {
            return;
        }
        if log_term <= self.max_log {
            self.sum += (log_term - self.max_log).exp();
        } else {
            self.sum = self.sum * (self.max_log - log_term).exp() + 1.0;
            self.max_log = log_term;
        }
    }

    /// Natural log of the accumulated sum.
    fn log_total(&self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max_log + self.sum.ln()
        }
    }
}

/// Evaluate both sides of the inequality by grid quadrature: gradients by
/// central differences, `Lf` by the operator apply, cell weight `h^d`.
///
/// `f` must vanish on nodes with `sigma(x) < rho_in` or `|x| > 1 - rho_out`;
/// offending nodes are rejected. When `w^(-1-2a)` would overflow on the
/// support, accumulation shifts to log space.
pub fn carleman_functionals(
    weight: &CarlemanWeight,
    op: &DiscreteOperator,
    f: &ScalarField,
    alpha: f64,
    options: &CarlemanOptions,
) -> Result<CarlemanFunctionals> {
    let grid = f.grid;
    if op.grid != grid {
        return Err(Error::GridMismatch(
            "operator and test function live on different grids".into(),
        ));
    }
    if grid.domain.half_side() < 1.0 - 1e-12 {
        return Err(Error::InvalidParam(
            "the grid domain must cover the unit ball (L >= 2)".into(),
        ));
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidParam(format!(
            "alpha must be > 0, got {alpha}"
        )));
    }
    let d = grid.domain.d;
    if weight.dimension() != d {
        return Err(Error::InvalidParam(
            "weight dimension differs from the grid dimension".into(),
        ));
    }

    // support screen
    let mut bad = Vec::new();
    for (node, &fv) in f.values().iter().enumerate() {
        if fv == 0.0 {
            continue;
        }
        let x = grid.coord_of(node);
        if weight.sigma(&x) < options.rho_in || crate::domain::norm(&x, d) > 1.0 - options.rho_out
        {
            bad.push(node);
        }
    }
    if !bad.is_empty() {
        return Err(Error::SupportViolation {
            count: bad.len(),
            first: bad[0],
        });
    }

    let lf = op.apply(f)?;
    let n = grid.total_nodes();
    let vol = grid.cell_volume();
    let inv_2h = 1.0 / (2.0 * grid.h);

    // per-node data; gradient via central differences with zero extension
    let mut grad2 = vec![0.0; n];
    for node in 0..n {
        let idx = grid.multi(node);
        let mut g2 = 0.0;
        for axis in 0..d {
            let mut up = 0.0;
            let mut down = 0.0;
            if idx[axis] + 1 < grid.n {
                let mut u = idx;
                u[axis] += 1;
                up = f.values()[grid.linear(&u)];
            }
            if idx[axis] > 0 {
                let mut l = idx;
                l[axis] -= 1;
                down = f.values()[grid.linear(&l)];
            }
            let gx = (up - down) * inv_2h;
            g2 += gx * gx;
        }
        grad2[node] = g2;
    }

    // overflow probe: smallest weight among nodes that contribute
    let mut w_min = f64::INFINITY;
    let mut any_term = false;
    let mut weights = vec![0.0; n];
    for node in 0..n {
        let x = grid.coord_of(node);
        let w = weight.weight(&x);
        weights[node] = w;
        if f.values()[node] != 0.0 || grad2[node] != 0.0 || lf.values()[node] != 0.0 {
            any_term = true;
            if w > 0.0 {
                w_min = w_min.min(w);
            }
        }
    }
    if !any_term {
        return Ok(CarlemanFunctionals {
            lhs_grad: 0.0,
            lhs_cube: 0.0,
            rhs: 0.0,
            ratio: 0.0,
            anomaly: false,
            log_space: false,
        });
    }
    let max_neg_power = 1.0 + 2.0 * alpha;
    let log_space = max_neg_power * (1.0 / w_min).ln() > 690.0;

    if log_space {
        // individual sides can exceed f64 range; the ratio is formed in
        // log space and stays finite whenever the exponents balance
        let ln_alpha = alpha.ln();
        let mut acc_grad = LogAccumulator::new();
        let mut acc_cube = LogAccumulator::new();
        let mut acc_rhs = LogAccumulator::new();
        for node in 0..n {
            let w = weights[node];
            if w == 0.0 {
                continue;
            }
            let ln_w = w.ln();
            if grad2[node] > 0.0 {
                acc_grad.add_log(ln_alpha + (1.0 - 2.0 * alpha) * ln_w + grad2[node].ln());
            }
            let fv = f.values()[node];
            if fv != 0.0 {
                acc_cube
                    .add_log(3.0 * ln_alpha + (-1.0 - 2.0 * alpha) * ln_w + 2.0 * fv.abs().ln());
            }
            let lv = lf.values()[node];
            if lv != 0.0 {
                acc_rhs.add_log((2.0 - 2.0 * alpha) * ln_w + 2.0 * lv.abs().ln());
            }
        }
        let ln_vol = vol.ln();
        let log_grad = acc_grad.log_total() + ln_vol;
        let log_cube = acc_cube.log_total() + ln_vol;
        let log_rhs = acc_rhs.log_total() + ln_vol;
        let log_lhs = {
            let mut both = LogAccumulator::new();
            both.add_log(log_grad);
            both.add_log(log_cube);
            both.log_total()
        };
        let (ratio, anomaly) = if log_rhs == f64::NEG_INFINITY {
            if log_lhs == f64::NEG_INFINITY {
                (0.0, false)
            } else {
                (f64::INFINITY, true)
            }
        } else {
            ((log_lhs - log_rhs).exp(), false)
        };
        return Ok(CarlemanFunctionals {
            lhs_grad: log_grad.exp(),
            lhs_cube: log_cube.exp(),
            rhs: log_rhs.exp(),
            ratio,
            anomaly,
            log_space,
        });
    }

    let mut s_grad = 0.0;
    let mut s_cube = 0.0;
    let mut s_rhs = 0.0;
    for node in 0..n {
        let w = weights[node];
        if w == 0.0 {
            continue;
        }
        if grad2[node] > 0.0 {
            s_grad += alpha * w.powf(1.0 - 2.0 * alpha) * grad2[node];
        }
        let fv = f.values()[node];
        if fv != 0.0 {
            s_cube += alpha.powi(3) * w.powf(-1.0 - 2.0 * alpha) * fv * fv;
        }
        let lv = lf.values()[node];
        if lv != 0.0 {
            s_rhs += w.powf(2.0 - 2.0 * alpha) * lv * lv;
        }
    }
    let lhs_grad = s_grad * vol;
    let lhs_cube = s_cube * vol;
    let rhs = s_rhs * vol;
    let lhs = lhs_grad + lhs_cube;
    let (ratio, anomaly) = if rhs == 0.0 {
        if lhs == 0.0 {
            (0.0, false)
        } else {
            (f64::INFINITY, true)
        }
    } else {
        (lhs / rhs, false)
    };
    Ok(CarlemanFunctionals {
        lhs_grad,
        lhs_cube,
        rhs,
        ratio,
        anomaly,
        log_space,
    })
}

/// One row of the sweep table.
#[derive(Debug, Clone, Copy)]
pub struct PerAlphaRow {
    pub alpha: f64,
    pub family_index: usize,
    pub lhs_grad: f64,
    pub lhs_cube: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Supremum of the functional ratio over a family of test functions and an
/// alpha grid; the table exposes every evaluated pair for trend inspection.
#[derive(Debug, Clone)]
pub struct C2Estimate {
    pub sup_ratio: f64,
    pub rows: Vec<PerAlphaRow>,
}

pub fn estimate_c2(
    weight: &CarlemanWeight,
    op: &DiscreteOperator,
    family: &[ScalarField],
    alpha_grid: &[f64],
    options: &CarlemanOptions,
) -> Result<C2Estimate> {
    if family.is_empty() {
        return Err(Error::InvalidParam(
            "estimate_c2 needs a nonempty family of test functions".into(),
        ));
    }
    if alpha_grid.is_empty() {
        return Err(Error::InvalidParam(
            "estimate_c2 needs a nonempty alpha grid".into(),
        ));
    }
    let mut rows = Vec::with_capacity(family.len() * alpha_grid.len());
    let mut sup_ratio: f64 = 0.0;
    for (family_index, f) in family.iter().enumerate() {
        for &alpha in alpha_grid {
            let fun = carleman_functionals(weight, op, f, alpha, options)?;
            sup_ratio = sup_ratio.max(fun.ratio);
            rows.push(PerAlphaRow {
                alpha,
                family_index,
                lhs_grad: fun.lhs_grad,
                lhs_cube: fun.lhs_cube,
                rhs: fun.rhs,
                ratio: fun.ratio,
            });
        }
    }
    Ok(C2Estimate { sup_ratio, rows })
}

/// Smooth radial annulus bump supported on `r_inner <= |x| <= r_outer`:
/// `exp(-1/(1-t^2))` in the rescaled radial variable.
pub fn radial_bump(grid: crate::domain::Grid, r_inner: f64, r_outer: f64) -> Result<ScalarField> {
    if !(0.0 < r_inner && r_inner < r_outer) {
        return Err(Error::InvalidParam(format!(
            "annulus needs 0 < r_inner < r_outer, got [{r_inner}, {r_outer}]"
        )));
    }
    let d = grid.domain.d;
    let mid = 0.5 * (r_inner + r_outer);
    let halfwidth = 0.5 * (r_outer - r_inner);
    ScalarField::from_fn(grid, |x| {
        let t = (crate::domain::norm(x, d) - mid) / halfwidth;
        if t.abs() < 1.0 {
            (-1.0 / (1.0 - t * t)).exp()
        } else {
            0.0
        }
    })
}

/// Polynomial annulus bump `(1 - t^2)^power` on `r_inner <= |x| <= r_outer`.
/// Its higher derivatives stay small, so the discrete functionals are much
/// less mesh-sensitive than with the exponential profile.
pub fn polynomial_annulus_bump(
    grid: crate::domain::Grid,
    r_inner: f64,
    r_outer: f64,
    power: i32,
) -> Result<ScalarField> {
    if !(0.0 < r_inner && r_inner < r_outer) {
        return Err(Error::InvalidParam(format!(
            "annulus needs 0 < r_inner < r_outer, got [{r_inner}, {r_outer}]"
        )));
    }
    if power < 1 {
        return Err(Error::InvalidParam(format!(
            "bump power must be >= 1, got {power}"
        )));
    }
    let d = grid.domain.d;
    let mid = 0.5 * (r_inner + r_outer);
    let halfwidth = 0.5 * (r_outer - r_inner);
    ScalarField::from_fn(grid, |x| {
        let t = (crate::domain::norm(x, d) - mid) / halfwidth;
        if t.abs() < 1.0 {
            (1.0 - t * t).powi(power)
        } else {
            0.0
        }
    })
}
