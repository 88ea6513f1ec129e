//! Observability ratios, uncertainty constants of projected indicator
//! forms, the explicit bound formulas, and empirical exponent fits.

use nalgebra::DMatrix;

use crate::domain::ScalarField;
use crate::error::{Error, Result};
use crate::geometry::{
    check_quc_hypotheses, indicator, integrate_sq, integrate_sq_region, BallArrangement,
    HypothesisReport, IndicatorField, QucGeometry, QucVariant, Region, Weight,
    DEFAULT_SUBSAMPLES,
};
use crate::operator::{check_differential_inequality, DifferentialInequalityReport, DiscreteOperator};
use crate::spectral::{spectrum_below, EnergyWindow, SpectralBasis};

/// Tolerance on inequality checks between computed spectral quantities.
pub const INEQ_TOL: f64 = 1e-10;

/// User-supplied constants of the bound formulas. `sfuc_exponent` (N) and
/// `klein_exponent` (M_d) are non-explicit in the theory and default to 1.
#[derive(Debug, Clone, Copy)]
pub struct BoundParams {
    /// Potential bound `K = ||V||_inf`.
    pub potential_bound: f64,
    /// Energy threshold E.
    pub energy: f64,
    /// Exponent constant N (non-explicit; user parameter).
    pub sfuc_exponent: f64,
    /// Klein constant M_d (non-explicit; user parameter).
    pub klein_exponent: f64,
    /// Interval ends (a, b) for local windows.
    pub interval: (f64, f64),
    /// The beta of the ambient-to-target comparison.
    pub beta: f64,
    /// Scale radius R.
    pub scale_r: f64,
    /// Elliptic offset D0.
    pub offset_d0: f64,
}

impl Default for BoundParams {
    fn default() -> Self {
        BoundParams {
            potential_bound: 0.0,
            energy: 0.0,
            sfuc_exponent: 1.0,
            klein_exponent: 1.0,
            interval: (0.0, 0.0),
            beta: 0.0,
            scale_r: 1.0,
            offset_d0: 0.0,
        }
    }
}

/// Mass fraction of `psi^2` captured by the ball union:
/// `∫_{S_L} psi^2 / ∫_{Lambda_L} psi^2`, always in [0, 1].
pub fn ratio(psi: &ScalarField, arr: &BallArrangement) -> Result<f64> {
    let whole = integrate_sq(psi, Weight::Whole)?;
    if whole == 0.0 {
        return Err(Error::UndefinedRatio(
            "ratio of the zero field is undefined".into(),
        ));
    }
    let ind = indicator(arr, &psi.grid)?;
    let masked = integrate_sq(psi, Weight::Masked(&ind))?;
    Ok(masked / whole)
}

/// Best constant in the projected uncertainty inequality: the smallest
/// eigenvalue of the Gram-type matrix `M_kl = <psi_k, W psi_l>`, equal to
/// the minimum of [`ratio`] over unit elements of the basis span.
pub fn uncertainty_constant(basis: &SpectralBasis, arr: &BallArrangement) -> Result<f64> {
    let ind = indicator(arr, &basis.grid)?;
    uncertainty_constant_with_indicator(basis, &ind)
}

/// Same as [`uncertainty_constant`] with a precomputed indicator.
pub fn uncertainty_constant_with_indicator(
    basis: &SpectralBasis,
    ind: &IndicatorField,
) -> Result<f64> {
    if basis.is_empty() {
        return Err(Error::EmptyBasis(
            "uncertainty constant over an empty projector range is vacuous".into(),
        ));
    }
    if ind.grid != basis.grid {
        return Err(Error::GridMismatch(
            "indicator grid differs from the basis grid".into(),
        ));
    }
    let m = basis.len();
    let vol = basis.grid.cell_volume();
    let mut gram = DMatrix::zeros(m, m);
    for k in 0..m {
        let fk = basis.eigenfunction(k).values();
        for l in k..m {
            let fl = basis.eigenfunction(l).values();
            let mut acc = 0.0;
            for ((a, b), w) in fk.iter().zip(fl).zip(ind.weights()) {
                acc += a * b * w;
            }
            let v = acc * vol;
            gram[(k, l)] = v;
            gram[(l, k)] = v;
        }
    }
    let eig = gram.symmetric_eigenvalues();
    let lambda_min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(lambda_min.max(0.0))
}

/// Scale-free unique-continuation bound
/// `C_sfuc = delta^(N (1 + K^(2/3) + sqrt(E)))`.
pub fn sfuc_bound(delta: f64, params: &BoundParams) -> Result<f64> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::InvalidParam(format!(
            "delta must be in (0, 1/2), got {delta}"
        )));
    }
    if params.energy < 0.0 {
        return Err(Error::InvalidParam(format!(
            "E must be >= 0, got {}",
            params.energy
        )));
    }
    if !(params.sfuc_exponent > 0.0) {
        return Err(Error::InvalidParam(format!(
            "N must be > 0, got {}",
            params.sfuc_exponent
        )));
    }
    if params.potential_bound < 0.0 {
        return Err(Error::InvalidParam(format!(
            "K must be >= 0, got {}",
            params.potential_bound
        )));
    }
    let expo = params.sfuc_exponent
        * (1.0 + params.potential_bound.powf(2.0 / 3.0) + params.energy.sqrt());
    Ok(delta.powf(expo))
}

/// Klein's short-interval constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KleinBound {
    /// Half the admissible interval length, `gamma`.
    pub gamma: f64,
    /// The uncertainty bound `gamma^2`.
    pub bound: f64,
}

/// `gamma = 1/2 delta^(M_d (1 + (2K + E)^(2/3)))`, bound `gamma^2`.
///
/// The caller must separately check `|I| <= 2 gamma` and `L >= 72 sqrt(d)`
/// (see [`klein_applies`]). The 2/3 power uses |2K + E| (real cube root
/// squared) so negative energies below `-2K` do not produce NaN.
pub fn klein_gamma(delta: f64, params: &BoundParams) -> Result<KleinBound> {
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::InvalidParam(format!(
            "delta must be in (0, 1/2], got {delta}"
        )));
    }
    if !(params.klein_exponent > 0.0) {
        return Err(Error::InvalidParam(format!(
            "M_d must be > 0, got {}",
            params.klein_exponent
        )));
    }
    let base = (2.0 * params.potential_bound + params.energy).abs();
    let expo = params.klein_exponent * (1.0 + base.powf(2.0 / 3.0));
    let gamma = 0.5 * delta.powf(expo);
    Ok(KleinBound {
        gamma,
        bound: gamma * gamma,
    })
}

/// Side conditions of the short-interval regime: interval length at most
/// `2 gamma` and scale at least `72 sqrt(d)`.
pub fn klein_applies(gamma: f64, interval: (f64, f64), l: f64, d: usize) -> bool {
    (interval.1 - interval.0) <= 2.0 * gamma && l >= 72.0 * (d as f64).sqrt()
}

/// Outcome of the chain comparison between the interval and half-line
/// uncertainty constants.
#[derive(Debug, Clone)]
pub enum ChainOutcome {
    Report {
        c_interval: f64,
        c_halfline: f64,
        holds: bool,
    },
    /// One of the windows contains no spectrum; nothing to compare.
    SkippedEmptyWindow { which: String },
}

/// Verify `C_[a,b] >= C_(-inf,b]` (the derivation-chain direction) on one
/// operator and arrangement.
pub fn chain_check(
    op: &DiscreteOperator,
    arr: &BallArrangement,
    a: f64,
    b: f64,
) -> Result<ChainOutcome> {
    let below = spectrum_below(op, EnergyWindow::BelowE(b))?;
    if below.is_empty() {
        return Ok(ChainOutcome::SkippedEmptyWindow {
            which: format!("(-inf, {b}]"),
        });
    }
    let interval = spectrum_below(op, EnergyWindow::Interval(a, b))?;
    if interval.is_empty() {
        return Ok(ChainOutcome::SkippedEmptyWindow {
            which: format!("[{a}, {b}]"),
        });
    }
    let ind = indicator(arr, &op.grid)?;
    let c_halfline = uncertainty_constant_with_indicator(&below, &ind)?;
    let c_interval = uncertainty_constant_with_indicator(&interval, &ind)?;
    Ok(ChainOutcome::Report {
        c_interval,
        c_halfline,
        holds: c_interval >= c_halfline - INEQ_TOL,
    })
}

/// Least-squares power-law fit of constants against delta.
#[derive(Debug, Clone, Copy)]
pub struct ExponentFit {
    /// Slope of `log(constant)` against `log(delta)`.
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Samples used after rejecting nonpositive constants.
    pub used: usize,
}

/// Fit `log c = intercept + slope * log delta`. Samples with nonpositive
/// constants are rejected; at least 4 valid samples are required.
pub fn fit_exponent(samples: &[(f64, f64)]) -> Result<ExponentFit> {
    let valid: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(d, c)| *d > 0.0 && *c > 0.0)
        .map(|&(d, c)| (d.ln(), c.ln()))
        .collect();
    if valid.len() < 4 {
        return Err(Error::InvalidParam(format!(
            "fit_exponent needs at least 4 samples with positive delta and constant, got {}",
            valid.len()
        )));
    }
    let n = valid.len() as f64;
    let mean_x = valid.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = valid.iter().map(|(_, y)| y).sum::<f64>() / n;
    let sxx: f64 = valid.iter().map(|(x, _)| (x - mean_x).powi(2)).sum();
    if sxx < 1e-30 {
        return Err(Error::InvalidParam(
            "fit_exponent needs at least two distinct delta values".into(),
        ));
    }
    let sxy: f64 = valid
        .iter()
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = valid.iter().map(|(_, y)| (y - mean_y).powi(2)).sum();
    let ss_res: f64 = valid
        .iter()
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if ss_tot < 1e-30 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(ExponentFit {
        slope,
        intercept,
        r2,
        used: valid.len(),
    })
}

/// Measured quantities of the quantitative unique-continuation constellation.
#[derive(Debug, Clone)]
pub struct QucReport {
    /// `∫_{B(x, delta)} psi^2 / ∫_Theta psi^2`; the measured stand-in for
    /// the (non-explicit) constant of the theorem.
    pub ratio_delta_theta: f64,
    /// Observed `∫_G psi^2 / ∫_Theta psi^2`.
    pub beta_observed: f64,
    pub hypotheses: HypothesisReport,
    /// Differential-inequality check when an operator is supplied.
    pub differential_inequality: Option<DifferentialInequalityReport>,
}

/// Measure the unique-continuation ratios for a field over a constellation.
/// `C_qUC` is measured, never assumed. When `op` is given, the pointwise
/// inequality `|op psi| <= |V psi|` is checked alongside.
pub fn empirical_quc(
    psi: &ScalarField,
    geo: &QucGeometry,
    v: &ScalarField,
    variant: &QucVariant,
    op: Option<&DiscreteOperator>,
) -> Result<QucReport> {
    let d = psi.grid.domain.d;
    let half = psi.grid.domain.half_side();
    let cube = Region::aligned_box(
        [-half, -half, -half],
        [half, half, half],
        d,
    )?;
    if !geo.g.contained_in(&cube, d) {
        return Err(Error::InvalidParam(
            "grid domain does not cover G; enlarge the cube".into(),
        ));
    }
    let theta_mass = integrate_sq_region(psi, &geo.theta, DEFAULT_SUBSAMPLES)?;
    if theta_mass == 0.0 {
        return Err(Error::UndefinedRatio(
            "psi vanishes on Theta; the comparison ratio is undefined".into(),
        ));
    }
    let obs_ball = Region::ball(geo.x, geo.delta)?;
    let ball_mass = integrate_sq_region(psi, &obs_ball, DEFAULT_SUBSAMPLES)?;
    let g_mass = integrate_sq_region(psi, &geo.g, DEFAULT_SUBSAMPLES)?;
    let hypotheses = check_quc_hypotheses(geo, variant, d);
    let differential_inequality = match op {
        Some(op) => Some(check_differential_inequality(op, psi, v, None)?),
        None => None,
    };
    Ok(QucReport {
        ratio_delta_theta: ball_mass / theta_mass,
        beta_observed: g_mass / theta_mass,
        hypotheses,
        differential_inequality,
    })
}

/// One full observability measurement: draw a seeded random element of the
/// projector range, measure its ratio, the projected form's smallest
/// eigenvalue, and evaluate both bound formulas.
#[derive(Debug, Clone)]
pub struct ObservabilityReport {
    pub window: EnergyWindow,
    pub delta: f64,
    pub ball_count: usize,
    pub basis_size: usize,
    pub ratio: f64,
    pub lambda_min: f64,
    pub bound_sfuc: f64,
    pub bound_klein: f64,
}

pub fn observability_report(
    op: &DiscreteOperator,
    arr: &BallArrangement,
    window: EnergyWindow,
    params: &BoundParams,
    seed: u64,
) -> Result<ObservabilityReport> {
    let basis = spectrum_below(op, window)?;
    if basis.is_empty() {
        return Err(Error::EmptyBasis(format!(
            "no spectrum in the window {window:?}"
        )));
    }
    let psi = crate::spectral::random_in_range(&basis, seed)?;
    let ind = indicator(arr, &op.grid)?;
    let whole = integrate_sq(&psi, Weight::Whole)?;
    let masked = integrate_sq(&psi, Weight::Masked(&ind))?;
    let lambda_min = uncertainty_constant_with_indicator(&basis, &ind)?;
    let bound_sfuc = sfuc_bound(arr.delta, params)?;
    let bound_klein = klein_gamma(arr.delta, params)?.bound;
    Ok(ObservabilityReport {
        window,
        delta: arr.delta,
        ball_count: arr.ball_count(),
        basis_size: basis.len(),
        ratio: masked / whole,
        lambda_min,
        bound_sfuc,
        bound_klein,
    })
}
