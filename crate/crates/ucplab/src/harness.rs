//! Experiment harness: flat key=value configuration with CLI overrides,
//! deterministic seeding, concurrent sweep orchestration, and CSV emission.
//!
//! All outputs are CSV with `#` header comment lines carrying the schema
//! version, the full configuration echo and the seed-derivation scheme, so
//! a run is reproducible bit for bit from its own artifacts.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::adversary::{minimize_ratio, SearchConfig, SearchSpace, SearchTarget};
use crate::carleman::{
    check_weight_bounds, estimate_c2, polynomial_annulus_bump, seeded_ball_points,
    CarlemanOptions, CarlemanWeight,
};
use crate::domain::{BoundaryCondition, Domain, Grid, ScalarField};
use crate::error::{Error, Result};
use crate::extension::{build_extension, residual};
use crate::geometry::{
    check_quc_hypotheses, make_arrangement, ArrangementMode, QucGeometry, QucVariant, Region,
};
use crate::observability::{fit_exponent, observability_report, BoundParams, ExponentFit};
use crate::operator::build_schrodinger;
use crate::seeding::{derive_seed, scheme_description};
use crate::shannon::{reconstruct, verify_aliasing, SamplingProblem, Verdict};
use crate::spectral::{random_in_range, spectrum_below, EnergyWindow};

pub const CSV_SCHEMA_VERSION: &str = "ucplab-csv v1";

/// Worker-count environment variable honored by sweeps.
pub const WORKERS_ENV: &str = "UCPLAB_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Spectrum,
    Observability,
    Sweep,
    Adversarial,
    Shannon,
    Carleman,
    Extend,
    QucCheck,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Spectrum => "spectrum",
            Experiment::Observability => "observability",
            Experiment::Sweep => "sweep",
            Experiment::Adversarial => "adversarial",
            Experiment::Shannon => "shannon",
            Experiment::Carleman => "carleman",
            Experiment::Extend => "extend",
            Experiment::QucCheck => "quc-check",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "spectrum" => Experiment::Spectrum,
            "observability" => Experiment::Observability,
            "sweep" => Experiment::Sweep,
            "adversarial" => Experiment::Adversarial,
            "shannon" => Experiment::Shannon,
            "carleman" => Experiment::Carleman,
            "extend" => Experiment::Extend,
            "quc-check" => Experiment::QucCheck,
            other => {
                return Err(Error::Config(format!(
                    "unknown experiment '{other}'; expected one of spectrum, observability, \
                     sweep, adversarial, shannon, carleman, extend, quc-check"
                )))
            }
        })
    }
}

/// Typed parameter map with defaults; every module precondition reachable
/// from the CLI is validated here before any compute starts.
#[derive(Debug, Clone)]
pub struct Params {
    pub d: usize,
    pub bc: BoundaryCondition,
    pub l_list: Vec<f64>,
    pub delta_list: Vec<f64>,
    pub energy: f64,
    pub potential_bound: f64,
    pub sfuc_exponent: f64,
    pub klein_exponent: f64,
    pub mu: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub seeds: Vec<u64>,
    /// Absolute interior mesh points per axis; overrides `n_per_unit`.
    pub n: Option<usize>,
    /// Mesh density per unit length when `n` is absent.
    pub n_per_unit: usize,
    pub jitter_amp: f64,
    pub jitter_seed: Option<u64>,
    // adversarial
    pub target: SearchTarget,
    pub restarts: usize,
    pub iterations: usize,
    pub step_init: f64,
    pub step_decay: f64,
    // shannon
    pub bandwidth: Vec<f64>,
    pub truncation: usize,
    pub jitter: f64,
    // carleman
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub rho_in: f64,
    pub rho_out: f64,
    // extension
    pub y_max: f64,
    pub ny: usize,
    /// Load the potential from a CSV file instead of the seeded generator.
    pub potential_csv: Option<PathBuf>,
    /// Write the finest-level extension field as CSV slices.
    pub export_field: bool,
    // quc-check geometry
    pub scale_r: f64,
    pub offset_d0: f64,
    pub theta_center: f64,
    pub theta_radius: f64,
    pub g_radius: f64,
    pub variant: String,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            d: 1,
            bc: BoundaryCondition::Dirichlet,
            l_list: vec![3.0],
            delta_list: vec![0.2],
            energy: 10.0,
            potential_bound: 0.0,
            sfuc_exponent: 1.0,
            klein_exponent: 1.0,
            mu: 1.0,
            theta1: 1.0,
            theta2: 1.0,
            seeds: vec![0],
            n: None,
            n_per_unit: 50,
            jitter_amp: 0.0,
            jitter_seed: None,
            target: SearchTarget::Centers,
            restarts: 5,
            iterations: 200,
            step_init: 0.1,
            step_decay: 0.985,
            bandwidth: vec![1.0, 2.0, 4.0],
            truncation: 200,
            jitter: 0.0,
            alpha_min: 3.0,
            alpha_max: 20.0,
            rho_in: 0.05,
            rho_out: 0.05,
            y_max: 1.0,
            ny: 64,
            potential_csv: None,
            export_field: false,
            scale_r: 1.0,
            offset_d0: 0.0,
            theta_center: 1.2,
            theta_radius: 0.1,
            g_radius: 14.5,
            variant: "schrodinger".into(),
        }
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| Error::Config(format!("cannot parse '{s}' in {key} = {value}")))
        })
        .collect()
}

fn parse_one<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| Error::Config(format!("cannot parse {key} = {value}")))
}

impl Params {
    /// Apply one `key = value` assignment.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "d" => self.d = parse_one(key, value)?,
            "bc" => {
                self.bc = match value.trim() {
                    "dirichlet" => BoundaryCondition::Dirichlet,
                    "periodic" => BoundaryCondition::Periodic,
                    other => {
                        return Err(Error::Config(format!(
                            "bc must be dirichlet or periodic, got {other}"
                        )))
                    }
                }
            }
            "L" => self.l_list = parse_list(key, value)?,
            "delta" => self.delta_list = parse_list(key, value)?,
            "E" => self.energy = parse_one(key, value)?,
            "K" => self.potential_bound = parse_one(key, value)?,
            "N" => self.sfuc_exponent = parse_one(key, value)?,
            "M_d" => self.klein_exponent = parse_one(key, value)?,
            "mu" => self.mu = parse_one(key, value)?,
            "theta1" => self.theta1 = parse_one(key, value)?,
            "theta2" => self.theta2 = parse_one(key, value)?,
            "seeds" => self.seeds = parse_list(key, value)?,
            "n" => self.n = Some(parse_one(key, value)?),
            "n_per_unit" => self.n_per_unit = parse_one(key, value)?,
            "jitter_amp" => self.jitter_amp = parse_one(key, value)?,
            "jitter_seed" => self.jitter_seed = Some(parse_one(key, value)?),
            "target" => {
                self.target = match value.trim() {
                    "centers" => SearchTarget::Centers,
                    "potential" => SearchTarget::Potential,
                    "both" => SearchTarget::Both,
                    other => {
                        return Err(Error::Config(format!(
                            "target must be centers, potential or both, got {other}"
                        )))
                    }
                }
            }
            "restarts" => self.restarts = parse_one(key, value)?,
            "iterations" => self.iterations = parse_one(key, value)?,
            "step_init" => self.step_init = parse_one(key, value)?,
            "step_decay" => self.step_decay = parse_one(key, value)?,
            "bandwidth" => self.bandwidth = parse_list(key, value)?,
            "truncation" => self.truncation = parse_one(key, value)?,
            "jitter" => self.jitter = parse_one(key, value)?,
            "alpha_min" => self.alpha_min = parse_one(key, value)?,
            "alpha_max" => self.alpha_max = parse_one(key, value)?,
            "rho_in" => self.rho_in = parse_one(key, value)?,
            "rho_out" => self.rho_out = parse_one(key, value)?,
            "y_max" => self.y_max = parse_one(key, value)?,
            "ny" => self.ny = parse_one(key, value)?,
            "potential_csv" => self.potential_csv = Some(PathBuf::from(value.trim())),
            "export_field" => {
                self.export_field = match value.trim() {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    other => {
                        return Err(Error::Config(format!(
                            "export_field must be true or false, got {other}"
                        )))
                    }
                }
            }
            "R" => self.scale_r = parse_one(key, value)?,
            "D0" => self.offset_d0 = parse_one(key, value)?,
            "theta_center" => self.theta_center = parse_one(key, value)?,
            "theta_radius" => self.theta_radius = parse_one(key, value)?,
            "g_radius" => self.g_radius = parse_one(key, value)?,
            "variant" => self.variant = value.trim().to_string(),
            other => {
                return Err(Error::Config(format!("unknown parameter '{other}'")));
            }
        }
        Ok(())
    }

    /// Validate every reachable module precondition up front.
    pub fn validate(&self, experiment: Experiment) -> Result<()> {
        if self.d < 1 || self.d > 3 {
            return Err(Error::Config("d must be in {1, 2, 3}".into()));
        }
        for &l in &self.l_list {
            if !(l > 0.0) {
                return Err(Error::Config("L must be positive".into()));
            }
        }
        if self.l_list.is_empty() {
            return Err(Error::Config("L list must be nonempty".into()));
        }
        let needs_delta = matches!(
            experiment,
            Experiment::Observability | Experiment::Sweep | Experiment::Adversarial
        );
        if needs_delta {
            for &delta in &self.delta_list {
                if !(delta > 0.0 && delta < 0.5) {
                    return Err(Error::Config(format!(
                        "delta must be in (0, 1/2), got {delta}"
                    )));
                }
                if self.jitter_amp > 0.5 - delta {
                    return Err(Error::Config(format!(
                        "jitter_amp must be <= 1/2 - delta, got {} > {}",
                        self.jitter_amp,
                        0.5 - delta
                    )));
                }
            }
            if self.delta_list.is_empty() {
                return Err(Error::Config("delta list must be nonempty".into()));
            }
        }
        if self.energy < 0.0 && matches!(experiment, Experiment::Sweep | Experiment::Observability)
        {
            return Err(Error::Config("E must be >= 0".into()));
        }
        if self.potential_bound < 0.0 {
            return Err(Error::Config("K must be >= 0".into()));
        }
        if !(self.sfuc_exponent > 0.0) {
            return Err(Error::Config("N must be > 0".into()));
        }
        if !(self.klein_exponent > 0.0) {
            return Err(Error::Config("M_d must be > 0".into()));
        }
        if !(self.mu > 0.0) {
            return Err(Error::Config("mu must be > 0".into()));
        }
        if !(self.theta1 > 0.0) {
            return Err(Error::Config("theta1 must be > 0".into()));
        }
        if self.theta2 < 0.0 {
            return Err(Error::Config("theta2 must be >= 0".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds list must be nonempty".into()));
        }
        if self.n_per_unit < 2 && self.n.is_none() {
            return Err(Error::Config("n_per_unit must be >= 2".into()));
        }
        if experiment == Experiment::Shannon {
            for &k in &self.bandwidth {
                if !(k > 0.0) {
                    return Err(Error::Config("bandwidth must be positive".into()));
                }
            }
            if self.truncation < 1 {
                return Err(Error::Config("truncation must be >= 1".into()));
            }
        }
        if experiment == Experiment::Carleman && !(self.alpha_min <= self.alpha_max) {
            return Err(Error::Config("alpha_min must be <= alpha_max".into()));
        }
        if experiment == Experiment::Extend && (self.ny < 2 || !(self.y_max > 0.0)) {
            return Err(Error::Config("extend needs ny >= 2 and y_max > 0".into()));
        }
        Ok(())
    }

    /// Mesh for a given side length.
    pub fn mesh_for(&self, l: f64) -> usize {
        match self.n {
            Some(n) => n,
            None => {
                let raw = (l * self.n_per_unit as f64).round() as usize;
                match self.bc {
                    BoundaryCondition::Dirichlet => raw.saturating_sub(1).max(2),
                    BoundaryCondition::Periodic => raw.max(2),
                }
            }
        }
    }
}

/// A fully-resolved experiment: what to run, with which parameters, where
/// to write.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub params: Params,
    pub output: PathBuf,
    /// Raw key=value assignments in application order (echoed in headers).
    pub echo: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment, output: PathBuf) -> Self {
        ExperimentConfig {
            experiment,
            params: Params::default(),
            output,
            echo: BTreeMap::new(),
        }
    }

    /// Load `key = value` lines ('#' comments allowed) from a file.
    pub fn apply_file<P: AsRef<Path>>(&mut self, path: P) -> Result<()> {
        let text = std::fs::read_to_string(path.as_ref())?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "{}:{}: expected key = value, got '{raw}'",
                    path.as_ref().display(),
                    lineno + 1
                )));
            };
            self.apply(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Apply one assignment (config file entry or CLI override).
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        if key == "output" {
            self.output = PathBuf::from(value);
        } else if key == "experiment" {
            self.experiment = Experiment::parse(value)?;
        } else {
            self.params.apply(key, value)?;
        }
        self.echo.insert(key.to_string(), value.to_string());
        Ok(())
    }
}

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub outputs: Vec<PathBuf>,
    pub rows: usize,
    /// Rows that carried an error status (sweeps keep going).
    pub row_failures: usize,
    /// Human-readable one-line summary.
    pub summary: String,
}

fn csv_header(config: &ExperimentConfig, columns: &str) -> String {
    let mut head = String::new();
    head.push_str(&format!("# {CSV_SCHEMA_VERSION}\n"));
    head.push_str(&format!("# experiment = {}\n", config.experiment.name()));
    for (k, v) in &config.echo {
        head.push_str(&format!("# config: {k} = {v}\n"));
    }
    head.push_str(&format!("# seed scheme: {}\n", scheme_description()));
    head.push_str(columns);
    head.push('\n');
    head
}

fn write_output(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(content.as_bytes())?;
    Ok(())
}

fn sanitize(message: &str) -> String {
    message.replace(',', ";").replace('\n', " ")
}

fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&w| w > 0)
}

/// Run a configured experiment; every artifact lands under the configured
/// output path. Deterministic given identical config and seeds.
pub fn run(config: &ExperimentConfig) -> Result<RunArtifacts> {
    config.params.validate(config.experiment)?;
    match config.experiment {
        Experiment::Spectrum => run_spectrum(config),
        Experiment::Observability => run_observability(config),
        Experiment::Sweep => run_sweep(config),
        Experiment::Adversarial => run_adversarial(config),
        Experiment::Shannon => run_shannon(config),
        Experiment::Carleman => run_carleman(config),
        Experiment::Extend => run_extend(config),
        Experiment::QucCheck => run_quc_check(config),
    }
}

fn build_operator(
    params: &Params,
    l: f64,
    seed: u64,
) -> Result<(Domain, Grid, crate::operator::DiscreteOperator)> {
    let domain = Domain::new(params.d, l, params.bc)?;
    let n = params.mesh_for(l);
    let grid = Grid::new(domain, n)?;
    let v = match &params.potential_csv {
        Some(path) => ScalarField::from_csv(grid, path)?,
        None if params.potential_bound > 0.0 => {
            ScalarField::random_uniform(grid, derive_seed(seed, 1), params.potential_bound)?
        }
        None => ScalarField::zeros(grid),
    };
    let op = build_schrodinger(domain, n, &v)?;
    Ok((domain, grid, op))
}

fn arrangement_for(
    params: &Params,
    domain: Domain,
    delta: f64,
    seed: u64,
) -> Result<crate::geometry::BallArrangement> {
    let mode = if params.jitter_amp > 0.0 {
        ArrangementMode::Jitter {
            seed: params.jitter_seed.unwrap_or_else(|| derive_seed(seed, 3)),
            amplitude: params.jitter_amp,
        }
    } else {
        ArrangementMode::Periodic
    };
    make_arrangement(domain, delta, mode)
}

fn run_spectrum(config: &ExperimentConfig) -> Result<RunArtifacts> {
    let params = &config.params;
    let l = params.l_list[0];
    let seed = params.seeds[0];
    let (_, _, op) = build_operator(params, l, seed)?;
    let basis = spectrum_below(&op, EnergyWindow::BelowE(params.energy))?;
    basis.to_csv(&config.output)?;
    Ok(RunArtifacts {
        outputs: vec![config.output.clone()],
        rows: basis.len(),
        row_failures: 0,
        summary: format!(
            "spectrum: {} eigenpairs below E = {} (L = {l}, n = {})",
            basis.len(),
            params.energy,
            params.mesh_for(l)
        ),
    })
}

const SWEEP_COLUMNS: &str = "L,delta,E,K,seed,ratio,lambda_min,bound_sfuc,bound_klein,status";

fn sweep_row(params: &Params, l: f64, delta: f64, seed: u64) -> String {
    let run_one = || -> Result<(f64, f64, f64, f64)> {
        let (domain, _, op) = build_operator(params, l, seed)?;
        let arr = arrangement_for(params, domain, delta, seed)?;
        let bounds = BoundParams {
            potential_bound: params.potential_bound,
            energy: params.energy,
            sfuc_exponent: params.sfuc_exponent,
            klein_exponent: params.klein_exponent,
            ..BoundParams::default()
        };
        let report = observability_report(
            &op,
            &arr,
            EnergyWindow::BelowE(params.energy),
            &bounds,
            derive_seed(seed, 2),
        )?;
        Ok((report.ratio, report.lambda_min, report.bound_sfuc, report.bound_klein))
    };
    match run_one() {
        Ok((ratio, lambda_min, sfuc, klein)) => format!(
            "{l},{delta},{},{},{seed},{ratio},{lambda_min},{sfuc},{klein},ok",
            params.energy, params.potential_bound
        ),
        Err(err) => format!(
            "{l},{delta},{},{},{seed},nan,nan,nan,nan,error: {}",
            params.energy,
            params.potential_bound,
            sanitize(&err.to_string())
        ),
    }
}

fn run_observability(config: &ExperimentConfig) -> Result<RunArtifacts> {
    let params = &config.params;
    let row = sweep_row(params, params.l_list[0], params.delta_list[0], params.seeds[0]);
    let failures = usize::from(row.contains("error:"));
    let mut body = csv_header(config, SWEEP_COLUMNS);
    body.push_str(&row);
    body.push('\n');
    write_output(&config.output, &body)?;
    Ok(RunArtifacts {
        outputs: vec![config.output.clone()],
        rows: 1,
        row_failures: failures,
        summary: format!("observability: {row}"),
    })
}

fn run_sweep(config: &ExperimentConfig) -> Result<RunArtifacts> {
    let params = &config.params;
    // deterministic task list in sorted parameter order
    let mut tasks = Vec::new();
    for &l in &params.l_list {
        for &delta in &params.delta_list {
            for &seed in &params.seeds {
                tasks.push((l, delta, seed));
            }
        }
    }
    tasks.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });

    let compute = || -> Vec<String> {
        tasks
            .par_iter()
            .map(|&(l, delta, seed)| sweep_row(params, l, delta, seed))
            .collect()
    };
    let rows: Vec<String> = match workers_from_env() {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?
            .install(compute),
        None => compute(),
    };

    let failures = rows.iter().filter(|r| r.contains("error:")).count();
    let mut body = csv_header(config, SWEEP_COLUMNS);
    for row in &rows {
        body.push_str(row);
        body.push('\n');
    }
    write_output(&config.output, &body)?;
    Ok(RunArtifacts {
        outputs: vec![config.output.clone()],
        rows: rows.len(),
        row_failures: failures,
        summary: format!(
            "sweep: {} rows ({} failed) -> {}",
            rows.len(),
            failures,
            config.output.display()
        ),
    })
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let ext = path
        .extension()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    path.with_file_name(format!("{stem}{suffix}.{ext}"))
}

fn run_adversarial(config: &ExperimentConfig) -> Result<RunArtifacts> {
    let params = &config.params;
    let l = params.l_list[0];
    let delta = params.delta_list[0];
    let domain = Domain::new(params.d, l, params.bc)?;
    let space = SearchSpace {
        domain,
        n: params.mesh_for(l),
        delta,
        window: EnergyWindow::BelowE(params.energy),
        potential_bound: params.potential_bound,
        base_potential: None,
    };
    let search = SearchConfig {
        target: params.target,
        restarts: params.restarts,
        iterations: params.iterations,
        step_init: params.step_init,
        step_decay: params.step_decay,
        seed: params.seeds[0],
    };
    let outcome = minimize_ratio(&space, &search)?;

    let mut body = csv_header(config, "iteration,value,step");
    for row in &outcome.trace {
        body.push_str(&format!("{},{},{}\n", row.iteration, row.value, row.step));
    }
    write_output(&config.output, &body)?;
    let centers_path = with_suffix(&config.output, "_centers");
    outcome.best_centers.to_csv(&centers_path)?;
    let potential_path = with_suffix(&config.output, "_potential");
    outcome.best_potential.to_csv(&potential_path)?;

    Ok(RunArtifacts {
        outputs: vec![config.output.clone(), centers_path, potential_path],
        rows: outcome.trace.len(),
        row_failures: 0,
        summary: format!(
            "adversarial: best {} vs periodic start {} over {} restarts",
            outcome.best_value, outcome.start_value, params.restarts
        ),
    })
}

fn run_shannon(config: &ExperimentConfig) -> Result<RunArtifacts> {
    let params = &config.params;
    let f = |x: f64| (-0.5 * x * x).exp();
    let fhat = |p: f64| (-0.5 * p * p).exp();
    let eval: Vec<f64> = (0..=320).map(|i| -2.0 + 4.0 * i as f64 / 320.0).collect();
    let mut outputs = Vec::new();
    let mut rows = 0usize;
    let mut summaries = Vec::new();
    for &k in &params.bandwidth {
        let report = verify_aliasing(f, fhat, k, &eval, params.truncation, None)?;
        let jitter = if params.jitter > 0.0 {
            let mut rng = crate::seeding::seeded_rng(
                params.jitter_seed.unwrap_or_else(|| derive_seed(params.seeds[0], 4)),
            );
            use rand::Rng;
            Some(
                (0..2 * report.j_used + 1)
                    .map(|_| rng.random_range(-params.jitter..=params.jitter))
                    .collect::<Vec<f64>>(),
            )
        } else {
            None
        };
        let problem =
            SamplingProblem::from_function(f, k, report.j_used, jitter.as_deref())?;
        let path = if params.bandwidth.len() == 1 {
            config.output.clone()
        } else {
            with_suffix(&config.output, &format!("_K{k}"))
        };
        let mut body = csv_header(config, "x,f,skf,error");
        body.push_str(&format!(
            "# K = {k}, J = {}, sup_error = {}, bound = {}, verdict = {:?}\n",
            report.j_used, report.sup_error, report.bound, report.verdict
        ));
        for &x in &eval {
            let fv = f(x);
            let sv = reconstruct(&problem, x);
            body.push_str(&format!("{x},{fv},{sv},{}\n", (fv - sv).abs()));
            rows += 1;
        }
        write_output(&path, &body)?;
        outputs.push(path);
        summaries.push(format!(
            "K = {k}: sup_error = {:.3e}, bound = {:.3e}, {:?}",
            report.sup_error, report.bound, report.verdict
        ));
        if report.verdict == Verdict::Inconclusive {
            summaries.push(format!("K = {k}: inconclusive (truncation budget)"));
        }
    }
    Ok(RunArtifacts {
        outputs,
        rows,
        row_failures: 0,
        summary: format!("shannon: {}", summaries.join("; ")),
    })
}

fn run_carleman(config: &ExperimentConfig) -> Result<RunArtifacts> {
    let params = &config.params;
    let d = params.d;
    let domain = Domain::new(d, 2.0, BoundaryCondition::Dirichlet)?;
    let n = params.n.unwrap_or(128);
    let grid = Grid::new(domain, n)?;
    let weight = CarlemanWeight::identity(d, params.mu)?;
    let op = build_schrodinger(domain, n, &ScalarField::zeros(grid))?;
    // polynomial annulus profiles: far less mesh-sensitive than the
    // exponential bump at this resolution
    let family = vec![
        polynomial_annulus_bump(grid, 0.20, 0.90, 3)?,
        polynomial_annulus_bump(grid, 0.21, 0.91, 3)?,
        polynomial_annulus_bump(grid, 0.22, 0.92, 3)?,
    ];
    let alphas: Vec<f64> = {
        let lo = params.alpha_min.ceil() as i64;
        let hi = params.alpha_max.floor() as i64;
        (lo..=hi).map(|a| a as f64).collect()
    };
    let options = CarlemanOptions {
        rho_in: params.rho_in,
        rho_out: params.rho_out,
    };
    let estimate = estimate_c2(&weight, &op, &family, &alphas, &options)?;

    // weight-bound spot check alongside the sweep
    let points = seeded_ball_points(d, 10_000, derive_seed(params.seeds[0], 5));
    let bounds_report = check_weight_bounds(&weight, params.theta1, &points)?;

    let mut body = csv_header(config, "alpha,lhs_grad,lhs_cube,rhs,ratio");
    body.push_str(&format!(
        "# sup_ratio = {}, weight bound violations = {} / {}\n",
        estimate.sup_ratio, bounds_report.violations, bounds_report.checked
    ));
    for row in &estimate.rows {
        body.push_str(&format!(
            "{},{},{},{},{}\n",
            row.alpha, row.lhs_grad, row.lhs_cube, row.rhs, row.ratio
        ));
    }
    write_output(&config.output, &body)?;
    Ok(RunArtifacts {
        outputs: vec![config.output.clone()],
        rows: estimate.rows.len(),
        row_failures: 0,
        summary: format!(
            "carleman: sup_ratio = {:.6}, weight violations = {}",
            estimate.sup_ratio, bounds_report.violations
        ),
    })
}

fn run_extend(config: &ExperimentConfig) -> Result<RunArtifacts> {
    let params = &config.params;
    let l = params.l_list[0];
    let seed = params.seeds[0];
    let mut body = csv_header(config, "level,n,ny,l2_residual,boundary_error");
    let mut rows = 0usize;
    let mut extra_outputs: Vec<PathBuf> = Vec::new();
    let levels = 3usize;
    let base_n = params.mesh_for(l);
    for level in 0..levels {
        let scale = 1usize << level;
        // exact h-halving: h = L/(n+1) for Dirichlet, L/n for periodic
        let n = match params.bc {
            BoundaryCondition::Dirichlet => (base_n + 1) * scale - 1,
            BoundaryCondition::Periodic => base_n * scale,
        };
        let ny = params.ny * scale;
        let domain = Domain::new(params.d, l, params.bc)?;
        let grid = Grid::new(domain, n)?;
        let v = match &params.potential_csv {
            Some(path) => ScalarField::from_csv(grid, path)?,
            None if params.potential_bound > 0.0 => {
                ScalarField::random_uniform(grid, derive_seed(seed, 1), params.potential_bound)?
            }
            None => ScalarField::zeros(grid),
        };
        let op = build_schrodinger(domain, n, &v)?;
        let basis = spectrum_below(&op, EnergyWindow::BelowE(params.energy))?;
        let psi = random_in_range(&basis, derive_seed(seed, 2))?;
        let ext = build_extension(&basis, &psi, params.y_max, ny)?;
        let rep = residual(&ext, &v)?;
        body.push_str(&format!(
            "{level},{n},{ny},{},{}\n",
            rep.l2_residual, rep.boundary_error
        ));
        rows += 1;
        if params.export_field && level == levels - 1 {
            let field_path = with_suffix(&config.output, "_field");
            ext.to_csv(&field_path)?;
            extra_outputs.push(field_path);
        }
    }
    write_output(&config.output, &body)?;
    let mut outputs = vec![config.output.clone()];
    outputs.extend(extra_outputs);
    Ok(RunArtifacts {
        outputs,
        rows,
        row_failures: 0,
        summary: format!("extend: {rows} refinement levels -> {}", config.output.display()),
    })
}

fn run_quc_check(config: &ExperimentConfig) -> Result<RunArtifacts> {
    let params = &config.params;
    let d = params.d;
    let theta = Region::ball(
        {
            let mut c = [0.0; crate::domain::MAX_DIM];
            c[0] = params.theta_center;
            c
        },
        params.theta_radius,
    )?;
    let g = Region::ball([0.0; crate::domain::MAX_DIM], params.g_radius)?;
    let geo = QucGeometry::new(
        [0.0; crate::domain::MAX_DIM],
        params.scale_r,
        params.offset_d0,
        params.delta_list[0],
        theta,
        g,
        d,
    )?;
    let variant = match params.variant.as_str() {
        "schrodinger" => QucVariant::Schrodinger,
        "elliptic" => QucVariant::Elliptic {
            params: crate::domain::EllipticityParams::new(
                12.0 * params.scale_r + 2.0 * params.offset_d0,
                params.theta1,
                params.theta2,
            )?,
            mu: params.mu,
        },
        other => {
            return Err(Error::Config(format!(
                "variant must be schrodinger or elliptic, got {other}"
            )))
        }
    };
    let report = check_quc_hypotheses(&geo, &variant, d);
    let mut body = csv_header(config, "clause,holds");
    body.push_str(&format!("overall,{}\n", report.holds));
    for clause in &report.failed_clauses {
        body.push_str(&format!("\"{}\",false\n", sanitize(clause)));
    }
    if let Some(c3) = report.c3 {
        body.push_str(&format!("# C3 = {c3}\n"));
    }
    if let Some(r) = report.required_assumption_radius {
        body.push_str(&format!("# assumption radius = {r}\n"));
    }
    write_output(&config.output, &body)?;
    Ok(RunArtifacts {
        outputs: vec![config.output.clone()],
        rows: 1 + report.failed_clauses.len(),
        row_failures: usize::from(!report.holds),
        summary: format!(
            "quc-check: holds = {}, failed clauses: {:?}",
            report.holds, report.failed_clauses
        ),
    })
}

/// One aggregated line of [`report_summary`].
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub l: f64,
    pub rows: usize,
    pub min_lambda: f64,
    pub max_lambda: f64,
    /// Power-law fit over delta when at least 4 distinct deltas exist.
    pub fit: Option<ExponentFit>,
}

/// Aggregate sweep CSVs: per-L min/max of the uncertainty constant and,
/// where delta varies, the fitted exponent of its power law.
pub fn report_summary<P: AsRef<Path>>(paths: &[P]) -> Result<Vec<SummaryRow>> {
    let mut per_l: BTreeMap<u64, (f64, Vec<(f64, f64)>)> = BTreeMap::new();
    for path in paths {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path.as_ref())?;
        let headers = reader.headers()?.clone();
        let need = ["L", "delta", "lambda_min"];
        let mut cols = [0usize; 3];
        for (slot, name) in need.iter().enumerate() {
            cols[slot] = headers
                .iter()
                .position(|h| h == *name)
                .ok_or_else(|| Error::CsvFormat {
                    path: path.as_ref().display().to_string(),
                    message: format!(
                        "missing column '{name}'; found: {}",
                        headers.iter().collect::<Vec<_>>().join(",")
                    ),
                })?;
        }
        let status_col = headers.iter().position(|h| h == "status");
        for record in reader.records() {
            let record = record?;
            if let Some(sc) = status_col {
                if record.get(sc).map(|s| s != "ok").unwrap_or(false) {
                    continue;
                }
            }
            let parse = |i: usize| -> Result<f64> {
                record
                    .get(cols[i])
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| Error::CsvFormat {
                        path: path.as_ref().display().to_string(),
                        message: format!("bad numeric field in row {record:?}"),
                    })
            };
            let l = parse(0)?;
            let delta = parse(1)?;
            let lambda = parse(2)?;
            per_l
                .entry(l.to_bits())
                .or_insert((l, Vec::new()))
                .1
                .push((delta, lambda));
        }
    }
    let mut out = Vec::new();
    for (_, (l, samples)) in per_l {
        let min_lambda = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        let max_lambda = samples
            .iter()
            .map(|s| s.1)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut distinct: Vec<f64> = samples.iter().map(|s| s.0).collect();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        let fit = if distinct.len() >= 4 {
            fit_exponent(&samples).ok()
        } else {
            None
        };
        out.push(SummaryRow {
            l,
            rows: samples.len(),
            min_lambda,
            max_lambda,
            fit,
        });
    }
    Ok(out)
}

/// Render a summary as text: one line per L plus the overall minimum.
pub fn format_summary(rows: &[SummaryRow]) -> String {
    let mut s = String::from("L,rows,min_lambda,max_lambda,slope,r2\n");
    for row in rows {
        let (slope, r2) = match &row.fit {
            Some(f) => (format!("{}", f.slope), format!("{}", f.r2)),
            None => ("".into(), "".into()),
        };
        s.push_str(&format!(
            "{},{},{},{},{slope},{r2}\n",
            row.l, row.rows, row.min_lambda, row.max_lambda
        ));
    }
    if !rows.is_empty() {
        let overall = rows.iter().map(|r| r.min_lambda).fold(f64::INFINITY, f64::min);
        let total: usize = rows.iter().map(|r| r.rows).sum();
        s.push_str(&format!("# min lambda_min over all L: {overall} ({total} rows)\n"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn temp_config(experiment: Experiment) -> (tempfile::TempDir, ExperimentConfig) {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out.csv");
        (dir, ExperimentConfig::new(experiment, out))
    }

    #[test]
    fn sweep_rows_and_determinism() {
        let (_dir, mut config) = temp_config(Experiment::Sweep);
        config.apply("L", "1,3,5").unwrap();
        config.apply("delta", "0.2").unwrap();
        config.apply("E", "10").unwrap();
        config.apply("n_per_unit", "30").unwrap();
        config.apply("seeds", "7").unwrap();
        let first = run(&config).unwrap();
        assert_eq!(first.rows, 3);
        assert_eq!(first.row_failures, 0);
        let body1 = std::fs::read_to_string(&config.output).unwrap();
        let again = run(&config).unwrap();
        assert_eq!(again.rows, 3);
        let body2 = std::fs::read_to_string(&config.output).unwrap();
        assert_eq!(body1, body2, "same config and seed must be byte-identical");
        // all lambda_min positive
        for line in body1.lines().filter(|l| !l.starts_with('#')).skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols[9], "ok");
            assert!(cols[6].parse::<f64>().unwrap() > 0.0);
        }
    }

    #[test]
    fn invalid_delta_names_precondition() {
        let (_dir, mut config) = temp_config(Experiment::Sweep);
        config.apply("delta", "0.6").unwrap();
        let err = run(&config).unwrap_err();
        assert!(
            err.to_string().contains("delta must be in (0, 1/2)"),
            "got: {err}"
        );
    }

    #[test]
    fn unknown_key_rejected() {
        let (_dir, mut config) = temp_config(Experiment::Sweep);
        assert!(config.apply("no_such_key", "1").is_err());
    }

    #[test]
    fn config_file_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("run.cfg");
        std::fs::write(
            &cfg_path,
            "# comment line\nL = 1,3\ndelta = 0.1, 0.2 # trailing comment\nE = 5\n",
        )
        .unwrap();
        let mut config = ExperimentConfig::new(Experiment::Sweep, dir.path().join("o.csv"));
        config.apply_file(&cfg_path).unwrap();
        assert_eq!(config.params.l_list, vec![1.0, 3.0]);
        assert_eq!(config.params.delta_list, vec![0.1, 0.2]);
        assert_eq!(config.params.energy, 5.0);
    }

    #[test]
    fn summary_aggregates_and_fits() {
        // synthetic sweep rows following lambda = delta^3 exactly
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        let mut body = String::from(
            "# ucplab-csv v1\nL,delta,E,K,seed,ratio,lambda_min,bound_sfuc,bound_klein,status\n",
        );
        for &delta in &[0.1, 0.2, 0.3, 0.4, 0.5] {
            let lam = delta * delta * delta;
            body.push_str(&format!("3,{delta},10,0,0,0.5,{lam},0.1,0.01,ok\n"));
        }
        std::fs::write(&path, &body).unwrap();
        let rows = report_summary(&[&path]).unwrap();
        assert_eq!(rows.len(), 1);
        let fit = rows[0].fit.as_ref().expect("fit over 5 deltas");
        assert!((fit.slope - 3.0).abs() < 1e-9, "slope {}", fit.slope);
        assert!(fit.r2 > 0.999999);
        assert_eq!(rows[0].rows, 5);
    }

    #[test]
    fn summary_of_single_row_equals_the_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.csv");
        std::fs::write(
            &path,
            "L,delta,E,K,seed,ratio,lambda_min,bound_sfuc,bound_klein,status\n\
             5,0.2,10,0,0,0.5,0.37,0.1,0.01,ok\n",
        )
        .unwrap();
        let rows = report_summary(&[&path]).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].rows, 1);
        assert_eq!(rows[0].min_lambda, 0.37);
        assert_eq!(rows[0].max_lambda, 0.37);
        assert!(rows[0].fit.is_none());
        let text = format_summary(&rows);
        assert!(text.contains("min lambda_min over all L: 0.37"));
    }

    #[test]
    fn summary_rejects_missing_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        let err = report_summary(&[&path]).unwrap_err();
        assert!(err.to_string().contains("missing column"), "{err}");
    }

    #[test]
    fn quc_check_worked_verdicts() {
        let (_dir, mut config) = temp_config(Experiment::QucCheck);
        config.apply("theta_center", "1.2").unwrap();
        config.apply("delta", "0.45").unwrap();
        let pass = run(&config).unwrap();
        assert_eq!(pass.row_failures, 0);
        config.apply("theta_center", "0.9").unwrap();
        let fail = run(&config).unwrap();
        assert_eq!(fail.row_failures, 1);
        assert!(fail.summary.contains("2R <= 2 dist"));
    }

    #[test]
    fn extend_rows_written() {
        let (_dir, mut config) = temp_config(Experiment::Extend);
        config.apply("L", "2").unwrap();
        config.apply("E", "6").unwrap();
        config.apply("n_per_unit", "40").unwrap();
        config.apply("ny", "16").unwrap();
        let art = run(&config).unwrap();
        assert_eq!(art.rows, 3);
        let body = std::fs::read_to_string(&config.output).unwrap();
        let data_rows: Vec<&str> = body
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with("level"))
            .collect();
        assert_eq!(data_rows.len(), 3);
        // residual shrinks under refinement
        let res: Vec<f64> = data_rows
            .iter()
            .map(|r| r.split(',').nth(3).unwrap().parse::<f64>().unwrap())
            .collect();
        assert!(res[1] < res[0] && res[2] < res[1]);
    }
}
