//! ucplab: a numerical laboratory for observability and unique-continuation
//! constants of discretized Schrödinger and elliptic operators on cubes.
//!
//! The crate measures how much of an eigenfunction's (or spectral-subspace
//! element's) mass an equidistributed union of small balls captures, checks
//! the structural hypotheses under which such bounds are proved, evaluates
//! the explicit bound formulas, builds Carleman weights and ghost-dimension
//! extensions, and benchmarks everything against Shannon sampling.
//!
//! Entry points:
//! - [`operator`]: discretized operators and hypothesis checkers
//! - [`spectral`]: eigenpairs and spectral projector bases
//! - [`geometry`]: ball arrangements, indicators, region quadrature
//! - [`observability`]: ratios, uncertainty constants, bound formulas
//! - [`adversary`]: worst-case searches over centers and potentials
//! - [`extension`]: the ghost-dimension extension and its identities
//! - [`carleman`]: weight functions and the weighted functional inequality
//! - [`shannon`]: sampling series, truncation and aliasing control
//! - [`harness`]: reproducible experiments and CSV emission

pub mod adversary;
pub mod carleman;
pub mod domain;
pub mod error;
pub mod extension;
pub mod geometry;
pub mod harness;
pub mod observability;
pub mod operator;
pub mod quad;
pub mod seeding;
pub mod shannon;
pub mod sparse;
pub mod spectral;

pub use domain::{
    BoundaryCondition, CoefficientField, Coord, Domain, EllipticityParams, Grid, MultiIndex,
    ScalarField,
};
pub use error::{Error, Result};
