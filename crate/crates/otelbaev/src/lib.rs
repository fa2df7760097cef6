//! Otelbaev averaging of one-dimensional Radon measures and certified
//! two-sided estimates for the negative spectrum of `-u'' - mu`.
//!
//! The supported measure class (finitely many atoms plus compactly supported
//! piecewise-constant density) keeps every window-mass query piecewise linear,
//! so the averaged function, its sublevel sets and the interval decomposition
//! are computed exactly; integrals and suprema carry certified error bounds.
//!
//! Modules:
//! - [`measure`]: the measure class and exact interval-mass algebra;
//! - [`qstar`]: Otelbaev's function `q*_alpha`, envelopes, sublevel sets,
//!   sup-norms and power integrals;
//! - [`decomposition`]: the interval covering with split point masses;
//! - [`bounds`]: counting-function, eigenvalue, ground-state and
//!   Lieb-Thirring estimates;
//! - [`refsolver`]: reference eigensolver (transfer matrices + secular
//!   function) with an independent finite-difference oracle;
//! - [`comparison`]: classical functionals and the example-measure generators;
//! - [`scenario`]: machine-readable scenario runner backing the CLI.

pub mod bounds;
pub mod comparison;
pub mod corpus;
pub mod decomposition;
mod integrate;
pub mod measure;
mod num;
pub mod qstar;
pub mod refsolver;
pub mod scenario;

pub use measure::{build_measure, Atom, DensitySegment, IntervalSpec, Measure};
pub use qstar::{eval_point, OtelbaevPoint};

/// Averaging parameter used by the lower estimates: `(pi^2 + 3/4)^-1`.
pub const ALPHA_LOWER: f64 = 1.0 / (std::f64::consts::PI * std::f64::consts::PI + 0.75);

/// Averaging parameter used by the upper estimates.
pub const BETA_UPPER: f64 = 2.0;
