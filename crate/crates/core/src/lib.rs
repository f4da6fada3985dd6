//! Numerics for reflection-based Sobolev extension across cuspidal boundaries.
//!
//! The crate builds planar cusp domains and homeomorphisms of finite
//! distortion, measures the integrability of their distortion, applies the
//! reflection extension operator across a model cusp, and checks the sharp
//! exponent thresholds against independent quadrature and lower-bound
//! oracles.
//!
//! Module map:
//!
//! - [`geometry`]: cusp profiles, domains, membership and tip-graded meshes.
//! - [`maps`]: planar maps, Jacobians, the optimal distortion quotient.
//! - [`integrability`]: cutoff series of distortion integrals and their verdicts.
//! - [`sobolev`]: analytic test functions, seminorms, Poincaré check.
//! - [`extension`]: the cusp reflection, the extension operator, exponent calculus.
//! - [`sharpness`]: fiber lower bounds, threshold region scans, the exponential cusp demo.
//! - [`cli`]: the `cuspext` command-line surface and run records.

pub mod cli;
pub mod error;
pub mod exponent;
pub mod extension;
pub mod geometry;
pub mod integrability;
pub mod maps;
pub mod numeric;
pub mod sharpness;
pub mod sobolev;

pub use error::{Error, Result};
pub use exponent::Exponent;
pub use geometry::{CuspProfile, Domain, Point, QuadratureSpec};
pub use integrability::{IntegralSeries, Verdict};
pub use maps::PlanarMap;

/// Crate version embedded in every run record.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
