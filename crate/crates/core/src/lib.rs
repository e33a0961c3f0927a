//! Two-photon absorption in Doppler-broadened three-level atoms.
//!
//! The crate provides a brute-force harmonic-balance steady-state solver
//! ([`oracle`]), closed-form perturbative solutions per velocity class
//! ([`perturbative`]), velocity averaging ([`averaging`]) and the averaged
//! lineshape formulas with their width and shift ([`analytics`]).

pub mod analytics;
pub mod averaging;
pub mod error;
pub mod linalg;
pub mod oracle;
pub mod params;
pub mod perturbative;
pub mod quadrature;

/// Crate version, echoed into output metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Result, TpaError};
pub use params::{
    normalize, per_velocity_context, AtomSpec, DistributionKind, FieldSpec, NormalizedParams, ParameterSet,
    PerVelocityContext, VelocityDistribution,
};
