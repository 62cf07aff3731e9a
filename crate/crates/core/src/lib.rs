//! Mañé-type partially hyperbolic maps of the torus.
//!
//! Starting from an integer matrix with one contracting eigenvalue and real
//! positive spectrum, the crate deforms the linear automorphism near a fixed
//! point along the weakest expanding direction, builds the semiconjugacy back
//! onto the linear map by shadowing, and measures what the dynamics looks
//! like: fibers, entropy, occupation averages and center growth.
//!
//! ```
//! use manelab_core::{canonical_matrix, spectral_data, linear_entropy};
//!
//! let a = canonical_matrix();
//! let s = spectral_data(&a, 1e-12).unwrap();
//! assert!((linear_entropy(&s) - 3.23835).abs() < 1e-4);
//! ```

pub mod ergodic;
pub mod error;
pub mod mane;
pub mod poly;
pub mod semiconj;
pub mod shadowing;
pub mod spectral;
pub mod torus;

pub use ergodic::{
    birkhoff_indicator_average, center_expansion_exponent, entropy_estimate, ks_uniform,
    sample_mme, BirkhoffResult, CenterExpansionReport, EntropyEstimate, MmeSample, Start,
};
pub use error::{Error, Result};
pub use mane::{
    ball_measure_and_inequality, CenterExtremes, ManeMap, ManeParams, ManeSettings, MeasureStats,
    Pitchfork,
};
pub use poly::{real_roots, IntPolynomial};
pub use semiconj::{FiberEstimate, FiberReport, PiSample, SemiconjugacyEvaluator};
pub use shadowing::{
    noisy_orbit_survey, shadow, shadow_at, shadowing_constants, PseudoOrbit, ShadowingConstants,
    ShadowingResult, ShadowingSurvey,
};
pub use spectral::{
    canonical_matrix, companion_matrix, matrix_power, search_admissible_polynomials, spectral_data,
    SpectralData, ToralMatrix,
};
pub use torus::{
    apply_linear, distance, fixed_points, indexed_rng, linear_entropy, nearest_lift, uniform_point,
    FixedPoint, LatticePoint, Lift, RationalPoint, ToralMap, TorusPoint,
};
