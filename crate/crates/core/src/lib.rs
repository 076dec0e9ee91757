//! Arithmetic filters for determinant-sign predicates.
//!
//! A filter pairs a fast rounded evaluator with a certifier that compares the
//! computed magnitude against a precomputed error threshold. When the
//! certifier cannot vouch for the sign, the predicate falls back to exact
//! big-integer evaluation. The crate is organised around that cascade:
//!
//! * [`error_model`] derives thresholds with a static forward-error calculus
//!   over `(magnitude, error)` pairs, driven by explicit evaluation schemes.
//! * [`exact`] is the big-integer ground truth (Bareiss elimination with a
//!   cofactor-expansion cross-check).
//! * [`predicates`] runs the which-side and insphere filters at native or
//!   software-emulated `b`-bit precision.
//! * [`bounds`] holds the closed-form failure-probability bounds.
//! * [`montecarlo`] samples point sets and checks every bound empirically.

pub mod bounds;
pub mod dyadic;
pub mod error;
pub mod error_model;
pub mod exact;
pub mod montecarlo;
pub mod predicates;
pub mod softfloat;

pub use dyadic::Dyadic;
pub use error::{Error, Result};
pub use error_model::{MagnitudeRule, PrecisionConfig, RoundedBound};
pub use exact::Sign;
