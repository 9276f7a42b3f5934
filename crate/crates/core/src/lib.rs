//! Self-affine sets generated by iterated function systems of affine
//! contractions, and the dimension quantities attached to them.
//!
//! The crate covers the whole pipeline from an IFS description to numbers:
//!
//! - [`linalg`]: small-matrix singular values and operator norms.
//! - [`ifs`]: maps, words, validation, bounding radius, JSON ingestion.
//! - [`covers`]: stopping sets `Z(δ)`, cylinder ellipses and ball covers.
//! - [`dimension`]: similarity dimension, singular value function,
//!   finite-depth pressure and the affinity dimension.
//! - [`estimators`]: attractor samplers and box counting.
//! - [`carpets`]: Bedford–McMullen carpets and their closed-form dimensions.
//! - [`conditions`]: open set condition and Hueter–Lalley checks.
//! - [`render`] and [`export`]: pixmaps and CSV output.

pub mod carpets;
pub mod conditions;
pub mod covers;
pub mod dimension;
pub mod error;
pub mod estimators;
pub mod export;
pub mod ifs;
pub mod linalg;
pub mod render;
mod rng;

pub use error::{Error, Result};
pub use ifs::{bounding_radius, compose, validate_ifs, AffineMap, Ifs, Limits, Word};
pub use linalg::{operator_norm, singular_values, SingularValueSet, SmallMatrix, SmallVector};
