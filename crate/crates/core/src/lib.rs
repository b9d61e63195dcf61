//! Flat-top beam synthesis for reflective intelligent surfaces fed by a small
//! active multi-antenna feeder (AMAF-RIS).
//!
//! The pipeline runs bottom-up through the modules:
//!
//! * [`geometry`]: element positions and feed-to-surface rays.
//! * [`propagation`]: Friis coupling matrix `T`.
//! * [`eigenmode`]: principal singular triple of `T` and the co-phasing vector.
//! * [`shaping`]: binary grouping, phase-perturbation widening, template.
//! * [`pattern`]: linear and planar far-field patterns, flat-top metrics.
//! * [`optimizer`]: phase-only min-max ripple refinement.
//! * [`footprint`]: ground projections of planar beams.
//! * [`energy`]: DC power of the AMAF-RIS versus a constant-modulus array.

// Negated float comparisons are used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod design;
pub mod eigenmode;
pub mod energy;
pub mod error;
pub mod footprint;
pub mod geometry;
pub mod optimizer;
pub mod pattern;
pub mod propagation;
pub mod shaping;

pub use error::{Error, Result};
pub use num_complex::Complex64;
