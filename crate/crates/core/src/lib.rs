//! Conformal geometry of σ₂ curvature on asymptotically hyperbolic 4-discs:
//! pointwise curvature, the rotationally symmetric model, level-set
//! quasi-local mass and the Penrose inequality check.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod chy;
pub mod dual;
pub mod error;
pub mod geometry;
pub mod levelset;
pub mod metrics;
pub mod ode;
pub mod penrose;
pub mod quadrature;
pub mod sampling;

pub use error::{Error, Result};
