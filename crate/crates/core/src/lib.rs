//! Numerical toolkit for convexity and pluri-subharmonicity on Riemannian
//! submersions and calibrated geometries.
//!
//! Everything is chart based: a manifold is a metric given by expression
//! fields on a coordinate box, and all derivatives come from order-2 forward
//! jets.

pub mod calibration;
pub mod error;
pub mod expr;
pub mod field;
pub mod forms;
pub mod jet;
pub mod linalg;
pub mod manifold;
pub mod sampling;
pub mod scenarios;
pub mod submersion;
pub mod variation;

pub use error::{Error, Result};
