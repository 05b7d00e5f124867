//! Chord integrals of convex bodies and the L_p chord Minkowski problem.

pub mod body;
pub mod classical;
pub mod consts;
pub mod construction;
pub mod error;
pub mod grid;
pub mod harness;
pub mod hull;
pub mod integral;
pub mod john;
pub mod linalg;
pub mod optim;
pub mod params;
pub mod quadrature;
pub mod special;
pub mod variational;
pub mod wulff;

pub use error::{Error, Result};
