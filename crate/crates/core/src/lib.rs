//! Stochastic optimization over a constrained domain with few exact
//! projections.
//!
//! The solvers replace the hard constraint `c(x) <= 0` inside each epoch by
//! a penalty `lambda [c(x)]_+` plus a cheap projection onto an enclosing
//! ball, and only project onto the true domain once per epoch. The
//! [`psd`] and [`lmnn`] modules apply this to metric learning, where the
//! exact projection is a full eigendecomposition.

pub mod error;
pub mod harness;
pub mod lmnn;
pub mod penalty;
pub mod point;
pub mod prox;
pub mod psd;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};
pub use penalty::{Constraint, Objective};
pub use point::{Ball, Point, Shape};
