//! Dislocation structures of low-angle grain boundaries.
//!
//! The crate minimizes a separable, nonconvex dislocation energy subject to
//! Frank's-formula constraints with a multi-block ADMM whose penalty grows
//! geometrically, and compares it with the augmented Lagrangian and penalty
//! methods. It also certifies quasi-convexity of the reduced three-family
//! problem and analyses the classic divergent three-block ADMM example.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod counterexample;
pub mod error;
pub mod model;
pub mod numkit;
pub mod quasiconvexity;
pub mod solvers;
pub mod cli;

pub use error::{Error, Result};
