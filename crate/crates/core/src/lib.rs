//! Rotating Kepler problem: flows, Moser regularization, periodic orbits,
//! Conley-Zehnder indices and the symplectic homology they generate.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod action_angle;
pub mod catalog;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod index;
pub mod integrate;
pub mod ledger;
pub mod math;
pub mod moduli;
pub mod regularization;
pub mod verify;

pub use error::{Error, Result};
