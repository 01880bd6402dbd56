//! Simulation laboratory for active suppression of vortex-induced vibration
//! of a spring-mounted cylinder with two degrees of freedom.
//!
//! A van der Pol wake oscillator supplies lift and drag; a radial-basis
//! network learns the lumped model uncertainty online and feeds a
//! sliding-surface control law acting on the transverse direction.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod control;
pub mod controllability;
pub mod dynamics;
pub mod error;
pub mod metrics;
pub mod model;
pub mod par;
pub mod rbf;
pub mod replay;
pub mod runner;
pub mod sim;
pub mod uncertainty;
pub mod wake;

pub use error::{Error, Result};
