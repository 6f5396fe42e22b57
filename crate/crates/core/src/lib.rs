//! Compositional classical mechanics.
//!
//! Open systems are spans of phase spaces (or configuration spaces) decorated
//! with a Hamiltonian (or potential). Systems compose by pullback along a
//! shared boundary foot; decorations add. The Legendre transform takes
//! Lagrangian systems to Hamiltonian ones, and [`dynamics`] integrates the
//! resulting equations of motion.

pub mod cli;
pub mod dsl;
pub mod dynamics;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod hamsy;
pub mod lagsy;
pub mod legendre;
mod linalg;
pub mod span;

pub use error::{Error, Result};
