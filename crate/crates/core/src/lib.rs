//! Three-level quantum dot (ground, exciton, biexciton) coupled to one
//! quantized cavity mode.
//!
//! The dot–field state splits into closed manifolds
//! `{|0, n+1⟩, |e, n⟩, |b, n−1⟩}`. Within each manifold the dressed-state
//! frequencies are the roots of a cubic, and the amplitudes follow in closed
//! form; [`oracle`] integrates the same equations of motion directly so the
//! two routes can be checked against each other.

pub mod dynamics;
pub mod error;
pub mod material;
pub mod observables;
pub mod oracle;
pub mod quadrature;
pub mod runner;
pub mod spectrum;

pub use error::{Error, Result};
