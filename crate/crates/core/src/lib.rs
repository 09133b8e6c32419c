//! Exact simulation of linear-optical post-selection experiments on
//! polarized photons.
//!
//! States are sparse superpositions of multimode Fock terms, optical elements
//! are linear substitutions on creation operators, and detection is a
//! polarization-blind photon-count projection. The built-in setup injects two
//! single photons into the arms of a split polarization-entangled pair and
//! post-selects a four-fold coincidence, heralding a four-photon W state.

pub mod analysis;
pub mod circuit;
pub mod cli;
pub mod elements;
pub mod error;
pub mod format;
pub mod mode;
pub mod oracle;
pub mod postselect;
pub mod reference;
pub mod state;
pub mod verify;

pub use error::{Error, Result};
pub use mode::{Polarization, PolarizedMode};
pub use state::{Convention, Occupation, StateVector};
