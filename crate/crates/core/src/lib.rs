//! Numerical laboratory for single-bubble concentration in the radial
//! energy-critical wave equation ∂_tt u = Δu + |u|^{4/(N−2)} u, N ∈ {3,4,5}:
//! ground-state profiles, the linearized spectral problem, modulation
//! decomposition, interaction-energy expansions, a conservative wave stepper,
//! blow-up-rate fitting, and differential-inequality audits.

pub mod bubble;
pub mod diff;
pub mod energy;
pub mod error;
pub mod audit;
pub mod evolution;
pub mod fitting;
pub mod fixtures;
pub mod grid;
pub mod interp;
pub mod modulation;
pub mod nonlin;
pub mod spectral;

pub use error::{Error, Result};
