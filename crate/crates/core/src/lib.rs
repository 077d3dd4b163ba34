//! Spectral verification for ground states of nonlinear Schrödinger equations.

pub mod eigen;
pub mod export;
pub mod error;
pub mod index;
pub mod linops;
pub mod model;
pub mod products;
pub mod odecore;
pub mod soliton;
pub mod verdict;

pub use error::{Error, Result};
