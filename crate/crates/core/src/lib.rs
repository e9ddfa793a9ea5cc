//! Radial positive ground states of `−Δu + λu = u^{p−1}` on the annulus
//! `1 < |x| < 2`, their mass curve `d(λ) = ∫ u_λ²`, the large-λ soliton
//! limit, and conservative time evolution of the associated NLS flow.

pub mod error;
pub mod numerics;

pub use error::{Error, Result};
pub mod radial;
pub mod mass_curve;
pub mod asymptotics;
pub mod dynamics;
pub mod cli;
