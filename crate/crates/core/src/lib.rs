//! Twin-microstructure energies for a martensite slab attached to austenite.
//!
//! The admissible fields are y-periodic with `u_y = ±1`; each x-station of a
//! [`Configuration`] carries one [`SawtoothProfile`]. The crate evaluates the
//! energy `β‖u(0,·)‖²_{H^{1/2}} + ∫∫u_x² + ε∫N(x)dx`, the exact striped
//! optimum, reflection-positivity inequalities for the screened kernel
//! `e^{-α|y-y'|}`, the localized lower-bound certificate, and numerical
//! minimization.

pub mod chessboard;
pub mod energy;
pub mod error;
pub mod localization;
pub mod one_dim;
pub mod optimize;
pub mod profile;
pub mod pwl;
pub mod quad;
pub mod special;

pub use energy::EnergyBreakdown;
pub use error::{Error, Result};
pub use profile::{Configuration, ModelParams, SawtoothProfile};
