//! Simulation and analysis of FPUT-α lattices with and without parameter
//! disorder.
//!
//! The crate covers:
//!
//! - [`lattice`]: the homogeneous chain, the disordered (nonlinear-coupling)
//!   variant, energies, Jacobians and canonical initial conditions;
//! - [`modes`]: the orthogonal sine transform, mode energies, truncated mode
//!   dynamics and extraction of the two-mode coupling coefficients;
//! - [`integrators`]: a fourth-order symplectic composition with tangent-map
//!   variational propagation, and an adaptive eighth-order Runge-Kutta with
//!   blow-up detection;
//! - [`chaos`]: maximum Lyapunov exponent, SALI, and regular/chaotic
//!   classification;
//! - [`two_mode`]: the slow-time envelope reduction, its polar form,
//!   equilibria, stability and phase portraits;
//! - [`experiments`]: disorder ensembles, coefficient sweeps, the
//!   variability-threshold regression, recurrence metrics and chaos-fraction
//!   scans.
//!
//! Ensemble work parallelizes across realizations with rayon when the
//! `parallel` feature (default) is enabled; disable it for a fully
//! sequential build.

pub mod chaos;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod integrators;
pub mod io;
pub mod lattice;
pub mod modes;
pub mod two_mode;

pub use error::{Error, Result};
