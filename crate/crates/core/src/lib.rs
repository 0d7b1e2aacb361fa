//! Casimir-driven frequency shift of a sphere-membrane oscillator, computed
//! from tabulated optical data under Drude and plasma extrapolations, and a
//! chi-squared comparison against measured frequency shifts.
//!
//! Pipeline: [`optics`] (ε at imaginary frequencies) → [`lifshitz`]
//! (plate-plate free energy and pressure) → [`sphere_plate`] (PFA, vibration
//! and roughness averaging, frequency shift) → [`stats`] (χ², survival
//! probability, exclusion subsets). [`cli`] wires these to config files.

// Quadrature nodes are quoted to full published precision, and `!(x > 0.0)`
// is used on purpose so NaN fails validation.
#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod lifshitz;
pub mod optics;
pub mod quadrature;
pub mod sphere_plate;
pub mod stats;
pub mod units;
