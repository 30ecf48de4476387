//! Simulation and design-study toolkit for an all-optical Raman quantum
//! memory driven by a spatially chirped control field.
//!
//! The chirp of the control beam acts as a longitudinal, controllable
//! inhomogeneous broadening of the Raman transition, so the memory behaves as
//! a gradient echo memory without Stark or Zeeman gradients. The crate is
//! organised as:
//!
//! - [`model`]: physical and normalized parameters, field and spin-wave
//!   records, input pulse synthesis.
//! - [`solver`]: storage and retrieval integrators for the transverse and
//!   non-transverse excitation geometries, plus a fine-grid reference scheme.
//! - [`metrics`]: photon numbers, efficiency, fidelity and envelope measures.
//! - [`designer`]: closed-form feasibility calculators for chirped control
//!   beams, coverage conditions and noise budgets.
//! - [`cli`]: configuration files, named presets, sweeps and file output used
//!   by the `chirpmem` binary.

pub mod cli;
pub mod designer;
pub mod metrics;
pub mod model;
pub mod solver;

pub use num_complex::Complex64 as C64;
