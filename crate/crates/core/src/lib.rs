//! Open-system simulation of a membrane electromechanical oscillator carrying a
//! microorganism: sideband cooling, motional superposition and teleportation,
//! and coupling of an internal electron spin to the centre-of-mass motion.
//!
//! All frequencies and rates are angular (rad/s) and every Hamiltonian is
//! stored divided by ħ.
//!
//! Module map:
//! - [`fockspace`]: truncated Fock ⊗ spin-½ operator algebra and states.
//! - [`model`]: physical parameters and Hamiltonian builders.
//! - [`lindblad`]: master-equation engine (integration, steady states,
//!   adiabatic elimination).
//! - [`propagate`]: closed-system propagators used by protocol gates.
//! - [`protocols`]: cooling, state transfer, teleportation, ESR scan and
//!   spin-phonon swaps.
//! - [`oracle`]: brute-force reference implementations used for verification.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fockspace;
pub mod lindblad;
pub mod model;
pub mod oracle;
pub mod par;
pub mod propagate;
pub mod protocols;

pub use error::{Error, Result};
pub use fockspace::{DensityMatrix, FockOperator, SpaceLayout, StateVector, Subsystem, SubsystemKind, C64};
pub use par::Exec;
