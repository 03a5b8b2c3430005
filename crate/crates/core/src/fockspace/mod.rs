//! Truncated Fock-space and spin-½ operator algebra.
//!
//! Composite spaces are described by a [`SpaceLayout`]; tensor products follow
//! the layout's declaration order (first subsystem is the most significant
//! index). Dense complex matrices are the canonical representation.

mod algebra;
mod layout;
mod operator;
pub mod random;
mod serial;
mod state;

pub use algebra::{apply_local, conjugate_local, embed, embed_two, partial_trace, qubit_leakage};
pub use layout::{SpaceLayout, Subsystem, SubsystemKind};
pub use operator::{
    annihilation, creation, identity, number, pauli, sigma_minus_literal, sigma_plus_literal, FockOperator, PauliAxis,
};
pub use serial::{SerializedMatrix, FORMAT_TAG};
pub use state::{fidelity, DensityMatrix, InvariantStats, StateVector};

pub type C64 = num_complex::Complex64;

/// Default tolerance for the top-two-level population check on truncated modes.
pub const DEFAULT_TRUNCATION_THRESHOLD: f64 = 1e-6;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
