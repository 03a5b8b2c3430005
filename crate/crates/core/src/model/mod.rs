//! Physical parameters and Hamiltonian builders.
//!
//! Every builder returns an operator in units of ħ (entries are angular
//! rates). Subsystem labels are passed explicitly; [`LC`], [`MECH`] and
//! [`SPIN`] are the labels the protocols use.

pub mod constants;
mod field;
mod formulas;
mod hamiltonians;
pub mod paramfile;
mod params;

pub use field::{selective_addressing, FieldMap, PointDipoleTip, UniformField};
pub use formulas::{
    dressed_splitting, engineered_damping, frequency_shift, level_spacing, resonance_detunings, spin_phonon_coupling,
    steady_amplitude, steady_occupation, thermal_occupation, zero_point_fluctuation,
};
pub use hamiltonians::{
    build_beamsplitter, build_detuned, build_dispersive, build_jc, build_linearized, build_spin_field, build_spin_mech,
    dressed_excitation, dressed_qubit_basis, lowering, occupation, spin_op, DetuningConvention, JcKind, SpinSite,
    JC_FROM_SPIN_MECH, SIGMA_PM_NORM,
};
pub use params::{PhysicalInputs, SpinInputs, SpinParams, SystemParams};

pub const LC: &str = "a";
pub const MECH: &str = "m";
pub const SPIN: &str = "s";
