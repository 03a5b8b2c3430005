//! Engine-side unitary propagation through the Padé matrix exponential.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fockspace::{c, DensityMatrix, FockOperator, StateVector, C64};

/// `exp(−iHt)`.
pub fn unitary(h: &FockOperator, t: f64) -> DMatrix<C64> {
    (h.matrix() * c(0.0, -t)).exp()
}

pub fn evolve_state(h: &FockOperator, psi: &StateVector, t: f64) -> Result<StateVector> {
    if psi.layout() != h.layout() {
        return Err(Error::LayoutMismatch("state and Hamiltonian layouts differ".into()));
    }
    psi.evolved(&unitary(h, t))
}

pub fn evolve_density(h: &FockOperator, rho: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    if rho.layout() != h.layout() {
        return Err(Error::LayoutMismatch("state and Hamiltonian layouts differ".into()));
    }
    let u = unitary(h, t);
    DensityMatrix::new(rho.layout().clone(), &u * rho.matrix() * u.adjoint())
}
