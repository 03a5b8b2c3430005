use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockspace::{DensityMatrix, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityMetrics {
    /// `½‖ρ − σ‖₁`
    pub trace_distance: f64,
    /// Uhlmann fidelity `(tr √(√ρ σ √ρ))²`.
    pub state_fidelity: f64,
}

fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

fn psd_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let v = &eig.eigenvectors;
    let mut vd = v.clone();
    for (j, &e) in eig.eigenvalues.iter().enumerate() {
        let s = e.max(0.0).sqrt();
        for i in 0..vd.nrows() {
            vd[(i, j)] *= C64::new(s, 0.0);
        }
    }
    vd * v.adjoint()
}

pub fn fidelity_metrics(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<FidelityMetrics> {
    if rho.layout() != sigma.layout() {
        return Err(Error::LayoutMismatch("fidelity metrics need matching layouts".into()));
    }
    let diff = hermitian_part(&(rho.matrix() - sigma.matrix()));
    let trace_distance = 0.5 * diff.symmetric_eigenvalues().iter().map(|e| e.abs()).sum::<f64>();
    let sr = psd_sqrt(rho.matrix());
    let inner = &sr * sigma.matrix() * &sr;
    let ev = hermitian_part(&inner).symmetric_eigenvalues();
    // rounding noise on vanishing eigenvalues would otherwise enter as √ε
    let floor = 1e-14 * ev.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let root_trace: f64 = ev.iter().filter(|&&e| e > floor).map(|e| e.sqrt()).sum();
    Ok(FidelityMetrics {
        trace_distance: trace_distance.clamp(0.0, 1.0),
        state_fidelity: (root_trace * root_trace).clamp(0.0, 1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{random, SpaceLayout, StateVector};
    use proptest::prelude::*;
    use rand::SeedableRng;

    #[test]
    fn identical_and_orthogonal() {
        let l = SpaceLayout::modes(&[("a", 3)]).unwrap();
        let a = StateVector::fock(&l, &[0]).unwrap().to_density();
        let b = StateVector::fock(&l, &[2]).unwrap().to_density();
        let same = fidelity_metrics(&a, &a).unwrap();
        assert!(same.trace_distance < 1e-14 && (same.state_fidelity - 1.0).abs() < 1e-12);
        let orth = fidelity_metrics(&a, &b).unwrap();
        assert!((orth.trace_distance - 1.0).abs() < 1e-14 && orth.state_fidelity < 1e-14);
    }

    #[test]
    fn pure_state_fidelity_is_overlap() {
        let l = SpaceLayout::modes(&[("a", 4)]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let psi = random::haar_state(&l, &mut rng);
        let rho = random::random_density(&l, &mut rng);
        let f = fidelity_metrics(&rho, &psi.to_density()).unwrap().state_fidelity;
        assert!((f - crate::fockspace::fidelity(&rho, &psi).unwrap()).abs() < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn fuchs_van_de_graaf(seed in any::<u64>()) {
            let l = SpaceLayout::modes(&[("a", 3), ("b", 2)]).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let rho = random::random_density(&l, &mut rng);
            let sigma = random::random_density(&l, &mut rng);
            let m = fidelity_metrics(&rho, &sigma).unwrap();
            let f = m.state_fidelity;
            prop_assert!(1.0 - f.sqrt() <= m.trace_distance + 1e-10);
            prop_assert!(m.trace_distance <= (1.0 - f).sqrt() + 1e-10);
        }
    }
}
