//! Seeded random states and unitaries for property tests and oracle batches.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{c, DensityMatrix, SpaceLayout, StateVector, C64};

fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im)
}

/// Haar-distributed pure state.
pub fn haar_state<R: Rng + ?Sized>(layout: &SpaceLayout, rng: &mut R) -> StateVector {
    let n = layout.total_dim();
    let v = DVector::from_fn(n, |_, _| gaussian_complex(rng));
    StateVector::normalized(layout.clone(), v).expect("gaussian vector is nonzero")
}

/// Haar-random qubit amplitudes `(α, β)`.
pub fn haar_qubit<R: Rng + ?Sized>(rng: &mut R) -> (C64, C64) {
    let a = gaussian_complex(rng);
    let b = gaussian_complex(rng);
    let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
    (a / norm, b / norm)
}

/// Ginibre-ensemble mixed state `G G† / tr(G G†)` (full rank almost surely).
pub fn random_density<R: Rng + ?Sized>(layout: &SpaceLayout, rng: &mut R) -> DensityMatrix {
    let n = layout.total_dim();
    let g = DMatrix::from_fn(n, n, |_, _| gaussian_complex(rng));
    let m = &g * g.adjoint();
    let tr = m.trace();
    DensityMatrix::from_matrix_unchecked(layout.clone(), m / tr).expect("shape matches layout")
}

/// Haar unitary from the QR decomposition of a Ginibre matrix with the phase
/// of R's diagonal removed.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<C64> {
    let g = DMatrix::from_fn(n, n, |_, _| gaussian_complex(rng));
    let qr = g.qr();
    let (q, r) = qr.unpack();
    let mut q = q;
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random hermitian matrix with standard-normal entries.
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<C64> {
    let g = DMatrix::from_fn(n, n, |_, _| gaussian_complex(rng));
    (&g + g.adjoint()) * c(0.5, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u = haar_unitary(5, &mut rng);
        assert!((&u * u.adjoint() - DMatrix::identity(5, 5)).norm() < 1e-12);
    }

    #[test]
    fn random_density_is_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let l = SpaceLayout::modes(&[("a", 4)]).unwrap();
        let rho = random_density(&l, &mut rng);
        assert!(DensityMatrix::new(l, rho.into_matrix()).is_ok());
    }
}
