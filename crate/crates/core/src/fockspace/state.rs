use nalgebra::{DMatrix, DVector};

use super::operator::relative_hermiticity_error;
use super::{c, FockOperator, SpaceLayout, Subsystem, C64};
use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-9;
const HERMITIAN_TOL: f64 = 1e-10;
const POSITIVITY_TOL: f64 = 1e-9;

/// Normalized pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    layout: SpaceLayout,
    amplitudes: DVector<C64>,
}

impl StateVector {
    pub fn new(layout: SpaceLayout, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != layout.total_dim() {
            return Err(Error::DimensionMismatch { expected: layout.total_dim(), actual: amplitudes.len() });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("state norm {norm} differs from 1")));
        }
        Ok(StateVector { layout, amplitudes })
    }

    /// Normalizes `amplitudes` before validating.
    pub fn normalized(layout: SpaceLayout, amplitudes: DVector<C64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero or non-finite vector".into()));
        }
        StateVector::new(layout, amplitudes / c(norm, 0.0))
    }

    /// Product Fock state `|n_1, n_2, …⟩` in layout order.
    pub fn fock(layout: &SpaceLayout, occupations: &[usize]) -> Result<Self> {
        if occupations.len() != layout.len() {
            return Err(Error::DimensionMismatch { expected: layout.len(), actual: occupations.len() });
        }
        for (&n, s) in occupations.iter().zip(layout.subsystems()) {
            if n >= s.dim {
                return Err(Error::InvalidState(format!("occupation {n} exceeds truncation of `{}`", s.label)));
            }
        }
        let mut amps = DVector::zeros(layout.total_dim());
        amps[layout.flat_index(occupations)] = c(1.0, 0.0);
        StateVector::new(layout.clone(), amps)
    }

    /// Single-mode state `Σ coeffs[n] |n⟩` normalized, on a mode of `dim` levels.
    pub fn single_mode(label: &str, dim: usize, coeffs: &[C64]) -> Result<Self> {
        if coeffs.len() > dim {
            return Err(Error::DimensionMismatch { expected: dim, actual: coeffs.len() });
        }
        let mut amps = DVector::zeros(dim);
        for (n, &z) in coeffs.iter().enumerate() {
            amps[n] = z;
        }
        StateVector::normalized(SpaceLayout::single(Subsystem::bosonic(label, dim))?, amps)
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch("inner product of states on different layouts".into()));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let layout = self.layout.tensor(&other.layout)?;
        Ok(StateVector { layout, amplitudes: self.amplitudes.kronecker(&other.amplitudes) })
    }

    pub fn to_density(&self) -> DensityMatrix {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityMatrix { layout: self.layout.clone(), matrix: m }
    }

    pub fn with_layout(&self, layout: SpaceLayout) -> Result<StateVector> {
        StateVector::new(layout, self.amplitudes.clone())
    }

    /// Applies a unitary given as a raw matrix and renormalizes round-off.
    pub fn evolved(&self, unitary: &DMatrix<C64>) -> Result<StateVector> {
        StateVector::normalized(self.layout.clone(), unitary * &self.amplitudes)
    }
}

/// Per-state diagnostics for the density-matrix invariants.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct InvariantStats {
    /// `|tr ρ − 1|`
    pub trace_error: f64,
    /// `‖ρ − ρ†‖_F / ‖ρ‖_F`
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

impl InvariantStats {
    pub fn within(&self, trace_tol: f64, hermitian_tol: f64, positivity_tol: f64) -> bool {
        self.trace_error <= trace_tol
            && self.hermiticity_error <= hermitian_tol
            && self.min_eigenvalue >= -positivity_tol
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    layout: SpaceLayout,
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validates trace (1e-9), hermiticity (1e-10) and positivity (−1e-9).
    pub fn new(layout: SpaceLayout, matrix: DMatrix<C64>) -> Result<Self> {
        let rho = DensityMatrix::from_matrix_unchecked(layout, matrix)?;
        let stats = rho.invariant_stats();
        if !stats.within(TRACE_TOL, HERMITIAN_TOL, POSITIVITY_TOL) {
            return Err(Error::InvalidState(format!(
                "density matrix invariants violated: trace error {:.3e}, hermiticity {:.3e}, min eigenvalue {:.3e}",
                stats.trace_error, stats.hermiticity_error, stats.min_eigenvalue
            )));
        }
        Ok(rho)
    }

    /// Checks only the shape; used for integrator samples whose invariants are
    /// measured separately.
    pub fn from_matrix_unchecked(layout: SpaceLayout, matrix: DMatrix<C64>) -> Result<Self> {
        let n = layout.total_dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: matrix.nrows() });
        }
        Ok(DensityMatrix { layout, matrix })
    }

    pub fn maximally_mixed(layout: &SpaceLayout) -> Self {
        let n = layout.total_dim();
        DensityMatrix { layout: layout.clone(), matrix: DMatrix::identity(n, n) / c(n as f64, 0.0) }
    }

    /// Bose–Einstein state with mean occupation `n_bar`, truncated to `dim`
    /// levels and renormalized.
    pub fn thermal(label: &str, dim: usize, n_bar: f64) -> Result<Self> {
        if n_bar < 0.0 || !n_bar.is_finite() {
            return Err(Error::param("n_bar", "thermal occupation must be finite and nonnegative"));
        }
        let layout = SpaceLayout::single(Subsystem::bosonic(label, dim))?;
        let weights: Vec<f64> = if n_bar == 0.0 {
            (0..dim).map(|n| if n == 0 { 1.0 } else { 0.0 }).collect()
        } else {
            let ratio = n_bar / (1.0 + n_bar);
            (0..dim).map(|n| ratio.powi(n as i32)).collect()
        };
        let total: f64 = weights.iter().sum();
        let diag = DVector::from_iterator(dim, weights.iter().map(|w| c(w / total, 0.0)));
        Ok(DensityMatrix { layout, matrix: DMatrix::from_diagonal(&diag) })
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn expectation(&self, op: &FockOperator) -> Result<f64> {
        if op.layout() != &self.layout {
            return Err(Error::LayoutMismatch("observable and state layouts differ".into()));
        }
        Ok((op.matrix() * &self.matrix).trace().re)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.matrix + self.matrix.adjoint()) * c(0.5, 0.0);
        let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn invariant_stats(&self) -> InvariantStats {
        let min_eigenvalue = self.eigenvalues().first().copied().unwrap_or(0.0);
        InvariantStats {
            trace_error: (self.trace() - c(1.0, 0.0)).norm(),
            hermiticity_error: relative_hermiticity_error(&self.matrix),
            min_eigenvalue,
        }
    }

    /// Von Neumann entropy in nats.
    pub fn entropy(&self) -> f64 {
        self.eigenvalues().into_iter().filter(|&p| p > 1e-15).map(|p| -p * p.ln()).sum()
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        let layout = self.layout.tensor(&other.layout)?;
        Ok(DensityMatrix { layout, matrix: self.matrix.kronecker(&other.matrix) })
    }

    /// Population of each level of subsystem `label`.
    pub fn populations(&self, label: &str) -> Result<Vec<f64>> {
        let k = self.layout.position(label)?;
        let d = self.layout.subsystems()[k].dim;
        let mut pops = vec![0.0; d];
        for i in 0..self.dim() {
            let n = self.layout.multi_index(i)[k];
            pops[n] += self.matrix[(i, i)].re;
        }
        Ok(pops)
    }

    /// Population of the two highest Fock levels of `label`.
    pub fn top_levels_population(&self, label: &str) -> Result<f64> {
        let pops = self.populations(label)?;
        Ok(pops.iter().rev().take(2).sum())
    }

    /// Fails with [`Error::TruncationOverflow`] when any bosonic mode carries
    /// more than `threshold` population in its top two levels.
    pub fn check_truncation(&self, threshold: f64) -> Result<()> {
        for s in self.layout.subsystems() {
            if s.kind != super::SubsystemKind::Bosonic || s.dim < 3 {
                continue;
            }
            let p = self.top_levels_population(&s.label)?;
            if p > threshold {
                return Err(Error::TruncationOverflow { label: s.label.clone(), population: p, threshold });
            }
        }
        Ok(())
    }

    pub fn with_layout(&self, layout: SpaceLayout) -> Result<DensityMatrix> {
        DensityMatrix::from_matrix_unchecked(layout, self.matrix.clone())
    }

    /// Trace distance `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch("trace distance between different layouts".into()));
        }
        let diff = &self.matrix - &other.matrix;
        let herm = (&diff + diff.adjoint()) * c(0.5, 0.0);
        Ok(0.5 * herm.symmetric_eigenvalues().iter().map(|e| e.abs()).sum::<f64>())
    }
}

/// `⟨ψ|ρ|ψ⟩`, clamped to `[0, 1]` against round-off.
pub fn fidelity(rho: &DensityMatrix, psi: &StateVector) -> Result<f64> {
    if rho.layout() != psi.layout() {
        return Err(Error::LayoutMismatch("fidelity between different layouts".into()));
    }
    let v = psi.amplitudes();
    let f = v.dotc(&(rho.matrix() * v)).re;
    Ok(f.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::random::{haar_state, random_density};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn qubit(label: &str) -> SpaceLayout {
        SpaceLayout::modes(&[(label, 2)]).unwrap()
    }

    #[test]
    fn norm_is_validated() {
        let l = qubit("a");
        assert!(StateVector::new(l.clone(), DVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)])).is_err());
        assert!(StateVector::normalized(l, DVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)])).is_ok());
    }

    #[test]
    fn fidelity_examples() {
        let l = qubit("a");
        let zero = StateVector::fock(&l, &[0]).unwrap();
        let one = StateVector::fock(&l, &[1]).unwrap();
        assert!((fidelity(&zero.to_density(), &zero).unwrap() - 1.0).abs() < 1e-15);
        assert!(fidelity(&zero.to_density(), &one).unwrap().abs() < 1e-15);

        let big = SpaceLayout::modes(&[("a", 3), ("b", 2)]).unwrap();
        let mixed = DensityMatrix::maximally_mixed(&big);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi = haar_state(&big, &mut rng);
        assert!((fidelity(&mixed, &psi).unwrap() - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn fidelity_rejects_layout_mismatch() {
        let zero = StateVector::fock(&qubit("a"), &[0]).unwrap();
        assert!(fidelity(&zero.to_density(), &StateVector::fock(&qubit("b"), &[0]).unwrap()).is_err());
    }

    #[test]
    fn fidelity_linear_in_rho_and_phase_invariant() {
        let l = SpaceLayout::modes(&[("a", 3)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let r1 = random_density(&l, &mut rng);
            let r2 = random_density(&l, &mut rng);
            let psi = haar_state(&l, &mut rng);
            let p = 0.3;
            let mix = DensityMatrix::from_matrix_unchecked(
                l.clone(),
                r1.matrix() * c(p, 0.0) + r2.matrix() * c(1.0 - p, 0.0),
            )
            .unwrap();
            let lhs = fidelity(&mix, &psi).unwrap();
            let rhs = p * fidelity(&r1, &psi).unwrap() + (1.0 - p) * fidelity(&r2, &psi).unwrap();
            assert!((lhs - rhs).abs() < 1e-13);
            let rotated = StateVector::new(l.clone(), psi.amplitudes() * C64::from_polar(1.0, 0.7)).unwrap();
            assert!((fidelity(&r1, &psi).unwrap() - fidelity(&r1, &rotated).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn thermal_state_has_requested_mean() {
        let rho = DensityMatrix::thermal("m", 80, 2.0).unwrap();
        let n = crate::fockspace::number(80).unwrap().with_label("m");
        assert!((rho.expectation(&n).unwrap() - 2.0).abs() < 1e-9);
        assert!(rho.check_truncation(1e-6).is_ok());
        assert!(DensityMatrix::thermal("m", 20, 2.0).unwrap().check_truncation(1e-6).is_err());
        let cold = DensityMatrix::thermal("m", 12, 0.05).unwrap();
        assert!(cold.check_truncation(1e-6).is_ok());
    }

    #[test]
    fn density_constructor_checks_positivity() {
        let l = qubit("a");
        let bad = DMatrix::from_row_slice(2, 2, &[c(1.2, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.2, 0.0)]);
        assert!(DensityMatrix::new(l.clone(), bad).is_err());
        let good = DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0)]);
        assert!(DensityMatrix::new(l, good).is_ok());
    }
}
