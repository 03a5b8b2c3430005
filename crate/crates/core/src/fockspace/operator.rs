use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;

use super::{c, SpaceLayout, Subsystem, C64};
use crate::error::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-12;

/// Complex square matrix acting on a [`SpaceLayout`].
#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator {
    layout: SpaceLayout,
    matrix: DMatrix<C64>,
    hermitian: bool,
}

impl FockOperator {
    pub fn new(layout: SpaceLayout, matrix: DMatrix<C64>) -> Result<Self> {
        check_shape(&layout, &matrix)?;
        Ok(FockOperator { layout, matrix, hermitian: false })
    }

    /// Builds an operator tagged hermitian; fails if `A ≠ A†` beyond 1e-12
    /// relative Frobenius norm.
    pub fn new_hermitian(layout: SpaceLayout, matrix: DMatrix<C64>) -> Result<Self> {
        check_shape(&layout, &matrix)?;
        let err = relative_hermiticity_error(&matrix);
        if err > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("operator tagged hermitian has relative error {err:.3e}")));
        }
        Ok(FockOperator { layout, matrix, hermitian: true })
    }

    pub fn zeros(layout: &SpaceLayout) -> Self {
        let n = layout.total_dim();
        FockOperator { layout: layout.clone(), matrix: DMatrix::zeros(n, n), hermitian: true }
    }

    pub fn identity(layout: &SpaceLayout) -> Self {
        let n = layout.total_dim();
        FockOperator { layout: layout.clone(), matrix: DMatrix::identity(n, n), hermitian: true }
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

    pub fn is_tagged_hermitian(&self) -> bool {
        self.hermitian
    }

    /// `‖A − A†‖_F / ‖A‖_F` (zero for the zero operator).
    pub fn hermiticity_error(&self) -> f64 {
        relative_hermiticity_error(&self.matrix)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    /// Re-tags the operator as hermitian after checking it.
    pub fn into_hermitian(self) -> Result<Self> {
        FockOperator::new_hermitian(self.layout, self.matrix)
    }

    pub fn adjoint(&self) -> Self {
        FockOperator { layout: self.layout.clone(), matrix: self.matrix.adjoint(), hermitian: self.hermitian }
    }

    pub fn scale(&self, s: f64) -> Self {
        FockOperator { layout: self.layout.clone(), matrix: &self.matrix * c(s, 0.0), hermitian: self.hermitian }
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        FockOperator { layout: self.layout.clone(), matrix: &self.matrix * s, hermitian: self.hermitian && s.im == 0.0 }
    }

    pub fn compose(&self, rhs: &FockOperator) -> Result<Self> {
        self.same_layout(rhs)?;
        Ok(FockOperator { layout: self.layout.clone(), matrix: &self.matrix * &rhs.matrix, hermitian: false })
    }

    pub fn commutator(&self, rhs: &FockOperator) -> Result<Self> {
        self.same_layout(rhs)?;
        let m = &self.matrix * &rhs.matrix - &rhs.matrix * &self.matrix;
        Ok(FockOperator { layout: self.layout.clone(), matrix: m, hermitian: false })
    }

    pub fn try_add(&self, rhs: &FockOperator) -> Result<Self> {
        self.same_layout(rhs)?;
        Ok(FockOperator {
            layout: self.layout.clone(),
            matrix: &self.matrix + &rhs.matrix,
            hermitian: self.hermitian && rhs.hermitian,
        })
    }

    /// Tensor product `self ⊗ rhs` on the concatenated layout.
    pub fn kron(&self, rhs: &FockOperator) -> Result<Self> {
        let layout = self.layout.tensor(&rhs.layout)?;
        Ok(FockOperator {
            layout,
            matrix: self.matrix.kronecker(&rhs.matrix),
            hermitian: self.hermitian && rhs.hermitian,
        })
    }

    /// Eigenvalues of a hermitian operator in ascending order.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.matrix + self.matrix.adjoint()) * c(0.5, 0.0);
        let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// Renames the single subsystem of a one-subsystem operator.
    ///
    /// # Panics
    /// If the operator spans more than one subsystem.
    pub fn with_label(mut self, label: &str) -> FockOperator {
        assert_eq!(self.layout.len(), 1, "with_label needs a single-subsystem operator");
        let mut sub = self.layout.subsystems()[0].clone();
        sub.label = label.to_string();
        self.layout = SpaceLayout::single(sub).expect("relabelled layout is valid");
        self
    }

    pub fn max_abs_diff(&self, other: &FockOperator) -> f64 {
        (&self.matrix - &other.matrix).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn same_layout(&self, rhs: &FockOperator) -> Result<()> {
        if self.layout != rhs.layout {
            return Err(Error::LayoutMismatch(format!("{:?} vs {:?}", self.layout.dims(), rhs.layout.dims())));
        }
        Ok(())
    }
}

fn check_shape(layout: &SpaceLayout, m: &DMatrix<C64>) -> Result<()> {
    let n = layout.total_dim();
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: m.nrows().max(m.ncols()) });
    }
    Ok(())
}

pub(crate) fn relative_hermiticity_error(m: &DMatrix<C64>) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.adjoint()).norm() / norm
}

// Operator overloads panic on layout mismatch, like nalgebra does on shape
// mismatch; use the `try_*` methods when layouts are not known to agree.

impl Add for &FockOperator {
    type Output = FockOperator;
    fn add(self, rhs: &FockOperator) -> FockOperator {
        self.try_add(rhs).expect("operator layouts differ")
    }
}

impl Add for FockOperator {
    type Output = FockOperator;
    fn add(self, rhs: FockOperator) -> FockOperator {
        &self + &rhs
    }
}

impl Sub for &FockOperator {
    type Output = FockOperator;
    fn sub(self, rhs: &FockOperator) -> FockOperator {
        self.try_add(&rhs.scale(-1.0)).expect("operator layouts differ")
    }
}

impl Sub for FockOperator {
    type Output = FockOperator;
    fn sub(self, rhs: FockOperator) -> FockOperator {
        &self - &rhs
    }
}

impl Mul for &FockOperator {
    type Output = FockOperator;
    fn mul(self, rhs: &FockOperator) -> FockOperator {
        self.compose(rhs).expect("operator layouts differ")
    }
}

impl Mul<f64> for &FockOperator {
    type Output = FockOperator;
    fn mul(self, rhs: f64) -> FockOperator {
        self.scale(rhs)
    }
}

impl Mul<f64> for FockOperator {
    type Output = FockOperator;
    fn mul(self, rhs: f64) -> FockOperator {
        self.scale(rhs)
    }
}

impl Neg for &FockOperator {
    type Output = FockOperator;
    fn neg(self) -> FockOperator {
        self.scale(-1.0)
    }
}

/// Ladder operator `a` on a single mode labelled `a`: `⟨n−1|a|n⟩ = √n`.
pub fn annihilation(dim: usize) -> Result<FockOperator> {
    if dim < 2 {
        return Err(Error::InvalidDimension { dim, reason: "ladder operators need dim >= 2" });
    }
    let mut m = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = c((n as f64).sqrt(), 0.0);
    }
    FockOperator::new(SpaceLayout::single(Subsystem::bosonic("a", dim))?, m)
}

pub fn creation(dim: usize) -> Result<FockOperator> {
    Ok(annihilation(dim)?.adjoint())
}

/// Number operator `a†a`.
pub fn number(dim: usize) -> Result<FockOperator> {
    if dim < 1 {
        return Err(Error::InvalidDimension { dim, reason: "number operator needs dim >= 1" });
    }
    let m = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(dim, |n, _| c(n as f64, 0.0)));
    FockOperator::new_hermitian(SpaceLayout::single(Subsystem::bosonic("a", dim))?, m)
}

pub fn identity(dim: usize) -> Result<FockOperator> {
    Ok(FockOperator::identity(&SpaceLayout::single(Subsystem::bosonic("a", dim))?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

/// Pauli matrix on a spin-½ subsystem labelled `s`, basis `(|↑⟩, |↓⟩)` with
/// `σ_z|↑⟩ = |↑⟩`.
pub fn pauli(axis: PauliAxis) -> FockOperator {
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    let m = match axis {
        PauliAxis::X => DMatrix::from_row_slice(2, 2, &[z, one, one, z]),
        PauliAxis::Y => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        PauliAxis::Z => DMatrix::from_row_slice(2, 2, &[one, z, z, -one]),
    };
    FockOperator::new_hermitian(spin_layout(), m).expect("pauli matrices are hermitian")
}

/// `σ_+ = σ_z + iσ_y`, the raising operator of the dressed qubit defined on
/// σ_x eigenstates. It maps `|+x⟩ → 2|−x⟩` and annihilates `|−x⟩`.
pub fn sigma_plus_literal() -> FockOperator {
    &pauli(PauliAxis::Z) + &pauli(PauliAxis::Y).scale_complex(c(0.0, 1.0))
}

/// `σ_− = σ_z − iσ_y = σ_+†`.
pub fn sigma_minus_literal() -> FockOperator {
    &pauli(PauliAxis::Z) - &pauli(PauliAxis::Y).scale_complex(c(0.0, 1.0))
}

fn spin_layout() -> SpaceLayout {
    SpaceLayout::single(Subsystem::spin("s")).expect("valid spin layout")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: &FockOperator, b: &FockOperator, tol: f64) {
        let d = a.max_abs_diff(b);
        assert!(d < tol, "max diff {d}");
    }

    #[test]
    fn ladder_matrix_elements() {
        let a = annihilation(2).unwrap();
        assert_eq!(a.matrix()[(0, 1)], c(1.0, 0.0));
        assert_eq!(a.matrix().iter().filter(|z| z.norm() > 0.0).count(), 1);

        let a3 = annihilation(3).unwrap();
        assert_eq!(a3.matrix()[(0, 1)], c(1.0, 0.0));
        assert!((a3.matrix()[(1, 2)].re - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(a3.matrix().iter().filter(|z| z.norm() > 0.0).count(), 2);
    }

    #[test]
    fn number_from_ladders() {
        let a = annihilation(4).unwrap();
        let n = &a.adjoint() * &a;
        for k in 0..4 {
            assert!((n.matrix()[(k, k)].re - k as f64).abs() < 1e-14);
        }
        assert_close(&n, &number(4).unwrap(), 1e-14);
    }

    #[test]
    fn dim_below_two_rejected() {
        assert!(matches!(annihilation(1), Err(Error::InvalidDimension { .. })));
        assert!(annihilation(0).is_err());
    }

    #[test]
    fn canonical_commutator_below_top_level() {
        for dim in 2..12 {
            let a = annihilation(dim).unwrap();
            let comm = a.commutator(&a.adjoint()).unwrap();
            for n in 0..dim - 1 {
                assert!((comm.matrix()[(n, n)] - c(1.0, 0.0)).norm() < 1e-13);
            }
            // the top level carries the truncation artifact 1 - dim
            assert!((comm.matrix()[(dim - 1, dim - 1)].re - (1.0 - dim as f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn pauli_algebra() {
        let (x, y, z) = (pauli(PauliAxis::X), pauli(PauliAxis::Y), pauli(PauliAxis::Z));
        let id = FockOperator::identity(x.layout());
        assert_close(&(&x * &x), &id, 1e-15);
        let comm = x.commutator(&y).unwrap();
        assert_close(&comm, &z.scale_complex(c(0.0, 2.0)), 1e-15);
    }

    #[test]
    fn literal_sigma_pm_anticommutator() {
        // (σz + iσy)(σz − iσy) + (σz − iσy)(σz + iσy) computed term by term:
        // 2(σz² + σy²) = 4·I.
        let sp = sigma_plus_literal();
        let sm = sigma_minus_literal();
        let lhs = &(&sp * &sm) + &(&sm * &sp);
        let id = FockOperator::identity(sp.layout());
        assert_close(&lhs, &id.scale(4.0), 1e-14);
        assert_close(&sp.adjoint(), &sm, 1e-15);
    }

    #[test]
    fn literal_sigma_plus_acts_on_x_eigenstates() {
        let s = 1.0 / 2f64.sqrt();
        let plus = nalgebra::DVector::from_vec(vec![c(s, 0.0), c(s, 0.0)]);
        let minus = nalgebra::DVector::from_vec(vec![c(s, 0.0), c(-s, 0.0)]);
        let sp = sigma_plus_literal();
        let out = sp.matrix() * &plus;
        assert!((out - &minus * c(2.0, 0.0)).norm() < 1e-14);
        assert!((sp.matrix() * &minus).norm() < 1e-14);
    }

    #[test]
    fn hermitian_tag_is_checked() {
        let a = annihilation(3).unwrap();
        assert!(FockOperator::new_hermitian(a.layout().clone(), a.matrix().clone()).is_err());
        let x = &a + &a.adjoint();
        assert!(x.into_hermitian().is_ok());
    }
}
