//! Reference propagators: eigendecomposition for closed systems and a
//! row-stacked sparse Liouvillian with a scaled Taylor exponential for open
//! ones. Nothing here touches the engine's integrator or superoperator.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::fockspace::{DensityMatrix, FockOperator, StateVector, C64};
use crate::lindblad::LindbladModel;

pub const UNITARY_DIM_CAP: usize = 4096;
pub const LIOUVILLE_DIM_CAP: usize = 150;

fn cz(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `exp(−iHt)` from the eigendecomposition of `H`.
pub fn exact_propagator(h: &FockOperator, t: f64) -> Result<DMatrix<C64>> {
    let n = h.dim();
    if n > UNITARY_DIM_CAP {
        return Err(Error::DimensionCap { dim: n, cap: UNITARY_DIM_CAP });
    }
    let herm = (h.matrix() + h.matrix().adjoint()) * cz(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let v = eig.eigenvectors;
    let mut vd = v.clone();
    for (j, &e) in eig.eigenvalues.iter().enumerate() {
        let p = C64::from_polar(1.0, -e * t);
        for i in 0..n {
            vd[(i, j)] *= p;
        }
    }
    let u = vd * v.adjoint();
    let err = (u.adjoint() * &u - DMatrix::<C64>::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if err > 1e-11 {
        return Err(Error::Verification(format!("oracle propagator unitarity error {err:.3e}")));
    }
    Ok(u)
}

pub fn exact_unitary_evolve(h: &FockOperator, psi: &StateVector, t: f64) -> Result<StateVector> {
    if psi.layout() != h.layout() {
        return Err(Error::LayoutMismatch("state and Hamiltonian layouts differ".into()));
    }
    let u = exact_propagator(h, t)?;
    StateVector::new(psi.layout().clone(), u * psi.amplitudes())
}

/// Row-stacked Liouvillian, `vec(ρ)[i·n + j] = ρ_ij`, in compressed rows.
struct RowLiouvillian {
    n: usize,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl RowLiouvillian {
    fn build(model: &LindbladModel) -> Self {
        let n = model.dim();
        let h = model.hamiltonian().matrix();
        // generator pieces: L ρ = −i(Kρ − ρK†) + Σ 2r xρx†, K = H − i Σ r x†x
        let mut k = h.clone();
        let mut jumps: Vec<(f64, &DMatrix<C64>)> = Vec::new();
        for d in model.dissipators() {
            if d.rate > 0.0 {
                let x = d.operator.matrix();
                k -= (x.adjoint() * x) * cz(0.0, d.rate);
                jumps.push((d.rate, x));
            }
        }
        let nz = |m: &DMatrix<C64>| {
            let mut v = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    if m[(i, j)].norm() != 0.0 {
                        v.push((i, j, m[(i, j)]));
                    }
                }
            }
            v
        };
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); n * n];
        // (Kρ)_ij = Σ_l K_il ρ_lj
        for (i, l, z) in nz(&k) {
            for j in 0..n {
                rows[i * n + j].push((l * n + j, cz(0.0, -1.0) * z));
            }
        }
        // (ρK†)_ij = Σ_l ρ_il conj(K_jl)
        for (j, l, z) in nz(&k) {
            for i in 0..n {
                rows[i * n + j].push((i * n + l, cz(0.0, 1.0) * z.conj()));
            }
        }
        // (xρx†)_ij = Σ_{kl} x_ik ρ_kl conj(x_jl)
        for (rate, x) in jumps {
            let e = nz(x);
            for &(i, kk, zi) in &e {
                for &(j, l, zj) in &e {
                    rows[i * n + j].push((kk * n + l, zi * zj.conj() * (2.0 * rate)));
                }
            }
        }
        let mut row_start = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for mut r in rows {
            r.sort_by_key(|&(col, _)| col);
            let mut merged: Vec<(usize, C64)> = Vec::with_capacity(r.len());
            for (col, z) in r {
                match merged.last_mut() {
                    Some((last, acc)) if *last == col => *acc += z,
                    _ => merged.push((col, z)),
                }
            }
            for (col, z) in merged {
                cols.push(col);
                vals.push(z);
            }
            row_start.push(cols.len());
        }
        RowLiouvillian { n, row_start, cols, vals }
    }

    fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        DVector::from_fn(self.n * self.n, |r, _| {
            (self.row_start[r]..self.row_start[r + 1]).map(|k| self.vals[k] * v[self.cols[k]]).sum()
        })
    }

    /// Induced 1-norm (largest column sum).
    fn one_norm(&self) -> f64 {
        let mut colsum = vec![0.0; self.n * self.n];
        for (k, &col) in self.cols.iter().enumerate() {
            colsum[col] += self.vals[k].norm();
        }
        colsum.into_iter().fold(0.0, f64::max)
    }
}

/// `exp(𝓛t) vec(ρ₀)` with `⌈‖𝓛‖₁ t / 0.5⌉` substeps, each a Taylor series
/// summed to machine precision.
pub fn exact_liouville_evolve(model: &LindbladModel, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    let n = model.dim();
    if n > LIOUVILLE_DIM_CAP {
        return Err(Error::DimensionCap { dim: n, cap: LIOUVILLE_DIM_CAP });
    }
    if rho0.layout() != model.layout() {
        return Err(Error::LayoutMismatch("state and model layouts differ".into()));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::param("t", "must be finite and nonnegative"));
    }
    let lv = RowLiouvillian::build(model);
    let steps = ((lv.one_norm() * t / 0.5).ceil() as usize).max(1);
    let h = t / steps as f64;
    let mut v = DVector::from_fn(n * n, |r, _| rho0.matrix()[(r / n, r % n)]);
    for _ in 0..steps {
        let mut term = v.clone();
        let mut sum = v.clone();
        for k in 1..200 {
            term = lv.apply(&term) * cz(h / k as f64, 0.0);
            sum += &term;
            if term.norm() <= 1e-18 * sum.norm() {
                break;
            }
        }
        v = sum;
    }
    let m = DMatrix::from_fn(n, n, |i, j| v[i * n + j]);
    DensityMatrix::from_matrix_unchecked(model.layout().clone(), m)
}
