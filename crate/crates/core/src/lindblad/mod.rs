//! Lindblad master equations with the dissipator
//! `D_x ρ = 2xρx† − x†xρ − ρx†x`, so a rate `κ` on `D_a` empties a mode's
//! occupation at `2κ`.

mod elimination;
mod integrate;
mod superop;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockspace::{c, DensityMatrix, FockOperator, InvariantStats, SpaceLayout, C64};

pub use elimination::{adiabatic_eliminate, cooling_model, thermal_dissipators, CoolingHamiltonian};
pub use integrate::{evolve, EvolveOptions, Sampling};
pub use superop::{steady_state, SparseLiouvillian};

#[derive(Clone, Debug, PartialEq)]
pub struct Dissipator {
    pub operator: FockOperator,
    pub rate: f64,
}

impl Dissipator {
    pub fn new(operator: FockOperator, rate: f64) -> Result<Self> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::param("rate", format!("dissipator rates must be finite and nonnegative, got {rate}")));
        }
        Ok(Dissipator { operator, rate })
    }
}

/// `ρ̇ = −i[H, ρ] + Σ_k rate_k D_{x_k} ρ` with `H` in rad/s.
#[derive(Clone, Debug)]
pub struct LindbladModel {
    hamiltonian: FockOperator,
    dissipators: Vec<Dissipator>,
    /// `H − i Σ rate x†x`
    h_eff: DMatrix<C64>,
    /// `√(2 rate) x` for every dissipator with nonzero rate
    jumps: Vec<DMatrix<C64>>,
    sparse_h_eff: RowSparse,
    sparse_jumps: Vec<RowSparse>,
}

/// Row-compressed copy of an operator for products with dense states.
#[derive(Clone, Debug)]
struct RowSparse {
    rows: Vec<Vec<(usize, C64)>>,
}

impl RowSparse {
    fn new(m: &DMatrix<C64>) -> Self {
        let rows = (0..m.nrows())
            .map(|i| (0..m.ncols()).filter(|&k| m[(i, k)] != c(0.0, 0.0)).map(|k| (k, m[(i, k)])).collect())
            .collect();
        RowSparse { rows }
    }

    /// `out += s · S · rho`
    fn add_left(&self, rho: &DMatrix<C64>, s: C64, out: &mut DMatrix<C64>) {
        for j in 0..rho.ncols() {
            let col = rho.column(j);
            let mut dst = out.column_mut(j);
            for (i, row) in self.rows.iter().enumerate() {
                let mut acc = c(0.0, 0.0);
                for &(k, v) in row {
                    acc += v * col[k];
                }
                dst[i] += s * acc;
            }
        }
    }

    /// `out += s · rho · S†`
    fn add_right_adjoint(&self, rho: &DMatrix<C64>, s: C64, out: &mut DMatrix<C64>) {
        for (j, row) in self.rows.iter().enumerate() {
            for &(k, v) in row {
                out.column_mut(j).axpy(s * v.conj(), &rho.column(k), c(1.0, 0.0));
            }
        }
    }
}

impl LindbladModel {
    pub fn new(hamiltonian: FockOperator, dissipators: Vec<Dissipator>) -> Result<Self> {
        if !hamiltonian.is_hermitian(1e-12) {
            return Err(Error::param("hamiltonian", "must be hermitian"));
        }
        for d in &dissipators {
            if d.operator.layout() != hamiltonian.layout() {
                return Err(Error::LayoutMismatch("dissipator and Hamiltonian layouts differ".into()));
            }
        }
        let mut h_eff = hamiltonian.matrix().clone();
        let mut jumps = Vec::new();
        for d in dissipators.iter().filter(|d| d.rate > 0.0) {
            let x = d.operator.matrix();
            h_eff -= (x.adjoint() * x) * c(0.0, d.rate);
            jumps.push(x * c((2.0 * d.rate).sqrt(), 0.0));
        }
        let sparse_h_eff = RowSparse::new(&h_eff);
        let sparse_jumps = jumps.iter().map(RowSparse::new).collect();
        Ok(LindbladModel { hamiltonian, dissipators, h_eff, jumps, sparse_h_eff, sparse_jumps })
    }

    pub fn closed(hamiltonian: FockOperator) -> Result<Self> {
        LindbladModel::new(hamiltonian, Vec::new())
    }

    pub fn hamiltonian(&self) -> &FockOperator {
        &self.hamiltonian
    }

    pub fn dissipators(&self) -> &[Dissipator] {
        &self.dissipators
    }

    pub fn layout(&self) -> &SpaceLayout {
        self.hamiltonian.layout()
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    /// Short description for reports.
    pub fn summary(&self) -> String {
        let dims: Vec<String> = self.layout().subsystems().iter().map(|s| format!("{}:{}", s.label, s.dim)).collect();
        let rates: Vec<String> = self.dissipators.iter().map(|d| format!("{:.3e}", d.rate)).collect();
        format!("dims [{}], {} dissipators [{}]", dims.join(", "), self.dissipators.len(), rates.join(", "))
    }

    pub(crate) fn h_eff(&self) -> &DMatrix<C64> {
        &self.h_eff
    }

    pub(crate) fn jumps(&self) -> &[DMatrix<C64>] {
        &self.jumps
    }

    pub(crate) fn rhs_matrix(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let n = rho.nrows();
        let mut out = DMatrix::zeros(n, n);
        // −i H_eff ρ + i ρ H_eff†, written out in full so non-hermitian drift
        // is not masked
        self.sparse_h_eff.add_left(rho, c(0.0, -1.0), &mut out);
        self.sparse_h_eff.add_right_adjoint(rho, c(0.0, 1.0), &mut out);
        let mut tmp = DMatrix::zeros(n, n);
        for l in &self.sparse_jumps {
            tmp.fill(c(0.0, 0.0));
            l.add_left(rho, c(1.0, 0.0), &mut tmp);
            l.add_right_adjoint(&tmp, c(1.0, 0.0), &mut out);
        }
        out
    }
}

/// `−i[H, ρ] + Σ rate (2xρx† − x†xρ − ρx†x)`.
pub fn lindblad_rhs(model: &LindbladModel, rho: &DensityMatrix) -> Result<DMatrix<C64>> {
    if rho.layout() != model.layout() {
        return Err(Error::LayoutMismatch("state and model layouts differ".into()));
    }
    Ok(model.rhs_matrix(rho.matrix()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    #[serde(skip)]
    pub states: Vec<DensityMatrix>,
    pub observables: Vec<(String, Vec<f64>)>,
    pub invariants: Vec<InvariantStats>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl EvolutionResult {
    pub fn final_state(&self) -> &DensityMatrix {
        self.states.last().expect("an evolution always records its initial state")
    }

    pub fn observable(&self, name: &str) -> Option<&[f64]> {
        self.observables.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    /// Worst deviation over all samples, as `(trace, hermiticity, −min eigenvalue)`.
    pub fn worst_invariants(&self) -> InvariantStats {
        self.invariants.iter().fold(
            InvariantStats { trace_error: 0.0, hermiticity_error: 0.0, min_eigenvalue: f64::INFINITY },
            |acc, s| InvariantStats {
                trace_error: acc.trace_error.max(s.trace_error),
                hermiticity_error: acc.hermiticity_error.max(s.hermiticity_error),
                min_eigenvalue: acc.min_eigenvalue.min(s.min_eigenvalue),
            },
        )
    }

    /// Trajectory invariants: trace within 1e-8, hermiticity within 1e-9,
    /// eigenvalues above −1e-7.
    pub fn invariants_hold(&self) -> bool {
        self.invariants.iter().all(|s| s.within(1e-8, 1e-9, 1e-7))
    }

    /// `time,<observable>...` with one row per sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time");
        for (name, _) in &self.observables {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (k, t) in self.times.iter().enumerate() {
            out.push_str(&format!("{t:.12e}"));
            for (_, series) in &self.observables {
                out.push_str(&format!(",{:.12e}", series[k]));
            }
            out.push('\n');
        }
        out
    }

    /// JSON export; full density matrices only when `include_states` is set.
    pub fn to_json(&self, include_states: bool) -> Result<serde_json::Value> {
        let mut v = serde_json::to_value(self)?;
        if include_states {
            v["states"] = serde_json::to_value(&self.states)?;
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{annihilation, number, StateVector};

    fn mode(d: usize) -> (FockOperator, FockOperator) {
        (annihilation(d).unwrap(), number(d).unwrap())
    }

    #[test]
    fn empty_model_has_zero_rhs() {
        let (a, _) = mode(3);
        let m = LindbladModel::closed(FockOperator::zeros(a.layout())).unwrap();
        let rho = StateVector::fock(a.layout(), &[1]).unwrap().to_density();
        assert_eq!(lindblad_rhs(&m, &rho).unwrap().norm(), 0.0);
    }

    #[test]
    fn loss_rate_convention() {
        let (a, n) = mode(4);
        let kappa = 0.7;
        let m = LindbladModel::new(FockOperator::zeros(a.layout()), vec![Dissipator::new(a.clone(), kappa).unwrap()])
            .unwrap();
        let rho = StateVector::fock(a.layout(), &[1]).unwrap().to_density();
        let d = lindblad_rhs(&m, &rho).unwrap();
        let dn: C64 = (n.matrix() * &d).trace();
        assert!((dn.re + 2.0 * kappa).abs() < 1e-14);
        assert!(d.trace().norm() < 1e-15);
    }

    #[test]
    fn thermal_heating_from_vacuum() {
        let (a, n) = mode(4);
        let (nb, gamma) = (3.0, 0.2);
        let m = LindbladModel::new(
            FockOperator::zeros(a.layout()),
            vec![
                Dissipator::new(a.clone(), (1.0 + nb) * gamma).unwrap(),
                Dissipator::new(a.adjoint(), nb * gamma).unwrap(),
            ],
        )
        .unwrap();
        let rho = StateVector::fock(a.layout(), &[0]).unwrap().to_density();
        let dn = (n.matrix() * lindblad_rhs(&m, &rho).unwrap()).trace();
        assert!((dn.re - 2.0 * nb * gamma).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (a, _) = mode(3);
        assert!(Dissipator::new(a.clone(), -1.0).is_err());
        assert!(LindbladModel::closed(a.clone()).is_err());
        let other = annihilation(4).unwrap();
        assert!(
            LindbladModel::new(FockOperator::zeros(a.layout()), vec![Dissipator::new(other, 1.0).unwrap()]).is_err()
        );
    }
}
