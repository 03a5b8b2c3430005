use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::MeasurementSource;
use crate::error::{Error, Result};
use crate::fockspace::{c, conjugate_local, qubit_leakage, DensityMatrix, SpaceLayout, StateVector, Subsystem, C64};
use crate::model::{build_detuned, build_dispersive};
use crate::propagate::unitary;

/// `(|0⟩|1⟩ + |1⟩|0⟩)/√2` on two qubit-truncated LC modes `a1`, `a2`.
pub fn prepare_entangled_lc() -> StateVector {
    prepare_entangled_lc_in("a1", "a2", 2).expect("valid resource layout")
}

/// The same resource state on modes of dimension `dim`.
pub fn prepare_entangled_lc_in(first: &str, second: &str, dim: usize) -> Result<StateVector> {
    let layout = SpaceLayout::modes(&[(first, dim), (second, dim)])?;
    let mut amps = DVector::zeros(dim * dim);
    amps[layout.flat_index(&[0, 1])] = c(FRAC_1_SQRT_2, 0.0);
    amps[layout.flat_index(&[1, 0])] = c(FRAC_1_SQRT_2, 0.0);
    StateVector::new(layout, amps)
}

/// `diag(e^{iθ n})` on a mode of dimension `dim`.
pub fn phase_rotation(dim: usize, theta: f64) -> DMatrix<C64> {
    DMatrix::from_diagonal(&DVector::from_fn(dim, |n, _| C64::from_polar(1.0, theta * n as f64)))
}

/// Hadamard on `{|0⟩, |1⟩}`, identity on higher levels.
pub fn hadamard_matrix(dim: usize) -> DMatrix<C64> {
    let mut h = DMatrix::identity(dim, dim);
    let r = c(FRAC_1_SQRT_2, 0.0);
    h[(0, 0)] = r;
    h[(0, 1)] = r;
    h[(1, 0)] = r;
    h[(1, 1)] = -r;
    h
}

/// Ideal Hadamard on mode or spin `label`; fails when more than `leak_tol`
/// of the population lies outside the qubit subspace.
pub fn hadamard(rho: &DensityMatrix, label: &str, leak_tol: f64) -> Result<DensityMatrix> {
    let leak = qubit_leakage(rho, label)?;
    if leak > leak_tol {
        return Err(Error::Leakage { label: label.to_string(), weight: leak });
    }
    let dim = rho.layout().get(label)?.dim;
    conjugate_local(rho, &[label], &hadamard_matrix(dim))
}

/// Ideal CZ extended as `exp(iπ n₁n₂)`.
pub fn apply_cz(rho: &DensityMatrix, pair: (&str, &str)) -> Result<DensityMatrix> {
    let (d1, d2) = (rho.layout().get(pair.0)?.dim, rho.layout().get(pair.1)?.dim);
    let u = DMatrix::from_diagonal(&DVector::from_fn(d1 * d2, |k, _| {
        if (k / d2) * (k % d2) % 2 == 1 {
            c(-1.0, 0.0)
        } else {
            c(1.0, 0.0)
        }
    }));
    conjugate_local(rho, &[pair.0, pair.1], &u)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CphaseModel {
    /// Number–number coupling `(g²/δ) n₁ n_m`.
    Dispersive,
    /// Exact detuned exchange `δ a₁†a₁ + g(a₁†a_m + h.c.)`.
    Detuned,
}

#[derive(Clone, Debug)]
pub struct CphaseSegment {
    pub model: CphaseModel,
    /// `πδ/g²`
    pub duration: f64,
    pub pair: (String, String),
    pub layout: SpaceLayout,
    pub unitary: DMatrix<C64>,
    /// Phases of `⟨jk|U|jk⟩` for `|00⟩, |01⟩, |10⟩, |11⟩`.
    pub diagonal_phases: [f64; 4],
    /// `φ₁₁ − φ₁₀ − φ₀₁ + φ₀₀`, wrapped to `(−π, π]`.
    pub conditional_phase: f64,
    /// `1 − F_avg` against CZ with the best local phases.
    pub gate_infidelity: f64,
    pub local_phases: (f64, f64),
    /// Largest population lost from the qubit subspace over basis inputs.
    pub leakage: f64,
}

impl CphaseSegment {
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        conjugate_local(rho, &[self.pair.0.as_str(), self.pair.1.as_str()], &self.unitary)
    }
}

fn wrap(phi: f64) -> f64 {
    let mut p = phi % (2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    } else if p <= -PI {
        p += 2.0 * PI;
    }
    p
}

/// Average gate fidelity of the 4×4 block `m` to `(R_z(φ₁) ⊗ R_z(φ₂)) CZ`,
/// maximized over the local phases. Returns `(fidelity, (φ₁, φ₂))`.
pub fn gate_fidelity_to_cz(m: &DMatrix<C64>) -> (f64, (f64, f64)) {
    let d = m.diagonal();
    // for fixed φ₁ the best φ₂ aligns the two partial sums
    let overlap = |p1: f64| {
        let e = C64::from_polar(1.0, -p1);
        let a = d[0] + e * d[2];
        let b = d[1] - e * d[3];
        (a.norm() + b.norm(), a, b)
    };
    let (p1, _) = super::maximize(|x| Ok(overlap(x).0), 0.0, 2.0 * PI, 3601).expect("infallible objective");
    let (tr, a, b) = overlap(p1);
    let p2 = if a.norm() > 0.0 { wrap((b / a).arg()) } else { 0.0 };
    let norm_sq: f64 = m.iter().map(|z| z.norm_sqr()).sum();
    ((norm_sq + tr * tr) / 20.0, (wrap(p1), p2))
}

/// Conditional phase gate on `(lc, mech)` from the dispersive or the exact
/// detuned Hamiltonian, run for `t = πδ/g²`.
pub fn cphase(pair: (&str, &str), g: f64, delta_disp: f64, model: CphaseModel, dim: usize) -> Result<CphaseSegment> {
    if delta_disp == 0.0 || !delta_disp.is_finite() {
        return Err(Error::param("delta_disp", "conditional phase gate needs δ ≠ 0"));
    }
    if !(g > 0.0) {
        return Err(Error::param("g", "conditional phase gate needs g > 0"));
    }
    let min_dim = if model == CphaseModel::Detuned { 3 } else { 2 };
    if dim < min_dim {
        return Err(Error::InvalidDimension {
            dim,
            reason: "conditional phase gate needs dim >= 2 (3 for the detuned model)",
        });
    }
    if model == CphaseModel::Detuned && (delta_disp / g).abs() < 10.0 {
        return Err(Error::Precondition(format!(
            "δ/g = {:.3} is below 10; the dispersive picture does not hold",
            delta_disp / g
        )));
    }
    let layout = SpaceLayout::new(vec![Subsystem::bosonic(pair.0, dim), Subsystem::bosonic(pair.1, dim)])?;
    let h = match model {
        CphaseModel::Dispersive => build_dispersive(g, delta_disp, &layout, pair.0, pair.1)?,
        CphaseModel::Detuned => build_detuned(delta_disp, g, &layout, pair.0, pair.1)?,
    };
    let duration = PI * delta_disp.abs() / (g * g);
    let u = unitary(&h, duration);
    let idx: Vec<usize> = [[0, 0], [0, 1], [1, 0], [1, 1]].iter().map(|jk| layout.flat_index(jk)).collect();
    let block = DMatrix::from_fn(4, 4, |i, j| u[(idx[i], idx[j])]);
    let phases: [f64; 4] = std::array::from_fn(|k| block[(k, k)].arg());
    let conditional_phase = wrap(phases[3] - phases[2] - phases[1] + phases[0]);
    let leakage = (0..4).map(|j| 1.0 - block.column(j).norm_squared()).fold(0.0, f64::max);
    let (fid, local_phases) = gate_fidelity_to_cz(&block);
    Ok(CphaseSegment {
        model,
        duration,
        pair: (pair.0.to_string(), pair.1.to_string()),
        layout,
        unitary: u,
        diagonal_phases: phases,
        conditional_phase,
        gate_infidelity: (1.0 - fid).max(0.0),
        local_phases,
        leakage: leakage.max(0.0),
    })
}

#[derive(Clone, Debug)]
pub struct MeasurementOutcome {
    /// `(first << 1) | second`
    pub bits: u8,
    /// Born weights of the four outcomes (sum `1 − leaked`).
    pub probabilities: [f64; 4],
    /// Population outside `{0, 1}²`, never reported as an outcome.
    pub leaked: f64,
    pub state: DensityMatrix,
}

/// Projective readout of two modes in `{|0⟩, |1⟩}`; the collapsed state is
/// renormalized.
pub fn measure_pair(
    rho: &DensityMatrix,
    pair: (&str, &str),
    source: &mut MeasurementSource,
) -> Result<MeasurementOutcome> {
    let layout = rho.layout();
    let (p1, p2) = (layout.position(pair.0)?, layout.position(pair.1)?);
    let n = layout.total_dim();
    let outcome_of: Vec<Option<u8>> = (0..n)
        .map(|i| {
            let mi = layout.multi_index(i);
            (mi[p1] < 2 && mi[p2] < 2).then(|| ((mi[p1] as u8) << 1) | mi[p2] as u8)
        })
        .collect();
    let mut probs = [0.0; 4];
    for (i, o) in outcome_of.iter().enumerate() {
        if let Some(b) = o {
            probs[*b as usize] += rho.matrix()[(i, i)].re.max(0.0);
        }
    }
    let leaked = (rho.trace().re - probs.iter().sum::<f64>()).max(0.0);
    let bits = source.choose(&probs)?;
    let p = probs[bits as usize];
    let m = DMatrix::from_fn(n, n, |i, j| {
        if outcome_of[i] == Some(bits) && outcome_of[j] == Some(bits) {
            rho.matrix()[(i, j)] / p
        } else {
            c(0.0, 0.0)
        }
    });
    Ok(MeasurementOutcome {
        bits,
        probabilities: probs,
        leaked,
        state: DensityMatrix::from_matrix_unchecked(layout.clone(), m)?,
    })
}

/// Bell measurement compiled as ideal CZ, Hadamards on both modes and
/// computational-basis readout.
pub fn bell_measure(
    rho: &DensityMatrix,
    pair: (&str, &str),
    source: &mut MeasurementSource,
    leak_tol: f64,
) -> Result<MeasurementOutcome> {
    let r = apply_cz(rho, pair)?;
    let r = hadamard(&r, pair.0, leak_tol)?;
    let r = hadamard(&r, pair.1, leak_tol)?;
    measure_pair(&r, pair, source)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::partial_trace;

    #[test]
    fn resource_state_properties() {
        let psi = prepare_entangled_lc();
        let rho = psi.to_density();
        let red = partial_trace(&rho, &["a1"]).unwrap();
        assert!((red.matrix() - DMatrix::<C64>::identity(2, 2) * c(0.5, 0.0)).norm() < 1e-15);
        assert!((red.entropy() - 2f64.ln()).abs() < 1e-12);
        let singlet = StateVector::new(
            psi.layout().clone(),
            DVector::from_vec(vec![c(0.0, 0.0), c(FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0), c(0.0, 0.0)]),
        )
        .unwrap();
        assert!(psi.inner(&singlet).unwrap().norm() < 1e-15);
    }

    #[test]
    fn hadamard_properties() {
        let h = hadamard_matrix(4);
        assert!((&h * &h - DMatrix::<C64>::identity(4, 4)).norm() < 1e-15);
        let l = SpaceLayout::modes(&[("a", 3)]).unwrap();
        let vac = StateVector::fock(&l, &[0]).unwrap().to_density();
        let plus = hadamard(&vac, "a", 1e-9).unwrap();
        assert!((plus.matrix()[(0, 1)].re - 0.5).abs() < 1e-15 && (plus.matrix()[(1, 1)].re - 0.5).abs() < 1e-15);
        let two = StateVector::fock(&l, &[2]).unwrap().to_density();
        assert!(matches!(hadamard(&two, "a", 1e-9), Err(Error::Leakage { .. })));
    }

    #[test]
    fn dispersive_gate_is_exact_cz() {
        let seg = cphase(("a1", "m1"), 0.05, 1.0, CphaseModel::Dispersive, 3).unwrap();
        let u11 = seg.unitary[(seg.layout.flat_index(&[1, 1]), seg.layout.flat_index(&[1, 1]))];
        assert!((u11 - c(-1.0, 0.0)).norm() < 1e-12);
        for jk in [[0, 0], [0, 1], [1, 0]] {
            let k = seg.layout.flat_index(&jk);
            assert!((seg.unitary[(k, k)] - c(1.0, 0.0)).norm() < 1e-12);
        }
        assert!(seg.gate_infidelity < 1e-12);
        assert!((seg.conditional_phase.abs() - PI).abs() < 1e-9);
    }

    #[test]
    fn detuned_exchange_gives_local_shifts_only() {
        // second order: |10⟩ and |01⟩ pick up ∓g²/δ, |11⟩ none, so the
        // conditional phase vanishes and the best CZ fidelity is 3/5
        let (g, delta) = (0.05, 2.0);
        let seg = cphase(("a1", "m1"), g, delta, CphaseModel::Detuned, 4).unwrap();
        assert!(seg.conditional_phase.abs() < 0.1, "{}", seg.conditional_phase);
        assert!((seg.gate_infidelity - 0.4).abs() < 0.05, "{}", seg.gate_infidelity);
        assert!(cphase(("a1", "m1"), g, 0.2, CphaseModel::Detuned, 4).is_err());
        assert!(cphase(("a1", "m1"), g, 0.0, CphaseModel::Dispersive, 4).is_err());
    }

    #[test]
    fn local_phase_optimum_is_found() {
        let (p1, p2) = (0.4, -1.1);
        let d = [c(1.0, 0.0), C64::from_polar(1.0, p2), C64::from_polar(1.0, p1), -C64::from_polar(1.0, p1 + p2)];
        let m = DMatrix::from_diagonal(&DVector::from_vec(d.to_vec()));
        let (f, (q1, q2)) = gate_fidelity_to_cz(&m);
        assert!((f - 1.0).abs() < 1e-12);
        assert!((wrap(q1 - p1)).abs() < 1e-6 && (wrap(q2 - p2)).abs() < 1e-6);
    }

    #[test]
    fn bell_basis_maps_one_to_one() {
        let l = SpaceLayout::modes(&[("m1", 2), ("a1", 2)]).unwrap();
        let h = c(0.5, 0.0);
        // CZ|++⟩ and its Pauli partners on the second qubit
        let states = [[h, h, h, -h], [h, -h, h, h], [h, h, -h, h], [h, -h, -h, -h]];
        let mut seen = Vec::new();
        for amps in states {
            let psi = StateVector::new(l.clone(), DVector::from_vec(amps.to_vec())).unwrap();
            let out = bell_measure(&psi.to_density(), ("m1", "a1"), &mut MeasurementSource::seeded(1), 1e-9).unwrap();
            assert!((out.probabilities[out.bits as usize] - 1.0).abs() < 1e-12);
            assert!((out.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            seen.push(out.bits);
        }
        assert_eq!(seen[0], 0b00);
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 4);
    }

    #[test]
    fn replayed_measurement_collapses() {
        let l = SpaceLayout::modes(&[("x", 2), ("y", 2)]).unwrap();
        let rho = DensityMatrix::maximally_mixed(&l);
        for bits in 0..4u8 {
            let out = measure_pair(&rho, ("x", "y"), &mut MeasurementSource::Replay(bits)).unwrap();
            assert_eq!(out.bits, bits);
            let k = l.flat_index(&[(bits >> 1) as usize, (bits & 1) as usize]);
            assert!((out.state.matrix()[(k, k)].re - 1.0).abs() < 1e-15);
        }
    }
}
