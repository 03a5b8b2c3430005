use log::warn;
use serde::{Deserialize, Serialize};

use super::{Dissipator, LindbladModel};
use crate::error::{Error, Result};
use crate::fockspace::{FockOperator, SpaceLayout, Subsystem};
use crate::model::{build_beamsplitter, build_linearized, lowering, DetuningConvention, SystemParams};

/// Coherent part of the two-mode cooling model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoolingHamiltonian {
    /// `g(a†a_m + a a_m†)` in the frame rotating at `ω_m` on both modes.
    Beamsplitter,
    /// Full linearized Hamiltonian in the lab frame of the mechanics.
    Linearized(DetuningConvention),
}

/// `(1 + n̄)γ D[a] + n̄γ D[a†]` on mode `label`; zero-rate terms are dropped.
pub fn thermal_dissipators(layout: &SpaceLayout, label: &str, gamma: f64, n_bar: f64) -> Result<Vec<Dissipator>> {
    let b = lowering(layout, label)?;
    let mut out = Vec::new();
    if gamma * (1.0 + n_bar) > 0.0 {
        out.push(Dissipator::new(b.clone(), (1.0 + n_bar) * gamma)?);
    }
    if gamma * n_bar > 0.0 {
        out.push(Dissipator::new(b.adjoint(), n_bar * gamma)?);
    }
    Ok(out)
}

/// LC loss `κ D[a]` plus the thermal mechanical bath at `(γ_m, n̄)`.
pub fn cooling_model(
    p: &SystemParams,
    layout: &SpaceLayout,
    lc: &str,
    mech: &str,
    kind: CoolingHamiltonian,
) -> Result<LindbladModel> {
    let h = match kind {
        CoolingHamiltonian::Beamsplitter => build_beamsplitter(p.g, layout, lc, mech)?,
        CoolingHamiltonian::Linearized(conv) => build_linearized(p, layout, lc, mech, conv)?,
    };
    let mut diss = Vec::new();
    if p.kappa > 0.0 {
        diss.push(Dissipator::new(lowering(layout, lc)?, p.kappa)?);
    }
    diss.extend(thermal_dissipators(layout, mech, p.gamma_m, p.n_bar)?);
    LindbladModel::new(h, diss)
}

/// Eliminates the LC mode of a two-mode cooling model.
///
/// Requires `κ/g ≥ 5` and warns below 10. The result acts on `mech` alone in
/// the frame rotating at `ω_m` (no Hamiltonian) with generator
/// `(1 + n̄′)γ′ D[a_m] + n̄′γ′ D[a_m†]`.
pub fn adiabatic_eliminate(
    two_mode: &LindbladModel,
    p: &SystemParams,
    mech: &str,
) -> Result<(LindbladModel, SystemParams)> {
    let sub = two_mode.layout().get(mech)?.clone();
    if two_mode.layout().len() < 2 {
        return Err(Error::param("model", "adiabatic elimination needs a model with at least two subsystems"));
    }
    if p.g > 0.0 {
        let ratio = p.kappa / p.g;
        if ratio < 5.0 {
            return Err(Error::Precondition(format!("κ/g = {ratio:.3} is below 5; the LC mode is not fast")));
        }
        if ratio < 10.0 {
            warn!("κ/g = {ratio:.3} is below 10; adiabatic elimination is marginal");
        }
    }
    let mut updated = p.clone();
    if p.kappa > 0.0 {
        updated.update_elimination()?;
    } else {
        updated.kappa_prime = 0.0;
        updated.gamma_prime = p.gamma_m;
        updated.n_bar_prime = p.n_bar;
    }
    let layout = SpaceLayout::single(Subsystem::bosonic(&sub.label, sub.dim))?;
    let diss = thermal_dissipators(&layout, mech, updated.gamma_prime, updated.n_bar_prime)?;
    let model = LindbladModel::new(FockOperator::zeros(&layout), diss)?;
    Ok((model, updated))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::steady_state;
    use crate::model::constants::TWO_PI;
    use crate::model::occupation;

    #[test]
    fn zero_coupling_leaves_bath_untouched() {
        let p = SystemParams::desk(1.0, 0.0, 0.5, 0.01, 2.0).unwrap();
        let l = SpaceLayout::modes(&[("a", 3), ("m", 20)]).unwrap();
        let full = cooling_model(&p, &l, "a", "m", CoolingHamiltonian::Beamsplitter).unwrap();
        let (m, q) = adiabatic_eliminate(&full, &p, "m").unwrap();
        assert_eq!(q.kappa_prime, 0.0);
        assert_eq!(q.n_bar_prime, 2.0);
        assert_eq!(m.dissipators().len(), 2);
        assert!((m.dissipators()[0].rate - 0.03).abs() < 1e-15);
    }

    #[test]
    fn engineered_damping_arithmetic() {
        let p = SystemParams::desk(TWO_PI * 10e6, TWO_PI * 0.1e6, TWO_PI * 1e6, TWO_PI * 32.0, 20.0).unwrap();
        let l = SpaceLayout::modes(&[("a", 2), ("m", 2)]).unwrap();
        let full = cooling_model(&p, &l, "a", "m", CoolingHamiltonian::Beamsplitter).unwrap();
        let (_, q) = adiabatic_eliminate(&full, &p, "m").unwrap();
        assert!((q.kappa_prime - TWO_PI * 10e3).abs() < 1e-6);
    }

    #[test]
    fn ratio_threshold() {
        let p = SystemParams::desk(1.0, 0.1, 0.4, 0.001, 1.0).unwrap();
        let l = SpaceLayout::modes(&[("a", 2), ("m", 4)]).unwrap();
        let full = cooling_model(&p, &l, "a", "m", CoolingHamiltonian::Beamsplitter).unwrap();
        assert!(matches!(adiabatic_eliminate(&full, &p, "m"), Err(Error::Precondition(_))));
        let p = SystemParams::desk(1.0, 0.1, 0.7, 0.001, 1.0).unwrap();
        assert!(adiabatic_eliminate(&full, &p, "m").is_ok());
    }

    #[test]
    fn paper_regime_reaches_quantum_occupation() {
        let p = SystemParams::reference();
        assert!(p.kappa_prime > p.thermal_decoherence());
        let l = SpaceLayout::modes(&[("a", 2), ("m", 40)]).unwrap();
        let full = cooling_model(&p, &l, "a", "m", CoolingHamiltonian::Beamsplitter).unwrap();
        let (m, q) = adiabatic_eliminate(&full, &p, "m").unwrap();
        let ss = steady_state(&m).unwrap();
        let n = ss.expectation(&occupation(m.layout(), "m").unwrap()).unwrap();
        assert!(n < 1.0);
        assert!((n - q.n_bar_prime).abs() < 1e-6 * q.n_bar_prime.max(1e-3));
    }
}
