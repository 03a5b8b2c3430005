use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::constants::{HBAR, MU_B};
use super::field::FieldMap;
use super::params::{SpinParams, SystemParams};
use crate::error::{Error, Result};
use crate::fockspace::{annihilation, c, embed, number, pauli, sigma_minus_literal, sigma_plus_literal};
use crate::fockspace::{FockOperator, PauliAxis, SpaceLayout, SubsystemKind, C64};

/// Matrix-element scale of the literal `σ± = σ_z ± iσ_y`: `σ₊|g⟩ = 2|e⟩`.
pub const SIGMA_PM_NORM: f64 = 2.0;

/// Ratio between the rotating-wave coupling contained in the spin–mechanics
/// Hamiltonian and the JC rate passed to [`build_jc`]: the RWA of
/// `(λ/2)(a_m + a_m†)σ_z` equals `build_jc(λ/4)`.
pub const JC_FROM_SPIN_MECH: f64 = 0.25;

/// Sign of the `Δ a†a` term.
///
/// `DriveFrame` writes the LC energy in the frame of the drive, `−Δ a†a`, so
/// that `Δ = −ω_m` puts the beamsplitter terms on resonance. `AsWritten`
/// uses `+Δ a†a` literally; at `Δ = −ω_m` that makes the two-mode squeezing
/// terms resonant instead.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetuningConvention {
    #[default]
    DriveFrame,
    AsWritten,
}

impl DetuningConvention {
    fn sign(self) -> f64 {
        match self {
            DetuningConvention::DriveFrame => -1.0,
            DetuningConvention::AsWritten => 1.0,
        }
    }
}

/// `Conserving`: `σ₊a_m + h.c.`; `Anti`: `σ₊a_m† + h.c.`
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JcKind {
    Conserving,
    Anti,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinSite {
    pub label: String,
    pub position: [f64; 3],
}

fn mode_of(layout: &SpaceLayout, label: &str) -> Result<usize> {
    let sub = layout.get(label)?;
    if sub.kind != SubsystemKind::Bosonic {
        return Err(Error::param(label, "expected a bosonic mode"));
    }
    Ok(sub.dim)
}

fn spin_of(layout: &SpaceLayout, label: &str) -> Result<()> {
    if layout.get(label)?.kind != SubsystemKind::SpinHalf {
        return Err(Error::param(label, "expected a spin-½ subsystem"));
    }
    Ok(())
}

/// Annihilation operator of mode `label`, embedded in `layout`.
pub fn lowering(layout: &SpaceLayout, label: &str) -> Result<FockOperator> {
    embed(&annihilation(mode_of(layout, label)?)?, layout, label)
}

/// Number operator of mode `label`, embedded in `layout`.
pub fn occupation(layout: &SpaceLayout, label: &str) -> Result<FockOperator> {
    embed(&number(mode_of(layout, label)?)?, layout, label)
}

/// Single-spin operator embedded at `label` (which must be spin-½).
pub fn spin_op(layout: &SpaceLayout, label: &str, op: &FockOperator) -> Result<FockOperator> {
    spin_of(layout, label)?;
    embed(op, layout, label)
}

fn hermitian(op: FockOperator) -> Result<FockOperator> {
    op.into_hermitian()
}

/// `∓Δ a†a + ω_m a_m†a_m + g (a† + a)(a_m† + a_m)`.
pub fn build_linearized(
    p: &SystemParams,
    layout: &SpaceLayout,
    lc: &str,
    mech: &str,
    convention: DetuningConvention,
) -> Result<FockOperator> {
    let a = lowering(layout, lc)?;
    let b = lowering(layout, mech)?;
    let xa = &a + &a.adjoint();
    let xb = &b + &b.adjoint();
    let h = occupation(layout, lc)?.scale(convention.sign() * p.detuning)
        + occupation(layout, mech)?.scale(p.omega_m)
        + (&xa * &xb).scale(p.g);
    hermitian(h)
}

/// `g (a† a_m + a a_m†)`.
pub fn build_beamsplitter(g: f64, layout: &SpaceLayout, lc: &str, mech: &str) -> Result<FockOperator> {
    let a = lowering(layout, lc)?;
    let b = lowering(layout, mech)?;
    let hop = &a.adjoint() * &b;
    hermitian((&hop + &hop.adjoint()).scale(g))
}

/// `δ a†a + g (a† a_m + a a_m†)`.
pub fn build_detuned(delta_disp: f64, g: f64, layout: &SpaceLayout, lc: &str, mech: &str) -> Result<FockOperator> {
    let h = occupation(layout, lc)?.scale(delta_disp) + build_beamsplitter(g, layout, lc, mech)?;
    hermitian(h)
}

/// `(g²/δ) a†a a_m†a_m`.
pub fn build_dispersive(g: f64, delta_disp: f64, layout: &SpaceLayout, lc: &str, mech: &str) -> Result<FockOperator> {
    if delta_disp == 0.0 || !delta_disp.is_finite() {
        return Err(Error::param("delta_disp", "dispersive coupling needs a finite nonzero detuning"));
    }
    let h = (&occupation(layout, lc)? * &occupation(layout, mech)?).scale(g * g / delta_disp);
    hermitian(h)
}

/// Zeeman Hamiltonian `Σᵢ g_s μ_B S(xᵢ)·B(xᵢ) / ħ` with `S = σ/2`.
pub fn build_spin_field(
    sites: &[SpinSite],
    g_s: f64,
    field: &dyn FieldMap,
    layout: &SpaceLayout,
) -> Result<FockOperator> {
    if sites.is_empty() {
        return Err(Error::param("spin_positions", "at least one spin is required"));
    }
    let mut h = FockOperator::zeros(layout);
    let axes = [PauliAxis::X, PauliAxis::Y, PauliAxis::Z];
    for site in sites {
        let b = field.field_at(site.position).ok_or_else(|| {
            Error::Precondition(format!("field undefined at spin `{}` ({:?})", site.label, site.position))
        })?;
        for (axis, bk) in axes.iter().zip(b) {
            if bk != 0.0 {
                h = h + spin_op(layout, &site.label, &pauli(*axis))?.scale(0.5 * g_s * MU_B * bk / HBAR);
            }
        }
        spin_of(layout, &site.label)?;
    }
    hermitian(h)
}

/// `ω_m a_m†a_m + (Δ_e/2)σ_z + (Ω_d′/2)σ_x + (λ/2)(a_m + a_m†)σ_z`.
pub fn build_spin_mech(
    p: &SystemParams,
    spin: &SpinParams,
    layout: &SpaceLayout,
    mech: &str,
    spin_label: &str,
) -> Result<FockOperator> {
    let b = lowering(layout, mech)?;
    let sz = spin_op(layout, spin_label, &pauli(PauliAxis::Z))?;
    let sx = spin_op(layout, spin_label, &pauli(PauliAxis::X))?;
    let xb = &b + &b.adjoint();
    let h = occupation(layout, mech)?.scale(p.omega_m)
        + sz.scale(spin.delta_e / 2.0)
        + sx.scale(spin.omega_d_prime / 2.0)
        + (&xb * &sz).scale(spin.lambda / 2.0);
    hermitian(h)
}

/// `λ(σ₊a_m + σ₋a_m†)` or `λ(σ₊a_m† + σ₋a_m)` with the literal σ±.
pub fn build_jc(lambda: f64, layout: &SpaceLayout, mech: &str, spin_label: &str, kind: JcKind) -> Result<FockOperator> {
    let b = lowering(layout, mech)?;
    let sp = spin_op(layout, spin_label, &sigma_plus_literal())?;
    let sm = spin_op(layout, spin_label, &sigma_minus_literal())?;
    let h = match kind {
        JcKind::Conserving => &(&sp * &b) + &(&sm * &b.adjoint()),
        JcKind::Anti => &(&sp * &b.adjoint()) + &(&sm * &b),
    };
    hermitian(h.scale(lambda))
}

/// Dressed qubit `(|g⟩, |e⟩) = (|+x⟩, |−x⟩)` in the `(|↑⟩, |↓⟩)` basis.
pub fn dressed_qubit_basis() -> (DVector<C64>, DVector<C64>) {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    (DVector::from_vec(vec![c(r, 0.0), c(r, 0.0)]), DVector::from_vec(vec![c(r, 0.0), c(-r, 0.0)]))
}

/// Projector onto the dressed excited state `|−x⟩`, `(1 − σ_x)/2`.
pub fn dressed_excitation(layout: &SpaceLayout, spin_label: &str) -> Result<FockOperator> {
    let sx = spin_op(layout, spin_label, &pauli(PauliAxis::X))?;
    hermitian((FockOperator::identity(layout) - sx).scale(0.5))
}
