use std::f64::consts::PI;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{maximize, phase_rotation, ProtocolReport};
use crate::error::{Error, Result};
use crate::fockspace::{
    c, conjugate_local, fidelity, partial_trace, DensityMatrix, InvariantStats, SpaceLayout, StateVector, Subsystem,
    C64, DEFAULT_TRUNCATION_THRESHOLD,
};
use crate::lindblad::{
    adiabatic_eliminate, cooling_model, evolve, thermal_dissipators, CoolingHamiltonian, Dissipator, EvolveOptions,
    LindbladModel, Sampling,
};
use crate::model::{build_beamsplitter, lowering, occupation, SystemParams, LC, MECH};
use crate::oracle::exact_liouville_evolve;
use crate::propagate::unitary;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoolModel {
    /// Two-mode master equation with the given coherent part.
    Full(CoolingHamiltonian),
    /// Single-mode model after eliminating the LC mode.
    Eliminated,
}

#[derive(Clone, Debug)]
pub struct CoolOptions {
    /// Initial thermal occupation of the mechanics (LC starts in vacuum).
    pub n_init: f64,
    /// Defaults to `4/γ′`.
    pub duration: Option<f64>,
    pub lc_dim: usize,
    pub mech_dim: usize,
    pub samples: usize,
    pub model: CoolModel,
    pub truncation_threshold: f64,
}

impl Default for CoolOptions {
    fn default() -> Self {
        CoolOptions {
            n_init: 0.0,
            duration: None,
            lc_dim: 4,
            mech_dim: 15,
            samples: 101,
            model: CoolModel::Full(CoolingHamiltonian::Beamsplitter),
            truncation_threshold: DEFAULT_TRUNCATION_THRESHOLD,
        }
    }
}

fn record_invariants(report: &mut ProtocolReport, stats: &InvariantStats, hold: bool) {
    report.metric("max_trace_error", stats.trace_error);
    report.metric("max_hermiticity_error", stats.hermiticity_error);
    report.metric("min_eigenvalue", stats.min_eigenvalue);
    report.flag("invariants_hold", hold);
}

/// Sideband cooling of the mechanics from a thermal state.
pub fn sideband_cool(p: &SystemParams, opts: &CoolOptions) -> Result<ProtocolReport> {
    p.validate()?;
    let mut report = ProtocolReport::new("cool");
    if !p.sideband_resolved() {
        report.note(format!(
            "not sideband resolved: ω_m = {:.4e}, κ = {:.4e}, γ_m = {:.4e} rad/s",
            p.omega_m, p.kappa, p.gamma_m
        ));
    }
    report.flag("sideband_resolved", p.sideband_resolved());
    let layout = SpaceLayout::modes(&[(LC, opts.lc_dim), (MECH, opts.mech_dim)])?;
    let kind = match opts.model {
        CoolModel::Full(kind) => kind,
        CoolModel::Eliminated => CoolingHamiltonian::Beamsplitter,
    };
    let two_mode = cooling_model(p, &layout, LC, MECH, kind)?;
    let mut eliminated = p.clone();
    eliminated.update_elimination()?;

    let (model, rho0) = match opts.model {
        CoolModel::Full(_) => {
            let vac = DensityMatrix::thermal(LC, opts.lc_dim, 0.0)?;
            let rho0 = vac.tensor(&DensityMatrix::thermal(MECH, opts.mech_dim, opts.n_init)?)?;
            (two_mode, rho0)
        }
        CoolModel::Eliminated => {
            let (m, q) = adiabatic_eliminate(&two_mode, p, MECH)?;
            eliminated = q;
            (m, DensityMatrix::thermal(MECH, opts.mech_dim, opts.n_init)?)
        }
    };
    let relax = if eliminated.gamma_prime > 0.0 { eliminated.gamma_prime } else { p.kappa.max(p.g) };
    if !(relax > 0.0) && opts.duration.is_none() {
        return Err(Error::param("duration", "no damping in the model; an explicit duration is required"));
    }
    let duration = opts.duration.unwrap_or(4.0 / relax);
    let n_op = occupation(model.layout(), MECH)?;
    let evo_opts = EvolveOptions {
        keep_states: false,
        truncation_threshold: Some(opts.truncation_threshold),
        ..EvolveOptions::default()
    }
    .observe("n_m", n_op);
    let res = evolve(&model, &rho0, duration, &Sampling::Uniform(opts.samples.max(2)), &evo_opts)?;
    let series = res.observable("n_m").expect("observable registered").to_vec();
    report.segment("cool", duration, model.summary());
    report.phonon_trajectory = res.times.iter().zip(&series).map(|(t, n)| [*t, *n]).collect();

    let n_final = *series.last().expect("at least two samples");
    report.metric("n_init", opts.n_init);
    report.metric("n_final", n_final);
    report.metric("n_bar", p.n_bar);
    report.metric("kappa_prime", eliminated.kappa_prime);
    report.metric("gamma_prime", eliminated.gamma_prime);
    report.metric("n_bar_prime", eliminated.n_bar_prime);
    if eliminated.n_bar_prime > 0.0 {
        let rel = (n_final - eliminated.n_bar_prime).abs() / eliminated.n_bar_prime;
        report.metric("relative_to_eliminated", rel);
        if p.g > 0.0 && p.kappa / p.g >= 10.0 {
            report.flag("within_15pct_of_eliminated", rel <= 0.15);
        }
    }
    // nonincreasing after the cavity transient, up to integrator noise
    let transient = if p.kappa > 0.0 { 5.0 / p.kappa } else { 0.0 };
    let tail: Vec<f64> = res.times.iter().zip(&series).filter(|(t, _)| **t >= transient).map(|(_, n)| *n).collect();
    let monotone = tail.windows(2).all(|w| w[1] <= w[0] + 1e-9 * w[0].abs().max(1e-12));
    report.flag("monotone_after_transient", monotone);
    record_invariants(&mut report, &res.worst_invariants(), res.invariants_hold());
    report.set_fidelity(1.0);
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct TransferOptions {
    /// Fixed interaction time; optimized over `(0, 2π/g]` when absent.
    pub time: Option<f64>,
    /// Mechanical truncation; at least the input dimension.
    pub mech_dim: usize,
    pub kappa: f64,
    pub gamma_m: f64,
    pub n_bar: f64,
    /// Thermal occupation of the mechanics before the transfer.
    pub mech_occupation: f64,
    pub grid: usize,
}

impl Default for TransferOptions {
    fn default() -> Self {
        TransferOptions {
            time: None,
            mech_dim: 3,
            kappa: 0.0,
            gamma_m: 0.0,
            n_bar: 0.0,
            mech_occupation: 0.0,
            grid: 401,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TransferResult {
    pub time: f64,
    pub fidelity: f64,
    /// Reduced mechanical state.
    #[serde(skip)]
    pub state: DensityMatrix,
    /// `Σ cₙ (−i)ⁿ |n⟩` on the mechanics.
    #[serde(skip)]
    pub target: StateVector,
    pub optimized: bool,
    /// `(π/(2g), F)` and `(π/g, F)`.
    pub half_swap: (f64, f64),
    pub full_swap: (f64, f64),
    /// Input weight outside `{|0⟩, |1⟩}`.
    pub higher_fock_weight: f64,
    pub invariants: InvariantStats,
}

fn transfer_model(g: f64, opts: &TransferOptions, layout: &SpaceLayout, lc: &str) -> Result<LindbladModel> {
    let h = build_beamsplitter(g, layout, lc, MECH)?;
    let mut diss = Vec::new();
    if opts.kappa > 0.0 {
        diss.push(Dissipator::new(lowering(layout, lc)?, opts.kappa)?);
    }
    diss.extend(thermal_dissipators(layout, MECH, opts.gamma_m, opts.n_bar)?);
    LindbladModel::new(h, diss)
}

/// State after the beamsplitter interaction for time `t`.
fn transfer_at(model: &LindbladModel, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    if t == 0.0 {
        return Ok(rho0.clone());
    }
    if model.dissipators().is_empty() {
        let u = unitary(model.hamiltonian(), t);
        let m = &u * rho0.matrix() * u.adjoint();
        return DensityMatrix::from_matrix_unchecked(rho0.layout().clone(), m);
    }
    let opts = EvolveOptions { keep_states: false, ..EvolveOptions::default() };
    Ok(evolve(model, rho0, t, &Sampling::Endpoints, &opts)?.final_state().clone())
}

/// Swaps a single-mode LC state onto the mechanics (initially thermal at
/// `mech_occupation`, normally vacuum) with the beamsplitter coupling.
pub fn transfer_state(input: &StateVector, g: f64, opts: &TransferOptions) -> Result<TransferResult> {
    if input.layout().len() != 1 {
        return Err(Error::param("input", "transfer source must be a single mode"));
    }
    if !(g > 0.0) || !g.is_finite() {
        return Err(Error::param("g", "transfer needs g > 0"));
    }
    let src = input.layout().subsystems()[0].clone();
    if src.dim > opts.mech_dim {
        return Err(Error::param("mech_dim", format!("must be at least the source dimension {}", src.dim)));
    }
    let amps = input.amplitudes();
    let higher: f64 = amps.iter().skip(2).map(|z| z.norm_sqr()).sum();
    if higher > 1e-12 {
        log::warn!("transfer source has weight {higher:.3e} outside {{|0⟩, |1⟩}}; result is truncation-sensitive");
    }
    if opts.mech_occupation > 0.1 {
        log::warn!("mechanics not in its ground state (⟨n⟩ = {:.3})", opts.mech_occupation);
    }
    let layout =
        SpaceLayout::new(vec![Subsystem::bosonic(&src.label, src.dim), Subsystem::bosonic(MECH, opts.mech_dim)])?;
    let rho0 = input.to_density().tensor(&DensityMatrix::thermal(MECH, opts.mech_dim, opts.mech_occupation)?)?;
    let model = transfer_model(g, opts, &layout, &src.label)?;
    let mech_layout = SpaceLayout::single(Subsystem::bosonic(MECH, opts.mech_dim))?;
    let target =
        StateVector::new(
            mech_layout,
            DVector::from_fn(opts.mech_dim, |n, _| {
                if n < src.dim {
                    amps[n] * c(0.0, -1.0).powu(n as u32)
                } else {
                    c(0.0, 0.0)
                }
            }),
        )?;
    let score = |t: f64| -> Result<(f64, DensityMatrix)> {
        let rho = transfer_at(&model, &rho0, t)?;
        let red = partial_trace(&rho, &[MECH])?;
        Ok((fidelity(&red, &target)?, rho))
    };
    let half = PI / (2.0 * g);
    let full = PI / g;
    let half_swap = (half, score(half)?.0);
    let full_swap = (full, score(full)?.0);
    let (time, optimized) = match opts.time {
        Some(t) if t >= 0.0 && t.is_finite() => (t, false),
        Some(t) => return Err(Error::param("time", format!("must be finite and nonnegative, got {t}"))),
        None => {
            let span = 2.0 * PI / g;
            let (t, _) = maximize(|t| Ok(score(t)?.0), span / opts.grid as f64, span, opts.grid)?;
            (t, true)
        }
    };
    let (fid, rho) = score(time)?;
    Ok(TransferResult {
        time,
        fidelity: fid,
        state: partial_trace(&rho, &[MECH])?,
        target,
        optimized,
        half_swap,
        full_swap,
        higher_fock_weight: higher,
        invariants: rho.invariant_stats(),
    })
}

#[derive(Clone, Debug)]
pub struct SuperpositionOptions {
    /// Residual mechanical occupation after cooling.
    pub mech_occupation: f64,
    /// Include `κ`, `γ_m` and `n̄` from the parameters during the transfer.
    pub dissipative: bool,
    pub lc_dim: usize,
    pub mech_dim: usize,
    pub time: Option<f64>,
    /// Recompute the dissipative fidelity with the exact Liouvillian.
    pub compare_oracle: bool,
    pub samples: usize,
}

impl Default for SuperpositionOptions {
    fn default() -> Self {
        SuperpositionOptions {
            mech_occupation: 0.0,
            dissipative: false,
            lc_dim: 2,
            mech_dim: 3,
            time: None,
            compare_oracle: true,
            samples: 51,
        }
    }
}

/// Prepares `(|0⟩ + |1⟩)/√2` on the LC mode (ideal) and swaps it onto the
/// cooled mechanics. The transfer phase `(−i)ⁿ` is undone by an ideal local
/// rotation before scoring.
pub fn prepare_motional_superposition(p: &SystemParams, opts: &SuperpositionOptions) -> Result<ProtocolReport> {
    p.validate()?;
    if !(opts.mech_occupation < 0.1) {
        return Err(Error::Precondition(format!(
            "mechanics not cooled: ⟨n_m⟩ = {:.4} (needs < 0.1)",
            opts.mech_occupation
        )));
    }
    let mut report = ProtocolReport::new("superpose");
    let strong = p.strong_coupling();
    report.note(format!(
        "strong coupling g > n̄γ_m, κ: g = {:.4e}, n̄γ_m = {:.4e}, κ = {:.4e} rad/s -> {}",
        p.g,
        p.thermal_decoherence(),
        p.kappa,
        strong
    ));
    report.flag("strong_coupling", strong);

    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut coeffs = vec![c(0.0, 0.0); opts.lc_dim.max(2)];
    coeffs[0] = c(r, 0.0);
    coeffs[1] = c(r, 0.0);
    let phi0 = StateVector::single_mode(LC, coeffs.len(), &coeffs)?;
    report.segment("prepare |φ0⟩ on LC", 0.0, "ideal");

    let topts = TransferOptions {
        time: opts.time,
        mech_dim: opts.mech_dim.max(coeffs.len()),
        kappa: if opts.dissipative { p.kappa } else { 0.0 },
        gamma_m: if opts.dissipative { p.gamma_m } else { 0.0 },
        n_bar: if opts.dissipative { p.n_bar } else { 0.0 },
        mech_occupation: opts.mech_occupation,
        ..TransferOptions::default()
    };
    let tr = transfer_state(&phi0, p.g, &topts)?;
    let layout = SpaceLayout::modes(&[(LC, coeffs.len()), (MECH, topts.mech_dim)])?;
    let model = transfer_model(p.g, &topts, &layout, LC)?;
    report.segment("beamsplitter transfer", tr.time, model.summary());
    report.metric("transfer_time", tr.time);
    report.metric("candidate_half_swap_time", tr.half_swap.0);
    report.metric("candidate_half_swap_fidelity", tr.half_swap.1);
    report.metric("candidate_full_swap_time", tr.full_swap.0);
    report.metric("candidate_full_swap_fidelity", tr.full_swap.1);
    report.metric("fidelity_with_transfer_phase", tr.fidelity);

    if opts.samples >= 2 && tr.time > 0.0 {
        let rho0 = phi0.to_density().tensor(&DensityMatrix::thermal(MECH, topts.mech_dim, opts.mech_occupation)?)?;
        let evo_opts =
            EvolveOptions { keep_states: false, ..EvolveOptions::default() }.observe("n_m", occupation(&layout, MECH)?);
        let res = evolve(&model, &rho0, tr.time, &Sampling::Uniform(opts.samples), &evo_opts)?;
        let series = res.observable("n_m").expect("observable registered");
        report.phonon_trajectory = res.times.iter().zip(series).map(|(t, n)| [*t, *n]).collect();
        record_invariants(&mut report, &res.worst_invariants(), res.invariants_hold());
    }

    let undo = phase_rotation(topts.mech_dim, PI / 2.0);
    let score = |mech: &DensityMatrix| -> Result<f64> {
        let fixed = conjugate_local(mech, &[MECH], &undo)?;
        let target = StateVector::new(
            fixed.layout().clone(),
            DVector::from_fn(topts.mech_dim, |n, _| if n < 2 { c(r, 0.0) } else { C64::new(0.0, 0.0) }),
        )?;
        fidelity(&fixed, &target)
    };
    report.segment("phase compensation diag(iⁿ)", 0.0, "ideal");
    let f = score(&tr.state)?;
    report.set_fidelity(f);
    report.metric("fidelity", f);

    if opts.dissipative && opts.compare_oracle {
        let rho0 = phi0.to_density().tensor(&DensityMatrix::thermal(MECH, topts.mech_dim, opts.mech_occupation)?)?;
        let exact = exact_liouville_evolve(&model, &rho0, tr.time)?;
        let f_oracle = score(&partial_trace(&exact, &[MECH])?)?;
        report.metric("oracle_fidelity", f_oracle);
        report.metric("oracle_abs_difference", (f - f_oracle).abs());
    }
    Ok(report)
}
