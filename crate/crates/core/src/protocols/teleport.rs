use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{
    apply_cz, cphase, hadamard, measure_pair, phase_rotation, prepare_entangled_lc_in, transfer_state, CphaseModel,
    MeasurementSource, ProtocolReport, TransferOptions,
};
use crate::error::{Error, Result};
use crate::fockspace::{c, conjugate_local, partial_trace, DensityMatrix, SpaceLayout, StateVector, C64};
use crate::lindblad::{evolve, thermal_dissipators, Dissipator, EvolveOptions, LindbladModel, Sampling};
use crate::model::{build_beamsplitter, build_detuned, build_dispersive, lowering};
use crate::oracle::{checkpoint_state, fidelity_metrics, verify_teleportation, CorrectionTable, QubitCircuit};

const M1: &str = "m1";
const A1: &str = "a1";
const A2: &str = "a2";
const M2: &str = "m2";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TeleportLevel {
    /// Ideal two-level gates on four qubits.
    Qubit,
    /// Truncated modes evolved under the exchange and conditional-phase
    /// Hamiltonians.
    Physical,
}

/// Losses during the physical segments: `κ` on the LC modes, `(γ_m, n̄)` on
/// the mechanics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TeleportNoise {
    pub kappa: f64,
    pub gamma_m: f64,
    pub n_bar: f64,
}

#[derive(Clone, Debug)]
pub struct TeleportOptions {
    pub level: TeleportLevel,
    pub g: f64,
    pub delta_disp: f64,
    pub cphase_model: CphaseModel,
    /// Fock truncation per mode at the physical level.
    pub dim: usize,
    pub noise: Option<TeleportNoise>,
    /// Tolerated population outside `{|0⟩, |1⟩}` before the Hadamards.
    pub leak_tol: f64,
    /// Correction table; derived from the qubit circuit when absent.
    pub table: Option<CorrectionTable>,
}

impl Default for TeleportOptions {
    fn default() -> Self {
        TeleportOptions {
            level: TeleportLevel::Qubit,
            g: 1.0,
            delta_disp: 20.0,
            cphase_model: CphaseModel::Dispersive,
            dim: 3,
            noise: None,
            leak_tol: 1e-9,
            table: None,
        }
    }
}

/// One measurement branch of a teleportation run.
#[derive(Clone, Debug, Serialize)]
pub struct TeleportRun {
    pub bits: u8,
    pub probability: f64,
    pub fidelity: f64,
    pub checkpoint_fidelity: f64,
    /// Population outside the qubit subspace at readout.
    pub leaked: f64,
    pub correction: String,
    /// Corrected state of `m2`.
    #[serde(skip)]
    pub output: DensityMatrix,
}

struct Prepared {
    /// State before readout on `(m1, a1, a2, m2)`.
    rho: DensityMatrix,
    checkpoint_fidelity: f64,
    report: ProtocolReport,
    table: CorrectionTable,
    /// Input relabelled onto `m2`.
    target: DensityMatrix,
    target_pure: Option<StateVector>,
}

fn check_input(alpha: C64, beta: C64) -> Result<()> {
    let norm = alpha.norm_sqr() + beta.norm_sqr();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidState(format!("|α|² + |β|² = {norm}, expected 1")));
    }
    Ok(())
}

fn qubit_state(label: &str, dim: usize, alpha: C64, beta: C64) -> Result<StateVector> {
    let mut amps = vec![c(0.0, 0.0); dim];
    amps[0] = alpha;
    amps[1] = beta;
    StateVector::single_mode(label, dim, &amps)
}

fn swap_matrix(dim: usize) -> DMatrix<C64> {
    DMatrix::from_fn(dim * dim, dim * dim, |i, j| {
        let (a, b) = (j / dim, j % dim);
        if i == b * dim + a {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    })
}

/// `⟨Ψ|ρ|Ψ⟩` for the checkpoint written on qubits, lifted into `layout`.
fn checkpoint_fidelity(rho: &DensityMatrix, alpha: C64, beta: C64) -> f64 {
    let psi16 = checkpoint_state(alpha, beta);
    let layout = rho.layout();
    let mut psi = DVector::zeros(layout.total_dim());
    for (k, amp) in psi16.iter().enumerate() {
        let bits = [(k >> 3) & 1, (k >> 2) & 1, (k >> 1) & 1, k & 1];
        psi[layout.flat_index(&bits)] = *amp;
    }
    psi.dotc(&(rho.matrix() * &psi)).re.clamp(0.0, 1.0)
}

fn noise_model(
    h: crate::fockspace::FockOperator,
    noise: &TeleportNoise,
    lc: &str,
    mech: &str,
) -> Result<LindbladModel> {
    let layout = h.layout().clone();
    let mut diss = Vec::new();
    if noise.kappa > 0.0 {
        diss.push(Dissipator::new(lowering(&layout, lc)?, noise.kappa)?);
    }
    diss.extend(thermal_dissipators(&layout, mech, noise.gamma_m, noise.n_bar)?);
    LindbladModel::new(h, diss)
}

fn evolve_to(model: &LindbladModel, rho: &DensityMatrix, t: f64) -> Result<(DensityMatrix, bool)> {
    let opts = EvolveOptions { keep_states: false, ..EvolveOptions::default() };
    let res = evolve(model, rho, t, &Sampling::Endpoints, &opts)?;
    Ok((res.final_state().clone(), res.invariants_hold()))
}

/// Copies a single-mode state onto `label` with `dim` levels, truncating or
/// padding; returns the renormalized state and the discarded weight.
pub(crate) fn resize_mode(rho: &DensityMatrix, label: &str, dim: usize) -> Result<(DensityMatrix, f64)> {
    if rho.layout().len() != 1 {
        return Err(Error::param("input", "expected a single-subsystem state"));
    }
    let n = rho.dim();
    let keep = n.min(dim);
    let mut m = DMatrix::zeros(dim, dim);
    m.view_mut((0, 0), (keep, keep)).copy_from(&rho.matrix().view((0, 0), (keep, keep)));
    let kept: f64 = (0..keep).map(|i| m[(i, i)].re).sum();
    if !(kept > 0.0) {
        return Err(Error::InvalidState("no weight left after truncation".into()));
    }
    let lost = (rho.trace().re - kept).max(0.0);
    let layout = SpaceLayout::modes(&[(label, dim)])?;
    Ok((DensityMatrix::from_matrix_unchecked(layout, m / c(kept, 0.0))?, lost))
}

/// Everything up to the readout, shared by all branches.
fn prepare(input: &DensityMatrix, pure: Option<(C64, C64)>, opts: &TeleportOptions) -> Result<Prepared> {
    if let Some((alpha, beta)) = pure {
        check_input(alpha, beta)?;
    }
    let table = match &opts.table {
        Some(t) if t.is_total() => t.clone(),
        Some(_) => return Err(Error::param("table", "correction table must cover all four outcomes")),
        None => verify_teleportation(&QubitCircuit::motional())?.1,
    };
    let mut report = ProtocolReport::new("teleport-motional");
    let mut invariants_hold = true;
    let dim = match opts.level {
        TeleportLevel::Qubit => 2,
        TeleportLevel::Physical => opts.dim,
    };
    if dim < 2 {
        return Err(Error::InvalidDimension { dim, reason: "teleportation needs at least two levels per mode" });
    }
    if opts.level == TeleportLevel::Qubit && opts.noise.is_some() {
        report.note("noise is ignored at the qubit level");
    }

    let resource = prepare_entangled_lc_in(A1, A2, dim)?.to_density();
    report.segment("resource (|01⟩+|10⟩)/√2 on (a1, a2)", 0.0, "ideal");
    let vac = DensityMatrix::thermal(M2, dim, 0.0)?;
    let mut rho = resource.tensor(&vac)?;

    match opts.level {
        TeleportLevel::Qubit => {
            rho = conjugate_local(&rho, &[A2, M2], &swap_matrix(2))?;
            report.segment("transfer a2 -> m2", 0.0, "ideal swap");
        }
        TeleportLevel::Physical => {
            let r = FRAC_1_SQRT_2;
            let probe = StateVector::single_mode(A2, 2, &[c(r, 0.0), c(r, 0.0)])?;
            let t =
                transfer_state(&probe, opts.g, &TransferOptions { mech_dim: 2, ..TransferOptions::default() })?.time;
            report.metric("transfer_time", t);
            let h = build_beamsplitter(opts.g, rho.layout(), A2, M2)?;
            let model = match &opts.noise {
                Some(n) => noise_model(h, n, A2, M2)?,
                None => LindbladModel::closed(h)?,
            };
            let (out, ok) = evolve_to(&model, &rho, t)?;
            invariants_hold &= ok;
            report.segment("transfer a2 -> m2", t, model.summary());
            rho = conjugate_local(&out, &[M2], &phase_rotation(dim, PI / 2.0))?;
            report.segment("phase compensation diag(iⁿ) on m2", 0.0, "ideal");
        }
    }

    let (input, lost) = resize_mode(input, M1, dim)?;
    if lost > 0.0 {
        report.metric("input_truncated_weight", lost);
    }
    let (target, _) = resize_mode(&input, M2, dim)?;
    let target_pure = match pure {
        Some((alpha, beta)) => Some(qubit_state(M2, dim, alpha, beta)?),
        None => None,
    };
    rho = input.tensor(&rho)?;
    let layout: SpaceLayout = rho.layout().clone();

    match opts.level {
        TeleportLevel::Qubit => {
            rho = apply_cz(&rho, (M1, A1))?;
            report.segment("CZ (m1, a1)", 0.0, "ideal");
        }
        TeleportLevel::Physical => {
            let seg = cphase((A1, M1), opts.g, opts.delta_disp, opts.cphase_model, dim)?;
            report.metric("cphase_conditional_phase", seg.conditional_phase);
            report.metric("cphase_gate_infidelity", seg.gate_infidelity);
            report.metric("cphase_leakage", seg.leakage);
            match &opts.noise {
                None => {
                    rho = seg.apply(&rho)?;
                    report.segment("conditional phase (a1, m1)", seg.duration, format!("{:?}, closed", seg.model));
                }
                Some(n) => {
                    let h = match opts.cphase_model {
                        CphaseModel::Dispersive => build_dispersive(opts.g, opts.delta_disp, &layout, A1, M1)?,
                        CphaseModel::Detuned => build_detuned(opts.delta_disp, opts.g, &layout, A1, M1)?,
                    };
                    let model = noise_model(h, n, A1, M1)?;
                    let (out, ok) = evolve_to(&model, &rho, seg.duration)?;
                    invariants_hold &= ok;
                    rho = out;
                    report.segment("conditional phase (a1, m1)", seg.duration, model.summary());
                }
            }
        }
    }
    let checkpoint = match pure {
        Some((alpha, beta)) => checkpoint_fidelity(&rho, alpha, beta),
        None => f64::NAN,
    };
    if pure.is_some() {
        report.metric("checkpoint_fidelity", checkpoint);
    }

    rho = hadamard(&rho, M1, opts.leak_tol)?;
    rho = hadamard(&rho, A1, opts.leak_tol)?;
    report.segment("Hadamard m1, a1", 0.0, "ideal");
    report.flag("invariants_hold", invariants_hold && rho.invariant_stats().within(1e-8, 1e-9, 1e-7));
    Ok(Prepared { rho, checkpoint_fidelity: checkpoint, report, table, target, target_pure })
}

fn finish(prepared: &Prepared, source: &mut MeasurementSource) -> Result<TeleportRun> {
    let out = measure_pair(&prepared.rho, (M1, A1), source)?;
    let bits = out.bits;
    let dim = prepared.rho.layout().get(M2)?.dim;
    let mut corr = DMatrix::identity(dim, dim);
    corr.view_mut((0, 0), (2, 2)).copy_from(&prepared.table.operator(bits));
    let m2 = partial_trace(&out.state, &[M2])?;
    let output = conjugate_local(&m2, &[M2], &corr)?;
    let fidelity = match &prepared.target_pure {
        Some(psi) => crate::fockspace::fidelity(&output, psi)?,
        None => fidelity_metrics(&output, &prepared.target)?.state_fidelity,
    };
    Ok(TeleportRun {
        bits,
        probability: out.probabilities[bits as usize],
        fidelity,
        checkpoint_fidelity: prepared.checkpoint_fidelity,
        leaked: out.leaked,
        correction: prepared.table.gate_name(bits),
        output,
    })
}

/// Teleports `α|0⟩ + β|1⟩` from `m1` to `m2` with one sampled (or replayed)
/// Bell-measurement outcome.
pub fn teleport_motional(
    alpha: C64,
    beta: C64,
    opts: &TeleportOptions,
    source: &mut MeasurementSource,
) -> Result<ProtocolReport> {
    check_input(alpha, beta)?;
    let input = qubit_state(M1, 2, alpha, beta)?.to_density();
    let prepared = prepare(&input, Some((alpha, beta)), opts)?;
    let run = finish(&prepared, source)?;
    let mut report = prepared.report;
    report.segment("Bell readout (m1, a1)", 0.0, "projective");
    report.measurement_record = vec![run.bits >> 1, run.bits & 1];
    report.correction_applied = Some(run.correction.clone());
    report.segment("correction on m2", 0.0, run.correction.clone());
    report.metric("branch_probability", run.probability);
    report.metric("leaked_probability", run.leaked);
    report.set_fidelity(run.fidelity);
    Ok(report)
}

/// All four readout branches from a single pre-measurement state.
pub fn teleport_motional_state(alpha: C64, beta: C64, opts: &TeleportOptions) -> Result<Vec<TeleportRun>> {
    check_input(alpha, beta)?;
    let input = qubit_state(M1, 2, alpha, beta)?.to_density();
    let prepared = prepare(&input, Some((alpha, beta)), opts)?;
    (0..4u8).map(|bits| finish(&prepared, &mut MeasurementSource::Replay(bits))).collect()
}

/// All four readout branches for a mixed single-mode input; fidelities are
/// Uhlmann fidelities to the input. Branches with vanishing probability are
/// skipped.
pub fn teleport_mixed(input: &DensityMatrix, opts: &TeleportOptions) -> Result<(Vec<TeleportRun>, ProtocolReport)> {
    let prepared = prepare(input, None, opts)?;
    let mut runs = Vec::new();
    for bits in 0..4u8 {
        match finish(&prepared, &mut MeasurementSource::Replay(bits)) {
            Ok(r) => runs.push(r),
            Err(Error::ZeroProbabilityBranch(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok((runs, prepared.report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::random::haar_qubit;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ground_state_teleports_on_every_branch() {
        let runs = teleport_motional_state(c(1.0, 0.0), c(0.0, 0.0), &TeleportOptions::default()).unwrap();
        for r in &runs {
            assert!((r.fidelity - 1.0).abs() < 1e-12, "{}", r.fidelity);
            assert!((r.probability - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn haar_inputs_qubit_level() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let (a, b) = haar_qubit(&mut rng);
            for r in teleport_motional_state(a, b, &TeleportOptions::default()).unwrap() {
                assert!(r.fidelity > 1.0 - 1e-12);
                assert!((r.checkpoint_fidelity - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn physical_dispersive_matches_qubit_level() {
        let r = FRAC_1_SQRT_2;
        let opts = TeleportOptions { level: TeleportLevel::Physical, ..TeleportOptions::default() };
        for run in teleport_motional_state(c(r, 0.0), c(0.0, r), &opts).unwrap() {
            assert!(run.fidelity > 1.0 - 1e-9, "{}", run.fidelity);
            assert!(run.checkpoint_fidelity > 1.0 - 1e-9);
            assert!(run.leaked < 1e-12);
        }
    }

    #[test]
    fn noise_degrades_output() {
        let r = FRAC_1_SQRT_2;
        let noise = TeleportNoise { kappa: 0.002, gamma_m: 0.0005, n_bar: 0.2 };
        let opts = TeleportOptions {
            level: TeleportLevel::Physical,
            dim: 3,
            noise: Some(noise),
            leak_tol: 0.1,
            ..TeleportOptions::default()
        };
        let runs = teleport_motional_state(c(r, 0.0), c(r, 0.0), &opts).unwrap();
        assert!(runs.iter().all(|x| x.fidelity < 1.0 - 1e-4 && x.fidelity > 0.5));
        let (_, report) =
            teleport_mixed(&qubit_state(M1, 2, c(r, 0.0), c(r, 0.0)).unwrap().to_density(), &opts).unwrap();
        assert_eq!(report.metrics["invariants_hold"], 1.0);
    }

    #[test]
    fn seeded_run_reports_bits() {
        let r = FRAC_1_SQRT_2;
        let run = |seed| {
            teleport_motional(c(r, 0.0), c(r, 0.0), &TeleportOptions::default(), &mut MeasurementSource::seeded(seed))
                .unwrap()
        };
        let (a, b) = (run(3), run(3));
        assert_eq!(a, b);
        assert_eq!(a.measurement_record.len(), 2);
        assert!(a.final_fidelity > 1.0 - 1e-12);
        assert!(a.correction_applied.is_some());
        assert!(matches!(
            teleport_motional(c(1.0, 0.0), c(1.0, 0.0), &TeleportOptions::default(), &mut MeasurementSource::seeded(1)),
            Err(Error::InvalidState(_))
        ));
    }
}
