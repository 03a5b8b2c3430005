use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::teleport::resize_mode;
use super::{maximize, phase_rotation, teleport_mixed, MeasurementSource, ProtocolReport, TeleportOptions};
use crate::error::{Error, Result};
use crate::fockspace::{
    c, conjugate_local, partial_trace, pauli, DensityMatrix, FockOperator, PauliAxis, SpaceLayout, Subsystem, C64,
    DEFAULT_TRUNCATION_THRESHOLD,
};
use crate::lindblad::{evolve, steady_state, thermal_dissipators, Dissipator, EvolveOptions, LindbladModel, Sampling};
use crate::model::constants::TWO_PI;
use crate::model::{
    build_jc, build_spin_mech, dressed_qubit_basis, occupation, resonance_detunings, spin_op, JcKind, SpinParams,
    SystemParams, JC_FROM_SPIN_MECH, MECH, SIGMA_PM_NORM, SPIN,
};
use crate::oracle::fidelity_metrics;
use crate::par::Exec;
use crate::propagate::unitary;

/// Logical qubit label for swap inputs and outputs.
const QUBIT: &str = "q";

fn spin_mech_layout(mech_dim: usize) -> Result<SpaceLayout> {
    SpaceLayout::new(vec![Subsystem::bosonic(MECH, mech_dim), Subsystem::spin(SPIN)])
}

/// Lab-frame spin lowering `|↓⟩⟨↑|`.
fn lab_lowering(layout: &SpaceLayout) -> Result<FockOperator> {
    let x = pauli(PauliAxis::X);
    let y = pauli(PauliAxis::Y).scale_complex(c(0.0, -1.0));
    spin_op(layout, SPIN, &(&x + &y).scale(0.5))
}

/// Spin–mechanics master equation for the scan: the spin–phonon Hamiltonian,
/// the cooled mechanical bath `(γ′, n̄′)`, spin decay `D[|↓⟩⟨↑|]` and
/// dephasing `D[σ_z]`.
pub fn esr_model(p: &SystemParams, spin: &SpinParams, mech_dim: usize) -> Result<LindbladModel> {
    let layout = spin_mech_layout(mech_dim)?;
    let h = build_spin_mech(p, spin, &layout, MECH, SPIN)?;
    let mut diss = thermal_dissipators(&layout, MECH, p.gamma_prime, p.n_bar_prime)?;
    if spin.spin_decay > 0.0 {
        diss.push(Dissipator::new(lab_lowering(&layout)?, spin.spin_decay)?);
    }
    if spin.spin_dephasing > 0.0 {
        diss.push(Dissipator::new(spin_op(&layout, SPIN, &pauli(PauliAxis::Z))?, spin.spin_dephasing)?);
    }
    LindbladModel::new(h, diss)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sweep {
    /// Sweep `Δ_e` at fixed `Ω_d′`.
    DeltaE,
    /// Sweep `Ω_d′` at fixed `Δ_e`.
    OmegaDPrime,
}

#[derive(Clone, Debug)]
pub struct EsrOptions {
    pub sweep: Sweep,
    /// The parameter held fixed (rad/s).
    pub fixed: f64,
    pub range: (f64, f64),
    pub resolution: f64,
    pub mech_dim: usize,
    pub exec: Exec,
    pub truncation_threshold: f64,
}

impl Default for EsrOptions {
    fn default() -> Self {
        EsrOptions {
            sweep: Sweep::DeltaE,
            fixed: 0.0,
            range: (-1.0, 1.0),
            resolution: 0.01,
            mech_dim: 10,
            exec: Exec::Sequential,
            truncation_threshold: DEFAULT_TRUNCATION_THRESHOLD,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPeak {
    /// Grid point of the maximum.
    pub position: f64,
    /// Vertex of the parabola through the maximum and its neighbours.
    pub refined_position: f64,
    pub height: f64,
    pub prominence: f64,
    /// Full width at half prominence.
    pub width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub sweep: Sweep,
    pub fixed: f64,
    pub resolution: f64,
    /// Swept parameter (rad/s).
    pub abscissa: Vec<f64>,
    /// Steady phonon emission `γ′⟨a_m†a_m⟩` (1/s).
    pub ordinate: Vec<f64>,
    pub occupation: Vec<f64>,
    pub peaks: Vec<SpectrumPeak>,
    /// Resonances `ω_eff = ω_m` inside the range.
    pub expected: Vec<f64>,
}

impl Spectrum {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("abscissa,emission,occupation\n");
        for ((x, y), n) in self.abscissa.iter().zip(&self.ordinate).zip(&self.occupation) {
            out.push_str(&format!("{x:.17e},{y:.17e},{n:.17e}\n"));
        }
        out
    }
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Strict local maxima above the median whose topographic prominence
/// exceeds a quarter of `max − median`.
pub(crate) fn find_peaks(x: &[f64], y: &[f64]) -> Vec<SpectrumPeak> {
    let n = y.len();
    if n < 3 {
        return Vec::new();
    }
    let med = median(y);
    let top = y.iter().cloned().fold(f64::MIN, f64::max);
    let min_prom = 0.25 * (top - med);
    if !(min_prom > 0.0) {
        return Vec::new();
    }
    let mut peaks = Vec::new();
    for i in 1..n - 1 {
        if !(y[i] > y[i - 1] && y[i] > y[i + 1] && y[i] > med) {
            continue;
        }
        let mut left_min = y[i];
        for j in (0..i).rev() {
            if y[j] > y[i] {
                break;
            }
            left_min = left_min.min(y[j]);
        }
        let mut right_min = y[i];
        for &v in &y[i + 1..] {
            if v > y[i] {
                break;
            }
            right_min = right_min.min(v);
        }
        let prominence = y[i] - left_min.max(right_min);
        if prominence <= min_prom {
            continue;
        }
        let half = y[i] - 0.5 * prominence;
        let cross = |range: &mut dyn Iterator<Item = usize>, step: isize| -> f64 {
            for j in range {
                let k = (j as isize + step) as usize;
                if y[k] < half {
                    return x[j] + (x[k] - x[j]) * (y[j] - half) / (y[j] - y[k]);
                }
            }
            if step < 0 {
                x[0]
            } else {
                x[n - 1]
            }
        };
        let left = cross(&mut (1..=i).rev(), -1);
        let right = cross(&mut (i..n - 1), 1);
        let denom = y[i - 1] - 2.0 * y[i] + y[i + 1];
        let shift = if denom != 0.0 { 0.5 * (y[i - 1] - y[i + 1]) / denom } else { 0.0 };
        let h = x[i + 1] - x[i];
        peaks.push(SpectrumPeak {
            position: x[i],
            refined_position: x[i] + shift.clamp(-1.0, 1.0) * h,
            height: y[i],
            prominence,
            width: right - left,
        });
    }
    peaks
}

/// Steady-state phonon emission of the spin–mechanics model across a sweep
/// of the spin drive.
pub fn esr_scan(spin: &SpinParams, p: &SystemParams, opts: &EsrOptions) -> Result<Spectrum> {
    spin.validate()?;
    p.validate()?;
    if !(spin.lambda < p.omega_m / 10.0) {
        return Err(Error::Precondition(format!(
            "λ = {:.4e} is not below ω_m/10 = {:.4e}",
            spin.lambda,
            p.omega_m / 10.0
        )));
    }
    let (lo, hi) = opts.range;
    if !(hi > lo) || !(opts.resolution > 0.0) {
        return Err(Error::param("range", "needs lo < hi and a positive resolution"));
    }
    let n = ((hi - lo) / opts.resolution).round() as usize + 1;
    let xs: Vec<f64> = (0..n).map(|k| lo + opts.resolution * k as f64).collect();
    let layout = spin_mech_layout(opts.mech_dim)?;
    let n_op = occupation(&layout, MECH)?;
    let occ = opts.exec.try_map(&xs, |&x| -> Result<f64> {
        let s = match opts.sweep {
            Sweep::DeltaE => spin.clone().with_drive(x, opts.fixed),
            Sweep::OmegaDPrime => spin.clone().with_drive(opts.fixed, x),
        };
        let rho = steady_state(&esr_model(p, &s, opts.mech_dim)?)?;
        rho.check_truncation(opts.truncation_threshold)?;
        rho.expectation(&n_op)
    })?;
    let ordinate: Vec<f64> = occ.iter().map(|n| p.gamma_prime * n).collect();
    // ω_eff = ω_m is symmetric in (Δ_e, Ω_d′), so both sweeps use the same roots
    let roots = resonance_detunings(p.omega_m, opts.fixed).map(|(a, b)| vec![a, b]).unwrap_or_default();
    let mut expected: Vec<f64> = roots.into_iter().filter(|v| *v >= lo && *v <= hi).collect();
    expected.dedup();
    let peaks = find_peaks(&xs, &ordinate);
    Ok(Spectrum {
        sweep: opts.sweep,
        fixed: opts.fixed,
        resolution: opts.resolution,
        abscissa: xs,
        ordinate,
        occupation: occ,
        peaks,
        expected,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SwapDirection {
    SpinToMech,
    MechToSpin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SwapLevel {
    /// Jaynes–Cummings coupling in the frame of the dressed spin.
    Jc,
    /// Full spin–phonon Hamiltonian in the lab frame.
    Physical,
}

#[derive(Clone, Debug)]
pub struct SwapOptions {
    pub direction: SwapDirection,
    pub level: SwapLevel,
    pub mech_dim: usize,
    /// Fixed duration; the first full transfer is located numerically when
    /// absent.
    pub time: Option<f64>,
    /// Adds the mechanical bath `(γ′, n̄′)`; at the physical level also the
    /// spin decay and dephasing.
    pub dissipative: bool,
    /// Thermal occupation of the receiving mechanics.
    pub mech_occupation: f64,
}

impl Default for SwapOptions {
    fn default() -> Self {
        SwapOptions {
            direction: SwapDirection::SpinToMech,
            level: SwapLevel::Jc,
            mech_dim: 3,
            time: None,
            dissipative: false,
            mech_occupation: 0.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SwapResult {
    pub direction: SwapDirection,
    pub level: SwapLevel,
    pub time: f64,
    /// `|⟨target|U|source⟩|²` of the closed evolution at `time`.
    pub transfer_probability: f64,
    /// Phase removed from the transferred excitation.
    pub phase: f64,
    /// Fidelity of the logical output to the logical input.
    pub fidelity: f64,
    /// Receiver state on `(|g⟩, |e⟩)` or `(|0⟩, |1⟩)`, labelled `q`.
    pub output_logical: DensityMatrix,
    /// Receiver state in its own space (mechanics `m` or spin `s`).
    pub output: DensityMatrix,
    /// Closed-system propagator on `(m, s)`.
    pub unitary: DMatrix<C64>,
    /// `λ > n̄γ_m`
    pub strong_coupling: bool,
}

/// Dressed qubit `(|g⟩, |e⟩)` as columns: `(|+x⟩, |−x⟩)` for `Ω_d′ < 0`,
/// relabelled to `(|−x⟩, |+x⟩)` for `Ω_d′ > 0` so that `|g⟩` is always the
/// lower dressed level.
pub fn logical_basis(omega_d_prime: f64) -> DMatrix<C64> {
    let (plus, minus) = dressed_qubit_basis();
    let (g, e) = if omega_d_prime < 0.0 { (plus, minus) } else { (minus, plus) };
    DMatrix::from_columns(&[g, e])
}

/// `α|g⟩ + β|e⟩` as a logical density matrix on `q`.
pub fn logical_qubit(alpha: C64, beta: C64) -> Result<DensityMatrix> {
    let v = DVector::from_vec(vec![alpha, beta]);
    let layout = SpaceLayout::modes(&[(QUBIT, 2)])?;
    DensityMatrix::new(layout, &v * v.adjoint())
}

struct SwapPlan {
    level: SwapLevel,
    direction: SwapDirection,
    layout: SpaceLayout,
    basis: DMatrix<C64>,
    time: f64,
    phase: f64,
    transfer_probability: f64,
    unitary: DMatrix<C64>,
    noisy: Option<LindbladModel>,
    mech_occupation: f64,
    strong_coupling: bool,
}

fn plan_swap(spin: &SpinParams, p: &SystemParams, opts: &SwapOptions) -> Result<SwapPlan> {
    spin.validate()?;
    let tol = 1e-6 * p.omega_m.max(f64::MIN_POSITIVE);
    if spin.delta_e.abs() > tol || (spin.omega_d_prime.abs() - p.omega_m).abs() > tol {
        return Err(Error::Precondition(format!(
            "swap needs Δ_e = 0 and |Ω_d′| = ω_m (Δ_e = {:.4e}, Ω_d′ = {:.4e}, ω_m = {:.4e})",
            spin.delta_e, spin.omega_d_prime, p.omega_m
        )));
    }
    if !(spin.lambda > 0.0) {
        return Err(Error::param("lambda", "swap needs λ > 0"));
    }
    if opts.mech_dim < 2 {
        return Err(Error::InvalidDimension { dim: opts.mech_dim, reason: "swap needs at least two phonon levels" });
    }
    let layout = spin_mech_layout(opts.mech_dim)?;
    let basis = logical_basis(spin.omega_d_prime);
    let (h, lambda_jc) = match opts.level {
        SwapLevel::Jc => {
            let kind = if spin.omega_d_prime < 0.0 { JcKind::Conserving } else { JcKind::Anti };
            let lam = spin.lambda * JC_FROM_SPIN_MECH;
            (build_jc(lam, &layout, MECH, SPIN, kind)?, lam)
        }
        SwapLevel::Physical => {
            if !(spin.lambda < p.omega_m / 10.0) {
                return Err(Error::Precondition("λ must be below ω_m/10 for the lab-frame swap".into()));
            }
            (build_spin_mech(p, spin, &layout, MECH, SPIN)?, spin.lambda * JC_FROM_SPIN_MECH)
        }
    };
    // |n⟩|σ⟩ with σ given in the logical basis
    let ket = |n: usize, logical: usize| -> DVector<C64> {
        let mut v = DVector::zeros(layout.total_dim());
        for s in 0..2 {
            v[layout.flat_index(&[n, s])] = basis[(s, logical)];
        }
        v
    };
    let (src, dst) = match opts.direction {
        SwapDirection::SpinToMech => (ket(0, 1), ket(1, 0)),
        SwapDirection::MechToSpin => (ket(1, 0), ket(0, 1)),
    };
    let ground = ket(0, 0);
    let amp = |u: &DMatrix<C64>, a: &DVector<C64>, b: &DVector<C64>| a.dotc(&(u * b));
    let t_guess = PI / (2.0 * SIGMA_PM_NORM * lambda_jc);
    let time = match opts.time {
        Some(t) if t > 0.0 && t.is_finite() => t,
        Some(t) => return Err(Error::param("time", format!("must be positive and finite, got {t}"))),
        None => {
            let span = 2.0 * t_guess;
            // resolve the lab-frame oscillations at ω_m
            let n = match opts.level {
                SwapLevel::Jc => 401,
                SwapLevel::Physical => 401.max((20.0 * p.omega_m * span / TWO_PI).ceil() as usize),
            };
            maximize(|t| Ok(amp(&unitary(&h, t), &dst, &src).norm_sqr()), span / n as f64, span, n)?.0
        }
    };
    let u = unitary(&h, time);
    let a = amp(&u, &dst, &src);
    let phase = a.arg() - amp(&u, &ground, &ground).arg();
    let noisy = if opts.dissipative {
        let mut diss = thermal_dissipators(&layout, MECH, p.gamma_prime, p.n_bar_prime)?;
        if opts.level == SwapLevel::Physical {
            if spin.spin_decay > 0.0 {
                diss.push(Dissipator::new(lab_lowering(&layout)?, spin.spin_decay)?);
            }
            if spin.spin_dephasing > 0.0 {
                diss.push(Dissipator::new(spin_op(&layout, SPIN, &pauli(PauliAxis::Z))?, spin.spin_dephasing)?);
            }
        }
        Some(LindbladModel::new(h, diss)?)
    } else {
        None
    };
    Ok(SwapPlan {
        level: opts.level,
        direction: opts.direction,
        layout,
        basis,
        time,
        phase,
        transfer_probability: a.norm_sqr(),
        unitary: u,
        noisy,
        mech_occupation: opts.mech_occupation,
        strong_coupling: spin.strong_coupling(p.thermal_decoherence()),
    })
}

fn run_swap(plan: &SwapPlan, input: &DensityMatrix) -> Result<SwapResult> {
    let (input, lost) = resize_mode(input, QUBIT, 2)?;
    if lost > 1e-12 {
        log::warn!("swap input carried {lost:.3e} outside the qubit subspace");
    }
    let mech_dim = plan.layout.get(MECH)?.dim;
    let spin_layout = SpaceLayout::single(Subsystem::spin(SPIN))?;
    let g_proj = plan.basis.column(0) * plan.basis.column(0).adjoint();
    let (mech0, spin0) = match plan.direction {
        SwapDirection::SpinToMech => {
            let s = &plan.basis * input.matrix() * plan.basis.adjoint();
            (
                DensityMatrix::thermal(MECH, mech_dim, plan.mech_occupation)?,
                DensityMatrix::from_matrix_unchecked(spin_layout.clone(), s)?,
            )
        }
        SwapDirection::MechToSpin => {
            let (m, _) = resize_mode(&input, MECH, mech_dim)?;
            (m, DensityMatrix::from_matrix_unchecked(spin_layout.clone(), g_proj)?)
        }
    };
    let rho0 = mech0.tensor(&spin0)?;
    let rho = match &plan.noisy {
        None => {
            let m = &plan.unitary * rho0.matrix() * plan.unitary.adjoint();
            DensityMatrix::from_matrix_unchecked(plan.layout.clone(), m)?
        }
        Some(model) => {
            let opts = EvolveOptions { keep_states: false, ..EvolveOptions::default() };
            evolve(model, &rho0, plan.time, &Sampling::Endpoints, &opts)?.final_state().clone()
        }
    };
    let (output, logical) = match plan.direction {
        SwapDirection::SpinToMech => {
            let m = partial_trace(&rho, &[MECH])?;
            let m = conjugate_local(&m, &[MECH], &phase_rotation(mech_dim, -plan.phase))?;
            let block = m.matrix().view((0, 0), (2, 2)).into_owned();
            let layout = SpaceLayout::modes(&[(QUBIT, 2)])?;
            (m, DensityMatrix::from_matrix_unchecked(layout, block)?)
        }
        SwapDirection::MechToSpin => {
            let s = partial_trace(&rho, &[SPIN])?;
            let undo = &plan.basis * phase_rotation(2, -plan.phase) * plan.basis.adjoint();
            let s = conjugate_local(&s, &[SPIN], &undo)?;
            let q = plan.basis.adjoint() * s.matrix() * &plan.basis;
            let layout = SpaceLayout::modes(&[(QUBIT, 2)])?;
            (s, DensityMatrix::from_matrix_unchecked(layout, q)?)
        }
    };
    let fidelity = fidelity_metrics(&logical, &input)?.state_fidelity;
    Ok(SwapResult {
        direction: plan.direction,
        level: plan.level,
        time: plan.time,
        transfer_probability: plan.transfer_probability,
        phase: plan.phase,
        fidelity,
        output_logical: logical,
        output,
        unitary: plan.unitary.clone(),
        strong_coupling: plan.strong_coupling,
    })
}

/// Swaps a dressed-spin qubit into the mechanics or back. `input` is the
/// logical state on `(|g⟩, |e⟩)` (spin source) or `(|0⟩, |1⟩)` (mechanical
/// source).
pub fn spin_mech_swap(
    spin: &SpinParams,
    p: &SystemParams,
    input: &DensityMatrix,
    opts: &SwapOptions,
) -> Result<SwapResult> {
    let plan = plan_swap(spin, p, opts)?;
    run_swap(&plan, input)
}

#[derive(Clone, Debug)]
pub struct SpinTeleportOptions {
    /// Level, truncation and dissipation of both swaps.
    pub swap: SwapOptions,
    pub teleport: TeleportOptions,
    /// Occupation of both mechanical modes after cooling.
    pub mech_occupation: f64,
}

impl Default for SpinTeleportOptions {
    fn default() -> Self {
        SpinTeleportOptions { swap: SwapOptions::default(), teleport: TeleportOptions::default(), mech_occupation: 0.0 }
    }
}

/// Spin 1 → mechanics 1, teleport to mechanics 2, mechanics 2 → spin 2.
pub fn teleport_spin(
    alpha: C64,
    beta: C64,
    spin: &SpinParams,
    p: &SystemParams,
    opts: &SpinTeleportOptions,
    source: &mut MeasurementSource,
) -> Result<ProtocolReport> {
    if !(opts.mech_occupation < 0.1) {
        return Err(Error::Precondition(format!(
            "mechanical modes not cooled: ⟨n_m⟩ = {:.4} (needs < 0.1)",
            opts.mech_occupation
        )));
    }
    let input = logical_qubit(alpha, beta)?;
    let mut report = ProtocolReport::new("teleport-spin");
    if spin.omega_1 > 0.0 && spin.omega_2 > 0.0 {
        let (f1, f2) = (spin.omega_1 / TWO_PI, spin.omega_2 / TWO_PI);
        let ok = f1 > 500e6 && f2 > 500e6;
        report.note(format!("spin level spacings {:.4e} Hz and {:.4e} Hz; above 500 MHz: {ok}", f1, f2));
        report.flag("spin_spacing_above_500mhz", ok);
    } else {
        report.note("spin level spacings not set (desk-scaled parameters)");
    }
    let strong = spin.strong_coupling(p.thermal_decoherence());
    report.note(format!(
        "strong coupling λ > n̄γ_m: λ = {:.4e}, n̄γ_m = {:.4e} s⁻¹ -> {strong}",
        spin.lambda,
        p.thermal_decoherence()
    ));
    report.flag("strong_coupling", strong);
    report.segment("initialize spin 1", 0.0, "ideal");

    let out_opts = SwapOptions {
        direction: SwapDirection::SpinToMech,
        mech_occupation: opts.mech_occupation,
        ..opts.swap.clone()
    };
    let first = run_swap(&plan_swap(spin, p, &out_opts)?, &input)?;
    report.segment("swap spin 1 -> m1", first.time, format!("{:?}", first.level));
    report.metric("swap_in_fidelity", first.fidelity);

    let (runs, tele_report) = teleport_mixed(&first.output, &opts.teleport)?;
    for seg in tele_report.segments {
        report.segments.push(seg);
    }
    for (k, v) in tele_report.metrics {
        report.metric(&format!("teleport_{k}"), v);
    }
    let back = plan_swap(spin, p, &SwapOptions { direction: SwapDirection::MechToSpin, ..opts.swap.clone() })?;
    let mut fids = [0.0; 4];
    let mut probs = [0.0; 4];
    let mut finals = Vec::new();
    for run in &runs {
        let res = run_swap(&back, &run.output)?;
        let f = fidelity_metrics(&res.output_logical, &input)?.state_fidelity;
        fids[run.bits as usize] = f;
        probs[run.bits as usize] = run.probability;
        finals.push((run.bits, f, run.correction.clone(), res.time));
    }
    let bits = source.choose(&probs)?;
    let (_, f, corr, t_back) = finals.iter().find(|r| r.0 == bits).cloned().expect("sampled branch exists");
    report.segment("Bell readout (m1, a1)", 0.0, "projective");
    report.segment("correction on m2", 0.0, corr.clone());
    report.segment("swap m2 -> spin 2", t_back, format!("{:?}", opts.swap.level));
    report.measurement_record = vec![bits >> 1, bits & 1];
    report.correction_applied = Some(corr);
    let min = finals.iter().map(|r| r.1).fold(1.0, f64::min);
    report.metric("min_branch_fidelity", min);
    for (b, fb) in fids.iter().enumerate() {
        report.metric(&format!("branch_{b:02b}_fidelity"), *fb);
    }
    report.set_fidelity(f);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::random::haar_qubit;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn desk() -> (SystemParams, SpinParams) {
        let p = SystemParams::desk(1.0, 0.0, 0.0, 0.005, 0.05).unwrap();
        let s = SpinParams::desk(0.02, 0.0, 1.0, 0.0005, 0.01).unwrap();
        (p, s)
    }

    #[test]
    fn ground_state_is_stationary_under_jc() {
        let (p, s) = desk();
        let r =
            spin_mech_swap(&s, &p, &logical_qubit(c(1.0, 0.0), c(0.0, 0.0)).unwrap(), &SwapOptions::default()).unwrap();
        assert!((r.fidelity - 1.0).abs() < 1e-12);
        assert!((r.transfer_probability - 1.0).abs() < 1e-10);
    }

    #[test]
    fn jc_swap_time_and_fidelity() {
        let (p, s) = desk();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for sign in [1.0, -1.0] {
            let s = s.clone().with_drive(0.0, sign * p.omega_m);
            for _ in 0..5 {
                let (a, b) = haar_qubit(&mut rng);
                let input = logical_qubit(a, b).unwrap();
                let r = spin_mech_swap(&s, &p, &input, &SwapOptions::default()).unwrap();
                assert!((r.time - PI / s.lambda).abs() < 1e-6 / s.lambda, "{}", r.time);
                assert!(r.fidelity > 1.0 - 1e-9, "{}", r.fidelity);
                let back = SwapOptions { direction: SwapDirection::MechToSpin, ..SwapOptions::default() };
                let r2 = spin_mech_swap(&s, &p, &r.output, &back).unwrap();
                assert!(r2.fidelity > 1.0 - 1e-9);
            }
        }
    }

    #[test]
    fn lab_frame_swap_approaches_jc() {
        let (p, s) = desk();
        let r = spin_mech_swap(
            &s,
            &p,
            &logical_qubit(c(0.6, 0.0), c(0.0, 0.8)).unwrap(),
            &SwapOptions { level: SwapLevel::Physical, mech_dim: 4, ..SwapOptions::default() },
        )
        .unwrap();
        assert!((r.time * s.lambda / PI - 1.0).abs() < 0.05, "{}", r.time * s.lambda / PI);
        assert!(r.fidelity > 0.99, "{}", r.fidelity);
    }

    #[test]
    fn swap_preconditions() {
        let (p, s) = desk();
        let off = s.clone().with_drive(0.1, 1.0);
        let q = logical_qubit(c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        assert!(matches!(spin_mech_swap(&off, &p, &q, &SwapOptions::default()), Err(Error::Precondition(_))));
    }

    #[test]
    fn spin_teleport_ideal_and_damped() {
        let (mut p, s) = desk();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let (a, b) = haar_qubit(&mut rng);
            let r = teleport_spin(a, b, &s, &p, &SpinTeleportOptions::default(), &mut MeasurementSource::seeded(1))
                .unwrap();
            assert!(r.metrics["min_branch_fidelity"] > 1.0 - 1e-9, "{:?}", r.metrics);
        }
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut fids = Vec::new();
        for ratio in [0.01, 0.05, 0.2] {
            p.gamma_prime = ratio * s.lambda;
            let mut o = SpinTeleportOptions::default();
            o.swap.dissipative = true;
            let rep = teleport_spin(c(r, 0.0), c(0.0, r), &s, &p, &o, &mut MeasurementSource::Replay(0)).unwrap();
            fids.push(rep.final_fidelity);
        }
        assert!(fids[0] < 1.0 && fids[0] > fids[1] && fids[1] > fids[2], "{fids:?}");
    }

    #[test]
    fn peak_finder_on_synthetic_lines() {
        let x: Vec<f64> = (0..401).map(|k| -1.0 + 0.005 * k as f64).collect();
        let lor = |x: f64, x0: f64| 1.0 / (1.0 + ((x - x0) / 0.02).powi(2));
        let y: Vec<f64> = x.iter().map(|&v| 0.1 + lor(v, -0.8) + lor(v, 0.8)).collect();
        let peaks = find_peaks(&x, &y);
        assert_eq!(peaks.len(), 2);
        assert!((peaks[0].position + 0.8).abs() < 1e-9 && (peaks[1].position - 0.8).abs() < 1e-9);
        assert!((peaks[0].width - 0.04).abs() < 0.005);
        assert!(find_peaks(&x, &vec![1.0; 401]).is_empty());
    }

    #[test]
    fn esr_pair_and_single_peak() {
        let (p, s) = desk();
        let res = 0.02;
        let pair =
            esr_scan(&s, &p, &EsrOptions { fixed: 0.6, range: (-1.1, 1.1), resolution: res, ..Default::default() })
                .unwrap();
        assert_eq!(pair.expected.len(), 2);
        assert_eq!(pair.peaks.len(), 2, "{:?}", pair.peaks);
        for (peak, want) in pair.peaks.iter().zip(&pair.expected) {
            assert!((peak.position - want).abs() <= res, "{} vs {want}", peak.position);
        }
        assert!((pair.peaks[0].position + pair.peaks[1].position).abs() <= res);
        let single = esr_scan(
            &s,
            &p,
            &EsrOptions {
                sweep: Sweep::OmegaDPrime,
                fixed: 0.0,
                range: (0.5, 1.5),
                resolution: res,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(single.peaks.len(), 1, "{:?}", single.peaks);
        assert!((single.peaks[0].position - 1.0).abs() <= res);
    }

    #[test]
    fn esr_lines_broaden_with_mechanical_damping() {
        let (mut p, s) = desk();
        let opts = EsrOptions { fixed: 0.6, range: (0.5, 1.1), resolution: 0.01, ..Default::default() };
        let widths: Vec<f64> = [0.005, 0.03]
            .iter()
            .map(|&g| {
                p.gamma_prime = g;
                esr_scan(&s, &p, &opts).unwrap().peaks[0].width
            })
            .collect();
        assert!(widths[1] > widths[0], "{widths:?}");
    }

    #[test]
    fn esr_rejects_strong_lambda() {
        let (p, s) = desk();
        let mut strong = s.clone();
        strong.lambda = 0.2;
        assert!(matches!(esr_scan(&strong, &p, &EsrOptions::default()), Err(Error::Precondition(_))));
    }
}
