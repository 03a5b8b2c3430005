//! Experiment pipelines built from the model and engine: sideband cooling,
//! state transfer, teleportation of motional and spin qubits, and the ESR
//! scan.
//!
//! Each protocol runs at one of two levels. The qubit level uses ideal
//! two-level gates; the physical level evolves truncated Fock spaces under
//! the model Hamiltonians and, optionally, dissipation. Both agree in the
//! ideal limit.

mod gates;
mod spin;
mod teleport;
mod transfer;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use crate::oracle::{CorrectionTable, FrameGate, Pauli};
pub use gates::{
    apply_cz, bell_measure, cphase, gate_fidelity_to_cz, hadamard, hadamard_matrix, measure_pair, phase_rotation,
    prepare_entangled_lc, prepare_entangled_lc_in, CphaseModel, CphaseSegment, MeasurementOutcome,
};
pub use spin::{
    esr_model, esr_scan, logical_basis, logical_qubit, spin_mech_swap, teleport_spin, EsrOptions, Spectrum,
    SpectrumPeak, SpinTeleportOptions, SwapDirection, SwapLevel, SwapOptions, SwapResult, Sweep,
};
pub use teleport::{
    teleport_mixed, teleport_motional, teleport_motional_state, TeleportLevel, TeleportNoise, TeleportOptions,
    TeleportRun,
};
pub use transfer::{
    prepare_motional_superposition, sideband_cool, transfer_state, CoolModel, CoolOptions, SuperpositionOptions,
    TransferOptions, TransferResult,
};

/// One piecewise-constant stage of a protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub label: String,
    /// Seconds; zero for instantaneous ideal gates.
    pub duration: f64,
    pub model: String,
}

/// Version tag written into every serialized [`ProtocolReport`].
pub const REPORT_SCHEMA: &str = "electromech/report-v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub schema: String,
    pub scenario: String,
    pub segments: Vec<Segment>,
    pub final_fidelity: f64,
    /// `(time s, ⟨a_m†a_m⟩)` samples.
    pub phonon_trajectory: Vec<[f64; 2]>,
    pub measurement_record: Vec<u8>,
    pub correction_applied: Option<String>,
    pub seed: Option<u64>,
    /// Named scalar diagnostics (checkpoint fidelity, leakage, candidate
    /// times, predicates as 0/1).
    pub metrics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl ProtocolReport {
    pub fn new(scenario: &str) -> Self {
        ProtocolReport {
            schema: REPORT_SCHEMA.to_string(),
            scenario: scenario.to_string(),
            segments: Vec::new(),
            final_fidelity: 0.0,
            phonon_trajectory: Vec::new(),
            measurement_record: Vec::new(),
            correction_applied: None,
            seed: None,
            metrics: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn segment(&mut self, label: &str, duration: f64, model: impl Into<String>) {
        self.segments.push(Segment { label: label.to_string(), duration, model: model.into() });
    }

    pub fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_string(), value);
    }

    pub fn flag(&mut self, name: &str, value: bool) {
        self.metric(name, if value { 1.0 } else { 0.0 });
    }

    pub fn note(&mut self, text: impl Into<String>) {
        let text = text.into();
        log::info!("{}: {}", self.scenario, text);
        self.notes.push(text);
    }

    pub fn set_fidelity(&mut self, f: f64) {
        self.final_fidelity = f.clamp(0.0, 1.0);
    }
}

/// Maximizes `f` on `[lo, hi]`: a uniform grid of `n` points, then golden
/// section on the bracket around the best grid point.
pub(crate) fn maximize<F>(mut f: F, lo: f64, hi: f64, n: usize) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let n = n.max(3);
    let step = (hi - lo) / (n - 1) as f64;
    let mut best = (lo, f64::MIN);
    for k in 0..n {
        let x = lo + step * k as f64;
        let v = f(x)?;
        if v > best.1 {
            best = (x, v);
        }
    }
    let (mut a, mut b) = ((best.0 - step).max(lo), (best.0 + step).min(hi));
    let gr = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - gr * (b - a);
    let mut x2 = a + gr * (b - a);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    for _ in 0..60 {
        if b - a <= 1e-13 * b.abs().max(1e-300) {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = f(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = f(x1)?;
        }
    }
    let x = 0.5 * (a + b);
    let v = f(x)?;
    Ok(if v >= best.1 { (x, v) } else { best })
}

/// Randomness for measurement outcomes: seeded sampling, or a forced branch.
#[derive(Clone, Debug)]
pub enum MeasurementSource {
    Sample(Box<ChaCha8Rng>),
    Replay(u8),
}

impl MeasurementSource {
    pub fn seeded(seed: u64) -> Self {
        MeasurementSource::Sample(Box::new(ChaCha8Rng::seed_from_u64(seed)))
    }

    /// Picks an outcome from unnormalized branch weights.
    pub fn choose(&mut self, weights: &[f64; 4]) -> Result<u8> {
        match self {
            MeasurementSource::Replay(bits) => {
                let b = *bits & 3;
                if weights[b as usize] < 1e-14 {
                    return Err(Error::ZeroProbabilityBranch(b));
                }
                Ok(b)
            }
            MeasurementSource::Sample(rng) => {
                let total: f64 = weights.iter().sum();
                if !(total > 0.0) {
                    return Err(Error::InvalidState("all measurement branches have zero weight".into()));
                }
                let u = rng.random::<f64>() * total;
                let mut acc = 0.0;
                for (k, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc && *w > 0.0 {
                        return Ok(k as u8);
                    }
                }
                Ok(weights.iter().rposition(|&w| w > 0.0).expect("positive total weight") as u8)
            }
        }
    }
}
