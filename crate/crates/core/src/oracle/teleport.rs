//! Brute-force verification of the qubit-level teleportation circuit.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::OracleReport;
use crate::error::{Error, Result};
use crate::fockspace::C64;

fn cz(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Z,
    XZ,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Z, Pauli::XZ];

    pub fn matrix(self) -> DMatrix<C64> {
        let (o, l) = (cz(0.0, 0.0), cz(1.0, 0.0));
        let x = DMatrix::from_row_slice(2, 2, &[o, l, l, o]);
        let z = DMatrix::from_row_slice(2, 2, &[l, o, o, -l]);
        match self {
            Pauli::I => DMatrix::identity(2, 2),
            Pauli::X => x,
            Pauli::Z => z,
            Pauli::XZ => x * z,
        }
    }
}

/// Branch-independent gate applied after the Pauli correction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrameGate {
    I,
    H,
}

impl FrameGate {
    pub fn matrix(self) -> DMatrix<C64> {
        match self {
            FrameGate::I => DMatrix::identity(2, 2),
            FrameGate::H => hadamard(),
        }
    }
}

pub fn hadamard() -> DMatrix<C64> {
    let r = cz(FRAC_1_SQRT_2, 0.0);
    DMatrix::from_row_slice(2, 2, &[r, r, r, -r])
}

/// Outcome bits (first measured qubit, second measured qubit) → Pauli, then
/// the frame gate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionTable {
    pub frame: FrameGate,
    pub entries: BTreeMap<String, Pauli>,
}

impl CorrectionTable {
    pub fn key(bits: u8) -> String {
        format!("{:02b}", bits & 3)
    }

    pub fn pauli(&self, bits: u8) -> Pauli {
        self.entries[&CorrectionTable::key(bits)]
    }

    /// Full correction `F · P` for an outcome.
    pub fn operator(&self, bits: u8) -> DMatrix<C64> {
        self.frame.matrix() * self.pauli(bits).matrix()
    }

    pub fn gate_name(&self, bits: u8) -> String {
        match self.frame {
            FrameGate::I => format!("{:?}", self.pauli(bits)),
            FrameGate::H => format!("H*{:?}", self.pauli(bits)),
        }
    }

    pub fn is_total(&self) -> bool {
        (0..4u8).all(|b| self.entries.contains_key(&CorrectionTable::key(b)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    H(usize),
    X(usize),
    Z(usize),
    /// `diag(1, 1, 1, e^{iφ})` on (first, second).
    CPhase(usize, usize, f64),
    Swap(usize, usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitCircuit {
    pub qubits: Vec<String>,
    pub input: usize,
    /// Pair prepared in `(|01⟩ + |10⟩)/√2`.
    pub resource: Option<(usize, usize)>,
    pub gates: Vec<Gate>,
    /// Number of gates after which the checkpoint state is taken.
    pub checkpoint_after: usize,
    pub measured: (usize, usize),
    pub output: usize,
}

impl QubitCircuit {
    /// Qubits `(m1, a1, a2, m2)`: transfer `a2 → m2`, CZ on `(m1, a1)`,
    /// Hadamards on `m1` and `a1`, readout of `(m1, a1)`.
    pub fn motional() -> Self {
        QubitCircuit {
            qubits: ["m1", "a1", "a2", "m2"].iter().map(|s| s.to_string()).collect(),
            input: 0,
            resource: Some((1, 2)),
            gates: vec![Gate::Swap(2, 3), Gate::CPhase(0, 1, PI), Gate::H(0), Gate::H(1)],
            checkpoint_after: 2,
            measured: (0, 1),
            output: 3,
        }
    }

    /// The same circuit with the conditional phase replaced by `φ`.
    pub fn with_cphase(mut self, phase: f64) -> Self {
        for g in &mut self.gates {
            if let Gate::CPhase(_, _, p) = g {
                *p = phase;
            }
        }
        self
    }

    pub fn n(&self) -> usize {
        self.qubits.len()
    }

    /// Initial state for input `α|0⟩ + β|1⟩`.
    pub fn initial_state(&self, alpha: C64, beta: C64) -> DVector<C64> {
        let n = self.n();
        let mut psi = DVector::zeros(1 << n);
        let bit = |q: usize| 1usize << (n - 1 - q);
        let amp = |idx: usize| if idx & bit(self.input) != 0 { beta } else { alpha };
        let r = cz(FRAC_1_SQRT_2, 0.0);
        match self.resource {
            Some((p, q)) => {
                for inp in [0, bit(self.input)] {
                    psi[inp | bit(q)] += amp(inp) * r;
                    psi[inp | bit(p)] += amp(inp) * r;
                }
            }
            None => {
                psi[0] += alpha;
                psi[bit(self.input)] += beta;
            }
        }
        psi
    }

    pub fn apply(&self, gate: &Gate, psi: &DVector<C64>) -> DVector<C64> {
        let n = self.n();
        let bit = |q: usize| 1usize << (n - 1 - q);
        let mut out = DVector::zeros(psi.len());
        match *gate {
            Gate::H(q) | Gate::X(q) | Gate::Z(q) => {
                let u = match gate {
                    Gate::H(_) => hadamard(),
                    Gate::X(_) => Pauli::X.matrix(),
                    _ => Pauli::Z.matrix(),
                };
                for idx in 0..psi.len() {
                    let b = usize::from(idx & bit(q) != 0);
                    let base = idx & !bit(q);
                    for nb in 0..2 {
                        out[base | (nb * bit(q))] += u[(nb, b)] * psi[idx];
                    }
                }
            }
            Gate::CPhase(a, b, phi) => {
                for idx in 0..psi.len() {
                    let both = idx & bit(a) != 0 && idx & bit(b) != 0;
                    out[idx] = if both { psi[idx] * C64::from_polar(1.0, phi) } else { psi[idx] };
                }
            }
            Gate::Swap(a, b) => {
                for idx in 0..psi.len() {
                    let (ba, bb) = (idx & bit(a) != 0, idx & bit(b) != 0);
                    let mut j = idx & !bit(a) & !bit(b);
                    if ba {
                        j |= bit(b);
                    }
                    if bb {
                        j |= bit(a);
                    }
                    out[j] = psi[idx];
                }
            }
        }
        out
    }

    /// `(checkpoint, pre-measurement)` states.
    pub fn run(&self, alpha: C64, beta: C64) -> (DVector<C64>, DVector<C64>) {
        let mut psi = self.initial_state(alpha, beta);
        let mut checkpoint = psi.clone();
        for (k, g) in self.gates.iter().enumerate() {
            psi = self.apply(g, &psi);
            if k + 1 == self.checkpoint_after {
                checkpoint = psi.clone();
            }
        }
        (checkpoint, psi)
    }

    /// Probability and normalized reduced density matrix of the output qubit
    /// for a measurement outcome.
    pub fn branch(&self, psi: &DVector<C64>, bits: u8) -> (f64, Option<DMatrix<C64>>) {
        let n = self.n();
        let bit = |q: usize| 1usize << (n - 1 - q);
        let (q1, q2) = self.measured;
        let want = ((bits >> 1) & 1 == 1, bits & 1 == 1);
        let mut rho = DMatrix::<C64>::zeros(2, 2);
        let mut prob = 0.0;
        for i in 0..psi.len() {
            if ((i & bit(q1) != 0), (i & bit(q2) != 0)) != want {
                continue;
            }
            prob += psi[i].norm_sqr();
            let oi = usize::from(i & bit(self.output) != 0);
            let rest_i = i & !bit(self.output);
            for oj in 0..2 {
                let j = rest_i | (oj * bit(self.output));
                rho[(oi, oj)] += psi[i] * psi[j].conj();
            }
        }
        if prob < 1e-14 {
            return (prob, None);
        }
        (prob, Some(rho / cz(prob, 0.0)))
    }
}

/// The checkpoint written out explicitly on `(m1, a1, a2, m2)` with `a2` in
/// vacuum: `(α|0,0,1⟩ + α|0,1,0⟩ + β|1,0,1⟩ − β|1,1,0⟩)/√2` over `(m1, a1, m2)`.
pub fn checkpoint_state(alpha: C64, beta: C64) -> DVector<C64> {
    let mut psi = DVector::zeros(16);
    let idx = |m1: usize, a1: usize, m2: usize| (m1 << 3) | (a1 << 2) | m2;
    let r = cz(FRAC_1_SQRT_2, 0.0);
    psi[idx(0, 0, 1)] = alpha * r;
    psi[idx(0, 1, 0)] = alpha * r;
    psi[idx(1, 0, 1)] = beta * r;
    psi[idx(1, 1, 0)] = -beta * r;
    psi
}

fn probe_inputs() -> [(C64, C64); 4] {
    let r = FRAC_1_SQRT_2;
    [(cz(1.0, 0.0), cz(0.0, 0.0)), (cz(0.0, 0.0), cz(1.0, 0.0)), (cz(r, 0.0), cz(r, 0.0)), (cz(r, 0.0), cz(0.0, r))]
}

fn pure_fidelity(rho: &DMatrix<C64>, alpha: C64, beta: C64) -> f64 {
    let v = DVector::from_vec(vec![alpha, beta]);
    (v.adjoint() * rho * &v)[(0, 0)].re
}

/// Enumerates outcome branches × probe inputs {|0⟩, |1⟩, |+⟩, |+i⟩} and
/// solves for the frame gate and per-branch Pauli that recover every input.
pub fn verify_teleportation(circuit: &QubitCircuit) -> Result<(OracleReport, CorrectionTable)> {
    let runs: Vec<DVector<C64>> = probe_inputs().iter().map(|&(a, b)| circuit.run(a, b).1).collect();
    let mut solutions: Vec<CorrectionTable> = Vec::new();
    let mut worst = 0.0f64;
    for frame in [FrameGate::I, FrameGate::H] {
        let mut entries = BTreeMap::new();
        let mut frame_worst = 0.0f64;
        for bits in 0..4u8 {
            let mut fixes = Vec::new();
            for p in Pauli::ALL {
                let corr = frame.matrix() * p.matrix();
                let mut ok = true;
                let mut seen = false;
                let mut branch_worst = 0.0f64;
                for (psi, &(a, b)) in runs.iter().zip(probe_inputs().iter()) {
                    let (prob, rho) = circuit.branch(psi, bits);
                    let Some(rho) = rho else { continue };
                    if prob < 1e-12 {
                        continue;
                    }
                    seen = true;
                    let out = &corr * rho * corr.adjoint();
                    let infid = 1.0 - pure_fidelity(&out, a, b);
                    branch_worst = branch_worst.max(infid);
                    ok &= infid <= 1e-9;
                }
                if ok && seen {
                    fixes.push((p, branch_worst));
                }
            }
            if fixes.len() == 1 {
                entries.insert(CorrectionTable::key(bits), fixes[0].0);
                frame_worst = frame_worst.max(fixes[0].1);
            } else if fixes.len() > 1 {
                return Err(Error::Verification(format!(
                    "branch {:02b} admits {} corrections; the outcome carries no information",
                    bits,
                    fixes.len()
                )));
            }
        }
        let table = CorrectionTable { frame, entries };
        if table.is_total() {
            worst = worst.max(frame_worst);
            solutions.push(table);
        }
    }
    match solutions.len() {
        0 => Err(Error::Verification("no Pauli correction table recovers every probe input".into())),
        1 => {
            let table = solutions.pop().expect("one solution");
            let report = OracleReport::new(
                "teleportation correction table",
                &table,
                "exhaustive: 4 branches x 4 probe inputs",
                "max branch infidelity",
                worst,
                1e-9,
            );
            Ok((report, table))
        }
        k => Err(Error::Verification(format!("{k} distinct correction tables fit; frame is ambiguous"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn motional_circuit_has_unique_table() {
        let (report, table) = verify_teleportation(&QubitCircuit::motional()).unwrap();
        assert!(report.pass);
        assert_eq!(table.frame, FrameGate::H);
        assert_eq!(table.pauli(0b00), Pauli::X);
        assert_eq!(table.pauli(0b01), Pauli::XZ);
        assert_eq!(table.pauli(0b10), Pauli::I);
        assert_eq!(table.pauli(0b11), Pauli::Z);
    }

    #[test]
    fn checkpoint_matches_written_state() {
        let c = QubitCircuit::motional();
        let (a, b) = (cz(0.6, 0.0), cz(0.0, 0.8));
        let (chk, _) = c.run(a, b);
        assert!((chk - checkpoint_state(a, b)).norm() < 1e-15);
    }

    #[test]
    fn corrupted_cphase_fails() {
        assert!(verify_teleportation(&QubitCircuit::motional().with_cphase(0.0)).is_err());
        assert!(verify_teleportation(&QubitCircuit::motional().with_cphase(PI / 2.0)).is_err());
    }

    #[test]
    fn identity_circuit_fails() {
        let c = QubitCircuit { gates: Vec::new(), ..QubitCircuit::motional() };
        assert!(verify_teleportation(&c).is_err());
    }

    #[test]
    fn branches_are_equiprobable() {
        let c = QubitCircuit::motional();
        let (_, psi) = c.run(cz(0.6, 0.0), cz(0.8, 0.0));
        for bits in 0..4 {
            assert!((c.branch(&psi, bits).0 - 0.25).abs() < 1e-14);
        }
    }
}
