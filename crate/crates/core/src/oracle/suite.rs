//! Randomized engine-versus-oracle batch behind `verify-all`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    exact_liouville_evolve, exact_propagator, exact_unitary_evolve, fidelity_metrics, verify_teleportation,
    OracleReport, QubitCircuit,
};
use crate::error::Result;
use crate::fockspace::random::{haar_qubit, haar_state, random_density, random_hermitian};
use crate::fockspace::{DensityMatrix, FockOperator, SpaceLayout, Subsystem, C64};
use crate::lindblad::{
    cooling_model, evolve, steady_state, CoolingHamiltonian, Dissipator, EvolveOptions, LindbladModel, Sampling,
};
use crate::model::{build_dispersive, SystemParams};
use crate::par::Exec;
use crate::propagate;
use crate::protocols::{cphase, teleport_motional_state, CphaseModel, TeleportOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Randomized instances per engine operation.
    pub instances: usize,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { seed: 1, instances: 20, exec: Exec::Sequential }
    }
}

#[derive(Clone, Copy, Debug)]
enum Check {
    Unitary,
    Lindblad,
    ClosedLiouville,
    Stationary,
    Thermal,
    Dispersive,
    Teleport,
    Metrics,
    Cooling,
    Table,
    TableMutation,
}

const RANDOMIZED: [Check; 8] = [
    Check::Unitary,
    Check::Lindblad,
    Check::ClosedLiouville,
    Check::Stationary,
    Check::Thermal,
    Check::Dispersive,
    Check::Teleport,
    Check::Metrics,
];

/// Runs every check and returns one report per instance. Individual failures
/// show up as `pass == false`; only broken inputs produce `Err`.
pub fn verify_all(opts: &VerifyOptions) -> Result<Vec<OracleReport>> {
    let mut jobs: Vec<(Check, usize)> = vec![(Check::Cooling, 0), (Check::Table, 0), (Check::TableMutation, 0)];
    for check in RANDOMIZED {
        jobs.extend((0..opts.instances).map(|i| (check, i)));
    }
    let seed = opts.seed;
    opts.exec.try_map(&jobs, |&(check, i)| {
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ ((check as u64) << 32) ^ i as u64);
        run(check, i, &mut rng)
    })
}

fn small_layout(rng: &mut ChaCha8Rng) -> Result<SpaceLayout> {
    let a = rng.random_range(2..=3);
    if rng.random_bool(0.5) {
        SpaceLayout::new(vec![Subsystem::bosonic("a", a), Subsystem::bosonic("b", rng.random_range(2..=4))])
    } else {
        SpaceLayout::new(vec![Subsystem::bosonic("a", a + 1), Subsystem::spin("s")])
    }
}

fn random_model(layout: &SpaceLayout, rng: &mut ChaCha8Rng) -> Result<LindbladModel> {
    let n = layout.total_dim();
    let h = FockOperator::new_hermitian(layout.clone(), random_hermitian(n, rng))?;
    let jumps = (0..rng.random_range(1..=3))
        .map(|_| {
            let m = random_hermitian(n, rng) + random_hermitian(n, rng) * C64::new(0.0, 1.0);
            let op = FockOperator::new(layout.clone(), m * C64::new(1.0 / n as f64, 0.0))?;
            Dissipator::new(op, rng.random_range(0.05..0.5))
        })
        .collect::<Result<Vec<_>>>()?;
    LindbladModel::new(h, jumps)
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn run(check: Check, i: usize, rng: &mut ChaCha8Rng) -> Result<OracleReport> {
    let name = |q: &str| format!("{q}[{i}]");
    match check {
        Check::Unitary => {
            let layout = small_layout(rng)?;
            let h = FockOperator::new_hermitian(layout.clone(), random_hermitian(layout.total_dim(), rng))?;
            let psi = haar_state(&layout, rng);
            let t = rng.random_range(0.1..3.0);
            let engine = propagate::evolve_state(&h, &psi, t)?;
            let oracle = exact_unitary_evolve(&h, &psi, t)?;
            let d = (engine.amplitudes() - oracle.amplitudes()).norm();
            Ok(OracleReport::new(&name("unitary_evolve"), t, t, "state_l2", d, 1e-9))
        }
        Check::Lindblad => {
            let layout = small_layout(rng)?;
            let model = random_model(&layout, rng)?;
            let rho = random_density(&layout, rng);
            let t = rng.random_range(0.5..2.0);
            let engine = evolve(&model, &rho, t, &Sampling::Endpoints, &EvolveOptions::default())?;
            let oracle = exact_liouville_evolve(&model, &rho, t)?;
            let d = engine.final_state().trace_distance(&oracle)?;
            Ok(OracleReport::new(&name("lindblad_evolve"), t, t, "trace_distance", d, 1e-6))
        }
        Check::ClosedLiouville => {
            let layout = small_layout(rng)?;
            let h = FockOperator::new_hermitian(layout.clone(), random_hermitian(layout.total_dim(), rng))?;
            let psi = haar_state(&layout, rng);
            let t = rng.random_range(0.1..3.0);
            let lifted = exact_unitary_evolve(&h, &psi, t)?.to_density();
            let liouville = exact_liouville_evolve(&LindbladModel::closed(h)?, &psi.to_density(), t)?;
            let d = max_abs(&(lifted.matrix() - liouville.matrix()));
            Ok(OracleReport::new(&name("oracle_self_consistency"), t, t, "max_abs", d, 1e-10))
        }
        Check::Stationary => {
            let layout = small_layout(rng)?;
            let model = random_model(&layout, rng)?;
            let ss = steady_state(&model)?;
            let later = exact_liouville_evolve(&model, &ss, 1.0)?;
            let d = ss.trace_distance(&later)?;
            Ok(OracleReport::new(
                &name("steady_state_stationary"),
                ss.purity(),
                later.purity(),
                "trace_distance",
                d,
                1e-8,
            ))
        }
        Check::Thermal => {
            let dim = rng.random_range(4..=12);
            let kappa = rng.random_range(0.1..1.0);
            let n_bar = rng.random_range(0.0..1.0);
            let layout = SpaceLayout::single(Subsystem::bosonic("m", dim))?;
            let diss = crate::lindblad::thermal_dissipators(&layout, "m", kappa, n_bar)?;
            let model = LindbladModel::new(FockOperator::zeros(&layout), diss)?;
            let ss = steady_state(&model)?;
            let analytic = DensityMatrix::thermal("m", dim, n_bar)?;
            let d = ss.trace_distance(&analytic)?;
            Ok(OracleReport::new(&name("thermal_steady_state"), n_bar, n_bar, "trace_distance", d, 1e-9))
        }
        Check::Dispersive => {
            let g = rng.random_range(0.5..2.0);
            let delta = g * rng.random_range(5.0..40.0);
            let dim = rng.random_range(2..=4);
            let seg = cphase(("a", "b"), g, delta, CphaseModel::Dispersive, dim)?;
            let h = build_dispersive(g, delta, &seg.layout, "a", "b")?;
            let u = exact_propagator(&h, seg.duration)?;
            let d = max_abs(&(&seg.unitary - u));
            Ok(OracleReport::new(&name("dispersive_cphase"), seg.conditional_phase, PI, "max_abs", d, 1e-9))
        }
        Check::Teleport => {
            let (alpha, beta) = haar_qubit(rng);
            let runs = teleport_motional_state(alpha, beta, &TeleportOptions::default())?;
            let fid = runs.iter().map(|r| r.fidelity).fold(1.0, f64::min);
            let check = runs.iter().map(|r| r.checkpoint_fidelity).fold(1.0, f64::min);
            let d = (1.0 - fid).max(1.0 - check);
            Ok(OracleReport::new(&name("teleport_branches"), fid, 1.0, "infidelity", d, 1e-9))
        }
        Check::Metrics => {
            let layout = small_layout(rng)?;
            let (rho, sigma) = (random_density(&layout, rng), random_density(&layout, rng));
            let m = fidelity_metrics(&rho, &sigma)?;
            let lower = 1.0 - m.state_fidelity.sqrt();
            let upper = (1.0 - m.state_fidelity).max(0.0).sqrt();
            let violation = (lower - m.trace_distance).max(m.trace_distance - upper).max(0.0);
            let engine = rho.trace_distance(&sigma)?;
            let d = violation.max((engine - m.trace_distance).abs());
            Ok(OracleReport::new(&name("fidelity_bounds"), engine, m, "bound_violation", d, 1e-10))
        }
        Check::Cooling => {
            let p = SystemParams::desk(1.0, 0.1, 1.0, 0.02, 1.0)?;
            let layout = SpaceLayout::modes(&[("a", 3), ("m", 4)])?;
            let model = cooling_model(&p, &layout, "a", "m", CoolingHamiltonian::Beamsplitter)?;
            let rho = DensityMatrix::thermal("a", 3, 0.0)?.tensor(&DensityMatrix::thermal("m", 4, 1.0)?)?;
            let t = 10.0;
            let engine = evolve(&model, &rho, t, &Sampling::Endpoints, &EvolveOptions::default())?;
            let oracle = exact_liouville_evolve(&model, &rho, t)?;
            let d = engine.final_state().trace_distance(&oracle)?;
            Ok(OracleReport::new("cooling_model_evolve", t, t, "trace_distance", d, 1e-6))
        }
        Check::Table => {
            let (report, table) = verify_teleportation(&QubitCircuit::motional())?;
            let d = if table.is_total() { report.distance } else { 1.0 };
            Ok(OracleReport::new(
                "teleport_correction_table",
                table,
                report.oracle_value,
                "max_infidelity",
                d,
                report.tolerance,
            ))
        }
        Check::TableMutation => {
            let found = verify_teleportation(&QubitCircuit::motional().with_cphase(PI / 2.0)).is_ok();
            let d = if found { 1.0 } else { 0.0 };
            Ok(OracleReport::new("teleport_mutation_rejected", !found, true, "mismatch", d, 0.0))
        }
    }
}

/// True when every report passed.
pub fn all_pass(reports: &[OracleReport]) -> bool {
    reports.iter().all(|r| r.pass)
}
