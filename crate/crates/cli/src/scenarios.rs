//! Scenario runners. Each returns its artifacts in memory; nothing touches
//! the filesystem here.

use std::fmt::Write as _;

use electromech::fockspace::random::haar_qubit;
use electromech::lindblad::CoolingHamiltonian;
use electromech::model::constants::TWO_PI;
use electromech::model::DetuningConvention;
use electromech::oracle::{all_pass, verify_all, OracleReport, VerifyOptions};
use electromech::protocols::{
    esr_scan, prepare_motional_superposition, sideband_cool, teleport_motional, teleport_motional_state, teleport_spin,
    CoolModel, CoolOptions, CphaseModel, EsrOptions, MeasurementSource, ProtocolReport, SpinTeleportOptions,
    SuperpositionOptions, SwapLevel, SwapOptions, Sweep, TeleportLevel, TeleportNoise, TeleportOptions,
};
use electromech::{Exec, Result, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{Scenario, ScenarioConfig};

/// Output of one run. `json` and `csv` hold `(file name, contents)`.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub json: Vec<(String, String)>,
    pub csv: Vec<(String, String)>,
    pub stdout: Option<String>,
    /// Set by `verify-all` when any oracle comparison failed.
    pub verification_failed: bool,
}

impl Artifacts {
    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.json.push((name.to_string(), text));
        Ok(())
    }

    fn csv(&mut self, name: &str, text: String) {
        self.csv.push((name.to_string(), text));
    }

    fn report(&mut self, report: &ProtocolReport) -> Result<()> {
        self.json("report.json", report)?;
        let mut metrics = String::from("name,value\n");
        for (k, v) in &report.metrics {
            let _ = writeln!(metrics, "{k},{v:.17e}");
        }
        self.csv("metrics.csv", metrics);
        if !report.phonon_trajectory.is_empty() {
            let mut traj = String::from("time,phonons\n");
            for [t, n] in &report.phonon_trajectory {
                let _ = writeln!(traj, "{t:.17e},{n:.17e}");
            }
            self.csv("trajectory.csv", traj);
        }
        Ok(())
    }
}

pub fn run(cfg: &ScenarioConfig, exec: Exec) -> Result<Artifacts> {
    match cfg.scenario {
        Scenario::Cool => cool(cfg),
        Scenario::Superpose => superpose(cfg),
        Scenario::TeleportMotional => teleport(cfg),
        Scenario::EsrScan => esr(cfg, exec),
        Scenario::TeleportSpin => spin_teleport(cfg),
        Scenario::VerifyAll => verify(cfg, exec),
        Scenario::Params => Ok(params(cfg)),
    }
}

fn cool(cfg: &ScenarioConfig) -> Result<Artifacts> {
    let model = match cfg.choice("model", &["full", "linearized", "eliminated"], "full")? {
        "full" => CoolModel::Full(CoolingHamiltonian::Beamsplitter),
        "linearized" => CoolModel::Full(CoolingHamiltonian::Linearized(DetuningConvention::DriveFrame)),
        _ => CoolModel::Eliminated,
    };
    let defaults = CoolOptions::default();
    let opts = CoolOptions {
        n_init: cfg.nonnegative("n_init", cfg.system.n_bar)?,
        duration: cfg.number("duration")?,
        lc_dim: cfg.dim("lc", defaults.lc_dim),
        mech_dim: cfg.dim("mech", defaults.mech_dim),
        samples: cfg.integer("samples")?.unwrap_or(defaults.samples),
        model,
        ..defaults
    };
    let mut report = sideband_cool(&cfg.system, &opts)?;
    report.seed = Some(cfg.seed);
    let mut out = Artifacts::default();
    out.report(&report)?;
    Ok(out)
}

fn superpose(cfg: &ScenarioConfig) -> Result<Artifacts> {
    let defaults = SuperpositionOptions::default();
    let opts = SuperpositionOptions {
        mech_occupation: cfg.nonnegative("mech_occupation", 0.0)?,
        dissipative: cfg.flag("dissipative", false)?,
        lc_dim: cfg.dim("lc", defaults.lc_dim),
        mech_dim: cfg.dim("mech", defaults.mech_dim),
        time: cfg.number("time")?,
        ..defaults
    };
    let mut report = prepare_motional_superposition(&cfg.system, &opts)?;
    report.seed = Some(cfg.seed);
    let mut out = Artifacts::default();
    out.report(&report)?;
    Ok(out)
}

/// Explicit `(α, β)` when any amplitude key is set, otherwise a Haar-random
/// qubit drawn from the seed.
fn qubit_input(cfg: &ScenarioConfig) -> Result<(C64, C64)> {
    let keys = ["alpha_re", "alpha_im", "beta_re", "beta_im"];
    if keys.iter().any(|k| cfg.has(k)) {
        let v: Vec<f64> = keys.iter().map(|k| cfg.number_or(k, 0.0)).collect::<Result<_>>()?;
        let norm: f64 = v.iter().map(|x| x * x).sum();
        if (norm - 1.0).abs() > 1e-10 {
            let line = keys.iter().find(|k| cfg.has(k)).map_or(0, |k| cfg.line(k));
            return Err(electromech::Error::Parse {
                line,
                message: format!("input amplitudes have |α|² + |β|² = {norm}, expected 1"),
            });
        }
        return Ok((C64::new(v[0], v[1]), C64::new(v[2], v[3])));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_0001);
    Ok(haar_qubit(&mut rng))
}

fn source(cfg: &ScenarioConfig) -> Result<MeasurementSource> {
    Ok(match cfg.integer("branch")? {
        Some(b) if b < 4 => MeasurementSource::Replay(b as u8),
        Some(b) => {
            return Err(electromech::Error::Parse {
                line: cfg.line("branch"),
                message: format!("`branch` must be 0..=3, got {b}"),
            })
        }
        None => MeasurementSource::seeded(cfg.seed),
    })
}

fn teleport_options(cfg: &ScenarioConfig) -> Result<TeleportOptions> {
    let p = &cfg.system;
    let defaults = TeleportOptions::default();
    let g = if p.g > 0.0 { p.g } else { defaults.g };
    let level = match cfg.choice("level", &["qubit", "physical"], "qubit")? {
        "qubit" => TeleportLevel::Qubit,
        _ => TeleportLevel::Physical,
    };
    let cphase_model = match cfg.choice("cphase_model", &["dispersive", "detuned"], "dispersive")? {
        "dispersive" => CphaseModel::Dispersive,
        _ => CphaseModel::Detuned,
    };
    let noise =
        cfg.flag("noisy", false)?.then_some(TeleportNoise { kappa: p.kappa, gamma_m: p.gamma_m, n_bar: p.n_bar });
    Ok(TeleportOptions {
        level,
        g,
        delta_disp: if p.delta_disp != 0.0 { p.delta_disp } else { 20.0 * g },
        cphase_model,
        dim: cfg.dim("mech", defaults.dim),
        noise,
        leak_tol: cfg.nonnegative("leak_tol", defaults.leak_tol)?,
        table: None,
    })
}

fn teleport(cfg: &ScenarioConfig) -> Result<Artifacts> {
    let (alpha, beta) = qubit_input(cfg)?;
    let opts = teleport_options(cfg)?;
    let mut report = teleport_motional(alpha, beta, &opts, &mut source(cfg)?)?;
    report.seed = Some(cfg.seed);
    report.metric("input_alpha_re", alpha.re);
    report.metric("input_alpha_im", alpha.im);
    report.metric("input_beta_re", beta.re);
    report.metric("input_beta_im", beta.im);
    let runs = teleport_motional_state(alpha, beta, &opts)?;
    let mut branches = String::from("bits,probability,fidelity,checkpoint_fidelity,leaked,correction\n");
    for r in &runs {
        let _ = writeln!(
            branches,
            "{:02b},{:.17e},{:.17e},{:.17e},{:.17e},{}",
            r.bits, r.probability, r.fidelity, r.checkpoint_fidelity, r.leaked, r.correction
        );
    }
    let mut out = Artifacts::default();
    out.report(&report)?;
    out.json("branches.json", &runs)?;
    out.csv("branches.csv", branches);
    Ok(out)
}

fn esr(cfg: &ScenarioConfig, exec: Exec) -> Result<Artifacts> {
    let sweep = match cfg.choice("sweep", &["delta_e", "omega_d_prime"], "delta_e")? {
        "delta_e" => Sweep::DeltaE,
        _ => Sweep::OmegaDPrime,
    };
    let fixed_default = match sweep {
        Sweep::DeltaE => cfg.spin.omega_d_prime,
        Sweep::OmegaDPrime => cfg.spin.delta_e,
    };
    let range = (cfg.number_or("range_min", 0.0)?, cfg.number_or("range_max", 0.0)?);
    let defaults = EsrOptions::default();
    let opts = EsrOptions {
        sweep,
        fixed: cfg.number_or("fixed", fixed_default)?,
        range,
        resolution: cfg.number_or("resolution", 0.0)?,
        mech_dim: cfg.dim("mech", defaults.mech_dim),
        exec,
        ..defaults
    };
    let spectrum = esr_scan(&cfg.spin, &cfg.system, &opts)?;
    let mut peaks = String::from("position,refined_position,height,prominence,width\n");
    for p in &spectrum.peaks {
        let _ = writeln!(
            peaks,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            p.position, p.refined_position, p.height, p.prominence, p.width
        );
    }
    let mut out = Artifacts::default();
    out.json("spectrum.json", &spectrum)?;
    out.csv("spectrum.csv", spectrum.to_csv());
    out.csv("peaks.csv", peaks);
    Ok(out)
}

fn spin_teleport(cfg: &ScenarioConfig) -> Result<Artifacts> {
    let (alpha, beta) = qubit_input(cfg)?;
    let level = match cfg.choice("swap_level", &["jc", "physical"], "jc")? {
        "jc" => SwapLevel::Jc,
        _ => SwapLevel::Physical,
    };
    let mech_occupation = cfg.nonnegative("mech_occupation", 0.0)?;
    let opts = SpinTeleportOptions {
        swap: SwapOptions {
            level,
            mech_dim: cfg.dim("mech", SwapOptions::default().mech_dim),
            dissipative: cfg.flag("dissipative", false)?,
            mech_occupation,
            ..SwapOptions::default()
        },
        teleport: TeleportOptions::default(),
        mech_occupation,
    };
    let mut report = teleport_spin(alpha, beta, &cfg.spin, &cfg.system, &opts, &mut source(cfg)?)?;
    report.seed = Some(cfg.seed);
    let mut out = Artifacts::default();
    out.report(&report)?;
    Ok(out)
}

fn verify(cfg: &ScenarioConfig, exec: Exec) -> Result<Artifacts> {
    let opts = VerifyOptions {
        seed: cfg.seed,
        instances: cfg.integer("instances")?.unwrap_or(VerifyOptions::default().instances),
        exec,
    };
    let reports = verify_all(&opts)?;
    let mut out = Artifacts::default();
    out.json("oracle.json", &reports)?;
    out.csv("oracle.csv", oracle_csv(&reports));
    let failed = reports.iter().filter(|r| !r.pass).count();
    out.stdout = Some(format!("verify-all: {} checks, {failed} failed\n", reports.len()));
    out.verification_failed = !all_pass(&reports);
    Ok(out)
}

fn oracle_csv(reports: &[OracleReport]) -> String {
    let mut s = String::from("quantity,metric,distance,tolerance,pass\n");
    for r in reports {
        let _ = writeln!(s, "{},{},{:.6e},{:.1e},{}", r.quantity, r.metric, r.distance, r.tolerance, r.pass);
    }
    s
}

#[derive(Serialize)]
struct ParamRow {
    name: &'static str,
    symbol: &'static str,
    value: f64,
    unit: &'static str,
}

/// Derived-parameter table.
fn param_rows(cfg: &ScenarioConfig) -> Vec<ParamRow> {
    let p = &cfg.system;
    let s = &cfg.spin;
    let row = |name, symbol, value, unit| ParamRow { name, symbol, value, unit };
    vec![
        row("omega_m", "ω_m", p.omega_m, "rad/s"),
        row("x0", "x₀", p.x0, "m"),
        row("x0_prime", "x₀′", s.x0_prime, "m"),
        row("g0", "g₀", p.g0, "rad/s"),
        row("alpha_abs", "|α|", p.alpha.norm(), "1"),
        row("g", "g", p.g, "rad/s"),
        row("kappa", "κ", p.kappa, "rad/s"),
        row("kappa_prime", "κ′", p.kappa_prime, "rad/s"),
        row("gamma_m", "γ_m", p.gamma_m, "rad/s"),
        row("gamma_prime", "γ′", p.gamma_prime, "rad/s"),
        row("n_bar", "n̄", p.n_bar, "1"),
        row("n_bar_gamma", "n̄γ", p.thermal_decoherence(), "1/s"),
        row("n_bar_prime", "n̄′", p.n_bar_prime, "1"),
        row("lambda", "λ", s.lambda, "rad/s"),
        row("lambda_hz", "λ/2π", s.lambda / TWO_PI, "Hz"),
        row("omega_eff", "ω_eff", s.omega_eff, "rad/s"),
        row("omega_1", "ω₁", s.omega_1, "rad/s"),
        row("omega_2", "ω₂", s.omega_2, "rad/s"),
        row("frequency_shift", "δω_m", p.frequency_shift().unwrap_or(0.0), "rad/s"),
        row("spin_strong_coupling", "λ > n̄γ", f64::from(u8::from(s.strong_coupling(p.thermal_decoherence()))), "bool"),
        row("sideband_resolved", "ω_m > κ", f64::from(u8::from(p.sideband_resolved())), "bool"),
    ]
}

fn params(cfg: &ScenarioConfig) -> Artifacts {
    let rows = param_rows(cfg);
    let mut table = format!("# {:?} profile\n", cfg.profile).to_lowercase();
    let mut csv = String::from("name,symbol,value,unit\n");
    for r in &rows {
        let _ = writeln!(table, "{:<22}{:<10}{:>14.4e}  {}", r.name, r.symbol, r.value, r.unit);
        let _ = writeln!(csv, "{},{},{:.17e},{}", r.name, r.symbol, r.value, r.unit);
    }
    let mut out = Artifacts::default();
    // Serializing plain rows cannot fail.
    let _ = out.json("params.json", &rows);
    out.csv("params.csv", csv);
    out.stdout = Some(table);
    out
}
