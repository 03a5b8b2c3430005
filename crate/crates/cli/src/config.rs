//! Scenario configuration: the flat `key = value` parameter grammar plus
//! scenario-level keys.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use electromech::model::paramfile::{apply_entry, parse_entries, parse_number, Entry, PHYSICAL_KEYS, SPIN_KEYS};
use electromech::model::{PhysicalInputs, SpinInputs, SpinParams, SystemParams};
use electromech::{Error, Result};

const TELEPORT_KEYS: &[&str] =
    &["alpha_re", "alpha_im", "beta_re", "beta_im", "branch", "level", "cphase_model", "noisy", "leak_tol"];
const SPIN_TELEPORT_KEYS: &[&str] =
    &["alpha_re", "alpha_im", "beta_re", "beta_im", "branch", "swap_level", "dissipative", "mech_occupation"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    Cool,
    Superpose,
    TeleportMotional,
    EsrScan,
    TeleportSpin,
    VerifyAll,
    Params,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::Cool,
        Scenario::Superpose,
        Scenario::TeleportMotional,
        Scenario::EsrScan,
        Scenario::TeleportSpin,
        Scenario::VerifyAll,
        Scenario::Params,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Cool => "cool",
            Scenario::Superpose => "superpose",
            Scenario::TeleportMotional => "teleport-motional",
            Scenario::EsrScan => "esr-scan",
            Scenario::TeleportSpin => "teleport-spin",
            Scenario::VerifyAll => "verify-all",
            Scenario::Params => "params",
        }
    }

    /// Scenario-specific keys; `required` ones must be present.
    fn keys(self) -> (&'static [&'static str], &'static [&'static str]) {
        match self {
            Scenario::Cool => (&[], &["n_init", "duration", "samples", "model"]),
            Scenario::Superpose => (&[], &["mech_occupation", "dissipative", "time"]),
            Scenario::TeleportMotional => (&[], TELEPORT_KEYS),
            Scenario::EsrScan => (&["range_min", "range_max", "resolution"], &["sweep", "fixed"]),
            Scenario::TeleportSpin => (&[], SPIN_TELEPORT_KEYS),
            Scenario::VerifyAll => (&[], &["instances"]),
            Scenario::Params => (&[], &[]),
        }
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| format!("unknown scenario `{s}` (expected one of {})", names()))
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn names() -> String {
    Scenario::ALL.iter().map(|s| s.name()).collect::<Vec<_>>().join(", ")
}

/// How the physical parameters are given.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    /// SI inputs (masses, temperature, drive); rates are derived.
    Physical,
    /// Master-equation rates set directly, typically in units of `ω_m`.
    Desk,
}

pub const DESK_KEYS: &[&str] = &[
    "omega_m",
    "g",
    "kappa",
    "gamma_m",
    "n_bar",
    "delta_disp",
    "lambda",
    "delta_e",
    "omega_d_prime",
    "spin_decay",
    "spin_dephasing",
];

const DESK_SIGNED: &[&str] = &["delta_disp", "delta_e", "omega_d_prime"];

const COMMON_KEYS: &[&str] = &["scenario", "profile", "seed", "truncation.lc", "truncation.mech"];

#[derive(Clone, Debug)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub profile: Profile,
    pub seed: u64,
    pub system: SystemParams,
    pub spin: SpinParams,
    /// Fock truncation by mode name (`lc`, `mech`).
    pub truncation: BTreeMap<String, usize>,
    settings: BTreeMap<String, Entry>,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

impl ScenarioConfig {
    /// Parses a config. `scenario_override` supplies or must match the
    /// `scenario` key.
    pub fn parse(text: &str, scenario_override: Option<Scenario>) -> Result<Self> {
        let entries = parse_entries(text)?;
        let by_key: BTreeMap<&str, &Entry> = entries.iter().map(|e| (e.key.as_str(), e)).collect();
        let scenario = match (by_key.get("scenario"), scenario_override) {
            (Some(e), over) => {
                let sc: Scenario = e.value.parse().map_err(|m: String| parse_err(e.line, m))?;
                if let Some(o) = over.filter(|&o| o != sc) {
                    return Err(parse_err(e.line, format!("config selects `{sc}` but `{o}` was requested")));
                }
                sc
            }
            (None, Some(o)) => o,
            (None, None) => return Err(parse_err(0, format!("missing `scenario` (one of {})", names()))),
        };
        let profile = match by_key.get("profile").map(|e| (e.line, e.value.as_str())) {
            None | Some((_, "physical")) => Profile::Physical,
            Some((_, "desk")) => Profile::Desk,
            Some((line, other)) => {
                return Err(parse_err(line, format!("`profile` must be `physical` or `desk`, got `{other}`")))
            }
        };
        let (required, optional) = scenario.keys();
        let param_keys: Vec<&str> = match profile {
            Profile::Physical => PHYSICAL_KEYS.iter().chain(SPIN_KEYS).copied().collect(),
            Profile::Desk => DESK_KEYS.to_vec(),
        };
        for e in &entries {
            let k = e.key.as_str();
            if !(COMMON_KEYS.contains(&k) || required.contains(&k) || optional.contains(&k) || param_keys.contains(&k))
            {
                return Err(parse_err(
                    e.line,
                    format!(
                        "unknown key `{k}` for scenario `{scenario}` ({} profile)",
                        format!("{profile:?}").to_lowercase()
                    ),
                ));
            }
        }
        if let Some(missing) = required.iter().find(|k| !by_key.contains_key(*k)) {
            return Err(parse_err(0, format!("scenario `{scenario}` requires `{missing}`")));
        }
        let seed = match by_key.get("seed") {
            Some(e) => e.value.parse().map_err(|_| parse_err(e.line, "`seed` must be a nonnegative integer"))?,
            None => 0,
        };
        let mut truncation = BTreeMap::new();
        for name in ["lc", "mech"] {
            if let Some(e) = by_key.get(format!("truncation.{name}").as_str()) {
                truncation.insert(name.to_string(), parse_dim(e)?);
            }
        }
        let (system, spin) = match profile {
            Profile::Physical => physical_params(&entries)?,
            Profile::Desk => desk_params(&by_key)?,
        };
        let settings = entries
            .iter()
            .filter(|e| required.contains(&e.key.as_str()) || optional.contains(&e.key.as_str()))
            .map(|e| (e.key.clone(), e.clone()))
            .collect();
        Ok(ScenarioConfig { scenario, profile, seed, system, spin, truncation, settings })
    }

    /// Applies a `NAME=DIM` truncation override.
    pub fn set_truncation(&mut self, spec: &str) -> Result<()> {
        let (name, dim) =
            spec.split_once('=').ok_or_else(|| bad_truncation(format!("expected NAME=DIM, got `{spec}`")))?;
        let name = name.trim();
        if name != "lc" && name != "mech" {
            return Err(bad_truncation(format!("unknown mode `{name}` (expected lc or mech)")));
        }
        let entry = Entry { line: 0, key: format!("truncation.{name}"), value: dim.trim().to_string() };
        self.truncation.insert(name.to_string(), parse_dim(&entry)?);
        Ok(())
    }

    pub fn dim(&self, name: &str, default: usize) -> usize {
        self.truncation.get(name).copied().unwrap_or(default)
    }

    pub fn has(&self, key: &str) -> bool {
        self.settings.contains_key(key)
    }

    pub fn number(&self, key: &str) -> Result<Option<f64>> {
        self.settings.get(key).map(parse_number).transpose()
    }

    pub fn number_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.number(key)?.unwrap_or(default))
    }

    pub fn nonnegative(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.number_or(key, default)?;
        if v < 0.0 {
            return Err(parse_err(self.line(key), format!("`{key}` must be nonnegative, got {v}")));
        }
        Ok(v)
    }

    pub fn integer(&self, key: &str) -> Result<Option<usize>> {
        self.settings
            .get(key)
            .map(|e| e.value.parse().map_err(|_| parse_err(e.line, format!("`{key}` must be a nonnegative integer"))))
            .transpose()
    }

    pub fn flag(&self, key: &str, default: bool) -> Result<bool> {
        match self.settings.get(key) {
            None => Ok(default),
            Some(e) => match e.value.as_str() {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                other => Err(parse_err(e.line, format!("`{key}` must be true or false, got `{other}`"))),
            },
        }
    }

    /// Value of an enumerated key, checked against `choices`.
    pub fn choice<'a>(&'a self, key: &str, choices: &[&str], default: &'a str) -> Result<&'a str> {
        match self.settings.get(key) {
            None => Ok(default),
            Some(e) if choices.contains(&e.value.as_str()) => Ok(e.value.as_str()),
            Some(e) => {
                Err(parse_err(e.line, format!("`{key}` must be one of {}, got `{}`", choices.join(", "), e.value)))
            }
        }
    }

    pub fn line(&self, key: &str) -> usize {
        self.settings.get(key).map_or(0, |e| e.line)
    }
}

fn bad_truncation(reason: String) -> Error {
    Error::InvalidParameter { name: "truncation".into(), reason }
}

fn parse_dim(e: &Entry) -> Result<usize> {
    match e.value.parse::<usize>() {
        Ok(d) if d >= 2 => Ok(d),
        _ => Err(parse_err(e.line, format!("`{}` must be an integer ≥ 2, got `{}`", e.key, e.value))),
    }
}

fn physical_params(entries: &[Entry]) -> Result<(SystemParams, SpinParams)> {
    let mut phys = PhysicalInputs::reference();
    let mut spin = SpinInputs::reference(phys.omega_m);
    let mut drive_set = false;
    for e in entries {
        drive_set |= e.key == "omega_d_prime";
        apply_entry(&mut phys, &mut spin, e)?;
    }
    if !drive_set {
        spin.omega_d_prime = phys.omega_m;
    }
    let system = SystemParams::from_physical(&phys)?;
    let spin = SpinParams::from_inputs(&spin, system.x0)?;
    Ok((system, spin))
}

fn desk_params(by_key: &BTreeMap<&str, &Entry>) -> Result<(SystemParams, SpinParams)> {
    let v = |key: &str, default: f64| -> Result<f64> {
        let Some(e) = by_key.get(key) else { return Ok(default) };
        let x = parse_number(e)?;
        if x < 0.0 && !DESK_SIGNED.contains(&key) {
            return Err(parse_err(e.line, format!("`{key}` must be nonnegative, got {x}")));
        }
        Ok(x)
    };
    let omega_m = v("omega_m", 1.0)?;
    let mut system =
        SystemParams::desk(omega_m, v("g", 0.05)?, v("kappa", 1.0)?, v("gamma_m", 1e-3)?, v("n_bar", 1.0)?)?;
    system.delta_disp = v("delta_disp", 0.0)?;
    let spin = SpinParams::desk(
        v("lambda", 0.02 * omega_m)?,
        v("delta_e", 0.0)?,
        v("omega_d_prime", omega_m)?,
        v("spin_decay", 0.0)?,
        v("spin_dephasing", 0.0)?,
    )?;
    Ok((system, spin))
}
