//! Flat `key = value` parameter files.
//!
//! One assignment per line, `#` starts a comment. Values are SI numbers with
//! rates in rad/s; a value may be written `2pi*X` to give an ordinary
//! frequency `X` in Hz. Keys may appear at most once.

use std::collections::BTreeMap;

use super::constants::TWO_PI;
use super::params::{PhysicalInputs, SpinInputs};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Splits a file into entries, rejecting malformed lines and repeated keys.
pub fn parse_entries(text: &str) -> Result<Vec<Entry>> {
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| Error::Parse { line, message: format!("expected `key = value`, found `{body}`") })?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || !key.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_' || ch == '.' || ch == '-') {
            return Err(Error::Parse { line, message: format!("invalid key `{key}`") });
        }
        if value.is_empty() {
            return Err(Error::Parse { line, message: format!("missing value for `{key}`") });
        }
        if let Some(first) = seen.insert(key.to_string(), line) {
            return Err(Error::Parse { line, message: format!("`{key}` already set on line {first}") });
        }
        out.push(Entry { line, key: key.to_string(), value: value.to_string() });
    }
    Ok(out)
}

/// Parses a number, accepting the `2pi*X` shorthand.
pub fn parse_number(entry: &Entry) -> Result<f64> {
    let v = entry.value.replace('_', "");
    let (scale, rest) = match v.strip_prefix("2pi*") {
        Some(rest) => (TWO_PI, rest.trim()),
        None => (1.0, v.as_str()),
    };
    let x: f64 = rest.parse().map_err(|_| Error::Parse {
        line: entry.line,
        message: format!("`{}`: `{}` is not a number", entry.key, entry.value),
    })?;
    if !x.is_finite() {
        return Err(Error::Parse { line: entry.line, message: format!("`{}` must be finite", entry.key) });
    }
    Ok(scale * x)
}

pub const PHYSICAL_KEYS: &[&str] = &[
    "omega_m",
    "omega_m_intrinsic",
    "gamma_m_intrinsic",
    "gamma_m",
    "kappa",
    "omega_0",
    "g0",
    "drive_rabi",
    "detuning",
    "m_bio",
    "m_mem",
    "temperature",
    "delta_disp",
];

pub const SPIN_KEYS: &[&str] =
    &["g_s", "b_at_spin", "b_at_second", "g_m", "x0_prime", "delta_e", "omega_d_prime", "spin_decay", "spin_dephasing"];

const SIGNED: &[&str] = &["detuning", "delta_disp", "delta_e", "omega_d_prime"];

/// Applies one entry to the inputs. Returns `Ok(false)` when the key is not a
/// physical or spin parameter, so callers can layer their own keys on top.
pub fn apply_entry(phys: &mut PhysicalInputs, spin: &mut SpinInputs, entry: &Entry) -> Result<bool> {
    let key = entry.key.as_str();
    if !PHYSICAL_KEYS.contains(&key) && !SPIN_KEYS.contains(&key) {
        return Ok(false);
    }
    let v = parse_number(entry)?;
    if v < 0.0 && !SIGNED.contains(&key) {
        return Err(Error::Parse { line: entry.line, message: format!("`{key}` must be nonnegative, got {v}") });
    }
    let slot = match key {
        "omega_m" => &mut phys.omega_m,
        "omega_m_intrinsic" => &mut phys.omega_m_intrinsic,
        "gamma_m_intrinsic" => &mut phys.gamma_m_intrinsic,
        "gamma_m" => &mut phys.gamma_m,
        "kappa" => &mut phys.kappa,
        "omega_0" => &mut phys.omega_0,
        "g0" => &mut phys.g0,
        "drive_rabi" => &mut phys.drive_rabi,
        "detuning" => &mut phys.detuning,
        "m_bio" => &mut phys.m_bio,
        "m_mem" => &mut phys.m_mem,
        "temperature" => &mut phys.temperature,
        "delta_disp" => &mut phys.delta_disp,
        "g_s" => &mut spin.g_s,
        "b_at_spin" => &mut spin.b_at_spin,
        "b_at_second" => &mut spin.b_at_second,
        "g_m" => &mut spin.g_m,
        "x0_prime" => {
            spin.x0_prime = Some(v);
            return Ok(true);
        }
        "delta_e" => &mut spin.delta_e,
        "omega_d_prime" => &mut spin.omega_d_prime,
        "spin_decay" => &mut spin.spin_decay,
        "spin_dephasing" => &mut spin.spin_dephasing,
        _ => unreachable!("key lists and match arms agree"),
    };
    *slot = v;
    Ok(true)
}

/// Loads a parameter file on top of the reference values; unknown keys are
/// rejected.
pub fn load(text: &str) -> Result<(PhysicalInputs, SpinInputs)> {
    let mut phys = PhysicalInputs::reference();
    let mut spin = SpinInputs::reference(phys.omega_m);
    for entry in parse_entries(text)? {
        if !apply_entry(&mut phys, &mut spin, &entry)? {
            return Err(Error::Parse { line: entry.line, message: format!("unknown key `{}`", entry.key) });
        }
    }
    Ok((phys, spin))
}
