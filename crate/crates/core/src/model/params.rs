use serde::{Deserialize, Serialize};

use super::constants::{G_ELECTRON, MU_B, PICOGRAM, TWO_PI};
use super::formulas::{
    dressed_splitting, engineered_damping, frequency_shift, level_spacing, spin_phonon_coupling, steady_amplitude,
    steady_occupation, thermal_occupation, zero_point_fluctuation,
};
use crate::error::{Error, Result};
use crate::fockspace::C64;

/// Independent electromechanical inputs (SI units, angular rates). Everything
/// else in [`SystemParams`] is derived from these.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalInputs {
    pub omega_m: f64,
    pub omega_m_intrinsic: f64,
    pub gamma_m_intrinsic: f64,
    pub gamma_m: f64,
    pub kappa: f64,
    pub omega_0: f64,
    pub g0: f64,
    pub drive_rabi: f64,
    pub detuning: f64,
    pub m_bio: f64,
    pub m_mem: f64,
    pub temperature: f64,
    pub delta_disp: f64,
}

impl PhysicalInputs {
    /// Aluminium-membrane values (10 MHz, 48 pg, γ_m = 2π×32 Hz, 10 mK,
    /// Q = 3.3×10⁵) with a mycoplasma load. κ, g₀, ω₀, Ω_d and δ are
    /// illustrative choices giving κ/g = 10 and δ/g = 20.
    pub fn reference() -> Self {
        let omega_m = TWO_PI * 10e6;
        let kappa = TWO_PI * 200e3;
        let detuning = -omega_m;
        let g0 = TWO_PI * 200.0;
        // |α| = 100 ⇒ g = 2π × 20 kHz
        let drive_rabi = 100.0 * C64::new(2.0 * detuning, kappa).norm();
        PhysicalInputs {
            omega_m,
            omega_m_intrinsic: omega_m,
            gamma_m_intrinsic: omega_m / 3.3e5,
            gamma_m: TWO_PI * 32.0,
            kappa,
            omega_0: TWO_PI * 7.5e9,
            g0,
            drive_rabi,
            detuning,
            m_bio: 0.02 * PICOGRAM,
            m_mem: 48.0 * PICOGRAM,
            temperature: 10e-3,
            delta_disp: TWO_PI * 400e3,
        }
    }
}

/// Every electromechanical symbol, with derived quantities filled in.
///
/// A value of zero marks a quantity as unset (for instance `g_pull` in
/// desk-scaled parameter sets).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega_m: f64,
    pub omega_m_intrinsic: f64,
    pub gamma_m_intrinsic: f64,
    pub gamma_m: f64,
    pub kappa: f64,
    pub omega_0: f64,
    pub g_pull: f64,
    pub g0: f64,
    pub x0: f64,
    pub drive_rabi: f64,
    pub omega_d: f64,
    pub detuning: f64,
    pub alpha: C64,
    pub g: f64,
    pub m_bio: f64,
    pub m_mem: f64,
    pub temperature: f64,
    pub n_bar: f64,
    pub kappa_prime: f64,
    pub gamma_prime: f64,
    pub n_bar_prime: f64,
    pub delta_disp: f64,
}

impl SystemParams {
    pub fn from_physical(p: &PhysicalInputs) -> Result<Self> {
        let x0 = zero_point_fluctuation(p.m_mem, p.omega_m)?;
        let alpha = steady_amplitude(p.drive_rabi, p.detuning, p.kappa)?;
        let g = alpha.norm() * p.g0;
        let mut params = SystemParams {
            omega_m: p.omega_m,
            omega_m_intrinsic: p.omega_m_intrinsic,
            gamma_m_intrinsic: p.gamma_m_intrinsic,
            gamma_m: p.gamma_m,
            kappa: p.kappa,
            omega_0: p.omega_0,
            g_pull: p.g0 / x0,
            g0: p.g0,
            x0,
            drive_rabi: p.drive_rabi,
            omega_d: p.omega_0 + p.detuning,
            detuning: p.detuning,
            alpha,
            g,
            m_bio: p.m_bio,
            m_mem: p.m_mem,
            temperature: p.temperature,
            n_bar: thermal_occupation(p.omega_m, p.temperature)?,
            kappa_prime: 0.0,
            gamma_prime: 0.0,
            n_bar_prime: 0.0,
            delta_disp: p.delta_disp,
        };
        params.update_elimination()?;
        params.validate()?;
        Ok(params)
    }

    pub fn reference() -> Self {
        SystemParams::from_physical(&PhysicalInputs::reference()).expect("reference parameters are valid")
    }

    /// Desk-scaled parameter set: only the rates entering the master equation
    /// are set; the derivation chain from masses and drive is left unset.
    pub fn desk(omega_m: f64, g: f64, kappa: f64, gamma_m: f64, n_bar: f64) -> Result<Self> {
        let mut params = SystemParams {
            omega_m,
            omega_m_intrinsic: omega_m,
            gamma_m_intrinsic: gamma_m,
            gamma_m,
            kappa,
            omega_0: 0.0,
            g_pull: 0.0,
            g0: 0.0,
            x0: 0.0,
            drive_rabi: 0.0,
            omega_d: 0.0,
            detuning: -omega_m,
            alpha: C64::new(0.0, 0.0),
            g,
            m_bio: 0.0,
            m_mem: 0.0,
            temperature: 0.0,
            n_bar,
            kappa_prime: 0.0,
            gamma_prime: 0.0,
            n_bar_prime: 0.0,
            delta_disp: 0.0,
        };
        params.update_elimination()?;
        params.validate()?;
        Ok(params)
    }

    /// Recomputes `κ′ = g²/κ`, `γ′ = γ_m + κ′`, `n̄′ = n̄ γ_m / γ′`. With
    /// `κ = 0` the engineered damping is left at zero.
    pub fn update_elimination(&mut self) -> Result<()> {
        self.kappa_prime = if self.kappa > 0.0 { engineered_damping(self.g, self.kappa)? } else { 0.0 };
        if self.gamma_m + self.kappa_prime > 0.0 {
            let (gp, np) = steady_occupation(self.n_bar, self.gamma_m, self.kappa_prime)?;
            self.gamma_prime = gp;
            self.n_bar_prime = np;
        } else {
            self.gamma_prime = 0.0;
            self.n_bar_prime = self.n_bar;
        }
        Ok(())
    }

    /// Mass-loading shift of the membrane frequency.
    pub fn frequency_shift(&self) -> Result<f64> {
        frequency_shift(self.omega_m_intrinsic, self.m_bio, self.m_mem)
    }

    /// Effective thermal decoherence rate `n̄ γ_m`.
    pub fn thermal_decoherence(&self) -> f64 {
        self.n_bar * self.gamma_m
    }

    /// Sideband-resolved regime `ω_m > κ` and `ω_m > γ_m`.
    pub fn sideband_resolved(&self) -> bool {
        self.omega_m > self.kappa && self.omega_m > self.gamma_m
    }

    /// Strong coupling `g > n̄ γ_m` and `g > κ`.
    pub fn strong_coupling(&self) -> bool {
        self.g > self.thermal_decoherence() && self.g > self.kappa
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("omega_m", self.omega_m),
            ("omega_m_intrinsic", self.omega_m_intrinsic),
            ("gamma_m_intrinsic", self.gamma_m_intrinsic),
            ("gamma_m", self.gamma_m),
            ("kappa", self.kappa),
            ("omega_0", self.omega_0),
            ("g_pull", self.g_pull),
            ("g0", self.g0),
            ("x0", self.x0),
            ("drive_rabi", self.drive_rabi),
            ("omega_d", self.omega_d),
            ("g", self.g),
            ("m_bio", self.m_bio),
            ("m_mem", self.m_mem),
            ("temperature", self.temperature),
            ("n_bar", self.n_bar),
            ("kappa_prime", self.kappa_prime),
            ("gamma_prime", self.gamma_prime),
            ("n_bar_prime", self.n_bar_prime),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::param(name, format!("must be finite and nonnegative, got {v}")));
            }
        }
        for (name, v) in [("detuning", self.detuning), ("delta_disp", self.delta_disp)] {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        if self.g_pull > 0.0 && self.x0 > 0.0 && self.g0 > 0.0 {
            let expected = self.g_pull * self.x0;
            if ((self.g0 - expected) / expected).abs() > 1e-9 {
                return Err(Error::param("g0", format!("g0 = {} but G·x0 = {expected}", self.g0)));
            }
        }
        Ok(())
    }
}

/// Spin inputs; `x0_prime` defaults to twice the membrane zero-point
/// amplitude (microorganism at the membrane centre).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinInputs {
    pub g_s: f64,
    pub b_at_spin: f64,
    pub b_at_second: f64,
    pub g_m: f64,
    pub x0_prime: Option<f64>,
    pub delta_e: f64,
    pub omega_d_prime: f64,
    pub spin_decay: f64,
    pub spin_dephasing: f64,
}

impl SpinInputs {
    pub fn reference(omega_m: f64) -> Self {
        SpinInputs {
            g_s: G_ELECTRON,
            b_at_spin: 18e-3,
            b_at_second: 20e-3,
            g_m: 1e7,
            x0_prime: None,
            delta_e: 0.0,
            omega_d_prime: omega_m,
            spin_decay: 1e3,
            spin_dephasing: 1e3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinParams {
    pub g_s: f64,
    pub mu_b: f64,
    pub b_at_spin: f64,
    /// Field-gradient magnitude `|G_m|` (T/m).
    pub g_m: f64,
    pub x0_prime: f64,
    pub lambda: f64,
    pub omega_1: f64,
    pub omega_2: f64,
    pub delta_e: f64,
    pub omega_d_prime: f64,
    pub omega_eff: f64,
    pub spin_positions: Vec<[f64; 3]>,
    /// Spin energy relaxation rate (1/T₁, rad/s).
    pub spin_decay: f64,
    /// Pure dephasing rate (rad/s).
    pub spin_dephasing: f64,
}

impl SpinParams {
    pub fn from_inputs(inputs: &SpinInputs, membrane_x0: f64) -> Result<Self> {
        let x0_prime = inputs.x0_prime.unwrap_or(2.0 * membrane_x0);
        let mut s = SpinParams {
            g_s: inputs.g_s,
            mu_b: MU_B,
            b_at_spin: inputs.b_at_spin,
            g_m: inputs.g_m,
            x0_prime,
            lambda: 0.0,
            omega_1: level_spacing(inputs.g_s, inputs.b_at_spin),
            omega_2: level_spacing(inputs.g_s, inputs.b_at_second),
            delta_e: inputs.delta_e,
            omega_d_prime: inputs.omega_d_prime,
            omega_eff: dressed_splitting(inputs.delta_e, inputs.omega_d_prime),
            spin_positions: Vec::new(),
            spin_decay: inputs.spin_decay,
            spin_dephasing: inputs.spin_dephasing,
        };
        s.lambda = spin_phonon_coupling(&s)?;
        Ok(s)
    }

    pub fn reference() -> Self {
        let sys = SystemParams::reference();
        SpinParams::from_inputs(&SpinInputs::reference(sys.omega_m), sys.x0)
            .expect("reference spin parameters are valid")
    }

    /// Desk-scaled spin: only `λ`, the drive and the spin rates are set.
    pub fn desk(lambda: f64, delta_e: f64, omega_d_prime: f64, spin_decay: f64, spin_dephasing: f64) -> Result<Self> {
        let s = SpinParams {
            g_s: 0.0,
            mu_b: MU_B,
            b_at_spin: 0.0,
            g_m: 0.0,
            x0_prime: 0.0,
            lambda,
            omega_1: 0.0,
            omega_2: 0.0,
            delta_e,
            omega_d_prime,
            omega_eff: dressed_splitting(delta_e, omega_d_prime),
            spin_positions: Vec::new(),
            spin_decay,
            spin_dephasing,
        };
        s.validate()?;
        Ok(s)
    }

    /// Sets the drive and keeps `ω_eff` consistent.
    pub fn with_drive(mut self, delta_e: f64, omega_d_prime: f64) -> Self {
        self.delta_e = delta_e;
        self.omega_d_prime = omega_d_prime;
        self.omega_eff = dressed_splitting(delta_e, omega_d_prime);
        self
    }

    /// `λ` expressed as an ordinary frequency `λ/2π` in Hz.
    pub fn lambda_hz(&self) -> f64 {
        self.lambda / TWO_PI
    }

    /// Spin–phonon strong coupling `λ > n̄ γ` for a given mechanical
    /// decoherence rate.
    pub fn strong_coupling(&self, thermal_decoherence: f64) -> bool {
        self.lambda > thermal_decoherence
    }

    pub fn validate(&self) -> Result<()> {
        let expected_eff = dressed_splitting(self.delta_e, self.omega_d_prime);
        if (self.omega_eff - expected_eff).abs() > 1e-9 * expected_eff.max(1.0) {
            return Err(Error::param("omega_eff", "must equal sqrt(delta_e² + omega_d_prime²)"));
        }
        if self.g_s > 0.0 && self.g_m > 0.0 && self.x0_prime > 0.0 {
            let lam = spin_phonon_coupling(self)?;
            if ((self.lambda - lam) / lam).abs() > 1e-9 {
                return Err(Error::param("lambda", format!("λ = {} but g_s μ_B |G_m| x0' / ħ = {lam}", self.lambda)));
            }
        }
        for (name, v) in [("spin_decay", self.spin_decay), ("spin_dephasing", self.spin_dephasing)] {
            if !(v >= 0.0) {
                return Err(Error::param(name, "must be nonnegative"));
            }
        }
        Ok(())
    }
}
