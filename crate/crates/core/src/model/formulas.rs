use super::constants::{HBAR, K_B, MU_B};
use super::SpinParams;
use crate::error::{Error, Result};
use crate::fockspace::C64;

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::param(name, format!("must be positive and finite, got {v}")));
    }
    Ok(())
}

fn nonnegative(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::param(name, format!("must be nonnegative and finite, got {v}")));
    }
    Ok(())
}

/// `x₀ = √(ħ / 2Mω)` in metres.
pub fn zero_point_fluctuation(mass: f64, omega: f64) -> Result<f64> {
    positive("mass", mass)?;
    positive("omega", omega)?;
    Ok((HBAR / (2.0 * mass * omega)).sqrt())
}

/// Steady drive amplitude `α = Ω_d / (2Δ + iκ)`.
pub fn steady_amplitude(drive_rabi: f64, detuning: f64, kappa: f64) -> Result<C64> {
    let denom = C64::new(2.0 * detuning, kappa);
    if denom.norm() == 0.0 {
        return Err(Error::param("detuning/kappa", "Δ = 0 and κ = 0 leave the steady amplitude undefined"));
    }
    Ok(C64::new(drive_rabi, 0.0) / denom)
}

/// Mass-loading shift `−Ω_m m / (2 M_mem)` of the membrane frequency.
pub fn frequency_shift(omega_m_intrinsic: f64, m_bio: f64, m_mem: f64) -> Result<f64> {
    nonnegative("m_bio", m_bio)?;
    positive("m_mem", m_mem)?;
    Ok(-omega_m_intrinsic * m_bio / (2.0 * m_mem))
}

/// Bose–Einstein occupation `1 / (exp(ħω / k_B T) − 1)`; zero at `T = 0`.
pub fn thermal_occupation(omega: f64, temperature: f64) -> Result<f64> {
    positive("omega", omega)?;
    nonnegative("temperature", temperature)?;
    if temperature == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (HBAR * omega / (K_B * temperature)).exp_m1())
}

/// Single-phonon spin frequency shift `λ = g_s μ_B |G_m| x₀′ / ħ` (rad/s).
pub fn spin_phonon_coupling(spin: &SpinParams) -> Result<f64> {
    positive("g_s", spin.g_s)?;
    positive("mu_b", spin.mu_b)?;
    nonnegative("g_m", spin.g_m)?;
    positive("x0_prime", spin.x0_prime)?;
    Ok(spin.g_s * spin.mu_b * spin.g_m * spin.x0_prime / HBAR)
}

/// `ω_eff = √(Δ_e² + Ω_d′²)`.
pub fn dressed_splitting(delta_e: f64, omega_d_prime: f64) -> f64 {
    delta_e.hypot(omega_d_prime)
}

/// Spin drive detunings where `ω_eff = ω_m`: `±√(ω_m² − Ω_d′²)`, or `None`
/// when `|Ω_d′| > ω_m`.
pub fn resonance_detunings(omega_m: f64, omega_d_prime: f64) -> Option<(f64, f64)> {
    let d2 = omega_m * omega_m - omega_d_prime * omega_d_prime;
    (d2 >= 0.0).then(|| {
        let d = d2.sqrt();
        (-d, d)
    })
}

/// Electron level spacing `g_s μ_B B / ħ` (rad/s).
pub fn level_spacing(g_s: f64, field_tesla: f64) -> f64 {
    g_s * MU_B * field_tesla / HBAR
}

/// `κ′ = g² / κ`.
pub fn engineered_damping(g: f64, kappa: f64) -> Result<f64> {
    positive("kappa", kappa)?;
    Ok(g * g / kappa)
}

/// `(γ′, n̄′)` with `γ′ = γ + κ′` and `n̄′ = n̄ γ / γ′`.
pub fn steady_occupation(n_bar: f64, gamma: f64, kappa_prime: f64) -> Result<(f64, f64)> {
    nonnegative("n_bar", n_bar)?;
    nonnegative("gamma_m", gamma)?;
    nonnegative("kappa_prime", kappa_prime)?;
    let gamma_prime = gamma + kappa_prime;
    if gamma_prime == 0.0 {
        return Err(Error::param("gamma_prime", "total mechanical damping is zero"));
    }
    Ok((gamma_prime, n_bar * gamma / gamma_prime))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::constants::{PICOGRAM, TWO_PI};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn membrane_zero_point_fluctuation() {
        let x0 = zero_point_fluctuation(48.0 * PICOGRAM, TWO_PI * 10e6).unwrap();
        assert!(rel(x0, 4.2e-15) < 0.01, "x0 = {x0:e}");
        let x4 = zero_point_fluctuation(4.0 * 48.0 * PICOGRAM, TWO_PI * 10e6).unwrap();
        assert!(rel(x4, x0 / 2.0) < 1e-14);
        assert!(rel(2.0 * x0, 8.4e-15) < 0.01);
        assert!(zero_point_fluctuation(0.0, 1.0).is_err());
        assert!(zero_point_fluctuation(1.0, -1.0).is_err());
    }

    #[test]
    fn steady_amplitude_cases() {
        assert_eq!(steady_amplitude(0.0, 1.0, 1.0).unwrap(), C64::new(0.0, 0.0));
        let a = steady_amplitude(3.0, 2.0, 0.0).unwrap();
        assert_eq!(a, C64::new(0.75, 0.0));
        assert!(steady_amplitude(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn steady_amplitude_matches_driven_cavity_ode() {
        // Classical driven, damped cavity field in the frame rotating at ω_d:
        //   dα/dt = (iΔ − κ/2)α − iΩ_d/2
        // integrated with RK4 until transients have decayed.
        let (omega_d, delta, kappa) = (TWO_PI * 1e6, -TWO_PI * 10e6, TWO_PI * 0.2e6);
        let f = |a: C64| -(C64::new(kappa / 2.0, -delta)) * a - C64::new(0.0, omega_d / 2.0);
        let mut a = C64::new(0.0, 0.0);
        let dt = 1e-10;
        let steps = (60.0 / kappa / dt) as usize;
        for _ in 0..steps {
            let k1 = f(a);
            let k2 = f(a + k1 * (dt / 2.0));
            let k3 = f(a + k2 * (dt / 2.0));
            let k4 = f(a + k3 * dt);
            a += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        }
        let expected = steady_amplitude(omega_d, delta, kappa).unwrap();
        assert!((a - expected).norm() / expected.norm() < 1e-6, "{a} vs {expected}");
    }

    #[test]
    fn mass_loading_shift() {
        let omega = TWO_PI * 10e6;
        let s = frequency_shift(omega, 1e-4, 1.0).unwrap();
        assert!(rel(s, -TWO_PI * 500.0) < 1e-12);
        let s = frequency_shift(omega, 1e-7, 1.0).unwrap();
        assert!(rel(s, -TWO_PI * 0.5) < 1e-12);
        assert_eq!(frequency_shift(omega, 0.0, 1.0).unwrap(), 0.0);
        assert!(frequency_shift(omega, 1.0, 0.0).is_err());
        // mycoplasma entry: 0.02 pg on a 48 pg membrane
        let s = frequency_shift(omega, 0.02, 48.0).unwrap();
        assert!(s < 0.0 && s.abs() < TWO_PI * 5000.0);
    }

    #[test]
    fn thermal_occupation_cases() {
        let n = thermal_occupation(TWO_PI * 10e6, 10e-3).unwrap();
        assert!(rel(n, 20.0) < 0.05, "n = {n}");
        assert_eq!(thermal_occupation(1.0, 0.0).unwrap(), 0.0);
        // ħω/k_BT = ln 2 ⇒ n̄ = 1
        let omega = 1e9;
        let t = HBAR * omega / (K_B * 2f64.ln());
        assert!((thermal_occupation(omega, t).unwrap() - 1.0).abs() < 1e-12);
        assert!(thermal_occupation(0.0, 1.0).is_err());
    }

    #[test]
    fn spin_phonon_coupling_reference() {
        let mut s = SpinParams::reference();
        s.g_s = 2.0;
        s.g_m = 1e7;
        s.x0_prime = 8.4e-15;
        let lam = spin_phonon_coupling(&s).unwrap();
        assert!(rel(lam, 1.48e4) < 0.01, "λ = {lam}");
        s.g_m = 0.0;
        assert_eq!(spin_phonon_coupling(&s).unwrap(), 0.0);
        s.g_m = 1e7;
        s.x0_prime = 16.8e-15;
        assert!(rel(spin_phonon_coupling(&s).unwrap(), 2.0 * lam) < 1e-14);
        s.g_s = 0.0;
        assert!(spin_phonon_coupling(&s).is_err());
    }

    #[test]
    fn dressed_splitting_cases() {
        assert_eq!(dressed_splitting(0.0, 2.5), 2.5);
        assert_eq!(dressed_splitting(0.0, -2.5), 2.5);
        assert!((dressed_splitting(3.0, 4.0) - 5.0).abs() < 1e-15);
        let (lo, hi) = resonance_detunings(1.0, 0.6).unwrap();
        assert!((hi - 0.8).abs() < 1e-15 && (lo + 0.8).abs() < 1e-15);
        assert!((dressed_splitting(hi, 0.6) - 1.0).abs() < 1e-15);
        assert!(resonance_detunings(1.0, 1.2).is_none());
        let mut last = 0.0;
        for k in 0..20 {
            let w = dressed_splitting(k as f64 * 0.1, 0.6);
            assert!(w >= last);
            last = w;
        }
    }

    #[test]
    fn level_spacing_for_500_mhz() {
        // 18 mT puts a g≈2 electron just above 500 MHz
        let w = level_spacing(2.0, 18e-3);
        assert!(w / TWO_PI > 500e6 && w / TWO_PI < 510e6);
    }

    #[test]
    fn elimination_formulas() {
        let kp = engineered_damping(TWO_PI * 0.1e6, TWO_PI * 1e6).unwrap();
        assert!(rel(kp, TWO_PI * 10e3) < 1e-12);
        let (gp, np) = steady_occupation(2.0, 1.0, 50.0).unwrap();
        assert_eq!(gp, 51.0);
        assert!((np - 2.0 / 51.0).abs() < 1e-15);
        assert!(steady_occupation(1.0, 0.0, 0.0).is_err());
    }
}
