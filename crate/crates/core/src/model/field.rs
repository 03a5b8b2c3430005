use super::constants::{HBAR, MU_0, MU_B};

/// Static magnetic field map: position (m) → field (T). `None` marks a point
/// where the model is undefined.
pub trait FieldMap: Sync {
    fn field_at(&self, x: [f64; 3]) -> Option<[f64; 3]>;
}

impl<F> FieldMap for F
where
    F: Fn([f64; 3]) -> Option<[f64; 3]> + Sync,
{
    fn field_at(&self, x: [f64; 3]) -> Option<[f64; 3]> {
        self(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformField(pub [f64; 3]);

impl FieldMap for UniformField {
    fn field_at(&self, _x: [f64; 3]) -> Option<[f64; 3]> {
        Some(self.0)
    }
}

/// Magnetized tip modelled as a point dipole plus a uniform bias:
///
/// `B(r) = μ₀/4π · (3 r̂ (r̂·m) − m) / |r|³ + B_bias`, with `r = x − position`.
///
/// Undefined within `core_radius` of the dipole.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointDipoleTip {
    /// Dipole moment (A·m²).
    pub moment: [f64; 3],
    pub position: [f64; 3],
    pub bias: [f64; 3],
    pub core_radius: f64,
}

impl FieldMap for PointDipoleTip {
    fn field_at(&self, x: [f64; 3]) -> Option<[f64; 3]> {
        let r = [x[0] - self.position[0], x[1] - self.position[1], x[2] - self.position[2]];
        let d = norm(r);
        if !(d > self.core_radius) || d == 0.0 {
            return None;
        }
        let u = [r[0] / d, r[1] / d, r[2] / d];
        let um = dot(u, self.moment);
        let pre = MU_0 / (4.0 * std::f64::consts::PI * d.powi(3));
        Some(std::array::from_fn(|k| pre * (3.0 * u[k] * um - self.moment[k]) + self.bias[k]))
    }
}

impl PointDipoleTip {
    /// Central-difference derivative of `|B|` along `direction` (T/m).
    pub fn gradient_magnitude(&self, x: [f64; 3], direction: [f64; 3], step: f64) -> Option<f64> {
        let n = norm(direction);
        let e: [f64; 3] = std::array::from_fn(|k| direction[k] / n * step);
        let plus = self.field_at([x[0] + e[0], x[1] + e[1], x[2] + e[2]])?;
        let minus = self.field_at([x[0] - e[0], x[1] - e[1], x[2] - e[2]])?;
        Some((norm(plus) - norm(minus)) / (2.0 * step))
    }
}

/// Selective addressing of spin 1 with a drive of Rabi rate `omega_d_prime`:
/// `g_s μ_B |B(x₁) − B(x₂)| / ħ ≥ 10 |Ω_d′|`.
pub fn selective_addressing(g_s: f64, b1: [f64; 3], b2: [f64; 3], omega_d_prime: f64) -> bool {
    let diff = [b1[0] - b2[0], b1[1] - b2[1], b1[2] - b2[2]];
    g_s * MU_B * norm(diff) / HBAR >= 10.0 * omega_d_prime.abs()
}

pub(crate) fn norm(v: [f64; 3]) -> f64 {
    dot(v, v).sqrt()
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
