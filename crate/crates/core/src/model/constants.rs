//! CODATA 2018 values in SI units.

pub const HBAR: f64 = 1.054_571_817e-34;
pub const K_B: f64 = 1.380_649e-23;
pub const MU_B: f64 = 9.274_010_078_3e-24;
pub const MU_0: f64 = 1.256_637_062_12e-6;
/// Free-electron g-factor magnitude.
pub const G_ELECTRON: f64 = 2.002_319_304_36;
pub const PICOGRAM: f64 = 1e-15;
pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
