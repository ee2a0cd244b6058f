//! Physical constants and boundary unit conversions.
//!
//! CODATA 2018 exact/recommended values.

/// Elementary charge in coulombs (exact).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Reduced Planck constant in J·s.
pub const HBAR_J_S: f64 = 1.054_571_817e-34;
/// Reduced Planck constant in eV·s.
pub const HBAR_EV_S: f64 = 6.582_119_569e-16;
/// 1 eV/nm expressed in newtons.
pub const EV_PER_NM_IN_NEWTON: f64 = ELEMENTARY_CHARGE * 1e9;

/// Energy in `ħω_p` units to eV.
pub fn energy_to_ev(energy: f64, omega_p_ev: f64) -> f64 {
    energy * omega_p_ev
}

/// Force in `ħω_p / R` units to eV/nm.
pub fn force_to_ev_per_nm(force: f64, omega_p_ev: f64, radius_nm: f64) -> f64 {
    force * omega_p_ev / radius_nm
}

pub fn ev_per_nm_to_newton(force: f64) -> f64 {
    force * EV_PER_NM_IN_NEWTON
}

/// Angular plasma frequency in rad/s for a given `ħω_p` in eV.
pub fn plasma_angular_frequency(omega_p_ev: f64) -> f64 {
    omega_p_ev / HBAR_EV_S
}
