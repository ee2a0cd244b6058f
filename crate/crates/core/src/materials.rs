//! Dielectric response of the sphere and the substrate.
//!
//! The sphere follows the Drude model and enters only through the spectral
//! variable `u(ω) = [1 − ε(ω)]⁻¹ = ω(ω + iγω_p)/ω_p²`. The substrate is a
//! real, frequency-independent permittivity, reduced to its contrast factor
//! `f_c = (1 − ε)/(1 + ε)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Drude sphere: plasma energy `ħω_p` (eV) and damping ratio `1/(τω_p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrudeMaterial {
    omega_p_ev: f64,
    gamma_ratio: f64,
}

impl DrudeMaterial {
    pub fn new(omega_p_ev: f64, gamma_ratio: f64) -> Result<Self> {
        if !(omega_p_ev.is_finite() && omega_p_ev > 0.0) {
            return Err(Error::Domain(format!("plasma energy must be positive, got {omega_p_ev}")));
        }
        if !(gamma_ratio.is_finite() && gamma_ratio >= 0.0) {
            return Err(Error::Domain(format!("damping ratio must be non-negative, got {gamma_ratio}")));
        }
        Ok(Self { omega_p_ev, gamma_ratio })
    }

    /// Aluminum: `ħω_p = 15.80 eV`, `1/(τω_p) = 0.04`.
    pub fn aluminum() -> Self {
        Self { omega_p_ev: 15.80, gamma_ratio: 0.04 }
    }

    /// Same plasma energy with the damping switched off.
    pub fn undamped(self) -> Self {
        Self { gamma_ratio: 0.0, ..self }
    }

    pub fn omega_p_ev(&self) -> f64 {
        self.omega_p_ev
    }

    pub fn gamma_ratio(&self) -> f64 {
        self.gamma_ratio
    }

    /// Eigenvalues at or below `(γ/2)²` have no oscillating root.
    pub fn overdamping_threshold(&self) -> f64 {
        0.25 * self.gamma_ratio * self.gamma_ratio
    }

    /// `ε(ω) = 1 − 1/u(ω)`, with `omega` in units of `ω_p`.
    pub fn permittivity(&self, omega: Complex64) -> Complex64 {
        Complex64::new(1.0, 0.0) - u_of_omega(self, omega).inv()
    }
}

/// Substrate with a real permittivity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubstrateMaterial {
    epsilon: f64,
    f_c: f64,
}

impl SubstrateMaterial {
    pub fn new(epsilon: f64) -> Result<Self> {
        let f_c = contrast_factor(epsilon)?;
        Ok(Self { epsilon, f_c })
    }

    /// Sapphire, `ε = 3.13`.
    pub fn sapphire() -> Self {
        Self::new(3.13).expect("valid permittivity")
    }

    /// No substrate at all.
    pub fn vacuum() -> Self {
        Self { epsilon: 1.0, f_c: 0.0 }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn contrast(&self) -> f64 {
        self.f_c
    }
}

/// A depolarization factor or eigenvalue of the coupling matrix.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SpectralValue(f64);

impl SpectralValue {
    pub fn new(n: f64) -> Result<Self> {
        if !(n.is_finite() && n >= 0.0) {
            return Err(Error::Domain(format!("spectral value must be finite and non-negative, got {n}")));
        }
        Ok(Self(n))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Image contrast `(1 − ε)/(1 + ε)` of a half-space with permittivity `ε`.
pub fn contrast_factor(epsilon: f64) -> Result<f64> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::Domain(format!("substrate permittivity must be positive, got {epsilon}")));
    }
    if epsilon.is_infinite() {
        return Ok(-1.0);
    }
    Ok((1.0 - epsilon) / (1.0 + epsilon))
}

/// Isolated-sphere mode constant `l/(2l+1)`.
pub fn n0(l: usize) -> Result<SpectralValue> {
    if l < 1 {
        return Err(Error::Domain("multipole order must be at least 1".into()));
    }
    Ok(SpectralValue(n0_unchecked(l)))
}

#[inline]
pub(crate) fn n0_unchecked(l: usize) -> f64 {
    let l = l as f64;
    l / (2.0 * l + 1.0)
}

/// Spectral variable `u = ω(ω + iγ)` with `omega` in units of `ω_p`.
pub fn u_of_omega(material: &DrudeMaterial, omega: Complex64) -> Complex64 {
    omega * (omega + Complex64::new(0.0, material.gamma_ratio))
}

/// Frequency of the proper mode attached to a spectral value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeFrequency {
    /// In units of `ω_p`; zero when overdamped.
    pub omega: f64,
    pub overdamped: bool,
}

/// Real part of the root of `ω² + iγω = n`, i.e. `sqrt(n − (γ/2)²)`.
pub fn omega_of_n(material: &DrudeMaterial, n: SpectralValue) -> ModeFrequency {
    match mode_omega(n.0, material.overdamping_threshold()) {
        Some(omega) => ModeFrequency { omega, overdamped: false },
        None => ModeFrequency { omega: 0.0, overdamped: true },
    }
}

#[inline]
pub(crate) fn mode_omega(n: f64, threshold: f64) -> Option<f64> {
    let radicand = n - threshold;
    (radicand > 0.0).then(|| radicand.sqrt())
}

/// `ω(n) − ω(n_ref)` without the cancellation of subtracting two square roots.
/// The reference must be underdamped.
#[inline]
pub(crate) fn mode_shift(n: f64, n_ref: f64, threshold: f64) -> (f64, bool) {
    let reference = n_ref - threshold;
    debug_assert!(reference > 0.0);
    let radicand = n - threshold;
    if radicand > 0.0 {
        ((n - n_ref) / (radicand.sqrt() + reference.sqrt()), false)
    } else {
        (-reference.sqrt(), true)
    }
}

/// `dω/dn = 1 / (2 sqrt(n − (γ/2)²))`, zero for overdamped values.
#[inline]
pub(crate) fn mode_slope(n: f64, threshold: f64) -> f64 {
    let radicand = n - threshold;
    if radicand > 0.0 {
        0.5 / radicand.sqrt()
    } else {
        0.0
    }
}

/// Multipolar polarizability `α_l` in the spectral form
/// `n₀/(n₀ − u) · R^{2l+1}`, with `omega` in units of `ω_p`.
pub fn polarizability(material: &DrudeMaterial, l: usize, omega: Complex64, radius: f64) -> Result<Complex64> {
    polarizability_spectral(l, u_of_omega(material, omega), radius)
}

pub fn polarizability_spectral(l: usize, u: Complex64, radius: f64) -> Result<Complex64> {
    check_order_and_radius(l, radius)?;
    let n = n0_unchecked(l);
    let denom = Complex64::new(n, 0.0) - u;
    if denom.norm() <= 1e-14 * n {
        return Err(Error::Resonance { l, u: u.re });
    }
    Ok(Complex64::new(n, 0.0) / denom * radius.powi(2 * l as i32 + 1))
}

/// Multipolar polarizability from the permittivity,
/// `l(ε − 1) / (l(ε + 1) + 1) · R^{2l+1}`.
pub fn polarizability_from_permittivity(l: usize, epsilon: Complex64, radius: f64) -> Result<Complex64> {
    check_order_and_radius(l, radius)?;
    let lf = l as f64;
    let num = (epsilon - 1.0) * lf;
    let denom = (epsilon + 1.0) * lf + 1.0;
    if denom.norm() <= 1e-14 * num.norm().max(1.0) {
        let u = (Complex64::new(1.0, 0.0) - epsilon).inv();
        return Err(Error::Resonance { l, u: u.re });
    }
    Ok(num / denom * radius.powi(2 * l as i32 + 1))
}

fn check_order_and_radius(l: usize, radius: f64) -> Result<()> {
    if l < 1 {
        return Err(Error::Domain("multipole order must be at least 1".into()));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {radius}")));
    }
    Ok(())
}
