//! Interaction energy and force.
//!
//! The interaction energy is the zero-point energy of the coupled modes minus
//! that of the isolated sphere, both taken at the same truncation:
//!
//! ```text
//! E = (1/2) Σ_m w_m Σ_i [ω(n_{m,i}) − ω(n₀(l_min + i))]        (units of ħω_p)
//! ```
//!
//! with `w_0 = 1` and `w_m = 2` for `m > 0`. The force `F = −dE/dz` is
//! obtained from first-order eigenvalue derivatives, or by central
//! differences of the energy as a cross-check.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coupling::{assemble, Geometry, MPolicy, Truncation};
use crate::eigensolve::{eig_sym, eigen_derivative};
use crate::materials::{mode_slope, DrudeMaterial, SubstrateMaterial};
use crate::spectrum::{paired_shift, BlockShift};
use crate::units;
use crate::{Error, Result};

/// Default hard cap on `L` for convergence studies.
pub const DEFAULT_L_CAP: usize = 4096;
/// Relative gap step of the finite-difference force.
pub const FD_RELATIVE_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyResult {
    pub z_over_r: f64,
    /// In units of `ħω_p`.
    pub energy: f64,
    pub energy_ev: f64,
    pub l_used: usize,
    pub m_used: usize,
    pub converged: bool,
    pub overdamped_count: usize,
    pub anomalous_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForceMethod {
    HellmannFeynman,
    FiniteDifference,
}

impl ForceMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ForceMethod::HellmannFeynman => "hellmann_feynman",
            ForceMethod::FiniteDifference => "finite_difference",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceResult {
    pub z_nm: f64,
    pub z_over_r: f64,
    /// In units of `ħω_p / R`; negative is attractive.
    pub force: f64,
    pub force_ev_per_nm: f64,
    pub force_newton: f64,
    pub method: ForceMethod,
    pub l_used: usize,
    pub m_used: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, Default)]
struct BlockTerms {
    shift: BlockShift,
    /// `dE/dξ` of the block, unweighted.
    slope: f64,
}

struct Accumulated {
    energy: f64,
    slope: f64,
    m_used: usize,
    overdamped: usize,
    anomalous: usize,
}

/// Evaluate blocks in ascending `m` and sum them in that order. Under the
/// adaptive policy blocks are computed in parallel batches and the sweep
/// stops at the first block whose weighted energy is at most `tol/10` of
/// the running total; the stopping index does not depend on batch size.
fn sweep_blocks<F>(truncation: &Truncation, per_block: F) -> Result<Accumulated>
where
    F: Fn(usize) -> Result<BlockTerms> + Sync,
{
    truncation.validate()?;
    let weight = |m: usize| if m == 0 { 1.0 } else { 2.0 };
    let mut acc = Accumulated { energy: 0.0, slope: 0.0, m_used: 0, overdamped: 0, anomalous: 0 };
    let add = |acc: &mut Accumulated, m: usize, t: &BlockTerms| {
        let w = weight(m);
        acc.energy += w * t.shift.energy;
        acc.slope += w * t.slope;
        acc.m_used = m;
        acc.overdamped += w as usize * t.shift.overdamped;
        acc.anomalous += w as usize * t.shift.anomalous;
    };

    match truncation.m_policy {
        MPolicy::Fixed { m_max } => {
            let terms: Vec<BlockTerms> = (0..=m_max).into_par_iter().map(&per_block).collect::<Result<_>>()?;
            for (m, t) in terms.iter().enumerate() {
                add(&mut acc, m, t);
            }
        }
        MPolicy::Adaptive => {
            let batch = rayon::current_num_threads().max(2);
            let mut next = 0;
            'outer: while next <= truncation.l_max {
                let end = (next + batch).min(truncation.l_max + 1);
                let terms: Vec<BlockTerms> = (next..end).into_par_iter().map(&per_block).collect::<Result<_>>()?;
                for (offset, t) in terms.iter().enumerate() {
                    let m = next + offset;
                    add(&mut acc, m, t);
                    let contribution = (weight(m) * t.shift.energy).abs();
                    if m >= 1 && contribution <= 0.1 * truncation.tol * acc.energy.abs() {
                        break 'outer;
                    }
                }
                next = end;
            }
        }
    }
    Ok(acc)
}

fn check_materials(sphere: &DrudeMaterial, substrate: &SubstrateMaterial) -> (f64, f64) {
    (substrate.contrast(), sphere.overdamping_threshold())
}

/// Interaction energy at the given truncation.
pub fn interaction_energy(
    geometry: &Geometry,
    sphere: &DrudeMaterial,
    substrate: &SubstrateMaterial,
    truncation: &Truncation,
) -> Result<EnergyResult> {
    let (f_c, threshold) = check_materials(sphere, substrate);
    let xi = geometry.xi();
    let l_max = truncation.l_max;
    let acc = sweep_blocks(truncation, |m| {
        let block = assemble(m, xi, f_c, l_max);
        let eig = eig_sym(&block, false)?;
        Ok(BlockTerms { shift: paired_shift(&eig.eigenvalues, block.l_min, threshold), slope: 0.0 })
    })?;
    Ok(energy_result(geometry, sphere, truncation.l_max, &acc, true))
}

fn energy_result(geometry: &Geometry, sphere: &DrudeMaterial, l_used: usize, acc: &Accumulated, converged: bool) -> EnergyResult {
    EnergyResult {
        z_over_r: geometry.z_over_r(),
        energy: acc.energy,
        energy_ev: units::energy_to_ev(acc.energy, sphere.omega_p_ev()),
        l_used,
        m_used: acc.m_used,
        converged,
        overdamped_count: acc.overdamped,
        anomalous_count: acc.anomalous,
    }
}

/// Dipole-only energy (`L = 1`).
pub fn dipole_energy(geometry: &Geometry, sphere: &DrudeMaterial, substrate: &SubstrateMaterial) -> Result<EnergyResult> {
    interaction_energy(geometry, sphere, substrate, &Truncation::fixed(1))
}

/// Energy truncated after quadrupoles (`L = 2`).
pub fn quadrupole_energy(geometry: &Geometry, sphere: &DrudeMaterial, substrate: &SubstrateMaterial) -> Result<EnergyResult> {
    interaction_energy(geometry, sphere, substrate, &Truncation::fixed(2))
}

/// One step of a doubling sequence in `L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStep {
    pub l_max: usize,
    pub m_used: usize,
    pub energy: f64,
    /// `|E(L) − E(L_prev)| / |E(L)|`; `None` for the first step.
    pub relative_change: Option<f64>,
    pub meets_tol: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub tol: f64,
    pub steps: Vec<ConvergenceStep>,
    pub result: EnergyResult,
}

fn relative_change(current: f64, previous: f64) -> f64 {
    let delta = (current - previous).abs();
    if delta == 0.0 {
        0.0
    } else {
        delta / current.abs()
    }
}

/// Double `L` (starting from 1, with adaptive `m`) until consecutive
/// energies agree to `tol` relative, or `l_cap` is reached.
pub fn convergence_study(
    geometry: &Geometry,
    sphere: &DrudeMaterial,
    substrate: &SubstrateMaterial,
    tol: f64,
    l_cap: usize,
) -> Result<ConvergenceReport> {
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::Domain(format!("tolerance must be non-negative, got {tol}")));
    }
    if l_cap < 1 {
        return Err(Error::Domain("L cap must be at least 1".into()));
    }
    let mut steps: Vec<ConvergenceStep> = Vec::new();
    let mut l = 1;
    loop {
        let r = interaction_energy(geometry, sphere, substrate, &Truncation::adaptive(l, tol))?;
        let change = steps.last().map(|prev| relative_change(r.energy, prev.energy));
        let meets_tol = tol > 0.0 && change.is_some_and(|c| c <= tol);
        steps.push(ConvergenceStep { l_max: l, m_used: r.m_used, energy: r.energy, relative_change: change, meets_tol });
        if meets_tol || l >= l_cap {
            return Ok(ConvergenceReport { tol, steps, result: EnergyResult { converged: meets_tol, ..r } });
        }
        l = (2 * l).min(l_cap);
    }
}

/// Energy converged in `L` to relative `tol`; see [`convergence_study`].
pub fn converge_in_l(
    geometry: &Geometry,
    sphere: &DrudeMaterial,
    substrate: &SubstrateMaterial,
    tol: f64,
    l_cap: usize,
) -> Result<EnergyResult> {
    convergence_study(geometry, sphere, substrate, tol, l_cap).map(|r| r.result)
}

/// `F = −dE/dz` at the given truncation, in `ħω_p / R` (plus eV/nm and N).
///
/// Under the adaptive policy the `m` range is fixed by the energy sweep and
/// reused for the finite-difference neighbours.
pub fn force(
    geometry: &Geometry,
    sphere: &DrudeMaterial,
    substrate: &SubstrateMaterial,
    truncation: &Truncation,
    method: ForceMethod,
) -> Result<ForceResult> {
    let (f_c, threshold) = check_materials(sphere, substrate);
    let l_max = truncation.l_max;

    let (force, m_used) = match method {
        ForceMethod::HellmannFeynman => {
            let xi = geometry.xi();
            let acc = sweep_blocks(truncation, |m| {
                let block = assemble(m, xi, f_c, l_max);
                let eig = eig_sym(&block, true)?;
                let derivs = eigen_derivative(&block, &eig)?;
                let slope = 0.5
                    * eig
                        .eigenvalues
                        .iter()
                        .zip(&derivs)
                        .map(|(&n, &dn)| mode_slope(n, threshold) * dn)
                        .sum::<f64>();
                Ok(BlockTerms { shift: paired_shift(&eig.eigenvalues, block.l_min, threshold), slope })
            })?;
            (-acc.slope * geometry.dxi_dratio(), acc.m_used)
        }
        ForceMethod::FiniteDifference => {
            let centre = interaction_energy(geometry, sphere, substrate, truncation)?;
            let fixed = Truncation::fixed_m(l_max, centre.m_used);
            let ratio = geometry.z_over_r();
            let h = FD_RELATIVE_STEP * ratio;
            let plus = interaction_energy(&Geometry::from_ratio(ratio + h)?, sphere, substrate, &fixed)?;
            let minus = interaction_energy(&Geometry::from_ratio(ratio - h)?, sphere, substrate, &fixed)?;
            (-(plus.energy - minus.energy) / (2.0 * h), centre.m_used)
        }
    };
    Ok(force_result(geometry, sphere, force, method, l_max, m_used, true))
}

fn force_result(
    geometry: &Geometry,
    sphere: &DrudeMaterial,
    force: f64,
    method: ForceMethod,
    l_used: usize,
    m_used: usize,
    converged: bool,
) -> ForceResult {
    let ev_per_nm = units::force_to_ev_per_nm(force, sphere.omega_p_ev(), geometry.radius_nm());
    ForceResult {
        z_nm: geometry.gap_nm(),
        z_over_r: geometry.z_over_r(),
        force,
        force_ev_per_nm: ev_per_nm,
        force_newton: units::ev_per_nm_to_newton(ev_per_nm),
        method,
        l_used,
        m_used,
        converged,
    }
}

/// Force at the truncation that converges the energy to `tol`.
pub fn converged_force(
    geometry: &Geometry,
    sphere: &DrudeMaterial,
    substrate: &SubstrateMaterial,
    tol: f64,
    l_cap: usize,
    method: ForceMethod,
) -> Result<ForceResult> {
    let energy = converge_in_l(geometry, sphere, substrate, tol, l_cap)?;
    let truncation = Truncation::fixed_m(energy.l_used, energy.m_used);
    let f = force(geometry, sphere, substrate, &truncation, method)?;
    Ok(ForceResult { converged: energy.converged, ..f })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn al() -> DrudeMaterial {
        DrudeMaterial::aluminum()
    }

    fn sapphire() -> SubstrateMaterial {
        SubstrateMaterial::sapphire()
    }

    #[test]
    fn no_substrate_no_energy() {
        let g = Geometry::from_ratio(0.1).unwrap();
        for t in [Truncation::fixed(8), Truncation::adaptive(16, 1e-6)] {
            let e = interaction_energy(&g, &al(), &SubstrateMaterial::vacuum(), &t).unwrap();
            assert_eq!(e.energy, 0.0);
            let f = force(&g, &al(), &SubstrateMaterial::vacuum(), &t, ForceMethod::HellmannFeynman).unwrap();
            assert_eq!(f.force, 0.0);
        }
    }

    #[test]
    fn dipole_hand_sum() {
        // two 1×1 blocks at ξ = 0.25, see the coupling tests
        let g = Geometry::from_ratio(1.0).unwrap();
        let sub = SubstrateMaterial::new(3.13).unwrap();
        let e = dipole_energy(&g, &al().undamped(), &sub).unwrap();
        let f_c = sub.contrast();
        let n_par = 1.0 / 3.0 + f_c * (2.0 / 3.0) / 64.0;
        let n_perp = 1.0 / 3.0 + f_c * (1.0 / 3.0) / 64.0;
        let hand = 0.5 * (n_par.sqrt() + 2.0 * n_perp.sqrt() - 3.0 * (1.0f64 / 3.0).sqrt());
        assert_relative_eq!(e.energy, hand, epsilon = 1e-15, max_relative = 1e-12);
        assert!((e.energy + 4.67e-3).abs() < 0.005 * 4.67e-3, "{}", e.energy);
        assert_eq!((e.l_used, e.m_used), (1, 1));
    }

    #[test]
    fn adaptive_matches_fixed() {
        let g = Geometry::from_ratio(1.0 / 0.1 - 1.0).unwrap(); // ξ = 0.05
        let fixed = interaction_energy(&g, &al(), &sapphire(), &Truncation::fixed(24)).unwrap();
        let adaptive = interaction_energy(&g, &al(), &sapphire(), &Truncation::adaptive(24, 1e-6)).unwrap();
        assert!(adaptive.m_used < 24 / 2, "m_used = {}", adaptive.m_used);
        assert!((adaptive.energy - fixed.energy).abs() <= 1e-6 * fixed.energy.abs());
    }

    #[test]
    fn attraction_and_ordering() {
        for ratio in [0.05, 0.3, 1.0, 5.0] {
            let g = Geometry::from_ratio(ratio).unwrap();
            let d = dipole_energy(&g, &al(), &sapphire()).unwrap().energy;
            let q = quadrupole_energy(&g, &al(), &sapphire()).unwrap().energy;
            let full = interaction_energy(&g, &al(), &sapphire(), &Truncation::fixed(16)).unwrap().energy;
            assert!(d < 0.0);
            assert!(d.abs() <= q.abs() && q.abs() <= full.abs(), "{ratio}: {d} {q} {full}");
        }
    }

    #[test]
    fn small_gap_first_order_dipole() {
        // ω shift to first order in the coupling: (1/2)(dω/dn)·Σ_w δn with
        // Σ_w δn = f_c (2/3 + 2·1/3) ξ³ and dω/dn = √3/2 at n = 1/3.
        let xi = 0.01;
        let g = Geometry::from_ratio(0.5 / xi - 1.0).unwrap();
        let sub = sapphire();
        let e = dipole_energy(&g, &al().undamped(), &sub).unwrap();
        let approx = 0.5 * (3f64.sqrt() / 2.0) * (4.0 / 3.0) * sub.contrast() * xi.powi(3);
        assert!((e.energy - approx).abs() <= 0.01 * approx.abs(), "{} vs {approx}", e.energy);
    }

    #[test]
    fn force_paths_agree() {
        let g = Geometry::new(50.0, 20.0).unwrap();
        let t = Truncation::fixed(12);
        let hf = force(&g, &al(), &sapphire(), &t, ForceMethod::HellmannFeynman).unwrap();
        let fd = force(&g, &al(), &sapphire(), &t, ForceMethod::FiniteDifference).unwrap();
        assert!(hf.force < 0.0);
        assert!((hf.force - fd.force).abs() <= 1e-4 * hf.force.abs(), "{} {}", hf.force, fd.force);
        assert_eq!(hf.method, ForceMethod::HellmannFeynman);
    }

    #[test]
    fn convergence_doubling() {
        let g = Geometry::from_ratio(10.0).unwrap();
        let report = convergence_study(&g, &al(), &sapphire(), 1e-6, 64).unwrap();
        assert!(report.result.converged);
        let ls: Vec<_> = report.steps.iter().map(|s| s.l_max).collect();
        assert_eq!(ls[..3], [1, 2, 4]);
        assert!(report.steps.last().unwrap().meets_tol);

        let stuck = convergence_study(&g, &al(), &sapphire(), 0.0, 6).unwrap();
        assert!(!stuck.result.converged);
        assert_eq!(stuck.steps.iter().map(|s| s.l_max).collect::<Vec<_>>(), vec![1, 2, 4, 6]);
        assert!(convergence_study(&g, &al(), &sapphire(), -1.0, 6).is_err());
    }

    #[test]
    fn invalid_truncation() {
        let g = Geometry::from_ratio(1.0).unwrap();
        assert!(interaction_energy(&g, &al(), &sapphire(), &Truncation::fixed(0)).is_err());
        assert!(interaction_energy(&g, &al(), &sapphire(), &Truncation::fixed_m(2, 3)).is_err());
    }
}
