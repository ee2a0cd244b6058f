//! Proper-mode frequencies of the coupled system.
//!
//! Every eigenvalue `n` of an m-block defines a mode through `u(ω) = n`.
//! Within a block the ascending eigenvalues are paired with the ascending
//! isolated-sphere constants `n₀(l)`, `l = max(1, m) ..`, so that the
//! interacting and reference spectra are subtracted term by term.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coupling::MBlock;
use crate::eigensolve::eig_sym;
use crate::materials::{mode_omega, mode_shift, n0_unchecked, DrudeMaterial};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    /// Multipole order of the isolated-sphere mode this one is paired with.
    pub l: usize,
    pub n: f64,
    /// In units of `ω_p`; zero when overdamped.
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockModes {
    pub m: usize,
    pub weight: u32,
    pub modes: Vec<Mode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpectrum {
    pub blocks: Vec<BlockModes>,
    pub overdamped_count: usize,
    /// Eigenvalues outside `[0, 1)`, i.e. modes at or above `ω_p`.
    pub anomalous_count: usize,
}

impl ModeSpectrum {
    /// Number of modes counting the `±m` degeneracy.
    pub fn weighted_count(&self) -> usize {
        self.blocks.iter().map(|b| b.weight as usize * b.modes.len()).sum()
    }

    pub fn m_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// `(omega, weight)` for every mode, block by block.
    pub fn weighted_frequencies(&self) -> impl Iterator<Item = (f64, u32)> + '_ {
        self.blocks.iter().flat_map(|b| b.modes.iter().map(move |mode| (mode.omega, b.weight)))
    }
}

/// Diagonalize every block and map its eigenvalues to mode frequencies.
pub fn modes_from_blocks(blocks: &[MBlock], material: &DrudeMaterial) -> Result<ModeSpectrum> {
    let threshold = material.overdamping_threshold();
    let per_block: Vec<BlockModes> = blocks
        .par_iter()
        .map(|block| {
            let eig = eig_sym(block, false)?;
            let modes = eig
                .eigenvalues
                .iter()
                .enumerate()
                .map(|(i, &n)| Mode { l: block.order(i), n, omega: mode_omega(n, threshold).unwrap_or(0.0) })
                .collect();
            Ok(BlockModes { m: block.m, weight: block.weight(), modes })
        })
        .collect::<Result<_>>()?;

    let mut overdamped_count = 0;
    let mut anomalous_count = 0;
    for b in &per_block {
        for mode in &b.modes {
            if mode.n <= threshold {
                overdamped_count += b.weight as usize;
            }
            if !(0.0..1.0).contains(&mode.n) {
                anomalous_count += b.weight as usize;
            }
        }
    }
    Ok(ModeSpectrum { blocks: per_block, overdamped_count, anomalous_count })
}

/// Zero-point shift of one block, summed over modes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub(crate) struct BlockShift {
    /// `(1/2) Σ (ω_i − ω₀_i)` without the `±m` weight, in `ħω_p`.
    pub energy: f64,
    pub overdamped: usize,
    pub anomalous: usize,
}

/// Sum of paired half-frequency shifts, accumulated in ascending magnitude.
pub(crate) fn paired_shift(eigenvalues: &[f64], l_min: usize, threshold: f64) -> BlockShift {
    let mut terms: Vec<f64> = Vec::with_capacity(eigenvalues.len());
    let mut out = BlockShift::default();
    for (i, &n) in eigenvalues.iter().enumerate() {
        let (shift, overdamped) = mode_shift(n, n0_unchecked(l_min + i), threshold);
        terms.push(0.5 * shift);
        out.overdamped += overdamped as usize;
        out.anomalous += !(0.0..1.0).contains(&n) as usize;
    }
    terms.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    out.energy = terms.iter().sum();
    out
}

/// `ω₀(l)` of the isolated sphere.
pub fn reference_frequency(l: usize, material: &DrudeMaterial) -> f64 {
    mode_omega(n0_unchecked(l), material.overdamping_threshold()).unwrap_or(0.0)
}
