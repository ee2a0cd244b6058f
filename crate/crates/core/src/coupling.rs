//! Sphere–image multipolar coupling matrix.
//!
//! For azimuthal index `m` the multipoles `l = max(1, m) ..= L` of the sphere
//! couple to the image multipoles in the substrate through
//!
//! ```text
//! H(l, l') = n₀(l) δ(l, l') + f_c · K(l, l', m) · ξ^{l + l' + 1},   ξ = R / (2(z + R))
//! K(l, l', m) = sqrt(l l' / ((2l+1)(2l'+1))) · (l+l')! / sqrt((l+m)!(l−m)!(l'+m)!(l'−m)!)
//! ```
//!
//! Blocks for `−m` equal those for `+m` and are stored once.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::materials::n0_unchecked;
use crate::special::ln_factorial;
use crate::{Error, Result};

/// Sphere radius and minimum gap to the substrate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    radius_nm: f64,
    gap_nm: f64,
}

impl Geometry {
    pub fn new(radius_nm: f64, gap_nm: f64) -> Result<Self> {
        if !(radius_nm.is_finite() && radius_nm > 0.0) {
            return Err(Error::Domain(format!("radius must be positive, got {radius_nm}")));
        }
        if !(gap_nm.is_finite() && gap_nm > 0.0) {
            return Err(Error::Domain(format!("gap must be positive, got {gap_nm}")));
        }
        Ok(Self { radius_nm, gap_nm })
    }

    /// Unit-radius geometry with gap `z/R`.
    pub fn from_ratio(z_over_r: f64) -> Result<Self> {
        Self::new(1.0, z_over_r)
    }

    pub fn radius_nm(&self) -> f64 {
        self.radius_nm
    }

    pub fn gap_nm(&self) -> f64 {
        self.gap_nm
    }

    pub fn z_over_r(&self) -> f64 {
        self.gap_nm / self.radius_nm
    }

    /// Coupling strength `R / (2(z + R))`, in `(0, 1/2)`.
    pub fn xi(&self) -> f64 {
        xi_from_ratio(self.z_over_r())
    }

    /// `dξ/d(z/R) = −1 / (2 (1 + z/R)²)`.
    pub fn dxi_dratio(&self) -> f64 {
        let s = 1.0 + self.z_over_r();
        -0.5 / (s * s)
    }

    /// Same radius, different gap.
    pub fn with_gap(&self, gap_nm: f64) -> Result<Self> {
        Self::new(self.radius_nm, gap_nm)
    }
}

pub(crate) fn xi_from_ratio(z_over_r: f64) -> f64 {
    0.5 / (1.0 + z_over_r)
}

/// How many azimuthal blocks enter a calculation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MPolicy {
    /// Blocks `m = 0 ..= m_max`.
    Fixed { m_max: usize },
    /// Blocks are added in ascending `m` until one contributes less than
    /// `tol / 10` of the running energy.
    Adaptive,
}

/// Multipole truncation of the expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub l_max: usize,
    pub m_policy: MPolicy,
    /// Relative energy tolerance used by adaptive `m` and by convergence in `L`.
    pub tol: f64,
}

impl Truncation {
    /// All blocks `m = 0 ..= l_max`.
    pub fn fixed(l_max: usize) -> Self {
        Self { l_max, m_policy: MPolicy::Fixed { m_max: l_max }, tol: 0.0 }
    }

    pub fn fixed_m(l_max: usize, m_max: usize) -> Self {
        Self { l_max, m_policy: MPolicy::Fixed { m_max }, tol: 0.0 }
    }

    pub fn adaptive(l_max: usize, tol: f64) -> Self {
        Self { l_max, m_policy: MPolicy::Adaptive, tol }
    }

    pub fn validate(&self) -> Result<()> {
        if self.l_max < 1 {
            return Err(Error::Domain("L_max must be at least 1".into()));
        }
        match self.m_policy {
            MPolicy::Fixed { m_max } if m_max > self.l_max => Err(Error::Domain(format!(
                "m_max = {m_max} exceeds L_max = {}",
                self.l_max
            ))),
            MPolicy::Adaptive if !(self.tol.is_finite() && self.tol >= 0.0) => {
                Err(Error::Domain(format!("tolerance must be non-negative, got {}", self.tol)))
            }
            _ => Ok(()),
        }
    }

    /// Largest `m` the policy could ever visit.
    pub fn m_ceiling(&self) -> usize {
        match self.m_policy {
            MPolicy::Fixed { m_max } => m_max,
            MPolicy::Adaptive => self.l_max,
        }
    }
}

/// Real symmetric matrix stored as its packed lower triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct SymPacked {
    dim: usize,
    data: Vec<f64>,
}

impl SymPacked {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * (dim + 1) / 2] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn index(i: usize, j: usize) -> usize {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        r * (r + 1) / 2 + c
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[Self::index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[Self::index(i, j)] = value;
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = self.get(i, j);
                out[i * n + j] = v;
                out[j * n + i] = v;
            }
        }
        out
    }

    pub fn from_dense(dim: usize, dense: &[f64]) -> Self {
        assert_eq!(dense.len(), dim * dim);
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..=i {
                m.set(i, j, dense[i * dim + j]);
            }
        }
        m
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..=i {
                let v = self.get(i, j);
                acc += if i == j { v * v } else { 2.0 * v * v };
            }
        }
        acc.sqrt()
    }

    /// `vᵀ A v`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            let row = &self.data[i * (i + 1) / 2..i * (i + 1) / 2 + i + 1];
            let mut off = 0.0;
            for (j, a) in row[..i].iter().enumerate() {
                off += a * v[j];
            }
            acc += v[i] * (row[i] * v[i] + 2.0 * off);
        }
        acc
    }

    /// `A v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n];
        for i in 0..n {
            for j in 0..=i {
                let a = self.get(i, j);
                out[i] += a * v[j];
                if i != j {
                    out[j] += a * v[i];
                }
            }
        }
        out
    }

    /// Row/column/value triples of the lower triangle.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |i| (0..=i).map(move |j| (i, j, self.get(i, j))))
    }
}

/// The coupling matrix for one azimuthal index, with its `ξ` derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct MBlock {
    pub m: usize,
    pub l_min: usize,
    pub l_max: usize,
    pub xi: f64,
    pub f_c: f64,
    pub h: SymPacked,
    pub dh_dxi: SymPacked,
}

impl MBlock {
    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    /// `±m` degeneracy.
    pub fn weight(&self) -> u32 {
        if self.m == 0 {
            1
        } else {
            2
        }
    }

    /// Multipole order of row `i`.
    pub fn order(&self, i: usize) -> usize {
        self.l_min + i
    }

    /// The same block at another coupling strength.
    pub fn rebuild_at(&self, xi: f64) -> MBlock {
        assemble(self.m, xi, self.f_c, self.l_max)
    }
}

/// `ln K(l, l', m)`.
pub fn ln_coupling_coeff(l: usize, lp: usize, m: usize) -> Result<f64> {
    let l_min = m.max(1);
    if l < l_min || lp < l_min {
        return Err(Error::Domain(format!(
            "orders ({l}, {lp}) must be at least max(1, m) = {l_min}"
        )));
    }
    Ok(ln_coeff_unchecked(l, lp, m))
}

#[inline]
fn ln_coeff_unchecked(l: usize, lp: usize, m: usize) -> f64 {
    // fixed evaluation order keeps K(l, l') and K(l', l) bitwise equal
    let (l, lp) = (l.max(lp), l.min(lp));
    let (lf, lpf) = (l as f64, lp as f64);
    let prefactor = 0.5 * ((lf * lpf).ln() - ((2.0 * lf + 1.0) * (2.0 * lpf + 1.0)).ln());
    prefactor + ln_factorial(l + lp)
        - 0.5 * (ln_factorial(l + m) + ln_factorial(l - m) + ln_factorial(lp + m) + ln_factorial(lp - m))
}

/// Sphere–image coupling coefficient `K(l, l', m)`.
pub fn coupling_coeff(l: usize, lp: usize, m: usize) -> Result<f64> {
    ln_coupling_coeff(l, lp, m).map(f64::exp)
}

/// Assemble the block for index `m` at the given geometry.
pub fn build_block(m: usize, geometry: &Geometry, f_c: f64, l_max: usize) -> Result<MBlock> {
    if l_max < 1 {
        return Err(Error::Domain("L_max must be at least 1".into()));
    }
    if m > l_max {
        return Err(Error::Domain(format!("m = {m} exceeds L_max = {l_max}")));
    }
    if !f_c.is_finite() {
        return Err(Error::Domain(format!("contrast factor must be finite, got {f_c}")));
    }
    Ok(assemble(m, geometry.xi(), f_c, l_max))
}

pub(crate) fn assemble(m: usize, xi: f64, f_c: f64, l_max: usize) -> MBlock {
    let l_min = m.max(1);
    let dim = l_max + 1 - l_min;
    let mut h = SymPacked::zeros(dim);
    let mut dh = SymPacked::zeros(dim);
    let ln_xi = xi.ln();
    let couple = f_c != 0.0 && xi > 0.0;

    // ln of the m-dependent factorial half of K for each row, reused across columns
    let half: Vec<f64> = (l_min..=l_max)
        .map(|l| {
            let lf = l as f64;
            0.5 * (lf.ln() - (2.0 * lf + 1.0).ln()) - 0.5 * (ln_factorial(l + m) + ln_factorial(l - m))
        })
        .collect();

    for i in 0..dim {
        let l = l_min + i;
        for j in 0..=i {
            let lp = l_min + j;
            let mut value = if i == j { n0_unchecked(l) } else { 0.0 };
            let mut slope = 0.0;
            if couple {
                let ln_k = half[i] + half[j] + ln_factorial(l + lp);
                let power = (l + lp + 1) as f64;
                value += f_c * (ln_k + power * ln_xi).exp();
                slope = f_c * power * (ln_k + (power - 1.0) * ln_xi).exp();
            }
            h.set(i, j, value);
            dh.set(i, j, slope);
        }
    }
    MBlock { m, l_min, l_max, xi, f_c, h, dh_dxi: dh }
}

/// Blocks `m = 0 ..= m_ceiling`, ascending in `m`.
pub fn build_all_blocks(geometry: &Geometry, f_c: f64, truncation: &Truncation) -> Result<Vec<MBlock>> {
    truncation.validate()?;
    let xi = geometry.xi();
    Ok((0..=truncation.m_ceiling())
        .into_par_iter()
        .map(|m| assemble(m, xi, f_c, truncation.l_max))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn dipole_coefficients_match_image_dipole() {
        // Image-dipole electrostatics: a dipole normal to the plane sees twice
        // the reflected field of one parallel to it (2p/D³ against p/D³), and
        // each is scaled by n₀(1) = 1/3 in the mode condition.
        let perpendicular = coupling_coeff(1, 1, 0).unwrap();
        let parallel = coupling_coeff(1, 1, 1).unwrap();
        assert_relative_eq!(perpendicular, 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(parallel, 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(perpendicular / parallel, 2.0);
    }

    #[test]
    fn coefficient_domain() {
        assert!(coupling_coeff(1, 2, 2).is_err());
        assert!(coupling_coeff(0, 1, 0).is_err());
        assert!(coupling_coeff(2, 2, 2).is_ok());
    }

    #[test]
    fn quadrupole_coefficient_closed_form() {
        // sqrt(4/25) · 4! / (2! 2!) = 2.4
        assert_relative_eq!(coupling_coeff(2, 2, 0).unwrap(), 2.4, epsilon = 1e-14);
        // sqrt(2/15) · 3! / sqrt(1!·1!·2!·2!)
        let expected = (2.0f64 / 15.0).sqrt() * 3.0;
        assert_relative_eq!(coupling_coeff(1, 2, 0).unwrap(), expected, epsilon = 1e-14);
    }

    #[test]
    fn isolated_sphere_block_is_diagonal() {
        let expected = [1.0 / 3.0, 2.0 / 5.0, 3.0 / 7.0, 4.0 / 9.0, 5.0 / 11.0];
        let g = Geometry::from_ratio(0.3).unwrap();
        let b = build_block(0, &g, 0.0, 5).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let want = if i == j { expected[i] } else { 0.0 };
                assert_eq!(b.h.get(i, j), want);
                assert_eq!(b.dh_dxi.get(i, j), 0.0);
            }
        }
        let far = build_block(0, &Geometry::from_ratio(1e9).unwrap(), -0.516, 5).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let want = if i == j { expected[i] } else { 0.0 };
                assert!((far.h.get(i, j) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dipole_block_hand_value() {
        // ξ = 0.25 at z/R = 1
        let g = Geometry::from_ratio(1.0).unwrap();
        assert_eq!(g.xi(), 0.25);
        let b = build_block(0, &g, -0.516, 1).unwrap();
        assert_eq!(b.dim(), 1);
        let want = 1.0 / 3.0 - 0.516 * (2.0 / 3.0) * 0.25f64.powi(3);
        assert_relative_eq!(b.h.get(0, 0), want, epsilon = 1e-15);
        assert!((b.h.get(0, 0) - 0.327_958).abs() < 5e-7);
        assert_relative_eq!(b.dh_dxi.get(0, 0), -0.516 * (2.0 / 3.0) * 3.0 * 0.0625, epsilon = 1e-15);
    }

    #[test]
    fn block_counts() {
        let g = Geometry::from_ratio(1.0).unwrap();
        let blocks = build_all_blocks(&g, -0.5, &Truncation::fixed(3)).unwrap();
        let dims: Vec<_> = blocks.iter().map(MBlock::dim).collect();
        assert_eq!(dims, vec![3, 3, 2, 1]);
        assert_eq!(blocks.iter().map(|b| b.m).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        let dipole = build_all_blocks(&g, -0.5, &Truncation::fixed(1)).unwrap();
        assert_eq!(dipole.len(), 2);
        assert!(dipole.iter().all(|b| b.dim() == 1));
        assert!(build_all_blocks(&g, -0.5, &Truncation::fixed_m(3, 4)).is_err());
        assert!(build_block(4, &g, -0.5, 3).is_err());
    }

    #[test]
    fn scale_invariance_is_bitwise() {
        let a = build_block(1, &Geometry::new(100.0, 10.0).unwrap(), -0.516, 12).unwrap();
        let b = build_block(1, &Geometry::new(10.0, 1.0).unwrap(), -0.516, 12).unwrap();
        let c = build_block(1, &Geometry::new(20.0, 2.0).unwrap(), -0.516, 12).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn large_blocks_stay_finite() {
        let g = Geometry::from_ratio(1.0 / 0.999 - 1.0).unwrap();
        assert_relative_eq!(g.xi(), 0.4995, epsilon = 1e-12);
        let b = build_block(0, &g, -0.516, 2000).unwrap();
        assert!(b.h.entries().all(|(_, _, v)| v.is_finite()));
        assert!(b.dh_dxi.entries().all(|(_, _, v)| v.is_finite()));
    }

    #[test]
    fn packed_storage() {
        let mut s = SymPacked::zeros(3);
        s.set(0, 2, 5.0);
        assert_eq!(s.get(2, 0), 5.0);
        let dense = s.to_dense();
        assert_eq!(SymPacked::from_dense(3, &dense), s);
        assert_eq!(s.quadratic_form(&[1.0, 0.0, 1.0]), 10.0);
        assert_eq!(s.mul_vec(&[1.0, 0.0, 0.0]), vec![0.0, 0.0, 5.0]);
    }

    proptest! {
        #[test]
        fn coefficient_symmetric(l in 1usize..=40, lp in 1usize..=40, m in 0usize..=40) {
            prop_assume!(l >= m && lp >= m);
            let a = coupling_coeff(l, lp, m).unwrap();
            let b = coupling_coeff(lp, l, m).unwrap();
            prop_assert!(a > 0.0 && a.is_finite());
            prop_assert_eq!(a, b);
        }

        #[test]
        fn derivative_matches_finite_difference(
            xi in 0.05f64..0.45,
            m in 0usize..4,
            l_max in 4usize..=30,
            f_c in -0.99f64..-0.01,
        ) {
            let h = 1e-5;
            let b = assemble(m, xi, f_c, l_max);
            // coupling term straight from the coefficient, without the n₀ diagonal
            let term = |l: usize, lp: usize, x: f64| f_c * coupling_coeff(l, lp, m).unwrap() * x.powi((l + lp + 1) as i32);
            // relative to the block scale: entries ~ξ^61 carry O((h/ξ)² p²) truncation error
            let scale = b.dh_dxi.entries().map(|(_, _, d)| d.abs()).fold(0.0, f64::max);
            for (i, j, d) in b.dh_dxi.entries() {
                let (l, lp) = (b.order(i), b.order(j));
                let fd = (term(l, lp, xi + h) - term(l, lp, xi - h)) / (2.0 * h);
                prop_assert!((fd - d).abs() <= 1e-6 * scale, "({i},{j}): {fd} vs {d}");
            }
        }
    }
}
