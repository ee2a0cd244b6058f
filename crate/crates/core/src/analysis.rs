//! Power-law exponents and enhancement ratios of energy/force sweeps.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const MIN_FIT_POINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub x: f64,
    pub y: f64,
    /// Multipole truncation used for this point, if known.
    pub l_used: Option<usize>,
}

/// A curve `y(x)` with strictly increasing `x`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepCurve {
    points: Vec<SweepPoint>,
}

impl SweepCurve {
    pub fn new(points: Vec<SweepPoint>) -> Result<Self> {
        for pair in points.windows(2) {
            if !(pair[1].x > pair[0].x) {
                return Err(Error::Alignment(format!("x must be strictly increasing ({} then {})", pair[0].x, pair[1].x)));
            }
        }
        if let Some(p) = points.iter().find(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::Alignment(format!("non-finite point ({}, {})", p.x, p.y)));
        }
        Ok(Self { points })
    }

    pub fn from_xy(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::Alignment(format!("{} x values against {} y values", xs.len(), ys.len())));
        }
        Self::new(xs.iter().zip(ys).map(|(&x, &y)| SweepPoint { x, y, l_used: None }).collect())
    }

    pub fn points(&self) -> &[SweepPoint] {
        &self.points
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.x)
    }

    pub fn ys(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.y)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// True when `y` never decreases as `x` decreases.
    pub fn is_monotone_increasing_towards_small_x(&self) -> bool {
        self.points.windows(2).all(|p| p[0].y >= p[1].y)
    }
}

/// Least-squares power law `|y| ∝ x^exponent` over a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub exponent: f64,
    pub stderr: f64,
    pub window: (f64, f64),
    pub r_squared: f64,
    pub points: usize,
}

/// Ordinary least squares on `(ln x, ln |y|)` for points with
/// `lo ≤ x ≤ hi`.
pub fn fit_slope(curve: &SweepCurve, window: (f64, f64)) -> Result<SlopeFit> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::Fit(format!("empty window [{lo}, {hi}]")));
    }
    let selected: Vec<&SweepPoint> = curve.points.iter().filter(|p| p.x >= lo && p.x <= hi).collect();
    if selected.len() < MIN_FIT_POINTS {
        return Err(Error::Fit(format!(
            "window [{lo}, {hi}] holds {} points, need at least {MIN_FIT_POINTS}",
            selected.len()
        )));
    }
    let sign = selected[0].y.signum();
    if selected.iter().any(|p| p.y == 0.0 || p.y.signum() != sign || p.x <= 0.0) {
        return Err(Error::Fit(format!("sign change or zero inside window [{lo}, {hi}]")));
    }

    let n = selected.len() as f64;
    let xs: Vec<f64> = selected.iter().map(|p| p.x.ln()).collect();
    let ys: Vec<f64> = selected.iter().map(|p| p.y.abs().ln()).collect();
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        let (dx, dy) = (x - mean_x, y - mean_y);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let exponent = sxy / sxx;
    let intercept = mean_y - exponent * mean_x;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - exponent * x).powi(2)).sum();
    let stderr = (ss_res / (n - 2.0) / sxx).sqrt();
    let r_squared = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
    Ok(SlopeFit { exponent, stderr, window, r_squared, points: selected.len() })
}

/// Pointwise `|y_full / y_reference|` on a shared grid.
pub fn enhancement_ratio(full: &SweepCurve, reference: &SweepCurve) -> Result<SweepCurve> {
    if full.len() != reference.len() {
        return Err(Error::Alignment(format!("{} points against {}", full.len(), reference.len())));
    }
    let mut points = Vec::with_capacity(full.len());
    for (a, b) in full.points.iter().zip(&reference.points) {
        let scale = a.x.abs().max(b.x.abs());
        if (a.x - b.x).abs() > 1e-12 * scale {
            return Err(Error::Alignment(format!("grids differ at x = {} vs {}", a.x, b.x)));
        }
        if b.y == 0.0 {
            return Err(Error::Alignment(format!("reference vanishes at x = {}", b.x)));
        }
        points.push(SweepPoint { x: a.x, y: (a.y / b.y).abs(), l_used: a.l_used });
    }
    SweepCurve::new(points)
}

/// `count` points per decade from `lo` to `hi` inclusive, log-spaced.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && per_decade > 0) {
        return Err(Error::Domain(format!("invalid grid [{lo}, {hi}] with {per_decade} points per decade")));
    }
    let decades = (hi / lo).log10();
    let steps = (decades * per_decade as f64).round().max(1.0) as usize;
    let (a, b) = (lo.log10(), hi.log10());
    Ok((0..=steps)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == steps {
                hi
            } else {
                10f64.powf(a + (b - a) * i as f64 / steps as f64)
            }
        })
        .collect())
}
