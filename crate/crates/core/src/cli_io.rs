//! Run configuration, command drivers and file formats for the CLI.
//!
//! Every output file starts with a header that echoes the full resolved
//! configuration and the library version: `#`-prefixed lines in CSV, a
//! `header` object in JSON.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{enhancement_ratio, fit_slope, log_grid, SlopeFit, SweepCurve, SweepPoint};
use crate::coupling::{build_all_blocks, Geometry, MBlock, Truncation};
use crate::energetics::{
    convergence_study, converge_in_l, converged_force, force, interaction_energy, ConvergenceReport, EnergyResult,
    ForceMethod, ForceResult,
};
use crate::materials::{DrudeMaterial, SubstrateMaterial};
use crate::spectrum::{modes_from_blocks, ModeSpectrum};
use crate::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const GENERATOR: &str = env!("CARGO_PKG_NAME");

/// Relative disagreement between force paths tolerated by `--verify-force`.
pub const FORCE_VERIFY_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SphereConfig {
    #[serde(rename = "omega_p_eV")]
    pub omega_p_ev: f64,
    pub gamma_ratio: f64,
}

impl Default for SphereConfig {
    fn default() -> Self {
        let al = DrudeMaterial::aluminum();
        Self { omega_p_ev: al.omega_p_ev(), gamma_ratio: al.gamma_ratio() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SubstrateConfig {
    pub epsilon: f64,
}

impl Default for SubstrateConfig {
    fn default() -> Self {
        Self { epsilon: 3.13 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub per_decade: usize,
}

/// Exactly one of the three gap specifications may be given; with none the
/// default `z/R` grid (0.05 to 50, 20 points per decade) is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    #[serde(rename = "R_nm")]
    pub radius_nm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_list: Option<Vec<f64>>,
    #[serde(default, rename = "z_over_R_list", skip_serializing_if = "Option::is_none")]
    pub z_over_r_list: Option<Vec<f64>>,
    #[serde(default, rename = "z_over_R_grid", skip_serializing_if = "Option::is_none")]
    pub z_over_r_grid: Option<GridSpec>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self { radius_nm: 50.0, z_list: None, z_over_r_list: None, z_over_r_grid: None }
    }
}

pub const DEFAULT_GRID: GridSpec = GridSpec { min: 0.05, max: 50.0, per_decade: 20 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MPolicyName {
    Adaptive,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TruncationConfig {
    /// Largest multipole order; the doubling cap when `converge` is set.
    #[serde(rename = "L_max")]
    pub l_max: usize,
    pub m_policy: MPolicyName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_max: Option<usize>,
    pub tol: f64,
    /// Double `L` until converged (true) or use `L_max` as is (false).
    pub converge: bool,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        Self { l_max: 512, m_policy: MPolicyName::Adaptive, m_max: None, tol: 1e-6, converge: true }
    }
}

impl TruncationConfig {
    pub fn truncation(&self) -> Truncation {
        match self.m_policy {
            MPolicyName::Adaptive => Truncation::adaptive(self.l_max, self.tol),
            MPolicyName::Fixed => Truncation::fixed_m(self.l_max, self.m_max.unwrap_or(self.l_max)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub format: OutputFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub sphere: SphereConfig,
    pub substrate: SubstrateConfig,
    pub geometry: GeometryConfig,
    pub truncation: TruncationConfig,
    pub output: OutputConfig,
}

fn line_of(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| l.trim_start().starts_with(key)).map(|i| i + 1)
}

impl RunConfig {
    /// Parse a TOML configuration; errors carry the offending line.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start].lines().count().max(1));
            match line {
                Some(l) => Error::Config(format!("line {l}: {}", e.message())),
                None => Error::Config(e.message().to_string()),
            }
        })?;
        config.validate().map_err(|e| match e {
            Error::Config(msg) => {
                let key = msg.split(':').next().unwrap_or_default().trim().to_string();
                match line_of(text, &key) {
                    Some(l) => Error::Config(format!("line {l}: {msg}")),
                    None => Error::Config(msg),
                }
            }
            other => other,
        })?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Errors are `key: message` so that callers can anchor them.
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| Err(Error::Config(format!("{key}: {msg}")));
        if DrudeMaterial::new(self.sphere.omega_p_ev, self.sphere.gamma_ratio).is_err() {
            if !(self.sphere.omega_p_ev > 0.0) {
                return bad("omega_p_eV", format!("must be positive, got {}", self.sphere.omega_p_ev));
            }
            return bad("gamma_ratio", format!("must be non-negative, got {}", self.sphere.gamma_ratio));
        }
        if !(self.substrate.epsilon > 0.0 && self.substrate.epsilon.is_finite()) {
            return bad("epsilon", format!("must be positive, got {}", self.substrate.epsilon));
        }
        let g = &self.geometry;
        if !(g.radius_nm > 0.0 && g.radius_nm.is_finite()) {
            return bad("R_nm", format!("must be positive, got {}", g.radius_nm));
        }
        let given = [g.z_list.is_some(), g.z_over_r_list.is_some(), g.z_over_r_grid.is_some()];
        if given.iter().filter(|&&b| b).count() > 1 {
            return bad("z_list", "give only one of z_list, z_over_R_list, z_over_R_grid".into());
        }
        for (key, list) in [("z_list", &g.z_list), ("z_over_R_list", &g.z_over_r_list)] {
            if let Some(values) = list {
                if values.is_empty() {
                    return bad(key, "must not be empty".into());
                }
                if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
                    return bad(key, format!("values must be positive, got {v}"));
                }
            }
        }
        if let Some(grid) = g.z_over_r_grid {
            if log_grid(grid.min, grid.max, grid.per_decade).is_err() {
                return bad("z_over_R_grid", format!("invalid grid {grid:?}"));
            }
        }
        let t = &self.truncation;
        if t.l_max < 1 {
            return bad("L_max", "must be at least 1".into());
        }
        if let Some(m) = t.m_max {
            if m > t.l_max {
                return bad("m_max", format!("{m} exceeds L_max = {}", t.l_max));
            }
        }
        if !(t.tol >= 0.0 && t.tol.is_finite()) {
            return bad("tol", format!("must be non-negative, got {}", t.tol));
        }
        Ok(())
    }

    pub fn sphere(&self) -> Result<DrudeMaterial> {
        DrudeMaterial::new(self.sphere.omega_p_ev, self.sphere.gamma_ratio)
    }

    pub fn substrate(&self) -> Result<SubstrateMaterial> {
        SubstrateMaterial::new(self.substrate.epsilon)
    }

    /// Gap ratios `z/R` in ascending order.
    pub fn z_over_r_values(&self) -> Result<Vec<f64>> {
        let g = &self.geometry;
        let mut values = if let Some(list) = &g.z_list {
            list.iter().map(|z| z / g.radius_nm).collect()
        } else if let Some(list) = &g.z_over_r_list {
            list.clone()
        } else {
            let grid = g.z_over_r_grid.unwrap_or(DEFAULT_GRID);
            log_grid(grid.min, grid.max, grid.per_decade)?
        };
        values.sort_by(f64::total_cmp);
        if values.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("geometry: duplicate gap values".into()));
        }
        Ok(values)
    }

    pub fn geometries(&self) -> Result<Vec<Geometry>> {
        let r = self.geometry.radius_nm;
        let g = &self.geometry;
        match &g.z_list {
            Some(_) => {
                let mut zs = g.z_list.clone().unwrap_or_default();
                zs.sort_by(f64::total_cmp);
                zs.iter().map(|&z| Geometry::new(r, z)).collect()
            }
            None => self.z_over_r_values()?.into_iter().map(|x| Geometry::new(r, x * r)).collect(),
        }
    }
}

// ---------------------------------------------------------------- rows

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    #[serde(rename = "z_over_R")]
    pub z_over_r: f64,
    pub energy_hbar_omega_p: f64,
    #[serde(rename = "energy_eV")]
    pub energy_ev: f64,
    #[serde(rename = "L_used")]
    pub l_used: usize,
    pub m_used: usize,
    pub converged: bool,
}

impl From<&EnergyResult> for EnergyRow {
    fn from(r: &EnergyResult) -> Self {
        Self {
            z_over_r: r.z_over_r,
            energy_hbar_omega_p: r.energy,
            energy_ev: r.energy_ev,
            l_used: r.l_used,
            m_used: r.m_used,
            converged: r.converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceRow {
    pub z_nm: f64,
    #[serde(rename = "z_over_R")]
    pub z_over_r: f64,
    #[serde(rename = "force_hbar_omega_p_per_R")]
    pub force_hbar_omega_p_per_r: f64,
    #[serde(rename = "force_eV_per_nm")]
    pub force_ev_per_nm: f64,
    #[serde(rename = "force_N")]
    pub force_n: f64,
    pub method: ForceMethod,
    #[serde(rename = "L_used")]
    pub l_used: usize,
}

impl From<&ForceResult> for ForceRow {
    fn from(r: &ForceResult) -> Self {
        Self {
            z_nm: r.z_nm,
            z_over_r: r.z_over_r,
            force_hbar_omega_p_per_r: r.force,
            force_ev_per_nm: r.force_ev_per_nm,
            force_n: r.force_newton,
            method: r.method,
            l_used: r.l_used,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeRow {
    pub m: usize,
    /// Multipole order of the paired isolated-sphere mode.
    pub l_index: usize,
    pub n: f64,
    pub omega_over_omega_p: f64,
    pub weight: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergeRow {
    #[serde(rename = "L")]
    pub l: usize,
    pub m_used: usize,
    pub energy_hbar_omega_p: f64,
    pub relative_change: Option<f64>,
    pub meets_tol: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub column: String,
    pub x_lo: f64,
    pub x_hi: f64,
    pub exponent: f64,
    pub stderr: f64,
    pub r_squared: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub x: f64,
    pub ratio: f64,
}

// ---------------------------------------------------------------- drivers

/// Energy at every gap of the configuration, ascending in `z/R`.
pub fn run_energy_sweep(config: &RunConfig) -> Result<Vec<EnergyRow>> {
    let sphere = config.sphere()?;
    let substrate = config.substrate()?;
    let t = &config.truncation;
    let results: Vec<EnergyResult> = config
        .geometries()?
        .par_iter()
        .map(|g| {
            if t.converge {
                converge_in_l(g, &sphere, &substrate, t.tol, t.l_max)
            } else {
                interaction_energy(g, &sphere, &substrate, &t.truncation())
            }
        })
        .collect::<Result<_>>()?;
    Ok(results.iter().map(EnergyRow::from).collect())
}

/// A point where the two force paths disagree beyond [`FORCE_VERIFY_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct ForceMismatch {
    pub z_nm: f64,
    pub hellmann_feynman: f64,
    pub finite_difference: f64,
}

pub fn run_force_sweep(config: &RunConfig, verify: bool) -> Result<(Vec<ForceRow>, Vec<ForceMismatch>)> {
    let sphere = config.sphere()?;
    let substrate = config.substrate()?;
    let t = &config.truncation;
    let results: Vec<(ForceResult, Option<ForceResult>)> = config
        .geometries()?
        .par_iter()
        .map(|g| {
            let hf = if t.converge {
                converged_force(g, &sphere, &substrate, t.tol, t.l_max, ForceMethod::HellmannFeynman)?
            } else {
                force(g, &sphere, &substrate, &t.truncation(), ForceMethod::HellmannFeynman)?
            };
            let fd = if verify {
                let fixed = Truncation::fixed_m(hf.l_used, hf.m_used);
                Some(force(g, &sphere, &substrate, &fixed, ForceMethod::FiniteDifference)?)
            } else {
                None
            };
            Ok((hf, fd))
        })
        .collect::<Result<_>>()?;

    let mut mismatches = Vec::new();
    for (hf, fd) in &results {
        if let Some(fd) = fd {
            let scale = hf.force.abs().max(fd.force.abs());
            if (hf.force - fd.force).abs() > FORCE_VERIFY_TOL * scale {
                mismatches.push(ForceMismatch { z_nm: hf.z_nm, hellmann_feynman: hf.force, finite_difference: fd.force });
            }
        }
    }
    Ok((results.iter().map(|(hf, _)| ForceRow::from(hf)).collect(), mismatches))
}

/// Blocks used by `modes` at fixed `L = L_max`.
pub fn modes_blocks(config: &RunConfig, z_over_r: f64) -> Result<Vec<MBlock>> {
    let substrate = config.substrate()?;
    let geometry = Geometry::from_ratio(z_over_r)?;
    let t = &config.truncation;
    let truncation = Truncation::fixed_m(t.l_max, t.m_max.unwrap_or(t.l_max));
    build_all_blocks(&geometry, substrate.contrast(), &truncation)
}

pub fn run_modes(config: &RunConfig, z_over_r: f64) -> Result<(ModeSpectrum, Vec<ModeRow>)> {
    let blocks = modes_blocks(config, z_over_r)?;
    let spectrum = modes_from_blocks(&blocks, &config.sphere()?)?;
    let rows = spectrum
        .blocks
        .iter()
        .flat_map(|b| {
            b.modes.iter().map(move |mode| ModeRow {
                m: b.m,
                l_index: mode.l,
                n: mode.n,
                omega_over_omega_p: mode.omega,
                weight: b.weight,
            })
        })
        .collect();
    Ok((spectrum, rows))
}

pub fn run_converge(config: &RunConfig, z_over_r: f64) -> Result<(ConvergenceReport, Vec<ConvergeRow>)> {
    let geometry = Geometry::new(config.geometry.radius_nm, z_over_r * config.geometry.radius_nm)?;
    let t = &config.truncation;
    let report = convergence_study(&geometry, &config.sphere()?, &config.substrate()?, t.tol, t.l_max)?;
    let rows = report
        .steps
        .iter()
        .map(|s| ConvergeRow {
            l: s.l_max,
            m_used: s.m_used,
            energy_hbar_omega_p: s.energy,
            relative_change: s.relative_change,
            meets_tol: s.meets_tol,
        })
        .collect();
    Ok((report, rows))
}

/// A named numeric table read back from a CSV output.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self
            .headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("column '{name}' not found (have {})", self.headers.join(", "))))?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r[idx]
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("row {}: '{}' in column '{name}' is not a number", i + 1, r[idx])))
            })
            .collect()
    }

    pub fn curve(&self, x: &str, y: &str) -> Result<SweepCurve> {
        SweepCurve::from_xy(&self.column(x)?, &self.column(y)?)
    }
}

/// Read a CSV written by this crate, skipping the `#` header block.
pub fn read_table(path: &Path) -> Result<Table> {
    let file = std::fs::File::open(path)?;
    let mut body = String::new();
    for line in std::io::BufReader::new(file).lines() {
        let line = line?;
        if !line.starts_with('#') {
            body.push_str(&line);
            body.push('\n');
        }
    }
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let headers = reader.headers()?.iter().map(str::to_string).collect();
    let rows = reader
        .records()
        .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok(Table { headers, rows })
}

pub fn run_fit_slope(table: &Table, x: &str, y: &str, window: (f64, f64)) -> Result<(SlopeFit, FitRow)> {
    let fit = fit_slope(&table.curve(x, y)?, window)?;
    let row = FitRow {
        column: y.to_string(),
        x_lo: window.0,
        x_hi: window.1,
        exponent: fit.exponent,
        stderr: fit.stderr,
        r_squared: fit.r_squared,
        points: fit.points,
    };
    Ok((fit, row))
}

pub fn run_compare(full: &Table, reference: &Table, x: &str, y: &str) -> Result<(SweepCurve, Vec<CompareRow>)> {
    let ratio = enhancement_ratio(&full.curve(x, y)?, &reference.curve(x, y)?)?;
    let rows = ratio.points().iter().map(|p: &SweepPoint| CompareRow { x: p.x, ratio: p.y }).collect();
    Ok((ratio, rows))
}

// ---------------------------------------------------------------- writers

/// Provenance echoed at the top of every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub generator: String,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Header {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            generator: GENERATOR.to_string(),
            version: VERSION.to_string(),
            command: command.to_string(),
            config: config.clone(),
            notes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document<R> {
    pub header: Header,
    pub rows: Vec<R>,
}

pub fn write_csv<R: Serialize, W: Write>(mut out: W, header: &Header, rows: &[R]) -> Result<()> {
    let mut head = String::new();
    writeln!(head, "# {} {}", header.generator, header.version).unwrap();
    writeln!(head, "# command: {}", header.command).unwrap();
    for note in &header.notes {
        writeln!(head, "# note: {note}").unwrap();
    }
    writeln!(head, "# config:").unwrap();
    for line in header.config.to_toml_string().lines() {
        writeln!(head, "#   {line}").unwrap();
    }
    out.write_all(head.as_bytes())?;
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_json<R: Serialize, W: Write>(mut out: W, header: &Header, rows: &[R]) -> Result<()> {
    let doc = Document { header: header.clone(), rows: rows.iter().collect() };
    serde_json::to_writer_pretty(&mut out, &doc)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn write_rows<R: Serialize, W: Write>(out: W, format: OutputFormat, header: &Header, rows: &[R]) -> Result<()> {
    match format {
        OutputFormat::Csv => write_csv(out, header, rows),
        OutputFormat::Json => write_json(out, header, rows),
    }
}

/// `row,col,value` dump of a block's lower triangle.
pub fn write_block_csv<W: Write>(out: W, block: &MBlock) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["row", "col", "value"])?;
    for (i, j, v) in block.h.entries() {
        writer.write_record([i.to_string(), j.to_string(), v.to_string()])?;
    }
    writer.flush()?;
    Ok(())
}
