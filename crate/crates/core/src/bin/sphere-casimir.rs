use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sphere_casimir::cli_io::{
    modes_blocks, read_table, run_compare, run_converge, run_energy_sweep, run_fit_slope, run_force_sweep, run_modes,
    write_block_csv, write_rows, Header, OutputFormat, RunConfig,
};
use sphere_casimir::Error;

/// Non-retarded dispersive energy and force between a nanosphere and a substrate.
#[derive(Debug, Parser)]
#[command(name = "sphere-casimir", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Interaction energy over a range of gaps.
    EnergySweep(RunArgs),
    /// Force F = -dE/dz over a range of gaps.
    ForceSweep {
        #[command(flatten)]
        run: RunArgs,
        /// Cross-check every point against a central finite difference.
        #[arg(long)]
        verify_force: bool,
    },
    /// Proper-mode spectrum at one gap.
    Modes {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long = "z-over-r", value_name = "X")]
        z_over_r: f64,
        /// Also write each m-block as `block_m<m>.csv` (row, col, value).
        #[arg(long, value_name = "DIR")]
        dump_blocks: Option<PathBuf>,
    },
    /// Energy against L under doubling, at one gap.
    Converge {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long = "z-over-r", value_name = "X")]
        z_over_r: f64,
    },
    /// Log-log power-law exponent of a column of a sweep file.
    FitSlope {
        #[command(flatten)]
        io: TableArgs,
        #[arg(long)]
        lo: f64,
        #[arg(long)]
        hi: f64,
        #[arg(long)]
        input: PathBuf,
    },
    /// Pointwise |full / reference| of two sweep files on the same grid.
    Compare {
        #[command(flatten)]
        io: TableArgs,
        #[arg(long)]
        full: PathBuf,
        #[arg(long)]
        reference: PathBuf,
    },
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
    /// Largest multipole order (the doubling cap when converging).
    #[arg(long, value_name = "N")]
    lmax: Option<usize>,
    /// Relative energy tolerance.
    #[arg(long, value_name = "X")]
    tol: Option<f64>,
    /// Use L = --lmax directly instead of converging.
    #[arg(long)]
    fixed_l: bool,
    #[arg(long, value_name = "N")]
    m_max: Option<usize>,
    #[arg(long = "r-nm", value_name = "NM")]
    radius_nm: Option<f64>,
    /// Comma-separated gaps in nm.
    #[arg(long = "z-nm", value_delimiter = ',', value_name = "LIST")]
    z_nm: Option<Vec<f64>>,
    /// Comma-separated gap ratios z/R.
    #[arg(long = "z-over-r-list", value_delimiter = ',', value_name = "LIST")]
    z_over_r_list: Option<Vec<f64>>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long = "omega-p-ev")]
    omega_p_ev: Option<f64>,
    #[arg(long)]
    gamma_ratio: Option<f64>,
}

#[derive(Debug, Args)]
struct TableArgs {
    #[command(flatten)]
    output: OutputArgs,
    #[arg(long, default_value = "z_over_R")]
    x: String,
    #[arg(long, default_value = "energy_hbar_omega_p")]
    y: String,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_path(path)?,
            None => RunConfig::default(),
        };
        if let Some(path) = &self.output.out {
            c.output.path = Some(path.display().to_string());
        }
        if let Some(f) = self.output.format {
            c.output.format = f;
        }
        if let Some(l) = self.lmax {
            c.truncation.l_max = l;
        }
        if let Some(t) = self.tol {
            c.truncation.tol = t;
        }
        if self.fixed_l {
            c.truncation.converge = false;
        }
        if let Some(m) = self.m_max {
            c.truncation.m_max = Some(m);
            c.truncation.m_policy = sphere_casimir::cli_io::MPolicyName::Fixed;
        }
        if let Some(r) = self.radius_nm {
            c.geometry.radius_nm = r;
        }
        if let Some(z) = &self.z_nm {
            c.geometry.z_list = Some(z.clone());
            c.geometry.z_over_r_list = None;
            c.geometry.z_over_r_grid = None;
        }
        if let Some(x) = &self.z_over_r_list {
            c.geometry.z_over_r_list = Some(x.clone());
            c.geometry.z_list = None;
            c.geometry.z_over_r_grid = None;
        }
        if let Some(e) = self.epsilon {
            c.substrate.epsilon = e;
        }
        if let Some(w) = self.omega_p_ev {
            c.sphere.omega_p_ev = w;
        }
        if let Some(g) = self.gamma_ratio {
            c.sphere.gamma_ratio = g;
        }
        c.validate()?;
        Ok(c)
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit<R: serde::Serialize>(config: &RunConfig, header: &Header, rows: &[R]) -> Result<(), Error> {
    let mut out = open_output(config.output.path.as_deref().map(Path::new))?;
    write_rows(&mut out, config.output.format, header, rows)?;
    out.flush()?;
    Ok(())
}

fn table_config(output: &OutputArgs) -> RunConfig {
    let mut c = RunConfig::default();
    c.output.path = output.out.as_ref().map(|p| p.display().to_string());
    if let Some(f) = output.format {
        c.output.format = f;
    }
    c
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::EnergySweep(args) => {
            let config = args.resolve()?;
            let rows = run_energy_sweep(&config)?;
            let unconverged = rows.iter().filter(|r| !r.converged).count();
            if unconverged > 0 {
                eprintln!("warning: {unconverged} point(s) did not converge within L_max = {}", config.truncation.l_max);
            }
            emit(&config, &Header::new("energy-sweep", &config), &rows)?;
        }
        Command::ForceSweep { run, verify_force } => {
            let config = run.resolve()?;
            let (rows, mismatches) = run_force_sweep(&config, verify_force)?;
            emit(&config, &Header::new("force-sweep", &config), &rows)?;
            if !mismatches.is_empty() {
                for m in &mismatches {
                    eprintln!(
                        "error: force paths disagree at z = {} nm: hellmann_feynman {} vs finite_difference {}",
                        m.z_nm, m.hellmann_feynman, m.finite_difference
                    );
                }
                return Ok(ExitCode::from(2));
            }
        }
        Command::Modes { run, z_over_r, dump_blocks } => {
            let config = run.resolve()?;
            let (spectrum, rows) = run_modes(&config, z_over_r)?;
            if let Some(dir) = dump_blocks {
                std::fs::create_dir_all(&dir)?;
                for block in modes_blocks(&config, z_over_r)? {
                    let file = BufWriter::new(File::create(dir.join(format!("block_m{}.csv", block.m)))?);
                    write_block_csv(file, &block)?;
                }
            }
            if spectrum.overdamped_count > 0 || spectrum.anomalous_count > 0 {
                eprintln!(
                    "warning: {} overdamped and {} anomalous mode(s)",
                    spectrum.overdamped_count, spectrum.anomalous_count
                );
            }
            let mut header = Header::new("modes", &config);
            header.notes.push(format!("z_over_R = {z_over_r}"));
            emit(&config, &header, &rows)?;
        }
        Command::Converge { run, z_over_r } => {
            let config = run.resolve()?;
            let (report, rows) = run_converge(&config, z_over_r)?;
            let mut header = Header::new("converge", &config);
            header.notes.push(format!("z_over_R = {z_over_r}"));
            header.notes.push(format!(
                "converged = {} at L = {} (tol = {})",
                report.result.converged, report.result.l_used, report.tol
            ));
            emit(&config, &header, &rows)?;
        }
        Command::FitSlope { io, lo, hi, input } => {
            let table = read_table(&input)?;
            let (_, row) = run_fit_slope(&table, &io.x, &io.y, (lo, hi))?;
            let config = table_config(&io.output);
            let mut header = Header::new("fit-slope", &config);
            header.notes.push(format!("input = {}", input.display()));
            header.notes.push(format!("x = {}", io.x));
            emit(&config, &header, &[row])?;
        }
        Command::Compare { io, full, reference } => {
            let (ratio, rows) = run_compare(&read_table(&full)?, &read_table(&reference)?, &io.x, &io.y)?;
            let config = table_config(&io.output);
            let mut header = Header::new("compare", &config);
            header.notes.push(format!("full = {}", full.display()));
            header.notes.push(format!("reference = {}", reference.display()));
            header.notes.push(format!("column = {}", io.y));
            header.notes.push(format!("monotone_towards_small_x = {}", ratio.is_monotone_increasing_towards_small_x()));
            emit(&config, &header, &rows)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
