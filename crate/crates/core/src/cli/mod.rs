//! Batch front-end: `eps`, `curve` and `compare` commands.

pub mod config;
mod output;
mod svg;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use thiserror::Error;

use crate::optics::{eps_imag_axis, PermittivityMode};
use crate::sphere_plate::{
    apply_separation_correction, Averaging, FrequencyShiftCurve, ShiftError, ShiftModel,
};
use crate::stats::{chi2, read_dataset, MeasurementDataset, StatsError};

pub use config::RunConfig;
use output::{read_curve_csv, write_chi2_csv, write_curve_csv, write_eps_csv, Chi2Summary};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_COMPUTE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Compute(String),
    #[error("{message}")]
    Range { z: f64, message: String },
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input(_) | CliError::Io(_) => EXIT_INPUT,
            CliError::Compute(_) | CliError::Range { .. } => EXIT_COMPUTE,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Input(_) => "input",
            CliError::Io(_) => "io",
            CliError::Compute(_) => "compute",
            CliError::Range { .. } => "range",
        }
    }

    pub fn message(&self) -> String {
        self.to_string()
    }

    /// `error[kind]: message` on a single line.
    pub fn report_line(&self) -> String {
        let text = self.to_string();
        let flat: Vec<&str> = text.split_whitespace().collect();
        format!("error[{}]: {}", self.kind(), flat.join(" "))
    }
}

impl From<ShiftError> for CliError {
    fn from(e: ShiftError) -> Self {
        match e {
            ShiftError::AmplitudeExceedsSeparation { z, .. }
            | ShiftError::SeparationNonpositive(z) => CliError::Range {
                z,
                message: e.to_string(),
            },
            other => CliError::Compute(other.to_string()),
        }
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        match e {
            StatsError::CurveRangeMismatch { z, .. } => CliError::Range {
                z,
                message: e.to_string(),
            },
            StatsError::MissingSigmaZ { .. }
            | StatsError::InvalidDataset(_)
            | StatsError::Parse { .. }
            | StatsError::UnknownSigmaMode(_)
            | StatsError::InvalidDof(_) => CliError::Input(e.to_string()),
            other => CliError::Compute(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "casimir-shift",
    version,
    about = "Casimir frequency-shift curves and χ² model tests"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate ε(iξ) for each permittivity mode.
    Eps(CommonArgs),
    /// Compute frequency-shift curves Δf(z) and a figure.
    Curve {
        #[command(flatten)]
        common: CommonArgs,
        /// Skip the SVG figure.
        #[arg(long)]
        no_svg: bool,
    },
    /// χ² comparison of the configured dataset against theory.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        /// Use a curve CSV (as written by `curve`) instead of computing theory.
        #[arg(long, value_name = "CSV")]
        theory: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Permittivity modes, overriding the config (comma-separated).
    #[arg(long, value_delimiter = ',', value_name = "MODE")]
    pub mode: Option<Vec<String>>,
    /// exact | first_term, overriding the config.
    #[arg(long)]
    pub averaging: Option<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
}

struct Context {
    config: RunConfig,
    modes: Vec<PermittivityMode>,
    averaging: Option<Averaging>,
    out: PathBuf,
}

impl Context {
    fn new(args: &CommonArgs) -> Result<Self, CliError> {
        let config = RunConfig::read(&args.config)?;
        let modes = match &args.mode {
            Some(raw) => config::parse_modes(&raw.join(","))?,
            None => config.optics.modes.clone(),
        };
        if modes.is_empty() {
            return Err(CliError::Config(
                "no permittivity mode selected (set [optics] modes or pass --mode)".into(),
            ));
        }
        let averaging = args
            .averaging
            .as_deref()
            .map(|a| {
                a.parse::<Averaging>()
                    .map_err(|e| CliError::Config(e.to_string()))
            })
            .transpose()?;
        std::fs::create_dir_all(&args.out)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", args.out.display())))?;
        Ok(Self {
            config,
            modes,
            averaging,
            out: args.out.clone(),
        })
    }

    fn averaging(&self) -> Result<Averaging, CliError> {
        Ok(self
            .averaging
            .unwrap_or(self.config.require_geometry()?.averaging))
    }

    fn models(&self) -> Result<Vec<(PermittivityMode, ShiftModel)>, CliError> {
        let geometry = &self.config.require_geometry()?.geometry;
        let table = self.config.load_table(&self.modes)?;
        self.modes
            .iter()
            .map(|&mode| {
                let spec = self.config.permittivity(mode, table.as_ref())?;
                let model = ShiftModel::new(spec, self.config.thermal, geometry.clone())
                    .map_err(|e| CliError::Config(e.to_string()))?;
                Ok((mode, model))
            })
            .collect()
    }

    /// The configured dataset with separation correction applied.
    fn dataset(&self) -> Result<MeasurementDataset, CliError> {
        let stats = self.config.require_stats()?;
        if !stats.dataset_path.is_file() {
            return Err(CliError::Input(format!(
                "dataset not found: {}",
                stats.dataset_path.display()
            )));
        }
        let data = read_dataset(&stats.dataset_path)?;
        match self.config.correction {
            None => Ok(data),
            Some(c) => {
                let a_rms = self.config.require_geometry()?.geometry.a_rms;
                data.map_separations(|z| {
                    apply_separation_correction(z, a_rms, c.which, c.direction)
                        .map_err(CliError::from)
                })
            }
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

fn cmd_eps(args: &CommonArgs) -> Result<Vec<PathBuf>, CliError> {
    let ctx = Context::new(args)?;
    let table = ctx.config.load_table(&ctx.modes)?;
    let mut written = Vec::new();
    for &mode in &ctx.modes {
        let spec = ctx.config.permittivity(mode, table.as_ref())?;
        let rows = ctx
            .config
            .eps
            .xi_ev
            .iter()
            .map(|&xi| {
                eps_imag_axis(xi, &spec)
                    .map(|e| (xi, e))
                    .map_err(|e| CliError::Compute(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let path = ctx.path(&format!("eps_{}.csv", mode.as_str()));
        write_eps_csv(&path, &rows)?;
        written.push(path);
    }
    Ok(written)
}

fn cmd_curve(args: &CommonArgs, svg: bool) -> Result<Vec<PathBuf>, CliError> {
    let ctx = Context::new(args)?;
    let averaging = ctx.averaging()?;
    let grid = ctx.config.require_grid()?.separations_m()?;
    let overlay = match &ctx.config.stats {
        Some(_) => Some(ctx.dataset()?),
        None => None,
    };
    let mut written = Vec::new();
    let mut curves = Vec::new();
    for (mode, model) in ctx.models()? {
        info!(
            "computing {mode} curve on {} points ({averaging})",
            grid.len()
        );
        let curve = model.curve(&grid, averaging)?;
        let path = ctx.path(&format!("curve_{}.csv", mode.as_str()));
        write_curve_csv(&path, &curve)?;
        written.push(path);
        curves.push(curve);
    }
    if svg {
        let path = ctx.path("curve.svg");
        let document = svg::render_figure(&curves, overlay.as_ref());
        std::fs::write(&path, document)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        written.push(path);
    }
    Ok(written)
}

fn cmd_compare(args: &CommonArgs, theory: Option<&Path>) -> Result<Vec<PathBuf>, CliError> {
    let ctx = Context::new(args)?;
    let stats = ctx.config.require_stats()?.clone();
    let data = ctx.dataset()?;
    let theories: Vec<(
        String,
        Option<PermittivityMode>,
        Option<Averaging>,
        FrequencyShiftCurve,
    )> = match theory {
        Some(path) => {
            let tag = match ctx.modes.as_slice() {
                [single] if args.mode.is_some() => Some(*single),
                _ => None,
            };
            let curve = read_curve_csv(path, tag)?;
            let label = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "theory".into());
            vec![(label, tag, None, curve)]
        }
        None => {
            let averaging = ctx.averaging()?;
            let z: Vec<f64> = data.points().iter().map(|p| p.z).collect();
            ctx.models()?
                .into_iter()
                .map(|(mode, model)| {
                    let curve = model.curve(&z, averaging)?;
                    Ok((
                        mode.as_str().to_string(),
                        Some(mode),
                        Some(averaging),
                        curve,
                    ))
                })
                .collect::<Result<_, CliError>>()?
        }
    };

    let mut written = Vec::new();
    let mut text = String::new();
    for (label, mode, averaging, curve) in &theories {
        let report = chi2(&data, curve, stats.sigma_mode)?
            .with_fit_params(stats.n_fit_params)?
            .with_exclusion(stats.exclusion_threshold_sigma);
        let reference = mode.map(|m| {
            if m.is_drude_like() {
                stats.reference_partial_drude
            } else {
                stats.reference_partial_plasma
            }
        });
        let summary = Chi2Summary {
            label,
            dataset: data.label(),
            averaging: *averaging,
            n_fit_params: stats.n_fit_params,
            threshold_sigma: stats.exclusion_threshold_sigma,
            reference,
            report: &report,
        };
        let block = summary.render();
        text.push_str(&block);
        text.push('\n');
        let path = ctx.path(&format!("chi2_{label}.csv"));
        write_chi2_csv(&path, &report)?;
        written.push(path);
    }
    let path = ctx.path("compare_report.txt");
    std::fs::write(&path, &text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    print!("{text}");
    written.push(path);
    Ok(written)
}

/// Run one parsed command; returns the files written.
pub fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    match &cli.command {
        Command::Eps(args) => cmd_eps(args),
        Command::Curve { common, no_svg } => cmd_curve(common, !no_svg),
        Command::Compare { common, theory } => cmd_compare(common, theory.as_deref()),
    }
}

/// Parse arguments, run, and map the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(files) => {
            for f in files {
                info!("wrote {}", f.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("{}", e.report_line());
            e.exit_code()
        }
    }
}
