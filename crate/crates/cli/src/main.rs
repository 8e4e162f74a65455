//! Experiment driver: refinement sweeps, mesh audits and VTK export.

mod config;
mod report;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aniso_stokes::analysis::ConvergenceRecord;
use aniso_stokes::experiment::{ExperimentError, LevelOutcome};
use aniso_stokes::mesh::{MeshError, QualityReport};
use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::{ExperimentConfig, RawConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

fn io_error(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_owned(),
        source,
    }
}

#[derive(Debug, Parser)]
#[command(name = "aniso-stokes", version, about = "Pressure-robust Crouzeix-Raviart Stokes experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a refinement sweep and write the error table as CSV.
    Run(Target),
    /// Print mesh quality reports for every level.
    MeshAudit(Target),
    /// Solve every level and write meshes with cell fields as legacy VTK.
    ExportVtk(Target),
}

#[derive(Debug, Args)]
struct Target {
    /// `key = value` configuration file.
    config: PathBuf,
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    nu: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<String>,
    /// Comma-separated refinement levels.
    #[arg(long)]
    levels: Option<String>,
    /// CSV file for `run`, output directory for `export-vtk`.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Target {
    fn load(&self, out_key: &str) -> Result<ExperimentConfig, CliError> {
        let text = fs::read_to_string(&self.config).map_err(io_error(&self.config))?;
        let mut raw = RawConfig::parse(&text)?;
        let overrides = [
            ("case", &self.case),
            ("method", &self.method),
            ("nu", &self.nu),
            ("epsilon", &self.epsilon),
            ("mu", &self.mu),
            ("levels", &self.levels),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                raw.set(key, v).map_err(CliError::Config)?;
            }
        }
        if let Some(out) = &self.out {
            raw.set(out_key, &out.to_string_lossy()).map_err(CliError::Config)?;
        }
        ExperimentConfig::from_raw(&raw)
    }
}

fn run(cfg: &ExperimentConfig) -> Result<ConvergenceRecord, CliError> {
    let mut sink: Box<dyn Write> = match &cfg.csv {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(io_error(path))?)),
        None => Box::new(io::stdout().lock()),
    };
    let csv_path = cfg.csv.clone().unwrap_or_else(|| PathBuf::from("<stdout>"));
    let mut table = report::CsvTable::new(cfg.case_name);
    table.write_header(&mut sink).map_err(io_error(&csv_path))?;
    let mut record = ConvergenceRecord::default();
    for &n in &cfg.levels {
        match cfg.experiment.run_level(n) {
            Ok(outcome) => {
                record.push(outcome.record.clone());
                table.write_row(&mut sink, &record).map_err(io_error(&csv_path))?;
                sink.flush().map_err(io_error(&csv_path))?;
                if let Some(dir) = &cfg.vtk {
                    write_level_vtk(cfg, dir, n, &outcome)?;
                }
            }
            Err(e) => {
                table.write_failure(&mut sink, n).map_err(io_error(&csv_path))?;
                sink.flush().map_err(io_error(&csv_path))?;
                return Err(ExperimentError::AtLevel {
                    level: n,
                    source: Box::new(e),
                }
                .into());
            }
        }
    }
    Ok(record)
}

fn write_level_vtk(cfg: &ExperimentConfig, dir: &Path, n: usize, outcome: &LevelOutcome) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_error(dir))?;
    let path = dir.join(format!("{}_level{n}.vtk", cfg.experiment.method));
    let file = File::create(&path).map_err(io_error(&path))?;
    let mut out = BufWriter::new(file);
    let quality = QualityReport::compute(&outcome.mesh, cfg.mac_angle.to_radians(), cfg.rvp_constant)?;
    report::write_fields(&mut out, outcome, &quality, &format!("{} level {n}", cfg.experiment.method))
        .and_then(|_| out.flush())
        .map_err(io_error(&path))
}

fn mesh_audit(cfg: &ExperimentConfig) -> Result<bool, CliError> {
    let mut out = io::stdout().lock();
    let mut all_ok = true;
    report::write_audit_header(&mut out, cfg).map_err(io_error(Path::new("<stdout>")))?;
    for &n in &cfg.levels {
        let mesh = cfg.experiment.build_mesh(n)?;
        let quality = QualityReport::compute(&mesh, cfg.mac_angle.to_radians(), cfg.rvp_constant)?;
        all_ok &= quality.all_mac();
        report::write_audit_row(&mut out, n, &mesh, &quality).map_err(io_error(Path::new("<stdout>")))?;
    }
    Ok(all_ok)
}

fn export_vtk(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let dir = cfg.vtk.clone().unwrap_or_else(|| PathBuf::from("."));
    for &n in &cfg.levels {
        let outcome = cfg.experiment.run_level(n).map_err(|e| ExperimentError::AtLevel {
            level: n,
            source: Box::new(e),
        })?;
        write_level_vtk(cfg, &dir, n, &outcome)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(t) => t.load("csv").and_then(|cfg| run(&cfg)).map(|_| true),
        Command::MeshAudit(t) => t.load("vtk").and_then(|cfg| mesh_audit(&cfg)),
        Command::ExportVtk(t) => t.load("vtk").and_then(|cfg| export_vtk(&cfg)).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
