use std::path::{Path, PathBuf};
use std::process::ExitCode;

use birkhoff_cli::{run, CliError, ExperimentConfig, Mode, Overrides, Report};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "birkhoff", version, about = "Residual suites for Birkhoff factorization and its Virasoro deformation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory for report.json / report.csv
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Structured)]
    format: Format,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Override the configured seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Multiply every residual tolerance (not the order tolerance)
    #[arg(long, global = true)]
    tol_scale: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the configured suites
    Run { config: PathBuf },
    /// Same, but requires a list of cutoffs or steps
    Sweep { config: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    /// report.json
    Structured,
    /// report.csv
    Table,
}

fn write_report(report: &Report, dir: &Path, format: Format) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let (name, body) = match format {
        Format::Structured => ("report.json", report.to_json()?),
        Format::Table => ("report.csv", report.to_csv()?),
    };
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn main_inner(cli: Cli) -> Result<bool, CliError> {
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let (path, mode) = match &cli.command {
        Command::Run { config } => (config, Mode::Run),
        Command::Sweep { config } => (config, Mode::Sweep),
    };
    let cfg = ExperimentConfig::from_path(path)?;
    let report = run(&cfg, mode, Overrides { seed: cli.seed, tol_scale: cli.tol_scale })?;
    let mut stdout = std::io::stdout().lock();
    report.write_summary(&mut stdout).map_err(|e| CliError::Io(e.to_string()))?;
    if let Some(dir) = &cli.out {
        let p = write_report(&report, dir, cli.format)?;
        println!("report written to {}", p.display());
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
