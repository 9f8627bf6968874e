use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use oscex_core::harness::{self, OutputFormat, OutputKind, Reference};
use oscex_core::{acceptance, OscError, Result, RunConfig};

#[derive(Parser)]
#[command(
    name = "oscex",
    version,
    about = "Run and compare exact-discretization oscillator steppers",
    after_help = "ENVIRONMENT:\n    OSCEX_TOL    energy-drift tolerance used for the conservation flag in run \
                  summaries (default 1e-11)\n\nEXIT CODES:\n    0 success, 1 self test \
                  failure, 2 configuration or domain error, 3 numerical failure, 4 I/O error"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one run configuration.
    ///
    /// The trajectory goes to --out, or to stdout when no file is given. The
    /// summary record is printed to stderr as JSON.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Compare configurations that share a problem, initial state and
    /// horizon against a reference solution.
    Compare {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = RefArg::Analytic)]
        reference: RefArg,
        /// Comma-separated step sizes for the convergence-order fit.
        #[arg(long, value_delimiter = ',')]
        sweep: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
        format: TableFormat,
    },
    /// Evaluate the built-in acceptance criteria.
    Selftest {
        /// Only evaluate the given criterion numbers.
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<usize>>,
        #[arg(long, short)]
        verbose: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Jsonl => OutputFormat::JsonLines,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RefArg {
    Analytic,
    Exact,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

fn read_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| OscError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    RunConfig::from_json(&text).map_err(|e| OscError::Config(format!("{}: {e}", path.display())))
}

fn stdout_write(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|source| OscError::Io {
            path: PathBuf::from("<stdout>"),
            source,
        })
}

fn cmd_run(config: &Path, out: Option<&Path>, format: OutputFormat) -> Result<()> {
    let cfg = read_config(config)?;
    let result = harness::run(&cfg)?;
    if cfg.wants(OutputKind::Trajectory) || cfg.wants(OutputKind::Energies) {
        match out {
            Some(path) => harness::write_trajectory(&result.trajectory, format, path)?,
            None => stdout_write(&harness::serialize(&result.trajectory, format))?,
        }
    }
    if cfg.wants(OutputKind::Summary) {
        let summary = serde_json::to_string(&result.summary).expect("summary serializes");
        eprintln!("{summary}");
    }
    Ok(())
}

fn cmd_compare(
    configs: &[PathBuf],
    reference: RefArg,
    sweep: Option<&[f64]>,
    format: TableFormat,
) -> Result<()> {
    let configs = configs
        .iter()
        .map(|p| read_config(p))
        .collect::<Result<Vec<_>>>()?;
    let reference = match reference {
        RefArg::Analytic => Reference::Analytic,
        RefArg::Exact => Reference::Exact,
    };
    let table = harness::compare(&configs, reference, sweep)?;
    match format {
        TableFormat::Csv => stdout_write(&table.to_csv()),
        TableFormat::Json => stdout_write(&(table.to_json() + "\n")),
    }
}

fn cmd_selftest(only: Option<&[usize]>, verbose: bool) -> Result<bool> {
    let reports = match only {
        None => acceptance::evaluate_all(),
        Some(ids) => ids
            .iter()
            .map(|&id| {
                acceptance::evaluate(id)
                    .ok_or_else(|| OscError::Config(format!("no criterion numbered {id}")))
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let mut text = String::new();
    for r in &reports {
        text.push_str(&r.status_line());
        text.push('\n');
    }
    if verbose {
        for r in &reports {
            text.push_str(&format!("\n{r}"));
        }
    }
    let failed = reports.iter().filter(|r| !r.passed()).count();
    text.push_str(&format!(
        "{} passed, {failed} failed\n",
        reports.len() - failed
    ));
    stdout_write(&text)?;
    Ok(failed == 0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            config,
            out,
            format,
        } => cmd_run(config, out.as_deref(), (*format).into()).map(|_| true),
        Command::Compare {
            configs,
            reference,
            sweep,
            format,
        } => cmd_compare(configs, *reference, sweep.as_deref(), *format).map(|_| true),
        Command::Selftest { only, verbose } => cmd_selftest(only.as_deref(), *verbose),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
