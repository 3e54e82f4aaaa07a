use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lightlike::catalog::{catalog, EntryKind};
use lightlike::config::AnalysisConfig;
use lightlike::emit::{emit, Format};
use lightlike::{analysis, selftest, Error};

const EXIT_CONFIG: u8 = 2;
const EXIT_GEOMETRY: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "lightlike", version, about = "Invariant analysis of lightlike hypersurfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in metrics and hypersurfaces.
    Catalog,
    /// Analyze a hypersurface over a parameter grid.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// table, structured, plotdata or all
        #[arg(long, default_value = "all")]
        format: Format,
    },
    /// Run the built-in property checks.
    Selftest,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } => EXIT_CONFIG,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_GEOMETRY,
    }
}

fn init_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("LIGHTLIKE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("LIGHTLIKE_THREADS must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn print_catalog() {
    for kind in [EntryKind::Metric, EntryKind::Hypersurface] {
        println!("{}:", if kind == EntryKind::Metric { "metrics" } else { "hypersurfaces" });
        for e in catalog().into_iter().filter(|e| e.kind == kind) {
            let params: Vec<String> = e.parameters.iter().map(|(k, d)| format!("{k}={d}")).collect();
            println!("  {:<26} {:<40} {}", e.name, params.join(" "), e.description);
        }
    }
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        other => other,
    }
}

fn run_analyze(config: &Path, out: &Path, format: Format) -> Result<(), Error> {
    let (cfg, text) = AnalysisConfig::from_path(config).map_err(|e| with_path(e, config))?;
    let report = analysis::analyze(&cfg, &text)?;
    for path in emit(&report, format, out).map_err(|e| with_path(e, out))? {
        println!("wrote {}", path.display());
    }
    let failed = report.points.iter().filter(|p| p.error.is_some()).count();
    println!("{} points analyzed, {failed} with errors", report.points.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_CONFIG);
    }
    match cli.command {
        Command::Catalog => {
            print_catalog();
            ExitCode::SUCCESS
        }
        Command::Analyze { config, out, format } => match run_analyze(&config, &out, format) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(exit_code(&e))
            }
        },
        Command::Selftest => {
            let results = selftest::run();
            for r in &results {
                println!("{r}");
            }
            let failed = results.iter().filter(|r| !r.passed).count();
            println!("{} of {} checks passed", results.len() - failed, results.len());
            if failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
