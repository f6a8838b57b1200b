use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use charwave::config::Experiment;
use charwave::run::{frozen_config, out_dir};
use charwave::{parse_config, run, CliError, Figure, RunConfig};

#[derive(Parser)]
#[command(name = "charwave", version, about = "Characteristic solvers for nonlinear waves with gradient blowup")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment named in the config (default: solve).
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reproduce one of the pinned figure configurations.
    Reproduce {
        figure: FigureArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-check the model against its closed-form and direct-scheme references.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve once per lambda; results go to lambda-<value>/ and sweep.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',')]
        lambdas: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FigureArg {
    FigQuarter,
    FigThird,
}

fn load(path: &Path) -> Result<RunConfig, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&bytes)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let (cfg, out) = match cli.command {
        Command::Run { config, out } => (load(&config)?, out),
        Command::Reproduce { figure, out } => {
            let fig = match figure {
                FigureArg::FigQuarter => Figure::Quarter,
                FigureArg::FigThird => Figure::Third,
            };
            let dir = match fig {
                Figure::Quarter => "out/fig-quarter",
                Figure::Third => "out/fig-third",
            };
            (frozen_config(fig, dir), out)
        }
        Command::Verify { config, out } => {
            let cfg = load(&config)?;
            (
                RunConfig {
                    experiment: Experiment::Verify,
                    ..cfg
                },
                out,
            )
        }
        Command::Sweep { config, lambdas, out } => {
            let cfg = load(&config)?;
            let lambdas = if lambdas.is_empty() { cfg.lambdas.clone() } else { lambdas };
            // Re-parse so every lambda goes through the config checks.
            let mut doc: serde_json::Value =
                serde_json::from_slice(&std::fs::read(&config).map_err(|e| CliError::io(&config, e))?)
                    .expect("parsed once already");
            doc["lambdas"] = serde_json::json!(lambdas);
            doc["experiment"] = serde_json::json!("sweep");
            (parse_config(doc.to_string().as_bytes())?, out)
        }
    };
    let dir = out_dir(&cfg, out.as_deref());
    let start = Instant::now();
    let report = run(&cfg, &dir)?;
    if let Some(f) = &report.figure {
        eprintln!(
            "figure verdict: {} (max |w| = {:.4}, target {:.4}; p, q positive: {}; p/q Cauchy: {})",
            if f.passed { "PASS" } else { "FAIL" },
            f.max_w,
            f.angle_target,
            f.p_q_positive,
            f.pq_sweep.cauchy
        );
    }
    // Timing stays off the report so that reruns are byte-identical.
    eprintln!("wrote {} in {:.2} s", dir.display(), start.elapsed().as_secs_f64());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("charwave: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
