use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fidgap::cli::{self, demos, output, ModelConfig, RunOptions};

#[derive(Parser)]
#[command(name = "fidgap", version, about = "Fidelity decay bounds for encoded qubits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Seed for randomized checks.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Multiplier applied to every check tolerance.
    #[arg(long, default_value_t = 1.0)]
    tol_scale: f64,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Output path; `fidelity` and `sweep` write `<out>.csv` and `<out>.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn options(&self) -> RunOptions {
        RunOptions {
            seed: self.seed,
            tol_scale: self.tol_scale,
            jobs: self.jobs,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check structural invariants of a config.
    Validate {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Spectral gap report.
    Gap {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Fidelity curve and bounds.
    Fidelity {
        config: PathBuf,
        /// Also write an SVG chart here.
        #[arg(long)]
        svg: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Repeat `fidelity` over values of one scalar config entry.
    Sweep {
        config: PathBuf,
        /// Dotted path of the entry, e.g. `dynamics.rate_family.g`.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Print a built-in model config.
    Demo {
        /// One of: depolarizing, davies-1q, davies-2q, davies-map, unitary-chain, trivial.
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn stem(out: &Path) -> PathBuf {
    match out.extension().and_then(|e| e.to_str()) {
        Some("csv" | "json") => out.with_extension(""),
        _ => out.to_path_buf(),
    }
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn emit(out: Option<&Path>, text: &str) -> fidgap::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn verdict(checks: &[fidgap::fidelity::Check]) -> ExitCode {
    match checks.iter().find(|c| !c.pass) {
        None => ExitCode::SUCCESS,
        Some(c) => {
            eprintln!(
                "invariant violated: {} (residual {:.3e} > {:.1e})",
                c.name, c.residual, c.tol
            );
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> fidgap::Result<ExitCode> {
    match cli.command {
        Command::Validate { config, common } => {
            let cfg = ModelConfig::load(&config)?;
            let checks = cli::validate(&cfg, &common.options())?;
            print!("{}", output::check_table(&checks));
            if let Some(out) = &common.out {
                std::fs::write(out, serde_json::to_string_pretty(&checks)? + "\n")?;
            }
            Ok(verdict(&checks))
        }
        Command::Gap { config, common } => {
            let cfg = ModelConfig::load(&config)?;
            let envelope = cli::gap(&cfg, &common.options())?;
            for w in &envelope.warnings {
                log::warn!("{w}");
            }
            emit(common.out.as_deref(), &envelope.to_json())?;
            Ok(verdict(&envelope.checks))
        }
        Command::Fidelity { config, svg, common } => {
            let cfg = ModelConfig::load(&config)?;
            let run = cli::fidelity(&cfg, &common.options())?;
            for w in &run.envelope.warnings {
                log::warn!("{w}");
            }
            match &common.out {
                Some(out) => {
                    let stem = stem(out);
                    std::fs::write(with_ext(&stem, "csv"), &run.csv)?;
                    std::fs::write(with_ext(&stem, "json"), run.envelope.to_json())?;
                    log::info!("wrote {}.csv and {}.json", stem.display(), stem.display());
                }
                None => print!("{}", run.csv),
            }
            if let Some(path) = svg {
                std::fs::write(path, &run.svg)?;
            }
            Ok(verdict(&run.envelope.checks))
        }
        Command::Sweep {
            config,
            param,
            values,
            common,
        } => {
            let cfg = ModelConfig::load(&config)?;
            let (rows, envelopes) = cli::sweep(&cfg, &param, &values, &common.options())?;
            let table = cli::commands::sweep_csv(&rows)?;
            match &common.out {
                Some(out) => {
                    let stem = stem(out);
                    std::fs::write(with_ext(&stem, "csv"), &table)?;
                    std::fs::write(
                        with_ext(&stem, "json"),
                        serde_json::to_string_pretty(&envelopes)? + "\n",
                    )?;
                }
                None => print!("{table}"),
            }
            let checks: Vec<_> = envelopes.into_iter().flat_map(|e| e.checks).collect();
            Ok(verdict(&checks))
        }
        Command::Demo { name, out } => {
            let cfg = demos::demo(&name)?;
            emit(out.as_deref(), &(cfg.to_json() + "\n"))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FIDGAP_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
