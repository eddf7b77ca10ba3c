mod commands;
mod config;
mod data;
mod error;
mod output;

use clap::{Args, Parser, Subcommand};
use config::RunConfig;
use error::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "fwdsig",
    version,
    about = "Causal indicator signals, hysteresis trading and walk-forward evaluation on one-minute bars"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    symbol: Option<String>,
    /// Hysteresis threshold; repeat or separate with commas for several.
    #[arg(long, global = true, value_delimiter = ',')]
    theta: Vec<f64>,
    /// Range start: YYYY-MM-DD, YYYY-MM-DDTHH:MM or epoch milliseconds.
    #[arg(long, global = true)]
    from: Option<String>,
    /// Range end (exclusive), same formats as --from.
    #[arg(long, global = true)]
    to: Option<String>,
    /// Worker threads for candidate scoring; 0 uses all cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Download one-minute candles into a candle file.
    Fetch(Common),
    /// Run one fixed parameter set over the whole series.
    Backtest(Common),
    /// Walk-forward optimization and out-of-sample evaluation.
    Walkforward {
        #[command(flatten)]
        common: Common,
        /// Continue from the epoch records already in --out.
        #[arg(long)]
        resume: bool,
    },
    /// Closed-form demonstration of the derivative lead and the slope gate.
    Demo(Common),
    /// Median |F| for each gate parameter with the others fixed.
    Sweep(Common),
    /// Verify a walkforward output directory and recompute its reports.
    Report {
        /// Directory written by walkforward.
        dir: PathBuf,
    },
}

fn effective_config(c: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &c.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply_env();
    if let Some(s) = &c.symbol {
        cfg.symbol = s.clone();
    }
    if !c.theta.is_empty() {
        cfg.thetas = c.theta.clone();
    }
    if c.from.is_some() || c.to.is_some() {
        cfg.data.from = c.from.clone().or(cfg.data.from);
        cfg.data.to = c.to.clone().or(cfg.data.to);
    }
    if let Some(w) = c.workers {
        cfg.workers = w;
    }
    if let Some(o) = &c.out {
        cfg.out = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (common, action): (Common, &dyn Fn(&RunConfig) -> Result<_, CliError>) = match &cli.command {
        Command::Report { dir } => {
            for record in commands::report(dir)? {
                println!("{}", serde_json::to_string(&record).map_err(CliError::pipeline)?);
            }
            return Ok(());
        }
        Command::Fetch(c) => (c.clone(), &commands::fetch),
        Command::Backtest(c) => (c.clone(), &commands::backtest),
        Command::Walkforward { common, resume } => {
            let resume = *resume;
            return with_config(common, move |cfg| commands::walkforward(cfg, resume));
        }
        Command::Demo(c) => (c.clone(), &commands::demo),
        Command::Sweep(c) => (c.clone(), &commands::sweep),
    };
    with_config(&common, action)
}

fn with_config(common: &Common, action: impl Fn(&RunConfig) -> Result<output::RunManifest, CliError>) -> Result<(), CliError> {
    let cfg = effective_config(common)?;
    if common.print_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let manifest = action(&cfg)?;
    log::info!(
        "{} outputs in {}, run digest {}",
        manifest.outputs.len(),
        cfg.out.display(),
        manifest.run_digest
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
