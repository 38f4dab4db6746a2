use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use pvtwin::plant::Pacing;
use pvtwin::runtime::{curve_table, parse_grid, run_scenario, PlantConfig, ScenarioScript, Service, ServiceOptions};

#[derive(Parser)]
#[command(name = "pvtwin", version, about = "Real-time PV plant twin")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Offline,
    Realtime,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario script and write telemetry.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "offline")]
        mode: Mode,
        /// Telemetry file, `.jsonl` or `.csv`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the plant with its sensor gateway and operator API until Ctrl-C.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also persist telemetry here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print I-V/P-V tables as CSV.
    Curves {
        #[arg(long)]
        config: Option<PathBuf>,
        /// `G,T;G,T;...`
        #[arg(long, default_value = "1000,25;800,25;600,25;400,25;200,25")]
        grid: String,
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// Print the effective configuration as TOML.
    Config {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load_config(path: Option<&PathBuf>) -> Result<PlantConfig> {
    match path {
        Some(p) => PlantConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => {
            let mut c = PlantConfig::default();
            c.apply_env_overrides(|k| std::env::var(k).ok())?;
            Ok(c)
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, scenario, mode, out } => {
            let config = load_config(config.as_ref())?;
            let text = std::fs::read_to_string(&scenario).with_context(|| format!("reading {}", scenario.display()))?;
            let script = ScenarioScript::parse(&text).with_context(|| scenario.display().to_string())?;
            let mode = match mode {
                Mode::Offline => Pacing::Offline,
                Mode::Realtime => Pacing::Realtime,
            };
            let summary = run_scenario(&script, &config, mode, Some(&out))?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Serve { config, out } => {
            let config = load_config(config.as_ref())?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let service = Service::start(&config, ServiceOptions { out, ..Default::default() }).await?;
                eprintln!("sensor gateway on {}, operator API on http://{}", service.skt_addr(), service.api_addr());
                tokio::signal::ctrl_c().await?;
                let outcome = service.shutdown().await?;
                eprintln!(
                    "stopped after {} steps, mean period {:.6} s, {} overruns",
                    outcome.report.steps, outcome.report.mean_period, outcome.report.overruns
                );
                anyhow::Ok(())
            })?;
        }
        Command::Curves { config, grid, points } => {
            let config = load_config(config.as_ref())?;
            let params = config.model_params()?;
            print!("{}", curve_table(&params, &parse_grid(&grid)?, points)?);
        }
        Command::Config { config } => {
            let config = load_config(config.as_ref())?;
            print!("{}", config.effective()?.to_toml_string()?);
        }
    }
    Ok(())
}
