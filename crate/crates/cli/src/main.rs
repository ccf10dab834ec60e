use std::path::{Path, PathBuf};
use std::process::ExitCode;

use abc_cli::report::{format_table1, write_table1};
use abc_cli::{gain_curve, run_experiment, table1_report, CliError, Overrides, RunConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "abc", version, about = "Run approximate Bayesian computation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Base seed; overrides the config file.
    #[arg(long, env = "ABC_SEED", global = true)]
    seed: Option<u64>,
    /// Worker threads; overrides the config file.
    #[arg(long, env = "ABC_WORKERS", global = true)]
    workers: Option<usize>,
    /// Output directory; overrides the config file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every replicate of one configuration.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Compare samplers targeting the same tolerance.
    Table1 {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Per-iteration gain factor of a self-calibrated run.
    GainCurve {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn load(path: &Path, common: &Common, with_out: bool) -> Result<RunConfig, CliError> {
    let ov = Overrides {
        seed: common.seed,
        workers: common.workers,
        output: if with_out { common.out.clone() } else { None },
    };
    RunConfig::from_file(path, &ov)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, common } => {
            let cfg = load(&config, &common, true)?;
            let rows = run_experiment(&cfg)?;
            println!("{} replicate(s) written to {}", rows.len(), cfg.output.display());
        }
        Command::Table1 { configs, common } => {
            // Each config keeps its own output directory; --out receives the table.
            let cfgs = configs
                .iter()
                .map(|p| load(p, &common, false))
                .collect::<Result<Vec<_>, _>>()?;
            let rows = table1_report(&cfgs)?;
            print!("{}", format_table1(&rows));
            let dir = common.out.unwrap_or_else(|| PathBuf::from("."));
            std::fs::create_dir_all(&dir)?;
            write_table1(&dir.join("table1.csv"), &rows)?;
        }
        Command::GainCurve { config, common } => {
            let cfg = load(&config, &common, true)?;
            let series = gain_curve(&cfg)?;
            for (r, rows) in series.iter().enumerate() {
                let stop = rows.first().map_or(0, |g| g.stop_iter);
                let terminal = rows.iter().find(|g| g.iter == stop).map_or(f64::NAN, |g| g.gain);
                println!("replicate {}: stop_iter {stop}, terminal gain {terminal:.3}", r + 1);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
