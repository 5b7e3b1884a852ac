use std::path::PathBuf;

use anyhow::Context;
use bicolor_harness::config::Strategy;
use bicolor_harness::emit::{emit, Format};
use bicolor_harness::{build_experiment, ExperimentConfig};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bicolor",
    about = "Simulate compressed local-training runs and record their communication cost"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config file.
    Run {
        config: PathBuf,
        /// Run this single seed instead of the configured list.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (overrides `out_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        strategy: Option<Strategy>,
        #[arg(long)]
        max_iters: Option<u64>,
        #[arg(long)]
        bit_budget: Option<f64>,
    },
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, seed, out, format, alpha, strategy, max_iters, bit_budget } => {
            let mut cfg =
                ExperimentConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            if let Some(s) = seed {
                cfg.seeds = vec![s];
            }
            if let Some(o) = out {
                cfg.out_dir = o;
            }
            if let Some(a) = alpha {
                cfg.alpha = a;
            }
            if let Some(s) = strategy {
                cfg.strategy = s;
            }
            if let Some(m) = max_iters {
                cfg.stop.max_iters = m;
            }
            if let Some(b) = bit_budget {
                cfg.stop.bit_budget = Some(b);
            }
            cfg.validate()?;
            let experiment = build_experiment(&cfg)?;
            let set = experiment.execute()?;
            for t in &set.traces {
                println!(
                    "seed {}: status {:?}, {} iterations, {} rounds, {:.0} bits",
                    t.seed,
                    t.trace.status,
                    t.trace.iterations(),
                    t.trace.communication_rounds(),
                    t.trace.total_bits()
                );
            }
            println!("gamma {:e}, fingerprint {}, {:.2?}", set.gamma, set.fingerprint, set.wall_clock);
            for p in emit(&set, format, &cfg.out_dir)? {
                println!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}
