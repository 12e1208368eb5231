use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use cosmon_cli::config::{Experiment, RunConfig};

/// Numerical experiments for mode solutions on a rotating cosmic string.
#[derive(Debug, Parser)]
#[command(name = "cosmon", version)]
struct Args {
    experiment: Experiment,
    /// JSON run configuration (schema in docs/config.schema.json).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "COSMON_THREADS")]
    threads: Option<usize>,
    /// Overrides `seed` from the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let mut cfg = match RunConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("cosmon: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("cosmon: {e}");
            return ExitCode::from(3);
        }
    }
    let out = args.out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    match cosmon_cli::run(args.experiment, &cfg, &out) {
        Ok(report) => {
            for e in &report.experiments {
                for c in &e.checks {
                    log::info!("{}/{}: {} ({})", e.experiment, c.name, if c.passed { "pass" } else { "FAIL" }, c.value);
                }
                println!("{}: {}", e.experiment, if e.passed { "pass" } else { "FAIL" });
            }
            ExitCode::from(report.status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("cosmon: cannot write outputs to {}: {e}", out.display());
            ExitCode::from(3)
        }
    }
}
