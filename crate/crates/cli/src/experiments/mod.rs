//! One module per experiment. Each writes its artifacts below its own output
//! directory and returns the checks it made.

mod coercivity;
mod counterexample;
mod escape;
mod mode;
mod solve;
mod trace;
mod wavefront;

use std::fs;
use std::path::{Path, PathBuf};

use crate::config::{Experiment, Physics, RunConfig};
use crate::report::{ExperimentReport, Report};

pub use solve::gaussian_source;

/// Shared inputs of a single experiment.
pub struct Ctx<'a> {
    pub cfg: &'a RunConfig,
    pub phys: Physics,
    pub dir: PathBuf,
    pub seed: u64,
}

impl Ctx<'_> {
    /// Writes `bytes` to `name` inside the experiment directory and records it.
    pub fn write(&self, rep: &mut ExperimentReport, name: &str, bytes: impl AsRef<[u8]>) -> cosmon_core::Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        rep.artifacts.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: serde::Serialize>(&self, rep: &mut ExperimentReport, name: &str, value: &T) -> cosmon_core::Result<()> {
        cosmon_core::io::write_json(&self.dir.join(name), value)?;
        rep.artifacts.push(name.to_string());
        Ok(())
    }
}

type Runner = fn(&Ctx, &mut ExperimentReport) -> cosmon_core::Result<()>;

fn runner(e: Experiment) -> Runner {
    match e {
        Experiment::Trace => trace::run,
        Experiment::Escape => escape::run,
        Experiment::Mode => mode::run,
        Experiment::Counterexample => counterexample::run,
        Experiment::Coercivity => coercivity::run,
        Experiment::Solve => solve::run,
        Experiment::Wavefront => wavefront::run,
        Experiment::All => unreachable!("expanded by run"),
    }
}

/// Seeds differ per experiment so that adding trials to one leaves the others unchanged.
fn seed_for(seed: u64, e: Experiment) -> u64 {
    seed.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(1 + Experiment::SINGLE.iter().position(|x| *x == e).unwrap() as u64))
}

/// Runs `experiment` (every experiment for `all`, each in its own
/// subdirectory) and writes `report.json` into `out`.
pub fn run(experiment: Experiment, cfg: &RunConfig, out: &Path) -> std::io::Result<Report> {
    let phys = cfg.physics().expect("configuration validated at load");
    fs::create_dir_all(out)?;
    let list: Vec<Experiment> = if experiment == Experiment::All { Experiment::SINGLE.to_vec() } else { vec![experiment] };
    let mut reports = Vec::new();
    for e in list {
        let dir = if experiment == Experiment::All { out.join(e.name()) } else { out.to_path_buf() };
        fs::create_dir_all(&dir)?;
        let ctx = Ctx { cfg, phys, dir, seed: seed_for(cfg.seed, e) };
        let mut rep = ExperimentReport::new(e.name());
        log::info!("running {}", e.name());
        if let Err(err) = runner(e)(&ctx, &mut rep) {
            log::error!("{}: {err}", e.name());
            rep.error = Some(err.to_string());
            rep.passed = false;
        }
        if experiment == Experiment::All {
            rep.artifacts = rep.artifacts.iter().map(|a| format!("{}/{a}", e.name())).collect();
        }
        reports.push(rep);
    }
    let report = Report::new(experiment.name(), cfg.seed, reports);
    cosmon_core::io::write_json(&out.join("report.json"), &report).map_err(std::io::Error::other)?;
    Ok(report)
}
