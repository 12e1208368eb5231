//! The finite-energy superposition whose radial derivative is not square
//! integrable, against the mirrored convergent control.

use cosmon_core::modes::{counterexample, CounterexampleGrids, CounterexampleReport, ZetaSpec};
use cosmon_core::{Result, TimeGrid};

use super::Ctx;
use crate::report::{Check, ExperimentReport};

fn worst_ratio(r: &CounterexampleReport) -> f64 {
    r.l2_ratios.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max)
}

pub fn run(ctx: &Ctx, rep: &mut ExperimentReport) -> Result<()> {
    let (cfg, tol) = (&ctx.cfg.counterexample, &ctx.cfg.tolerances);
    let grids = CounterexampleGrids {
        lambda_nodes: cfg.lambda_nodes,
        radial_nodes: cfg.radial_nodes,
        levels: cfg.levels,
        eps_decades: (cfg.eps_decade_lo, cfg.eps_decade_hi),
        time: TimeGrid::new(cfg.period, cfg.n_t)?,
        radial_points: cfg.radial_points,
    };
    let (bg, k) = (ctx.phys.bg, ctx.phys.mode.k);
    let div = counterexample(&bg, k, &ZetaSpec::divergent(), &grids)?;
    let ctl = counterexample(&bg, k, &ZetaSpec::control(), &grids)?;

    rep.push(Check::le("l2_stability", worst_ratio(&div), tol.l2_stability));
    rep.push(Check::within("divergence_slope", div.slope, tol.slope_low, tol.slope_high));
    rep.push(Check::le("control_l2_stability", worst_ratio(&ctl), tol.l2_stability));
    rep.push(Check::le("control_slope", ctl.slope.abs(), tol.control_slope));

    let mut csv = String::from("window,level,eps,dr_norm_sq\n");
    for (name, r) in [("divergent", &div), ("control", &ctl)] {
        for (i, lv) in r.levels.iter().enumerate() {
            for (eps, v) in &lv.dr_norm_sq {
                csv.push_str(&format!("{name},{i},{eps},{v}\n"));
            }
        }
    }
    ctx.write(rep, "counterexample.csv", csv)?;
    ctx.write_json(rep, "counterexample.json", &[&div, &ctl])?;
    let log_series = |r: &CounterexampleReport| -> Vec<(f64, f64)> {
        r.levels.last().map(|l| l.dr_norm_sq.iter().map(|(e, v)| (e.log10(), v.log10())).collect()).unwrap_or_default()
    };
    let svg = cosmon_core::io::svg_lines(
        "radial derivative norm outside r = eps",
        "log10 eps",
        "log10 norm squared",
        &[("divergent", log_series(&div)), ("control", log_series(&ctl))],
    );
    ctx.write(rep, "counterexample.svg", svg)?;
    Ok(())
}
