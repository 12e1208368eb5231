//! Backward escape of null rays from a box to the absorber region.

use cosmon_core::rays::{escape_analysis_sampled, TrBox};
use cosmon_core::Result;

use super::Ctx;
use crate::report::{Check, ExperimentReport};

/// Escape time from `(t, r) = (0, a)`: `U − a·atan(U/a)` with `U = √((R+1)² − a²)`.
pub fn escape_from_turning_point(a: f64, r_abs: f64) -> f64 {
    let u = ((r_abs + 1.0).powi(2) - a * a).sqrt();
    u - a * (u / a).atan()
}

pub fn run(ctx: &Ctx, rep: &mut ExperimentReport) -> Result<()> {
    let (cfg, tol) = (&ctx.cfg.escape, &ctx.cfg.tolerances);
    let bg = ctx.phys.bg;
    let k = TrBox { t_min: cfg.t_min, t_max: cfg.t_max, r_min: cfg.r_min, r_max: cfg.r_max };
    let res = escape_analysis_sampled(&bg, &k, cfg.r_abs, tol.ray_integrator, cfg.samples_per_side)?;
    let all_incoming = res.samples.iter().all(|x| x.incoming);
    rep.push(Check::flag("escape_incoming", all_incoming, true));
    rep.push(Check::ge("escape_time", res.t_bound, 0.0));
    if k == TrBox::point(0.0, bg.a_rot) {
        let exact = escape_from_turning_point(bg.a_rot, cfg.r_abs);
        rep.push(Check::le("escape_closed_form", (res.t_bound - exact).abs(), tol.escape_closed_form));
    }

    let mut csv = String::from("t,r,lambda,xi,t_escape,s_escape,incoming\n");
    for x in &res.samples {
        let q = x.seed;
        csv.push_str(&format!("{},{},{},{},{},{},{}\n", q.t, q.r, q.lambda, q.xi, x.t_escape, x.s_escape, x.incoming as u8));
    }
    ctx.write(rep, "escape.csv", csv)?;
    ctx.write_json(rep, "escape.json", &serde_json::json!({ "t_bound": res.t_bound, "r_escape": res.r_escape }))?;
    Ok(())
}
