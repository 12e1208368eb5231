//! Phase-space energy of the forward solution against the forward flowout of
//! the source, with a negative control and the elliptic-region probe.

use cosmon_core::rays::{forward_flowout_with, integrate_ray};
use cosmon_core::wavefront::{
    elliptic_support_probe, flowout_consistency, flowout_seeds, phase_energy, FlowoutThresholds, FlowoutVerdict,
    PhaseEnergyMap, Region, WindowSpec,
};
use cosmon_core::{Complex64, PhasePoint, Result, SpacetimeField};

use super::solve::{elliptic_fraction, forward, write_field};
use super::Ctx;
use crate::report::{Check, ExperimentReport};

/// Packet at `|(λ, ξ)| = freq` aligned with the backward ray through the
/// source center, `offset` time units before the source. Such energy can only
/// come from an incoming wave, which the forward solution must not carry.
fn negative_control(ctx: &Ctx, t0: f64, r0: f64) -> Result<SpacetimeField> {
    let cfg = &ctx.cfg.wavefront;
    let bg = ctx.phys.bg;
    let a = bg.a_rot;
    let q0 = PhasePoint { t: t0, ..PhasePoint::radial(r0, 1.0, (1.0 - a * a / (r0 * r0)).sqrt()) };
    // for λ > 0, increasing s runs backward in time
    let back = integrate_ray(&bg, &q0, (0.0, 3.0 + 2.0 * cfg.control_offset), ctx.cfg.tolerances.ray_integrator)?;
    let q = back.samples.iter().find(|s| s.q.t < t0 - cfg.control_offset).unwrap_or(back.last()).q;
    let scale = cfg.control_frequency / q.lambda.hypot(q.xi);
    let (period, w) = (ctx.phys.grid.period, cfg.control_width);
    Ok(SpacetimeField::from_fn(ctx.phys.grid.time(), ctx.phys.grid.radial(), |t, r| {
        let d = t - q.t - period * ((t - q.t) / period).round();
        Complex64::from_polar((-(d * d + (r - q.r).powi(2)) / (2.0 * w * w)).exp(), scale * (q.lambda * t + q.xi * r))
    }))
}

fn verdict_row(name: &str, v: &FlowoutVerdict) -> String {
    format!(
        "{name},{},{},{},{},{},{},{}\n",
        v.classified_cells, v.on_cells, v.off_cells, v.excluded_cells, v.on_energy, v.off_energy, v.off_fraction
    )
}

fn write_map(ctx: &Ctx, rep: &mut ExperimentReport, map: &PhaseEnergyMap) -> Result<()> {
    let cfg = &ctx.cfg.wavefront;
    let floor = cfg.csv_floor * map.max_cell;
    let kept = PhaseEnergyMap { cells: map.cells.iter().filter(|c| c.energy >= floor).copied().collect(), ..map.clone() };
    let mut buf = Vec::new();
    kept.write_csv(&mut buf)?;
    ctx.write(rep, "phase_energy.csv", buf)?;
    let n = map.centers_t.len();
    for s in 0..cfg.svg_slices.min(n) {
        let ti = s * n / cfg.svg_slices.min(n);
        ctx.write(rep, &format!("phase_energy_t{ti}.svg"), map.svg_slice(ti))?;
    }
    Ok(())
}

pub fn run(ctx: &Ctx, rep: &mut ExperimentReport) -> Result<()> {
    let (cfg, tol) = (&ctx.cfg.wavefront, &ctx.cfg.tolerances);
    let (bg, mode, spec, grid) = (ctx.phys.bg, ctx.phys.mode, ctx.phys.spec, ctx.phys.grid);
    let period = grid.period;

    let (f, sol) = forward(ctx, rep, &cfg.source)?;
    let u = &sol.u;
    let window = WindowSpec { keep_rel: cfg.noise_floor, ..WindowSpec::isotropic(u, cfg.sigma) };
    let f_map = phase_energy(&f, window)?;
    let u_map = phase_energy(u, window)?;
    let parseval = if u.norm_sq() > 0.0 { (u_map.total / u.norm_sq() - 1.0).abs() } else { 0.0 };
    rep.push(Check::le("parseval", parseval, tol.parseval));

    let th = FlowoutThresholds {
        energy_rel: cfg.noise_floor,
        r_max: spec.r_abs + cfg.classify_beyond_r_abs,
        ..FlowoutThresholds::for_mode(&mode, &window)
    };
    let support = Region::support_of(&f, cfg.noise_floor);
    let seeds = flowout_seeds(&bg, &f_map, support, &th, period);
    let rays = forward_flowout_with(&bg, &seeds, 0.5 * period, grid.r_max, cfg.ray_tol)?;
    let v = flowout_consistency(&u_map, &rays, support, &th, period);
    rep.push(Check::flag("flowout_nonvacuous", !v.vacuous, true));
    rep.push(Check::le("off_flowout", v.off_fraction, tol.off_flowout));

    let t0 = cfg.source.t0_fraction * period;
    let neg = negative_control(ctx, t0, cfg.source.r0)?;
    let vn = flowout_consistency(&phase_energy(&neg, window)?, &rays, support, &th, period);
    rep.push(Check::ge("negative_control_off_flowout", vn.off_fraction, tol.negative_control));

    let probe = elliptic_support_probe(u, &bg, &mode, cfg.delta, ctx.seed)?;
    rep.push(Check::ge("elliptic_mass", probe.fraction, tol.elliptic_mass));
    if let Some(s) = &probe.slice {
        rep.push(Check::flag("elliptic_slice_consistent", s.consistent, true));
    }
    if let Some(uc) = &probe.unique_continuation {
        rep.push(Check::le("elliptic_uc_zero_data", uc.zero_data_sup, tol.zero_data));
    }
    // the same solution cut off at r = a must be flagged
    let a = bg.a_rot;
    let cut = u.map(|_, r, z| if r < a { Complex64::new(0.0, 0.0) } else { z });
    let cut_probe = elliptic_support_probe(&cut, &bg, &mode, cfg.delta, ctx.seed)?;
    let flagged = cut_probe.slice.as_ref().is_some_and(|s| !s.consistent);
    rep.push(Check::flag("truncated_slice_flagged", flagged, true));
    debug_assert_eq!(elliptic_fraction(&cut, a, cfg.delta), 0.0);

    let mut csv = String::from("field,classified,on_cells,off_cells,excluded,on_energy,off_energy,off_fraction\n");
    csv.push_str(&verdict_row("solution", &v));
    csv.push_str(&verdict_row("negative_control", &vn));
    ctx.write(rep, "flowout.csv", csv)?;
    ctx.write_json(
        rep,
        "flowout.json",
        &serde_json::json!({
            "window": window,
            "thresholds": th,
            "support": support,
            "seeds": seeds.len(),
            "solution": v,
            "negative_control": vn,
            "frame_ripple": u_map.frame_ripple,
        }),
    )?;
    ctx.write_json(rep, "elliptic.json", &serde_json::json!({ "solution": probe, "truncated": cut_probe }))?;
    write_map(ctx, rep, &u_map)?;
    write_field(ctx, rep, u, "solution")?;
    Ok(())
}
