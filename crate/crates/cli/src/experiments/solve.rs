//! Absorber properties and the forward solve.

use cosmon_core::solver::{absorber_properties, damping_ratio, solve_forward, ForwardSolution};
use cosmon_core::{Complex64, Result, SpacetimeField};

use super::Ctx;
use crate::config::{Physics, SourceConfig};
use crate::report::{Check, ExperimentReport};

/// Gaussian bump of width `src.width` at `(t0_fraction·T, r0)`, periodic in t.
pub fn gaussian_source(phys: &Physics, src: &SourceConfig) -> SpacetimeField {
    let (period, w) = (phys.grid.period, src.width);
    let t0 = src.t0_fraction * period;
    SpacetimeField::from_fn(phys.grid.time(), phys.grid.radial(), |t, r| {
        let d = t - t0 - period * ((t - t0) / period).round();
        Complex64::new((-(d * d + (r - src.r0).powi(2)) / (2.0 * w * w)).exp(), 0.0)
    })
}

/// Writes `u` as a binary field and a log-scale heat map of `|u|`.
pub(crate) fn write_field(ctx: &Ctx, rep: &mut ExperimentReport, u: &SpacetimeField, stem: &str) -> Result<()> {
    cosmon_core::io::write_field_binary(u, &ctx.dir, stem)?;
    rep.artifacts.push(format!("{stem}.json"));
    rep.artifacts.push(format!("{stem}.bin"));
    // block maxima on at most 128 × 128 pixels
    let (bt, br) = (u.n_t().div_ceil(128), u.n_r().div_ceil(128));
    let rows: Vec<Vec<f64>> = (0..u.n_t())
        .step_by(bt)
        .map(|i0| {
            (0..u.n_r())
                .step_by(br)
                .map(|j0| {
                    let mut m = 0.0f64;
                    for i in i0..(i0 + bt).min(u.n_t()) {
                        for j in j0..(j0 + br).min(u.n_r()) {
                            m = m.max(u.at(i, j).norm());
                        }
                    }
                    m
                })
                .collect()
        })
        .collect();
    let tg = u.time;
    let svg = cosmon_core::io::svg_heat(
        &format!("|{stem}|"),
        "r",
        "t",
        (u.radial.r(0), u.radial.r(u.n_r() - 1)),
        (tg.t(0), tg.t(tg.n - 1)),
        &rows,
    );
    ctx.write(rep, &format!("{stem}.svg"), svg)
}

/// Solves for the configured source and records the residual check.
pub(crate) fn forward(ctx: &Ctx, rep: &mut ExperimentReport, src: &SourceConfig) -> Result<(SpacetimeField, ForwardSolution)> {
    let f = gaussian_source(&ctx.phys, src);
    let sol = solve_forward(&ctx.phys.spec, &ctx.phys.grid, &f)?;
    rep.push(Check::le("residual", sol.report.residual, ctx.cfg.tolerances.residual));
    Ok((f, sol))
}

pub(crate) fn elliptic_fraction(u: &SpacetimeField, a: f64, delta: f64) -> f64 {
    let total = u.norm_sq();
    if total == 0.0 {
        0.0
    } else {
        u.norm_sq_where(|r| r < a * (1.0 - delta)) / total
    }
}

pub fn run(ctx: &Ctx, rep: &mut ExperimentReport) -> Result<()> {
    let (cfg, tol) = (&ctx.cfg.solve, &ctx.cfg.tolerances);
    let Physics { bg, spec, grid, .. } = ctx.phys;

    let props = absorber_properties(&bg, &spec, &grid, cfg.sign_samples, ctx.seed)?;
    rep.push(Check::le("sign_violations", props.sign_violations as f64, 0.0));
    rep.push(Check::le("kernel_inside", props.kernel_inside_max, 0.0));
    rep.push(Check::le("kernel_leak", props.kernel_leak_max, 0.0));
    rep.push(Check::le("self_adjoint", props.self_adjoint_rel, tol.self_adjoint));
    rep.push(Check::gt("sigma_minus_samples", props.sigma_minus_samples as f64, 0.0));
    rep.push(Check::le("elliptic_symbol", props.elliptic_symbol_rel, tol.elliptic_symbol));
    rep.push(Check::le("elliptic_packet", props.elliptic_packet_rel, tol.elliptic_packet));
    ctx.write_json(rep, "absorber.json", &props)?;

    let mut csv = String::from("lambda,with_absorber,without_absorber\n");
    for &lam in &cfg.damping_lambdas {
        let with = damping_ratio(&spec, &grid, lam, true)?;
        let without = damping_ratio(&spec, &grid, lam, false)?;
        rep.push(Check::le(&format!("damping_{lam}"), with, tol.damping));
        csv.push_str(&format!("{lam},{with},{without}\n"));
    }
    ctx.write(rep, "damping.csv", csv)?;

    let (_, sol) = forward(ctx, rep, &cfg.source)?;
    let frac = elliptic_fraction(&sol.u, bg.a_rot, cfg.delta);
    rep.push(Check::ge("elliptic_mass", frac, tol.elliptic_mass));
    ctx.write_json(rep, "solve.json", &sol.report)?;
    write_field(ctx, rep, &sol.u, "solution")?;
    Ok(())
}
