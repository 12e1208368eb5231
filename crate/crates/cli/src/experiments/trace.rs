//! Null bicharacteristics: closed-form radius and conservation laws.

use cosmon_core::rays::{integrate_ray, sample_ray, RayPath};
use cosmon_core::rng::TrialRng;
use cosmon_core::{PhasePoint, Result};
use rayon::prelude::*;

use super::Ctx;
use crate::report::{Check, ExperimentReport};

/// Random null seed with `η = 0`, `r ∈ (a, 5a)` and `|λ| ∈ (0.5, 3)`.
fn random_seed(rng: &mut TrialRng, a: f64) -> PhasePoint {
    let t = rng.uniform_in(-5.0, 5.0);
    let r = rng.uniform_in(a, 5.0 * a);
    let lam = rng.uniform_in(0.5, 3.0) * if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
    let xi = lam.abs() * (1.0 - a * a / (r * r)).max(0.0).sqrt() * if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
    PhasePoint { t, ..PhasePoint::radial(r, lam, xi) }
}

fn conservation(path: &RayPath) -> f64 {
    let q0 = path.origin().unwrap_or(path.first()).q;
    path.samples
        .iter()
        .map(|x| ((x.q.lambda - q0.lambda).abs() / q0.lambda.abs()).max((x.q.eta - q0.eta).abs()))
        .fold(0.0, f64::max)
}

pub fn run(ctx: &Ctx, rep: &mut ExperimentReport) -> Result<()> {
    let (cfg, tol) = (&ctx.cfg.trace, &ctx.cfg.tolerances);
    let bg = ctx.phys.bg;
    let mut seeds: Vec<PhasePoint> =
        cfg.seeds.iter().map(|s| PhasePoint { t: s.t, ..PhasePoint::radial(s.r, s.lambda, s.xi) }).collect();
    let mut rng = TrialRng::new(ctx.seed);
    seeds.extend((0..cfg.random_seeds).map(|_| random_seed(&mut rng, bg.a_rot)));

    let paths: Vec<RayPath> = seeds
        .par_iter()
        .map(|q| integrate_ray(&bg, q, (cfg.s_min, cfg.s_max), tol.ray_integrator))
        .collect::<Result<_>>()?;
    let mut closed = 0.0f64;
    let mut conserved = 0.0f64;
    for p in &paths {
        closed = closed.max(p.closed_form_deviation().unwrap_or(f64::INFINITY));
        conserved = conserved.max(conservation(p));
    }
    rep.push(Check::le("ray_closed_form", closed, tol.ray_closed_form));
    rep.push(Check::le("ray_conservation", conserved, tol.ray_conservation));

    let steps = ((cfg.s_max - cfg.s_min) / cfg.s_step).floor() as usize;
    let nodes: Vec<f64> = (0..=steps).map(|i| cfg.s_min + i as f64 * cfg.s_step).collect();
    let sampled: Vec<RayPath> =
        seeds.par_iter().map(|q| sample_ray(&bg, q, &nodes, tol.ray_integrator)).collect::<Result<_>>()?;
    let mut csv = String::from("ray,s,t,r,phi,lambda,xi,eta\n");
    for (i, p) in sampled.iter().enumerate() {
        for x in &p.samples {
            let q = x.q;
            csv.push_str(&format!("{i},{},{},{},{},{},{},{}\n", x.s, q.t, q.r, q.phi, q.lambda, q.xi, q.eta));
        }
    }
    ctx.write(rep, "rays.csv", csv)?;

    let shown = sampled.len().min(8);
    let names: Vec<String> = (0..shown).map(|i| format!("ray {i}")).collect();
    let series: Vec<(&str, Vec<(f64, f64)>)> = sampled[..shown]
        .iter()
        .zip(&names)
        .map(|(p, n)| (n.as_str(), p.samples.iter().map(|x| (x.s, x.q.r)).collect()))
        .collect();
    ctx.write(rep, "rays.svg", cosmon_core::io::svg_lines("null rays", "s", "r", &series))?;
    Ok(())
}
