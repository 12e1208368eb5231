//! Special functions, mode ODE against the Bessel oracle, unique continuation.

use cosmon_core::modes::{exact_mode, oracle_equivalence, solve_mode_ode, unique_continuation_check, Branch};
use cosmon_core::specfun::identity_check;
use cosmon_core::{Complex64, Result};

use super::Ctx;
use crate::report::{Check, ExperimentReport};

pub fn run(ctx: &Ctx, rep: &mut ExperimentReport) -> Result<()> {
    let (cfg, tol) = (&ctx.cfg.modes, &ctx.cfg.tolerances);
    let (bg, mode) = (ctx.phys.bg, ctx.phys.mode);

    let ids = identity_check(cfg.specfun_samples, ctx.seed)?;
    rep.push(Check::le("bessel_wronskian", ids.wronskian, tol.wronskian));
    rep.push(Check::le("bessel_recurrence", ids.recurrence, tol.recurrence));
    rep.push(Check::le("bessel_half_order", ids.half_order, tol.half_order));
    rep.push(Check::le("bessel_derivative", ids.derivative, tol.bessel_derivative));

    let draws = oracle_equivalence(cfg.oracle_draws, ctx.seed.wrapping_add(1), tol.mode_integrator)?;
    let worst = draws.iter().map(|d| d.rel_err).fold(0.0, f64::max);
    rep.push(Check::le("mode_oracle", worst, tol.mode_oracle));
    ctx.write_json(rep, "oracle.json", &draws)?;

    // configured profiles: ODE from exact data at the middle of the interval
    let grid: Vec<f64> =
        (0..cfg.n_r).map(|i| cfg.r_min + (cfg.r_max - cfg.r_min) * i as f64 / (cfg.n_r - 1) as f64).collect();
    let r_start = 0.5 * (cfg.r_min + cfg.r_max);
    let mut csv = String::from("lambda,r,exact,ode\n");
    let mut profile_err = 0.0f64;
    for &lam in &cfg.lambdas {
        let ex = exact_mode(&bg, &mode, lam, Branch::Regular)?;
        let init = (Complex64::new(ex.value(r_start)?, 0.0), Complex64::new(ex.derivative(r_start)?, 0.0));
        let ode = solve_mode_ode(&bg, &mode, lam, &grid, r_start, init, tol.mode_integrator)?;
        let exact = ex.profile(&bg, &mode, lam, &grid)?;
        let scale = exact.max_abs();
        for ((r, u), v) in grid.iter().zip(&exact.values).zip(&ode.values) {
            profile_err = profile_err.max((u - v).norm() / scale);
            csv.push_str(&format!("{lam},{r},{},{}\n", u.re, v.re));
        }
    }
    rep.push(Check::le("mode_profiles", profile_err, tol.mode_oracle));
    ctx.write(rep, "modes.csv", csv)?;

    let a = bg.a_rot;
    let uc = unique_continuation_check(&bg, &mode, cfg.uc_lambda, (0.25 * a, 2.0 * a), tol.mode_integrator, cfg.uc_trials, ctx.seed.wrapping_add(2))?;
    rep.push(Check::le("uc_zero_data", uc.zero_data_sup, tol.zero_data));
    rep.push(Check::gt("uc_min_window_mass", uc.min_trial_mass, 0.0));
    rep.push(Check::gt("uc_bessel_window_mass", uc.bessel_window_mass, 0.0));
    ctx.write_json(rep, "unique_continuation.json", &uc)?;
    Ok(())
}
