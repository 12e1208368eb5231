//! Pairing identity and the elliptic estimate near the string.

use cosmon_core::solver::{coercivity_check, CoercivityGrid};
use cosmon_core::{ModeParams, Result};

use super::Ctx;
use crate::report::{Check, ExperimentReport};

pub fn run(ctx: &Ctx, rep: &mut ExperimentReport) -> Result<()> {
    let (cfg, tol) = (&ctx.cfg.coercivity, &ctx.cfg.tolerances);
    let grid = CoercivityGrid { period: cfg.period, n_t: cfg.n_t, n_r: cfg.n_r };
    let mut reports = Vec::new();
    for (i, &k) in cfg.ks.iter().enumerate() {
        let mode = ModeParams::new(k, ctx.phys.mode.m)?;
        let r = coercivity_check(&ctx.phys.bg, &mode, cfg.trials, &grid, ctx.seed.wrapping_add(i as u64))?;
        rep.push(Check::le(&format!("pairing_identity_k{k}"), r.max_identity_rel_err, tol.pairing_identity));
        rep.push(Check::ge(&format!("coercivity_slack_k{k}"), r.min_slack, 0.0));
        reports.push(r);
    }
    let mut csv = String::from("k,trial,pairing_re,pairing_im,identity,identity_rel_err,slack,l2\n");
    for r in &reports {
        for (i, t) in r.trials.iter().enumerate() {
            csv.push_str(&format!(
                "{},{i},{},{},{},{},{},{}\n",
                r.k, t.pairing.re, t.pairing.im, t.identity, t.identity_rel_err, t.slack, t.l2
            ));
        }
    }
    ctx.write(rep, "coercivity.csv", csv)?;
    Ok(())
}
