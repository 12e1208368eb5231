//! Pairing identity and elliptic estimate for trials supported in `r < a/4`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::background::{apply_box_k, BackgroundParams, ModeParams};
use crate::error::{Error, Result};
use crate::field::{RadialGrid, SpacetimeField, TimeGrid};
use crate::modes::h1k_norm;
use crate::rng::TrialRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoercivityGrid {
    pub period: f64,
    pub n_t: usize,
    /// Radial nodes on `(0, a/4)`.
    pub n_r: usize,
}

impl Default for CoercivityGrid {
    fn default() -> Self {
        Self { period: 2.0 * std::f64::consts::PI, n_t: 16, n_r: 4000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoercivityTrial {
    /// `⟨Pφ, φ⟩`.
    pub pairing: Complex64,
    /// `‖r⁻¹(a∂ₜ+ik)φ‖² − ‖∂ₜφ‖² + ‖∂ᵣφ‖² + m²‖φ‖²`.
    pub identity: f64,
    pub identity_rel_err: f64,
    /// `⟨Pφ,φ⟩ − [¾‖tw‖² + ‖∂ₜφ‖² + ‖∂ᵣφ‖² + ‖φ‖² − (1 + 4k²/a²)‖φ‖²]`.
    pub slack: f64,
    pub l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoercivityReport {
    pub k: i32,
    pub trials: Vec<CoercivityTrial>,
    pub max_identity_rel_err: f64,
    pub min_slack: f64,
}

/// Checks the pairing identity and the estimate on one trial field.
pub fn coercivity_on(bg: &BackgroundParams, mode: &ModeParams, phi: &SpacetimeField) -> Result<CoercivityTrial> {
    let a = bg.a_rot;
    let total = phi.norm_sq();
    let outside = phi.norm_sq_where(|r| r > 0.25 * a);
    if outside > 1e-14 * total.max(f64::MIN_POSITIVE) {
        return Err(Error::Precondition(format!(
            "trial has mass {outside:e} in r > a/4 (total {total:e})"
        )));
    }
    // W vanishes on r < R, so P acts as □ₖ + m² on the trial
    let pairing = apply_box_k(bg, mode, phi)?.inner(phi)?;
    let h = h1k_norm(phi, bg, mode);
    let m2 = mode.m * mode.m;
    let identity = h.twisted - h.dt + h.dr + m2 * h.l2;
    let scale = h.twisted + h.dt + h.dr + m2 * h.l2;
    let identity_rel_err = if scale == 0.0 { (pairing - identity).norm() } else { (pairing - identity).norm() / scale };
    let k = mode.kf();
    let rhs = 0.75 * h.twisted + h.dt + h.dr + h.l2 - (1.0 + 4.0 * k * k / (a * a)) * h.l2;
    Ok(CoercivityTrial { pairing, identity, identity_rel_err, slack: pairing.re - rhs, l2: h.l2 })
}

fn bump(x: f64) -> f64 {
    if x.abs() < 1.0 {
        (-1.0 / (1.0 - x * x)).exp()
    } else {
        0.0
    }
}

/// Random band-limited trial: a few temporal modes times compact bumps in
/// `r ∈ [0.02a, 0.24a]`.
fn random_trial(rng: &mut TrialRng, a: f64, time: TimeGrid, radial: RadialGrid) -> SpacetimeField {
    let n_modes = rng.int_in(1, 3) as usize;
    let comps: Vec<(f64, Complex64, f64, f64, f64)> = (0..n_modes)
        .map(|_| {
            let p = rng.int_in(-3, 3) as f64;
            let lambda = 2.0 * std::f64::consts::PI * p / time.period;
            let c = Complex64::new(rng.normal(), rng.normal());
            let width = rng.uniform_in(0.04, 0.1) * a;
            let centre = rng.uniform_in(0.02 * a + width, 0.24 * a - width);
            let osc = rng.uniform_in(0.0, 8.0) / a;
            (lambda, c, centre, width, osc)
        })
        .collect();
    SpacetimeField::from_fn(time, radial, |t, r| {
        comps
            .iter()
            .map(|&(l, c, x0, w, osc)| c * Complex64::from_polar(bump((r - x0) / w), l * t) * (osc * r).cos())
            .sum()
    })
}

/// Runs `trials` random trials (seeded) and collects the worst cases.
pub fn coercivity_check(
    bg: &BackgroundParams,
    mode: &ModeParams,
    trials: usize,
    grid: &CoercivityGrid,
    seed: u64,
) -> Result<CoercivityReport> {
    let a = bg.a_rot;
    let time = TimeGrid::new(grid.period, grid.n_t)?;
    let radial = RadialGrid::staggered(0.25 * a, grid.n_r)?;
    let mut rng = TrialRng::new(seed);
    let fields: Vec<SpacetimeField> = (0..trials).map(|_| random_trial(&mut rng, a, time, radial)).collect();
    let results: Vec<CoercivityTrial> =
        fields.par_iter().map(|phi| coercivity_on(bg, mode, phi)).collect::<Result<_>>()?;
    let max_identity_rel_err = results.iter().map(|t| t.identity_rel_err).fold(0.0, f64::max);
    let min_slack = results.iter().map(|t| t.slack).fold(f64::INFINITY, f64::min);
    Ok(CoercivityReport {
        k: mode.k,
        trials: results,
        max_identity_rel_err,
        min_slack: if trials == 0 { 0.0 } else { min_slack },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_trial() {
        let bg = BackgroundParams::new(1.0).unwrap();
        let mode = ModeParams::new(1, 0.0).unwrap();
        let phi = SpacetimeField::zeros(TimeGrid::new(1.0, 4).unwrap(), RadialGrid::staggered(0.25, 100).unwrap());
        let t = coercivity_on(&bg, &mode, &phi).unwrap();
        assert_eq!((t.pairing.norm(), t.identity, t.slack), (0.0, 0.0, 0.0));
    }

    #[test]
    fn random_trials_satisfy_identity_and_estimate() {
        let bg = BackgroundParams::new(1.0).unwrap();
        for k in [0, 1, 3] {
            let mode = ModeParams::new(k, 0.3).unwrap();
            let rep = coercivity_check(&bg, &mode, 10, &CoercivityGrid::default(), 9).unwrap();
            assert!(rep.max_identity_rel_err < 1e-8, "k = {k}: {}", rep.max_identity_rel_err);
            assert!(rep.min_slack >= 0.0);
        }
    }

    #[test]
    fn mass_outside_quarter_radius_is_a_precondition_error() {
        let bg = BackgroundParams::new(1.0).unwrap();
        let mode = ModeParams::new(1, 0.0).unwrap();
        let time = TimeGrid::new(1.0, 4).unwrap();
        let radial = RadialGrid::staggered(1.0, 400).unwrap();
        let phi = SpacetimeField::from_fn(time, radial, |_, r| Complex64::new(bump((r - 0.5) / 0.1), 0.0));
        assert!(matches!(coercivity_on(&bg, &mode, &phi), Err(Error::Precondition(_))));
    }
}
