//! Sampled checks of the absorber's defining properties.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::absorber::{absorber_block, absorber_symbol, apply_w, AbsorberSpec, GridSpec};
use crate::background::{in_sigma_minus, BackgroundParams, PhasePoint};
use crate::error::Result;
use crate::field::{RadialGrid, SpacetimeField};
use crate::rng::TrialRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorberProperties {
    pub sign_samples: usize,
    /// Samples with `w·λ > 0`.
    pub sign_violations: usize,
    /// `max |W u|` over fields supported in `r < R`.
    pub kernel_inside_max: f64,
    /// `max |W u|` on `r ≤ R` for fields with full support.
    pub kernel_leak_max: f64,
    /// `|⟨Wu, v⟩ − ⟨u, Wv⟩| / (‖u‖‖v‖ max|λ|²)`.
    pub self_adjoint_rel: f64,
    pub sigma_minus_samples: usize,
    /// `max |w + sgn(λ)λ²| / λ²` over the Σ₋ samples with `r > R + 1`.
    pub elliptic_symbol_rel: f64,
    /// Operator-level check on an incoming packet: `max |W v + sgn(λ)λ² v| / (λ² max|v|)`
    /// on the packet core, for `λ = ±packet_lambda`.
    pub packet_lambda: f64,
    pub elliptic_packet_rel: f64,
}

fn random_field(grid: &GridSpec, rng: &mut TrialRng, keep: impl Fn(f64) -> bool) -> SpacetimeField {
    let mut u = SpacetimeField::zeros(grid.time(), grid.radial());
    for i in 0..u.n_t() {
        for j in 0..u.n_r() {
            if keep(u.radial.r(j)) {
                *u.at_mut(i, j) = Complex64::new(rng.normal(), rng.normal());
            }
        }
    }
    u
}

/// Samples the sign property on `samples` random points, checks the kernel
/// support and weighted self-adjointness on random fields over `grid`, and the
/// elliptic value `w = −sgn(λ)λ²` on Σ₋ beyond `R + 1`.
pub fn absorber_properties(
    bg: &BackgroundParams,
    spec: &AbsorberSpec,
    grid: &GridSpec,
    samples: usize,
    seed: u64,
) -> Result<AbsorberProperties> {
    grid.validate(spec)?;
    let mut rng = TrialRng::new(seed);
    let r_hi = grid.r_max;
    let l_hi = std::f64::consts::PI * grid.n_t as f64 / grid.period;
    let mut sign_violations = 0;
    for _ in 0..samples {
        let r = rng.uniform_in(0.0, r_hi);
        let l = rng.uniform_in(-l_hi, l_hi);
        let x = rng.uniform_in(-2.0 * l_hi, 2.0 * l_hi);
        let e = rng.uniform_in(-0.5 * l_hi, 0.5 * l_hi);
        if absorber_symbol(spec, r, l, x, e) * l > 0.0 {
            sign_violations += 1;
        }
    }

    let mode = &grid.mode;
    let inside = random_field(grid, &mut rng, |r| r < spec.r_abs);
    let kernel_inside_max = apply_w(spec, mode, &inside).max_abs();
    let full = random_field(grid, &mut rng, |_| true);
    let wf = apply_w(spec, mode, &full);
    let mut kernel_leak_max: f64 = 0.0;
    for i in 0..wf.n_t() {
        for j in 0..wf.n_r() {
            if wf.radial.r(j) <= spec.r_abs {
                kernel_leak_max = kernel_leak_max.max(wf.at(i, j).norm());
            }
        }
    }

    let v = random_field(grid, &mut rng, |_| true);
    let lhs = wf.inner(&v)?;
    let rhs = full.inner(&apply_w(spec, mode, &v))?;
    let self_adjoint_rel = (lhs - rhs).norm() / ((full.norm_sq() * v.norm_sq()).sqrt() * l_hi * l_hi);

    let mut sigma_minus_samples = 0;
    let mut elliptic_symbol_rel: f64 = 0.0;
    let a = bg.a_rot;
    while sigma_minus_samples < samples.min(100_000) {
        let r = rng.uniform_in(spec.r_abs + 1.0, r_hi);
        let l = rng.uniform_in(-l_hi, l_hi);
        let q = PhasePoint::radial(r, l, l * (1.0 - a * a / (r * r)).sqrt());
        if !in_sigma_minus(bg, &q, 1e-12)? {
            continue;
        }
        sigma_minus_samples += 1;
        let w = absorber_symbol(spec, r, l, q.xi, 0.0);
        elliptic_symbol_rel = elliptic_symbol_rel.max((w + l.signum() * l * l).abs() / (l * l));
    }

    // incoming packet well inside {χ = 1}, on a radial grid fine enough to resolve it
    let packet_lambda = 20.0;
    let center = spec.r_abs + 4.5;
    let fine = RadialGrid::staggered(center + 4.0, ((center + 4.0) * 128.0) as usize)?;
    let mut elliptic_packet_rel: f64 = 0.0;
    for l in [-packet_lambda, packet_lambda] {
        let b = absorber_block(spec, &fine, mode.kf(), l).expect("absorber active at |λ| > 5|k|");
        let env = |r: f64| (-(r - center).powi(2) / 2.0).exp();
        let v: Vec<Complex64> = fine.points().iter().map(|&r| Complex64::from_polar(env(r), l * r)).collect();
        let w = b.apply(&v);
        for j in 0..fine.n {
            if (fine.r(j) - center).abs() < 1.0 {
                elliptic_packet_rel = elliptic_packet_rel.max((w[j] + v[j] * (l.signum() * l * l)).norm() / (l * l));
            }
        }
    }

    Ok(AbsorberProperties {
        sign_samples: samples,
        sign_violations,
        kernel_inside_max,
        kernel_leak_max,
        self_adjoint_rel,
        sigma_minus_samples,
        elliptic_symbol_rel,
        packet_lambda,
        elliptic_packet_rel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::ModeParams;

    #[test]
    fn properties_hold_on_a_small_grid() {
        let bg = BackgroundParams::new(1.0).unwrap();
        let spec = AbsorberSpec::new(&bg, 3.5, 3.0).unwrap();
        let grid = GridSpec { period: 8.0, n_t: 32, r_max: 7.0, n_r: 224, bg, mode: ModeParams::new(1, 0.0).unwrap() };
        let p = absorber_properties(&bg, &spec, &grid, 20_000, 3).unwrap();
        assert_eq!(p.sign_violations, 0);
        assert_eq!(p.kernel_inside_max, 0.0);
        assert_eq!(p.kernel_leak_max, 0.0);
        assert!(p.self_adjoint_rel < 1e-12, "{}", p.self_adjoint_rel);
        assert_eq!(p.elliptic_symbol_rel, 0.0);
        assert!(p.elliptic_packet_rel < 0.05, "{}", p.elliptic_packet_rel);
    }
}
