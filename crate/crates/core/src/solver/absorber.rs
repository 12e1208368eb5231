//! The absorbing operator `W = χ̃ W₀ χ̃` with symbol
//! `w = −sgn(λ) λ² ϱ(ξ/λ) ψ(|η/λ|) χ(r)`.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::background::{BackgroundParams, ModeParams};
use crate::cutoff::{ramp_up, Plateau};
use crate::error::{Error, Result};
use crate::field::{RadialGrid, SpacetimeField, TimeGrid};

/// Largest zero-padded FFT used for the radial kernel.
pub const MAX_PAD: usize = 1 << 16;

/// Points of `supp χ̃` below which the kernel counts as under-resolved.
pub const MIN_WINDOW_POINTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsorberSpec {
    /// Inner edge `R` of the absorber.
    pub r_abs: f64,
    /// Sources live in `r < R₀`.
    pub r_src: f64,
}

impl AbsorberSpec {
    pub fn new(bg: &BackgroundParams, r_abs: f64, r_src: f64) -> Result<Self> {
        let a = bg.a_rot;
        if !(r_src > 0.0) {
            return Err(Error::InvalidParams(format!("R0 = {r_src} must be positive")));
        }
        if !(r_abs > a && r_abs > r_src) {
            return Err(Error::InvalidParams(format!("R = {r_abs} must exceed a = {a} and R0 = {r_src}")));
        }
        if !(1.0 - a * a / (r_abs * r_abs) > 0.9) {
            return Err(Error::InvalidParams(format!("1 - a^2/R^2 must exceed 9/10 (R = {r_abs}, a = {a})")));
        }
        Ok(Self { r_abs, r_src })
    }

    pub fn rho(&self, x: f64) -> f64 {
        Plateau::new(2.0 / 3.0, 0.75, 1.25, 4.0 / 3.0).eval(x)
    }

    pub fn psi(&self, x: f64) -> f64 {
        Plateau::new(-0.2, -0.1, 0.1, 0.2).eval(x)
    }

    /// 1 on `[R + 1, ∞)`, vanishing on `(−∞, R + 5/16]`.
    pub fn chi(&self, r: f64) -> f64 {
        ramp_up(r, self.r_abs + 0.3125, self.r_abs + 1.0)
    }

    /// 1 on `[R + 1/4, ∞) ⊃ supp χ`, vanishing on `(−∞, R + 1/16]`.
    pub fn chi_tilde(&self, r: f64) -> f64 {
        ramp_up(r, self.r_abs + 0.0625, self.r_abs + 0.25)
    }
}

/// `w(r, λ, ξ, η)`; zero at `λ = 0`.
pub fn absorber_symbol(spec: &AbsorberSpec, r: f64, lambda: f64, xi: f64, eta: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    let c = spec.chi(r);
    if c == 0.0 {
        return 0.0;
    }
    -lambda.signum() * lambda * lambda * spec.rho(xi / lambda) * spec.psi((eta / lambda).abs()) * c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub period: f64,
    pub n_t: usize,
    pub r_max: f64,
    pub n_r: usize,
    pub bg: BackgroundParams,
    pub mode: ModeParams,
}

impl GridSpec {
    pub fn validate(&self, spec: &AbsorberSpec) -> Result<()> {
        if !self.n_t.is_power_of_two() {
            return Err(Error::InvalidParams(format!("N_t = {} must be a power of two", self.n_t)));
        }
        if !(self.r_max > spec.r_abs + 2.0) {
            return Err(Error::InvalidParams(format!("R_max = {} must exceed R + 2 = {}", self.r_max, spec.r_abs + 2.0)));
        }
        if self.n_r < 6 || !(self.period > 0.0) {
            return Err(Error::InvalidParams("need N_r >= 6 and a positive period".into()));
        }
        Ok(())
    }

    pub fn time(&self) -> TimeGrid {
        TimeGrid { period: self.period, n: self.n_t }
    }

    /// `r_j = (j + 1/2)Δr`, `Δr = R_max/N_r`.
    pub fn radial(&self) -> RadialGrid {
        RadialGrid { r0: 0.5 * self.r_max / self.n_r as f64, dr: self.r_max / self.n_r as f64, n: self.n_r }
    }
}

/// The `λ`-block of `W` restricted to the window `supp χ̃`.
#[derive(Debug, Clone)]
pub struct AbsorberBlock {
    pub lambda: f64,
    /// First grid index of the window; the block acts on indices `start..n`.
    pub start: usize,
    pub size: usize,
    /// Row-major `size × size` matrix.
    pub mat: Vec<Complex64>,
    pub pad: usize,
}

impl AbsorberBlock {
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        let w = &v[self.start..];
        for i in 0..self.size {
            let row = &self.mat[i * self.size..(i + 1) * self.size];
            out[self.start + i] = row.iter().zip(w).map(|(a, b)| a * b).sum();
        }
        out
    }
}

/// Builds `W_λ = χ̃ Op_L(w) χ̃` on the radial grid by a zero-padded FFT of
/// the symbol in `ξ`, symmetrized on the weighted inner product
/// `Σ r_j u_j v̄_j`. Returns `None` where the block vanishes identically.
pub fn absorber_block(spec: &AbsorberSpec, grid: &RadialGrid, k: f64, lambda: f64) -> Option<AbsorberBlock> {
    if lambda == 0.0 || spec.psi((k / lambda).abs()) == 0.0 {
        return None;
    }
    let n = grid.n;
    let start = (0..n).find(|&j| spec.chi_tilde(grid.r(j)) > 0.0)?;
    let size = n - start;
    if size < MIN_WINDOW_POINTS {
        log::warn!("absorber window has only {size} points; W is under-resolved");
    }
    let dr = grid.dr;
    let want = (2.0 * std::f64::consts::PI * 16.0 / (lambda.abs() * dr)).ceil() as usize;
    let pad = (2 * size).max(want).next_power_of_two().min(MAX_PAD).max((2 * size).next_power_of_two());
    let eta_factor = spec.psi((k / lambda).abs());
    let lam2 = -lambda.signum() * lambda * lambda * eta_factor;
    let mut kern: Vec<Complex64> = (0..pad)
        .map(|q| {
            let f = if q <= pad / 2 { q as f64 } else { q as f64 - pad as f64 };
            let xi = 2.0 * std::f64::consts::PI * f / (pad as f64 * dr);
            Complex64::new(lam2 * spec.rho(xi / lambda), 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_inverse(pad).process(&mut kern);
    let scale = 1.0 / pad as f64;
    let lag = |m: i64| kern[m.rem_euclid(pad as i64) as usize] * scale;

    let r: Vec<f64> = (start..n).map(|j| grid.r(j)).collect();
    let ct: Vec<f64> = r.iter().map(|&x| spec.chi_tilde(x)).collect();
    let ch: Vec<f64> = r.iter().map(|&x| spec.chi(x)).collect();
    let mut a = vec![Complex64::new(0.0, 0.0); size * size];
    for i in 0..size {
        for j in 0..size {
            a[i * size + j] = lag(i as i64 - j as i64) * (ct[i] * ch[i] * ct[j]);
        }
    }
    let mut mat = vec![Complex64::new(0.0, 0.0); size * size];
    for i in 0..size {
        for j in 0..size {
            mat[i * size + j] = 0.5 * (a[i * size + j] + a[j * size + i].conj() * (r[j] / r[i]));
        }
    }
    Some(AbsorberBlock { lambda, start, size, mat, pad })
}

/// Applies `W` to a field of mode `k`: per temporal frequency, the block
/// [`absorber_block`] acts on the radial profile.
pub fn apply_w(spec: &AbsorberSpec, mode: &ModeParams, u: &SpacetimeField) -> SpacetimeField {
    let mut spec_u = u.to_spectral();
    for (p, row) in spec_u.iter_mut().enumerate() {
        let lambda = u.time.frequency(p);
        *row = match absorber_block(spec, &u.radial, mode.kf(), lambda) {
            Some(b) => b.apply(row),
            None => vec![Complex64::new(0.0, 0.0); row.len()],
        };
    }
    SpacetimeField::from_spectral(u.time, u.radial, &spec_u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::TrialRng;

    fn setup() -> (BackgroundParams, AbsorberSpec, ModeParams) {
        let bg = BackgroundParams::new(1.0).unwrap();
        let spec = AbsorberSpec::new(&bg, 3.5, 3.0).unwrap();
        (bg, spec, ModeParams::new(1, 0.0).unwrap())
    }

    #[test]
    fn symbol_examples() {
        let (_, spec, _) = setup();
        assert_eq!(absorber_symbol(&spec, 5.5, -2.0, -2.0, 0.0), 4.0);
        assert_eq!(absorber_symbol(&spec, 3.4, -2.0, -2.0, 0.0), 0.0);
        assert_eq!(absorber_symbol(&spec, 5.5, 0.0, 1.0, 0.0), 0.0);
        let mut rng = TrialRng::new(1);
        for _ in 0..10_000 {
            let (r, l, x) = (rng.uniform_in(0.1, 8.0), rng.uniform_in(-50.0, 50.0), rng.uniform_in(-70.0, 70.0));
            let w = absorber_symbol(&spec, r, l, x, rng.uniform_in(-3.0, 3.0));
            assert!(w * l.signum() <= 0.0);
        }
    }

    #[test]
    fn spec_validation() {
        let bg = BackgroundParams::new(1.0).unwrap();
        assert!(AbsorberSpec::new(&bg, 3.5, 3.6).is_err());
        assert!(AbsorberSpec::new(&bg, 3.5, 1.0).unwrap().r_abs == 3.5);
        assert!(AbsorberSpec::new(&bg, 3.0, 1.0).is_err());
        assert!(AbsorberSpec::new(&bg, 2.0, 1.0).is_err());
        let (_, spec, _) = setup();
        for i in 0..2000 {
            let r = 3.0 + 5.0 * i as f64 / 2000.0;
            assert!((spec.chi_tilde(r) * spec.chi(r) - spec.chi(r)).abs() < 1e-15);
            if r <= 3.5 {
                assert_eq!(spec.chi_tilde(r), 0.0);
            }
        }
    }

    fn field(seed: u64, lo: f64) -> SpacetimeField {
        let time = TimeGrid::new(8.0, 32).unwrap();
        let radial = RadialGrid::staggered(7.0, 224).unwrap();
        let mut rng = TrialRng::new(seed);
        let mut u = SpacetimeField::zeros(time, radial);
        for i in 0..time.n {
            for j in 0..radial.n {
                if radial.r(j) > lo {
                    *u.at_mut(i, j) = Complex64::new(rng.normal(), rng.normal());
                }
            }
        }
        u
    }

    #[test]
    fn kernel_support_and_commutation() {
        let (_, spec, mode) = setup();
        let inside = field(2, 0.0).map(|_, r, z| if r < 3.5 { z } else { Complex64::new(0.0, 0.0) });
        assert_eq!(apply_w(&spec, &mode, &inside).max_abs(), 0.0);
        let u = field(3, 0.0);
        let wu = apply_w(&spec, &mode, &u);
        for i in 0..u.n_t() {
            for j in 0..u.n_r() {
                if u.radial.r(j) <= 3.5 {
                    assert_eq!(wu.at(i, j), Complex64::new(0.0, 0.0));
                }
            }
        }
        let a = apply_w(&spec, &mode, &u.dt());
        let b = wu.dt();
        assert!(a.sub(&b).unwrap().max_abs() <= 1e-12 * b.max_abs());
    }

    #[test]
    fn weighted_self_adjointness() {
        let (_, spec, mode) = setup();
        let u = field(4, 3.0);
        let v = field(5, 3.0);
        let lhs = apply_w(&spec, &mode, &u).inner(&v).unwrap();
        let rhs = u.inner(&apply_w(&spec, &mode, &v)).unwrap();
        let scale = (u.norm_sq() * v.norm_sq()).sqrt() * 16.0_f64.powi(2);
        assert!((lhs - rhs).norm() <= 1e-12 * scale, "{}", (lhs - rhs).norm() / scale);
    }

    #[test]
    fn elliptic_value_on_incoming_packet() {
        let (_, spec, _) = setup();
        let mode = ModeParams::new(0, 0.0).unwrap();
        let grid = RadialGrid::staggered(12.0, 1536).unwrap();
        for lambda in [-20.0, 20.0] {
            let b = absorber_block(&spec, &grid, mode.kf(), lambda).unwrap();
            let env = |r: f64| (-(r - 8.0f64).powi(2) / 2.0).exp();
            let v: Vec<Complex64> = grid.points().iter().map(|&r| Complex64::from_polar(env(r), lambda * r)).collect();
            let w = b.apply(&v);
            let want = -lambda.signum() * lambda * lambda;
            for j in 0..grid.n {
                let r = grid.r(j);
                if (r - 8.0).abs() < 1.0 {
                    assert!((w[j] - v[j] * want).norm() <= 0.05 * lambda * lambda * env(r), "r = {r}");
                }
            }
            // outgoing packet is left alone
            let v: Vec<Complex64> = grid.points().iter().map(|&r| Complex64::from_polar(env(r), -lambda * r)).collect();
            let w = b.apply(&v);
            assert!(w.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-3 * lambda * lambda);
        }
    }

    #[test]
    fn block_vanishes_where_psi_does() {
        let (_, spec, _) = setup();
        let grid = RadialGrid::staggered(7.0, 224).unwrap();
        for lambda in [0.0, 1.0, -3.0, 5.0, -5.0] {
            assert!(absorber_block(&spec, &grid, 1.0, lambda).is_none());
        }
        assert!(absorber_block(&spec, &grid, 1.0, 10.5).is_some());
    }
}
