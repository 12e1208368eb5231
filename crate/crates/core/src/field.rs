//! Tensor-product (t, r) grids and complex fields on them.
//!
//! Time is periodic and differentiated spectrally; the radial grid is uniform
//! and, in solver use, staggered so that no node sits on the axis.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::stencil::{OuterClosure, RadialStencils};

/// Periodic time lattice `t_i = i·period/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub period: f64,
    pub n: usize,
}

impl TimeGrid {
    pub fn new(period: f64, n: usize) -> Result<Self> {
        if !(period > 0.0) || n < 2 {
            return Err(Error::InvalidParams(format!(
                "time grid needs period > 0 and n >= 2 (got {period}, {n})"
            )));
        }
        Ok(Self { period, n })
    }

    pub fn dt(&self) -> f64 {
        self.period / self.n as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        i as f64 * self.dt()
    }

    /// Angular frequency of FFT bin `p` (bins above `n/2` are negative).
    pub fn frequency(&self, p: usize) -> f64 {
        let n = self.n as i64;
        let q = if (p as i64) < (n + 1) / 2 { p as i64 } else { p as i64 - n };
        2.0 * PI * q as f64 / self.period
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n).map(|p| self.frequency(p)).collect()
    }
}

/// Uniform radial lattice `r_j = r0 + j·dr`, all nodes positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub r0: f64,
    pub dr: f64,
    pub n: usize,
}

impl RadialGrid {
    pub fn new(r0: f64, dr: f64, n: usize) -> Result<Self> {
        if !(r0 > 0.0) || !(dr > 0.0) || n < 6 {
            return Err(Error::InvalidParams(format!(
                "radial grid needs r0 > 0, dr > 0, n >= 6 (got {r0}, {dr}, {n})"
            )));
        }
        Ok(Self { r0, dr, n })
    }

    /// Cell-centred grid on `(0, r_max)`: `r_j = (j + 1/2)·r_max/n`.
    pub fn staggered(r_max: f64, n: usize) -> Result<Self> {
        let dr = r_max / n as f64;
        Self::new(0.5 * dr, dr, n)
    }

    pub fn r(&self, j: usize) -> f64 {
        self.r0 + j as f64 * self.dr
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.r(j)).collect()
    }

    /// Position of the outer wall (one half-cell past the last node).
    pub fn r_max(&self) -> f64 {
        self.r(self.n - 1) + 0.5 * self.dr
    }

    pub fn stencils(&self, closure: OuterClosure) -> RadialStencils {
        RadialStencils::new(self.n, self.dr, closure)
    }
}

/// Complex field `u(t_i, r_j)` for a fixed angular mode, stored row-major in
/// time (`values[i * n_r + j]`). Inner products use the weight `r dr dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacetimeField {
    pub time: TimeGrid,
    pub radial: RadialGrid,
    pub values: Vec<Complex64>,
}

impl SpacetimeField {
    pub fn zeros(time: TimeGrid, radial: RadialGrid) -> Self {
        Self {
            time,
            radial,
            values: vec![Complex64::new(0.0, 0.0); time.n * radial.n],
        }
    }

    pub fn from_fn(time: TimeGrid, radial: RadialGrid, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let mut values = Vec::with_capacity(time.n * radial.n);
        for i in 0..time.n {
            let t = time.t(i);
            for j in 0..radial.n {
                values.push(f(t, radial.r(j)));
            }
        }
        Self { time, radial, values }
    }

    pub fn n_t(&self) -> usize {
        self.time.n
    }

    pub fn n_r(&self) -> usize {
        self.radial.n
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.radial.n + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut Complex64 {
        &mut self.values[i * self.radial.n + j]
    }

    pub fn same_grid(&self, other: &Self) -> Result<()> {
        if self.time != other.time || self.radial != other.radial {
            return Err(Error::GridMismatch(format!(
                "{:?}/{:?} vs {:?}/{:?}",
                self.time, self.radial, other.time, other.radial
            )));
        }
        Ok(())
    }

    /// Quadrature weight of node `j` in `r dr dt`.
    #[inline]
    pub fn weight(&self, j: usize) -> f64 {
        self.radial.r(j) * self.radial.dr * self.time.dt()
    }

    /// `⟨u, v⟩ = Σ u v̄ r dr dt`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.same_grid(other)?;
        Ok(self.inner_where(other, |_| true))
    }

    pub(crate) fn inner_where(&self, other: &Self, keep: impl Fn(f64) -> bool) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.n_t() {
            for j in 0..self.n_r() {
                if keep(self.radial.r(j)) {
                    acc += self.at(i, j) * other.at(i, j).conj() * self.weight(j);
                }
            }
        }
        acc
    }

    pub fn norm_sq(&self) -> f64 {
        self.norm_sq_where(|_| true)
    }

    /// Weighted squared norm restricted to radii accepted by `keep`.
    pub fn norm_sq_where(&self, keep: impl Fn(f64) -> bool) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.n_r() {
            if !keep(self.radial.r(j)) {
                continue;
            }
            let w = self.weight(j);
            for i in 0..self.n_t() {
                acc += self.at(i, j).norm_sqr() * w;
            }
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64, f64, Complex64) -> Complex64) -> Self {
        let mut out = self.clone();
        for i in 0..self.n_t() {
            let t = self.time.t(i);
            for j in 0..self.n_r() {
                let z = out.at_mut(i, j);
                *z = f(t, self.radial.r(j), *z);
            }
        }
        out
    }

    /// Fourier coefficients in time: `u(t_i, r_j) = Σ_p û[p][j] e^{iλ_p t_i}`.
    pub fn to_spectral(&self) -> Vec<Vec<Complex64>> {
        let (nt, nr) = (self.n_t(), self.n_r());
        let fft = FftPlanner::new().plan_fft_forward(nt);
        let mut out = vec![vec![Complex64::new(0.0, 0.0); nr]; nt];
        let mut col = vec![Complex64::new(0.0, 0.0); nt];
        let scale = 1.0 / nt as f64;
        for j in 0..nr {
            for i in 0..nt {
                col[i] = self.at(i, j);
            }
            fft.process(&mut col);
            for p in 0..nt {
                out[p][j] = col[p] * scale;
            }
        }
        out
    }

    /// Inverse of [`SpacetimeField::to_spectral`].
    pub fn from_spectral(time: TimeGrid, radial: RadialGrid, spec: &[Vec<Complex64>]) -> Self {
        let (nt, nr) = (time.n, radial.n);
        let ifft = FftPlanner::new().plan_fft_inverse(nt);
        let mut out = Self::zeros(time, radial);
        let mut col = vec![Complex64::new(0.0, 0.0); nt];
        for j in 0..nr {
            for p in 0..nt {
                col[p] = spec[p][j];
            }
            ifft.process(&mut col);
            for i in 0..nt {
                *out.at_mut(i, j) = col[i];
            }
        }
        out
    }

    /// Applies a per-frequency multiplier `m(λ)` in time.
    pub fn time_multiplier(&self, m: impl Fn(f64) -> Complex64) -> Self {
        let mut spec = self.to_spectral();
        for (p, row) in spec.iter_mut().enumerate() {
            let factor = m(self.time.frequency(p));
            row.iter_mut().for_each(|z| *z *= factor);
        }
        Self::from_spectral(self.time, self.radial, &spec)
    }

    /// Spectral `∂ₜ`.
    pub fn dt(&self) -> Self {
        self.time_multiplier(|lambda| Complex64::new(0.0, lambda))
    }

    /// Fourth-order `∂ᵣ` with one-sided closures at both ends.
    pub fn dr(&self) -> Self {
        let st = self.radial.stencils(OuterClosure::OneSided);
        let mut out = Self::zeros(self.time, self.radial);
        let nr = self.n_r();
        for i in 0..self.n_t() {
            let row = &self.values[i * nr..(i + 1) * nr];
            let d = st.d1(row);
            out.values[i * nr..(i + 1) * nr].copy_from_slice(&d);
        }
        out
    }

    /// Pointwise `self + other`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_grid(other)?;
        let mut out = self.clone();
        out.values
            .iter_mut()
            .zip(&other.values)
            .for_each(|(a, b)| *a += *b);
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_grid(other)?;
        let mut out = self.clone();
        out.values
            .iter_mut()
            .zip(&other.values)
            .for_each(|(a, b)| *a -= *b);
        Ok(out)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|z| *z *= c);
        out
    }

    /// Cyclic shift by `steps` time nodes: `out(t_i) = u(t_{i - steps})`.
    pub fn shift_time(&self, steps: usize) -> Self {
        let (nt, nr) = (self.n_t(), self.n_r());
        let mut out = Self::zeros(self.time, self.radial);
        for i in 0..nt {
            let src = (i + nt - steps % nt) % nt;
            out.values[i * nr..(i + 1) * nr].copy_from_slice(&self.values[src * nr..(src + 1) * nr]);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grids() -> (TimeGrid, RadialGrid) {
        (TimeGrid::new(2.0 * PI, 32).unwrap(), RadialGrid::staggered(4.0, 200).unwrap())
    }

    #[test]
    fn spectral_roundtrip_and_derivative() {
        let (tg, rg) = grids();
        let u = SpacetimeField::from_fn(tg, rg, |t, r| {
            Complex64::new((3.0 * t).cos() * r, (2.0 * t).sin())
        });
        let back = SpacetimeField::from_spectral(tg, rg, &u.to_spectral());
        assert!(back.sub(&u).unwrap().max_abs() < 1e-12);
        let du = u.dt();
        let exact = SpacetimeField::from_fn(tg, rg, |t, r| {
            Complex64::new(-3.0 * (3.0 * t).sin() * r, 2.0 * (2.0 * t).cos())
        });
        assert!(du.sub(&exact).unwrap().max_abs() < 1e-11);
    }

    #[test]
    fn radial_derivative_is_fourth_order() {
        let tg = TimeGrid::new(1.0, 2).unwrap();
        let err = |n: usize| {
            let rg = RadialGrid::staggered(3.0, n).unwrap();
            let u = SpacetimeField::from_fn(tg, rg, |_, r| Complex64::new(r.sin(), 0.0));
            let d = u.dr();
            (0..n)
                .map(|j| (d.at(0, j).re - rg.r(j).cos()).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(100) / err(200);
        assert!(ratio > 12.0, "observed ratio {ratio}");
    }

    #[test]
    fn weighted_norm_matches_quadrature() {
        let (tg, rg) = grids();
        // ∫_0^{2π} ∫_0^4 r dr dt = 2π · 8
        let u = SpacetimeField::from_fn(tg, rg, |_, _| Complex64::new(1.0, 0.0));
        assert!((u.norm_sq() - 16.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn frequencies_follow_fft_order() {
        let tg = TimeGrid::new(2.0 * PI, 8).unwrap();
        assert_eq!(tg.frequencies(), vec![0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0]);
    }
}
