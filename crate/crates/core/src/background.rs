//! Background geometry of the rotating string: parameters, the mode operator
//! □ₖ, its principal symbol and the characteristic-set predicates.
//!
//! The rotation parameter is stored as a positive length `a_rot`; the other
//! orientation is recovered by `k ↦ −k`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::field::{RadialGrid, SpacetimeField};
use crate::stencil::{OuterClosure, RadialStencils};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackgroundParams {
    pub a_rot: f64,
}

impl BackgroundParams {
    pub fn new(a_rot: f64) -> Result<Self> {
        if !(a_rot > 0.0) || !a_rot.is_finite() {
            return Err(Error::InvalidParams(format!("a_rot must be positive, got {a_rot}")));
        }
        Ok(Self { a_rot })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeParams {
    pub k: i32,
    pub m: f64,
}

impl ModeParams {
    pub fn new(k: i32, m: f64) -> Result<Self> {
        if !(m >= 0.0) || !m.is_finite() {
            return Err(Error::InvalidParams(format!("mass must be >= 0, got {m}")));
        }
        Ok(Self { k, m })
    }

    pub fn kf(&self) -> f64 {
        self.k as f64
    }

    /// Bessel order `ν = a λ + k` of the frequency-λ mode equation.
    pub fn order(&self, bg: &BackgroundParams, lambda: f64) -> f64 {
        bg.a_rot * lambda + self.kf()
    }
}

/// A point `(t, r, φ; λ, ξ, η)` of the cotangent bundle.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhasePoint {
    pub t: f64,
    pub r: f64,
    pub phi: f64,
    pub lambda: f64,
    pub xi: f64,
    pub eta: f64,
}

impl PhasePoint {
    pub fn new(t: f64, r: f64, phi: f64, lambda: f64, xi: f64, eta: f64) -> Self {
        Self { t, r, phi, lambda, xi, eta }
    }

    /// Radial covector with `t = φ = η = 0`.
    pub fn radial(r: f64, lambda: f64, xi: f64) -> Self {
        Self { r, lambda, xi, ..Self::default() }
    }

    pub fn covector_norm(&self) -> f64 {
        (self.lambda * self.lambda + self.xi * self.xi + self.eta * self.eta).sqrt()
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 {
        Ok(())
    } else {
        domain(format!("radius must be positive, got {r}"))
    }
}

/// `σ₂(□ₖ) = (a²/r²)λ² − λ² + ξ²`.
pub fn principal_symbol(bg: &BackgroundParams, q: &PhasePoint) -> Result<f64> {
    check_radius(q.r)?;
    let a2 = bg.a_rot * bg.a_rot;
    Ok(a2 / (q.r * q.r) * q.lambda * q.lambda - q.lambda * q.lambda + q.xi * q.xi)
}

/// Membership in Σ = {(r² − a²)λ² = r²ξ², η = 0}, tested conically.
pub fn in_characteristic_set(bg: &BackgroundParams, q: &PhasePoint, tol: f64) -> Result<bool> {
    check_radius(q.r)?;
    if !(tol > 0.0) {
        return domain(format!("tolerance must be positive, got {tol}"));
    }
    if q.lambda == 0.0 && q.xi == 0.0 && q.eta == 0.0 {
        return domain("zero covector");
    }
    let a2 = bg.a_rot * bg.a_rot;
    let r2 = q.r * q.r;
    let mag2 = q.lambda * q.lambda + q.xi * q.xi;
    let poly = (r2 - a2) * q.lambda * q.lambda - r2 * q.xi * q.xi;
    Ok(poly.abs() <= tol * mag2 * r2.max(a2) && q.eta.abs() <= tol * mag2.sqrt())
}

/// Σ₋ = Σ ∩ {r > a} ∩ {sgn λ = sgn ξ}: the incoming half of the light cone.
pub fn in_sigma_minus(bg: &BackgroundParams, q: &PhasePoint, tol: f64) -> Result<bool> {
    let on_sigma = in_characteristic_set(bg, q, tol)?;
    Ok(on_sigma
        && q.r > bg.a_rot
        && q.lambda != 0.0
        && q.xi != 0.0
        && q.lambda.signum() == q.xi.signum())
}

/// Smallest value of `|σ₂| + |η|` over a sampled unit covector sphere at radius `r`.
///
/// Positive for `r < a`, where the pair (□ₖ, ∂_φ − ik) is elliptic.
pub fn elliptic_margin(bg: &BackgroundParams, r: f64, samples: usize) -> Result<f64> {
    check_radius(r)?;
    let n = samples.max(4);
    let mut min = f64::INFINITY;
    for a in 0..n {
        let polar = std::f64::consts::PI * (a as f64 + 0.5) / n as f64;
        for b in 0..2 * n {
            let az = std::f64::consts::PI * b as f64 / n as f64;
            let q = PhasePoint::new(
                0.0,
                r,
                0.0,
                polar.sin() * az.cos(),
                polar.sin() * az.sin(),
                polar.cos(),
            );
            min = min.min(principal_symbol(bg, &q)?.abs() + q.eta.abs());
        }
        // the equator η = 0 exactly
        let az = std::f64::consts::PI * a as f64 / n as f64;
        let q = PhasePoint::radial(r, az.cos(), az.sin());
        min = min.min(principal_symbol(bg, &q)?.abs());
    }
    Ok(min)
}

/// Per-frequency image of □ₖ + m² on a radial grid.
///
/// With `∂ₜ ↦ iλ` the operator becomes
/// `−(1 − a²/r²)λ² − r⁻²(r∂ᵣ)² + 2akλ/r² + k²/r² + m²`;
/// the radial part is discretised as `−(∂ᵣ² + r⁻¹∂ᵣ)` with fourth-order stencils.
#[derive(Debug, Clone)]
pub struct ModeOperator {
    pub bg: BackgroundParams,
    pub mode: ModeParams,
    pub grid: RadialGrid,
    pub stencils: RadialStencils,
}

impl ModeOperator {
    pub fn new(bg: BackgroundParams, mode: ModeParams, grid: RadialGrid, closure: OuterClosure) -> Self {
        let stencils = grid.stencils(closure);
        Self { bg, mode, grid, stencils }
    }

    /// Zeroth-order coefficient at `(λ, r)`.
    pub fn potential(&self, lambda: f64, r: f64) -> f64 {
        let a = self.bg.a_rot;
        let k = self.mode.kf();
        let m = self.mode.m;
        -(1.0 - a * a / (r * r)) * lambda * lambda
            + 2.0 * a * k * lambda / (r * r)
            + k * k / (r * r)
            + m * m
    }

    /// Weight of node `col` in row `row` of the radial operator (without potential).
    pub fn radial_weights(&self, row: usize) -> (usize, Vec<f64>) {
        let st = &self.stencils.rows[row];
        let inv_r = 1.0 / self.grid.r(row);
        let w = st
            .d1
            .iter()
            .zip(&st.d2)
            .map(|(d1, d2)| -(d2 + inv_r * d1))
            .collect();
        (st.start, w)
    }

    pub fn apply(&self, lambda: f64, u: &[Complex64]) -> Vec<Complex64> {
        (0..self.grid.n)
            .map(|j| {
                let r = self.grid.r(j);
                let lap = self.stencils.combine(j, u, -1.0 / r, -1.0);
                lap + u[j] * self.potential(lambda, r)
            })
            .collect()
    }
}

/// Discrete action of □ₖ + m² on a spacetime field: spectral in `t`,
/// fourth-order differences in `r` with one-sided closures at both ends.
pub fn apply_box_k(bg: &BackgroundParams, mode: &ModeParams, u: &SpacetimeField) -> Result<SpacetimeField> {
    apply_box_k_with(bg, mode, u, OuterClosure::OneSided)
}

pub(crate) fn apply_box_k_with(
    bg: &BackgroundParams,
    mode: &ModeParams,
    u: &SpacetimeField,
    closure: OuterClosure,
) -> Result<SpacetimeField> {
    let op = ModeOperator::new(*bg, *mode, u.radial, closure);
    let spec = u.to_spectral();
    let out: Vec<Vec<Complex64>> = spec
        .iter()
        .enumerate()
        .map(|(p, row)| op.apply(u.time.frequency(p), row))
        .collect();
    Ok(SpacetimeField::from_spectral(u.time, u.radial, &out))
}

/// The factored form `−r⁻²(a∂ₜ + ik)² + ∂ₜ² − ∂ᵣ² − r⁻¹∂ᵣ (+ m²)`, assembled from
/// separately computed derivatives. Used to cross-check [`apply_box_k`].
pub fn apply_box_k_factored(
    bg: &BackgroundParams,
    mode: &ModeParams,
    u: &SpacetimeField,
) -> Result<SpacetimeField> {
    let a = bg.a_rot;
    let k = mode.kf();
    let twisted2 = u.time_multiplier(|l| {
        let z = Complex64::new(0.0, a * l + k);
        z * z
    });
    let dtt = u.time_multiplier(|l| Complex64::new(-l * l, 0.0));
    let ur = u.dr();
    let urr = ur.dr();
    let m2 = mode.m * mode.m;
    let mut out = SpacetimeField::zeros(u.time, u.radial);
    for i in 0..u.n_t() {
        for j in 0..u.n_r() {
            let r = u.radial.r(j);
            *out.at_mut(i, j) = -twisted2.at(i, j) / (r * r) + dtt.at(i, j)
                - urr.at(i, j)
                - ur.at(i, j) / r
                + u.at(i, j) * m2;
        }
    }
    Ok(out)
}
