//! Per-frequency assembly and solution of `P = □ₖ + m² − iW`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::absorber::{absorber_block, AbsorberBlock, AbsorberSpec, GridSpec};
use super::linalg::LuFactor;
use crate::background::{apply_box_k_with, ModeOperator};
use crate::error::{Error, Result};
use crate::field::{RadialGrid, SpacetimeField};
use crate::stencil::OuterClosure;

/// Relative pivot size below which a block is treated as near-singular.
pub const SINGULAR_PIVOT_RATIO: f64 = 1e-13;

/// Tikhonov shift for near-singular blocks, relative to the operator scale.
pub const TIKHONOV: f64 = 1e-10;

/// Ratio `u₀/u₁` of the regular Frobenius branch `r^μ(1 + α r²)`,
/// `α = (m² − λ²)/(4μ + 4)`.
pub fn frobenius_ratio(mu: f64, m: f64, lambda: f64, r0: f64, r1: f64) -> f64 {
    let alpha = (m * m - lambda * lambda) / (4.0 * mu + 4.0);
    (r0 / r1).powf(mu) * (1.0 + alpha * r0 * r0) / (1.0 + alpha * r1 * r1)
}

/// Dense matrix of the `λ`-block on the radial grid.
///
/// Row 0 is the inner condition `u₀ − ρu₁ = 0` (scaled by `Δr⁻²`); rows
/// `1..n` are `−(D₂ + r⁻¹D₁) + V(λ, r) − iW_λ` with a zero ghost value
/// past the last node.
#[derive(Debug, Clone)]
pub struct PBlock {
    pub lambda: f64,
    pub n: usize,
    pub mat: Vec<Complex64>,
    pub absorber: Option<AbsorberBlock>,
    pub scale: f64,
}

impl PBlock {
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        (0..n)
            .map(|i| self.mat[i * n..(i + 1) * n].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

pub fn assemble_p_lambda(spec: &AbsorberSpec, grid: &GridSpec, lambda: f64) -> PBlock {
    assemble_on(spec, grid, &grid.radial(), lambda)
}

fn assemble_on(spec: &AbsorberSpec, grid: &GridSpec, radial: &RadialGrid, lambda: f64) -> PBlock {
    let n = radial.n;
    let op = ModeOperator::new(grid.bg, grid.mode, *radial, OuterClosure::DirichletGhost);
    let mut mat = vec![Complex64::new(0.0, 0.0); n * n];
    let h2 = 1.0 / (radial.dr * radial.dr);
    let mu = grid.mode.order(&grid.bg, lambda).abs();
    mat[0] = Complex64::new(h2, 0.0);
    mat[1] = Complex64::new(-h2 * frobenius_ratio(mu, grid.mode.m, lambda, radial.r(0), radial.r(1)), 0.0);
    for row in 1..n {
        let (start, w) = op.radial_weights(row);
        for (o, c) in w.iter().enumerate() {
            let col = start + o;
            if col < n {
                mat[row * n + col] += c;
            }
        }
        mat[row * n + row] += op.potential(lambda, radial.r(row));
    }
    let absorber = absorber_block(spec, radial, grid.mode.kf(), lambda);
    if let Some(b) = &absorber {
        for i in 0..b.size {
            let row = b.start + i;
            if row == 0 {
                continue;
            }
            for j in 0..b.size {
                mat[row * n + b.start + j] -= Complex64::i() * b.mat[i * b.size + j];
            }
        }
    }
    let scale = mat.iter().map(|z| z.norm()).fold(0.0, f64::max);
    PBlock { lambda, n, mat, absorber, scale }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockInfo {
    pub lambda: f64,
    pub pivot_ratio: f64,
    pub regularized: bool,
}

/// Solves `P_λ x = b`, shifting by `εI` when the block is near-singular.
pub fn solve_block(block: &PBlock, b: &[Complex64]) -> Result<(Vec<Complex64>, BlockInfo)> {
    let lu = LuFactor::new(block.mat.clone(), block.n);
    let ratio = lu.min_pivot / lu.max_pivot.max(f64::MIN_POSITIVE);
    let (lu, regularized) = if ratio < SINGULAR_PIVOT_RATIO {
        let eps = TIKHONOV * block.scale;
        log::warn!("near-singular block at lambda = {} (pivot ratio {ratio:e}); shifting by {eps:e}", block.lambda);
        let mut m = block.mat.clone();
        for i in 0..block.n {
            m[i * block.n + i] += eps;
        }
        (LuFactor::new(m, block.n), true)
    } else {
        (lu, false)
    };
    if !(lu.min_pivot > 0.0) {
        return Err(Error::SingularBlock { lambda: block.lambda, pivot: lu.min_pivot, scale: block.scale });
    }
    let x = lu.solve(b);
    if x.iter().any(|z| !z.is_finite()) {
        return Err(Error::SingularBlock { lambda: block.lambda, pivot: lu.min_pivot, scale: block.scale });
    }
    Ok((x, BlockInfo { lambda: block.lambda, pivot_ratio: ratio, regularized }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// `‖(□ₖ + m²)u − f‖ / ‖f‖` over interior rows with `r < R`.
    pub residual: f64,
    pub blocks: Vec<BlockInfo>,
    pub regularized: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardSolution {
    pub u: SpacetimeField,
    pub report: SolveReport,
}

/// Solves `P u = f` frequency by frequency.
pub fn solve_forward(spec: &AbsorberSpec, grid: &GridSpec, f: &SpacetimeField) -> Result<ForwardSolution> {
    grid.validate(spec)?;
    let (time, radial) = (grid.time(), grid.radial());
    if f.time != time || f.radial != radial {
        return Err(Error::GridMismatch("source is not sampled on the solver grid".into()));
    }
    let fmax = f.max_abs();
    let outside = f.values.iter().enumerate().filter(|(idx, _)| radial.r(idx % radial.n) >= spec.r_src);
    if outside.map(|(_, z)| z.norm()).fold(0.0, f64::max) > 1e-12 * fmax {
        return Err(Error::Precondition(format!("source must be supported in r < R0 = {}", spec.r_src)));
    }
    let spec_f = f.to_spectral();
    let solved: Vec<(Vec<Complex64>, BlockInfo)> = spec_f
        .par_iter()
        .enumerate()
        .map(|(p, fhat)| {
            let lambda = time.frequency(p);
            if fhat.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
                let info = BlockInfo { lambda, pivot_ratio: 1.0, regularized: false };
                return Ok((fhat.clone(), info));
            }
            let block = assemble_on(spec, grid, &radial, lambda);
            let mut rhs = fhat.clone();
            rhs[0] = Complex64::new(0.0, 0.0);
            solve_block(&block, &rhs)
        })
        .collect::<Result<_>>()?;
    let blocks: Vec<BlockInfo> = solved.iter().map(|s| s.1).collect();
    let rows: Vec<Vec<Complex64>> = solved.into_iter().map(|s| s.0).collect();
    let u = SpacetimeField::from_spectral(time, radial, &rows);
    let residual = interior_residual(spec, grid, &u, f)?;
    let regularized = blocks.iter().filter(|b| b.regularized).count();
    Ok(ForwardSolution { u, report: SolveReport { residual, blocks, regularized } })
}

/// `‖(□ₖ + m²)u − f‖ / ‖f‖` over `r < R`, excluding the boundary row.
pub fn interior_residual(spec: &AbsorberSpec, grid: &GridSpec, u: &SpacetimeField, f: &SpacetimeField) -> Result<f64> {
    u.same_grid(f)?;
    let lu = apply_box_k_with(&grid.bg, &grid.mode, u, OuterClosure::DirichletGhost)?;
    let r_first = u.radial.r(0);
    let keep = |r: f64| r > r_first && r < spec.r_abs;
    let res = lu.sub(f)?.norm_sq_where(keep);
    let fn2 = f.norm_sq_where(keep);
    Ok(if fn2 == 0.0 { res.sqrt() } else { (res / fn2).sqrt() })
}

/// Transmission of an incoming wave through the absorber band at one
/// frequency. A packet `e^{iλr}g(r)` at `R + 1.6` launches an incoming wave
/// of amplitude `|ĝ|/(2|ξ|)`; the incoming component that arrives at
/// `R − 0.1` is extracted by a Gaussian-windowed projection on `e^{iξ(r)r}`,
/// `ξ(r) = λ(1 − a²/r²)^{1/2}`, and compared with the launched amplitude after
/// the `r^{−1/2}` cylindrical spreading. With `absorber = false` the `W`
/// block is left out, which gives a ratio near 1.
pub fn damping_ratio(spec: &AbsorberSpec, grid: &GridSpec, lambda: f64, absorber: bool) -> Result<f64> {
    let radial = grid.radial();
    let mut block = assemble_on(spec, grid, &radial, lambda);
    if !absorber {
        if let Some(b) = &block.absorber {
            for i in 0..b.size {
                for j in 0..b.size {
                    block.mat[(b.start + i) * block.n + b.start + j] += Complex64::i() * b.mat[i * b.size + j];
                }
            }
        }
    }
    let a = grid.bg.a_rot;
    let xi = |r: f64| lambda * (1.0 - a * a / (r * r)).sqrt();
    let r_src = spec.r_abs + 1.6;
    let rhs: Vec<Complex64> = radial
        .points()
        .iter()
        .map(|&r| {
            let x = (r - r_src) / 0.15;
            Complex64::from_polar((-x * x).exp(), xi(r_src) * r)
        })
        .collect();
    let launched = rhs
        .iter()
        .zip(radial.points())
        .map(|(f, r)| f * Complex64::from_polar(radial.dr, -xi(r_src) * r))
        .sum::<Complex64>()
        .norm()
        / (2.0 * xi(r_src).abs());
    let (u, _) = solve_block(&block, &rhs)?;
    let r_in = spec.r_abs - 0.1;
    let (mut acc, mut norm) = (Complex64::new(0.0, 0.0), 0.0);
    for (j, z) in u.iter().enumerate() {
        let r = radial.r(j);
        let w = (-0.5 * ((r - r_in) / 0.1).powi(2)).exp();
        acc += z * Complex64::from_polar(w, -xi(r_in) * r);
        norm += w;
    }
    let arrived = acc.norm() / norm;
    Ok(arrived * (r_in / r_src).sqrt() / launched)
}
