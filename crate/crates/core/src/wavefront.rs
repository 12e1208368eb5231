//! Phase-space diagnostics: a Gaussian-windowed Fourier energy map over
//! `(t, r; λ, ξ)`, comparison of its support with forward flowouts, and the
//! elliptic-region support probe.

use std::collections::HashMap;
use std::io::Write;

use log::warn;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::background::{BackgroundParams, ModeOperator, ModeParams, PhasePoint};
use crate::error::{domain, Result};
use crate::field::SpacetimeField;
use crate::modes::{unique_continuation_check, UniqueContinuationReport};
use crate::rays::RayPath;
use crate::stencil::OuterClosure;
use crate::Complex64;

/// Minimum window width in grid spacings.
pub const MIN_WINDOW_POINTS: f64 = 4.0;
/// Patch half-width in window widths.
const PATCH_SIGMAS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub sigma_t: f64,
    pub sigma_r: f64,
    /// Center spacing in grid nodes along `t` and `r`.
    pub stride_t: usize,
    pub stride_r: usize,
    /// Cells below `keep_rel` times the largest cell are not stored (they still
    /// count towards `total`).
    pub keep_rel: f64,
}

impl WindowSpec {
    /// Equal widths in `t` and `r`, centers spaced at most one width apart.
    pub fn isotropic(u: &SpacetimeField, sigma: f64) -> Self {
        let stride = |h: f64| ((sigma / h).floor() as usize).max(1);
        Self {
            sigma_t: sigma,
            sigma_r: sigma,
            stride_t: stride(u.time.dt()),
            stride_r: stride(u.radial.dr),
            keep_rel: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub t: f64,
    pub r: f64,
    pub lambda: f64,
    pub xi: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseEnergyMap {
    pub window: WindowSpec,
    pub centers_t: Vec<f64>,
    pub centers_r: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub xis: Vec<f64>,
    /// Stored cells, ordered by `(t-center, r-center, λ, ξ)` index.
    pub cells: Vec<PhaseCell>,
    /// Energy per center, indexed `[t-center][r-center]`.
    pub center_energy: Vec<Vec<f64>>,
    /// Sum over all cells, stored or not.
    pub total: f64,
    pub max_cell: f64,
    /// Frame constant `Σ_c W_c²` dividing the raw spectrogram.
    pub normalization: f64,
    /// Relative variation of the frame sum over the grid.
    pub frame_ripple: f64,
}

fn fft_frequencies(m: usize, h: f64) -> Vec<f64> {
    (0..m)
        .map(|p| {
            let q = if p < m.div_ceil(2) { p as f64 } else { p as f64 - m as f64 };
            2.0 * std::f64::consts::PI * q / (m as f64 * h)
        })
        .collect()
}

fn gauss(x: f64, sigma: f64) -> f64 {
    (-0.5 * (x / sigma) * (x / sigma)).exp()
}

/// Periodic difference reduced to `[−period/2, period/2)`.
fn wrap(d: f64, period: f64) -> f64 {
    d - period * (d / period + 0.5).floor()
}

pub fn phase_energy(u: &SpacetimeField, window: WindowSpec) -> Result<PhaseEnergyMap> {
    let (nt, nr) = (u.n_t(), u.n_r());
    let (dt, dr, period) = (u.time.dt(), u.radial.dr, u.time.period);
    let (st, sr) = (window.sigma_t, window.sigma_r);
    if !(st > 0.0 && sr > 0.0) || window.stride_t == 0 || window.stride_r == 0 {
        return domain("window widths and strides must be positive");
    }
    if st < MIN_WINDOW_POINTS * dt || sr < MIN_WINDOW_POINTS * dr {
        warn!("window ({st}, {sr}) resolves fewer than {MIN_WINDOW_POINTS} grid spacings ({dt}, {dr})");
    }
    let half_t = (PATCH_SIGMAS * st / dt).ceil() as usize;
    let half_r = (PATCH_SIGMAS * sr / dr).ceil() as usize;
    let mt = (2 * half_t).next_power_of_two().min(nt);
    let mr = (2 * half_r).next_power_of_two();
    let half_t = half_t.min(mt / 2);

    // center lattice: periodic in t, extended past both radial ends
    let ct: Vec<usize> = (0..nt).step_by(window.stride_t).collect();
    let ext = (PATCH_SIGMAS * sr / (window.stride_r as f64 * dr)).ceil() as i64;
    let cr: Vec<i64> = (-ext..=(nr as i64 - 1) / window.stride_r as i64 + ext)
        .map(|j| j * window.stride_r as i64)
        .collect();
    let centers_t: Vec<f64> = ct.iter().map(|&i| u.time.t(i)).collect();
    let centers_r: Vec<f64> = cr.iter().map(|&j| u.radial.r(0) + j as f64 * dr).collect();

    // frame sums over the lattice, evaluated at every grid node
    let frame_t: Vec<f64> = (0..nt)
        .map(|i| centers_t.iter().map(|&c| gauss(wrap(u.time.t(i) - c, period), st).powi(2)).sum())
        .collect();
    let frame_r: Vec<f64> = (0..nr)
        .map(|j| centers_r.iter().map(|&c| gauss(u.radial.r(j) - c, sr).powi(2)).sum())
        .collect();
    let stats = |v: &[f64]| {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let dev = v.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max);
        (mean, dev / mean)
    };
    let (ft, rt) = stats(&frame_t);
    let (fr, rr) = stats(&frame_r);
    let normalization = ft * fr;
    let frame_ripple = rt + rr;

    let lambdas = fft_frequencies(mt, dt);
    let xis = fft_frequencies(mr, dr);
    let mut planner = FftPlanner::new();
    let fft_t = planner.plan_fft_forward(mt);
    let fft_r = planner.plan_fft_forward(mr);
    let scale = dt * dr / (mt as f64 * mr as f64 * normalization);

    let spectrogram = |ci: usize, cj: i64| -> Vec<f64> {
        let (i0, j0) = (ct[ci], cj);
        let mut buf = vec![Complex64::new(0.0, 0.0); mt * mr];
        let mut any = false;
        for a in 0..mt {
            let di = a as i64 - half_t as i64;
            let i = (i0 as i64 + di).rem_euclid(nt as i64) as usize;
            let wt = gauss(di as f64 * dt, st);
            for b in 0..mr {
                let dj = b as i64 - half_r as i64;
                let j = j0 + dj;
                if j < 0 || j >= nr as i64 {
                    continue;
                }
                let j = j as usize;
                let z = u.at(i, j);
                if z.re == 0.0 && z.im == 0.0 {
                    continue;
                }
                any = true;
                // phases referenced to the patch corner so |FFT| is unaffected
                buf[a * mr + b] = z * (wt * gauss(dj as f64 * dr, sr) * u.radial.r(j).sqrt());
            }
        }
        if !any {
            return vec![0.0; mt * mr];
        }
        for row in buf.chunks_mut(mr) {
            fft_r.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); mt];
        for b in 0..mr {
            for a in 0..mt {
                col[a] = buf[a * mr + b];
            }
            fft_t.process(&mut col);
            for a in 0..mt {
                buf[a * mr + b] = col[a];
            }
        }
        buf.iter().map(|z| z.norm_sqr() * scale).collect()
    };

    let pairs: Vec<(usize, usize)> = (0..ct.len()).flat_map(|a| (0..cr.len()).map(move |b| (a, b))).collect();
    // pass 1: per-center totals and maxima
    let summary: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let e = spectrogram(a, cr[b]);
            (e.iter().sum(), e.iter().copied().fold(0.0, f64::max))
        })
        .collect();
    let total: f64 = summary.iter().map(|s| s.0).sum();
    let max_cell = summary.iter().map(|s| s.1).fold(0.0, f64::max);
    let mut center_energy = vec![vec![0.0; cr.len()]; ct.len()];
    for (&(a, b), s) in pairs.iter().zip(&summary) {
        center_energy[a][b] = s.0;
    }

    // pass 2: store cells above the floor
    let floor = window.keep_rel * max_cell;
    let cells: Vec<PhaseCell> = if max_cell > 0.0 {
        pairs
            .par_iter()
            .zip(&summary)
            .filter(|(_, s)| s.1 >= floor)
            .flat_map_iter(|(&(a, b), _)| {
                let e = spectrogram(a, cr[b]);
                let (t, r) = (centers_t[a], centers_r[b]);
                let (lambdas, xis) = (&lambdas, &xis);
                e.into_iter().enumerate().filter(move |(_, v)| *v >= floor).map(move |(idx, energy)| PhaseCell {
                    t,
                    r,
                    lambda: lambdas[idx / mr],
                    xi: xis[idx % mr],
                    energy,
                })
            })
            .collect()
    } else {
        Vec::new()
    };

    Ok(PhaseEnergyMap {
        window,
        centers_t,
        centers_r,
        lambdas,
        xis,
        cells,
        center_energy,
        total,
        max_cell,
        normalization,
        frame_ripple,
    })
}

impl PhaseEnergyMap {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "r", "lambda", "xi", "energy"])?;
        for c in &self.cells {
            out.write_record([c.t, c.r, c.lambda, c.xi, c.energy].map(|x| x.to_string()))?;
        }
        out.flush()?;
        Ok(())
    }

    /// Heat map over `(r, ξ)` at the t-center `ti`, summed over λ.
    pub fn svg_slice(&self, ti: usize) -> String {
        let t = self.centers_t[ti];
        let mut xs = self.xis.clone();
        xs.sort_by(f64::total_cmp);
        let nx = xs.len();
        let (x_lo, x_hi) = (xs[0], xs[nx - 1]);
        let bin = |xi: f64| (((xi - x_lo) / (x_hi - x_lo)) * (nx - 1) as f64).round() as usize;
        let mut grid = vec![vec![0.0; self.centers_r.len()]; nx];
        let r0 = self.centers_r[0];
        let dr = self.centers_r.get(1).map_or(1.0, |r1| r1 - r0);
        for c in self.cells.iter().filter(|c| c.t == t) {
            let j = ((c.r - r0) / dr).round() as usize;
            grid[bin(c.xi)][j] += c.energy;
        }
        let r_hi = self.centers_r[self.centers_r.len() - 1];
        crate::io::svg_heat(&format!("phase energy, t = {t:.3}"), "r", "xi", (r0, r_hi), (x_lo, x_hi), &grid)
    }
}

/// Closed box in `(t, r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub t_min: f64,
    pub t_max: f64,
    pub r_min: f64,
    pub r_max: f64,
}

impl Region {
    /// Bounding box of `{|f| > rel·max|f|}`; `None` for `f = 0`.
    pub fn support_of(f: &SpacetimeField, rel: f64) -> Option<Self> {
        let cut = rel * f.max_abs();
        if cut == 0.0 {
            return None;
        }
        let mut reg = Region { t_min: f64::INFINITY, t_max: f64::NEG_INFINITY, r_min: f64::INFINITY, r_max: f64::NEG_INFINITY };
        for i in 0..f.n_t() {
            for j in 0..f.n_r() {
                if f.at(i, j).norm() > cut {
                    let (t, r) = (f.time.t(i), f.radial.r(j));
                    reg.t_min = reg.t_min.min(t);
                    reg.t_max = reg.t_max.max(t);
                    reg.r_min = reg.r_min.min(r);
                    reg.r_max = reg.r_max.max(r);
                }
            }
        }
        Some(reg)
    }

    fn contains_dilated(&self, t: f64, r: f64, dt: f64, dr: f64, period: f64) -> bool {
        let tc = 0.5 * (self.t_min + self.t_max);
        let ht = 0.5 * (self.t_max - self.t_min) + dt;
        wrap(t - tc, period).abs() <= ht && r >= self.r_min - dr && r <= self.r_max + dr
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowoutThresholds {
    /// Cells below `energy_rel` times the largest cell are noise.
    pub energy_rel: f64,
    /// Position tube radius in window widths.
    pub tube_sigmas: f64,
    /// Direction tube half-angle in degrees.
    pub tube_angle_deg: f64,
    /// Only cells with `|λ| > min_abs_lambda` are classified.
    pub min_abs_lambda: f64,
    /// Only cells with `|(λ, ξ)| ≥ min_frequency` are classified.
    pub min_frequency: f64,
    /// Only cells centered at `r ≤ r_max` are classified.
    pub r_max: f64,
}

impl FlowoutThresholds {
    pub fn for_mode(mode: &ModeParams, window: &WindowSpec) -> Self {
        let tube_angle_deg = 15.0;
        Self {
            energy_rel: 1e-3,
            tube_sigmas: 3.0,
            tube_angle_deg,
            min_abs_lambda: 5.0 * mode.kf().abs(),
            min_frequency: resolved_frequency(window, tube_angle_deg),
            r_max: f64::INFINITY,
        }
    }
}

/// Smallest `|(λ, ξ)|` at which the direction tube of half-angle `angle_deg`
/// holds three spectral standard deviations of the window.
pub fn resolved_frequency(window: &WindowSpec, angle_deg: f64) -> f64 {
    let sigma = window.sigma_t.min(window.sigma_r);
    3.0 / (std::f64::consts::SQRT_2 * sigma * angle_deg.to_radians().sin())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowoutVerdict {
    pub classified_cells: usize,
    pub on_cells: usize,
    pub off_cells: usize,
    pub excluded_cells: usize,
    pub on_energy: f64,
    pub off_energy: f64,
    /// `off / (on + off)`, zero when nothing is classified.
    pub off_fraction: f64,
    pub rays: usize,
    /// No cell above threshold.
    pub vacuous: bool,
}

/// Seeds on Σ for the above-threshold cells of `f_map` with `|λ| > min_abs_lambda`
/// centered in `f_support`.
///
/// A cell contributes when its covector lies within the direction tube of a Σ
/// direction at its center; since flowouts of η = 0 covectors are conic, one
/// seed with `|λ| = 1` per (center, sgn λ, sgn ξ) suffices.
pub fn flowout_seeds(
    bg: &BackgroundParams,
    f_map: &PhaseEnergyMap,
    f_support: Option<Region>,
    th: &FlowoutThresholds,
    period: f64,
) -> Vec<PhasePoint> {
    let Some(reg) = f_support else { return Vec::new() };
    let a = bg.a_rot;
    let cut = th.energy_rel * f_map.max_cell;
    let cos_tol = th.tube_angle_deg.to_radians().cos();
    let mut seen = std::collections::BTreeSet::new();
    let mut seeds = Vec::new();
    for c in &f_map.cells {
        if c.energy < cut
            || c.energy == 0.0
            || c.lambda.abs() <= th.min_abs_lambda
            || c.lambda.hypot(c.xi) < th.min_frequency
            || c.r <= a
            || !reg.contains_dilated(c.t, c.r, 0.0, 0.0, period)
        {
            continue;
        }
        let xs = (1.0 - a * a / (c.r * c.r)).sqrt();
        let norm = c.lambda.hypot(c.xi);
        for sx in [1.0, -1.0] {
            let (l, x) = (c.lambda.signum(), sx * xs);
            let cos = (c.lambda * l + c.xi * x) / (norm * l.hypot(x));
            if cos < cos_tol {
                continue;
            }
            let key = (c.t.to_bits(), c.r.to_bits(), l > 0.0, sx > 0.0);
            if seen.insert(key) {
                seeds.push(PhasePoint::radial(c.r, l, x));
                seeds.last_mut().unwrap().t = c.t;
            }
        }
    }
    seeds
}

struct Segment {
    p: (f64, f64),
    q: (f64, f64),
    dir_p: (f64, f64),
    dir_q: (f64, f64),
}

fn unit(l: f64, x: f64) -> (f64, f64) {
    let n = l.hypot(x);
    (l / n, x / n)
}

/// Classifies the above-threshold cells of `u_map` against the forward rays.
pub fn flowout_consistency(
    map: &PhaseEnergyMap,
    rays: &[RayPath],
    f_support: Option<Region>,
    th: &FlowoutThresholds,
    period: f64,
) -> FlowoutVerdict {
    let (st, sr) = (map.window.sigma_t, map.window.sigma_r);
    let rad = th.tube_sigmas;
    let cos_tol = th.tube_angle_deg.to_radians().cos();
    if rays.is_empty() {
        warn!("flowout check with an empty ray set");
    }

    // segments in window units, bucketed on a lattice of spacing `rad`
    let mut segs = Vec::new();
    for ray in rays {
        for w in ray.samples.windows(2) {
            let (a, b) = (&w[0].q, &w[1].q);
            segs.push(Segment {
                p: (a.t / st, a.r / sr),
                q: (b.t / st, b.r / sr),
                dir_p: unit(a.lambda, a.xi),
                dir_q: unit(b.lambda, b.xi),
            });
        }
        if ray.samples.len() == 1 {
            let a = &ray.samples[0].q;
            let d = unit(a.lambda, a.xi);
            segs.push(Segment { p: (a.t / st, a.r / sr), q: (a.t / st, a.r / sr), dir_p: d, dir_q: d });
        }
    }
    let key = |x: f64, y: f64| ((x / rad).floor() as i64, (y / rad).floor() as i64);
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (idx, s) in segs.iter().enumerate() {
        let (k0, k1) = (key(s.p.0, s.p.1), key(s.q.0, s.q.1));
        for i in k0.0.min(k1.0)..=k0.0.max(k1.0) {
            for j in k0.1.min(k1.1)..=k0.1.max(k1.1) {
                buckets.entry((i, j)).or_default().push(idx);
            }
        }
    }
    let per = period / st;

    let on_flowout = |c: &PhaseCell| -> bool {
        let d = unit(c.lambda, c.xi);
        let y = c.r / sr;
        // the time axis is periodic: test the images within one period of each ray
        for shift in [-1.0, 0.0, 1.0] {
            let x = c.t / st + shift * per;
            let (bi, bj) = key(x, y);
            for i in bi - 1..=bi + 1 {
                for j in bj - 1..=bj + 1 {
                    let Some(list) = buckets.get(&(i, j)) else { continue };
                    for &idx in list {
                        let s = &segs[idx];
                        let (vx, vy) = (s.q.0 - s.p.0, s.q.1 - s.p.1);
                        let len2 = vx * vx + vy * vy;
                        let tau = if len2 > 0.0 {
                            (((x - s.p.0) * vx + (y - s.p.1) * vy) / len2).clamp(0.0, 1.0)
                        } else {
                            0.0
                        };
                        let (px, py) = (s.p.0 + tau * vx, s.p.1 + tau * vy);
                        if (x - px).hypot(y - py) > rad {
                            continue;
                        }
                        let dl = s.dir_p.0 + tau * (s.dir_q.0 - s.dir_p.0);
                        let dx = s.dir_p.1 + tau * (s.dir_q.1 - s.dir_p.1);
                        let n = dl.hypot(dx);
                        if (d.0 * dl + d.1 * dx) / n >= cos_tol {
                            return true;
                        }
                    }
                }
            }
        }
        false
    };

    let cut = th.energy_rel * map.max_cell;
    let candidates: Vec<&PhaseCell> = map
        .cells
        .iter()
        .filter(|c| {
            c.energy > 0.0
                && c.energy >= cut
                && c.lambda.abs() > th.min_abs_lambda
                && c.lambda.hypot(c.xi) >= th.min_frequency
                && c.r <= th.r_max
        })
        .collect();
    let (excluded, classified): (Vec<&PhaseCell>, Vec<&PhaseCell>) = candidates.into_iter().partition(|c| {
        f_support.is_some_and(|reg| reg.contains_dilated(c.t, c.r, rad * st, rad * sr, period))
    });
    let flags: Vec<bool> = classified.par_iter().map(|c| on_flowout(c)).collect();
    let mut v = FlowoutVerdict {
        classified_cells: classified.len(),
        on_cells: 0,
        off_cells: 0,
        excluded_cells: excluded.len(),
        on_energy: 0.0,
        off_energy: 0.0,
        off_fraction: 0.0,
        rays: rays.len(),
        vacuous: classified.is_empty(),
    };
    for (c, on) in classified.iter().zip(flags) {
        if on {
            v.on_cells += 1;
            v.on_energy += c.energy;
        } else {
            v.off_cells += 1;
            v.off_energy += c.energy;
        }
    }
    let sum = v.on_energy + v.off_energy;
    if sum > 0.0 {
        v.off_fraction = v.off_energy / sum;
    }
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceCheck {
    pub lambda: f64,
    pub interval: (f64, f64),
    /// `‖û‖²` on the interval restricted to `r < a`, over the full interval.
    pub inner_fraction: f64,
    /// Mode-operator residual on the interval relative to `‖û‖·(λ² + m² + 1 + k²/r_lo²)`.
    pub ode_residual_rel: f64,
    pub negligible: bool,
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticReport {
    pub delta: f64,
    pub total: f64,
    pub inner: f64,
    /// `inner / total`, zero for `u = 0`.
    pub fraction: f64,
    /// `(t, ∫_{r < a(1−δ)} |u|² r dr)`.
    pub t_profile: Vec<(f64, f64)>,
    pub slice: Option<SliceCheck>,
    pub unique_continuation: Option<UniqueContinuationReport>,
}

/// Residual threshold separating mode-ODE solutions from truncated fields.
pub const SLICE_RESIDUAL_TOL: f64 = 1e-3;

/// Checks whether the time-Fourier slice `û(λ_p, ·)` satisfies the mode ODE on
/// `interval`. A field cut off at `r = a` fails unless it is ≈ 0 there.
pub fn slice_check(u: &SpacetimeField, bg: &BackgroundParams, mode: &ModeParams, p: usize, interval: (f64, f64)) -> SliceCheck {
    let spec = u.to_spectral();
    let lambda = u.time.frequency(p);
    let row = &spec[p];
    let op = ModeOperator::new(*bg, *mode, u.radial, OuterClosure::OneSided);
    let lu = op.apply(lambda, row);
    let (lo, hi) = interval;
    let inside: Vec<usize> = (3..u.n_r().saturating_sub(3)).filter(|&j| (lo..=hi).contains(&u.radial.r(j))).collect();
    let (mut norm, mut inner, mut res) = (0.0, 0.0, 0.0);
    for &j in &inside {
        let r = u.radial.r(j);
        let w = row[j].norm_sqr() * r;
        norm += w;
        if r < bg.a_rot {
            inner += w;
        }
        res += lu[j].norm_sqr() * r;
    }
    let peak = spec.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    let s = lambda * lambda + mode.m * mode.m + 1.0 + (mode.kf() / lo).powi(2);
    let negligible = norm.sqrt() <= 1e-12 * peak.max(f64::MIN_POSITIVE) || norm == 0.0;
    let ode_residual_rel = if norm > 0.0 { (res / norm).sqrt() / s } else { 0.0 };
    SliceCheck {
        lambda,
        interval,
        inner_fraction: if norm > 0.0 { inner / norm } else { 0.0 },
        ode_residual_rel,
        negligible,
        consistent: negligible || ode_residual_rel <= SLICE_RESIDUAL_TOL,
    }
}

/// Mass of `u` in `{r < a(1 − δ)}`, its time profile, and the unique
/// continuation check on the dominant λ-slice through `(a/2, 3a/2)`.
pub fn elliptic_support_probe(
    u: &SpacetimeField,
    bg: &BackgroundParams,
    mode: &ModeParams,
    delta: f64,
    seed: u64,
) -> Result<EllipticReport> {
    if !(0.0..1.0).contains(&delta) {
        return domain(format!("delta must lie in [0, 1), got {delta}"));
    }
    let a = bg.a_rot;
    let cut = a * (1.0 - delta);
    let total = u.norm_sq();
    let inner = u.norm_sq_where(|r| r < cut);
    let t_profile = (0..u.n_t())
        .map(|i| {
            let m: f64 = (0..u.n_r())
                .filter(|&j| u.radial.r(j) < cut)
                .map(|j| u.at(i, j).norm_sqr() * u.radial.r(j) * u.radial.dr)
                .sum();
            (u.time.t(i), m)
        })
        .collect();
    let interval = (0.5 * a, 1.5 * a);
    let (slice, unique_continuation) = if total > 0.0 {
        let spec = u.to_spectral();
        let band = |j: usize| (interval.0..=interval.1).contains(&u.radial.r(j));
        let p = (0..u.n_t())
            .map(|p| (p, (0..u.n_r()).filter(|&j| band(j)).map(|j| spec[p][j].norm_sqr()).sum::<f64>()))
            .fold((0, -1.0), |best, x| if x.1 > best.1 { x } else { best })
            .0;
        let check = slice_check(u, bg, mode, p, interval);
        let uc = unique_continuation_check(bg, mode, check.lambda, interval, 1e-10, 8, seed)?;
        (Some(check), Some(uc))
    } else {
        (None, None)
    };
    Ok(EllipticReport {
        delta,
        total,
        inner,
        fraction: if total > 0.0 { inner / total } else { 0.0 },
        t_profile,
        slice,
        unique_continuation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{RadialGrid, TimeGrid};
    use crate::rays::forward_flowout;

    fn grid() -> (TimeGrid, RadialGrid) {
        (TimeGrid::new(8.0, 128).unwrap(), RadialGrid::staggered(8.0, 128).unwrap())
    }

    fn packet(t0: f64, r0: f64, l0: f64, x0: f64, w: f64) -> impl Fn(f64, f64) -> Complex64 {
        move |t, r| {
            let d = wrap(t - t0, 8.0);
            Complex64::from_polar(((-(d * d) - (r - r0) * (r - r0)) / (2.0 * w * w)).exp(), l0 * t + x0 * r)
        }
    }

    fn window(u: &SpacetimeField) -> WindowSpec {
        WindowSpec::isotropic(u, 0.3)
    }

    #[test]
    fn zero_field() {
        let (tg, rg) = grid();
        let u = SpacetimeField::zeros(tg, rg);
        let m = phase_energy(&u, window(&u)).unwrap();
        assert_eq!(m.total, 0.0);
        assert!(m.cells.is_empty());
    }

    #[test]
    fn parseval() {
        let (tg, rg) = grid();
        let u = SpacetimeField::from_fn(tg, rg, packet(3.0, 4.0, 10.0 * std::f64::consts::PI / 4.0, 5.0, 0.7));
        let m = phase_energy(&u, window(&u)).unwrap();
        let rel = (m.total / u.norm_sq() - 1.0).abs();
        assert!(rel < 0.02, "{rel}");
        assert!(m.frame_ripple < 1e-3);
    }

    #[test]
    fn plane_wave_peaks() {
        let (tg, rg) = grid();
        let probe = phase_energy(&SpacetimeField::zeros(tg, rg), window(&SpacetimeField::zeros(tg, rg))).unwrap();
        // frequencies on the patch lattice
        let (l0, x0) = (probe.lambdas[5], probe.xis[10]);
        let u = SpacetimeField::from_fn(tg, rg, |t, r| {
            Complex64::from_polar((-(r - 4.0) * (r - 4.0) / 8.0).exp(), l0 * t + x0 * r)
        });
        let m = phase_energy(&u, window(&u)).unwrap();
        let mut best: HashMap<(u64, u64), PhaseCell> = HashMap::new();
        for c in &m.cells {
            let e = best.entry((c.t.to_bits(), c.r.to_bits())).or_insert(*c);
            if c.energy > e.energy {
                *e = *c;
            }
        }
        let mut checked = 0;
        for c in best.values().filter(|c| (c.r - 4.0).abs() < 1.5) {
            assert_eq!((c.lambda, c.xi), (l0, x0), "center ({}, {})", c.t, c.r);
            checked += 1;
        }
        assert!(checked > 50);
    }

    #[test]
    fn two_packets() {
        let (tg, rg) = grid();
        let p1 = SpacetimeField::from_fn(tg, rg, packet(2.0, 3.0, 8.0, 6.0, 0.4));
        let p2 = SpacetimeField::from_fn(tg, rg, packet(6.0, 6.0, -6.0, -9.0, 0.4)).scale(Complex64::new(0.5, 0.0));
        let u = p1.add(&p2).unwrap();
        let m = phase_energy(&u, window(&u)).unwrap();
        let near = |c: &PhaseCell, t: f64, r: f64| wrap(c.t - t, 8.0).abs() < 2.0 && (c.r - r).abs() < 2.0;
        let e1: f64 = m.cells.iter().filter(|c| near(c, 2.0, 3.0)).map(|c| c.energy).sum();
        let e2: f64 = m.cells.iter().filter(|c| near(c, 6.0, 6.0)).map(|c| c.energy).sum();
        assert!((e1 / p1.norm_sq() - 1.0).abs() < 0.05, "{}", e1 / p1.norm_sq());
        assert!((e2 / p2.norm_sq() - 1.0).abs() < 0.05, "{}", e2 / p2.norm_sq());
        // the two dominant regions are disjoint in phase space
        let peak1 = m.cells.iter().filter(|c| near(c, 2.0, 3.0)).max_by(|a, b| a.energy.total_cmp(&b.energy)).unwrap();
        let peak2 = m.cells.iter().filter(|c| near(c, 6.0, 6.0)).max_by(|a, b| a.energy.total_cmp(&b.energy)).unwrap();
        assert!(peak1.lambda > 0.0 && peak2.lambda < 0.0);
    }

    #[test]
    fn translation_covariance() {
        let (tg, rg) = grid();
        let u = SpacetimeField::from_fn(tg, rg, packet(3.0, 4.0, 6.0, 4.0, 0.5));
        let w = window(&u);
        let m0 = phase_energy(&u, w).unwrap();
        let m1 = phase_energy(&u.shift_time(w.stride_t), w).unwrap();
        let n = m0.centers_t.len();
        for a in 0..n {
            for (e0, e1) in m0.center_energy[a].iter().zip(&m1.center_energy[(a + 1) % n]) {
                assert!((e0 - e1).abs() <= 1e-12 * m0.max_cell.max(1e-300) * 1e3);
            }
        }
    }

    #[test]
    fn vacuous_pass() {
        let (tg, rg) = grid();
        let z = SpacetimeField::zeros(tg, rg);
        let m = phase_energy(&z, window(&z)).unwrap();
        let th = FlowoutThresholds::for_mode(&ModeParams::new(0, 0.0).unwrap(), &m.window);
        let bg = BackgroundParams::new(1.0).unwrap();
        assert!(flowout_seeds(&bg, &m, Region::support_of(&z, 1e-6), &th, 8.0).is_empty());
        let v = flowout_consistency(&m, &[], None, &th, 8.0);
        assert!(v.vacuous && v.off_fraction == 0.0);
    }

    #[test]
    fn packets_on_and_off_a_ray() {
        let bg = BackgroundParams::new(1.0).unwrap();
        let (tg, rg) = grid();
        let xs = (1.0 - 1.0 / 9.0f64).sqrt();
        let seed = PhasePoint { t: 1.0, ..PhasePoint::radial(3.0, 1.0, -xs) };
        let rays = forward_flowout(&bg, &[seed], 4.0).unwrap();
        // a packet further along the ray
        let q = rays[0].samples.iter().find(|s| s.q.t > 3.0).unwrap().q;
        let scale = 40.0;
        let on = SpacetimeField::from_fn(tg, rg, packet(q.t, q.r, scale * q.lambda, scale * q.xi, 0.4));
        let off = SpacetimeField::from_fn(tg, rg, packet(q.t, q.r, scale * q.lambda, -scale * q.xi, 0.4));
        let th = FlowoutThresholds { energy_rel: 1e-4, ..FlowoutThresholds::for_mode(&ModeParams::new(0, 0.0).unwrap(), &window(&on)) };
        let v_on = flowout_consistency(&phase_energy(&on, window(&on)).unwrap(), &rays, None, &th, 8.0);
        let v_off = flowout_consistency(&phase_energy(&off, window(&off)).unwrap(), &rays, None, &th, 8.0);
        assert!(v_on.off_fraction < 0.05, "{v_on:?}");
        assert!(v_off.off_fraction > 0.95, "{v_off:?}");
    }

    #[test]
    fn elliptic_probe_zero_and_truncated() {
        let bg = BackgroundParams::new(1.0).unwrap();
        let mode = ModeParams::new(0, 0.0).unwrap();
        let tg = TimeGrid::new(2.0 * std::f64::consts::PI, 16).unwrap();
        let rg = RadialGrid::staggered(4.0, 400).unwrap();
        let z = SpacetimeField::zeros(tg, rg);
        let rep = elliptic_support_probe(&z, &bg, &mode, 0.1, 1).unwrap();
        assert_eq!(rep.fraction, 0.0);

        // exact mode at λ = 3, then the same profile cut off at r = a
        let ex = crate::modes::exact_mode(&bg, &mode, 3.0, crate::modes::Branch::Regular).unwrap();
        let full = SpacetimeField::from_fn(tg, rg, |t, r| Complex64::from_polar(ex.value(r).unwrap(), 3.0 * t));
        let cut = full.map(|_, r, z| if r < 1.0 { Complex64::new(0.0, 0.0) } else { z });
        let good = elliptic_support_probe(&full, &bg, &mode, 0.1, 1).unwrap();
        let bad = elliptic_support_probe(&cut, &bg, &mode, 0.1, 1).unwrap();
        assert!(good.fraction > 0.0 && good.slice.as_ref().unwrap().consistent, "{:?}", good.slice);
        assert_eq!(bad.fraction, 0.0);
        assert!(!bad.slice.as_ref().unwrap().consistent, "{:?}", bad.slice);
        assert!(good.unique_continuation.unwrap().zero_data_sup <= 1e-12);
    }
}
