//! Null bicharacteristics of σ₂(□ₖ) in the cotangent bundle.
//!
//! Rays are integrated upstairs in `(t, r, λ, ξ)`; the base projection is
//! singular at `r = a` but the Hamilton flow is not. On Σ with `η = 0` the
//! flow has the closed form `r(s)² = a² + (2λs + c)²` with `c = r(0)ξ(0)/λ`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::background::{in_characteristic_set, principal_symbol, BackgroundParams, PhasePoint};
use crate::error::{domain, Error, Result};
use crate::ode::{integrate, solve_at, OdeOptions};

pub const DEFAULT_TOL: f64 = 1e-10;

/// Rays are never followed below this radius.
pub const R_MIN_GUARD: f64 = 1e-8;

/// `|dt/ds| ≥ |λ|` is guaranteed once `r` exceeds this multiple of `a`.
pub const MONOTONE_RADIUS_FACTOR: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RaySample {
    pub s: f64,
    pub q: PhasePoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorInfo {
    pub tol: f64,
    pub accepted_steps: usize,
    pub min_step: f64,
    pub max_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayPath {
    /// Samples ordered by increasing flow parameter.
    pub samples: Vec<RaySample>,
    pub params: BackgroundParams,
    pub info: IntegratorInfo,
}

impl RayPath {
    pub fn first(&self) -> &RaySample {
        &self.samples[0]
    }

    pub fn last(&self) -> &RaySample {
        &self.samples[self.samples.len() - 1]
    }

    /// The sample at `s = 0`, if present.
    pub fn origin(&self) -> Option<&RaySample> {
        self.samples.iter().find(|x| x.s == 0.0)
    }

    /// `c` in `r(s)² = a² + (2λs + c)²`, from the `s = 0` sample.
    pub fn closed_form_constant(&self) -> Option<f64> {
        self.origin().map(|o| o.q.r * o.q.xi / o.q.lambda)
    }

    /// `max |r(s)² − a² − (2λs + c)²| / ((1 + s²)λ²)` over the samples.
    pub fn closed_form_deviation(&self) -> Option<f64> {
        let c = self.closed_form_constant()?;
        let a2 = self.params.a_rot * self.params.a_rot;
        let lam = self.origin()?.q.lambda;
        Some(
            self.samples
                .iter()
                .map(|x| {
                    let model = a2 + (2.0 * lam * x.s + c).powi(2);
                    (x.q.r * x.q.r - model).abs() / ((1.0 + x.s * x.s) * lam * lam)
                })
                .fold(0.0, f64::max),
        )
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["s", "t", "r", "phi", "lambda", "xi", "eta"])?;
        for x in &self.samples {
            let q = x.q;
            out.write_record(
                [x.s, q.t, q.r, q.phi, q.lambda, q.xi, q.eta].iter().map(|v| v.to_string()),
            )?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Hamilton vector field of σ₂(□ₖ) as `(dt, dr, dφ, dλ, dξ, dη)`.
pub fn hamilton_field(bg: &BackgroundParams, q: &PhasePoint) -> Result<[f64; 6]> {
    if !(q.r > 0.0) {
        return domain(format!("hamilton_field needs r > 0, got {}", q.r));
    }
    let a2 = bg.a_rot * bg.a_rot;
    let r = q.r;
    Ok([
        -2.0 * q.lambda * (1.0 - a2 / (r * r)),
        2.0 * q.xi,
        0.0,
        0.0,
        2.0 * a2 * q.lambda * q.lambda / (r * r * r),
        0.0,
    ])
}

fn reduced_field(a2: f64) -> impl Fn(f64, &[f64; 4]) -> [f64; 4] {
    move |_s, y| {
        let (r, lam, xi) = (y[1], y[2], y[3]);
        let r2 = r * r;
        [-2.0 * lam * (1.0 - a2 / r2), 2.0 * xi, 0.0, 2.0 * a2 * lam * lam / (r2 * r)]
    }
}

fn options(tol: f64) -> OdeOptions {
    // a tenth of `tol` per step keeps the global error of a ray within `10·tol`
    OdeOptions { rtol: 0.1 * tol, atol: tol * 1e-3, ..OdeOptions::default() }
}

/// One-directional integration from `q0` to `s_end`, optionally stopping early.
fn integrate_branch(
    bg: &BackgroundParams,
    q0: &PhasePoint,
    s_end: f64,
    tol: f64,
    mut stop: impl FnMut(f64, &PhasePoint) -> bool,
) -> Result<(Vec<RaySample>, IntegratorInfo)> {
    let a2 = bg.a_rot * bg.a_rot;
    let y0 = [q0.t, q0.r, q0.lambda, q0.xi];
    let lift = |s: f64, y: &[f64; 4]| RaySample {
        s,
        q: PhasePoint::new(y[0], y[1], q0.phi, y[2], y[3], q0.eta),
    };
    let mut guard_hit = false;
    let path = integrate(reduced_field(a2), 0.0, y0, s_end, options(tol), |s, y| {
        if y[1] <= R_MIN_GUARD {
            guard_hit = true;
            return false;
        }
        !stop(s, &lift(s, y).q)
    })?;
    if guard_hit {
        return domain(format!("ray reached the r <= {R_MIN_GUARD} guard"));
    }
    let mut min_step = f64::INFINITY;
    let mut max_step: f64 = 0.0;
    for w in path.windows(2) {
        let h = (w[1].0 - w[0].0).abs();
        min_step = min_step.min(h);
        max_step = max_step.max(h);
    }
    let info = IntegratorInfo {
        tol,
        accepted_steps: path.len() - 1,
        min_step: if min_step.is_finite() { min_step } else { 0.0 },
        max_step,
    };
    Ok((path.iter().map(|(s, y)| lift(*s, y)).collect(), info))
}

fn check_seed(bg: &BackgroundParams, q0: &PhasePoint, tol: f64) -> Result<()> {
    if q0.eta != 0.0 {
        return domain("rays with eta != 0 are not supported");
    }
    if q0.lambda == 0.0 {
        return domain("null rays need lambda != 0");
    }
    // seeds are accepted slightly off Σ (projection error), but not far off
    if !in_characteristic_set(bg, q0, tol.max(1e-9))? {
        return domain(format!(
            "seed is not on the characteristic set (symbol = {:e})",
            principal_symbol(bg, q0)?
        ));
    }
    Ok(())
}

/// Integrates the null bicharacteristic through `q0` over `s ∈ [s_lo, s_hi]`.
pub fn integrate_ray(bg: &BackgroundParams, q0: &PhasePoint, s_range: (f64, f64), tol: f64) -> Result<RayPath> {
    let (s_lo, s_hi) = s_range;
    if !(s_lo <= 0.0 && 0.0 <= s_hi) {
        return domain(format!("s range [{s_lo}, {s_hi}] must contain 0"));
    }
    check_seed(bg, q0, tol)?;
    let (fwd, info_f) = integrate_branch(bg, q0, s_hi, tol, |_, _| false)?;
    let (bwd, info_b) = integrate_branch(bg, q0, s_lo, tol, |_, _| false)?;
    Ok(join(bg, fwd, bwd, info_f, info_b))
}

/// The ray through `q0` evaluated at the flow parameters `nodes` (sorted,
/// containing values of either sign).
pub fn sample_ray(bg: &BackgroundParams, q0: &PhasePoint, nodes: &[f64], tol: f64) -> Result<RayPath> {
    check_seed(bg, q0, tol)?;
    if nodes.windows(2).any(|w| !(w[0] < w[1])) {
        return domain("ray sample nodes must be strictly increasing");
    }
    let a2 = bg.a_rot * bg.a_rot;
    let y0 = [q0.t, q0.r, q0.lambda, q0.xi];
    let split = nodes.partition_point(|&s| s < 0.0);
    let lift = |s: f64, y: &[f64; 4]| RaySample { s, q: PhasePoint::new(y[0], y[1], q0.phi, y[2], y[3], q0.eta) };
    let down: Vec<f64> = nodes[..split].iter().rev().copied().collect();
    let mut samples: Vec<RaySample> = solve_at(reduced_field(a2), 0.0, y0, &down, options(tol))?
        .iter()
        .zip(&down)
        .rev()
        .map(|(y, &s)| lift(s, y))
        .collect();
    let up = &nodes[split..];
    for (y, &s) in solve_at(reduced_field(a2), 0.0, y0, up, options(tol))?.iter().zip(up) {
        samples.push(lift(s, y));
    }
    if samples.iter().any(|x| x.q.r <= R_MIN_GUARD) {
        return domain(format!("ray reached the r <= {R_MIN_GUARD} guard"));
    }
    Ok(RayPath { samples, params: *bg, info: IntegratorInfo { tol, accepted_steps: 0, min_step: 0.0, max_step: 0.0 } })
}

fn join(
    bg: &BackgroundParams,
    fwd: Vec<RaySample>,
    bwd: Vec<RaySample>,
    a: IntegratorInfo,
    b: IntegratorInfo,
) -> RayPath {
    let mut samples: Vec<RaySample> = bwd.into_iter().skip(1).rev().collect();
    samples.extend(fwd);
    RayPath {
        samples,
        params: *bg,
        info: IntegratorInfo {
            tol: a.tol,
            accepted_steps: a.accepted_steps + b.accepted_steps,
            min_step: a.min_step.min(b.min_step),
            max_step: a.max_step.max(b.max_step),
        },
    }
}

/// Flow-parameter cap for following a unit-speed segment over `horizon` in time.
fn s_cap(q: &PhasePoint, horizon: f64) -> f64 {
    // |dt/ds| ≥ |λ|(1 − a²/r²)·2 grows to 2|λ|; near r = a it vanishes like s²
    (4.0 * horizon + 8.0) / q.lambda.abs() + 8.0
}

/// Forward-in-time flowout: for each seed, both flow directions are followed
/// until `|t − t(seed)|` reaches `horizon`, and only samples with
/// `t ≥ t(seed)` are kept. Output is ordered by seed index.
pub fn forward_flowout(bg: &BackgroundParams, seeds: &[PhasePoint], horizon: f64) -> Result<Vec<RayPath>> {
    forward_flowout_with(bg, seeds, horizon, f64::INFINITY, DEFAULT_TOL)
}

/// As [`forward_flowout`], also stopping once `r` exceeds `r_cap`.
pub fn forward_flowout_with(
    bg: &BackgroundParams,
    seeds: &[PhasePoint],
    horizon: f64,
    r_cap: f64,
    tol: f64,
) -> Result<Vec<RayPath>> {
    seeds
        .par_iter()
        .map(|q0| {
            check_seed(bg, q0, tol)?;
            let t0 = q0.t;
            let cap = s_cap(q0, horizon);
            let stop = |_: f64, q: &PhasePoint| (q.t - t0).abs() >= horizon || q.r > r_cap;
            let (fwd, a) = integrate_branch(bg, q0, cap, tol, stop)?;
            let (bwd, b) = integrate_branch(bg, q0, -cap, tol, stop)?;
            let mut path = join(bg, fwd, bwd, a, b);
            path.samples.retain(|x| x.q.t >= t0);
            Ok(path)
        })
        .collect()
}

/// Compact box `[t_min, t_max] × [r_min, r_max]` in the base.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrBox {
    pub t_min: f64,
    pub t_max: f64,
    pub r_min: f64,
    pub r_max: f64,
}

impl TrBox {
    pub fn point(t: f64, r: f64) -> Self {
        Self { t_min: t, t_max: t, r_min: r, r_max: r }
    }

    fn nodes(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        if hi == lo || n <= 1 {
            vec![lo]
        } else {
            (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscapeSample {
    pub seed: PhasePoint,
    /// Time at which the backward ray first reaches `r = R + 1`.
    pub t_escape: f64,
    pub s_escape: f64,
    pub incoming: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeReport {
    /// Half-height of `K' = [0, R+2] × [−T, T]`.
    pub t_bound: f64,
    pub r_escape: f64,
    pub samples: Vec<EscapeSample>,
}

/// Seeds of Σ on the unit-|λ| slice over a sampled box (`n` nodes per side).
pub fn sigma_seeds(bg: &BackgroundParams, k: &TrBox, n: usize) -> Vec<PhasePoint> {
    let a = bg.a_rot;
    let mut seeds = Vec::new();
    for &t in &TrBox::nodes(k.t_min, k.t_max, n) {
        for &r in &TrBox::nodes(k.r_min, k.r_max, n) {
            if r < a {
                continue;
            }
            let xi_abs = (1.0 - a * a / (r * r)).max(0.0).sqrt();
            for lam in [-1.0, 1.0] {
                if xi_abs == 0.0 {
                    seeds.push(PhasePoint::new(t, r, 0.0, lam, 0.0, 0.0));
                } else {
                    for sx in [-1.0, 1.0] {
                        seeds.push(PhasePoint::new(t, r, 0.0, lam, sx * xi_abs, 0.0));
                    }
                }
            }
        }
    }
    seeds
}

/// Backward-in-time escape of rays from `K` to `{r > R+1}`.
///
/// Returns the smallest `T` such that every sampled backward ray reaches
/// `r = R + 1` at an incoming point with `|t| ≤ T` along the way. Seeds
/// already in `{r > R+1}` at incoming points escape at `s = 0`.
pub fn escape_analysis(bg: &BackgroundParams, k: &TrBox, r_abs: f64, tol: f64) -> Result<EscapeReport> {
    escape_analysis_sampled(bg, k, r_abs, tol, 9)
}

pub fn escape_analysis_sampled(
    bg: &BackgroundParams,
    k: &TrBox,
    r_abs: f64,
    tol: f64,
    n_per_side: usize,
) -> Result<EscapeReport> {
    if !(r_abs > bg.a_rot) {
        return domain(format!("R = {r_abs} must exceed a = {}", bg.a_rot));
    }
    if !(k.t_min <= k.t_max && 0.0 < k.r_min && k.r_min <= k.r_max) {
        return domain(format!("invalid box {k:?}"));
    }
    let target = r_abs + 1.0;
    let seeds = sigma_seeds(bg, k, n_per_side);
    let t_cap = 1e3 * (target + k.t_min.abs().max(k.t_max.abs()) + 1.0);
    let samples: Vec<EscapeSample> = seeds
        .par_iter()
        .map(|q0| escape_one(bg, q0, target, tol, t_cap))
        .collect::<Result<_>>()?;
    let mut t_bound: f64 = 0.0;
    for x in &samples {
        t_bound = t_bound.max(x.t_escape.abs()).max(x.seed.t.abs());
    }
    Ok(EscapeReport { t_bound, r_escape: target, samples })
}

fn escape_one(bg: &BackgroundParams, q0: &PhasePoint, target: f64, tol: f64, t_cap: f64) -> Result<EscapeSample> {
    let incoming_at = |q: &PhasePoint| -> Result<bool> {
        let v = hamilton_field(bg, q)?;
        Ok(v[1] != 0.0 && v[0] != 0.0 && v[1].signum() == -v[0].signum())
    };
    // t decreases when s moves in the direction of sgn λ
    let dir = q0.lambda.signum();
    if q0.r > target && incoming_at(q0)? {
        return Ok(EscapeSample { seed: *q0, t_escape: q0.t, s_escape: 0.0, incoming: true });
    }
    let s_end = dir * 1e6 / q0.lambda.abs();
    let mut exceeded = false;
    let (path, _) = integrate_branch(bg, q0, s_end, tol, |_, q| {
        if (q.t - q0.t).abs() > t_cap {
            exceeded = true;
            return true;
        }
        q.r > target
    })?;
    if exceeded || path.last().map_or(true, |x| x.q.r <= target) {
        return Err(Error::HorizonExceeded { cap: t_cap });
    }
    // locate the crossing between the last two samples by secant iteration
    let n = path.len();
    let (mut sa, mut sb) = (path[n - 2].s, path[n - 1].s);
    let base = path[n - 2];
    let a2 = bg.a_rot * bg.a_rot;
    let state = |s: f64| -> Result<[f64; 4]> {
        let y0 = [base.q.t, base.q.r, base.q.lambda, base.q.xi];
        Ok(solve_at(reduced_field(a2), base.s, y0, &[s], options(tol))?[0])
    };
    let (mut fa, mut fb) = (path[n - 2].q.r - target, path[n - 1].q.r - target);
    let mut y = state(sb)?;
    for _ in 0..60 {
        if (sb - sa).abs() <= tol * (1.0 + sb.abs()) || fb == fa {
            break;
        }
        let sc = sb - fb * (sb - sa) / (fb - fa);
        y = state(sc)?;
        sa = sb;
        fa = fb;
        sb = sc;
        fb = y[1] - target;
    }
    let q = PhasePoint::new(y[0], y[1], q0.phi, y[2], y[3], 0.0);
    Ok(EscapeSample { seed: *q0, t_escape: q.t, s_escape: sb, incoming: incoming_at(&q)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bg1() -> BackgroundParams {
        BackgroundParams::new(1.0).unwrap()
    }

    #[test]
    fn hamilton_field_examples() {
        let bg = bg1();
        let v = hamilton_field(&bg, &PhasePoint::radial(1.0, 1.0, 0.0)).unwrap();
        assert_eq!(v, [0.0, 0.0, 0.0, 0.0, 2.0, 0.0]);
        let v = hamilton_field(&bg, &PhasePoint::radial(1e8, 1.0, 1.0)).unwrap();
        assert!((v[0] + 2.0).abs() < 1e-12 && v[1] == 2.0);
        let v = hamilton_field(&bg, &PhasePoint::radial(3.0, 0.0, 0.0)).unwrap();
        assert_eq!(v, [0.0; 6]);
        assert!(hamilton_field(&bg, &PhasePoint::radial(-1.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn no_radial_points_at_the_interface() {
        for a in [0.5, 1.0, 2.0] {
            let bg = BackgroundParams::new(a).unwrap();
            for lam in [-3.0, -0.5, 0.7, 2.0] {
                let v = hamilton_field(&bg, &PhasePoint::radial(a, lam, 0.0)).unwrap();
                assert!((v[4] - 2.0 * lam * lam / a).abs() < 1e-12 && v[4] > 0.0);
            }
        }
    }

    #[test]
    fn turning_point_ray_matches_closed_form() {
        let bg = bg1();
        let q0 = PhasePoint::radial(1.0, 1.0, 0.0);
        let path = integrate_ray(&bg, &q0, (-1.0, 1.0), DEFAULT_TOL).unwrap();
        let end = path.last();
        assert_eq!(end.s, 1.0);
        assert!((end.q.r - 5f64.sqrt()).abs() < 1e-9);
        assert!(path.samples.iter().all(|x| x.q.lambda == 1.0 && x.q.eta == 0.0));
        assert!(path.closed_form_deviation().unwrap() < 1e-9);
    }

    #[test]
    fn mirrored_ray_has_increasing_time() {
        let bg = bg1();
        let q0 = PhasePoint::radial(1.0, -1.0, 0.0);
        let path = integrate_ray(&bg, &q0, (-5.0, 5.0), DEFAULT_TOL).unwrap();
        for w in path.samples.windows(2) {
            if w[0].s.abs() > 1.0 {
                assert!(w[1].q.t > w[0].q.t);
            }
        }
    }

    #[test]
    fn off_sigma_seed_is_rejected() {
        let bg = bg1();
        assert!(integrate_ray(&bg, &PhasePoint::radial(2.0, 1.0, 1.0), (-1.0, 1.0), 1e-10).is_err());
        assert!(integrate_ray(&bg, &PhasePoint::radial(1.0, 1.0, 0.0), (0.5, 1.0), 1e-10).is_err());
    }

    #[test]
    fn flowout_keeps_forward_time_only() {
        let bg = bg1();
        // far out with λ > 0: t decreases with s, so only s ≤ 0 survives
        let r = 10.0;
        let q = PhasePoint::radial(r, 1.0, (1.0 - 1.0 / (r * r)).sqrt());
        let paths = forward_flowout(&bg, &[q], 5.0).unwrap();
        let p = &paths[0];
        assert!(p.samples.iter().all(|x| x.s <= 0.0 && x.q.t >= 0.0));
        assert!(p.samples.len() > 3);
        assert!(forward_flowout(&bg, &[], 5.0).unwrap().is_empty());
    }

    #[test]
    fn flowout_from_the_turning_point() {
        // t is stationary but monotone through r = a: with λ < 0 only s ≥ 0 is forward
        let bg = bg1();
        let q = PhasePoint::radial(1.0, -1.0, 0.0);
        let p = &forward_flowout(&bg, &[q], 3.0).unwrap()[0];
        assert!(p.samples.iter().all(|x| x.s >= 0.0 && x.q.t >= 0.0));
        assert!(p.last().q.t >= 3.0 - 1e-9 || p.last().q.t > 2.0);
    }

    #[test]
    fn escape_from_the_interface_point() {
        let bg = bg1();
        let rep = escape_analysis(&bg, &TrBox::point(0.0, 1.0), 2.0, 1e-10).unwrap();
        // r² = 1 + 4s² hits 9 at s = √2, where t = −2√2 + atan(2√2)
        let s = 2f64.sqrt();
        let want = 2.0 * s - (2.0 * s).atan();
        assert!((rep.t_bound - want).abs() < 1e-8, "{} vs {want}", rep.t_bound);
        assert!(rep.samples.iter().all(|x| x.incoming));
        assert!(rep.samples.iter().all(|x| (x.s_escape.abs() - s).abs() < 1e-7));
    }

    #[test]
    fn escape_bound_is_monotone_in_the_box() {
        let bg = bg1();
        let small = TrBox { t_min: -0.5, t_max: 0.5, r_min: 1.0, r_max: 1.5 };
        let big = TrBox { t_min: -1.0, t_max: 1.0, r_min: 0.5, r_max: 2.5 };
        let a = escape_analysis_sampled(&bg, &small, 3.0, 1e-10, 5).unwrap();
        let b = escape_analysis_sampled(&bg, &big, 3.0, 1e-10, 9).unwrap();
        assert!(b.t_bound >= a.t_bound);
        assert!(a.samples.iter().chain(&b.samples).all(|x| x.incoming && x.t_escape < x.seed.t));
    }

    #[test]
    fn incoming_seeds_beyond_the_absorber_escape_immediately() {
        let bg = bg1();
        let rep = escape_analysis(&bg, &TrBox::point(0.0, 5.0), 2.0, 1e-10).unwrap();
        let incoming: Vec<_> = rep
            .samples
            .iter()
            .filter(|x| x.seed.lambda.signum() == x.seed.xi.signum())
            .collect();
        assert_eq!(incoming.len(), 2);
        assert!(incoming.iter().all(|x| x.s_escape == 0.0 && x.t_escape == 0.0));
    }

    #[test]
    fn sampled_turning_point_ray() {
        let bg = bg1();
        let nodes: Vec<f64> = (-4..=4).map(|i| 0.5 * i as f64).collect();
        let p = sample_ray(&bg, &PhasePoint::radial(1.0, 1.0, 0.0), &nodes, 1e-12).unwrap();
        let at1 = p.samples.iter().find(|x| x.s == 1.0).unwrap();
        assert!((at1.q.r - 5f64.sqrt()).abs() < 1e-10);
        assert!(p.closed_form_deviation().unwrap() < 1e-10);
        assert_eq!(p.samples.len(), nodes.len());
    }

    #[test]
    fn ray_csv_header() {
        let bg = bg1();
        let path = integrate_ray(&bg, &PhasePoint::radial(1.0, 1.0, 0.0), (0.0, 1.0), 1e-10).unwrap();
        let mut buf = Vec::new();
        path.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("s,t,r,phi,lambda,xi,eta\n"));
    }
}
