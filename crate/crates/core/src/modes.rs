//! Single-mode frequency-domain analysis.
//!
//! For fixed `k` and temporal frequency `λ` the transformed equation is
//! `−(û'' + û'/r) + V(r)û = 0` with
//! `V = m² − (1 − a²/r²)λ² + 2akλ/r² + k²/r² = ν²/r² − κ²`,
//! `ν = aλ + k`, `κ² = λ² − m²`: Bessel's equation of order `ν` in `κr`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

use crate::background::{BackgroundParams, ModeParams};
use crate::cutoff::{ramp_up, ramp_up_derivative, Plateau};
use crate::error::{domain, Error, Result};
use crate::field::{RadialGrid, SpacetimeField, TimeGrid};
use crate::ode::{solve_at, OdeOptions};
use crate::quad::gauss_legendre_on;
use crate::rng::TrialRng;
use crate::specfun::{bessel_i, bessel_i_prime, bessel_j, bessel_j_prime, leading_derivative_coefficient};

/// Integration never starts or ends below this radius.
pub const R_MIN: f64 = 1e-6;

/// Zeroth-order coefficient `V(r)` of the transformed equation.
pub fn mode_potential(bg: &BackgroundParams, mode: &ModeParams, lambda: f64, r: f64) -> f64 {
    let a = bg.a_rot;
    let k = mode.kf();
    let m = mode.m;
    m * m - (1.0 - a * a / (r * r)) * lambda * lambda + 2.0 * a * k * lambda / (r * r) + k * k / (r * r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeProfile {
    pub lambda: f64,
    pub r_grid: Vec<f64>,
    pub values: Vec<Complex64>,
    pub bg: BackgroundParams,
    pub mode: ModeParams,
}

impl ModeProfile {
    pub fn new(
        bg: BackgroundParams,
        mode: ModeParams,
        lambda: f64,
        r_grid: Vec<f64>,
        values: Vec<Complex64>,
    ) -> Result<Self> {
        check_grid(&r_grid)?;
        if values.len() != r_grid.len() {
            return Err(Error::GridMismatch(format!("{} values for {} radii", values.len(), r_grid.len())));
        }
        Ok(Self { lambda, r_grid, values, bg, mode })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["r", "re", "im"])?;
        for (r, z) in self.r_grid.iter().zip(&self.values) {
            out.write_record([r.to_string(), z.re.to_string(), z.im.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn check_grid(r: &[f64]) -> Result<()> {
    if r.is_empty() || !(r[0] > 0.0) {
        return domain("radial grid must be nonempty and start at r > 0");
    }
    if r.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("radial grid must be strictly increasing");
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Regular,
    Singular,
}

/// `r ↦ J_μ(κr)` (oscillatory, `λ² > m²`) or `r ↦ I_μ(κr)` (evanescent).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactMode {
    /// Order actually used: `+|ν|` on the regular branch, `−|ν|` on the singular one.
    pub order: f64,
    pub kappa: f64,
    pub evanescent: bool,
}

impl ExactMode {
    pub fn value(&self, r: f64) -> Result<f64> {
        let x = self.kappa * r;
        if self.evanescent {
            bessel_i(self.order, x)
        } else {
            bessel_j(self.order, x)
        }
    }

    pub fn derivative(&self, r: f64) -> Result<f64> {
        let x = self.kappa * r;
        let d = if self.evanescent {
            bessel_i_prime(self.order, x)?
        } else {
            bessel_j_prime(self.order, x)?
        };
        Ok(self.kappa * d)
    }

    pub fn profile(&self, bg: &BackgroundParams, mode: &ModeParams, lambda: f64, r_grid: &[f64]) -> Result<ModeProfile> {
        let values = r_grid
            .iter()
            .map(|&r| self.value(r).map(|v| Complex64::new(v, 0.0)))
            .collect::<Result<Vec<_>>>()?;
        ModeProfile::new(*bg, *mode, lambda, r_grid.to_vec(), values)
    }
}

/// Closed-form solution of the transformed equation on one branch.
pub fn exact_mode(bg: &BackgroundParams, mode: &ModeParams, lambda: f64, branch: Branch) -> Result<ExactMode> {
    let m = mode.m;
    let d = lambda * lambda - m * m;
    if d == 0.0 {
        return domain(format!("lambda = {lambda} is a turning-degenerate frequency (lambda^2 = m^2)"));
    }
    let nu = mode.order(bg, lambda).abs();
    let order = match branch {
        Branch::Regular => nu,
        Branch::Singular => {
            if nu == nu.round() {
                return Err(Error::Pole(-nu));
            }
            -nu
        }
    };
    Ok(ExactMode { order, kappa: d.abs().sqrt(), evanescent: d < 0.0 })
}

/// Right-hand side in `(Re û, Re rû', Im û, Im rû')`.
fn mode_field(bg: BackgroundParams, mode: ModeParams, lambda: f64) -> impl Fn(f64, &[f64; 4]) -> [f64; 4] {
    move |r, y| {
        let rv = r * mode_potential(&bg, &mode, lambda, r);
        [y[1] / r, rv * y[0], y[3] / r, rv * y[2]]
    }
}

/// Integrates the transformed equation in `(û, rû')` from `r_start` with
/// `(û, dû/dr)` given there, sampling on `r_grid`.
pub fn solve_mode_ode(
    bg: &BackgroundParams,
    mode: &ModeParams,
    lambda: f64,
    r_grid: &[f64],
    r_start: f64,
    initial: (Complex64, Complex64),
    tol: f64,
) -> Result<ModeProfile> {
    check_grid(r_grid)?;
    if r_grid[0] < R_MIN || r_start < R_MIN {
        return domain(format!("mode integration below r_min = {R_MIN}"));
    }
    let (u0, du0) = initial;
    let y0 = [u0.re, r_start * du0.re, u0.im, r_start * du0.im];
    let opts = OdeOptions { rtol: tol, atol: tol * 1e-6, ..OdeOptions::default() };
    let split = r_grid.partition_point(|&r| r < r_start);
    let mut values = vec![Complex64::new(0.0, 0.0); r_grid.len()];
    let f = mode_field(*bg, *mode, lambda);
    let up = &r_grid[split..];
    if !up.is_empty() {
        for (v, y) in values[split..].iter_mut().zip(solve_at(&f, r_start, y0, up, opts)?) {
            *v = Complex64::new(y[0], y[2]);
        }
    }
    if split > 0 {
        let down: Vec<f64> = r_grid[..split].iter().rev().copied().collect();
        for (idx, y) in solve_at(&f, r_start, y0, &down, opts)?.into_iter().enumerate() {
            values[split - 1 - idx] = Complex64::new(y[0], y[2]);
        }
    }
    ModeProfile::new(*bg, *mode, lambda, r_grid.to_vec(), values)
}

/// One draw of the ODE-versus-Bessel comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleDraw {
    pub a_rot: f64,
    pub k: i32,
    pub m: f64,
    pub lambda: f64,
    /// `max |û_ode − û_exact| / max |û_exact|` over the grid.
    pub rel_err: f64,
}

/// Integrates the regular branch from exact data at `r = 1` and compares with
/// [`exact_mode`] on 200 points of `[0.1, 10]`. Half of the draws are massless.
pub fn oracle_equivalence(draws: usize, seed: u64, tol: f64) -> Result<Vec<OracleDraw>> {
    let mut rng = TrialRng::new(seed);
    let grid: Vec<f64> = (0..200).map(|i| 0.1 + 9.9 * i as f64 / 199.0).collect();
    let mut out = Vec::with_capacity(draws);
    while out.len() < draws {
        let a_rot = rng.uniform_in(0.5, 2.0);
        let k = rng.int_in(-2, 2) as i32;
        let m = if out.len() % 2 == 0 { 0.0 } else { rng.uniform_in(0.1, 3.0) };
        let lambda = rng.uniform_in(-6.0, 6.0);
        let (bg, mode) = (BackgroundParams::new(a_rot)?, ModeParams::new(k, m)?);
        // stay inside the validated Bessel box and away from λ² = m²
        let kappa = (lambda * lambda - m * m).abs().sqrt();
        if mode.order(&bg, lambda).abs() > 8.0 || (lambda.abs() - m).abs() < 0.05 || kappa * 10.0 > 90.0 {
            continue;
        }
        let ex = exact_mode(&bg, &mode, lambda, Branch::Regular)?;
        let init = (Complex64::new(ex.value(1.0)?, 0.0), Complex64::new(ex.derivative(1.0)?, 0.0));
        let p = solve_mode_ode(&bg, &mode, lambda, &grid, 1.0, init, tol)?;
        let exact = ex.profile(&bg, &mode, lambda, &grid)?;
        let scale = exact.max_abs();
        let err = p.values.iter().zip(&exact.values).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
        out.push(OracleDraw { a_rot, k, m, lambda, rel_err: err / scale });
    }
    Ok(out)
}

/// `∫ |û|² r dr` over `(lo, hi)` by Gauss–Legendre on the ODE solution.
fn window_mass(
    bg: &BackgroundParams,
    mode: &ModeParams,
    lambda: f64,
    r_start: f64,
    initial: (Complex64, Complex64),
    window: (f64, f64),
    tol: f64,
) -> Result<f64> {
    let (x, w) = gauss_legendre_on(48, window.0, window.1);
    let p = solve_mode_ode(bg, mode, lambda, &x, r_start, initial, tol)?;
    Ok(p.values.iter().zip(&x).zip(&w).map(|((z, r), w)| w * r * z.norm_sqr()).sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniqueContinuationReport {
    pub lambda: f64,
    pub interval: (f64, f64),
    pub r_seed: f64,
    pub window: (f64, f64),
    /// `sup |û|` over the interval for zero data at `r_seed`.
    pub zero_data_sup: f64,
    /// Window mass of the regular Bessel profile normalized to unit data at `r_seed`.
    pub bessel_window_mass: f64,
    /// Window masses of random unit-norm data at `r_seed`, in trial order.
    pub trial_masses: Vec<f64>,
    pub min_trial_mass: f64,
}

/// Numerical unique continuation through the elliptic region on one λ-slice.
pub fn unique_continuation_check(
    bg: &BackgroundParams,
    mode: &ModeParams,
    lambda: f64,
    interval: (f64, f64),
    tol: f64,
    trials: usize,
    seed: u64,
) -> Result<UniqueContinuationReport> {
    let a = bg.a_rot;
    let (lo, hi) = interval;
    if !(lo > 0.0 && lo < a && a < hi) {
        return domain(format!("interval ({lo}, {hi}) must lie in (0, inf) and contain a = {a}"));
    }
    let lo = lo.max(R_MIN);
    let r_seed = 0.5 * (lo + a);
    let window = ((0.5 * a).max(lo), a);
    let ode_tol = tol.max(1e-13);

    let zero = Complex64::new(0.0, 0.0);
    let grid: Vec<f64> = (0..=200).map(|i| lo + (hi - lo) * i as f64 / 200.0).collect();
    let zero_data_sup = solve_mode_ode(bg, mode, lambda, &grid, r_seed, (zero, zero), ode_tol)?.max_abs();

    let ex = exact_mode(bg, mode, lambda, Branch::Regular)?;
    let (u, du) = (ex.value(r_seed)?, ex.derivative(r_seed)?);
    let n = (u * u + r_seed * r_seed * du * du).sqrt();
    let bessel_window_mass = if n > 0.0 {
        let init = (Complex64::new(u / n, 0.0), Complex64::new(du / n, 0.0));
        window_mass(bg, mode, lambda, r_seed, init, window, ode_tol)?
    } else {
        0.0
    };

    let mut rng = TrialRng::new(seed);
    let inits: Vec<(Complex64, Complex64)> = (0..trials)
        .map(|_| {
            let v: [f64; 4] = std::array::from_fn(|_| rng.normal());
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            // unit norm in (û, rû')
            (Complex64::new(v[0], v[1]) / n, Complex64::new(v[2], v[3]) / (n * r_seed))
        })
        .collect();
    let trial_masses: Vec<f64> = inits
        .par_iter()
        .map(|&init| window_mass(bg, mode, lambda, r_seed, init, window, ode_tol))
        .collect::<Result<_>>()?;
    let min_trial_mass = trial_masses.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(UniqueContinuationReport {
        lambda,
        interval,
        r_seed,
        window,
        zero_data_sup,
        bessel_window_mass,
        trial_masses,
        min_trial_mass: if trials == 0 { 0.0 } else { min_trial_mass },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct H1kNormReport {
    pub total: f64,
    pub l2: f64,
    pub dt: f64,
    pub dr: f64,
    /// `‖r⁻¹(a∂ₜ + ik)u‖²`.
    pub twisted: f64,
}

/// Squared `H¹ₖ` norm with weight `r dr dt`.
pub fn h1k_norm(u: &SpacetimeField, bg: &BackgroundParams, mode: &ModeParams) -> H1kNormReport {
    h1k_norm_where(u, bg, mode, |_| true)
}

/// As [`h1k_norm`], with quadrature restricted to radii where `keep(r)`.
pub fn h1k_norm_where(
    u: &SpacetimeField,
    bg: &BackgroundParams,
    mode: &ModeParams,
    keep: impl Fn(f64) -> bool + Copy,
) -> H1kNormReport {
    let a = bg.a_rot;
    let k = mode.kf();
    let l2 = u.norm_sq_where(keep);
    let dt = u.dt().norm_sq_where(keep);
    let dr = u.dr().norm_sq_where(keep);
    let tw = u
        .time_multiplier(|l| Complex64::new(0.0, a * l + k))
        .map(|_, r, z| z / r)
        .norm_sq_where(keep);
    H1kNormReport { total: l2 + dt + dr + tw, l2, dt, dr, twisted: tw }
}

/// ζ(λ) is built so that `ζ·f₁(aλ + k)` is a plateau in `ν = aλ + k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaSpec {
    pub nu_support: (f64, f64),
    pub nu_plateau: (f64, f64),
}

impl ZetaSpec {
    /// `ν ∈ (−3/4, −1/4)`, equal to 1 on `(−2/3, −1/3)`.
    pub fn divergent() -> Self {
        Self { nu_support: (-0.75, -0.25), nu_plateau: (-2.0 / 3.0, -1.0 / 3.0) }
    }

    /// Mirror window at positive order, where `∂ᵣφ` is square integrable.
    pub fn control() -> Self {
        Self { nu_support: (0.25, 0.75), nu_plateau: (1.0 / 3.0, 2.0 / 3.0) }
    }

    fn validate(&self) -> Result<()> {
        let (a, b) = self.nu_support;
        let (c, d) = self.nu_plateau;
        if !(a < c && c <= d && d < b) {
            return domain(format!("bad zeta window {self:?}"));
        }
        if a.floor() != b.ceil() - 1.0 {
            log::warn!("zeta support {:?} meets an integer order; f1 vanishes or has a pole there", self.nu_support);
            return domain("zeta support must avoid integer orders");
        }
        Ok(())
    }

    fn bump(&self) -> Plateau {
        Plateau::new(self.nu_support.0, self.nu_plateau.0, self.nu_plateau.1, self.nu_support.1)
    }
}

/// Quadrature resolution of the counterexample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleGrids {
    pub lambda_nodes: usize,
    /// Gauss–Legendre nodes per radial panel (panels are decades in `r`).
    pub radial_nodes: usize,
    pub levels: usize,
    /// Inner cutoffs `ε = 10^{−e}` for `e` in this inclusive range.
    pub eps_decades: (u32, u32),
    pub time: TimeGrid,
    pub radial_points: usize,
}

impl Default for CounterexampleGrids {
    fn default() -> Self {
        Self {
            lambda_nodes: 200,
            radial_nodes: 24,
            levels: 3,
            eps_decades: (2, 6),
            time: TimeGrid { period: 400.0, n: 256 },
            radial_points: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleLevel {
    pub lambda_nodes: usize,
    pub radial_nodes: usize,
    pub l2_norm: f64,
    /// `(ε, ‖∂ᵣφ‖²_{L²(r>ε)})`.
    pub dr_norm_sq: Vec<(f64, f64)>,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub zeta: ZetaSpec,
    pub levels: Vec<CounterexampleLevel>,
    /// Successive ratios of `‖φ‖_{L²}` between levels.
    pub l2_ratios: Vec<f64>,
    /// Fitted slope of `log ‖∂ᵣφ‖²_{L²(r>ε)}` against `log ε` on the finest level.
    pub slope: f64,
    /// `‖φ‖²` of the sampled field by grid quadrature.
    pub grid_l2_sq: f64,
}

/// Radial cutoff: 1 on `[0, a/2]`, vanishing from `0.9a` on.
fn chi_inner(a: f64) -> (impl Fn(f64) -> f64, impl Fn(f64) -> f64) {
    let (lo, hi) = (0.5 * a, 0.9 * a);
    (move |r| 1.0 - ramp_up(r, lo, hi), move |r| -ramp_up_derivative(r, lo, hi))
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// λ nodes with ζ values for the given window.
fn zeta_nodes(bg: &BackgroundParams, k: i32, zeta: &ZetaSpec, n: usize) -> Result<Vec<(f64, f64, f64)>> {
    let a = bg.a_rot;
    let bump = zeta.bump();
    let (nu_lo, nu_hi) = zeta.nu_support;
    let (lam_a, lam_b) = ((nu_lo - k as f64) / a, (nu_hi - k as f64) / a);
    let (x, w) = gauss_legendre_on(n, lam_a.min(lam_b), lam_a.max(lam_b));
    x.iter()
        .zip(&w)
        .map(|(&lam, &w)| {
            let nu = a * lam + k as f64;
            let f1 = leading_derivative_coefficient(nu, lam.abs())?;
            Ok((lam, w, bump.eval(nu) / f1))
        })
        .collect()
}

/// The superposition `φ = ∫ ζ(λ)χ(r)e^{iλt}J_{aλ+k}(|λ|r) dλ`.
///
/// Norms use Plancherel in `t`, `∫|φ|² dt = 2π∫|ζ|²|χJ|² dλ`, with radial
/// quadrature on decade panels and the analytic `r^{2ν+1}` tail below the
/// smallest panel.
pub fn counterexample(
    bg: &BackgroundParams,
    k: i32,
    zeta: &ZetaSpec,
    grids: &CounterexampleGrids,
) -> Result<CounterexampleReport> {
    zeta.validate()?;
    let a = bg.a_rot;
    let (chi, dchi) = chi_inner(a);
    let (e_lo, e_hi) = grids.eps_decades;
    if !(e_lo < e_hi) || grids.levels == 0 {
        return domain("counterexample needs at least two cutoffs and one level");
    }
    let r_tail = 10f64.powi(-(e_hi as i32) - 1);

    let mut levels = Vec::new();
    for level in 0..grids.levels {
        let n_lam = grids.lambda_nodes << level;
        let n_rad = grids.radial_nodes << level;
        // panels: decades from r_tail up to 10^{-e_lo}, then up to 0.9a in pieces
        let mut edges: Vec<f64> = (0..=(e_hi + 1 - e_lo)).map(|i| r_tail * 10f64.powi(i as i32)).collect();
        let top = 0.9 * a;
        let start = *edges.last().unwrap();
        for i in 1..=8 {
            edges.push(start + (top - start) * i as f64 / 8.0);
        }
        let panels: Vec<(Vec<f64>, Vec<f64>)> =
            edges.windows(2).map(|e| gauss_legendre_on(n_rad, e[0], e[1])).collect();
        let nodes = zeta_nodes(bg, k, zeta, n_lam)?;
        let per_lambda: Vec<(f64, f64, Vec<f64>)> = nodes
            .par_iter()
            .map(|&(lam, w, z)| {
                let nu = a * lam + k as f64;
                let kap = lam.abs();
                let c0 = (0.5 * kap).powf(nu) * crate::specfun::rgamma(nu + 1.0);
                let mut l2 = c0 * c0 * r_tail.powf(2.0 * nu + 2.0) / (2.0 * nu + 2.0);
                let mut dr_panels = Vec::with_capacity(panels.len());
                for (x, pw) in &panels {
                    let mut d = 0.0;
                    for (&r, &q) in x.iter().zip(pw) {
                        let j = bessel_j(nu, kap * r)?;
                        let dj = kap * bessel_j_prime(nu, kap * r)?;
                        let g = chi(r) * j;
                        let dg = dchi(r) * j + chi(r) * dj;
                        l2 += q * r * g * g;
                        d += q * r * dg * dg;
                    }
                    dr_panels.push(d);
                }
                let s = 2.0 * PI * w * z * z;
                Ok((s * l2, s, dr_panels.iter().map(|d| d * s).collect()))
            })
            .collect::<Result<_>>()?;
        let l2_sq: f64 = per_lambda.iter().map(|x| x.0).sum();
        let n_p = panels.len();
        let mut panel_sums = vec![0.0; n_p];
        for (_, _, d) in &per_lambda {
            for (acc, v) in panel_sums.iter_mut().zip(d) {
                *acc += v;
            }
        }
        let mut dr_norm_sq: Vec<(f64, f64)> = Vec::new();
        for e in e_lo..=e_hi {
            let eps = 10f64.powi(-(e as i32));
            let first = edges.iter().position(|&x| (x / eps - 1.0).abs() < 1e-9).expect("cutoff on a panel edge");
            dr_norm_sq.push((eps, panel_sums[first..].iter().sum()));
        }
        let lx: Vec<f64> = dr_norm_sq.iter().map(|p| p.0.ln()).collect();
        let ly: Vec<f64> = dr_norm_sq.iter().map(|p| p.1.ln()).collect();
        levels.push(CounterexampleLevel {
            lambda_nodes: n_lam,
            radial_nodes: n_rad,
            l2_norm: l2_sq.sqrt(),
            dr_norm_sq,
            slope: least_squares_slope(&lx, &ly),
        });
    }
    let l2_ratios = levels.windows(2).map(|w| w[1].l2_norm / w[0].l2_norm).collect();
    let slope = levels.last().unwrap().slope;
    let field = counterexample_field(bg, k, zeta, grids)?;
    Ok(CounterexampleReport { zeta: *zeta, levels, l2_ratios, slope, grid_l2_sq: field.norm_sq() })
}

/// Samples φ on a staggered `(t, r)` grid over `r ∈ (0, a)`, with `t` centred on 0.
pub fn counterexample_field(
    bg: &BackgroundParams,
    k: i32,
    zeta: &ZetaSpec,
    grids: &CounterexampleGrids,
) -> Result<SpacetimeField> {
    zeta.validate()?;
    let a = bg.a_rot;
    let (chi, _) = chi_inner(a);
    let radial = RadialGrid::staggered(a, grids.radial_points)?;
    let nodes = zeta_nodes(bg, k, zeta, grids.lambda_nodes)?;
    let time = grids.time;
    let half = 0.5 * time.period;
    // radial factor per node, then sum with phases
    let radial_rows: Vec<Vec<f64>> = nodes
        .par_iter()
        .map(|&(lam, w, z)| {
            let nu = a * lam + k as f64;
            radial
                .points()
                .iter()
                .map(|&r| Ok(w * z * chi(r) * bessel_j(nu, lam.abs() * r)?))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut out = SpacetimeField::zeros(time, radial);
    for i in 0..time.n {
        let t = time.t(i) - half;
        for (node, row) in nodes.iter().zip(&radial_rows) {
            let ph = Complex64::from_polar(1.0, node.0 * t);
            for (j, v) in row.iter().enumerate() {
                *out.at_mut(i, j) += ph * *v;
            }
        }
    }
    Ok(out)
}

/// Slope of `log |f|` against `log r` by least squares.
pub fn fit_power_exponent(r: &[f64], f: &[f64]) -> f64 {
    let lx: Vec<f64> = r.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = f.iter().map(|x| x.abs().ln()).collect();
    least_squares_slope(&lx, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bg(a: f64) -> BackgroundParams {
        BackgroundParams::new(a).unwrap()
    }

    fn residual(bg: &BackgroundParams, mode: &ModeParams, lambda: f64, ex: &ExactMode, r: f64) -> (f64, f64) {
        let h = 1e-3 / (1.0 + ex.kappa);
        let d = |x: f64| ex.derivative(x).unwrap();
        let u2 = (d(r - 2.0 * h) - 8.0 * d(r - h) + 8.0 * d(r + h) - d(r + 2.0 * h)) / (12.0 * h);
        let u1 = d(r);
        let u = ex.value(r).unwrap();
        let v = mode_potential(bg, mode, lambda, r);
        let res = -(u2 + u1 / r) + v * u;
        (res, u2.abs().max((v * u).abs()).max((u1 / r).abs()))
    }

    #[test]
    fn bessel_reduction_residual() {
        let mut rng = TrialRng::new(11);
        for _ in 0..40 {
            let b = bg(rng.uniform_in(0.3, 2.0));
            let mode = ModeParams::new(rng.int_in(-3, 3) as i32, rng.uniform_in(0.0, 2.0)).unwrap();
            let lambda = rng.uniform_in(-4.0, 4.0);
            let ex = exact_mode(&b, &mode, lambda, Branch::Regular).unwrap();
            if ex.order > 10.0 || ex.kappa * 10.0 > 60.0 {
                continue;
            }
            let mut scale: f64 = 0.0;
            let mut worst: f64 = 0.0;
            for i in 0..60 {
                let r = 0.1 + 9.9 * i as f64 / 59.0;
                let (res, s) = residual(&b, &mode, lambda, &ex, r);
                worst = worst.max(res.abs());
                scale = scale.max(s);
            }
            assert!(worst <= 1e-7 * scale, "{worst} vs {scale} ({ex:?})");
        }
    }

    #[test]
    fn exact_mode_examples() {
        let b = bg(1.0);
        let m0 = ModeParams::new(0, 0.0).unwrap();
        let ex = exact_mode(&b, &m0, 1.0, Branch::Regular).unwrap();
        assert_eq!((ex.order, ex.kappa, ex.evanescent), (1.0, 1.0, false));
        assert!(exact_mode(&b, &m0, 1.0, Branch::Singular).is_err());
        let m2 = ModeParams::new(1, 2.0).unwrap();
        let ex = exact_mode(&b, &m2, 1.0, Branch::Regular).unwrap();
        assert!(ex.evanescent && (ex.kappa - 3f64.sqrt()).abs() < 1e-15);
        let vals: Vec<f64> = (1..50).map(|i| ex.value(0.1 * i as f64).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]));
        assert!(exact_mode(&b, &m2, 2.0, Branch::Regular).is_err());
    }

    #[test]
    fn branches_follow_frobenius_exponents() {
        // ν = aλ + k = −0.4
        let b = bg(1.0);
        let mode = ModeParams::new(0, 0.0).unwrap();
        let lambda = -0.4;
        let r: Vec<f64> = (0..20).map(|i| 1e-4 * 100f64.powf(i as f64 / 19.0)).collect();
        for (branch, want) in [(Branch::Regular, 0.4), (Branch::Singular, -0.4)] {
            let ex = exact_mode(&b, &mode, lambda, branch).unwrap();
            let f: Vec<f64> = r.iter().map(|&x| ex.value(x).unwrap()).collect();
            assert!((fit_power_exponent(&r, &f) - want).abs() < 1e-3);
        }
    }

    #[test]
    fn ode_matches_j1() {
        let b = bg(1.0);
        let mode = ModeParams::new(0, 0.0).unwrap();
        let grid: Vec<f64> = (0..=140).map(|i| 1.0 + 7.0 * i as f64 / 140.0).collect();
        let init = (Complex64::new(bessel_j(1.0, 1.0).unwrap(), 0.0), Complex64::new(bessel_j_prime(1.0, 1.0).unwrap(), 0.0));
        let p = solve_mode_ode(&b, &mode, 1.0, &grid, 1.0, init, 1e-12).unwrap();
        let ex = exact_mode(&b, &mode, 1.0, Branch::Regular).unwrap();
        let exact = ex.profile(&b, &mode, 1.0, &grid).unwrap();
        let scale = exact.max_abs();
        for (u, v) in p.values.iter().zip(&exact.values) {
            assert!((u - v).norm() <= 1e-8 * scale);
        }
    }

    #[test]
    fn oracle_equivalence_on_random_draws() {
        let draws = oracle_equivalence(20, 5, 1e-12).unwrap();
        assert!(draws.iter().any(|d| d.m == 0.0) && draws.iter().any(|d| d.m > d.lambda.abs()));
        for d in &draws {
            assert!(d.rel_err <= 1e-8, "{d:?}");
        }
    }

    #[test]
    fn ode_zero_data_and_reversibility() {
        let b = bg(1.3);
        let mode = ModeParams::new(2, 0.5).unwrap();
        let z = Complex64::new(0.0, 0.0);
        let grid: Vec<f64> = (1..40).map(|i| 0.2 * i as f64).collect();
        let p = solve_mode_ode(&b, &mode, 1.7, &grid, 2.0, (z, z), 1e-10).unwrap();
        assert!(p.values.iter().all(|v| *v == z));

        let init = (Complex64::new(0.3, -1.0), Complex64::new(0.5, 0.2));
        let fwd = solve_mode_ode(&b, &mode, 1.7, &[1.0, 6.0], 1.0, init, 1e-12).unwrap();
        let h = 1e-4;
        let near = solve_mode_ode(&b, &mode, 1.7, &[6.0 - h, 6.0, 6.0 + h], 1.0, init, 1e-12).unwrap();
        let du = (near.values[2] - near.values[0]) / (2.0 * h);
        let back = solve_mode_ode(&b, &mode, 1.7, &[1.0, 6.0], 6.0, (fwd.values[1], du), 1e-12).unwrap();
        assert!((back.values[0] - init.0).norm() < 1e-6);
    }

    #[test]
    fn unique_continuation_window_mass() {
        let b = bg(1.0);
        let mode = ModeParams::new(1, 0.0).unwrap();
        let rep = unique_continuation_check(&b, &mode, 2.5, (0.2, 2.0), 1e-12, 20, 3).unwrap();
        assert_eq!(rep.zero_data_sup, 0.0);
        assert!(rep.bessel_window_mass > 0.0);
        assert!(rep.min_trial_mass > 0.0);
        assert_eq!(rep.trial_masses.len(), 20);
        assert!(unique_continuation_check(&b, &mode, 2.5, (1.5, 2.0), 1e-12, 1, 3).is_err());
    }

    #[test]
    fn h1k_norm_of_separable_field() {
        let b = bg(0.8);
        let mode = ModeParams::new(0, 0.0).unwrap();
        let time = TimeGrid::new(2.0 * PI, 16).unwrap();
        let radial = RadialGrid::staggered(4.0, 400).unwrap();
        let g = |r: f64| (-(r - 2.0).powi(2) * 4.0).exp();
        let omega = 3.0;
        let u = SpacetimeField::from_fn(time, radial, |t, r| Complex64::from_polar(g(r), omega * t));
        let rep = h1k_norm(&u, &b, &mode);
        let gg = u.norm_sq();
        assert!((rep.l2 - gg).abs() < 1e-12 * gg);
        assert!((rep.dt - omega * omega * gg).abs() < 1e-9 * rep.dt);
        let g_over_r = u.map(|_, r, z| z / r).norm_sq();
        assert!((rep.twisted - 0.64 * omega * omega * g_over_r).abs() < 1e-9 * rep.twisted);
        assert!(rep.total >= rep.l2);
        let zero = h1k_norm(&SpacetimeField::zeros(time, radial), &b, &mode);
        assert_eq!(zero.total, 0.0);
    }

    #[test]
    fn twisted_term_diverges_for_smooth_data_with_k() {
        let b = bg(1.0);
        let mode = ModeParams::new(2, 0.0).unwrap();
        let time = TimeGrid::new(1.0, 4).unwrap();
        let mut x = Vec::new();
        let mut y = Vec::new();
        for n in [50usize, 100, 200, 400, 800] {
            let radial = RadialGrid::staggered(1.0, n).unwrap();
            let u = SpacetimeField::from_fn(time, radial, |_, r| Complex64::new((-r * r * 4.0).exp(), 0.0));
            x.push(radial.r0.ln());
            y.push(h1k_norm(&u, &b, &mode).twisted);
        }
        // ∫ k²/r dr with g(0) = 1, T = 1: slope −k² = −4 in log r₀
        let slope = least_squares_slope(&x, &y);
        assert!((slope + 4.0).abs() < 0.1, "{slope}");
    }

    #[test]
    fn f1_matches_finite_differences() {
        for nu in [-0.7, -0.5, -0.3, 0.4, 0.6] {
            let kappa = 0.6;
            let f1 = leading_derivative_coefficient(nu, kappa).unwrap();
            let r: f64 = 1e-7;
            let h = r * 1e-4;
            let d = (bessel_j(nu, kappa * (r + h)).unwrap() - bessel_j(nu, kappa * (r - h)).unwrap()) / (2.0 * h);
            assert!((d / (f1 * r.powf(nu - 1.0)) - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn counterexample_diverges_and_control_converges() {
        let b = bg(1.0);
        let grids = CounterexampleGrids { levels: 2, lambda_nodes: 100, radial_nodes: 16, ..Default::default() };
        let rep = counterexample(&b, 0, &ZetaSpec::divergent(), &grids).unwrap();
        assert!(rep.l2_ratios.iter().all(|r| (r - 1.0).abs() < 0.01));
        assert!(rep.slope > -4.0 / 3.0 - 0.2 && rep.slope < -2.0 / 3.0 + 0.2, "{}", rep.slope);
        let ctl = counterexample(&b, 0, &ZetaSpec::control(), &grids).unwrap();
        assert!(ctl.slope.abs() < 0.05, "{}", ctl.slope);
        let bad = ZetaSpec { nu_support: (-0.25, 0.25), nu_plateau: (-0.1, 0.1) };
        assert!(counterexample(&b, 0, &bad, &grids).is_err());
    }

    #[test]
    fn profile_csv() {
        let b = bg(1.0);
        let mode = ModeParams::new(0, 0.0).unwrap();
        let p = ModeProfile::new(b, mode, 1.0, vec![0.5, 1.0], vec![Complex64::new(1.0, 2.0); 2]).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "r,re,im\n0.5,1,2\n1,1,2\n");
        assert!(ModeProfile::new(b, mode, 1.0, vec![1.0, 0.5], vec![Complex64::new(1.0, 0.0); 2]).is_err());
    }
}
