//! Run configuration: JSON on disk, validated at load.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use cosmon_core::solver::{AbsorberSpec, GridSpec};
use cosmon_core::{BackgroundParams, ModeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Trace,
    Escape,
    Mode,
    Counterexample,
    Coercivity,
    Solve,
    Wavefront,
    All,
}

impl Experiment {
    pub const SINGLE: [Experiment; 7] = [
        Experiment::Trace,
        Experiment::Escape,
        Experiment::Mode,
        Experiment::Counterexample,
        Experiment::Coercivity,
        Experiment::Solve,
        Experiment::Wavefront,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Trace => "trace",
            Experiment::Escape => "escape",
            Experiment::Mode => "mode",
            Experiment::Counterexample => "counterexample",
            Experiment::Coercivity => "coercivity",
            Experiment::Solve => "solve",
            Experiment::Wavefront => "wavefront",
            Experiment::All => "all",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Informational; the experiment given on the command line is the one run.
    pub experiment: Option<Experiment>,
    pub background: BackgroundConfig,
    pub mode: ModeConfig,
    pub grid: GridConfig,
    pub absorber: AbsorberConfig,
    /// Output directory, relative to the working directory.
    pub output_dir: Option<PathBuf>,
    /// Seed of the SplitMix64 generator behind every randomized trial.
    pub seed: u64,
    pub tolerances: Tolerances,
    pub trace: TraceConfig,
    pub escape: EscapeConfig,
    pub modes: ModesConfig,
    pub counterexample: CounterexampleConfig,
    pub coercivity: CoercivityConfig,
    pub solve: SolveConfig,
    pub wavefront: WavefrontConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            background: BackgroundConfig::default(),
            mode: ModeConfig::default(),
            grid: GridConfig::default(),
            absorber: AbsorberConfig::default(),
            output_dir: None,
            seed: 1,
            tolerances: Tolerances::default(),
            trace: TraceConfig::default(),
            escape: EscapeConfig::default(),
            modes: ModesConfig::default(),
            counterexample: CounterexampleConfig::default(),
            coercivity: CoercivityConfig::default(),
            solve: SolveConfig::default(),
            wavefront: WavefrontConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct BackgroundConfig {
    /// Rotation parameter `a` (> 0).
    pub a_rot: f64,
}

impl Default for BackgroundConfig {
    fn default() -> Self {
        Self { a_rot: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct ModeConfig {
    /// Angular mode number.
    pub k: i32,
    /// Mass (>= 0).
    pub m: f64,
}

impl Default for ModeConfig {
    fn default() -> Self {
        Self { k: 0, m: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Period of the time torus.
    pub period: f64,
    /// Time nodes (power of two).
    pub n_t: usize,
    /// Outer radius; must exceed R + 2.
    pub r_max: f64,
    pub n_r: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { period: 12.0, n_t: 256, r_max: 8.0, n_r: 256 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct AbsorberConfig {
    /// Inner absorber radius R; 1 − a²/R² must exceed 9/10.
    pub r_abs: f64,
    /// Sources are supported in r < R0 < R.
    pub r_src: f64,
}

impl Default for AbsorberConfig {
    fn default() -> Self {
        Self { r_abs: 3.5, r_src: 3.0 }
    }
}

/// Thresholds of the checks written to `report.json`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Ray integrator tolerance.
    pub ray_integrator: f64,
    /// `|r² − a² − (2λs + c)²| / ((1 + s²)λ²)`.
    pub ray_closed_form: f64,
    pub ray_conservation: f64,
    pub escape_closed_form: f64,
    pub wronskian: f64,
    pub recurrence: f64,
    pub half_order: f64,
    pub bessel_derivative: f64,
    /// Mode ODE integrator tolerance.
    pub mode_integrator: f64,
    pub mode_oracle: f64,
    pub zero_data: f64,
    pub pairing_identity: f64,
    /// Allowed relative change of `‖φ‖` under refinement.
    pub l2_stability: f64,
    pub slope_low: f64,
    pub slope_high: f64,
    /// `|slope|` bound for the convergent control.
    pub control_slope: f64,
    pub self_adjoint: f64,
    /// `|w + sgn(λ)λ²| / λ²` on sampled Σ₋ points beyond R + 1.
    pub elliptic_symbol: f64,
    pub elliptic_packet: f64,
    pub damping: f64,
    pub residual: f64,
    pub elliptic_mass: f64,
    pub parseval: f64,
    pub off_flowout: f64,
    /// Off-flowout fraction the negative control must reach.
    pub negative_control: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            ray_integrator: 1e-11,
            ray_closed_form: 1e-8,
            ray_conservation: 1e-10,
            escape_closed_form: 1e-8,
            wronskian: 1e-10,
            recurrence: 1e-10,
            half_order: 1e-12,
            bessel_derivative: 1e-6,
            mode_integrator: 1e-12,
            mode_oracle: 1e-8,
            zero_data: 1e-12,
            pairing_identity: 1e-8,
            l2_stability: 0.01,
            slope_low: -4.0 / 3.0 - 0.2,
            slope_high: -2.0 / 3.0 + 0.2,
            control_slope: 0.05,
            self_adjoint: 1e-12,
            elliptic_symbol: 1e-12,
            elliptic_packet: 0.05,
            damping: 0.1,
            residual: 1e-4,
            elliptic_mass: 1e-3,
            parseval: 0.02,
            off_flowout: 0.05,
            negative_control: 0.9,
        }
    }
}

/// A null covector seed with `η = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SeedConfig {
    #[serde(default)]
    pub t: f64,
    pub r: f64,
    pub lambda: f64,
    pub xi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct TraceConfig {
    pub seeds: Vec<SeedConfig>,
    /// Additional random null seeds.
    pub random_seeds: usize,
    pub s_min: f64,
    pub s_max: f64,
    /// Spacing of the rows written to `rays.csv`.
    pub s_step: f64,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self { seeds: Vec::new(), random_seeds: 50, s_min: -10.0, s_max: 10.0, s_step: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct EscapeConfig {
    pub t_min: f64,
    pub t_max: f64,
    pub r_min: f64,
    pub r_max: f64,
    /// R for the escape geometry (escape radius R + 1).
    pub r_abs: f64,
    /// Sample nodes per side of the box.
    pub samples_per_side: usize,
}

impl Default for EscapeConfig {
    fn default() -> Self {
        Self { t_min: 0.0, t_max: 0.0, r_min: 1.0, r_max: 1.0, r_abs: 2.0, samples_per_side: 9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct ModesConfig {
    /// Frequencies of the exact/numerical profile comparison written to `modes.csv`.
    pub lambdas: Vec<f64>,
    pub r_min: f64,
    pub r_max: f64,
    pub n_r: usize,
    pub oracle_draws: usize,
    pub specfun_samples: usize,
    pub uc_lambda: f64,
    pub uc_trials: usize,
}

impl Default for ModesConfig {
    fn default() -> Self {
        Self {
            lambdas: vec![-3.0, -1.25, 0.75, 2.0],
            r_min: 0.1,
            r_max: 10.0,
            n_r: 200,
            oracle_draws: 50,
            specfun_samples: 10_000,
            uc_lambda: 1.5,
            uc_trials: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct CounterexampleConfig {
    pub lambda_nodes: usize,
    pub radial_nodes: usize,
    pub levels: usize,
    /// ε ranges over 10^-hi … 10^-lo.
    pub eps_decade_lo: u32,
    pub eps_decade_hi: u32,
    pub period: f64,
    pub n_t: usize,
    pub radial_points: usize,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        let g = cosmon_core::modes::CounterexampleGrids::default();
        Self {
            lambda_nodes: g.lambda_nodes,
            radial_nodes: g.radial_nodes,
            levels: g.levels,
            eps_decade_lo: g.eps_decades.0,
            eps_decade_hi: g.eps_decades.1,
            period: g.time.period,
            n_t: g.time.n,
            radial_points: g.radial_points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct CoercivityConfig {
    pub trials: usize,
    pub ks: Vec<i32>,
    pub n_r: usize,
    pub n_t: usize,
    pub period: f64,
}

impl Default for CoercivityConfig {
    fn default() -> Self {
        let g = cosmon_core::solver::CoercivityGrid::default();
        Self { trials: 100, ks: vec![0, 1, 3], n_r: g.n_r, n_t: g.n_t, period: g.period }
    }
}

/// Gaussian source `exp(−((t − t0)² + (r − r0)²)/(2w²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct SourceConfig {
    /// Center time as a fraction of the period.
    pub t0_fraction: f64,
    pub r0: f64,
    pub width: f64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self { t0_fraction: 0.25, r0: 2.0, width: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct SolveConfig {
    pub source: SourceConfig,
    /// Random symbol samples for the sign property.
    pub sign_samples: usize,
    /// Frequencies of the damping measurement.
    pub damping_lambdas: Vec<f64>,
    /// Elliptic region is `r < a(1 − delta)`.
    pub delta: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self { source: SourceConfig::default(), sign_samples: 1_000_000, damping_lambdas: vec![-30.0, 30.0, -60.0], delta: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct WavefrontConfig {
    pub source: SourceConfig,
    /// Window width in t and r.
    pub sigma: f64,
    /// Cells below this fraction of the largest cell are noise.
    pub noise_floor: f64,
    /// Cells are classified for r ≤ R + `classify_beyond_r_abs`.
    pub classify_beyond_r_abs: f64,
    pub delta: f64,
    /// Time offset of the negative-control packet before the source.
    pub control_offset: f64,
    /// `|(λ, ξ)|` of the negative-control packet.
    pub control_frequency: f64,
    pub control_width: f64,
    /// Number of t-slices rendered as SVG heat maps.
    pub svg_slices: usize,
    /// Cells written to `phase_energy.csv` are those above this fraction of the largest cell.
    pub csv_floor: f64,
    /// Integrator tolerance of the flowout rays.
    pub ray_tol: f64,
}

impl Default for WavefrontConfig {
    fn default() -> Self {
        Self {
            source: SourceConfig::default(),
            sigma: 0.5,
            noise_floor: 1e-6,
            classify_beyond_r_abs: 1.0,
            delta: 0.1,
            control_offset: 2.0,
            control_frequency: 40.0,
            control_width: 0.3,
            svg_slices: 4,
            csv_floor: 1e-4,
            ray_tol: 1e-8,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Validated parameter bundle shared by the experiments.
#[derive(Debug, Clone, Copy)]
pub struct Physics {
    pub bg: BackgroundParams,
    pub mode: ModeParams,
    pub spec: AbsorberSpec,
    pub grid: GridSpec,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        let cfg: RunConfig = serde_json::from_str(&text).map_err(|source| ConfigError::Parse { path: path.into(), source })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn physics(&self) -> Result<Physics, ConfigError> {
        let inv = |e: cosmon_core::Error| ConfigError::Invalid(e.to_string());
        let bg = BackgroundParams::new(self.background.a_rot).map_err(inv)?;
        let mode = ModeParams::new(self.mode.k, self.mode.m).map_err(inv)?;
        let spec = AbsorberSpec::new(&bg, self.absorber.r_abs, self.absorber.r_src).map_err(inv)?;
        let g = self.grid;
        let grid = GridSpec { period: g.period, n_t: g.n_t, r_max: g.r_max, n_r: g.n_r, bg, mode };
        grid.validate(&spec).map_err(inv)?;
        Ok(Physics { bg, mode, spec, grid })
    }

    /// Re-checks every cross-field constraint.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        let p = self.physics()?;
        let a = p.bg.a_rot;
        let t = &self.trace;
        if !(t.s_min <= 0.0 && 0.0 <= t.s_max && t.s_step > 0.0) {
            return bad(format!("trace: need s_min <= 0 <= s_max and s_step > 0 (got {}, {}, {})", t.s_min, t.s_max, t.s_step));
        }
        for s in &t.seeds {
            let sym = a * a / (s.r * s.r) * s.lambda * s.lambda - s.lambda * s.lambda + s.xi * s.xi;
            if !(s.r > 0.0) || s.lambda == 0.0 || sym.abs() > 1e-9 * (s.lambda * s.lambda + s.xi * s.xi) {
                return bad(format!("trace: seed {s:?} is not a null covector with r > 0 and lambda != 0"));
            }
        }
        let e = &self.escape;
        if !(e.t_min <= e.t_max && 0.0 < e.r_min && e.r_min <= e.r_max && e.r_abs > a && e.samples_per_side > 0) {
            return bad(format!("escape: invalid box or radius {e:?}"));
        }
        let m = &self.modes;
        if !(0.0 < m.r_min && m.r_min < m.r_max && m.n_r >= 2) {
            return bad("modes: need 0 < r_min < r_max and n_r >= 2".into());
        }
        if m.uc_lambda == 0.0 || m.uc_lambda.abs() == self.mode.m {
            return bad("modes: uc_lambda must be nonzero with uc_lambda^2 != m^2".into());
        }
        if m.lambdas.iter().any(|l| l.abs() == self.mode.m) {
            return bad("modes: lambdas must avoid lambda^2 = m^2".into());
        }
        let c = &self.counterexample;
        if !(c.eps_decade_lo < c.eps_decade_hi && c.levels >= 2 && c.lambda_nodes > 0 && c.radial_nodes > 0 && c.n_t.is_power_of_two()) {
            return bad(format!("counterexample: invalid grids {c:?}"));
        }
        let k = &self.coercivity;
        if !(k.n_r >= 8 && k.n_t >= 2 && k.period > 0.0) {
            return bad(format!("coercivity: invalid grid {k:?}"));
        }
        for src in [&self.solve.source, &self.wavefront.source] {
            if !(src.width > 0.0 && src.r0 - 8.0 * src.width > 0.0 && src.r0 + 8.0 * src.width < p.spec.r_src) {
                return bad(format!("source {src:?} must sit 8 widths inside (0, R0 = {})", p.spec.r_src));
            }
            if !(0.0..1.0).contains(&src.t0_fraction) {
                return bad("source t0_fraction must lie in [0, 1)".into());
            }
        }
        for d in [self.solve.delta, self.wavefront.delta] {
            if !(0.0..1.0).contains(&d) {
                return bad(format!("delta = {d} must lie in [0, 1)"));
            }
        }
        let w = &self.wavefront;
        if !(w.sigma > 0.0 && w.noise_floor > 0.0 && w.noise_floor < 1.0 && w.control_width > 0.0 && w.control_frequency > 0.0 && w.csv_floor > 0.0 && w.ray_tol > 0.0) {
            return bad(format!("wavefront: invalid window or control {w:?}"));
        }
        Ok(())
    }
}

/// JSON schema of [`RunConfig`], as published in `docs/config.schema.json`.
pub fn schema() -> String {
    let schema = schemars::schema_for!(RunConfig);
    let mut s = serde_json::to_string_pretty(&schema).expect("schema serializes");
    s.push('\n');
    s
}
