//! Experiment configuration files.
//!
//! Every section except `[grid]` and `[experiment]` may be omitted; inside a
//! section every key except `grid.points` and `experiment.kind` has a
//! default. Unknown keys are rejected.

use std::fmt::Write as _;
use std::path::Path;

use fracldp_core::drift::DriftSpec;
use fracldp_core::noise::{basis_profile, ModeBasis, NoiseSpec, Sigma2Family};
use fracldp_core::{Field, Grid, Model, Taming, TimeGrid};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::AppError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub grid: GridConfig,
    #[serde(default)]
    pub drift: DriftConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    pub experiment: ExperimentConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "one")]
    pub dims: usize,
    #[serde(default = "pi")]
    pub half_width: f64,
    pub points: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftKind {
    /// `a|u|^{p−2}u − b·u`
    Canonical,
    /// `b·u`
    Linear,
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftConfig {
    #[serde(default = "canonical")]
    pub kind: DriftKind,
    #[serde(default = "four")]
    pub p: f64,
    #[serde(default = "unit")]
    pub a: f64,
    #[serde(default = "half")]
    pub b: f64,
}

impl Default for DriftConfig {
    fn default() -> Self {
        Self {
            kind: DriftKind::Canonical,
            p: 4.0,
            a: 1.0,
            b: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisKind {
    Fourier,
    Localized,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Zero,
    Linear,
    Bounded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default = "one")]
    pub modes: usize,
    #[serde(default = "fourier")]
    pub basis: BasisKind,
    /// position of mode 0 in the trigonometric sequence (0 = constant)
    #[serde(default = "one")]
    pub offset: usize,
    /// envelope width of the localized basis
    #[serde(default = "unit")]
    pub width: f64,
    #[serde(default = "unit")]
    pub amplitude: f64,
    /// mode weights `(k+1)^{−decay}`
    #[serde(default = "unit")]
    pub decay: f64,
    #[serde(default = "zero_family")]
    pub family: FamilyKind,
    #[serde(default)]
    pub sigma2_amplitude: f64,
    #[serde(default = "unit")]
    pub kappa_amplitude: f64,
    /// Gaussian width of `κ`; constant `κ` when absent
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_width: Option<f64>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            modes: 1,
            basis: BasisKind::Fourier,
            offset: 1,
            width: 1.0,
            amplitude: 1.0,
            decay: 1.0,
            family: FamilyKind::Zero,
            sigma2_amplitude: 0.0,
            kappa_amplitude: 1.0,
            kappa_width: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TamingKind {
    Auto,
    On,
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialKind {
    Zero,
    /// `amplitude·exp(−|x|²/(2·width²))`
    Gaussian,
    /// `amplitude` times the first noise profile, normalized
    Mode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "half")]
    pub alpha: f64,
    #[serde(default = "unit")]
    pub horizon: f64,
    #[serde(default = "hundred")]
    pub steps: usize,
    #[serde(default = "auto")]
    pub taming: TamingKind,
    #[serde(default = "zero_initial")]
    pub initial: InitialKind,
    #[serde(default = "unit")]
    pub initial_amplitude: f64,
    #[serde(default = "unit")]
    pub initial_width: f64,
    /// amplitude of a Gaussian forcing of width `initial_width`
    #[serde(default)]
    pub forcing_amplitude: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            horizon: 1.0,
            steps: 100,
            taming: TamingKind::Auto,
            initial: InitialKind::Zero,
            initial_amplitude: 1.0,
            initial_width: 1.0,
            forcing_amplitude: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Simulate,
    Skeleton,
    Rate,
    Mc,
    Sweep,
    Tail,
    WeakConvergence,
    MomentBound,
    Check,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Skeleton => "skeleton",
            ExperimentKind::Rate => "rate",
            ExperimentKind::Mc => "mc",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::Tail => "tail",
            ExperimentKind::WeakConvergence => "weak-convergence",
            ExperimentKind::MomentBound => "moment-bound",
            ExperimentKind::Check => "check",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetKind {
    /// `⟨u(T), φ⟩ = level`
    Projection,
    /// `u(T) = level·φ`
    Endpoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    /// `⟨u(T), φ⟩ ≥ level`
    Threshold,
    /// `‖u(T) − ū(T)‖ < radius` around the noise-free path `ū`
    Ball,
    /// `max_t ‖u(t) − ū(t)‖ > radius`
    Tube,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "tenth")]
    pub eps: f64,
    #[serde(default = "thousand")]
    pub samples: usize,
    #[serde(default = "default_eps_list")]
    pub eps_list: Vec<f64>,

    /// constant control on `control_mode` for simulate/skeleton and the
    /// base control of the weak-convergence experiment
    #[serde(default)]
    pub control_amplitude: f64,
    #[serde(default)]
    pub control_mode: usize,

    #[serde(default = "projection")]
    pub target: TargetKind,
    /// target level and event threshold
    #[serde(default = "unit")]
    pub level: f64,
    #[serde(default = "beta0")]
    pub beta: f64,
    #[serde(default = "three")]
    pub beta_stages: usize,
    #[serde(default = "five_hundred")]
    pub max_iterations: usize,
    /// number of initial controls (the first is zero, the rest random)
    #[serde(default = "one")]
    pub multistart: usize,
    #[serde(default = "residual_tol")]
    pub residual_tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_action: Option<f64>,
    #[serde(default = "two_percent")]
    pub action_tolerance: f64,

    #[serde(default = "threshold")]
    pub event: EventKind,
    #[serde(default = "unit")]
    pub radius: f64,
    /// tilt small-noise estimates by the optimizer's control
    #[serde(default = "yes")]
    pub importance_sampling: bool,
    /// allowed relative gap between `−ε log p̂` at the smallest `ε` and the action
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_tolerance: Option<f64>,
    /// interval half-width in standard errors
    #[serde(default = "two")]
    pub z: f64,

    /// control energy radii `R`
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
    /// tail radii; evenly spaced inside the box when absent
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_radii: Option<Vec<f64>>,
    #[serde(default = "fifty")]
    pub controls: usize,
    #[serde(default = "tail_threshold")]
    pub tail_threshold: f64,

    #[serde(default = "default_n_list")]
    pub n_list: Vec<usize>,
    #[serde(default = "unit")]
    pub amplitude: f64,
    #[serde(default)]
    pub mode: usize,

    #[serde(default = "two")]
    pub moment_ratio_threshold: f64,
}

fn one() -> usize {
    1
}
fn three() -> usize {
    3
}
fn fifty() -> usize {
    50
}
fn hundred() -> usize {
    100
}
fn five_hundred() -> usize {
    500
}
fn thousand() -> usize {
    1000
}
fn pi() -> f64 {
    std::f64::consts::PI
}
fn unit() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn two() -> f64 {
    2.0
}
fn four() -> f64 {
    4.0
}
fn tenth() -> f64 {
    0.1
}
fn beta0() -> f64 {
    1e3
}
fn residual_tol() -> f64 {
    1e-2
}
fn two_percent() -> f64 {
    0.02
}
fn tail_threshold() -> f64 {
    1e-6
}
fn yes() -> bool {
    true
}
fn canonical() -> DriftKind {
    DriftKind::Canonical
}
fn fourier() -> BasisKind {
    BasisKind::Fourier
}
fn zero_family() -> FamilyKind {
    FamilyKind::Zero
}
fn auto() -> TamingKind {
    TamingKind::Auto
}
fn zero_initial() -> InitialKind {
    InitialKind::Zero
}
fn projection() -> TargetKind {
    TargetKind::Projection
}
fn threshold() -> EventKind {
    EventKind::Threshold
}
fn default_eps_list() -> Vec<f64> {
    vec![0.2, 0.1, 0.05, 0.02]
}
fn default_radii() -> Vec<f64> {
    vec![1.0, 2.0]
}
fn default_n_list() -> Vec<usize> {
    vec![1, 2, 4, 8, 16, 32]
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, AppError> {
        toml::from_str(text).map_err(|e| AppError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, AppError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AppError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            AppError::Config(m) => AppError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Canonical text of the fully resolved configuration.
    pub fn resolved(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Hex SHA-256 of [`Self::resolved`].
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.resolved().as_bytes()))
    }

    pub fn grid(&self) -> Result<Grid, AppError> {
        Ok(Grid::new(self.grid.dims, self.grid.half_width, self.grid.points)?)
    }

    pub fn drift(&self) -> Result<DriftSpec, AppError> {
        let d = &self.drift;
        Ok(match d.kind {
            DriftKind::Canonical => DriftSpec::canonical(d.p, d.a, d.b)?,
            DriftKind::Linear => DriftSpec::linear(d.b)?,
            DriftKind::Zero => DriftSpec::zero(),
        })
    }

    pub fn basis(&self) -> ModeBasis {
        match self.noise.basis {
            BasisKind::Fourier => ModeBasis::Fourier {
                offset: self.noise.offset,
            },
            BasisKind::Localized => ModeBasis::Localized {
                offset: self.noise.offset,
                width: self.noise.width,
            },
        }
    }

    /// Unit-norm profile of noise mode 0: the direction of targets and events.
    pub fn profile(&self, grid: &Grid) -> Result<Field, AppError> {
        Ok(basis_profile(grid, self.basis(), 0)?)
    }

    pub fn noise(&self, grid: &Grid) -> Result<NoiseSpec, AppError> {
        let n = &self.noise;
        let kappa = match n.kappa_width {
            Some(w) => Field::from_fn(grid, |x| {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                n.kappa_amplitude * (-r2 / (2.0 * w * w)).exp()
            })?,
            None => Field::constant(grid, n.kappa_amplitude),
        };
        let family = match n.family {
            FamilyKind::Zero => Sigma2Family::Zero,
            FamilyKind::Linear => Sigma2Family::Linear,
            FamilyKind::Bounded => Sigma2Family::Bounded,
        };
        Ok(NoiseSpec::from_basis(
            grid,
            n.modes,
            self.basis(),
            n.amplitude,
            n.decay,
            kappa,
            family,
            n.sigma2_amplitude,
        )?)
    }

    pub fn time(&self) -> Result<TimeGrid, AppError> {
        Ok(TimeGrid::new(self.solver.horizon, self.solver.steps)?)
    }

    fn gaussian(&self, grid: &Grid, amplitude: f64) -> Result<Field, AppError> {
        let w = self.solver.initial_width;
        Ok(Field::from_fn(grid, |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            amplitude * (-r2 / (2.0 * w * w)).exp()
        })?)
    }

    pub fn model(&self) -> Result<Model, AppError> {
        let grid = self.grid()?;
        let s = &self.solver;
        let mut model = Model::new(&grid, s.alpha, self.drift()?, self.noise(&grid)?, self.time()?)?;
        model = model.with_taming(match s.taming {
            TamingKind::Auto => Taming::Auto,
            TamingKind::On => Taming::On,
            TamingKind::Off => Taming::Off,
        });
        if s.forcing_amplitude != 0.0 {
            model = model.with_forcing(self.gaussian(&grid, s.forcing_amplitude)?)?;
        }
        Ok(model)
    }

    pub fn initial(&self, grid: &Grid) -> Result<Field, AppError> {
        let s = &self.solver;
        match s.initial {
            InitialKind::Zero => Ok(Field::zeros(grid)),
            InitialKind::Gaussian => self.gaussian(grid, s.initial_amplitude),
            InitialKind::Mode => Ok(self.profile(grid)?.scaled(s.initial_amplitude)),
        }
    }

    /// Tail radii to evaluate, defaulting to seven evenly spaced radii.
    pub fn tail_radii(&self) -> Vec<f64> {
        match &self.experiment.tail_radii {
            Some(r) => r.clone(),
            None => (1..8).map(|i| self.grid.half_width * i as f64 / 8.0).collect(),
        }
    }
}

/// Human-readable dump used in run logs.
pub fn describe(cfg: &Config) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "grid n={} L={} N={}; drift {:?} p={} a={} b={}; noise K={} {:?}; alpha={} T={} M={}",
        cfg.grid.dims,
        cfg.grid.half_width,
        cfg.grid.points,
        cfg.drift.kind,
        cfg.drift.p,
        cfg.drift.a,
        cfg.drift.b,
        cfg.noise.modes,
        cfg.noise.family,
        cfg.solver.alpha,
        cfg.solver.horizon,
        cfg.solver.steps
    );
    s
}
