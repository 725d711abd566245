//! Deterministic controlled dynamics
//! `du/dt + (−Δ)^α u + F(t,u) = g + σ(t,u)v`
//! integrated by first-order exponential Euler, plus the shared step engine
//! used by the stochastic solver.

use alloc::vec;
use alloc::vec::Vec;

// inherent float methods shadow these when std is linked
#[allow(unused_imports)]
use num_traits::Float;

use crate::drift::DriftSpec;
use crate::error::{Error, Result};
use crate::noise::NoiseSpec;
use crate::spectral::{Field, Grid, SpectralWorkspace};

/// Uniform time grid `t_m = m·dt`, `m = 0..=steps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    steps: usize,
    dt: f64,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::invalid("steps", "need at least one time step"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid("horizon", "final time must be positive"));
        }
        Ok(Self {
            steps,
            dt: horizon / steps as f64,
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.steps as f64
    }

    pub fn time(&self, m: usize) -> f64 {
        m as f64 * self.dt
    }

    /// The same horizon with `factor` times as many steps.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            steps: self.steps * factor,
            dt: self.dt / factor as f64,
        }
    }
}

/// Piecewise-constant control `v(t) ∈ ℝ^K` on a [`TimeGrid`], row-major
/// `values[m·K + k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Control {
    steps: usize,
    modes: usize,
    dt: f64,
    values: Vec<f64>,
    energy: f64,
}

impl Control {
    pub fn new(time: TimeGrid, modes: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != time.steps * modes {
            return Err(Error::DimensionMismatch {
                what: "control values",
                expected: time.steps * modes,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "control" });
        }
        Ok(Self::from_raw(time.steps, modes, time.dt, values))
    }

    pub(crate) fn from_raw(steps: usize, modes: usize, dt: f64, values: Vec<f64>) -> Self {
        let energy = dt * values.iter().map(|v| v * v).sum::<f64>();
        Self {
            steps,
            modes,
            dt,
            values,
            energy,
        }
    }

    pub fn zeros(time: TimeGrid, modes: usize) -> Self {
        Self::from_raw(time.steps, modes, time.dt, vec![0.0; time.steps * modes])
    }

    /// `v[m][k] = f(t_m, k)`.
    pub fn from_fn(time: TimeGrid, modes: usize, f: impl Fn(f64, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(time.steps * modes);
        for m in 0..time.steps {
            for k in 0..modes {
                values.push(f(time.time(m), k));
            }
        }
        Self::new(time, modes, values)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time_grid(&self) -> TimeGrid {
        TimeGrid {
            steps: self.steps,
            dt: self.dt,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, m: usize) -> &[f64] {
        &self.values[m * self.modes..(m + 1) * self.modes]
    }

    /// `Σ_m dt Σ_k v[m][k]²`, the squared `L²(0,T; ℓ²)` norm.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn scaled(&self, a: f64) -> Control {
        Control::from_raw(
            self.steps,
            self.modes,
            self.dt,
            self.values.iter().map(|v| a * v).collect(),
        )
    }

    /// `self + a·other`.
    pub fn add_scaled(&self, a: f64, other: &Control) -> Result<Control> {
        if other.values.len() != self.values.len() || other.modes != self.modes {
            return Err(Error::DimensionMismatch {
                what: "control",
                expected: self.values.len(),
                found: other.values.len(),
            });
        }
        Ok(Control::from_raw(
            self.steps,
            self.modes,
            self.dt,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x + a * y)
                .collect(),
        ))
    }

    /// `Σ_m dt Σ_k v w`.
    pub fn inner(&self, other: &Control) -> f64 {
        self.dt * self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Euclidean dot product over the raw entries.
    pub fn dot(&self, other: &Control) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }
}

/// Drift taming policy. `Auto` tames when `p ≥ 4`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Taming {
    On,
    Off,
    #[default]
    Auto,
}

/// Every physical and numerical parameter of one run.
#[derive(Clone, Debug)]
pub struct Model {
    pub grid: Grid,
    pub alpha: f64,
    pub drift: DriftSpec,
    pub noise: NoiseSpec,
    pub forcing: Option<Field>,
    pub taming: Taming,
    pub time: TimeGrid,
    /// compute per-step L², H^α and L^p norms into each trajectory
    pub record_norms: bool,
}

impl Model {
    pub fn new(grid: &Grid, alpha: f64, drift: DriftSpec, noise: NoiseSpec, time: TimeGrid) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::invalid("alpha", "fractional order must lie in (0, 1]"));
        }
        if noise.grid() != grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: grid.clone(),
            alpha,
            drift,
            noise,
            forcing: None,
            taming: Taming::Auto,
            time,
            record_norms: true,
        })
    }

    pub fn with_forcing(mut self, g: Field) -> Result<Self> {
        if *g.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        self.forcing = Some(g);
        Ok(self)
    }

    pub fn with_taming(mut self, taming: Taming) -> Self {
        self.taming = taming;
        self
    }

    pub fn with_time(mut self, time: TimeGrid) -> Self {
        self.time = time;
        self
    }

    pub fn with_norms(mut self, record: bool) -> Self {
        self.record_norms = record;
        self
    }

    pub fn dt(&self) -> f64 {
        self.time.dt()
    }

    pub fn modes(&self) -> usize {
        self.noise.modes()
    }

    pub fn tamed(&self) -> bool {
        match self.taming {
            Taming::On => true,
            Taming::Off => false,
            Taming::Auto => self.drift.p >= 4.0,
        }
    }

    pub(crate) fn check_initial(&self, u0: &Field) -> Result<()> {
        if *u0.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        if !u0.is_finite() {
            return Err(Error::NonFinite {
                what: "initial condition",
            });
        }
        Ok(())
    }

    pub(crate) fn check_control(&self, v: &Control) -> Result<()> {
        if v.steps != self.time.steps() || v.modes != self.modes() {
            return Err(Error::DimensionMismatch {
                what: "control shape (steps × modes)",
                expected: self.time.steps() * self.modes(),
                found: v.steps * v.modes,
            });
        }
        if (v.dt - self.dt()).abs() > 1e-12 * self.dt() {
            return Err(Error::invalid("dt", "control time step differs from the solver grid"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepNorms {
    pub l2: f64,
    pub h_alpha: f64,
    pub lp: f64,
}

/// Fields `u⁰ … u^M` with step metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub grid: Grid,
    pub dt: f64,
    pub fields: Vec<Field>,
    /// empty when norms were not recorded
    pub norms: Vec<StepNorms>,
    /// log Radon–Nikodym factor of a Girsanov-shifted run
    pub log_weight: Option<f64>,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.fields.len() - 1
    }

    pub fn terminal(&self) -> &Field {
        self.fields.last().expect("trajectory is never empty")
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.steps() as f64
    }
}

/// Per-step engine for `u^{m+1} = S(dt)[u^m + dt(−F̃(u^m) + g) + σ(t_m,u^m)·drive]`.
pub(crate) struct Stepper<'m> {
    pub(crate) model: &'m Model,
    ws: SpectralWorkspace,
    decay: Vec<f64>,
    v_weight: Vec<f64>,
    tamed: bool,
    record_norms: bool,
}

impl<'m> Stepper<'m> {
    pub(crate) fn new(model: &'m Model) -> Self {
        let dt = model.dt();
        let alpha = model.alpha;
        Self {
            model,
            ws: SpectralWorkspace::new(&model.grid),
            decay: model.grid.symbol(|k2| (-dt * k2.powf(alpha)).exp()),
            v_weight: model.grid.symbol(|k2| 1.0 + k2.powf(alpha)),
            tamed: model.tamed(),
            record_norms: model.record_norms,
        }
    }

    pub(crate) fn without_norms(mut self) -> Self {
        self.record_norms = false;
        self
    }

    #[inline]
    pub(crate) fn drift_value(&self, t: f64, u: f64) -> f64 {
        let f = self.model.drift.value(t, u);
        if self.tamed {
            f / (1.0 + self.model.dt() * f.abs())
        } else {
            f
        }
    }

    #[inline]
    pub(crate) fn drift_derivative(&self, t: f64, u: f64) -> f64 {
        let df = self.model.drift.derivative(t, u);
        if self.tamed {
            let f = self.model.drift.value(t, u);
            let d = 1.0 + self.model.dt() * f.abs();
            df / (d * d)
        } else {
            df
        }
    }

    /// Pre-multiplier state `w = u + dt(−F̃ + g) + σ(u)·drive` into `out`.
    pub(crate) fn explicit_part(&self, m: usize, u: &[f64], drive: &[f64], out: &mut [f64]) {
        let t = self.model.time.time(m);
        let dt = self.model.dt();
        for (o, &x) in out.iter_mut().zip(u) {
            *o = x - dt * self.drift_value(t, x);
        }
        if let Some(g) = &self.model.forcing {
            for (o, &gx) in out.iter_mut().zip(g.values()) {
                *o += dt * gx;
            }
        }
        self.model.noise.apply_add(t, u, drive, out);
    }

    /// Applies `S(dt)` in place.
    pub(crate) fn propagate(&mut self, values: &mut [f64]) {
        self.ws.apply(values, &self.decay);
    }

    pub(crate) fn step(&mut self, m: usize, u: &[f64], drive: &[f64], out: &mut [f64]) -> Result<()> {
        self.explicit_part(m, u, drive, out);
        self.propagate(out);
        if out.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::BlowUp { step: m + 1 })
        }
    }

    pub(crate) fn v_norm_sq(&mut self, u: &[f64]) -> f64 {
        self.ws.weighted_energy(u, &self.v_weight)
    }

    pub(crate) fn norms(&mut self, u: &Field) -> StepNorms {
        StepNorms {
            l2: u.l2_norm(),
            h_alpha: self.v_norm_sq(u.values()).sqrt(),
            lp: u.lp_norm_pow(self.model.drift.p.max(1.0)).powf(1.0 / self.model.drift.p.max(1.0)),
        }
    }

    /// Runs all steps with `drive(m, state, out)` filling the K-vector
    /// multiplying `σ(t_m, u^m)`.
    pub(crate) fn run(
        &mut self,
        u0: &Field,
        mut drive: impl FnMut(usize, &[f64], &mut [f64]),
    ) -> Result<Trajectory> {
        let model = self.model;
        let steps = model.time.steps();
        let grid = &model.grid;
        let mut fields = Vec::with_capacity(steps + 1);
        let mut norms = Vec::new();
        fields.push(u0.clone());
        if self.record_norms {
            norms.push(self.norms(u0));
        }
        let mut kvec = vec![0.0; model.modes()];
        let mut next = vec![0.0; grid.len()];
        for m in 0..steps {
            let u = fields[m].values();
            drive(m, u, &mut kvec);
            self.step(m, u, &kvec, &mut next)?;
            let f = Field::from_raw(grid, next.clone());
            if self.record_norms {
                norms.push(self.norms(&f));
            }
            fields.push(f);
        }
        Ok(Trajectory {
            grid: grid.clone(),
            dt: model.dt(),
            fields,
            norms,
            log_weight: None,
        })
    }
}

/// Solves the controlled equation for `v` from `u0`.
pub fn integrate_skeleton(model: &Model, u0: &Field, v: &Control) -> Result<Trajectory> {
    model.check_initial(u0)?;
    model.check_control(v)?;
    let dt = model.dt();
    Stepper::new(model).run(u0, |m, _, out| {
        for (o, &x) in out.iter_mut().zip(v.at(m)) {
            *o = dt * x;
        }
    })
}

/// Discrete distances between two trajectories on the same grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MapDistance {
    /// `max_m ‖u₁ᵐ − u₂ᵐ‖²`
    pub sup_l2_sq: f64,
    /// `Σ_{m<M} dt ‖u₁ᵐ − u₂ᵐ‖²_{H^α}`
    pub l2_v_sq: f64,
    /// `Σ_{m<M} dt ‖u₁ᵐ − u₂ᵐ‖_{L^p}^p`
    pub lp_pow: f64,
}

pub fn trajectory_distance(model: &Model, a: &Trajectory, b: &Trajectory) -> Result<MapDistance> {
    if a.fields.len() != b.fields.len() {
        return Err(Error::DimensionMismatch {
            what: "trajectory length",
            expected: a.fields.len(),
            found: b.fields.len(),
        });
    }
    let mut stepper = Stepper::new(model);
    let p = model.drift.p;
    let dt = a.dt;
    let mut out = MapDistance {
        sup_l2_sq: 0.0,
        l2_v_sq: 0.0,
        lp_pow: 0.0,
    };
    let last = a.fields.len() - 1;
    for (m, (fa, fb)) in a.fields.iter().zip(&b.fields).enumerate() {
        let d = fa.sub(fb)?;
        out.sup_l2_sq = out.sup_l2_sq.max(d.l2_norm_sq());
        if m < last {
            out.l2_v_sq += dt * stepper.v_norm_sq(d.values());
            out.lp_pow += dt * d.lp_norm_pow(p);
        }
    }
    Ok(out)
}

/// Distances between the skeleton solutions for `(u0₁, v₁)` and `(u0₂, v₂)`.
pub fn solution_map_distance(
    model: &Model,
    u01: &Field,
    u02: &Field,
    v1: &Control,
    v2: &Control,
) -> Result<MapDistance> {
    let a = integrate_skeleton(model, u01, v1)?;
    let b = integrate_skeleton(model, u02, v2)?;
    trajectory_distance(model, &a, &b)
}
