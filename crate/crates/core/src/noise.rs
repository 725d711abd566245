//! Mode-truncated multiplicative noise `σ(t,x,s) = σ₁(t,x) + κ(x)σ₂(t,x,s)`.
//!
//! Mode `k` acts on the state through `σ₁,ₖ(x)·m(t) + κ(x)·cₖ·φ(u(x))`,
//! where `φ` is the shared shape of the `σ₂` family and `m` a scalar time
//! envelope.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

// inherent float methods shadow these when std is linked
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::spectral::{dot, Field, Grid};

/// Shape of the state-dependent part `σ₂,ₖ(s) = cₖ·φ(s)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sigma2Family {
    Zero,
    /// `φ(s) = s`
    Linear,
    /// `φ(s) = sin s`
    Bounded,
}

impl Sigma2Family {
    #[inline]
    pub fn shape(self, s: f64) -> f64 {
        match self {
            Sigma2Family::Zero => 0.0,
            Sigma2Family::Linear => s,
            Sigma2Family::Bounded => s.sin(),
        }
    }

    #[inline]
    pub fn shape_derivative(self, s: f64) -> f64 {
        match self {
            Sigma2Family::Zero => 0.0,
            Sigma2Family::Linear => 1.0,
            Sigma2Family::Bounded => s.cos(),
        }
    }

    /// Declared `(αₖ, βₖ, γₖ)` for coefficient `c`.
    pub fn constants(self, c: f64) -> (f64, f64, f64) {
        let c = c.abs();
        match self {
            Sigma2Family::Zero => (0.0, 0.0, 0.0),
            Sigma2Family::Linear => (c, 0.0, c),
            Sigma2Family::Bounded => (c, c, 0.0),
        }
    }
}

/// Scalar time modulation applied to every `σ₁` mode.
#[derive(Clone, Default)]
pub enum Envelope {
    #[default]
    Constant,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Envelope {
    #[inline]
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Envelope::Constant => 1.0,
            Envelope::Custom(f) => f(t),
        }
    }
}

impl fmt::Debug for Envelope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Envelope::Constant => f.write_str("Constant"),
            Envelope::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// Spatial basis used to build default `σ₁` profiles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModeBasis {
    /// Unit-norm Fourier modes on the box: constant, `cos(ξ₁x)`, `sin(ξ₁x)`,
    /// `cos(ξ₂x)`, … along the first axis, starting at position `offset`.
    Fourier { offset: usize },
    /// The same trigonometric sequence with frequency `j/width`, multiplied by
    /// a Gaussian envelope of the given width, normalized to unit L² norm.
    Localized { offset: usize, width: f64 },
}

fn trig_mode(seq: usize, freq: f64, x0: f64) -> f64 {
    if seq == 0 {
        1.0
    } else {
        let j = seq.div_ceil(2) as f64;
        if seq % 2 == 1 {
            (j * freq * x0).cos()
        } else {
            (j * freq * x0).sin()
        }
    }
}

/// Unit-norm profile number `k` of a basis.
pub fn basis_profile(grid: &Grid, basis: ModeBasis, k: usize) -> Result<Field> {
    let raw = match basis {
        ModeBasis::Fourier { offset } => {
            let freq = core::f64::consts::PI / grid.half_width();
            Field::from_fn(grid, |x| trig_mode(offset + k, freq, x[0]))?
        }
        ModeBasis::Localized { offset, width } => {
            if !(width > 0.0) {
                return Err(Error::invalid("width", "envelope width must be positive"));
            }
            Field::from_fn(grid, |x| {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                trig_mode(offset + k, 1.0 / width, x[0]) * (-r2 / (2.0 * width * width)).exp()
            })?
        }
    };
    let norm = raw.l2_norm();
    if !(norm > 0.0) {
        return Err(Error::invalid("basis", "profile vanishes on this grid"));
    }
    Ok(raw.scaled(1.0 / norm))
}

/// Truncated noise operator with `K` modes.
#[derive(Clone, Debug)]
pub struct NoiseSpec {
    grid: Grid,
    sigma1: Vec<Field>,
    kappa: Field,
    family: Sigma2Family,
    coeffs: Vec<f64>,
    envelope: Envelope,
}

impl NoiseSpec {
    /// `sigma1[k]` already includes the amplitude `aₖ`; `coeffs[k]` is `cₖ`.
    pub fn new(sigma1: Vec<Field>, kappa: Field, family: Sigma2Family, coeffs: Vec<f64>) -> Result<Self> {
        if sigma1.is_empty() {
            return Err(Error::invalid("K", "at least one noise mode is required"));
        }
        if coeffs.len() != sigma1.len() {
            return Err(Error::DimensionMismatch {
                what: "sigma2 coefficients",
                expected: sigma1.len(),
                found: coeffs.len(),
            });
        }
        let grid = kappa.grid().clone();
        if sigma1.iter().any(|f| *f.grid() != grid) {
            return Err(Error::GridMismatch);
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite { what: "sigma2 coefficients" });
        }
        Ok(Self {
            grid,
            sigma1,
            kappa,
            family,
            coeffs,
            envelope: Envelope::Constant,
        })
    }

    /// Default construction: `aₖ = amplitude·(k+1)^{−r}` on the given basis,
    /// `cₖ = sigma2_amplitude·(k+1)^{−r}`.
    pub fn from_basis(
        grid: &Grid,
        modes: usize,
        basis: ModeBasis,
        amplitude: f64,
        decay: f64,
        kappa: Field,
        family: Sigma2Family,
        sigma2_amplitude: f64,
    ) -> Result<Self> {
        if modes == 0 {
            return Err(Error::invalid("K", "at least one noise mode is required"));
        }
        let mut sigma1 = Vec::with_capacity(modes);
        let mut coeffs = Vec::with_capacity(modes);
        for k in 0..modes {
            let w = ((k + 1) as f64).powf(-decay);
            sigma1.push(basis_profile(grid, basis, k)?.scaled(amplitude * w));
            coeffs.push(sigma2_amplitude * w);
        }
        Self::new(sigma1, kappa, family, coeffs)
    }

    /// Additive noise only.
    pub fn additive(sigma1: Vec<Field>) -> Result<Self> {
        let grid = sigma1
            .first()
            .ok_or_else(|| Error::invalid("K", "at least one noise mode is required"))?
            .grid()
            .clone();
        let k = sigma1.len();
        Self::new(sigma1, Field::zeros(&grid), Sigma2Family::Zero, vec![0.0; k])
    }

    pub fn with_envelope(mut self, envelope: Envelope) -> Self {
        self.envelope = envelope;
        self
    }

    pub fn modes(&self) -> usize {
        self.sigma1.len()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn sigma1(&self) -> &[Field] {
        &self.sigma1
    }

    pub fn kappa(&self) -> &Field {
        &self.kappa
    }

    pub fn family(&self) -> Sigma2Family {
        self.family
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn envelope(&self) -> &Envelope {
        &self.envelope
    }

    fn multiplicative(&self) -> bool {
        self.family != Sigma2Family::Zero && self.coeffs.iter().any(|&c| c != 0.0)
    }

    fn check_field(&self, u: &Field) -> Result<()> {
        if *u.grid() == self.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    fn check_modes(&self, v: &[f64]) -> Result<()> {
        if v.len() == self.modes() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                what: "control vector",
                expected: self.modes(),
                found: v.len(),
            })
        }
    }

    /// `out += σ(t,u)v`, raw slices, no checks.
    pub(crate) fn apply_add(&self, t: f64, u: &[f64], v: &[f64], out: &mut [f64]) {
        let m = self.envelope.at(t);
        for (profile, &vk) in self.sigma1.iter().zip(v) {
            let s = m * vk;
            if s != 0.0 {
                for (o, &p) in out.iter_mut().zip(profile.values()) {
                    *o += s * p;
                }
            }
        }
        if self.multiplicative() {
            let cv = dot(&self.coeffs, v);
            if cv != 0.0 {
                for ((o, &kap), &ux) in out.iter_mut().zip(self.kappa.values()).zip(u) {
                    *o += kap * self.family.shape(ux) * cv;
                }
            }
        }
    }

    /// `out[k] = ⟨σ₁,ₖ m(t) + cₖ κ φ(u), q⟩`, raw slices.
    pub(crate) fn adjoint_into(&self, t: f64, u: &[f64], q: &[f64], out: &mut [f64]) {
        let h = self.grid.cell_volume();
        let m = self.envelope.at(t);
        for (o, profile) in out.iter_mut().zip(&self.sigma1) {
            *o = m * h * dot(profile.values(), q);
        }
        if self.multiplicative() {
            let state_part: f64 = self
                .kappa
                .values()
                .iter()
                .zip(u)
                .zip(q)
                .map(|((&kap, &ux), &qx)| kap * self.family.shape(ux) * qx)
                .sum::<f64>()
                * h;
            for (o, &c) in out.iter_mut().zip(&self.coeffs) {
                *o += c * state_part;
            }
        }
    }

    /// Derivative of `σ(t,u)v` in `u`, as a pointwise multiplier:
    /// `κ(x)φ'(u(x))·Σₖ cₖvₖ`. Returns `false` when it vanishes identically.
    pub(crate) fn state_derivative(&self, u: &[f64], v: &[f64], out: &mut [f64]) -> bool {
        if !self.multiplicative() {
            return false;
        }
        let cv = dot(&self.coeffs, v);
        if cv == 0.0 {
            return false;
        }
        for ((o, &kap), &ux) in out.iter_mut().zip(self.kappa.values()).zip(u) {
            *o = kap * self.family.shape_derivative(ux) * cv;
        }
        true
    }

    /// `σ(t,u)v = Σₖ (σ₁,ₖ(x) + κ(x)σ₂,ₖ(u(x))) vₖ`.
    pub fn apply_sigma(&self, t: f64, u: &Field, v: &[f64]) -> Result<Field> {
        self.check_field(u)?;
        self.check_modes(v)?;
        let mut out = vec![0.0; self.grid.len()];
        self.apply_add(t, u.values(), v, &mut out);
        Field::new(&self.grid, out)
    }

    /// Adjoint `σ(t,u)* q ∈ ℝ^K`.
    pub fn adjoint_sigma(&self, t: f64, u: &Field, q: &Field) -> Result<Vec<f64>> {
        self.check_field(u)?;
        self.check_field(q)?;
        let mut out = vec![0.0; self.modes()];
        self.adjoint_into(t, u.values(), q.values(), &mut out);
        Ok(out)
    }

    /// Mode `k` of `σ(t,u)` as a field.
    pub fn mode_field(&self, t: f64, u: &Field, k: usize) -> Result<Field> {
        let mut e = vec![0.0; self.modes()];
        *e.get_mut(k).ok_or(Error::DimensionMismatch {
            what: "mode index",
            expected: self.modes(),
            found: k,
        })? = 1.0;
        self.apply_sigma(t, u, &e)
    }

    pub(crate) fn hs_norm_sq_raw(&self, t: f64, u: &[f64]) -> f64 {
        let h = self.grid.cell_volume();
        let m = self.envelope.at(t);
        let multiplicative = self.multiplicative();
        let mut total = 0.0;
        for (profile, &c) in self.sigma1.iter().zip(&self.coeffs) {
            let s: f64 = if multiplicative && c != 0.0 {
                profile
                    .values()
                    .iter()
                    .zip(self.kappa.values())
                    .zip(u)
                    .map(|((&p, &kap), &ux)| {
                        let v = m * p + c * kap * self.family.shape(ux);
                        v * v
                    })
                    .sum()
            } else {
                profile.values().iter().map(|p| m * m * p * p).sum()
            };
            total += s * h;
        }
        total
    }

    /// `‖σ(t,u)‖²_HS = Σₖ ‖σ₁,ₖ + κσ₂,ₖ(u)‖²`.
    pub fn hs_norm_sq(&self, t: f64, u: &Field) -> Result<f64> {
        self.check_field(u)?;
        Ok(self.hs_norm_sq_raw(t, u.values()))
    }

    /// `L₁ = 4‖κ‖²Σβₖ² + 4‖κ‖²_∞Σγₖ²`.
    pub fn l1_constant(&self) -> f64 {
        let (mut b2, mut g2) = (0.0, 0.0);
        for &c in &self.coeffs {
            let (_, b, g) = self.family.constants(c);
            b2 += b * b;
            g2 += g * g;
        }
        let k_inf = self.kappa.sup_norm();
        4.0 * self.kappa.l2_norm_sq() * b2 + 4.0 * k_inf * k_inf * g2
    }

    /// Right-hand side of the Hilbert–Schmidt growth bound,
    /// `L₁(1 + ‖u‖²) + 2Σ‖σ₁,ₖ(t)‖²`.
    pub fn hs_bound(&self, t: f64, u: &Field) -> Result<f64> {
        self.check_field(u)?;
        let m = self.envelope.at(t);
        let s1: f64 = self.sigma1.iter().map(|f| m * m * f.l2_norm_sq()).sum();
        Ok(self.l1_constant() * (1.0 + u.l2_norm_sq()) + 2.0 * s1)
    }

    /// `‖σ(t,u₁) − σ(t,u₂)‖²_HS − ‖κ‖²_∞‖u₁ − u₂‖²Σαₖ²`; must be `≤ 0`.
    pub fn lipschitz_check(&self, _t: f64, u1: &Field, u2: &Field) -> Result<f64> {
        self.check_field(u1)?;
        self.check_field(u2)?;
        let h = self.grid.cell_volume();
        let diff_sq: f64 = self
            .kappa
            .values()
            .iter()
            .zip(u1.values().iter().zip(u2.values()))
            .map(|(&kap, (&a, &b))| {
                let d = kap * (self.family.shape(a) - self.family.shape(b));
                d * d
            })
            .sum::<f64>()
            * h;
        let c2: f64 = self.coeffs.iter().map(|c| c * c).sum();
        let lhs = c2 * diff_sq;
        let a2: f64 = self
            .coeffs
            .iter()
            .map(|&c| {
                let (a, _, _) = self.family.constants(c);
                a * a
            })
            .sum();
        let k_inf = self.kappa.sup_norm();
        let bound = k_inf * k_inf * u1.sub(u2)?.l2_norm_sq() * a2;
        Ok(lhs - bound)
    }

    /// Summability data for the declared constants.
    pub fn summability(&self) -> Summability {
        let mut partial = Vec::with_capacity(self.modes());
        let mut acc = 0.0;
        let mut hs = Vec::with_capacity(self.modes());
        let mut hs_acc = 0.0;
        for (c, f) in self.coeffs.iter().zip(&self.sigma1) {
            let (a, b, g) = self.family.constants(*c);
            acc += a * a + b * b + g * g;
            partial.push(acc);
            hs_acc += f.l2_norm_sq();
            hs.push(hs_acc);
        }
        Summability {
            constant_sum: acc,
            constant_partial_sums: partial,
            sigma1_partial_sums: hs,
        }
    }

    /// Samples `σ₂` shape bounds over `s ∈ [−range, range]`.
    /// Returns worst margins for the Lipschitz and growth conditions.
    pub fn check_sigma2(&self, range: f64, samples: usize) -> Result<(f64, f64)> {
        if samples < 2 {
            return Err(Error::EmptySample("sigma2 sample cloud"));
        }
        let pts: Vec<f64> = (0..samples)
            .map(|i| -range + 2.0 * range * i as f64 / (samples - 1) as f64)
            .collect();
        let mut lip = f64::INFINITY;
        let mut growth = f64::INFINITY;
        for &c in &self.coeffs {
            let (a, b, g) = self.family.constants(c);
            for &s in &pts {
                let v = c * self.family.shape(s);
                growth = growth.min(b + g * s.abs() - v.abs());
                for &s2 in &pts {
                    let v2 = c * self.family.shape(s2);
                    lip = lip.min(a * (s - s2).abs() - (v - v2).abs());
                }
            }
        }
        Ok((lip, growth))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summability {
    /// `Σ (αₖ² + βₖ² + γₖ²)`
    pub constant_sum: f64,
    pub constant_partial_sums: Vec<f64>,
    /// partial sums of `Σ‖σ₁,ₖ‖²`
    pub sigma1_partial_sums: Vec<f64>,
}
