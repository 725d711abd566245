//! Polynomial reaction drift `F(t, x, u)` and sampled checks of its
//! structural conditions.
//!
//! The canonical family is `F(u) = a|u|^{p-2}u - b·u`. The `ψ` functions
//! of the structural conditions are represented by constant envelopes.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

// inherent float methods shadow these when std is linked
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::spectral::Field;

/// A user-supplied pointwise drift. `x`-dependence is not modelled.
pub trait PointwiseDrift: Send + Sync {
    fn value(&self, t: f64, u: f64) -> f64;
    fn derivative(&self, t: f64, u: f64) -> f64;
}

/// Constants declared for the structural conditions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriftConstants {
    /// coercivity: `F(u)u ≥ λ₁|u|^p − ψ₁`
    pub lambda1: f64,
    pub psi1: f64,
    /// local Lipschitz: `|F(u₁)−F(u₂)| ≤ λ₂(ψ₂ + |u₁|^{p−2} + |u₂|^{p−2})|u₁−u₂|`
    pub lambda2: f64,
    pub psi2: f64,
    /// one-sided derivative bound: `∂F/∂u ≥ −ψ₃`
    pub psi3: f64,
    /// growth: `|F(u)| ≤ λ₃|u|^{p−1} + ψ₄`
    pub lambda3: f64,
    pub psi4: f64,
    /// strong dissipativeness: `(F(u₁)−F(u₂))(u₁−u₂) ≥ λ₄|u₁−u₂|^p − ψ₅|u₁−u₂|²`
    pub lambda4: f64,
    pub psi5: f64,
}

#[derive(Clone)]
enum Evaluator {
    Canonical,
    Custom(Arc<dyn PointwiseDrift>),
}

/// Drift specification: exponent, coefficients, declared constants and the
/// pointwise evaluator.
#[derive(Clone)]
pub struct DriftSpec {
    pub p: f64,
    pub a: f64,
    pub b: f64,
    pub constants: DriftConstants,
    evaluator: Evaluator,
}

impl fmt::Debug for DriftSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DriftSpec")
            .field("p", &self.p)
            .field("a", &self.a)
            .field("b", &self.b)
            .field("constants", &self.constants)
            .field("custom", &matches!(self.evaluator, Evaluator::Custom(_)))
            .finish()
    }
}

impl DriftSpec {
    /// `F(u) = a|u|^{p−2}u − b·u` with constants derived from `(p, a, b)`.
    ///
    /// The derived constants carry a small slack so that sampled margins stay
    /// strictly non-negative under rounding.
    pub fn canonical(p: f64, a: f64, b: f64) -> Result<Self> {
        if !(p >= 2.0 && p.is_finite()) {
            return Err(Error::invalid("p", "drift exponent must be at least 2"));
        }
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::invalid("a/b", "coefficients must be finite"));
        }
        Ok(Self {
            p,
            a,
            b,
            constants: canonical_constants(p, a, b),
            evaluator: Evaluator::Canonical,
        })
    }

    /// Linear drift `F(u) = c·u` (the `p = 2` member of the family).
    pub fn linear(c: f64) -> Result<Self> {
        Self::canonical(2.0, c, 0.0)
    }

    /// The zero drift.
    pub fn zero() -> Self {
        Self::canonical(2.0, 0.0, 0.0).expect("zero drift is valid")
    }

    /// Custom evaluator with declared exponent and constants.
    pub fn custom(p: f64, constants: DriftConstants, drift: Arc<dyn PointwiseDrift>) -> Result<Self> {
        if !(p >= 2.0 && p.is_finite()) {
            return Err(Error::invalid("p", "drift exponent must be at least 2"));
        }
        Ok(Self {
            p,
            a: f64::NAN,
            b: f64::NAN,
            constants,
            evaluator: Evaluator::Custom(drift),
        })
    }

    pub fn with_constants(mut self, constants: DriftConstants) -> Self {
        self.constants = constants;
        self
    }

    pub fn is_canonical(&self) -> bool {
        matches!(self.evaluator, Evaluator::Canonical)
    }

    /// `ψ₃`-type envelope.
    pub fn psi3_bound(&self) -> f64 {
        self.constants.psi3
    }

    /// `ψ₁`-type envelope.
    pub fn psi1_bound(&self) -> f64 {
        self.constants.psi1
    }

    #[inline]
    pub fn value(&self, t: f64, u: f64) -> f64 {
        match &self.evaluator {
            Evaluator::Canonical => {
                if self.p == 2.0 {
                    (self.a - self.b) * u
                } else if self.p == 4.0 {
                    self.a * u * u * u - self.b * u
                } else {
                    self.a * u.abs().powf(self.p - 2.0) * u - self.b * u
                }
            }
            Evaluator::Custom(d) => d.value(t, u),
        }
    }

    #[inline]
    pub fn derivative(&self, t: f64, u: f64) -> f64 {
        match &self.evaluator {
            Evaluator::Canonical => {
                if self.p == 2.0 {
                    self.a - self.b
                } else if self.p == 4.0 {
                    3.0 * self.a * u * u - self.b
                } else {
                    self.a * (self.p - 1.0) * u.abs().powf(self.p - 2.0) - self.b
                }
            }
            Evaluator::Custom(d) => d.derivative(t, u),
        }
    }
}

fn canonical_constants(p: f64, a: f64, b: f64) -> DriftConstants {
    let aa = a.abs();
    let bb = b.abs();
    let lambda1 = if p > 2.0 { aa / 2.0 } else { (a - b).abs() };
    // min over r of (|a|/2) r^p − b r²
    let psi1 = if p > 2.0 && b > 0.0 && aa > 0.0 {
        let r2 = (4.0 * b / (aa * p)).powf(2.0 / (p - 2.0));
        1.01 * b * (1.0 - 2.0 / p) * r2
    } else {
        0.0
    };
    let lambda2 = (1.01 * aa * (p - 1.0)).max(f64::MIN_POSITIVE);
    DriftConstants {
        lambda1,
        psi1,
        lambda2,
        psi2: 1.01 * bb / lambda2,
        psi3: b.max(0.0),
        lambda3: aa + bb,
        psi4: bb,
        lambda4: 0.99 * aa * 2f64.powf(2.0 - p),
        psi5: b.max(0.0),
    }
}

/// Pointwise `F(t, x, f(x))`.
pub fn eval_f(spec: &DriftSpec, t: f64, f: &Field) -> Result<Field> {
    let values: Vec<f64> = f.values().iter().map(|&u| spec.value(t, u)).collect();
    Field::new(f.grid(), values).map_err(|_| Error::NonFinite { what: "drift output" })
}

/// Pointwise `∂F/∂u(t, x, f(x))`.
pub fn eval_df(spec: &DriftSpec, t: f64, f: &Field) -> Result<Field> {
    let values: Vec<f64> = f.values().iter().map(|&u| spec.derivative(t, u)).collect();
    Field::new(f.grid(), values).map_err(|_| Error::NonFinite {
        what: "drift derivative output",
    })
}

/// Ranges and counts of the deterministic sample cloud.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSpec {
    pub t_range: (f64, f64),
    pub u_range: (f64, f64),
    pub t_samples: usize,
    pub u_samples: usize,
    /// points per axis of the `(u₁, u₂)` pair lattice
    pub pair_samples: usize,
}

impl Default for SampleSpec {
    fn default() -> Self {
        Self {
            t_range: (0.0, 1.0),
            u_range: (-10.0, 10.0),
            t_samples: 3,
            u_samples: 2001,
            pair_samples: 201,
        }
    }
}

/// Worst-case margin of one condition over the sample cloud.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionMargin {
    pub name: String,
    /// `min (rhs-bound slack)`; negative means violated
    pub margin: f64,
    /// sample at which the minimum was attained
    pub worst_at: (f64, f64),
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    pub conditions: Vec<ConditionMargin>,
    /// `min [(F(u₁)−F(u₂))(u₁−u₂) + ψ₅|u₁−u₂|²] / |u₁−u₂|^p`
    pub empirical_lambda4: f64,
}

impl ConditionReport {
    pub fn all_hold(&self) -> bool {
        self.conditions.iter().all(|c| c.holds)
    }

    pub fn get(&self, name: &str) -> Option<&ConditionMargin> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

// relative rounding allowance when classifying a margin
const ROUNDING: f64 = 1e-12;

struct Worst {
    margin: f64,
    scale: f64,
    at: (f64, f64),
}

impl Worst {
    fn new() -> Self {
        Self {
            margin: f64::INFINITY,
            scale: 0.0,
            at: (0.0, 0.0),
        }
    }

    fn push(&mut self, margin: f64, scale: f64, at: (f64, f64)) {
        if margin < self.margin || margin.is_nan() {
            self.margin = margin;
            self.scale = scale;
            self.at = at;
        }
    }

    fn finish(self, name: &str) -> ConditionMargin {
        ConditionMargin {
            name: String::from(name),
            margin: self.margin,
            worst_at: self.at,
            holds: self.margin >= -ROUNDING * (1.0 + self.scale),
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> + Clone {
    (0..n).map(move |i| {
        if n == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    })
}

/// Samples every structural condition and reports worst-case margins.
///
/// Conditions: `F1` (vanishing at zero), `F2` (coercivity), `F3` (local
/// Lipschitz), `F4` (derivative lower bound), `F5` (growth), `F6`
/// (derivative growth) and `Fa` (strong dissipativeness).
pub fn check_conditions(spec: &DriftSpec, sample: &SampleSpec) -> Result<ConditionReport> {
    if sample.t_samples == 0 || sample.u_samples == 0 || sample.pair_samples < 2 {
        return Err(Error::EmptySample("drift condition sample cloud"));
    }
    let p = spec.p;
    let c = spec.constants;
    let (t0, t1) = sample.t_range;
    let (u0, u1) = sample.u_range;
    let ts = linspace(t0, t1, sample.t_samples);

    let mut f1 = Worst::new();
    let mut f2 = Worst::new();
    let mut f3 = Worst::new();
    let mut f4 = Worst::new();
    let mut f5 = Worst::new();
    let mut f6 = Worst::new();
    let mut fa = Worst::new();
    let mut lambda4 = f64::INFINITY;

    for t in ts {
        let at0 = spec.value(t, 0.0);
        f1.push(-at0.abs(), 0.0, (t, 0.0));
        for u in linspace(u0, u1, sample.u_samples) {
            let f = spec.value(t, u);
            let df = spec.derivative(t, u);
            let up = u.abs().powf(p);
            let lhs2 = f * u;
            f2.push(lhs2 - c.lambda1 * up + c.psi1, lhs2.abs() + c.lambda1 * up, (t, u));
            f4.push(df + c.psi3, df.abs() + c.psi3, (t, u));
            let g5 = c.lambda3 * u.abs().powf(p - 1.0) + c.psi4;
            f5.push(g5 - f.abs(), g5 + f.abs(), (t, u));
            let g6 = c.lambda2 * (c.psi2 + 2.0 * u.abs().powf(p - 2.0));
            f6.push(g6 - df.abs(), g6 + df.abs(), (t, u));
        }
        let pairs: Vec<f64> = linspace(u0, u1, sample.pair_samples).collect();
        for &x in &pairs {
            let fx = spec.value(t, x);
            for &y in &pairs {
                if x == y {
                    continue;
                }
                let fy = spec.value(t, y);
                let d = x - y;
                let ad = d.abs();
                let diff = fx - fy;
                let bound3 = c.lambda2 * (c.psi2 + x.abs().powf(p - 2.0) + y.abs().powf(p - 2.0)) * ad;
                f3.push(bound3 - diff.abs(), bound3 + diff.abs(), (x, y));
                let mono = diff * d;
                let dp = ad.powf(p);
                fa.push(
                    mono - c.lambda4 * dp + c.psi5 * d * d,
                    mono.abs() + c.lambda4 * dp,
                    (x, y),
                );
                lambda4 = lambda4.min((mono + c.psi5 * d * d) / dp);
            }
        }
    }

    Ok(ConditionReport {
        conditions: alloc::vec![
            f1.finish("F1"),
            f2.finish("F2"),
            f3.finish("F3"),
            f4.finish("F4"),
            f5.finish("F5"),
            f6.finish("F6"),
            fa.finish("Fa"),
        ],
        empirical_lambda4: lambda4,
    })
}
