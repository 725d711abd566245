//! Rare-event probabilities by naive and importance-sampled Monte Carlo.
//!
//! Sample `i` of every estimator is driven by `NoiseStream::new(seed, i, K)`
//! and reductions run in index order, so an estimate depends only on its
//! inputs and not on the executor.

use alloc::vec::Vec;

// inherent float methods shadow these when std is linked
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::rng::NoiseStream;
use crate::skeleton::{Control, Model, Trajectory};
use crate::spde::{simulate_shifted, simulate_spde};
use crate::spectral::Field;

/// Borel sets instantiated on discrete trajectories.
#[derive(Clone, Debug, PartialEq)]
pub enum EventSpec {
    /// the whole path space
    Always,
    /// the empty set
    Never,
    /// `⟨u^M, profile⟩ ≥ level`
    TerminalThreshold { profile: Field, level: f64 },
    /// `max_m ‖uᵐ − referenceᵐ‖ > radius`
    TubeExit { reference: Vec<Field>, radius: f64 },
    /// `‖u^M − center‖ < radius`
    TerminalBall { center: Field, radius: f64 },
}

impl EventSpec {
    pub fn occurs(&self, traj: &Trajectory) -> Result<bool> {
        match self {
            EventSpec::Always => Ok(true),
            EventSpec::Never => Ok(false),
            EventSpec::TerminalThreshold { profile, level } => Ok(traj.terminal().inner(profile)? >= *level),
            EventSpec::TubeExit { reference, radius } => {
                if reference.len() != traj.fields.len() {
                    return Err(Error::DimensionMismatch {
                        what: "tube reference length",
                        expected: traj.fields.len(),
                        found: reference.len(),
                    });
                }
                for (u, r) in traj.fields.iter().zip(reference) {
                    if u.sub(r)?.l2_norm() > *radius {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            EventSpec::TerminalBall { center, radius } => Ok(traj.terminal().sub(center)?.l2_norm() < *radius),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MCEstimate {
    pub p_hat: f64,
    /// `ln p̂`, or `ln(1/N)` when no sample hit (see `upper_bound`)
    pub log_p_hat: f64,
    pub std_error: f64,
    /// `(Σwᵢ)²/Σwᵢ²` over the weighted indicators `wᵢ = 1_B·ρᵢ`
    pub ess: f64,
    pub samples: usize,
    pub hits: usize,
    pub eps: f64,
    pub seed: u64,
    /// zero count: `log_p_hat` is only a one-sided bound
    pub upper_bound: bool,
    /// `ess < 10`
    pub degenerate: bool,
    /// solver failures, counted as misses
    pub blowups: usize,
}

impl MCEstimate {
    /// Normal-approximation interval for `p`, clipped to `[0, 1]`.
    pub fn interval(&self, z: f64) -> (f64, f64) {
        (
            (self.p_hat - z * self.std_error).max(0.0),
            (self.p_hat + z * self.std_error).min(1.0),
        )
    }

    /// `−ε ln p̂` with the matching interval `(lo, hi)` from [`Self::interval`].
    pub fn rate_estimate(&self, z: f64) -> (f64, f64, f64) {
        let (lo, hi) = self.interval(z);
        let f = |p: f64| if p > 0.0 { -self.eps * p.ln() } else { f64::INFINITY };
        (-self.eps * self.log_p_hat, f(hi), f(lo))
    }
}

const DEGENERATE_ESS: f64 = 10.0;

fn check_common(eps: f64, samples: usize) -> Result<()> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::invalid("epsilon", "noise intensity must be non-negative"));
    }
    if samples < 100 {
        return Err(Error::invalid("samples", "need at least 100 samples"));
    }
    Ok(())
}

/// Per-sample `(hit, log weight)`; solver blow-ups come back as `None`.
fn reduce(outcomes: &[Option<(bool, f64)>], eps: f64, seed: u64) -> MCEstimate {
    let n = outcomes.len();
    let nf = n as f64;
    let blowups = outcomes.iter().filter(|o| o.is_none()).count();
    let hits_iter = || outcomes.iter().flatten().filter(|(hit, _)| *hit).map(|(_, lw)| *lw);
    let hits = hits_iter().count();
    let lmax = hits_iter().fold(f64::NEG_INFINITY, f64::max);
    let (p_hat, log_p_hat, std_error, ess, upper_bound) = if hits == 0 || !lmax.is_finite() {
        (0.0, -nf.ln(), 0.0, 0.0, true)
    } else {
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for lw in hits_iter() {
            let w = (lw - lmax).exp();
            s1 += w;
            s2 += w * w;
        }
        let scale = lmax.exp();
        let mean = s1 / nf;
        let var = (s2 / nf - mean * mean).max(0.0);
        (
            (mean * scale).min(1.0),
            lmax + s1.ln() - nf.ln(),
            (var / nf).sqrt() * scale,
            s1 * s1 / s2,
            false,
        )
    };
    MCEstimate {
        p_hat,
        log_p_hat,
        std_error,
        ess,
        samples: n,
        hits,
        eps,
        seed,
        upper_bound,
        degenerate: ess < DEGENERATE_ESS,
        blowups,
    }
}

fn quiet(model: &Model) -> Model {
    model.clone().with_norms(false)
}

/// `p̂ = N⁻¹ Σ 1_B(uᵢ)` over `samples` paths of the unshifted equation.
pub fn estimate_naive<E: Executor>(
    exec: &E,
    model: &Model,
    u0: &Field,
    event: &EventSpec,
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<MCEstimate> {
    check_common(eps, samples)?;
    model.check_initial(u0)?;
    let model = quiet(model);
    let k = model.modes();
    let outcomes = exec.map_indexed(samples, |i| -> Result<Option<(bool, f64)>> {
        let mut stream = NoiseStream::new(seed, i as u64, k);
        match simulate_spde(&model, u0, eps, &mut stream) {
            Ok(tr) => Ok(Some((event.occurs(&tr)?, 0.0))),
            Err(Error::BlowUp { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    });
    let outcomes: Vec<_> = outcomes.into_iter().collect::<Result<_>>()?;
    Ok(reduce(&outcomes, eps, seed))
}

/// `p̂ = N⁻¹ Σ 1_B(ũᵢ)·exp(log ρᵢ)` with `ũᵢ` sampled under the dynamics
/// shifted by `tilt`. A zero tilt reproduces [`estimate_naive`].
#[allow(clippy::too_many_arguments)]
pub fn estimate_is<E: Executor>(
    exec: &E,
    model: &Model,
    u0: &Field,
    event: &EventSpec,
    eps: f64,
    tilt: &Control,
    samples: usize,
    seed: u64,
) -> Result<MCEstimate> {
    check_common(eps, samples)?;
    if eps == 0.0 {
        return Err(Error::invalid("epsilon", "importance sampling needs positive noise"));
    }
    model.check_initial(u0)?;
    model.check_control(tilt)?;
    let model = quiet(model);
    let k = model.modes();
    let outcomes = exec.map_indexed(samples, |i| -> Result<Option<(bool, f64)>> {
        let mut stream = NoiseStream::new(seed, i as u64, k);
        match simulate_shifted(&model, u0, eps, tilt, &mut stream) {
            Ok(tr) => {
                let lw = tr.log_weight.unwrap_or(0.0);
                Ok(Some((event.occurs(&tr)?, lw)))
            }
            Err(Error::BlowUp { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    });
    let outcomes: Vec<_> = outcomes.into_iter().collect::<Result<_>>()?;
    Ok(reduce(&outcomes, eps, seed))
}

/// Sample mean and standard error of `exp(log ρ)` under the shifted law.
/// Equals one in expectation for every tilt.
pub fn girsanov_mean<E: Executor>(
    exec: &E,
    model: &Model,
    u0: &Field,
    eps: f64,
    tilt: &Control,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let est = estimate_is(exec, model, u0, &EventSpec::Always, eps, tilt, samples, seed)?;
    Ok((est.p_hat_unclipped(), est.std_error))
}

impl MCEstimate {
    fn p_hat_unclipped(&self) -> f64 {
        if self.upper_bound {
            0.0
        } else {
            self.log_p_hat.exp()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub eps: f64,
    pub estimate: MCEstimate,
    pub neg_eps_log_p: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub importance_sampled: bool,
    /// degenerate weights or zero count: left out of the fit
    pub excluded: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// fit `ε ln p̂ ≈ intercept + slope·ε`
    pub intercept: f64,
    pub slope: f64,
    /// `−intercept`
    pub limit: f64,
    /// reference action, when supplied
    pub action: Option<f64>,
    /// `|limit − action|/action`
    pub relative_gap: Option<f64>,
    /// `−ε ln p̂` is non-increasing toward the action as ε decreases
    pub monotone: bool,
}

#[derive(Clone, Debug)]
pub struct SweepSettings {
    pub eps_list: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    /// interval half-width in standard errors
    pub z: f64,
}

/// Estimates `P(u^ε ∈ B)` for every `ε` (importance-sampled when `tilt` is
/// given), then extrapolates `ε ln p̂` linearly in `ε` to `ε = 0`.
pub fn ldp_sweep<E: Executor>(
    exec: &E,
    model: &Model,
    u0: &Field,
    event: &EventSpec,
    settings: &SweepSettings,
    tilt: Option<&Control>,
    action: Option<f64>,
) -> Result<SweepResult> {
    let eps = &settings.eps_list;
    if eps.len() < 3 {
        return Err(Error::invalid("eps_list", "need at least three values"));
    }
    if eps.windows(2).any(|w| !(w[1] < w[0])) || eps.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::invalid("eps_list", "must be positive and strictly decreasing"));
    }
    let mut rows = Vec::with_capacity(eps.len());
    for &e in eps {
        let estimate = match tilt {
            Some(v) => estimate_is(exec, model, u0, event, e, v, settings.samples, settings.seed)?,
            None => estimate_naive(exec, model, u0, event, e, settings.samples, settings.seed)?,
        };
        let (r, lo, hi) = estimate.rate_estimate(settings.z);
        rows.push(SweepRow {
            eps: e,
            neg_eps_log_p: r,
            ci_lo: lo,
            ci_hi: hi,
            importance_sampled: tilt.is_some(),
            excluded: estimate.degenerate || estimate.upper_bound,
            estimate,
        });
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| !r.excluded)
        .map(|r| (r.eps, -r.neg_eps_log_p))
        .collect();
    let (intercept, slope) = linear_fit(&pts)?;
    let limit = -intercept;
    let relative_gap = action.map(|a| (limit - a).abs() / a.abs().max(f64::MIN_POSITIVE));
    let monotone = match action {
        Some(a) => rows
            .iter()
            .filter(|r| !r.excluded)
            .map(|r| (r.neg_eps_log_p - a).abs())
            .collect::<Vec<_>>()
            .windows(2)
            .all(|w| w[1] <= w[0]),
        None => true,
    };
    Ok(SweepResult {
        rows,
        intercept,
        slope,
        limit,
        action,
        relative_gap,
        monotone,
    })
}

/// Least-squares line `y ≈ a + b·x`; returns `(a, b)`.
pub fn linear_fit(pts: &[(f64, f64)]) -> Result<(f64, f64)> {
    if pts.len() < 2 {
        return Err(Error::EmptySample("fewer than two usable sweep points"));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("eps_list", "abscissae coincide"));
    }
    let b = sxy / sxx;
    Ok((my - b * mx, b))
}
