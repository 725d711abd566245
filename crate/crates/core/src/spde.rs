//! Stochastic exponential Euler–Maruyama for
//! `du + (−Δ)^α u dt + F(t,u) dt = g dt + √ε σ(t,u) dW`,
//! its Girsanov-shifted variant, and the discrete energy balance.

use alloc::vec;
use alloc::vec::Vec;

// inherent float methods shadow these when std is linked
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::rng::NoiseStream;
use crate::skeleton::{Control, Model, Stepper, Trajectory};
use crate::spectral::{dot, Field, SpectralWorkspace};

fn check_eps(eps: f64) -> Result<()> {
    if eps >= 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("epsilon", "noise intensity must be non-negative"))
    }
}

/// One sample path driven by `stream`.
pub fn simulate_spde(model: &Model, u0: &Field, eps: f64, stream: &mut NoiseStream) -> Result<Trajectory> {
    check_eps(eps)?;
    model.check_initial(u0)?;
    let dt = model.dt();
    let amp = eps.sqrt();
    Stepper::new(model).run(u0, |m, _, out| {
        stream.increments(m, dt, out);
        for o in out.iter_mut() {
            *o *= amp;
        }
    })
}

/// Sample path of the equation with extra drift `σ(t,u)v`, carrying the
/// log-likelihood ratio
/// `log ρ = −ε^{−1/2} Σ_m Σ_k vₖᵐ ΔWₖᵐ − (2ε)^{−1} Σ_m dt Σ_k (vₖᵐ)²`.
///
/// If `B` is an event of the unshifted dynamics, `E[1_B(shifted)·e^{log ρ}]`
/// equals its probability.
pub fn simulate_shifted(
    model: &Model,
    u0: &Field,
    eps: f64,
    v: &Control,
    stream: &mut NoiseStream,
) -> Result<Trajectory> {
    check_eps(eps)?;
    if eps == 0.0 {
        return Err(Error::invalid(
            "epsilon",
            "the likelihood ratio is undefined at zero noise",
        ));
    }
    model.check_initial(u0)?;
    model.check_control(v)?;
    let dt = model.dt();
    let amp = eps.sqrt();
    let mut linear = 0.0;
    let mut increments = vec![0.0; model.modes()];
    let mut traj = Stepper::new(model).run(u0, |m, _, out| {
        stream.increments(m, dt, &mut increments);
        let vm = v.at(m);
        linear += dot(vm, &increments);
        for ((o, &dw), &vk) in out.iter_mut().zip(&increments).zip(vm) {
            *o = dt * vk + amp * dw;
        }
    })?;
    traj.log_weight = Some(-linear / amp - v.energy() / (2.0 * eps));
    Ok(traj)
}

/// `max_j |LHS_j − RHS_j|` of the discrete energy balance
///
/// `‖uʲ‖² + 2Σ dt‖(−Δ)^{α/2}uᵐ‖² + 2Σ dt⟨F(uᵐ),uᵐ⟩
///  = ‖u⁰‖² + 2Σ dt⟨uᵐ,g⟩ + 2√εΣ⟨uᵐ,σ(uᵐ)ΔWᵐ⟩ + εΣ dt‖σ(uᵐ)‖²_HS`
///
/// with left-point sums over `m < j`. `stream` must reproduce the
/// increments that drove `traj`.
pub fn energy_residual(traj: &Trajectory, model: &Model, eps: f64, stream: &mut NoiseStream) -> Result<f64> {
    check_eps(eps)?;
    if traj.grid != model.grid {
        return Err(Error::GridMismatch);
    }
    if traj.steps() != model.time.steps() || (traj.dt - model.dt()).abs() > 1e-12 * model.dt() {
        return Err(Error::DimensionMismatch {
            what: "trajectory steps",
            expected: model.time.steps(),
            found: traj.steps(),
        });
    }
    let dt = model.dt();
    let amp = eps.sqrt();
    let alpha = model.alpha;
    let weight = model.grid.symbol(|k2| k2.powf(alpha));
    let mut ws = SpectralWorkspace::new(&model.grid);
    let h = model.grid.cell_volume();
    let mut increments = vec![0.0; model.modes()];
    let mut noise_field = vec![0.0; model.grid.len()];

    let u0_sq = traj.fields[0].l2_norm_sq();
    // accumulated (LHS integrals) − (RHS integrals)
    let mut acc = 0.0;
    let mut worst: f64 = 0.0;
    for (m, u) in traj.fields.iter().enumerate() {
        let residual = u.l2_norm_sq() + acc - u0_sq;
        worst = worst.max(residual.abs());
        if m == traj.steps() {
            break;
        }
        let t = model.time.time(m);
        let uv = u.values();
        let dissipation = ws.weighted_energy(uv, &weight);
        let reaction: f64 = uv.iter().map(|&x| model.drift.value(t, x) * x).sum::<f64>() * h;
        let forcing = match &model.forcing {
            Some(g) => dot(uv, g.values()) * h,
            None => 0.0,
        };
        let mut stochastic = 0.0;
        let mut ito = 0.0;
        if eps > 0.0 {
            stream.increments(m, dt, &mut increments);
            noise_field.iter_mut().for_each(|x| *x = 0.0);
            model.noise.apply_add(t, uv, &increments, &mut noise_field);
            stochastic = dot(uv, &noise_field) * h;
            ito = model.noise.hs_norm_sq_raw(t, uv);
        }
        acc += 2.0 * dt * (dissipation + reaction - forcing) - 2.0 * amp * stochastic - eps * dt * ito;
    }
    Ok(worst)
}

/// Terminal coefficients `⟨u^M, φ⟩` of an ensemble, in index order.
pub fn terminal_projections(trajectories: &[Trajectory], profile: &Field) -> Result<Vec<f64>> {
    trajectories
        .iter()
        .map(|t| t.terminal().inner(profile))
        .collect()
}
