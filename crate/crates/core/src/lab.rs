//! Empirical checks of uniform tail decay, weak-to-strong continuity of the
//! control-to-solution map, and moment bounds of the controlled equation.

use alloc::vec;
use alloc::vec::Vec;

// inherent float methods shadow these when std is linked
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::rng::{AuxNormals, NoiseStream};
use crate::skeleton::{integrate_skeleton, trajectory_distance, Control, Model, Stepper, TimeGrid};
use crate::spectral::{tail_mass, Field};

/// Name of the control distribution used on energy balls, for reports.
pub const BALL_SAMPLER: &str = "gaussian direction, energy R^2 U^(2/(MK))";

/// Random control with `energy(v) ≤ R²`: i.i.d. normals per `(m, k)`,
/// rescaled to energy `R²·U^{2/(MK)}` with `U` uniform.
pub fn random_ball_control(time: TimeGrid, modes: usize, radius: f64, seed: u64, index: u64) -> Result<Control> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::invalid("radius", "must be finite and non-negative"));
    }
    let mut aux = AuxNormals::new(seed, index);
    let n = time.steps() * modes;
    let raw: Vec<f64> = (0..n).map(|_| aux.normal()).collect();
    let u = aux.uniform();
    let v = Control::new(time, modes, raw)?;
    let e = v.energy();
    if e == 0.0 {
        return Ok(v);
    }
    let target = radius * radius * u.powf(2.0 / n as f64);
    Ok(v.scaled((target / e).sqrt()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TailRow {
    pub m: f64,
    /// worst `max_t ∫_{|x|≥m} |u_v(t,x)|² dx` over the sampled controls
    pub worst: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TailReport {
    pub radius: f64,
    pub rows: Vec<TailRow>,
    pub controls: usize,
    pub blowups: usize,
    /// worst tail mass is non-increasing in `m`
    pub monotone: bool,
}

pub fn tail_experiment<E: Executor>(
    exec: &E,
    model: &Model,
    u0: &Field,
    radius: f64,
    m_list: &[f64],
    n_controls: usize,
    seed: u64,
) -> Result<TailReport> {
    if m_list.is_empty() || m_list.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("m_list", "must be non-empty and strictly increasing"));
    }
    let half = model.grid.half_width();
    if m_list.iter().any(|&m| !(m >= 0.0 && m < half)) {
        return Err(Error::invalid("m_list", "radii must lie inside the box"));
    }
    model.check_initial(u0)?;
    let model = model.clone().with_norms(false);
    let k = model.modes();
    let per_control = exec.map_indexed(n_controls, |i| -> Result<Option<Vec<f64>>> {
        let v = random_ball_control(model.time, k, radius, seed, i as u64)?;
        let tr = match integrate_skeleton(&model, u0, &v) {
            Ok(tr) => tr,
            Err(Error::BlowUp { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let mut worst = vec![0.0f64; m_list.len()];
        for f in &tr.fields {
            for (w, &m) in worst.iter_mut().zip(m_list) {
                *w = w.max(tail_mass(f, m)?);
            }
        }
        Ok(Some(worst))
    });
    let mut worst = vec![0.0f64; m_list.len()];
    let mut blowups = 0;
    for r in per_control {
        match r? {
            Some(w) => {
                for (a, b) in worst.iter_mut().zip(w) {
                    *a = a.max(b);
                }
            }
            None => blowups += 1,
        }
    }
    let monotone = worst.windows(2).all(|w| w[1] <= w[0]);
    Ok(TailReport {
        radius,
        rows: m_list.iter().zip(&worst).map(|(&m, &w)| TailRow { m, worst: w }).collect(),
        controls: n_controls,
        blowups,
        monotone,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeakRow {
    pub n: usize,
    /// `max_m ‖u_{v_n}ᵐ − u_vᵐ‖`
    pub sup_l2: f64,
    /// `(Σ dt ‖u_{v_n}ᵐ − u_vᵐ‖²_{H^α})^{1/2}`
    pub l2_v: f64,
    /// `(Σ dt ‖u_{v_n}ᵐ − u_vᵐ‖_{L^p}^p)^{1/p}`
    pub lp: f64,
    /// `‖v_n − v‖_{L²(0,T;ℓ²)}`
    pub control_distance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeakReport {
    pub amplitude: f64,
    pub mode: usize,
    pub rows: Vec<WeakRow>,
    /// both state distances non-increasing in `n`
    pub monotone: bool,
    /// `max/min` of the control distances
    pub control_spread: f64,
}

/// `v_n = v + A·sin(2πnt/T)·e_k`: a weakly null, constant-energy
/// perturbation of `v`.
pub fn oscillating_perturbation(v: &Control, mode: usize, amplitude: f64, n: usize) -> Result<Control> {
    if mode >= v.modes() {
        return Err(Error::invalid("mode", "index exceeds the number of noise modes"));
    }
    let time = v.time_grid();
    let horizon = time.horizon();
    let bump = Control::from_fn(time, v.modes(), |t, k| {
        if k == mode {
            amplitude * (2.0 * core::f64::consts::PI * n as f64 * t / horizon).sin()
        } else {
            0.0
        }
    })?;
    v.add_scaled(1.0, &bump)
}

pub fn weak_convergence_experiment<E: Executor>(
    exec: &E,
    model: &Model,
    u0: &Field,
    v_base: &Control,
    mode: usize,
    amplitude: f64,
    n_list: &[usize],
) -> Result<WeakReport> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("n_list", "must be non-empty and strictly increasing"));
    }
    let model = model.clone().with_norms(false);
    let base = integrate_skeleton(&model, u0, v_base)?;
    let p = model.drift.p.max(1.0);
    let rows = exec.map_indexed(n_list.len(), |i| -> Result<WeakRow> {
        let n = n_list[i];
        let vn = oscillating_perturbation(v_base, mode, amplitude, n)?;
        let tr = integrate_skeleton(&model, u0, &vn)?;
        let d = trajectory_distance(&model, &tr, &base)?;
        let dv = vn.add_scaled(-1.0, v_base)?;
        Ok(WeakRow {
            n,
            sup_l2: d.sup_l2_sq.sqrt(),
            l2_v: d.l2_v_sq.sqrt(),
            lp: d.lp_pow.powf(1.0 / p),
            control_distance: dv.energy().sqrt(),
        })
    });
    let rows: Vec<WeakRow> = rows.into_iter().collect::<Result<_>>()?;
    let monotone = rows
        .windows(2)
        .all(|w| w[1].sup_l2 <= w[0].sup_l2 && w[1].l2_v <= w[0].l2_v);
    let cmax = rows.iter().map(|r| r.control_distance).fold(0.0, f64::max);
    let cmin = rows.iter().map(|r| r.control_distance).fold(f64::INFINITY, f64::min);
    Ok(WeakReport {
        amplitude,
        mode,
        rows,
        monotone,
        control_spread: if cmin > 0.0 { cmax / cmin } else { 1.0 },
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentRow {
    pub eps: f64,
    /// sample mean of `max_m‖uᵐ‖² + Σ dt‖uᵐ‖²_{H^α} + Σ dt‖uᵐ‖^p_{L^p}`
    pub mean: f64,
    pub std_error: f64,
    pub blowups: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentReport {
    pub radius: f64,
    pub rows: Vec<MomentRow>,
    /// `max_ε mean / min_ε mean`
    pub ratio: f64,
}

/// Path functional of the controlled SPDE driven by `dt·v + √ε ΔW`.
fn energy_functional(model: &Model, u0: &Field, eps: f64, v: &Control, stream: &mut NoiseStream) -> Result<f64> {
    let dt = model.dt();
    let amp = eps.sqrt();
    let p = model.drift.p.max(1.0);
    let mut noise = vec![0.0; model.modes()];
    let tr = Stepper::new(model).run(u0, |m, _, out| {
        if eps > 0.0 {
            stream.increments(m, dt, &mut noise);
        }
        for ((o, &vk), &dw) in out.iter_mut().zip(v.at(m)).zip(&noise) {
            *o = dt * vk + amp * dw;
        }
    })?;
    let mut sup: f64 = 0.0;
    let mut integral = 0.0;
    let last = tr.norms.len() - 1;
    for (m, n) in tr.norms.iter().enumerate() {
        sup = sup.max(n.l2 * n.l2);
        if m < last {
            integral += dt * (n.h_alpha * n.h_alpha + n.lp.powf(p));
        }
    }
    Ok(sup + integral)
}

/// Monte Carlo estimate of the moment functional at every `ε`, over random
/// controls in the `R`-ball (sample `i` uses the same control and noise
/// stream at every `ε`).
#[allow(clippy::too_many_arguments)]
pub fn moment_bound_experiment<E: Executor>(
    exec: &E,
    model: &Model,
    u0: &Field,
    radius: f64,
    samples: usize,
    eps_list: &[f64],
    seed: u64,
) -> Result<MomentReport> {
    if samples == 0 {
        return Err(Error::EmptySample("moment samples"));
    }
    if eps_list.is_empty() || eps_list.iter().any(|&e| !(e >= 0.0 && e.is_finite())) {
        return Err(Error::invalid("eps_list", "need non-negative noise intensities"));
    }
    model.check_initial(u0)?;
    let model = model.clone().with_norms(true);
    let k = model.modes();
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let vals = exec.map_indexed(samples, |i| -> Result<Option<f64>> {
            let v = random_ball_control(model.time, k, radius, seed, i as u64)?;
            let mut stream = NoiseStream::new(seed, i as u64, k);
            match energy_functional(&model, u0, eps, &v, &mut stream) {
                Ok(x) => Ok(Some(x)),
                Err(Error::BlowUp { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        });
        let mut sum = 0.0;
        let mut sq = 0.0;
        let mut count = 0usize;
        let mut blowups = 0;
        for v in vals {
            match v? {
                Some(x) => {
                    sum += x;
                    sq += x * x;
                    count += 1;
                }
                None => blowups += 1,
            }
        }
        if count == 0 {
            return Err(Error::EmptySample("every moment sample blew up"));
        }
        let c = count as f64;
        let mean = sum / c;
        let var = (sq / c - mean * mean).max(0.0);
        rows.push(MomentRow {
            eps,
            mean,
            std_error: (var / c).sqrt(),
            blowups,
        });
    }
    let hi = rows.iter().map(|r| r.mean).fold(0.0, f64::max);
    let lo = rows.iter().map(|r| r.mean).fold(f64::INFINITY, f64::min);
    Ok(MomentReport {
        radius,
        rows,
        ratio: if lo > 0.0 { hi / lo } else if hi == 0.0 { 1.0 } else { f64::INFINITY },
    })
}
