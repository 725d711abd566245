//! Rate function by minimum-action optimization.
//!
//! The constrained problem `inf { ½∫‖v‖² : u_v = φ }` is relaxed to the
//! penalty objective
//!
//! `J(v) = ½ Σ_m dt |v_m|² + (β/2)·misfit(u_v, target)`
//!
//! and minimized with β-continuation. Gradients come from the exact
//! transpose of the discrete forward scheme, so a central finite
//! difference of `J` along any direction must match `⟨∇J, d⟩`.

use alloc::vec;
use alloc::vec::Vec;

// inherent float methods shadow these when std is linked
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::skeleton::{integrate_skeleton, Control, Model, Stepper, TimeGrid, Trajectory};
use crate::spectral::Field;

/// `½ Σ_m dt Σ_k v[m][k]²`.
pub fn action(v: &Control) -> f64 {
    0.5 * v.energy()
}

/// What the controlled solution has to match.
#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    /// `‖u^M − φ‖²`
    Endpoint(Field),
    /// `(⟨u^M, profile⟩ − level)²`: reach a level of one terminal coordinate
    Projection { profile: Field, level: f64 },
    /// `Σ_{m=1}^{M} dt·wₘ‖uᵐ − φᵐ‖²` with `φ` holding `M+1` fields (`φ⁰` unused)
    Path { fields: Vec<Field>, weights: Option<Vec<f64>> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerSettings {
    /// iteration cap per continuation stage
    pub max_iterations: usize,
    /// stop a stage when `‖∇J‖ ≤ grad_tol·‖∇J₀‖` …
    pub grad_tol: f64,
    /// … or when `‖∇J‖ ≤ grad_tol_abs`
    pub grad_tol_abs: f64,
    pub armijo: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
    /// L-BFGS memory
    pub memory: usize,
    /// number of β values `β₀, g·β₀, g²·β₀, …`
    pub beta_stages: usize,
    pub beta_growth: f64,
    /// relative constraint residual above which the target counts as unreached
    pub residual_tol: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            grad_tol: 1e-8,
            grad_tol_abs: 1e-10,
            armijo: 1e-4,
            backtrack: 0.5,
            max_backtracks: 50,
            memory: 12,
            beta_stages: 3,
            beta_growth: 10.0,
            residual_tol: 1e-2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RateProblem {
    pub model: Model,
    pub u0: Field,
    pub target: Target,
    /// initial penalty `β₀ > 0`
    pub beta: f64,
    pub settings: OptimizerSettings,
}

impl RateProblem {
    pub fn new(model: Model, u0: Field, target: Target, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::invalid("beta", "penalty must be positive"));
        }
        model.check_initial(&u0)?;
        match &target {
            Target::Endpoint(f) => check_grid(&model, f)?,
            Target::Projection { profile, level } => {
                check_grid(&model, profile)?;
                if !level.is_finite() {
                    return Err(Error::NonFinite { what: "target level" });
                }
            }
            Target::Path { fields, weights } => {
                let n = model.time.steps() + 1;
                if fields.len() != n {
                    return Err(Error::DimensionMismatch {
                        what: "path target length",
                        expected: n,
                        found: fields.len(),
                    });
                }
                for f in fields {
                    check_grid(&model, f)?;
                }
                if let Some(w) = weights {
                    if w.len() != n {
                        return Err(Error::DimensionMismatch {
                            what: "path weights",
                            expected: n,
                            found: w.len(),
                        });
                    }
                }
            }
        }
        Ok(Self {
            model,
            u0,
            target,
            beta,
            settings: OptimizerSettings::default(),
        })
    }

    pub fn with_settings(mut self, settings: OptimizerSettings) -> Self {
        self.settings = settings;
        self
    }

    pub fn time(&self) -> TimeGrid {
        self.model.time
    }
}

fn check_grid(model: &Model, f: &Field) -> Result<()> {
    if *f.grid() == model.grid {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// Constraint residuals of a controlled trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Residual {
    /// endpoint: `‖u^M − φ‖`; projection: `|⟨u^M,φ⟩ − x|`; path: `(Σ dt‖uᵐ−φᵐ‖²)^{1/2}`
    pub value: f64,
    /// `value` divided by the size of the target
    pub relative: f64,
    /// path: `max_m ‖uᵐ − φᵐ‖`; otherwise equal to `value`
    pub sup: f64,
}

pub fn residual(target: &Target, traj: &Trajectory) -> Result<Residual> {
    let tm = traj.terminal();
    match target {
        Target::Endpoint(phi) => {
            let value = tm.sub(phi)?.l2_norm();
            Ok(Residual {
                value,
                relative: value / phi.l2_norm().max(f64::MIN_POSITIVE),
                sup: value,
            })
        }
        Target::Projection { profile, level } => {
            let value = (tm.inner(profile)? - level).abs();
            Ok(Residual {
                value,
                relative: value / level.abs().max(f64::MIN_POSITIVE),
                sup: value,
            })
        }
        Target::Path { fields, .. } => {
            let mut sq = 0.0;
            let mut size = 0.0;
            let mut sup: f64 = 0.0;
            for (u, phi) in traj.fields.iter().zip(fields).skip(1) {
                let d = u.sub(phi)?.l2_norm_sq();
                sq += traj.dt * d;
                size += traj.dt * phi.l2_norm_sq();
                sup = sup.max(d.sqrt());
            }
            let value = sq.sqrt();
            Ok(Residual {
                value,
                relative: value / size.sqrt().max(f64::MIN_POSITIVE),
                sup,
            })
        }
    }
}

/// Objective value and gradient with respect to the raw control entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    pub gradient: Control,
    pub trajectory: Trajectory,
}

/// `J(v)` and `∂J/∂v[m][k]` at the problem's penalty `β`.
pub fn objective_and_gradient(problem: &RateProblem, v: &Control) -> Result<Evaluation> {
    evaluate(problem, problem.beta, v)
}

fn evaluate(problem: &RateProblem, beta: f64, v: &Control) -> Result<Evaluation> {
    let model = &problem.model;
    model.check_control(v)?;
    let dt = model.dt();
    let steps = model.time.steps();
    let n = model.grid.len();
    let h = model.grid.cell_volume();
    let kmodes = model.modes();

    let mut stepper = Stepper::new(model).without_norms();
    let traj = stepper.run(&problem.u0, |m, _, out| {
        for (o, &x) in out.iter_mut().zip(v.at(m)) {
            *o = dt * x;
        }
    })?;

    // misfit and terminal adjoint source
    let mut q = vec![0.0; n];
    let mut misfit = 0.0;
    let path_source = |m: usize, q: &mut [f64]| -> f64 {
        if let Target::Path { fields, weights } = &problem.target {
            let w = weights.as_ref().map_or(1.0, |w| w[m]);
            let u = traj.fields[m].values();
            let phi = fields[m].values();
            let mut sq = 0.0;
            for ((qi, &ui), &pi) in q.iter_mut().zip(u).zip(phi) {
                let d = ui - pi;
                sq += d * d;
                *qi += beta * dt * w * d;
            }
            dt * w * sq * h
        } else {
            0.0
        }
    };
    match &problem.target {
        Target::Endpoint(phi) => {
            for ((qi, &ui), &pi) in q.iter_mut().zip(traj.terminal().values()).zip(phi.values()) {
                let d = ui - pi;
                misfit += d * d;
                *qi = beta * d;
            }
            misfit *= h;
        }
        Target::Projection { profile, level } => {
            let d = traj.terminal().inner(profile)? - level;
            misfit = d * d;
            for (qi, &pi) in q.iter_mut().zip(profile.values()) {
                *qi = beta * d * pi;
            }
        }
        Target::Path { .. } => {
            misfit += path_source(steps, &mut q);
        }
    }

    let mut grad = vec![0.0; steps * kmodes];
    let mut r = vec![0.0; n];
    let mut sig_deriv = vec![0.0; n];
    let mut adj = vec![0.0; kmodes];
    let mut drive = vec![0.0; kmodes];
    for m in (0..steps).rev() {
        let t = model.time.time(m);
        let u = traj.fields[m].values();
        r.copy_from_slice(&q);
        stepper.propagate(&mut r);
        let vm = v.at(m);
        model.noise.adjoint_into(t, u, &r, &mut adj);
        for k in 0..kmodes {
            grad[m * kmodes + k] = dt * (vm[k] + adj[k]);
        }
        if m == 0 {
            break;
        }
        for (d, &x) in drive.iter_mut().zip(vm) {
            *d = dt * x;
        }
        let has_sigma = model.noise.state_derivative(u, &drive, &mut sig_deriv);
        for i in 0..n {
            let mut jac = 1.0 - dt * stepper.drift_derivative(t, u[i]);
            if has_sigma {
                jac += sig_deriv[i];
            }
            q[i] = r[i] * jac;
        }
        misfit += path_source(m, &mut q);
    }

    let objective = action(v) + 0.5 * beta * misfit;
    Ok(Evaluation {
        objective,
        gradient: Control::from_raw(steps, kmodes, dt, grad),
        trajectory: traj,
    })
}

/// `(Σ g²/dt)^{1/2}`: the `L²(0,T;ℓ²)` norm of the Riesz gradient.
fn natural_norm(g: &Control) -> f64 {
    (g.dot(g) / g.dt()).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageSummary {
    pub beta: f64,
    pub iterations: usize,
    pub objective: f64,
    pub gradient_norm: f64,
    pub converged: bool,
    /// `J` after every accepted iteration (starting with the initial value)
    pub objective_history: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateResult {
    pub control: Control,
    /// `½·energy(v*)`
    pub action: f64,
    pub residual: Residual,
    pub iterations: usize,
    /// gradient tolerance met in the last stage and residual within tolerance
    pub converged: bool,
    pub gradient_converged: bool,
    pub gradient_norm: f64,
    pub objective: f64,
    pub beta: f64,
    pub stages: Vec<StageSummary>,
    pub trajectory: Trajectory,
}

struct StageOutcome {
    control: Control,
    eval: Evaluation,
    summary: StageSummary,
}

fn lbfgs_stage(problem: &RateProblem, beta: f64, v0: Control) -> Result<StageOutcome> {
    let s = &problem.settings;
    let dt = problem.model.dt();
    let mut x = v0;
    let mut cur = evaluate(problem, beta, &x)?;
    let g0 = natural_norm(&cur.gradient);
    let tol = s.grad_tol_abs.max(s.grad_tol * g0);
    let mut history = vec![cur.objective];
    let mut mem_s: Vec<Control> = Vec::new();
    let mut mem_y: Vec<Control> = Vec::new();
    let mut iterations = 0;
    let mut converged = g0 <= tol;
    let mut failures = 0;

    while !converged && iterations < s.max_iterations {
        let g = &cur.gradient;
        // two-loop recursion
        let mut d = g.scaled(-1.0);
        let mut alphas = Vec::with_capacity(mem_s.len());
        for (si, yi) in mem_s.iter().zip(&mem_y).rev() {
            let rho = 1.0 / yi.dot(si);
            let a = rho * si.dot(&d);
            d = d.add_scaled(-a, yi)?;
            alphas.push((a, rho));
        }
        let gamma = match (mem_s.last(), mem_y.last()) {
            (Some(sl), Some(yl)) => sl.dot(yl) / yl.dot(yl),
            _ => 1.0 / dt,
        };
        d = d.scaled(gamma);
        for ((si, yi), (a, rho)) in mem_s.iter().zip(&mem_y).zip(alphas.into_iter().rev()) {
            let b = rho * yi.dot(&d);
            d = d.add_scaled(a - b, si)?;
        }
        let mut slope = g.dot(&d);
        if !(slope < 0.0) {
            mem_s.clear();
            mem_y.clear();
            d = g.scaled(-1.0 / dt);
            slope = g.dot(&d);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..s.max_backtracks {
            let trial = x.add_scaled(step, &d)?;
            match evaluate(problem, beta, &trial) {
                Ok(e) if e.objective.is_finite() && e.objective <= cur.objective + s.armijo * step * slope => {
                    accepted = Some((trial, e));
                    break;
                }
                Ok(_) | Err(Error::BlowUp { .. }) => step *= s.backtrack,
                Err(e) => return Err(e),
            }
        }
        let Some((next_x, next)) = accepted else {
            failures += 1;
            if failures >= 2 || mem_s.is_empty() {
                break;
            }
            mem_s.clear();
            mem_y.clear();
            continue;
        };
        failures = 0;
        let sk = next_x.add_scaled(-1.0, &x)?;
        let yk = next.gradient.add_scaled(-1.0, &cur.gradient)?;
        if sk.dot(&yk) > 1e-14 * sk.dot(&sk).sqrt() * yk.dot(&yk).sqrt() {
            if mem_s.len() == s.memory {
                mem_s.remove(0);
                mem_y.remove(0);
            }
            mem_s.push(sk);
            mem_y.push(yk);
        }
        x = next_x;
        cur = next;
        iterations += 1;
        history.push(cur.objective);
        converged = natural_norm(&cur.gradient) <= tol;
    }

    let summary = StageSummary {
        beta,
        iterations,
        objective: cur.objective,
        gradient_norm: natural_norm(&cur.gradient),
        converged,
        objective_history: history,
    };
    Ok(StageOutcome {
        control: x,
        eval: cur,
        summary,
    })
}

/// Penalty minimization with β-continuation `β₀, 10β₀, 100β₀, …`, warm
/// starting each stage. Unreachable targets show up as a residual above
/// `residual_tol` and `converged == false`.
pub fn minimize(problem: &RateProblem, v_init: &Control) -> Result<RateResult> {
    problem.model.check_control(v_init)?;
    let s = &problem.settings;
    if s.beta_stages == 0 {
        return Err(Error::invalid("beta_stages", "need at least one stage"));
    }
    let mut beta = problem.beta;
    let mut v = v_init.clone();
    let mut stages = Vec::with_capacity(s.beta_stages);
    let mut last = None;
    for stage in 0..s.beta_stages {
        if stage > 0 {
            beta *= s.beta_growth;
        }
        let out = lbfgs_stage(problem, beta, v)?;
        v = out.control.clone();
        stages.push(out.summary.clone());
        last = Some(out);
    }
    let out = last.expect("at least one stage");
    let res = residual(&problem.target, &out.eval.trajectory)?;
    let gradient_converged = out.summary.converged;
    Ok(RateResult {
        action: action(&out.control),
        control: out.control,
        residual: res,
        iterations: stages.iter().map(|s| s.iterations).sum(),
        converged: gradient_converged && res.relative <= s.residual_tol,
        gradient_converged,
        gradient_norm: out.summary.gradient_norm,
        objective: out.summary.objective,
        beta,
        stages,
        trajectory: out.eval.trajectory,
    })
}

/// Runs [`minimize`] from every start and keeps the lowest final objective.
pub fn minimize_multistart(problem: &RateProblem, starts: &[Control]) -> Result<RateResult> {
    let mut best: Option<RateResult> = None;
    for v0 in starts {
        let r = minimize(problem, v0)?;
        if best.as_ref().is_none_or(|b| r.objective < b.objective) {
            best = Some(r);
        }
    }
    best.ok_or(Error::EmptySample("multistart initial controls"))
}

/// Scalar linear benchmark `Ẋ = −aX + c·v`, `X(0) = 0`: reachability
/// Gramian `W(T) = c²(1 − e^{−2aT})/(2a)`.
pub fn lq_gramian(a: f64, c: f64, horizon: f64) -> f64 {
    if a == 0.0 {
        c * c * horizon
    } else {
        c * c * (1.0 - (-2.0 * a * horizon).exp()) / (2.0 * a)
    }
}

/// Minimum-energy control steering the scalar benchmark to `x` at `T`,
/// `v(t) = c·e^{−a(T−t)}·x/W(T)`, on mode `mode` of a `modes`-wide control.
pub fn lq_optimal_control(time: TimeGrid, modes: usize, mode: usize, a: f64, c: f64, x: f64) -> Result<Control> {
    let horizon = time.horizon();
    let w = lq_gramian(a, c, horizon);
    Control::from_fn(time, modes, |t, k| {
        if k == mode {
            c * (-a * (horizon - t)).exp() * x / w
        } else {
            0.0
        }
    })
}

/// Skeleton trajectory for the optimizer's control; convenience for reports.
pub fn realize(problem: &RateProblem, v: &Control) -> Result<Trajectory> {
    integrate_skeleton(&problem.model, &problem.u0, v)
}

/// Directional derivative check `(J(v+hd) − J(v−hd))/(2h)` against `⟨∇J, d⟩`;
/// returns the relative error.
pub fn gradient_check(problem: &RateProblem, v: &Control, direction: &Control, h: f64) -> Result<f64> {
    let e = objective_and_gradient(problem, v)?;
    let plus = objective_and_gradient(problem, &v.add_scaled(h, direction)?)?.objective;
    let minus = objective_and_gradient(problem, &v.add_scaled(-h, direction)?)?.objective;
    let fd = (plus - minus) / (2.0 * h);
    let ad = e.gradient.dot(direction);
    Ok((fd - ad).abs() / ad.abs().max(fd.abs()).max(f64::MIN_POSITIVE))
}
