//! One function per subcommand.

use fracldp_core::drift::{check_conditions, SampleSpec};
use fracldp_core::lab::{
    moment_bound_experiment, random_ball_control, tail_experiment, weak_convergence_experiment, BALL_SAMPLER,
};
use fracldp_core::mc::{estimate_is, estimate_naive, ldp_sweep, EventSpec, MCEstimate, SweepSettings};
use fracldp_core::rate::{minimize_multistart, OptimizerSettings, RateProblem, RateResult, Target};
use fracldp_core::rng::NoiseStream;
use fracldp_core::skeleton::integrate_skeleton;
use fracldp_core::spde::{energy_residual, simulate_spde};
use fracldp_core::{Control, Executor, Field, Model, Trajectory};
use serde_json::json;

use crate::config::{Config, EventKind, ExperimentKind, TargetKind};
use crate::output::{num, RunOutput, Table, Verdict};
use crate::{AppError, Command};

pub fn dispatch<E: Executor>(command: Command, cfg: &Config, exec: &E) -> Result<RunOutput, AppError> {
    let kind = cfg.experiment.kind;
    let allowed = match command {
        Command::Check => true,
        Command::Simulate => kind == ExperimentKind::Simulate,
        Command::Skeleton => kind == ExperimentKind::Skeleton,
        Command::Rate => kind == ExperimentKind::Rate,
        Command::Mc => kind == ExperimentKind::Mc,
        Command::Sweep => kind == ExperimentKind::Sweep,
        Command::Lab => matches!(
            kind,
            ExperimentKind::Tail | ExperimentKind::WeakConvergence | ExperimentKind::MomentBound
        ),
    };
    if !allowed {
        return Err(AppError::Usage(format!(
            "experiment.kind = \"{}\" cannot be run by this command",
            kind.name()
        )));
    }
    match command {
        Command::Check => check(cfg),
        Command::Simulate => simulate(cfg),
        Command::Skeleton => skeleton(cfg),
        Command::Rate => rate(cfg, exec),
        Command::Mc => mc(cfg, exec),
        Command::Sweep => sweep(cfg, exec),
        Command::Lab => match kind {
            ExperimentKind::Tail => tail(cfg, exec),
            ExperimentKind::WeakConvergence => weak(cfg, exec),
            _ => moments(cfg, exec),
        },
    }
}

fn constant_control(cfg: &Config, model: &Model) -> Result<Control, AppError> {
    let e = &cfg.experiment;
    if e.control_mode >= model.modes() {
        return Err(AppError::Config("experiment.control_mode exceeds noise.modes".into()));
    }
    Ok(Control::from_fn(model.time, model.modes(), |_, k| {
        if k == e.control_mode {
            e.control_amplitude
        } else {
            0.0
        }
    })?)
}

fn path_table(model: &Model, traj: &Trajectory, profile: &Field) -> Result<Table, AppError> {
    let mut t = Table::new(&["step", "time", "l2", "h_alpha", "lp", "projection"]);
    for (m, (f, n)) in traj.fields.iter().zip(&traj.norms).enumerate() {
        t.push(vec![
            m.to_string(),
            num(model.time.time(m)),
            num(n.l2),
            num(n.h_alpha),
            num(n.lp),
            num(f.inner(profile)?),
        ]);
    }
    Ok(t)
}

fn path_summary(out: &mut RunOutput, traj: &Trajectory, profile: &Field) -> Result<(), AppError> {
    let max_l2 = traj.norms.iter().map(|n| n.l2).fold(0.0, f64::max);
    out.set("terminal_l2", traj.terminal().l2_norm());
    out.set("terminal_projection", traj.terminal().inner(profile)?);
    out.set("max_l2", max_l2);
    Ok(())
}

fn simulate(cfg: &Config) -> Result<RunOutput, AppError> {
    let mut out = RunOutput::new("simulate");
    let model = cfg.model()?;
    let u0 = cfg.initial(&model.grid)?;
    let profile = cfg.profile(&model.grid)?;
    let e = &cfg.experiment;
    let traj = simulate_spde(&model, &u0, e.eps, &mut NoiseStream::new(e.seed, 0, model.modes()))?;
    out.timer.lap("simulate");
    let residual = energy_residual(&traj, &model, e.eps, &mut NoiseStream::new(e.seed, 0, model.modes()))?;
    out.timer.lap("energy_residual");
    out.table = path_table(&model, &traj, &profile)?;
    path_summary(&mut out, &traj, &profile)?;
    out.set("eps", e.eps);
    out.set("energy_residual", residual);
    out.set("tamed", model.tamed());
    Ok(out)
}

fn skeleton(cfg: &Config) -> Result<RunOutput, AppError> {
    let mut out = RunOutput::new("skeleton");
    let model = cfg.model()?;
    let u0 = cfg.initial(&model.grid)?;
    let profile = cfg.profile(&model.grid)?;
    let v = constant_control(cfg, &model)?;
    let traj = integrate_skeleton(&model, &u0, &v)?;
    out.timer.lap("skeleton");
    out.table = path_table(&model, &traj, &profile)?;
    path_summary(&mut out, &traj, &profile)?;
    out.set("action", fracldp_core::rate::action(&v));
    Ok(out)
}

fn target(cfg: &Config, profile: &Field) -> Target {
    let level = cfg.experiment.level;
    match cfg.experiment.target {
        TargetKind::Projection => Target::Projection {
            profile: profile.clone(),
            level,
        },
        TargetKind::Endpoint => Target::Endpoint(profile.scaled(level)),
    }
}

fn settings(cfg: &Config) -> OptimizerSettings {
    let e = &cfg.experiment;
    OptimizerSettings {
        max_iterations: e.max_iterations,
        beta_stages: e.beta_stages,
        residual_tol: e.residual_tolerance,
        ..OptimizerSettings::default()
    }
}

fn optimize<E: Executor>(cfg: &Config, model: &Model, u0: &Field, target: Target, exec: &E) -> Result<RateResult, AppError> {
    let e = &cfg.experiment;
    let problem = RateProblem::new(model.clone(), u0.clone(), target, e.beta)?.with_settings(settings(cfg));
    let mut starts = vec![Control::zeros(model.time, model.modes())];
    for i in 1..e.multistart.max(1) {
        starts.push(random_ball_control(model.time, model.modes(), e.radius, e.seed, i as u64)?);
    }
    // each start is independent; keep the lowest objective in start order
    let results = exec.map_indexed(starts.len(), |i| minimize_multistart(&problem, &starts[i..=i]));
    let mut best: Option<RateResult> = None;
    for r in results {
        let r = r?;
        if best.as_ref().is_none_or(|b| r.objective < b.objective) {
            best = Some(r);
        }
    }
    Ok(best.expect("at least one start"))
}

fn rate<E: Executor>(cfg: &Config, exec: &E) -> Result<RunOutput, AppError> {
    let mut out = RunOutput::new("rate");
    let model = cfg.model()?;
    let u0 = cfg.initial(&model.grid)?;
    let profile = cfg.profile(&model.grid)?;
    let r = optimize(cfg, &model, &u0, target(cfg, &profile), exec)?;
    out.timer.lap("optimize");

    let k = model.modes();
    let mut header: Vec<String> = vec!["step".into(), "time".into()];
    header.extend((0..k).map(|j| format!("v_{j}")));
    header.extend(["state_l2".to_string(), "projection".to_string()]);
    let mut t = Table {
        header,
        rows: Vec::new(),
    };
    for m in 0..=model.time.steps() {
        let mut row = vec![m.to_string(), num(model.time.time(m))];
        if m < model.time.steps() {
            row.extend(r.control.at(m).iter().map(|&x| num(x)));
        } else {
            row.extend((0..k).map(|_| String::new()));
        }
        let f = &r.trajectory.fields[m];
        row.push(num(f.l2_norm()));
        row.push(num(f.inner(&profile)?));
        t.push(row);
    }
    out.table = t;

    out.set("action", r.action);
    out.set("residual", r.residual.value);
    out.set("relative_residual", r.residual.relative);
    out.set("iterations", r.iterations);
    out.set("converged", r.converged);
    out.set("gradient_converged", r.gradient_converged);
    out.set("gradient_norm", r.gradient_norm);
    out.set("objective", r.objective);
    out.set("final_beta", r.beta);
    out.set(
        "stages",
        r.stages
            .iter()
            .map(|s| {
                json!({
                    "beta": s.beta,
                    "iterations": s.iterations,
                    "objective": s.objective,
                    "gradient_norm": s.gradient_norm,
                    "converged": s.converged,
                    "objective_history": s.objective_history,
                })
            })
            .collect::<Vec<_>>(),
    );
    out.verdicts.push(Verdict::flag("converged", r.converged));
    if let Some(reference) = cfg.experiment.reference_action {
        let rel = (r.action - reference).abs() / reference.abs();
        out.set("reference_action", reference);
        out.set("relative_error", rel);
        out.verdicts
            .push(Verdict::at_most("action_matches_reference", rel, cfg.experiment.action_tolerance));
    }
    out.log.push(format!("action {} after {} iterations", r.action, r.iterations));
    Ok(out)
}

/// Event plus, for threshold events, the optimizer's tilt and action.
struct EventSetup {
    event: EventSpec,
    tilt: Option<Control>,
    action: Option<f64>,
}

fn event_setup<E: Executor>(cfg: &Config, model: &Model, u0: &Field, exec: &E, out: &mut RunOutput) -> Result<EventSetup, AppError> {
    let e = &cfg.experiment;
    let profile = cfg.profile(&model.grid)?;
    match e.event {
        EventKind::Threshold => {
            let event = EventSpec::TerminalThreshold {
                profile: profile.clone(),
                level: e.level,
            };
            let r = optimize(
                cfg,
                model,
                u0,
                Target::Projection {
                    profile,
                    level: e.level,
                },
                exec,
            )?;
            out.timer.lap("optimize");
            out.set("action", r.action);
            out.set("optimizer_converged", r.converged);
            out.log.push(format!("optimizer action {} (converged {})", r.action, r.converged));
            Ok(EventSetup {
                event,
                tilt: e.importance_sampling.then_some(r.control),
                action: Some(r.action),
            })
        }
        EventKind::Ball | EventKind::Tube => {
            let free = integrate_skeleton(model, u0, &Control::zeros(model.time, model.modes()))?;
            let event = if e.event == EventKind::Ball {
                EventSpec::TerminalBall {
                    center: free.terminal().clone(),
                    radius: e.radius,
                }
            } else {
                EventSpec::TubeExit {
                    reference: free.fields,
                    radius: e.radius,
                }
            };
            // a ball around the noise-free path costs nothing
            let action = (e.event == EventKind::Ball).then_some(0.0);
            if let Some(a) = action {
                out.set("action", a);
            }
            Ok(EventSetup {
                event,
                tilt: None,
                action,
            })
        }
    }
}

fn estimate_row(method: &str, est: &MCEstimate) -> Vec<String> {
    vec![
        method.to_string(),
        num(est.eps),
        est.samples.to_string(),
        est.hits.to_string(),
        num(est.p_hat),
        num(est.log_p_hat),
        num(est.std_error),
        num(est.ess),
        est.upper_bound.to_string(),
        est.degenerate.to_string(),
        est.blowups.to_string(),
    ]
}

fn estimate_json(est: &MCEstimate) -> serde_json::Value {
    json!({
        "p_hat": est.p_hat,
        "log_p_hat": est.log_p_hat,
        "std_error": est.std_error,
        "ess": est.ess,
        "samples": est.samples,
        "hits": est.hits,
        "upper_bound": est.upper_bound,
        "degenerate": est.degenerate,
        "blowups": est.blowups,
    })
}

fn mc<E: Executor>(cfg: &Config, exec: &E) -> Result<RunOutput, AppError> {
    let mut out = RunOutput::new("mc");
    let model = cfg.model()?;
    let u0 = cfg.initial(&model.grid)?;
    let e = &cfg.experiment;
    let setup = event_setup(cfg, &model, &u0, exec, &mut out)?;
    let mut t = Table::new(&[
        "method", "epsilon", "samples", "hits", "p_hat", "log_p_hat", "std_error", "ess", "upper_bound", "degenerate",
        "blowups",
    ]);
    let naive = estimate_naive(exec, &model, &u0, &setup.event, e.eps, e.samples, e.seed)?;
    out.timer.lap("naive");
    t.push(estimate_row("naive", &naive));
    out.set("naive", estimate_json(&naive));
    let primary = match &setup.tilt {
        Some(v) => {
            let is = estimate_is(exec, &model, &u0, &setup.event, e.eps, v, e.samples, e.seed)?;
            out.timer.lap("importance");
            t.push(estimate_row("importance", &is));
            out.set("importance", estimate_json(&is));
            is
        }
        None => naive,
    };
    out.table = t;
    out.set("neg_eps_log_p", -e.eps * primary.log_p_hat);
    out.verdicts.push(Verdict::flag("estimate_not_degenerate", !primary.degenerate));
    Ok(out)
}

fn sweep<E: Executor>(cfg: &Config, exec: &E) -> Result<RunOutput, AppError> {
    let mut out = RunOutput::new("sweep");
    let model = cfg.model()?;
    let u0 = cfg.initial(&model.grid)?;
    let e = &cfg.experiment;
    let setup = event_setup(cfg, &model, &u0, exec, &mut out)?;
    let settings = SweepSettings {
        eps_list: e.eps_list.clone(),
        samples: e.samples,
        seed: e.seed,
        z: e.z,
    };
    let s = ldp_sweep(exec, &model, &u0, &setup.event, &settings, setup.tilt.as_ref(), setup.action)?;
    out.timer.lap("sweep");
    let mut t = Table::new(&["epsilon", "neg_eps_log_p", "ci_lo", "ci_hi", "ess", "method", "excluded"]);
    for r in &s.rows {
        t.push(vec![
            num(r.eps),
            num(r.neg_eps_log_p),
            num(r.ci_lo),
            num(r.ci_hi),
            num(r.estimate.ess),
            if r.importance_sampled { "importance" } else { "naive" }.to_string(),
            r.excluded.to_string(),
        ]);
        if r.excluded {
            out.log.push(format!("eps {} excluded (ess {}, hits {})", r.eps, r.estimate.ess, r.estimate.hits));
        }
    }
    out.table = t;
    out.set("intercept", s.intercept);
    out.set("slope", s.slope);
    out.set("limit", s.limit);
    out.set("monotone", s.monotone);
    if let Some(g) = s.relative_gap {
        out.set("limit_relative_gap", g);
    }
    let excluded: Vec<f64> = s.rows.iter().filter(|r| r.excluded).map(|r| r.eps).collect();
    out.set("excluded_eps", excluded);
    let last = s.rows.iter().rev().find(|r| !r.excluded);
    if let (Some(tol), Some(action), Some(last)) = (e.sweep_tolerance, setup.action, last) {
        let gap = if action > 0.0 {
            (last.neg_eps_log_p - action).abs() / action
        } else {
            last.neg_eps_log_p.abs()
        };
        out.set("smallest_eps", last.eps);
        out.set("smallest_eps_gap", gap);
        out.verdicts.push(Verdict::at_most("smallest_eps_within_tolerance", gap, tol));
    }
    Ok(out)
}

fn tail<E: Executor>(cfg: &Config, exec: &E) -> Result<RunOutput, AppError> {
    let mut out = RunOutput::new("tail");
    let model = cfg.model()?;
    let u0 = cfg.initial(&model.grid)?;
    let e = &cfg.experiment;
    let radii = cfg.tail_radii();
    let mut t = Table::new(&["radius", "m", "worst_tail_mass"]);
    let mut blowups = Vec::new();
    for &r in &e.radii {
        let rep = tail_experiment(exec, &model, &u0, r, &radii, e.controls, e.seed)?;
        out.timer.lap(&format!("tail_r{r}"));
        for row in &rep.rows {
            t.push(vec![num(r), num(row.m), num(row.worst)]);
        }
        let last = rep.rows.last().map_or(0.0, |row| row.worst);
        out.verdicts.push(Verdict::flag(format!("monotone_r{r}"), rep.monotone));
        out.verdicts
            .push(Verdict::at_most(format!("below_threshold_r{r}"), last, e.tail_threshold));
        blowups.push(rep.blowups);
    }
    out.table = t;
    out.set("control_sampler", BALL_SAMPLER);
    out.set("controls", e.controls);
    out.set("blowups", blowups);
    Ok(out)
}

fn weak<E: Executor>(cfg: &Config, exec: &E) -> Result<RunOutput, AppError> {
    let mut out = RunOutput::new("weak-convergence");
    let model = cfg.model()?;
    let u0 = cfg.initial(&model.grid)?;
    let e = &cfg.experiment;
    let v = constant_control(cfg, &model)?;
    let rep = weak_convergence_experiment(exec, &model, &u0, &v, e.mode, e.amplitude, &e.n_list)?;
    out.timer.lap("weak");
    let mut t = Table::new(&["n", "sup_l2", "l2_v", "lp", "control_distance"]);
    for r in &rep.rows {
        t.push(vec![r.n.to_string(), num(r.sup_l2), num(r.l2_v), num(r.lp), num(r.control_distance)]);
    }
    out.table = t;
    out.set("control_spread", rep.control_spread);
    out.verdicts.push(Verdict::flag("distances_monotone", rep.monotone));
    out.verdicts
        .push(Verdict::at_most("control_distance_constant", rep.control_spread - 1.0, 1e-9));
    Ok(out)
}

fn moments<E: Executor>(cfg: &Config, exec: &E) -> Result<RunOutput, AppError> {
    let mut out = RunOutput::new("moment-bound");
    let model = cfg.model()?;
    let u0 = cfg.initial(&model.grid)?;
    let e = &cfg.experiment;
    let radius = e.radii.first().copied().unwrap_or(0.0);
    let rep = moment_bound_experiment(exec, &model, &u0, radius, e.samples, &e.eps_list, e.seed)?;
    out.timer.lap("moments");
    let mut t = Table::new(&["epsilon", "mean", "std_error", "blowups"]);
    for r in &rep.rows {
        t.push(vec![num(r.eps), num(r.mean), num(r.std_error), r.blowups.to_string()]);
    }
    out.table = t;
    out.set("radius", radius);
    out.set("ratio", rep.ratio);
    out.set("control_sampler", BALL_SAMPLER);
    out.verdicts
        .push(Verdict::at_most("ratio_below_threshold", rep.ratio, e.moment_ratio_threshold));
    Ok(out)
}

fn check(cfg: &Config) -> Result<RunOutput, AppError> {
    let mut out = RunOutput::new("check");
    let model = cfg.model()?;
    let report = check_conditions(&model.drift, &SampleSpec::default())?;
    let (lip, growth) = model.noise.check_sigma2(10.0, 201)?;
    out.timer.lap("conditions");
    let mut t = Table::new(&["condition", "margin", "holds"]);
    let mut margins = serde_json::Map::new();
    for c in &report.conditions {
        // print a vanishing margin as 0, not -0
        let margin = c.margin + 0.0;
        t.push(vec![c.name.clone(), num(margin), c.holds.to_string()]);
        margins.insert(c.name.clone(), json!(margin));
    }
    for (name, m) in [("sigma2_lipschitz", lip), ("sigma2_growth", growth)] {
        let holds = m >= -1e-12;
        t.push(vec![name.to_string(), num(m), holds.to_string()]);
        margins.insert(name.to_string(), json!(m));
    }
    out.table = t;
    let sum = model.noise.summability();
    let c = model.drift.constants;
    out.set("margins", serde_json::Value::Object(margins));
    out.set("empirical_lambda4", report.empirical_lambda4);
    out.set(
        "constants",
        json!({
            "lambda1": c.lambda1, "psi1": c.psi1, "lambda2": c.lambda2, "psi2": c.psi2, "psi3": c.psi3,
            "lambda3": c.lambda3, "psi4": c.psi4, "lambda4": c.lambda4, "psi5": c.psi5,
        }),
    );
    out.set("noise_constant_sum", sum.constant_sum);
    out.set("noise_l1", model.noise.l1_constant());
    out.set("sigma1_hs_sum", sum.sigma1_partial_sums.last().copied().unwrap_or(0.0));
    out.verdicts.push(Verdict::flag("drift_conditions_hold", report.all_hold()));
    out.verdicts
        .push(Verdict::flag("sigma2_conditions_hold", lip >= -1e-12 && growth >= -1e-12));
    Ok(out)
}
