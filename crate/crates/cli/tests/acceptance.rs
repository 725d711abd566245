//! End-to-end acceptance checks, one PASS/FAIL line each.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use fracldp::config::Config;
use fracldp::RayonExecutor;
use fracldp_core::drift::DriftSpec;
use fracldp_core::lab::{tail_experiment, weak_convergence_experiment};
use fracldp_core::mc::{girsanov_mean, ldp_sweep, EventSpec, SweepSettings};
use fracldp_core::noise::{basis_profile, ModeBasis, NoiseSpec, Sigma2Family};
use fracldp_core::rate::{minimize, objective_and_gradient, RateProblem, Target};
use fracldp_core::rng::{AuxNormals, NoiseStream};
use fracldp_core::spde::{energy_residual, simulate_spde};
use fracldp_core::spectral::{forward, frac_laplacian, h_alpha_seminorm_sq, inverse, semigroup};
use fracldp_core::{Control, Field, Grid, Model, TimeGrid};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn load(name: &str) -> Config {
    Config::load(&configs().join(name)).unwrap()
}

fn random_field(g: &Grid, aux: &mut AuxNormals) -> Field {
    Field::new(g, (0..g.len()).map(|_| aux.normal()).collect()).unwrap()
}

fn random_control(time: TimeGrid, modes: usize, seed: u64, scale: f64) -> Control {
    let mut aux = AuxNormals::new(seed, 0);
    Control::new(time, modes, (0..time.steps() * modes).map(|_| scale * aux.normal()).collect()).unwrap()
}

fn spectral_core() -> Outcome {
    let start = Instant::now();
    let g = Grid::new(1, 10.0, 128).unwrap();
    let mut aux = AuxNormals::new(1, 0);
    let mut worst_parseval: f64 = 0.0;
    let mut worst_round: f64 = 0.0;
    for _ in 0..1000 {
        let f = random_field(&g, &mut aux);
        let s = forward(&f).unwrap();
        let n2 = f.l2_norm_sq();
        worst_parseval = worst_parseval.max((n2 - s.parseval_sum()).abs() / n2);
        let back = inverse(&s).unwrap();
        let err: f64 = back.values().iter().zip(f.values()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = f.values().iter().map(|a| a * a).sum::<f64>().sqrt();
        worst_round = worst_round.max(err / norm);
    }
    ensure(worst_parseval < 1e-10, format!("Parseval {worst_parseval:e}"))?;
    ensure(worst_round < 1e-12, format!("round trip {worst_round:e}"))?;

    let mut worst_adj: f64 = 0.0;
    let mut worst_semi: f64 = 0.0;
    for i in 0..100 {
        let alpha = 0.05 + 0.95 * (i as f64 + 0.5) / 100.0;
        let (f, h) = (random_field(&g, &mut aux), random_field(&g, &mut aux));
        let lf = frac_laplacian(&f, alpha).unwrap();
        let lh = frac_laplacian(&h, alpha).unwrap();
        let l = lf.inner(&h).unwrap();
        let r = f.inner(&lh).unwrap();
        worst_adj = worst_adj.max((l - r).abs() / (lf.l2_norm() * h.l2_norm()));
        let (s, t) = (0.3 * aux.uniform(), 0.3 * aux.uniform());
        let two = semigroup(&semigroup(&f, alpha, s).unwrap(), alpha, t).unwrap();
        let one = semigroup(&f, alpha, s + t).unwrap();
        let d = two.add_scaled(-1.0, &one).unwrap().l2_norm() / f.l2_norm();
        worst_semi = worst_semi.max(d);
        let id = semigroup(&f, alpha, 0.0).unwrap().add_scaled(-1.0, &f).unwrap().l2_norm() / f.l2_norm();
        worst_semi = worst_semi.max(id);
    }
    ensure(worst_adj < 1e-10, format!("adjointness {worst_adj:e}"))?;
    ensure(worst_semi < 1e-10, format!("semigroup {worst_semi:e}"))?;

    // three-point stencil for −u″ on refining grids
    let mut errs = Vec::new();
    for n in [64, 128, 256] {
        let g = Grid::new(1, 8.0, n).unwrap();
        let f = Field::from_fn(&g, |x| (-x[0] * x[0]).exp()).unwrap();
        let spec = frac_laplacian(&f, 1.0).unwrap();
        let v = f.values();
        let h = g.spacing();
        let err = (0..n)
            .map(|i| {
                let fd = -(v[(i + 1) % n] - 2.0 * v[i] + v[(i + n - 1) % n]) / (h * h);
                (spec.values()[i] - fd).abs()
            })
            .fold(0.0, f64::max);
        errs.push(err);
    }
    for w in errs.windows(2) {
        ensure((3.6..4.4).contains(&(w[0] / w[1])), format!("FD errors {errs:?}"))?;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 1.0, format!("took {secs:.2}s"))?;
    Ok(format!(
        "Parseval {worst_parseval:.1e}, round trip {worst_round:.1e}, adjoint {worst_adj:.1e}, semigroup {worst_semi:.1e}, FD ratios {:.2} {:.2}, {secs:.2}s",
        errs[0] / errs[1],
        errs[1] / errs[2]
    ))
}

/// `C(1, α)` normalizing `½C∬|u(x)−u(y)|²/|x−y|^{1+2α} = ‖(−Δ)^{α/2}u‖²`.
fn frac_constant(alpha: f64) -> f64 {
    alpha * 4f64.powf(alpha) * libm::tgamma((1.0 + 2.0 * alpha) / 2.0) / (PI.sqrt() * libm::tgamma(1.0 - alpha))
}

/// `∬|u(x)−u(y)|²/|x−y|^{1+2α}` for `u = e^{−x²}` as `2∫₀^∞ D(h)h^{−1−2α}dh`.
fn singular_integral(alpha: f64) -> f64 {
    let u = |x: f64| (-x * x).exp();
    let diff = |h: f64| {
        let (a, b) = (-8.0 - h, 8.0);
        let n = ((b - a) / 0.005).ceil() as usize;
        let step = (b - a) / n as f64;
        (0..=n)
            .map(|i| {
                let d = u(a + i as f64 * step + h) - u(a + i as f64 * step);
                if i == 0 || i == n {
                    0.5 * d * d
                } else {
                    d * d
                }
            })
            .sum::<f64>()
            * step
    };
    let q = 1.0 / (1.0 - alpha);
    let h_cut: f64 = 12.0;
    let t_cut = h_cut.powf(1.0 / q);
    let n = 2000;
    let dt = t_cut / n as f64;
    let integrand = |t: f64| {
        if t == 0.0 {
            return 0.0;
        }
        let h = t.powf(q);
        diff(h) * h.powf(-1.0 - 2.0 * alpha) * q * t.powf(q - 1.0)
    };
    let mut s = integrand(0.0) + integrand(t_cut);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * integrand(i as f64 * dt);
    }
    let tail = 2.0 * (PI / 2.0).sqrt() * h_cut.powf(-2.0 * alpha) / (2.0 * alpha);
    2.0 * (s * dt / 3.0 + tail)
}

fn seminorm() -> Outcome {
    let g = Grid::new(1, 16.0, 256).unwrap();
    let f = Field::from_fn(&g, |x| (-x[0] * x[0]).exp()).unwrap();
    let mut parts = Vec::new();
    for alpha in [0.25, 0.5, 0.75] {
        let spectral = h_alpha_seminorm_sq(&f, alpha).unwrap();
        let quad = 0.5 * frac_constant(alpha) * singular_integral(alpha);
        let rel = (spectral - quad).abs() / quad;
        ensure(rel < 0.02, format!("α={alpha}: {spectral} vs {quad}"))?;
        parts.push(format!("α={alpha} {rel:.1e}"));
    }
    Ok(parts.join(", "))
}

fn multiplicative_model(drift: DriftSpec) -> (Model, Field) {
    let g = Grid::new(1, 6.0, 128).unwrap();
    let kappa = Field::from_fn(&g, |x| 0.5 * (-x[0] * x[0] / 4.0).exp()).unwrap();
    let basis = ModeBasis::Localized { offset: 0, width: 1.5 };
    let noise = NoiseSpec::from_basis(&g, 4, basis, 1.0, 1.0, kappa, Sigma2Family::Linear, 0.8).unwrap();
    let time = TimeGrid::new(0.5, 50).unwrap();
    let model = Model::new(&g, 0.6, drift, noise, time).unwrap();
    let u0 = Field::from_fn(&g, |x| (-x[0] * x[0]).exp()).unwrap();
    (model, u0)
}

fn gradient_oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    for (di, drift) in [DriftSpec::linear(0.5).unwrap(), DriftSpec::canonical(4.0, 1.0, 0.5).unwrap()]
        .into_iter()
        .enumerate()
    {
        let (model, u0) = multiplicative_model(drift);
        let phi = Field::from_fn(&model.grid, |x| 0.8 * (-(x[0] - 0.5).powi(2)).exp()).unwrap();
        let p = RateProblem::new(model.clone(), u0, Target::Endpoint(phi), 5.0).unwrap();
        let v = random_control(model.time, 4, 10 + di as u64, 0.7);
        let e = objective_and_gradient(&p, &v).unwrap();
        let h = 1e-4;
        for d in 0..20 {
            let dir = random_control(model.time, 4, 100 + d, 1.0);
            let j = |s: f64| objective_and_gradient(&p, &v.add_scaled(s, &dir).unwrap()).unwrap().objective;
            let fd = (j(h) - j(-h)) / (2.0 * h);
            let ad = e.gradient.dot(&dir);
            let rel = (fd - ad).abs() / fd.abs().max(ad.abs());
            ensure(rel <= 1e-5, format!("drift {di} direction {d}: {rel:e}"))?;
            worst = worst.max(rel);
        }
    }
    Ok(format!("worst relative error {worst:.1e} over 2x20 directions"))
}

/// Single Fourier mode `cos(x)/√π` on `[−π, π)` with `|ξ| = 1`.
fn ou_model(c: f64, b: f64, horizon: f64, steps: usize) -> (Model, Field) {
    let g = Grid::new(1, PI, 32).unwrap();
    let phi = basis_profile(&g, ModeBasis::Fourier { offset: 1 }, 0).unwrap();
    let noise = NoiseSpec::additive(vec![phi.scaled(c)]).unwrap();
    let model = Model::new(&g, 0.5, DriftSpec::linear(b).unwrap(), noise, TimeGrid::new(horizon, steps).unwrap()).unwrap();
    (model, phi)
}

fn lq_rate() -> Outcome {
    let (c, b, horizon, x) = (1.3, 0.5, 1.0, 1.2);
    let (model, phi) = ou_model(c, b, horizon, 400);
    let a = 1.0 + b;
    let u0 = Field::zeros(&model.grid);
    let target = Target::Projection { profile: phi, level: x };
    let p = RateProblem::new(model.clone(), u0, target, 1e4).unwrap();
    let r = minimize(&p, &Control::zeros(model.time, 1)).unwrap();
    ensure(r.converged, "optimizer did not converge")?;
    let exact = a * x * x / (c * c * (1.0 - (-2.0 * a * horizon).exp()));
    let rel = (r.action - exact).abs() / exact;
    ensure(rel < 0.02, format!("action {} vs {exact}", r.action))?;
    let w = c * c * (1.0 - (-2.0 * a * horizon).exp()) / (2.0 * a);
    let dt = model.dt();
    let mut shape: f64 = 0.0;
    for m in 0..model.time.steps() {
        // piecewise-constant controls act at the cell midpoint
        let t = (m as f64 + 0.5) * dt;
        let want = c * (-a * (horizon - t)).exp() * x / w;
        shape = shape.max((r.control.at(m)[0] - want).abs() / want);
    }
    ensure(shape < 0.05, format!("control shape error {shape}"))?;
    Ok(format!("action {:.6} vs {exact:.6} (rel {rel:.1e}), pointwise shape error {shape:.1e}", r.action))
}

fn girsanov() -> Outcome {
    let (model, _) = ou_model(1.0, 0.5, 1.0, 50);
    let eps: f64 = 0.1;
    let u0 = Field::zeros(&model.grid);
    let v = Control::from_fn(model.time, 1, |t, _| eps.sqrt() * (1.0 + 0.5 * (3.0 * t).cos())).unwrap();
    let exec = RayonExecutor::new(0).unwrap();
    let (mean, se) = girsanov_mean(&exec, &model, &u0, eps, &v, 10_000, 4).unwrap();
    ensure((0.95..=1.05).contains(&mean), format!("mean {mean} ± {se}"))?;
    Ok(format!("mean {mean:.4} ± {se:.4} (N = 10000, ∫v²/ε = {:.2})", 2.0 * v.energy() / eps))
}

fn ldp_closure() -> Outcome {
    let cfg = load("ou_sweep.toml");
    let model = cfg.model().unwrap();
    let phi = cfg.profile(&model.grid).unwrap();
    let x = cfg.experiment.level;
    let u0 = Field::zeros(&model.grid);
    let target = Target::Projection { profile: phi.clone(), level: x };
    let p = RateProblem::new(model.clone(), u0.clone(), target, 1e3).unwrap();
    let r = minimize(&p, &Control::zeros(model.time, 1)).unwrap();
    ensure(r.converged, "optimizer did not converge")?;
    let a = 1.0 + 0.5;
    let w = (1.0 - (-2.0 * a * model.time.horizon()).exp()) / (2.0 * a);
    let gaussian = x * x / (2.0 * w);
    let act_rel = (r.action - gaussian).abs() / gaussian;
    ensure(act_rel < 0.02, format!("action {} vs Gaussian exponent {gaussian}", r.action))?;
    let exec = RayonExecutor::new(0).unwrap();
    let settings = SweepSettings {
        eps_list: vec![0.2, 0.1, 0.05, 0.02],
        samples: 10_000,
        seed: 1,
        z: 2.0,
    };
    let ev = EventSpec::TerminalThreshold { profile: phi, level: x };
    let s = ldp_sweep(&exec, &model, &u0, &ev, &settings, Some(&r.control), Some(r.action)).unwrap();
    let last = s.rows.last().unwrap();
    ensure(last.importance_sampled && !last.excluded, "smallest-eps estimate unusable")?;
    let gap = (last.neg_eps_log_p - r.action).abs() / r.action;
    ensure(gap <= 0.10, format!("-eps log p {} vs action {}", last.neg_eps_log_p, r.action))?;
    Ok(format!(
        "-eps log p at eps=0.02: {:.4}, action {:.4} (gap {:.1}%), Gaussian exponent {gaussian:.4} (rel {act_rel:.1e})",
        last.neg_eps_log_p,
        r.action,
        100.0 * gap
    ))
}

fn weak_convergence() -> Outcome {
    let exec = RayonExecutor::new(0).unwrap();
    let n_list = [1, 2, 4, 8, 16, 32];
    let (c, b, amp) = (1.0, 0.5, 1.0);
    let (model, phi) = ou_model(c, b, 1.0, 4096);
    let u0 = phi.scaled(0.3);
    let v = Control::from_fn(model.time, 1, |_, _| 0.5).unwrap();
    let rep = weak_convergence_experiment(&exec, &model, &u0, &v, 0, amp, &n_list).unwrap();
    ensure(rep.monotone, format!("linear distances not monotone: {:?}", rep.rows))?;
    ensure(rep.control_spread - 1.0 < 1e-9, format!("control distances vary: {}", rep.control_spread))?;
    let a = 1.0 + b;
    let dt = model.dt();
    let rho = (-dt).exp() * (1.0 - b * dt);
    let mut worst_rec: f64 = 0.0;
    let mut worst_ode: f64 = 0.0;
    for row in &rep.rows {
        let omega = 2.0 * PI * row.n as f64;
        // perturbation of the coefficient: exact discrete recursion
        let mut d: f64 = 0.0;
        let mut sup: f64 = 0.0;
        for m in 0..model.time.steps() {
            let t = m as f64 * dt;
            d = rho * d + (-dt).exp() * dt * c * amp * (omega * t).sin();
            sup = sup.max(d.abs());
        }
        worst_rec = worst_rec.max((row.sup_l2 - sup).abs() / sup);
        // δx' = −aδx + cA sin(ωt), δx(0) = 0
        let ode = (0..=model.time.steps())
            .map(|m| {
                let t = m as f64 * dt;
                c * amp * (a * (omega * t).sin() - omega * (omega * t).cos() + omega * (-a * t).exp()) / (a * a + omega * omega)
            })
            .fold(0.0, |acc: f64, y| acc.max(y.abs()));
        worst_ode = worst_ode.max((row.sup_l2 - ode).abs() / ode);
    }
    ensure(worst_rec < 1e-9, format!("recursion mismatch {worst_rec:e}"))?;
    ensure(worst_ode < 0.05, format!("scalar ODE mismatch {worst_ode}"))?;
    let first = rep.rows.first().unwrap().sup_l2;
    let last = rep.rows.last().unwrap().sup_l2;

    let cfg = load("weak_p4.toml");
    let model = cfg.model().unwrap();
    let u0 = cfg.initial(&model.grid).unwrap();
    let v = Control::from_fn(model.time, model.modes(), |_, k| if k == 0 { 0.5 } else { 0.0 }).unwrap();
    let rep4 = weak_convergence_experiment(&exec, &model, &u0, &v, 1, 2.0, &n_list).unwrap();
    ensure(rep4.monotone, format!("p=4 distances not monotone: {:?}", rep4.rows))?;
    ensure(rep4.control_spread - 1.0 < 1e-9, format!("p=4 control distances vary: {}", rep4.control_spread))?;
    Ok(format!(
        "linear sup distance {first:.3e} -> {last:.3e}, recursion {worst_rec:.1e}, ODE {worst_ode:.1e}; p=4 sup {:.3e} -> {:.3e}; control distance {:.4}",
        rep4.rows[0].sup_l2,
        rep4.rows.last().unwrap().sup_l2,
        rep.rows[0].control_distance
    ))
}

fn tail_decay() -> Outcome {
    let cfg = load("tail.toml");
    let model = cfg.model().unwrap();
    let u0 = cfg.initial(&model.grid).unwrap();
    let exec = RayonExecutor::new(0).unwrap();
    let m_list = cfg.tail_radii();
    let mut parts = Vec::new();
    for radius in [1.0, 2.0] {
        let rep = tail_experiment(&exec, &model, &u0, radius, &m_list, 50, cfg.experiment.seed).unwrap();
        ensure(rep.blowups == 0, format!("R={radius}: {} blow-ups", rep.blowups))?;
        let worst: Vec<f64> = rep.rows.iter().map(|r| r.worst).collect();
        ensure(worst.windows(2).all(|w| w[1] <= w[0]), format!("R={radius}: not monotone {worst:?}"))?;
        let below = rep.rows.iter().find(|r| r.worst < 1e-6);
        let m = below.ok_or(format!("R={radius}: never below 1e-6 {worst:?}"))?.m;
        parts.push(format!("R={radius}: {:.2e} -> {:.2e}, below 1e-6 from m={m}", worst[0], worst[worst.len() - 1]));
    }
    Ok(parts.join("; "))
}

fn energy() -> Outcome {
    let (model, u0) = multiplicative_model(DriftSpec::canonical(4.0, 1.0, 0.5).unwrap());
    let k = model.modes();
    let mut det = Vec::new();
    for steps in [100, 200, 400] {
        let model = model.clone().with_time(TimeGrid::new(0.5, steps).unwrap());
        let tr = simulate_spde(&model, &u0, 0.0, &mut NoiseStream::new(0, 0, k)).unwrap();
        det.push(energy_residual(&tr, &model, 0.0, &mut NoiseStream::new(0, 0, k)).unwrap());
    }
    for w in det.windows(2) {
        let ratio = w[0] / w[1];
        ensure((1.4..=2.6).contains(&ratio), format!("deterministic residuals {det:?}"))?;
    }
    // one Brownian path per index, refined by coarsening a fine stream
    let eps = 0.05;
    let fine = 1600;
    let paths = 8;
    let mut sto = Vec::new();
    for steps in [100, 200, 400, 800, 1600] {
        let model = model.clone().with_time(TimeGrid::new(0.5, steps).unwrap());
        let mut total = 0.0;
        for i in 0..paths {
            let stream = || NoiseStream::new(5, i, k).coarsened(fine / steps);
            let tr = simulate_spde(&model, &u0, eps, &mut stream()).unwrap();
            total += energy_residual(&tr, &model, eps, &mut stream()).unwrap();
        }
        sto.push(total / paths as f64);
    }
    ensure(sto.windows(2).all(|w| w[1] < w[0]), format!("stochastic residuals {sto:?}"))?;
    Ok(format!(
        "deterministic ratios {:.2} {:.2}; stochastic mean residual {:.2e} -> {:.2e} over dt/16",
        det[0] / det[1],
        det[1] / det[2],
        sto[0],
        sto[sto.len() - 1]
    ))
}

fn run_cli(command: &str, config: &Path, threads: usize, out: &Path) -> (i32, Vec<u8>, serde_json::Value) {
    let status = Command::new(env!("CARGO_BIN_EXE_fracldp"))
        .arg(command)
        .arg(config)
        .arg("--threads")
        .arg(threads.to_string())
        .arg("--out-dir")
        .arg(out)
        .output()
        .unwrap();
    let code = status.status.code().unwrap_or(-1);
    let csv = std::fs::read(out.join("results.csv")).unwrap_or_default();
    let mut json: serde_json::Value = std::fs::read_to_string(out.join("result.json"))
        .ok()
        .and_then(|s| serde_json::from_str(&s).ok())
        .unwrap_or(serde_json::Value::Null);
    if let Some(obj) = json.as_object_mut() {
        obj.remove("timings");
    }
    (code, csv, json)
}

fn determinism() -> Outcome {
    let runs = [
        ("simulate", "simulate_canonical.toml"),
        ("skeleton", "skeleton_canonical.toml"),
        ("rate", "lq_benchmark.toml"),
        ("mc", "ou_mc.toml"),
        ("sweep", "ou_sweep.toml"),
        ("sweep", "sweep_p4.toml"),
        ("lab", "tail.toml"),
        ("lab", "weak_linear.toml"),
        ("lab", "weak_p4.toml"),
        ("lab", "moment_bound.toml"),
        ("check", "canonical_check.toml"),
    ];
    let dir = tempfile::tempdir().unwrap();
    for (command, file) in runs {
        let config = configs().join(file);
        let mut reference = None;
        for threads in [1, 4, 8] {
            let out = dir.path().join(format!("{file}-{threads}"));
            let (code, csv, json) = run_cli(command, &config, threads, &out);
            ensure(code == 0 || code == 2, format!("{command} {file}: exit {code}"))?;
            ensure(!csv.is_empty() && !json.is_null(), format!("{command} {file}: missing outputs"))?;
            match &reference {
                None => reference = Some((csv, json)),
                Some((c0, j0)) => {
                    ensure(&csv == c0, format!("{command} {file}: results.csv differs at {threads} threads"))?;
                    ensure(&json == j0, format!("{command} {file}: result.json differs at {threads} threads"))?;
                }
            }
        }
    }
    Ok(format!("{} runs identical across 1/4/8 threads", runs.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("spectral core", spectral_core),
        ("fractional seminorm vs singular integral", seminorm),
        ("adjoint gradient vs finite differences", gradient_oracle),
        ("linear-quadratic minimal action and control", lq_rate),
        ("likelihood ratio unit mean", girsanov),
        ("small-noise closure on the OU benchmark", ldp_closure),
        ("weak-convergence signature", weak_convergence),
        ("tail decay over random controls", tail_decay),
        ("energy identity residual", energy),
        ("thread-count determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} [{secs:.1}s]: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name} [{secs:.1}s]: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
