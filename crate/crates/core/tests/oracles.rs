//! Checks against closed-form or independently computed references.

use fracldp_core::drift::DriftSpec;
use fracldp_core::mc::{estimate_is, estimate_naive, girsanov_mean, EventSpec};
use fracldp_core::noise::{basis_profile, ModeBasis, NoiseSpec, Sigma2Family};
use fracldp_core::rate::{gradient_check, minimize, RateProblem, Target};
use fracldp_core::rng::{AuxNormals, NoiseStream};
use fracldp_core::skeleton::integrate_skeleton;
use fracldp_core::spde::{energy_residual, simulate_spde, terminal_projections};
use fracldp_core::spectral::h_alpha_seminorm_sq;
use fracldp_core::{Control, Field, Grid, Model, Sequential, TimeGrid};

fn gauss_tail(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// `C(1, α)` with the normalization `½C∬|u(x)−u(y)|²/|x−y|^{1+2α} = ‖(−Δ)^{α/2}u‖²`.
fn frac_constant(alpha: f64) -> f64 {
    alpha * 4f64.powf(alpha) * libm::tgamma((1.0 + 2.0 * alpha) / 2.0)
        / (std::f64::consts::PI.sqrt() * libm::tgamma(1.0 - alpha))
}

/// `∬ |u(x)−u(y)|²/|x−y|^{1+2α}` for `u = e^{−x²}` on the line, as
/// `2∫₀^∞ D(h) h^{−1−2α} dh` with `D(h) = ∫|u(x+h)−u(x)|²dx`.
fn seminorm_quadrature(alpha: f64) -> f64 {
    let u = |x: f64| (-x * x).exp();
    let dx = 0.005;
    let diff = |h: f64| {
        let (a, b) = (-8.0 - h, 8.0);
        let n = ((b - a) / dx).ceil() as usize;
        let step = (b - a) / n as f64;
        (0..=n)
            .map(|i| {
                let x = a + i as f64 * step;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                let d = u(x + h) - u(x);
                w * d * d
            })
            .sum::<f64>()
            * step
    };
    // h = t^q removes the endpoint singularity
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
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * integrand(i as f64 * dt);
    }
    let body = s * dt / 3.0;
    // past h_cut the bump and its shift no longer overlap: D = 2‖u‖²
    let norm_sq = (std::f64::consts::PI / 2.0).sqrt();
    let tail = 2.0 * norm_sq * h_cut.powf(-2.0 * alpha) / (2.0 * alpha);
    2.0 * (body + tail)
}

#[test]
fn seminorm_matches_singular_integral() {
    let g = Grid::new(1, 16.0, 256).unwrap();
    let f = Field::from_fn(&g, |x| (-x[0] * x[0]).exp()).unwrap();
    for alpha in [0.25, 0.5, 0.75] {
        let spectral = h_alpha_seminorm_sq(&f, alpha).unwrap();
        let quad = 0.5 * frac_constant(alpha) * seminorm_quadrature(alpha);
        assert!((spectral - quad).abs() < 0.02 * quad, "α={alpha}: {spectral} vs {quad}");
    }
}

/// Single Fourier mode `φ = cos(x)/√π` on `[−π, π)`, with `|ξ| = 1`.
struct Ou {
    model: Model,
    phi: Field,
    mu: f64,
    b: f64,
    c: f64,
}

fn ou(alpha: f64, b: f64, c: f64, horizon: f64, steps: usize) -> Ou {
    let g = Grid::new(1, std::f64::consts::PI, 32).unwrap();
    let phi = basis_profile(&g, ModeBasis::Fourier { offset: 1 }, 0).unwrap();
    let noise = NoiseSpec::additive(vec![phi.scaled(c)]).unwrap();
    let time = TimeGrid::new(horizon, steps).unwrap();
    let model = Model::new(&g, alpha, DriftSpec::linear(b).unwrap(), noise, time).unwrap();
    Ou {
        model,
        phi,
        mu: 1.0,
        b,
        c,
    }
}

impl Ou {
    fn rho(&self) -> f64 {
        let dt = self.model.dt();
        (-self.mu * dt).exp() * (1.0 - self.b * dt)
    }

    /// `X^M = Σ_m g_m (dt vₘ + √ε ΔWₘ)`
    fn gains(&self) -> Vec<f64> {
        let dt = self.model.dt();
        let m = self.model.time.steps();
        (0..m)
            .map(|j| self.c * (-self.mu * dt).exp() * self.rho().powi((m - 1 - j) as i32))
            .collect()
    }

    fn discrete_gramian(&self) -> f64 {
        let dt = self.model.dt();
        self.gains().iter().map(|g| dt * g * g).sum()
    }

    fn optimal(&self, x: f64) -> Control {
        let w = self.discrete_gramian();
        let v: Vec<f64> = self.gains().iter().map(|g| x * g / w).collect();
        Control::new(self.model.time, 1, v).unwrap()
    }
}

#[test]
fn skeleton_follows_scalar_recursion() {
    let o = ou(0.5, 0.5, 1.3, 1.0, 40);
    let v = Control::from_fn(o.model.time, 1, |t, _| (3.0 * t).sin() + 0.5).unwrap();
    let x0 = 0.7;
    let u0 = o.phi.scaled(x0);
    let tr = integrate_skeleton(&o.model, &u0, &v).unwrap();
    let dt = o.model.dt();
    let mut x = x0;
    for m in 0..40 {
        x = (-o.mu * dt).exp() * ((1.0 - o.b * dt) * x + dt * o.c * v.at(m)[0]);
        let got = tr.fields[m + 1].inner(&o.phi).unwrap();
        assert!((got - x).abs() < 1e-12, "step {m}: {got} vs {x}");
    }
}

#[test]
fn ou_terminal_variance() {
    let o = ou(0.5, 0.5, 1.0, 1.0, 50);
    let eps = 0.3;
    let u0 = Field::zeros(&o.model.grid);
    let n = 4000;
    let trs: Vec<_> = (0..n)
        .map(|i| simulate_spde(&o.model, &u0, eps, &mut NoiseStream::new(17, i, 1)).unwrap())
        .collect();
    let xs = terminal_projections(&trs, &o.phi).unwrap();
    let var = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
    let exact = eps * o.discrete_gramian();
    // chi-square: sd of the sample variance is √(2/n)·exact
    assert!((var - exact).abs() < 4.0 * (2.0 / n as f64).sqrt() * exact, "{var} vs {exact}");
}

#[test]
fn lq_minimal_action() {
    let o = ou(0.5, 0.5, 1.0, 1.0, 200);
    let x = 1.2;
    let u0 = Field::zeros(&o.model.grid);
    let target = Target::Projection {
        profile: o.phi.clone(),
        level: x,
    };
    let p = RateProblem::new(o.model.clone(), u0, target, 1e3).unwrap();
    let r = minimize(&p, &Control::zeros(o.model.time, 1)).unwrap();
    assert!(r.converged);
    let discrete = x * x / (2.0 * o.discrete_gramian());
    assert!((r.action - discrete).abs() < 1e-3 * discrete, "{} vs {discrete}", r.action);
    let a = o.mu + o.b;
    let continuous = a * x * x / (1.0 - (-2.0 * a).exp());
    assert!((r.action - continuous).abs() < 0.02 * continuous);
    let best = o.optimal(x);
    for (got, want) in r.control.values().iter().zip(best.values()) {
        assert!((got - want).abs() < 0.01 * want.abs());
    }
}

fn random_control(time: TimeGrid, modes: usize, seed: u64, scale: f64) -> Control {
    let mut aux = AuxNormals::new(seed, 0);
    let v: Vec<f64> = (0..time.steps() * modes).map(|_| scale * aux.normal()).collect();
    Control::new(time, modes, v).unwrap()
}

fn multiplicative_model(drift: DriftSpec) -> (Model, Field) {
    let g = Grid::new(1, 6.0, 64).unwrap();
    let kappa = Field::from_fn(&g, |x| 0.5 * (-x[0] * x[0] / 4.0).exp()).unwrap();
    let noise = NoiseSpec::from_basis(
        &g,
        3,
        ModeBasis::Localized { offset: 0, width: 1.5 },
        1.0,
        1.0,
        kappa,
        Sigma2Family::Linear,
        0.8,
    )
    .unwrap();
    let time = TimeGrid::new(0.5, 40).unwrap();
    let model = Model::new(&g, 0.6, drift, noise, time).unwrap();
    let u0 = Field::from_fn(&g, |x| (-x[0] * x[0]).exp()).unwrap();
    (model, u0)
}

#[test]
fn adjoint_gradient_matches_finite_differences() {
    for drift in [DriftSpec::linear(0.5).unwrap(), DriftSpec::canonical(4.0, 1.0, 0.5).unwrap()] {
        let (model, u0) = multiplicative_model(drift);
        let g = model.grid.clone();
        let phi = Field::from_fn(&g, |x| 0.8 * (-(x[0] - 0.5).powi(2)).exp()).unwrap();
        let path: Vec<Field> = (0..=model.time.steps())
            .map(|m| phi.scaled(m as f64 / model.time.steps() as f64))
            .collect();
        let targets = [
            Target::Endpoint(phi.clone()),
            Target::Projection { profile: phi.clone(), level: 0.3 },
            Target::Path { fields: path, weights: None },
        ];
        for (ti, target) in targets.into_iter().enumerate() {
            let p = RateProblem::new(model.clone(), u0.clone(), target, 5.0).unwrap();
            let v = random_control(model.time, 3, 100 + ti as u64, 0.7);
            for d in 0..4 {
                let dir = random_control(model.time, 3, 200 + d, 1.0);
                let err = gradient_check(&p, &v, &dir, 1e-4).unwrap();
                assert!(err < 1e-5, "target {ti} dir {d}: {err}");
            }
        }
    }
}

#[test]
fn naive_estimate_matches_gaussian_tail() {
    let o = ou(0.5, 0.5, 1.0, 1.0, 50);
    let eps = 0.2;
    let sd = (eps * o.discrete_gramian()).sqrt();
    let x = 1.5 * sd;
    let u0 = Field::zeros(&o.model.grid);
    let ev = EventSpec::TerminalThreshold { profile: o.phi.clone(), level: x };
    let est = estimate_naive(&Sequential, &o.model, &u0, &ev, eps, 5000, 3).unwrap();
    let truth = gauss_tail(1.5);
    assert!((est.p_hat - truth).abs() < 3.0 * est.std_error, "{} vs {truth}", est.p_hat);
}

#[test]
fn importance_sampling_reaches_tiny_probabilities() {
    let o = ou(0.5, 0.5, 1.0, 1.0, 50);
    let eps = 0.1;
    let z = 4.75;
    let x = z * (eps * o.discrete_gramian()).sqrt();
    let u0 = Field::zeros(&o.model.grid);
    let ev = EventSpec::TerminalThreshold { profile: o.phi.clone(), level: x };
    let truth = gauss_tail(z);
    let is = estimate_is(&Sequential, &o.model, &u0, &ev, eps, &o.optimal(x), 10_000, 8).unwrap();
    assert!((is.p_hat - truth).abs() < 3.0 * is.std_error, "{} ± {} vs {truth}", is.p_hat, is.std_error);
    assert!(!is.degenerate);
    let naive = estimate_naive(&Sequential, &o.model, &u0, &ev, eps, 10_000, 8).unwrap();
    assert_eq!(naive.hits, 0);
    assert!(naive.upper_bound);
}

#[test]
fn naive_and_tilted_agree_at_moderate_probability() {
    let o = ou(0.5, 0.5, 1.0, 1.0, 50);
    let eps = 0.2;
    let x = 1.645 * (eps * o.discrete_gramian()).sqrt();
    let u0 = Field::zeros(&o.model.grid);
    let ev = EventSpec::TerminalThreshold { profile: o.phi.clone(), level: x };
    let naive = estimate_naive(&Sequential, &o.model, &u0, &ev, eps, 4000, 21).unwrap();
    let is = estimate_is(&Sequential, &o.model, &u0, &ev, eps, &o.optimal(x), 4000, 22).unwrap();
    let joint = (naive.std_error.powi(2) + is.std_error.powi(2)).sqrt();
    assert!((naive.p_hat - is.p_hat).abs() < 3.0 * joint);
    // a tilt in the wrong direction would underestimate by orders of magnitude
    assert!(is.p_hat > 0.03 && is.p_hat < 0.07);
}

#[test]
fn likelihood_ratio_has_unit_mean() {
    let o = ou(0.5, 0.5, 1.0, 1.0, 50);
    let eps: f64 = 0.1;
    let u0 = Field::zeros(&o.model.grid);
    // ∫v²/ε = 1: the reciprocal weight would average e
    let v = Control::from_fn(o.model.time, 1, |_, _| eps.sqrt()).unwrap();
    let (mean, se) = girsanov_mean(&Sequential, &o.model, &u0, eps, &v, 10_000, 4).unwrap();
    assert!((mean - 1.0).abs() < 0.05, "{mean} ± {se}");
}

#[test]
fn deterministic_energy_residual_is_first_order() {
    let mut res = Vec::new();
    for steps in [100, 200, 400] {
        let (model, u0) = multiplicative_model(DriftSpec::canonical(4.0, 1.0, 0.5).unwrap());
        let model = model.with_time(TimeGrid::new(0.5, steps).unwrap());
        let tr = simulate_spde(&model, &u0, 0.0, &mut NoiseStream::new(0, 0, 3)).unwrap();
        res.push(energy_residual(&tr, &model, 0.0, &mut NoiseStream::new(0, 0, 3)).unwrap());
    }
    for w in res.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.4..2.6).contains(&ratio), "{res:?}");
    }
}
