use fracldp_core::spectral::{forward, frac_laplacian, h_alpha_seminorm_sq, inverse, semigroup, tail_mass};
use fracldp_core::{Field, Grid};
use proptest::prelude::*;

fn grid(n: usize) -> Grid {
    Grid::new(1, 4.0, n).unwrap()
}

fn field(g: &Grid, v: &[f64]) -> Field {
    Field::new(g, v.to_vec()).unwrap()
}

fn values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, n)
}

proptest! {
    #[test]
    fn parseval(v in values(32)) {
        let g = grid(32);
        let f = field(&g, &v);
        let s = forward(&f).unwrap();
        prop_assert!((s.parseval_sum() - f.l2_norm_sq()).abs() <= 1e-10 * (1.0 + f.l2_norm_sq()));
        prop_assert!(s.hermitian_defect() < 1e-10);
        let back = inverse(&s).unwrap();
        for (a, b) in back.values().iter().zip(f.values()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn laplacian_is_symmetric(a in values(32), b in values(32), alpha in 0.05f64..1.0) {
        let g = grid(32);
        let (fa, fb) = (field(&g, &a), field(&g, &b));
        let l = frac_laplacian(&fa, alpha).unwrap().inner(&fb).unwrap();
        let r = fa.inner(&frac_laplacian(&fb, alpha).unwrap()).unwrap();
        prop_assert!((l - r).abs() <= 1e-9 * (1.0 + l.abs()));
        // ⟨(−Δ)^α f, f⟩ = ‖(−Δ)^{α/2} f‖² ≥ 0
        let q = frac_laplacian(&fa, alpha).unwrap().inner(&fa).unwrap();
        let s = h_alpha_seminorm_sq(&fa, alpha).unwrap();
        prop_assert!(s >= 0.0);
        prop_assert!((q - s).abs() <= 1e-9 * (1.0 + s));
    }

    #[test]
    fn laplacian_is_linear(a in values(16), b in values(16), c in -2.0f64..2.0) {
        let g = grid(16);
        let (fa, fb) = (field(&g, &a), field(&g, &b));
        let lhs = frac_laplacian(&fa.add_scaled(c, &fb).unwrap(), 0.6).unwrap();
        let rhs = frac_laplacian(&fa, 0.6).unwrap().add_scaled(c, &frac_laplacian(&fb, 0.6).unwrap()).unwrap();
        for (x, y) in lhs.values().iter().zip(rhs.values()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn semigroup_law_and_contraction(v in values(32), s in 0.0f64..1.0, t in 0.0f64..1.0, alpha in 0.1f64..1.0) {
        let g = grid(32);
        let f = field(&g, &v);
        let two = semigroup(&semigroup(&f, alpha, s).unwrap(), alpha, t).unwrap();
        let one = semigroup(&f, alpha, s + t).unwrap();
        for (x, y) in two.values().iter().zip(one.values()) {
            prop_assert!((x - y).abs() < 1e-10);
        }
        prop_assert!(one.l2_norm() <= f.l2_norm() * (1.0 + 1e-12));
    }

    #[test]
    fn tail_mass_is_monotone(v in values(64), m1 in 0.1f64..3.9, m2 in 0.1f64..3.9) {
        let g = grid(64);
        let f = field(&g, &v);
        let (lo, hi) = if m1 < m2 { (m1, m2) } else { (m2, m1) };
        let a = tail_mass(&f, lo).unwrap();
        let b = tail_mass(&f, hi).unwrap();
        prop_assert!(b <= a && a <= f.l2_norm_sq() * (1.0 + 1e-12));
    }
}

#[test]
fn zero_time_semigroup_is_identity() {
    let g = grid(32);
    let f = Field::from_fn(&g, |x| (x[0]).sin() + 0.3).unwrap();
    assert_eq!(semigroup(&f, 0.5, 0.0).unwrap().values().len(), 32);
    for (a, b) in semigroup(&f, 0.5, 0.0).unwrap().values().iter().zip(f.values()) {
        assert!((a - b).abs() < 1e-13);
    }
}

// −u'' by the three-point stencil, periodic.
fn fd_neg_laplacian(f: &Field) -> Vec<f64> {
    let v = f.values();
    let n = v.len();
    let h = f.grid().spacing();
    (0..n)
        .map(|i| -(v[(i + 1) % n] - 2.0 * v[i] + v[(i + n - 1) % n]) / (h * h))
        .collect()
}

#[test]
fn unit_order_matches_second_differences() {
    let mut errs = Vec::new();
    for n in [64, 128, 256] {
        let g = Grid::new(1, 8.0, n).unwrap();
        let f = Field::from_fn(&g, |x| (-x[0] * x[0]).exp()).unwrap();
        let spec = frac_laplacian(&f, 1.0).unwrap();
        let fd = fd_neg_laplacian(&f);
        let err = spec
            .values()
            .iter()
            .zip(&fd)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        errs.push(err);
    }
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.6..4.4).contains(&ratio), "{errs:?}");
    }
}

#[test]
fn two_dimensional_laplacian_of_product_mode() {
    let g = Grid::new(2, std::f64::consts::PI, 16).unwrap();
    let f = Field::from_fn(&g, |x| (2.0 * x[0]).cos() * (3.0 * x[1]).sin()).unwrap();
    let l = frac_laplacian(&f, 0.5).unwrap();
    for (a, b) in l.values().iter().zip(f.values()) {
        assert!((a - 13f64.sqrt() * b).abs() < 1e-10);
    }
}
