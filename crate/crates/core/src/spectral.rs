//! Periodic grids, real fields and their unitary Fourier representation.
//!
//! The box is `[-L, L)^n` sampled at `N` points per axis. Wavenumbers are
//! `ξ_j = π j / L` for `j ∈ {-N/2, …, N/2 - 1}`, stored in FFT order.
//! With the unitary transform used here, `‖f‖² = h^n Σ |f̂_ξ|²`, so the
//! Parseval factor is the cell volume `h^n`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use num_complex::Complex64;
// inherent float methods shadow these when std is linked
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fft::FftPlan;

pub const MAX_DIMS: usize = 3;

struct GridInner {
    dims: usize,
    half_width: f64,
    points: usize,
    plan: FftPlan,
    // |ξ|² at each flat spectral index
    wave_sq: Vec<f64>,
    // |x| at each flat physical index
    radius: Vec<f64>,
}

/// Uniform periodic grid on `[-L, L)^n`.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dims", &self.inner.dims)
            .field("half_width", &self.inner.half_width)
            .field("points", &self.inner.points)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.dims == other.inner.dims
                && self.inner.points == other.inner.points
                && self.inner.half_width == other.inner.half_width)
    }
}

impl Grid {
    pub fn new(dims: usize, half_width: f64, points: usize) -> Result<Self> {
        if !(1..=MAX_DIMS).contains(&dims) {
            return Err(Error::invalid("dims", "spatial dimension must be 1, 2 or 3"));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::invalid("half_width", "must be positive and finite"));
        }
        if points < 4 || !points.is_power_of_two() {
            return Err(Error::invalid(
                "points",
                "points per dimension must be a power of two and at least 4",
            ));
        }
        let total = points.pow(dims as u32);
        let spacing = 2.0 * half_width / points as f64;
        let mut wave_sq = vec![0.0; total];
        let mut radius = vec![0.0; total];
        let mut idx = [0usize; MAX_DIMS];
        for flat in 0..total {
            unflatten(flat, dims, points, &mut idx);
            let mut k2 = 0.0;
            let mut r2 = 0.0;
            for &i in &idx[..dims] {
                let j = if i < points / 2 {
                    i as f64
                } else {
                    i as f64 - points as f64
                };
                let xi = PI * j / half_width;
                k2 += xi * xi;
                let x = -half_width + i as f64 * spacing;
                r2 += x * x;
            }
            wave_sq[flat] = k2;
            radius[flat] = r2.sqrt();
        }
        Ok(Self {
            inner: Arc::new(GridInner {
                dims,
                half_width,
                points,
                plan: FftPlan::new(points),
                wave_sq,
                radius,
            }),
        })
    }

    pub fn dims(&self) -> usize {
        self.inner.dims
    }

    pub fn half_width(&self) -> f64 {
        self.inner.half_width
    }

    pub fn points(&self) -> usize {
        self.inner.points
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.inner.half_width / self.inner.points as f64
    }

    /// Total number of grid points, `N^n`.
    pub fn len(&self) -> usize {
        self.inner.wave_sq.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.inner.dims as i32)
    }

    /// Coordinates of the point at `flat` (only the first `dims` entries are meaningful).
    pub fn point(&self, flat: usize) -> [f64; MAX_DIMS] {
        let mut idx = [0usize; MAX_DIMS];
        unflatten(flat, self.inner.dims, self.inner.points, &mut idx);
        let h = self.spacing();
        let mut x = [0.0; MAX_DIMS];
        for d in 0..self.inner.dims {
            x[d] = -self.inner.half_width + idx[d] as f64 * h;
        }
        x
    }

    /// Euclidean distance of the point at `flat` from the origin.
    pub fn radius(&self, flat: usize) -> f64 {
        self.inner.radius[flat]
    }

    /// Wavevector at a flat spectral index (first `dims` entries meaningful).
    pub fn wavevector(&self, flat: usize) -> [f64; MAX_DIMS] {
        let n = self.inner.points;
        let mut idx = [0usize; MAX_DIMS];
        unflatten(flat, self.inner.dims, n, &mut idx);
        let mut xi = [0.0; MAX_DIMS];
        for d in 0..self.inner.dims {
            let j = if idx[d] < n / 2 {
                idx[d] as f64
            } else {
                idx[d] as f64 - n as f64
            };
            xi[d] = PI * j / self.inner.half_width;
        }
        xi
    }

    /// `|ξ|²` at every flat spectral index.
    pub fn wave_sq(&self) -> &[f64] {
        &self.inner.wave_sq
    }

    /// Evaluates a radial spectral symbol `s(|ξ|²)` on the grid.
    pub fn symbol(&self, s: impl Fn(f64) -> f64) -> Vec<f64> {
        self.inner.wave_sq.iter().map(|&k2| s(k2)).collect()
    }

    pub(crate) fn fft(&self, data: &mut [Complex64], inverse: bool) {
        self.inner.plan.transform_nd(data, self.inner.dims, inverse);
    }
}

fn unflatten(mut flat: usize, dims: usize, n: usize, idx: &mut [usize; MAX_DIMS]) {
    for d in (0..dims).rev() {
        idx[d] = flat % n;
        flat /= n;
    }
}

/// Real grid function.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                what: "field values",
                expected: grid.len(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "field" });
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub(crate) fn from_raw(grid: &Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self::from_raw(grid, vec![c; grid.len()])
    }

    /// Samples `f(x)` at every grid point; `x` has `grid.dims()` entries.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let dims = grid.dims();
        let values = (0..grid.len())
            .map(|i| {
                let x = grid.point(i);
                f(&x[..dims])
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    fn same_grid(&self, other: &Field) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// `(h^n Σ |f_i|^p)^{1/p}` for `p ≥ 1`.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::invalid("p", "L^p exponent must be at least 1"));
        }
        Ok(self.lp_norm_pow(p).powf(1.0 / p))
    }

    /// `h^n Σ |f_i|^p`, the p-th power of the L^p norm.
    pub fn lp_norm_pow(&self, p: f64) -> f64 {
        self.grid.cell_volume() * self.values.iter().map(|v| v.abs().powf(p)).sum::<f64>()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn inner(&self, other: &Field) -> Result<f64> {
        self.same_grid(other)?;
        Ok(dot(&self.values, &other.values) * self.grid.cell_volume())
    }

    /// `self + a·other`.
    pub fn add_scaled(&self, a: f64, other: &Field) -> Result<Field> {
        self.same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x + a * y)
            .collect();
        Ok(Field::from_raw(&self.grid, values))
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.add_scaled(-1.0, other)
    }

    pub fn scaled(&self, a: f64) -> Field {
        Field::from_raw(&self.grid, self.values.iter().map(|v| a * v).collect())
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x * y)
            .collect();
        Ok(Field::from_raw(&self.grid, values))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fourier coefficients of a field on its grid, in FFT index order.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: &Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                what: "spectral coefficients",
                expected: grid.len(),
                found: coeffs.len(),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            coeffs,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `h^n Σ |c|²`, equal to the squared L² norm of the represented field.
    pub fn parseval_sum(&self) -> f64 {
        self.grid.cell_volume() * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    /// Flat index of the mode `-ξ` for the mode at `flat`.
    pub fn conjugate_index(&self, flat: usize) -> usize {
        let n = self.grid.points();
        let dims = self.grid.dims();
        let mut idx = [0usize; MAX_DIMS];
        unflatten(flat, dims, n, &mut idx);
        idx[..dims]
            .iter()
            .fold(0, |acc, &i| acc * n + (n - i) % n)
    }

    /// Largest `|c_ξ - conj(c_{-ξ})|`; zero for the transform of a real field.
    pub fn hermitian_defect(&self) -> f64 {
        (0..self.coeffs.len())
            .map(|i| (self.coeffs[i] - self.coeffs[self.conjugate_index(i)].conj()).norm())
            .fold(0.0, f64::max)
    }
}

/// Unitary forward transform.
pub fn forward(f: &Field) -> Result<SpectralField> {
    if !f.is_finite() {
        return Err(Error::NonFinite { what: "field" });
    }
    let mut coeffs: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    f.grid.fft(&mut coeffs, false);
    Ok(SpectralField {
        grid: f.grid.clone(),
        coeffs,
    })
}

/// Inverse of [`forward`]; keeps the real part.
pub fn inverse(s: &SpectralField) -> Result<Field> {
    if s.coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return Err(Error::NonFinite {
            what: "spectral field",
        });
    }
    let mut data = s.coeffs.clone();
    s.grid.fft(&mut data, true);
    Ok(Field::from_raw(&s.grid, data.iter().map(|c| c.re).collect()))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("alpha", "fractional order must lie in (0, 1]"))
    }
}

/// `‖(-Δ)^{α/2} f‖²`, computed spectrally.
pub fn h_alpha_seminorm_sq(f: &Field, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let s = forward(f)?;
    let weighted: f64 = s
        .coeffs
        .iter()
        .zip(f.grid.wave_sq())
        .map(|(c, &k2)| k2.powf(alpha) * c.norm_sqr())
        .sum();
    Ok(weighted * f.grid.cell_volume())
}

/// `‖f‖_{H^α} = (‖f‖² + ‖(-Δ)^{α/2} f‖²)^{1/2}`.
pub fn h_alpha_norm(f: &Field, alpha: f64) -> Result<f64> {
    Ok((f.l2_norm_sq() + h_alpha_seminorm_sq(f, alpha)?).sqrt())
}

fn apply_symbol(f: &Field, symbol: impl Fn(f64) -> f64) -> Result<Field> {
    let mut s = forward(f)?;
    for (c, &k2) in s.coeffs.iter_mut().zip(f.grid.wave_sq()) {
        *c *= symbol(k2);
    }
    inverse(&s)
}

/// `(-Δ)^α f` via the multiplier `|ξ|^{2α}`.
pub fn frac_laplacian(f: &Field, alpha: f64) -> Result<Field> {
    check_alpha(alpha)?;
    apply_symbol(f, |k2| k2.powf(alpha))
}

/// `e^{-t(-Δ)^α} f` via the multiplier `e^{-t|ξ|^{2α}}`.
pub fn semigroup(f: &Field, alpha: f64, t: f64) -> Result<Field> {
    check_alpha(alpha)?;
    if !(t >= 0.0) {
        return Err(Error::invalid("t", "semigroup time must be non-negative"));
    }
    apply_symbol(f, |k2| (-t * k2.powf(alpha)).exp())
}

fn check_radius(grid: &Grid, m: f64) -> Result<()> {
    if m > 0.0 && m < grid.half_width() {
        Ok(())
    } else {
        Err(Error::invalid(
            "m",
            "tail radius must satisfy 0 < m < half_width",
        ))
    }
}

/// `∫_{|x| ≥ m} |f|² dx` by indicator quadrature.
pub fn tail_mass(f: &Field, m: f64) -> Result<f64> {
    check_radius(&f.grid, m)?;
    let sum: f64 = f
        .values
        .iter()
        .enumerate()
        .filter(|(i, _)| f.grid.radius(*i) >= m)
        .map(|(_, v)| v * v)
        .sum();
    Ok(sum * f.grid.cell_volume())
}

/// C² monotone bridge from 0 (|x| ≤ 1/2) to 1 (|x| ≥ 1).
pub fn cutoff_profile(r: f64) -> f64 {
    if r <= 0.5 {
        0.0
    } else if r >= 1.0 {
        1.0
    } else {
        let s = 2.0 * r - 1.0;
        1.0 - (1.0 - s).powi(3) * (1.0 + 3.0 * s + 6.0 * s * s)
    }
}

/// `θ(x/m)` sampled on the grid.
pub fn smooth_cutoff(grid: &Grid, m: f64) -> Result<Field> {
    check_radius(grid, m)?;
    Ok(Field::from_raw(
        grid,
        (0..grid.len())
            .map(|i| cutoff_profile(grid.radius(i) / m))
            .collect(),
    ))
}

/// Reusable scratch for repeated spectral multipliers on one grid.
#[derive(Debug)]
pub struct SpectralWorkspace {
    grid: Grid,
    scratch: Vec<Complex64>,
}

impl SpectralWorkspace {
    pub fn new(grid: &Grid) -> Self {
        Self {
            grid: grid.clone(),
            scratch: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Applies a precomputed real multiplier to `values` in place.
    pub fn apply(&mut self, values: &mut [f64], symbol: &[f64]) {
        for (c, &v) in self.scratch.iter_mut().zip(values.iter()) {
            *c = Complex64::new(v, 0.0);
        }
        self.grid.fft(&mut self.scratch, false);
        for (c, &s) in self.scratch.iter_mut().zip(symbol) {
            *c *= s;
        }
        self.grid.fft(&mut self.scratch, true);
        for (v, c) in values.iter_mut().zip(&self.scratch) {
            *v = c.re;
        }
    }

    /// `h^n Σ w_ξ |f̂_ξ|²` for a precomputed weight.
    pub fn weighted_energy(&mut self, values: &[f64], weight: &[f64]) -> f64 {
        for (c, &v) in self.scratch.iter_mut().zip(values) {
            *c = Complex64::new(v, 0.0);
        }
        self.grid.fft(&mut self.scratch, false);
        let sum: f64 = self
            .scratch
            .iter()
            .zip(weight)
            .map(|(c, w)| w * c.norm_sqr())
            .sum();
        sum * self.grid.cell_volume()
    }
}
