//! Periodic torus grids `[-L, L)^N` (N = 1, 2), real lattice fields and their
//! Fourier spectra.
//!
//! Lattice points are `x_j = -L + j·Δx` with `Δx = 2L/M`. Spectra are stored in
//! FFT order (mode `k = i` for `i < M/2`, `k = i - M` otherwise) and use the
//! physical phase convention
//!
//! ```text
//! c_k = (1/M^N) Σ_j f(x_j) exp(-i ξ_k·x_j),    ξ_k = π k / L,
//! ```
//!
//! so the mode-0 coefficient is the mean of the field and a pure `cos(x)` on
//! the `L = π` torus carries `1/2` on modes `±1`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

struct GridInner {
    dim: usize,
    half_width: f64,
    points: usize,
    spacing: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Uniform periodic lattice on `[-L, L)^N`.
///
/// Cloning is cheap; FFT plans are shared between clones.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.inner.dim)
            .field("half_width", &self.inner.half_width)
            .field("points_per_dim", &self.inner.points)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.dim == other.inner.dim
                && self.inner.points == other.inner.points
                && self.inner.half_width == other.inner.half_width)
    }
}

impl Grid {
    /// Builds the torus `[-half_width, half_width)^dim` with `points_per_dim`
    /// lattice points per axis.
    pub fn new(dim: usize, half_width: f64, points_per_dim: usize) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half width must be positive and finite, got {half_width}"
            )));
        }
        if points_per_dim < 8 || !points_per_dim.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per dimension must be a power of two >= 8, got {points_per_dim}"
            )));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(points_per_dim);
        let inverse = planner.plan_fft_inverse(points_per_dim);
        Ok(Self {
            inner: Arc::new(GridInner {
                dim,
                half_width,
                points: points_per_dim,
                spacing: 2.0 * half_width / points_per_dim as f64,
                forward,
                inverse,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn half_width(&self) -> f64 {
        self.inner.half_width
    }

    pub fn points_per_dim(&self) -> usize {
        self.inner.points
    }

    pub fn spacing(&self) -> f64 {
        self.inner.spacing
    }

    /// Total number of lattice sites, `M^N`.
    pub fn len(&self) -> usize {
        self.inner.points.pow(self.inner.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `Δx^N`, the quadrature weight of one lattice cell.
    pub fn cell_volume(&self) -> f64 {
        self.inner.spacing.powi(self.inner.dim as i32)
    }

    /// `(2L)^N`.
    pub fn volume(&self) -> f64 {
        (2.0 * self.inner.half_width).powi(self.inner.dim as i32)
    }

    /// Coordinate of lattice index `i` along one axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        -self.inner.half_width + i as f64 * self.inner.spacing
    }

    /// Per-axis indices of a flat site index. The second entry is 0 in 1D.
    pub fn axes(&self, flat: usize) -> [usize; 2] {
        if self.inner.dim == 1 {
            [flat, 0]
        } else {
            [flat / self.inner.points, flat % self.inner.points]
        }
    }

    /// Flat index of the given per-axis indices (the second is ignored in 1D).
    pub fn flat(&self, axes: [usize; 2]) -> usize {
        if self.inner.dim == 1 {
            axes[0]
        } else {
            axes[0] * self.inner.points + axes[1]
        }
    }

    /// Physical coordinates of a site; the second component is 0 in 1D.
    pub fn point(&self, flat: usize) -> [f64; 2] {
        let [a, b] = self.axes(flat);
        if self.inner.dim == 1 {
            [self.coordinate(a), 0.0]
        } else {
            [self.coordinate(a), self.coordinate(b)]
        }
    }

    /// `|x|²` at a site.
    pub fn radius_sq(&self, flat: usize) -> f64 {
        let p = self.point(flat);
        p[0] * p[0] + p[1] * p[1]
    }

    /// Site nearest to `x` (coordinates beyond `dim` are ignored), wrapping
    /// periodically.
    pub fn nearest(&self, x: &[f64]) -> usize {
        let m = self.inner.points as i64;
        let idx = |c: f64| -> usize {
            let j = ((c + self.inner.half_width) / self.inner.spacing).round() as i64;
            j.rem_euclid(m) as usize
        };
        if self.inner.dim == 1 {
            idx(x[0])
        } else {
            self.flat([idx(x[0]), idx(x[1])])
        }
    }

    /// Signed Fourier mode of FFT index `i`, in `[-M/2, M/2)`.
    pub fn mode(&self, i: usize) -> i64 {
        let m = self.inner.points;
        if i < m / 2 {
            i as i64
        } else {
            i as i64 - m as i64
        }
    }

    /// Angular wavenumber `ξ = π k / L` of FFT index `i`.
    pub fn wavenumber(&self, i: usize) -> f64 {
        std::f64::consts::PI * self.mode(i) as f64 / self.inner.half_width
    }

    /// Whether FFT index `i` is the unpaired Nyquist mode `k = -M/2`.
    pub fn is_nyquist(&self, i: usize) -> bool {
        i == self.inner.points / 2
    }

    /// Wavenumbers in ascending mode order `k = -M/2, …, M/2 - 1`.
    pub fn frequencies(&self) -> Vec<f64> {
        let m = self.inner.points as i64;
        (-m / 2..m / 2)
            .map(|k| std::f64::consts::PI * k as f64 / self.inner.half_width)
            .collect()
    }

    /// Wave vector of a flat spectral index; second component is 0 in 1D.
    pub fn wavevector(&self, flat: usize) -> [f64; 2] {
        let [a, b] = self.axes(flat);
        if self.inner.dim == 1 {
            [self.wavenumber(a), 0.0]
        } else {
            [self.wavenumber(a), self.wavenumber(b)]
        }
    }

    /// `|ξ|` of a flat spectral index.
    pub fn wavevector_norm(&self, flat: usize) -> f64 {
        let [a, b] = self.wavevector(flat);
        (a * a + b * b).sqrt()
    }

    /// Largest resolved `|ξ|` per axis, `π M / (2L)`.
    pub fn max_wavenumber(&self) -> f64 {
        std::f64::consts::PI * (self.inner.points / 2) as f64 / self.inner.half_width
    }

    pub(crate) fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }

    fn transform(&self, buf: &mut [Complex64], forward: bool) {
        let fft = if forward {
            &self.inner.forward
        } else {
            &self.inner.inverse
        };
        let m = self.inner.points;
        fft.process(buf);
        if self.inner.dim == 2 {
            let mut column = vec![Complex64::new(0.0, 0.0); m];
            let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
            for col in 0..m {
                for row in 0..m {
                    column[row] = buf[row * m + col];
                }
                fft.process_with_scratch(&mut column, &mut scratch);
                for row in 0..m {
                    buf[row * m + col] = column[row];
                }
            }
        }
    }

    /// `(-1)^{i_0 + i_1}`: shifts the FFT phase origin from `x_0` to `x = 0`.
    fn phase(&self, flat: usize) -> f64 {
        let [a, b] = self.axes(flat);
        if (a + b) % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Which Lebesgue norm to approximate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
    Sup,
}

/// Real lattice function on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    /// Samples `f` at every site. The closure receives `dim` coordinates.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let dim = grid.dim();
        let values = (0..grid.len())
            .map(|i| f(&grid.point(i)[..dim]))
            .collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![c; grid.len()],
        }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Discrete delta of unit mass at the site nearest to `x`.
    pub fn delta(grid: &Grid, x: &[f64]) -> Self {
        let mut values = vec![0.0; grid.len()];
        values[grid.nearest(x)] = 1.0 / grid.cell_volume();
        Self {
            grid: grid.clone(),
            values,
        }
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

    pub fn at(&self, flat: usize) -> f64 {
        self.values[flat]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Field {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scaled(&self, a: f64) -> Field {
        self.map(|v| a * v)
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Field, b: f64) -> Result<Field> {
        self.zip_with(other, |x, y| a * x + b * y)
    }

    /// Riemann-sum approximation of the `L^q` norm.
    pub fn norm(&self, q: Norm) -> f64 {
        let dv = self.grid.cell_volume();
        match q {
            Norm::Sup => self.values.iter().fold(0.0, |m, v| m.max(v.abs())),
            Norm::L1 => self.values.iter().map(|v| v.abs()).sum::<f64>() * dv,
            Norm::L2 => (self.values.iter().map(|v| v * v).sum::<f64>() * dv).sqrt(),
        }
    }

    pub fn integrate(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max_i |self_i - other_i|`.
    pub fn sup_distance(&self, other: &Field) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn to_spectrum(&self) -> Spectrum {
        let grid = &self.grid;
        let mut buf: Vec<Complex64> = self
            .values
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        grid.transform(&mut buf, true);
        let norm = 1.0 / grid.len() as f64;
        for (i, c) in buf.iter_mut().enumerate() {
            *c *= norm * grid.phase(i);
        }
        Spectrum {
            grid: grid.clone(),
            coefficients: buf,
        }
    }
}

/// Fourier coefficients of a lattice function, FFT-ordered.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: Grid,
    coefficients: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: &Grid, coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coefficients.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            coefficients,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// Coefficient of the signed mode `(k_0[, k_1])`.
    pub fn coefficient(&self, modes: &[i64]) -> Complex64 {
        let m = self.grid.points_per_dim() as i64;
        let idx = |k: i64| k.rem_euclid(m) as usize;
        let flat = if self.grid.dim() == 1 {
            idx(modes[0])
        } else {
            self.grid.flat([idx(modes[0]), idx(modes[1])])
        };
        self.coefficients[flat]
    }

    /// Multiplies each coefficient by `symbol(ξ)`.
    pub fn multiply(&self, symbol: impl Fn([f64; 2]) -> f64) -> Spectrum {
        let grid = &self.grid;
        Spectrum {
            grid: grid.clone(),
            coefficients: self
                .coefficients
                .iter()
                .enumerate()
                .map(|(i, &c)| c * symbol(grid.wavevector(i)))
                .collect(),
        }
    }

    /// Multiplies each coefficient by a complex symbol evaluated on the flat
    /// spectral index.
    pub fn multiply_indexed(&self, symbol: impl Fn(usize) -> Complex64) -> Spectrum {
        Spectrum {
            grid: self.grid.clone(),
            coefficients: self
                .coefficients
                .iter()
                .enumerate()
                .map(|(i, &c)| c * symbol(i))
                .collect(),
        }
    }

    /// Real field plus the relative size of the discarded imaginary part.
    pub fn to_field_with_residue(&self) -> (Field, f64) {
        let grid = &self.grid;
        let mut buf: Vec<Complex64> = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(i, &c)| c * grid.phase(i))
            .collect();
        grid.transform(&mut buf, false);
        let mut re_max: f64 = 0.0;
        let mut im_max: f64 = 0.0;
        let values = buf
            .iter()
            .map(|c| {
                re_max = re_max.max(c.re.abs());
                im_max = im_max.max(c.im.abs());
                c.re
            })
            .collect();
        let residue = if im_max == 0.0 {
            0.0
        } else {
            im_max / re_max.max(im_max)
        };
        (
            Field {
                grid: grid.clone(),
                values,
            },
            residue,
        )
    }

    /// Inverse transform, keeping the real part.
    pub fn to_field(&self) -> Field {
        self.to_field_with_residue().0
    }

    /// Inverse transform that fails when the imaginary residue exceeds `limit`
    /// relative to the field's magnitude.
    pub fn to_field_checked(&self, limit: f64) -> Result<Field> {
        let (field, residue) = self.to_field_with_residue();
        if residue > limit {
            return Err(Error::ImaginaryResidue { residue, limit });
        }
        Ok(field)
    }

    /// Largest `|c_k - conj(c_{-k})|` relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let grid = &self.grid;
        let m = grid.points_per_dim();
        let neg = |i: usize| (m - i) % m;
        let scale = self
            .coefficients
            .iter()
            .fold(0.0_f64, |a, c| a.max(c.norm()));
        if scale == 0.0 {
            return 0.0;
        }
        let defect = (0..grid.len()).fold(0.0_f64, |acc, i| {
            let [a, b] = grid.axes(i);
            let j = if grid.dim() == 1 {
                neg(a)
            } else {
                grid.flat([neg(a), neg(b)])
            };
            acc.max((self.coefficients[i] - self.coefficients[j].conj()).norm())
        });
        defect / scale
    }
}

/// Periodic lattice convolution `(f ∗ g)(x_i) = Σ_j f(x_j) g(x_i - x_j) Δx^N`.
pub fn convolve(f: &Field, g: &Field) -> Result<Field> {
    f.grid.ensure_same(&g.grid)?;
    let vol = f.grid.volume();
    let fs = f.to_spectrum();
    let gs = g.to_spectrum();
    let coefficients = fs
        .coefficients
        .iter()
        .zip(&gs.coefficients)
        .map(|(a, b)| a * b * vol)
        .collect();
    Ok(Spectrum {
        grid: f.grid.clone(),
        coefficients,
    }
    .to_field())
}

/// Spectral partial derivative `∂^{a}_{x} ∂^{b}_{y} f`. The unpaired Nyquist
/// mode is dropped along any axis differentiated an odd number of times.
pub fn derivative(f: &Field, orders: [u32; 2]) -> Field {
    let grid = f.grid.clone();
    let spec = f.to_spectrum();
    spec.multiply_indexed(|i| {
        let axes = grid.axes(i);
        let xi = grid.wavevector(i);
        let mut factor = Complex64::new(1.0, 0.0);
        for axis in 0..grid.dim() {
            let order = orders[axis];
            if order % 2 == 1 && grid.is_nyquist(axes[axis]) {
                return Complex64::new(0.0, 0.0);
            }
            factor *= Complex64::new(0.0, xi[axis]).powu(order);
        }
        factor
    })
    .to_field()
}

/// Spectral gradient, one field per axis.
pub fn gradient(f: &Field) -> Vec<Field> {
    (0..f.grid.dim())
        .map(|axis| {
            let mut orders = [0, 0];
            orders[axis] = 1;
            derivative(f, orders)
        })
        .collect()
}

/// `‖ |∇f| ‖_1` with the Euclidean length of the gradient at each site.
pub fn gradient_l1(f: &Field) -> f64 {
    let parts = gradient(f);
    let n = f.grid.len();
    (0..n)
        .map(|i| parts.iter().map(|p| p.values[i].powi(2)).sum::<f64>().sqrt())
        .sum::<f64>()
        * f.grid.cell_volume()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(Grid::new(3, 1.0, 16).is_err());
        assert!(Grid::new(0, 1.0, 16).is_err());
        assert!(Grid::new(1, 1.0, 12).is_err());
        assert!(Grid::new(1, 1.0, 4).is_err());
        assert!(Grid::new(1, -1.0, 16).is_err());
    }

    #[test]
    fn pi_grid_has_integer_frequencies() {
        let g = Grid::new(1, PI, 8).unwrap();
        assert_relative_eq!(g.spacing(), PI / 4.0);
        let freqs = g.frequencies();
        let expect: Vec<f64> = (-4..4).map(|k| k as f64).collect();
        for (a, b) in freqs.iter().zip(&expect) {
            assert_relative_eq!(a, b, epsilon = 1e-14);
        }
        assert_eq!(g.wavenumber(0), 0.0);
    }

    #[test]
    fn spacing_and_frequency_arithmetic() {
        let g = Grid::new(1, 10.0, 1024).unwrap();
        assert_eq!(g.spacing(), 20.0 / 1024.0);
        assert_eq!(g.spacing() * 1024.0, 20.0);

        let g2 = Grid::new(2, 20.0, 256).unwrap();
        assert_eq!(g2.len(), 256 * 256);
        assert_relative_eq!(g2.max_wavenumber(), 128.0 * PI / 20.0);
        let most_negative = g2.frequencies()[0];
        assert_relative_eq!(most_negative.abs(), 128.0 * PI / 20.0);
    }

    #[test]
    fn constant_field_spectrum() {
        let g = Grid::new(2, 3.0, 16).unwrap();
        let s = Field::constant(&g, 1.0).to_spectrum();
        for (i, c) in s.coefficients().iter().enumerate() {
            let expect = if i == 0 { 1.0 } else { 0.0 };
            assert!((c - Complex64::new(expect, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn cosine_splits_between_plus_minus_one() {
        let g = Grid::new(1, PI, 32).unwrap();
        let s = Field::from_fn(&g, |x| x[0].cos()).to_spectrum();
        for k in -16..16_i64 {
            let c = s.coefficient(&[k]);
            let expect = if k.abs() == 1 { 0.5 } else { 0.0 };
            assert!((c - Complex64::new(expect, 0.0)).norm() < 1e-14, "mode {k}: {c}");
        }
    }

    #[test]
    fn sine_mode_phase_in_two_dimensions() {
        let g = Grid::new(2, PI, 16).unwrap();
        let s = Field::from_fn(&g, |x| (2.0 * x[1]).sin()).to_spectrum();
        // sin(2y) = (e^{2iy} - e^{-2iy}) / 2i
        assert!((s.coefficient(&[0, 2]) - Complex64::new(0.0, -0.5)).norm() < 1e-14);
        assert!((s.coefficient(&[0, -2]) - Complex64::new(0.0, 0.5)).norm() < 1e-14);
    }

    #[test]
    fn norms_of_constants_and_sine() {
        let g = Grid::new(2, 1.5, 16).unwrap();
        let f = Field::constant(&g, -2.0);
        assert_eq!(f.norm(Norm::Sup), 2.0);
        assert_relative_eq!(f.integrate(), -2.0 * 9.0, epsilon = 1e-12);

        let g1 = Grid::new(1, PI, 64).unwrap();
        let s = Field::from_fn(&g1, |x| x[0].sin());
        assert_relative_eq!(s.norm(Norm::L2), PI.sqrt(), epsilon = 1e-10);
        // |sin| has kinks, so the Riemann sum converges only algebraically.
        let fine = Grid::new(1, PI, 4096).unwrap();
        let s = Field::from_fn(&fine, |x| x[0].sin());
        assert_relative_eq!(s.norm(Norm::L1), 4.0, epsilon = 1e-6);
    }

    #[test]
    fn delta_has_unit_mass() {
        let g = Grid::new(2, 5.0, 32).unwrap();
        let d = Field::delta(&g, &[0.0, 0.0]);
        assert_relative_eq!(d.integrate(), 1.0, epsilon = 1e-12);
        assert_eq!(g.point(g.nearest(&[0.0, 0.0])), [0.0, 0.0]);
    }

    #[test]
    fn derivative_of_sine() {
        let g = Grid::new(1, PI, 32).unwrap();
        let f = Field::from_fn(&g, |x| (3.0 * x[0]).sin());
        let df = derivative(&f, [1, 0]);
        let expect = Field::from_fn(&g, |x| 3.0 * (3.0 * x[0]).cos());
        assert!(df.sup_distance(&expect).unwrap() < 1e-12);
        let d2 = derivative(&f, [2, 0]);
        assert!(d2.sup_distance(&f.scaled(-9.0)).unwrap() < 1e-11);
    }

    #[test]
    fn convolution_with_delta_is_identity() {
        let g = Grid::new(1, 4.0, 64).unwrap();
        let f = Field::from_fn(&g, |x| (-x[0] * x[0]).exp());
        let d = Field::delta(&g, &[0.0]);
        let c = convolve(&f, &d).unwrap();
        assert!(c.sup_distance(&f).unwrap() < 1e-13);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = Grid::new(1, 1.0, 16).unwrap();
        let b = Grid::new(1, 2.0, 16).unwrap();
        let fa = Field::zeros(&a);
        let fb = Field::zeros(&b);
        assert!(matches!(fa.sup_distance(&fb), Err(Error::GridMismatch(_))));
        assert!(Field::new(&a, vec![0.0; 3]).is_err());
        assert!(matches!(Field::new(&a, vec![f64::NAN; 16]), Err(Error::NonFinite)));
    }
}
