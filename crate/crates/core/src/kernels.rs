//! Heat kernels of `-Δ` (Gaussian `P_2`), `(-Δ)^{α/2}` (α-stable `P_α`) and
//! the mixed operator (`E_α = P_2 ∗ P_α`), and the semigroups they generate.
//!
//! Stable and mixed kernels are the torus realisation of the Fourier
//! representation: coefficients `exp(-t m(ξ_k)) / (2L)^N` for the symbol `m`.
//! The Gaussian is evaluated in closed form.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};
use crate::export::field_table;
use crate::grid::{gradient_l1, Field, Grid, Norm, Spectrum};

/// Largest negative value tolerated in a spectrally computed kernel.
pub const NEGATIVE_EXCURSION_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    Gauss,
    Stable { alpha: f64 },
    Mixed { alpha: f64 },
}

impl KernelSpec {
    pub fn gauss() -> Self {
        KernelSpec::Gauss
    }

    pub fn stable(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(KernelSpec::Stable { alpha })
    }

    pub fn mixed(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(KernelSpec::Mixed { alpha })
    }

    /// Stability index of the slowest-decaying part (2 for the Gaussian).
    pub fn alpha(&self) -> f64 {
        match *self {
            KernelSpec::Gauss => 2.0,
            KernelSpec::Stable { alpha } | KernelSpec::Mixed { alpha } => alpha,
        }
    }

    /// Generator symbol as a function of `|ξ|`.
    pub fn symbol(&self, xi: f64) -> f64 {
        if xi == 0.0 {
            return 0.0;
        }
        match *self {
            KernelSpec::Gauss => xi * xi,
            KernelSpec::Stable { alpha } => xi.powf(alpha),
            KernelSpec::Mixed { alpha } => xi * xi + xi.powf(alpha),
        }
    }

    /// Spatial spread of the kernel at time `t`.
    pub fn scale(&self, t: f64) -> f64 {
        match *self {
            KernelSpec::Gauss => t.sqrt(),
            KernelSpec::Stable { alpha } => t.powf(1.0 / alpha),
            KernelSpec::Mixed { alpha } => t.sqrt().max(t.powf(1.0 / alpha)),
        }
    }

    /// `min{t^{-1/2}, t^{-1/α}}`.
    pub fn decay_rate(&self, t: f64) -> f64 {
        t.powf(-0.5).min(t.powf(-1.0 / self.alpha()))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(invalid("alpha", format!("must lie in (0, 2), got {alpha}")))
    }
}

/// Whether kernel constructors enforce that the kernel spread fits the torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    /// Reject `t` whose spread exceeds `L/6`.
    Enforced,
    /// Return the torus kernel for any `t > 0`, however wrapped.
    Periodic,
}

#[derive(Debug, Clone)]
pub struct KernelSlice {
    pub spec: KernelSpec,
    pub time: f64,
    pub field: Field,
}

impl KernelSlice {
    pub fn mass(&self) -> f64 {
        self.field.integrate()
    }

    /// Most negative value, or 0 for a nonnegative kernel.
    pub fn negative_excursion(&self) -> f64 {
        self.field.min().min(0.0)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        field_table(&self.field).write(path)
    }
}

fn check_window(spec: KernelSpec, grid: &Grid, t: f64, window: Window) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid("t", format!("kernel time must be positive, got {t}")));
    }
    if window == Window::Enforced {
        let scale = spec.scale(t);
        let limit = grid.half_width() / 6.0;
        if scale > limit {
            return Err(Error::KernelWindow {
                time: t,
                scale,
                limit,
            });
        }
    }
    Ok(())
}

/// Kernel of `spec` at time `t` on `grid`.
pub fn kernel_slice(spec: KernelSpec, grid: &Grid, t: f64, window: Window) -> Result<KernelSlice> {
    check_window(spec, grid, t, window)?;
    let field = match spec {
        KernelSpec::Gauss => {
            let n = grid.dim() as f64;
            let norm = (4.0 * PI * t).powf(-n / 2.0);
            Field::from_fn(grid, |x| {
                let r2: f64 = x.iter().map(|c| c * c).sum();
                norm * (-r2 / (4.0 * t)).exp()
            })
        }
        _ => {
            let density = 1.0 / grid.volume();
            let coefficients = (0..grid.len())
                .map(|i| Complex64::new(density * (-t * spec.symbol(grid.wavevector_norm(i))).exp(), 0.0))
                .collect();
            Spectrum::new(grid, coefficients)?.to_field()
        }
    };
    let slice = KernelSlice {
        spec,
        time: t,
        field,
    };
    if !matches!(spec, KernelSpec::Gauss) {
        let min = slice.negative_excursion();
        if min < -NEGATIVE_EXCURSION_LIMIT {
            return Err(Error::NegativeExcursion {
                min,
                limit: NEGATIVE_EXCURSION_LIMIT,
            });
        }
    }
    Ok(slice)
}

/// `P_2(t, x) = (4πt)^{-N/2} exp(-|x|²/(4t))`.
pub fn gauss_kernel(grid: &Grid, t: f64) -> Result<KernelSlice> {
    kernel_slice(KernelSpec::Gauss, grid, t, Window::Enforced)
}

pub fn stable_kernel(grid: &Grid, alpha: f64, t: f64) -> Result<KernelSlice> {
    kernel_slice(KernelSpec::stable(alpha)?, grid, t, Window::Enforced)
}

pub fn mixed_kernel(grid: &Grid, alpha: f64, t: f64) -> Result<KernelSlice> {
    kernel_slice(KernelSpec::mixed(alpha)?, grid, t, Window::Enforced)
}

/// `exp(-τ m(ξ))` applied to `f` in spectral space, i.e. `K(τ) ∗ f`.
pub fn apply_semigroup(spec: KernelSpec, tau: f64, f: &Field) -> Result<Field> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(invalid("tau", format!("must be nonnegative, got {tau}")));
    }
    if tau == 0.0 {
        return Ok(f.clone());
    }
    Ok(f
        .to_spectrum()
        .multiply(|[a, b]| (-tau * spec.symbol((a * a + b * b).sqrt())).exp())
        .to_field())
}

/// `‖∇K(t)‖_1`, gradient computed spectrally.
pub fn gradient_norm(spec: KernelSpec, grid: &Grid, t: f64, window: Window) -> Result<f64> {
    Ok(gradient_l1(&kernel_slice(spec, grid, t, window)?.field))
}

/// Distance of `K(t) ∗ g` from the mass-matched kernel `M_g K(t)`, with the
/// reference rate `min{t^{-1/2}, t^{-1/α}} ‖x g‖_1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorReport {
    pub time: f64,
    pub mass: f64,
    pub discrepancy: f64,
    pub bound: f64,
}

impl TaylorReport {
    pub fn ratio(&self) -> f64 {
        self.discrepancy / self.bound
    }
}

/// `‖x g‖_1` with `x` the torus coordinate in `[-L, L)^N`.
pub fn first_moment(g: &Field) -> f64 {
    let grid = g.grid();
    g.values()
        .iter()
        .enumerate()
        .map(|(i, v)| grid.radius_sq(i).sqrt() * v.abs())
        .sum::<f64>()
        * grid.cell_volume()
}

/// Constant `C` in `‖K(t)∗g - M_g K(t)‖_1 ≤ C min{t^{-1/2}, t^{-1/α}} ‖x g‖_1`
/// in one dimension, from `‖∂_x K(t)‖_1 = 2 K(t, 0)`.
pub fn taylor_constant(spec: KernelSpec) -> f64 {
    let gauss = (4.0 * PI).powf(-0.5);
    let stable = |alpha: f64| gamma(1.0 + 1.0 / alpha) / PI;
    2.0 * match spec {
        KernelSpec::Gauss => gauss,
        KernelSpec::Stable { alpha } => stable(alpha),
        KernelSpec::Mixed { alpha } => gauss.max(stable(alpha)),
    }
}

pub fn taylor_discrepancy(spec: KernelSpec, g: &Field, t: f64) -> Result<TaylorReport> {
    let grid = g.grid();
    let kernel = kernel_slice(spec, grid, t, Window::Enforced)?;
    let mass = g.integrate();
    let evolved = apply_semigroup(spec, t, g)?;
    let discrepancy = evolved.combine(1.0, &kernel.field, -mass)?.norm(Norm::L1);
    Ok(TaylorReport {
        time: t,
        mass,
        discrepancy,
        bound: spec.decay_rate(t) * first_moment(g),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::convolve;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn taylor_constants() {
        assert_relative_eq!(taylor_constant(KernelSpec::mixed(1.0).unwrap()), 2.0 / PI, epsilon = 1e-14);
        assert_relative_eq!(taylor_constant(KernelSpec::gauss()), 1.0 / PI.sqrt(), epsilon = 1e-14);
        let c = taylor_constant(KernelSpec::mixed(1.5).unwrap());
        assert!(c >= taylor_constant(KernelSpec::gauss()) && c >= taylor_constant(KernelSpec::stable(1.5).unwrap()));
    }

    #[test]
    fn gauss_closed_form_values() {
        let g = Grid::new(1, 10.0, 512).unwrap();
        let t = 1.0 / (4.0 * PI);
        let k = gauss_kernel(&g, t).unwrap();
        assert_relative_eq!(k.field.at(g.nearest(&[0.0])), 1.0, epsilon = 1e-14);
        assert_relative_eq!(k.mass(), 1.0, epsilon = 1e-10);

        let g2 = Grid::new(2, 12.0, 64).unwrap();
        let k2 = gauss_kernel(&g2, 1.0).unwrap();
        let v = k2.field.at(g2.nearest(&[3.0, 0.0]));
        assert_relative_eq!(v, (-2.25f64).exp() / (4.0 * PI), epsilon = 1e-14);
        assert_relative_eq!(k2.mass(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn cauchy_kernel_values() {
        let g = Grid::new(1, 1024.0, 16384).unwrap();
        let k = stable_kernel(&g, 1.0, 1.0).unwrap();
        assert_relative_eq!(k.field.at(g.nearest(&[0.0])), 1.0 / PI, epsilon = 1e-6);
        assert_relative_eq!(k.field.at(g.nearest(&[1.0])), 0.5 / PI, epsilon = 1e-6);
        assert_relative_eq!(k.mass(), 1.0, epsilon = 1e-12);
        assert!(k.negative_excursion() > -NEGATIVE_EXCURSION_LIMIT);
    }

    #[test]
    fn window_is_enforced() {
        let g = Grid::new(1, 6.0, 64).unwrap();
        assert!(matches!(gauss_kernel(&g, 1.5), Err(Error::KernelWindow { .. })));
        assert!(gauss_kernel(&g, 1.0).is_ok());
        assert!(stable_kernel(&g, 0.5, 1.1).is_err());
        assert!(mixed_kernel(&g, 1.0, 1.01).is_err());
        assert!(kernel_slice(KernelSpec::mixed(1.0).unwrap(), &g, 50.0, Window::Periodic).is_ok());
        assert!(stable_kernel(&g, 1.0, -1.0).is_err());
    }

    #[test]
    fn semigroup_identities() {
        let g = Grid::new(1, 8.0, 128).unwrap();
        let spec = KernelSpec::mixed(1.3).unwrap();
        let f = Field::from_fn(&g, |x| (-x[0] * x[0]).exp() * (1.0 + x[0]));
        assert_eq!(apply_semigroup(spec, 0.0, &f).unwrap(), f);
        let c = Field::constant(&g, 2.5);
        let out = apply_semigroup(spec, 3.0, &c).unwrap();
        assert!(out.sup_distance(&c).unwrap() < 1e-13);
        let out = apply_semigroup(spec, 0.7, &f).unwrap();
        assert_relative_eq!(out.integrate(), f.integrate(), epsilon = 1e-12);
        assert!(apply_semigroup(spec, -1.0, &f).is_err());
    }

    #[test]
    fn factorisation_into_gauss_and_stable() {
        let g = Grid::new(1, 40.0, 2048).unwrap();
        let t = 1.0;
        let alpha = 1.5;
        let gauss = gauss_kernel(&g, t).unwrap();
        let stable = stable_kernel(&g, alpha, t).unwrap();
        let mixed = mixed_kernel(&g, alpha, t).unwrap();
        let product = convolve(&gauss.field, &stable.field).unwrap();
        assert!(mixed.field.norm(Norm::Sup) > 0.1);
        assert!(product.sup_distance(&mixed.field).unwrap() < 1e-10);
    }

    #[test]
    fn csv_export() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::new(1, 6.0, 32).unwrap();
        let k = mixed_kernel(&g, 1.0, 0.5).unwrap();
        let path = dir.path().join("k.csv");
        k.write_csv(&path).unwrap();
        let t = crate::export::CsvTable::read(&path).unwrap();
        assert_eq!(t.header, vec!["x", "value"]);
        assert_eq!(t.column("value").unwrap(), k.field.values());
    }
}
