//! The Laplacian, the fractional Laplacian `(-Δ)^s` and the mixed operator
//! `-Δ + (-Δ)^{α/2}` as Fourier multipliers, together with an independent
//! singular-integral quadrature for `(-Δ)^s`.

use rayon::prelude::*;
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};
use crate::grid::{derivative, Field, Grid};
use crate::special::{hurwitz_zeta, lattice_zeta, sphere_area};

/// Largest tolerated imaginary residue after applying a real even symbol.
pub const IMAGINARY_RESIDUE_LIMIT: f64 = 1e-10;

/// Which operator to apply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorSpec {
    /// `-Δ`, symbol `|ξ|²`.
    Laplacian,
    /// `(-Δ)^s` with `0 < s < 1`, symbol `|ξ|^{2s}`.
    Fractional { s: f64 },
    /// `-Δ + (-Δ)^{α/2}` with `0 < α < 2`, symbol `|ξ|² + |ξ|^α`.
    Mixed { alpha: f64 },
}

impl OperatorSpec {
    pub fn laplacian() -> Self {
        OperatorSpec::Laplacian
    }

    pub fn fractional(s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(invalid("s", format!("fractional order must lie in (0, 1), got {s}")));
        }
        Ok(OperatorSpec::Fractional { s })
    }

    pub fn mixed(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(invalid("alpha", format!("must lie in (0, 2), got {alpha}")));
        }
        Ok(OperatorSpec::Mixed { alpha })
    }

    /// `(-Δ)^s` for `s ∈ (0, 1]`, mapping `s = 1` onto the Laplacian.
    pub fn power(s: f64) -> Result<Self> {
        if s == 1.0 {
            Ok(OperatorSpec::Laplacian)
        } else {
            Self::fractional(s)
        }
    }

    /// Fourier symbol as a function of `|ξ|`.
    pub fn symbol(&self, xi: f64) -> f64 {
        match *self {
            OperatorSpec::Laplacian => xi * xi,
            OperatorSpec::Fractional { s } => {
                if xi == 0.0 {
                    0.0
                } else {
                    xi.powf(2.0 * s)
                }
            }
            OperatorSpec::Mixed { alpha } => {
                if xi == 0.0 {
                    0.0
                } else {
                    xi * xi + xi.powf(alpha)
                }
            }
        }
    }
}

pub fn apply_operator(spec: OperatorSpec, f: &Field) -> Result<Field> {
    f.to_spectrum()
        .multiply(|[a, b]| spec.symbol((a * a + b * b).sqrt()))
        .to_field_checked(IMAGINARY_RESIDUE_LIMIT)
}

/// `∫ f · (spec f)`, nonnegative for every real `f`.
pub fn quadratic_form(spec: OperatorSpec, f: &Field) -> Result<f64> {
    let lf = apply_operator(spec, f)?;
    Ok(f.zip_with(&lf, |a, b| a * b)?.integrate())
}

/// `C_{N,s} = s 4^s Γ(N/2 + s) / (π^{N/2} Γ(1 - s))`.
pub fn c_ns(dim: usize, s: f64) -> Result<f64> {
    if dim == 0 {
        return Err(invalid("dim", "must be at least 1"));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(invalid("s", format!("must lie in (0, 1), got {s}")));
    }
    let n = dim as f64;
    Ok(s * 4f64.powf(s) * gamma(n / 2.0 + s)
        / (std::f64::consts::PI.powf(n / 2.0) * gamma(1.0 - s)))
}

/// Default principal-value radius, eight lattice spacings.
pub fn default_inner_radius(grid: &Grid) -> f64 {
    8.0 * grid.spacing()
}

/// Periodic images summed directly in 2D; beyond them a lattice zeta
/// remainder is used.
const IMAGES_2D: i64 = 8;

/// Lattice quadrature of the singular-integral definition of `(-Δ)^s`,
/// applied to the periodic extension of the field.
///
/// The integrand `(v(x) - v(y)) / |x - y|^{N+2s}` is summed over all lattice
/// points `y ≠ x` of the periodic extension (in 1D through the Hurwitz zeta
/// form of the periodised kernel; in 2D images within `|n|_∞ ≤ 8` directly and
/// the rest through a lattice zeta remainder). Near the
/// singularity the second-order Taylor polynomial of `v` at `x`, cut off by
/// `exp(-|x - y|²/δ²)`, is subtracted from the summand and its integral added
/// back in closed form. Derivatives of `v` at `x` are spectral.
pub struct QuadratureOracle {
    grid: Grid,
    s: f64,
    inner_radius: f64,
    constant: f64,
    values: Vec<f64>,
    gradient: Vec<Vec<f64>>,
    // xx, xy, yy (only xx in 1D)
    hessian: Vec<Vec<f64>>,
    periodic_kernel: Vec<f64>,
    cutoff_kernel: Vec<f64>,
}

impl QuadratureOracle {
    pub fn new(s: f64, f: &Field, inner_radius: f64) -> Result<Self> {
        let constant = c_ns(f.grid().dim(), s)?;
        let grid = f.grid().clone();
        let half = grid.half_width();
        if !(inner_radius > 0.0 && inner_radius <= half / 6.0) {
            return Err(invalid(
                "inner_radius",
                format!("must lie in (0, L/6 = {}], got {inner_radius}", half / 6.0),
            ));
        }
        let dim = grid.dim();
        let sigma = dim as f64 + 2.0 * s;
        let period = 2.0 * half;
        let m = grid.points_per_dim();
        let images = IMAGES_2D;

        let remainder = if dim == 1 {
            0.0
        } else {
            let mut inner = 0.0;
            for a in -images..=images {
                for b in -images..=images {
                    if a != 0 || b != 0 {
                        inner += ((a * a + b * b) as f64).powf(-sigma / 2.0);
                    }
                }
            }
            lattice_zeta(2, sigma) - inner
        } * period.powf(-sigma);

        let offset = |o: usize| -> f64 {
            let k = if o < m / 2 { o as f64 } else { o as f64 - m as f64 };
            k * grid.spacing()
        };

        let periodic_kernel: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map(|o| {
                if o == 0 {
                    return 0.0;
                }
                let [oa, ob] = grid.axes(o);
                let d = [offset(oa), if dim == 2 { offset(ob) } else { 0.0 }];
                if dim == 1 {
                    // Σ_n |d + 2Ln|^{-σ} in closed form, with d taken in (0, 2L).
                    let frac = oa as f64 / m as f64;
                    return period.powf(-sigma)
                        * (hurwitz_zeta(sigma, frac) + hurwitz_zeta(sigma, 1.0 - frac));
                }
                let mut sum = 0.0;
                {
                    for na in -images..=images {
                        for nb in -images..=images {
                            let za = d[0] + period * na as f64;
                            let zb = d[1] + period * nb as f64;
                            sum += (za * za + zb * zb).powf(-sigma / 2.0);
                        }
                    }
                }
                sum + remainder
            })
            .collect();

        let cutoff_kernel: Vec<f64> = (0..grid.len())
            .map(|o| {
                if o == 0 {
                    return 0.0;
                }
                let [oa, ob] = grid.axes(o);
                let da = offset(oa);
                let db = if dim == 2 { offset(ob) } else { 0.0 };
                let r2 = da * da + db * db;
                (-r2 / (inner_radius * inner_radius)).exp() * r2.powf(-sigma / 2.0)
            })
            .collect();

        let gradient = (0..dim)
            .map(|axis| {
                let mut orders = [0, 0];
                orders[axis] = 1;
                derivative(f, orders).into_values()
            })
            .collect();
        let hessian = if dim == 1 {
            vec![derivative(f, [2, 0]).into_values()]
        } else {
            vec![
                derivative(f, [2, 0]).into_values(),
                derivative(f, [1, 1]).into_values(),
                derivative(f, [0, 2]).into_values(),
            ]
        };

        Ok(Self {
            grid,
            s,
            inner_radius,
            constant,
            values: f.values().to_vec(),
            gradient,
            hessian,
            periodic_kernel,
            cutoff_kernel,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `(-Δ)^s v` at site `x`, which must lie in the central half of the torus.
    pub fn evaluate(&self, x: usize) -> Result<f64> {
        let grid = &self.grid;
        let dim = grid.dim();
        let m = grid.points_per_dim();
        let point = grid.point(x);
        if point[..dim].iter().any(|c| c.abs() > grid.half_width() / 2.0) {
            return Err(Error::BoundaryPoint(point[..dim].to_vec()));
        }
        let [xa, xb] = grid.axes(x);
        let vx = self.values[x];
        let h = grid.spacing();
        let signed = |o: usize| if o < m / 2 { o as f64 } else { o as f64 - m as f64 };

        let mut sum = 0.0;
        let mut taylor = 0.0;
        for o in 1..grid.len() {
            let [oa, ob] = grid.axes(o);
            let y = grid.flat([(xa + m - oa) % m, (xb + m - ob) % m]);
            sum += (vx - self.values[y]) * self.periodic_kernel[o];

            let w = self.cutoff_kernel[o];
            if w == 0.0 {
                continue;
            }
            // offset d = x - y
            let da = signed(oa) * h;
            let quad = if dim == 1 {
                -self.gradient[0][x] * da + 0.5 * self.hessian[0][x] * da * da
            } else {
                let db = signed(ob) * h;
                -self.gradient[0][x] * da - self.gradient[1][x] * db
                    + 0.5
                        * (self.hessian[0][x] * da * da
                            + 2.0 * self.hessian[1][x] * da * db
                            + self.hessian[2][x] * db * db)
            };
            taylor += quad * w;
        }
        let laplacian = if dim == 1 {
            self.hessian[0][x]
        } else {
            self.hessian[0][x] + self.hessian[2][x]
        };
        let n = dim as f64;
        let closed_form = -(laplacian / (2.0 * n))
            * sphere_area(dim)
            * self.inner_radius.powf(2.0 - 2.0 * self.s)
            * gamma(1.0 - self.s)
            / 2.0;
        Ok(self.constant * ((sum + taylor) * grid.cell_volume() + closed_form))
    }
}

/// One-shot form of [`QuadratureOracle`] at the site nearest to `x`.
pub fn fractional_laplacian_quadrature(
    s: f64,
    f: &Field,
    x: &[f64],
    inner_radius: f64,
) -> Result<f64> {
    let oracle = QuadratureOracle::new(s, f, inner_radius)?;
    oracle.evaluate(f.grid().nearest(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn spec_validation() {
        assert!(OperatorSpec::fractional(0.0).is_err());
        assert!(OperatorSpec::fractional(1.0).is_err());
        assert!(OperatorSpec::mixed(2.0).is_err());
        assert!(OperatorSpec::mixed(0.0).is_err());
        assert_eq!(OperatorSpec::power(1.0).unwrap(), OperatorSpec::Laplacian);
    }

    #[test]
    fn normalisation_constant() {
        assert_relative_eq!(c_ns(1, 0.5).unwrap(), 1.0 / PI, epsilon = 1e-14);
        assert_relative_eq!(c_ns(2, 0.5).unwrap(), 1.0 / (2.0 * PI), epsilon = 1e-14);
        assert!(c_ns(1, 1.0).is_err());
        assert!(c_ns(1, -0.1).is_err());
        // Not clamped near s = 1: C_{1,s} / (1 - s) -> 2 since 1/Γ(1-s) ~ (1-s).
        let near_one = c_ns(1, 1.0 - 1e-6).unwrap();
        assert!(near_one > 0.0);
        assert_relative_eq!(near_one / 1e-6, 2.0, epsilon = 1e-4);
    }

    #[test]
    fn eigenfunctions_on_pi_torus() {
        let g = Grid::new(1, PI, 64).unwrap();
        let f = Field::from_fn(&g, |x| (2.0 * x[0]).sin());
        let out = apply_operator(OperatorSpec::fractional(0.5).unwrap(), &f).unwrap();
        assert!(out.sup_distance(&f.scaled(2.0)).unwrap() < 1e-12);

        let f = Field::from_fn(&g, |x| x[0].sin());
        let out = apply_operator(OperatorSpec::mixed(1.0).unwrap(), &f).unwrap();
        assert!(out.sup_distance(&f.scaled(2.0)).unwrap() < 1e-12);

        let c = Field::constant(&g, 3.5);
        for spec in [
            OperatorSpec::Laplacian,
            OperatorSpec::fractional(0.3).unwrap(),
            OperatorSpec::mixed(1.7).unwrap(),
        ] {
            assert!(apply_operator(spec, &c).unwrap().norm(crate::grid::Norm::Sup) < 1e-12);
        }
    }

    #[test]
    fn quadrature_vanishes_on_odd_data_at_origin() {
        let g = Grid::new(1, PI, 256).unwrap();
        let f = Field::from_fn(&g, |x| x[0].sin());
        let q = fractional_laplacian_quadrature(0.3, &f, &[0.0], default_inner_radius(&g)).unwrap();
        assert!(q.abs() < 1e-10, "{q}");
    }

    #[test]
    fn quadrature_reproduces_eigenvalue() {
        let g = Grid::new(1, PI, 256).unwrap();
        let f = Field::from_fn(&g, |x| (2.0 * x[0]).sin());
        let q = fractional_laplacian_quadrature(0.75, &f, &[PI / 4.0], default_inner_radius(&g))
            .unwrap();
        assert!((q - 2f64.powf(1.5)).abs() < 1e-2, "{q}");
    }

    #[test]
    fn quadrature_rejects_points_near_boundary() {
        let g = Grid::new(1, 10.0, 128).unwrap();
        let f = Field::from_fn(&g, |x| (-x[0] * x[0]).exp());
        let r = fractional_laplacian_quadrature(0.5, &f, &[7.0], default_inner_radius(&g));
        assert!(matches!(r, Err(Error::BoundaryPoint(_))));
        assert!(fractional_laplacian_quadrature(0.5, &f, &[0.0], 5.0).is_err());
    }

    #[test]
    fn quadrature_in_two_dimensions() {
        let g = Grid::new(2, 8.0, 128).unwrap();
        let f = Field::from_fn(&g, |x| (-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp());
        let spec = OperatorSpec::fractional(0.5).unwrap();
        let m = apply_operator(spec, &f).unwrap();
        let oracle = QuadratureOracle::new(0.5, &f, default_inner_radius(&g)).unwrap();
        for x in [[0.0, 0.0], [1.0, -0.5], [2.0, 2.0]] {
            let i = g.nearest(&x);
            let q = oracle.evaluate(i).unwrap();
            let scale = m.norm(crate::grid::Norm::Sup);
            assert!((q - m.at(i)).abs() < 1e-3 * scale, "{x:?}: {q} vs {}", m.at(i));
        }
    }
}
