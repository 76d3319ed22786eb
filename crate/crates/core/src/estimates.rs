//! Numerical checks of the test-function estimates: the decay envelope of
//! `(-Δ)^s ⟨x⟩^{-q}`, the scaling law of `(-Δ)^s` under dilations, and the
//! integral bound for `Φ_R(x) = ⟨x/R⟩^{-q0}`:
//!
//! ```text
//! ∫ Φ_R^{-1/(p-1)} |𝓛 Φ_R|^{p/(p-1)} dx ≲ R^{N - 2p/(p-1)} + R^{N - αp/(p-1)}.
//! ```

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::export::CsvTable;
use crate::grid::{Field, Grid, Spectrum};
use crate::operators::{apply_operator, OperatorSpec};
use crate::special::sphere_area;

/// Largest tolerated value of `Φ_R` on the torus boundary, relative to `Φ_R(0) = 1`.
pub const TAIL_LIMIT: f64 = 1e-3;

/// `⟨x⟩ = (1 + |x|²)^{1/2}`.
pub fn japanese_bracket(x: &[f64]) -> f64 {
    (1.0 + x.iter().map(|c| c * c).sum::<f64>()).sqrt()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    cov / var
}

#[derive(Debug, Clone)]
pub struct TestFunctionSpec {
    pub q0: f64,
    pub r: f64,
    pub p: f64,
    pub alpha: f64,
    pub grid: Grid,
}

impl TestFunctionSpec {
    pub fn new(q0: f64, r: f64, p: f64, alpha: f64, grid: &Grid) -> Result<Self> {
        let n = grid.dim() as f64;
        if !(p > 1.0 && p.is_finite()) {
            return Err(invalid("p", format!("must exceed 1, got {p}")));
        }
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(invalid("alpha", format!("must lie in (0, 2), got {alpha}")));
        }
        if !(q0 > n && q0 < n + alpha * p) {
            return Err(invalid(
                "q0",
                format!("need N < q0 < N + αp = {}, got {q0}", n + alpha * p),
            ));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(invalid("R", format!("must be positive, got {r}")));
        }
        if grid.half_width() < 8.0 * r {
            return Err(invalid(
                "R",
                format!("half-width {} is below 8R = {}", grid.half_width(), 8.0 * r),
            ));
        }
        Ok(Self {
            q0,
            r,
            p,
            alpha,
            grid: grid.clone(),
        })
    }

    /// `R^{N - 2p/(p-1)} + R^{N - αp/(p-1)}`.
    pub fn bound(&self) -> f64 {
        let [a, b] = self.exponents();
        self.r.powf(a) + self.r.powf(b)
    }

    /// The two exponents of the bound, local part first.
    pub fn exponents(&self) -> [f64; 2] {
        let n = self.grid.dim() as f64;
        let conj = self.p / (self.p - 1.0);
        [n - 2.0 * conj, n - self.alpha * conj]
    }

    /// Large-R exponent of the bound.
    pub fn dominant_exponent(&self) -> f64 {
        let [a, b] = self.exponents();
        a.max(b)
    }

    /// `Φ_R` on the torus boundary.
    pub fn boundary_value(&self) -> f64 {
        (1.0 + (self.grid.half_width() / self.r).powi(2)).powf(-self.q0 / 2.0)
    }
}

pub fn phi_r(spec: &TestFunctionSpec) -> Field {
    let r = spec.r;
    let q0 = spec.q0;
    Field::from_fn(&spec.grid, |x| {
        let scaled: Vec<f64> = x.iter().map(|c| c / r).collect();
        japanese_bracket(&scaled).powf(-q0)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma5Report {
    pub r: f64,
    pub integral: f64,
    pub bound: f64,
    /// Same integral with `|ΔΦ_R| + |(-Δ)^{α/2}Φ_R|` in place of `|𝓛Φ_R|`.
    pub split_integral: f64,
    /// Integrand at `x = 0`, `|𝓛Φ_R(0)|^{p/(p-1)}`.
    pub center_integrand: f64,
    pub boundary_phi: f64,
    /// Largest integrand value on the torus boundary.
    pub boundary_integrand: f64,
    /// Power-law extrapolation of the integral outside the torus.
    pub tail_estimate: f64,
}

impl Lemma5Report {
    pub fn ratio(&self) -> f64 {
        self.integral / self.bound
    }
}

fn integrand(phi: &Field, op: &Field, p: f64) -> Result<Field> {
    phi.zip_with(op, |f, l| f.powf(-1.0 / (p - 1.0)) * l.abs().powf(p / (p - 1.0)))
}

pub fn lemma5_integral(spec: &TestFunctionSpec) -> Result<Lemma5Report> {
    let n = spec.grid.dim() as f64;
    let (p, q0, alpha) = (spec.p, spec.q0, spec.alpha);
    // Decay exponent of the integrand at infinity; q0 < N + αp makes it integrable.
    let tail_exponent = (q0 - (n + alpha) * p) / (p - 1.0);
    assert!(
        (n + alpha) * p / (p - 1.0) - q0 / (p - 1.0) > n,
        "integrability condition violated for q0 = {q0}"
    );
    let boundary_phi = spec.boundary_value();
    if boundary_phi > TAIL_LIMIT {
        return Err(Error::InsufficientTail {
            boundary: boundary_phi,
            limit: TAIL_LIMIT,
        });
    }
    let phi = phi_r(spec);
    let full = apply_operator(OperatorSpec::mixed(alpha)?, &phi)?;
    let local = apply_operator(OperatorSpec::laplacian(), &phi)?;
    let nonlocal = apply_operator(OperatorSpec::fractional(alpha / 2.0)?, &phi)?;
    let split = local.zip_with(&nonlocal, |a, b| a.abs() + b.abs())?;

    let values = integrand(&phi, &full, p)?;
    let grid = &spec.grid;
    let center = grid.nearest(&[0.0, 0.0][..grid.dim()]);
    let boundary_integrand = (0..grid.len())
        .filter(|&i| grid.axes(i)[..grid.dim()].contains(&0))
        .map(|i| values.at(i))
        .fold(0.0, f64::max);
    let l = grid.half_width();
    let tail_estimate =
        sphere_area(grid.dim()) * boundary_integrand * l.powf(n) / (-tail_exponent - n);
    Ok(Lemma5Report {
        r: spec.r,
        integral: values.integrate(),
        bound: spec.bound(),
        split_integral: integrand(&phi, &split, p)?.integrate(),
        center_integrand: values.at(center),
        boundary_phi,
        boundary_integrand,
        tail_estimate,
    })
}

/// Runs [`lemma5_integral`] for each radius on a grid of half-width
/// `width_factor · R` with `points` nodes per axis, so that every run
/// resolves `Φ_R` identically.
pub fn lemma5_sweep(
    dim: usize,
    q0: f64,
    p: f64,
    alpha: f64,
    radii: &[f64],
    width_factor: f64,
    points: usize,
) -> Result<Vec<Lemma5Report>> {
    radii
        .par_iter()
        .map(|&r| {
            let grid = Grid::new(dim, width_factor * r, points)?;
            lemma5_integral(&TestFunctionSpec::new(q0, r, p, alpha, &grid)?)
        })
        .collect()
}

/// `R,integral,bound,ratio`.
pub fn lemma5_table(reports: &[Lemma5Report]) -> CsvTable {
    let mut t = CsvTable::new(&["R", "integral", "bound", "ratio"]);
    for r in reports {
        t.push(vec![r.r, r.integral, r.bound, r.ratio()]);
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma3Report {
    pub s: f64,
    pub q0: f64,
    /// `max |(-Δ)^s ⟨x⟩^{-q0}| ⟨x⟩^{N+2s}` over the central half on the given grid.
    pub max_ratio: f64,
    /// Same on the grid with twice the points.
    pub refined_max_ratio: f64,
    /// `|(-Δ)^s ⟨x⟩^{-q0}|` at the origin.
    pub center_value: f64,
}

impl Lemma3Report {
    pub fn relative_change(&self) -> f64 {
        (self.refined_max_ratio - self.max_ratio).abs() / self.max_ratio
    }

    /// Finite, and stable within 20% under refinement.
    pub fn passed(&self) -> bool {
        self.max_ratio.is_finite() && self.refined_max_ratio.is_finite() && self.relative_change() <= 0.2
    }
}

/// `(-Δ)^s ⟨x⟩^{-q0}` on `grid`, with `s = 1` giving `-Δ`.
pub fn bracket_operator(s: f64, q0: f64, grid: &Grid) -> Result<Field> {
    let psi = Field::from_fn(grid, |x| japanese_bracket(x).powf(-q0));
    apply_operator(OperatorSpec::power(s)?, &psi)
}

fn envelope_max(s: f64, q0: f64, grid: &Grid) -> Result<(f64, f64)> {
    let n = grid.dim() as f64;
    let op = bracket_operator(s, q0, grid)?;
    let half = grid.half_width() / 2.0;
    let mut max: f64 = 0.0;
    for i in 0..grid.len() {
        let x = &grid.point(i)[..grid.dim()];
        if x.iter().all(|c| c.abs() <= half) {
            max = max.max(op.at(i).abs() * japanese_bracket(x).powf(n + 2.0 * s));
        }
    }
    let center = op.at(grid.nearest(&[0.0, 0.0][..grid.dim()])).abs();
    Ok((max, center))
}

pub fn lemma3_envelope(s: f64, q0: f64, grid: &Grid) -> Result<Lemma3Report> {
    if !(q0 > grid.dim() as f64) {
        return Err(invalid("q0", format!("must exceed N = {}, got {q0}", grid.dim())));
    }
    let refined = Grid::new(grid.dim(), grid.half_width(), 2 * grid.points_per_dim())?;
    let (max_ratio, center_value) = envelope_max(s, q0, grid)?;
    let (refined_max_ratio, _) = envelope_max(s, q0, &refined)?;
    Ok(Lemma3Report {
        s,
        q0,
        max_ratio,
        refined_max_ratio,
        center_value,
    })
}

/// Largest companion grid accepted by the scaling check, in total points.
pub const MAX_COMPANION_POINTS: usize = 1 << 22;

fn companion_grid(base: &Grid, r: usize) -> Result<Grid> {
    if r == 0 || !r.is_power_of_two() {
        return Err(invalid("R", format!("must be a power of two, got {r}")));
    }
    let m = base.points_per_dim() * r;
    if m.pow(base.dim() as u32) > MAX_COMPANION_POINTS {
        return Err(invalid("R", format!("companion grid with {m} points per axis is too large")));
    }
    Grid::new(base.dim(), base.half_width() * r as f64, m)
}

/// Largest deviation between `(-Δ)^s ψ_R(R x)` and `R^{-2s} (-Δ)^s ψ(x)` over
/// the base lattice, relative to the sup of the right-hand side.
fn scaling_error(s: f64, base_values: &Field, dilated: &Field, r: usize) -> Result<f64> {
    let op = OperatorSpec::power(s)?;
    let rhs = apply_operator(op, base_values)?;
    let lhs = apply_operator(op, dilated)?;
    let base = base_values.grid();
    let big = dilated.grid();
    let factor = (r as f64).powf(-2.0 * s);
    let mut err: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..base.len() {
        let [a, b] = base.axes(i);
        let j = if base.dim() == 1 { a * r } else { big.flat([a * r, b * r]) };
        let right = factor * rhs.at(i);
        err = err.max((lhs.at(j) - right).abs());
        scale = scale.max(right.abs());
    }
    Ok(if scale == 0.0 { err } else { err / scale })
}

/// Scaling check with `ψ_R(x) = ψ(x/R)` sampled directly on a companion grid
/// of half-width `R L` and `R M` points per axis.
pub fn lemma4_scaling_check(
    s: f64,
    psi: impl Fn(&[f64]) -> f64,
    base: &Grid,
    r: usize,
) -> Result<f64> {
    let big = companion_grid(base, r)?;
    let rf = r as f64;
    let base_values = Field::from_fn(base, &psi);
    let dilated = Field::from_fn(&big, |x| {
        let y: Vec<f64> = x.iter().map(|c| c / rf).collect();
        psi(&y)
    });
    scaling_error(s, &base_values, &dilated, r)
}

/// Scaling check for a lattice field, dilated by trigonometric interpolation.
pub fn lemma4_scaling_check_field(s: f64, psi: &Field, r: usize) -> Result<f64> {
    let base = psi.grid();
    let big = companion_grid(base, r)?;
    let spec = psi.to_spectrum();
    let half = (base.points_per_dim() / 2) as i64;
    // Mode k of the companion grid has wavenumber ξ_k / R, so the dilated
    // interpolant keeps the base coefficients mode for mode. The unpaired
    // Nyquist coefficient is split evenly between ±M/2 when both exist.
    let split = if r > 1 { 0.5 } else { 1.0 };
    let coefficients: Vec<Complex64> = (0..big.len())
        .map(|i| {
            let [a, b] = big.axes(i);
            let modes: Vec<i64> = [a, b][..base.dim()].iter().map(|&k| big.mode(k)).collect();
            if modes.iter().any(|k| k.abs() > half) {
                return Complex64::new(0.0, 0.0);
            }
            let weight = modes.iter().filter(|k| k.abs() == half).fold(1.0, |w, _| w * split);
            spec.coefficient(&modes) * weight
        })
        .collect();
    let dilated = Spectrum::new(&big, coefficients)?.to_field();
    scaling_error(s, psi, &dilated, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn slope_of_a_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-1.25)).collect();
        assert_relative_eq!(loglog_slope(&xs, &ys), -1.25, epsilon = 1e-12);
    }

    #[test]
    fn test_function_values() {
        let g = Grid::new(1, 64.0, 256).unwrap();
        let spec = TestFunctionSpec::new(2.0, 4.0, 2.0, 1.5, &g).unwrap();
        let phi = phi_r(&spec);
        assert_eq!(phi.at(g.nearest(&[0.0])), 1.0);
        assert_relative_eq!(phi.at(g.nearest(&[4.0])), 0.5, epsilon = 1e-15);
        let half = g.points_per_dim() / 2;
        for i in half..g.len() - 1 {
            assert!(phi.at(i + 1) <= phi.at(i));
        }
    }

    #[test]
    fn test_function_validation() {
        let g = Grid::new(1, 64.0, 256).unwrap();
        assert!(TestFunctionSpec::new(1.0, 1.0, 2.0, 1.0, &g).is_err());
        assert!(TestFunctionSpec::new(3.0, 1.0, 2.0, 1.0, &g).is_err());
        assert!(TestFunctionSpec::new(1.5, 16.0, 2.0, 1.0, &g).is_err());
        let spec = TestFunctionSpec::new(1.5, 4.0, 2.0, 1.0, &g).unwrap();
        assert!(matches!(lemma5_integral(&spec), Err(Error::InsufficientTail { .. })));
    }

    #[test]
    fn bound_exponents() {
        let g = Grid::new(1, 512.0, 256).unwrap();
        let spec = TestFunctionSpec::new(1.5, 2.0, 2.0, 1.0, &g).unwrap();
        assert_eq!(spec.exponents(), [-3.0, -1.0]);
        assert_relative_eq!(spec.bound(), 0.125 + 0.5);
        assert_eq!(spec.dominant_exponent(), -1.0);
    }

    #[test]
    fn lemma5_center_and_split() {
        let g = Grid::new(1, 256.0, 4096).unwrap();
        let spec = TestFunctionSpec::new(2.0, 2.0, 2.0, 1.0, &g).unwrap();
        let report = lemma5_integral(&spec).unwrap();
        let op = apply_operator(OperatorSpec::mixed(1.0).unwrap(), &phi_r(&spec)).unwrap();
        assert_relative_eq!(report.center_integrand, op.at(g.nearest(&[0.0])).powi(2), max_relative = 1e-14);
        assert!(report.split_integral >= report.integral);
        // The tail estimate bounds the change from a four times wider torus.
        let wide = Grid::new(1, 1024.0, 16384).unwrap();
        let wide = lemma5_integral(&TestFunctionSpec::new(2.0, 2.0, 2.0, 1.0, &wide).unwrap()).unwrap();
        assert!((wide.integral - report.integral).abs() <= report.tail_estimate);
        let table = lemma5_table(&[report]);
        assert_eq!(table.header, vec!["R", "integral", "bound", "ratio"]);
    }

    #[test]
    fn laplacian_of_the_bracket() {
        let g = Grid::new(1, 64.0, 2048).unwrap();
        let op = bracket_operator(1.0, 2.0, &g).unwrap();
        let exact = Field::from_fn(&g, |x| {
            let y = x[0] * x[0];
            (2.0 - 6.0 * y) / (1.0 + y).powi(3)
        });
        let half = g.half_width() / 2.0;
        let err = (0..g.len())
            .filter(|&i| g.coordinate(i).abs() <= half)
            .map(|i| (op.at(i) - exact.at(i)).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn envelope_is_bounded() {
        let g = Grid::new(1, 200.0, 4096).unwrap();
        let report = lemma3_envelope(0.5, 1.5, &g).unwrap();
        assert!(report.passed(), "{report:?}");
        assert!(report.max_ratio >= report.center_value);
    }

    #[test]
    fn scaling_identity_is_trivial_at_unit_dilation() {
        let g = Grid::new(1, 20.0, 256).unwrap();
        let psi = |x: &[f64]| (-x[0] * x[0]).exp();
        assert_eq!(lemma4_scaling_check(0.5, psi, &g, 1).unwrap(), 0.0);
        assert!(lemma4_scaling_check(0.5, psi, &g, 3).is_err());
    }

    #[test]
    fn scaling_identity_for_a_single_mode() {
        let g = Grid::new(1, std::f64::consts::PI, 64).unwrap();
        let psi = Field::from_fn(&g, |x| x[0].sin());
        assert!(lemma4_scaling_check_field(0.5, &psi, 2).unwrap() < 1e-10);
        assert!(lemma4_scaling_check(0.5, |x| x[0].sin(), &g, 2).unwrap() < 1e-10);
    }

    #[test]
    fn scaling_identity_for_a_gaussian() {
        let g = Grid::new(1, 20.0, 512).unwrap();
        let err = lemma4_scaling_check(0.75, |x| (-x[0] * x[0] / 2.0).exp(), &g, 4).unwrap();
        assert!(err < 1e-6, "{err}");
        let g2 = Grid::new(2, 12.0, 64).unwrap();
        let psi = Field::from_fn(&g2, |x| (-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp());
        assert!(lemma4_scaling_check_field(0.9, &psi, 2).unwrap() < 1e-10);
    }
}
