//! Mild solutions of `∂_t u + t^β L u = -h(t) |u|^{p-1} u` through the
//! Duhamel form over a step `[t0, t1]`:
//!
//! ```text
//! u(t) = E(τ(t, t0)) ∗ u(t0) - ∫_{t0}^{t} h(s) E(τ(t, s)) ∗ |u|^{p-1}u(s) ds,
//! ```
//!
//! where `E` is the mixed heat kernel and `τ(t, s) = (t^{β+1} - s^{β+1})/(β+1)`.
//! Each step solves the discretised equation at `substeps + 1` uniform nodes
//! by Picard iteration. The time integral uses product integration: `h` is
//! integrated exactly against the piecewise-linear interpolant of
//! `E(τ(t, s)) ∗ |u|^{p-1}u(s)` between nodes.

use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::export::{field_table, CsvTable};
use crate::grid::{Field, Grid, Norm, Spectrum};
use crate::kernels::KernelSpec;
use crate::timechange::TimeWeight;

/// Nonnegativity slack for computed snapshots.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-9;
/// Slack on the monotone sup-norm bound.
pub const SUP_NORM_SLACK: f64 = 1e-9;
/// Steps below this length count as an underflow of the step control.
pub const MIN_STEP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForcingCoefficient {
    /// `h(t) = c`.
    Constant { c: f64 },
    /// `h(t) = c t^γ`, `γ > -1`.
    Power { c: f64, gamma: f64 },
}

impl ForcingCoefficient {
    pub fn constant(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid("c", format!("forcing amplitude must be positive, got {c}")));
        }
        Ok(ForcingCoefficient::Constant { c })
    }

    pub fn power(c: f64, gamma: f64) -> Result<Self> {
        Self::constant(c)?;
        if !(gamma > -1.0 && gamma.is_finite()) {
            return Err(invalid("gamma", format!("must exceed -1, got {gamma}")));
        }
        Ok(ForcingCoefficient::Power { c, gamma })
    }

    pub fn value(&self, t: f64) -> f64 {
        match *self {
            ForcingCoefficient::Constant { c } => c,
            ForcingCoefficient::Power { c, gamma } => c * t.powf(gamma),
        }
    }

    /// `∫_a^b h`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match *self {
            ForcingCoefficient::Constant { c } => c * (b - a),
            ForcingCoefficient::Power { c, gamma } => {
                let q = gamma + 1.0;
                if a == 0.0 {
                    c * b.powf(q) / q
                } else {
                    c * a.powf(q) * (q * ((b - a) / a).ln_1p()).exp_m1() / q
                }
            }
        }
    }

    /// `∫_a^b h(s) (s - a) ds`.
    fn first_moment(&self, a: f64, b: f64) -> f64 {
        match *self {
            ForcingCoefficient::Constant { c } => c * (b - a).powi(2) / 2.0,
            ForcingCoefficient::Power { c, gamma } => {
                if a == 0.0 {
                    return c * b.powf(gamma + 2.0) / (gamma + 2.0);
                }
                // s = a (1 + x): c a^{γ+2} ∫_0^r (1+x)^γ x dx with r = (b-a)/a.
                let r = (b - a) / a;
                let inner = if r < 0.5 {
                    let mut binom = 1.0;
                    let mut power = r * r;
                    let mut sum = 0.0;
                    for n in 0..80 {
                        let term = binom * power / (n as f64 + 2.0);
                        sum += term;
                        if term.abs() < 1e-18 * sum.abs() {
                            break;
                        }
                        binom *= (gamma - n as f64) / (n as f64 + 1.0);
                        power *= r;
                    }
                    sum
                } else {
                    let q = gamma + 1.0;
                    ((1.0 + r).powf(q + 1.0) - 1.0) / (q + 1.0) - ((1.0 + r).powf(q) - 1.0) / q
                };
                c * a.powf(gamma + 2.0) * inner
            }
        }
    }

    /// Product-trapezoid weights `(∫ h (b-s)/Δ, ∫ h (s-a)/Δ)` over `[a, b]`.
    pub fn trapezoid_weights(&self, a: f64, b: f64) -> (f64, f64) {
        let total = self.integral(a, b);
        let right = self.first_moment(a, b) / (b - a);
        (total - right, right)
    }

    /// `sup h` on `[a, b]`, infinite for a singular power at `a = 0`.
    pub fn sup_on(&self, a: f64, b: f64) -> f64 {
        match *self {
            ForcingCoefficient::Constant { c } => c,
            ForcingCoefficient::Power { c, gamma } => {
                if gamma >= 0.0 {
                    c * b.powf(gamma)
                } else if a == 0.0 {
                    f64::INFINITY
                } else {
                    c * a.powf(gamma)
                }
            }
        }
    }

    /// Size of `h` entering the contraction estimate: the supremum, or the
    /// mean `∫h / (b - a)` where the supremum is infinite.
    pub fn contraction_scale(&self, a: f64, b: f64) -> f64 {
        let sup = self.sup_on(a, b);
        if sup.is_finite() {
            sup
        } else {
            self.integral(a, b) / (b - a)
        }
    }
}

/// The Cauchy problem: operator order, time weight, nonlinearity and data.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub forcing: ForcingCoefficient,
    pub initial: Field,
    absorbing: bool,
}

impl ProblemSpec {
    pub fn new(
        alpha: f64,
        beta: f64,
        p: f64,
        forcing: ForcingCoefficient,
        initial: Field,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(invalid("alpha", format!("must lie in (0, 2), got {alpha}")));
        }
        TimeWeight::new(beta)?;
        if !(p > 1.0 && p.is_finite()) {
            return Err(invalid("p", format!("must exceed 1, got {p}")));
        }
        if let Some(v) = initial.values().iter().find(|v| **v < 0.0) {
            return Err(invalid("initial", format!("data must be nonnegative, found {v}")));
        }
        Ok(Self {
            alpha,
            beta,
            p,
            forcing,
            initial,
            absorbing: true,
        })
    }

    /// Same problem with the absorption term switched off, leaving the
    /// homogeneous equation `∂_t u + t^β L u = 0`.
    pub fn without_absorption(mut self) -> Self {
        self.absorbing = false;
        self
    }

    pub fn is_absorbing(&self) -> bool {
        self.absorbing
    }

    pub fn with_initial(&self, initial: Field) -> Result<Self> {
        let mut out = Self::new(self.alpha, self.beta, self.p, self.forcing, initial)?;
        out.absorbing = self.absorbing;
        Ok(out)
    }

    pub fn grid(&self) -> &Grid {
        self.initial.grid()
    }

    pub fn kernel(&self) -> KernelSpec {
        KernelSpec::Mixed { alpha: self.alpha }
    }

    pub fn weight(&self) -> TimeWeight {
        TimeWeight::new(self.beta).expect("validated in constructor")
    }

    fn nonlinearity(&self, u: f64) -> f64 {
        u.abs().powf(self.p - 1.0) * u
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PicardConfig {
    /// Radius multiplier of the contraction ball, `‖u‖ < k ‖u(t0)‖_∞`.
    pub k: f64,
    /// Sup-norm tolerance on successive iterates.
    pub tol: f64,
    pub max_iters: usize,
    /// Quadrature subintervals per step.
    pub substeps: usize,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            k: 2.0,
            tol: 1e-10,
            max_iters: 50,
            substeps: 8,
        }
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 1.0 && self.k.is_finite()) {
            return Err(invalid("k", format!("must exceed 1, got {}", self.k)));
        }
        if !(self.tol > 0.0) {
            return Err(invalid("tol", format!("must be positive, got {}", self.tol)));
        }
        if self.max_iters < 2 {
            return Err(invalid("max_iters", "must be at least 2"));
        }
        if self.substeps == 0 {
            return Err(invalid("substeps", "must be at least 1"));
        }
        Ok(())
    }
}

/// `(k - 1) / (M k^p ‖u0‖^{p-1})`: the horizon on which the Duhamel map sends
/// the ball of radius `k ‖u0‖_∞` into itself.
pub fn existence_time_bound(u0_sup: f64, m: f64, p: f64, k: f64) -> Result<f64> {
    if !(u0_sup > 0.0) {
        return Err(invalid("u0_sup", "must be positive; zero data gives the zero solution"));
    }
    if !(m > 0.0) {
        return Err(invalid("M", format!("must be positive, got {m}")));
    }
    if !(p > 1.0) {
        return Err(invalid("p", format!("must exceed 1, got {p}")));
    }
    if !(k > 1.0) {
        return Err(invalid("k", format!("must exceed 1, got {k}")));
    }
    Ok((k - 1.0) / (m * k.powf(p) * u0_sup.powf(p - 1.0)))
}

/// `p (k ‖u(t0)‖_∞)^{p-1} M (t1 - t0)`: Lipschitz bound of the step map on the
/// contraction ball.
pub fn contraction_estimate(spec: &ProblemSpec, cfg: &PicardConfig, t0: f64, t1: f64, u_sup: f64) -> f64 {
    if !spec.absorbing {
        return 0.0;
    }
    let m = spec.forcing.contraction_scale(t0, t1);
    spec.p * (cfg.k * u_sup).powf(spec.p - 1.0) * m * (t1 - t0)
}

#[derive(Debug, Clone)]
pub struct PicardStep {
    pub field: Field,
    pub iterations: usize,
    /// Successive sup-norm increments between iterates.
    pub increments: Vec<f64>,
    /// Ratios of successive increments above the round-off floor.
    pub contraction_ratios: Vec<f64>,
}

fn symbol_table(spec: &ProblemSpec) -> Vec<f64> {
    let grid = spec.grid();
    let kernel = spec.kernel();
    (0..grid.len())
        .map(|i| kernel.symbol(grid.wavevector_norm(i)))
        .collect()
}

fn decay(symbols: &[f64], tau: f64) -> Vec<f64> {
    symbols.iter().map(|m| (-tau * m).exp()).collect()
}

const DECAY_CACHE_BUDGET: usize = 1 << 22;

/// Solves the discretised Duhamel equation on `[t0, t1]` starting from `u_t0`.
pub fn picard_step(
    spec: &ProblemSpec,
    cfg: &PicardConfig,
    t0: f64,
    t1: f64,
    u_t0: &Field,
) -> Result<PicardStep> {
    cfg.validate()?;
    spec.grid().ensure_same(u_t0.grid())?;
    if !(t0 >= 0.0 && t1 > t0) {
        return Err(invalid("t1", format!("need 0 <= t0 < t1, got [{t0}, {t1}]")));
    }
    let grid = u_t0.grid().clone();
    let weight = spec.weight();
    let j_max = cfg.substeps;
    let nodes: Vec<f64> = (0..=j_max)
        .map(|j| {
            if j == j_max {
                t1
            } else {
                t0 + (t1 - t0) * j as f64 / j_max as f64
            }
        })
        .collect();
    let weights: Vec<(f64, f64)> = nodes
        .windows(2)
        .map(|w| spec.forcing.trapezoid_weights(w[0], w[1]))
        .collect();
    let symbols = symbol_table(spec);
    let n = grid.len();

    // decay(j, i) = exp(-τ(s_j, s_i) m), i ≤ j.
    let cache: Option<Vec<Vec<Vec<f64>>>> = if (j_max + 1) * (j_max + 2) / 2 * n <= DECAY_CACHE_BUDGET {
        let mut rows = Vec::with_capacity(j_max + 1);
        for j in 0..=j_max {
            let mut row = Vec::with_capacity(j + 1);
            for i in 0..=j {
                row.push(decay(&symbols, weight.tau(nodes[j], nodes[i])?));
            }
            rows.push(row);
        }
        Some(rows)
    } else {
        None
    };
    let decay_at = |j: usize, i: usize| -> Result<std::borrow::Cow<'_, [f64]>> {
        match &cache {
            Some(rows) => Ok(std::borrow::Cow::Borrowed(rows[j][i].as_slice())),
            None => Ok(std::borrow::Cow::Owned(decay(
                &symbols,
                weight.tau(nodes[j], nodes[i])?,
            ))),
        }
    };

    let u0_hat = u_t0.to_spectrum();
    let nonlinear_hat = |u: &Field| -> Spectrum {
        if spec.absorbing {
            u.map(|v| spec.nonlinearity(v)).to_spectrum()
        } else {
            Field::zeros(&grid).to_spectrum()
        }
    };
    let linear: Vec<Vec<Complex64>> = (0..=j_max)
        .map(|j| {
            let d = decay_at(j, 0)?;
            Ok(u0_hat
                .coefficients()
                .iter()
                .zip(d.iter())
                .map(|(c, e)| c * e)
                .collect())
        })
        .collect::<Result<_>>()?;

    let to_field = |coeffs: Vec<Complex64>| -> Result<Field> {
        Ok(Spectrum::new(&grid, coeffs)?.to_field())
    };

    // Predictor: left-endpoint rule, marched node by node.
    let mut iterate: Vec<Field> = Vec::with_capacity(j_max + 1);
    let mut n_hat: Vec<Spectrum> = Vec::with_capacity(j_max + 1);
    iterate.push(u_t0.clone());
    n_hat.push(nonlinear_hat(u_t0));
    for j in 1..=j_max {
        let mut acc = linear[j].clone();
        for i in 0..j {
            let (wl, wr) = weights[i];
            let w = wl + wr;
            let d = decay_at(j, i)?;
            for ((a, c), e) in acc.iter_mut().zip(n_hat[i].coefficients()).zip(d.iter()) {
                *a -= c * (w * e);
            }
        }
        let u = to_field(acc)?;
        n_hat.push(nonlinear_hat(&u));
        iterate.push(u);
    }

    let scale = iterate.iter().fold(1.0_f64, |m, u| m.max(u.norm(Norm::Sup)));
    let floor = 1e3 * f64::EPSILON * scale;
    let mut increments = Vec::new();
    let mut ratios = Vec::new();
    for iteration in 1..=cfg.max_iters {
        let mut next = Vec::with_capacity(j_max + 1);
        next.push(u_t0.clone());
        let mut distance: f64 = 0.0;
        for j in 1..=j_max {
            let mut acc = linear[j].clone();
            for i in 0..j {
                let (wl, wr) = weights[i];
                let dl = decay_at(j, i)?;
                let dr = decay_at(j, i + 1)?;
                let left = n_hat[i].coefficients();
                let right = n_hat[i + 1].coefficients();
                for k in 0..n {
                    acc[k] -= left[k] * (wl * dl[k]) + right[k] * (wr * dr[k]);
                }
            }
            let u = to_field(acc)?;
            distance = distance.max(u.sup_distance(&iterate[j])?);
            next.push(u);
        }
        if let Some(&prev) = increments.last() {
            if prev > floor {
                ratios.push(distance / prev);
            }
        }
        increments.push(distance);
        iterate = next;
        if distance < cfg.tol {
            return Ok(PicardStep {
                field: iterate.pop().expect("nonempty"),
                iterations: iteration,
                increments,
                contraction_ratios: ratios,
            });
        }
        n_hat = iterate.iter().map(&nonlinear_hat).collect();
    }
    Err(Error::ToleranceFailure {
        tol: cfg.tol,
        iters: cfg.max_iters,
        last: *increments.last().unwrap_or(&f64::NAN),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Completed,
    /// The step control underflowed after repeated Picard failures.
    ToleranceFailure,
    /// `‖u‖_∞` exceeded twice its initial value, which the absorbing
    /// equation rules out; indicates a numerical fault.
    SupNormGrowth,
}

#[derive(Debug, Clone, Serialize)]
pub struct StepRecord {
    pub t0: f64,
    pub t1: f64,
    pub iterations: usize,
    pub contraction_ratios: Vec<f64>,
}

impl StepRecord {
    pub fn max_ratio(&self) -> f64 {
        self.contraction_ratios.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub times: Vec<f64>,
    pub snapshots: Vec<Field>,
    pub sup_norms: Vec<f64>,
    pub l1_norms: Vec<f64>,
    pub l2_norms: Vec<f64>,
    pub masses: Vec<f64>,
    /// Picard iterations spent since the previous snapshot.
    pub picard_iters: Vec<usize>,
    pub steps: Vec<StepRecord>,
    pub rejected_steps: usize,
    pub status: SolveStatus,
}

/// Outcome of the runtime checks on a solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvariantReport {
    pub min_value: f64,
    pub max_sup_increase: f64,
    pub max_mass_increase: f64,
    pub max_contraction_ratio: f64,
    pub nonnegative: bool,
    pub sup_monotone: bool,
    pub mass_monotone: bool,
}

impl InvariantReport {
    pub fn all_hold(&self) -> bool {
        self.nonnegative && self.sup_monotone && self.mass_monotone
    }
}

impl SolveResult {
    fn empty() -> Self {
        Self {
            times: Vec::new(),
            snapshots: Vec::new(),
            sup_norms: Vec::new(),
            l1_norms: Vec::new(),
            l2_norms: Vec::new(),
            masses: Vec::new(),
            picard_iters: Vec::new(),
            steps: Vec::new(),
            rejected_steps: 0,
            status: SolveStatus::Completed,
        }
    }

    fn record(&mut self, t: f64, u: Field, iters: usize) {
        self.times.push(t);
        self.sup_norms.push(u.norm(Norm::Sup));
        self.l1_norms.push(u.norm(Norm::L1));
        self.l2_norms.push(u.norm(Norm::L2));
        self.masses.push(u.integrate());
        self.picard_iters.push(iters);
        self.snapshots.push(u);
    }

    pub fn last(&self) -> Option<&Field> {
        self.snapshots.last()
    }

    pub fn invariants(&self) -> InvariantReport {
        let min_value = self
            .snapshots
            .iter()
            .map(Field::min)
            .fold(f64::INFINITY, f64::min);
        let max_increase = |v: &[f64]| {
            v.windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let max_sup_increase = max_increase(&self.sup_norms);
        let max_mass_increase = max_increase(&self.masses);
        InvariantReport {
            min_value,
            max_sup_increase,
            max_mass_increase,
            max_contraction_ratio: self.steps.iter().map(StepRecord::max_ratio).fold(0.0, f64::max),
            nonnegative: min_value >= -NEGATIVITY_TOLERANCE,
            sup_monotone: !(max_sup_increase > SUP_NORM_SLACK),
            mass_monotone: !(max_mass_increase > SUP_NORM_SLACK),
        }
    }

    /// `t,sup,l1,l2,mass,iters`.
    pub fn norms_table(&self) -> CsvTable {
        let mut t = CsvTable::new(&["t", "sup", "l1", "l2", "mass", "iters"]);
        for i in 0..self.times.len() {
            t.push(vec![
                self.times[i],
                self.sup_norms[i],
                self.l1_norms[i],
                self.l2_norms[i],
                self.masses[i],
                self.picard_iters[i] as f64,
            ]);
        }
        t
    }

    /// Writes `run.json`, `norms.csv` and `snapshot_NNN.csv` into `dir`.
    pub fn export(&self, dir: impl AsRef<Path>, spec: &ProblemSpec, cfg: &PicardConfig) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        self.norms_table().write(dir.join("norms.csv"))?;
        let mut files = Vec::new();
        for (i, snap) in self.snapshots.iter().enumerate() {
            let name = format!("snapshot_{i:03}.csv");
            field_table(snap).write(dir.join(&name))?;
            files.push(name);
        }
        let grid = spec.grid();
        let manifest = RunManifest {
            spec: SpecSummary {
                alpha: spec.alpha,
                beta: spec.beta,
                p: spec.p,
                forcing: spec.forcing,
                absorbing: spec.absorbing,
                initial_sup: spec.initial.norm(Norm::Sup),
                initial_mass: spec.initial.integrate(),
            },
            cfg: *cfg,
            grid: GridSummary {
                dim: grid.dim(),
                half_width: grid.half_width(),
                points_per_dim: grid.points_per_dim(),
            },
            times: &self.times,
            sup_norms: &self.sup_norms,
            l1_norms: &self.l1_norms,
            l2_norms: &self.l2_norms,
            masses: &self.masses,
            picard_iters: &self.picard_iters,
            steps: self.steps.len(),
            rejected_steps: self.rejected_steps,
            status: self.status,
            invariants: self.invariants(),
            snapshot_files: files,
        };
        let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(dir.join("run.json"), json)?;
        Ok(())
    }
}

#[derive(Serialize)]
struct SpecSummary {
    alpha: f64,
    beta: f64,
    p: f64,
    forcing: ForcingCoefficient,
    absorbing: bool,
    initial_sup: f64,
    initial_mass: f64,
}

#[derive(Serialize)]
struct GridSummary {
    dim: usize,
    half_width: f64,
    points_per_dim: usize,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    spec: SpecSummary,
    cfg: PicardConfig,
    grid: GridSummary,
    times: &'a [f64],
    sup_norms: &'a [f64],
    l1_norms: &'a [f64],
    l2_norms: &'a [f64],
    masses: &'a [f64],
    picard_iters: &'a [usize],
    steps: usize,
    rejected_steps: usize,
    status: SolveStatus,
    invariants: InvariantReport,
    snapshot_files: Vec<String>,
}

/// Largest effective-time increment that keeps the mixed kernel inside the
/// torus validity window.
fn tau_cap(spec: &ProblemSpec) -> f64 {
    let l6 = spec.grid().half_width() / 6.0;
    (l6 * l6).min(l6.powf(spec.alpha))
}

/// Largest `dt ≤ candidate` satisfying the step constraints at time `t`.
fn admissible_step(spec: &ProblemSpec, cfg: &PicardConfig, t: f64, u_sup: f64, candidate: f64) -> Result<f64> {
    let weight = spec.weight();
    let cap = weight.tau_inverse(tau_cap(spec), t)? - t;
    let mut dt = candidate.min(cap);
    if !spec.absorbing || u_sup == 0.0 {
        return Ok(dt);
    }
    // Lipschitz bound p (k u)^{p-1} M dt ≤ (k-1)/k, i.e. the existence
    // horizon divided by p. M depends on dt, so shrink to a fixed point.
    for _ in 0..200 {
        let m = spec.forcing.contraction_scale(t, t + dt);
        let limit = existence_time_bound(u_sup, m, spec.p, cfg.k)? / spec.p;
        if dt <= limit {
            return Ok(dt);
        }
        dt = limit.min(0.999 * dt);
    }
    Ok(dt)
}

const GROWTH: f64 = 1.5;
const SUCCESSES_BEFORE_GROWTH: usize = 3;

/// Marches from `t = 0` to `t_end`, recording `n_snapshots` uniformly spaced
/// snapshots including both endpoints.
pub fn solve(spec: &ProblemSpec, cfg: &PicardConfig, t_end: f64, n_snapshots: usize) -> Result<SolveResult> {
    cfg.validate()?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(invalid("t_end", format!("must be positive, got {t_end}")));
    }
    if n_snapshots < 2 {
        return Err(invalid("n_snapshots", "need at least 2 (start and end)"));
    }
    let targets: Vec<f64> = (0..n_snapshots)
        .map(|i| {
            if i + 1 == n_snapshots {
                t_end
            } else {
                t_end * i as f64 / (n_snapshots - 1) as f64
            }
        })
        .collect();

    let mut result = SolveResult::empty();
    let u0_sup = spec.initial.norm(Norm::Sup);
    result.record(0.0, spec.initial.clone(), 0);
    if u0_sup == 0.0 {
        for &t in &targets[1..] {
            result.record(t, Field::zeros(spec.grid()), 0);
        }
        return Ok(result);
    }

    let mut t = 0.0;
    let mut u = spec.initial.clone();
    let mut nominal = admissible_step(spec, cfg, 0.0, u0_sup, t_end)?;
    let mut successes = 0;
    let mut iters_since_snapshot = 0;
    for &target in &targets[1..] {
        while t < target {
            let u_sup = u.norm(Norm::Sup);
            let remaining = target - t;
            let dt = admissible_step(spec, cfg, t, u_sup, nominal.min(remaining))?;
            let t1 = if dt >= remaining * (1.0 - 1e-12) { target } else { t + dt };
            match picard_step(spec, cfg, t, t1, &u) {
                Ok(step) => {
                    iters_since_snapshot += step.iterations;
                    result.steps.push(StepRecord {
                        t0: t,
                        t1,
                        iterations: step.iterations,
                        contraction_ratios: step.contraction_ratios,
                    });
                    u = step.field;
                    t = t1;
                    if u.norm(Norm::Sup) > 2.0 * u0_sup {
                        result.record(t, u, iters_since_snapshot);
                        result.status = SolveStatus::SupNormGrowth;
                        return Ok(result);
                    }
                    // Steps truncated at a snapshot do not grow the nominal size.
                    if t1 - result.steps.last().map_or(0.0, |s| s.t0) >= nominal * (1.0 - 1e-12) {
                        successes += 1;
                        if successes >= SUCCESSES_BEFORE_GROWTH {
                            nominal *= GROWTH;
                            successes = 0;
                        }
                    }
                }
                Err(Error::ToleranceFailure { .. }) => {
                    result.rejected_steps += 1;
                    successes = 0;
                    nominal = dt / 2.0;
                    if nominal < MIN_STEP {
                        result.record(t, u, iters_since_snapshot);
                        result.status = SolveStatus::ToleranceFailure;
                        return Ok(result);
                    }
                }
                Err(e) => return Err(e),
            }
        }
        result.record(target, u.clone(), iters_since_snapshot);
        iters_since_snapshot = 0;
    }
    Ok(result)
}

/// Marches over a prescribed partition `0 = t_0 < t_1 < … < t_n`, one Picard
/// step per interval, recording a snapshot at every partition point.
pub fn solve_on_partition(spec: &ProblemSpec, cfg: &PicardConfig, partition: &[f64]) -> Result<SolveResult> {
    cfg.validate()?;
    if partition.len() < 2 || partition[0] != 0.0 || partition.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("partition", "must start at 0 and increase strictly"));
    }
    let mut result = SolveResult::empty();
    let mut u = spec.initial.clone();
    result.record(0.0, u.clone(), 0);
    for w in partition.windows(2) {
        let step = picard_step(spec, cfg, w[0], w[1], &u)?;
        result.steps.push(StepRecord {
            t0: w[0],
            t1: w[1],
            iterations: step.iterations,
            contraction_ratios: step.contraction_ratios,
        });
        u = step.field;
        result.record(w[1], u.clone(), step.iterations);
    }
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    /// `max_x (u - v)^+` per snapshot.
    pub violations: Vec<f64>,
    pub max_violation: f64,
}

/// Largest violation of the comparison tolerance.
pub const COMPARISON_TOLERANCE: f64 = 1e-8;

impl ComparisonReport {
    pub fn passed(&self) -> bool {
        self.max_violation <= COMPARISON_TOLERANCE
    }
}

/// Checks `u ≤ v` snapshot by snapshot for runs with ordered initial data.
pub fn compare_runs(u: &SolveResult, v: &SolveResult) -> Result<ComparisonReport> {
    if u.times.len() != v.times.len()
        || u.times.iter().zip(&v.times).any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1.0))
    {
        return Err(Error::GridMismatch("snapshot times differ".into()));
    }
    let violations = u
        .snapshots
        .iter()
        .zip(&v.snapshots)
        .map(|(a, b)| Ok(a.zip_with(b, |x, y| x - y)?.max().max(0.0)))
        .collect::<Result<Vec<f64>>>()?;
    let max_violation = violations.iter().copied().fold(0.0, f64::max);
    Ok(ComparisonReport {
        violations,
        max_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::apply_semigroup;
    use approx::assert_relative_eq;

    fn gaussian(grid: &Grid, amplitude: f64) -> Field {
        Field::from_fn(grid, |x| amplitude * (-x.iter().map(|c| c * c).sum::<f64>() / 2.0).exp())
    }

    #[test]
    fn forcing_validation_and_integrals() {
        assert!(ForcingCoefficient::constant(0.0).is_err());
        assert!(ForcingCoefficient::power(1.0, -1.0).is_err());
        let h = ForcingCoefficient::power(2.0, -0.5).unwrap();
        assert_relative_eq!(h.integral(0.0, 4.0), 8.0, epsilon = 1e-14);
        assert_relative_eq!(h.integral(1.0, 4.0), 4.0, epsilon = 1e-14);
        assert!(h.sup_on(0.0, 1.0).is_infinite());
        assert_relative_eq!(h.contraction_scale(0.0, 4.0), 2.0);
    }

    #[test]
    fn trapezoid_weights_match_quadrature() {
        // Brute-force midpoint quadrature of ∫ h(s) (s - a)/Δ ds.
        let cases = [
            ForcingCoefficient::constant(1.5).unwrap(),
            ForcingCoefficient::power(1.0, 1.0).unwrap(),
            ForcingCoefficient::power(0.7, 2.5).unwrap(),
            ForcingCoefficient::power(1.0, -0.5).unwrap(),
        ];
        for h in cases {
            for &(a, b) in &[(0.3, 0.8), (2.0, 2.001), (5.0, 9.0), (1.0, 1.4)] {
                let n = 200_000;
                let d = (b - a) / n as f64;
                let right: f64 = (0..n)
                    .map(|i| {
                        let s = a + (i as f64 + 0.5) * d;
                        h.value(s) * (s - a) / (b - a) * d
                    })
                    .sum();
                let (wl, wr) = h.trapezoid_weights(a, b);
                assert_relative_eq!(wr, right, max_relative = 1e-8);
                assert_relative_eq!(wl + wr, h.integral(a, b), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn existence_bound_values() {
        assert_relative_eq!(existence_time_bound(1.0, 1.0, 2.0, 2.0).unwrap(), 0.25);
        let a = existence_time_bound(1.0, 3.0, 2.0, 1.5).unwrap();
        let b = existence_time_bound(2.0, 3.0, 2.0, 1.5).unwrap();
        assert_relative_eq!(b, a / 2.0);
        assert!(existence_time_bound(1.0, 1.0, 2.0, 1.0 + 1e-9).unwrap() < 1e-8);
        assert!(existence_time_bound(0.0, 1.0, 2.0, 2.0).is_err());
        assert!(existence_time_bound(1.0, 1.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn problem_validation() {
        let g = Grid::new(1, 5.0, 16).unwrap();
        let h = ForcingCoefficient::constant(1.0).unwrap();
        let u0 = gaussian(&g, 1.0);
        assert!(ProblemSpec::new(2.0, 0.0, 2.0, h, u0.clone()).is_err());
        assert!(ProblemSpec::new(1.0, -0.1, 2.0, h, u0.clone()).is_err());
        assert!(ProblemSpec::new(1.0, 0.0, 1.0, h, u0.clone()).is_err());
        assert!(ProblemSpec::new(1.0, 0.0, 2.0, h, u0.scaled(-1.0)).is_err());
        let bad = PicardConfig { k: 1.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let g = Grid::new(1, 5.0, 32).unwrap();
        let spec = ProblemSpec::new(1.0, 0.0, 2.0, ForcingCoefficient::constant(1.0).unwrap(), Field::zeros(&g)).unwrap();
        let step = picard_step(&spec, &PicardConfig::default(), 0.0, 0.3, &Field::zeros(&g)).unwrap();
        assert_eq!(step.field.norm(Norm::Sup), 0.0);
        let run = solve(&spec, &PicardConfig::default(), 1.0, 5).unwrap();
        assert!(run.snapshots.iter().all(|u| u.norm(Norm::Sup) == 0.0));
    }

    #[test]
    fn homogeneous_step_is_the_semigroup() {
        let g = Grid::new(1, 10.0, 128).unwrap();
        let u0 = gaussian(&g, 1.0);
        let spec = ProblemSpec::new(1.2, 1.5, 2.0, ForcingCoefficient::constant(1.0).unwrap(), u0.clone())
            .unwrap()
            .without_absorption();
        let step = picard_step(&spec, &PicardConfig::default(), 0.5, 0.9, &u0).unwrap();
        let tau = spec.weight().tau(0.9, 0.5).unwrap();
        let expect = apply_semigroup(spec.kernel(), tau, &u0).unwrap();
        assert!(step.field.sup_distance(&expect).unwrap() < 1e-13);
    }

    #[test]
    fn constant_data_reduces_to_the_ode() {
        // u' = -u², u(t0) = c  ⇒  u(t1) = c / (1 + c (t1 - t0)).
        let g = Grid::new(1, 3.0, 16).unwrap();
        let c = 0.8;
        let u0 = Field::constant(&g, c);
        let spec = ProblemSpec::new(1.0, 0.0, 2.0, ForcingCoefficient::constant(1.0).unwrap(), u0.clone()).unwrap();
        let exact = c / (1.0 + c * 0.2);
        let error = |substeps| {
            let cfg = PicardConfig { substeps, ..Default::default() };
            let step = picard_step(&spec, &cfg, 0.2, 0.4, &u0).unwrap();
            (step.field.at(3) - exact).abs()
        };
        let (coarse, fine) = (error(32), error(64));
        assert!(fine < 1e-6, "{fine}");
        let order = (coarse / fine).log2();
        assert!((order - 2.0).abs() < 0.1, "{order}");
    }

    #[test]
    fn picard_failure_is_reported() {
        let g = Grid::new(1, 3.0, 16).unwrap();
        let u0 = Field::constant(&g, 50.0);
        let spec = ProblemSpec::new(1.0, 0.0, 2.0, ForcingCoefficient::constant(1.0).unwrap(), u0.clone()).unwrap();
        let cfg = PicardConfig { max_iters: 5, ..Default::default() };
        let r = picard_step(&spec, &cfg, 0.0, 1.0, &u0);
        assert!(matches!(r, Err(Error::ToleranceFailure { .. })));
    }

    #[test]
    fn solve_records_snapshots_on_schedule() {
        let g = Grid::new(1, 10.0, 128).unwrap();
        let spec = ProblemSpec::new(1.5, 0.0, 2.0, ForcingCoefficient::constant(1.0).unwrap(), gaussian(&g, 1.0)).unwrap();
        let run = solve(&spec, &PicardConfig::default(), 1.0, 5).unwrap();
        assert_eq!(run.status, SolveStatus::Completed);
        assert_eq!(run.times, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(run.invariants().all_hold());
        assert_eq!(run.norms_table().rows.len(), 5);
    }

    #[test]
    fn two_dimensional_run_keeps_invariants() {
        let g = Grid::new(2, 8.0, 32).unwrap();
        let spec = ProblemSpec::new(1.0, 0.5, 3.0, ForcingCoefficient::power(1.0, 0.5).unwrap(), gaussian(&g, 1.5)).unwrap();
        let run = solve(&spec, &PicardConfig::default(), 0.5, 3).unwrap();
        assert_eq!(run.status, SolveStatus::Completed);
        assert!(run.invariants().all_hold(), "{:?}", run.invariants());
    }

    #[test]
    fn comparison_rejects_mismatched_times() {
        let g = Grid::new(1, 10.0, 64).unwrap();
        let spec = ProblemSpec::new(1.0, 0.0, 2.0, ForcingCoefficient::constant(1.0).unwrap(), gaussian(&g, 1.0)).unwrap();
        let a = solve(&spec, &PicardConfig::default(), 0.5, 3).unwrap();
        let b = solve(&spec, &PicardConfig::default(), 0.5, 4).unwrap();
        assert!(compare_runs(&a, &b).is_err());
        let same = compare_runs(&a, &a).unwrap();
        assert_eq!(same.max_violation, 0.0);
    }

    #[test]
    fn export_writes_manifest_and_snapshots() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::new(1, 6.0, 32).unwrap();
        let spec = ProblemSpec::new(1.0, 0.0, 2.0, ForcingCoefficient::constant(1.0).unwrap(), gaussian(&g, 1.0)).unwrap();
        let cfg = PicardConfig::default();
        let run = solve(&spec, &cfg, 0.2, 3).unwrap();
        run.export(dir.path(), &spec, &cfg).unwrap();
        let norms = CsvTable::read(dir.path().join("norms.csv")).unwrap();
        assert_eq!(norms.header, vec!["t", "sup", "l1", "l2", "mass", "iters"]);
        assert!(dir.path().join("snapshot_002.csv").exists());
        let json = std::fs::read_to_string(dir.path().join("run.json")).unwrap();
        assert!(json.contains("\"status\": \"completed\""));
    }
}
