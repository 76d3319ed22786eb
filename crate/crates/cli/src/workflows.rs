//! The four commands. Each writes its CSV outputs into `dir` and returns the
//! checks it evaluated.

use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use mixdiff::estimates::{
    lemma3_envelope, lemma4_scaling_check, lemma5_sweep, lemma5_table, loglog_slope, TestFunctionSpec,
};
use mixdiff::export::CsvTable;
use mixdiff::grid::convolve;
use mixdiff::kernels::{
    apply_semigroup, gradient_norm, kernel_slice, taylor_constant, taylor_discrepancy, KernelSpec,
    TaylorReport, Window,
};
use mixdiff::solver::{
    compare_runs, solve, PicardConfig, ProblemSpec, SolveResult, SolveStatus, COMPARISON_TOLERANCE,
};
use mixdiff::{Field, Grid, Norm};
use rayon::prelude::*;

use crate::config::{Command, ExperimentConfig, InitialConfig, SweepKind, SweepParameter, VerifyTarget};
use crate::report::{Check, Outcome};

/// Relative slope tolerance for the smoothing exponents.
const SLOPE_TOLERANCE: f64 = 0.10;
/// Relative slope tolerance for the test-function integral.
const LEMMA5_SLOPE_TOLERANCE: f64 = 0.15;
/// Largest allowed max/min spread of integral over bound across radii.
const LEMMA5_SPREAD: f64 = 10.0;
const ODE_TOLERANCE: f64 = 1e-6;
const MASS_TOLERANCE: f64 = 1e-6;
const SEMIGROUP_TOLERANCE: f64 = 1e-10;
const SCALING_TOLERANCE: f64 = 1e-6;

pub fn execute(config: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    match config.command()? {
        Command::Solve => run_solve(config, dir),
        Command::Kernel => run_kernel(config, dir),
        Command::Verify => run_verify(config, dir),
        Command::Sweep => run_sweep(config, dir),
    }
}

fn write(table: &CsvTable, dir: &Path, name: &str, out: &mut Outcome) -> Result<()> {
    table
        .write(dir.join(name))
        .with_context(|| format!("writing {name}"))?;
    out.file(name);
    Ok(())
}

/// Closed-form solution of `u' = -h(t) u^p` from constant data `c`.
fn ode_solution(spec: &ProblemSpec, c: f64, t: f64) -> f64 {
    if !spec.is_absorbing() || c == 0.0 {
        return c;
    }
    let p = spec.p;
    (c.powf(1.0 - p) + (p - 1.0) * spec.forcing.integral(0.0, t)).powf(-1.0 / (p - 1.0))
}

fn constant_data(config: &ExperimentConfig) -> Option<f64> {
    match config.problem.initial {
        InitialConfig::Constant { c } => Some(c),
        _ => None,
    }
}

fn run_checks(run: &SolveResult, cfg: &PicardConfig, prefix: &str, out: &mut Outcome) {
    let inv = run.invariants();
    out.check(Check::holds(format!("{prefix}completed"), run.status == SolveStatus::Completed));
    out.check(Check::holds(format!("{prefix}nonnegative"), inv.nonnegative));
    out.check(Check::holds(format!("{prefix}sup_monotone"), inv.sup_monotone));
    out.check(Check::holds(format!("{prefix}mass_monotone"), inv.mass_monotone));
    out.check(Check::at_most(
        format!("{prefix}contraction_ratio"),
        inv.max_contraction_ratio,
        (cfg.k - 1.0) / cfg.k,
    ));
}

fn run_solve(config: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let grid = config.build_grid()?;
    let spec = config.problem(&grid)?;
    let cfg = config.picard()?;
    let run = solve(&spec, &cfg, config.solver.t_end, config.solver.n_snapshots)?;
    run.export(dir, &spec, &cfg)?;

    let mut out = Outcome::default();
    out.file("norms.csv");
    out.file("run.json");
    for i in 0..run.snapshots.len() {
        out.file(format!("snapshot_{i:03}.csv"));
    }
    run_checks(&run, &cfg, "", &mut out);
    if let Some(c) = constant_data(config) {
        let err = ode_deviation(&spec, &run, c);
        out.check(Check::at_most("ode_deviation", err, ODE_TOLERANCE));
    }
    out.note(format!(
        "{} accepted steps, {} rejected, final sup {:.6e}",
        run.steps.len(),
        run.rejected_steps,
        run.sup_norms.last().copied().unwrap_or(f64::NAN)
    ));
    Ok(out)
}

fn ode_deviation(spec: &ProblemSpec, run: &SolveResult, c: f64) -> f64 {
    run.times
        .iter()
        .zip(&run.snapshots)
        .flat_map(|(&t, u)| {
            let exact = ode_solution(spec, c, t);
            u.values().iter().map(move |v| (v - exact).abs())
        })
        .fold(0.0, f64::max)
}

fn run_kernel(config: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let grid = config.build_grid()?;
    let spec = config.kernel_spec()?;
    ensure!(!config.kernel.times.is_empty(), "invalid `kernel.times`: list is empty");
    let mut out = Outcome::default();
    let mut table = CsvTable::new(&["t", "mass", "peak", "min"]);
    for (i, &t) in config.kernel.times.iter().enumerate() {
        let k = kernel_slice(spec, &grid, t, config.window()).with_context(|| format!("kernel at t = {t}"))?;
        let name = format!("kernel_{i:03}.csv");
        k.write_csv(dir.join(&name))?;
        out.file(name);
        table.push(vec![t, k.mass(), k.field.max(), k.field.min()]);
        out.check(Check::at_most(format!("mass_error[t={t}]"), (k.mass() - 1.0).abs(), MASS_TOLERANCE));
    }
    write(&table, dir, "kernels.csv", &mut out)?;
    Ok(out)
}

fn run_verify(config: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let target = config.verify.target.context("verify.target required")?;
    match target {
        VerifyTarget::KernelProps => verify_kernel_props(config),
        VerifyTarget::Smoothing => verify_smoothing(config, dir),
        VerifyTarget::Taylor => verify_taylor(config, dir),
        VerifyTarget::Lemma3 => verify_lemma3(config),
        VerifyTarget::Lemma4 => verify_lemma4(config),
        VerifyTarget::Lemma5 => verify_lemma5(config, dir),
        VerifyTarget::Comparison => verify_comparison(config, dir),
        VerifyTarget::OdeOracle => verify_ode(config, dir),
    }
}

fn verify_kernel_props(config: &ExperimentConfig) -> Result<Outcome> {
    let grid = config.build_grid()?;
    let spec = config.kernel_spec()?;
    let times = &config.kernel.times;
    ensure!(times.len() >= 2, "invalid `kernel.times`: need at least two times");
    let mut out = Outcome::default();
    let mut worst_mass: f64 = 0.0;
    let mut worst_negative: f64 = 0.0;
    for &t in times {
        let k = kernel_slice(spec, &grid, t, config.window())?;
        worst_mass = worst_mass.max((k.mass() - 1.0).abs());
        worst_negative = worst_negative.min(k.negative_excursion());
    }
    out.check(Check::at_most("mass_error", worst_mass, MASS_TOLERANCE));
    out.check(Check::at_most("negative_excursion", -worst_negative, MASS_TOLERANCE));

    let (a, b) = (times[0], times[1]);
    let ka = kernel_slice(spec, &grid, a, config.window())?;
    let kb = kernel_slice(spec, &grid, b, config.window())?;
    let kab = kernel_slice(spec, &grid, a + b, config.window())?;
    let residual = convolve(&ka.field, &kb.field)?.sup_distance(&kab.field)? / kab.field.norm(Norm::Sup);
    out.check(Check::at_most("semigroup_residual", residual, SEMIGROUP_TOLERANCE));

    if spec == (KernelSpec::Stable { alpha: 1.0 }) && grid.dim() == 1 {
        // Whole-line Cauchy kernel, compared away from the periodic seam.
        let half = grid.half_width() / 2.0;
        let mut err: f64 = 0.0;
        for &t in times {
            let k = kernel_slice(spec, &grid, t, config.window())?;
            for i in (0..grid.len()).filter(|&i| grid.coordinate(i).abs() <= half) {
                let x = grid.coordinate(i);
                let exact = t / (std::f64::consts::PI * (t * t + x * x));
                err = err.max((k.field.at(i) - exact).abs());
            }
        }
        out.check(Check::at_most("cauchy_oracle_error", err, 1e-6));
    }
    Ok(out)
}

fn log_space(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (a.ln() + (b.ln() - a.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn smoothing_value(spec: KernelSpec, grid: &Grid, t: f64) -> Result<f64> {
    let delta = Field::delta(grid, &vec![0.0; grid.dim()]);
    Ok(apply_semigroup(spec, t, &delta)?.norm(Norm::Sup))
}

fn verify_smoothing(config: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let spec = KernelSpec::mixed(config.kernel.alpha).context("invalid `kernel.alpha`")?;
    let alpha = spec.alpha();
    // Short times resolve on a narrow torus, long times need a wide one.
    let regimes = [
        ("short", Grid::new(1, 20.0, 4096)?, log_space(1e-3, 1e-2, 9), -0.5),
        ("long", Grid::new(1, 16384.0, 4096)?, log_space(1e2, 1e3, 9), -1.0 / alpha),
    ];
    let mut out = Outcome::default();
    let mut table = CsvTable::new(&["parameter", "measured", "bound", "ratio"]);
    let mut grad = CsvTable::new(&["parameter", "measured", "bound", "ratio"]);
    for (label, grid, times, expected) in &regimes {
        let sup: Vec<f64> = times
            .iter()
            .map(|&t| smoothing_value(spec, grid, t))
            .collect::<Result<_>>()?;
        let gnorm: Vec<f64> = times
            .iter()
            .map(|&t| gradient_norm(spec, grid, t, Window::Enforced))
            .collect::<mixdiff::Result<_>>()?;
        for (i, &t) in times.iter().enumerate() {
            let rate = spec.decay_rate(t);
            table.push(vec![t, sup[i], rate, sup[i] / rate]);
            grad.push(vec![t, gnorm[i], rate, gnorm[i] / rate]);
        }
        let slope = loglog_slope(times, &sup);
        out.check(Check::at_most(
            format!("sup_slope_deviation[{label}]"),
            (slope - expected).abs() / expected.abs(),
            SLOPE_TOLERANCE,
        ));
        let slope = loglog_slope(times, &gnorm);
        out.check(Check::at_most(
            format!("gradient_slope_deviation[{label}]"),
            (slope - expected).abs() / expected.abs(),
            SLOPE_TOLERANCE,
        ));
    }
    write(&table, dir, "smoothing.csv", &mut out)?;
    write(&grad, dir, "gradient.csv", &mut out)?;
    Ok(out)
}

fn taylor_reports(config: &ExperimentConfig, times: &[f64]) -> Result<(KernelSpec, Vec<TaylorReport>)> {
    let grid = config.build_grid()?;
    ensure!(grid.dim() == 1, "invalid `grid.dim`: the Taylor check runs in one dimension");
    let spec = config.kernel_spec()?;
    let shift = config.verify.shift;
    let g = Field::from_fn(&grid, |x| (-(x[0] - shift).powi(2) / 2.0).exp());
    let reports = times
        .iter()
        .map(|&t| taylor_discrepancy(spec, &g, t).with_context(|| format!("Taylor check at t = {t}")))
        .collect::<Result<Vec<_>>>()?;
    Ok((spec, reports))
}

fn taylor_table(reports: &[TaylorReport]) -> CsvTable {
    let mut table = CsvTable::new(&["parameter", "measured", "bound", "ratio"]);
    for r in reports {
        table.push(vec![r.time, r.discrepancy, r.bound, r.ratio()]);
    }
    table
}

fn verify_taylor(config: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let times = &config.kernel.times;
    ensure!(!times.is_empty(), "invalid `kernel.times`: list is empty");
    let (spec, reports) = taylor_reports(config, times)?;
    let mut out = Outcome::default();
    let max_ratio = reports.iter().map(|r| r.ratio()).fold(0.0, f64::max);
    out.check(Check::at_most("max_ratio", max_ratio, taylor_constant(spec)));
    let late: Vec<f64> = reports.iter().filter(|r| r.time >= 10.0).map(|r| r.discrepancy).collect();
    if late.len() >= 2 {
        out.check(Check::holds("monotone_for_t>=10", late.windows(2).all(|w| w[1] < w[0])));
    }
    write(&taylor_table(&reports), dir, "taylor.csv", &mut out)?;
    Ok(out)
}

fn verify_lemma3(config: &ExperimentConfig) -> Result<Outcome> {
    let grid = config.build_grid()?;
    let v = &config.verify;
    let report = lemma3_envelope(v.s, v.q0, &grid).context("invalid `verify.s` or `verify.q0`")?;
    let mut out = Outcome::default();
    out.check(Check::at_most("envelope_ratio_change", report.relative_change(), 0.2));
    out.note(format!(
        "max ratio {:.6e}, refined {:.6e}, value at origin {:.6e}",
        report.max_ratio, report.refined_max_ratio, report.center_value
    ));
    Ok(out)
}

fn verify_lemma4(config: &ExperimentConfig) -> Result<Outcome> {
    let grid = config.build_grid()?;
    let s = config.verify.s;
    ensure!(!config.verify.dilations.is_empty(), "invalid `verify.dilations`: list is empty");
    let mut out = Outcome::default();
    for &r in &config.verify.dilations {
        let err = lemma4_scaling_check(s, |x| (-x.iter().map(|c| c * c).sum::<f64>() / 2.0).exp(), &grid, r)
            .context("invalid `verify.dilations` or `verify.s`")?;
        out.check(Check::at_most(format!("scaling_error[R={r}]"), err, SCALING_TOLERANCE));
    }
    Ok(out)
}

fn lemma5_sweep_checks(config: &ExperimentConfig, radii: &[f64], dir: &Path) -> Result<Outcome> {
    ensure!(radii.len() >= 2, "invalid radii: need at least two");
    let (v, p, alpha, dim) = (&config.verify, config.problem.p, config.problem.alpha, config.grid.dim);
    let probe = Grid::new(dim, v.width_factor * radii[0], v.points).context("invalid `verify.points`")?;
    let dominant = TestFunctionSpec::new(v.q0, radii[0], p, alpha, &probe)
        .context("invalid test-function parameters")?
        .dominant_exponent();
    let reports = lemma5_sweep(dim, v.q0, p, alpha, radii, v.width_factor, v.points)?;
    let mut out = Outcome::default();
    write(&lemma5_table(&reports), dir, "lemma5.csv", &mut out)?;

    let ratios: Vec<f64> = reports.iter().map(|r| r.ratio()).collect();
    let spread = ratios.iter().fold(0.0_f64, |m, r| m.max(*r)) / ratios.iter().fold(f64::INFINITY, |m, r| m.min(*r));
    out.check(Check::below("ratio_spread", spread, LEMMA5_SPREAD));

    // The asymptotic slope is fitted on R >= 8 when enough radii are given.
    let upper: Vec<usize> = (0..radii.len()).filter(|&i| radii[i] >= 8.0).collect();
    let idx: Vec<usize> = if upper.len() >= 2 { upper } else { (0..radii.len()).collect() };
    let xs: Vec<f64> = idx.iter().map(|&i| radii[i]).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| reports[i].integral).collect();
    let slope = loglog_slope(&xs, &ys);
    out.check(Check::at_most(
        "slope_deviation",
        (slope - dominant).abs() / dominant.abs(),
        LEMMA5_SLOPE_TOLERANCE,
    ));
    out.note(format!("fitted slope {slope:.6} against {dominant:.6}"));
    Ok(out)
}

fn verify_lemma5(config: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    lemma5_sweep_checks(config, &config.verify.radii, dir)
}

fn verify_comparison(config: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let factor = config.verify.factor;
    ensure!(factor >= 1.0, "invalid `verify.factor`: must be at least 1, got {factor}");
    let grid = config.build_grid()?;
    let spec = config.problem(&grid)?;
    let cfg = config.picard()?;
    let upper = spec.with_initial(spec.initial.scaled(factor))?;
    let (t_end, n) = (config.solver.t_end, config.solver.n_snapshots);
    let (u, v) = rayon::join(|| solve(&spec, &cfg, t_end, n), || solve(&upper, &cfg, t_end, n));
    let (u, v) = (u?, v?);
    let report = compare_runs(&u, &v)?;
    let mut out = Outcome::default();
    run_checks(&u, &cfg, "lower.", &mut out);
    run_checks(&v, &cfg, "upper.", &mut out);
    out.check(Check::at_most("max_violation", report.max_violation, COMPARISON_TOLERANCE));
    let mut table = CsvTable::new(&["t", "violation"]);
    for (t, viol) in u.times.iter().zip(&report.violations) {
        table.push(vec![*t, *viol]);
    }
    write(&table, dir, "comparison.csv", &mut out)?;
    Ok(out)
}

fn verify_ode(config: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let Some(c) = constant_data(config) else {
        bail!("invalid `problem.initial`: the ODE oracle needs constant initial data");
    };
    let grid = config.build_grid()?;
    let spec = config.problem(&grid)?;
    let cfg = config.picard()?;
    let run = solve(&spec, &cfg, config.solver.t_end, config.solver.n_snapshots)?;
    let mut out = Outcome::default();
    out.check(Check::holds("completed", run.status == SolveStatus::Completed));
    let mut table = CsvTable::new(&["t", "measured", "exact", "error"]);
    for (t, u) in run.times.iter().zip(&run.snapshots) {
        let exact = ode_solution(&spec, c, *t);
        let err = u.values().iter().map(|v| (v - exact).abs()).fold(0.0, f64::max);
        table.push(vec![*t, u.max(), exact, err]);
    }
    out.check(Check::at_most("max_error", ode_deviation(&spec, &run, c), ODE_TOLERANCE));
    write(&table, dir, "ode_oracle.csv", &mut out)?;
    Ok(out)
}

fn run_sweep(config: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let sweep = &config.sweep;
    let kind = sweep.kind.context("sweep.kind required")?;
    ensure!(!sweep.values.is_empty(), "invalid `sweep.values`: list is empty");
    match kind {
        SweepKind::Lemma5 => lemma5_sweep_checks(config, &sweep.values, dir),
        SweepKind::Taylor => {
            let (spec, reports) = taylor_reports(config, &sweep.values)?;
            let mut out = Outcome::default();
            let max_ratio = reports.iter().map(|r| r.ratio()).fold(0.0, f64::max);
            out.check(Check::at_most("max_ratio", max_ratio, taylor_constant(spec)));
            write(&taylor_table(&reports), dir, "sweep.csv", &mut out)?;
            Ok(out)
        }
        SweepKind::Smoothing => {
            let grid = config.build_grid()?;
            let spec = config.kernel_spec()?;
            let dim = grid.dim() as i32;
            let mut table = CsvTable::new(&["parameter", "measured", "bound", "ratio"]);
            for &t in &sweep.values {
                kernel_slice(spec, &grid, t, config.window()).with_context(|| format!("kernel at t = {t}"))?;
                let measured = smoothing_value(spec, &grid, t)?;
                let bound = spec.decay_rate(t).powi(dim);
                table.push(vec![t, measured, bound, measured / bound]);
            }
            let mut out = Outcome::default();
            write(&table, dir, "sweep.csv", &mut out)?;
            Ok(out)
        }
        SweepKind::Solve => solve_sweep(config, dir),
    }
}

fn with_parameter(config: &ExperimentConfig, parameter: SweepParameter, value: f64) -> ExperimentConfig {
    let mut c = config.clone();
    let problem = &mut c.problem;
    match parameter {
        SweepParameter::Alpha => problem.alpha = value,
        SweepParameter::Beta => problem.beta = value,
        SweepParameter::P => problem.p = value,
        SweepParameter::Amplitude => match &mut problem.initial {
            InitialConfig::Gaussian { amplitude, .. }
            | InitialConfig::DoubleBump { amplitude, .. }
            | InitialConfig::RandomBumps { amplitude, .. } => *amplitude = value,
            InitialConfig::Constant { c } => *c = value,
        },
    }
    c
}

fn solve_sweep(config: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let parameter = config.sweep.parameter.context("sweep.parameter required for a solve sweep")?;
    let grid = config.build_grid()?;
    let cfg = config.picard()?;
    let specs = config
        .sweep
        .values
        .iter()
        .map(|&v| with_parameter(config, parameter, v).problem(&grid))
        .collect::<Result<Vec<_>>>()
        .context("invalid `sweep.values`")?;
    // Runs are independent; each one writes into its own subdirectory.
    let runs = specs
        .par_iter()
        .enumerate()
        .map(|(i, spec)| {
            let run = solve(spec, &cfg, config.solver.t_end, config.solver.n_snapshots)?;
            run.export(dir.join(format!("run_{i:03}")), spec, &cfg)?;
            Ok(run)
        })
        .collect::<Result<Vec<SolveResult>>>()?;

    let mut out = Outcome::default();
    let mut table = CsvTable::new(&["parameter", "measured", "bound", "ratio"]);
    for (i, ((value, spec), run)) in config.sweep.values.iter().zip(&specs).zip(&runs).enumerate() {
        let bound = spec.initial.norm(Norm::Sup);
        let measured = run.sup_norms.last().copied().unwrap_or(f64::NAN);
        table.push(vec![*value, measured, bound, if bound > 0.0 { measured / bound } else { 0.0 }]);
        run_checks(run, &cfg, &format!("run_{i:03}."), &mut out);
        out.file(format!("run_{i:03}/norms.csv"));
    }
    write(&table, dir, "sweep.csv", &mut out)?;
    out.note("sweep.csv: measured is the final sup norm, bound the initial sup norm");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use mixdiff::solver::ForcingCoefficient;

    #[test]
    fn ode_solution_matches_known_values() {
        let grid = Grid::new(1, 4.0, 8).unwrap();
        let spec = ProblemSpec::new(1.0, 0.0, 2.0, ForcingCoefficient::constant(1.0).unwrap(), Field::constant(&grid, 1.0))
            .unwrap();
        assert!((ode_solution(&spec, 1.0, 2.0) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(ode_solution(&spec, 0.0, 2.0), 0.0);
        let off = spec.without_absorption();
        assert_eq!(ode_solution(&off, 0.7, 2.0), 0.7);
    }

    #[test]
    fn parameter_override_touches_one_field() {
        let base = ExperimentConfig::default();
        let c = with_parameter(&base, SweepParameter::P, 3.5);
        assert_eq!(c.problem.p, 3.5);
        assert_eq!(c.problem.alpha, base.problem.alpha);
        let c = with_parameter(&base, SweepParameter::Amplitude, 0.25);
        assert!(matches!(c.problem.initial, InitialConfig::Gaussian { amplitude, .. } if amplitude == 0.25));
    }
}
