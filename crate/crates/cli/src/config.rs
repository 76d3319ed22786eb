//! Experiment configuration. Every section has defaults, unknown keys are
//! rejected, and the resolved configuration is written back into the run
//! manifest.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use mixdiff::kernels::{KernelSpec, Window};
use mixdiff::solver::{ForcingCoefficient, PicardConfig, ProblemSpec};
use mixdiff::{Field, Grid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const DEFAULT_SEED: u64 = 20_240_917;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Solve,
    Kernel,
    Verify,
    Sweep,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Option<Command>,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub grid: GridConfig,
    pub problem: ProblemConfig,
    pub solver: SolverConfig,
    pub kernel: KernelConfig,
    pub verify: VerifyConfig,
    pub sweep: SweepConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            command: None,
            seed: DEFAULT_SEED,
            output: None,
            grid: GridConfig::default(),
            problem: ProblemConfig::default(),
            solver: SolverConfig::default(),
            kernel: KernelConfig::default(),
            verify: VerifyConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub half_width: f64,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            half_width: 20.0,
            points: 512,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingConfig {
    Constant { c: f64 },
    Power { c: f64, gamma: f64 },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    Gaussian {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        width: f64,
        #[serde(default)]
        center: Vec<f64>,
    },
    Constant {
        c: f64,
    },
    DoubleBump {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        width: f64,
        #[serde(default = "default_separation")]
        separation: f64,
    },
    /// Sum of Gaussians with seeded random amplitudes, centers and widths.
    RandomBumps {
        #[serde(default = "default_count")]
        count: usize,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        width: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn default_separation() -> f64 {
    4.0
}

fn default_count() -> usize {
    4
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub forcing: ForcingConfig,
    pub initial: InitialConfig,
    pub absorbing: bool,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.0,
            p: 2.0,
            forcing: ForcingConfig::Constant { c: 1.0 },
            initial: InitialConfig::Gaussian {
                amplitude: 1.0,
                width: 1.0,
                center: Vec::new(),
            },
            absorbing: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub k: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub substeps: usize,
    pub t_end: f64,
    pub n_snapshots: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = PicardConfig::default();
        Self {
            k: d.k,
            tol: d.tol,
            max_iters: d.max_iters,
            substeps: d.substeps,
            t_end: 1.0,
            n_snapshots: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Gauss,
    Stable,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowConfig {
    Enforced,
    Periodic,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    pub kind: KernelKind,
    pub alpha: f64,
    pub times: Vec<f64>,
    pub window: WindowConfig,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            kind: KernelKind::Mixed,
            alpha: 1.0,
            times: vec![0.1, 1.0],
            window: WindowConfig::Enforced,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyTarget {
    KernelProps,
    Smoothing,
    Taylor,
    Lemma3,
    Lemma4,
    Lemma5,
    Comparison,
    OdeOracle,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub target: Option<VerifyTarget>,
    /// Order of `(-Δ)^s` for the envelope and dilation checks.
    pub s: f64,
    /// Decay exponent of the test function.
    pub q0: f64,
    /// Dilation factors for the scaling check (powers of two).
    pub dilations: Vec<usize>,
    /// Radii for the test-function integral.
    pub radii: Vec<f64>,
    /// Torus half-width per unit radius in the test-function integral.
    pub width_factor: f64,
    pub points: usize,
    /// Multiplier on the initial data of the dominating run.
    pub factor: f64,
    /// Shift of the Gaussian used in the Taylor check.
    pub shift: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            target: None,
            s: 0.5,
            q0: 1.5,
            dilations: vec![2, 4],
            radii: (0..7).map(|k| f64::from(1u32 << k)).collect(),
            width_factor: 256.0,
            points: 4096,
            factor: 2.0,
            shift: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Test-function integral over radii.
    Lemma5,
    /// Taylor discrepancy over times.
    Taylor,
    /// `‖E(τ)∗δ‖∞` over times.
    Smoothing,
    /// Independent solves over values of one problem parameter.
    Solve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Alpha,
    Beta,
    P,
    Amplitude,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub kind: Option<SweepKind>,
    pub parameter: Option<SweepParameter>,
    pub values: Vec<f64>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Ok(Self::default());
        }
        Ok(serde_json::from_str(text)?)
    }

    pub fn command(&self) -> Result<Command> {
        self.command.context("command required")
    }

    pub fn build_grid(&self) -> Result<Grid> {
        let g = &self.grid;
        Grid::new(g.dim, g.half_width, g.points).context("invalid `grid`")
    }

    pub fn picard(&self) -> Result<PicardConfig> {
        let s = &self.solver;
        let cfg = PicardConfig {
            k: s.k,
            tol: s.tol,
            max_iters: s.max_iters,
            substeps: s.substeps,
        };
        cfg.validate().context("invalid `solver`")?;
        if !(s.t_end > 0.0 && s.t_end.is_finite()) {
            bail!("invalid `solver.t_end`: must be positive, got {}", s.t_end);
        }
        if s.n_snapshots < 2 {
            bail!("invalid `solver.n_snapshots`: need at least 2, got {}", s.n_snapshots);
        }
        Ok(cfg)
    }

    pub fn forcing(&self) -> Result<ForcingCoefficient> {
        match self.problem.forcing {
            ForcingConfig::Constant { c } => ForcingCoefficient::constant(c),
            ForcingConfig::Power { c, gamma } => ForcingCoefficient::power(c, gamma),
        }
        .context("invalid `problem.forcing`")
    }

    pub fn initial(&self, grid: &Grid) -> Result<Field> {
        initial_field(&self.problem.initial, grid, self.seed)
    }

    pub fn problem(&self, grid: &Grid) -> Result<ProblemSpec> {
        let p = &self.problem;
        let spec = ProblemSpec::new(p.alpha, p.beta, p.p, self.forcing()?, self.initial(grid)?)
            .context("invalid `problem`")?;
        Ok(if p.absorbing { spec } else { spec.without_absorption() })
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        let k = &self.kernel;
        match k.kind {
            KernelKind::Gauss => Ok(KernelSpec::gauss()),
            KernelKind::Stable => KernelSpec::stable(k.alpha),
            KernelKind::Mixed => KernelSpec::mixed(k.alpha),
        }
        .context("invalid `kernel.alpha`")
    }

    pub fn window(&self) -> Window {
        match self.kernel.window {
            WindowConfig::Enforced => Window::Enforced,
            WindowConfig::Periodic => Window::Periodic,
        }
    }
}

pub fn initial_field(initial: &InitialConfig, grid: &Grid, seed: u64) -> Result<Field> {
    let dim = grid.dim();
    let gauss = |x: &[f64], c: &[f64], w: f64| {
        let r2: f64 = x.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum();
        (-r2 / (2.0 * w * w)).exp()
    };
    let check_width = |w: f64| {
        if w > 0.0 && w.is_finite() {
            Ok(())
        } else {
            Err(anyhow::anyhow!("invalid `problem.initial.width`: must be positive, got {w}"))
        }
    };
    let check_amplitude = |a: f64| {
        if a >= 0.0 && a.is_finite() {
            Ok(())
        } else {
            Err(anyhow::anyhow!("invalid `problem.initial.amplitude`: must be nonnegative, got {a}"))
        }
    };
    let field = match initial {
        InitialConfig::Gaussian { amplitude, width, center } => {
            check_amplitude(*amplitude)?;
            check_width(*width)?;
            if center.len() > dim {
                bail!("invalid `problem.initial.center`: expected at most {dim} coordinates");
            }
            let mut c = center.clone();
            c.resize(dim, 0.0);
            Field::from_fn(grid, |x| amplitude * gauss(x, &c, *width))
        }
        InitialConfig::Constant { c } => {
            if !(*c >= 0.0 && c.is_finite()) {
                bail!("invalid `problem.initial.c`: must be nonnegative, got {c}");
            }
            Field::constant(grid, *c)
        }
        InitialConfig::DoubleBump { amplitude, width, separation } => {
            check_amplitude(*amplitude)?;
            check_width(*width)?;
            let mut left = vec![0.0; dim];
            let mut right = vec![0.0; dim];
            left[0] = -separation / 2.0;
            right[0] = separation / 2.0;
            Field::from_fn(grid, |x| amplitude * (gauss(x, &left, *width) + gauss(x, &right, *width)))
        }
        InitialConfig::RandomBumps { count, amplitude, width } => {
            check_amplitude(*amplitude)?;
            check_width(*width)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spread = grid.half_width() / 4.0;
            let bumps: Vec<(f64, Vec<f64>, f64)> = (0..*count)
                .map(|_| {
                    let a = rng.gen_range(0.0..=*amplitude);
                    let c = (0..dim).map(|_| rng.gen_range(-spread..spread)).collect();
                    let w = width * rng.gen_range(0.5..1.5);
                    (a, c, w)
                })
                .collect();
            Field::from_fn(grid, |x| bumps.iter().map(|(a, c, w)| a * gauss(x, c, *w)).sum())
        }
    };
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_has_no_command() {
        let cfg = ExperimentConfig::parse("{}").unwrap();
        assert_eq!(cfg.command().unwrap_err().to_string(), "command required");
        assert!(ExperimentConfig::parse("  \n").unwrap().command.is_none());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::parse(r#"{"command": "solve", "colour": 1}"#).unwrap_err();
        assert!(err.to_string().contains("colour"));
        let err = ExperimentConfig::parse(r#"{"grid": {"points": 64, "pts": 3}}"#).unwrap_err();
        assert!(err.to_string().contains("pts"));
        let err = ExperimentConfig::parse(
            r#"{"problem": {"forcing": {"kind": "constant", "c": 1, "gamma": 2}}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("gamma"));
    }

    #[test]
    fn defaults_fill_missing_sections() {
        let cfg = ExperimentConfig::parse(r#"{"command": "verify", "verify": {"target": "lemma3"}}"#).unwrap();
        assert_eq!(cfg.seed, DEFAULT_SEED);
        assert_eq!(cfg.grid.points, 512);
        assert_eq!(cfg.verify.target, Some(VerifyTarget::Lemma3));
        assert_eq!(cfg.verify.radii.len(), 7);
    }

    #[test]
    fn random_bumps_follow_the_seed() {
        let grid = Grid::new(1, 10.0, 64).unwrap();
        let init = InitialConfig::RandomBumps { count: 3, amplitude: 1.0, width: 1.0 };
        let a = initial_field(&init, &grid, 7).unwrap();
        let b = initial_field(&init, &grid, 7).unwrap();
        let c = initial_field(&init, &grid, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.min() >= 0.0);
    }

    #[test]
    fn invalid_values_name_the_key() {
        let cfg = ExperimentConfig::parse(r#"{"problem": {"alpha": 2.5}}"#).unwrap();
        let grid = cfg.build_grid().unwrap();
        let msg = format!("{:#}", cfg.problem(&grid).unwrap_err());
        assert!(msg.contains("alpha"), "{msg}");
        let cfg = ExperimentConfig::parse(r#"{"grid": {"points": 100}}"#).unwrap();
        assert!(format!("{:#}", cfg.build_grid().unwrap_err()).contains("grid"));
    }
}
