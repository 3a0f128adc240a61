//! Run configuration: strict JSON schema, exhaustive validation, model builders.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{Drift, DriftConfig, TimeProfile};
use crate::error::{Error, Result};
use crate::integrator::{BlowupConfig, Integrator, Model, RecordOptions, SchemeConfig};
use crate::noise::{ItoNoise, ItoNoiseSpec, LyapunovFunction};
use crate::psdo::BankDescription;
use crate::scalar::Real;
use crate::spectral::{read_snapshot, GridFunction, TorusGrid};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseBlock {
    /// Q-bank description file; relative paths resolve against the config file.
    #[serde(default)]
    pub bank: Option<PathBuf>,
    pub ito: ItoNoiseSpec,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsBlock {
    /// Sobolev index of the `hs_sq` column.
    pub s: f64,
    #[serde(default)]
    pub snapshots: bool,
}

/// Initial datum: real Fourier modes `a cos kx + b sin kx`, a snapshot file, or zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Zero,
    Modes { modes: Vec<(i64, f64, f64)> },
    Snapshot { path: PathBuf },
}

impl InitialCondition {
    fn validate(&self, field: &str, n: usize) -> Vec<String> {
        let mut errs = Vec::new();
        if let InitialCondition::Modes { modes } = self {
            for &(k, a, b) in modes {
                if k < 0 || (k as usize) >= n / 2 {
                    errs.push(format!("{field}: mode k = {k} must satisfy 0 <= k < N/2 = {}", n / 2));
                }
                if !(a.is_finite() && b.is_finite()) {
                    errs.push(format!("{field}: mode k = {k} has non-finite amplitude"));
                }
            }
        }
        errs
    }

    pub fn build<T: Real>(&self, grid: &TorusGrid<T>, base_dir: Option<&Path>) -> Result<GridFunction<T>> {
        match self {
            InitialCondition::Zero => Ok(GridFunction::zeros(grid)),
            InitialCondition::Modes { modes } => GridFunction::from_fn(grid, |x| {
                modes.iter().fold(T::zero(), |acc, &(k, a, b)| {
                    let kx = T::from_i64_lossy(k) * x;
                    acc + T::lit(a) * kx.cos() + T::lit(b) * kx.sin()
                })
            }),
            InitialCondition::Snapshot { path } => {
                let p = resolve(base_dir, path);
                let mut f = std::io::BufReader::new(std::fs::File::open(&p)?);
                read_snapshot(&mut f, grid)?
                    .ok_or_else(|| Error::Snapshot(format!("{} holds no record", p.display())))
            }
        }
    }
}

fn resolve(base: Option<&Path>, p: &Path) -> PathBuf {
    match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p.to_path_buf(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsParams {
    /// Sobolev index of the Ξ estimate.
    pub eta: f64,
    pub resolutions: Vec<usize>,
    pub n_samples: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovParams {
    pub v: String,
    pub g: TimeProfile,
    pub n_samples: usize,
    pub w_range: (f64, f64),
    pub t_range: (f64, f64),
    pub sample_seed: u64,
}

/// Experiment selection and parameters; `kind` names the subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentConfig {
    Simulate,
    Ensemble {
        paths: usize,
    },
    Decay {
        paths: usize,
        constants: ConstantsParams,
    },
    Lyapunov {
        paths: usize,
        constants: ConstantsParams,
        condition: LyapunovParams,
    },
    Stability {
        paths: usize,
        sigma: f64,
        deltas: Vec<f64>,
        direction: InitialCondition,
    },
    Measure {
        paths: usize,
        sigma: f64,
        horizons: Vec<f64>,
        handoffs: Vec<f64>,
        t_eval: f64,
        bootstrap: usize,
        composition_paths: usize,
    },
    EstimateConstants {
        constants: ConstantsParams,
        /// Channel resolutions for the symmetrized-order fit.
        order_resolutions: Vec<usize>,
    },
    BlowupScan {
        resolutions: Vec<usize>,
    },
}

impl ExperimentConfig {
    /// Subcommand name selecting this experiment.
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentConfig::Simulate => "simulate",
            ExperimentConfig::Ensemble { .. } => "ensemble",
            ExperimentConfig::Decay { .. } => "decay",
            ExperimentConfig::Lyapunov { .. } => "lyapunov",
            ExperimentConfig::Stability { .. } => "stability",
            ExperimentConfig::Measure { .. } => "measure",
            ExperimentConfig::EstimateConstants { .. } => "estimate-constants",
            ExperimentConfig::BlowupScan { .. } => "blowup-scan",
        }
    }

    fn sigma(&self) -> Option<f64> {
        match self {
            ExperimentConfig::Stability { sigma, .. } | ExperimentConfig::Measure { sigma, .. } => Some(*sigma),
            _ => None,
        }
    }
}

fn check_constants(errs: &mut Vec<String>, c: &ConstantsParams) {
    if !(c.eta >= 1.0) {
        errs.push(format!("experiment.constants.eta = {} must be >= 1", c.eta));
    }
    if c.resolutions.is_empty() || c.resolutions.iter().any(|&n| TorusGrid::<f64>::new(n).is_err()) {
        errs.push("experiment.constants.resolutions must be a nonempty list of valid grid sizes".to_string());
    }
    if c.n_samples == 0 {
        errs.push("experiment.constants.n_samples must be >= 1".to_string());
    }
}

fn check_paths(errs: &mut Vec<String>, paths: usize) {
    if paths < 2 {
        errs.push(format!("experiment.paths = {paths} must be >= 2"));
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridBlock,
    pub drift: DriftConfig,
    pub noise: NoiseBlock,
    pub scheme: SchemeConfig,
    #[serde(default)]
    pub blowup: BlowupConfig,
    pub diagnostics: DiagnosticsBlock,
    pub initial: InitialCondition,
    pub experiment: ExperimentConfig,
    pub output_dir: PathBuf,
}

/// A validated configuration with derived quantities.
#[derive(Clone, Debug)]
pub struct ResolvedConfig {
    pub config: RunConfig,
    pub bank: BankDescription,
    pub gamma0: f64,
    /// `max{2γ₀, 1, 2θ·1(ε>0)}`.
    pub regularity_excess: f64,
    pub base_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(vec![format!("config: {e}")]))
    }

    /// Parses and validates; every violation is listed in the error.
    pub fn validate_text(text: &str, base_dir: Option<&Path>) -> Result<ResolvedConfig> {
        Self::from_json(text)?.validate(base_dir)
    }

    pub fn validate(self, base_dir: Option<&Path>) -> Result<ResolvedConfig> {
        let mut errs = Vec::new();
        let n = self.grid.n;
        if let Err(e) = TorusGrid::<f64>::new(n) {
            errs.push(format!("grid.n: {e}"));
        }
        errs.extend(self.drift.validate());
        errs.extend(self.noise.ito.validate().into_iter().map(|e| format!("noise.ito: {e}")));
        errs.extend(self.scheme.validate());
        errs.extend(self.blowup.validate());
        errs.extend(self.initial.validate("initial", n));

        let bank = match &self.noise.bank {
            None => BankDescription::default(),
            Some(p) => match BankDescription::load(&resolve(base_dir, p)) {
                Ok(b) => b,
                Err(e) => {
                    errs.push(format!("noise.bank {}: {e}", p.display()));
                    BankDescription::default()
                }
            },
        };
        for (i, c) in bank.channels.iter().enumerate() {
            errs.extend(c.validate().into_iter().map(|e| format!("noise.bank channel {i}: {e}")));
        }

        let gamma0 = bank.gamma0();
        let diffusion = if self.drift.epsilon > 0.0 { 2.0 * self.drift.theta } else { 0.0 };
        let excess = (2.0 * gamma0).max(1.0).max(diffusion);
        let threshold = 1.5 + excess;
        let s = self.diagnostics.s;
        if !(s > threshold) {
            errs.push(format!(
                "diagnostics.s = {s} must exceed 3/2 + max{{2γ₀, 1, 2θ·1(ε>0)}} = {threshold} (γ₀ = {gamma0})"
            ));
        }
        if let Some(sigma) = self.experiment.sigma() {
            let upper = s - excess;
            if !(sigma > 1.5 && sigma < upper) {
                errs.push(format!("experiment.sigma = {sigma} must lie in (3/2, {upper})"));
            }
        }

        match &self.experiment {
            ExperimentConfig::Simulate => {}
            ExperimentConfig::Ensemble { paths } => check_paths(&mut errs, *paths),
            ExperimentConfig::Decay { paths, constants } => {
                check_paths(&mut errs, *paths);
                check_constants(&mut errs, constants);
            }
            ExperimentConfig::Lyapunov {
                paths,
                constants,
                condition,
            } => {
                check_paths(&mut errs, *paths);
                check_constants(&mut errs, constants);
                if let Err(e) = condition.v.parse::<LyapunovFunction>() {
                    errs.push(format!("experiment.condition.v: {e}"));
                }
                errs.extend(condition.g.validate("experiment.condition.g"));
                let (w0, w1) = condition.w_range;
                if !(w0 > 0.0 && w1 >= w0 && w1.is_finite()) {
                    errs.push("experiment.condition.w_range must satisfy 0 < lo <= hi".to_string());
                }
                if !(condition.t_range.1 >= condition.t_range.0) {
                    errs.push("experiment.condition.t_range must satisfy lo <= hi".to_string());
                }
                if condition.n_samples == 0 {
                    errs.push("experiment.condition.n_samples must be >= 1".to_string());
                }
            }
            ExperimentConfig::Stability {
                paths,
                deltas,
                direction,
                ..
            } => {
                check_paths(&mut errs, *paths);
                if deltas.is_empty() || deltas.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
                    errs.push("experiment.deltas must be a nonempty list of finite values >= 0".to_string());
                }
                if matches!(direction, InitialCondition::Zero) {
                    errs.push("experiment.direction must be nonzero".to_string());
                }
                errs.extend(direction.validate("experiment.direction", n));
            }
            ExperimentConfig::Measure {
                paths,
                horizons,
                handoffs,
                t_eval,
                ..
            } => {
                check_paths(&mut errs, *paths);
                if horizons.len() < 2 || handoffs.is_empty() {
                    errs.push("experiment needs >= 2 horizons and >= 1 handoff".to_string());
                }
                for &h in handoffs {
                    if !(h > 0.0) || horizons.iter().any(|&t| !(t > h)) || !(*t_eval > -h) {
                        errs.push(format!("experiment handoff n = {h}: need T > n > 0 and t_eval > -n"));
                    }
                }
                if !self.drift.damping.is_integrable() {
                    // Constant damping is allowed; the measure is then stationary.
                    if !matches!(self.drift.damping, TimeProfile::Constant { .. }) {
                        errs.push("drift.damping must be constant or integrable for the measure experiment".to_string());
                    }
                }
            }
            ExperimentConfig::EstimateConstants {
                constants,
                order_resolutions,
            } => {
                check_constants(&mut errs, constants);
                if order_resolutions.iter().any(|&n| TorusGrid::<f64>::new(n).is_err()) {
                    errs.push("experiment.order_resolutions holds an invalid grid size".to_string());
                }
            }
            ExperimentConfig::BlowupScan { resolutions } => {
                if resolutions.len() < 2 || resolutions.iter().any(|&n| TorusGrid::<f64>::new(n).is_err()) {
                    errs.push("experiment.resolutions must list >= 2 valid grid sizes".to_string());
                }
            }
        }

        if !errs.is_empty() {
            return Err(Error::InvalidConfig(errs));
        }
        Ok(ResolvedConfig {
            config: self,
            bank,
            gamma0,
            regularity_excess: excess,
            base_dir: base_dir.map(Path::to_path_buf),
        })
    }
}

impl ResolvedConfig {
    /// `3/2 + max{2γ₀, 1, 2θ·1(ε>0)}`.
    pub fn s_threshold(&self) -> f64 {
        1.5 + self.regularity_excess
    }

    pub fn grid<T: Real>(&self) -> Result<TorusGrid<T>> {
        TorusGrid::new(self.config.grid.n)
    }

    pub fn model_on<T: Real>(&self, grid: &TorusGrid<T>) -> Result<Model<T>> {
        let cfg = &self.config;
        Ok(Model {
            drift: Drift::new(grid, &cfg.drift)?,
            bank: self.bank.build(grid, self.base_dir.as_deref())?,
            ito: ItoNoise::new(grid, &cfg.noise.ito, cfg.drift.dealias)?,
        })
    }

    pub fn integrator_on<T: Real>(&self, grid: &TorusGrid<T>) -> Result<Integrator<T>> {
        let cfg = &self.config;
        Integrator::new(
            self.model_on(grid)?,
            cfg.scheme.clone(),
            cfg.blowup.clone(),
            RecordOptions {
                diagnostic_s: cfg.diagnostics.s,
                snapshots: cfg.diagnostics.snapshots,
            },
        )
    }

    pub fn integrator<T: Real>(&self) -> Result<Integrator<T>> {
        self.integrator_on(&self.grid()?)
    }

    pub fn initial<T: Real>(&self, grid: &TorusGrid<T>) -> Result<GridFunction<T>> {
        self.config.initial.build(grid, self.base_dir.as_deref())
    }

    pub fn seed(&self) -> u64 {
        self.config.noise.seed
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.config.noise.seed = seed;
        self
    }
}
