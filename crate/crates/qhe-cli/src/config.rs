//! Run configuration: JSON-backed, defaulting to the standard four-level
//! engine parameters. Presets named after the experiments they reproduce
//! fill the experiment blocks.

use serde::{Deserialize, Serialize};

use qhe_core::model::EngineModel;
use qhe_core::protocol::EngineKind;

use crate::AppError;

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub schedule: ScheduleConfig,
    pub experiment: ExperimentConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub delta_e_hot: f64,
    pub delta_e_cold: f64,
    pub t_hot: f64,
    pub t_cold: f64,
    pub gamma_hot: f64,
    pub gamma_cold: f64,
    pub epsilon: f64,
    /// Explicit level energies; overrides the gap parametrization.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
    /// 1-based level indices coupled to the hot bath (with `levels`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hot_manifold: Option<Vec<usize>>,
    /// 1-based level indices coupled to the cold bath (with `levels`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cold_manifold: Option<Vec<usize>>,
    /// 1-based (lower, upper) level pairs coupled by the drive.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drive_pairs: Option<Vec<(usize, usize)>>,
    /// Drive frequency; defaults to (dE_hot - dE_cold)/2.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            delta_e_hot: 4.0,
            delta_e_cold: 1.0,
            t_hot: 5.0,
            t_cold: 1.0,
            gamma_hot: 5e-4,
            gamma_cold: 5e-4,
            epsilon: 5e-4,
            levels: None,
            hot_manifold: None,
            cold_manifold: None,
            drive_pairs: None,
            omega: None,
        }
    }
}

impl ModelConfig {
    pub fn build(&self) -> Result<EngineModel, AppError> {
        let model = if let Some(levels) = &self.levels {
            let one_based = |v: &Option<Vec<usize>>, what: &str| -> Result<Vec<usize>, AppError> {
                let v = v.as_ref().ok_or_else(|| {
                    AppError::Config(format!("explicit levels require `{what}`"))
                })?;
                v.iter()
                    .map(|&k| {
                        k.checked_sub(1)
                            .ok_or_else(|| AppError::Config(format!("{what} indices are 1-based")))
                    })
                    .collect()
            };
            let hot = one_based(&self.hot_manifold, "hot_manifold")?;
            let cold = one_based(&self.cold_manifold, "cold_manifold")?;
            let pairs: Vec<(usize, usize)> = self
                .drive_pairs
                .as_ref()
                .ok_or_else(|| AppError::Config("explicit levels require `drive_pairs`".into()))?
                .iter()
                .map(|&(a, b)| {
                    if a == 0 || b == 0 {
                        Err(AppError::Config("drive_pairs indices are 1-based".into()))
                    } else {
                        Ok((a - 1, b - 1))
                    }
                })
                .collect::<Result<_, _>>()?;
            let omega = self.omega.ok_or_else(|| {
                AppError::Config("explicit levels require `omega`".into())
            })?;
            EngineModel::new(
                levels.clone(),
                hot,
                cold,
                pairs,
                self.t_hot,
                self.t_cold,
                self.gamma_hot,
                self.gamma_cold,
                self.epsilon,
                omega,
            )
        } else {
            EngineModel::from_gaps(
                self.delta_e_hot,
                self.delta_e_cold,
                self.t_hot,
                self.t_cold,
                self.gamma_hot,
                self.gamma_cold,
                self.epsilon,
            )
            .map(|mut m| {
                if let Some(w) = self.omega {
                    m.omega = w;
                }
                m
            })
        };
        model.map_err(|e| AppError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    /// Engine types to run, in output order.
    pub engines: Vec<String>,
    /// Drive periods per sixth-cycle: tau_cyc = 6 m (2 pi / omega).
    pub m: f64,
    /// Cycles for transient runs.
    pub n_cycles: usize,
    pub dephasing: DephasingConfig,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            engines: vec![
                "continuous".into(),
                "two-stroke".into(),
                "four-stroke".into(),
                "two-field".into(),
            ],
            m: 1.0,
            n_cycles: 10,
            dephasing: DephasingConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DephasingConfig {
    /// "none", "rate", or "complete".
    pub mode: String,
    /// Explicit coherence decay rate for mode = "rate".
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    /// Alternative to `rate`: coherence time in drive periods.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coherence_time_drive_periods: Option<f64>,
}

impl Default for DephasingConfig {
    fn default() -> Self {
        Self {
            mode: "none".into(),
            rate: None,
            coherence_time_drive_periods: None,
        }
    }
}

impl DephasingConfig {
    pub fn resolve(&self, model: &EngineModel) -> Result<qhe_core::analysis::DephasingSpec, AppError> {
        use qhe_core::analysis::DephasingSpec;
        match self.mode.as_str() {
            "none" => Ok(DephasingSpec::None),
            "complete" => Ok(DephasingSpec::Complete),
            "rate" => {
                let rate = match (self.rate, self.coherence_time_drive_periods) {
                    (Some(r), _) => r,
                    (None, Some(periods)) => 1.0 / (periods * model.drive_period()),
                    (None, None) => {
                        return Err(AppError::Config(
                            "dephasing mode \"rate\" needs `rate` or `coherence_time_drive_periods`"
                                .into(),
                        ))
                    }
                };
                Ok(DephasingSpec::Rate(rate))
            }
            other => Err(AppError::Config(format!(
                "unknown dephasing mode {other:?} (expected none|rate|complete)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub log: bool,
}

impl GridConfig {
    pub fn new(min: f64, max: f64, points: usize, log: bool) -> Self {
        Self {
            min,
            max,
            points,
            log,
        }
    }

    pub fn values(&self) -> Result<Vec<f64>, AppError> {
        if self.points == 0 {
            return Err(AppError::Config("grid needs at least one point".into()));
        }
        if !(self.min.is_finite() && self.max.is_finite()) || self.min > self.max {
            return Err(AppError::Config(format!(
                "invalid grid range [{}, {}]",
                self.min, self.max
            )));
        }
        if self.points == 1 {
            return Ok(vec![self.min]);
        }
        if self.log && self.min <= 0.0 {
            return Err(AppError::Config("log grid needs a positive minimum".into()));
        }
        let n = self.points;
        Ok((0..n)
            .map(|k| {
                let f = k as f64 / (n - 1) as f64;
                if self.log {
                    self.min * (self.max / self.min).powf(f)
                } else {
                    self.min + (self.max - self.min) * f
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Action grid for `sweep --axis action`.
    pub action_grid: GridConfig,
    /// Bath-rate grid for `sweep --axis gamma`.
    pub gamma_grid: GridConfig,
    /// Grid of m values for `signature`.
    pub cycle_grid: GridConfig,
    /// Initial state for transients: "excited" (the top level) or "mixed".
    pub initial_state: String,
    pub seed: u64,
    pub srt_permutations: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            action_grid: GridConfig::new(1e-3, 0.3, 13, true),
            gamma_grid: GridConfig::new(1e-6, 1e-1, 21, true),
            cycle_grid: GridConfig::new(0.3, 30.0, 9, true),
            initial_state: "excited".into(),
            seed: 424_242,
            srt_permutations: 20,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// "csv" or "json".
    pub format: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            format: "csv".into(),
        }
    }
}

pub fn parse_engines(names: &[String]) -> Result<Vec<EngineKind>, AppError> {
    names
        .iter()
        .map(|s| match s.as_str() {
            "continuous" => Ok(EngineKind::Continuous),
            "two-stroke" => Ok(EngineKind::TwoStroke),
            "four-stroke" => Ok(EngineKind::FourStroke),
            "two-field" => Ok(EngineKind::TwoField),
            other => Err(AppError::Config(format!(
                "unknown engine type {other:?} (expected continuous|two-stroke|four-stroke|two-field)"
            ))),
        })
        .collect()
}

/// Built-in experiment presets, named after the figures they reproduce.
pub fn preset(name: &str) -> Result<RunConfig, AppError> {
    let mut config = RunConfig::default();
    match name {
        // transient equivalence, weak coupling
        "fig6a" => {
            config.model.epsilon = 1e-4;
            config.model.gamma_hot = 1e-4;
            config.model.gamma_cold = 1e-4;
            config.schedule.m = 1.0;
            config.schedule.n_cycles = 10;
        }
        // transient equivalence broken at strong coupling
        "fig6b" => {
            config.model.epsilon = 5e-3;
            config.model.gamma_hot = 5e-3;
            config.model.gamma_cold = 5e-3;
            config.schedule.m = 1.0;
            config.schedule.n_cycles = 10;
        }
        // steady-state power against action
        "fig7" => {
            config.experiment.action_grid = GridConfig::new(1e-3, 2.0, 25, true);
        }
        // power against cycle time with and without dephasing, plus the
        // stochastic bound
        "fig9" => {
            config.schedule.dephasing = DephasingConfig {
                mode: "rate".into(),
                rate: None,
                coherence_time_drive_periods: Some(100.0),
            };
            config.experiment.cycle_grid = GridConfig::new(0.3, 30.0, 13, true);
        }
        // power against bath rate at fixed stroke durations
        "fig10" => {
            config.model.epsilon = 2e-4;
            config.model.gamma_hot = 2e-4;
            config.model.gamma_cold = 2e-4;
            config.schedule.m = 600.0;
            config.experiment.gamma_grid = GridConfig::new(1e-6, 1e-1, 21, true);
        }
        other => {
            return Err(AppError::Config(format!(
                "unknown preset {other:?} (expected fig6a|fig6b|fig7|fig9|fig10)"
            )))
        }
    }
    Ok(config)
}

pub fn load_config_file(path: &std::path::Path) -> Result<RunConfig, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| AppError::Config(format!("{}: {e}", path.display())))
}
