//! Scenario configuration: one JSON document with defaults for every field.

use ppc_core::kalman::IntegrationMode;
use ppc_core::oculomotor::{EpisodeConfig, TaskConfig};
use ppc_core::popcode::TuningGrid;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    EncodeDemo,
    TransformDemo,
    KalmanDemo,
    EyeControl,
    Ablation,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::EncodeDemo,
        Scenario::TransformDemo,
        Scenario::KalmanDemo,
        Scenario::EyeControl,
        Scenario::Ablation,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::EncodeDemo => "encode-demo",
            Scenario::TransformDemo => "transform-demo",
            Scenario::KalmanDemo => "kalman-demo",
            Scenario::EyeControl => "eye-control",
            Scenario::Ablation => "ablation",
        }
    }

    pub fn parse(s: &str) -> Option<Scenario> {
        Self::ALL.into_iter().find(|sc| sc.name() == s)
    }
}

/// Uniform tuning-grid parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub neurons: usize,
    pub min: f64,
    pub max: f64,
    pub tuning_width: f64,
    pub rate_scale: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { neurons: 50, min: -4.0, max: 4.0, tuning_width: 0.5, rate_scale: 50.0 }
    }
}

impl GridConfig {
    /// Denser default for the recurrent state population.
    pub fn state_default() -> Self {
        Self { neurons: 100, ..Self::default() }
    }

    pub fn build(&self) -> Result<TuningGrid, ppc_core::Error> {
        TuningGrid::uniform(self.neurons, self.min, self.max, self.tuning_width, self.rate_scale)
    }

    fn validate(&self, path: &str, errs: &mut Vec<String>) {
        if let Err(e) = self.build() {
            errs.push(format!("{path}: {e}"));
        }
    }
}

/// Single static encode/decode (the first demo).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncodeConfig {
    pub stimulus: f64,
    pub gain: f64,
    pub window: f64,
}

impl Default for EncodeConfig {
    fn default() -> Self {
        Self { stimulus: 0.5, gain: 15.0, window: 1.0 }
    }
}

/// Coordinate-transform demo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransformConfig {
    pub stimulus_a: f64,
    pub stimulus_b: f64,
    pub gain_a: f64,
    pub gain_b: f64,
    pub window: f64,
    pub stochastic: bool,
}

impl Default for TransformConfig {
    fn default() -> Self {
        Self {
            stimulus_a: 1.0,
            stimulus_b: 2.0,
            gain_a: 40.0,
            gain_b: 60.0,
            window: 1.0,
            stochastic: true,
        }
    }
}

/// Diffusion-tracking demo: the state drifts as pure diffusion while the
/// observation gain sweeps through near-zero troughs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KalmanDemoConfig {
    /// Model rate a (0 = pure diffusion).
    pub model_rate: f64,
    /// Process-noise spectral density q.
    pub process_noise: f64,
    pub duration: f64,
    /// Peak observation gain of the sweep.
    pub gain_max: f64,
    /// Seconds between gain peaks; the gain is gain_max·cos⁸(πt/period).
    pub gain_period: f64,
    /// Gain of the prior bump the network starts from.
    pub init_gain: f64,
}

impl Default for KalmanDemoConfig {
    fn default() -> Self {
        Self {
            model_rate: 0.0,
            process_noise: 0.05,
            duration: 10.0,
            gain_max: 2.0,
            gain_period: 2.5,
            init_gain: 50.0,
        }
    }
}

/// Estimator knobs for the closed-loop task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Process-noise density assumed by the eye-position model.
    pub process_noise: f64,
    /// Gain of the prior bump at episode start.
    pub init_gain: f64,
    /// Poisson ensemble size per population unit (spiking integration).
    pub ensemble: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self { process_noise: 0.01, init_gain: 1.0, ensemble: 10.0 }
    }
}

/// Fully-resolved scenario configuration; serialized verbatim into every
/// trace sidecar so a run can be reproduced from its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub seed: u64,
    pub dt: f64,
    /// Grid used by the static demos (encode, transform inputs).
    pub grid: GridConfig,
    /// Grid of the recurrent state population and its observations.
    pub state_grid: GridConfig,
    pub encode: EncodeConfig,
    pub transform: TransformConfig,
    pub kalman: KalmanDemoConfig,
    pub task: TaskConfig,
    pub estimator: EstimatorConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::EncodeDemo,
            seed: 42,
            dt: 1e-3,
            grid: GridConfig::default(),
            state_grid: GridConfig::state_default(),
            encode: EncodeConfig::default(),
            transform: TransformConfig::default(),
            kalman: KalmanDemoConfig::default(),
            task: TaskConfig::default(),
            estimator: EstimatorConfig::default(),
        }
    }
}

impl ScenarioConfig {
    /// Episode configuration for the eye-control scenarios.
    pub fn episode(&self) -> Result<EpisodeConfig, Vec<String>> {
        Ok(EpisodeConfig {
            task: self.task.clone(),
            grid: self.state_grid.build().map_err(|e| vec![format!("state_grid: {e}")])?,
            process_noise: self.estimator.process_noise,
            dt: self.dt,
            mode: IntegrationMode::Spiking { ensemble: self.estimator.ensemble },
            init_gain: self.estimator.init_gain,
        })
    }

    /// Collect every violation, each naming the offending field.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            errs.push("dt: must be finite and > 0".into());
            return errs;
        }
        self.grid.validate("grid", &mut errs);
        self.state_grid.validate("state_grid", &mut errs);
        if !(self.encode.gain >= 0.0) {
            errs.push("encode.gain: must be >= 0".into());
        }
        if !(self.encode.window > 0.0) {
            errs.push("encode.window: must be > 0".into());
        }
        if !(self.transform.gain_a >= 0.0) || !(self.transform.gain_b >= 0.0) {
            errs.push("transform.gain_a/gain_b: must be >= 0".into());
        }
        if self.transform.gain_a + self.transform.gain_b <= 0.0 {
            errs.push("transform.gain_a: gains must not both be zero".into());
        }
        if !(self.transform.window > 0.0) {
            errs.push("transform.window: must be > 0".into());
        }
        if !(self.kalman.process_noise >= 0.0) {
            errs.push("kalman.process_noise: must be >= 0".into());
        }
        if !(self.kalman.duration > 0.0) {
            errs.push("kalman.duration: must be > 0".into());
        }
        if !(self.kalman.gain_max > 0.0) {
            errs.push("kalman.gain_max: must be > 0".into());
        }
        if !(self.kalman.gain_period > 0.0) {
            errs.push("kalman.gain_period: must be > 0".into());
        }
        if !(self.kalman.init_gain > 0.0) {
            errs.push("kalman.init_gain: must be > 0".into());
        }
        errs.extend(self.task.validate(self.dt));
        if !(self.estimator.process_noise > 0.0) {
            errs.push("estimator.process_noise: must be > 0".into());
        }
        if !(self.estimator.init_gain > 0.0) {
            errs.push("estimator.init_gain: must be > 0".into());
        }
        if !(self.estimator.ensemble > 0.0) {
            errs.push("estimator.ensemble: must be > 0".into());
        }
        errs
    }
}

/// Parse a JSON config, apply defaults, and validate. Empty input denotes
/// the full default configuration.
pub fn validate_config(raw: &str) -> Result<ScenarioConfig, Vec<String>> {
    let trimmed = raw.trim();
    let cfg: ScenarioConfig = if trimmed.is_empty() {
        ScenarioConfig::default()
    } else {
        serde_json::from_str(trimmed).map_err(|e| vec![format!("parse error: {e}")])?
    };
    let errs = cfg.validate();
    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(errs)
    }
}
