//! Closed-loop saccadic eye control.
//!
//! A target jumps between discrete levels every few hundred milliseconds.
//! The motor processor compares the target with the Kalman population's eye
//! estimate and moves the eye at full speed toward the target, with a
//! deadzone suppressing oscillatory feedback. Proprioception reports the eye
//! position delayed by `d`; an efference-copy gate sets its gain to the
//! floor for `gate_window` after any nonzero command, so only samples that
//! are effectively contemporary (the eye has been still for the whole
//! window) reach the estimator at full gain.
//!
//! Internally the loop runs on integer step indices, so gate and delay
//! arithmetic is exact; times in the trace are derived, not accumulated.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kalman::{self, IntegrationMode, KalmanModel, NetworkState};
use crate::popcode::{self, GaussianPosterior, PriorSpec, TuningGrid, GAIN_FLOOR_FACTOR};

/// Task parameters for one eye-control episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaskConfig {
    /// Discrete target positions (stimulus units).
    pub target_levels: Vec<f64>,
    /// Seconds between target redraws.
    pub target_interval: f64,
    /// Settling period with target, eye, and control held at zero.
    pub init_duration: f64,
    /// Total episode length, including initialization.
    pub episode_duration: f64,
    /// Proprioceptive delay d (seconds).
    pub proprio_delay: f64,
    /// Gate suppression window after a nonzero command (seconds).
    pub gate_window: f64,
    /// Deadzone ε: no command when |target − estimate| is below it.
    pub deadzone: f64,
    /// Eye speed while a command is active (stimulus units/s).
    pub max_speed: f64,
    /// Proprioceptive gain while the gate is closed (near zero, never zero).
    pub gate_floor: f64,
    /// Proprioceptive gain while the gate is open.
    pub gate_ceiling: f64,
}

impl Default for TaskConfig {
    fn default() -> Self {
        let gate_ceiling = 5.0;
        Self {
            target_levels: vec![-2.0, -1.0, 0.0, 1.0, 2.0],
            target_interval: 0.3,
            init_duration: 2.0,
            episode_duration: 30.0,
            proprio_delay: 0.1,
            gate_window: 0.1,
            deadzone: 0.1,
            // Worst-case saccades must finish with room for the gate to
            // reopen inside one target interval: 4 units at 30/s plus the
            // 100 ms window leaves ~67 ms of usable proprioception.
            max_speed: 40.0,
            gate_floor: GAIN_FLOOR_FACTOR * gate_ceiling,
            gate_ceiling,
        }
    }
}

fn multiple_of(x: f64, dt: f64) -> bool {
    let ratio = x / dt;
    (ratio - ratio.round()).abs() < 1e-6
}

impl TaskConfig {
    /// Collect violations, each naming the offending field.
    pub fn validate(&self, dt: f64) -> Vec<String> {
        let mut errs = Vec::new();
        if self.target_levels.is_empty() {
            errs.push("task.target_levels: must not be empty".into());
        }
        if !(self.target_interval > 0.0) {
            errs.push("task.target_interval: must be > 0".into());
        } else if !multiple_of(self.target_interval, dt) {
            errs.push("task.target_interval: must be a multiple of dt".into());
        }
        if !(self.init_duration > 0.0) {
            errs.push("task.init_duration: must be > 0".into());
        } else if !multiple_of(self.init_duration, dt) {
            errs.push("task.init_duration: must be a multiple of dt".into());
        }
        if !(self.episode_duration > self.init_duration) {
            errs.push("task.episode_duration: must exceed init_duration".into());
        } else if !multiple_of(self.episode_duration, dt) {
            errs.push("task.episode_duration: must be a multiple of dt".into());
        }
        if !(0.06..=0.1).contains(&self.proprio_delay) {
            errs.push("task.proprio_delay: must lie in [0.06, 0.1]".into());
        } else if !multiple_of(self.proprio_delay, dt) {
            errs.push("task.proprio_delay: must be a multiple of dt".into());
        }
        if self.gate_window < self.proprio_delay {
            errs.push("task.gate_window: must be >= proprio_delay".into());
        } else if !multiple_of(self.gate_window, dt) {
            errs.push("task.gate_window: must be a multiple of dt".into());
        }
        if !(self.deadzone > 0.0) {
            errs.push("task.deadzone: must be > 0".into());
        }
        if !(self.max_speed > 0.0) {
            errs.push("task.max_speed: must be > 0".into());
        }
        if !(self.gate_floor > 0.0) {
            errs.push("task.gate_floor: must be > 0 (a zero gain is not a valid Poisson rate)".into());
        }
        if !(self.gate_ceiling > self.gate_floor) {
            errs.push("task.gate_ceiling: must exceed gate_floor".into());
        }
        errs
    }
}

/// Everything needed to run one episode.
#[derive(Debug, Clone)]
pub struct EpisodeConfig {
    pub task: TaskConfig,
    pub grid: TuningGrid,
    /// Process-noise density assumed by the internal Kalman model.
    pub process_noise: f64,
    pub dt: f64,
    /// Integration mode of the Kalman population. Episodes default to
    /// spiking: the estimator is a set of Poisson processes, so withholding
    /// proprioception makes the estimate diffuse instead of freezing.
    pub mode: IntegrationMode,
    /// Gain of the prior bump the network state starts from.
    pub init_gain: f64,
}

impl EpisodeConfig {
    /// Default state/proprioception grid: 100 neurons over [-4, 4]. Saccadic
    /// transport needs several lattice cells per tuning width; coarser grids
    /// clamp the trailing edge of the moving bump and lag the estimate.
    pub fn default_grid() -> TuningGrid {
        TuningGrid::uniform(100, -4.0, 4.0, 0.5, 50.0).expect("episode grid is valid")
    }
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            task: TaskConfig::default(),
            grid: Self::default_grid(),
            process_noise: 0.01,
            dt: 1e-3,
            mode: IntegrationMode::Spiking { ensemble: 10.0 },
            init_gain: 1.0,
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            errs.push("dt: must be finite and > 0".into());
            return errs;
        }
        errs.extend(self.task.validate(self.dt));
        if !(self.process_noise > 0.0) {
            errs.push("process_noise: must be > 0".into());
        }
        if !(self.init_gain > 0.0) {
            errs.push("init_gain: must be > 0".into());
        }
        for level in &self.task.target_levels {
            if *level < self.grid.min() || *level > self.grid.max() {
                errs.push(format!("task.target_levels: level {level} is outside the grid range"));
                break;
            }
        }
        errs
    }
}

/// Target process: zero during initialization, then a uniform redraw from
/// the configured levels at every interval boundary, held in between.
#[derive(Debug, Clone)]
pub struct TargetProcess {
    current: f64,
}

impl TargetProcess {
    pub fn new() -> Self {
        Self { current: 0.0 }
    }

    /// Advance to step `k` (dt-indexed) and return the target for that step.
    pub fn advance<R: Rng + ?Sized>(
        &mut self,
        cfg: &TaskConfig,
        k: u64,
        dt: f64,
        rng: &mut R,
    ) -> f64 {
        let init_steps = (cfg.init_duration / dt).round() as u64;
        if k < init_steps {
            self.current = 0.0;
            return 0.0;
        }
        let interval_steps = (cfg.target_interval / dt).round() as u64;
        if (k - init_steps).is_multiple_of(interval_steps) {
            let idx = rng.random_range(0..cfg.target_levels.len());
            self.current = cfg.target_levels[idx];
        }
        self.current
    }
}

impl Default for TargetProcess {
    fn default() -> Self {
        Self::new()
    }
}

/// Bang-bang motor processor with a deadzone: no command when the estimate
/// is within ε of the target, otherwise full speed toward it.
pub fn motor_command(target: f64, eye_estimate: f64, cfg: &TaskConfig) -> f64 {
    let diff = target - eye_estimate;
    if diff.abs() < cfg.deadzone {
        0.0
    } else if diff > 0.0 {
        cfg.max_speed
    } else {
        -cfg.max_speed
    }
}

/// Gate gain at time `t`: the floor if a nonzero command occurred in
/// `(t − gate_window, t]`, otherwise the ceiling. With no command history
/// (in particular during initialization) the gate stays at the ceiling.
pub fn gate_gain(last_nonzero_command: Option<f64>, t: f64, cfg: &TaskConfig) -> f64 {
    match last_nonzero_command {
        Some(t0) if t >= t0 && t - t0 < cfg.gate_window => cfg.gate_floor,
        _ => cfg.gate_ceiling,
    }
}

/// Step-indexed eye-position history; the delay line for proprioception.
#[derive(Debug, Clone)]
pub struct EyeHistory {
    samples: Vec<f64>,
}

impl EyeHistory {
    pub fn new(initial: f64) -> Self {
        Self { samples: vec![initial] }
    }

    pub fn push(&mut self, eye: f64) {
        self.samples.push(eye);
    }

    /// Eye position `delay_steps` before step `k`, clamped to the earliest
    /// sample.
    pub fn delayed(&self, k: usize, delay_steps: usize) -> f64 {
        self.samples[k.saturating_sub(delay_steps)]
    }

    pub fn at(&self, k: usize) -> f64 {
        self.samples[k]
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Encode the delayed eye position at the gated gain.
pub fn proprio_encode<R: Rng + ?Sized>(
    history: &EyeHistory,
    k: usize,
    delay_steps: usize,
    gain: f64,
    grid: &TuningGrid,
    window: f64,
    rng: &mut R,
) -> Result<popcode::PopulationActivity> {
    let delayed = history.delayed(k, delay_steps);
    popcode::encode(grid, delayed, gain, window, rng)
}

/// One row of an episode trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub time: f64,
    pub target: f64,
    pub eye: f64,
    pub command: f64,
    pub gate_gain: f64,
    /// Decoded proprioceptive posterior, or `None` when the sample was
    /// degenerate (no spikes in the window).
    pub proprio: Option<GaussianPosterior>,
    /// Kalman population decode that drove this step's command.
    pub kalman: GaussianPosterior,
}

/// Time-indexed record of a closed-loop run.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub rows: Vec<TraceRow>,
    pub dt: f64,
    pub seed: u64,
    pub ablation: bool,
    /// Clamped-rate diagnostic accumulated by the network over the run.
    pub clamp_events: u64,
}

impl EpisodeTrace {
    pub fn init_rows(&self, cfg: &TaskConfig) -> usize {
        (cfg.init_duration / self.dt).round() as usize
    }
}

/// Run one closed-loop episode.
///
/// Wiring per step: target → motor processor (deadzone, bang-bang) → eye
/// plant → delayed, gate-gained proprioception → Kalman population → MAP
/// estimate back to the motor processor. With `ablation` the gate is forced
/// to the floor after initialization. A degenerate proprioceptive sample is
/// just a zero observation for the network — an outage, not a failure.
pub fn run_episode(cfg: &EpisodeConfig, seed: u64, ablation: bool) -> Result<EpisodeTrace> {
    let violations = cfg.validate();
    if !violations.is_empty() {
        return Err(Error::invalid(violations.join("; ")));
    }
    let dt = cfg.dt;
    let task = &cfg.task;
    let steps = (task.episode_duration / dt).round() as usize;
    let init_steps = (task.init_duration / dt).round() as usize;
    let delay_steps = (task.proprio_delay / dt).round() as usize;
    let window_steps = (task.gate_window / dt).round() as u64;

    let model = KalmanModel::new(0.0, 1.0, cfg.process_noise, cfg.grid.clone())?;
    let weights = kalman::build_weights(&model, &cfg.grid, dt)?;
    let mut state = NetworkState::from_prior(&cfg.grid, 0.0, cfg.init_gain, dt)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut targets = TargetProcess::new();
    let mut history = EyeHistory::new(0.0);
    let mut last_command_step: Option<u64> = None;
    let mut rows = Vec::with_capacity(steps);

    for k in 0..steps {
        let t = k as f64 * dt;
        let in_init = k < init_steps;
        let eye = history.at(k);

        let target = targets.advance(task, k as u64, dt, &mut rng);
        let estimate = state.decode(&cfg.grid)?;
        let command = if in_init {
            0.0
        } else {
            motor_command(target, estimate.map_estimate(), task)
        };
        if command != 0.0 {
            last_command_step = Some(k as u64);
        }

        let gate_closed = matches!(last_command_step, Some(k0) if (k as u64) - k0 < window_steps);
        let suppressed = gate_closed || (ablation && !in_init);
        let gate = if suppressed { task.gate_floor } else { task.gate_ceiling };

        let obs = proprio_encode(&history, k, delay_steps, gate, &cfg.grid, dt, &mut rng)?
            .at_time(t);
        let proprio = popcode::decode(&cfg.grid, &obs, PriorSpec::Flat).ok();

        rows.push(TraceRow {
            time: t,
            target,
            eye,
            command,
            gate_gain: gate,
            proprio,
            kalman: estimate,
        });

        state = kalman::step(&state, &weights, &obs, command, dt, cfg.mode, &mut rng)?;
        let next_eye = (eye + command * dt).clamp(cfg.grid.min(), cfg.grid.max());
        history.push(next_eye);
    }

    Ok(EpisodeTrace {
        rows,
        dt,
        seed,
        ablation,
        clamp_events: state.clamp_events,
    })
}
