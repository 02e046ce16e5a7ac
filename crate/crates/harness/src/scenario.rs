//! Scenario drivers: seeded simulation, trace assembly, and figure layout
//! for each runnable demo.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use ppc_core::kalman::{self, IntegrationMode, KalmanModel, NetworkState};
use ppc_core::oculomotor::{self, EpisodeTrace};
use ppc_core::oracles::{kalman_predict, kalman_update, KalmanBelief};
use ppc_core::popcode::{self, GaussianPosterior, PriorSpec, TuningGrid};
use ppc_core::transform::{TransformCircuit, TransformMode};

use crate::config::{Scenario, ScenarioConfig};
use crate::error::HarnessError;
use crate::plot::{self, decimate, Band, Figure, Panel, Series};
use crate::trace::{write_outputs, Cell, ScenarioOutput, TraceMeta, TraceWriter};

/// Columns of the closed-loop episode trace.
pub const EPISODE_COLUMNS: [&str; 10] = [
    "t",
    "target",
    "eye",
    "u",
    "gate_gain",
    "proprio_mean",
    "proprio_var",
    "proprio_degenerate",
    "kalman_mean",
    "kalman_var",
];

/// Run the configured scenario and write `trace.csv`, `trace.meta.json`,
/// and `figure.svg` into `out_dir`. `force_ablation` turns an eye-control
/// run into its ablated variant.
pub fn run_scenario(
    cfg: &ScenarioConfig,
    force_ablation: bool,
    out_dir: &Path,
) -> Result<ScenarioOutput, HarnessError> {
    let violations = cfg.validate();
    if !violations.is_empty() {
        return Err(HarnessError::Config(violations));
    }
    let mut cfg = cfg.clone();
    if force_ablation && cfg.scenario == Scenario::EyeControl {
        cfg.scenario = Scenario::Ablation;
    }
    let (trace, figure) = match cfg.scenario {
        Scenario::EncodeDemo => encode_demo(&cfg)?,
        Scenario::TransformDemo => transform_demo(&cfg)?,
        Scenario::KalmanDemo => kalman_demo(&cfg)?,
        Scenario::EyeControl => eye_control(&cfg, false)?,
        Scenario::Ablation => eye_control(&cfg, true)?,
    };
    let meta = TraceMeta {
        scenario: cfg.scenario.name().to_string(),
        seed: cfg.seed,
        ablation: cfg.scenario == Scenario::Ablation,
        columns: trace.columns().to_vec(),
        config: cfg.clone(),
    };
    write_outputs(out_dir, &meta, &trace, &figure.to_svg())
}

fn gaussian_curve(mean: f64, variance: f64, height: f64, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    (0..=400)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / 400.0;
            (x, height * (-(x - mean).powi(2) / (2.0 * variance)).exp())
        })
        .collect()
}

// ---------------------------------------------------------------------------
// encode-demo: a static population response and its decoded posterior
// ---------------------------------------------------------------------------

fn encode_demo(cfg: &ScenarioConfig) -> Result<(TraceWriter, Figure), HarnessError> {
    let grid = cfg.grid.build()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let e = &cfg.encode;
    let rates = popcode::tuning_rate(&grid, e.stimulus, e.gain)?;
    let activity = popcode::encode(&grid, e.stimulus, e.gain, e.window, &mut rng)?;
    let posterior = popcode::decode(&grid, &activity, PriorSpec::Flat).ok();

    let mut trace = TraceWriter::new(&["neuron", "preferred", "expected_rate", "count"]);
    for i in 0..grid.len() {
        trace.row(&[
            Cell::Int(i as i64),
            Cell::Float(grid.preferred()[i]),
            Cell::Float(rates[i]),
            Cell::Float(activity.counts()[i]),
        ]);
    }

    let mut fig = Figure::new("Static population code");
    let mut response = Panel::new("Sampled response", "preferred stimulus", "spike count");
    let expected: Vec<(f64, f64)> = grid
        .preferred()
        .iter()
        .zip(&rates)
        .map(|(&p, &r)| (p, r * e.window))
        .collect();
    let counts: Vec<(f64, f64)> = grid
        .preferred()
        .iter()
        .zip(activity.counts())
        .map(|(&p, &c)| (p, c))
        .collect();
    response.series.push(Series::line("expected", expected, plot::GRAY));
    response.series.push(Series::stems("counts", counts, plot::BLUE));
    fig.panel(response);

    let mut decoded = Panel::new("Decoded posterior", "stimulus", "density");
    if let Some(post) = posterior {
        let peak = 1.0 / (post.variance * 2.0 * std::f64::consts::PI).sqrt();
        decoded.series.push(Series::line(
            "posterior",
            gaussian_curve(post.mean, post.variance, peak, grid.min(), grid.max()),
            plot::BLUE,
        ));
        decoded.series.push(Series::line(
            "stimulus",
            vec![(e.stimulus, 0.0), (e.stimulus, peak)],
            plot::RED,
        ));
    }
    fig.panel(decoded);
    Ok((trace, fig))
}

// ---------------------------------------------------------------------------
// transform-demo: two encodings combined into an encoding of their sum
// ---------------------------------------------------------------------------

fn transform_demo(cfg: &ScenarioConfig) -> Result<(TraceWriter, Figure), HarnessError> {
    let grid_in = cfg.grid.build()?;
    let grid_out = TuningGrid::uniform(
        cfg.grid.neurons * 2 - 1,
        2.0 * cfg.grid.min,
        2.0 * cfg.grid.max,
        cfg.grid.tuning_width,
        cfg.grid.rate_scale,
    )?;
    let circuit = TransformCircuit::new(grid_in.clone(), grid_in.clone(), grid_out.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let t = &cfg.transform;
    let act_a = popcode::encode(&grid_in, t.stimulus_a, t.gain_a, t.window, &mut rng)?;
    let act_b = popcode::encode(&grid_in, t.stimulus_b, t.gain_b, t.window, &mut rng)?;
    let mode = if t.stochastic { TransformMode::Stochastic } else { TransformMode::Deterministic };
    let act_out = circuit.apply(&act_a, &act_b, mode, &mut rng)?;

    let mut trace = TraceWriter::new(&["population", "neuron", "preferred", "count"]);
    for (name, grid, act) in [
        ("a", &grid_in, &act_a),
        ("b", &grid_in, &act_b),
        ("out", &grid_out, &act_out),
    ] {
        for i in 0..grid.len() {
            trace.row(&[
                Cell::Str(name),
                Cell::Int(i as i64),
                Cell::Float(grid.preferred()[i]),
                Cell::Float(act.counts()[i]),
            ]);
        }
    }

    let post_a = popcode::decode(&grid_in, &act_a, PriorSpec::Flat)?;
    let post_b = popcode::decode(&grid_in, &act_b, PriorSpec::Flat)?;
    let post_out = popcode::decode(&grid_out, &act_out, PriorSpec::Flat).ok();

    let mut fig = Figure::new("Linear coordinate transformation");
    let mut inputs = Panel::new("Input responses", "preferred stimulus", "spike count");
    let stems = |grid: &TuningGrid, act: &popcode::PopulationActivity| -> Vec<(f64, f64)> {
        grid.preferred().iter().zip(act.counts()).map(|(&p, &c)| (p, c)).collect()
    };
    inputs.series.push(Series::stems("a", stems(&grid_in, &act_a), plot::BLUE));
    inputs.series.push(Series::stems("b", stems(&grid_in, &act_b), plot::ORANGE));
    fig.panel(inputs);

    let mut posteriors = Panel::new(
        "Decoded posteriors (height = gain)",
        "stimulus",
        "gain-scaled density",
    );
    let (lo, hi) = (grid_out.min(), grid_out.max());
    posteriors.series.push(Series::line(
        "a",
        gaussian_curve(post_a.mean, post_a.variance, post_a.gain, lo, hi),
        plot::BLUE,
    ));
    posteriors.series.push(Series::line(
        "b",
        gaussian_curve(post_b.mean, post_b.variance, post_b.gain, lo, hi),
        plot::ORANGE,
    ));
    if let Some(out) = post_out {
        posteriors.series.push(Series::line(
            "sum",
            gaussian_curve(out.mean, out.variance, out.gain, lo, hi),
            plot::RED,
        ));
    }
    fig.panel(posteriors);
    Ok((trace, fig))
}

// ---------------------------------------------------------------------------
// kalman-demo: diffusion tracking through a sweeping observation gain
// ---------------------------------------------------------------------------

/// One recorded step of the diffusion-tracking demo.
#[derive(Debug, Clone)]
pub struct KalmanDemoStep {
    pub time: f64,
    pub truth: f64,
    pub obs_gain: f64,
    pub obs: Option<GaussianPosterior>,
    pub net: GaussianPosterior,
    pub oracle: KalmanBelief,
    pub rate_min: f64,
    pub rate_max: f64,
    pub rate_mean: f64,
}

/// Observation gain profile of the demo: `gain_max·cos⁸(πt/period)` — broad
/// peaks separated by long near-zero troughs.
pub fn demo_gain(t: f64, gain_max: f64, period: f64) -> f64 {
    gain_max * (std::f64::consts::PI * t / period).cos().powi(8)
}

/// Simulate the diffusion demo, tracking the network and the exact filter on
/// the same observation stream.
pub fn run_kalman_demo(cfg: &ScenarioConfig, seed: u64) -> Result<Vec<KalmanDemoStep>, HarnessError> {
    let grid = cfg.state_grid.build()?;
    let k = &cfg.kalman;
    let dt = cfg.dt;
    let model = KalmanModel::new(k.model_rate, 0.0, k.process_noise, grid.clone())?;
    let weights = kalman::build_weights(&model, &grid, dt)?;
    let mut state = NetworkState::from_prior(&grid, 0.0, k.init_gain, dt)?;
    let prior = state.decode(&grid)?;
    let mut oracle = KalmanBelief::new(prior.mean, prior.variance)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = (k.duration / dt).round() as usize;
    let mut truth = 0.0f64;
    let mut out = Vec::with_capacity(steps);

    for i in 0..steps {
        let t = i as f64 * dt;
        let gain = demo_gain(t, k.gain_max, k.gain_period);
        let obs = popcode::encode(&grid, truth, gain, dt, &mut rng)?;
        let obs_post = popcode::decode(&grid, &obs, PriorSpec::Flat).ok();

        oracle = kalman_predict(oracle, &model, 0.0, dt);
        if let Some(z) = obs_post {
            oracle = kalman_update(oracle, z.mean, z.variance);
        }
        state = kalman::step(&state, &weights, &obs, 0.0, dt, IntegrationMode::Rate, &mut rng)?;
        let net = state.decode(&grid)?;

        let rates = state.rates.counts();
        let rate_min = rates.iter().cloned().fold(f64::MAX, f64::min);
        let rate_max = rates.iter().cloned().fold(f64::MIN, f64::max);
        let rate_mean = rates.iter().sum::<f64>() / rates.len() as f64;
        out.push(KalmanDemoStep {
            time: t,
            truth,
            obs_gain: gain,
            obs: obs_post,
            net,
            oracle,
            rate_min,
            rate_max,
            rate_mean,
        });

        // diffuse the true state after it was observed
        let noise: f64 = StandardNormal.sample(&mut rng);
        truth += (k.process_noise * dt).sqrt() * noise;
        if k.model_rate != 0.0 {
            truth += k.model_rate * truth * dt;
        }
    }
    Ok(out)
}

fn kalman_demo(cfg: &ScenarioConfig) -> Result<(TraceWriter, Figure), HarnessError> {
    let rows = run_kalman_demo(cfg, cfg.seed)?;
    let mut trace = TraceWriter::new(&[
        "t",
        "truth",
        "obs_gain",
        "obs_mean",
        "obs_var",
        "obs_degenerate",
        "net_mean",
        "net_var",
        "oracle_mean",
        "oracle_var",
        "rate_min",
        "rate_max",
        "rate_mean",
    ]);
    for r in &rows {
        trace.row(&[
            Cell::Float(r.time),
            Cell::Float(r.truth),
            Cell::Float(r.obs_gain),
            Cell::OptFloat(r.obs.map(|p| p.mean)),
            Cell::OptFloat(r.obs.map(|p| p.variance)),
            Cell::Int(r.obs.is_none() as i64),
            Cell::Float(r.net.mean),
            Cell::Float(r.net.variance),
            Cell::Float(r.oracle.mean),
            Cell::Float(r.oracle.variance),
            Cell::Float(r.rate_min),
            Cell::Float(r.rate_max),
            Cell::Float(r.rate_mean),
        ]);
    }

    let mut fig = Figure::new("Diffusion tracking through a sweeping observation gain");
    let times: Vec<f64> = rows.iter().map(|r| r.time).collect();

    let mut gain = Panel::new("Observation gain", "time (s)", "gain");
    gain.series.push(Series::line(
        "",
        decimate(&rows.iter().map(|r| (r.time, r.obs_gain)).collect::<Vec<_>>(), 3000),
        plot::BLUE,
    ));
    fig.panel(gain);

    let mut input = Panel::new("Observation decode", "time (s)", "stimulus");
    let obs_points: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.obs.map(|p| (r.time, p.mean)))
        .collect();
    input.series.push(Series::points("decoded", decimate(&obs_points, 1500), plot::BLUE));
    input.series.push(Series::line(
        "truth",
        decimate(&rows.iter().map(|r| (r.time, r.truth)).collect::<Vec<_>>(), 3000),
        plot::RED,
    ));
    input.y_range = Some((-3.0, 3.0));
    fig.panel(input);

    let mut rates = Panel::new("State population rates", "time (s)", "activity");
    rates.bands.push(Band {
        x: decimate(&times.iter().map(|&t| (t, 0.0)).collect::<Vec<_>>(), 1500)
            .iter()
            .map(|p| p.0)
            .collect(),
        lo: decimate(&rows.iter().map(|r| (r.time, r.rate_min)).collect::<Vec<_>>(), 1500)
            .iter()
            .map(|p| p.1)
            .collect(),
        hi: decimate(&rows.iter().map(|r| (r.time, r.rate_max)).collect::<Vec<_>>(), 1500)
            .iter()
            .map(|p| p.1)
            .collect(),
        color: plot::PURPLE,
    });
    rates.series.push(Series::line(
        "mean",
        decimate(&rows.iter().map(|r| (r.time, r.rate_mean)).collect::<Vec<_>>(), 3000),
        plot::PURPLE,
    ));
    fig.panel(rates);

    let mut net = Panel::new("State decode (mean ± std)", "time (s)", "stimulus");
    net.bands.push(Band {
        x: decimate(&rows.iter().map(|r| (r.time, 0.0)).collect::<Vec<_>>(), 1500)
            .iter()
            .map(|p| p.0)
            .collect(),
        lo: decimate(
            &rows.iter().map(|r| (r.time, r.net.mean - r.net.std())).collect::<Vec<_>>(),
            1500,
        )
        .iter()
        .map(|p| p.1)
        .collect(),
        hi: decimate(
            &rows.iter().map(|r| (r.time, r.net.mean + r.net.std())).collect::<Vec<_>>(),
            1500,
        )
        .iter()
        .map(|p| p.1)
        .collect(),
        color: plot::BLUE,
    });
    net.series.push(Series::line(
        "decoded",
        decimate(&rows.iter().map(|r| (r.time, r.net.mean)).collect::<Vec<_>>(), 3000),
        plot::BLUE,
    ));
    net.series.push(Series::line(
        "truth",
        decimate(&rows.iter().map(|r| (r.time, r.truth)).collect::<Vec<_>>(), 3000),
        plot::RED,
    ));
    fig.panel(net);
    Ok((trace, fig))
}

// ---------------------------------------------------------------------------
// eye-control / ablation: the closed-loop saccade task
// ---------------------------------------------------------------------------

/// Run both the gated episode and its ablated twin for one seed.
pub fn run_episode_pair(
    cfg: &ScenarioConfig,
) -> Result<(EpisodeTrace, EpisodeTrace), HarnessError> {
    let episode_cfg = cfg.episode().map_err(HarnessError::Config)?;
    let gated = oculomotor::run_episode(&episode_cfg, cfg.seed, false)?;
    let ablated = oculomotor::run_episode(&episode_cfg, cfg.seed, true)?;
    Ok((gated, ablated))
}

fn episode_trace(trace: &EpisodeTrace) -> TraceWriter {
    let mut w = TraceWriter::new(&EPISODE_COLUMNS);
    for r in &trace.rows {
        w.row(&[
            Cell::Float(r.time),
            Cell::Float(r.target),
            Cell::Float(r.eye),
            Cell::Float(r.command),
            Cell::Float(r.gate_gain),
            Cell::OptFloat(r.proprio.map(|p| p.mean)),
            Cell::OptFloat(r.proprio.map(|p| p.variance)),
            Cell::Int(r.proprio.is_none() as i64),
            Cell::Float(r.kalman.mean),
            Cell::Float(r.kalman.variance),
        ]);
    }
    w
}

fn tracking_panel(title: &str, trace: &EpisodeTrace) -> Panel {
    let mut p = Panel::new(title, "time (s)", "position");
    p.bands.push(Band {
        x: decimate(&trace.rows.iter().map(|r| (r.time, 0.0)).collect::<Vec<_>>(), 1500)
            .iter()
            .map(|q| q.0)
            .collect(),
        lo: decimate(
            &trace.rows.iter().map(|r| (r.time, r.kalman.mean - r.kalman.std())).collect::<Vec<_>>(),
            1500,
        )
        .iter()
        .map(|q| q.1)
        .collect(),
        hi: decimate(
            &trace.rows.iter().map(|r| (r.time, r.kalman.mean + r.kalman.std())).collect::<Vec<_>>(),
            1500,
        )
        .iter()
        .map(|q| q.1)
        .collect(),
        color: plot::BLUE,
    });
    p.series.push(Series::line(
        "target",
        decimate(&trace.rows.iter().map(|r| (r.time, r.target)).collect::<Vec<_>>(), 3000),
        plot::GRAY,
    ));
    p.series.push(Series::line(
        "eye",
        decimate(&trace.rows.iter().map(|r| (r.time, r.eye)).collect::<Vec<_>>(), 3000),
        plot::GREEN,
    ));
    p.series.push(Series::line(
        "estimate",
        decimate(&trace.rows.iter().map(|r| (r.time, r.kalman.mean)).collect::<Vec<_>>(), 3000),
        plot::BLUE,
    ));
    p.y_range = Some((-3.0, 3.0));
    p
}

fn eye_control(cfg: &ScenarioConfig, ablation: bool) -> Result<(TraceWriter, Figure), HarnessError> {
    let (gated, ablated) = run_episode_pair(cfg)?;
    let main = if ablation { &ablated } else { &gated };
    let trace = episode_trace(main);

    let mut fig = Figure::new("Closed-loop saccadic eye control");
    let mut gate = Panel::new("Proprioceptive gain", "time (s)", "gain");
    gate.series.push(Series::line(
        "",
        decimate(&gated.rows.iter().map(|r| (r.time, r.gate_gain)).collect::<Vec<_>>(), 3000),
        plot::BLUE,
    ));
    fig.panel(gate);

    let mut proprio = Panel::new("Proprioception decode", "time (s)", "eye position");
    let pro_points: Vec<(f64, f64)> = gated
        .rows
        .iter()
        .filter_map(|r| r.proprio.map(|p| (r.time, p.mean)))
        .collect();
    proprio.series.push(Series::points("decoded", decimate(&pro_points, 1500), plot::BLUE));
    proprio.series.push(Series::line(
        "eye",
        decimate(&gated.rows.iter().map(|r| (r.time, r.eye)).collect::<Vec<_>>(), 3000),
        plot::GREEN,
    ));
    proprio.y_range = Some((-3.0, 3.0));
    fig.panel(proprio);

    fig.panel(tracking_panel("State decode and tracking", &gated));
    fig.panel(tracking_panel("Proprioception withheld after initialization", &ablated));
    Ok((trace, fig))
}
