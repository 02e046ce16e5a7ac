//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line with its measured numbers.
//!
//! Run with `cargo test -p ppc-harness --test acceptance -- --nocapture`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ppc_core::oculomotor::{EpisodeTrace, TaskConfig};
use ppc_core::popcode::{self, PopulationActivity, PriorSpec, TuningGrid};
use ppc_core::transform::combine_gain;
use ppc_harness::config::{Scenario, ScenarioConfig};
use ppc_harness::scenario::{run_episode_pair, run_kalman_demo, run_scenario};

fn verdict(id: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "[criterion {id}] {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {id} {name} failed: {detail}");
}

/// Criterion 1 — the two-input divisive-normalization law matches its
/// closed form to 1e-12 and the variance-addition form to 1e-9 relative.
#[test]
fn criterion_1_divisive_normalization_law() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(601);
    let width: f64 = 0.5;
    let w2 = width * width;
    let mut max_law_dev = 0.0f64;
    let mut max_var_dev = 0.0f64;
    for _ in 0..100 {
        let g1: f64 = rng.random_range(0.01..1000.0);
        let g2: f64 = rng.random_range(0.01..1000.0);
        let combined = combine_gain(g1, g2).unwrap();
        let closed_form = g1 * g2 / (g1 + g2);
        max_law_dev = max_law_dev.max((combined - closed_form).abs() / closed_form.max(1.0));
        // gain law expressed through variance addition
        let v_sum = w2 / g1 + w2 / g2;
        let gain_from_variance = w2 / v_sum;
        max_var_dev = max_var_dev.max((combined - gain_from_variance).abs() / combined);
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = max_law_dev <= 1e-12 && max_var_dev <= 1e-9 && elapsed < 1.0;
    verdict(
        1,
        "divisive-normalization law",
        pass,
        &format!("max law dev {max_law_dev:.2e}, max variance-form dev {max_var_dev:.2e}, {elapsed:.2}s"),
    );
}

/// Criterion 2 — decoder calibration: the spread of decoded means across
/// seeded encodes matches the decoded posterior width within 10%.
#[test]
fn criterion_2_decoder_calibration() {
    let start = Instant::now();
    let grid = TuningGrid::default_grid();
    let mut rng = ChaCha8Rng::seed_from_u64(602);
    let stimulus = 0.3;
    let mut worst: f64 = 0.0;
    let mut detail = String::new();
    for gain in [5.0, 20.0, 80.0] {
        let n = 10_000;
        let mut means = Vec::with_capacity(n);
        let mut std_sum = 0.0;
        for _ in 0..n {
            let act = popcode::encode(&grid, stimulus, gain, 1.0, &mut rng).unwrap();
            let post = popcode::decode(&grid, &act, PriorSpec::Flat).unwrap();
            means.push(post.mean);
            std_sum += post.std();
        }
        let mean = means.iter().sum::<f64>() / n as f64;
        let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let empirical_std = var.sqrt();
        let posterior_std = std_sum / n as f64;
        let dev = (empirical_std / posterior_std - 1.0).abs();
        worst = worst.max(dev);
        detail.push_str(&format!(
            "gain {gain}: empirical {empirical_std:.4} vs posterior {posterior_std:.4}; "
        ));
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst <= 0.10 && elapsed < 30.0;
    verdict(
        2,
        "decoder calibration",
        pass,
        &format!("{detail}worst dev {:.1}%, {elapsed:.1}s", worst * 100.0),
    );
}

/// Criterion 3 — decoding the sum of two activities equals the
/// precision-weighted fusion of their decodes, 1000 random cases at 1e-9.
#[test]
fn criterion_3_posterior_product_additivity() {
    let grid = TuningGrid::default_grid();
    let mut rng = ChaCha8Rng::seed_from_u64(603);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let draw = |rng: &mut ChaCha8Rng| -> PopulationActivity {
            let counts: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(0.0..30.0)).collect();
            PopulationActivity::new(counts, 0.0, 1.0).unwrap()
        };
        let a = draw(&mut rng);
        let b = draw(&mut rng);
        let merged = popcode::decode(&grid, &a.merge(&b).unwrap(), PriorSpec::Flat).unwrap();
        let fused = popcode::decode(&grid, &a, PriorSpec::Flat)
            .unwrap()
            .fuse(&popcode::decode(&grid, &b, PriorSpec::Flat).unwrap());
        worst = worst
            .max((merged.mean - fused.mean).abs() / merged.mean.abs().max(1.0))
            .max((merged.variance - fused.variance).abs() / merged.variance);
    }
    let pass = worst <= 1e-9;
    verdict(3, "posterior-product additivity", pass, &format!("worst relative dev {worst:.2e}"));
}

/// Criterion 4 — the population network reproduces the exact filter over 20
/// seeded diffusion episodes with a sweeping observation gain, and its
/// decoded variance rises across every near-zero-gain window.
#[test]
fn criterion_4_kalman_ppc_vs_oracle() {
    let start = Instant::now();
    let mut cfg = ScenarioConfig::default();
    cfg.scenario = Scenario::KalmanDemo;
    let width = cfg.state_grid.tuning_width;
    let mae_limit = 0.3 * width;
    let gain_floor = 1e-3 * cfg.kalman.gain_max;

    let mut worst_mae: f64 = 0.0;
    let mut worst_rmse: f64 = 0.0;
    let mut worst_var_ratio: f64 = 0.0;
    let mut windows_checked = 0usize;
    let mut windows_increasing = 0usize;

    for seed in 0..20 {
        let rows = run_kalman_demo(&cfg, seed).unwrap();
        let mae = rows.iter().map(|r| (r.net.mean - r.oracle.mean).abs()).sum::<f64>()
            / rows.len() as f64;
        worst_mae = worst_mae.max(mae);
        let rmse = (rows.iter().map(|r| (r.net.mean - r.oracle.mean).powi(2)).sum::<f64>()
            / rows.len() as f64)
            .sqrt();
        worst_rmse = worst_rmse.max(rmse);
        for r in &rows {
            worst_var_ratio = worst_var_ratio.max((r.net.variance / r.oracle.variance - 1.0).abs());
        }
        // contiguous low-gain windows of at least 100 ms
        let mut i = 0;
        while i < rows.len() {
            if rows[i].obs_gain <= gain_floor {
                let begin = i;
                while i < rows.len() && rows[i].obs_gain <= gain_floor {
                    i += 1;
                }
                if i - begin >= 100 {
                    windows_checked += 1;
                    if rows[i - 1].net.variance > rows[begin].net.variance {
                        windows_increasing += 1;
                    }
                }
            } else {
                i += 1;
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst_mae < mae_limit
        && worst_rmse < mae_limit
        && worst_var_ratio <= 0.25
        && windows_checked > 0
        && windows_increasing == windows_checked
        && elapsed < 120.0;
    verdict(
        4,
        "Kalman PPC vs exact filter",
        pass,
        &format!(
            "worst MAE {worst_mae:.4} / RMSE {worst_rmse:.4} (limit {mae_limit}), worst variance dev {:.1}%, \
             {windows_increasing}/{windows_checked} low-gain windows increasing, {elapsed:.1}s",
            worst_var_ratio * 100.0
        ),
    );
}

fn tracking_fraction(trace: &EpisodeTrace, task: &TaskConfig) -> f64 {
    let dt = trace.dt;
    let init_rows = trace.init_rows(task);
    let exclusion = (0.150 / dt).round() as usize;
    let rows = &trace.rows[init_rows..];
    let mut excluded_until = 0usize;
    let (mut ok, mut total) = (0usize, 0usize);
    let mut last_target = rows[0].target;
    for (i, r) in rows.iter().enumerate() {
        if r.target != last_target {
            excluded_until = i + exclusion;
            last_target = r.target;
        }
        if i >= excluded_until {
            total += 1;
            if (r.eye - r.target).abs() <= 0.5 {
                ok += 1;
            }
        }
    }
    ok as f64 / total as f64
}

fn final_5s_error(trace: &EpisodeTrace) -> f64 {
    let tail = (5.0 / trace.dt).round() as usize;
    let rows = &trace.rows[trace.rows.len() - tail..];
    rows.iter().map(|r| (r.eye - r.target).abs()).sum::<f64>() / rows.len() as f64
}

/// Criterion 5 — gated 30 s episode at dt = 1 ms keeps the eye within 0.5
/// of the target for more than 80% of post-initialization time, excluding
/// 150 ms after each target jump.
#[test]
fn criterion_5_closed_loop_tracking() {
    let start = Instant::now();
    let cfg = ScenarioConfig::default();
    let (gated, _) = run_episode_pair(&cfg).unwrap();
    let frac = tracking_fraction(&gated, &cfg.task);
    let elapsed = start.elapsed().as_secs_f64();
    let pass = frac > 0.8 && elapsed < 60.0;
    verdict(
        5,
        "closed-loop tracking",
        pass,
        &format!("{:.1}% of post-init time within 0.5 (need > 80%), {elapsed:.1}s", frac * 100.0),
    );
}

/// Criterion 6 — with proprioception gated to the floor after
/// initialization, the decoded variance ends at least 3x its post-init
/// value with an increasing trend, and final-5 s tracking error at least
/// doubles relative to the gated run.
#[test]
fn criterion_6_ablation_divergence() {
    let cfg = ScenarioConfig::default();
    let (gated, ablated) = run_episode_pair(&cfg).unwrap();
    let init_rows = ablated.init_rows(&cfg.task);

    let v_post_init = ablated.rows[init_rows].kalman.variance;
    let v_final = ablated.rows.last().unwrap().kalman.variance;
    let ratio = v_final / v_post_init;

    // trend: variance over coarse epochs anchored right after init
    let sec = (1.0 / ablated.dt).round() as usize;
    let mean_var = |rows: &[ppc_core::oculomotor::TraceRow]| {
        rows.iter().map(|r| r.kalman.variance).sum::<f64>() / rows.len() as f64
    };
    let post = &ablated.rows[init_rows..];
    let early = mean_var(&post[..sec]);
    let mid = mean_var(&post[post.len() / 3..2 * post.len() / 3]);
    let late = mean_var(&ablated.rows[ablated.rows.len() - 5 * sec..]);
    let trend = early < mid && early < late;

    let err_gated = final_5s_error(&gated);
    let err_ablated = final_5s_error(&ablated);
    let err_ratio = err_ablated / err_gated;

    let pass = ratio >= 3.0 && trend && err_ratio >= 2.0;
    verdict(
        6,
        "ablation divergence",
        pass,
        &format!(
            "variance x{ratio:.1} (need >= 3), trend {early:.2e} < {mid:.2e}/{late:.2e}: {trend}, \
             final-5s error {err_ablated:.3} vs gated {err_gated:.3} (x{err_ratio:.2}, need >= 2)"
        ),
    );
}

/// Criterion 7 — gate soundness over a full episode: the gate is at the
/// floor exactly when a nonzero command occurred within the preceding
/// window, and every gate-open proprioceptive sample matches the
/// contemporary eye position to within one step of motion.
#[test]
fn criterion_7_gate_soundness() {
    let cfg = ScenarioConfig::default();
    let (gated, _) = run_episode_pair(&cfg).unwrap();
    let task = &cfg.task;
    let dt = gated.dt;
    let window_steps = (task.gate_window / dt).round() as usize;
    let delay_steps = (task.proprio_delay / dt).round() as usize;

    let mut gate_violations = 0usize;
    let mut staleness_violations = 0usize;
    let mut last_cmd: Option<usize> = None;
    for (k, row) in gated.rows.iter().enumerate() {
        if row.command != 0.0 {
            last_cmd = Some(k);
        }
        let closed = matches!(last_cmd, Some(k0) if k - k0 < window_steps);
        let expected = if closed { task.gate_floor } else { task.gate_ceiling };
        if row.gate_gain != expected {
            gate_violations += 1;
        }
        if row.gate_gain == task.gate_ceiling {
            let delayed = gated.rows[k.saturating_sub(delay_steps)].eye;
            if (delayed - row.eye).abs() > task.max_speed * dt + 1e-9 {
                staleness_violations += 1;
            }
        }
    }
    let pass = gate_violations == 0 && staleness_violations == 0;
    verdict(
        7,
        "gate soundness",
        pass,
        &format!(
            "{} steps checked, {gate_violations} gate violations, {staleness_violations} stale samples admitted",
            gated.rows.len()
        ),
    );
}

/// Criterion 8 — every scenario is byte-identical across two runs with the
/// same seed and configuration.
#[test]
fn criterion_8_determinism() {
    let mut checked = Vec::new();
    for scenario in Scenario::ALL {
        let mut cfg = ScenarioConfig::default();
        cfg.scenario = scenario;
        // shorten the long scenarios; determinism is length-independent
        cfg.kalman.duration = 2.0;
        cfg.task.episode_duration = 6.0;
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let out_a = run_scenario(&cfg, false, dir_a.path()).unwrap();
        let out_b = run_scenario(&cfg, false, dir_b.path()).unwrap();
        let bytes_a = std::fs::read(&out_a.trace_path).unwrap();
        let bytes_b = std::fs::read(&out_b.trace_path).unwrap();
        assert_eq!(
            bytes_a, bytes_b,
            "trace bytes differ for {} with identical seed/config",
            scenario.name()
        );
        let meta_a = std::fs::read(&out_a.meta_path).unwrap();
        let meta_b = std::fs::read(&out_b.meta_path).unwrap();
        assert_eq!(meta_a, meta_b, "meta differs for {}", scenario.name());
        checked.push(scenario.name());
    }
    verdict(
        8,
        "determinism",
        checked.len() == Scenario::ALL.len(),
        &format!("byte-identical traces for {}", checked.join(", ")),
    );
}
