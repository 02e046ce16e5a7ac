//! Recurrent Kalman population network.
//!
//! The network holds a population activity vector x̃ whose flat-prior decode
//! is the running state posterior. One Euler step applies
//!
//! ```text
//! x̃ ← x̃ + dt·(W·x̃ + u·U·x̃ + M·z̃ − x̃∘(Q·x̃))
//! ```
//!
//! followed by clamping at zero. The weight matrices are constructed so that
//! the decoded statistics follow the Kalman recursion for the continuous
//! model `dx = (a·x + b·u)dt + η`, exactly to first order in `dt`:
//!
//! - `W` carries the model rate: a smoothed transport kernel moves activity
//!   along the preferred-stimulus axis at velocity `a·p`, and a uniform
//!   leak scales total activity so decoded variance grows by `2a·v·dt`.
//! - `U` is the same transport kernel at unit velocity, scaled by the
//!   scalar control `u` at each step (drift `b·u`).
//! - `M` feeds observation counts straight into the state, so one
//!   observation spike adds exactly one spike's worth of decoded precision
//!   (count addition is precision-weighted fusion).
//! - `Q` is a rank-one divisive term: suppression proportional to total
//!   activity decays the gain by `q·G²/tuning_width²`, which is precisely
//!   diffusion-driven variance growth `dv = q·dt`, and bounds the rates.
//!
//! Every column of `W` and `U` is corrected (a constant plus a linear-in-`p`
//! tilt) so the zeroth and first activity moments obey the contract for
//! arbitrary nonnegative activity, not just well-formed bumps.

use rand::Rng;

use crate::error::{Error, Result};
use crate::popcode::{self, GaussianPosterior, PopulationActivity, PriorSpec, TuningGrid};

/// Continuous-time linear-Gaussian model `dx = (a·x + b·u)dt + η`,
/// with `q` the spectral density of the process noise `η`, plus the grid of
/// the observation population producing z̃.
#[derive(Debug, Clone)]
pub struct KalmanModel {
    /// Model rate (1/s); the diffusion parameter in the pure-diffusion case.
    pub a: f64,
    /// Control rate (stimulus units per second per control unit).
    pub b: f64,
    /// Process-noise spectral density (stimulus units²/s).
    pub q: f64,
    obs_grid: TuningGrid,
}

impl KalmanModel {
    pub fn new(a: f64, b: f64, q: f64, obs_grid: TuningGrid) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::invalid(format!("model rates must be finite, got a={a}, b={b}")));
        }
        if !(q >= 0.0) || !q.is_finite() {
            return Err(Error::invalid(format!("process noise q must be finite and >= 0, got {q}")));
        }
        Ok(Self { a, b, q, obs_grid })
    }

    pub fn obs_grid(&self) -> &TuningGrid {
        &self.obs_grid
    }
}

/// Strength of the profile-smoothing diffusion folded into `W`, in lattice
/// cells² per second. Sized so cell-scale ripples decay within tens of
/// milliseconds while the profile widens far slower than activity turnover.
const RAG_DAMPING_CELLS_PER_SEC: f64 = 5.0;

/// Small dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn scaled_identity(n: usize, scale: f64) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = scale;
        }
        m
    }

    pub fn constant(rows: usize, cols: usize, value: f64) -> Self {
        Self { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            out[i] = acc;
        }
        out
    }

    /// xᵀ·M·x.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(mx, xi)| mx * xi).sum()
    }
}

/// Network matrices derived from a model, a state grid, and a step size.
#[derive(Debug, Clone)]
pub struct NetworkWeights {
    /// Model-rate dynamics.
    pub w: Matrix,
    /// Control coupling; scaled by the scalar control at each step.
    pub u: Matrix,
    /// Observation feed-in.
    pub m: Matrix,
    /// Quadratic suppression term x̃·Q·x̃.
    pub q: Matrix,
    n: usize,
    dt: f64,
}

impl NetworkWeights {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
}

/// Whether a step integrates deterministic rates or draws per-step spikes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntegrationMode {
    /// Deterministic rate integration (canonical).
    Rate,
    /// Poisson-spiking integration: each step draws per-neuron spikes at
    /// `rᵢ·dt·ensemble` and carries `spikes/ensemble` instead of the
    /// expected mass, adding zero-mean innovations at the Poisson scale.
    /// `ensemble = 1` is a literal one-neuron-per-unit population;
    /// larger values read each unit as an ensemble of that many neurons,
    /// shrinking the innovation variance accordingly.
    Spiking { ensemble: f64 },
}

impl IntegrationMode {
    /// Literal Poisson spiking, one neuron per population unit.
    pub fn spiking() -> Self {
        IntegrationMode::Spiking { ensemble: 1.0 }
    }
}

/// The evolving encoding x̃(t) plus a clamp diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub rates: PopulationActivity,
    pub time: f64,
    /// Number of entries clamped at zero since the state was created.
    pub clamp_events: u64,
}

impl NetworkState {
    pub fn new(rates: PopulationActivity, time: f64) -> Self {
        Self { rates, time, clamp_events: 0 }
    }

    /// State whose decode is `N(mean, tuning_width²/gain)`.
    pub fn from_prior(grid: &TuningGrid, mean: f64, gain: f64, dt: f64) -> Result<Self> {
        let rates = grid.profile_activity(mean, gain, 0.0, dt)?;
        Ok(Self::new(rates, 0.0))
    }

    pub fn decode(&self, grid: &TuningGrid) -> Result<GaussianPosterior> {
        popcode::decode(grid, &self.rates, PriorSpec::Flat)
    }
}

/// Smoothed unit-velocity transport kernel on the lattice.
///
/// Column `j` holds a derivative-of-Gaussian stencil normalized so its first
/// activity moment about `p_j` is exactly 1; applying it moves decoded mass
/// at unit velocity.
fn transport_kernel(prefs: &[f64], sigma: f64) -> Matrix {
    let n = prefs.len();
    let mut s = Matrix::zeros(n, n);
    let inv = 1.0 / (2.0 * sigma * sigma);
    for j in 0..n {
        let mut first_moment = 0.0;
        let mut col = vec![0.0; n];
        for i in 0..n {
            let d = prefs[i] - prefs[j];
            let g = d * (-d * d * inv).exp();
            col[i] = g;
            first_moment += d * g;
        }
        // first_moment is a sum of d²·exp(...) terms; positive for any j
        let scale = 1.0 / first_moment;
        for i in 0..n {
            s.set(i, j, col[i] * scale);
        }
    }
    s
}

/// Add a constant plus a linear-in-`p` tilt to each column so that
/// `Σᵢ colⱼ = t0(j)` and `Σᵢ pᵢ·colⱼ = t1(j)` hold exactly.
fn correct_column_moments(m: &mut Matrix, prefs: &[f64], t0: impl Fn(usize) -> f64, t1: impl Fn(usize) -> f64) {
    let n = prefs.len();
    let p1: f64 = prefs.iter().sum();
    let p2: f64 = prefs.iter().map(|p| p * p).sum();
    let det = n as f64 * p2 - p1 * p1;
    for j in 0..n {
        let mut s0 = 0.0;
        let mut s1 = 0.0;
        for i in 0..n {
            let v = m.get(i, j);
            s0 += v;
            s1 += prefs[i] * v;
        }
        let r0 = t0(j) - s0;
        let r1 = t1(j) - s1;
        let alpha = (p2 * r0 - p1 * r1) / det;
        let beta = (n as f64 * r1 - p1 * r0) / det;
        for i in 0..n {
            let v = m.get(i, j) + alpha + beta * prefs[i];
            m.set(i, j, v);
        }
    }
}

/// Build the network matrices for one model, state grid, and step size.
///
/// The observation grid must share the state grid's lattice so that count
/// feed-in is exact fusion. The discretization must satisfy `|a|·dt < 0.1`.
pub fn build_weights(model: &KalmanModel, state_grid: &TuningGrid, dt: f64) -> Result<NetworkWeights> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid(format!("dt must be finite and > 0, got {dt}")));
    }
    if model.a.abs() * dt >= 0.1 {
        return Err(Error::invalid(format!(
            "unstable discretization: |a|·dt = {} must be < 0.1",
            model.a.abs() * dt
        )));
    }
    if !model.obs_grid.same_lattice(state_grid) {
        return Err(Error::invalid(
            "observation grid must share the state grid lattice and tuning width",
        ));
    }
    let n = state_grid.len();
    let prefs = state_grid.preferred();
    let width = state_grid.tuning_width();
    let sigma_kernel = state_grid.spacing();
    let transport = transport_kernel(prefs, sigma_kernel);

    // U: unit-velocity transport scaled by the control rate b; the scalar
    // control u multiplies it at each step. Moments: Σcol = 0, Σp·col = b.
    let mut u = Matrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            u.set(i, j, model.b * transport.get(i, j));
        }
    }
    correct_column_moments(&mut u, prefs, |_| 0.0, |_| model.b);

    // W: transport at velocity a·p plus a uniform leak of 2a.
    // Moments: Σcol = -2a, Σp·col = -a·p_j, giving dμ = a·μ·dt and
    // dG = -2a·G·dt (variance growth 2a·v·dt).
    let mut w = Matrix::zeros(n, n);
    for j in 0..n {
        let velocity = model.a * prefs[j];
        for i in 0..n {
            w.set(i, j, velocity * transport.get(i, j));
        }
        let d = w.get(j, j) - 2.0 * model.a;
        w.set(j, j, d);
    }
    // Lattice diffusion damping cell-scale irregularity left behind by spike
    // deposits and innovations, so the transport term does not run the
    // trailing ripples into the zero clamp. Both decoded moments are blind
    // to it: it moves no mass off the grid and no net mass along it.
    let h = state_grid.spacing();
    let smooth = RAG_DAMPING_CELLS_PER_SEC * h * h;
    let nu = smooth / (h * h);
    for j in 0..n {
        let d = w.get(j, j) - 2.0 * nu;
        w.set(j, j, d);
        if j > 0 {
            let v = w.get(j - 1, j) + nu;
            w.set(j - 1, j, v);
        } else {
            let v = w.get(j, j) + nu;
            w.set(j, j, v);
        }
        if j + 1 < n {
            let v = w.get(j + 1, j) + nu;
            w.set(j + 1, j, v);
        } else {
            let v = w.get(j, j) + nu;
            w.set(j, j, v);
        }
    }
    correct_column_moments(&mut w, prefs, |_| -2.0 * model.a, |j| -model.a * prefs[j]);

    // M: dt·M·z̃ must add one count's worth of evidence per observation
    // spike (gain +1, first moment +p_j), which keeps count feed-in exactly
    // precision-weighted fusion. Each spike is deposited as a narrow
    // normalized bump rather than a delta: the decode cannot tell the
    // difference, but the recurrent transport can — delta deposits leave the
    // state too ragged to advect without clamping.
    let sigma_feed = (width / 2.0).max(state_grid.spacing());
    let feed_inv = 1.0 / (2.0 * sigma_feed * sigma_feed);
    let mut m = Matrix::zeros(n, n);
    for j in 0..n {
        let mut col = vec![0.0; n];
        let mut sum = 0.0;
        for i in 0..n {
            let d = prefs[i] - prefs[j];
            let g = (-d * d * feed_inv).exp();
            col[i] = g;
            sum += g;
        }
        for i in 0..n {
            m.set(i, j, col[i] / (sum * dt));
        }
    }
    correct_column_moments(&mut m, prefs, |_| 1.0 / dt, |j| prefs[j] / dt);

    // Q: rank-one divisive suppression; x∘(Q·x) = (q/width²)·G·x decays the
    // gain by q·G²/width² while preserving the decoded mean.
    let q = Matrix::constant(n, n, model.q / (width * width));

    Ok(NetworkWeights { w, u, m, q, n, dt })
}

/// One Euler step of the population ODE, clamped at zero.
pub fn step<R: Rng + ?Sized>(
    state: &NetworkState,
    weights: &NetworkWeights,
    obs: &PopulationActivity,
    u: f64,
    dt: f64,
    mode: IntegrationMode,
    rng: &mut R,
) -> Result<NetworkState> {
    let n = weights.n;
    if state.rates.len() != n || obs.len() != n {
        return Err(Error::invalid(format!(
            "dimension mismatch: state {}, obs {}, weights {n}",
            state.rates.len(),
            obs.len()
        )));
    }
    if !u.is_finite() {
        return Err(Error::invalid(format!("control must be finite, got {u}")));
    }
    if !(dt > 0.0) || ((dt - weights.dt) / weights.dt).abs() > 1e-12 {
        return Err(Error::invalid(format!(
            "step dt {dt} does not match the dt {} the weights were built for",
            weights.dt
        )));
    }

    let rates = state.rates.counts();
    let wr = weights.w.mul_vec(rates);
    let ur = weights.u.mul_vec(rates);
    let mz = weights.m.mul_vec(obs.counts());
    let qr = weights.q.mul_vec(rates);

    if let IntegrationMode::Spiking { ensemble } = mode {
        if !(ensemble > 0.0) || !ensemble.is_finite() {
            return Err(Error::invalid(format!(
                "spiking ensemble must be finite and > 0, got {ensemble}"
            )));
        }
    }

    let mut clamped = state.clamp_events;
    let mut next = Vec::with_capacity(n);
    for i in 0..n {
        let r = rates[i];
        let mut v = r + dt * (wr[i] + u * ur[i] + mz[i] - r * qr[i]);
        if let IntegrationMode::Spiking { ensemble } = mode {
            let expected = r * dt * ensemble;
            v += (popcode::sample_poisson(expected, rng) - expected) / ensemble;
        }
        if v < 0.0 {
            v = 0.0;
            clamped += 1;
        }
        next.push(v);
    }
    let time = state.time + dt;
    Ok(NetworkState {
        rates: PopulationActivity::new(next, time, dt)?,
        time,
        clamp_events: clamped,
    })
}

/// Iterate [`step`] over per-step observation and control streams, decoding
/// the state after every step.
#[allow(clippy::too_many_arguments)]
pub fn run<R: Rng + ?Sized>(
    model: &KalmanModel,
    state_grid: &TuningGrid,
    weights: &NetworkWeights,
    initial: NetworkState,
    obs_stream: &[PopulationActivity],
    control_stream: &[f64],
    duration: f64,
    dt: f64,
    mode: IntegrationMode,
    rng: &mut R,
) -> Result<Vec<(NetworkState, GaussianPosterior)>> {
    let _ = model;
    let steps = (duration / dt).round() as usize;
    if obs_stream.len() < steps || control_stream.len() < steps {
        return Err(Error::invalid(format!(
            "streams must cover {steps} steps, got obs {} and control {}",
            obs_stream.len(),
            control_stream.len()
        )));
    }
    let mut state = initial;
    let mut out = Vec::with_capacity(steps);
    for k in 0..steps {
        state = step(&state, weights, &obs_stream[k], control_stream[k], dt, mode, rng)?;
        let posterior = state.decode(state_grid)?;
        out.push((state.clone(), posterior));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{kalman_predict, kalman_update, KalmanBelief};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn grid() -> TuningGrid {
        TuningGrid::default_grid()
    }

    fn model(a: f64, b: f64, q: f64) -> KalmanModel {
        KalmanModel::new(a, b, q, grid()).unwrap()
    }

    #[test]
    fn build_rejects_unstable_discretization() {
        assert!(build_weights(&model(200.0, 0.0, 0.0), &grid(), 1e-3).is_err());
        assert!(build_weights(&model(50.0, 0.0, 0.0), &grid(), 1e-3).is_ok());
    }

    #[test]
    fn build_rejects_mismatched_obs_grid() {
        let other = TuningGrid::uniform(40, -4.0, 4.0, 0.5, 50.0).unwrap();
        let m = KalmanModel::new(0.0, 0.0, 0.1, other).unwrap();
        assert!(build_weights(&m, &grid(), 1e-3).is_err());
    }

    #[test]
    fn step_rejects_dimension_mismatch() {
        let g = grid();
        let w = build_weights(&model(0.0, 0.0, 0.0), &g, 1e-3).unwrap();
        let state = NetworkState::from_prior(&g, 0.0, 10.0, 1e-3).unwrap();
        let obs = PopulationActivity::zeros(10, 0.0, 1e-3).unwrap();
        assert!(step(&state, &w, &obs, 0.0, 1e-3, IntegrationMode::Rate, &mut rng(0)).is_err());
    }

    #[test]
    fn trivial_model_is_a_fixed_point() {
        let g = grid();
        let w = build_weights(&model(0.0, 0.0, 0.0), &g, 1e-3).unwrap();
        let state = NetworkState::from_prior(&g, 0.7, 25.0, 1e-3).unwrap();
        let obs = PopulationActivity::zeros(g.len(), 0.0, 1e-3).unwrap();
        let mut s = state.clone();
        for _ in 0..100 {
            s = step(&s, &w, &obs, 0.0, 1e-3, IntegrationMode::Rate, &mut rng(0)).unwrap();
        }
        let before = state.decode(&g).unwrap();
        let after = s.decode(&g).unwrap();
        assert!((before.mean - after.mean).abs() < 1e-9);
        assert!((before.variance - after.variance).abs() / before.variance < 1e-9);
    }

    #[test]
    fn diffusion_variance_grows_as_q_times_t() {
        let g = grid();
        let q = 0.05;
        let dt = 1e-3;
        let w = build_weights(&model(0.0, 0.0, q), &g, dt).unwrap();
        let mut s = NetworkState::from_prior(&g, 0.0, 100.0, dt).unwrap();
        let v0 = s.decode(&g).unwrap().variance;
        let obs = PopulationActivity::zeros(g.len(), 0.0, dt).unwrap();
        let mut r = rng(0);
        for _ in 0..10_000 {
            s = step(&s, &w, &obs, 0.0, dt, IntegrationMode::Rate, &mut r).unwrap();
        }
        let v = s.decode(&g).unwrap().variance;
        let expected = v0 + q * 10.0;
        assert!(
            (v - expected).abs() / expected < 0.01,
            "variance {v} vs q·t prediction {expected}"
        );
    }

    #[test]
    fn one_step_matches_oracle_predict_and_update_to_first_order() {
        let g = grid();
        let dt = 1e-3;
        let m = model(5.0, 2.0, 0.04);
        let w = build_weights(&m, &g, dt).unwrap();
        let state = NetworkState::from_prior(&g, 0.4, 30.0, dt).unwrap();
        let obs = g.profile_activity(0.9, 5.0, 0.0, dt).unwrap();
        let u = 1.5;

        let after = step(&state, &w, &obs, u, dt, IntegrationMode::Rate, &mut rng(0)).unwrap();
        let net = after.decode(&g).unwrap();

        let before = state.decode(&g).unwrap();
        let obs_post = popcode::decode(&g, &obs, PriorSpec::Flat).unwrap();
        let predicted = kalman_predict(
            KalmanBelief::new(before.mean, before.variance).unwrap(),
            &m,
            u,
            dt,
        );
        let oracle = kalman_update(predicted, obs_post.mean, obs_post.variance);

        assert!(
            (net.mean - oracle.mean).abs() < 5e-4,
            "mean {} vs oracle {}",
            net.mean,
            oracle.mean
        );
        assert!(
            (net.variance - oracle.variance).abs() / oracle.variance < 5e-4,
            "variance {} vs oracle {}",
            net.variance,
            oracle.variance
        );
    }

    #[test]
    fn per_step_moment_error_shrinks_with_dt() {
        // first-order contract: the per-step gap to the oracle is O(dt²)
        let g = grid();
        let m = model(8.0, 1.0, 0.02);
        let gap = |dt: f64| -> f64 {
            let w = build_weights(&m, &g, dt).unwrap();
            let state = NetworkState::from_prior(&g, -0.6, 40.0, dt).unwrap();
            let obs = PopulationActivity::zeros(g.len(), 0.0, dt).unwrap();
            let after = step(&state, &w, &obs, 2.0, dt, IntegrationMode::Rate, &mut rng(0)).unwrap();
            let net = after.decode(&g).unwrap();
            let before = state.decode(&g).unwrap();
            let oracle = kalman_predict(
                KalmanBelief::new(before.mean, before.variance).unwrap(),
                &m,
                2.0,
                dt,
            );
            (net.mean - oracle.mean).abs() + (net.variance - oracle.variance).abs()
        };
        let coarse = gap(1e-2);
        let fine = gap(1e-3);
        assert!(
            fine < coarse / 5.0,
            "per-step error should shrink superlinearly: {coarse} -> {fine}"
        );
    }

    #[test]
    fn equal_precision_observation_pulls_mean_halfway() {
        let g = grid();
        let dt = 1e-3;
        let m = model(0.0, 0.0, 0.0);
        let w = build_weights(&m, &g, dt).unwrap();
        // state decodes to N(0, width²), observation to N(1, width²)
        let state = NetworkState::from_prior(&g, 0.0, 1.0, dt).unwrap();
        let obs = g.profile_activity(1.0, 1.0, 0.0, dt).unwrap();
        let before = state.decode(&g).unwrap();
        let after = step(&state, &w, &obs, 0.0, dt, IntegrationMode::Rate, &mut rng(0)).unwrap();
        let post = after.decode(&g).unwrap();
        assert!((post.mean - 0.5).abs() < 1e-6);
        assert!(post.variance < before.variance);
        assert!((post.variance - before.variance / 2.0).abs() / post.variance < 1e-6);
    }

    #[test]
    fn outage_grows_variance_and_recovery_shrinks_it() {
        let g = grid();
        let dt = 1e-3;
        let m = model(0.0, 0.0, 0.05);
        let w = build_weights(&m, &g, dt).unwrap();
        let mut r = rng(21);
        let mut s = NetworkState::from_prior(&g, 0.0, 50.0, dt).unwrap();
        let step_obs = |s: &NetworkState, gain: f64, r: &mut ChaCha8Rng| {
            let obs = popcode::encode(&g, 0.0, gain, dt, r).unwrap();
            step(s, &w, &obs, 0.0, dt, IntegrationMode::Rate, r).unwrap()
        };
        // settle with observations
        for _ in 0..2000 {
            s = step_obs(&s, 2.0, &mut r);
        }
        let settled = s.decode(&g).unwrap().variance;
        // 1 s outage: variance strictly increases every step
        let mut v_prev = settled;
        let zero_obs = PopulationActivity::zeros(g.len(), 0.0, dt).unwrap();
        for _ in 0..1000 {
            s = step(&s, &w, &zero_obs, 0.0, dt, IntegrationMode::Rate, &mut r).unwrap();
            let v = s.decode(&g).unwrap().variance;
            assert!(v > v_prev, "variance must grow during the outage");
            v_prev = v;
        }
        // recovery
        for _ in 0..2000 {
            s = step_obs(&s, 2.0, &mut r);
        }
        let recovered = s.decode(&g).unwrap().variance;
        assert!(recovered < v_prev / 2.0);
        assert!((recovered - settled).abs() / settled < 0.5);
    }

    #[test]
    fn rate_spread_narrows_during_outage() {
        // low-confidence periods show a narrower spread of individual rates
        let g = grid();
        let dt = 1e-3;
        let m = model(0.0, 0.0, 0.05);
        let w = build_weights(&m, &g, dt).unwrap();
        let mut r = rng(5);
        let mut s = NetworkState::from_prior(&g, 0.0, 50.0, dt).unwrap();
        for _ in 0..2000 {
            let obs = popcode::encode(&g, 0.0, 2.0, dt, &mut r).unwrap();
            s = step(&s, &w, &obs, 0.0, dt, IntegrationMode::Rate, &mut r).unwrap();
        }
        let spread = |s: &NetworkState| {
            let c = s.rates.counts();
            c.iter().cloned().fold(f64::MIN, f64::max) - c.iter().cloned().fold(f64::MAX, f64::min)
        };
        let spread_confident = spread(&s);
        let zero_obs = PopulationActivity::zeros(g.len(), 0.0, dt).unwrap();
        for _ in 0..2000 {
            s = step(&s, &w, &zero_obs, 0.0, dt, IntegrationMode::Rate, &mut r).unwrap();
        }
        let spread_outage = spread(&s);
        assert!(
            spread_outage < spread_confident,
            "spread during outage {spread_outage} should be below {spread_confident}"
        );
    }

    #[test]
    fn control_drives_decoded_mean_at_commanded_velocity() {
        // Fast commanded moves need a grid that resolves the bump well
        // (several cells per tuning width), or the clamped trailing edge
        // holds the decoded mean back.
        let g = TuningGrid::uniform(100, -4.0, 4.0, 0.5, 50.0).unwrap();
        let dt = 1e-3;
        let m = KalmanModel::new(0.0, 1.0, 0.01, g.clone()).unwrap();
        let w = build_weights(&m, &g, dt).unwrap();
        let mut s = NetworkState::from_prior(&g, -1.0, 80.0, dt).unwrap();
        let obs = PopulationActivity::zeros(g.len(), 0.0, dt).unwrap();
        let mut r = rng(0);
        // u = +20 for 100 ms moves the mean by +2
        for _ in 0..100 {
            s = step(&s, &w, &obs, 20.0, dt, IntegrationMode::Rate, &mut r).unwrap();
        }
        let post = s.decode(&g).unwrap();
        assert!(
            (post.mean - 1.0).abs() < 0.02,
            "mean after commanded move: {}",
            post.mean
        );
    }

    #[test]
    fn steady_state_variance_matches_riccati_fixed_point() {
        let g = grid();
        let dt = 1e-3;
        let q = 0.05;
        let m = model(0.0, 0.0, q);
        let w = build_weights(&m, &g, dt).unwrap();
        let gain = 2.0;
        let mut r = rng(33);
        let mut s = NetworkState::from_prior(&g, 0.0, 10.0, dt).unwrap();
        for _ in 0..6000 {
            let obs = popcode::encode(&g, 0.0, gain, dt, &mut r).unwrap();
            s = step(&s, &w, &obs, 0.0, dt, IntegrationMode::Rate, &mut r).unwrap();
        }
        // fixed point of the oracle recursion under the same expected
        // observation flow
        let width = g.tuning_width();
        let expected_counts: f64 =
            popcode::tuning_rate(&g, 0.0, gain).unwrap().iter().map(|x| x * dt).sum();
        let mut belief = KalmanBelief::new(0.0, 0.01).unwrap();
        for _ in 0..200_000 {
            belief = kalman_predict(belief, &m, 0.0, dt);
            belief = kalman_update(belief, 0.0, width * width / expected_counts);
        }
        let v = s.decode(&g).unwrap().variance;
        assert!(
            (v - belief.variance).abs() / belief.variance < 0.25,
            "steady-state variance {v} vs Riccati fixed point {}",
            belief.variance
        );
    }

    #[test]
    fn halving_observation_gain_never_reduces_steady_variance() {
        let g = grid();
        let dt = 1e-3;
        let m = model(0.0, 0.0, 0.05);
        let w = build_weights(&m, &g, dt).unwrap();
        let mut prev = 0.0;
        for (i, gain) in [8.0, 4.0, 2.0, 1.0, 0.5].into_iter().enumerate() {
            let mut r = rng(100 + i as u64);
            let mut s = NetworkState::from_prior(&g, 0.0, 50.0, dt).unwrap();
            for _ in 0..8000 {
                let obs = popcode::encode(&g, 0.0, gain, dt, &mut r).unwrap();
                s = step(&s, &w, &obs, 0.0, dt, IntegrationMode::Rate, &mut r).unwrap();
            }
            // average the decoded variance over a settled window
            let mut acc = 0.0;
            for _ in 0..2000 {
                let obs = popcode::encode(&g, 0.0, gain, dt, &mut r).unwrap();
                s = step(&s, &w, &obs, 0.0, dt, IntegrationMode::Rate, &mut r).unwrap();
                acc += s.decode(&g).unwrap().variance;
            }
            let v = acc / 2000.0;
            assert!(
                v >= prev,
                "steady variance must not shrink when gain halves: {v} after {prev}"
            );
            prev = v;
        }
    }

    #[test]
    fn zero_noise_high_gain_variance_is_nonincreasing() {
        let g = grid();
        let dt = 1e-3;
        let m = model(0.0, 0.0, 0.0);
        let w = build_weights(&m, &g, dt).unwrap();
        let mut r = rng(2);
        let mut s = NetworkState::from_prior(&g, 0.0, 20.0, dt).unwrap();
        let mut v_prev = s.decode(&g).unwrap().variance;
        for _ in 0..3000 {
            let obs = popcode::encode(&g, 0.0, 5.0, dt, &mut r).unwrap();
            s = step(&s, &w, &obs, 0.0, dt, IntegrationMode::Rate, &mut r).unwrap();
            let v = s.decode(&g).unwrap().variance;
            assert!(v <= v_prev + 1e-15);
            v_prev = v;
        }
    }

    #[test]
    fn quadratic_suppression_is_nonnegative_on_nonnegative_activity() {
        let g = grid();
        let w = build_weights(&model(0.0, 0.0, 0.3), &g, 1e-3).unwrap();
        let mut r = rng(4);
        for _ in 0..100 {
            let x: Vec<f64> = (0..g.len()).map(|_| rand::Rng::random_range(&mut r, 0.0..10.0)).collect();
            assert!(w.q.quadratic_form(&x) >= 0.0);
        }
    }

    #[test]
    fn spiking_mode_is_unbiased_against_rate_mode() {
        let g = grid();
        let dt = 1e-3;
        let m = model(0.0, 0.0, 0.02);
        let w = build_weights(&m, &g, dt).unwrap();
        let initial = NetworkState::from_prior(&g, 0.3, 120.0, dt).unwrap();
        let obs = PopulationActivity::zeros(g.len(), 0.0, dt).unwrap();

        let mut r = rng(0);
        let mut rate_state = initial.clone();
        for _ in 0..500 {
            rate_state = step(&rate_state, &w, &obs, 0.0, dt, IntegrationMode::Rate, &mut r).unwrap();
        }
        let rate_post = rate_state.decode(&g).unwrap();

        let runs = 200;
        let mut mean_acc = 0.0;
        for k in 0..runs {
            let mut rr = rng(1000 + k);
            let mut s = initial.clone();
            for _ in 0..500 {
                s = step(&s, &w, &obs, 0.0, dt, IntegrationMode::spiking(), &mut rr).unwrap();
            }
            mean_acc += s.decode(&g).unwrap().mean;
        }
        let spiking_mean = mean_acc / runs as f64;
        assert!(
            (spiking_mean - rate_post.mean).abs() < 0.05,
            "spiking ensemble mean {spiking_mean} vs rate mode {}",
            rate_post.mean
        );
    }

    #[test]
    fn run_covers_streams_and_decodes_every_step() {
        let g = grid();
        let dt = 1e-3;
        let m = model(0.0, 0.0, 0.05);
        let w = build_weights(&m, &g, dt).unwrap();
        let initial = NetworkState::from_prior(&g, 0.0, 50.0, dt).unwrap();
        let mut r = rng(8);
        let steps = 500;
        let obs: Vec<PopulationActivity> = (0..steps)
            .map(|_| popcode::encode(&g, 0.0, 1.0, dt, &mut r).unwrap())
            .collect();
        let control = vec![0.0; steps];
        let out = run(
            &m, &g, &w, initial.clone(), &obs, &control, 0.5, dt,
            IntegrationMode::Rate, &mut r,
        )
        .unwrap();
        assert_eq!(out.len(), steps);
        assert!(out.iter().all(|(_, p)| p.variance > 0.0));

        let short = run(
            &m, &g, &w, initial, &obs[..100], &control, 0.5, dt,
            IntegrationMode::Rate, &mut r,
        );
        assert!(short.is_err());
    }
}
