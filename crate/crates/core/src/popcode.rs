//! Poisson population encoding and Gaussian decoding of scalar stimuli.
//!
//! A [`TuningGrid`] fixes a lattice of preferred stimuli with Gaussian
//! tuning curves of common width. Encoding draws independent Poisson counts
//! per neuron; decoding under a flat prior yields a Gaussian posterior with
//!
//! ```text
//! mean     = Σᵢ rᵢ·prefᵢ / Σᵢ rᵢ
//! variance = tuning_width² / Σᵢ rᵢ
//! gain     = Σᵢ rᵢ
//! ```
//!
//! so `variance · gain = tuning_width²` exactly, and adding two activity
//! vectors fuses their posteriors precision-weighted. Those two identities
//! carry most of the load elsewhere in the crate: observation feed-in to the
//! Kalman population is literally count addition.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};

/// Factor applied to a nominal gain wherever a "near zero" gain is needed;
/// an exact zero is not a valid Poisson rate.
pub const GAIN_FLOOR_FACTOR: f64 = 1e-3;

/// A population's preferred-stimulus lattice, tuning width, and rate scale.
///
/// The lattice must be uniform and strictly increasing, and the tuning width
/// must be at least the lattice spacing so that the summed tuning curve is
/// approximately stimulus-independent over the interior of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningGrid {
    preferred: Vec<f64>,
    tuning_width: f64,
    rate_scale: f64,
}

impl TuningGrid {
    /// Relative tolerance for lattice-spacing uniformity.
    pub const SPACING_TOLERANCE: f64 = 1e-12;

    pub fn new(preferred: Vec<f64>, tuning_width: f64, rate_scale: f64) -> Result<Self> {
        if preferred.len() < 2 {
            return Err(Error::invalid("tuning grid needs at least 2 neurons"));
        }
        if preferred.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("preferred stimuli must be finite"));
        }
        if !(tuning_width > 0.0) || !tuning_width.is_finite() {
            return Err(Error::invalid(format!(
                "tuning_width must be finite and > 0, got {tuning_width}"
            )));
        }
        if !(rate_scale >= 0.0) || !rate_scale.is_finite() {
            return Err(Error::invalid(format!(
                "rate_scale must be finite and >= 0, got {rate_scale}"
            )));
        }
        let spacing = preferred[1] - preferred[0];
        if !(spacing > 0.0) {
            return Err(Error::invalid("preferred stimuli must be strictly increasing"));
        }
        for w in preferred.windows(2) {
            let step = w[1] - w[0];
            if !(step > 0.0) {
                return Err(Error::invalid("preferred stimuli must be strictly increasing"));
            }
            if ((step - spacing) / spacing).abs() > Self::SPACING_TOLERANCE {
                return Err(Error::invalid(format!(
                    "lattice spacing is not uniform: {step} vs {spacing}"
                )));
            }
        }
        if tuning_width < spacing * (1.0 - Self::SPACING_TOLERANCE) {
            return Err(Error::invalid(format!(
                "tuning_width {tuning_width} must be >= lattice spacing {spacing}"
            )));
        }
        Ok(Self { preferred, tuning_width, rate_scale })
    }

    /// Uniform lattice of `n` neurons spanning `[lo, hi]` inclusive.
    pub fn uniform(n: usize, lo: f64, hi: f64, tuning_width: f64, rate_scale: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("tuning grid needs at least 2 neurons"));
        }
        if !(hi > lo) {
            return Err(Error::invalid(format!("grid range [{lo}, {hi}] is empty")));
        }
        let step = (hi - lo) / (n - 1) as f64;
        let preferred = (0..n).map(|i| lo + step * i as f64).collect();
        Self::new(preferred, tuning_width, rate_scale)
    }

    /// Default grid used by the demos and the eye-control task: 50 neurons
    /// spanning [-4, 4], tuning width 0.5, peak expected rate 50 spikes/s at
    /// unit gain.
    pub fn default_grid() -> Self {
        Self::uniform(50, -4.0, 4.0, 0.5, 50.0).expect("default grid is valid")
    }

    pub fn len(&self) -> usize {
        self.preferred.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn preferred(&self) -> &[f64] {
        &self.preferred
    }

    pub fn tuning_width(&self) -> f64 {
        self.tuning_width
    }

    pub fn rate_scale(&self) -> f64 {
        self.rate_scale
    }

    pub fn spacing(&self) -> f64 {
        self.preferred[1] - self.preferred[0]
    }

    pub fn min(&self) -> f64 {
        self.preferred[0]
    }

    pub fn max(&self) -> f64 {
        *self.preferred.last().unwrap()
    }

    /// Unit-amplitude Gaussian tuning profile evaluated at stimulus `s`:
    /// `exp(-(s - prefᵢ)² / (2·tuning_width²))` per neuron.
    pub fn unit_profile(&self, s: f64) -> Vec<f64> {
        let inv = 1.0 / (2.0 * self.tuning_width * self.tuning_width);
        self.preferred
            .iter()
            .map(|&p| {
                let d = s - p;
                (-d * d * inv).exp()
            })
            .collect()
    }

    /// Activity with the expected Gaussian profile at `s`, scaled so the
    /// counts sum exactly to `total`. Decodes (flat prior) to a posterior
    /// with mean ≈ `s` and gain exactly `total`.
    pub fn profile_activity(&self, s: f64, total: f64, time: f64, window: f64) -> Result<PopulationActivity> {
        if !(total >= 0.0) || !total.is_finite() {
            return Err(Error::invalid(format!("profile total must be finite and >= 0, got {total}")));
        }
        let mut counts = self.unit_profile(s);
        let sum: f64 = counts.iter().sum();
        if sum > 0.0 {
            let scale = total / sum;
            for c in &mut counts {
                *c *= scale;
            }
        }
        PopulationActivity::new(counts, time, window)
    }

    /// True when `other` shares this grid's lattice and tuning width
    /// (rate scales may differ).
    pub fn same_lattice(&self, other: &TuningGrid) -> bool {
        if self.len() != other.len() {
            return false;
        }
        let wtol = self.tuning_width * 1e-9;
        if (self.tuning_width - other.tuning_width).abs() > wtol {
            return false;
        }
        let ptol = self.spacing() * 1e-9;
        self.preferred
            .iter()
            .zip(other.preferred.iter())
            .all(|(a, b)| (a - b).abs() <= ptol)
    }
}

/// Per-neuron activity: spike counts (or rate·window) with a timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationActivity {
    counts: Vec<f64>,
    time: f64,
    window: f64,
}

impl PopulationActivity {
    pub fn new(counts: Vec<f64>, time: f64, window: f64) -> Result<Self> {
        if !(window > 0.0) || !window.is_finite() {
            return Err(Error::invalid(format!("window must be finite and > 0, got {window}")));
        }
        if !(time >= 0.0) || !time.is_finite() {
            return Err(Error::invalid(format!("time must be finite and >= 0, got {time}")));
        }
        if counts.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::invalid("counts must be finite and >= 0"));
        }
        Ok(Self { counts, time, window })
    }

    pub fn zeros(n: usize, time: f64, window: f64) -> Result<Self> {
        Self::new(vec![0.0; n], time, window)
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Total activity Σᵢ rᵢ — the gain of the encoding.
    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    pub fn at_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    /// Element-wise sum of two activities on the same grid.
    pub fn merge(&self, other: &PopulationActivity) -> Result<PopulationActivity> {
        if self.len() != other.len() {
            return Err(Error::invalid(format!(
                "activity length mismatch: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        let counts = self
            .counts
            .iter()
            .zip(other.counts.iter())
            .map(|(a, b)| a + b)
            .collect();
        PopulationActivity::new(counts, self.time.max(other.time), self.window)
    }
}

/// Decoded Gaussian posterior: mean, variance, and the total gain of the
/// encoding it was decoded from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPosterior {
    pub mean: f64,
    pub variance: f64,
    pub gain: f64,
}

impl GaussianPosterior {
    pub fn new(mean: f64, variance: f64, gain: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::invalid(format!("posterior mean must be finite, got {mean}")));
        }
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(Error::invalid(format!(
                "posterior variance must be finite and > 0, got {variance}"
            )));
        }
        if !(gain >= 0.0) || !gain.is_finite() {
            return Err(Error::invalid(format!("posterior gain must be finite and >= 0, got {gain}")));
        }
        Ok(Self { mean, variance, gain })
    }

    pub fn std(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn precision(&self) -> f64 {
        1.0 / self.variance
    }

    /// The maximum-a-posteriori point estimate; the mean, for a Gaussian.
    pub fn map_estimate(&self) -> f64 {
        self.mean
    }

    /// Precision-weighted fusion of two Gaussians. Precisions add; means
    /// combine precision-weighted; gains (total activities) add.
    pub fn fuse(&self, other: &GaussianPosterior) -> GaussianPosterior {
        let la = 1.0 / self.variance;
        let lb = 1.0 / other.variance;
        let precision = la + lb;
        GaussianPosterior {
            mean: (la * self.mean + lb * other.mean) / precision,
            variance: 1.0 / precision,
            gain: self.gain + other.gain,
        }
    }
}

/// Prior over the stimulus used when decoding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorSpec {
    /// Flat (improper) prior; the default everywhere.
    Flat,
    /// Gaussian prior fused precision-weighted with the activity decode.
    Gaussian { mean: f64, variance: f64 },
}

impl PriorSpec {
    fn validate(&self) -> Result<()> {
        match self {
            PriorSpec::Flat => Ok(()),
            PriorSpec::Gaussian { mean, variance } => {
                if !mean.is_finite() || !(*variance > 0.0) || !variance.is_finite() {
                    return Err(Error::invalid(format!(
                        "gaussian prior must have finite mean and variance > 0, got N({mean}, {variance})"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Expected firing rates (spikes/s per neuron) for stimulus `s` at `gain`:
/// `rateᵢ = gain · rate_scale · exp(-(s - prefᵢ)²/(2·tuning_width²))`.
pub fn tuning_rate(grid: &TuningGrid, s: f64, gain: f64) -> Result<Vec<f64>> {
    if !s.is_finite() {
        return Err(Error::invalid(format!("stimulus must be finite, got {s}")));
    }
    if !gain.is_finite() || gain < 0.0 {
        return Err(Error::invalid(format!("gain must be finite and >= 0, got {gain}")));
    }
    let amplitude = gain * grid.rate_scale();
    Ok(grid.unit_profile(s).into_iter().map(|p| amplitude * p).collect())
}

/// Draw one Poisson count with the given mean.
pub(crate) fn sample_poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    Poisson::new(lambda).expect("positive finite lambda").sample(rng)
}

/// Sample a population response to stimulus `s`: independent Poisson counts
/// with means `tuning_rate(...)ᵢ · window`. Deterministic for a fixed seed.
pub fn encode<R: Rng + ?Sized>(
    grid: &TuningGrid,
    s: f64,
    gain: f64,
    window: f64,
    rng: &mut R,
) -> Result<PopulationActivity> {
    if !(window > 0.0) || !window.is_finite() {
        return Err(Error::invalid(format!("window must be finite and > 0, got {window}")));
    }
    let rates = tuning_rate(grid, s, gain)?;
    let counts = rates.into_iter().map(|r| sample_poisson(r * window, rng)).collect();
    PopulationActivity::new(counts, 0.0, window)
}

/// Decode a Gaussian posterior from population activity.
///
/// Errors with [`Error::DegenerateActivity`] when the total activity is
/// zero; there is no information to decode and the flat-prior formulas
/// divide by the gain.
pub fn decode(
    grid: &TuningGrid,
    activity: &PopulationActivity,
    prior: PriorSpec,
) -> Result<GaussianPosterior> {
    prior.validate()?;
    if activity.len() != grid.len() {
        return Err(Error::invalid(format!(
            "activity length {} does not match grid length {}",
            activity.len(),
            grid.len()
        )));
    }
    let gain = activity.total();
    if gain <= 0.0 {
        return Err(Error::DegenerateActivity);
    }
    let weighted: f64 = activity
        .counts()
        .iter()
        .zip(grid.preferred().iter())
        .map(|(c, p)| c * p)
        .sum();
    let width = grid.tuning_width();
    let flat = GaussianPosterior {
        mean: weighted / gain,
        variance: width * width / gain,
        gain,
    };
    let posterior = match prior {
        PriorSpec::Flat => flat,
        PriorSpec::Gaussian { mean, variance } => {
            let prior_post = GaussianPosterior { mean, variance, gain: 0.0 };
            let mut fused = flat.fuse(&prior_post);
            // The gain reports observed activity only; the prior adds none.
            fused.gain = gain;
            fused
        }
    };
    Ok(posterior)
}
