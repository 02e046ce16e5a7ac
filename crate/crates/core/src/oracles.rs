//! Independent ground-truth estimators: an exact scalar Kalman filter and a
//! grid-based Bayes filter.
//!
//! Both are kept deliberately plain — straight-line recursions with no shared
//! machinery — so they can serve as oracles for the population network.

use crate::error::{Error, Result};
use crate::kalman::KalmanModel;

/// Gaussian belief over the scalar state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanBelief {
    pub mean: f64,
    pub variance: f64,
}

impl KalmanBelief {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() || !(variance > 0.0) || !variance.is_finite() {
            return Err(Error::invalid(format!(
                "belief must have finite mean and variance > 0, got N({mean}, {variance})"
            )));
        }
        Ok(Self { mean, variance })
    }
}

/// First-order prediction through the linear model:
/// `mean += dt·(a·mean + b·u)`, `variance += dt·(2a·variance + q)`.
pub fn kalman_predict(belief: KalmanBelief, model: &KalmanModel, u: f64, dt: f64) -> KalmanBelief {
    KalmanBelief {
        mean: belief.mean + dt * (model.a * belief.mean + model.b * u),
        variance: belief.variance + dt * (2.0 * model.a * belief.variance + model.q),
    }
}

/// Precision-weighted fusion of the belief with an observation `N(z_mean,
/// z_variance)`. Symmetric in its two Gaussian arguments.
pub fn kalman_update(belief: KalmanBelief, z_mean: f64, z_variance: f64) -> KalmanBelief {
    let la = 1.0 / belief.variance;
    let lb = 1.0 / z_variance;
    KalmanBelief {
        mean: (la * belief.mean + lb * z_mean) / (la + lb),
        variance: 1.0 / (la + lb),
    }
}

/// Discrete belief on a uniform stimulus grid; weights sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct GridBelief {
    support: Vec<f64>,
    weights: Vec<f64>,
}

impl GridBelief {
    /// Normalization tolerance on construction.
    pub const NORM_TOLERANCE: f64 = 1e-12;

    pub fn new(support: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if support.len() != weights.len() || support.len() < 2 {
            return Err(Error::invalid("support and weights must match and hold >= 2 points"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("weights must be finite and >= 0"));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > Self::NORM_TOLERANCE {
            return Err(Error::invalid(format!("weights must sum to 1, got {sum}")));
        }
        Ok(Self { support, weights })
    }

    /// Uniform grid of `n` points on `[lo, hi]` carrying a normalized
    /// Gaussian; the default grid is 401 points over [-6, 6].
    pub fn gaussian(n: usize, lo: f64, hi: f64, mean: f64, variance: f64) -> Result<Self> {
        if n < 2 || !(hi > lo) || !(variance > 0.0) {
            return Err(Error::invalid("bad gaussian grid parameters"));
        }
        let step = (hi - lo) / (n - 1) as f64;
        let support: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
        let mut weights: Vec<f64> =
            support.iter().map(|&x| (-(x - mean).powi(2) / (2.0 * variance)).exp()).collect();
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::DegenerateBelief);
        }
        for w in &mut weights {
            *w /= sum;
        }
        Self::new(support, weights)
    }

    pub fn default_grid(mean: f64, variance: f64) -> Result<Self> {
        Self::gaussian(401, -6.0, 6.0, mean, variance)
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn spacing(&self) -> f64 {
        self.support[1] - self.support[0]
    }

    pub fn mean(&self) -> f64 {
        self.support.iter().zip(&self.weights).map(|(x, w)| x * w).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.support.iter().zip(&self.weights).map(|(x, w)| (x - m).powi(2) * w).sum()
    }
}

/// Row-stochastic transition kernel between grid points: `probs[i][j]` is the
/// probability of moving from point `i` to point `j`.
#[derive(Debug, Clone)]
pub struct TransitionKernel {
    probs: Vec<Vec<f64>>,
}

impl TransitionKernel {
    /// Row-normalization tolerance.
    pub const ROW_TOLERANCE: f64 = 1e-9;

    pub fn new(probs: Vec<Vec<f64>>) -> Result<Self> {
        let n = probs.len();
        for row in &probs {
            if row.len() != n {
                return Err(Error::invalid("kernel must be square"));
            }
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::invalid("kernel entries must be finite and >= 0"));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > Self::ROW_TOLERANCE {
                return Err(Error::invalid(format!("kernel rows must be normalized, got {sum}")));
            }
        }
        Ok(Self { probs })
    }

    pub fn identity(n: usize) -> Self {
        let probs = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self { probs }
    }

    /// Gaussian drift-and-diffuse kernel on `support`: from point `x`, mass
    /// moves to `x + drift` and spreads with the given variance. Rows are
    /// renormalized, so boundary mass is reflected into the grid rather than
    /// lost.
    pub fn gaussian(support: &[f64], drift: f64, variance: f64) -> Result<Self> {
        if !(variance > 0.0) || !variance.is_finite() || !drift.is_finite() {
            return Err(Error::invalid("kernel drift must be finite and variance > 0"));
        }
        let probs = support
            .iter()
            .map(|&from| {
                let center = from + drift;
                let mut row: Vec<f64> = support
                    .iter()
                    .map(|&to| (-(to - center).powi(2) / (2.0 * variance)).exp())
                    .collect();
                let sum: f64 = row.iter().sum();
                for p in &mut row {
                    *p /= sum;
                }
                row
            })
            .collect();
        Ok(Self { probs })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.probs[i]
    }
}

/// One recursive-Bayes step on the grid: push the belief through the
/// transition kernel, multiply by the pointwise likelihood, renormalize.
pub fn grid_filter_step(
    belief: &GridBelief,
    kernel: &TransitionKernel,
    likelihood: impl Fn(f64) -> f64,
) -> Result<GridBelief> {
    let n = belief.support.len();
    if kernel.len() != n {
        return Err(Error::invalid(format!(
            "kernel size {} does not match belief size {n}",
            kernel.len()
        )));
    }
    let mut predicted = vec![0.0; n];
    for (i, w) in belief.weights.iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        for (j, p) in kernel.row(i).iter().enumerate() {
            predicted[j] += w * p;
        }
    }
    let mut posterior: Vec<f64> = predicted
        .iter()
        .zip(belief.support.iter())
        .map(|(w, &x)| {
            let l = likelihood(x);
            if l.is_finite() && l >= 0.0 {
                w * l
            } else {
                0.0
            }
        })
        .collect();
    let mass: f64 = posterior.iter().sum();
    if !(mass > 0.0) {
        return Err(Error::DegenerateBelief);
    }
    for w in &mut posterior {
        *w /= mass;
    }
    GridBelief::new(belief.support.clone(), posterior)
}
