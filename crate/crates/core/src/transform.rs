//! Bayes-optimal linear coordinate transformation of two population codes.
//!
//! Given encodings of two stimuli, the circuit produces an encoding of their
//! sum whose decoded posterior is the convolution of the input posteriors:
//! mean `μ_a + μ_b`, variance `σ_a² + σ_b²`. Because decoded variance is
//! `tuning_width²/gain`, the output gain is forced to the two-input divisive
//! normalization law `g₁·g₂/(g₁+g₂)`, so no information beyond the circuit's
//! own sampling noise is lost.

use rand::Rng;

use crate::error::{Error, Result};
use crate::popcode::{self, PopulationActivity, PriorSpec, TuningGrid};

/// Two-input divisive normalization: `g₁·g₂/(g₁+g₂)`.
///
/// The result never exceeds the weaker input. Both gains zero carry no
/// information at all and error out as degenerate.
pub fn combine_gain(g1: f64, g2: f64) -> Result<f64> {
    if !g1.is_finite() || !g2.is_finite() || g1 < 0.0 || g2 < 0.0 {
        return Err(Error::invalid(format!("gains must be finite and >= 0, got ({g1}, {g2})")));
    }
    if g1 == 0.0 && g2 == 0.0 {
        return Err(Error::DegenerateActivity);
    }
    Ok(g1 * g2 / (g1 + g2))
}

/// Whether the output encoding is sampled or emitted as expected rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformMode {
    /// Emit the expected rate profile (default for tests).
    Deterministic,
    /// Draw the output as a Poisson encode at the convolved mean and gain.
    Stochastic,
}

/// A transform circuit wiring two input populations to an output population.
///
/// The output grid must span the Minkowski sum of the input ranges, and all
/// three grids must share one tuning width; the gain law and the
/// variance-addition law coincide exactly only on a common width.
#[derive(Debug, Clone)]
pub struct TransformCircuit {
    grid_a: TuningGrid,
    grid_b: TuningGrid,
    grid_out: TuningGrid,
}

impl TransformCircuit {
    pub fn new(grid_a: TuningGrid, grid_b: TuningGrid, grid_out: TuningGrid) -> Result<Self> {
        let lo = grid_a.min() + grid_b.min();
        let hi = grid_a.max() + grid_b.max();
        let tol = grid_out.spacing() * 1e-9;
        if grid_out.min() > lo + tol || grid_out.max() < hi - tol {
            return Err(Error::invalid(format!(
                "output grid [{}, {}] does not span the summed input range [{lo}, {hi}]",
                grid_out.min(),
                grid_out.max()
            )));
        }
        let w = grid_out.tuning_width();
        for g in [&grid_a, &grid_b] {
            if (g.tuning_width() - w).abs() > w * 1e-9 {
                return Err(Error::invalid(format!(
                    "all circuit grids must share one tuning width, got {} vs {w}",
                    g.tuning_width()
                )));
            }
        }
        Ok(Self { grid_a, grid_b, grid_out })
    }

    pub fn grid_a(&self) -> &TuningGrid {
        &self.grid_a
    }

    pub fn grid_b(&self) -> &TuningGrid {
        &self.grid_b
    }

    pub fn grid_out(&self) -> &TuningGrid {
        &self.grid_out
    }

    /// Compute the output encoding of `x_a + x_b` from two input encodings.
    ///
    /// Decodes both inputs (flat prior), convolves the posteriors, and emits
    /// an output activity on the output grid whose decode has mean
    /// `μ_a + μ_b`, variance `σ_a² + σ_b²`, and gain `combine_gain(g_a, g_b)`
    /// (exactly in deterministic mode, in expectation in stochastic mode).
    pub fn apply<R: Rng + ?Sized>(
        &self,
        act_a: &PopulationActivity,
        act_b: &PopulationActivity,
        mode: TransformMode,
        rng: &mut R,
    ) -> Result<PopulationActivity> {
        let post_a = popcode::decode(&self.grid_a, act_a, PriorSpec::Flat)?;
        let post_b = popcode::decode(&self.grid_b, act_b, PriorSpec::Flat)?;
        let mean = post_a.mean + post_b.mean;
        let gain = combine_gain(post_a.gain, post_b.gain)?;
        let time = act_a.time().max(act_b.time());
        let window = act_a.window();
        let expected = self.grid_out.profile_activity(mean, gain, time, window)?;
        match mode {
            TransformMode::Deterministic => Ok(expected),
            TransformMode::Stochastic => {
                let counts = expected
                    .counts()
                    .iter()
                    .map(|&c| popcode::sample_poisson(c, rng))
                    .collect();
                PopulationActivity::new(counts, time, window)
            }
        }
    }
}
