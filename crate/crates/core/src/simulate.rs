//! Synthetic quality streams and response maps with a controlled failure.
//!
//! Values are uniform on `[mean − spread, mean + spread]` and clipped to
//! `[0, 1]`. Uniform noise keeps the mean exact whenever the support already
//! fits inside the unit interval, which is what the null-boundary checks rely
//! on.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::response::ResponseMap;
use crate::stream::MetricSample;

/// Gaussian bump width (in cells) before and after the failure.
pub const SHARP_BUMP_WIDTH: f64 = 1.0;
pub const BROAD_BUMP_WIDTH: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub length: usize,
    pub null_mean: f64,
    pub null_spread: f64,
    pub failure_at: Option<usize>,
    pub post_failure_mean: f64,
    /// Length of the linear ramp between the two means; 0 switches abruptly.
    pub transition_frames: usize,
    pub seed: u64,
}

impl StreamSpec {
    /// Stationary stream with no failure.
    pub fn null(length: usize, mean: f64, spread: f64, seed: u64) -> Self {
        Self {
            length,
            null_mean: mean,
            null_spread: spread,
            failure_at: None,
            post_failure_mean: mean,
            transition_frames: 0,
            seed,
        }
    }

    pub fn with_failure(mut self, at: usize, post_mean: f64, ramp: usize) -> Self {
        self.failure_at = Some(at);
        self.post_failure_mean = post_mean;
        self.transition_frames = ramp;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("null_mean", self.null_mean),
            ("post_failure_mean", self.post_failure_mean),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(format!("{name} must be in [0, 1], got {v}")));
            }
        }
        if !(self.null_spread >= 0.0 && self.null_spread.is_finite()) {
            return Err(Error::config(format!(
                "null_spread must be non-negative, got {}",
                self.null_spread
            )));
        }
        if let Some(f) = self.failure_at {
            if f == 0 || f > self.length {
                return Err(Error::config(format!(
                    "failure_at {f} outside [1, {}]",
                    self.length
                )));
            }
        }
        Ok(())
    }

    /// Fraction of the way from the null regime to the failed regime at
    /// frame `t`.
    pub fn failure_fraction(&self, t: usize) -> f64 {
        match self.failure_at {
            Some(f) if t >= f => {
                if self.transition_frames == 0 {
                    1.0
                } else {
                    ((t - f + 1) as f64 / self.transition_frames as f64).min(1.0)
                }
            }
            _ => 0.0,
        }
    }

    pub fn mean_at(&self, t: usize) -> f64 {
        let frac = self.failure_fraction(t);
        (1.0 - frac) * self.null_mean + frac * self.post_failure_mean
    }
}

pub fn generate_stream(spec: &StreamSpec) -> Result<Vec<MetricSample>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let s = spec.null_spread;
    Ok((1..=spec.length)
        .map(|t| {
            let mean = spec.mean_at(t);
            let value = if s > 0.0 {
                mean + rng.random_range(-s..=s)
            } else {
                mean
            };
            MetricSample {
                t,
                value: value.clamp(0.0, 1.0),
            }
        })
        .collect())
}

/// One Gaussian bump per frame, centred on the grid, with peak amplitude
/// following [`generate_stream`] and a width that broadens with the failure.
pub fn generate_response_maps(
    spec: &StreamSpec,
    rows: usize,
    cols: usize,
) -> Result<Vec<ResponseMap>> {
    if rows == 0 || cols == 0 || rows * cols < 2 {
        return Err(Error::InvalidMap(format!(
            "shape {rows}x{cols} must have at least two cells"
        )));
    }
    let amplitudes = generate_stream(spec)?;
    let (r0, c0) = ((rows / 2) as f64, (cols / 2) as f64);
    amplitudes
        .iter()
        .map(|a| {
            let frac = spec.failure_fraction(a.t);
            let width = SHARP_BUMP_WIDTH + frac * (BROAD_BUMP_WIDTH - SHARP_BUMP_WIDTH);
            let denom = 2.0 * width * width;
            let mut values = Vec::with_capacity(rows * cols);
            for r in 0..rows {
                for c in 0..cols {
                    let d2 = (r as f64 - r0).powi(2) + (c as f64 - c0).powi(2);
                    values.push((a.value * (-d2 / denom).exp()).clamp(0.0, 1.0));
                }
            }
            ResponseMap::new(rows, cols, values)
        })
        .collect()
}
