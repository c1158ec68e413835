//! Unsupervised confidence proxies derived from a tracker's response map.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major correlation grid with every cell in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseMap {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl ResponseMap {
    /// Strict constructor: values must already lie in `[0, 1]`.
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        Self::check_shape(rows, cols, &values)?;
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::InvalidMap(format!(
                "cell {i} has value {v} outside [0, 1]"
            )));
        }
        Ok(Self { rows, cols, values })
    }

    /// Min-max rescales raw responses into `[0, 1]`. A constant map becomes
    /// all zeros.
    pub fn normalized(rows: usize, cols: usize, mut values: Vec<f64>) -> Result<Self> {
        Self::check_shape(rows, cols, &values)?;
        let (lo, hi) = min_max(&values);
        let span = hi - lo;
        for v in &mut values {
            *v = if span > 0.0 { (*v - lo) / span } else { 0.0 };
        }
        Ok(Self { rows, cols, values })
    }

    fn check_shape(rows: usize, cols: usize, values: &[f64]) -> Result<()> {
        if rows == 0 || cols == 0 || rows * cols < 2 {
            return Err(Error::InvalidMap(format!(
                "shape {rows}x{cols} must have at least two cells"
            )));
        }
        if values.len() != rows * cols {
            return Err(Error::InvalidMap(format!(
                "expected {} values for {rows}x{cols}, got {}",
                rows * cols,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMap(format!("cell {i} is not finite")));
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

/// Peak correlation: the largest cell of the map.
pub fn peak_correlation(map: &ResponseMap) -> f64 {
    min_max(&map.values).1
}

/// Average peak-to-correlation energy.
///
/// `|max − min|² / mean((C − min)²)`. A constant map has no peak at all and
/// is assigned 0.
pub fn apce(map: &ResponseMap) -> f64 {
    let (lo, hi) = min_max(&map.values);
    let peak = hi - lo;
    if peak <= 0.0 {
        return 0.0;
    }
    let energy =
        map.values.iter().map(|v| (v - lo) * (v - lo)).sum::<f64>() / map.values.len() as f64;
    peak * peak / energy
}

/// Sliding mean over the last `window_size` raw scores, used to turn PC and
/// APCE into relative gains.
#[derive(Debug, Clone)]
pub struct WindowedNormalizer {
    window_size: usize,
    buffer: VecDeque<f64>,
}

impl WindowedNormalizer {
    pub fn new(window_size: usize) -> Result<Self> {
        if window_size == 0 {
            return Err(Error::config("normalizer window must be at least 1"));
        }
        Ok(Self {
            window_size,
            buffer: VecDeque::with_capacity(window_size),
        })
    }

    pub fn window_size(&self) -> usize {
        self.window_size
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn push(&mut self, value: f64) {
        if self.buffer.len() == self.window_size {
            self.buffer.pop_front();
        }
        self.buffer.push_back(value);
    }

    /// Mean of the buffered scores; 0 when nothing has been pushed.
    pub fn mean(&self) -> f64 {
        if self.buffer.is_empty() {
            return 0.0;
        }
        self.buffer.iter().sum::<f64>() / self.buffer.len() as f64
    }

    /// Pushes `value` and returns its clipped gain over the updated window.
    pub fn push_gain(&mut self, value: f64) -> f64 {
        self.push(value);
        relative_gain(value, self)
    }
}

fn relative_gain(current: f64, normalizer: &WindowedNormalizer) -> f64 {
    // At or above the window maximum the ratio is ≥ 1; skip the rounding in
    // the mean.
    if normalizer.buffer.iter().all(|&v| current >= v) {
        return 1.0;
    }
    let mean = normalizer.mean();
    if mean <= 0.0 {
        // Only reachable with an all-zero window, so `current` is 0 as well.
        return 1.0;
    }
    (current / mean).min(1.0)
}

/// Certainty gain `min(1, PC_t / mean(PC window))`. `pc_now` must already
/// have been pushed into `normalizer`.
pub fn certainty_gain(pc_now: f64, normalizer: &WindowedNormalizer) -> f64 {
    relative_gain(pc_now, normalizer)
}

/// Sharpness gain `min(1, APCE_t / mean(APCE window))`. `apce_now` must
/// already have been pushed into `normalizer`.
pub fn sharpness_gain(apce_now: f64, normalizer: &WindowedNormalizer) -> f64 {
    relative_gain(apce_now, normalizer)
}
