//! Frame-ordered preprocessing shared by the monitor and the evaluation
//! oracle: EMA smoothing and bounded recency buffers.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One frame of the quality stream. Frames are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSample {
    pub t: usize,
    pub value: f64,
}

impl MetricSample {
    pub fn new(t: usize, value: f64) -> Result<Self> {
        check_unit(t, value)?;
        Ok(Self { t, value })
    }
}

pub(crate) fn check_unit(frame: usize, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange { frame, value })
    }
}

/// Wraps plain values as samples `1..=n`, validating the range.
pub fn samples_from_values(values: &[f64]) -> Result<Vec<MetricSample>> {
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| MetricSample::new(i + 1, v))
        .collect()
}

/// Checks that frame indices are strictly increasing.
pub fn check_order(samples: &[MetricSample]) -> Result<()> {
    for pair in samples.windows(2) {
        if pair[1].t <= pair[0].t {
            return Err(Error::FrameOrder {
                prev: pair[0].t,
                got: pair[1].t,
            });
        }
    }
    Ok(())
}

/// Exponential moving average. The first input initializes the state.
#[derive(Debug, Clone)]
pub struct EmaSmoother {
    factor: f64,
    state: Option<f64>,
}

impl EmaSmoother {
    pub fn new(factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor <= 1.0) {
            return Err(Error::config(format!(
                "smoothing factor must be in (0, 1], got {factor}"
            )));
        }
        Ok(Self {
            factor,
            state: None,
        })
    }

    pub fn factor(&self) -> f64 {
        self.factor
    }

    pub fn last(&self) -> Option<f64> {
        self.state
    }

    pub fn smooth(&mut self, m: f64) -> Result<f64> {
        check_unit(0, m)?;
        Ok(self.smooth_unchecked(m))
    }

    fn smooth_unchecked(&mut self, m: f64) -> f64 {
        let out = match self.state {
            None => m,
            Some(prev) => self.factor * m + (1.0 - self.factor) * prev,
        };
        // Convex combination; clamp guards the last ulp.
        let out = out.clamp(0.0, 1.0);
        self.state = Some(out);
        out
    }

    /// Smooths a whole stream with a fresh state, keeping frame indices.
    pub fn smooth_stream(factor: f64, samples: &[MetricSample]) -> Result<Vec<MetricSample>> {
        let mut ema = Self::new(factor)?;
        samples
            .iter()
            .map(|s| {
                check_unit(s.t, s.value)?;
                Ok(MetricSample {
                    t: s.t,
                    value: ema.smooth_unchecked(s.value),
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowStats {
    pub mean: f64,
    /// Population variance (divides by `count`).
    pub variance: f64,
    pub count: usize,
}

/// FIFO of recent values, bounded to `capacity` or unbounded.
///
/// Bounded buffers recompute their statistics from the stored values so the
/// result depends only on the window content. Unbounded buffers keep a
/// Welford accumulator instead of rescanning the whole history.
#[derive(Debug, Clone)]
pub struct RecencyBuffer {
    capacity: Option<usize>,
    entries: VecDeque<f64>,
    count: usize,
    mean: f64,
    m2: f64,
}

impl RecencyBuffer {
    pub fn bounded(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::config("recency window must be at least 1"));
        }
        Ok(Self::with_capacity(Some(capacity)))
    }

    pub fn unbounded() -> Self {
        Self::with_capacity(None)
    }

    pub fn new(capacity: Option<usize>) -> Result<Self> {
        match capacity {
            Some(c) => Self::bounded(c),
            None => Ok(Self::unbounded()),
        }
    }

    fn with_capacity(capacity: Option<usize>) -> Self {
        Self {
            capacity,
            entries: VecDeque::with_capacity(capacity.unwrap_or(0)),
            count: 0,
            mean: 0.0,
            m2: 0.0,
        }
    }

    pub fn capacity(&self) -> Option<usize> {
        self.capacity
    }

    pub fn len(&self) -> usize {
        match self.capacity {
            Some(_) => self.entries.len(),
            None => self.count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn push(&mut self, value: f64) {
        match self.capacity {
            Some(cap) => {
                if self.entries.len() == cap {
                    self.entries.pop_front();
                }
                self.entries.push_back(value);
            }
            None => {
                self.count += 1;
                let delta = value - self.mean;
                self.mean += delta / self.count as f64;
                self.m2 += delta * (value - self.mean);
            }
        }
    }

    pub fn stats(&self) -> WindowStats {
        match self.capacity {
            Some(_) => {
                let count = self.entries.len();
                if count == 0 {
                    return WindowStats {
                        mean: 0.0,
                        variance: 0.0,
                        count: 0,
                    };
                }
                let n = count as f64;
                let mean = self.entries.iter().sum::<f64>() / n;
                let variance = self
                    .entries
                    .iter()
                    .map(|v| (v - mean) * (v - mean))
                    .sum::<f64>()
                    / n;
                WindowStats {
                    mean,
                    variance,
                    count,
                }
            }
            None => WindowStats {
                mean: self.mean,
                variance: if self.count == 0 {
                    0.0
                } else {
                    (self.m2 / self.count as f64).max(0.0)
                },
                count: self.count,
            },
        }
    }
}

/// Population mean and variance of the buffered values; `(0, 0, 0)` when
/// empty.
pub fn window_stats(buf: &RecencyBuffer) -> WindowStats {
    buf.stats()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn smoothing_examples() {
        let mut ema = EmaSmoother::new(0.25).unwrap();
        assert_eq!(ema.smooth(1.0).unwrap(), 1.0);
        assert_eq!(ema.smooth(0.0).unwrap(), 0.75);

        let mut id = EmaSmoother::new(1.0).unwrap();
        for v in [0.3, 0.9, 0.0, 1.0, 0.42] {
            assert_eq!(id.smooth(v).unwrap(), v);
        }
    }

    #[test]
    fn smoothing_rejects_bad_input() {
        let mut ema = EmaSmoother::new(0.25).unwrap();
        assert!(matches!(ema.smooth(1.2), Err(Error::OutOfRange { .. })));
        assert!(ema.smooth(f64::NAN).is_err());
        assert!(ema.smooth(-0.01).is_err());
        assert!(EmaSmoother::new(0.0).is_err());
        assert!(EmaSmoother::new(1.5).is_err());
    }

    #[test]
    fn stats_examples() {
        for mut buf in [
            RecencyBuffer::bounded(5).unwrap(),
            RecencyBuffer::unbounded(),
        ] {
            assert_eq!(
                buf.stats(),
                WindowStats {
                    mean: 0.0,
                    variance: 0.0,
                    count: 0
                }
            );
            buf.push(0.5);
            let s = buf.stats();
            assert_eq!((s.mean, s.variance, s.count), (0.5, 0.0, 1));
            buf.push(0.7);
            let s = window_stats(&buf);
            assert!((s.mean - 0.6).abs() < 1e-15);
            assert!((s.variance - 0.01).abs() < 1e-15);
            assert_eq!(s.count, 2);
        }
    }

    #[test]
    fn bounded_buffer_evicts_oldest() {
        let mut buf = RecencyBuffer::bounded(2).unwrap();
        for v in [0.9, 0.1, 0.3] {
            buf.push(v);
        }
        assert_eq!(buf.len(), 2);
        assert!((buf.stats().mean - 0.2).abs() < 1e-15);
        assert!(RecencyBuffer::bounded(0).is_err());
    }

    #[test]
    fn order_check() {
        let ok = samples_from_values(&[0.1, 0.2]).unwrap();
        assert!(check_order(&ok).is_ok());
        let bad = vec![
            MetricSample { t: 2, value: 0.1 },
            MetricSample { t: 2, value: 0.1 },
        ];
        assert!(check_order(&bad).is_err());
        assert!(samples_from_values(&[0.5, 1.5]).is_err());
    }

    proptest! {
        #[test]
        fn smoothed_output_stays_in_unit_interval(
            factor in 0.001f64..=1.0,
            values in proptest::collection::vec(0.0f64..=1.0, 1..200),
        ) {
            let mut ema = EmaSmoother::new(factor).unwrap();
            for v in values {
                let out = ema.smooth(v).unwrap();
                prop_assert!((0.0..=1.0).contains(&out));
            }
        }

        #[test]
        fn bounded_stats_depend_only_on_window(
            cap in 1usize..20,
            values in proptest::collection::vec(0.0f64..=1.0, 1..100),
        ) {
            let mut full = RecencyBuffer::bounded(cap).unwrap();
            for &v in &values {
                full.push(v);
            }
            let mut replay = RecencyBuffer::bounded(cap).unwrap();
            let start = values.len().saturating_sub(cap);
            for &v in &values[start..] {
                replay.push(v);
            }
            prop_assert_eq!(full.stats(), replay.stats());
            prop_assert!(full.len() <= cap);
        }

        #[test]
        fn unbounded_matches_two_pass(values in proptest::collection::vec(0.0f64..=1.0, 1..300)) {
            let mut buf = RecencyBuffer::unbounded();
            for &v in &values {
                buf.push(v);
            }
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let s = buf.stats();
            prop_assert!((s.mean - mean).abs() < 1e-12);
            prop_assert!((s.variance - var).abs() < 1e-12);
        }
    }
}
