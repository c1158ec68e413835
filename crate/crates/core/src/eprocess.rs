//! The sequential test.
//!
//! Each frame contributes the factor `1 + λ_t(ε − M_t)`, written here in its
//! betting form `(1 − λ_t) + λ_t E_t` with the per-frame e-value
//! `E_t = 1 + ε − M_t`. Both forms are the same number; [`wealth_factor`] and
//! [`betting_factor`] expose them separately so the identity can be checked.
//!
//! Wealth is accumulated in the log domain. The alert fires at the first
//! frame where `log X_t ≥ −log α`, i.e. `X_t ≥ 1/α`.

use serde::{Deserialize, Serialize};

use crate::betting::{BettingConfig, BettingState, BettingStrategy};
use crate::error::{Error, Result};
use crate::stream::{check_order, check_unit, EmaSmoother, MetricSample};

pub const DEFAULT_ALPHA: f64 = 0.1;
pub const DEFAULT_SMOOTHING: f64 = 0.25;
pub const DEFAULT_RECENCY_WINDOW: usize = 10;

/// Per-frame e-value `1 + ε − m`; has null expectation at most 1 when
/// `E[m] ≥ ε`.
pub fn per_frame_evalue(epsilon: f64, m: f64) -> f64 {
    1.0 + epsilon - m
}

/// `(1 − λ) + λ E`.
pub fn betting_factor(lambda: f64, evalue: f64) -> f64 {
    (1.0 - lambda) + lambda * evalue
}

/// `1 + λ(ε − m)`.
pub fn wealth_factor(lambda: f64, epsilon: f64, m: f64) -> f64 {
    1.0 + lambda * (epsilon - m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorConfig {
    pub epsilon: f64,
    pub alpha: f64,
    pub betting: BettingConfig,
    pub smoothing_factor: f64,
    /// Frames of history feeding the betting statistics; `None` keeps all.
    pub recency_window: Option<usize>,
    /// Stop at the first alert. Values after an alert carry no guarantee.
    pub halt_on_alert: bool,
}

impl MonitorConfig {
    /// Defaults: smoothing 0.25, recency window 10, halting.
    pub fn new(epsilon: f64, alpha: f64, strategy: BettingStrategy) -> Self {
        Self {
            epsilon,
            alpha,
            betting: BettingConfig::new(strategy, epsilon),
            smoothing_factor: DEFAULT_SMOOTHING,
            recency_window: Some(DEFAULT_RECENCY_WINDOW),
            halt_on_alert: true,
        }
    }

    pub fn with_betting(mut self, betting: BettingConfig) -> Self {
        self.betting = betting;
        self
    }

    pub fn with_learning_rate(mut self, gamma: f64) -> Self {
        self.betting.learning_rate = gamma;
        self
    }

    pub fn with_smoothing(mut self, factor: f64) -> Self {
        self.smoothing_factor = factor;
        self
    }

    pub fn with_window(mut self, window: Option<usize>) -> Self {
        self.recency_window = window;
        self
    }

    pub fn with_halt(mut self, halt: bool) -> Self {
        self.halt_on_alert = halt;
        self
    }

    pub fn threshold(&self) -> f64 {
        1.0 / self.alpha
    }

    pub fn log_threshold(&self) -> f64 {
        -self.alpha.ln()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config(format!(
                "alpha must be in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.betting.epsilon != self.epsilon {
            return Err(Error::config(format!(
                "betting epsilon {} differs from monitor epsilon {}",
                self.betting.epsilon, self.epsilon
            )));
        }
        self.betting.validate()?;
        EmaSmoother::new(self.smoothing_factor)?;
        if self.recency_window == Some(0) {
            return Err(Error::config("recency window must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorState {
    /// Frames processed.
    pub t: usize,
    pub x: f64,
    pub log_x: f64,
    pub lambda_last: f64,
    pub alerted: bool,
    pub stopping_time: Option<usize>,
}

impl Default for MonitorState {
    fn default() -> Self {
        Self {
            t: 0,
            x: 1.0,
            log_x: 0.0,
            lambda_last: 0.0,
            alerted: false,
            stopping_time: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepEvent {
    pub t: usize,
    pub m_raw: f64,
    /// Smoothed value actually tested.
    pub m: f64,
    pub lambda: f64,
    pub factor: f64,
    pub x: f64,
    pub log_x: f64,
    /// Set from the stopping time onward.
    pub alert: bool,
}

/// A single stream's sequential test. One owner, advanced in frame order.
#[derive(Debug, Clone)]
pub struct Monitor {
    cfg: MonitorConfig,
    state: MonitorState,
    smoother: EmaSmoother,
    betting: BettingState,
    last_frame: Option<usize>,
}

impl Monitor {
    pub fn new(cfg: MonitorConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            smoother: EmaSmoother::new(cfg.smoothing_factor)?,
            betting: BettingState::new(&cfg.betting, cfg.recency_window)?,
            state: MonitorState::default(),
            last_frame: None,
            cfg,
        })
    }

    pub fn config(&self) -> &MonitorConfig {
        &self.cfg
    }

    pub fn state(&self) -> &MonitorState {
        &self.state
    }

    pub fn betting(&self) -> &BettingState {
        &self.betting
    }

    /// Processes the next frame, numbering it one past the previous frame.
    pub fn step(&mut self, m: f64) -> Result<StepEvent> {
        let frame = self.last_frame.map_or(1, |f| f + 1);
        self.step_frame(frame, m)
    }

    pub fn step_sample(&mut self, sample: MetricSample) -> Result<StepEvent> {
        if let Some(prev) = self.last_frame {
            if sample.t <= prev {
                return Err(Error::FrameOrder {
                    prev,
                    got: sample.t,
                });
            }
        }
        self.step_frame(sample.t, sample.value)
    }

    fn step_frame(&mut self, frame: usize, m_raw: f64) -> Result<StepEvent> {
        if self.cfg.halt_on_alert {
            if let Some(tau) = self.state.stopping_time {
                return Err(Error::Halted(tau));
            }
        }
        check_unit(frame, m_raw)?;

        // The rate is fixed before the current value enters anything.
        let lambda = self.betting.next_lambda(&self.cfg.betting);
        let m = self.smoother.smooth(m_raw)?;
        let factor = betting_factor(lambda, per_frame_evalue(self.cfg.epsilon, m));
        if factor.is_nan() || factor <= 0.0 {
            return Err(Error::NonPositiveFactor {
                frame,
                factor,
                lambda,
                m,
            });
        }
        self.betting.observe(m, &self.cfg.betting);

        let st = &mut self.state;
        st.t += 1;
        st.log_x += factor.ln();
        st.x = st.log_x.exp();
        st.lambda_last = lambda;
        if !st.alerted && st.log_x >= self.cfg.log_threshold() {
            st.alerted = true;
            st.stopping_time = Some(frame);
        }
        self.last_frame = Some(frame);

        Ok(StepEvent {
            t: frame,
            m_raw,
            m,
            lambda,
            factor,
            x: st.x,
            log_x: st.log_x,
            alert: st.alerted,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorResult {
    pub stopping_time: Option<usize>,
    pub trajectory: Vec<StepEvent>,
}

impl MonitorResult {
    pub fn final_x(&self) -> f64 {
        self.trajectory.last().map_or(1.0, |e| e.x)
    }

    pub fn final_log_x(&self) -> f64 {
        self.trajectory.last().map_or(0.0, |e| e.log_x)
    }
}

/// Runs a fresh monitor over `stream`. With `halt_on_alert` the trajectory
/// ends at the stopping time.
pub fn run_monitor(stream: &[MetricSample], cfg: &MonitorConfig) -> Result<MonitorResult> {
    check_order(stream)?;
    let mut monitor = Monitor::new(*cfg)?;
    let mut trajectory = Vec::with_capacity(stream.len());
    for &sample in stream {
        let ev = monitor.step_sample(sample)?;
        trajectory.push(ev);
        if cfg.halt_on_alert && ev.alert {
            break;
        }
    }
    Ok(MonitorResult {
        stopping_time: monitor.state.stopping_time,
        trajectory,
    })
}

/// Stopping time only; skips building the trajectory.
pub fn stopping_time(stream: &[MetricSample], cfg: &MonitorConfig) -> Result<Option<usize>> {
    let mut monitor = Monitor::new(MonitorConfig {
        halt_on_alert: true,
        ..*cfg
    })?;
    for &sample in stream {
        if monitor.step_sample(sample)?.alert {
            break;
        }
    }
    Ok(monitor.state.stopping_time)
}

/// Convenience for the fixed-rate test mode.
pub fn fixed_rate_config(epsilon: f64, alpha: f64, lambda: f64) -> MonitorConfig {
    MonitorConfig::new(epsilon, alpha, BettingStrategy::Fixed(lambda))
        .with_smoothing(1.0)
        .with_window(None)
}
