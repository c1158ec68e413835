//! Predictable betting rates for the wealth process.
//!
//! The rate `λ_t` applied at frame `t` may only depend on frames `1..t−1`.
//! [`BettingState::next_lambda`] is therefore called before the current
//! value is revealed and [`BettingState::observe`] afterwards.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stream::RecencyBuffer;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BettingStrategy {
    /// Closed-form approximate growth-rate-adaptive rate from the windowed
    /// running mean and variance.
    Agrapa,
    /// Scale-free online gradient descent on the log-loss.
    SfOgd,
    /// Constant rate. Bypasses learning; meant for tests and closed-form
    /// checks.
    Fixed(f64),
}

impl BettingStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            BettingStrategy::Agrapa => "agrapa",
            BettingStrategy::SfOgd => "sfogd",
            BettingStrategy::Fixed(_) => "fixed",
        }
    }
}

pub const DEFAULT_LEARNING_RATE: f64 = 0.5;

/// Largest rate that keeps every factor `1 + λ(ε − m)` positive for all
/// `m ∈ [0, 1]`, capped at `1/(2ε)`.
pub fn default_lambda_max(epsilon: f64) -> f64 {
    (1.0 / (2.0 * epsilon)).min(0.999 / (1.0 - epsilon))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BettingConfig {
    pub strategy: BettingStrategy,
    pub epsilon: f64,
    /// Step size `γ` for SF-OGD; ignored otherwise.
    pub learning_rate: f64,
    pub lambda_max: f64,
}

impl BettingConfig {
    pub fn new(strategy: BettingStrategy, epsilon: f64) -> Self {
        Self {
            strategy,
            epsilon,
            learning_rate: DEFAULT_LEARNING_RATE,
            lambda_max: default_lambda_max(epsilon),
        }
    }

    pub fn with_learning_rate(mut self, gamma: f64) -> Self {
        self.learning_rate = gamma;
        self
    }

    pub fn with_lambda_max(mut self, lambda_max: f64) -> Self {
        self.lambda_max = lambda_max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let eps = self.epsilon;
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::config(format!(
                "epsilon must be in (0, 1), got {eps}"
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        let ceiling = 1.0 / (2.0 * eps);
        if !(self.lambda_max > 0.0 && self.lambda_max <= ceiling) {
            return Err(Error::config(format!(
                "lambda_max must be in (0, {ceiling}], got {}",
                self.lambda_max
            )));
        }
        if let BettingStrategy::Fixed(lambda) = self.strategy {
            if !(0.0..=self.lambda_max).contains(&lambda) {
                return Err(Error::config(format!(
                    "fixed lambda {lambda} outside [0, {}]",
                    self.lambda_max
                )));
            }
        }
        Ok(())
    }

    fn clip(&self, lambda: f64) -> f64 {
        lambda.clamp(0.0, self.lambda_max)
    }
}

/// Gradient in `λ` of the log-loss `−log(1 + λ(ε − m))`.
pub fn log_loss_gradient(lambda: f64, epsilon: f64, m: f64) -> f64 {
    let edge = epsilon - m;
    -edge / (1.0 + lambda * edge)
}

#[derive(Debug, Clone)]
pub struct BettingState {
    lambda: f64,
    grad_norm_sq_sum: f64,
    history: RecencyBuffer,
}

impl BettingState {
    /// Fresh state with `λ = 0`. `window` bounds the aGRAPA history; `None`
    /// keeps every past value.
    pub fn new(cfg: &BettingConfig, window: Option<usize>) -> Result<Self> {
        cfg.validate()?;
        let lambda = match cfg.strategy {
            BettingStrategy::Fixed(l) => l,
            _ => 0.0,
        };
        Ok(Self {
            lambda,
            grad_norm_sq_sum: 0.0,
            history: RecencyBuffer::new(window)?,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn grad_norm_sq_sum(&self) -> f64 {
        self.grad_norm_sq_sum
    }

    pub fn history(&self) -> &RecencyBuffer {
        &self.history
    }

    /// aGRAPA rate from the history seen so far:
    /// `(ε − μ̂) / (σ̂² + (ε − μ̂)²)`, clipped to `[0, lambda_max]`.
    pub fn agrapa_update(&mut self, cfg: &BettingConfig) -> f64 {
        let stats = self.history.stats();
        let lambda = if stats.count == 0 {
            0.0
        } else {
            let edge = cfg.epsilon - stats.mean;
            let denom = stats.variance + edge * edge;
            if denom > 0.0 {
                cfg.clip(edge / denom)
            } else {
                0.0
            }
        };
        self.lambda = lambda;
        lambda
    }

    /// One scale-free OGD step from the latest observation `m_prev`, taken
    /// at the rate `λ_{t−1}` currently held in the state.
    pub fn sfogd_update(&mut self, m_prev: f64, cfg: &BettingConfig) -> f64 {
        let g = log_loss_gradient(self.lambda, cfg.epsilon, m_prev);
        if g == 0.0 {
            return self.lambda;
        }
        self.grad_norm_sq_sum += g * g;
        self.lambda = cfg.clip(self.lambda - cfg.learning_rate * g / self.grad_norm_sq_sum.sqrt());
        self.lambda
    }

    /// Rate for the upcoming frame. Uses only what has been observed.
    pub fn next_lambda(&mut self, cfg: &BettingConfig) -> f64 {
        match cfg.strategy {
            BettingStrategy::Agrapa => self.agrapa_update(cfg),
            BettingStrategy::SfOgd => self.lambda,
            BettingStrategy::Fixed(l) => {
                self.lambda = l;
                l
            }
        }
    }

    /// Records the value revealed at the current frame.
    pub fn observe(&mut self, m: f64, cfg: &BettingConfig) {
        self.history.push(m);
        if cfg.strategy == BettingStrategy::SfOgd {
            self.sfogd_update(m, cfg);
        }
    }
}
