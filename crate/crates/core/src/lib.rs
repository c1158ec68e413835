//! Anytime-valid tracking-failure detection.
//!
//! A bounded per-frame quality value `M_t ∈ [0, 1]` is compared against a
//! tolerance `ε` by a multiplicative e-process
//!
//! ```text
//! X_0 = 1,   X_t = ∏_{i ≤ t} (1 + λ_i (ε − M_i))
//! ```
//!
//! whose betting rate `λ_t` is learned from frames `1..t−1` only. Under the
//! null hypothesis `E[M_t | past] ≥ ε` the process is a nonnegative
//! supermartingale, so alerting at the first `t` with `X_t ≥ 1/α` raises a
//! false alarm with probability at most `α`, no matter when the stream ends.
//!
//! Modules:
//!
//! - [`supervised`]: IoU, GIoU and normalized GIoU from box pairs.
//! - [`response`]: peak correlation, APCE and their window-normalized gains.
//! - [`stream`]: EMA smoothing and recency buffers.
//! - [`betting`]: aGRAPA and scale-free OGD betting rates.
//! - [`eprocess`]: the sequential monitor itself.
//! - [`oracle`]: ground-truth failure times, noisy trials, FPR / ADD.
//! - [`simulate`]: synthetic metric streams and response maps.
//! - [`io`]: trace formats, ingestion, event logs and evaluation reports.

pub mod betting;
pub mod eprocess;
pub mod error;
pub mod io;
pub mod oracle;
pub mod response;
pub mod simulate;
pub mod stream;
pub mod supervised;

pub use betting::{BettingConfig, BettingState, BettingStrategy};
pub use eprocess::{run_monitor, Monitor, MonitorConfig, MonitorResult, MonitorState, StepEvent};
pub use error::{Error, Result};
pub use oracle::{
    aggregate, ground_truth_failure, run_trials, EvaluationReport, OracleConfig, Outcome,
    TrialConfig, TrialResult, VideoTrials,
};
pub use response::{ResponseMap, WindowedNormalizer};
pub use simulate::StreamSpec;
pub use stream::{EmaSmoother, MetricSample, RecencyBuffer, WindowStats};
pub use supervised::BoundingBox;
