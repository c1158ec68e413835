//! Settings shared by the `monitor` and `evaluate` workflows, and the
//! directory-level evaluation driver.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ingest::{ingest, IngestOptions, DEFAULT_GAIN_WINDOW};
use super::{io_err, FrameWindow, MetricKind, TraceBundle, BUNDLE_SUFFIX};
use crate::betting::{BettingConfig, BettingStrategy, DEFAULT_LEARNING_RATE};
use crate::eprocess::{MonitorConfig, DEFAULT_ALPHA, DEFAULT_RECENCY_WINDOW, DEFAULT_SMOOTHING};
use crate::error::{Error, Result};
use crate::oracle::{
    aggregate, run_trials, EvaluationReport, OracleConfig, TrialConfig, DEFAULT_NOISE_SIGMA,
};
use crate::stream::MetricSample;

pub const DEFAULT_TRIALS: usize = 50;
/// Supervised windows span two seconds of video.
pub const SUPERVISED_WINDOW_SECONDS: f64 = 2.0;
pub const DEFAULT_GT_WINDOW: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorSettings {
    pub metric: MetricKind,
    pub epsilon: f64,
    pub alpha: f64,
    pub strategy: BettingStrategy,
    pub learning_rate: f64,
    pub smoothing: f64,
    pub window: FrameWindow,
    pub gain_window: usize,
    pub normalize_maps: bool,
    pub halt_on_alert: bool,
}

impl MonitorSettings {
    pub fn for_metric(metric: MetricKind) -> Self {
        Self {
            metric,
            epsilon: metric.default_epsilon(),
            alpha: DEFAULT_ALPHA,
            strategy: BettingStrategy::Agrapa,
            learning_rate: DEFAULT_LEARNING_RATE,
            smoothing: DEFAULT_SMOOTHING,
            window: if metric.is_supervised() {
                FrameWindow::Seconds(SUPERVISED_WINDOW_SECONDS)
            } else {
                FrameWindow::Frames(DEFAULT_RECENCY_WINDOW)
            },
            gain_window: DEFAULT_GAIN_WINDOW,
            normalize_maps: false,
            halt_on_alert: true,
        }
    }

    pub fn monitor_config(&self, frame_rate: Option<f64>) -> Result<MonitorConfig> {
        let betting =
            BettingConfig::new(self.strategy, self.epsilon).with_learning_rate(self.learning_rate);
        let cfg = MonitorConfig::new(self.epsilon, self.alpha, self.strategy)
            .with_betting(betting)
            .with_smoothing(self.smoothing)
            .with_window(self.window.resolve(frame_rate)?)
            .with_halt(self.halt_on_alert);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn ingest_options(&self) -> IngestOptions {
        IngestOptions {
            metric: self.metric,
            gain_window: self.gain_window,
            normalize_maps: self.normalize_maps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluateSettings {
    pub monitor: MonitorSettings,
    pub w_gt: FrameWindow,
    pub trials: TrialConfig,
}

impl EvaluateSettings {
    pub fn new(monitor: MonitorSettings) -> Self {
        Self {
            w_gt: if monitor.metric.is_supervised() {
                FrameWindow::Seconds(SUPERVISED_WINDOW_SECONDS)
            } else {
                FrameWindow::Frames(DEFAULT_GT_WINDOW)
            },
            trials: TrialConfig {
                n_trials: DEFAULT_TRIALS,
                noise_sigma: DEFAULT_NOISE_SIGMA,
                base_seed: 0,
            },
            monitor,
        }
    }

    fn oracle_config(&self, frame_rate: Option<f64>) -> Result<OracleConfig> {
        let w_gt = self
            .w_gt
            .resolve(frame_rate)?
            .ok_or_else(|| Error::config("the ground-truth window must be bounded"))?;
        OracleConfig::new(self.monitor.epsilon, w_gt)
    }
}

/// One video's already-ingested metric stream.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoInput {
    pub video_id: String,
    pub frame_rate: Option<f64>,
    pub samples: Vec<MetricSample>,
}

/// Lists `*.bundle.json` manifests in `dir`, sorted by file name. All
/// bundles must share one source kind.
pub fn load_bundles(dir: &Path) -> Result<Vec<(PathBuf, TraceBundle)>> {
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        let is_bundle = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.ends_with(BUNDLE_SUFFIX));
        if is_bundle && path.is_file() {
            paths.push(path);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Empty(format!(
            "no *{BUNDLE_SUFFIX} manifests in {}",
            dir.display()
        )));
    }
    let bundles = paths
        .into_iter()
        .map(|p| TraceBundle::read(&p).map(|b| (p, b)))
        .collect::<Result<Vec<_>>>()?;
    let kind = bundles[0].1.source();
    if let Some((p, b)) = bundles.iter().find(|(_, b)| b.source() != kind) {
        return Err(Error::config(format!(
            "inconsistent trace kinds: {} is {} but {} is {}",
            bundles[0].0.display(),
            kind.as_str(),
            p.display(),
            b.source().as_str()
        )));
    }
    Ok(bundles)
}

/// Runs the trial protocol over every video and pools the outcomes.
pub fn evaluate_videos(
    videos: &[VideoInput],
    settings: &EvaluateSettings,
) -> Result<EvaluationReport> {
    if videos.is_empty() {
        return Err(Error::Empty("no videos to evaluate".into()));
    }
    let results = videos
        .par_iter()
        .map(|v| {
            let mcfg = settings.monitor.monitor_config(v.frame_rate)?;
            let ocfg = settings.oracle_config(v.frame_rate)?;
            run_trials(&v.video_id, &v.samples, &mcfg, &ocfg, &settings.trials)
        })
        .collect::<Result<Vec<_>>>()?;
    aggregate(results)
}

/// Ingests every bundle in `dir` and evaluates them.
pub fn evaluate_dir(dir: &Path, settings: &EvaluateSettings) -> Result<EvaluationReport> {
    let bundles = load_bundles(dir)?;
    let wanted = settings.monitor.metric.source();
    if bundles[0].1.source() != wanted {
        return Err(Error::config(format!(
            "metric '{}' needs {} bundles, found {}",
            settings.monitor.metric,
            wanted.as_str(),
            bundles[0].1.source().as_str()
        )));
    }
    let opts = settings.monitor.ingest_options();
    let videos = bundles
        .par_iter()
        .map(|(path, b)| {
            let base = path.parent().unwrap_or(Path::new("."));
            Ok(VideoInput {
                video_id: b.video_id.clone(),
                frame_rate: Some(b.frame_rate),
                samples: ingest(&b.source_paths(base), &opts)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    evaluate_videos(&videos, settings)
}
