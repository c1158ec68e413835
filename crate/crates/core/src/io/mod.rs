//! Trace formats, ingestion and serialized outputs.
//!
//! | file                | format                                                      |
//! |---------------------|-------------------------------------------------------------|
//! | box trace           | CSV `frame,x,y,w,h`, one file each for prediction and truth |
//! | response maps       | JSONL `{"t":1,"rows":2,"cols":2,"data":[...]}`              |
//! | metric stream       | CSV `frame,value`                                           |
//! | bundle manifest     | JSON `*.bundle.json` naming one of the above                |
//! | event log           | JSONL, one `{"t","m","lambda","factor","x","alert"}` per frame |
//! | evaluation summary  | JSON                                                        |
//! | trial table         | CSV, one row per video × trial                              |
//!
//! CSV files start with a `# format_version=1` comment; JSONL files start
//! with a `{"format_version":1,...}` header line.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod evaluate;
pub mod ingest;
pub mod output;
pub mod traces;

pub use evaluate::{evaluate_dir, load_bundles, EvaluateSettings, MonitorSettings};
pub use ingest::{ingest, ingest_bundle, IngestOptions, TraceSource};
pub use output::{write_events, write_report, write_summary, write_trial_table};

pub const FORMAT_VERSION: u32 = 1;
pub const BUNDLE_SUFFIX: &str = ".bundle.json";

/// Which quality value a monitor consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Ngiou,
    Pc,
    Cg,
    Sg,
    Raw,
}

impl MetricKind {
    /// Tolerance levels used for each metric unless overridden.
    pub fn default_epsilon(self) -> f64 {
        match self {
            MetricKind::Ngiou => 0.55,
            MetricKind::Pc => 0.50,
            MetricKind::Cg => 0.95,
            MetricKind::Sg => 0.90,
            MetricKind::Raw => 0.55,
        }
    }

    pub fn source(self) -> SourceKind {
        match self {
            MetricKind::Ngiou => SourceKind::BoxPair,
            MetricKind::Pc | MetricKind::Cg | MetricKind::Sg => SourceKind::ResponseMaps,
            MetricKind::Raw => SourceKind::RawMetric,
        }
    }

    /// Supervised metrics size their windows in seconds by default.
    pub fn is_supervised(self) -> bool {
        self == MetricKind::Ngiou
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Ngiou => "ngiou",
            MetricKind::Pc => "pc",
            MetricKind::Cg => "cg",
            MetricKind::Sg => "sg",
            MetricKind::Raw => "raw",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ngiou" => MetricKind::Ngiou,
            "pc" => MetricKind::Pc,
            "cg" => MetricKind::Cg,
            "sg" => MetricKind::Sg,
            "raw" => MetricKind::Raw,
            other => return Err(Error::config(format!("unknown metric '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    BoxPair,
    ResponseMaps,
    RawMetric,
}

impl SourceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceKind::BoxPair => "box_pair",
            SourceKind::ResponseMaps => "response_maps",
            SourceKind::RawMetric => "raw_metric",
        }
    }
}

/// Files of a bundle, relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum TraceFiles {
    BoxPair { pred: PathBuf, gt: PathBuf },
    ResponseMaps { maps: PathBuf },
    RawMetric { metric: PathBuf },
}

impl TraceFiles {
    pub fn kind(&self) -> SourceKind {
        match self {
            TraceFiles::BoxPair { .. } => SourceKind::BoxPair,
            TraceFiles::ResponseMaps { .. } => SourceKind::ResponseMaps,
            TraceFiles::RawMetric { .. } => SourceKind::RawMetric,
        }
    }
}

/// Manifest describing one recorded or simulated video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceBundle {
    pub format_version: u32,
    pub video_id: String,
    /// Frames per second; converts second-based windows into frames.
    pub frame_rate: f64,
    #[serde(flatten)]
    pub files: TraceFiles,
}

impl TraceBundle {
    pub fn new(video_id: impl Into<String>, frame_rate: f64, files: TraceFiles) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            video_id: video_id.into(),
            frame_rate,
            files,
        }
    }

    pub fn source(&self) -> SourceKind {
        self.files.kind()
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = read_to_string(path)?;
        let bundle: TraceBundle = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: e.line() as u64,
            msg: e.to_string(),
        })?;
        if bundle.format_version != FORMAT_VERSION {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: 1,
                msg: format!("unsupported format_version {}", bundle.format_version),
            });
        }
        if !(bundle.frame_rate > 0.0 && bundle.frame_rate.is_finite()) {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: 1,
                msg: format!("frame_rate must be positive, got {}", bundle.frame_rate),
            });
        }
        Ok(bundle)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        write_string(path, &(text + "\n"))
    }

    /// Resolves the bundle's files against `base` (the manifest directory).
    pub fn source_paths(&self, base: &Path) -> TraceSource {
        match &self.files {
            TraceFiles::BoxPair { pred, gt } => TraceSource::BoxPair {
                pred: base.join(pred),
                gt: base.join(gt),
            },
            TraceFiles::ResponseMaps { maps } => TraceSource::ResponseMaps(base.join(maps)),
            TraceFiles::RawMetric { metric } => TraceSource::RawMetric(base.join(metric)),
        }
    }
}

/// A window length given in frames, in seconds, or not bounded at all.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameWindow {
    Frames(usize),
    Seconds(f64),
    Unbounded,
}

impl FrameWindow {
    /// Frame count for a stream recorded at `frame_rate`; `None` when
    /// unbounded.
    pub fn resolve(&self, frame_rate: Option<f64>) -> Result<Option<usize>> {
        match *self {
            FrameWindow::Frames(0) => Err(Error::config("window must be at least one frame")),
            FrameWindow::Frames(n) => Ok(Some(n)),
            FrameWindow::Seconds(s) => {
                let fps = frame_rate.ok_or_else(|| {
                    Error::config("a window in seconds needs a frame rate (bundle or --frame-rate)")
                })?;
                let frames = (s * fps).round();
                if frames.is_nan() || frames < 1.0 {
                    return Err(Error::config(format!(
                        "{s} s at {fps} FPS is less than one frame"
                    )));
                }
                Ok(Some(frames as usize))
            }
            FrameWindow::Unbounded => Ok(None),
        }
    }
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub(crate) fn write_string(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}
