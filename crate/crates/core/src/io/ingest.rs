//! Turns recorded traces into a validated `[0, 1]` metric stream.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::traces::{read_boxes_csv, read_metric_csv, read_response_maps};
use super::{MetricKind, SourceKind, TraceBundle};
use crate::error::{Error, Result};
use crate::response::{
    apce, certainty_gain, peak_correlation, sharpness_gain, ResponseMap, WindowedNormalizer,
};
use crate::stream::{check_unit, MetricSample};
use crate::supervised::{ngiou, BoundingBox};

pub const DEFAULT_GAIN_WINDOW: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub enum TraceSource {
    BoxPair { pred: PathBuf, gt: PathBuf },
    ResponseMaps(PathBuf),
    RawMetric(PathBuf),
}

impl TraceSource {
    pub fn kind(&self) -> SourceKind {
        match self {
            TraceSource::BoxPair { .. } => SourceKind::BoxPair,
            TraceSource::ResponseMaps(_) => SourceKind::ResponseMaps,
            TraceSource::RawMetric(_) => SourceKind::RawMetric,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IngestOptions {
    pub metric: MetricKind,
    /// Normalization window for CG and SG.
    pub gain_window: usize,
    /// Min-max rescale each response map instead of rejecting raw values.
    pub normalize_maps: bool,
}

impl IngestOptions {
    pub fn new(metric: MetricKind) -> Self {
        Self {
            metric,
            gain_window: DEFAULT_GAIN_WINDOW,
            normalize_maps: false,
        }
    }
}

pub fn ngiou_stream(pred: &[BoundingBox], gt: &[BoundingBox]) -> Result<Vec<MetricSample>> {
    if pred.len() != gt.len() {
        return Err(Error::config(format!(
            "prediction trace has {} frames but ground truth has {}",
            pred.len(),
            gt.len()
        )));
    }
    Ok(pred
        .iter()
        .zip(gt)
        .enumerate()
        .map(|(i, (p, g))| MetricSample {
            t: i + 1,
            value: ngiou(p, g),
        })
        .collect())
}

/// PC, CG or SG per frame. CG and SG windows start empty at the first map.
pub fn response_stream(
    maps: &[ResponseMap],
    metric: MetricKind,
    gain_window: usize,
) -> Result<Vec<MetricSample>> {
    let mut norm = WindowedNormalizer::new(gain_window)?;
    maps.iter()
        .enumerate()
        .map(|(i, map)| {
            let value = match metric {
                MetricKind::Pc => peak_correlation(map),
                MetricKind::Cg => {
                    let pc = peak_correlation(map);
                    norm.push(pc);
                    certainty_gain(pc, &norm)
                }
                MetricKind::Sg => {
                    let a = apce(map);
                    norm.push(a);
                    sharpness_gain(a, &norm)
                }
                other => {
                    return Err(Error::config(format!(
                        "metric '{other}' cannot be computed from response maps"
                    )))
                }
            };
            Ok(MetricSample { t: i + 1, value })
        })
        .collect()
}

/// Reads `source` and computes the metric named in `opts`.
pub fn ingest(source: &TraceSource, opts: &IngestOptions) -> Result<Vec<MetricSample>> {
    if opts.metric.source() != source.kind() {
        return Err(Error::config(format!(
            "metric '{}' needs a {} source, got {}",
            opts.metric,
            opts.metric.source().as_str(),
            source.kind().as_str()
        )));
    }
    let samples = match source {
        TraceSource::BoxPair { pred, gt } => {
            ngiou_stream(&read_boxes_csv(pred)?, &read_boxes_csv(gt)?)?
        }
        TraceSource::ResponseMaps(path) => response_stream(
            &read_response_maps(path, opts.normalize_maps)?,
            opts.metric,
            opts.gain_window,
        )?,
        TraceSource::RawMetric(path) => read_metric_csv(path)?,
    };
    for s in &samples {
        check_unit(s.t, s.value)?;
    }
    Ok(samples)
}

/// Reads a bundle manifest and ingests its trace.
pub fn ingest_bundle(
    manifest: &Path,
    opts: &IngestOptions,
) -> Result<(TraceBundle, Vec<MetricSample>)> {
    let bundle = TraceBundle::read(manifest)?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let samples = ingest(&bundle.source_paths(base), opts)?;
    Ok((bundle, samples))
}
