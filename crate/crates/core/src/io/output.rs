//! Event logs, evaluation summaries and flat trial tables.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::{io_err, write_string, FORMAT_VERSION};
use crate::eprocess::StepEvent;
use crate::error::{Error, Result};
use crate::oracle::{EvaluationReport, Outcome};

pub const SUMMARY_FILE: &str = "summary.json";
pub const TRIALS_FILE: &str = "trials.csv";

#[derive(Serialize)]
struct EventRecord {
    t: usize,
    m: f64,
    lambda: f64,
    factor: f64,
    x: f64,
    alert: bool,
}

impl From<&StepEvent> for EventRecord {
    fn from(e: &StepEvent) -> Self {
        Self {
            t: e.t,
            m: e.m,
            lambda: e.lambda,
            factor: e.factor,
            x: e.x,
            alert: e.alert,
        }
    }
}

/// JSONL event log: a header line, then one record per processed frame.
pub fn write_events<W: Write>(mut w: W, events: &[StepEvent]) -> Result<()> {
    let wrap = |e: std::io::Error| Error::Io {
        path: "<event log>".into(),
        source: e,
    };
    writeln!(
        w,
        "{{\"format_version\":{FORMAT_VERSION},\"kind\":\"monitor_events\"}}"
    )
    .map_err(wrap)?;
    for e in events {
        serde_json::to_writer(&mut w, &EventRecord::from(e))?;
        w.write_all(b"\n").map_err(wrap)?;
    }
    w.flush().map_err(wrap)
}

#[derive(Serialize)]
struct VideoSummary<'a> {
    video_id: &'a str,
    tau_gt: usize,
    length: usize,
    false_positives: usize,
    true_positives: usize,
    misses: usize,
    correct_negatives: usize,
}

#[derive(Serialize)]
struct Summary<'a, S: Serialize> {
    format_version: u32,
    n_videos: usize,
    n_trials: usize,
    fpr: f64,
    tp_rate: f64,
    miss_rate: f64,
    correct_negative_rate: f64,
    add_mean: Option<f64>,
    add_std: Option<f64>,
    n_true_positives: usize,
    settings: &'a S,
    videos: Vec<VideoSummary<'a>>,
}

pub fn write_summary<S: Serialize>(
    path: &Path,
    report: &EvaluationReport,
    settings: &S,
) -> Result<()> {
    let videos = report
        .per_video
        .iter()
        .map(|v| {
            let count = |o: Outcome| v.trials.iter().filter(|t| t.outcome == o).count();
            VideoSummary {
                video_id: &v.video_id,
                tau_gt: v.tau_gt,
                length: v.length,
                false_positives: count(Outcome::FalsePositive),
                true_positives: count(Outcome::TruePositive),
                misses: count(Outcome::Miss),
                correct_negatives: count(Outcome::CorrectNegative),
            }
        })
        .collect();
    let summary = Summary {
        format_version: FORMAT_VERSION,
        n_videos: report.n_videos,
        n_trials: report.n_trials,
        fpr: report.fpr,
        tp_rate: report.tp_rate,
        miss_rate: report.miss_rate,
        correct_negative_rate: report.correct_negative_rate,
        add_mean: report.add_mean,
        add_std: report.add_std,
        n_true_positives: report.n_true_positives,
        settings,
        videos,
    };
    write_string(path, &(serde_json::to_string_pretty(&summary)? + "\n"))
}

/// One row per video × trial. `tags` become constant trailing columns so
/// tables from several runs (e.g. a window sweep) can be concatenated.
pub fn write_trial_table(
    path: &Path,
    report: &EvaluationReport,
    tags: &[(&str, String)],
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).map_err(io_err(path))?);
    writeln!(out, "# format_version={FORMAT_VERSION}").map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "video_id", "trial", "tau_gt", "length", "tau_hat", "outcome", "delay",
    ];
    header.extend(tags.iter().map(|(k, _)| *k));
    w.write_record(&header)?;
    for v in &report.per_video {
        for t in &v.trials {
            let mut row = vec![
                v.video_id.clone(),
                t.trial.to_string(),
                v.tau_gt.to_string(),
                v.length.to_string(),
                t.tau_hat.map(|x| x.to_string()).unwrap_or_default(),
                t.outcome.as_str().to_string(),
                t.delay(v.tau_gt).map(|d| d.to_string()).unwrap_or_default(),
            ];
            row.extend(tags.iter().map(|(_, v)| v.clone()));
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(io_err(path))
}

/// Writes `summary.json` and `trials.csv` into `dir`.
pub fn write_report<S: Serialize>(
    dir: &Path,
    report: &EvaluationReport,
    settings: &S,
    tags: &[(&str, String)],
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_summary(&dir.join(SUMMARY_FILE), report, settings)?;
    write_trial_table(&dir.join(TRIALS_FILE), report, tags)
}
