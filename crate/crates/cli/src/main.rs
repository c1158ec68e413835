use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use trackwatch::betting::BettingStrategy;
use trackwatch::eprocess::Monitor;
use trackwatch::io::ingest::TraceSource;
use trackwatch::io::traces::{write_metric_csv, write_response_maps};
use trackwatch::io::{
    ingest, ingest_bundle, write_events, write_report, EvaluateSettings, FrameWindow, MetricKind,
    MonitorSettings, TraceBundle, TraceFiles, BUNDLE_SUFFIX,
};
use trackwatch::oracle::{perturb, TrialConfig};
use trackwatch::simulate::{generate_response_maps, generate_stream, StreamSpec};

/// Exit status when the monitor raised an alert.
const EXIT_ALERT: u8 = 2;

#[derive(Parser)]
#[command(
    name = "trackwatch",
    version,
    about = "Anytime-valid tracking failure detection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sequential test over one trace.
    Monitor(MonitorCmd),
    /// Run the noisy-trial protocol over a directory of trace bundles.
    Evaluate(EvaluateCmd),
    /// Write synthetic trace bundles.
    Simulate(SimulateCmd),
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Ngiou,
    Pc,
    Cg,
    Sg,
    Raw,
}

impl From<Metric> for MetricKind {
    fn from(m: Metric) -> Self {
        match m {
            Metric::Ngiou => MetricKind::Ngiou,
            Metric::Pc => MetricKind::Pc,
            Metric::Cg => MetricKind::Cg,
            Metric::Sg => MetricKind::Sg,
            Metric::Raw => MetricKind::Raw,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Betting {
    Agrapa,
    Sfogd,
}

/// Test configuration shared by `monitor` and `evaluate`. Unset values fall
/// back to the defaults for the chosen metric.
#[derive(Args)]
struct TestArgs {
    #[arg(long, value_enum)]
    metric: Metric,
    /// Tolerance level ε.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Significance level; the alarm threshold is 1/α.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_enum, default_value = "agrapa")]
    betting: Betting,
    /// SF-OGD learning rate.
    #[arg(long)]
    gamma: Option<f64>,
    /// Recency window for the betting history, in frames.
    #[arg(long, conflicts_with_all = ["window_seconds", "unbounded_window"])]
    window: Option<usize>,
    /// Recency window in seconds (needs a frame rate).
    #[arg(long, conflicts_with = "unbounded_window")]
    window_seconds: Option<f64>,
    /// Keep the entire history.
    #[arg(long)]
    unbounded_window: bool,
    /// Window for the certainty and sharpness gains, in frames.
    #[arg(long)]
    sigma: Option<usize>,
    /// EMA smoothing factor in (0, 1]; 1 disables smoothing.
    #[arg(long)]
    smoothing: Option<f64>,
    /// Min-max rescale response maps that are not already in [0, 1].
    #[arg(long)]
    normalize_maps: bool,
}

impl TestArgs {
    fn settings(&self) -> MonitorSettings {
        let mut s = MonitorSettings::for_metric(self.metric.into());
        if let Some(e) = self.epsilon {
            s.epsilon = e;
        }
        if let Some(a) = self.alpha {
            s.alpha = a;
        }
        s.strategy = match self.betting {
            Betting::Agrapa => BettingStrategy::Agrapa,
            Betting::Sfogd => BettingStrategy::SfOgd,
        };
        if let Some(g) = self.gamma {
            s.learning_rate = g;
        }
        if let Some(w) = self.window {
            s.window = FrameWindow::Frames(w);
        } else if let Some(sec) = self.window_seconds {
            s.window = FrameWindow::Seconds(sec);
        } else if self.unbounded_window {
            s.window = FrameWindow::Unbounded;
        }
        if let Some(g) = self.sigma {
            s.gain_window = g;
        }
        if let Some(f) = self.smoothing {
            s.smoothing = f;
        }
        s.normalize_maps = self.normalize_maps;
        s
    }
}

#[derive(Args)]
struct MonitorCmd {
    #[command(flatten)]
    test: TestArgs,
    /// Trace bundle manifest.
    #[arg(long, conflicts_with_all = ["input", "pred", "gt"])]
    bundle: Option<PathBuf>,
    /// Metric CSV (raw) or response-map JSONL (pc, cg, sg).
    #[arg(long, conflicts_with_all = ["pred", "gt"])]
    input: Option<PathBuf>,
    /// Predicted boxes CSV (ngiou).
    #[arg(long, requires = "gt")]
    pred: Option<PathBuf>,
    /// Ground-truth boxes CSV (ngiou).
    #[arg(long, requires = "pred")]
    gt: Option<PathBuf>,
    /// Frames per second; overrides the bundle's value.
    #[arg(long)]
    frame_rate: Option<f64>,
    /// Standard deviation of Gaussian noise added to the stream before testing.
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,
    /// Seed for the noise draw.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the per-frame JSONL event log here.
    #[arg(long)]
    events: Option<PathBuf>,
    /// Keep processing after the alarm instead of stopping.
    #[arg(long = "continue")]
    keep_going: bool,
}

#[derive(Args)]
struct EvaluateCmd {
    /// Directory of `*.bundle.json` manifests.
    dir: PathBuf,
    #[command(flatten)]
    test: TestArgs,
    #[arg(long, default_value_t = trackwatch::io::evaluate::DEFAULT_TRIALS)]
    trials: usize,
    #[arg(long, default_value_t = trackwatch::oracle::DEFAULT_NOISE_SIGMA)]
    noise_sigma: f64,
    /// Base seed; trial j uses seed + j.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Ground-truth failure window in frames.
    #[arg(long, conflicts_with = "w_gt_seconds")]
    w_gt: Option<usize>,
    /// Ground-truth failure window in seconds.
    #[arg(long)]
    w_gt_seconds: Option<f64>,
    /// Output directory for summary.json and trials.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SimKind {
    Raw,
    Maps,
}

#[derive(Args)]
struct SimulateCmd {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "raw")]
    kind: SimKind,
    #[arg(long, default_value_t = 1)]
    videos: usize,
    #[arg(long, default_value_t = 500)]
    length: usize,
    #[arg(long, default_value_t = 0.8)]
    null_mean: f64,
    /// Half-width of the uniform noise around the mean.
    #[arg(long, default_value_t = 0.1)]
    spread: f64,
    /// First failed frame; omit for a stationary stream.
    #[arg(long)]
    failure_at: Option<usize>,
    #[arg(long, default_value_t = 0.2)]
    post_mean: f64,
    /// Frames of linear transition into the failed regime.
    #[arg(long, default_value_t = 0)]
    ramp: usize,
    /// Video i is generated with seed + i.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 30.0)]
    frame_rate: f64,
    /// Response-map grid size.
    #[arg(long, default_value_t = 17)]
    grid: usize,
}

fn run_monitor_cmd(cmd: &MonitorCmd) -> Result<ExitCode> {
    let settings = cmd.test.settings();
    let opts = settings.ingest_options();
    let (samples, bundle_fps) = match (&cmd.bundle, &cmd.input, &cmd.pred, &cmd.gt) {
        (Some(manifest), ..) => {
            let (bundle, samples) = ingest_bundle(manifest, &opts)?;
            (samples, Some(bundle.frame_rate))
        }
        (None, Some(input), ..) => {
            let source = match settings.metric {
                MetricKind::Raw => TraceSource::RawMetric(input.clone()),
                MetricKind::Pc | MetricKind::Cg | MetricKind::Sg => {
                    TraceSource::ResponseMaps(input.clone())
                }
                MetricKind::Ngiou => bail!("metric 'ngiou' reads boxes: use --pred and --gt"),
            };
            (ingest(&source, &opts)?, None)
        }
        (None, None, Some(pred), Some(gt)) => {
            let source = TraceSource::BoxPair {
                pred: pred.clone(),
                gt: gt.clone(),
            };
            (ingest(&source, &opts)?, None)
        }
        _ => bail!("no input: pass --bundle, --input, or --pred with --gt"),
    };
    let frame_rate = cmd.frame_rate.or(bundle_fps);
    let cfg = settings
        .monitor_config(frame_rate)?
        .with_halt(!cmd.keep_going);
    let samples = if cmd.noise_sigma > 0.0 {
        TrialConfig::new(1, cmd.noise_sigma, cmd.seed)?;
        perturb(&samples, cmd.noise_sigma, cmd.seed)
    } else {
        samples
    };

    let mut monitor = Monitor::new(cfg)?;
    let mut events = Vec::with_capacity(samples.len());
    for s in &samples {
        let ev = monitor.step_sample(*s)?;
        events.push(ev);
        if monitor.state().alerted && !cmd.keep_going {
            break;
        }
    }
    if let Some(path) = &cmd.events {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write_events(BufWriter::new(file), &events)?;
    }

    let state = monitor.state();
    match state.stopping_time {
        Some(t) => {
            println!("alert at frame {t} (x = {:.6})", events[t - 1].x);
            Ok(ExitCode::from(EXIT_ALERT))
        }
        None => {
            println!(
                "no alert (frames = {}, final x = {:.6})",
                events.len(),
                state.x
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn run_evaluate_cmd(cmd: &EvaluateCmd) -> Result<ExitCode> {
    let monitor = cmd.test.settings();
    let mut settings = EvaluateSettings::new(monitor);
    if let Some(w) = cmd.w_gt {
        settings.w_gt = FrameWindow::Frames(w);
    } else if let Some(s) = cmd.w_gt_seconds {
        settings.w_gt = FrameWindow::Seconds(s);
    }
    settings.trials = TrialConfig::new(cmd.trials, cmd.noise_sigma, cmd.seed)?;

    let report = trackwatch::io::evaluate_dir(&cmd.dir, &settings)?;
    let window = match monitor.window {
        FrameWindow::Frames(n) => n.to_string(),
        FrameWindow::Seconds(s) => format!("{s}s"),
        FrameWindow::Unbounded => "unbounded".into(),
    };
    let tags = [
        ("metric", monitor.metric.to_string()),
        ("betting", monitor.strategy.name().to_string()),
        ("window", window),
    ];
    write_report(&cmd.out, &report, &settings, &tags)?;

    let fmt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.3}"));
    println!(
        "videos {} x trials {}: FPR {:.4}, TP {:.4}, miss {:.4}, ADD {} ± {}",
        report.n_videos,
        report.n_trials,
        report.fpr,
        report.tp_rate,
        report.miss_rate,
        fmt(report.add_mean),
        fmt(report.add_std),
    );
    Ok(ExitCode::SUCCESS)
}

fn run_simulate_cmd(cmd: &SimulateCmd) -> Result<ExitCode> {
    std::fs::create_dir_all(&cmd.out).with_context(|| format!("creating {}", cmd.out.display()))?;
    let width = cmd.videos.saturating_sub(1).to_string().len().max(3);
    for i in 0..cmd.videos {
        let mut spec = StreamSpec::null(
            cmd.length,
            cmd.null_mean,
            cmd.spread,
            cmd.seed.wrapping_add(i as u64),
        );
        if let Some(f) = cmd.failure_at {
            spec = spec.with_failure(f, cmd.post_mean, cmd.ramp);
        }
        let id = format!("video{i:0width$}");
        let files = match cmd.kind {
            SimKind::Raw => {
                let name = format!("{id}.csv");
                write_metric_csv(&cmd.out.join(&name), &generate_stream(&spec)?)?;
                TraceFiles::RawMetric {
                    metric: name.into(),
                }
            }
            SimKind::Maps => {
                let name = format!("{id}.maps.jsonl");
                write_response_maps(
                    &cmd.out.join(&name),
                    &generate_response_maps(&spec, cmd.grid, cmd.grid)?,
                )?;
                TraceFiles::ResponseMaps { maps: name.into() }
            }
        };
        TraceBundle::new(&id, cmd.frame_rate, files).write(&bundle_path(&cmd.out, &id))?;
    }
    println!("wrote {} bundle(s) to {}", cmd.videos, cmd.out.display());
    Ok(ExitCode::SUCCESS)
}

fn bundle_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}{BUNDLE_SUFFIX}"))
}

fn main() -> ExitCode {
    // clap's own failure status (2) would collide with the alert status.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Monitor(cmd) => run_monitor_cmd(cmd),
        Command::Evaluate(cmd) => run_evaluate_cmd(cmd),
        Command::Simulate(cmd) => run_simulate_cmd(cmd),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
