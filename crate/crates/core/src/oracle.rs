//! Evaluation protocol: heuristic ground-truth failure times, noise-randomized
//! repetitions of each video and FPR / ADD aggregation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eprocess::{stopping_time, MonitorConfig};
use crate::error::{Error, Result};
use crate::stream::{EmaSmoother, MetricSample};

pub const DEFAULT_NOISE_SIGMA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub epsilon: f64,
    /// Consecutive sub-tolerance frames required to call a failure.
    pub w_gt: usize,
}

impl OracleConfig {
    pub fn new(epsilon: f64, w_gt: usize) -> Result<Self> {
        if w_gt == 0 {
            return Err(Error::config("w_gt must be at least 1"));
        }
        Ok(Self { epsilon, w_gt })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub n_trials: usize,
    pub noise_sigma: f64,
    /// Trial `j` (0-based) draws its noise from seed `base_seed + j`.
    pub base_seed: u64,
}

impl TrialConfig {
    pub fn new(n_trials: usize, noise_sigma: f64, base_seed: u64) -> Result<Self> {
        if n_trials == 0 {
            return Err(Error::config("at least one trial is required"));
        }
        if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
            return Err(Error::config(format!(
                "noise sigma must be a finite non-negative number, got {noise_sigma}"
            )));
        }
        Ok(Self {
            n_trials,
            noise_sigma,
            base_seed,
        })
    }
}

/// First frame `t` such that frames `t .. t + w_gt − 1` are all below `ε`.
/// Returns the last frame index `T` when no such run exists.
pub fn ground_truth_failure(stream: &[MetricSample], cfg: &OracleConfig) -> Result<usize> {
    let last = stream
        .last()
        .ok_or_else(|| Error::Empty("ground truth needs a non-empty stream".into()))?;
    let mut run = 0usize;
    for (i, s) in stream.iter().enumerate() {
        if s.value < cfg.epsilon {
            run += 1;
            if run == cfg.w_gt {
                return Ok(stream[i + 1 - cfg.w_gt].t);
            }
        } else {
            run = 0;
        }
    }
    Ok(last.t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// Alert strictly before the ground-truth failure.
    FalsePositive,
    /// Alert at or after the ground-truth failure.
    TruePositive,
    /// No alert although the video fails.
    Miss,
    /// No alert and no failure.
    CorrectNegative,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::FalsePositive => "false_positive",
            Outcome::TruePositive => "true_positive",
            Outcome::Miss => "miss",
            Outcome::CorrectNegative => "correct_negative",
        }
    }
}

pub fn classify(tau_hat: Option<usize>, tau_gt: usize, last_frame: usize) -> Outcome {
    match tau_hat {
        Some(t) if t < tau_gt => Outcome::FalsePositive,
        Some(_) => Outcome::TruePositive,
        None if tau_gt < last_frame => Outcome::Miss,
        None => Outcome::CorrectNegative,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub tau_hat: Option<usize>,
    pub outcome: Outcome,
}

impl TrialResult {
    pub fn delay(&self, tau_gt: usize) -> Option<usize> {
        match (self.outcome, self.tau_hat) {
            (Outcome::TruePositive, Some(t)) => Some(t - tau_gt),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoTrials {
    pub video_id: String,
    pub tau_gt: usize,
    /// Last frame index `T`.
    pub length: usize,
    pub trials: Vec<TrialResult>,
}

/// Adds `N(0, σ²)` noise to each value and clips to `[0, 1]`.
pub fn perturb(stream: &[MetricSample], sigma: f64, seed: u64) -> Vec<MetricSample> {
    if sigma == 0.0 {
        return stream.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).expect("sigma validated as finite and non-negative");
    stream
        .iter()
        .map(|s| MetricSample {
            t: s.t,
            value: (s.value + noise.sample(&mut rng)).clamp(0.0, 1.0),
        })
        .collect()
}

/// Runs `n_trials` noisy repetitions of one video. The ground-truth time is
/// computed once, on the unperturbed smoothed stream.
pub fn run_trials(
    video_id: &str,
    video: &[MetricSample],
    monitor_cfg: &MonitorConfig,
    oracle_cfg: &OracleConfig,
    trial_cfg: &TrialConfig,
) -> Result<VideoTrials> {
    monitor_cfg.validate()?;
    let smoothed = EmaSmoother::smooth_stream(monitor_cfg.smoothing_factor, video)?;
    let tau_gt = ground_truth_failure(&smoothed, oracle_cfg)?;
    let length = video.last().map(|s| s.t).unwrap_or(0);

    let trials = (0..trial_cfg.n_trials)
        .into_par_iter()
        .map(|j| {
            let seed = trial_cfg.base_seed.wrapping_add(j as u64);
            let noisy = perturb(video, trial_cfg.noise_sigma, seed);
            let tau_hat = stopping_time(&noisy, monitor_cfg)?;
            Ok(TrialResult {
                trial: j,
                tau_hat,
                outcome: classify(tau_hat, tau_gt, length),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(VideoTrials {
        video_id: video_id.to_string(),
        tau_gt,
        length,
        trials,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub n_videos: usize,
    pub n_trials: usize,
    pub fpr: f64,
    pub tp_rate: f64,
    pub miss_rate: f64,
    pub correct_negative_rate: f64,
    /// Mean detection delay over true positives; absent without any.
    pub add_mean: Option<f64>,
    /// Population standard deviation of the same delays.
    pub add_std: Option<f64>,
    pub n_true_positives: usize,
    pub per_video: Vec<VideoTrials>,
}

/// Pools all video × trial pairs into FPR, outcome rates and ADD.
pub fn aggregate(results: Vec<VideoTrials>) -> Result<EvaluationReport> {
    if results.is_empty() {
        return Err(Error::Empty("aggregate needs at least one video".into()));
    }
    let n_trials = results[0].trials.len();
    let mut counts = [0usize; 4];
    let mut delays = Vec::new();
    let mut total = 0usize;
    for video in &results {
        for trial in &video.trials {
            total += 1;
            let slot = match trial.outcome {
                Outcome::FalsePositive => 0,
                Outcome::TruePositive => 1,
                Outcome::Miss => 2,
                Outcome::CorrectNegative => 3,
            };
            counts[slot] += 1;
            if let Some(d) = trial.delay(video.tau_gt) {
                delays.push(d as f64);
            }
        }
    }
    if total == 0 {
        return Err(Error::Empty("no trials to aggregate".into()));
    }
    let rate = |c: usize| c as f64 / total as f64;
    let (add_mean, add_std) = if delays.is_empty() {
        (None, None)
    } else {
        let n = delays.len() as f64;
        let mean = delays.iter().sum::<f64>() / n;
        let var = delays.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
        (Some(mean), Some(var.sqrt()))
    };
    Ok(EvaluationReport {
        n_videos: results.len(),
        n_trials,
        fpr: rate(counts[0]),
        tp_rate: rate(counts[1]),
        miss_rate: rate(counts[2]),
        correct_negative_rate: rate(counts[3]),
        add_mean,
        add_std,
        n_true_positives: counts[1],
        per_video: results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::betting::BettingStrategy;
    use crate::stream::samples_from_values;
    use proptest::prelude::*;

    fn oracle(eps: f64, w: usize) -> OracleConfig {
        OracleConfig::new(eps, w).unwrap()
    }

    fn video(tau_gt: usize, length: usize, hats: &[Option<usize>]) -> VideoTrials {
        VideoTrials {
            video_id: "v".into(),
            tau_gt,
            length,
            trials: hats
                .iter()
                .enumerate()
                .map(|(j, &h)| TrialResult {
                    trial: j,
                    tau_hat: h,
                    outcome: classify(h, tau_gt, length),
                })
                .collect(),
        }
    }

    #[test]
    fn ground_truth_examples() {
        let good = samples_from_values(&[0.9; 7]).unwrap();
        assert_eq!(ground_truth_failure(&good, &oracle(0.55, 3)).unwrap(), 7);

        let s = samples_from_values(&[0.9, 0.4, 0.9, 0.4, 0.4, 0.9]).unwrap();
        assert_eq!(ground_truth_failure(&s, &oracle(0.55, 2)).unwrap(), 4);

        let s = samples_from_values(&[0.9, 0.8, 0.6, 0.1, 0.9]).unwrap();
        assert_eq!(ground_truth_failure(&s, &oracle(0.55, 1)).unwrap(), 4);

        assert!(ground_truth_failure(&[], &oracle(0.55, 1)).is_err());
        assert!(OracleConfig::new(0.55, 0).is_err());
    }

    #[test]
    fn run_cut_by_stream_end_is_not_a_failure() {
        let s = samples_from_values(&[0.9, 0.9, 0.1, 0.1]).unwrap();
        assert_eq!(ground_truth_failure(&s, &oracle(0.55, 3)).unwrap(), 4);
    }

    #[test]
    fn classification() {
        assert_eq!(classify(Some(3), 5, 10), Outcome::FalsePositive);
        assert_eq!(classify(Some(5), 5, 10), Outcome::TruePositive);
        assert_eq!(classify(Some(9), 5, 10), Outcome::TruePositive);
        assert_eq!(classify(None, 5, 10), Outcome::Miss);
        assert_eq!(classify(None, 10, 10), Outcome::CorrectNegative);
        assert_eq!(classify(Some(9), 10, 10), Outcome::FalsePositive);
    }

    #[test]
    fn aggregate_examples() {
        let r = aggregate(vec![video(5, 10, &[Some(5)])]).unwrap();
        assert_eq!((r.fpr, r.add_mean, r.add_std), (0.0, Some(0.0), Some(0.0)));

        let r = aggregate(vec![video(5, 10, &[Some(2)]), video(5, 10, &[Some(7)])]).unwrap();
        assert_eq!(r.fpr, 0.5);

        let r = aggregate(vec![video(10, 100, &[Some(15), Some(25)])]).unwrap();
        assert_eq!(r.add_mean, Some(10.0));
        assert_eq!(r.add_std, Some(5.0));

        let r = aggregate(vec![video(10, 10, &[None, None]), video(4, 10, &[None])]).unwrap();
        assert_eq!(r.add_mean, None);
        assert_eq!(r.add_std, None);
        assert!((r.miss_rate - 1.0 / 3.0).abs() < 1e-15);
        assert!((r.correct_negative_rate - 2.0 / 3.0).abs() < 1e-15);

        assert!(aggregate(vec![]).is_err());
    }

    #[test]
    fn zero_noise_trials_are_identical() {
        let mut values = vec![0.8; 60];
        values.extend(vec![0.2; 60]);
        let stream = samples_from_values(&values).unwrap();
        let mcfg = MonitorConfig::new(0.55, 0.1, BettingStrategy::Agrapa);
        let trials = TrialConfig::new(8, 0.0, 42).unwrap();
        let res = run_trials("v", &stream, &mcfg, &oracle(0.55, 10), &trials).unwrap();
        let first = res.trials[0].tau_hat;
        assert!(first.is_some());
        assert!(res.trials.iter().all(|t| t.tau_hat == first));
        assert_eq!(res.tau_gt, 62);
    }

    #[test]
    fn clean_video_without_alerts() {
        let stream = samples_from_values(&[0.9; 80]).unwrap();
        let mcfg = MonitorConfig::new(0.55, 0.1, BettingStrategy::Agrapa);
        let trials = TrialConfig::new(5, 0.01, 1).unwrap();
        let res = run_trials("v", &stream, &mcfg, &oracle(0.55, 5), &trials).unwrap();
        assert_eq!(res.tau_gt, 80);
        let report = aggregate(vec![res]).unwrap();
        assert_eq!(report.fpr, 0.0);
        assert_eq!(report.miss_rate, 0.0);
        assert_eq!(report.correct_negative_rate, 1.0);
    }

    #[test]
    fn trial_config_validation() {
        assert!(TrialConfig::new(0, 0.01, 0).is_err());
        assert!(TrialConfig::new(1, -0.1, 0).is_err());
        assert!(TrialConfig::new(1, f64::NAN, 0).is_err());
    }

    #[test]
    fn perturbation_is_seeded_and_clipped() {
        let stream = samples_from_values(&[0.0, 1.0, 0.5, 0.99]).unwrap();
        let a = perturb(&stream, 0.3, 9);
        assert_eq!(a, perturb(&stream, 0.3, 9));
        assert_ne!(a, perturb(&stream, 0.3, 10));
        assert!(a.iter().all(|s| (0.0..=1.0).contains(&s.value)));
        assert_eq!(perturb(&stream, 0.0, 9), stream);
    }

    proptest! {
        #[test]
        fn raising_epsilon_never_delays_failure(
            values in proptest::collection::vec(0.0f64..=1.0, 1..100),
            eps_lo in 0.05f64..0.9, bump in 0.0f64..0.5, w in 1usize..8,
        ) {
            let s = samples_from_values(&values).unwrap();
            let eps_hi = (eps_lo + bump).min(0.99);
            let lo = ground_truth_failure(&s, &oracle(eps_lo, w)).unwrap();
            let hi = ground_truth_failure(&s, &oracle(eps_hi, w)).unwrap();
            prop_assert!(hi <= lo);
        }

        #[test]
        fn outcomes_are_exhaustive(
            hats in proptest::collection::vec(proptest::option::of(1usize..50), 1..20),
            tau in 1usize..50,
        ) {
            let r = aggregate(vec![video(tau, 50, &hats)]).unwrap();
            let sum = r.fpr + r.tp_rate + r.miss_rate + r.correct_negative_rate;
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }
    }
}
