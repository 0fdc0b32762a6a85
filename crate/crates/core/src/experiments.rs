//! Monte Carlo harnesses: empirical test size, power against a scaled
//! alternative, and the same-target resampling experiment on real regions.
//!
//! Replication `j` of sample size index `i` always draws from
//! `seed.derive(i).derive(j)`, so results do not depend on the thread count.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{estimate, LooksMode, MLEstimate};
use crate::hypotests::{decide, two_sample_from_estimates, Method, TestOptions, TestResult};
use crate::model::{MatrixSample, RngSeed, WishartParams, WishartSampler};

/// Replications used by the published experiments.
pub const DEFAULT_REPLICATIONS: usize = 5500;
/// Replications of the quick desk-scale presets.
pub const DESK_REPLICATIONS: usize = 500;

const WILSON_Z95: f64 = 1.959_963_984_540_054;

fn default_replications() -> usize {
    DEFAULT_REPLICATIONS
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizeExperimentConfig {
    pub theta: WishartParams,
    pub sample_sizes: Vec<usize>,
    pub levels: Vec<f64>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Defaults to the known looks of `theta`.
    #[serde(default)]
    pub looks_mode: Option<LooksMode>,
    #[serde(default)]
    pub options: TestOptions,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerExperimentConfig {
    pub theta: WishartParams,
    /// The second sample is drawn from `(Σ(1 + k), L)`.
    pub contrasts: Vec<f64>,
    pub sample_sizes: Vec<usize>,
    pub level: f64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub looks_mode: Option<LooksMode>,
    #[serde(default)]
    pub options: TestOptions,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionPairing {
    /// Both subsets come from the same region.
    #[default]
    SameRegion,
    /// The two subsets come from two distinct regions.
    CrossRegion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SameTargetConfig {
    pub sample_sizes: Vec<usize>,
    pub levels: Vec<f64>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    pub looks_mode: LooksMode,
    #[serde(default)]
    pub pairing: RegionPairing,
    #[serde(default)]
    pub options: TestOptions,
    #[serde(default)]
    pub seed: u64,
}

/// One cell of a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub method: Method,
    pub sample_size: usize,
    /// Level `α` for size runs, contrast `k` for power runs.
    pub level_or_k: f64,
    pub rejections: usize,
    pub replications: usize,
    pub rate: f64,
    pub mean_stat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
}

pub const CSV_HEADER: &str = "method,N,level_or_k,rate,mean_stat,ci_lo,ci_hi";

impl ExperimentReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.method, r.sample_size, r.level_or_k, r.rate, r.mean_stat, r.ci_lo, r.ci_hi
            );
        }
        out
    }

    pub fn find(&self, method: Method, sample_size: usize, level_or_k: f64) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.sample_size == sample_size && r.level_or_k == level_or_k)
    }
}

/// Wilson score interval at 95% for `successes` out of `trials`.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = WILSON_Z95 * WILSON_Z95;
    let denom = 1.0 + z2 / n;
    let centre = (phat + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z95 * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0).min(phat), (centre + half).min(1.0).max(phat))
}

fn check_common(sample_sizes: &[usize], replications: usize, methods: &[Method]) -> Result<()> {
    if replications == 0 {
        return Err(Error::domain("replications must be at least 1"));
    }
    if sample_sizes.is_empty() || sample_sizes.iter().any(|&n| n < 2) {
        return Err(Error::domain("sample sizes must be at least 2"));
    }
    if methods.is_empty() {
        return Err(Error::domain("no methods requested"));
    }
    Ok(())
}

fn check_levels(levels: &[f64]) -> Result<()> {
    if levels.is_empty() || levels.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
        return Err(Error::domain("levels must lie in (0, 1)"));
    }
    Ok(())
}

/// Results of one replication, one entry per method.
type Outcome = Vec<TestResult>;

fn evaluate(methods: &[Method], a: &MLEstimate, b: &MLEstimate, mode: LooksMode, opts: &TestOptions) -> Result<Outcome> {
    methods
        .iter()
        .map(|&m| two_sample_from_estimates(m, a, b, mode, opts))
        .collect()
}

fn run_replications<F>(replications: usize, seed: RngSeed, unit: F) -> Result<Vec<Outcome>>
where
    F: Fn(RngSeed) -> Result<Outcome> + Sync,
{
    (0..replications as u64).into_par_iter().map(|j| unit(seed.derive(j))).collect()
}

fn summarize(outcomes: &[Outcome], methods: &[Method], sample_size: usize, tag: f64, level: f64, rows: &mut Vec<ReportRow>) {
    let t = outcomes.len();
    for (mi, &method) in methods.iter().enumerate() {
        // Sequential sums in replication order keep the mean bit-reproducible.
        let mut rejections = 0;
        let mut sum = 0.0;
        for o in outcomes {
            sum += o[mi].statistic;
            if decide(&o[mi], level) {
                rejections += 1;
            }
        }
        let (ci_lo, ci_hi) = wilson_interval(rejections, t);
        rows.push(ReportRow {
            method,
            sample_size,
            level_or_k: tag,
            rejections,
            replications: t,
            rate: rejections as f64 / t as f64,
            mean_stat: sum / t as f64,
            ci_lo,
            ci_hi,
        });
    }
}

/// Two independent draws from `x` and `y` per replication; shared by size and power.
fn two_population_outcomes(
    x: &WishartSampler,
    y: &WishartSampler,
    n: usize,
    replications: usize,
    seed: RngSeed,
    methods: &[Method],
    mode: LooksMode,
    opts: &TestOptions,
) -> Result<Vec<Outcome>> {
    run_replications(replications, seed, |s| {
        let mut rng = s.rng();
        let a = x.sample(n, &mut rng)?;
        let b = y.sample(n, &mut rng)?;
        evaluate(methods, &estimate(&a, mode)?, &estimate(&b, mode)?, mode, opts)
    })
}

/// Empirical test size `C/T` per method, sample size and level.
pub fn run_size_experiment(cfg: &SizeExperimentConfig) -> Result<ExperimentReport> {
    check_common(&cfg.sample_sizes, cfg.replications, &cfg.methods)?;
    check_levels(&cfg.levels)?;
    let mode = cfg.looks_mode.unwrap_or(LooksMode::Known(cfg.theta.looks()));
    let sampler = WishartSampler::new(&cfg.theta)?;
    let mut rows = Vec::new();
    for (i, &n) in cfg.sample_sizes.iter().enumerate() {
        let seed = RngSeed(cfg.seed).derive(i as u64);
        let outcomes = two_population_outcomes(&sampler, &sampler, n, cfg.replications, seed, &cfg.methods, mode, &cfg.options)?;
        for &level in &cfg.levels {
            summarize(&outcomes, &cfg.methods, n, level, level, &mut rows);
        }
    }
    Ok(ExperimentReport { rows })
}

/// Empirical power `1 − η` against `(Σ(1 + k), L)` per method, sample size and contrast.
///
/// Every contrast reuses the same random stream, so `k = 0` reproduces the
/// size experiment with the same seed exactly.
pub fn run_power_experiment(cfg: &PowerExperimentConfig) -> Result<ExperimentReport> {
    check_common(&cfg.sample_sizes, cfg.replications, &cfg.methods)?;
    check_levels(&[cfg.level])?;
    if cfg.contrasts.is_empty() || cfg.contrasts.iter().any(|k| !(*k > -1.0) || !k.is_finite()) {
        return Err(Error::domain("contrasts must exceed -1"));
    }
    let mode = cfg.looks_mode.unwrap_or(LooksMode::Known(cfg.theta.looks()));
    let x = WishartSampler::new(&cfg.theta)?;
    let mut rows = Vec::new();
    for (i, &n) in cfg.sample_sizes.iter().enumerate() {
        let seed = RngSeed(cfg.seed).derive(i as u64);
        for &k in &cfg.contrasts {
            let y = WishartSampler::new(&cfg.theta.scaled(1.0 + k)?)?;
            let outcomes = two_population_outcomes(&x, &y, n, cfg.replications, seed, &cfg.methods, mode, &cfg.options)?;
            summarize(&outcomes, &cfg.methods, n, k, cfg.level, &mut rows);
        }
    }
    Ok(ExperimentReport { rows })
}

/// Resampling experiment on regions believed to hold a single target: draw
/// two disjoint subsets of size `N`, test, and count rejections.
pub fn run_same_target_experiment(regions: &[MatrixSample], cfg: &SameTargetConfig) -> Result<ExperimentReport> {
    check_common(&cfg.sample_sizes, cfg.replications, &cfg.methods)?;
    check_levels(&cfg.levels)?;
    if regions.is_empty() {
        return Err(Error::EmptySample);
    }
    let dim = regions[0].dim();
    if let Some(r) = regions.iter().find(|r| r.dim() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, found: r.dim() });
    }
    let max_n = *cfg.sample_sizes.iter().max().unwrap_or(&0);
    let smallest = regions.iter().map(|r| r.len()).min().unwrap_or(0);
    match cfg.pairing {
        RegionPairing::SameRegion if smallest < 2 * max_n => {
            return Err(Error::RegionTooSmall {
                needed: 2 * max_n,
                available: smallest,
            })
        }
        RegionPairing::CrossRegion if regions.len() < 2 => {
            return Err(Error::domain("cross-region pairing needs at least two regions"))
        }
        RegionPairing::CrossRegion if smallest < max_n => {
            return Err(Error::RegionTooSmall {
                needed: max_n,
                available: smallest,
            })
        }
        _ => {}
    }

    let subset = |region: &MatrixSample, idx: &[usize]| -> Result<MatrixSample> {
        MatrixSample::new(idx.iter().map(|&i| region.observations()[i].clone()).collect())
    };
    let mut rows = Vec::new();
    for (i, &n) in cfg.sample_sizes.iter().enumerate() {
        let seed = RngSeed(cfg.seed).derive(i as u64);
        let outcomes = run_replications(cfg.replications, seed, |s| {
            let mut rng = s.rng();
            let (a, b) = match cfg.pairing {
                RegionPairing::SameRegion => {
                    let region = &regions[rng.gen_range(0..regions.len())];
                    let mut idx: Vec<usize> = (0..region.len()).collect();
                    idx.shuffle(&mut rng);
                    (subset(region, &idx[..n])?, subset(region, &idx[n..2 * n])?)
                }
                RegionPairing::CrossRegion => {
                    let u = rng.gen_range(0..regions.len());
                    let v = (u + rng.gen_range(1..regions.len())) % regions.len();
                    let mut pick = |region: &MatrixSample| {
                        let mut idx: Vec<usize> = (0..region.len()).collect();
                        idx.shuffle(&mut rng);
                        subset(region, &idx[..n])
                    };
                    (pick(&regions[u])?, pick(&regions[v])?)
                }
            };
            evaluate(&cfg.methods, &estimate(&a, cfg.looks_mode)?, &estimate(&b, cfg.looks_mode)?, cfg.looks_mode, &cfg.options)
        })?;
        for &level in &cfg.levels {
            summarize(&outcomes, &cfg.methods, n, level, level, &mut rows);
        }
    }
    Ok(ExperimentReport { rows })
}
