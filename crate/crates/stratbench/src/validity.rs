//! Diagnostics for the statistical footing of the benchmark: the
//! order-statistic distribution of random-search outcomes, exact moments and
//! the Berry-Esseen quotient for the uniform case, and a Kolmogorov-Smirnov
//! experiment measuring how non-normal sample means of best-found values are.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal as GaussDist};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::rngutil::child_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailMode {
    Maximize,
    Minimize,
}

/// The T-th order statistic of T uniform draws on the unit interval: the
/// distribution of the best value random search finds after T evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrderStatSpec {
    pub t: u32,
    pub mode: TailMode,
}

impl OrderStatSpec {
    pub fn new(t: u32, mode: TailMode) -> Result<Self> {
        if t < 1 {
            return Err(Error::InvalidArgument("T must be >= 1".into()));
        }
        Ok(Self { t, mode })
    }

    pub fn maximize(t: u32) -> Result<Self> {
        Self::new(t, TailMode::Maximize)
    }
}

/// CDF of the extreme of T uniform draws: y^T when maximizing,
/// 1 - (1-y)^T when minimizing.
pub fn order_stat_cdf(spec: &OrderStatSpec, y: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::InvalidArgument(format!("y {y} outside [0,1]")));
    }
    let t = spec.t as i32;
    Ok(match spec.mode {
        TailMode::Maximize => y.powi(t),
        TailMode::Minimize => 1.0 - (1.0 - y).powi(t),
    })
}

/// Inverse of order_stat_cdf on [0,1].
pub fn order_stat_quantile(spec: &OrderStatSpec, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("p {p} outside [0,1]")));
    }
    let texp = 1.0 / spec.t as f64;
    Ok(match spec.mode {
        TailMode::Maximize => p.powf(texp),
        TailMode::Minimize => 1.0 - (1.0 - p).powf(texp),
    })
}

/// Draw from the order-statistic distribution by inverse-CDF sampling.
pub fn sample_order_stat<R: Rng + ?Sized>(spec: &OrderStatSpec, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    let texp = 1.0 / spec.t as f64;
    match spec.mode {
        TailMode::Maximize => u.powf(texp),
        TailMode::Minimize => 1.0 - u.powf(texp),
    }
}

/// Central moments of the maximizing order statistic, exact in T.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerryEsseenMoments {
    pub mean: f64,
    pub variance: f64,
    /// Third absolute central moment E|V|^3.
    pub rho: f64,
    pub quotient: f64,
}

pub fn be_moments(t: u32) -> Result<BerryEsseenMoments> {
    if t < 1 {
        return Err(Error::InvalidArgument("T must be >= 1".into()));
    }
    let t = t as f64;
    let mean = t / (t + 1.0);
    let variance = t / ((t + 1.0) * (t + 1.0) * (t + 2.0));
    let tp1 = t + 1.0;
    let rho = -2.0 * t * (t - 1.0) / (tp1.powi(3) * (t + 2.0) * (t + 3.0))
        + 12.0 * (t / tp1).powf(t) * t.powi(3) / (tp1.powi(4) * (t + 2.0) * (t + 3.0));
    let quotient = rho / variance.powf(1.5);
    Ok(BerryEsseenMoments { mean, variance, rho, quotient })
}

/// rho / sigma^3 in a directly simplified closed form. Kept as a separate
/// computation path from be_moments so the two cross-check each other.
pub fn be_quotient(t: u32) -> Result<f64> {
    if t < 1 {
        return Err(Error::InvalidArgument("T must be >= 1".into()));
    }
    let t = t as f64;
    let tp1 = t + 1.0;
    Ok((t + 2.0).sqrt() / (t + 3.0)
        * (-2.0 * (t - 1.0) / t.sqrt() + 12.0 * (t / tp1).powf(t) * t.powf(1.5) / tp1))
}

/// Two-sided KS distance between the sample and a reference CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::InvalidArgument("sample must be nonempty".into()));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("comparable values"));
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in sorted.iter().enumerate() {
        let f = cdf(*x);
        let hi = (i + 1) as f64 / n - f;
        let lo = f - i as f64 / n;
        d = d.max(hi.abs()).max(lo.abs());
    }
    Ok(d)
}

// Exact 5% two-sided critical values for n = 1..=34; the asymptotic
// 1.358/sqrt(n) takes over afterwards.
const KS_CRIT_05: [f64; 34] = [
    0.97500, 0.84189, 0.70760, 0.62394, 0.56328, 0.51926, 0.48342, 0.45427, 0.43001, 0.40925,
    0.39122, 0.37543, 0.36143, 0.34890, 0.33760, 0.32733, 0.31796, 0.30936, 0.30143, 0.29408,
    0.28724, 0.28087, 0.27490, 0.26931, 0.26404, 0.25907, 0.25438, 0.24993, 0.24571, 0.24170,
    0.23788, 0.23424, 0.23076, 0.22743,
];

/// Critical KS distance at significance 0.05.
pub fn ks_critical_value_05(n: usize) -> f64 {
    assert!(n >= 1, "need a nonempty sample");
    if n <= KS_CRIT_05.len() {
        KS_CRIT_05[n - 1]
    } else {
        1.358 / (n as f64).sqrt()
    }
}

pub fn ks_rejects_05(d: f64, n: usize) -> bool {
    d > ks_critical_value_05(n)
}

/// How standardized sample means are centered and scaled before the KS test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Standardization {
    /// Known mean T/(T+1) and known variance/n. Exact null.
    Analytic,
    /// Per-test sample mean and standard deviation. Comparison mode; the
    /// unadjusted critical values make this conservative.
    Estimated,
}

/// What the per-draw values are.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NullSource {
    OrderStatistic,
    /// Gaussian draws with the matching mean/variance; calibration control.
    NormalControl,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KsExperimentConfig {
    pub t_values: Vec<u32>,
    pub n_values: Vec<u32>,
    pub tests_per_cell: u32,
    pub samples_per_test: u32,
    pub standardization: Standardization,
    pub source: NullSource,
}

impl KsExperimentConfig {
    pub fn new(t_values: Vec<u32>, n_values: Vec<u32>, tests_per_cell: u32, samples_per_test: u32) -> Self {
        Self {
            t_values,
            n_values,
            tests_per_cell,
            samples_per_test,
            standardization: Standardization::Analytic,
            source: NullSource::OrderStatistic,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.t_values.is_empty() || self.n_values.is_empty() {
            return Err(Error::InvalidArgument("need at least one T and one n".into()));
        }
        if self.t_values.iter().any(|&t| t < 1) || self.n_values.iter().any(|&n| n < 1) {
            return Err(Error::InvalidArgument("T and n values must be >= 1".into()));
        }
        if self.tests_per_cell < 1 || self.samples_per_test < 1 {
            return Err(Error::InvalidArgument("counts must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KsCell {
    pub t: u32,
    pub n: u32,
    pub tests: u32,
    pub rejections: u32,
}

impl KsCell {
    pub fn rejection_rate(&self) -> f64 {
        self.rejections as f64 / self.tests as f64
    }
}

fn run_cell(t: u32, n: u32, config: &KsExperimentConfig, seed: u64) -> KsCell {
    let spec = OrderStatSpec { t, mode: TailMode::Maximize };
    let moments = be_moments(t).expect("validated T");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gauss = GaussDist::new(moments.mean, moments.variance.sqrt()).expect("positive sd");
    let se = (moments.variance / n as f64).sqrt();
    let normal_cdf = {
        use statrs::distribution::{ContinuousCDF, Normal};
        let std = Normal::new(0.0, 1.0).expect("unit normal");
        move |z: f64| std.cdf(z)
    };
    let mut rejections = 0;
    for _ in 0..config.tests_per_cell {
        let mut means = Vec::with_capacity(config.samples_per_test as usize);
        for _ in 0..config.samples_per_test {
            let mut acc = 0.0;
            for _ in 0..n {
                acc += match config.source {
                    NullSource::OrderStatistic => sample_order_stat(&spec, &mut rng),
                    NullSource::NormalControl => gauss.sample(&mut rng),
                };
            }
            means.push(acc / n as f64);
        }
        let standardized: Vec<f64> = match config.standardization {
            Standardization::Analytic => {
                means.iter().map(|m| (m - moments.mean) / se).collect()
            }
            Standardization::Estimated => {
                let k = means.len() as f64;
                let m_hat = means.iter().sum::<f64>() / k;
                let s_hat = if means.len() > 1 {
                    (means.iter().map(|m| (m - m_hat) * (m - m_hat)).sum::<f64>() / (k - 1.0))
                        .sqrt()
                } else {
                    0.0
                };
                if s_hat == 0.0 {
                    means.iter().map(|_| 0.0).collect()
                } else {
                    means.iter().map(|m| (m - m_hat) / s_hat).collect()
                }
            }
        };
        let d = ks_statistic(&standardized, &normal_cdf).expect("nonempty");
        if ks_rejects_05(d, standardized.len()) {
            rejections += 1;
        }
    }
    KsCell { t, n, tests: config.tests_per_cell, rejections }
}

/// Rejection-rate grid over (T, n) cells. Cells run in parallel on hashed
/// per-cell seed streams, so the grid is reproducible for a given seed
/// regardless of thread schedule.
pub fn ks_normality_experiment(config: &KsExperimentConfig, seed: u64) -> Result<Vec<KsCell>> {
    config.validate()?;
    let cells: Vec<(u32, u32)> = config
        .t_values
        .iter()
        .flat_map(|&t| config.n_values.iter().map(move |&n| (t, n)))
        .collect();
    Ok(cells
        .into_par_iter()
        .map(|(t, n)| {
            let cell_seed = child_seed(seed, ((t as u64) << 32) | n as u64);
            run_cell(t, n, config, cell_seed)
        })
        .collect())
}

pub fn cells_to_csv(cells: &[KsCell]) -> String {
    let mut out = String::from("T,n,tests,rejections,rejection_rate\n");
    for c in cells {
        let _ = writeln!(out, "{},{},{},{},{}", c.t, c.n, c.tests, c.rejections, c.rejection_rate());
    }
    out
}
