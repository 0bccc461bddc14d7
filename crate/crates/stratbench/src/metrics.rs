//! Run metrics: Best Found (final best-seen value) and Area Under Curve
//! (mean gap between the best-seen trace and the function's lower bound).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Running maximum of observed values, one entry per evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestSeenTrace(Vec<f64>);

impl BestSeenTrace {
    /// Wrap an existing nondecreasing trace.
    pub fn try_new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("trace must be nonempty".into()));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidArgument("trace contains NaN".into()));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument("trace must be nondecreasing".into()));
        }
        Ok(BestSeenTrace(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction requires nonempty
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricPair {
    pub best_found: f64,
    pub auc: f64,
}

/// Running maximum of a raw value sequence.
pub fn best_seen(raw: &[f64]) -> Result<BestSeenTrace> {
    if raw.is_empty() {
        return Err(Error::InvalidArgument("best_seen needs a nonempty sequence".into()));
    }
    if raw.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("best_seen input contains NaN".into()));
    }
    let mut out = Vec::with_capacity(raw.len());
    let mut best = f64::NEG_INFINITY;
    for &v in raw {
        best = best.max(v);
        out.push(best);
    }
    Ok(BestSeenTrace(out))
}

pub fn best_found(trace: &BestSeenTrace) -> f64 {
    *trace.values().last().expect("trace is nonempty")
}

/// Mean of (f_best[i] - f_lb) over the trace. Positive for any valid f_lb.
pub fn auc(trace: &BestSeenTrace, f_lb: f64) -> Result<f64> {
    mean_gap(trace.values(), f_lb)
}

fn mean_gap(values: &[f64], f_lb: f64) -> Result<f64> {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if f_lb > min {
        return Err(Error::InvalidArgument(format!(
            "f_lb {f_lb} exceeds a trace value {min}"
        )));
    }
    let mean = values.iter().map(|v| v - f_lb).sum::<f64>() / values.len() as f64;
    // the mean of the gaps lies between the extreme gaps; the clamp only
    // strips accumulated rounding, which otherwise leaks past the ends for
    // near-constant traces
    Ok(mean.clamp(min - f_lb, max - f_lb))
}

/// Metrics for one run under the noisy-scoring convention: the incumbent at
/// step i is the earliest point with the highest observed value among the
/// first i, and the trace records the incumbent's true value. For noiseless
/// runs this reduces to best_seen over the true values.
pub fn run_metrics(observed: &[f64], true_values: &[f64], f_lb: f64) -> Result<MetricPair> {
    if observed.is_empty() || observed.len() != true_values.len() {
        return Err(Error::InvalidArgument(format!(
            "run_metrics needs matching nonempty sequences, got {} observed / {} true",
            observed.len(),
            true_values.len()
        )));
    }
    let trace = incumbent_true_trace(observed, true_values);
    let auc = mean_gap(&trace, f_lb)?;
    Ok(MetricPair { best_found: *trace.last().expect("nonempty"), auc })
}

/// True values of the running observed-value incumbent. Not necessarily
/// nondecreasing when observations are noisy.
pub fn incumbent_true_trace(observed: &[f64], true_values: &[f64]) -> Vec<f64> {
    let mut best_obs = f64::NEG_INFINITY;
    let mut incumbent_true = f64::NEG_INFINITY;
    let mut out = Vec::with_capacity(observed.len());
    for (&o, &t) in observed.iter().zip(true_values) {
        if o > best_obs {
            best_obs = o;
            incumbent_true = t;
        }
        out.push(incumbent_true);
    }
    out
}
