//! Gaussian process regression backing the EI optimizer: isotropic Matern 5/2
//! kernel, standardized targets, grid-searched hyperparameters, Cholesky
//! factorization with escalating jitter. Observations are treated as
//! noiseless; jitter exists for conditioning only.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub const LEN_SCALE_GRID: usize = 8;
pub const AMPLITUDE_GRID: usize = 5;
const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    /// Signal variance sigma_f^2.
    pub amplitude: f64,
    /// Isotropic length scale.
    pub length_scale: f64,
}

/// Matern 5/2 covariance between two points.
pub fn matern52(x: &[f64], xp: &[f64], params: &KernelParams) -> f64 {
    assert_eq!(x.len(), xp.len(), "dimension mismatch");
    assert!(params.length_scale > 0.0 && params.amplitude > 0.0);
    let r2: f64 = x.iter().zip(xp).map(|(a, b)| (a - b) * (a - b)).sum();
    let s = (5.0 * r2).sqrt() / params.length_scale;
    params.amplitude * (1.0 + s + s * s / 3.0) * (-s).exp()
}

/// Expected improvement of a Gaussian belief (mu, sigma) over the incumbent.
pub fn expected_improvement(mu: f64, sigma: f64, best: f64) -> f64 {
    assert!(sigma >= 0.0, "sigma must be nonnegative");
    if sigma == 0.0 {
        return (mu - best).max(0.0);
    }
    let z = (mu - best) / sigma;
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    ((mu - best) * std.cdf(z) + sigma * std.pdf(z)).max(0.0)
}

/// Fitted GP posterior over standardized targets.
#[derive(Debug, Clone)]
pub struct GpModel {
    x: Vec<Vec<f64>>,
    y_mean: f64,
    y_scale: f64,
    params: KernelParams,
    /// Diagonal boost actually used, in standardized units.
    jitter: f64,
    /// Jittered kernel matrix, kept for residual-corrected variance.
    cov: Option<DMatrix<f64>>,
    /// Lower Cholesky factor of `cov`.
    l: Option<DMatrix<f64>>,
    alpha: DVector<f64>,
    lml: f64,
}

impl GpModel {
    /// Data-free prior: mean zero, variance amplitude everywhere.
    pub fn prior(params: KernelParams) -> Self {
        Self {
            x: Vec::new(),
            y_mean: 0.0,
            y_scale: 1.0,
            params,
            jitter: 0.0,
            cov: None,
            l: None,
            alpha: DVector::zeros(0),
            lml: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn params(&self) -> KernelParams {
        self.params
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn y_scale(&self) -> f64 {
        self.y_scale
    }

    pub fn y_mean(&self) -> f64 {
        self.y_mean
    }

    /// Log marginal likelihood of the standardized targets under the fitted
    /// hyperparameters.
    pub fn lml(&self) -> f64 {
        self.lml
    }
}

fn standardize(y: &[f64]) -> (Vec<f64>, f64, f64) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    let scale = if sd > 0.0 { sd } else { 1.0 };
    (y.iter().map(|v| (v - mean) / scale).collect(), mean, scale)
}

fn kernel_matrix(x: &[Vec<f64>], params: &KernelParams, jitter: f64) -> DMatrix<f64> {
    let n = x.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = matern52(&x[i], &x[j], params);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
        k[(i, i)] += jitter;
    }
    k
}

fn fit_standardized(
    x: &[Vec<f64>],
    y_std: &[f64],
    params: KernelParams,
) -> Result<(DMatrix<f64>, DMatrix<f64>, DVector<f64>, f64, f64)> {
    let n = x.len();
    let y = DVector::from_column_slice(y_std);
    let mut rel = JITTER_START;
    loop {
        let jitter = rel * params.amplitude;
        let cov = kernel_matrix(x, &params, jitter);
        if let Some(chol) = nalgebra::Cholesky::new(cov.clone()) {
            let alpha = chol.solve(&y);
            let l = chol.unpack();
            let log_det_half: f64 = l.diagonal().iter().map(|d| d.ln()).sum();
            let lml = -0.5 * y.dot(&alpha)
                - log_det_half
                - n as f64 / 2.0 * (2.0 * std::f64::consts::PI).ln();
            return Ok((cov, l, alpha, lml, jitter));
        }
        rel *= 10.0;
        if rel > JITTER_MAX * 1.0001 {
            return Err(Error::Numerical(format!(
                "covariance not positive definite at jitter {}",
                JITTER_MAX * params.amplitude
            )));
        }
    }
}

/// Fit with fixed hyperparameters (targets still standardized, jitter still
/// escalated on factorization failure).
pub fn gp_fit_with(x: &[Vec<f64>], y: &[f64], params: KernelParams) -> Result<GpModel> {
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::InvalidArgument(
            "need equally many inputs and targets, at least one".into(),
        ));
    }
    let (y_std, y_mean, y_scale) = standardize(y);
    let (cov, l, alpha, lml, jitter) = fit_standardized(x, &y_std, params)?;
    Ok(GpModel {
        x: x.to_vec(),
        y_mean,
        y_scale,
        params,
        jitter,
        cov: Some(cov),
        l: Some(l),
        alpha,
        lml,
    })
}

fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|k| lo * (hi / lo).powf(k as f64 / (count - 1) as f64))
        .collect()
}

pub(crate) fn param_grid(
    diagonal: f64,
    len_span: (f64, f64),
    amp_span: (f64, f64),
    y_var: f64,
) -> Vec<KernelParams> {
    let v = if y_var > 0.0 { y_var } else { 1.0 };
    let mut grid = Vec::with_capacity(LEN_SCALE_GRID * AMPLITUDE_GRID);
    for ls in log_spaced(len_span.0 * diagonal, len_span.1 * diagonal, LEN_SCALE_GRID) {
        for amp in log_spaced(amp_span.0 * v, amp_span.1 * v, AMPLITUDE_GRID) {
            grid.push(KernelParams { amplitude: amp, length_scale: ls });
        }
    }
    grid
}

/// Fit targets at the inputs, selecting (length scale, amplitude) by log
/// marginal likelihood over a log-spaced grid sized by the domain diagonal
/// and the standardized target variance.
pub fn gp_fit(
    x: &[Vec<f64>],
    y: &[f64],
    diagonal: f64,
    len_span: (f64, f64),
    amp_span: (f64, f64),
) -> Result<GpModel> {
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::InvalidArgument(
            "need equally many inputs and targets, at least one".into(),
        ));
    }
    if !(diagonal > 0.0) {
        return Err(Error::InvalidArgument("diagonal must be positive".into()));
    }
    let (y_std, y_mean, y_scale) = standardize(y);
    let n = y_std.len() as f64;
    let std_mean = y_std.iter().sum::<f64>() / n;
    let y_var = y_std.iter().map(|v| (v - std_mean) * (v - std_mean)).sum::<f64>() / n;
    type Fitted = (DMatrix<f64>, DMatrix<f64>, DVector<f64>, f64, f64, KernelParams);
    let mut best: Option<Fitted> = None;
    for params in param_grid(diagonal, len_span, amp_span, y_var) {
        let Ok((cov, l, alpha, lml, jitter)) = fit_standardized(x, &y_std, params) else {
            continue;
        };
        if best.as_ref().map_or(true, |b| lml > b.3) {
            best = Some((cov, l, alpha, lml, jitter, params));
        }
    }
    let (cov, l, alpha, lml, jitter, params) = best.ok_or_else(|| {
        Error::Numerical("no hyperparameter candidate factorized".into())
    })?;
    Ok(GpModel {
        x: x.to_vec(),
        y_mean,
        y_scale,
        params,
        jitter,
        cov: Some(cov),
        l: Some(l),
        alpha,
        lml,
    })
}

/// Error-free sum: returns the rounded sum and the exact rounding remainder.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bv = s - a;
    (s, (a - (s - bv)) + (b - bv))
}

/// Dot product accumulated in double-double precision, returned unrounded as
/// (head, tail). mul_add recovers each product's rounding error exactly.
fn dot_dd(a: impl Iterator<Item = f64>, b: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut head = 0.0;
    let mut tail = 0.0;
    for (x, y) in a.zip(b) {
        let p = x * y;
        let e = x.mul_add(y, -p);
        let (s, e2) = two_sum(head, p);
        head = s;
        tail += e + e2;
    }
    (head, tail)
}

/// Variance k** - k*'K^-1 k* with a first-order residual correction:
/// sigma^2 = k** - k*'w - r'w where r = k* - Kw, all dots in double-double.
/// At a training input the plain quadratic form cancels down to jitter size
/// and carries the factorization's machine-epsilon backward error, which is
/// the same order as the jitter; the r'w term removes exactly that error.
fn corrected_variance(model: &GpModel, k_star: &DVector<f64>, k_ss: f64, w: &DVector<f64>) -> f64 {
    let cov = model.cov.as_ref().expect("fitted model keeps its covariance");
    let mut residual_dot_w = 0.0;
    for i in 0..k_star.len() {
        let (head, tail) = dot_dd(cov.row(i).iter().copied(), w.iter().copied());
        let r_i = (k_star[i] - head) - tail;
        residual_dot_w += r_i * w[i];
    }
    let (head, tail) = dot_dd(k_star.iter().copied(), w.iter().copied());
    (((k_ss - head) - tail) - residual_dot_w).max(0.0)
}

/// Posterior mean and variance at a point, in original target units.
pub fn gp_predict(model: &GpModel, x_star: &[f64]) -> (f64, f64) {
    if model.x.is_empty() {
        return (model.y_mean, model.params.amplitude * model.y_scale * model.y_scale);
    }
    let l = model.l.as_ref().expect("fitted model has a factorization");
    let k_star = DVector::from_iterator(
        model.x.len(),
        model.x.iter().map(|xi| matern52(x_star, xi, &model.params)),
    );
    let mu_std = k_star.dot(&model.alpha);
    let v = l
        .solve_lower_triangular(&k_star)
        .expect("Cholesky factor is nonsingular");
    let k_ss = matern52(x_star, x_star, &model.params);
    let mut var_std = (k_ss - v.norm_squared()).max(0.0);
    if var_std <= 4.0 * model.jitter {
        // jitter-sized result: the point sits on a training input, where the
        // plain route's rounding error is comparable to the answer
        let w = l
            .tr_solve_lower_triangular(&v)
            .expect("Cholesky factor is nonsingular");
        var_std = corrected_variance(model, &k_star, k_ss, &w);
    }
    (
        model.y_mean + model.y_scale * mu_std,
        model.y_scale * model.y_scale * var_std,
    )
}
