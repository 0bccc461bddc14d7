//! Python bindings: thin wrappers over the core crate returning plain
//! Python types (dicts, lists, tuples).

use std::collections::BTreeMap;
use std::io::BufReader;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use stratbench::harness::{rank_functions, run_suite as suite, ExperimentConfig, ResultStore};
use stratbench::optimizers::{run_optimization as run_opt, OptimizerConfig};
use stratbench::ranking::{
    aggregate, pairwise_outcomes_with, partial_ranking, refine_ranking_with, PartialRanking,
};
use stratbench::stattests::{self, TestKind};
use stratbench::testfns::Registry;
use stratbench::validity::{
    self, KsExperimentConfig, NullSource, OrderStatSpec, Standardization, TailMode,
};

fn err(e: stratbench::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn test_kind(name: &str) -> PyResult<TestKind> {
    match name {
        "u" => Ok(TestKind::MannWhitneyU),
        "t" => Ok(TestKind::WelchT),
        other => Err(PyValueError::new_err(format!("unknown test '{other}', use 'u' or 't'"))),
    }
}

fn spec(t: u32, minimize: bool) -> PyResult<OrderStatSpec> {
    let mode = if minimize { TailMode::Minimize } else { TailMode::Maximize };
    OrderStatSpec::new(t, mode).map_err(err)
}

/// Ids of every registered test function.
#[pyfunction]
fn list_functions() -> Vec<String> {
    Registry::standard().ids().into_iter().map(str::to_string).collect()
}

/// Declared metadata of one test function.
#[pyfunction]
fn function_info(py: Python<'_>, id: &str) -> PyResult<Py<PyDict>> {
    let registry = Registry::standard();
    let f = registry.require(id).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("id", f.id())?;
    d.set_item("dimension", f.dim())?;
    d.set_item("lower", f.domain().lower().to_vec())?;
    d.set_item("upper", f.domain().upper().to_vec())?;
    let mut ints: Vec<usize> = f.domain().integer_dims().iter().copied().collect();
    ints.sort_unstable();
    d.set_item("integer_dims", ints)?;
    d.set_item("attributes", f.attributes().iter().map(|a| a.name()).collect::<Vec<_>>())?;
    d.set_item("noise_level", f.noise_level())?;
    d.set_item("f_lb", f.f_lb())?;
    d.set_item("f_opt", f.f_opt())?;
    d.set_item("x_opt", f.x_opt().map(|x| x.to_vec()))?;
    Ok(d.into())
}

/// Noise-free objective value at x.
#[pyfunction]
fn true_value(id: &str, x: Vec<f64>) -> PyResult<f64> {
    Registry::standard().require(id).map_err(err)?.true_value(&x).map_err(err)
}

/// One seeded evaluation: (true value, observed value).
#[pyfunction]
fn evaluate(id: &str, x: Vec<f64>, seed: u64) -> PyResult<(f64, f64)> {
    use rand::SeedableRng;
    let registry = Registry::standard();
    let f = registry.require(id).map_err(err)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let e = f.evaluate(&x, &mut rng).map_err(err)?;
    Ok((e.true_value, e.observed_value))
}

/// One seeded optimizer run; returns the trace and its metrics.
#[pyfunction]
#[pyo3(signature = (function, optimizer, seed, budget=None))]
fn run_optimization(
    py: Python<'_>,
    function: &str,
    optimizer: &str,
    seed: u64,
    budget: Option<usize>,
) -> PyResult<Py<PyDict>> {
    let registry = Registry::standard();
    let f = registry.require(function).map_err(err)?;
    let config = OptimizerConfig::from_id(optimizer).map_err(err)?;
    let budget = budget.unwrap_or_else(|| stratbench::harness::budget_for(f));
    let record = run_opt(&config, f, budget, seed).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("function", &record.function_id)?;
    d.set_item("optimizer", &record.optimizer_id)?;
    d.set_item("seed", record.seed)?;
    d.set_item("f_lb", record.f_lb)?;
    d.set_item("best_found", record.metrics.best_found)?;
    d.set_item("auc", record.metrics.auc)?;
    let steps = PyList::empty(py);
    for s in &record.steps {
        steps.append((s.x.clone(), s.observed, s.true_value))?;
    }
    d.set_item("steps", steps)?;
    Ok(d.into())
}

/// Run a full grid and return the records as canonical JSON lines.
#[pyfunction]
#[pyo3(signature = (functions, optimizers, repeats, seed, budget=None))]
fn run_suite(
    functions: Vec<String>,
    optimizers: Vec<String>,
    repeats: u32,
    seed: u64,
    budget: Option<usize>,
) -> PyResult<String> {
    let registry = Registry::standard();
    let optimizers: Vec<OptimizerConfig> = optimizers
        .iter()
        .map(|id| OptimizerConfig::from_id(id))
        .collect::<stratbench::Result<_>>()
        .map_err(err)?;
    let mut config = ExperimentConfig::new(functions, optimizers, seed).with_repeats(repeats);
    if let Some(b) = budget {
        config = config.with_budget(b);
    }
    let store = suite(&config, &registry).map_err(err)?;
    if let Some(f) = store.failures().first() {
        return Err(PyValueError::new_err(format!(
            "{}/{} repeat {} failed: {}",
            f.function_id, f.optimizer_id, f.repeat, f.message
        )));
    }
    store.to_jsonl().map_err(err)
}

/// Per-function ballots from persisted records: function id -> tie groups.
#[pyfunction]
#[pyo3(signature = (jsonl, alpha=0.0005, test="u", use_auc=true))]
fn rank_ballots(
    jsonl: &str,
    alpha: f64,
    test: &str,
    use_auc: bool,
) -> PyResult<BTreeMap<String, Vec<Vec<String>>>> {
    let store = ResultStore::from_jsonl(BufReader::new(jsonl.as_bytes())).map_err(err)?;
    let ballots = rank_functions(&store, alpha, test_kind(test)?, use_auc).map_err(err)?;
    Ok(ballots.into_iter().map(|(fid, r)| (fid, r.groups().to_vec())).collect())
}

/// Rank methods by pairwise tests on primary samples, optionally refining
/// tie groups on secondary samples. Returns tie groups, best first.
#[pyfunction]
#[pyo3(signature = (samples, alpha, secondary=None, test="u"))]
fn rank_methods(
    samples: BTreeMap<String, Vec<f64>>,
    alpha: f64,
    secondary: Option<BTreeMap<String, Vec<f64>>>,
    test: &str,
) -> PyResult<Vec<Vec<String>>> {
    let kind = test_kind(test)?;
    let outcomes = pairwise_outcomes_with(kind, &samples, alpha).map_err(err)?;
    let base = partial_ranking(&outcomes);
    let ranking = match secondary {
        Some(sec) => refine_ranking_with(kind, &base, &sec, alpha).map_err(err)?,
        None => base,
    };
    Ok(ranking.groups().to_vec())
}

/// Sum ballots (lists of tie groups, best first) into an aggregate table.
/// Returns rows (method, borda, firsts, top_three) in presentation order.
#[pyfunction]
fn aggregate_ballots(
    ballots: Vec<Vec<Vec<String>>>,
) -> PyResult<Vec<(String, usize, usize, usize)>> {
    let parsed: Vec<PartialRanking> = ballots
        .into_iter()
        .map(PartialRanking::from_groups)
        .collect::<stratbench::Result<_>>()
        .map_err(err)?;
    let table = aggregate(&parsed).map_err(err)?;
    Ok(table
        .order()
        .into_iter()
        .map(|name| {
            let r = table.row(&name).expect("ordered rows exist");
            (name, r.borda_total, r.firsts, r.top_three)
        })
        .collect())
}

/// One-sided Mann-Whitney U: (direction, u_a, p_one_sided).
#[pyfunction]
fn mann_whitney(a: Vec<f64>, b: Vec<f64>, alpha: f64) -> PyResult<(String, f64, f64)> {
    let out = stattests::mann_whitney(&a, &b, alpha).map_err(err)?;
    Ok((format!("{:?}", out.direction), out.u_a, out.p_one_sided))
}

/// Exact permutation p that B tends larger (pooled size <= 14).
#[pyfunction]
fn mann_whitney_exact(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    stattests::mann_whitney_exact(&a, &b).map_err(err)
}

/// One-sided Welch t test: (direction, t, p_one_sided).
#[pyfunction]
fn welch_t(a: Vec<f64>, b: Vec<f64>, alpha: f64) -> PyResult<(String, f64, f64)> {
    let out = stattests::welch_t(&a, &b, alpha).map_err(err)?;
    Ok((format!("{:?}", out.direction), out.t, out.p_one_sided))
}

/// Probability of any false positive across all m-choose-2 comparisons.
#[pyfunction]
fn family_wise_bound(alpha: f64, m: u32) -> f64 {
    stattests::family_wise_bound(alpha, m)
}

/// Moments of the best-of-T draw: (mean, variance, rho, quotient).
#[pyfunction]
fn be_moments(t: u32) -> PyResult<(f64, f64, f64, f64)> {
    let m = validity::be_moments(t).map_err(err)?;
    Ok((m.mean, m.variance, m.rho, m.quotient))
}

/// CDF of the extreme of T uniform draws.
#[pyfunction]
#[pyo3(signature = (t, y, minimize=false))]
fn order_stat_cdf(t: u32, y: f64, minimize: bool) -> PyResult<f64> {
    validity::order_stat_cdf(&spec(t, minimize)?, y).map_err(err)
}

/// Quantile of the extreme of T uniform draws.
#[pyfunction]
#[pyo3(signature = (t, p, minimize=false))]
fn order_stat_quantile(t: u32, p: f64, minimize: bool) -> PyResult<f64> {
    validity::order_stat_quantile(&spec(t, minimize)?, p).map_err(err)
}

/// Seeded inverse-CDF draws of the extreme of T uniform draws.
#[pyfunction]
#[pyo3(signature = (t, count, seed, minimize=false))]
fn sample_order_stats(t: u32, count: usize, seed: u64, minimize: bool) -> PyResult<Vec<f64>> {
    use rand::SeedableRng;
    let spec = spec(t, minimize)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| validity::sample_order_stat(&spec, &mut rng)).collect())
}

/// Two-sided KS distance between a sample and a CDF given as a callable.
#[pyfunction]
fn ks_statistic(py: Python<'_>, sample: Vec<f64>, cdf: Py<PyAny>) -> PyResult<f64> {
    let failure = std::cell::RefCell::new(None);
    let d = validity::ks_statistic(&sample, |y| {
        match cdf.bind(py).call1((y,)).and_then(|v| v.extract::<f64>()) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    });
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    d.map_err(err)
}

/// Seeded KS normality rejection grid over (T, n) cells. Returns rows
/// (T, n, tests, rejections, rejection_rate).
#[pyfunction]
#[pyo3(signature = (t_values, n_values, tests, samples, seed, estimated=false, control=false))]
fn ks_normality_experiment(
    t_values: Vec<u32>,
    n_values: Vec<u32>,
    tests: u32,
    samples: u32,
    seed: u64,
    estimated: bool,
    control: bool,
) -> PyResult<Vec<(u32, u32, u32, u32, f64)>> {
    let config = KsExperimentConfig {
        t_values,
        n_values,
        tests_per_cell: tests,
        samples_per_test: samples,
        standardization: if estimated {
            Standardization::Estimated
        } else {
            Standardization::Analytic
        },
        source: if control { NullSource::NormalControl } else { NullSource::OrderStatistic },
    };
    let cells = validity::ks_normality_experiment(&config, seed).map_err(err)?;
    Ok(cells
        .into_iter()
        .map(|c| (c.t, c.n, c.tests, c.rejections, c.rejection_rate()))
        .collect())
}

#[pymodule]
fn stratbench_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(list_functions, m)?)?;
    m.add_function(wrap_pyfunction!(function_info, m)?)?;
    m.add_function(wrap_pyfunction!(true_value, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(run_optimization, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    m.add_function(wrap_pyfunction!(rank_ballots, m)?)?;
    m.add_function(wrap_pyfunction!(rank_methods, m)?)?;
    m.add_function(wrap_pyfunction!(aggregate_ballots, m)?)?;
    m.add_function(wrap_pyfunction!(mann_whitney, m)?)?;
    m.add_function(wrap_pyfunction!(mann_whitney_exact, m)?)?;
    m.add_function(wrap_pyfunction!(welch_t, m)?)?;
    m.add_function(wrap_pyfunction!(family_wise_bound, m)?)?;
    m.add_function(wrap_pyfunction!(be_moments, m)?)?;
    m.add_function(wrap_pyfunction!(order_stat_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(order_stat_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(sample_order_stats, m)?)?;
    m.add_function(wrap_pyfunction!(ks_statistic, m)?)?;
    m.add_function(wrap_pyfunction!(ks_normality_experiment, m)?)?;
    Ok(())
}
