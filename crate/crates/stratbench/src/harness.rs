//! Experiment orchestration: run optimizer x function x repeat grids under
//! the dimension-based budget rule, persist results as JSON lines, and drive
//! ranking and stratified aggregation over the stored runs.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{self, MetricPair};
use crate::optimizers::{run_optimization, OptimizerConfig};
use crate::ranking::{
    aggregate, pairwise_outcomes_with, partial_ranking, refine_ranking_with, AggregateTable,
    PartialRanking,
};
use crate::rngutil::mix64;
use crate::stattests::TestKind;
use crate::testfns::{Attribute, DimBucket, Registry, TestFunction};

/// Evaluation budget: 20d for d < 4, 80 otherwise.
pub fn budget_for(f: &TestFunction) -> usize {
    let d = f.dim();
    if d < 4 {
        20 * d
    } else {
        80
    }
}

fn fnv1a64(data: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in data {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Per-run seed: FNV-1a over a length-framed encoding of the run key,
/// finished with a splitmix64 mix. Length prefixes keep distinct keys
/// distinct regardless of id contents. Stable across versions and platforms;
/// runs can be reproduced or re-executed individually from their key.
pub fn derive_run_seed(master: u64, function_id: &str, optimizer_id: &str, repeat: u32) -> u64 {
    let mut key = Vec::with_capacity(28 + function_id.len() + optimizer_id.len());
    key.extend_from_slice(&master.to_le_bytes());
    for part in [function_id, optimizer_id] {
        key.extend_from_slice(&(part.len() as u64).to_le_bytes());
        key.extend_from_slice(part.as_bytes());
    }
    key.extend_from_slice(&repeat.to_le_bytes());
    mix64(fnv1a64(&key))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStep {
    pub x: Vec<f64>,
    pub observed: f64,
    pub true_value: f64,
}

/// One persisted optimizer run: the full trace plus derived metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub function_id: String,
    pub attributes: Vec<Attribute>,
    pub dimension: usize,
    pub optimizer_id: String,
    pub seed: u64,
    pub repeat: u32,
    pub f_lb: f64,
    pub steps: Vec<RunStep>,
    pub metrics: MetricPair,
}

pub type RunKey = (String, String, u64);

impl RunRecord {
    pub fn key(&self) -> RunKey {
        (self.function_id.clone(), self.optimizer_id.clone(), self.seed)
    }

    /// Re-derive the metric pair from the stored trace.
    pub fn recompute_metrics(&self) -> Result<MetricPair> {
        let observed: Vec<f64> = self.steps.iter().map(|s| s.observed).collect();
        let true_values: Vec<f64> = self.steps.iter().map(|s| s.true_value).collect();
        metrics::run_metrics(&observed, &true_values, self.f_lb)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub function_id: String,
    pub optimizer_id: String,
    pub seed: u64,
    pub repeat: u32,
    pub message: String,
}

/// Append-only run collection with deterministic (sorted) iteration order.
/// Failures ride along so no run disappears silently.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultStore {
    records: BTreeMap<RunKey, RunRecord>,
    failures: Vec<RunFailure>,
}

impl ResultStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, record: RunRecord) -> Result<()> {
        let key = record.key();
        if self.records.contains_key(&key) {
            return Err(Error::DuplicateKey(format!(
                "run {}/{}/{} already stored",
                key.0, key.1, key.2
            )));
        }
        self.records.insert(key, record);
        Ok(())
    }

    pub fn record_failure(&mut self, failure: RunFailure) {
        self.failures.push(failure);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = &RunRecord> {
        self.records.values()
    }

    pub fn failures(&self) -> &[RunFailure] {
        &self.failures
    }

    pub fn function_ids(&self) -> BTreeSet<String> {
        self.records.values().map(|r| r.function_id.clone()).collect()
    }

    pub fn optimizer_ids(&self) -> BTreeSet<String> {
        self.records.values().map(|r| r.optimizer_id.clone()).collect()
    }

    /// One record per line, canonical field order, round-trip-exact floats.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for record in self.records.values() {
            out.push_str(&serde_json::to_string(record)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(reader: impl BufRead) -> Result<Self> {
        let mut store = Self::new();
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            store.insert(serde_json::from_str(&line)?)?;
        }
        Ok(store)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(self.to_jsonl()?.as_bytes())?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_jsonl(BufReader::new(File::open(path)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub functions: Vec<String>,
    pub optimizers: Vec<OptimizerConfig>,
    pub repeats: u32,
    pub master_seed: u64,
    pub budget_override: Option<usize>,
    pub alpha: f64,
}

impl ExperimentConfig {
    pub fn new(functions: Vec<String>, optimizers: Vec<OptimizerConfig>, master_seed: u64) -> Self {
        Self {
            functions,
            optimizers,
            repeats: 30,
            master_seed,
            budget_override: None,
            alpha: 0.0005,
        }
    }

    pub fn with_repeats(mut self, repeats: u32) -> Self {
        self.repeats = repeats;
        self
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget_override = Some(budget);
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.functions.is_empty() || self.optimizers.is_empty() {
            return Err(Error::InvalidArgument(
                "need at least one function and one optimizer".into(),
            ));
        }
        if self.functions.iter().collect::<BTreeSet<_>>().len() != self.functions.len() {
            return Err(Error::InvalidArgument("duplicate function id in config".into()));
        }
        let opt_ids: BTreeSet<&str> = self.optimizers.iter().map(|o| o.id()).collect();
        if opt_ids.len() != self.optimizers.len() {
            return Err(Error::InvalidArgument("duplicate optimizer in config".into()));
        }
        if self.repeats < 1 {
            return Err(Error::InvalidArgument("repeats must be >= 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::InvalidArgument(format!("alpha {} not in (0, 0.5)", self.alpha)));
        }
        if self.budget_override == Some(0) {
            return Err(Error::InvalidArgument("budget override must be >= 1".into()));
        }
        Ok(())
    }
}

/// Run the full grid. Runs execute in parallel; the store is merged in a
/// fixed order and every record's seed comes from derive_run_seed, so the
/// result is identical for any worker count.
pub fn run_suite(config: &ExperimentConfig, registry: &Registry) -> Result<ResultStore> {
    config.validate()?;
    let functions: Vec<&TestFunction> = config
        .functions
        .iter()
        .map(|id| registry.require(id))
        .collect::<Result<_>>()?;
    let mut jobs = Vec::new();
    for f in &functions {
        let budget = config.budget_override.unwrap_or_else(|| budget_for(f));
        for opt in &config.optimizers {
            for repeat in 0..config.repeats {
                let seed = derive_run_seed(config.master_seed, f.id(), opt.id(), repeat);
                jobs.push((*f, opt.clone(), repeat, seed, budget));
            }
        }
    }
    let outcomes: Vec<std::result::Result<RunRecord, RunFailure>> = jobs
        .par_iter()
        .map(|(f, opt, repeat, seed, budget)| {
            match run_optimization(opt, f, *budget, *seed) {
                Ok(mut record) => {
                    record.repeat = *repeat;
                    Ok(record)
                }
                Err(e) => Err(RunFailure {
                    function_id: f.id().to_string(),
                    optimizer_id: opt.id().to_string(),
                    seed: *seed,
                    repeat: *repeat,
                    message: e.to_string(),
                }),
            }
        })
        .collect();
    let mut store = ResultStore::new();
    for outcome in outcomes {
        match outcome {
            Ok(record) => store.insert(record)?,
            Err(failure) => store.record_failure(failure),
        }
    }
    Ok(store)
}

/// Per-function ballots: pairwise tests on Best Found samples, with tie
/// groups refined by the same test on AUC samples when use_auc is set.
pub fn rank_functions(
    store: &ResultStore,
    alpha: f64,
    kind: TestKind,
    use_auc: bool,
) -> Result<BTreeMap<String, PartialRanking>> {
    if store.is_empty() {
        return Err(Error::MissingData("store has no runs".into()));
    }
    let optimizers = store.optimizer_ids();
    if optimizers.len() < 2 {
        return Err(Error::MissingData("ranking needs at least 2 optimizers".into()));
    }
    let mut ballots = BTreeMap::new();
    for fid in store.function_ids() {
        let mut best_found: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        let mut auc: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for record in store.records().filter(|r| r.function_id == fid) {
            best_found
                .entry(record.optimizer_id.clone())
                .or_default()
                .push(record.metrics.best_found);
            auc.entry(record.optimizer_id.clone()).or_default().push(record.metrics.auc);
        }
        for opt in &optimizers {
            let n = best_found.get(opt).map_or(0, Vec::len);
            if n < 2 {
                return Err(Error::MissingData(format!(
                    "cell {fid}/{opt} has {n} successful runs, need >= 2"
                )));
            }
        }
        let base = partial_ranking(&pairwise_outcomes_with(kind, &best_found, alpha)?);
        let ballot = if use_auc {
            refine_ranking_with(kind, &base, &auc, alpha)?
        } else {
            base
        };
        ballots.insert(fid, ballot);
    }
    Ok(ballots)
}

/// Function metadata needed to place ballots into strata.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionMeta {
    pub dimension: usize,
    pub attributes: BTreeSet<Attribute>,
}

pub fn store_metadata(store: &ResultStore) -> BTreeMap<String, FunctionMeta> {
    let mut meta = BTreeMap::new();
    for record in store.records() {
        meta.entry(record.function_id.clone()).or_insert_with(|| FunctionMeta {
            dimension: record.dimension,
            attributes: record.attributes.iter().copied().collect(),
        });
    }
    meta
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strata {
    None,
    Dimension,
    Attribute,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StratifiedTables {
    /// (stratum label, table) in a fixed presentation order.
    pub tables: Vec<(String, AggregateTable)>,
    pub warnings: Vec<String>,
}

const DIM_BUCKETS: [DimBucket; 4] =
    [DimBucket::D2, DimBucket::D3To5, DimBucket::D6To9, DimBucket::D10Plus];

/// Group ballots by stratum and aggregate each group. Dimension buckets
/// partition the functions; attribute strata may overlap. Empty strata come
/// back as zero-ballot tables plus a warning.
pub fn stratified_tables(
    ballots: &BTreeMap<String, PartialRanking>,
    meta: &BTreeMap<String, FunctionMeta>,
    strata: Strata,
) -> Result<StratifiedTables> {
    let first = ballots
        .values()
        .next()
        .ok_or_else(|| Error::InvalidArgument("no ballots to aggregate".into()))?;
    let methods = first.methods();
    let mut warnings = Vec::new();
    for fid in ballots.keys() {
        if !meta.contains_key(fid) {
            return Err(Error::MissingData(format!("no metadata for function {fid}")));
        }
    }
    let mut groups: Vec<(String, Vec<&PartialRanking>)> = Vec::new();
    match strata {
        Strata::None => {
            groups.push(("all".to_string(), ballots.values().collect()));
        }
        Strata::Dimension => {
            for bucket in DIM_BUCKETS {
                let members: Vec<&PartialRanking> = ballots
                    .iter()
                    .filter(|(fid, _)| bucket.contains(meta[*fid].dimension))
                    .map(|(_, b)| b)
                    .collect();
                groups.push((format!("dim {}", bucket.label()), members));
            }
            for (fid, m) in meta {
                if ballots.contains_key(fid) && DimBucket::of_dim(m.dimension).is_none() {
                    warnings.push(format!(
                        "function {fid} (d={}) fits no dimension bucket",
                        m.dimension
                    ));
                }
            }
        }
        Strata::Attribute => {
            for attr in Attribute::ALL {
                let members: Vec<&PartialRanking> = ballots
                    .iter()
                    .filter(|(fid, _)| meta[*fid].attributes.contains(&attr))
                    .map(|(_, b)| b)
                    .collect();
                groups.push((attr.name().to_string(), members));
            }
        }
    }
    let mut tables = Vec::new();
    for (label, members) in groups {
        if members.is_empty() {
            warnings.push(format!("stratum '{label}' has no functions"));
            tables.push((label, AggregateTable::empty(methods.iter().cloned())));
        } else {
            let owned: Vec<PartialRanking> = members.into_iter().cloned().collect();
            tables.push((label, aggregate(&owned)?));
        }
    }
    Ok(StratifiedTables { tables, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_rule() {
        let registry = Registry::standard();
        assert_eq!(budget_for(registry.require("sphere2").unwrap()), 40);
        assert_eq!(budget_for(registry.require("rastrigin3").unwrap()), 60);
        assert_eq!(budget_for(registry.require("rastrigin10").unwrap()), 80);
        assert_eq!(budget_for(registry.require("shifted_sphere4").unwrap()), 80);
    }

    #[test]
    fn seed_derivation_is_frozen() {
        // golden values computed with an independent implementation
        assert_eq!(derive_run_seed(42, "sphere2", "random", 0), 17317931022088738252);
        assert_eq!(derive_run_seed(42, "sphere2", "random", 1), 2055245342013781300);
        assert_eq!(derive_run_seed(42, "sphere2", "gp_ei", 0), 1868037773986332626);
        assert_eq!(derive_run_seed(7, "rastrigin3", "pso", 29), 10251293816406240780);
        // length framing keeps the encoding injective over the id pair
        assert_ne!(
            derive_run_seed(1, "a:b", "c", 0),
            derive_run_seed(1, "a", "b:c", 0)
        );
        assert_ne!(derive_run_seed(1, "ab", "", 0), derive_run_seed(1, "a", "b", 0));
    }

    fn quick_config(functions: &[&str], optimizers: Vec<OptimizerConfig>) -> ExperimentConfig {
        ExperimentConfig::new(
            functions.iter().map(|s| s.to_string()).collect(),
            optimizers,
            42,
        )
        .with_repeats(3)
        .with_budget(6)
    }

    #[test]
    fn suite_counts_and_determinism() {
        let registry = Registry::standard();
        let cfg = quick_config(
            &["sphere2", "abs_sum2"],
            vec![OptimizerConfig::random(), OptimizerConfig::pso()],
        );
        let store = run_suite(&cfg, &registry).unwrap();
        assert_eq!(store.len(), 12);
        assert!(store.failures().is_empty());
        let again = run_suite(&cfg, &registry).unwrap();
        assert_eq!(store.to_jsonl().unwrap(), again.to_jsonl().unwrap());
        // single-threaded execution produces the identical store
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let serial = pool.install(|| run_suite(&cfg, &registry)).unwrap();
        assert_eq!(store.to_jsonl().unwrap(), serial.to_jsonl().unwrap());
    }

    #[test]
    fn config_validation() {
        let registry = Registry::standard();
        let bad = ExperimentConfig::new(vec![], vec![OptimizerConfig::random()], 1);
        assert!(run_suite(&bad, &registry).is_err());
        let bad = quick_config(&["sphere2", "sphere2"], vec![OptimizerConfig::random()]);
        assert!(run_suite(&bad, &registry).is_err());
        let bad = quick_config(&["nope"], vec![OptimizerConfig::random()]);
        assert!(run_suite(&bad, &registry).is_err());
        let bad = quick_config(&["sphere2"], vec![OptimizerConfig::random()]).with_alpha(0.5);
        assert!(run_suite(&bad, &registry).is_err());
    }

    #[test]
    fn failures_are_recorded_not_dropped() {
        let registry = Registry::standard();
        // a 2x2 lattice exhausts before a budget of 6
        let cfg = quick_config(
            &["sphere2"],
            vec![OptimizerConfig::Grid { target_points: 4 }, OptimizerConfig::random()],
        );
        let store = run_suite(&cfg, &registry).unwrap();
        assert_eq!(store.len(), 3);
        assert_eq!(store.failures().len(), 3);
        for failure in store.failures() {
            assert_eq!(failure.optimizer_id, "grid");
            assert!(failure.message.contains("exhausted"), "{}", failure.message);
        }
    }

    #[test]
    fn store_round_trips_and_rejects_duplicates() {
        let registry = Registry::standard();
        let cfg = quick_config(&["int_sphere2"], vec![OptimizerConfig::random()]);
        let store = run_suite(&cfg, &registry).unwrap();
        let text = store.to_jsonl().unwrap();
        let loaded = ResultStore::from_jsonl(text.as_bytes()).unwrap();
        assert_eq!(loaded.to_jsonl().unwrap(), text);
        let mut dup = loaded.clone();
        let record = loaded.records().next().unwrap().clone();
        assert!(matches!(dup.insert(record), Err(Error::DuplicateKey(_))));
    }

    #[test]
    fn metrics_recompute_exactly() {
        let registry = Registry::standard();
        let cfg = quick_config(
            &["noisy_sphere2", "cosine_mixture2"],
            vec![OptimizerConfig::random(), OptimizerConfig::pso()],
        );
        let store = run_suite(&cfg, &registry).unwrap();
        for record in store.records() {
            let fresh = record.recompute_metrics().unwrap();
            assert_eq!(fresh.best_found, record.metrics.best_found);
            assert_eq!(fresh.auc, record.metrics.auc);
        }
    }

    fn synthetic_record(fid: &str, oid: &str, repeat: u32, observed: Vec<f64>) -> RunRecord {
        let true_values = observed.clone();
        let metrics = metrics::run_metrics(&observed, &true_values, 0.0).unwrap();
        let steps = observed
            .iter()
            .map(|&v| RunStep { x: vec![0.0], observed: v, true_value: v })
            .collect();
        RunRecord {
            function_id: fid.to_string(),
            attributes: vec![],
            dimension: 2,
            optimizer_id: oid.to_string(),
            seed: derive_run_seed(9, fid, oid, repeat),
            repeat,
            f_lb: 0.0,
            steps,
            metrics,
        }
    }

    #[test]
    fn dominant_optimizer_tops_every_ballot() {
        let mut store = ResultStore::new();
        for fid in ["fa", "fb"] {
            for rep in 0..30 {
                store
                    .insert(synthetic_record(fid, "hero", rep, vec![100.0 + rep as f64]))
                    .unwrap();
                store
                    .insert(synthetic_record(fid, "zero", rep, vec![rep as f64]))
                    .unwrap();
                store
                    .insert(synthetic_record(fid, "mid", rep, vec![50.0 + rep as f64]))
                    .unwrap();
            }
        }
        let ballots = rank_functions(&store, 0.0005, TestKind::MannWhitneyU, true).unwrap();
        assert_eq!(ballots.len(), 2);
        for ballot in ballots.values() {
            assert_eq!(ballot.groups()[0], vec!["hero".to_string()]);
            assert_eq!(ballot.borda("hero"), Some(2));
            assert!(ballot.is_total());
        }
    }

    #[test]
    fn identical_traces_tie_everything() {
        let mut store = ResultStore::new();
        for oid in ["a", "b", "c"] {
            for rep in 0..5 {
                store.insert(synthetic_record("f", oid, rep, vec![1.0, 2.0])).unwrap();
            }
        }
        let ballots = rank_functions(&store, 0.0005, TestKind::MannWhitneyU, true).unwrap();
        let ballot = &ballots["f"];
        assert_eq!(ballot.groups().len(), 1);
        assert_eq!(ballot.groups()[0].len(), 3);
    }

    #[test]
    fn auc_refinement_breaks_best_found_ties() {
        let mut store = ResultStore::new();
        for rep in 0..30 {
            // same final best, different arrival time
            store.insert(synthetic_record("f", "early", rep, vec![10.0, 10.0])).unwrap();
            store.insert(synthetic_record("f", "late", rep, vec![0.0, 10.0])).unwrap();
        }
        let with_auc = rank_functions(&store, 0.0005, TestKind::MannWhitneyU, true).unwrap();
        assert_eq!(with_auc["f"].groups()[0], vec!["early".to_string()]);
        assert_eq!(with_auc["f"].borda("early"), Some(1));
        let without = rank_functions(&store, 0.0005, TestKind::MannWhitneyU, false).unwrap();
        assert_eq!(without["f"].groups().len(), 1);
        // the t-test mode agrees on this clean separation
        let welch = rank_functions(&store, 0.0005, TestKind::WelchT, true).unwrap();
        assert_eq!(welch["f"].groups()[0], vec!["early".to_string()]);
    }

    #[test]
    fn missing_cell_is_named() {
        let mut store = ResultStore::new();
        for rep in 0..3 {
            store.insert(synthetic_record("f", "a", rep, vec![1.0])).unwrap();
        }
        store.insert(synthetic_record("f", "b", 0, vec![1.0])).unwrap();
        let err = rank_functions(&store, 0.0005, TestKind::MannWhitneyU, true).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("f/b"), "unhelpful error: {msg}");
    }

    fn toy_ballots_and_meta() -> (BTreeMap<String, PartialRanking>, BTreeMap<String, FunctionMeta>) {
        let registry = Registry::standard();
        let mut ballots = BTreeMap::new();
        let mut meta = BTreeMap::new();
        for fid in ["abs_sum2", "rastrigin3", "rastrigin10", "gaussian_bump6"] {
            let f = registry.require(fid).unwrap();
            ballots.insert(
                fid.to_string(),
                PartialRanking::from_groups(vec![
                    vec!["x".to_string()],
                    vec!["y".to_string()],
                ])
                .unwrap(),
            );
            meta.insert(
                fid.to_string(),
                FunctionMeta {
                    dimension: f.dim(),
                    attributes: f.attributes().clone(),
                },
            );
        }
        (ballots, meta)
    }

    #[test]
    fn dimension_buckets_partition_ballots() {
        let (ballots, meta) = toy_ballots_and_meta();
        let out = stratified_tables(&ballots, &meta, Strata::Dimension).unwrap();
        assert_eq!(out.tables.len(), 4);
        let total: usize = out.tables.iter().map(|(_, t)| t.ballots()).sum();
        assert_eq!(total, ballots.len());
        let labels: Vec<&str> = out.tables.iter().map(|(l, _)| l.as_str()).collect();
        assert_eq!(labels, vec!["dim 2", "dim 3-5", "dim 6-9", "dim 10+"]);
        for (_, table) in &out.tables {
            assert_eq!(table.ballots(), 1);
        }
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn attribute_strata_overlap_and_warn_when_empty() {
        let (ballots, meta) = toy_ballots_and_meta();
        let out = stratified_tables(&ballots, &meta, Strata::Attribute).unwrap();
        assert_eq!(out.tables.len(), Attribute::ALL.len());
        // abs_sum2 carries two attributes, so strata overlap
        let appearances: usize = out.tables.iter().map(|(_, t)| t.ballots()).sum();
        assert!(appearances > ballots.len());
        // this 4-function subset leaves some attributes unpopulated
        assert!(!out.warnings.is_empty());
        for (label, table) in &out.tables {
            if table.ballots() == 0 {
                assert!(out.warnings.iter().any(|w| w.contains(label.as_str())));
            }
        }
    }

    #[test]
    fn single_stratum_matches_plain_aggregation() {
        let (ballots, meta) = toy_ballots_and_meta();
        let out = stratified_tables(&ballots, &meta, Strata::None).unwrap();
        assert_eq!(out.tables.len(), 1);
        assert_eq!(out.tables[0].0, "all");
        let owned: Vec<PartialRanking> = ballots.values().cloned().collect();
        assert_eq!(out.tables[0].1, aggregate(&owned).unwrap());
    }
}
