//! Built-in optimizers behind one suggest/observe loop: random search, grid
//! search without replacement, particle swarm, and GP expected improvement.
//! All maximize. Suggestions come back with integer dimensions already
//! rounded, so they can be fed to TestFunction::evaluate as-is.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::harness::{RunRecord, RunStep};
use crate::metrics;
use crate::rngutil::child_seed;
use crate::testfns::{DomainBox, TestFunction};

pub mod gp;
pub use gp::{expected_improvement, gp_fit, gp_fit_with, gp_predict, matern52, GpModel, KernelParams};

pub const PSO_OMEGA: f64 = 0.7298;
pub const PSO_COGNITIVE: f64 = 1.49618;
pub const PSO_SOCIAL: f64 = 1.49618;
pub const GRID_TARGET_POINTS: u64 = 1_000_000;
const EI_UNIFORM_CANDIDATES_PER_DIM: usize = 1000;
const EI_INCUMBENT_CANDIDATES: usize = 100;
const EI_INCUMBENT_JITTER: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub enum OptimizerConfig {
    Random,
    Grid { target_points: u64 },
    Pso { omega: f64, cognitive: f64, social: f64 },
    GpEi { len_scale_span: (f64, f64), amplitude_span: (f64, f64) },
}

impl OptimizerConfig {
    pub fn random() -> Self {
        Self::Random
    }

    pub fn grid() -> Self {
        Self::Grid { target_points: GRID_TARGET_POINTS }
    }

    pub fn pso() -> Self {
        Self::Pso { omega: PSO_OMEGA, cognitive: PSO_COGNITIVE, social: PSO_SOCIAL }
    }

    pub fn gp_ei() -> Self {
        Self::GpEi { len_scale_span: (1e-2, 10.0), amplitude_span: (1e-2, 1e2) }
    }

    /// The four standard optimizers with default parameters.
    pub fn standard() -> Vec<Self> {
        vec![Self::random(), Self::grid(), Self::pso(), Self::gp_ei()]
    }

    pub fn id(&self) -> &'static str {
        match self {
            Self::Random => "random",
            Self::Grid { .. } => "grid",
            Self::Pso { .. } => "pso",
            Self::GpEi { .. } => "gp_ei",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        match id {
            "random" => Ok(Self::random()),
            "grid" => Ok(Self::grid()),
            "pso" => Ok(Self::pso()),
            "gp_ei" => Ok(Self::gp_ei()),
            other => Err(Error::InvalidArgument(format!("unknown optimizer '{other}'"))),
        }
    }

    /// Whether the optimizer maintains a surrogate model (used to section
    /// aggregate tables).
    pub fn is_model_based(&self) -> bool {
        matches!(self, Self::GpEi { .. })
    }

    fn validate(&self, d: usize) -> Result<()> {
        match self {
            Self::Random => Ok(()),
            Self::Grid { target_points } => {
                if d >= 64 || (*target_points as u128) < (1u128 << d) {
                    return Err(Error::InvalidArgument(format!(
                        "grid target {target_points} below 2^{d}"
                    )));
                }
                Ok(())
            }
            Self::Pso { omega, cognitive, social } => {
                for v in [omega, cognitive, social] {
                    if !v.is_finite() || *v < 0.0 {
                        return Err(Error::InvalidArgument(format!("bad PSO coefficient {v}")));
                    }
                }
                Ok(())
            }
            Self::GpEi { len_scale_span, amplitude_span } => {
                for (lo, hi) in [len_scale_span, amplitude_span] {
                    if !(lo.is_finite() && hi.is_finite() && *lo > 0.0 && lo < hi) {
                        return Err(Error::InvalidArgument(format!(
                            "bad GP span ({lo}, {hi})"
                        )));
                    }
                }
                Ok(())
            }
        }
    }
}

/// Per-dimension lattice values: evenly spaced including both bounds, with
/// integer dimensions rounded into range and deduplicated.
pub(crate) fn grid_axis_values(domain: &DomainBox, target_points: u64) -> Vec<Vec<f64>> {
    let d = domain.dim();
    let n_g = ((target_points as f64).powf(1.0 / d as f64).round() as usize).max(2);
    (0..d)
        .map(|i| {
            let (lo, hi) = (domain.lower()[i], domain.upper()[i]);
            let mut vals: Vec<f64> = (0..n_g)
                .map(|k| lo + (hi - lo) * k as f64 / (n_g - 1) as f64)
                .collect();
            if domain.integer_dims().contains(&i) {
                let (ilo, ihi) = (lo.ceil(), hi.floor());
                for v in &mut vals {
                    *v = v.round().clamp(ilo, ihi);
                }
                vals.dedup();
            }
            vals
        })
        .collect()
}

struct GridState {
    axes: Vec<Vec<f64>>,
    size: u128,
    /// Indices still unused when the lattice is small enough to enumerate.
    remaining: Option<Vec<u128>>,
    used: HashSet<u128>,
}

impl GridState {
    fn new(domain: &DomainBox, target_points: u64) -> Self {
        let axes = grid_axis_values(domain, target_points);
        let size = axes.iter().fold(1u128, |acc, a| acc * a.len() as u128);
        let remaining = if size <= 1 << 16 {
            Some((0..size).collect())
        } else {
            None
        };
        Self { axes, size, remaining, used: HashSet::new() }
    }

    fn decode(&self, mut index: u128) -> Vec<f64> {
        self.axes
            .iter()
            .map(|axis| {
                let n = axis.len() as u128;
                let v = axis[(index % n) as usize];
                index /= n;
                v
            })
            .collect()
    }

    fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Vec<f64>> {
        if let Some(remaining) = &mut self.remaining {
            if remaining.is_empty() {
                return Err(Error::BudgetExhausted("grid lattice exhausted".into()));
            }
            let k = rng.random_range(0..remaining.len());
            let index = remaining.swap_remove(k);
            return Ok(self.decode(index));
        }
        if self.used.len() as u128 >= self.size {
            return Err(Error::BudgetExhausted("grid lattice exhausted".into()));
        }
        loop {
            let index = rand_u128_below(rng, self.size);
            if self.used.insert(index) {
                return Ok(self.decode(index));
            }
        }
    }
}

fn rand_u128_below<R: Rng + ?Sized>(rng: &mut R, bound: u128) -> u128 {
    // rejection sampling keeps the draw unbiased
    let overflow = (u128::MAX % bound + 1) % bound;
    let cap = u128::MAX - overflow;
    loop {
        let v: u128 = rng.random();
        if v <= cap {
            return v % bound;
        }
    }
}

struct PsoState {
    omega: f64,
    cognitive: f64,
    social: f64,
    positions: Vec<Vec<f64>>,
    velocities: Vec<Vec<f64>>,
    pbest_pos: Vec<Vec<f64>>,
    pbest_val: Vec<f64>,
    gbest_pos: Vec<f64>,
    gbest_val: f64,
}

impl PsoState {
    fn new<R: Rng + ?Sized>(
        domain: &DomainBox,
        omega: f64,
        cognitive: f64,
        social: f64,
        rng: &mut R,
    ) -> Self {
        let swarm = 2 * domain.dim();
        let positions: Vec<Vec<f64>> = (0..swarm).map(|_| domain.sample_uniform(rng)).collect();
        Self {
            omega,
            cognitive,
            social,
            velocities: vec![vec![0.0; domain.dim()]; swarm],
            pbest_pos: positions.clone(),
            pbest_val: vec![f64::NEG_INFINITY; swarm],
            gbest_pos: positions[0].clone(),
            gbest_val: f64::NEG_INFINITY,
            positions,
        }
    }

    fn swarm_size(&self) -> usize {
        self.positions.len()
    }

    fn advance<R: Rng + ?Sized>(&mut self, particle: usize, domain: &DomainBox, rng: &mut R) {
        for j in 0..domain.dim() {
            let r1: f64 = rng.random();
            let r2: f64 = rng.random();
            let x = self.positions[particle][j];
            let v = self.omega * self.velocities[particle][j]
                + self.cognitive * r1 * (self.pbest_pos[particle][j] - x)
                + self.social * r2 * (self.gbest_pos[j] - x);
            let mut nx = x + v;
            let mut nv = v;
            if nx < domain.lower()[j] {
                nx = domain.lower()[j];
                nv = 0.0;
            } else if nx > domain.upper()[j] {
                nx = domain.upper()[j];
                nv = 0.0;
            }
            self.positions[particle][j] = nx;
            self.velocities[particle][j] = nv;
        }
    }

    fn record(&mut self, particle: usize, y: f64) {
        if y > self.pbest_val[particle] {
            self.pbest_val[particle] = y;
            self.pbest_pos[particle] = self.positions[particle].clone();
        }
        if y > self.gbest_val {
            self.gbest_val = y;
            self.gbest_pos = self.positions[particle].clone();
        }
    }
}

struct GpEiState {
    n_init: usize,
    len_scale_span: (f64, f64),
    amplitude_span: (f64, f64),
    model: Option<GpModel>,
}

enum KindState {
    Random,
    Grid(GridState),
    Pso(PsoState),
    GpEi(GpEiState),
}

/// One optimizer run in progress. Call suggest, evaluate the returned point,
/// then hand the observed value back through observe; repeat up to budget.
pub struct OptState {
    config: OptimizerConfig,
    domain: DomainBox,
    budget: usize,
    rng: ChaCha8Rng,
    history: Vec<(Vec<f64>, f64)>,
    pending: Option<Vec<f64>>,
    kind: KindState,
}

impl OptState {
    pub fn new(config: OptimizerConfig, domain: DomainBox, budget: usize, seed: u64) -> Result<Self> {
        if budget < 1 {
            return Err(Error::InvalidArgument("budget must be >= 1".into()));
        }
        config.validate(domain.dim())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kind = match &config {
            OptimizerConfig::Random => KindState::Random,
            OptimizerConfig::Grid { target_points } => {
                KindState::Grid(GridState::new(&domain, *target_points))
            }
            OptimizerConfig::Pso { omega, cognitive, social } => {
                KindState::Pso(PsoState::new(&domain, *omega, *cognitive, *social, &mut rng))
            }
            OptimizerConfig::GpEi { len_scale_span, amplitude_span } => {
                let d = domain.dim();
                KindState::GpEi(GpEiState {
                    n_init: (2 * d + 2).min((budget / 4).max(2)),
                    len_scale_span: *len_scale_span,
                    amplitude_span: *amplitude_span,
                    model: None,
                })
            }
        };
        Ok(Self { config, domain, budget, rng, history: Vec::new(), pending: None, kind })
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    pub fn history(&self) -> &[(Vec<f64>, f64)] {
        &self.history
    }

    pub fn remaining(&self) -> usize {
        self.budget - self.history.len()
    }

    /// Next point to evaluate, in-domain with integer dims rounded.
    pub fn suggest(&mut self) -> Result<Vec<f64>> {
        if self.pending.is_some() {
            return Err(Error::Protocol("suggest called with an observation pending".into()));
        }
        if self.history.len() >= self.budget {
            return Err(Error::BudgetExhausted(format!("budget {} spent", self.budget)));
        }
        let x = match &mut self.kind {
            KindState::Random => {
                let raw = self.domain.sample_uniform(&mut self.rng);
                self.domain.round_into(&raw)
            }
            KindState::Grid(grid) => grid.draw(&mut self.rng)?,
            KindState::Pso(pso) => {
                let particle = self.history.len() % pso.swarm_size();
                if self.history.len() >= pso.swarm_size() {
                    pso.advance(particle, &self.domain, &mut self.rng);
                }
                self.domain.round_into(&pso.positions[particle])
            }
            KindState::GpEi(state) => {
                if self.history.len() < state.n_init {
                    let raw = self.domain.sample_uniform(&mut self.rng);
                    self.domain.round_into(&raw)
                } else {
                    if state.model.is_none() {
                        let xs: Vec<Vec<f64>> =
                            self.history.iter().map(|(x, _)| x.clone()).collect();
                        let ys: Vec<f64> = self.history.iter().map(|(_, y)| *y).collect();
                        state.model = Some(gp_fit(
                            &xs,
                            &ys,
                            self.domain.diagonal(),
                            state.len_scale_span,
                            state.amplitude_span,
                        )?);
                    }
                    let model = state.model.as_ref().expect("just fitted");
                    let best_val = self
                        .history
                        .iter()
                        .map(|(_, y)| *y)
                        .fold(f64::NEG_INFINITY, f64::max);
                    // earliest observation attaining the best value
                    let incumbent = self
                        .history
                        .iter()
                        .find(|(_, y)| *y == best_val)
                        .map(|(x, _)| x.clone())
                        .expect("best exists");
                    let d = self.domain.dim();
                    let jitter_sd = EI_INCUMBENT_JITTER * self.domain.diagonal();
                    let mut candidates: Vec<Vec<f64>> =
                        Vec::with_capacity(EI_UNIFORM_CANDIDATES_PER_DIM * d + EI_INCUMBENT_CANDIDATES);
                    for _ in 0..EI_UNIFORM_CANDIDATES_PER_DIM * d {
                        let raw = self.domain.sample_uniform(&mut self.rng);
                        candidates.push(self.domain.round_into(&raw));
                    }
                    for _ in 0..EI_INCUMBENT_CANDIDATES {
                        let raw: Vec<f64> = incumbent
                            .iter()
                            .map(|&c| {
                                let z: f64 = self.rng.sample(StandardNormal);
                                c + jitter_sd * z
                            })
                            .collect();
                        candidates.push(self.domain.round_into(&raw));
                    }
                    let mut best_ei = f64::NEG_INFINITY;
                    let mut choice = 0;
                    for (i, cand) in candidates.iter().enumerate() {
                        let (mu, var) = gp_predict(model, cand);
                        let ei = expected_improvement(mu, var.sqrt(), best_val);
                        if ei > best_ei {
                            best_ei = ei;
                            choice = i;
                        }
                    }
                    candidates.swap_remove(choice)
                }
            }
        };
        self.pending = Some(x.clone());
        Ok(x)
    }

    /// Record the observed value for the last suggestion.
    pub fn observe(&mut self, x: &[f64], y: f64) -> Result<()> {
        let pending = self
            .pending
            .as_ref()
            .ok_or_else(|| Error::Protocol("observe called without a suggestion".into()))?;
        if pending.as_slice() != x {
            return Err(Error::Protocol("observed point is not the last suggestion".into()));
        }
        if !y.is_finite() {
            return Err(Error::InvalidArgument(format!("observed value {y} not finite")));
        }
        match &mut self.kind {
            KindState::Pso(pso) => {
                let particle = self.history.len() % pso.swarm_size();
                pso.record(particle, y);
            }
            KindState::GpEi(state) => state.model = None,
            KindState::Random | KindState::Grid(_) => {}
        }
        self.history.push((self.pending.take().expect("checked above"), y));
        Ok(())
    }
}

/// Execute a full budgeted run of one optimizer on one function. The seed
/// splits into independent optimizer and noise streams, so runs are
/// deterministic in (config, function, budget, seed).
pub fn run_optimization(
    config: &OptimizerConfig,
    f: &TestFunction,
    budget: usize,
    seed: u64,
) -> Result<RunRecord> {
    let mut state = OptState::new(config.clone(), f.domain().clone(), budget, child_seed(seed, 1))?;
    let mut noise_rng = ChaCha8Rng::seed_from_u64(child_seed(seed, 2));
    let mut steps = Vec::with_capacity(budget);
    for _ in 0..budget {
        let x = state.suggest()?;
        let ev = f.evaluate(&x, &mut noise_rng)?;
        state.observe(&x, ev.observed_value)?;
        steps.push(RunStep { x, observed: ev.observed_value, true_value: ev.true_value });
    }
    let observed: Vec<f64> = steps.iter().map(|s| s.observed).collect();
    let true_values: Vec<f64> = steps.iter().map(|s| s.true_value).collect();
    let metrics = metrics::run_metrics(&observed, &true_values, f.f_lb())?;
    Ok(RunRecord {
        function_id: f.id().to_string(),
        attributes: f.attributes().iter().copied().collect(),
        dimension: f.dim(),
        optimizer_id: config.id().to_string(),
        seed,
        repeat: 0,
        f_lb: f.f_lb(),
        steps,
        metrics,
    })
}
