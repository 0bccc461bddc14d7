//! Registry of closed-form benchmark functions, maximization convention.
//!
//! Every function carries a certified lower bound `f_lb` over its domain (the
//! AUC metric needs it), optional known optimum, an attribute tag set, and a
//! relative noise level delta applied as observed = (1 + delta*Z) * true.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box domain, optionally with integer-constrained dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
    integer_dims: BTreeSet<usize>,
}

impl DomainBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        Self::with_integer_dims(lower, upper, BTreeSet::new())
    }

    pub fn with_integer_dims(
        lower: Vec<f64>,
        upper: Vec<f64>,
        integer_dims: BTreeSet<usize>,
    ) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidArgument(format!(
                "domain needs matching nonempty bounds, got {} lower / {} upper",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !l.is_finite() || !u.is_finite() || l >= u {
                return Err(Error::InvalidArgument(format!(
                    "dimension {i}: invalid interval [{l}, {u}]"
                )));
            }
        }
        for &i in &integer_dims {
            if i >= lower.len() {
                return Err(Error::InvalidArgument(format!(
                    "integer dimension index {i} out of range for d={}",
                    lower.len()
                )));
            }
            // need at least two integers so an integer grid is meaningful
            if upper[i].floor() - lower[i].ceil() < 1.0 {
                return Err(Error::InvalidArgument(format!(
                    "integer dimension {i}: [{}, {}] holds fewer than two integers",
                    lower[i], upper[i]
                )));
            }
        }
        Ok(DomainBox { lower, upper, integer_dims })
    }

    /// Convenience: the same interval in every dimension.
    pub fn cube(d: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; d], vec![upper; d])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn integer_dims(&self) -> &BTreeSet<usize> {
        &self.integer_dims
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(&self.lower)
                .zip(&self.upper)
                .all(|((v, l), u)| v.is_finite() && *v >= *l && *v <= *u)
    }

    /// Euclidean length of the main diagonal; the GP length-scale grid and the
    /// EI perturbation scale are expressed relative to it.
    pub fn diagonal(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| (u - l) * (u - l))
            .sum::<f64>()
            .sqrt()
    }

    /// Clip into bounds, round integer dimensions half away from zero, then
    /// clamp those back into the integers available inside the interval.
    pub fn round_into(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(x.len());
        for (i, &v) in x.iter().enumerate() {
            let mut v = v.clamp(self.lower[i], self.upper[i]);
            if self.integer_dims.contains(&i) {
                v = v.round().clamp(self.lower[i].ceil(), self.upper[i].floor());
            }
            out.push(v);
        }
        out
    }

    /// Uniform draw from the box, integer dimensions rounded.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let raw: Vec<f64> = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(&l, &u)| l + (u - l) * rng.random::<f64>())
            .collect();
        self.round_into(&raw)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Attribute {
    Noisy,
    Oscillatory,
    Unimodal,
    BoundaryOptimum,
    MixedInteger,
    DiscreteValued,
    MostlyBoring,
    Nonsmooth,
}

impl Attribute {
    pub const ALL: [Attribute; 8] = [
        Attribute::Noisy,
        Attribute::Oscillatory,
        Attribute::Unimodal,
        Attribute::BoundaryOptimum,
        Attribute::MixedInteger,
        Attribute::DiscreteValued,
        Attribute::MostlyBoring,
        Attribute::Nonsmooth,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Attribute::Noisy => "Noisy",
            Attribute::Oscillatory => "Oscillatory",
            Attribute::Unimodal => "Unimodal",
            Attribute::BoundaryOptimum => "BoundaryOptimum",
            Attribute::MixedInteger => "MixedInteger",
            Attribute::DiscreteValued => "DiscreteValued",
            Attribute::MostlyBoring => "MostlyBoring",
            Attribute::Nonsmooth => "Nonsmooth",
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Attribute {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Attribute::ALL
            .iter()
            .find(|a| a.name().to_ascii_lowercase() == lower)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("unknown attribute '{s}'")))
    }
}

/// Dimension strata used in the aggregate tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimBucket {
    D2,
    D3To5,
    D6To9,
    D10Plus,
}

impl DimBucket {
    pub const ALL: [DimBucket; 4] =
        [DimBucket::D2, DimBucket::D3To5, DimBucket::D6To9, DimBucket::D10Plus];

    pub fn of_dim(d: usize) -> Option<DimBucket> {
        match d {
            2 => Some(DimBucket::D2),
            3..=5 => Some(DimBucket::D3To5),
            6..=9 => Some(DimBucket::D6To9),
            d if d >= 10 => Some(DimBucket::D10Plus),
            _ => None,
        }
    }

    pub fn contains(&self, d: usize) -> bool {
        DimBucket::of_dim(d) == Some(*self)
    }

    pub fn label(&self) -> &'static str {
        match self {
            DimBucket::D2 => "2",
            DimBucket::D3To5 => "3-5",
            DimBucket::D6To9 => "6-9",
            DimBucket::D10Plus => "10+",
        }
    }
}

/// One function evaluation: the true value and the noise-perturbed value the
/// optimizer is shown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub x: Vec<f64>,
    pub true_value: f64,
    pub observed_value: f64,
    /// The standard normal variate used; 0 for noiseless functions.
    pub noise_draw: f64,
}

type Objective = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct TestFunction {
    id: String,
    domain: DomainBox,
    attributes: BTreeSet<Attribute>,
    noise_level: f64,
    f_lb: f64,
    f_opt: Option<f64>,
    x_opt: Option<Vec<f64>>,
    objective: Objective,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("id", &self.id)
            .field("dim", &self.domain.dim())
            .field("attributes", &self.attributes)
            .field("noise_level", &self.noise_level)
            .field("f_lb", &self.f_lb)
            .field("f_opt", &self.f_opt)
            .finish()
    }
}

fn noisy_value(true_value: f64, delta: f64, z: f64) -> f64 {
    (1.0 + delta * z) * true_value
}

impl TestFunction {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: impl Into<String>,
        domain: DomainBox,
        attributes: BTreeSet<Attribute>,
        noise_level: f64,
        f_lb: f64,
        f_opt: Option<f64>,
        x_opt: Option<Vec<f64>>,
        objective: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::InvalidArgument("function id must be nonempty".into()));
        }
        if !noise_level.is_finite() || noise_level < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "{id}: noise level {noise_level} must be finite and >= 0"
            )));
        }
        if attributes.contains(&Attribute::Noisy) != (noise_level > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "{id}: Noisy attribute must match noise level {noise_level}"
            )));
        }
        if let Some(fo) = f_opt {
            if fo < f_lb {
                return Err(Error::InvalidArgument(format!(
                    "{id}: f_opt {fo} below lower bound {f_lb}"
                )));
            }
        }
        if let Some(xo) = &x_opt {
            if !domain.contains(xo) {
                return Err(Error::InvalidArgument(format!("{id}: x_opt outside domain")));
            }
            if attributes.contains(&Attribute::BoundaryOptimum) {
                let on_boundary = xo.iter().enumerate().any(|(i, &v)| {
                    v == domain.lower()[i] || v == domain.upper()[i]
                });
                if !on_boundary {
                    return Err(Error::InvalidArgument(format!(
                        "{id}: BoundaryOptimum requires x_opt on the boundary"
                    )));
                }
            }
        }
        Ok(TestFunction {
            id,
            domain,
            attributes,
            noise_level,
            f_lb,
            f_opt,
            x_opt,
            objective: Arc::new(objective),
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn attributes(&self) -> &BTreeSet<Attribute> {
        &self.attributes
    }

    pub fn noise_level(&self) -> f64 {
        self.noise_level
    }

    pub fn f_lb(&self) -> f64 {
        self.f_lb
    }

    pub fn f_opt(&self) -> Option<f64> {
        self.f_opt
    }

    pub fn x_opt(&self) -> Option<&[f64]> {
        self.x_opt.as_deref()
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if !self.domain.contains(x) {
            return Err(Error::OutOfDomain(format!("{}: point {x:?} not in domain", self.id)));
        }
        for &i in self.domain.integer_dims() {
            if x[i] != x[i].trunc() {
                return Err(Error::IntegerConstraint(format!(
                    "{}: dimension {i} requires an integer, got {}",
                    self.id, x[i]
                )));
            }
        }
        Ok(())
    }

    /// Noise-free objective value.
    pub fn true_value(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok((self.objective)(x))
    }

    /// Evaluate with the noise model. Draws exactly one standard normal
    /// variate iff the function is noisy, so rng streams stay aligned.
    pub fn evaluate<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Result<Evaluation> {
        let true_value = self.true_value(x)?;
        let (observed_value, noise_draw) = if self.noise_level > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            (noisy_value(true_value, self.noise_level, z), z)
        } else {
            (true_value, 0.0)
        };
        Ok(Evaluation { x: x.to_vec(), true_value, observed_value, noise_draw })
    }

    pub fn round_to_domain(&self, x: &[f64]) -> Vec<f64> {
        self.domain.round_into(x)
    }
}

/// Attribute/dimension filter for registry queries. Empty filter matches all.
#[derive(Debug, Clone, Default)]
pub struct QueryFilter {
    pub attributes: BTreeSet<Attribute>,
    pub bucket: Option<DimBucket>,
}

impl QueryFilter {
    pub fn with_attribute(mut self, a: Attribute) -> Self {
        self.attributes.insert(a);
        self
    }

    pub fn in_bucket(mut self, b: DimBucket) -> Self {
        self.bucket = Some(b);
        self
    }

    pub fn matches(&self, f: &TestFunction) -> bool {
        self.attributes.iter().all(|a| f.attributes().contains(a))
            && self.bucket.map_or(true, |b| b.contains(f.dim()))
    }
}

#[derive(Debug, Clone, Default)]
pub struct Registry {
    by_id: BTreeMap<String, TestFunction>,
}

impl Registry {
    pub fn new() -> Self {
        Registry::default()
    }

    pub fn insert(&mut self, f: TestFunction) -> Result<()> {
        if self.by_id.contains_key(f.id()) {
            return Err(Error::DuplicateKey(format!("function id '{}'", f.id())));
        }
        self.by_id.insert(f.id().to_string(), f);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&TestFunction> {
        self.by_id.get(id)
    }

    pub fn require(&self, id: &str) -> Result<&TestFunction> {
        self.get(id)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown function id '{id}'")))
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }

    /// Ids in sorted order.
    pub fn ids(&self) -> Vec<&str> {
        self.by_id.keys().map(String::as_str).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &TestFunction> {
        self.by_id.values()
    }

    /// Functions matching all requested attributes and the bucket, sorted by id.
    pub fn query(&self, filter: &QueryFilter) -> Vec<&TestFunction> {
        self.by_id.values().filter(|f| filter.matches(f)).collect()
    }

    /// Human-readable manifest table.
    pub fn manifest(&self) -> String {
        let mut rows = vec![[
            "id".to_string(),
            "dim".to_string(),
            "bounds".to_string(),
            "int_dims".to_string(),
            "attributes".to_string(),
            "delta".to_string(),
            "f_lb".to_string(),
            "f_opt".to_string(),
        ]];
        for f in self.by_id.values() {
            let d = f.domain();
            let uniform = d.lower().windows(2).all(|w| w[0] == w[1])
                && d.upper().windows(2).all(|w| w[0] == w[1]);
            let bounds = if uniform {
                format!("[{}, {}]^{}", d.lower()[0], d.upper()[0], d.dim())
            } else {
                d.lower()
                    .iter()
                    .zip(d.upper())
                    .map(|(l, u)| format!("[{l}, {u}]"))
                    .collect::<Vec<_>>()
                    .join("x")
            };
            let ints = if d.integer_dims().is_empty() {
                "-".to_string()
            } else {
                d.integer_dims()
                    .iter()
                    .map(|i| i.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            };
            let attrs = f
                .attributes()
                .iter()
                .map(|a| a.name())
                .collect::<Vec<_>>()
                .join("+");
            rows.push([
                f.id().to_string(),
                f.dim().to_string(),
                bounds,
                ints,
                attrs,
                format!("{}", f.noise_level()),
                format!("{}", f.f_lb()),
                f.f_opt().map_or("-".to_string(), |v| format!("{v}")),
            ]);
        }
        let mut widths = [0usize; 8];
        for row in &rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::new();
        for row in &rows {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(cell, w)| format!("{cell:<w$}"))
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }

    /// The built-in suite: every attribute covered by at least two functions,
    /// every dimension bucket (2, 3-5, 6-9, 10+) by at least two.
    pub fn standard() -> Registry {
        let mut reg = Registry::new();
        for f in standard_functions() {
            reg.insert(f).expect("standard registry ids are unique");
        }
        reg
    }
}

/// Shifted optimum coordinates: off-midpoint, non-integer, fixed per index so
/// suites are reproducible. Cycled/truncated to the needed dimension.
const CENTERS: [f64; 12] =
    [1.3, -2.7, 0.9, 3.1, -4.1, 2.3, -0.7, 1.9, -3.3, 0.6, 2.1, -1.6];

fn centers(d: usize) -> Vec<f64> {
    (0..d).map(|i| CENTERS[i % CENTERS.len()]).collect()
}

fn attr_set(attrs: &[Attribute]) -> BTreeSet<Attribute> {
    attrs.iter().copied().collect()
}

/// Largest squared distance from c to either end of [l, u], per coordinate.
fn max_sq_gap(c: &[f64], l: f64, u: f64) -> f64 {
    c.iter().map(|&ci| (ci - l).powi(2).max((u - ci).powi(2))).sum()
}

fn sphere2() -> Result<TestFunction> {
    TestFunction::new(
        "sphere2",
        DomainBox::cube(2, -5.0, 5.0)?,
        attr_set(&[Attribute::Unimodal]),
        0.0,
        -50.0,
        Some(0.0),
        Some(vec![0.0, 0.0]),
        |x| -x.iter().map(|v| v * v).sum::<f64>(),
    )
}

fn shifted_sphere(d: usize, delta: f64) -> Result<TestFunction> {
    let c = centers(d);
    let f_lb = -max_sq_gap(&c, -5.0, 5.0);
    let id = if delta > 0.0 { format!("noisy_sphere{d}") } else { format!("shifted_sphere{d}") };
    let attrs = if delta > 0.0 {
        attr_set(&[Attribute::Unimodal, Attribute::Noisy])
    } else {
        attr_set(&[Attribute::Unimodal])
    };
    let c2 = c.clone();
    TestFunction::new(
        id,
        DomainBox::cube(d, -5.0, 5.0)?,
        attrs,
        delta,
        f_lb,
        Some(0.0),
        Some(c),
        move |x| -x.iter().zip(&c2).map(|(v, ci)| (v - ci) * (v - ci)).sum::<f64>(),
    )
}

fn abs_sum(d: usize) -> Result<TestFunction> {
    // asymmetric box keeps the formula-pinned optimum off the midpoint
    TestFunction::new(
        format!("abs_sum{d}"),
        DomainBox::cube(d, -3.5, 6.5)?,
        attr_set(&[Attribute::Unimodal, Attribute::Nonsmooth]),
        0.0,
        -6.5 * d as f64,
        Some(0.0),
        Some(vec![0.0; d]),
        |x| -x.iter().map(|v| v.abs()).sum::<f64>(),
    )
}

fn linear_slope(d: usize) -> Result<TestFunction> {
    TestFunction::new(
        format!("linear_slope{d}"),
        DomainBox::cube(d, -1.0, 1.0)?,
        attr_set(&[Attribute::Unimodal, Attribute::BoundaryOptimum]),
        0.0,
        -(d as f64),
        Some(d as f64),
        Some(vec![1.0; d]),
        |x| x.iter().sum::<f64>(),
    )
}

fn cosine_mixture(d: usize) -> Result<TestFunction> {
    TestFunction::new(
        format!("cosine_mixture{d}"),
        DomainBox::cube(d, -1.0, 1.0)?,
        attr_set(&[Attribute::Oscillatory]),
        0.0,
        -1.1 * d as f64,
        Some(0.1 * d as f64),
        Some(vec![0.0; d]),
        |x| {
            0.1 * x.iter().map(|v| (5.0 * std::f64::consts::PI * v).cos()).sum::<f64>()
                - x.iter().map(|v| v * v).sum::<f64>()
        },
    )
}

fn rastrigin(d: usize, delta: f64) -> Result<TestFunction> {
    let c = centers(d);
    // cos term is bounded by 10 per coordinate; quadratic term by the corner gap
    let f_lb = -(20.0 * d as f64 + max_sq_gap(&c, -5.12, 5.12));
    let id = if delta > 0.0 { format!("noisy_rastrigin{d}") } else { format!("rastrigin{d}") };
    let attrs = if delta > 0.0 {
        attr_set(&[Attribute::Oscillatory, Attribute::Noisy])
    } else {
        attr_set(&[Attribute::Oscillatory])
    };
    let c2 = c.clone();
    TestFunction::new(
        id,
        DomainBox::cube(d, -5.12, 5.12)?,
        attrs,
        delta,
        f_lb,
        Some(0.0),
        Some(c),
        move |x| {
            let s: f64 = x
                .iter()
                .zip(&c2)
                .map(|(v, ci)| {
                    let z = v - ci;
                    z * z - 10.0 * (2.0 * std::f64::consts::PI * z).cos()
                })
                .sum();
            -(10.0 * d as f64 + s)
        },
    )
}

fn floor_quad(d: usize) -> Result<TestFunction> {
    TestFunction::new(
        format!("floor_quad{d}"),
        DomainBox::cube(d, 0.0, 10.0)?,
        attr_set(&[Attribute::DiscreteValued, Attribute::BoundaryOptimum]),
        0.0,
        0.0,
        Some(100.0 * d as f64),
        Some(vec![10.0; d]),
        |x| x.iter().map(|v| v * v).sum::<f64>().floor(),
    )
}

fn gaussian_bump(d: usize, delta: f64) -> Result<TestFunction> {
    let c: Vec<f64> = centers(d).iter().map(|v| 0.5 + v / 12.0).collect();
    let id = if delta > 0.0 { format!("noisy_bump{d}") } else { format!("gaussian_bump{d}") };
    let attrs = if delta > 0.0 {
        attr_set(&[Attribute::MostlyBoring, Attribute::Noisy])
    } else {
        attr_set(&[Attribute::MostlyBoring])
    };
    let c2 = c.clone();
    TestFunction::new(
        id,
        DomainBox::cube(d, 0.0, 1.0)?,
        attrs,
        delta,
        0.0,
        Some(1.0),
        Some(c),
        move |x| {
            let s: f64 = x.iter().zip(&c2).map(|(v, ci)| (v - ci) * (v - ci)).sum();
            (-100.0 * s).exp()
        },
    )
}

fn int_sphere(d: usize, int_dims: &[usize]) -> Result<TestFunction> {
    let ints: BTreeSet<usize> = int_dims.iter().copied().collect();
    let c: Vec<f64> = centers(d)
        .iter()
        .enumerate()
        .map(|(i, &v)| if ints.contains(&i) { v.round() } else { v })
        .collect();
    let f_lb = -max_sq_gap(&c, -5.0, 5.0);
    let c2 = c.clone();
    TestFunction::new(
        format!("int_sphere{d}"),
        DomainBox::with_integer_dims(vec![-5.0; d], vec![5.0; d], ints)?,
        attr_set(&[Attribute::MixedInteger, Attribute::Unimodal]),
        0.0,
        f_lb,
        Some(0.0),
        Some(c),
        move |x| -x.iter().zip(&c2).map(|(v, ci)| (v - ci) * (v - ci)).sum::<f64>(),
    )
}

fn standard_functions() -> Vec<TestFunction> {
    let fns: Vec<Result<TestFunction>> = vec![
        sphere2(),
        shifted_sphere(4, 0.0),
        shifted_sphere(7, 0.0),
        shifted_sphere(11, 0.0),
        abs_sum(2),
        abs_sum(12),
        linear_slope(5),
        linear_slope(8),
        cosine_mixture(2),
        cosine_mixture(4),
        rastrigin(3, 0.0),
        rastrigin(10, 0.0),
        floor_quad(2),
        floor_quad(3),
        gaussian_bump(2, 0.0),
        gaussian_bump(6, 0.0),
        int_sphere(2, &[0]),
        int_sphere(5, &[0, 2, 4]),
        shifted_sphere(2, 1e-2),
        rastrigin(3, 1e-3),
        gaussian_bump(6, 1e-1),
    ];
    fns.into_iter()
        .map(|f| f.expect("standard suite definitions are valid"))
        .collect()
}
