//! One-sided significance tests used to build rankings: Mann-Whitney U with
//! midranks and tie-corrected variance (production path), an exact
//! permutation oracle for small samples, and a Welch t alternative kept for
//! comparison runs.

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    AGreater,
    BGreater,
    NoDifference,
}

/// Outcome of a Mann-Whitney comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome {
    pub direction: Direction,
    pub u_a: f64,
    /// One-sided p of the observed direction (the smaller of the two tails).
    pub p_one_sided: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchOutcome {
    pub direction: Direction,
    pub t: f64,
    pub p_one_sided: f64,
}

/// Which two-sample test backs pairwise comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TestKind {
    #[default]
    MannWhitneyU,
    WelchT,
}

fn std_normal_cdf(z: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("unit normal").cdf(z)
}

fn validate_samples(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("samples must be nonempty".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("samples must be finite".into()));
    }
    Ok(())
}

fn validate_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} not in (0, 0.5]")));
    }
    Ok(())
}

/// Midranks (1-based, ties averaged) of the pooled sample.
fn midranks(pool: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_unstable_by(|&i, &j| pool[i].partial_cmp(&pool[j]).expect("finite values"));
    let mut ranks = vec![0.0; pool.len()];
    let mut i = 0;
    while i < pool.len() {
        let mut j = i;
        while j + 1 < pool.len() && pool[order[j + 1]] == pool[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[order[k]] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Sum over tie groups of t^3 - t in the pooled sample (pool must be the
/// concatenation the ranks were computed from).
fn tie_term(pool: &mut [f64]) -> f64 {
    pool.sort_unstable_by(|x, y| x.partial_cmp(y).expect("finite values"));
    let mut total = 0.0;
    let mut i = 0;
    while i < pool.len() {
        let mut j = i;
        while j + 1 < pool.len() && pool[j + 1] == pool[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        total += t * t * t - t;
        i = j + 1;
    }
    total
}

fn u_statistics(a: &[f64], b: &[f64]) -> (f64, f64) {
    let pool: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pool);
    let n_a = a.len() as f64;
    let n_b = b.len() as f64;
    let r_a: f64 = ranks[..a.len()].iter().sum();
    let u_a = r_a - n_a * (n_a + 1.0) / 2.0;
    (u_a, n_a * n_b - u_a)
}

/// One-sided normal-approximation p-values (p for "a greater", p for
/// "b greater"), tie-corrected variance, 0.5 continuity correction.
/// Returns (0.5, 0.5) when every pooled value is tied.
pub fn mann_whitney_ps(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    validate_samples(a, b)?;
    let (u_a, u_b) = u_statistics(a, b);
    let n_a = a.len() as f64;
    let n_b = b.len() as f64;
    let n = n_a + n_b;
    let mut pool: Vec<f64> = a.iter().chain(b).copied().collect();
    let ties = tie_term(&mut pool);
    let var = n_a * n_b / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    if var <= 0.0 {
        return Ok((0.5, 0.5));
    }
    let sd = var.sqrt();
    let mu = n_a * n_b / 2.0;
    let p_a = 1.0 - std_normal_cdf((u_a - mu - 0.5) / sd);
    let p_b = 1.0 - std_normal_cdf((u_b - mu - 0.5) / sd);
    Ok((p_a, p_b))
}

/// One-sided Mann-Whitney U test at level alpha.
pub fn mann_whitney(a: &[f64], b: &[f64], alpha: f64) -> Result<TestOutcome> {
    validate_alpha(alpha)?;
    let (p_a, p_b) = mann_whitney_ps(a, b)?;
    let (u_a, _) = u_statistics(a, b);
    let direction = if p_a < alpha {
        Direction::AGreater
    } else if p_b < alpha {
        Direction::BGreater
    } else {
        Direction::NoDifference
    };
    Ok(TestOutcome { direction, u_a, p_one_sided: p_a.min(p_b) })
}

/// Exact permutation p-value for the alternative "b greater": the proportion
/// of the C(N, n_a) label assignments of the pooled sample whose U_b is at
/// least the observed one (midranks under ties). Oracle for validating the
/// normal approximation; sizes capped so enumeration stays cheap.
pub fn mann_whitney_exact(a: &[f64], b: &[f64]) -> Result<f64> {
    validate_samples(a, b)?;
    let n = a.len() + b.len();
    if n > 14 {
        return Err(Error::InvalidArgument(format!(
            "exact test limited to 14 pooled values, got {n}"
        )));
    }
    let pool: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pool);
    let n_a = a.len();
    let offset = n_a as f64 * (n_a as f64 + 1.0) / 2.0;
    let prod = (n_a * b.len()) as f64;
    let u_b_of = |mask: u32| -> f64 {
        let mut r_a = 0.0;
        for (i, r) in ranks.iter().enumerate() {
            if mask & (1 << i) != 0 {
                r_a += r;
            }
        }
        prod - (r_a - offset)
    };
    let observed = u_b_of((1u32 << n_a) - 1);
    let mut total = 0u64;
    let mut at_least = 0u64;
    for mask in 0..(1u32 << n) {
        if mask.count_ones() as usize != n_a {
            continue;
        }
        total += 1;
        if u_b_of(mask) >= observed {
            at_least += 1;
        }
    }
    Ok(at_least as f64 / total as f64)
}

/// Upper bound on the family-wise type I error of C(m,2) independent pairwise
/// tests at level alpha: 1 - (1-alpha)^C(m,2).
pub fn family_wise_bound(alpha: f64, m: u32) -> f64 {
    assert!((0.0..=1.0).contains(&alpha), "alpha {alpha} not in [0,1]");
    let m = m as u64;
    let c = m * m.saturating_sub(1) / 2;
    1.0 - (1.0 - alpha).powf(c as f64)
}

/// One-sided Welch t test (unequal variances), comparison mode only.
pub fn welch_t(a: &[f64], b: &[f64], alpha: f64) -> Result<WelchOutcome> {
    validate_alpha(alpha)?;
    validate_samples(a, b)?;
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidArgument("welch_t needs >= 2 samples per arm".into()));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let var = |v: &[f64], m: f64| {
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
    };
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (var(a, ma), var(b, mb));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let se2 = va / na + vb / nb;
    if se2 == 0.0 {
        // both arms constant
        return Ok(if ma == mb {
            WelchOutcome { direction: Direction::NoDifference, t: 0.0, p_one_sided: 0.5 }
        } else {
            let dir = if ma > mb { Direction::AGreater } else { Direction::BGreater };
            WelchOutcome { direction: dir, t: if ma > mb { f64::INFINITY } else { f64::NEG_INFINITY }, p_one_sided: 0.0 }
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2
        / (va * va / (na * na * (na - 1.0)) + vb * vb / (nb * nb * (nb - 1.0)));
    let dist = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::Numerical(format!("t distribution: {e}")))?;
    let p_a = 1.0 - dist.cdf(t);
    let p_b = dist.cdf(t);
    let direction = if p_a < alpha {
        Direction::AGreater
    } else if p_b < alpha {
        Direction::BGreater
    } else {
        Direction::NoDifference
    };
    Ok(WelchOutcome { direction, t, p_one_sided: p_a.min(p_b) })
}

/// Directed comparison under the chosen test.
pub fn compare(kind: TestKind, a: &[f64], b: &[f64], alpha: f64) -> Result<Direction> {
    match kind {
        TestKind::MannWhitneyU => Ok(mann_whitney(a, b, alpha)?.direction),
        TestKind::WelchT => Ok(welch_t(a, b, alpha)?.direction),
    }
}
