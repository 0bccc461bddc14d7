//! Per-function partial rankings ("ballots") built from pairwise test
//! outcomes, with a secondary-metric refinement pass for tie groups, and
//! aggregation of ballots into Borda / Firsts / Top-Three tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::stattests::{self, Direction, TestKind};

/// Directed significant-win matrix over an ordered method list.
/// beats[i][j] means method i tested significantly greater than method j.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairwiseOutcomeMatrix {
    methods: Vec<String>,
    beats: Vec<Vec<bool>>,
}

impl PairwiseOutcomeMatrix {
    pub fn new(methods: Vec<String>, beats: Vec<Vec<bool>>) -> Result<Self> {
        let m = methods.len();
        if m < 2 {
            return Err(Error::InvalidArgument("need at least 2 methods".into()));
        }
        if methods.iter().collect::<BTreeSet<_>>().len() != m {
            return Err(Error::InvalidArgument("method ids must be unique".into()));
        }
        if beats.len() != m || beats.iter().any(|row| row.len() != m) {
            return Err(Error::InvalidArgument("beats matrix must be m x m".into()));
        }
        for i in 0..m {
            if beats[i][i] {
                return Err(Error::InvalidArgument(format!(
                    "matrix not irreflexive at {}",
                    methods[i]
                )));
            }
            for j in 0..i {
                if beats[i][j] && beats[j][i] {
                    return Err(Error::InvalidArgument(format!(
                        "matrix not antisymmetric at {} / {}",
                        methods[i], methods[j]
                    )));
                }
            }
        }
        Ok(Self { methods, beats })
    }

    pub fn methods(&self) -> &[String] {
        &self.methods
    }

    pub fn beats(&self, i: usize, j: usize) -> bool {
        self.beats[i][j]
    }

    /// Loss count per method: how many others significantly beat it.
    pub fn losses(&self) -> Vec<usize> {
        let m = self.methods.len();
        (0..m)
            .map(|i| (0..m).filter(|&j| self.beats[j][i]).count())
            .collect()
    }
}

/// Ordered tie groups (best first) plus the Borda value each group implies:
/// the number of methods in strictly worse groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialRanking {
    groups: Vec<Vec<String>>,
    borda: BTreeMap<String, usize>,
}

impl PartialRanking {
    pub fn from_groups(groups: Vec<Vec<String>>) -> Result<Self> {
        if groups.is_empty() || groups.iter().any(|g| g.is_empty()) {
            return Err(Error::InvalidArgument("groups must be nonempty".into()));
        }
        let total: usize = groups.iter().map(|g| g.len()).sum();
        let distinct: BTreeSet<&String> = groups.iter().flatten().collect();
        if distinct.len() != total {
            return Err(Error::InvalidArgument("groups must be disjoint".into()));
        }
        let mut groups: Vec<Vec<String>> = groups;
        for g in &mut groups {
            g.sort();
        }
        let mut borda = BTreeMap::new();
        let mut below: usize = total;
        for g in &groups {
            below -= g.len();
            for name in g {
                borda.insert(name.clone(), below);
            }
        }
        Ok(Self { groups, borda })
    }

    pub fn groups(&self) -> &[Vec<String>] {
        &self.groups
    }

    pub fn borda(&self, method: &str) -> Option<usize> {
        self.borda.get(method).copied()
    }

    pub fn borda_map(&self) -> &BTreeMap<String, usize> {
        &self.borda
    }

    pub fn methods(&self) -> BTreeSet<String> {
        self.borda.keys().cloned().collect()
    }

    pub fn is_total(&self) -> bool {
        self.groups.iter().all(|g| g.len() == 1)
    }

    /// "A > (B, C) > D" display form; parentheses mark tie groups.
    pub fn notation(&self) -> String {
        self.groups
            .iter()
            .map(|g| {
                if g.len() == 1 {
                    g[0].clone()
                } else {
                    format!("({})", g.join(", "))
                }
            })
            .collect::<Vec<_>>()
            .join(" > ")
    }
}

/// Run the chosen two-sample test on every unordered method pair and record
/// directed significant wins.
pub fn pairwise_outcomes_with(
    kind: TestKind,
    samples: &BTreeMap<String, Vec<f64>>,
    alpha: f64,
) -> Result<PairwiseOutcomeMatrix> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument("need at least 2 methods".into()));
    }
    for (name, vals) in samples {
        if vals.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "method {name} has {} samples, need >= 2",
                vals.len()
            )));
        }
    }
    let methods: Vec<String> = samples.keys().cloned().collect();
    let m = methods.len();
    let mut beats = vec![vec![false; m]; m];
    for i in 0..m {
        for j in (i + 1)..m {
            match stattests::compare(kind, &samples[&methods[i]], &samples[&methods[j]], alpha)? {
                Direction::AGreater => beats[i][j] = true,
                Direction::BGreater => beats[j][i] = true,
                Direction::NoDifference => {}
            }
        }
    }
    PairwiseOutcomeMatrix::new(methods, beats)
}

pub fn pairwise_outcomes(
    samples: &BTreeMap<String, Vec<f64>>,
    alpha: f64,
) -> Result<PairwiseOutcomeMatrix> {
    pairwise_outcomes_with(TestKind::MannWhitneyU, samples, alpha)
}

/// Group methods by ascending loss count; fewer losses ranks higher.
pub fn partial_ranking(outcomes: &PairwiseOutcomeMatrix) -> PartialRanking {
    let losses = outcomes.losses();
    let mut by_losses: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (i, l) in losses.iter().enumerate() {
        by_losses.entry(*l).or_default().push(outcomes.methods()[i].clone());
    }
    let groups: Vec<Vec<String>> = by_losses.into_values().collect();
    PartialRanking::from_groups(groups).expect("loss groups partition the methods")
}

/// Sub-rank every tie group of size >= 2 with pairwise tests on a secondary
/// metric and splice the sub-groups in place. Ties that survive both metrics
/// remain ties; methods never cross an existing group boundary.
pub fn refine_ranking_with(
    kind: TestKind,
    base: &PartialRanking,
    secondary: &BTreeMap<String, Vec<f64>>,
    alpha: f64,
) -> Result<PartialRanking> {
    let mut refined: Vec<Vec<String>> = Vec::new();
    for group in base.groups() {
        if group.len() < 2 {
            refined.push(group.clone());
            continue;
        }
        let mut sub_samples = BTreeMap::new();
        for name in group {
            let vals = secondary.get(name).ok_or_else(|| {
                Error::MissingData(format!("no secondary samples for {name}"))
            })?;
            sub_samples.insert(name.clone(), vals.clone());
        }
        let sub = partial_ranking(&pairwise_outcomes_with(kind, &sub_samples, alpha)?);
        refined.extend(sub.groups().iter().cloned());
    }
    PartialRanking::from_groups(refined)
}

pub fn refine_ranking(
    base: &PartialRanking,
    secondary: &BTreeMap<String, Vec<f64>>,
    alpha: f64,
) -> Result<PartialRanking> {
    refine_ranking_with(TestKind::MannWhitneyU, base, secondary, alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AggregateRow {
    pub borda_total: usize,
    pub firsts: usize,
    pub top_three: usize,
}

/// Ballot totals per method: summed Borda, first-group counts, and counts of
/// landing in one of the top three groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregateTable {
    rows: BTreeMap<String, AggregateRow>,
    ballots: usize,
}

impl AggregateTable {
    /// Zero-ballot table over a known method set (empty stratum placeholder).
    pub fn empty(methods: impl IntoIterator<Item = String>) -> Self {
        Self {
            rows: methods.into_iter().map(|m| (m, AggregateRow::default())).collect(),
            ballots: 0,
        }
    }

    pub fn rows(&self) -> &BTreeMap<String, AggregateRow> {
        &self.rows
    }

    pub fn ballots(&self) -> usize {
        self.ballots
    }

    pub fn row(&self, method: &str) -> Option<AggregateRow> {
        self.rows.get(method).copied()
    }

    /// Methods ordered by descending Borda total, name as tie-break.
    pub fn order(&self) -> Vec<String> {
        let mut names: Vec<String> = self.rows.keys().cloned().collect();
        names.sort_by(|a, b| self.rows[b].borda_total.cmp(&self.rows[a].borda_total).then(a.cmp(b)));
        names
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,borda,firsts,top_three\n");
        for name in self.order() {
            let r = self.rows[&name];
            let _ = writeln!(out, "{name},{},{},{}", r.borda_total, r.firsts, r.top_three);
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        self.markdown_rows(&self.order())
    }

    /// Markdown output with methods split into labeled sections (e.g.
    /// model-based vs model-free), Borda-descending within each.
    pub fn to_markdown_sectioned(&self, sections: &[(String, Vec<String>)]) -> String {
        let mut out = String::new();
        let mut seen = BTreeSet::new();
        for (label, members) in sections {
            let mut names: Vec<String> = self
                .order()
                .into_iter()
                .filter(|n| members.contains(n))
                .collect();
            names.retain(|n| seen.insert(n.clone()));
            if names.is_empty() {
                continue;
            }
            let _ = writeln!(out, "### {label}\n");
            out.push_str(&self.markdown_rows(&names));
            out.push('\n');
        }
        let rest: Vec<String> = self.order().into_iter().filter(|n| !seen.contains(n)).collect();
        if !rest.is_empty() {
            out.push_str("### other\n\n");
            out.push_str(&self.markdown_rows(&rest));
        }
        out
    }

    fn markdown_rows(&self, names: &[String]) -> String {
        let width = names.iter().map(|n| n.len()).chain(["method".len()]).max().unwrap_or(6);
        let mut out = String::new();
        let _ = writeln!(out, "| {:width$} | Borda | Firsts | Top Three |", "method");
        let _ = writeln!(out, "|:{}-|------:|-------:|----------:|", "-".repeat(width));
        for name in names {
            let r = self.rows[name];
            let _ = writeln!(
                out,
                "| {name:width$} | {:5} | {:6} | {:9} |",
                r.borda_total, r.firsts, r.top_three
            );
        }
        out
    }
}

/// Sum ballots into the aggregate table. Firsts counts group index 1,
/// Top Three counts group index <= 3 (group index, not method count, so a
/// tie-widened podium credits every member).
pub fn aggregate(ballots: &[PartialRanking]) -> Result<AggregateTable> {
    let first = ballots
        .first()
        .ok_or_else(|| Error::InvalidArgument("need at least one ballot".into()))?;
    let methods = first.methods();
    let mut rows: BTreeMap<String, AggregateRow> = methods
        .iter()
        .map(|m| (m.clone(), AggregateRow::default()))
        .collect();
    for ballot in ballots {
        if ballot.methods() != methods {
            return Err(Error::InvalidArgument(
                "ballots must cover the same method set".into(),
            ));
        }
        for (gi, group) in ballot.groups().iter().enumerate() {
            for name in group {
                let row = rows.get_mut(name).expect("method set checked");
                row.borda_total += ballot.borda(name).expect("member of ballot");
                if gi == 0 {
                    row.firsts += 1;
                }
                if gi < 3 {
                    row.top_three += 1;
                }
            }
        }
    }
    Ok(AggregateTable { rows, ballots: ballots.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(methods: &[&str], wins: &[(&str, &str)]) -> PairwiseOutcomeMatrix {
        let names: Vec<String> = methods.iter().map(|s| s.to_string()).collect();
        let idx = |n: &str| names.iter().position(|m| m == n).unwrap();
        let m = names.len();
        let mut beats = vec![vec![false; m]; m];
        for (w, l) in wins {
            beats[idx(w)][idx(l)] = true;
        }
        PairwiseOutcomeMatrix::new(names, beats).unwrap()
    }

    fn ballot(groups: &[&[&str]]) -> PartialRanking {
        PartialRanking::from_groups(
            groups.iter().map(|g| g.iter().map(|s| s.to_string()).collect()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn worked_loss_count_example() {
        let m = matrix(&["A", "B", "C", "D"], &[("A", "D"), ("A", "C"), ("B", "D")]);
        let r = partial_ranking(&m);
        assert_eq!(r.groups(), ballot(&[&["A", "B"], &["C"], &["D"]]).groups());
        assert_eq!(r.borda("A"), Some(2));
        assert_eq!(r.borda("B"), Some(2));
        assert_eq!(r.borda("C"), Some(1));
        assert_eq!(r.borda("D"), Some(0));
        assert_eq!(r.notation(), "(A, B) > C > D");
    }

    #[test]
    fn no_wins_single_group() {
        let m = matrix(&["A", "B", "C"], &[]);
        let r = partial_ranking(&m);
        assert_eq!(r.groups().len(), 1);
        assert!(r.borda_map().values().all(|&b| b == 0));
    }

    #[test]
    fn full_chain_total_order() {
        let m = matrix(
            &["A", "B", "C", "D"],
            &[("A", "B"), ("A", "C"), ("A", "D"), ("B", "C"), ("B", "D"), ("C", "D")],
        );
        let r = partial_ranking(&m);
        assert!(r.is_total());
        assert_eq!(r.borda("A"), Some(3));
        assert_eq!(r.borda("D"), Some(0));
        assert_eq!(r.borda_map().values().sum::<usize>(), 6);
    }

    #[test]
    fn matrix_validation() {
        let names = vec!["A".to_string(), "B".to_string()];
        let reflexive = vec![vec![true, false], vec![false, false]];
        assert!(PairwiseOutcomeMatrix::new(names.clone(), reflexive).is_err());
        let symmetric = vec![vec![false, true], vec![true, false]];
        assert!(PairwiseOutcomeMatrix::new(names, symmetric).is_err());
    }

    #[test]
    fn outcomes_from_samples() {
        let mut samples = BTreeMap::new();
        samples.insert("A".to_string(), (0..30).map(|i| 100.0 + i as f64).collect::<Vec<_>>());
        samples.insert("D".to_string(), (0..30).map(|i| i as f64).collect::<Vec<_>>());
        let m = pairwise_outcomes(&samples, 0.0005).unwrap();
        assert!(m.beats(0, 1));
        assert!(!m.beats(1, 0));

        let mut same = BTreeMap::new();
        for name in ["A", "B", "C"] {
            same.insert(name.to_string(), vec![1.0, 2.0, 3.0]);
        }
        let m = pairwise_outcomes(&same, 0.05).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!(!m.beats(i, j));
            }
        }
    }

    #[test]
    fn refinement_splits_ties() {
        let base = ballot(&[&["A", "B"], &["C"], &["D"]]);
        let mut auc = BTreeMap::new();
        auc.insert("A".to_string(), (0..30).map(|i| 10.0 + i as f64).collect::<Vec<_>>());
        auc.insert("B".to_string(), (0..30).map(|i| -10.0 - i as f64).collect::<Vec<_>>());
        let refined = refine_ranking(&base, &auc, 0.0005).unwrap();
        assert_eq!(refined.groups(), ballot(&[&["A"], &["B"], &["C"], &["D"]]).groups());
        assert_eq!(refined.borda("A"), Some(3));
        assert_eq!(refined.borda("B"), Some(2));
        assert_eq!(refined.borda("C"), Some(1));
        assert_eq!(refined.borda("D"), Some(0));
    }

    #[test]
    fn refinement_keeps_insignificant_ties() {
        let base = ballot(&[&["A", "B"], &["C"]]);
        let mut auc = BTreeMap::new();
        auc.insert("A".to_string(), vec![1.0, 2.0, 3.0]);
        auc.insert("B".to_string(), vec![1.5, 2.5, 2.0]);
        let refined = refine_ranking(&base, &auc, 0.0005).unwrap();
        assert_eq!(&refined, &base);
    }

    #[test]
    fn refinement_requires_secondary_samples() {
        let base = ballot(&[&["A", "B"]]);
        let auc = BTreeMap::new();
        assert!(refine_ranking(&base, &auc, 0.05).is_err());
    }

    #[test]
    fn six_ballot_aggregation() {
        let ballots = vec![
            ballot(&[&["A"], &["B"], &["C"], &["D"]]),
            ballot(&[&["A", "B"], &["C", "D"]]),
            ballot(&[&["C"], &["A"], &["B", "D"]]),
            ballot(&[&["D"], &["A", "C"], &["B"]]),
            ballot(&[&["A", "B", "C", "D"]]),
            ballot(&[&["B"], &["A", "C", "D"]]),
        ];
        let table = aggregate(&ballots).unwrap();
        let get = |n: &str| table.row(n).unwrap();
        assert_eq!(get("A"), AggregateRow { borda_total: 8, firsts: 3, top_three: 6 });
        assert_eq!(get("B"), AggregateRow { borda_total: 7, firsts: 3, top_three: 6 });
        assert_eq!(get("C"), AggregateRow { borda_total: 5, firsts: 2, top_three: 6 });
        assert_eq!(get("D"), AggregateRow { borda_total: 3, firsts: 2, top_three: 5 });
        assert_eq!(table.order(), vec!["A", "B", "C", "D"]);

        let mut shuffled = ballots.clone();
        shuffled.rotate_left(3);
        shuffled.swap(0, 4);
        assert_eq!(aggregate(&shuffled).unwrap(), table);
    }

    #[test]
    fn all_tied_ballot() {
        let table = aggregate(&[ballot(&[&["A", "B", "C"]])]).unwrap();
        for name in ["A", "B", "C"] {
            assert_eq!(table.row(name).unwrap(), AggregateRow { borda_total: 0, firsts: 1, top_three: 1 });
        }
    }

    #[test]
    fn aggregate_rejects_mismatched_ballots() {
        let b1 = ballot(&[&["A"], &["B"]]);
        let b2 = ballot(&[&["A"], &["C"]]);
        assert!(aggregate(&[b1, b2]).is_err());
    }

    #[test]
    fn table_emission() {
        let table = aggregate(&[ballot(&[&["gp_ei"], &["pso"], &["random", "grid"]])]).unwrap();
        let csv = table.to_csv();
        assert!(csv.starts_with("method,borda,firsts,top_three\n"));
        assert!(csv.contains("gp_ei,3,1,1"));
        let md = table.to_markdown();
        assert!(md.contains("| Borda | Firsts | Top Three |"));
        let sectioned = table.to_markdown_sectioned(&[
            ("model-based".to_string(), vec!["gp_ei".to_string()]),
            ("model-free".to_string(), vec!["pso".to_string(), "random".to_string(), "grid".to_string()]),
        ]);
        assert!(sectioned.contains("### model-based"));
        assert!(sectioned.find("gp_ei").unwrap() < sectioned.find("pso").unwrap());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        #[derive(Debug, Clone)]
        struct RandomMatrix(PairwiseOutcomeMatrix);

        fn random_matrix() -> impl Strategy<Value = RandomMatrix> {
            (2usize..6)
                .prop_flat_map(|m| {
                    let pairs = m * (m - 1) / 2;
                    (Just(m), prop::collection::vec(0u8..3, pairs))
                })
                .prop_map(|(m, choices)| {
                    let names: Vec<String> =
                        (0..m).map(|i| format!("M{i}")).collect();
                    let mut beats = vec![vec![false; m]; m];
                    let mut k = 0;
                    for i in 0..m {
                        for j in (i + 1)..m {
                            match choices[k] {
                                1 => beats[i][j] = true,
                                2 => beats[j][i] = true,
                                _ => {}
                            }
                            k += 1;
                        }
                    }
                    RandomMatrix(PairwiseOutcomeMatrix::new(names, beats).unwrap())
                })
        }

        proptest! {
            #[test]
            fn borda_sum_bound(mtx in random_matrix()) {
                let r = partial_ranking(&mtx.0);
                let m = mtx.0.methods().len();
                let total: usize = r.borda_map().values().sum();
                prop_assert!(total <= m * (m - 1) / 2);
                prop_assert_eq!(total == m * (m - 1) / 2, r.is_total());
            }

            #[test]
            fn groups_partition_methods(mtx in random_matrix()) {
                let r = partial_ranking(&mtx.0);
                let covered: usize = r.groups().iter().map(|g| g.len()).sum();
                prop_assert_eq!(covered, mtx.0.methods().len());
                prop_assert_eq!(r.methods(), mtx.0.methods().iter().cloned().collect());
            }

            #[test]
            fn strict_ranking_refines_to_itself(mtx in random_matrix()) {
                let r = partial_ranking(&mtx.0);
                // identical secondary samples: no tie splits anywhere
                let secondary: BTreeMap<String, Vec<f64>> = mtx.0.methods().iter()
                    .map(|m| (m.clone(), vec![0.0, 0.0, 0.0]))
                    .collect();
                let refined = refine_ranking(&r, &secondary, 0.05).unwrap();
                prop_assert_eq!(refined, r);
            }

            #[test]
            fn appended_loser_keeps_order(mtx in random_matrix()) {
                let before = partial_ranking(&mtx.0);
                let m = mtx.0.methods().len();
                let mut names = mtx.0.methods().to_vec();
                names.push("ZLoser".to_string());
                let mut beats = vec![vec![false; m + 1]; m + 1];
                for i in 0..m {
                    for j in 0..m {
                        beats[i][j] = mtx.0.beats(i, j);
                    }
                    beats[i][m] = true;
                }
                let extended = PairwiseOutcomeMatrix::new(names, beats).unwrap();
                let after = partial_ranking(&extended);
                prop_assert_eq!(after.groups().last().unwrap(), &vec!["ZLoser".to_string()]);
                for method in mtx.0.methods() {
                    prop_assert!(after.borda(method).unwrap() >= before.borda(method).unwrap());
                }
            }
        }
    }
}
