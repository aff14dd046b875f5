//! Rank tables over final regret.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::Serialize;

use super::run::RegretCurve;
use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankCell {
    pub scenario: String,
    pub agent: String,
    pub mean_final: f64,
    pub se: f64,
    pub rank: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankTable {
    pub cells: Vec<RankCell>,
    /// Agents with their rank averaged over scenarios, best first.
    pub average_rank: Vec<(String, f64)>,
}

/// Ranks (1 = lowest) with ties sharing the mean of their positions.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Mean final regret with SE per (scenario, agent) and average ranks.
///
/// Every agent must have every replication on every scenario; otherwise
/// [`HarnessError::IncompleteResults`] lists the missing cells.
pub fn rank_table(curves: &[RegretCurve]) -> Result<RankTable, HarnessError> {
    let scenarios: BTreeSet<&str> = curves.iter().map(|c| c.scenario.as_str()).collect();
    let agents: BTreeSet<&str> = curves.iter().map(|c| c.agent.as_str()).collect();
    let reps: BTreeSet<usize> = curves.iter().map(|c| c.rep).collect();
    if scenarios.is_empty() {
        return Err(HarnessError::IncompleteResults(vec!["no results".into()]));
    }
    if agents.len() < 2 {
        return Err(HarnessError::Config("ranking needs at least two agents".into()));
    }
    let mut finals: BTreeMap<(&str, &str), Vec<f64>> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for c in curves {
        if let Some(v) = c.cum_regret.last() {
            finals.entry((&c.scenario, &c.agent)).or_default().push(*v);
            seen.insert((c.scenario.as_str(), c.agent.as_str(), c.rep));
        }
    }
    let mut gaps = Vec::new();
    for s in &scenarios {
        for a in &agents {
            for r in &reps {
                if !seen.contains(&(*s, *a, *r)) {
                    gaps.push(format!("{s}/{a}/rep {r}"));
                }
            }
        }
    }
    if !gaps.is_empty() {
        return Err(HarnessError::IncompleteResults(gaps));
    }

    let mut cells = Vec::new();
    let mut sums: BTreeMap<&str, f64> = BTreeMap::new();
    for s in &scenarios {
        let stats: Vec<(f64, f64)> = agents
            .iter()
            .map(|a| {
                let v = &finals[&(*s, *a)];
                let n = v.len() as f64;
                let m = v.iter().sum::<f64>() / n;
                let sd = if v.len() > 1 {
                    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
                } else {
                    0.0
                };
                (m, sd / n.sqrt())
            })
            .collect();
        let ranks = midranks(&stats.iter().map(|s| s.0).collect::<Vec<_>>());
        for ((a, (m, se)), r) in agents.iter().zip(stats).zip(ranks) {
            *sums.entry(a).or_default() += r;
            cells.push(RankCell {
                scenario: s.to_string(),
                agent: a.to_string(),
                mean_final: m,
                se,
                rank: r,
            });
        }
    }
    let mut average_rank: Vec<(String, f64)> = sums
        .into_iter()
        .map(|(a, s)| (a.to_owned(), s / scenarios.len() as f64))
        .collect();
    average_rank.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    Ok(RankTable { cells, average_rank })
}

pub fn write_rank_csv<W: Write>(table: &RankTable, out: W) -> Result<(), HarnessError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["scenario", "agent", "mean_final", "se", "rank"])?;
    for c in &table.cells {
        w.serialize(c)?;
    }
    for (a, r) in &table.average_rank {
        w.write_record(["average", a, "", "", &r.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(s: &str, a: &str, rep: usize, last: f64) -> RegretCurve {
        RegretCurve {
            scenario: s.into(),
            agent: a.into(),
            rep,
            cum_regret: vec![0.0, last],
        }
    }

    fn rank_of(t: &RankTable, s: &str, a: &str) -> f64 {
        t.cells.iter().find(|c| c.scenario == s && c.agent == a).unwrap().rank
    }

    #[test]
    fn midrank_examples() {
        assert_eq!(midranks(&[10.0, 20.0, 30.0]), vec![1.0, 2.0, 3.0]);
        assert_eq!(midranks(&[5.0, 5.0, 1.0]), vec![2.5, 2.5, 1.0]);
        assert_eq!(midranks(&[2.0, 2.0, 2.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn single_scenario_ranks() {
        let t = rank_table(&[curve("s", "a", 0, 10.0), curve("s", "b", 0, 20.0), curve("s", "c", 0, 30.0)]).unwrap();
        assert_eq!([rank_of(&t, "s", "a"), rank_of(&t, "s", "b"), rank_of(&t, "s", "c")], [1.0, 2.0, 3.0]);
    }

    #[test]
    fn reversed_orderings_average_out() {
        let t = rank_table(&[
            curve("s1", "a", 0, 1.0),
            curve("s1", "b", 0, 2.0),
            curve("s2", "a", 0, 2.0),
            curve("s2", "b", 0, 1.0),
        ])
        .unwrap();
        assert!(t.average_rank.iter().all(|(_, r)| *r == 1.5));
    }

    #[test]
    fn ties_share_midrank() {
        let t = rank_table(&[curve("s", "a", 0, 3.0), curve("s", "b", 0, 3.0)]).unwrap();
        assert_eq!(rank_of(&t, "s", "a"), 1.5);
        assert_eq!(rank_of(&t, "s", "b"), 1.5);
    }

    #[test]
    fn mean_and_se_over_reps() {
        let t = rank_table(&[
            curve("s", "a", 0, 1.0),
            curve("s", "a", 1, 3.0),
            curve("s", "b", 0, 5.0),
            curve("s", "b", 1, 5.0),
        ])
        .unwrap();
        let a = &t.cells[0];
        assert_eq!(a.mean_final, 2.0);
        assert!((a.se - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaps_are_listed() {
        let err = rank_table(&[
            curve("s1", "a", 0, 1.0),
            curve("s1", "b", 0, 2.0),
            curve("s2", "a", 0, 2.0),
        ])
        .unwrap_err();
        match err {
            HarnessError::IncompleteResults(g) => assert_eq!(g, vec!["s2/b/rep 0".to_string()]),
            e => panic!("{e}"),
        }
    }
}
