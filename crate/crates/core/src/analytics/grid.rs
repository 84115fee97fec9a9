//! Empirical accuracy grids over (sequential budget `B`, sample count `n`).
//!
//! Each task contributes `m` graded samples. A cell's per-task accuracy is
//! the exact expectation over all size-`n` subsamples, so no resampling
//! noise is added on top of the corpus itself.

use std::collections::HashMap;
use std::fmt;
use std::fmt::Write as _;

use rand::Rng;
use serde::Serialize;

use super::votes::{best_of_n_from_counts, subsample_vote_probability, VoteCounts};
use super::AnalyticsError;
use crate::exec::Exec;
use crate::graph::GraphError;
use crate::seed::{stream_rng, stream_seed, tag};
use crate::stats::{wilson_from_rate, Interval};
use crate::strategy::{dfs_cot, random_dfs};
use crate::task::{make_task, ConnectivityTask, Family, TaskOptions};
use crate::verify::evidence_prefix_len;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Vote {
    Correct,
    Incorrect,
    Abstain,
}

/// What the grid needs to know about one graded sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SampleSummary {
    pub cot_len: usize,
    /// Shortest prefix that is valid evidence.
    pub prefix_len: Option<usize>,
    /// The written decision; `Abstain` when absent or unparseable.
    pub vote: Vote,
}

impl SampleSummary {
    pub fn from_cot(task: &ConnectivityTask, cot: &[usize], decision: Option<usize>) -> Self {
        let prefix_len = evidence_prefix_len(task, cot);
        if let Some(k) = prefix_len {
            // Verified evidence can only end on the reachable target.
            debug_assert_eq!(cot[k - 1], task.answer_label());
        }
        let vote = match decision {
            Some(d) if d == task.answer_label() => Vote::Correct,
            Some(d) if d == task.wrong_label() => Vote::Incorrect,
            _ => Vote::Abstain,
        };
        SampleSummary {
            cot_len: cot.len(),
            prefix_len,
            vote,
        }
    }

    /// An output that failed to parse.
    pub fn unreadable() -> Self {
        SampleSummary {
            cot_len: 0,
            prefix_len: None,
            vote: Vote::Abstain,
        }
    }

    pub fn verified_within(&self, budget: Option<usize>) -> bool {
        match (self.prefix_len, budget) {
            (Some(k), Some(b)) => k <= b,
            (Some(_), None) => true,
            (None, _) => false,
        }
    }

    /// Decision under budget forcing. A trace that fits keeps its written
    /// decision. A cut trace votes for the target its verified prefix
    /// reaches, or abstains.
    pub fn vote_under(&self, budget: Option<usize>) -> Vote {
        match budget {
            Some(b) if self.cot_len > b => {
                if self.verified_within(budget) {
                    Vote::Correct
                } else {
                    Vote::Abstain
                }
            }
            _ => self.vote,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TaskSamples {
    pub samples: Vec<SampleSummary>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Aggregation {
    BestOfN,
    Majority,
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregation::BestOfN => "best_of_n",
            Aggregation::Majority => "majority",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridCell {
    /// `None` is an unlimited budget.
    pub budget: Option<usize>,
    pub n: usize,
    pub aggregation: Aggregation,
    pub accuracy: f64,
    /// Standard error of the mean over tasks.
    pub se: f64,
    pub ci: Interval,
    pub tasks: usize,
}

impl GridCell {
    /// Total token cost `B * n`; unbounded when `B` is.
    pub fn tokens(&self) -> Option<usize> {
        self.budget.map(|b| b * self.n)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ScalingGrid {
    pub cells: Vec<GridCell>,
}

impl ScalingGrid {
    pub fn cell(&self, budget: Option<usize>, n: usize, aggregation: Aggregation) -> Option<&GridCell> {
        self.cells
            .iter()
            .find(|c| c.budget == budget && c.n == n && c.aggregation == aggregation)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("B,n,tokens,accuracy,ci_low,ci_high,aggregation\n");
        let opt = |x: Option<usize>| x.map_or_else(|| "inf".to_string(), |v| v.to_string());
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{:.6},{:.6},{:.6},{}",
                opt(c.budget),
                c.n,
                opt(c.tokens()),
                c.accuracy,
                c.ci.low,
                c.ci.high,
                c.aggregation
            );
        }
        out
    }
}

fn task_accuracy(
    samples: &[SampleSummary],
    budget: Option<usize>,
    n: usize,
    aggregation: Aggregation,
) -> Result<f64, AnalyticsError> {
    let m = samples.len();
    match aggregation {
        Aggregation::BestOfN => {
            let v = samples.iter().filter(|s| s.verified_within(budget)).count();
            best_of_n_from_counts(m, v, n)
        }
        Aggregation::Majority => {
            let mut counts = VoteCounts::default();
            for s in samples {
                match s.vote_under(budget) {
                    Vote::Correct => counts.correct += 1,
                    Vote::Incorrect => counts.incorrect += 1,
                    Vote::Abstain => counts.invalid += 1,
                }
            }
            subsample_vote_probability(&counts, n).map(|p| p.accuracy())
        }
    }
}

fn evaluate_cell(
    corpus: &[TaskSamples],
    budget: Option<usize>,
    n: usize,
    aggregation: Aggregation,
) -> Result<GridCell, AnalyticsError> {
    // Many tasks share the same count profile; cache on it.
    let mut cache: HashMap<(usize, usize, usize, usize), f64> = HashMap::new();
    let mut values = Vec::with_capacity(corpus.len());
    for t in corpus {
        let key = profile(&t.samples, budget, aggregation);
        let acc = match cache.get(&key) {
            Some(&a) => a,
            None => {
                let a = task_accuracy(&t.samples, budget, n, aggregation)?;
                cache.insert(key, a);
                a
            }
        };
        values.push(acc);
    }
    let tasks = values.len();
    let accuracy = if tasks == 0 {
        0.0
    } else {
        values.iter().sum::<f64>() / tasks as f64
    };
    let se = if tasks < 2 {
        f64::INFINITY
    } else {
        let var = values.iter().map(|v| (v - accuracy).powi(2)).sum::<f64>() / (tasks - 1) as f64;
        (var / tasks as f64).sqrt()
    };
    Ok(GridCell {
        budget,
        n,
        aggregation,
        accuracy,
        se,
        ci: wilson_from_rate(accuracy, tasks as f64),
        tasks,
    })
}

fn profile(samples: &[SampleSummary], budget: Option<usize>, aggregation: Aggregation) -> (usize, usize, usize, usize) {
    let m = samples.len();
    match aggregation {
        Aggregation::BestOfN => (m, samples.iter().filter(|s| s.verified_within(budget)).count(), 0, 0),
        Aggregation::Majority => {
            let mut c = (m, 0, 0, 0);
            for s in samples {
                match s.vote_under(budget) {
                    Vote::Correct => c.1 += 1,
                    Vote::Incorrect => c.2 += 1,
                    Vote::Abstain => c.3 += 1,
                }
            }
            c
        }
    }
}

/// Evaluates every `(budget, n, aggregation)` combination. Every task must
/// carry at least `max(ns)` samples.
pub fn empirical_grid(
    corpus: &[TaskSamples],
    budgets: &[Option<usize>],
    ns: &[usize],
    aggregations: &[Aggregation],
    exec: Exec,
) -> Result<ScalingGrid, AnalyticsError> {
    if ns.contains(&0) {
        return Err(AnalyticsError::ZeroSamples);
    }
    let need = ns.iter().copied().max().unwrap_or(0);
    if let Some((task, t)) = corpus.iter().enumerate().find(|(_, t)| t.samples.len() < need) {
        return Err(AnalyticsError::MissingSamples {
            task,
            have: t.samples.len(),
            need,
        });
    }
    let mut combos = Vec::new();
    for &a in aggregations {
        for &b in budgets {
            for &n in ns {
                combos.push((b, n, a));
            }
        }
    }
    let cells = exec
        .map_slice(&combos, |&(b, n, a)| evaluate_cell(corpus, b, n, a))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ScalingGrid { cells })
}

/// Synthetic corpus where each sample independently verifies with
/// probability `p`. Unverified samples carry a coin-flip decision.
pub fn planted_corpus(p: f64, tasks: usize, samples: usize, seed: u64) -> Vec<TaskSamples> {
    (0..tasks)
        .map(|i| {
            let mut rng = stream_rng(seed, tag::CORPUS, i as u64);
            let samples = (0..samples)
                .map(|_| {
                    if rng.random_bool(p) {
                        SampleSummary {
                            cot_len: 1,
                            prefix_len: Some(1),
                            vote: Vote::Correct,
                        }
                    } else {
                        SampleSummary {
                            cot_len: 1,
                            prefix_len: None,
                            vote: if rng.random_bool(0.5) {
                                Vote::Correct
                            } else {
                                Vote::Incorrect
                            },
                        }
                    }
                })
                .collect();
            TaskSamples { samples }
        })
        .collect()
}

/// Corpus of randomized-DFS traces: task `i` uses seed
/// `stream_seed(seed, "task", i)`, and its sample `j` draws from
/// `(task seed, "cot", j)`.
pub fn dfs_corpus(
    family: Family,
    tasks: usize,
    samples: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<TaskSamples>, GraphError> {
    let opts = TaskOptions::default();
    exec.map_range(tasks, |i| {
        let task_seed = stream_seed(seed, tag::TASK, i as u64);
        let task = make_task(family, task_seed, &opts)?;
        let samples = (0..samples)
            .map(|j| {
                let mut rng = stream_rng(task_seed, tag::COT, j as u64);
                let run = random_dfs(&task, &mut rng);
                SampleSummary::from_cot(&task, &dfs_cot(&run), Some(run.reached_target))
            })
            .collect();
        Ok(TaskSamples { samples })
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::best_of_n_accuracy;

    fn sample(cot_len: usize, prefix_len: Option<usize>, vote: Vote) -> SampleSummary {
        SampleSummary {
            cot_len,
            prefix_len,
            vote,
        }
    }

    #[test]
    fn budget_forced_votes() {
        let s = sample(10, Some(6), Vote::Correct);
        assert_eq!(s.vote_under(None), Vote::Correct);
        assert_eq!(s.vote_under(Some(10)), Vote::Correct);
        assert_eq!(s.vote_under(Some(7)), Vote::Correct);
        assert_eq!(s.vote_under(Some(5)), Vote::Abstain);
        let wrong = sample(10, None, Vote::Incorrect);
        assert_eq!(wrong.vote_under(None), Vote::Incorrect);
        assert_eq!(wrong.vote_under(Some(3)), Vote::Abstain);
    }

    #[test]
    fn n1_unlimited_is_plain_accuracy() {
        let corpus = vec![
            TaskSamples {
                samples: vec![sample(3, Some(3), Vote::Correct), sample(3, None, Vote::Incorrect)],
            },
            TaskSamples {
                samples: vec![sample(3, None, Vote::Abstain), sample(3, None, Vote::Correct)],
            },
        ];
        let g = empirical_grid(
            &corpus,
            &[None],
            &[1],
            &[Aggregation::BestOfN, Aggregation::Majority],
            Exec::Sequential,
        )
        .unwrap();
        // Evidence: 1 of 4 verified, the rest guess.
        let bon = g.cell(None, 1, Aggregation::BestOfN).unwrap().accuracy;
        assert!((bon - (0.25 + 0.75 * 0.5)).abs() < 1e-12);
        // Decisions: 2 correct, 1 wrong, 1 abstain scored one half.
        let maj = g.cell(None, 1, Aggregation::Majority).unwrap().accuracy;
        assert!((maj - (2.0 + 0.5) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn best_of_n_monotone_in_budget() {
        let corpus = dfs_corpus(Family::bridge(2, 3, 5, 3).unwrap(), 40, 16, 3, Exec::Sequential).unwrap();
        let budgets: Vec<Option<usize>> = (1..30).map(Some).chain([None]).collect();
        let g = empirical_grid(
            &corpus,
            &budgets,
            &[1, 4, 16],
            &[Aggregation::BestOfN],
            Exec::Sequential,
        )
        .unwrap();
        for n in [1, 4, 16] {
            let accs: Vec<f64> = budgets
                .iter()
                .map(|&b| g.cell(b, n, Aggregation::BestOfN).unwrap().accuracy)
                .collect();
            assert!(accs.windows(2).all(|w| w[0] <= w[1] + 1e-12), "n={n}: {accs:?}");
            assert!(accs.iter().all(|a| (0.0..=1.0).contains(a)));
        }
    }

    #[test]
    fn planted_corpus_tracks_closed_form() {
        let p = 0.1;
        let corpus = planted_corpus(p, 400, 16, 11);
        let g = empirical_grid(&corpus, &[None], &[1, 4, 16], &[Aggregation::BestOfN], Exec::Sequential).unwrap();
        for n in [1, 4, 16] {
            let c = g.cell(None, n, Aggregation::BestOfN).unwrap();
            let want = best_of_n_accuracy(p, n as u64);
            assert!(
                (c.accuracy - want).abs() <= 3.0 * c.se + 1e-9,
                "n={n}: {} vs {want}",
                c.accuracy
            );
        }
    }

    #[test]
    fn rejects_oversized_subsample() {
        let corpus = planted_corpus(0.5, 3, 4, 0);
        assert_eq!(
            empirical_grid(&corpus, &[None], &[5], &[Aggregation::BestOfN], Exec::Sequential),
            Err(AnalyticsError::MissingSamples {
                task: 0,
                have: 4,
                need: 5
            })
        );
        assert_eq!(
            empirical_grid(&corpus, &[None], &[0], &[Aggregation::BestOfN], Exec::Sequential),
            Err(AnalyticsError::ZeroSamples)
        );
    }

    #[test]
    fn csv_shape() {
        let corpus = planted_corpus(0.5, 5, 4, 0);
        let g = empirical_grid(
            &corpus,
            &[Some(3), None],
            &[2],
            &[Aggregation::Majority],
            Exec::Sequential,
        )
        .unwrap();
        let csv = g.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "B,n,tokens,accuracy,ci_low,ci_high,aggregation");
        assert!(lines[1].starts_with("3,2,6,"));
        assert!(lines[2].starts_with("inf,2,inf,"));
        assert!(lines[2].ends_with(",majority"));
    }

    #[test]
    fn modes_agree() {
        let fam = Family::bridge(2, 3, 5, 3).unwrap();
        let a = dfs_corpus(fam, 12, 8, 5, Exec::Sequential).unwrap();
        let b = dfs_corpus(fam, 12, 8, 5, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
