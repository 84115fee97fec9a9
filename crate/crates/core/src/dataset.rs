//! Dataset and generations files.
//!
//! Both are JSON Lines (UTF-8, LF, one object per line, fields in the order
//! below).
//!
//! Dataset record:
//!
//! ```text
//! {"id":"000000","seed":123,"family":"bridge(3,3,5,3)","depth":3,
//!  "prompt":"Graph: [...]\nTask: 4 to 9 or 17 ?","cot":"DFS: [4 ...]\nDecision: [9]",
//!  "decision":9,"strategy":"DFS"}
//! ```
//!
//! `seed` regenerates the task with [`make_task`]; `decision` is always the
//! correct target label; `cot` and `strategy` are `null` in task-only files.
//! `depth` is the bridge depth, or the path length in edges for two-path
//! tasks.
//!
//! Generation record: `{"id":"000000","output_text":"DFS: [4 ..."}`, one
//! line per sample; extra fields are ignored.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{SampleSummary, TaskSamples};
use crate::codec::Codec;
use crate::exec::Exec;
use crate::graph::GraphError;
use crate::seed::{stream_rng, stream_seed, tag};
use crate::stats::{wilson, Interval};
use crate::strategy::{generate, Strategy, StrategyError};
use crate::task::{make_task, ConnectivityTask, Family, TaskOptions};
use crate::verify::{grade_output, Verdict};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub seed: u64,
    pub family: String,
    pub depth: usize,
    pub prompt: String,
    pub cot: Option<String>,
    pub decision: usize,
    pub strategy: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub id: String,
    pub output_text: String,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("record {id}: {reason}")]
    Record { id: String, reason: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub fn write_jsonl<T: Serialize, W: Write>(records: &[T], mut out: W) -> Result<(), DatasetError> {
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(|e| DatasetError::Io(e.into()))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads JSON Lines, skipping blank lines. Line numbers start at 1.
pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(input: R) -> Result<Vec<T>, DatasetError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| DatasetError::Parse {
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Whitespace-delimited units of `prompt + "\n" + completion`.
pub fn token_count(prompt: &str, completion: Option<&str>) -> usize {
    prompt.split_whitespace().count() + completion.map_or(0, |c| c.split_whitespace().count())
}

impl DatasetRecord {
    pub fn tokens(&self) -> usize {
        token_count(&self.prompt, self.cot.as_deref())
    }

    /// Rebuilds the task and checks it against the stored prompt and answer.
    pub fn task(&self, codec: &Codec) -> Result<ConnectivityTask, DatasetError> {
        let bad = |reason: String| DatasetError::Record {
            id: self.id.clone(),
            reason,
        };
        let family: Family = self.family.parse().map_err(|e| bad(format!("{e}")))?;
        let task = make_task(family, self.seed, &TaskOptions::default())?;
        if codec.format_prompt(&task) != self.prompt {
            return Err(bad(
                "prompt does not match the task regenerated from family and seed".into()
            ));
        }
        if task.answer_label() + codec.label_offset != self.decision {
            return Err(bad(format!("decision {} is not the correct target", self.decision)));
        }
        Ok(task)
    }
}

fn task_id(i: usize) -> String {
    format!("{i:06}")
}

fn task_seed(seed: u64, i: usize) -> u64 {
    stream_seed(seed, tag::TASK, i as u64)
}

fn base_record(
    family: Family,
    seed: u64,
    i: usize,
    codec: &Codec,
) -> Result<(ConnectivityTask, DatasetRecord), GraphError> {
    let s = task_seed(seed, i);
    let task = make_task(family, s, &TaskOptions::default())?;
    let rec = DatasetRecord {
        id: task_id(i),
        seed: s,
        family: family.to_string(),
        depth: family.depth(),
        prompt: codec.format_prompt(&task),
        cot: None,
        decision: task.answer_label() + codec.label_offset,
        strategy: None,
    };
    Ok((task, rec))
}

/// Task-only records `000000`, `000001`, ...; task `i` uses seed
/// `stream_seed(seed, "task", i)`.
pub fn gen_tasks(
    family: Family,
    count: usize,
    seed: u64,
    codec: &Codec,
    exec: Exec,
) -> Result<Vec<DatasetRecord>, GraphError> {
    exec.map_range(count, |i| base_record(family, seed, i, codec).map(|(_, r)| r))
        .into_iter()
        .collect()
}

/// Cap on the total tokens of a generated dataset.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TokenBudget {
    #[default]
    Unlimited,
    Fixed(usize),
    /// Whatever the Shortest-Path dataset over the same task ids totals.
    MatchShortestPath,
}

#[derive(Debug, Default)]
pub struct GeneratedDataset {
    pub records: Vec<DatasetRecord>,
    /// Tasks whose trace could not be sampled; they are left out.
    pub failures: Vec<(String, StrategyError)>,
    /// Token cap that was applied, if any.
    pub token_cap: Option<usize>,
}

impl GeneratedDataset {
    pub fn total_tokens(&self) -> usize {
        self.records.iter().map(DatasetRecord::tokens).sum()
    }
}

fn example(
    family: Family,
    strategy: Strategy,
    seed: u64,
    i: usize,
    codec: &Codec,
) -> Result<Result<DatasetRecord, StrategyError>, GraphError> {
    let (task, mut rec) = base_record(family, seed, i, codec)?;
    let mut rng = stream_rng(rec.seed, tag::COT, 0);
    Ok(generate(strategy, &task, &mut rng).map(|trace| {
        rec.cot = Some(codec.format_example(&strategy, &trace.nodes, trace.decision));
        rec.strategy = Some(strategy.to_string());
        rec
    }))
}

/// Up to `count` (task, CoT, decision) examples. Under a token budget the
/// examples are kept in id order while the running token total fits.
pub fn gen_dataset(
    family: Family,
    strategy: Strategy,
    count: usize,
    seed: u64,
    budget: TokenBudget,
    codec: &Codec,
    exec: Exec,
) -> Result<GeneratedDataset, GraphError> {
    let token_cap = match budget {
        TokenBudget::Unlimited => None,
        TokenBudget::Fixed(t) => Some(t),
        TokenBudget::MatchShortestPath => {
            let base = exec.map_range(count, |i| example(family, Strategy::ShortestPath, seed, i, codec));
            let mut total = 0;
            for r in base {
                if let Ok(rec) = r? {
                    total += rec.tokens();
                }
            }
            Some(total)
        }
    };
    let mut out = GeneratedDataset {
        token_cap,
        ..Default::default()
    };
    let mut used = 0usize;
    for (i, r) in exec
        .map_range(count, |i| example(family, strategy, seed, i, codec))
        .into_iter()
        .enumerate()
    {
        match r? {
            Ok(rec) => {
                let t = rec.tokens();
                if token_cap.is_some_and(|cap| used + t > cap) {
                    break;
                }
                used += t;
                out.records.push(rec);
            }
            Err(e) => out.failures.push((task_id(i), e)),
        }
    }
    Ok(out)
}

/// Verdict of one generation under one budget.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GradedSample {
    pub id: String,
    pub sample: usize,
    pub strategy: String,
    pub depth: usize,
    pub budget: Option<usize>,
    #[serde(flatten)]
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricRow {
    pub strategy: String,
    pub depth: usize,
    pub budget: Option<usize>,
    pub n_samples: u64,
    pub evidence_acc: f64,
    pub evidence_ci: Interval,
    pub decision_acc: f64,
    pub decision_ci: Interval,
    /// No samples fell in this group.
    pub empty: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct GradeReport {
    pub samples: Vec<GradedSample>,
    pub metrics: Vec<MetricRow>,
    /// Generations whose id is not in the tasks file.
    pub unmatched: usize,
}

impl GradeReport {
    pub fn metrics_csv(&self) -> String {
        let mut out = String::from(
            "strategy,depth,budget,n_samples,evidence_acc,ci_low,ci_high,decision_acc,decision_ci_low,decision_ci_high,empty\n",
        );
        for m in &self.metrics {
            let _ = writeln!(
                out,
                "{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
                m.strategy,
                m.depth,
                m.budget.map_or_else(|| "inf".to_string(), |b| b.to_string()),
                m.n_samples,
                m.evidence_acc,
                m.evidence_ci.low,
                m.evidence_ci.high,
                m.decision_acc,
                m.decision_ci.low,
                m.decision_ci.high,
                m.empty
            );
        }
        out
    }
}

fn index_tasks<'a>(
    tasks: &'a [DatasetRecord],
    codec: &Codec,
    exec: Exec,
) -> Result<HashMap<&'a str, (usize, ConnectivityTask)>, DatasetError> {
    let built = exec
        .map_slice(tasks, |r| r.task(codec))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let mut by_id = HashMap::with_capacity(tasks.len());
    for (i, (rec, task)) in tasks.iter().zip(built).enumerate() {
        if by_id.insert(rec.id.as_str(), (i, task)).is_some() {
            return Err(DatasetError::Record {
                id: rec.id.clone(),
                reason: "duplicate task id".into(),
            });
        }
    }
    Ok(by_id)
}

/// Grades every generation against its task under each budget. Samples are
/// grouped by `label` if given, else by the task record's strategy, else
/// under `any`. Metric groups with no samples are reported with `empty`.
pub fn grade_file(
    tasks: &[DatasetRecord],
    generations: &[GenerationRecord],
    codec: &Codec,
    budgets: &[Option<usize>],
    label: Option<&str>,
    exec: Exec,
) -> Result<GradeReport, DatasetError> {
    let by_id = index_tasks(tasks, codec, exec)?;
    let mut sample_index: HashMap<&str, usize> = HashMap::new();
    let mut jobs = Vec::new();
    let mut unmatched = 0;
    for g in generations {
        let Some((ti, _)) = by_id.get(g.id.as_str()) else {
            unmatched += 1;
            continue;
        };
        let k = sample_index.entry(g.id.as_str()).or_insert(0);
        jobs.push((*ti, g, *k));
        *k += 1;
    }
    let group_of = |rec: &DatasetRecord| {
        label
            .map(str::to_string)
            .or_else(|| rec.strategy.clone())
            .unwrap_or_else(|| "any".to_string())
    };
    let graded: Vec<Vec<GradedSample>> = exec.map_slice(&jobs, |&(ti, g, k)| {
        let rec = &tasks[ti];
        let task = &by_id[rec.id.as_str()].1;
        budgets
            .iter()
            .map(|&b| GradedSample {
                id: rec.id.clone(),
                sample: k,
                strategy: group_of(rec),
                depth: rec.depth,
                budget: b,
                verdict: grade_output(task, codec, &g.output_text, b),
            })
            .collect()
    });
    let samples: Vec<GradedSample> = graded.into_iter().flatten().collect();

    // (group, depth, budget) -> (samples, evidence ok, decision ok)
    type Key = (String, usize, Option<usize>);
    let mut groups: BTreeMap<Key, (u64, u64, u64)> = BTreeMap::new();
    for rec in tasks {
        for &b in budgets {
            groups.entry((group_of(rec), rec.depth, b)).or_default();
        }
    }
    if tasks.is_empty() {
        for &b in budgets {
            groups.entry((label.unwrap_or("any").to_string(), 0, b)).or_default();
        }
    }
    for s in &samples {
        let e = groups.entry((s.strategy.clone(), s.depth, s.budget)).or_default();
        e.0 += 1;
        e.1 += u64::from(s.verdict.evidence_ok);
        e.2 += u64::from(s.verdict.decision_ok);
    }
    let metrics = groups
        .into_iter()
        .map(|((strategy, depth, budget), (n, ev, de))| {
            let rate = |k: u64| if n == 0 { 0.0 } else { k as f64 / n as f64 };
            MetricRow {
                strategy,
                depth,
                budget,
                n_samples: n,
                evidence_acc: rate(ev),
                evidence_ci: wilson(ev, n),
                decision_acc: rate(de),
                decision_ci: wilson(de, n),
                empty: n == 0,
            }
        })
        .collect();
    Ok(GradeReport {
        samples,
        metrics,
        unmatched,
    })
}

/// Groups generations by task (in tasks-file order) for the scaling grid.
/// Unparseable outputs become abstaining, unverified samples. Returns the
/// corpus and the number of unmatched generations.
pub fn corpus_from_generations(
    tasks: &[DatasetRecord],
    generations: &[GenerationRecord],
    codec: &Codec,
    exec: Exec,
) -> Result<(Vec<TaskSamples>, usize), DatasetError> {
    let by_id = index_tasks(tasks, codec, exec)?;
    let mut texts: Vec<Vec<&str>> = vec![Vec::new(); tasks.len()];
    let mut unmatched = 0;
    for g in generations {
        match by_id.get(g.id.as_str()) {
            Some((i, _)) => texts[*i].push(&g.output_text),
            None => unmatched += 1,
        }
    }
    let corpus = exec.map_range(tasks.len(), |i| {
        let task = &by_id[tasks[i].id.as_str()].1;
        let samples = texts[i]
            .iter()
            .map(|t| match codec.parse_output(t) {
                Ok(p) => SampleSummary::from_cot(task, &p.cot, p.decision),
                Err(_) => SampleSummary::unreadable(),
            })
            .collect();
        TaskSamples { samples }
    });
    Ok((corpus, unmatched))
}
