//! Chain-of-thought trace generators.
//!
//! All DFS-derived strategies come from one randomized depth-first search
//! that picks a uniformly random unvisited neighbour at each step and stops
//! the moment it first visits a target.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::task::ConnectivityTask;

/// Default number of walk attempts before giving up on Walk-L sampling.
pub const WALK_RETRY_CAP: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    ShortestPath,
    Path,
    Dfs,
    DfsBt,
    /// Random walk of at most this many steps.
    Walk(usize),
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::ShortestPath => f.write_str("Shortest-Path"),
            Strategy::Path => f.write_str("Path"),
            Strategy::Dfs => f.write_str("DFS"),
            Strategy::DfsBt => f.write_str("DFS-BT"),
            Strategy::Walk(l) => write!(f, "Walk-{l}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown strategy {0:?}")]
pub struct StrategyParseError(pub String);

impl FromStr for Strategy {
    type Err = StrategyParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Shortest-Path" => Ok(Strategy::ShortestPath),
            "Path" => Ok(Strategy::Path),
            "DFS" => Ok(Strategy::Dfs),
            "DFS-BT" => Ok(Strategy::DfsBt),
            _ => s
                .strip_prefix("Walk-")
                .filter(|l| !l.is_empty() && l.bytes().all(|b| b.is_ascii_digit()))
                .and_then(|l| l.parse().ok())
                .map(Strategy::Walk)
                .ok_or_else(|| StrategyParseError(s.to_string())),
        }
    }
}

/// Serialized by its canonical tag (`DFS`, `Walk-12`, ...).
impl Serialize for Strategy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Strategy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StrategyError {
    #[error("walk limit {limit} is shorter than the shortest path ({shortest} steps)")]
    WalkTooShort { limit: usize, shortest: usize },
    #[error("no walk reached the target within {limit} steps after {attempts} attempts")]
    SamplingFailed { limit: usize, attempts: u64 },
}

/// One randomized DFS from the source, stopped at the first target visit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DfsRun {
    pub first_visit_order: Vec<usize>,
    /// DFS-tree parent per vertex; `None` for the source and unvisited vertices.
    pub parent: Vec<Option<usize>>,
    /// Every move of the search including returns to a parent.
    pub full_walk: Vec<usize>,
    pub reached_target: usize,
}

impl DfsRun {
    /// Tree path from the source to the reached target.
    pub fn tree_path(&self) -> Vec<usize> {
        let mut path = vec![self.reached_target];
        let mut cur = self.reached_target;
        while let Some(p) = self.parent[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }
}

pub fn random_dfs<R: Rng + ?Sized>(task: &ConnectivityTask, rng: &mut R) -> DfsRun {
    let g = &task.graph;
    let n = g.vertex_count();
    let s = task.source;
    let mut visited = vec![false; n];
    let mut parent = vec![None; n];
    visited[s] = true;
    let mut first = vec![s];
    let mut walk = vec![s];
    let mut stack = vec![s];
    let mut choices = Vec::new();
    loop {
        let top = *stack.last().expect("the source's component always contains a target");
        choices.clear();
        choices.extend(g.adj(top).iter().copied().filter(|&w| !visited[w]));
        if choices.is_empty() {
            stack.pop();
            if let Some(&back) = stack.last() {
                walk.push(back);
            }
            continue;
        }
        let next = choices[rng.random_range(0..choices.len())];
        visited[next] = true;
        parent[next] = Some(top);
        first.push(next);
        walk.push(next);
        stack.push(next);
        if task.is_target(next) {
            return DfsRun {
                first_visit_order: first,
                parent,
                full_walk: walk,
                reached_target: next,
            };
        }
    }
}

pub fn dfs_cot(run: &DfsRun) -> Vec<usize> {
    run.first_visit_order.clone()
}

pub fn path_cot(run: &DfsRun) -> Vec<usize> {
    run.tree_path()
}

pub fn dfs_bt_cot(run: &DfsRun) -> Vec<usize> {
    run.full_walk.clone()
}

pub fn shortest_path_cot(task: &ConnectivityTask) -> Vec<usize> {
    task.graph
        .shortest_path(task.source, task.answer_label())
        .expect("task labels are in range")
        .expect("the answer target is reachable")
}

/// One unconditioned walk attempt: `Some(trace)` if it hits the answer
/// target within `limit` steps, truncated at the hit.
pub fn walk_attempt<R: Rng + ?Sized>(task: &ConnectivityTask, limit: usize, rng: &mut R) -> Option<Vec<usize>> {
    let target = task.answer_label();
    let mut cur = task.source;
    let mut trace = vec![cur];
    for _ in 0..limit {
        let nbrs = task.graph.adj(cur);
        if nbrs.is_empty() {
            return None;
        }
        cur = nbrs[rng.random_range(0..nbrs.len())];
        trace.push(cur);
        if cur == target {
            return Some(trace);
        }
    }
    None
}

/// Random walk from the source conditioned on reaching the target within
/// `limit` steps, by rejection sampling with at most `cap` attempts.
pub fn walk_cot<R: Rng + ?Sized>(
    task: &ConnectivityTask,
    limit: usize,
    cap: u64,
    rng: &mut R,
) -> Result<Vec<usize>, StrategyError> {
    let shortest = shortest_path_cot(task).len() - 1;
    if limit < shortest {
        return Err(StrategyError::WalkTooShort { limit, shortest });
    }
    for _ in 0..cap {
        if let Some(trace) = walk_attempt(task, limit, rng) {
            return Ok(trace);
        }
    }
    Err(StrategyError::SamplingFailed { limit, attempts: cap })
}

/// A generated chain of thought with its decision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub strategy: Strategy,
    pub nodes: Vec<usize>,
    pub decision: usize,
}

pub fn generate<R: Rng + ?Sized>(
    strategy: Strategy,
    task: &ConnectivityTask,
    rng: &mut R,
) -> Result<Trace, StrategyError> {
    let nodes = match strategy {
        Strategy::ShortestPath => shortest_path_cot(task),
        Strategy::Path => path_cot(&random_dfs(task, rng)),
        Strategy::Dfs => dfs_cot(&random_dfs(task, rng)),
        Strategy::DfsBt => dfs_bt_cot(&random_dfs(task, rng)),
        Strategy::Walk(limit) => walk_cot(task, limit, WALK_RETRY_CAP, rng)?,
    };
    Ok(Trace {
        strategy,
        nodes,
        decision: task.answer_label(),
    })
}

/// Probability that a randomized DFS on `Bridge(d, 3, 5, 3)` lists exactly
/// the shortest path.
pub fn p_dfs_shortest(depth: u32) -> f64 {
    1.0 / (3.0 * 4f64.powi(depth as i32 - 1))
}

/// Probability that a randomized DFS on `Bridge(d, 3, 5, 3)` lists a simple
/// source-to-target path with no detours.
pub fn p_dfs_path(depth: u32) -> f64 {
    2f64.powi(depth as i32) / (3.0 * 4f64.powi(depth as i32 - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::BridgeSpec;
    use crate::seed::rng_from_seed;
    use crate::task::{make_task, Family, TaskOptions};
    use std::collections::HashSet;

    fn bridge_task(d: usize, seed: u64) -> ConnectivityTask {
        make_task(Family::Bridge(BridgeSpec::standard(d)), seed, &TaskOptions::default()).unwrap()
    }

    #[test]
    fn tags_round_trip() {
        for s in [
            Strategy::ShortestPath,
            Strategy::Path,
            Strategy::Dfs,
            Strategy::DfsBt,
            Strategy::Walk(12),
        ] {
            assert_eq!(s.to_string().parse::<Strategy>().unwrap(), s);
        }
        assert_eq!(Strategy::Walk(7).to_string(), "Walk-7");
        assert!("Walk-".parse::<Strategy>().is_err());
        assert!("dfs".parse::<Strategy>().is_err());
    }

    #[test]
    fn forced_path_strategies_coincide() {
        let t = make_task(Family::TwoPath { length: 3 }, 5, &TaskOptions::default()).unwrap();
        let mut rng = rng_from_seed(1);
        let run = random_dfs(&t, &mut rng);
        let sp = shortest_path_cot(&t);
        assert_eq!(sp.len(), 4);
        assert_eq!(dfs_cot(&run), sp);
        assert_eq!(path_cot(&run), sp);
        assert_eq!(dfs_bt_cot(&run), sp);
        assert_eq!(walk_cot(&t, 3, 1000, &mut rng).unwrap(), sp);
    }

    #[test]
    fn walk_limit_below_distance_is_rejected() {
        let t = make_task(Family::TwoPath { length: 5 }, 2, &TaskOptions::default()).unwrap();
        let mut rng = rng_from_seed(0);
        assert_eq!(
            walk_cot(&t, 4, 10, &mut rng),
            Err(StrategyError::WalkTooShort { limit: 4, shortest: 5 })
        );
        let t = bridge_task(3, 0);
        assert!(matches!(
            walk_cot(&t, 9, 1, &mut rng),
            Err(StrategyError::SamplingFailed { .. }) | Ok(_)
        ));
    }

    #[test]
    fn shortest_path_lengths() {
        for d in 1..=3 {
            let t = bridge_task(d, 11);
            let sp = shortest_path_cot(&t);
            assert_eq!(sp.len(), 3 * d + 1);
            assert_eq!(sp[0], t.source);
            assert_eq!(*sp.last().unwrap(), t.answer_label());
            assert_eq!(sp, t.roles[0].short_route());
        }
    }

    #[test]
    fn first_choice_at_start_is_three_way() {
        // At the start of Bridge(1, 3, 5, 3) the search picks between the
        // short head, the long head and the deadend head.
        let t = bridge_task(1, 3);
        let r = &t.roles[0];
        let heads = [r.segments[0].short[0], r.segments[0].long[0], r.deadends[0][0]];
        let mut counts = [0usize; 3];
        let mut rng = rng_from_seed(77);
        for _ in 0..3000 {
            let run = random_dfs(&t, &mut rng);
            let first = run.first_visit_order[1];
            let k = heads.iter().position(|&h| h == first).unwrap();
            counts[k] += 1;
            if k == 2 {
                // The whole deadend is listed before any segment vertex.
                assert_eq!(&run.first_visit_order[1..4], r.deadends[0].as_slice());
            }
        }
        for c in counts {
            assert!((c as f64 / 3000.0 - 1.0 / 3.0).abs() < 0.04, "{counts:?}");
        }
    }

    #[test]
    fn dfs_trace_properties() {
        let mut rng = rng_from_seed(5);
        for seed in 0..300 {
            let t = bridge_task(1 + (seed as usize % 4), seed);
            let run = random_dfs(&t, &mut rng);
            let dfs = dfs_cot(&run);
            let path = path_cot(&run);
            let bt = dfs_bt_cot(&run);
            assert!(t.is_target(*dfs.last().unwrap()));
            assert_eq!(run.reached_target, t.answer_label());
            assert!(path.len() <= dfs.len());
            assert!(bt.len() >= dfs.len());
            for w in path.windows(2).chain(bt.windows(2)) {
                assert!(t.graph.has_edge(w[0], w[1]));
            }
            for trace in [&dfs, &path] {
                let set: HashSet<_> = trace.iter().collect();
                assert_eq!(set.len(), trace.len());
            }
            // Every vertex that was backtracked out of appears twice.
            let once: HashSet<_> = path.iter().collect();
            for v in &dfs {
                let k = bt.iter().filter(|&x| x == v).count();
                if !once.contains(v) && run.parent.contains(&Some(*v)) {
                    assert!(k >= 2, "vertex {v} in {bt:?}");
                }
            }
        }
    }

    #[test]
    fn shortest_trace_frequency_depth_one() {
        let t = bridge_task(1, 8);
        let sp = shortest_path_cot(&t);
        let mut rng = rng_from_seed(2024);
        let hits = (0..10_000).filter(|_| dfs_cot(&random_dfs(&t, &mut rng)) == sp).count();
        let rate = hits as f64 / 10_000.0;
        assert!((rate - 1.0 / 3.0).abs() <= 0.02, "rate {rate}");
    }

    #[test]
    fn closed_forms() {
        let close = |a: f64, b: f64| (a - b).abs() < 1e-15;
        assert!(close(p_dfs_shortest(1), 1.0 / 3.0));
        assert!(close(p_dfs_path(1), 2.0 / 3.0));
        assert!(close(p_dfs_shortest(3), 1.0 / 48.0));
        assert!(close(p_dfs_path(3), 1.0 / 6.0));
        assert!(close(p_dfs_shortest(5), 1.0 / 768.0));
        assert!(close(p_dfs_path(5), 1.0 / 24.0));
    }
}
