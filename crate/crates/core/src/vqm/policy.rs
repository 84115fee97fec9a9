//! The shipped query policies. Each one only uses what the oracle has
//! returned so far; none of them looks at role metadata.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;

use super::{Action, View};
use crate::seed::SimRng;

pub trait Policy {
    fn name(&self) -> &'static str;
    fn next(&mut self, view: &View<'_>, rng: &mut SimRng) -> Action;
}

/// Which policy to instantiate for a trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PolicyKind {
    Scan,
    /// Bridge exploration that abandons a branch after `segment_len` queries.
    BridgeExplore {
        segment_len: usize,
    },
    RandomDfs,
}

impl PolicyKind {
    pub fn build(&self) -> Box<dyn Policy + Send> {
        match *self {
            PolicyKind::Scan => Box::new(ScanPolicy::default()),
            PolicyKind::BridgeExplore { segment_len } => Box::new(BridgeExplorePolicy::new(segment_len)),
            PolicyKind::RandomDfs => Box::new(RandomDfsPolicy::default()),
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyKind::Scan => f.write_str("scan"),
            PolicyKind::BridgeExplore { segment_len } => write!(f, "bridge-{segment_len}"),
            PolicyKind::RandomDfs => f.write_str("dfs"),
        }
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "scan" => Ok(PolicyKind::Scan),
            "dfs" => Ok(PolicyKind::RandomDfs),
            _ => s
                .strip_prefix("bridge-")
                .and_then(|l| l.parse().ok())
                .filter(|&l: &usize| l >= 1)
                .map(|segment_len| PolicyKind::BridgeExplore { segment_len })
                .ok_or_else(|| format!("unknown policy {s:?}; expected scan, dfs or bridge-<l>")),
        }
    }
}

/// Walks away from the source one vertex at a time, always querying a
/// not-yet-queried neighbour of the last queried vertex.
#[derive(Debug, Default)]
pub struct ScanPolicy {
    queried: HashSet<usize>,
    discovered: BTreeSet<usize>,
}

impl Policy for ScanPolicy {
    fn name(&self) -> &'static str {
        "scan"
    }

    fn next(&mut self, view: &View<'_>, rng: &mut SimRng) -> Action {
        let Some(last) = view.history.last() else {
            self.queried.insert(view.source);
            return Action::Query(view.source);
        };
        if let Some(t) = view.target_in_last() {
            return Action::Decide(t);
        }
        for &w in &last.neighbors {
            if !self.queried.contains(&w) {
                self.discovered.insert(w);
            }
        }
        let fresh: Vec<usize> = last
            .neighbors
            .iter()
            .copied()
            .filter(|w| !self.queried.contains(w))
            .collect();
        let pick = if fresh.is_empty() {
            self.discovered.iter().next().copied()
        } else {
            Some(fresh[rng.random_range(0..fresh.len())])
        };
        match pick {
            Some(v) => {
                self.queried.insert(v);
                self.discovered.remove(&v);
                Action::Query(v)
            }
            None => Action::Decide(view.guess(rng)),
        }
    }
}

/// Depth-first search with a uniformly random unvisited neighbour at each
/// step; one query per visited vertex, backtracking is free.
#[derive(Debug, Default)]
pub struct RandomDfsPolicy {
    adjacency: HashMap<usize, Vec<usize>>,
    visited: HashSet<usize>,
    stack: Vec<usize>,
}

impl Policy for RandomDfsPolicy {
    fn name(&self) -> &'static str {
        "dfs"
    }

    fn next(&mut self, view: &View<'_>, rng: &mut SimRng) -> Action {
        let Some(last) = view.history.last() else {
            self.visited.insert(view.source);
            self.stack.push(view.source);
            return Action::Query(view.source);
        };
        if let Some(t) = view.target_in_last() {
            return Action::Decide(t);
        }
        self.adjacency.insert(last.vertex, last.neighbors.clone());
        while let Some(&top) = self.stack.last() {
            let fresh: Vec<usize> = self.adjacency[&top]
                .iter()
                .copied()
                .filter(|w| !self.visited.contains(w))
                .collect();
            if fresh.is_empty() {
                self.stack.pop();
                continue;
            }
            let next = fresh[rng.random_range(0..fresh.len())];
            self.visited.insert(next);
            self.stack.push(next);
            return Action::Query(next);
        }
        Action::Decide(view.guess(rng))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Walk {
    prev: usize,
    cur: usize,
    steps_left: usize,
}

/// Bridge exploration: at every newly reached intersection (a vertex whose
/// answer has more than two neighbours, or the source), pick a random
/// unexplored incident path and follow it for `segment_len` queries. If no
/// new intersection turns up, the branch is parked and another branch of the
/// same intersection is tried. Parked branches are resumed, oldest first,
/// only when the current intersection has nothing left.
#[derive(Debug)]
pub struct BridgeExplorePolicy {
    segment_len: usize,
    intersections: HashSet<usize>,
    branches: Vec<(usize, usize)>,
    parked: VecDeque<(usize, usize)>,
    active: Option<Walk>,
}

impl BridgeExplorePolicy {
    pub fn new(segment_len: usize) -> Self {
        assert!(segment_len >= 1, "segment length must be positive");
        BridgeExplorePolicy {
            segment_len,
            intersections: HashSet::new(),
            branches: Vec::new(),
            parked: VecDeque::new(),
            active: None,
        }
    }

    fn enter_intersection(&mut self, x: usize, came_from: Option<usize>, neighbors: &[usize]) {
        self.intersections.insert(x);
        // Untried branches of the previous intersection become fallbacks.
        self.parked.extend(self.branches.drain(..));
        self.branches = neighbors
            .iter()
            .copied()
            .filter(|&w| Some(w) != came_from)
            .map(|w| (x, w))
            .collect();
    }

    fn absorb(&mut self, vertex: usize, neighbors: &[usize]) {
        let Some(mut walk) = self.active.take() else {
            // Answer to the initial source query.
            self.enter_intersection(vertex, None, neighbors);
            return;
        };
        debug_assert_eq!(walk.cur, vertex);
        walk.steps_left = walk.steps_left.saturating_sub(1);
        if neighbors.len() > 2 {
            if !self.intersections.contains(&vertex) {
                self.enter_intersection(vertex, Some(walk.prev), neighbors);
            }
            return;
        }
        let Some(&next) = neighbors.iter().find(|&&w| w != walk.prev) else {
            return;
        };
        if walk.steps_left == 0 {
            self.parked.push_back((vertex, next));
        } else {
            self.active = Some(Walk {
                prev: vertex,
                cur: next,
                steps_left: walk.steps_left,
            });
        }
    }

    fn start(&mut self, prev: usize, cur: usize) -> Action {
        self.active = Some(Walk {
            prev,
            cur,
            steps_left: self.segment_len,
        });
        Action::Query(cur)
    }
}

impl Policy for BridgeExplorePolicy {
    fn name(&self) -> &'static str {
        "bridge"
    }

    fn next(&mut self, view: &View<'_>, rng: &mut SimRng) -> Action {
        let Some(last) = view.history.last() else {
            return Action::Query(view.source);
        };
        if let Some(t) = view.target_in_last() {
            return Action::Decide(t);
        }
        self.absorb(last.vertex, &last.neighbors);
        if let Some(walk) = self.active {
            if self.intersections.contains(&walk.cur) {
                // Walked back into a known intersection: branch exhausted.
                self.active = None;
            } else {
                return Action::Query(walk.cur);
            }
        }
        if !self.branches.is_empty() {
            let i = rng.random_range(0..self.branches.len());
            let (from, head) = self.branches.swap_remove(i);
            return self.start(from, head);
        }
        while let Some((prev, cur)) = self.parked.pop_front() {
            if !self.intersections.contains(&cur) {
                return self.start(prev, cur);
            }
        }
        Action::Decide(view.guess(rng))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policy_names_round_trip() {
        for k in [
            PolicyKind::Scan,
            PolicyKind::RandomDfs,
            PolicyKind::BridgeExplore { segment_len: 4 },
        ] {
            assert_eq!(k.to_string().parse::<PolicyKind>().unwrap(), k);
        }
        assert!("bridge-0".parse::<PolicyKind>().is_err());
        assert!("bfs".parse::<PolicyKind>().is_err());
    }
}
