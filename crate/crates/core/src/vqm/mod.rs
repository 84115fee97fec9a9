//! Vertex Query Model simulation.
//!
//! A policy sees the labels of the source and both targets and learns the
//! graph only through neighbourhood queries. In the restricted model the
//! first query must be the source and every later query must name a vertex
//! returned by an earlier one. One query costs one unit; re-querying a
//! known vertex costs again.

mod harness;
mod policy;

pub use harness::{
    estimate_success, run_trials, theorem_bounds, SuccessEstimate, TheoremBounds, TrialResult, VqmRequest,
};
pub use policy::{BridgeExplorePolicy, Policy, PolicyKind, RandomDfsPolicy, ScanPolicy};

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::seed::SimRng;
use crate::task::ConnectivityTask;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QueryRecord {
    pub vertex: usize,
    /// Sorted neighbour set returned by the oracle.
    pub neighbors: Vec<usize>,
}

/// What a policy sees when choosing its next move.
#[derive(Clone, Copy, Debug)]
pub struct View<'a> {
    pub source: usize,
    pub target1: usize,
    pub target2: usize,
    pub history: &'a [QueryRecord],
}

impl View<'_> {
    pub fn is_target(&self, v: usize) -> bool {
        v == self.target1 || v == self.target2
    }

    /// A target contained in the most recent answer.
    pub fn target_in_last(&self) -> Option<usize> {
        self.history
            .last()?
            .neighbors
            .iter()
            .copied()
            .find(|&v| self.is_target(v))
    }

    /// Fair coin between the two targets.
    pub fn guess(&self, rng: &mut SimRng) -> usize {
        if rng.random_bool(0.5) {
            self.target1
        } else {
            self.target2
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    Query(usize),
    Decide(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Outcome {
    /// Decided on a target that appeared in some answer.
    FoundTarget,
    /// Decided without having seen the chosen target.
    Guessed,
    /// Ran out of budget; the decision is a fair coin.
    BudgetExhausted,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VqmTranscript {
    pub queries: Vec<QueryRecord>,
    pub legal_rvqm: bool,
    pub outcome: Outcome,
    pub decision: usize,
}

impl VqmTranscript {
    pub fn query_count(&self) -> usize {
        self.queries.len()
    }

    pub fn success(&self, task: &ConnectivityTask) -> bool {
        self.decision == task.answer_label()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VqmError {
    #[error("restricted-model violation at query {index}: vertex {vertex} was never returned by an earlier query")]
    RestrictedViolation { index: usize, vertex: usize },
    #[error("query {index} names vertex {vertex}, outside the graph")]
    UnknownVertex { index: usize, vertex: usize },
    #[error("policy decided {0}, which is not one of the two targets")]
    InvalidDecision(usize),
    #[error("policy made {0} queries without deciding")]
    Runaway(usize),
    #[error(transparent)]
    Task(#[from] crate::graph::GraphError),
}

/// Runs `policy` on `task` with at most `budget` queries (`None` for
/// unlimited). The fallback coin for budget exhaustion is drawn from `rng`
/// before the policy moves, so the policy's own draws do not depend on the
/// budget.
pub fn run_policy(
    task: &ConnectivityTask,
    policy: &mut dyn Policy,
    budget: Option<usize>,
    rng: &mut SimRng,
    restricted: bool,
) -> Result<VqmTranscript, VqmError> {
    let g = &task.graph;
    let n = g.vertex_count();
    let fallback = if rng.random_bool(0.5) {
        task.target1
    } else {
        task.target2
    };
    let hard_cap = 64 * (n + g.edge_count()) + 64;
    let mut queries: Vec<QueryRecord> = Vec::new();
    let mut returned = vec![false; n];
    let mut seen_target = [false; 2];
    loop {
        let view = View {
            source: task.source,
            target1: task.target1,
            target2: task.target2,
            history: &queries,
        };
        match policy.next(&view, rng) {
            Action::Decide(d) => {
                let outcome = if d == task.target1 && seen_target[0] || d == task.target2 && seen_target[1] {
                    Outcome::FoundTarget
                } else if task.is_target(d) {
                    Outcome::Guessed
                } else {
                    return Err(VqmError::InvalidDecision(d));
                };
                return Ok(VqmTranscript {
                    queries,
                    legal_rvqm: true,
                    outcome,
                    decision: d,
                });
            }
            Action::Query(v) => {
                let index = queries.len();
                if budget.is_some_and(|b| index >= b) {
                    return Ok(VqmTranscript {
                        queries,
                        legal_rvqm: true,
                        outcome: Outcome::BudgetExhausted,
                        decision: fallback,
                    });
                }
                if index >= hard_cap {
                    return Err(VqmError::Runaway(index));
                }
                if v >= n {
                    return Err(VqmError::UnknownVertex { index, vertex: v });
                }
                let legal = if index == 0 { v == task.source } else { returned[v] };
                if restricted && !legal {
                    return Err(VqmError::RestrictedViolation { index, vertex: v });
                }
                let neighbors = g.adj(v).to_vec();
                for &w in &neighbors {
                    returned[w] = true;
                    if w == task.target1 {
                        seen_target[0] = true;
                    }
                    if w == task.target2 {
                        seen_target[1] = true;
                    }
                }
                queries.push(QueryRecord { vertex: v, neighbors });
            }
        }
    }
}

/// Checks the restricted-model rule over a finished transcript.
pub fn is_rvqm_legal(source: usize, queries: &[QueryRecord]) -> bool {
    let mut returned = std::collections::HashSet::new();
    for (i, q) in queries.iter().enumerate() {
        let ok = if i == 0 {
            q.vertex == source
        } else {
            returned.contains(&q.vertex)
        };
        if !ok {
            return false;
        }
        returned.extend(q.neighbors.iter().copied());
    }
    true
}
