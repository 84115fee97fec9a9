//! Decision and evidence criteria, including budget-forced evidence.
//!
//! A chain of thought is evidence for the answer when it starts at the
//! source, ends on a target, and every node after the first has a graph
//! neighbour somewhere earlier in the list. Repeated nodes are allowed.

use serde::Serialize;

use crate::codec::Codec;
use crate::task::ConnectivityTask;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub format_ok: bool,
    pub evidence_ok: bool,
    pub decision_ok: bool,
    /// Length of the shortest prefix that is valid evidence.
    pub evidence_prefix_len: Option<usize>,
}

/// Literal evidence criterion over the whole list.
pub fn check_evidence(task: &ConnectivityTask, cot: &[usize]) -> bool {
    let Some((&first, _)) = cot.split_first() else {
        return false;
    };
    let last = cot[cot.len() - 1];
    if first != task.source || !task.is_target(last) {
        return false;
    }
    chain_holds(task, cot).is_none()
}

/// Index of the first node with no neighbour earlier in the list, if any.
/// Out-of-range labels fail at their position.
fn chain_holds(task: &ConnectivityTask, cot: &[usize]) -> Option<usize> {
    let g = &task.graph;
    let n = g.vertex_count();
    let mut seen = vec![false; n];
    for (i, &v) in cot.iter().enumerate() {
        if v >= n {
            return Some(i);
        }
        if i > 0 && !g.adj(v).iter().any(|&w| seen[w]) {
            return Some(i);
        }
        seen[v] = true;
    }
    None
}

/// Length of the shortest prefix of `cot` that satisfies the evidence
/// criterion, found in one left-to-right scan.
pub fn evidence_prefix_len(task: &ConnectivityTask, cot: &[usize]) -> Option<usize> {
    if cot.first() != Some(&task.source) {
        return None;
    }
    let g = &task.graph;
    let n = g.vertex_count();
    let mut seen = vec![false; n];
    seen[task.source] = true;
    for (i, &v) in cot.iter().enumerate().skip(1) {
        if v >= n || !g.adj(v).iter().any(|&w| seen[w]) {
            return None;
        }
        if task.is_target(v) {
            return Some(i + 1);
        }
        seen[v] = true;
    }
    None
}

/// Whether some prefix of at most `budget` nodes is valid evidence;
/// `None` means unlimited.
pub fn evidence_within_budget(task: &ConnectivityTask, cot: &[usize], budget: Option<usize>) -> bool {
    match (evidence_prefix_len(task, cot), budget) {
        (Some(k), Some(b)) => k <= b,
        (Some(_), None) => true,
        (None, _) => false,
    }
}

pub fn check_decision(task: &ConnectivityTask, decision: Option<usize>) -> bool {
    decision == Some(task.answer_label())
}

/// Grades one raw output. Unparseable text fails every criterion.
pub fn grade_output(task: &ConnectivityTask, codec: &Codec, text: &str, budget: Option<usize>) -> Verdict {
    let Ok(parsed) = codec.parse_output(text) else {
        return Verdict::default();
    };
    let prefix = evidence_prefix_len(task, &parsed.cot).filter(|&k| budget.is_none_or(|b| k <= b));
    Verdict {
        format_ok: true,
        evidence_ok: prefix.is_some(),
        decision_ok: check_decision(task, parsed.decision),
        evidence_prefix_len: prefix,
    }
}
