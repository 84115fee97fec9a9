//! Monte Carlo harness and closed-form bounds for the query-model theorems.

use serde::Serialize;

use super::{run_policy, Outcome, PolicyKind, VqmError};
use crate::analytics::majority_accuracy;
use crate::exec::Exec;
use crate::seed::{stream_rng, stream_seed, tag};
use crate::stats::{percentile_sorted, wilson, Interval};
use crate::task::{make_task, Family, TaskOptions};

/// One batch of independent trials. Trial `i` draws its task from stream
/// `(seed, "vqm-task", i)` and its policy randomness from
/// `(seed, "vqm-policy", i)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VqmRequest {
    pub policy: PolicyKind,
    pub family: Family,
    pub budget: Option<usize>,
    pub trials: u64,
    pub seed: u64,
    pub restricted: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TrialResult {
    pub success: bool,
    pub queries: usize,
    pub outcome: Outcome,
    pub legal_rvqm: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuccessEstimate {
    pub trials: u64,
    pub successes: u64,
    pub success: f64,
    pub ci: Interval,
    pub mean_queries: f64,
    pub p50_queries: usize,
    pub p95_queries: usize,
    pub max_queries: usize,
    pub all_legal: bool,
}

pub fn run_trials(req: &VqmRequest, exec: Exec) -> Result<Vec<TrialResult>, VqmError> {
    let opts = TaskOptions::default();
    exec.map_range(req.trials as usize, |i| {
        let i = i as u64;
        let task = make_task(req.family, stream_seed(req.seed, tag::VQM_TASK, i), &opts)?;
        let mut rng = stream_rng(req.seed, tag::VQM_POLICY, i);
        let mut policy = req.policy.build();
        let tr = run_policy(&task, policy.as_mut(), req.budget, &mut rng, req.restricted)?;
        Ok(TrialResult {
            success: tr.success(&task),
            queries: tr.query_count(),
            outcome: tr.outcome,
            legal_rvqm: super::is_rvqm_legal(task.source, &tr.queries),
        })
    })
    .into_iter()
    .collect()
}

pub fn summarize(results: &[TrialResult]) -> SuccessEstimate {
    let trials = results.len() as u64;
    let successes = results.iter().filter(|r| r.success).count() as u64;
    let mut q: Vec<usize> = results.iter().map(|r| r.queries).collect();
    q.sort_unstable();
    let mean_queries = if q.is_empty() {
        0.0
    } else {
        q.iter().sum::<usize>() as f64 / q.len() as f64
    };
    SuccessEstimate {
        trials,
        successes,
        success: if trials == 0 {
            0.0
        } else {
            successes as f64 / trials as f64
        },
        ci: wilson(successes, trials),
        mean_queries,
        p50_queries: percentile_sorted(&q, 0.5),
        p95_queries: percentile_sorted(&q, 0.95),
        max_queries: q.last().copied().unwrap_or(0),
        all_legal: results.iter().all(|r| r.legal_rvqm),
    }
}

pub fn estimate_success(req: &VqmRequest, exec: Exec) -> Result<SuccessEstimate, VqmError> {
    Ok(summarize(&run_trials(req, exec)?))
}

/// Closed-form quantities for doubled `Bridge(d, l, 2l, 0)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TheoremBounds {
    pub depth: usize,
    pub segment_len: usize,
    pub delta: f64,
    /// `(1 + delta) * 2 l d`
    pub seq_budget: f64,
    /// `1 - exp(-d delta^2 / 2)`, as stated with the theorem.
    pub seq_success_lb: f64,
    /// `1 - exp(-2 d delta^2)`, the Hoeffding bound derived in the proof.
    pub seq_success_lb_proof: f64,
    /// `(1 - delta) * (3/2) l d`
    pub par_budget: f64,
    /// `1/2 + exp(-(1/2) delta^2 (3/2) d)`
    pub par_success_ub: f64,
    /// Smallest number of majority-voted runs at `par_success_ub` reaching
    /// 2/3 accuracy; `None` if more than 10^9 would be needed.
    pub par_runs_needed: Option<u64>,
}

pub const MAX_RUNS: u64 = 1_000_000_000;

pub fn theorem_bounds(depth: usize, segment_len: usize, delta: f64) -> TheoremBounds {
    let d = depth as f64;
    let l = segment_len as f64;
    let par_success_ub = 0.5 + (-0.5 * delta * delta * 1.5 * d).exp();
    TheoremBounds {
        depth,
        segment_len,
        delta,
        seq_budget: (1.0 + delta) * 2.0 * l * d,
        seq_success_lb: 1.0 - (-0.5 * d * delta * delta).exp(),
        seq_success_lb_proof: 1.0 - (-2.0 * d * delta * delta).exp(),
        par_budget: (1.0 - delta) * 1.5 * l * d,
        par_success_ub,
        par_runs_needed: runs_to_reach(par_success_ub.min(1.0), 2.0 / 3.0, MAX_RUNS),
    }
}

/// Smallest `n <= cap` with `majority_accuracy(q, n) >= goal`.
///
/// With fair tie-breaking an even `n` scores exactly like `n - 1`, and for
/// `q > 1/2` accuracy grows with odd `n`, so the search runs over odd `n`.
fn runs_to_reach(q: f64, goal: f64, cap: u64) -> Option<u64> {
    let ok = |n: u64| majority_accuracy(q, n) >= goal;
    if ok(1) {
        return Some(1);
    }
    if q <= 0.5 {
        return None;
    }
    // Odd n = 2k + 1; grow k geometrically, then bisect.
    let mut lo = 0u64;
    let mut hi = 1u64;
    while !ok(2 * hi + 1) {
        lo = hi;
        if 2 * hi + 1 >= cap {
            return None;
        }
        hi = (hi * 2).min(cap / 2);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(2 * mid + 1) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(2 * hi + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_arithmetic() {
        let b = theorem_bounds(8, 4, 0.5);
        assert!((b.seq_budget - 96.0).abs() < 1e-12);
        assert!((b.par_budget - 24.0).abs() < 1e-12);
        assert!((b.seq_success_lb - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        assert!((b.seq_success_lb_proof - (1.0 - (-4.0f64).exp())).abs() < 1e-12);
        let tiny = theorem_bounds(8, 4, 1e-9);
        assert!((tiny.seq_budget - 64.0).abs() < 1e-6);
        assert!((tiny.par_budget - 48.0).abs() < 1e-6);
    }

    #[test]
    fn runs_needed_grows_with_depth() {
        let a = theorem_bounds(8, 4, 0.5).par_runs_needed.unwrap();
        let b = theorem_bounds(16, 4, 0.5).par_runs_needed.unwrap();
        let c = theorem_bounds(32, 4, 0.5).par_runs_needed.unwrap();
        assert!(a < b && b < c, "{a} {b} {c}");
        assert!(b as f64 > 2.0 * a as f64);
        // The bound exceeds 2/3 on its own at small depth.
        assert_eq!(theorem_bounds(1, 4, 0.25).par_runs_needed, Some(1));
        assert_eq!(theorem_bounds(200, 4, 0.5).par_runs_needed, None);
    }

    #[test]
    fn runs_search_matches_linear_scan() {
        for q in [0.52, 0.55, 0.6, 0.65] {
            let fast = runs_to_reach(q, 2.0 / 3.0, MAX_RUNS).unwrap();
            let slow = (1..=10_000u64).find(|&n| majority_accuracy(q, n) >= 2.0 / 3.0).unwrap();
            assert_eq!(fast, slow, "q = {q}");
        }
    }
}
