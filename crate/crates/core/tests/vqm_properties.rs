use bridgelab_core::seed::stream_rng;
use bridgelab_core::stats::Z95;
use bridgelab_core::task::{make_task, Family, TaskOptions};
use bridgelab_core::vqm::{estimate_success, run_policy, run_trials, Outcome, PolicyKind, VqmRequest};
use bridgelab_core::{BridgeSpec, Exec};

fn bridge(d: usize, l: usize) -> Family {
    Family::bridge(d, l, 2 * l, 0).unwrap()
}

#[test]
fn middle_segment_costs_are_uniform_over_l_2l_3l() {
    let (d, l) = (6, 4);
    let trials = 10_000u64;
    let counts = Exec::default().map_range(trials as usize, |i| {
        let task = make_task(bridge(d, l), 1000 + i as u64, &TaskOptions::default()).unwrap();
        let mut policy = PolicyKind::BridgeExplore { segment_len: l }.build();
        let mut rng = stream_rng(6, "segment-costs", i as u64);
        let tr = run_policy(&task, policy.as_mut(), None, &mut rng, true).unwrap();
        let first = |v: usize| tr.queries.iter().position(|q| q.vertex == v).unwrap();
        let xs = &task.roles[0].intersections;
        // Segments v_2 -> v_3 .. v_{d-1} -> v_d start at an intersection
        // with three open branches.
        let mut c = [0u64; 3];
        for k in 1..d - 1 {
            let cost = first(xs[k + 1]) - first(xs[k]);
            assert!(cost % l == 0 && (1..=3).contains(&(cost / l)), "cost {cost}");
            c[cost / l - 1] += 1;
        }
        c
    });
    let total: Vec<u64> = (0..3).map(|j| counts.iter().map(|c| c[j]).sum()).collect();
    let n = total.iter().sum::<u64>() as f64;
    let se = (1.0 / 3.0 * (2.0 / 3.0) / n).sqrt();
    for (j, &t) in total.iter().enumerate() {
        let f = t as f64 / n;
        assert!((f - 1.0 / 3.0).abs() <= 3.0 * se, "cost {}l frequency {f}", j + 1);
    }
}

#[test]
fn bridge_mean_queries_near_2ld_at_depth_6() {
    let (d, l) = (6, 4);
    let req = VqmRequest {
        policy: PolicyKind::BridgeExplore { segment_len: l },
        family: bridge(d, l),
        budget: None,
        trials: 10_000,
        seed: 61,
        restricted: true,
    };
    let est = estimate_success(&req, Exec::default()).unwrap();
    let target = (2 * l * d) as f64;
    assert!(
        (est.mean_queries - target).abs() <= 0.05 * target,
        "{}",
        est.mean_queries
    );
    assert_eq!(est.success, 1.0);
    assert!(est.all_legal);
}

#[test]
fn success_is_monotone_in_budget_per_trial() {
    let fam = bridge(4, 3);
    let outcomes: Vec<Vec<bool>> = (0..=60)
        .map(|b| {
            let req = VqmRequest {
                policy: PolicyKind::BridgeExplore { segment_len: 3 },
                family: fam,
                budget: Some(b),
                trials: 300,
                seed: 12,
                restricted: true,
            };
            run_trials(&req, Exec::default())
                .unwrap()
                .into_iter()
                .map(|r| r.success)
                .collect()
        })
        .collect();
    for w in outcomes.windows(2) {
        for (a, b) in w[0].iter().zip(&w[1]) {
            assert!(!a || *b);
        }
    }
    assert!(outcomes[60].iter().all(|&s| s));
}

#[test]
fn split_half_estimates_agree() {
    let mut req = VqmRequest {
        policy: PolicyKind::BridgeExplore { segment_len: 4 },
        family: bridge(8, 4),
        budget: Some(60),
        trials: 5000,
        seed: 100,
        restricted: true,
    };
    let a = estimate_success(&req, Exec::default()).unwrap();
    req.seed = 200;
    let b = estimate_success(&req, Exec::default()).unwrap();
    let se = |p: f64| p * (1.0 - p) / 5000.0;
    let tol = Z95 * (se(a.success) + se(b.success)).sqrt();
    assert!((a.success - b.success).abs() <= tol, "{} vs {}", a.success, b.success);
    assert!(
        a.success > 0.6 && a.success < 1.0,
        "budget 60 should be informative: {}",
        a.success
    );
}

#[test]
fn random_dfs_reaches_end_within_3d_about_one_in_48() {
    let d = 3;
    let req = VqmRequest {
        policy: PolicyKind::RandomDfs,
        family: Family::Bridge(BridgeSpec::standard(d)),
        budget: Some(3 * d),
        trials: 40_000,
        seed: 48,
        restricted: true,
    };
    let results = run_trials(&req, Exec::default()).unwrap();
    let n = results.len() as f64;
    let found = results.iter().filter(|r| r.outcome == Outcome::FoundTarget).count() as f64 / n;
    let p = 1.0 / 48.0;
    assert!((found - p).abs() <= 3.0 * (p * (1.0 - p) / n).sqrt(), "{found}");
    assert!(results.iter().all(|r| r.queries <= 3 * d && r.legal_rvqm));
}

#[test]
fn random_dfs_matches_scan_on_two_paths() {
    for l in [3, 7, 12] {
        let mk = |policy| VqmRequest {
            policy,
            family: Family::two_path_vertices(l).unwrap(),
            budget: None,
            trials: 200,
            seed: 3,
            restricted: true,
        };
        let scan = run_trials(&mk(PolicyKind::Scan), Exec::default()).unwrap();
        let dfs = run_trials(&mk(PolicyKind::RandomDfs), Exec::default()).unwrap();
        assert_eq!(scan, dfs);
    }
}

#[test]
fn unlimited_budget_always_succeeds() {
    for fam in [
        Family::Bridge(BridgeSpec::standard(3)),
        bridge(5, 2),
        Family::TwoPath { length: 9 },
    ] {
        for policy in [
            PolicyKind::Scan,
            PolicyKind::RandomDfs,
            PolicyKind::BridgeExplore { segment_len: 2 },
        ] {
            let req = VqmRequest {
                policy,
                family: fam,
                budget: None,
                trials: 300,
                seed: 8,
                restricted: true,
            };
            let est = estimate_success(&req, Exec::default()).unwrap();
            assert_eq!(est.success, 1.0, "{policy} on {fam}");
            assert!(est.all_legal);
        }
    }
}

#[test]
fn execution_mode_does_not_change_results() {
    let req = VqmRequest {
        policy: PolicyKind::BridgeExplore { segment_len: 3 },
        family: bridge(5, 3),
        budget: Some(25),
        trials: 500,
        seed: 77,
        restricted: true,
    };
    assert_eq!(
        run_trials(&req, Exec::Sequential).unwrap(),
        run_trials(&req, Exec::Parallel).unwrap()
    );
}
