//! (s, t1, t2)-connectivity task instances over two identical components.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{build_bridge, build_path, disjoint_union, BridgeSpec, Graph, GraphError, RoleMap};
use crate::seed::rng_from_seed;

/// Graph family each component of a task is drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Bridge(BridgeSpec),
    /// Plain path with `length` edges.
    TwoPath {
        length: usize,
    },
}

impl Family {
    pub fn bridge(depth: usize, short: usize, long: usize, deadend: usize) -> Result<Self, GraphError> {
        BridgeSpec::new(depth, short, long, deadend).map(Family::Bridge)
    }

    /// Two-path family whose paths have `vertices` vertices each, the way
    /// path length is counted in the query-complexity bounds.
    pub fn two_path_vertices(vertices: usize) -> Result<Self, GraphError> {
        if vertices < 2 {
            return Err(GraphError::EmptyPath);
        }
        Ok(Family::TwoPath { length: vertices - 1 })
    }

    pub fn build_component(&self) -> Result<(Graph, RoleMap), GraphError> {
        match *self {
            Family::Bridge(spec) => build_bridge(spec),
            Family::TwoPath { length } => build_path(length),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Family::Bridge(_) => "bridge",
            Family::TwoPath { .. } => "two-path",
        }
    }

    /// Depth for bridges; edge length for paths.
    pub fn depth(&self) -> usize {
        match *self {
            Family::Bridge(spec) => spec.depth,
            Family::TwoPath { length } => length,
        }
    }

    /// Vertices in one component.
    pub fn component_size(&self) -> usize {
        match *self {
            Family::Bridge(spec) => spec.vertex_count(),
            Family::TwoPath { length } => length + 1,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Bridge(spec) => spec.fmt(f),
            Family::TwoPath { length } => write!(f, "two-path({length})"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unrecognised family {0:?}; expected bridge(d,short,long,deadend) or two-path(L)")]
pub struct FamilyParseError(pub String);

impl FromStr for Family {
    type Err = FamilyParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || FamilyParseError(s.to_string());
        let t = s.trim();
        let (name, rest) = t.split_once('(').ok_or_else(err)?;
        let args = rest.strip_suffix(')').ok_or_else(err)?;
        let nums: Vec<usize> = args
            .split(',')
            .map(|a| a.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| err())?;
        match (name.trim(), nums.as_slice()) {
            ("bridge", &[d, sh, lo, de]) => Family::bridge(d, sh, lo, de).map_err(|_| err()),
            ("two-path", &[l]) if l >= 1 => Ok(Family::TwoPath { length: l }),
            _ => Err(err()),
        }
    }
}

/// How presented edges are shuffled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeShuffle {
    /// One shuffle over all edges, interleaving the two components.
    #[default]
    Global,
    /// Each component's edges shuffled on their own; first component listed first.
    PerComponent,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TaskOptions {
    pub edge_shuffle: EdgeShuffle,
}

/// Which of the two presented targets shares the source's component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Answer {
    Target1,
    Target2,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConnectivityTask {
    pub family: Family,
    /// Labelled graph with edges in presentation order.
    pub graph: Graph,
    pub source: usize,
    pub target1: usize,
    pub target2: usize,
    pub answer: Answer,
    /// Canonical vertex -> presented label.
    pub label_perm: Vec<usize>,
    /// Presentation position -> canonical edge index.
    pub edge_order: Vec<usize>,
    pub seed: u64,
    /// Labelled roles of both components; `roles[0]` holds the source.
    pub roles: [RoleMap; 2],
}

impl ConnectivityTask {
    /// Assembles a task from explicit random choices. `source_side` picks the
    /// component hosting the source; `swap_targets` presents the second
    /// component's end node as `target1`.
    pub fn from_parts(
        family: Family,
        source_side: usize,
        swap_targets: bool,
        label_perm: Vec<usize>,
        edge_order: Vec<usize>,
        seed: u64,
    ) -> Result<Self, GraphError> {
        assert!(source_side < 2, "source_side must be 0 or 1");
        let (component, roles) = family.build_component()?;
        let union = disjoint_union(&component, &component);
        let n = union.graph.vertex_count();
        assert!(is_permutation(&label_perm, n), "label_perm is not a bijection");
        assert!(
            is_permutation(&edge_order, union.graph.edge_count()),
            "edge_order is not a permutation"
        );
        let off = union.offset;
        let canon = [roles.clone(), roles.relabel(|v| v + off)];
        let graph = union.graph.reorder_edges(&edge_order).relabel(&label_perm);
        let label = |v: usize| label_perm[v];
        let host = canon[source_side].relabel(label);
        let other = canon[1 - source_side].relabel(label);
        let (e0, e1) = (label(canon[0].end), label(canon[1].end));
        let (target1, target2) = if swap_targets { (e1, e0) } else { (e0, e1) };
        let answer = if target1 == host.end {
            Answer::Target1
        } else {
            Answer::Target2
        };
        Ok(ConnectivityTask {
            family,
            graph,
            source: host.start,
            target1,
            target2,
            answer,
            label_perm,
            edge_order,
            seed,
            roles: [host, other],
        })
    }

    pub fn answer_label(&self) -> usize {
        match self.answer {
            Answer::Target1 => self.target1,
            Answer::Target2 => self.target2,
        }
    }

    pub fn wrong_label(&self) -> usize {
        match self.answer {
            Answer::Target1 => self.target2,
            Answer::Target2 => self.target1,
        }
    }

    pub fn is_target(&self, v: usize) -> bool {
        v == self.target1 || v == self.target2
    }

    /// Exactly one target shares the source's component, and the three
    /// labels are distinct.
    pub fn satisfies_promise(&self) -> bool {
        let distinct = self.source != self.target1 && self.source != self.target2 && self.target1 != self.target2;
        let Ok(dist) = self.graph.distances_from(self.source) else {
            return false;
        };
        let r1 = dist.get(self.target1).copied().flatten().is_some();
        let r2 = dist.get(self.target2).copied().flatten().is_some();
        distinct && (r1 != r2)
    }
}

fn is_permutation(p: &[usize], n: usize) -> bool {
    if p.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    p.iter().all(|&x| x < n && !std::mem::replace(&mut seen[x], true))
}

/// Draws a task from `seed`: source side and target order are independent
/// fair coins, labels are a uniform permutation of `0..V`, and edges are
/// presented in uniformly random order.
pub fn make_task(family: Family, seed: u64, opts: &TaskOptions) -> Result<ConnectivityTask, GraphError> {
    let mut rng = rng_from_seed(seed);
    let per_component = family.component_size();
    let n = 2 * per_component;
    let edges_per_component = match family {
        Family::Bridge(spec) => spec.edge_count(),
        Family::TwoPath { length } => length,
    };
    let source_side = usize::from(rng.random_bool(0.5));
    let swap_targets = rng.random_bool(0.5);
    let mut label_perm: Vec<usize> = (0..n).collect();
    label_perm.shuffle(&mut rng);
    let edge_order = match opts.edge_shuffle {
        EdgeShuffle::Global => {
            let mut order: Vec<usize> = (0..2 * edges_per_component).collect();
            order.shuffle(&mut rng);
            order
        }
        EdgeShuffle::PerComponent => {
            let mut first: Vec<usize> = (0..edges_per_component).collect();
            let mut second: Vec<usize> = (edges_per_component..2 * edges_per_component).collect();
            first.shuffle(&mut rng);
            second.shuffle(&mut rng);
            first.extend(second);
            first
        }
    };
    ConnectivityTask::from_parts(family, source_side, swap_targets, label_perm, edge_order, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_task() {
        let fam = Family::Bridge(BridgeSpec::standard(3));
        let a = make_task(fam, 42, &TaskOptions::default()).unwrap();
        let b = make_task(fam, 42, &TaskOptions::default()).unwrap();
        assert_eq!(a, b);
        let c = make_task(fam, 43, &TaskOptions::default()).unwrap();
        assert_ne!(a.label_perm, c.label_perm);
    }

    #[test]
    fn answer_side_is_fair() {
        let fam = Family::Bridge(BridgeSpec::standard(1));
        let hits = (0..10_000u64)
            .filter(|&s| make_task(fam, s, &TaskOptions::default()).unwrap().answer == Answer::Target1)
            .count();
        let rate = hits as f64 / 10_000.0;
        assert!((rate - 0.5).abs() <= 0.02, "rate {rate}");
    }

    #[test]
    fn two_path_six_has_fourteen_vertices() {
        let t = make_task(Family::TwoPath { length: 6 }, 1, &TaskOptions::default()).unwrap();
        assert_eq!(t.graph.vertex_count(), 14);
        assert_eq!(t.graph.edge_count(), 12);
        assert!(t.satisfies_promise());
    }

    #[test]
    fn promise_holds_across_seeds() {
        for fam in [
            Family::Bridge(BridgeSpec::standard(2)),
            Family::Bridge(BridgeSpec::new(3, 2, 4, 0).unwrap()),
            Family::TwoPath { length: 5 },
        ] {
            for seed in 0..200 {
                let t = make_task(fam, seed, &TaskOptions::default()).unwrap();
                assert!(t.satisfies_promise(), "{fam} seed {seed}");
                assert!(t.graph.shortest_path(t.source, t.answer_label()).unwrap().is_some());
                assert!(!t.graph.connected(t.source, t.wrong_label()).unwrap());
            }
        }
    }

    #[test]
    fn label_positions_are_uniform() {
        // Chi-square over which label canonical vertex 0 receives.
        let fam = Family::TwoPath { length: 3 };
        let n = 8;
        let seeds = 10_000u64;
        let mut counts = vec![0f64; n];
        for s in 0..seeds {
            let t = make_task(fam, s, &TaskOptions::default()).unwrap();
            counts[t.label_perm[0]] += 1.0;
        }
        let expected = seeds as f64 / n as f64;
        let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
        // 7 degrees of freedom, p = 0.01 critical value.
        assert!(chi2 < 18.475, "chi2 {chi2}");
    }

    #[test]
    fn per_component_shuffle_keeps_components_apart() {
        let fam = Family::TwoPath { length: 4 };
        let t = make_task(
            fam,
            9,
            &TaskOptions {
                edge_shuffle: EdgeShuffle::PerComponent,
            },
        )
        .unwrap();
        assert!(t.edge_order[..4].iter().all(|&e| e < 4));
        assert!(t.edge_order[4..].iter().all(|&e| e >= 4));
    }

    #[test]
    fn family_text_round_trip() {
        for f in [Family::Bridge(BridgeSpec::standard(5)), Family::TwoPath { length: 6 }] {
            assert_eq!(f.to_string().parse::<Family>().unwrap(), f);
        }
        assert!("bridge(0,3,5,3)".parse::<Family>().is_err());
        assert!("two-path(0)".parse::<Family>().is_err());
        assert!("ring(3)".parse::<Family>().is_err());
        assert_eq!(Family::two_path_vertices(6).unwrap(), Family::TwoPath { length: 5 });
    }
}
