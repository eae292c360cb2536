//! Per-window web of trust.
//!
//! Every pair of users with an admissible Pearson score is linked in both
//! directions by the same opinion. Users two hops away (linked through a
//! common neighbor but not directly) receive an indirect opinion: each path
//! is discounted through the intermediary and the paths are fused with
//! consensus in ascending intermediary order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{RatingsView, UserId};
use crate::opinion::{consensus, discount, Opinion};
use crate::similarity::PairStats;
use crate::trust_map::{opinion_from_similarity, similarity_from_opinion, EvidenceMapConfig};

/// Indirect similarities at or below `-1 + SIMILARITY_FLOOR_EPS` are dropped.
pub const SIMILARITY_FLOOR_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("user {0} is not a node of the trust graph")]
    UnknownUser(UserId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictionMode {
    /// Direct (similar) neighbors only.
    Standard,
    /// Direct neighbors plus trust-derived two-hop neighbors.
    Hybrid,
}

impl PredictionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PredictionMode::Standard => "standard",
            PredictionMode::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for PredictionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PredictionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" => Ok(PredictionMode::Standard),
            "hybrid" => Ok(PredictionMode::Hybrid),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrustEdge {
    pub from: UserId,
    pub to: UserId,
    pub opinion: Opinion,
    /// Pearson similarity the opinion was derived from.
    pub similarity: f64,
    pub overlap: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrustGraph {
    nodes: BTreeSet<UserId>,
    edges: BTreeMap<UserId, BTreeMap<UserId, TrustEdge>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndirectNeighbor {
    pub target: UserId,
    pub opinion: Opinion,
    pub path_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeighborKind {
    Similar,
    Trusted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub weight: f64,
    pub kind: NeighborKind,
}

/// Fuses per-path opinions `(source→intermediary, intermediary→target)` in
/// the order given. Returns `None` for an empty path list.
pub fn combine_paths<I>(paths: I) -> Option<(Opinion, usize)>
where
    I: IntoIterator<Item = (Opinion, Opinion)>,
{
    let mut acc: Option<(Opinion, usize)> = None;
    for (first, second) in paths {
        let hop = discount(&first, &second).expect("edge opinions are valid");
        acc = Some(match acc {
            None => (hop, 1),
            Some((o, n)) => {
                // direct edges carry u = 1/(n+1) > 0, so discounted paths never become dogmatic
                assert!(o.uncertainty > 0.0 && hop.uncertainty > 0.0);
                (consensus(&o, &hop).expect("non-dogmatic consensus"), n + 1)
            }
        });
    }
    acc
}

/// Similarity weight for a trust-derived neighbor, or `None` when the
/// opinion is vacuous or maps to (almost) perfect dissimilarity.
pub fn trusted_weight(o: &Opinion, cfg: &EvidenceMapConfig) -> Option<f64> {
    let w = similarity_from_opinion(o, cfg).ok()?;
    (w > -1.0 + SIMILARITY_FLOOR_EPS).then_some(w)
}

impl TrustGraph {
    /// One edge per ordered pair of users whose similarity is admissible.
    pub fn build(view: &RatingsView, min_overlap: usize, cfg: &EvidenceMapConfig) -> TrustGraph {
        let nodes: BTreeSet<UserId> = view.users().collect();
        let mut edges: BTreeMap<UserId, BTreeMap<UserId, TrustEdge>> = BTreeMap::new();
        for a in view.users() {
            let mut stats: BTreeMap<UserId, PairStats> = BTreeMap::new();
            for &(item, x) in view.user_ratings(a).unwrap_or_default() {
                for &(u, y) in view.item_ratings(item).unwrap_or_default() {
                    if u > a {
                        stats.entry(u).or_default().add(x, y);
                    }
                }
            }
            for (u, s) in stats {
                let Some(score) = s.score(min_overlap) else {
                    continue;
                };
                let opinion =
                    opinion_from_similarity(score.w, score.overlap, cfg).expect("w within [-1, 1]");
                for (from, to) in [(a, u), (u, a)] {
                    edges.entry(from).or_default().insert(
                        to,
                        TrustEdge {
                            from,
                            to,
                            opinion,
                            similarity: score.w,
                            overlap: score.overlap,
                        },
                    );
                }
            }
        }
        TrustGraph { nodes, edges }
    }

    pub fn nodes(&self) -> &BTreeSet<UserId> {
        &self.nodes
    }

    pub fn edge(&self, from: UserId, to: UserId) -> Option<&TrustEdge> {
        self.edges.get(&from)?.get(&to)
    }

    /// Outgoing edges of `u`, ordered by target.
    pub fn direct(&self, u: UserId) -> impl Iterator<Item = &TrustEdge> + '_ {
        self.edges.get(&u).into_iter().flat_map(|m| m.values())
    }

    /// All directed edges ordered by `(from, to)`.
    pub fn edges(&self) -> impl Iterator<Item = &TrustEdge> + '_ {
        self.edges.values().flat_map(|m| m.values())
    }

    pub fn edge_count(&self) -> usize {
        self.edges.values().map(BTreeMap::len).sum()
    }

    fn check(&self, u: UserId) -> Result<(), GraphError> {
        if self.nodes.contains(&u) {
            Ok(())
        } else {
            Err(GraphError::UnknownUser(u))
        }
    }

    /// Users exactly two hops from `source` with their fused indirect opinion.
    pub fn two_hop_neighbors(&self, source: UserId) -> Result<Vec<IndirectNeighbor>, GraphError> {
        self.check(source)?;
        let direct = self.edges.get(&source);
        let mut paths: BTreeMap<UserId, Vec<(Opinion, Opinion)>> = BTreeMap::new();
        for first in self.direct(source) {
            for second in self.direct(first.to) {
                let target = second.to;
                if target == source || direct.is_some_and(|m| m.contains_key(&target)) {
                    continue;
                }
                paths
                    .entry(target)
                    .or_default()
                    .push((first.opinion, second.opinion));
            }
        }
        Ok(paths
            .into_iter()
            .filter_map(|(target, p)| {
                combine_paths(p).map(|(opinion, path_count)| IndirectNeighbor {
                    target,
                    opinion,
                    path_count,
                })
            })
            .collect())
    }

    /// Neighbors of `source` with the similarity weight used for prediction.
    /// Direct similarity always takes precedence over derived trust.
    pub fn neighbor_set(
        &self,
        source: UserId,
        mode: PredictionMode,
        cfg: &EvidenceMapConfig,
    ) -> Result<BTreeMap<UserId, Neighbor>, GraphError> {
        self.check(source)?;
        let mut out: BTreeMap<UserId, Neighbor> = self
            .direct(source)
            .map(|e| {
                (
                    e.to,
                    Neighbor {
                        weight: e.similarity,
                        kind: NeighborKind::Similar,
                    },
                )
            })
            .collect();
        if mode == PredictionMode::Hybrid {
            for n in self.two_hop_neighbors(source)? {
                if let Some(weight) = trusted_weight(&n.opinion, cfg) {
                    out.entry(n.target).or_insert(Neighbor {
                        weight,
                        kind: NeighborKind::Trusted,
                    });
                }
            }
        }
        Ok(out)
    }

    /// Edge list with one `from to b d u overlap` line per directed edge.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> io::Result<()> {
        for e in self.edges() {
            writeln!(
                out,
                "{} {} {} {} {} {}",
                e.from,
                e.to,
                e.opinion.belief,
                e.opinion.disbelief,
                e.opinion.uncertainty,
                e.overlap
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Rating;
    use crate::similarity::pearson;
    use proptest::prelude::*;

    const ALICE: UserId = UserId(1);
    const BOB: UserId = UserId(2);
    const CLARK: UserId = UserId(3);

    fn push_user(
        rs: &mut Vec<Rating>,
        user: u32,
        items: impl IntoIterator<Item = u32>,
        pattern: &[u8],
    ) {
        for (k, item) in items.into_iter().enumerate() {
            rs.push(Rating::new(user, item, pattern[k % pattern.len()], 0));
        }
    }

    /// Alice—Bob share items 1..=10, Bob—Clark share 11..=20, Alice and Clark share 2.
    fn fig1() -> RatingsView {
        let mut rs = Vec::new();
        push_user(
            &mut rs,
            1,
            (1..=10).chain([21, 22]),
            &[5, 4, 2, 3, 1, 4, 5, 2],
        );
        push_user(&mut rs, 2, 1..=20, &[4, 4, 1, 3, 2, 5, 5, 3, 2]);
        push_user(&mut rs, 3, (11..=20).chain([21, 22]), &[3, 5, 2, 4, 1]);
        RatingsView::from_ratings(rs).unwrap()
    }

    fn graph(view: &RatingsView) -> TrustGraph {
        TrustGraph::build(view, 10, &EvidenceMapConfig::default())
    }

    #[test]
    fn fig1_topology() {
        let view = fig1();
        let g = graph(&view);
        assert_eq!(g.edge_count(), 4);
        assert!(g.edge(ALICE, BOB).is_some() && g.edge(BOB, CLARK).is_some());
        assert!(g.edge(ALICE, CLARK).is_none());
        assert_eq!(
            g.edge(ALICE, BOB).unwrap().opinion,
            g.edge(BOB, ALICE).unwrap().opinion
        );
        let w = pearson(&view, ALICE, BOB, 10).unwrap().unwrap();
        let e = g.edge(ALICE, BOB).unwrap();
        assert_eq!((e.similarity, e.overlap), (w.w, 10));
    }

    #[test]
    fn fig1_indirect_opinion() {
        let g = graph(&fig1());
        let two = g.two_hop_neighbors(ALICE).unwrap();
        assert_eq!(two.len(), 1);
        let expected = discount(
            &g.edge(ALICE, BOB).unwrap().opinion,
            &g.edge(BOB, CLARK).unwrap().opinion,
        )
        .unwrap();
        assert_eq!(two[0].target, CLARK);
        assert_eq!(two[0].opinion, expected);
        assert_eq!(two[0].path_count, 1);
        assert!(g.two_hop_neighbors(BOB).unwrap().is_empty());
    }

    #[test]
    fn fig1_neighbor_sets() {
        let g = graph(&fig1());
        let cfg = EvidenceMapConfig::default();
        let standard = g
            .neighbor_set(ALICE, PredictionMode::Standard, &cfg)
            .unwrap();
        assert_eq!(standard.keys().copied().collect::<Vec<_>>(), vec![BOB]);
        let hybrid = g.neighbor_set(ALICE, PredictionMode::Hybrid, &cfg).unwrap();
        assert_eq!(hybrid.keys().copied().collect::<Vec<_>>(), vec![BOB, CLARK]);
        assert_eq!(hybrid[&CLARK].kind, NeighborKind::Trusted);
        // Bob has no two-hop targets, so both modes agree
        assert_eq!(
            g.neighbor_set(BOB, PredictionMode::Standard, &cfg).unwrap(),
            g.neighbor_set(BOB, PredictionMode::Hybrid, &cfg).unwrap()
        );
    }

    #[test]
    fn below_overlap_pair_has_no_edges() {
        let mut rs = Vec::new();
        push_user(&mut rs, 1, 1..=9, &[1, 2, 3, 4, 5]);
        push_user(&mut rs, 2, 1..=9, &[2, 2, 3, 5, 5]);
        let g = graph(&RatingsView::from_ratings(rs).unwrap());
        assert_eq!(g.edge_count(), 0);
        assert!(g.two_hop_neighbors(UserId(1)).unwrap().is_empty());
        assert_eq!(
            g.two_hop_neighbors(UserId(9)).unwrap_err(),
            GraphError::UnknownUser(UserId(9))
        );
    }

    #[test]
    fn no_neighbors_beyond_two_hops() {
        // chain 1—2—3—4 with blocks of 10 shared items per link
        let mut rs = Vec::new();
        push_user(&mut rs, 1, 1..=10, &[1, 3, 5, 2]);
        push_user(&mut rs, 2, 1..=20, &[2, 4, 5, 1, 3]);
        push_user(&mut rs, 3, 11..=30, &[5, 4, 1, 2]);
        push_user(&mut rs, 4, 21..=30, &[1, 1, 4, 5, 2]);
        let g = graph(&RatingsView::from_ratings(rs).unwrap());
        let hybrid = g
            .neighbor_set(
                UserId(1),
                PredictionMode::Hybrid,
                &EvidenceMapConfig::default(),
            )
            .unwrap();
        assert!(hybrid.contains_key(&UserId(3)));
        assert!(!hybrid.contains_key(&UserId(4)));
    }

    #[test]
    fn diamond_is_order_independent() {
        // 1—{2,3}—4 with 1 and 4 sharing nothing
        let mut rs = Vec::new();
        push_user(&mut rs, 1, 1..=20, &[5, 3, 4, 1, 2]);
        push_user(&mut rs, 2, (1..=10).chain(21..=30), &[4, 4, 2, 1, 3, 5]);
        push_user(&mut rs, 3, (11..=20).chain(31..=40), &[1, 2, 5, 4]);
        push_user(&mut rs, 4, 21..=40, &[3, 5, 1, 2, 2, 4]);
        let g = graph(&RatingsView::from_ratings(rs).unwrap());
        let op = |a, b| g.edge(UserId(a), UserId(b)).unwrap().opinion;
        let via2 = discount(&op(1, 2), &op(2, 4)).unwrap();
        let via3 = discount(&op(1, 3), &op(3, 4)).unwrap();
        let forward = consensus(&via2, &via3).unwrap();
        let backward = consensus(&via3, &via2).unwrap();
        let two = g.two_hop_neighbors(UserId(1)).unwrap();
        assert_eq!(two.len(), 1);
        assert_eq!(two[0].path_count, 2);
        for o in [forward, backward] {
            assert!((two[0].opinion.belief - o.belief).abs() < 1e-9);
            assert!((two[0].opinion.disbelief - o.disbelief).abs() < 1e-9);
            assert!((two[0].opinion.uncertainty - o.uncertainty).abs() < 1e-9);
        }
    }

    #[test]
    fn edge_list_dump() {
        let g = graph(&fig1());
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("1 2 "));
        assert!(lines[0].ends_with(" 10"));
        assert_eq!(lines[0].split(' ').count(), 6);
    }

    prop_compose! {
        fn random_view()(cells in proptest::collection::btree_map((0u32..8, 0u32..25), 1u8..=5, 40..160)) -> RatingsView {
            RatingsView::from_ratings(cells.into_iter().map(|((u, i), v)| Rating::new(u, i, v, 0)).collect()).unwrap()
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn hybrid_contains_standard(view in random_view()) {
            let g = TrustGraph::build(&view, 4, &EvidenceMapConfig::default());
            let cfg = EvidenceMapConfig::default();
            for u in view.users() {
                let s = g.neighbor_set(u, PredictionMode::Standard, &cfg).unwrap();
                let h = g.neighbor_set(u, PredictionMode::Hybrid, &cfg).unwrap();
                for (k, n) in &s {
                    prop_assert_eq!(h.get(k), Some(n));
                }
            }
        }

        #[test]
        fn rebuild_is_deterministic(view in random_view()) {
            let cfg = EvidenceMapConfig::default();
            prop_assert_eq!(TrustGraph::build(&view, 4, &cfg), TrustGraph::build(&view, 4, &cfg));
        }

        #[test]
        fn multi_path_fold_order_independent(view in random_view()) {
            let g = TrustGraph::build(&view, 3, &EvidenceMapConfig::default());
            for u in view.users() {
                for n in g.two_hop_neighbors(u).unwrap() {
                    let mut paths: Vec<(Opinion, Opinion)> = g.direct(u)
                        .filter_map(|e| g.edge(e.to, n.target).map(|f| (e.opinion, f.opinion)))
                        .collect();
                    paths.reverse();
                    let (rev, count) = combine_paths(paths).unwrap();
                    prop_assert_eq!(count, n.path_count);
                    prop_assert!((rev.belief - n.opinion.belief).abs() < 1e-9);
                    prop_assert!((rev.disbelief - n.opinion.disbelief).abs() < 1e-9);
                    prop_assert!((rev.uncertainty - n.opinion.uncertainty).abs() < 1e-9);
                }
            }
        }
    }
}
