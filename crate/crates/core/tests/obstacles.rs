//! Exhaustive check of the obstacle predicates on the interior of a 3-ear.

use std::collections::BTreeSet;

use dcdc::graph::{Multigraph, VertexId};
use dcdc::mixed::{ArcId, MixedGraph};
use dcdc::reduce::enumerate_correct_reductions;

fn v(i: u32) -> VertexId {
    VertexId(i)
}

/// The 3-ear a-v1-v2-v3-b with a = 0, v1..v3 = 1..3, b = 4, plus outside vertices
/// 5.. for arc ends. `inner` lists arcs inside the ear by (tail, head); every
/// unused arc end at v1..v3 gets its own crossing arc.
fn ear_state(inner: &[(u32, u32)]) -> (MixedGraph, Vec<ArcId>) {
    let mut g = Multigraph::with_vertices(11);
    for (a, b) in [(0, 1), (1, 2), (2, 3), (3, 4)] {
        g.add_edge(v(a), v(b)).unwrap();
    }
    let mut m = MixedGraph::from_graph(&g);
    let mut ids = Vec::new();
    for &(t, h) in inner {
        ids.push(m.add_arc(v(t), v(h), vec![]).unwrap());
    }
    let mut outside = 5;
    for x in 1..=3 {
        if !inner.iter().any(|&(t, _)| t == x) {
            ids.push(m.add_arc(v(x), v(outside), vec![]).unwrap());
            outside += 1;
        }
        if !inner.iter().any(|&(_, h)| h == x) {
            ids.push(m.add_arc(v(outside), v(x), vec![]).unwrap());
            outside += 1;
        }
    }
    (m, ids)
}

/// All partial injections from tails {1,2,3} to heads {1,2,3}, up to reordering.
fn inner_configs() -> Vec<Vec<(u32, u32)>> {
    let mut out = Vec::new();
    for mask in 0u32..(1 << 9) {
        let pairs: Vec<(u32, u32)> = (0..9)
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| (b / 3 + 1, b % 3 + 1))
            .collect();
        let tails: BTreeSet<u32> = pairs.iter().map(|p| p.0).collect();
        let heads: BTreeSet<u32> = pairs.iter().map(|p| p.1).collect();
        if tails.len() == pairs.len() && heads.len() == pairs.len() {
            out.push(pairs);
        }
    }
    out
}

fn pairs_of(ids: &[ArcId]) -> Vec<(ArcId, ArcId)> {
    let mut out = Vec::new();
    for i in 0..ids.len() {
        for j in i + 1..ids.len() {
            out.push((ids[i], ids[j]));
        }
    }
    out
}

#[test]
fn non_cut_interiors_fail_exactly_at_inner_obstacles() {
    let u = [v(1), v(2), v(3)];
    let set: BTreeSet<VertexId> = u.iter().copied().collect();
    let mut obstacles = 0;
    let mut checked = 0;
    for inner in inner_configs() {
        let (base, ids) = ear_state(&inner);
        base.check_degree_discipline().unwrap_err();
        if base.is_cut_obstacle(&set) {
            assert!(inner.is_empty());
            continue;
        }
        let pairs = pairs_of(&ids);
        for mask in 0u32..(1 << pairs.len()) {
            let mut m = base.clone();
            for (k, &(a, b)) in pairs.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    m.add_forbidden(a, b).unwrap();
                }
            }
            let empty = enumerate_correct_reductions(&m, &u).unwrap().is_empty();
            let pattern = m.is_inner_obstacle(u).unwrap();
            assert_eq!(empty, pattern, "arcs {inner:?}, forbidden mask {mask:b}");
            obstacles += pattern as usize;
            checked += 1;
        }
    }
    assert!(checked > 1000);
    assert!(obstacles > 0);
}

#[test]
fn cut_interior_is_blocked_when_crossing_pairs_are_forbidden() {
    let u = [v(1), v(2), v(3)];
    let set: BTreeSet<VertexId> = u.iter().copied().collect();
    let (mut m, ids) = ear_state(&[]);
    assert!(m.is_cut_obstacle(&set));
    assert!(!enumerate_correct_reductions(&m, &u).unwrap().is_empty());
    for (a, b) in pairs_of(&ids) {
        m.add_forbidden(a, b).unwrap();
    }
    assert!(enumerate_correct_reductions(&m, &u).unwrap().is_empty());
}

#[test]
fn census_examples() {
    let set = BTreeSet::from([v(1), v(2), v(3)]);
    // Two crossing edges and two crossing arcs: not an obstacle.
    let (m, _) = ear_state(&[(1, 3), (3, 1)]);
    let b = m.boundary(&set);
    assert_eq!((b.edges.len(), b.arc_count()), (2, 2));
    assert!(!m.is_cut_obstacle(&set));
    // Six crossing arcs against two crossing edges.
    let (m, _) = ear_state(&[]);
    assert_eq!(m.boundary(&set).arc_count(), 6);
    assert!(m.is_cut_obstacle(&set));
    // No arcs at all.
    let g = Multigraph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
    let m = MixedGraph::from_graph(&g);
    assert!(!m.is_cut_obstacle(&set));
    assert!(!m.is_inner_obstacle([v(1), v(2), v(3)]).unwrap());
    assert!(m.is_inner_obstacle([v(1), v(3), v(2)]).is_err());
}

#[test]
fn inner_obstacle_needs_its_key_pair() {
    let u = [v(1), v(2), v(3)];
    // e = (1,3), f = (2,1), g enters 2, h leaves 3.
    let (base, ids) = ear_state(&[(1, 3), (2, 1)]);
    let (e, f) = (ids[0], ids[1]);
    let g = *ids
        .iter()
        .find(|&&a| base.arc(a).unwrap().head == v(2))
        .unwrap();
    let h = *ids
        .iter()
        .find(|&&a| base.arc(a).unwrap().tail == v(3))
        .unwrap();
    let mut m = base.clone();
    for (a, b) in [(e, f), (f, g), (e, h), (g, h)] {
        m.add_forbidden(a, b).unwrap();
    }
    assert!(!m.is_inner_obstacle(u).unwrap());
    assert!(!enumerate_correct_reductions(&m, &u).unwrap().is_empty());
    m.add_forbidden(e, g).unwrap();
    assert!(m.is_inner_obstacle(u).unwrap());
    assert!(enumerate_correct_reductions(&m, &u).unwrap().is_empty());
}
