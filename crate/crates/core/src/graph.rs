//! Finite undirected multigraphs with stable identifiers.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vertex identifier. Identifiers are never reused within one graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u32);

/// Edge identifier. Identifiers are never reused within one graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub u32);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

/// An edge traversed in one direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Dart {
    pub edge: EdgeId,
    pub tail: VertexId,
    pub head: VertexId,
}

impl Dart {
    pub fn new(edge: EdgeId, tail: VertexId, head: VertexId) -> Self {
        Dart { edge, tail, head }
    }

    pub fn reversed(self) -> Self {
        Dart {
            edge: self.edge,
            tail: self.head,
            head: self.tail,
        }
    }
}

/// Undirected multigraph. Vertex and edge iteration is in ascending id order.
#[derive(Clone, Debug, Default)]
pub struct Multigraph {
    vertices: BTreeSet<VertexId>,
    edges: BTreeMap<EdgeId, (VertexId, VertexId)>,
    incidence: BTreeMap<VertexId, Vec<EdgeId>>,
    next_vertex: u32,
    next_edge: u32,
}

impl PartialEq for Multigraph {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.edges == other.edges
    }
}

impl Eq for Multigraph {}

/// Result of the brute-force edge-connectivity test, capped above at four.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeConnectivity {
    Exactly(u8),
    AtLeastFour,
}

impl fmt::Display for EdgeConnectivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeConnectivity::Exactly(k) => write!(f, "{k}"),
            EdgeConnectivity::AtLeastFour => write!(f, "more"),
        }
    }
}

/// Outcome of a Y-to-triangle replacement.
#[derive(Clone, Debug)]
pub struct YDelta {
    pub graph: Multigraph,
    pub v0: VertexId,
    pub v1: VertexId,
    pub v2: VertexId,
    pub x0: VertexId,
    pub y0: VertexId,
    /// Original edges {v0,v1} and {v0,v2}, now subdivided by x0 and y0.
    pub split: [EdgeId; 2],
    /// New edges {x0,v1} and {y0,v2}, which stand in for `split` outside the triangle.
    pub outer: [EdgeId; 2],
    /// Triangle edges {v0,x0}, {v0,y0}, {x0,y0}.
    pub triangle: [EdgeId; 3],
}

impl YDelta {
    /// Map a dart of the new graph back to the original graph by contracting the
    /// triangle onto `v0`. Darts inside the triangle map to `None`.
    pub fn contract_dart(&self, d: Dart) -> Option<Dart> {
        let tri = |v: VertexId| v == self.v0 || v == self.x0 || v == self.y0;
        if tri(d.tail) && tri(d.head) {
            return None;
        }
        let fold = |v: VertexId| if tri(v) { self.v0 } else { v };
        let edge = if d.edge == self.outer[0] {
            self.split[0]
        } else if d.edge == self.outer[1] {
            self.split[1]
        } else {
            d.edge
        };
        Some(Dart::new(edge, fold(d.tail), fold(d.head)))
    }
}

impl Multigraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Graph with vertices `0..n` and no edges.
    pub fn with_vertices(n: usize) -> Self {
        let mut g = Self::new();
        for _ in 0..n {
            g.add_vertex();
        }
        g
    }

    /// Build a simple graph from an edge list over vertices `0..n`.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Self {
        let mut g = Self::with_vertices(n);
        for &(u, v) in edges {
            g.add_edge(VertexId(u), VertexId(v))
                .expect("endpoint out of range");
        }
        g
    }

    pub fn add_vertex(&mut self) -> VertexId {
        let v = VertexId(self.next_vertex);
        self.next_vertex += 1;
        self.vertices.insert(v);
        self.incidence.insert(v, Vec::new());
        v
    }

    pub fn add_vertex_with_id(&mut self, v: VertexId) -> Result<()> {
        if self.vertices.contains(&v) {
            return Err(Error::DuplicateVertex(v));
        }
        self.vertices.insert(v);
        self.incidence.insert(v, Vec::new());
        self.next_vertex = self.next_vertex.max(v.0 + 1);
        Ok(())
    }

    pub fn add_edge(&mut self, u: VertexId, v: VertexId) -> Result<EdgeId> {
        let e = EdgeId(self.next_edge);
        self.add_edge_with_id(e, u, v)?;
        Ok(e)
    }

    pub fn add_edge_with_id(&mut self, e: EdgeId, u: VertexId, v: VertexId) -> Result<()> {
        for w in [u, v] {
            if !self.vertices.contains(&w) {
                return Err(Error::UnknownVertex(w));
            }
        }
        if self.edges.contains_key(&e) {
            return Err(Error::DuplicateEdge(e));
        }
        self.edges.insert(e, (u, v));
        insert_sorted(self.incidence.get_mut(&u).unwrap(), e);
        if u != v {
            insert_sorted(self.incidence.get_mut(&v).unwrap(), e);
        }
        self.next_edge = self.next_edge.max(e.0 + 1);
        Ok(())
    }

    pub fn remove_edge(&mut self, e: EdgeId) -> Result<(VertexId, VertexId)> {
        let (u, v) = self.edges.remove(&e).ok_or(Error::UnknownEdge(e))?;
        for w in [u, v] {
            if let Some(list) = self.incidence.get_mut(&w) {
                list.retain(|&f| f != e);
            }
        }
        Ok((u, v))
    }

    /// Remove a vertex together with its incident edges.
    pub fn remove_vertex(&mut self, v: VertexId) -> Result<()> {
        let inc = self.incidence.remove(&v).ok_or(Error::UnknownVertex(v))?;
        for e in inc {
            if let Some((a, b)) = self.edges.remove(&e) {
                let other = if a == v { b } else { a };
                if let Some(list) = self.incidence.get_mut(&other) {
                    list.retain(|&f| f != e);
                }
            }
        }
        self.vertices.remove(&v);
        Ok(())
    }

    pub fn has_vertex(&self, v: VertexId) -> bool {
        self.vertices.contains(&v)
    }

    pub fn has_edge(&self, e: EdgeId) -> bool {
        self.edges.contains_key(&e)
    }

    pub fn endpoints(&self, e: EdgeId) -> Result<(VertexId, VertexId)> {
        self.edges.get(&e).copied().ok_or(Error::UnknownEdge(e))
    }

    /// The endpoint of `e` other than `v`.
    pub fn other_end(&self, e: EdgeId, v: VertexId) -> Result<VertexId> {
        let (a, b) = self.endpoints(e)?;
        if a == v {
            Ok(b)
        } else if b == v {
            Ok(a)
        } else {
            Err(Error::UnknownVertex(v))
        }
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices.iter().copied()
    }

    pub fn vertex_set(&self) -> &BTreeSet<VertexId> {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (EdgeId, VertexId, VertexId)> + '_ {
        self.edges.iter().map(|(&e, &(u, v))| (e, u, v))
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.edges.keys().copied()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Incident edges in ascending id order. Loops appear once.
    pub fn incident(&self, v: VertexId) -> &[EdgeId] {
        self.incidence.get(&v).map(|l| l.as_slice()).unwrap_or(&[])
    }

    /// Degree counting loops twice.
    pub fn degree(&self, v: VertexId) -> usize {
        self.incident(v)
            .iter()
            .map(|e| {
                let (a, b) = self.edges[e];
                if a == b {
                    2
                } else {
                    1
                }
            })
            .sum()
    }

    /// Neighbours with multiplicity, in incident-edge order.
    pub fn neighbors(&self, v: VertexId) -> Vec<VertexId> {
        self.incident(v)
            .iter()
            .map(|&e| {
                let (a, b) = self.edges[&e];
                if a == v {
                    b
                } else {
                    a
                }
            })
            .collect()
    }

    /// Edges joining `u` and `v`, ascending.
    pub fn edges_between(&self, u: VertexId, v: VertexId) -> Vec<EdgeId> {
        self.incident(u)
            .iter()
            .copied()
            .filter(|e| {
                let (a, b) = self.edges[e];
                (a == u && b == v) || (a == v && b == u)
            })
            .collect()
    }

    pub fn find_edge(&self, u: VertexId, v: VertexId) -> Option<EdgeId> {
        self.edges_between(u, v).first().copied()
    }

    pub fn has_loops(&self) -> Option<EdgeId> {
        self.edges
            .iter()
            .find(|(_, &(u, v))| u == v)
            .map(|(&e, _)| e)
    }

    pub fn is_simple(&self) -> bool {
        let mut seen = BTreeSet::new();
        for &(u, v) in self.edges.values() {
            if u == v || !seen.insert((u.min(v), u.max(v))) {
                return false;
            }
        }
        true
    }

    pub fn check_cubic(&self) -> Result<()> {
        for v in self.vertices() {
            let d = self.degree(v);
            if d != 3 {
                return Err(Error::NotCubic {
                    vertex: v,
                    degree: d,
                });
            }
        }
        Ok(())
    }

    pub fn is_cubic(&self) -> bool {
        self.check_cubic().is_ok()
    }

    /// Connected components of the subgraph induced by `subset`, each sorted, ordered
    /// by smallest vertex.
    pub fn components_within(&self, subset: &BTreeSet<VertexId>) -> Vec<BTreeSet<VertexId>> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &s in subset {
            if !seen.insert(s) {
                continue;
            }
            let mut comp = BTreeSet::from([s]);
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                for w in self.neighbors(v) {
                    if subset.contains(&w) && seen.insert(w) {
                        comp.insert(w);
                        queue.push_back(w);
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    pub fn components(&self) -> Vec<BTreeSet<VertexId>> {
        self.components_within(&self.vertices)
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// Induced subgraph on `subset`, keeping identifiers.
    pub fn induced(&self, subset: &BTreeSet<VertexId>) -> Multigraph {
        let mut g = Multigraph::new();
        for &v in subset {
            if self.has_vertex(v) {
                g.add_vertex_with_id(v).unwrap();
            }
        }
        for (e, u, v) in self.edges() {
            if subset.contains(&u) && subset.contains(&v) {
                g.add_edge_with_id(e, u, v).unwrap();
            }
        }
        g.next_vertex = self.next_vertex;
        g.next_edge = self.next_edge;
        g
    }

    /// Bridges of the graph with the edges in `skip` removed.
    fn bridges_without(&self, skip: &BTreeSet<EdgeId>) -> Vec<EdgeId> {
        let mut disc: BTreeMap<VertexId, usize> = BTreeMap::new();
        let mut low: BTreeMap<VertexId, usize> = BTreeMap::new();
        let mut bridges = Vec::new();
        let mut time = 0;
        for root in self.vertices() {
            if disc.contains_key(&root) {
                continue;
            }
            // Iterative DFS: (vertex, edge used to enter, next incident index).
            let mut stack: Vec<(VertexId, Option<EdgeId>, usize)> = vec![(root, None, 0)];
            disc.insert(root, time);
            low.insert(root, time);
            time += 1;
            while let Some(&mut (v, parent_edge, ref mut idx)) = stack.last_mut() {
                let inc = self.incident(v);
                if *idx < inc.len() {
                    let e = inc[*idx];
                    *idx += 1;
                    if skip.contains(&e) || Some(e) == parent_edge {
                        continue;
                    }
                    let w = self.other_end(e, v).unwrap();
                    if let Some(&dw) = disc.get(&w) {
                        let lv = low[&v].min(dw);
                        low.insert(v, lv);
                    } else {
                        disc.insert(w, time);
                        low.insert(w, time);
                        time += 1;
                        stack.push((w, Some(e), 0));
                    }
                } else {
                    stack.pop();
                    if let Some(&(p, _, _)) = stack.last() {
                        let lp = low[&p].min(low[&v]);
                        low.insert(p, lp);
                        if low[&v] > disc[&p] {
                            bridges.push(parent_edge.unwrap());
                        }
                    }
                }
            }
        }
        bridges
    }

    fn connected_without(&self, skip: &BTreeSet<EdgeId>) -> bool {
        let Some(start) = self.vertices.iter().next().copied() else {
            return true;
        };
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &e in self.incident(v) {
                if skip.contains(&e) {
                    continue;
                }
                let w = self.other_end(e, v).unwrap();
                if seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        seen.len() == self.vertices.len()
    }

    /// Edge connectivity by exhaustive cut search, capped at four.
    pub fn edge_connectivity(&self) -> EdgeConnectivity {
        if self.vertex_count() <= 1 {
            return EdgeConnectivity::AtLeastFour;
        }
        let none = BTreeSet::new();
        if !self.connected_without(&none) {
            return EdgeConnectivity::Exactly(0);
        }
        if !self.bridges_without(&none).is_empty() {
            return EdgeConnectivity::Exactly(1);
        }
        let ids: Vec<EdgeId> = self.edge_ids().collect();
        for &e in &ids {
            if !self.bridges_without(&BTreeSet::from([e])).is_empty() {
                return EdgeConnectivity::Exactly(2);
            }
        }
        for (i, &e) in ids.iter().enumerate() {
            for &f in &ids[i + 1..] {
                if !self.bridges_without(&BTreeSet::from([e, f])).is_empty() {
                    return EdgeConnectivity::Exactly(3);
                }
            }
        }
        EdgeConnectivity::AtLeastFour
    }

    pub fn is_three_edge_connected(&self) -> bool {
        self.edge_connectivity() >= EdgeConnectivity::Exactly(3)
    }

    /// Replace the edges {v0,v1} and {v0,v2} by a triangle on v0 and two new
    /// vertices x0 (on the v1 side) and y0 (on the v2 side).
    pub fn y_delta(&self, v0: VertexId, v1: VertexId, v2: VertexId) -> Result<YDelta> {
        let e1 = self
            .find_edge(v0, v1)
            .ok_or_else(|| Error::Construction(format!("{v0} and {v1} are not adjacent")))?;
        let e2 = self
            .edges_between(v0, v2)
            .into_iter()
            .find(|&e| e != e1)
            .ok_or_else(|| Error::Construction(format!("{v0} and {v2} are not adjacent")))?;
        let mut g = self.clone();
        g.remove_edge(e1)?;
        g.remove_edge(e2)?;
        let x0 = g.add_vertex();
        let y0 = g.add_vertex();
        let o1 = g.add_edge(x0, v1)?;
        let o2 = g.add_edge(y0, v2)?;
        let t0 = g.add_edge(v0, x0)?;
        let t1 = g.add_edge(v0, y0)?;
        let t2 = g.add_edge(x0, y0)?;
        Ok(YDelta {
            graph: g,
            v0,
            v1,
            v2,
            x0,
            y0,
            split: [e1, e2],
            outer: [o1, o2],
            triangle: [t0, t1, t2],
        })
    }
}

fn insert_sorted(list: &mut Vec<EdgeId>, e: EdgeId) {
    let pos = list.binary_search(&e).unwrap_or_else(|p| p);
    list.insert(pos, e);
}

/// Named small cubic graphs.
pub mod named {
    use super::Multigraph;

    pub fn k4() -> Multigraph {
        Multigraph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
    }

    pub fn k33() -> Multigraph {
        Multigraph::from_edges(
            6,
            &[
                (0, 3),
                (0, 4),
                (0, 5),
                (1, 3),
                (1, 4),
                (1, 5),
                (2, 3),
                (2, 4),
                (2, 5),
            ],
        )
    }

    pub fn prism() -> Multigraph {
        Multigraph::from_edges(
            6,
            &[
                (0, 1),
                (1, 2),
                (2, 0),
                (3, 4),
                (4, 5),
                (5, 3),
                (0, 3),
                (1, 4),
                (2, 5),
            ],
        )
    }

    pub fn petersen() -> Multigraph {
        Multigraph::from_edges(
            10,
            &[
                (0, 1),
                (1, 2),
                (2, 3),
                (3, 4),
                (4, 0),
                (0, 5),
                (1, 6),
                (2, 7),
                (3, 8),
                (4, 9),
                (5, 7),
                (7, 9),
                (9, 6),
                (6, 8),
                (8, 5),
            ],
        )
    }

    /// Circular ladder on 2n vertices.
    pub fn prism_n(n: u32) -> Multigraph {
        let mut edges = Vec::new();
        for i in 0..n {
            edges.push((i, (i + 1) % n));
            edges.push((n + i, n + (i + 1) % n));
            edges.push((i, n + i));
        }
        Multigraph::from_edges(2 * n as usize, &edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Edge connectivity by trying every edge subset, no shortcuts.
    fn naive_connectivity(g: &Multigraph) -> EdgeConnectivity {
        let ids: Vec<EdgeId> = g.edge_ids().collect();
        for k in 0..4usize {
            let mut idx: Vec<usize> = (0..k).collect();
            if k > ids.len() {
                break;
            }
            loop {
                let skip: BTreeSet<EdgeId> = idx.iter().map(|&i| ids[i]).collect();
                if !g.connected_without(&skip) {
                    return EdgeConnectivity::Exactly(k as u8);
                }
                // next combination
                let mut i = k;
                loop {
                    if i == 0 {
                        break;
                    }
                    i -= 1;
                    if idx[i] < ids.len() - k + i {
                        idx[i] += 1;
                        for j in i + 1..k {
                            idx[j] = idx[j - 1] + 1;
                        }
                        i = usize::MAX;
                        break;
                    }
                }
                if i != usize::MAX {
                    break;
                }
            }
        }
        EdgeConnectivity::AtLeastFour
    }

    #[test]
    fn named_graphs_are_cubic_and_three_connected() {
        for g in [named::k4(), named::k33(), named::prism(), named::petersen()] {
            assert!(g.is_cubic());
            assert!(g.is_simple());
            assert_eq!(g.edge_connectivity(), EdgeConnectivity::Exactly(3));
            assert_eq!(naive_connectivity(&g), EdgeConnectivity::Exactly(3));
        }
    }

    #[test]
    fn connectivity_of_paths_and_cycles() {
        let path = Multigraph::from_edges(3, &[(0, 1), (1, 2)]);
        assert_eq!(path.edge_connectivity(), EdgeConnectivity::Exactly(1));
        let cycle = Multigraph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert_eq!(cycle.edge_connectivity(), EdgeConnectivity::Exactly(2));
        let two = Multigraph::from_edges(4, &[(0, 1), (2, 3)]);
        assert_eq!(two.edge_connectivity(), EdgeConnectivity::Exactly(0));
        let mut k5 = Multigraph::with_vertices(5);
        for i in 0..5 {
            for j in i + 1..5 {
                k5.add_edge(VertexId(i), VertexId(j)).unwrap();
            }
        }
        assert_eq!(k5.edge_connectivity(), EdgeConnectivity::AtLeastFour);
        assert_eq!(naive_connectivity(&k5), EdgeConnectivity::AtLeastFour);
    }

    #[test]
    fn parallel_edges_are_not_bridges() {
        let mut g = Multigraph::with_vertices(2);
        g.add_edge(VertexId(0), VertexId(1)).unwrap();
        g.add_edge(VertexId(0), VertexId(1)).unwrap();
        assert_eq!(g.edge_connectivity(), EdgeConnectivity::Exactly(2));
    }

    #[test]
    fn ids_are_stable_after_removal() {
        let mut g = named::k4();
        g.remove_vertex(VertexId(1)).unwrap();
        let v = g.add_vertex();
        assert_eq!(v, VertexId(4));
        assert_eq!(g.edge_count(), 3);
        assert!(g.add_edge(VertexId(1), VertexId(0)).is_err());
    }

    #[test]
    fn y_delta_keeps_cubic_and_contracts_back() {
        let g = named::k4();
        let yd = g.y_delta(VertexId(0), VertexId(1), VertexId(2)).unwrap();
        assert!(yd.graph.is_cubic());
        assert_eq!(yd.graph.vertex_count(), 6);
        assert_eq!(yd.graph.edge_count(), 9);
        let d = Dart::new(yd.outer[0], yd.x0, VertexId(1));
        assert_eq!(
            yd.contract_dart(d),
            Some(Dart::new(yd.split[0], VertexId(0), VertexId(1)))
        );
        assert_eq!(
            yd.contract_dart(Dart::new(yd.triangle[2], yd.x0, yd.y0)),
            None
        );
    }

    #[test]
    fn petersen_prism_family() {
        let g = named::prism_n(5);
        assert!(g.is_cubic());
        assert_eq!(g.edge_connectivity(), EdgeConnectivity::Exactly(3));
    }

    mod prop {
        use super::*;
        use proptest::prelude::*;

        fn arb_graph() -> impl Strategy<Value = Multigraph> {
            (2usize..7).prop_flat_map(|n| {
                proptest::collection::vec((0..n as u32, 0..n as u32), 0..12).prop_map(move |es| {
                    let es: Vec<(u32, u32)> = es.into_iter().filter(|(a, b)| a != b).collect();
                    Multigraph::from_edges(n, &es)
                })
            })
        }

        proptest! {
            #[test]
            fn connectivity_matches_naive(g in arb_graph()) {
                prop_assert_eq!(g.edge_connectivity(), naive_connectivity(&g));
            }

            #[test]
            fn degree_sum_is_twice_edges(g in arb_graph()) {
                let s: usize = g.vertices().map(|v| g.degree(v)).sum();
                prop_assert_eq!(s, 2 * g.edge_count());
            }
        }
    }
}
