//! Mixed graphs: undirected edges, directed arcs that remember the walk they stand
//! for, and a symmetric relation of forbidden arc pairs.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Dart, EdgeId, Multigraph, VertexId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArcId(pub u32);

impl fmt::Display for ArcId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

/// A directed arc. `expansion` is the walk of original darts it replaces.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Arc {
    pub id: ArcId,
    pub tail: VertexId,
    pub head: VertexId,
    pub expansion: Vec<Dart>,
}

/// Mixed graph `(V, E, A, R)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MixedGraph {
    graph: Multigraph,
    arcs: BTreeMap<ArcId, Arc>,
    forbidden: BTreeSet<(ArcId, ArcId)>,
    next_arc: u32,
}

impl Hash for MixedGraph {
    fn hash<H: Hasher>(&self, state: &mut H) {
        for v in self.graph.vertices() {
            v.hash(state);
        }
        for e in self.graph.edges() {
            e.hash(state);
        }
        self.arcs.hash(state);
        self.forbidden.hash(state);
    }
}

/// Edges and arcs with exactly one end inside a vertex set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Boundary {
    pub edges: Vec<EdgeId>,
    pub arcs_in: Vec<ArcId>,
    pub arcs_out: Vec<ArcId>,
}

impl Boundary {
    pub fn arc_count(&self) -> usize {
        self.arcs_in.len() + self.arcs_out.len()
    }

    pub fn arcs(&self) -> Vec<ArcId> {
        let mut v = self.arcs_in.clone();
        v.extend(&self.arcs_out);
        v.sort();
        v
    }
}

fn ordered(a: ArcId, b: ArcId) -> (ArcId, ArcId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl MixedGraph {
    /// The mixed graph of an undirected graph: no arcs, no forbidden pairs.
    pub fn from_graph(g: &Multigraph) -> Self {
        MixedGraph {
            graph: g.clone(),
            arcs: BTreeMap::new(),
            forbidden: BTreeSet::new(),
            next_arc: 0,
        }
    }

    pub fn graph(&self) -> &Multigraph {
        &self.graph
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.graph.vertices()
    }

    pub fn has_vertex(&self, v: VertexId) -> bool {
        self.graph.has_vertex(v)
    }

    pub fn is_empty(&self) -> bool {
        self.graph.vertex_count() == 0 && self.arcs.is_empty()
    }

    pub fn arcs(&self) -> impl Iterator<Item = &Arc> + '_ {
        self.arcs.values()
    }

    pub fn arc(&self, a: ArcId) -> Option<&Arc> {
        self.arcs.get(&a)
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn forbidden(&self) -> impl Iterator<Item = (ArcId, ArcId)> + '_ {
        self.forbidden.iter().copied()
    }

    pub fn is_forbidden(&self, a: ArcId, b: ArcId) -> bool {
        self.forbidden.contains(&ordered(a, b))
    }

    /// Forbidden partners of `a`.
    pub fn partners(&self, a: ArcId) -> Vec<ArcId> {
        self.forbidden
            .iter()
            .filter_map(|&(x, y)| {
                if x == a {
                    Some(y)
                } else if y == a {
                    Some(x)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn add_vertex_with_id(&mut self, v: VertexId) -> Result<()> {
        self.graph.add_vertex_with_id(v)
    }

    pub fn add_edge_with_id(&mut self, e: EdgeId, u: VertexId, v: VertexId) -> Result<()> {
        self.graph.add_edge_with_id(e, u, v)
    }

    pub fn add_arc(
        &mut self,
        tail: VertexId,
        head: VertexId,
        expansion: Vec<Dart>,
    ) -> Result<ArcId> {
        let id = ArcId(self.next_arc);
        self.insert_arc(Arc {
            id,
            tail,
            head,
            expansion,
        })?;
        Ok(id)
    }

    pub fn insert_arc(&mut self, arc: Arc) -> Result<()> {
        for v in [arc.tail, arc.head] {
            if !self.graph.has_vertex(v) {
                return Err(Error::UnknownVertex(v));
            }
        }
        if self.arcs.contains_key(&arc.id) {
            return Err(Error::InvalidMixedGraph(format!(
                "duplicate arc {}",
                arc.id
            )));
        }
        self.next_arc = self.next_arc.max(arc.id.0 + 1);
        self.arcs.insert(arc.id, arc);
        Ok(())
    }

    pub fn add_forbidden(&mut self, a: ArcId, b: ArcId) -> Result<()> {
        for x in [a, b] {
            if !self.arcs.contains_key(&x) {
                return Err(Error::InvalidMixedGraph(format!("unknown arc {x}")));
            }
        }
        if a == b {
            return Err(Error::InvalidMixedGraph(
                "an arc cannot be forbidden with itself".into(),
            ));
        }
        self.forbidden.insert(ordered(a, b));
        Ok(())
    }

    /// Number of edge ends at `v`.
    pub fn edge_degree(&self, v: VertexId) -> usize {
        self.graph.degree(v)
    }

    pub fn in_arcs(&self, v: VertexId) -> Vec<ArcId> {
        self.arcs
            .values()
            .filter(|a| a.head == v)
            .map(|a| a.id)
            .collect()
    }

    pub fn out_arcs(&self, v: VertexId) -> Vec<ArcId> {
        self.arcs
            .values()
            .filter(|a| a.tail == v)
            .map(|a| a.id)
            .collect()
    }

    /// Every vertex with `d` edge ends has exactly `3 - d` incoming and `3 - d`
    /// outgoing arcs.
    pub fn check_degree_discipline(&self) -> Result<()> {
        let mut ins: BTreeMap<VertexId, usize> = BTreeMap::new();
        let mut outs: BTreeMap<VertexId, usize> = BTreeMap::new();
        for a in self.arcs.values() {
            *outs.entry(a.tail).or_default() += 1;
            *ins.entry(a.head).or_default() += 1;
        }
        for v in self.graph.vertices() {
            let d = self.edge_degree(v);
            let i = ins.get(&v).copied().unwrap_or(0);
            let o = outs.get(&v).copied().unwrap_or(0);
            if d > 3 || i != 3 - d || o != 3 - d {
                return Err(Error::DegreeDiscipline {
                    vertex: v,
                    detail: format!("{d} edge ends, {i} in-arcs, {o} out-arcs"),
                });
            }
        }
        Ok(())
    }

    /// Edges and arcs crossing between `set` and the rest.
    pub fn boundary(&self, set: &BTreeSet<VertexId>) -> Boundary {
        let edges = self
            .graph
            .edges()
            .filter(|&(_, u, v)| set.contains(&u) != set.contains(&v))
            .map(|(e, _, _)| e)
            .collect();
        let mut arcs_in = Vec::new();
        let mut arcs_out = Vec::new();
        for a in self.arcs.values() {
            match (set.contains(&a.tail), set.contains(&a.head)) {
                (false, true) => arcs_in.push(a.id),
                (true, false) => arcs_out.push(a.id),
                _ => {}
            }
        }
        Boundary {
            edges,
            arcs_in,
            arcs_out,
        }
    }

    /// Arcs with both ends in `set`.
    pub fn internal_arcs(&self, set: &BTreeSet<VertexId>) -> Vec<ArcId> {
        self.arcs
            .values()
            .filter(|a| set.contains(&a.tail) && set.contains(&a.head))
            .map(|a| a.id)
            .collect()
    }

    /// A vertex set is a cut obstacle when the arcs crossing its boundary outnumber
    /// twice the crossing edges. For the interior of a 3-ear, reached with two
    /// crossing edges, this says no arc lies inside the ear.
    pub fn is_cut_obstacle(&self, set: &BTreeSet<VertexId>) -> bool {
        let b = self.boundary(set);
        b.arc_count() > 2 * b.edges.len()
    }

    /// Inner obstacle at the interior `v1, v2, v3` of a 3-ear: two arcs inside the
    /// ear, one of them `e` joining `v1` and `v3`; one crossing arc `g` at `v2` and
    /// one crossing arc `h` at `v1` or `v3`; the pairs `{e,g}` and `{g,h}` are
    /// forbidden, and so is the incoming/outgoing arc pair at each `vi`.
    pub fn is_inner_obstacle(&self, three: [VertexId; 3]) -> Result<bool> {
        let [v1, v2, v3] = three;
        let set: BTreeSet<VertexId> = three.iter().copied().collect();
        if set.len() != 3 {
            return Err(Error::InvalidTarget(
                "3-ear interior needs three vertices".into(),
            ));
        }
        for v in three {
            if !self.has_vertex(v) {
                return Err(Error::UnknownVertex(v));
            }
        }
        let joined = |a: VertexId, b: VertexId| self.graph.find_edge(a, b).is_some();
        let outer = |v: VertexId| {
            self.graph
                .neighbors(v)
                .into_iter()
                .filter(|w| !set.contains(w))
                .count()
        };
        if !joined(v1, v2)
            || !joined(v2, v3)
            || joined(v1, v3)
            || self.edge_degree(v2) != 2
            || outer(v1) != 1
            || outer(v3) != 1
            || outer(v2) != 0
        {
            return Err(Error::InvalidTarget(
                "vertices do not form a 3-ear interior".into(),
            ));
        }
        let inside = self.internal_arcs(&set);
        let crossing = self.boundary(&set).arcs();
        if inside.len() != 2 || crossing.len() != 2 {
            return Ok(false);
        }
        let ends = |a: ArcId| {
            let arc = &self.arcs[&a];
            (arc.tail, arc.head)
        };
        let touches = |a: ArcId, v: VertexId| {
            let (t, h) = ends(a);
            t == v || h == v
        };
        let Some(&e) = inside.iter().find(|&&a| {
            let (t, h) = ends(a);
            (t == v1 && h == v3) || (t == v3 && h == v1)
        }) else {
            return Ok(false);
        };
        let Some(&g) = crossing.iter().find(|&&a| touches(a, v2)) else {
            return Ok(false);
        };
        let h = if crossing[0] == g {
            crossing[1]
        } else {
            crossing[0]
        };
        if touches(h, v2) {
            return Ok(false);
        }
        if !self.is_forbidden(e, g) || !self.is_forbidden(g, h) {
            return Ok(false);
        }
        for v in three {
            let i: Vec<ArcId> = self.in_arcs(v);
            let o: Vec<ArcId> = self.out_arcs(v);
            if let (Some(&a), Some(&b)) = (i.first(), o.first()) {
                if a != b && !self.is_forbidden(a, b) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Hash of the full state, used to detect stale reduction choices.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.hash(&mut h);
        h.finish()
    }

    /// Key identifying the state up to arc renaming. Expansions are ignored.
    pub fn canonical_key(&self) -> (Vec<(VertexId, VertexId)>, Vec<(usize, usize)>, Vec<EdgeId>) {
        self.canonical_key_of(|_| true)
    }

    /// As [`canonical_key`](Self::canonical_key), restricted to the arcs accepted
    /// by `keep` and the forbidden pairs among them.
    pub fn canonical_key_of(
        &self,
        keep: impl Fn(&Arc) -> bool,
    ) -> (Vec<(VertexId, VertexId)>, Vec<(usize, usize)>, Vec<EdgeId>) {
        let mut adj: BTreeMap<ArcId, Vec<ArcId>> = BTreeMap::new();
        for &(a, b) in &self.forbidden {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        let mut sig: Vec<(VertexId, VertexId, Vec<(VertexId, VertexId)>, ArcId)> = self
            .arcs
            .values()
            .filter(|a| keep(a))
            .map(|a| {
                let mut ps: Vec<(VertexId, VertexId)> = adj
                    .get(&a.id)
                    .into_iter()
                    .flatten()
                    .filter(|p| keep(&self.arcs[p]))
                    .map(|p| (self.arcs[p].tail, self.arcs[p].head))
                    .collect();
                ps.sort();
                (a.tail, a.head, ps, a.id)
            })
            .collect();
        sig.sort();
        let pos: BTreeMap<ArcId, usize> = sig.iter().enumerate().map(|(i, s)| (s.3, i)).collect();
        let mut pairs: Vec<(usize, usize)> = self
            .forbidden
            .iter()
            .filter(|(a, b)| pos.contains_key(a) && pos.contains_key(b))
            .map(|(a, b)| {
                let (x, y) = (pos[a], pos[b]);
                (x.min(y), x.max(y))
            })
            .collect();
        pairs.sort();
        let ends = sig.iter().map(|s| (s.0, s.1)).collect();
        (ends, pairs, self.graph.edge_ids().collect())
    }

    /// Vertices, edges and arcs as an undirected adjacency for connectivity tests.
    pub fn is_connected_on(&self, set: &BTreeSet<VertexId>) -> bool {
        let mut g = Multigraph::new();
        for &v in set {
            if self.graph.has_vertex(v) {
                g.add_vertex_with_id(v).unwrap();
            }
        }
        for (_, u, v) in self.graph.edges() {
            if g.has_vertex(u) && g.has_vertex(v) {
                g.add_edge(u, v).unwrap();
            }
        }
        for a in self.arcs.values() {
            if g.has_vertex(a.tail) && g.has_vertex(a.head) {
                g.add_edge(a.tail, a.head).unwrap();
            }
        }
        g.is_connected()
    }

    pub(crate) fn parts_mut(
        &mut self,
    ) -> (
        &mut Multigraph,
        &mut BTreeMap<ArcId, Arc>,
        &mut BTreeSet<(ArcId, ArcId)>,
    ) {
        (&mut self.graph, &mut self.arcs, &mut self.forbidden)
    }

    pub(crate) fn next_arc_id(&mut self) -> ArcId {
        let id = ArcId(self.next_arc);
        self.next_arc += 1;
        id
    }
}
