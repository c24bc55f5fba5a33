//! Ear decompositions of cubic graphs: validation, descendants, robustness and a
//! backtracking search for super robust decompositions.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, Multigraph, VertexId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EarKind {
    Path,
    Star,
    Edge,
}

/// One ear. Paths list vertices from leaf to leaf, stars list the center first and
/// then the three leaves, edge ears list both ends. `edges[i]` is the edge of the
/// i-th segment (path) or spoke (star).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Ear {
    pub kind: EarKind,
    pub vertices: Vec<VertexId>,
    pub edges: Vec<EdgeId>,
}

impl Ear {
    pub fn internal(&self) -> &[VertexId] {
        match self.kind {
            EarKind::Path => &self.vertices[1..self.vertices.len() - 1],
            EarKind::Star => &self.vertices[..1],
            EarKind::Edge => &[],
        }
    }

    /// Whether `set` lists exactly the internal vertices, in any order.
    pub fn has_interior(&self, set: &[VertexId]) -> bool {
        let mut a = self.internal().to_vec();
        let mut b = set.to_vec();
        a.sort();
        b.sort();
        a == b
    }

    pub fn leaves(&self) -> Vec<VertexId> {
        match self.kind {
            EarKind::Path | EarKind::Edge => {
                vec![self.vertices[0], *self.vertices.last().unwrap()]
            }
            EarKind::Star => self.vertices[1..].to_vec(),
        }
    }

    /// Number of internal vertices of a path ear; `None` for stars and edges.
    pub fn path_order(&self) -> Option<usize> {
        match self.kind {
            EarKind::Path => Some(self.vertices.len() - 2),
            _ => None,
        }
    }

    pub fn is_k_ear(&self, k: usize) -> bool {
        self.path_order() == Some(k)
    }

    /// Pairs of endpoints of the ear's edges, in edge order.
    pub fn edge_ends(&self) -> Vec<(VertexId, VertexId)> {
        match self.kind {
            EarKind::Path | EarKind::Edge => {
                self.vertices.windows(2).map(|w| (w[0], w[1])).collect()
            }
            EarKind::Star => self.vertices[1..]
                .iter()
                .map(|&l| (self.vertices[0], l))
                .collect(),
        }
    }

    pub fn contains_vertex(&self, v: VertexId) -> bool {
        self.vertices.contains(&v)
    }

    /// Same ear read in the opposite direction (paths and edges only).
    pub fn reversed(&self) -> Ear {
        match self.kind {
            EarKind::Star => self.clone(),
            _ => {
                let mut vertices = self.vertices.clone();
                vertices.reverse();
                let mut edges = self.edges.clone();
                edges.reverse();
                Ear {
                    kind: self.kind,
                    vertices,
                    edges,
                }
            }
        }
    }

    /// Orientation-free description used for hashing and comparisons.
    pub fn signature(&self) -> (EarKind, Vec<VertexId>) {
        match self.kind {
            EarKind::Star => {
                let mut leaves = self.vertices[1..].to_vec();
                leaves.sort();
                let mut v = vec![self.vertices[0]];
                v.extend(leaves);
                (self.kind, v)
            }
            _ => {
                let a = self.vertices.clone();
                let mut b = a.clone();
                b.reverse();
                (self.kind, a.min(b))
            }
        }
    }
}

/// Ear decomposition: an initial cycle followed by ears.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EarDecomposition {
    /// Cycle vertices in order.
    pub h0: Vec<VertexId>,
    /// `h0_edges[i]` joins `h0[i]` and `h0[i+1]` (cyclically).
    pub h0_edges: Vec<EdgeId>,
    pub ears: Vec<Ear>,
}

/// Which kinds of ears a decomposition may use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EarMode {
    /// Paths with one to three internal vertices, and stars.
    Trigraph,
    /// Paths of any length, and stars.
    Ear,
    /// Like `Ear`, plus trailing single-edge ears.
    EdgeEar,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Validation {
    pub ok: bool,
    pub diagnostics: Vec<String>,
}

impl EarDecomposition {
    /// Resolve edge identifiers for ears given by vertex lists: each segment takes the
    /// smallest unused edge joining its ends.
    pub fn resolve(
        g: &Multigraph,
        h0: Vec<VertexId>,
        ears: Vec<(EarKind, Vec<VertexId>)>,
    ) -> Result<EarDecomposition> {
        let mut used = BTreeSet::new();
        let mut take = |a: VertexId, b: VertexId| -> Result<EdgeId> {
            g.edges_between(a, b)
                .into_iter()
                .find(|e| !used.contains(e))
                .inspect(|&e| {
                    used.insert(e);
                })
                .ok_or_else(|| {
                    Error::InvalidEarDecomposition(format!("no free edge between {a} and {b}"))
                })
        };
        let n = h0.len();
        if n < 2 {
            return Err(Error::InvalidEarDecomposition(
                "initial cycle too short".into(),
            ));
        }
        let mut h0_edges = Vec::with_capacity(n);
        for i in 0..n {
            h0_edges.push(take(h0[i], h0[(i + 1) % n])?);
        }
        let mut out = Vec::with_capacity(ears.len());
        for (kind, vertices) in ears {
            let min = match kind {
                EarKind::Path => 3,
                EarKind::Star => 4,
                EarKind::Edge => 2,
            };
            if vertices.len() < min || (kind != EarKind::Path && vertices.len() != min) {
                return Err(Error::InvalidEarDecomposition(format!(
                    "{kind:?} ear with {} vertices",
                    vertices.len()
                )));
            }
            let ear = Ear {
                kind,
                vertices,
                edges: Vec::new(),
            };
            let mut edges = Vec::new();
            for (a, b) in ear.edge_ends() {
                edges.push(take(a, b)?);
            }
            out.push(Ear { edges, ..ear });
        }
        Ok(EarDecomposition {
            h0,
            h0_edges,
            ears: out,
        })
    }

    /// Vertices of `H_i`: the initial cycle and ears `0..=i`. `None` means the initial
    /// cycle alone.
    pub fn vertices_upto(&self, i: Option<usize>) -> BTreeSet<VertexId> {
        let mut set: BTreeSet<VertexId> = self.h0.iter().copied().collect();
        if let Some(i) = i {
            for ear in &self.ears[..=i] {
                set.extend(ear.internal().iter().copied());
            }
        }
        set
    }

    /// Index of the ear whose internal vertices contain `v`.
    pub fn owner(&self, v: VertexId) -> Option<usize> {
        self.ears.iter().position(|e| e.internal().contains(&v))
    }

    pub fn owner_map(&self) -> BTreeMap<VertexId, usize> {
        let mut m = BTreeMap::new();
        for (i, ear) in self.ears.iter().enumerate() {
            for &v in ear.internal() {
                m.insert(v, i);
            }
        }
        m
    }

    /// Structural validity against `g`.
    pub fn validate(&self, g: &Multigraph, mode: EarMode) -> Validation {
        let mut diag = Vec::new();
        let mut present: BTreeSet<VertexId> = BTreeSet::new();
        let mut used: BTreeSet<EdgeId> = BTreeSet::new();
        let n = self.h0.len();
        if n < 2 || self.h0_edges.len() != n {
            diag.push("initial cycle is malformed".to_string());
            return Validation {
                ok: false,
                diagnostics: diag,
            };
        }
        for &v in &self.h0 {
            if !g.has_vertex(v) {
                diag.push(format!("initial cycle vertex {v} is not in the graph"));
            }
            if !present.insert(v) {
                diag.push(format!("initial cycle repeats {v}"));
            }
        }
        for i in 0..n {
            let (a, b) = (self.h0[i], self.h0[(i + 1) % n]);
            check_edge(g, self.h0_edges[i], a, b, &mut used, &mut diag);
        }
        let mut seen_edge_ear = false;
        for (idx, ear) in self.ears.iter().enumerate() {
            let shape_ok = match ear.kind {
                EarKind::Path => ear.vertices.len() >= 3,
                EarKind::Star => ear.vertices.len() == 4,
                EarKind::Edge => ear.vertices.len() == 2,
            };
            if !shape_ok || ear.edges.len() != ear.edge_ends().len() {
                diag.push(format!("ear {idx} is malformed"));
                continue;
            }
            match (mode, ear.kind) {
                (EarMode::Trigraph, EarKind::Path) if ear.vertices.len() > 5 => {
                    diag.push(format!("ear {idx} is not short"));
                }
                (EarMode::Trigraph | EarMode::Ear, EarKind::Edge) => {
                    diag.push(format!("ear {idx} is a single edge"));
                }
                (EarMode::EdgeEar, EarKind::Path | EarKind::Star) if seen_edge_ear => {
                    diag.push(format!("ear {idx} follows a single-edge ear"));
                }
                _ => {}
            }
            if ear.kind == EarKind::Edge {
                seen_edge_ear = true;
            }
            let leaves = ear.leaves();
            for &l in &leaves {
                if !present.contains(&l) {
                    diag.push(format!("leaf {l} of ear {idx} does not exist yet"));
                }
            }
            let distinct: BTreeSet<_> = leaves.iter().collect();
            if distinct.len() != leaves.len() {
                diag.push(format!("ear {idx} has repeated leaves"));
            }
            for &v in ear.internal() {
                if !g.has_vertex(v) {
                    diag.push(format!("vertex {v} of ear {idx} is not in the graph"));
                }
                if !present.insert(v) {
                    diag.push(format!("internal vertex {v} of ear {idx} already exists"));
                }
            }
            for (k, (a, b)) in ear.edge_ends().into_iter().enumerate() {
                check_edge(g, ear.edges[k], a, b, &mut used, &mut diag);
            }
        }
        if present.len() != g.vertex_count() {
            diag.push(format!(
                "decomposition covers {} of {} vertices",
                present.len(),
                g.vertex_count()
            ));
        }
        if used.len() != g.edge_count() {
            diag.push(format!(
                "decomposition covers {} of {} edges",
                used.len(),
                g.edge_count()
            ));
        }
        Validation {
            ok: diag.is_empty(),
            diagnostics: diag,
        }
    }

    /// Components of `g - V(H_i)` adjacent to `set`.
    pub fn descendant_components(
        &self,
        g: &Multigraph,
        i: usize,
        set: &[VertexId],
    ) -> Vec<BTreeSet<VertexId>> {
        let built = self.vertices_upto(Some(i));
        let rest: BTreeSet<VertexId> = g.vertices().filter(|v| !built.contains(v)).collect();
        g.components_within(&rest)
            .into_iter()
            .filter(|c| {
                set.iter()
                    .any(|&s| g.neighbors(s).iter().any(|w| c.contains(w)))
            })
            .collect()
    }

    /// Every 3-ear has at most two descendant components, and when it has two, one of
    /// them is a single vertex with two neighbours on the initial cycle.
    pub fn is_robust(&self, g: &Multigraph) -> bool {
        self.robustness_violations(g).is_empty()
    }

    /// Indices of 3-ears that break robustness.
    pub fn robustness_violations(&self, g: &Multigraph) -> Vec<usize> {
        let h0: BTreeSet<VertexId> = self.h0.iter().copied().collect();
        let mut bad = Vec::new();
        for (i, ear) in self.ears.iter().enumerate() {
            if !ear.is_k_ear(3) {
                continue;
            }
            let comps = self.descendant_components(g, i, ear.internal());
            let ok = match comps.len() {
                0 | 1 => true,
                2 => comps.iter().any(|c| {
                    c.len() == 1 && {
                        let w = *c.iter().next().unwrap();
                        g.neighbors(w).iter().filter(|x| h0.contains(x)).count() >= 2
                    }
                }),
                _ => false,
            };
            if !ok {
                bad.push(i);
            }
        }
        bad
    }

    /// `g - V(G0)` is connected and every segment of at least three consecutive
    /// internal vertices of an ear has a connected descendant.
    pub fn is_super_robust(&self, g: &Multigraph) -> bool {
        let h0: BTreeSet<VertexId> = self.h0.iter().copied().collect();
        let rest: BTreeSet<VertexId> = g.vertices().filter(|v| !h0.contains(v)).collect();
        if g.components_within(&rest).len() > 1 {
            return false;
        }
        for (i, ear) in self.ears.iter().enumerate() {
            let inner = ear.internal();
            if ear.kind != EarKind::Path || inner.len() < 3 {
                continue;
            }
            for len in 3..=inner.len() {
                for start in 0..=inner.len() - len {
                    let seg = &inner[start..start + len];
                    if self.descendant_components(g, i, seg).len() > 1 {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Merge trailing single-edge ears into stars: a 1-ear `p-m-q` followed by the
    /// edge `{m,r}` becomes the star on `m` with leaves `p,q,r`.
    pub fn absorb_trailing_edges(&self) -> Result<EarDecomposition> {
        let mut ears = self.ears.clone();
        while let Some(last) = ears.last().cloned() {
            if last.kind != EarKind::Edge {
                break;
            }
            ears.pop();
            let (a, b) = (last.vertices[0], last.vertices[1]);
            let pos = ears
                .iter()
                .rposition(|e| e.is_k_ear(1) && (e.vertices[1] == a || e.vertices[1] == b));
            let Some(pos) = pos else {
                return Err(Error::InvalidEarDecomposition(
                    "trailing edge does not extend a 1-ear".into(),
                ));
            };
            let ear = &ears[pos];
            let m = ear.vertices[1];
            let r = if m == a { b } else { a };
            let star = Ear {
                kind: EarKind::Star,
                vertices: vec![m, ear.vertices[0], ear.vertices[2], r],
                edges: vec![ear.edges[0], ear.edges[1], last.edges[0]],
            };
            // The star must come after the ear that creates r.
            let creator = ears.iter().position(|e| e.internal().contains(&r));
            ears.remove(pos);
            let at = match creator {
                Some(c) if c >= pos => c,
                _ => pos,
            };
            ears.insert(at, star);
        }
        Ok(EarDecomposition {
            h0: self.h0.clone(),
            h0_edges: self.h0_edges.clone(),
            ears,
        })
    }
}

fn check_edge(
    g: &Multigraph,
    e: EdgeId,
    a: VertexId,
    b: VertexId,
    used: &mut BTreeSet<EdgeId>,
    diag: &mut Vec<String>,
) {
    match g.endpoints(e) {
        Ok((x, y)) if (x == a && y == b) || (x == b && y == a) => {
            if !used.insert(e) {
                diag.push(format!("edge {e} is used twice"));
            }
        }
        Ok(_) => diag.push(format!("edge {e} does not join {a} and {b}")),
        Err(_) => diag.push(format!("edge {e} is not in the graph")),
    }
}

/// Outcome of the super robust decomposition search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchOutcome {
    Found(EarDecomposition),
    /// The search space was exhausted without success.
    NotFound,
    BudgetExhausted,
}

/// Search for a super robust ear decomposition of a 3-edge-connected cubic graph.
/// Partial decompositions keep the not-yet-covered vertices connected, and the
/// result is certified with [`EarDecomposition::is_super_robust`].
pub fn find_super_robust(g: &Multigraph, budget: u64) -> Result<SearchOutcome> {
    g.check_cubic()?;
    if !g.is_three_edge_connected() {
        return Err(Error::NotThreeEdgeConnected);
    }
    let mut nodes = 0u64;
    for cycle in simple_cycles(g) {
        let rest: BTreeSet<VertexId> = g.vertices().filter(|v| !cycle.0.contains(v)).collect();
        if g.components_within(&rest).len() > 1 {
            continue;
        }
        match search_from(
            g,
            &cycle.0,
            &cycle.1,
            budget,
            &mut nodes,
            &|_, _| true,
            None,
        ) {
            SearchOutcome::NotFound => continue,
            other => return Ok(other),
        }
    }
    Ok(SearchOutcome::NotFound)
}

/// Decides whether an ear may be added when the given vertices are covered.
pub type EarFilter<'a> = &'a dyn Fn(&BTreeSet<VertexId>, &Ear) -> bool;

/// Same search with a prescribed initial cycle, given as a closed vertex sequence.
pub fn find_super_robust_from(
    g: &Multigraph,
    h0: &[VertexId],
    budget: u64,
) -> Result<SearchOutcome> {
    find_super_robust_filtered(g, h0, budget, &|_, _| true)
}

/// Search from a prescribed initial cycle, adding only ears accepted by `filter`.
pub fn find_super_robust_filtered(
    g: &Multigraph,
    h0: &[VertexId],
    budget: u64,
    filter: EarFilter,
) -> Result<SearchOutcome> {
    find_super_robust_seeded(g, h0, budget, None, filter)
}

/// Filtered search whose candidate ears are tried in an order shuffled by `seed`.
pub fn find_super_robust_seeded(
    g: &Multigraph,
    h0: &[VertexId],
    budget: u64,
    seed: Option<u64>,
    filter: EarFilter,
) -> Result<SearchOutcome> {
    g.check_cubic()?;
    let n = h0.len();
    let mut edges = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = (h0[i], h0[(i + 1) % n]);
        let e = g
            .edges_between(a, b)
            .into_iter()
            .find(|e| !edges.contains(e))
            .ok_or_else(|| Error::InvalidEarDecomposition(format!("{a} and {b} not adjacent")))?;
        edges.push(e);
    }
    let mut nodes = 0;
    Ok(search_from(g, h0, &edges, budget, &mut nodes, filter, seed))
}

/// Simple cycles ordered by length, then lexicographically by canonical vertex order.
fn simple_cycles(g: &Multigraph) -> Vec<(Vec<VertexId>, Vec<EdgeId>)> {
    let mut out: Vec<(Vec<VertexId>, Vec<EdgeId>)> = Vec::new();
    for s in g.vertices() {
        // Cycles whose smallest vertex is s.
        let mut stack: Vec<(Vec<VertexId>, Vec<EdgeId>)> = vec![(vec![s], vec![])];
        while let Some((path, pedges)) = stack.pop() {
            let v = *path.last().unwrap();
            for &e in g.incident(v) {
                if pedges.contains(&e) {
                    continue;
                }
                let w = g.other_end(e, v).unwrap();
                if w == s && path.len() >= 2 {
                    // Keep one orientation: second vertex smaller than last.
                    if path.len() == 2 || path[1] < *path.last().unwrap() {
                        let mut ce = pedges.clone();
                        ce.push(e);
                        out.push((path.clone(), ce));
                    }
                } else if w > s && !path.contains(&w) {
                    let mut p = path.clone();
                    p.push(w);
                    let mut pe = pedges.clone();
                    pe.push(e);
                    stack.push((p, pe));
                }
            }
        }
    }
    out.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
    out.dedup_by(|a, b| a.1 == b.1);
    out
}

struct Frontier<'a> {
    g: &'a Multigraph,
    filter: EarFilter<'a>,
    rng: Option<ChaCha8Rng>,
    covered: BTreeSet<VertexId>,
    used: BTreeSet<EdgeId>,
    ears: Vec<Ear>,
}

fn search_from(
    g: &Multigraph,
    h0: &[VertexId],
    h0_edges: &[EdgeId],
    budget: u64,
    nodes: &mut u64,
    filter: EarFilter,
    seed: Option<u64>,
) -> SearchOutcome {
    let mut f = Frontier {
        g,
        filter,
        rng: seed.map(ChaCha8Rng::seed_from_u64),
        covered: h0.iter().copied().collect(),
        used: h0_edges.iter().copied().collect(),
        ears: Vec::new(),
    };
    match extend(&mut f, budget, nodes) {
        Some(true) => {
            let ed = EarDecomposition {
                h0: h0.to_vec(),
                h0_edges: h0_edges.to_vec(),
                ears: f.ears,
            };
            if ed.validate(g, EarMode::Ear).ok && ed.is_super_robust(g) {
                SearchOutcome::Found(ed)
            } else {
                SearchOutcome::NotFound
            }
        }
        Some(false) => SearchOutcome::NotFound,
        None => SearchOutcome::BudgetExhausted,
    }
}

/// Depth-first extension. `Some(true)` on success, `Some(false)` when exhausted,
/// `None` when out of budget.
fn extend(f: &mut Frontier<'_>, budget: u64, nodes: &mut u64) -> Option<bool> {
    *nodes += 1;
    if *nodes > budget {
        return None;
    }
    if f.covered.len() == f.g.vertex_count() {
        return Some(f.used.len() == f.g.edge_count());
    }
    // An unused edge between covered vertices can no longer be placed.
    for (e, u, v) in f.g.edges() {
        if !f.used.contains(&e) && f.covered.contains(&u) && f.covered.contains(&v) {
            return Some(false);
        }
    }
    let mut candidates = candidate_ears(f);
    if let Some(rng) = f.rng.as_mut() {
        candidates.shuffle(rng);
    }
    for ear in candidates {
        if !(f.filter)(&f.covered, &ear) {
            continue;
        }
        let inner: Vec<VertexId> = ear.internal().to_vec();
        let rest: BTreeSet<VertexId> =
            f.g.vertices()
                .filter(|v| !f.covered.contains(v) && !inner.contains(v))
                .collect();
        if f.g.components_within(&rest).len() > 1 {
            continue;
        }
        for &v in &inner {
            f.covered.insert(v);
        }
        for &e in &ear.edges {
            f.used.insert(e);
        }
        f.ears.push(ear.clone());
        match extend(f, budget, nodes) {
            Some(true) => return Some(true),
            None => return None,
            Some(false) => {}
        }
        f.ears.pop();
        for &e in &ear.edges {
            f.used.remove(&e);
        }
        for &v in &inner {
            f.covered.remove(&v);
        }
    }
    Some(false)
}

/// Stars first, then paths by increasing length.
fn candidate_ears(f: &Frontier<'_>) -> Vec<Ear> {
    let g = f.g;
    let mut out = Vec::new();
    for c in g.vertices().filter(|v| !f.covered.contains(v)) {
        let inc = g.incident(c);
        let leaves: Vec<VertexId> = inc.iter().map(|&e| g.other_end(e, c).unwrap()).collect();
        let distinct: BTreeSet<_> = leaves.iter().collect();
        if inc.len() == 3 && distinct.len() == 3 && leaves.iter().all(|l| f.covered.contains(l)) {
            let mut vertices = vec![c];
            vertices.extend(leaves);
            out.push(Ear {
                kind: EarKind::Star,
                vertices,
                edges: inc.to_vec(),
            });
        }
    }
    let mut paths = Vec::new();
    for p in f.covered.iter().copied() {
        for &e in g.incident(p) {
            if f.used.contains(&e) {
                continue;
            }
            let w = g.other_end(e, p).unwrap();
            if f.covered.contains(&w) {
                continue;
            }
            let mut stack = vec![(vec![p, w], vec![e])];
            while let Some((vs, es)) = stack.pop() {
                let v = *vs.last().unwrap();
                for &e2 in g.incident(v) {
                    if es.contains(&e2) {
                        continue;
                    }
                    let x = g.other_end(e2, v).unwrap();
                    if f.covered.contains(&x) {
                        if x != p {
                            let mut vv = vs.clone();
                            vv.push(x);
                            let mut ee = es.clone();
                            ee.push(e2);
                            paths.push(Ear {
                                kind: EarKind::Path,
                                vertices: vv,
                                edges: ee,
                            });
                        }
                    } else if !vs.contains(&x) {
                        let mut vv = vs.clone();
                        vv.push(x);
                        let mut ee = es.clone();
                        ee.push(e2);
                        stack.push((vv, ee));
                    }
                }
            }
        }
    }
    paths.sort_by(|a, b| {
        a.vertices
            .len()
            .cmp(&b.vertices.len())
            .then_with(|| a.vertices.cmp(&b.vertices))
    });
    out.extend(paths);
    out
}
