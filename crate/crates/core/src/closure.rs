//! The closure of a trigraph with an ear decomposition: roles of short ears,
//! the admits test, heels, local exchanges, bounded exploration, and the
//! rewriting of a decomposition into blocks of gadgets.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::hash::{Hash, Hasher};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ear::{Ear, EarDecomposition, EarKind, EarMode};
use crate::error::{Error, Result};
use crate::gadget::{GadgetRoles, TrigraphConstruction};
use crate::graph::{EdgeId, Multigraph, VertexId};
use crate::reduce::{choice_from_transitions, ReductionTrace};

/// Role of a path ear with two or three internal vertices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EarRole {
    /// Both leaves on the initial cycle.
    Base,
    /// One leaf on the initial cycle, the other inside a base.
    Up,
    /// Exactly one leaf inside an up.
    Antenna,
    Other,
}

/// Role of every ear; `None` for ears that are not 2- or 3-ears. A leaf
/// belongs to an ear when it is one of that ear's internal vertices.
pub fn ear_roles(ed: &EarDecomposition) -> Vec<Option<EarRole>> {
    let h0: BTreeSet<VertexId> = ed.h0.iter().copied().collect();
    let short = |e: &Ear| matches!(e.path_order(), Some(2 | 3));
    let mut roles: Vec<Option<EarRole>> = ed
        .ears
        .iter()
        .map(|e| short(e).then_some(EarRole::Other))
        .collect();
    let mut base = BTreeSet::new();
    for (i, e) in ed.ears.iter().enumerate() {
        if short(e) && e.leaves().iter().all(|l| h0.contains(l)) {
            roles[i] = Some(EarRole::Base);
            base.extend(e.internal().iter().copied());
        }
    }
    let mut up = BTreeSet::new();
    for (i, e) in ed.ears.iter().enumerate() {
        if roles[i] != Some(EarRole::Other) {
            continue;
        }
        let l = e.leaves();
        let (p, q) = (l[0], l[1]);
        if (h0.contains(&p) && base.contains(&q)) || (h0.contains(&q) && base.contains(&p)) {
            roles[i] = Some(EarRole::Up);
            up.extend(e.internal().iter().copied());
        }
    }
    for (i, e) in ed.ears.iter().enumerate() {
        if roles[i] == Some(EarRole::Other)
            && e.leaves().iter().filter(|l| up.contains(l)).count() == 1
        {
            roles[i] = Some(EarRole::Antenna);
        }
    }
    roles
}

/// Reasons why `ed` does not admit its initial cycle and the paths `s`; empty
/// when it does.
pub fn admits_violations(ed: &EarDecomposition, s: &[[VertexId; 3]]) -> Vec<String> {
    let mut out = Vec::new();
    let used: Vec<VertexId> = s.iter().flatten().copied().collect();
    if used.iter().collect::<BTreeSet<_>>().len() != used.len() {
        out.push("the fixed paths are not disjoint".to_string());
    }
    let roles = ear_roles(ed);
    let h0: BTreeSet<VertexId> = ed.h0.iter().copied().collect();
    let contains = |e: &Ear, p: &[VertexId; 3]| p.iter().all(|v| e.vertices.contains(v));
    let internals = |role: EarRole| -> BTreeSet<VertexId> {
        ed.ears
            .iter()
            .zip(&roles)
            .filter(|(_, r)| **r == Some(role))
            .flat_map(|(e, _)| e.internal().iter().copied())
            .collect()
    };
    let (base, up) = (internals(EarRole::Base), internals(EarRole::Up));
    for (i, e) in ed.ears.iter().enumerate() {
        if e.is_k_ear(3) {
            let ok = match roles[i] {
                Some(EarRole::Base | EarRole::Up) => true,
                Some(EarRole::Antenna) => s.iter().any(|p| contains(e, p)),
                _ => false,
            };
            if !ok {
                out.push(format!(
                    "3-ear {i} is not a base, an up or an antenna with a fixed path"
                ));
            }
        }
        if e.is_k_ear(1) {
            let l = e.leaves();
            let (p, q) = (l[0], l[1]);
            if h0.contains(&p) && h0.contains(&q) {
                out.push(format!("1-ear {i} has both leaves on the initial cycle"));
            }
            if (base.contains(&p) && up.contains(&q)) || (base.contains(&q) && up.contains(&p)) {
                out.push(format!("1-ear {i} joins a base and an up"));
            }
        }
    }
    for p in s {
        let inside = ed
            .ears
            .iter()
            .zip(&roles)
            .any(|(e, r)| *r == Some(EarRole::Antenna) && contains(e, p));
        if !inside {
            out.push(format!("fixed path {p:?} lies in no antenna"));
        }
    }
    out
}

/// Whether `ed` admits its initial cycle and the fixed paths `s`.
pub fn admits(ed: &EarDecomposition, s: &[[VertexId; 3]]) -> bool {
    admits_violations(ed, s).is_empty()
}

/// The maximal heel starting at the 2-ear `two_ear`: each next ear has exactly
/// the internal vertices of the previous one as leaves.
pub fn heel_of(ed: &EarDecomposition, two_ear: usize) -> Result<Vec<usize>> {
    let first = ed
        .ears
        .get(two_ear)
        .ok_or_else(|| Error::NotApplicable(format!("no ear {two_ear}")))?;
    if !first.is_k_ear(2) {
        return Err(Error::NotApplicable(format!("ear {two_ear} is not a 2-ear")));
    }
    let mut heel = vec![two_ear];
    loop {
        let prev: BTreeSet<VertexId> = ed.ears[*heel.last().unwrap()]
            .internal()
            .iter()
            .copied()
            .collect();
        if prev.len() != 2 {
            break;
        }
        let next = ed.ears.iter().position(|e| {
            e.kind == EarKind::Path && e.leaves().into_iter().collect::<BTreeSet<_>>() == prev
        });
        match next {
            Some(j) if !heel.contains(&j) => heel.push(j),
            _ => break,
        }
    }
    Ok(heel)
}

/// Index of the ear having `v` as a leaf, with the edge of that ear at `v`.
fn leaf_edge(ed: &EarDecomposition, v: VertexId, skip: &[usize]) -> Option<(usize, EdgeId)> {
    ed.ears.iter().enumerate().find_map(|(i, e)| {
        if skip.contains(&i) || !e.leaves().contains(&v) {
            return None;
        }
        e.edge_ends()
            .iter()
            .position(|&(a, b)| a == v || b == v)
            .map(|k| (i, e.edges[k]))
    })
}

/// Replace the leaf `old` of `ear` by `new`.
fn swap_leaf(ear: &mut Ear, old: VertexId, new: VertexId) {
    match ear.kind {
        EarKind::Star => {
            if let Some(p) = ear.vertices[1..].iter().position(|&x| x == old) {
                ear.vertices[p + 1] = new;
            }
        }
        _ => {
            let n = ear.vertices.len();
            if ear.vertices[0] == old {
                ear.vertices[0] = new;
            } else if ear.vertices[n - 1] == old {
                ear.vertices[n - 1] = new;
            }
        }
    }
}

/// Stable reordering of the ears so that each one only attaches to vertices
/// already present. `None` when no such order exists.
pub fn reorder(ed: &EarDecomposition) -> Option<EarDecomposition> {
    let mut present: BTreeSet<VertexId> = ed.h0.iter().copied().collect();
    let mut rest: Vec<Ear> = ed.ears.clone();
    let mut ears = Vec::with_capacity(rest.len());
    while !rest.is_empty() {
        let k = rest.iter().position(|e| {
            e.leaves().iter().all(|l| present.contains(l))
                && e.internal().iter().all(|v| !present.contains(v))
        })?;
        let e = rest.remove(k);
        present.extend(e.internal().iter().copied());
        ears.push(e);
    }
    Some(EarDecomposition {
        h0: ed.h0.clone(),
        h0_edges: ed.h0_edges.clone(),
        ears,
    })
}

/// Result of a local exchange.
#[derive(Clone, Debug)]
pub struct Exchange {
    pub h: Multigraph,
    pub ed: EarDecomposition,
    /// The two ears whose edges were exchanged, as indices into the new list.
    pub changed: [usize; 2],
    pub removed: [(VertexId, VertexId); 2],
    pub added: [(VertexId, VertexId); 2],
}

/// Local exchange at the 3-ear antenna `antenna` with vertices `a, w1, w2, w3,
/// b`: the heel on `w2, w3` gives `u`, and the edges `w1 w1'`, `u u'` are
/// replaced by `w1 u'`, `u w1'`. Edge ids are kept: the id of `w1 w1'` now
/// names `u w1'`.
pub fn local_exchange(h: &Multigraph, ed: &EarDecomposition, antenna: usize) -> Result<Exchange> {
    let roles = ear_roles(ed);
    let ear = ed
        .ears
        .get(antenna)
        .ok_or_else(|| Error::NotApplicable(format!("no ear {antenna}")))?;
    if !ear.is_k_ear(3) || roles[antenna] != Some(EarRole::Antenna) {
        return Err(Error::NotApplicable(format!(
            "ear {antenna} is not a 3-ear antenna"
        )));
    }
    let mut found = None;
    for e in [ear.clone(), ear.reversed()] {
        let (w2, w3) = (e.vertices[2], e.vertices[3]);
        let pair: BTreeSet<VertexId> = [w2, w3].into();
        if let Some(i) = ed.ears.iter().position(|f| {
            f.is_k_ear(2) && f.leaves().into_iter().collect::<BTreeSet<_>>() == pair
        }) {
            found = Some((e, i));
            break;
        }
    }
    let (e, first) =
        found.ok_or_else(|| Error::NotApplicable(format!("no heel hangs on antenna {antenna}")))?;
    let (w1, w3) = (e.vertices[1], e.vertices[3]);
    let heel = heel_of(ed, first)?;
    let last = &ed.ears[*heel.last().unwrap()];

    let mut adj: BTreeMap<VertexId, Vec<VertexId>> = BTreeMap::new();
    for &i in &heel {
        for (p, q) in ed.ears[i].edge_ends() {
            adj.entry(p).or_default().push(q);
            adj.entry(q).or_default().push(p);
        }
    }
    let mut dist = BTreeMap::from([(w3, 0usize)]);
    let mut queue = VecDeque::from([w3]);
    while let Some(p) = queue.pop_front() {
        for &q in adj.get(&p).into_iter().flatten() {
            if !dist.contains_key(&q) {
                dist.insert(q, dist[&p] + 1);
                queue.push_back(q);
            }
        }
    }
    let u = *last
        .internal()
        .iter()
        .min_by_key(|v| (dist.get(v).copied().unwrap_or(usize::MAX), **v))
        .expect("heel ears have internal vertices");

    let (k, e1) = leaf_edge(ed, w1, &[])
        .ok_or_else(|| Error::NotApplicable(format!("no ear leaves from {w1}")))?;
    let (m, e2) = leaf_edge(ed, u, &heel)
        .ok_or_else(|| Error::NotApplicable(format!("no ear leaves from {u}")))?;
    let w1p = h.other_end(e1, w1)?;
    let up = h.other_end(e2, u)?;
    if e1 == e2 || w1p == u || up == w1 {
        return Err(Error::NotApplicable("degenerate exchange".into()));
    }
    let mut h2 = h.clone();
    h2.remove_edge(e1)?;
    h2.remove_edge(e2)?;
    h2.add_edge_with_id(e1, u, w1p)?;
    h2.add_edge_with_id(e2, w1, up)?;

    let mut ears = ed.ears.clone();
    swap_leaf(&mut ears[k], w1, u);
    swap_leaf(&mut ears[m], u, w1);
    let swapped = EarDecomposition {
        h0: ed.h0.clone(),
        h0_edges: ed.h0_edges.clone(),
        ears,
    };
    let (ed2, changed) = if swapped.validate(&h2, EarMode::Trigraph).ok {
        (swapped, [k, m])
    } else {
        let r = reorder(&swapped)
            .ok_or_else(|| Error::NotApplicable("the exchange breaks every ear order".into()))?;
        let pos = |i: usize| {
            let sig = swapped.ears[i].signature();
            r.ears.iter().position(|x| x.signature() == sig).unwrap()
        };
        let changed = [pos(k), pos(m)];
        (r, changed)
    };
    let val = ed2.validate(&h2, EarMode::Trigraph);
    if !val.ok {
        return Err(Error::NotApplicable(val.diagnostics.join("; ")));
    }
    Ok(Exchange {
        h: h2,
        ed: ed2,
        changed,
        removed: [(w1, w1p), (u, up)],
        added: [(u, w1p), (w1, up)],
    })
}

/// The core ears (`E1, E2`, the ear through the fixed path) and the three
/// stars of every gadget, as indices into `ed`.
fn fixed_ears(tc: &TrigraphConstruction, ed: &EarDecomposition) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for r in &tc.gadgets {
        for v in [r.a_prime, r.w, r.z, r.d1, r.d2, r.d3] {
            if let Some(i) = ed.owner(v) {
                out.insert(i);
            }
        }
    }
    out
}

/// A random ear decomposition of `h` from the same initial cycle that keeps the
/// fixed ears of every gadget as they are and covers the other edges with
/// 1-ears, 2-ears and stars. Depth-first with random choices; `None` when
/// `budget` nodes are exhausted.
pub fn redecompose(
    tc: &TrigraphConstruction,
    h: &Multigraph,
    ed: &EarDecomposition,
    rng: &mut impl Rng,
    budget: u64,
) -> Option<EarDecomposition> {
    let fixed_idx = fixed_ears(tc, ed);
    let fixed: Vec<Ear> = fixed_idx.iter().map(|&i| ed.ears[i].clone()).collect();
    let fixed_internal: BTreeSet<VertexId> = fixed
        .iter()
        .flat_map(|e| e.internal().iter().copied())
        .collect();
    let fixed_edges: BTreeSet<EdgeId> = fixed.iter().flat_map(|e| e.edges.clone()).collect();
    let h0_edges: BTreeSet<EdgeId> = ed.h0_edges.iter().copied().collect();
    let free: BTreeSet<EdgeId> = h
        .edge_ids()
        .filter(|e| !fixed_edges.contains(e) && !h0_edges.contains(e))
        .collect();
    let mut st = Redecompose {
        h,
        fixed,
        fixed_internal,
        free,
        present: ed.h0.iter().copied().collect(),
        used: BTreeSet::new(),
        placed: vec![],
        ears: vec![],
        nodes: 0,
        budget,
    };
    if st.go(rng) {
        Some(EarDecomposition {
            h0: ed.h0.clone(),
            h0_edges: ed.h0_edges.clone(),
            ears: st.ears,
        })
    } else {
        None
    }
}

struct Redecompose<'a> {
    h: &'a Multigraph,
    fixed: Vec<Ear>,
    fixed_internal: BTreeSet<VertexId>,
    free: BTreeSet<EdgeId>,
    present: BTreeSet<VertexId>,
    used: BTreeSet<EdgeId>,
    placed: Vec<usize>,
    ears: Vec<Ear>,
    nodes: u64,
    budget: u64,
}

impl Redecompose<'_> {
    fn open(&self, v: VertexId) -> bool {
        !self.present.contains(&v) && !self.fixed_internal.contains(&v)
    }

    fn free_edges_at(&self, v: VertexId) -> Vec<(EdgeId, VertexId)> {
        self.h
            .incident(v)
            .iter()
            .filter(|e| self.free.contains(e) && !self.used.contains(e))
            .filter_map(|&e| self.h.other_end(e, v).ok().map(|w| (e, w)))
            .collect()
    }

    fn candidates(&self) -> Vec<Ear> {
        let mut out: BTreeMap<(EarKind, Vec<VertexId>), Ear> = BTreeMap::new();
        for (i, e) in self.fixed.iter().enumerate() {
            if !self.placed.contains(&i) && e.leaves().iter().all(|l| self.present.contains(l)) {
                out.insert(e.signature(), e.clone());
            }
        }
        for &p in &self.present {
            for (e1, q1) in self.free_edges_at(p) {
                if !self.open(q1) {
                    continue;
                }
                for (e2, r) in self.free_edges_at(q1) {
                    if e2 == e1 {
                        continue;
                    }
                    if self.present.contains(&r) {
                        if r != p {
                            let ear = Ear {
                                kind: EarKind::Path,
                                vertices: vec![p, q1, r],
                                edges: vec![e1, e2],
                            };
                            out.insert(ear.signature(), ear);
                        }
                    } else if self.open(r) && r != q1 {
                        for (e3, t) in self.free_edges_at(r) {
                            if e3 != e2 && t != p && self.present.contains(&t) {
                                let ear = Ear {
                                    kind: EarKind::Path,
                                    vertices: vec![p, q1, r, t],
                                    edges: vec![e1, e2, e3],
                                };
                                out.insert(ear.signature(), ear);
                            }
                        }
                    }
                }
            }
        }
        let mut centers = BTreeSet::new();
        for &p in &self.present {
            for (_, c) in self.free_edges_at(p) {
                if self.open(c) {
                    centers.insert(c);
                }
            }
        }
        for c in centers {
            let spokes = self.free_edges_at(c);
            let leaves: BTreeSet<VertexId> = spokes.iter().map(|s| s.1).collect();
            if spokes.len() == 3
                && self.h.degree(c) == 3
                && leaves.len() == 3
                && leaves.iter().all(|l| self.present.contains(l))
            {
                let mut vertices = vec![c];
                vertices.extend(spokes.iter().map(|s| s.1));
                let ear = Ear {
                    kind: EarKind::Star,
                    vertices,
                    edges: spokes.iter().map(|s| s.0).collect(),
                };
                out.insert(ear.signature(), ear);
            }
        }
        out.into_values().collect()
    }

    fn dead(&self) -> bool {
        self.free.iter().any(|&e| {
            !self.used.contains(&e)
                && self
                    .h
                    .endpoints(e)
                    .is_ok_and(|(a, b)| self.present.contains(&a) && self.present.contains(&b))
        })
    }

    fn go(&mut self, rng: &mut impl Rng) -> bool {
        if self.present.len() == self.h.vertex_count() {
            return self.used.len() == self.free.len() && self.placed.len() == self.fixed.len();
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            return false;
        }
        let mut cands = self.candidates();
        cands.shuffle(rng);
        for ear in cands {
            let fixed_at = self.fixed.iter().position(|f| f == &ear);
            let new_used: Vec<EdgeId> = ear
                .edges
                .iter()
                .copied()
                .filter(|e| self.free.contains(e))
                .collect();
            self.present.extend(ear.internal().iter().copied());
            self.used.extend(new_used.iter().copied());
            if let Some(i) = fixed_at {
                self.placed.push(i);
            }
            let internal = ear.internal().to_vec();
            self.ears.push(ear);
            if !self.dead() && self.go(rng) {
                return true;
            }
            self.ears.pop();
            if fixed_at.is_some() {
                self.placed.pop();
            }
            for e in &new_used {
                self.used.remove(e);
            }
            for v in &internal {
                self.present.remove(v);
            }
            if self.nodes > self.budget {
                return false;
            }
        }
        false
    }
}

/// How a closure member was obtained from its parent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum ClosureOp {
    Start,
    Redecompose,
    LocalExchange { antenna: usize },
}

#[derive(Clone, Debug)]
pub struct ClosureMember {
    pub h: Multigraph,
    pub ed: EarDecomposition,
    pub hash: u64,
    pub parent: Option<u64>,
    pub op: ClosureOp,
}

/// One line of the exploration log.
#[derive(Clone, Debug, Serialize)]
pub struct ClosureLogLine {
    pub hash: String,
    pub parent: Option<String>,
    #[serde(flatten)]
    pub op: ClosureOp,
}

type MemberKey = (
    Vec<(EdgeId, VertexId, VertexId)>,
    Vec<(EarKind, Vec<VertexId>, Vec<EdgeId>)>,
);

/// Exact comparison key of a member: its edges and its ear list.
fn member_key(h: &Multigraph, ed: &EarDecomposition) -> MemberKey {
    let edges = h.edges().map(|(e, a, b)| (e, a.min(b), a.max(b))).collect();
    let ears = ed
        .ears
        .iter()
        .map(|e| {
            let (k, v) = e.signature();
            let mut es = e.edges.clone();
            es.sort();
            (k, v, es)
        })
        .collect();
    (edges, ears)
}

fn key_hash(k: &MemberKey) -> u64 {
    let mut s = DefaultHasher::new();
    k.hash(&mut s);
    s.finish()
}

/// Outcome of [`explore_closure`].
#[derive(Clone, Debug)]
pub struct Closure {
    pub members: Vec<ClosureMember>,
    pub log: Vec<ClosureLogLine>,
}

impl Closure {
    /// The log as JSON lines.
    pub fn log_lines(&self) -> Vec<String> {
        self.log
            .iter()
            .map(|l| serde_json::to_string(l).expect("log lines serialize"))
            .collect()
    }
}

/// Breadth-first exploration of the closure of `(h, ed)` up to `budget`
/// distinct members. Every local exchange at a 3-ear antenna is tried, and
/// `redecompositions` random re-decompositions per member; only results that
/// admit the initial cycle and the fixed paths are kept.
pub fn explore_closure(
    tc: &TrigraphConstruction,
    h: &Multigraph,
    ed: &EarDecomposition,
    budget: usize,
    redecompositions: usize,
    seed: u64,
) -> Result<Closure> {
    if budget == 0 {
        return Err(Error::NotApplicable("closure budget must be positive".into()));
    }
    let s = tc.fixed_paths();
    let violations = admits_violations(ed, &s);
    if !violations.is_empty() {
        return Err(Error::NotAdmitted(violations.join("; ")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen: BTreeMap<MemberKey, u64> = BTreeMap::new();
    let mut out = Closure {
        members: vec![],
        log: vec![],
    };
    let mut add = |out: &mut Closure,
                   h: Multigraph,
                   ed: EarDecomposition,
                   parent: Option<u64>,
                   op: ClosureOp|
     -> bool {
        let key = member_key(&h, &ed);
        if seen.contains_key(&key) {
            return false;
        }
        let hash = key_hash(&key);
        seen.insert(key, hash);
        out.log.push(ClosureLogLine {
            hash: format!("{hash:016x}"),
            parent: parent.map(|p| format!("{p:016x}")),
            op: op.clone(),
        });
        out.members.push(ClosureMember {
            h,
            ed,
            hash,
            parent,
            op,
        });
        true
    };
    add(&mut out, h.clone(), ed.clone(), None, ClosureOp::Start);
    let mut next = 0;
    while next < out.members.len() && out.members.len() < budget {
        let (mh, med, mhash) = {
            let m = &out.members[next];
            (m.h.clone(), m.ed.clone(), m.hash)
        };
        next += 1;
        let roles = ear_roles(&med);
        for (i, r) in roles.iter().enumerate() {
            if out.members.len() >= budget {
                break;
            }
            if *r != Some(EarRole::Antenna) || !med.ears[i].is_k_ear(3) {
                continue;
            }
            if let Ok(x) = local_exchange(&mh, &med, i) {
                if admits(&x.ed, &s) {
                    add(&mut out, x.h, x.ed, Some(mhash), ClosureOp::LocalExchange { antenna: i });
                }
            }
        }
        for _ in 0..redecompositions {
            if out.members.len() >= budget {
                break;
            }
            if let Some(ed2) = redecompose(tc, &mh, &med, &mut rng, 20_000) {
                if admits(&ed2, &s) {
                    add(&mut out, mh.clone(), ed2, Some(mhash), ClosureOp::Redecompose);
                }
            }
        }
    }
    Ok(out)
}

/// Block of ears containing a basic gadget.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Gadget,
    /// `pending` is the second internal vertex of a 2-ear at the joint.
    GadgetStar { pending: Option<VertexId> },
    GadgetStarStar { pending: Option<VertexId> },
    /// Together with the gadget of index `partner`.
    Double { partner: usize },
}

/// Ears of one gadget as found in a decomposition.
#[derive(Clone, Copy, Debug, Default)]
struct Parts {
    e1: bool,
    e2: bool,
    stars: bool,
    /// Ear through the fixed path, and whether it is a 3-ear.
    e3: Option<(usize, bool)>,
    e4: Option<usize>,
    f1: Option<usize>,
    f2: Option<usize>,
    /// Ear with the joint inside, when the ear through the fixed path is a 2-ear.
    f: Option<usize>,
}

fn same_path(e: &Ear, vs: &[VertexId]) -> bool {
    e.kind == EarKind::Path && (e.vertices == vs || e.vertices.iter().rev().eq(vs.iter()))
}

fn run_inside(e: &Ear, run: &[VertexId]) -> bool {
    let rev: Vec<VertexId> = run.iter().rev().copied().collect();
    e.vertices.windows(run.len()).any(|w| w == run || w == rev)
}

fn parts(ed: &EarDecomposition, r: &GadgetRoles) -> Parts {
    let ear = |v: VertexId| ed.owner(v).map(|i| (i, &ed.ears[i]));
    let mut p = Parts {
        e1: ear(r.a_prime).is_some_and(|(_, e)| same_path(e, &r.e1())),
        e2: ear(r.w).is_some_and(|(_, e)| same_path(e, &r.e2())),
        stars: [r.d1, r.d2, r.d3]
            .iter()
            .all(|&d| ear(d).is_some_and(|(_, e)| e.kind == EarKind::Star)),
        ..Parts::default()
    };
    if let Some((i, e)) = ear(r.z) {
        let leaves = e.leaves();
        if e.is_k_ear(2) && same_path(e, &[r.b, r.z, r.y, r.x]) {
            p.e3 = Some((i, false));
        } else if e.is_k_ear(3) && run_inside(e, &[r.b, r.z, r.y, r.x]) && leaves.contains(&r.b) {
            p.e3 = Some((i, true));
        }
    }
    if let Some((i, e)) = ear(r.u) {
        if same_path(e, &r.e4()) {
            p.e4 = Some(i);
        } else if e.kind == EarKind::Path && e.leaves().contains(&r.z) && run_inside(e, &[r.z, r.u])
        {
            p.f1 = Some(i);
        }
    }
    if let Some((i, e)) = ear(r.v) {
        if same_path(e, &[r.y, r.v, r.u]) {
            p.f2 = Some(i);
        }
    }
    if p.e3.is_some_and(|(_, three)| !three) {
        p.f = ed.owner(r.x);
    }
    p
}

/// The block of ears each gadget of `tc` lies in, if any.
pub fn classify_gadgets(tc: &TrigraphConstruction, ed: &EarDecomposition) -> Vec<Option<BlockKind>> {
    let ps: Vec<Parts> = tc.gadgets.iter().map(|r| parts(ed, r)).collect();
    let joint_of: BTreeMap<VertexId, usize> =
        tc.gadgets.iter().enumerate().map(|(i, r)| (r.x, i)).collect();
    let replicas: BTreeSet<VertexId> = tc.gadgets.iter().map(|r| r.u).collect();
    let lower = |p: &Parts| -> Option<bool> {
        if p.e4.is_some() {
            Some(true)
        } else if p.f2.is_some() && p.f1.is_some_and(|i| ed.ears[i].is_k_ear(1)) {
            Some(false)
        } else {
            None
        }
    };
    let mut out = vec![None; ps.len()];
    for (g, p) in ps.iter().enumerate() {
        if !(p.e1 && p.e2 && p.stars) {
            continue;
        }
        let Some((_, three)) = p.e3 else { continue };
        if three {
            if p.e4.is_some() {
                out[g] = Some(BlockKind::Gadget);
            }
            continue;
        }
        let (Some(low), Some(fi)) = (lower(p), p.f) else {
            continue;
        };
        let f = &ed.ears[fi];
        let x = tc.gadgets[g].x;
        let star = |pending| {
            if low {
                BlockKind::GadgetStar { pending }
            } else {
                BlockKind::GadgetStarStar { pending }
            }
        };
        if f.is_k_ear(1) {
            out[g] = Some(star(None));
        } else if f.is_k_ear(2) {
            let s = *f.internal().iter().find(|&&v| v != x).unwrap();
            if let Some(&h) = joint_of.get(&s) {
                let q = &ps[h];
                let ok = q.e1
                    && q.e2
                    && q.stars
                    && q.e3.is_some_and(|(_, t)| !t)
                    && q.f == Some(fi)
                    && lower(q).is_some();
                if ok {
                    out[g] = Some(BlockKind::Double { partner: h });
                }
            } else if !replicas.contains(&s) {
                out[g] = Some(star(Some(s)));
            }
        }
    }
    out
}

/// Indices of the gadgets that lie in no block of gadget type.
pub fn sigma(tc: &TrigraphConstruction, ed: &EarDecomposition) -> Vec<usize> {
    classify_gadgets(tc, ed)
        .iter()
        .enumerate()
        .filter(|(_, k)| k.is_none())
        .map(|(i, _)| i)
        .collect()
}

/// Every gadget lies in a block, and every ear outside those blocks is a
/// 1-ear or a star.
pub fn is_relevant(tc: &TrigraphConstruction, ed: &EarDecomposition) -> bool {
    let kinds = classify_gadgets(tc, ed);
    if kinds.iter().any(|k| k.is_none()) {
        return false;
    }
    let mut in_blocks = BTreeSet::new();
    for r in &tc.gadgets {
        let p = parts(ed, r);
        for v in r.vertices() {
            if let Some(i) = ed.owner(v) {
                in_blocks.insert(i);
            }
        }
        in_blocks.extend(p.f);
    }
    ed.ears.iter().enumerate().all(|(i, e)| {
        in_blocks.contains(&i) || e.kind == EarKind::Star || e.is_k_ear(1)
    })
}

/// Result of [`relevantize`].
#[derive(Clone, Debug)]
pub struct Relevantized {
    pub ed: EarDecomposition,
    /// The trace induced on the new decomposition, when one was given.
    pub trace: Option<ReductionTrace>,
    /// One line per rewrite.
    pub steps: Vec<String>,
}

/// Replace the 2-ear `[z, u, u', q]` and the 1-ear `[y, v, u]` by `E4 = [z, u,
/// v, y]` and the 1-ear `[u, u', q]`.
fn rebuild_e4(ed: &EarDecomposition, r: &GadgetRoles, f1: usize, f2: usize) -> Result<EarDecomposition> {
    let mut a = ed.ears[f1].clone();
    if a.vertices[0] != r.z {
        a = a.reversed();
    }
    let mut b = ed.ears[f2].clone();
    if b.vertices[0] != r.y {
        b = b.reversed();
    }
    if !a.is_k_ear(2) || a.vertices[..2] != [r.z, r.u] || b.vertices != [r.y, r.v, r.u] {
        return Err(Error::NotApplicable(format!(
            "gadget {}: ears around the replica have an unexpected shape",
            r.owner
        )));
    }
    let e4 = Ear {
        kind: EarKind::Path,
        vertices: vec![r.z, r.u, r.v, r.y],
        edges: vec![a.edges[0], b.edges[1], b.edges[0]],
    };
    let one = Ear {
        kind: EarKind::Path,
        vertices: a.vertices[1..].to_vec(),
        edges: a.edges[1..].to_vec(),
    };
    let mut ears = ed.ears.clone();
    ears[f1] = e4;
    ears[f2] = one;
    reorder(&EarDecomposition {
        h0: ed.h0.clone(),
        h0_edges: ed.h0_edges.clone(),
        ears,
    })
    .ok_or_else(|| Error::NotApplicable("rewritten ears admit no order".into()))
}

/// Reorder the ears so that the ears of each owner are consecutive: ears
/// sharing an owner form one block, and blocks keep their relative order where
/// the attachments allow it. `None` when no such order exists.
pub fn group_blocks(tc: &TrigraphConstruction, ed: &EarDecomposition) -> Option<EarDecomposition> {
    let own = tc.owner_map();
    let n = ed.ears.len();
    let mut block_of: Vec<usize> = (0..n).collect();
    let mut first: BTreeMap<VertexId, usize> = BTreeMap::new();
    fn root(b: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while b[r] != r {
            r = b[r];
        }
        b[i] = r;
        r
    }
    for (i, ear) in ed.ears.iter().enumerate() {
        for v in ear.internal() {
            let o = *own.get(v)?;
            match first.get(&o) {
                Some(&j) => {
                    let (a, b) = (root(&mut block_of, i), root(&mut block_of, j));
                    block_of[a.max(b)] = a.min(b);
                }
                None => {
                    first.insert(o, i);
                }
            }
        }
    }
    let mut blocks: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = root(&mut block_of, i);
        blocks.entry(r).or_default().push(i);
    }
    let mut rest: Vec<Vec<usize>> = blocks.into_values().collect();
    let mut present: BTreeSet<VertexId> = ed.h0.iter().copied().collect();
    let mut ears = Vec::with_capacity(n);
    while !rest.is_empty() {
        let k = rest.iter().position(|b| {
            let mut p = present.clone();
            b.iter().all(|&i| {
                let e = &ed.ears[i];
                let ok = e.leaves().iter().all(|l| p.contains(l));
                p.extend(e.internal().iter().copied());
                ok
            })
        })?;
        for i in rest.remove(k) {
            present.extend(ed.ears[i].internal().iter().copied());
            ears.push(ed.ears[i].clone());
        }
    }
    Some(EarDecomposition {
        h0: ed.h0.clone(),
        h0_edges: ed.h0_edges.clone(),
        ears,
    })
}

/// Rewrite `ed` into a decomposition of the same trigraph in which every
/// gadget lies in a block of gadget type, one gadget at a time. With `trace`,
/// the reductions of the rewritten ears are induced from its dart transitions.
pub fn relevantize(
    tc: &TrigraphConstruction,
    h: &Multigraph,
    ed: &EarDecomposition,
    trace: Option<&ReductionTrace>,
) -> Result<Relevantized> {
    if !ed.is_robust(h) {
        return Err(Error::NotApplicable("the decomposition is not robust".into()));
    }
    let mut cur = ed.clone();
    let mut steps = Vec::new();
    loop {
        let sig = sigma(tc, &cur);
        let Some(&g) = sig.iter().min_by_key(|&&g| {
            parts(&cur, &tc.gadgets[g])
                .e3
                .map(|x| x.0)
                .unwrap_or(usize::MAX)
        }) else {
            break;
        };
        let r = &tc.gadgets[g];
        let p = parts(&cur, r);
        let fail = |why: &str| Error::NotApplicable(format!("gadget {}: {why}", r.owner));
        let Some((_, three)) = p.e3 else {
            return Err(fail("no ear runs through the fixed path"));
        };
        let own_rewrite = match (p.e4, p.f1, p.f2) {
            (Some(_), _, _) => false,
            (None, Some(f1), Some(_)) if cur.ears[f1].is_k_ear(2) => true,
            (None, Some(_), Some(_)) if three => {
                return Err(fail(
                    "the ear through the fixed path is a 3-ear and the replica lies in a 1-ear; no rewrite covers this configuration",
                ))
            }
            (None, Some(_), Some(_)) => false,
            _ => return Err(fail("the replica lies in no recognised ear")),
        };
        let (target, next) = if own_rewrite {
            (g, rebuild_e4(&cur, r, p.f1.unwrap(), p.f2.unwrap())?)
        } else {
            if three {
                return Err(fail("lies in a gadget yet was not recognised"));
            }
            let l = p.f.ok_or_else(|| fail("the joint lies in no ear"))?;
            let ear = &cur.ears[l];
            if !ear.is_k_ear(2) {
                return Err(fail("the ear at the joint is not a 2-ear"));
            }
            let other = *ear.internal().iter().find(|&&v| v != r.x).unwrap();
            let h2 = tc
                .gadgets
                .iter()
                .position(|q| q.x == other)
                .ok_or_else(|| fail("the ear at the joint does not reach another joint"))?;
            let q = &tc.gadgets[h2];
            let pq = parts(&cur, q);
            match (pq.e4, pq.f1, pq.f2) {
                (None, Some(f1), Some(f2)) if cur.ears[f1].is_k_ear(2) => {
                    (h2, rebuild_e4(&cur, q, f1, f2)?)
                }
                _ => return Err(fail("the partner gadget has no 2-ear at its replica")),
            }
        };
        let before = sig.len();
        let after = sigma(tc, &next).len();
        if after >= before {
            return Err(fail("rewriting did not reduce the number of loose gadgets"));
        }
        steps.push(format!(
            "rebuilt E4 of gadget {} ({} -> {} loose gadgets)",
            tc.gadgets[target].owner, before, after
        ));
        cur = next;
    }
    let grouped = group_blocks(tc, &cur)
        .ok_or_else(|| Error::NotApplicable("the owner blocks admit no order".into()))?;
    if grouped != cur {
        steps.push("grouped the ears of each owner into consecutive blocks".into());
        cur = grouped;
    }
    let val = cur.validate(h, EarMode::Trigraph);
    if !val.ok {
        return Err(Error::NotApplicable(val.diagnostics.join("; ")));
    }
    let trace = match trace {
        None => None,
        Some(t) if steps.is_empty() => Some(t.clone()),
        Some(t) => Some(induce(&cur, t)?),
    };
    Ok(Relevantized {
        ed: cur,
        trace,
        steps,
    })
}

/// Reduce the ears of `ed` from the last one while their interiors were
/// reduced by `trace`, following its dart transitions.
pub fn induce(ed: &EarDecomposition, trace: &ReductionTrace) -> Result<ReductionTrace> {
    let t = trace.transitions();
    let reduced: BTreeSet<VertexId> = trace
        .steps
        .iter()
        .flat_map(|s| s.choice.target.iter().copied())
        .collect();
    let mut out = ReductionTrace::new(trace.start().clone());
    for ear in ed.ears.iter().rev() {
        if !ear.internal().iter().all(|v| reduced.contains(v)) {
            break;
        }
        let c = choice_from_transitions(&out.last, ear.internal(), &t)?;
        out.push(c)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ear::{find_super_robust, SearchOutcome};
    use crate::gadget::build_h;
    use crate::graph::named;

    fn construct(g: &Multigraph) -> TrigraphConstruction {
        let SearchOutcome::Found(ed) = find_super_robust(g, 100_000).unwrap() else {
            panic!("no decomposition");
        };
        build_h(g, &ed).unwrap()
    }

    fn path(vs: &[u32]) -> (EarKind, Vec<VertexId>) {
        (EarKind::Path, vs.iter().map(|&v| VertexId(v)).collect())
    }

    #[test]
    fn canonical_admits_and_is_relevant() {
        for g in [named::k4(), named::prism(), named::k33(), named::petersen()] {
            let tc = construct(&g);
            let v = admits_violations(&tc.canonical, &tc.fixed_paths());
            assert!(v.is_empty(), "{v:?}");
            assert!(sigma(&tc, &tc.canonical).is_empty());
            assert!(is_relevant(&tc, &tc.canonical));
            let kinds = classify_gadgets(&tc, &tc.canonical);
            assert!(kinds.contains(&Some(BlockKind::GadgetStar { pending: None })));
        }
    }

    #[test]
    fn roles_of_a_gadget_core() {
        let tc = construct(&named::k4());
        let roles = ear_roles(&tc.canonical);
        let r = &tc.gadgets[0];
        let at = |v| roles[tc.canonical.owner(v).unwrap()];
        assert_eq!(at(r.a_prime), Some(EarRole::Base));
        assert_eq!(at(r.w), Some(EarRole::Up));
        assert_eq!(at(r.z), Some(EarRole::Antenna));
        assert_eq!(at(r.u), Some(EarRole::Other));
    }

    fn decomposition(n: usize, h0: &[u32], ears: &[&[u32]]) -> EarDecomposition {
        let mut g = Multigraph::with_vertices(n);
        for i in 0..h0.len() {
            g.add_edge(VertexId(h0[i]), VertexId(h0[(i + 1) % h0.len()]))
                .unwrap();
        }
        for e in ears {
            for w in e.windows(2) {
                g.add_edge(VertexId(w[0]), VertexId(w[1])).unwrap();
            }
        }
        EarDecomposition::resolve(
            &g,
            h0.iter().map(|&v| VertexId(v)).collect(),
            ears.iter().map(|e| path(e)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn one_ear_on_the_cycle_is_rejected() {
        let ed = decomposition(10, &[0, 1, 2, 3, 4, 5], &[&[0, 6, 7, 8, 3], &[1, 9, 4]]);
        let v = admits_violations(&ed, &[]);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].contains("both leaves"));
    }

    #[test]
    fn three_ear_without_role_is_rejected() {
        let ed = decomposition(
            14,
            &[0, 1, 2, 3, 4, 5],
            &[&[0, 6, 7, 8, 3], &[1, 9, 2], &[9, 10, 11, 12, 7]],
        );
        let roles = ear_roles(&ed);
        assert_eq!(roles, vec![Some(EarRole::Base), None, Some(EarRole::Other)]);
        let v = admits_violations(&ed, &[]);
        assert!(v.iter().any(|m| m.contains("3-ear 2")), "{v:?}");
        // A fixed path needs an antenna around it.
        let only_base = EarDecomposition {
            ears: vec![ed.ears[0].clone()],
            ..ed.clone()
        };
        assert!(admits(&only_base, &[]));
        assert!(!admits(&only_base, &[[VertexId(6), VertexId(7), VertexId(8)]]));
    }

    #[test]
    fn heels_follow_internal_vertices() {
        // Cycle 0..3; 2-ear 0-4-5-2; 2-ear 4-6-7-5; 1-ear 6-8-7; 1-ear 1-8-3 closes degrees.
        let mut g = Multigraph::with_vertices(9);
        for i in 0..4 {
            g.add_edge(VertexId(i), VertexId((i + 1) % 4)).unwrap();
        }
        for (a, b) in [(0, 4), (4, 5), (5, 2), (4, 6), (6, 7), (7, 5), (6, 8), (8, 7)] {
            g.add_edge(VertexId(a), VertexId(b)).unwrap();
        }
        let ed = EarDecomposition::resolve(
            &g,
            (0..4).map(VertexId).collect(),
            vec![path(&[0, 4, 5, 2]), path(&[4, 6, 7, 5]), path(&[6, 8, 7])],
        )
        .unwrap();
        assert_eq!(heel_of(&ed, 0).unwrap(), vec![0, 1, 2]);
        assert_eq!(heel_of(&ed, 1).unwrap(), vec![1, 2]);
        assert!(heel_of(&ed, 2).is_err());
    }

    #[test]
    fn local_exchange_keeps_degrees_and_contraction() {
        for g in [named::k4(), named::prism(), named::k33()] {
            let tc = construct(&g);
            let roles = ear_roles(&tc.canonical);
            let mut done = 0;
            for (i, r) in roles.iter().enumerate() {
                if *r != Some(EarRole::Antenna) || !tc.canonical.ears[i].is_k_ear(3) {
                    continue;
                }
                let x = local_exchange(&tc.h, &tc.canonical, i).unwrap();
                assert!(x.h.is_cubic());
                assert_eq!(x.h.edge_count(), tc.h.edge_count());
                assert!(admits(&x.ed, &tc.fixed_paths()));
                assert!(tc.contracts_to_gp(&x.h));
                let changed: Vec<usize> = (0..x.ed.ears.len())
                    .filter(|&k| x.ed.ears[k] != tc.canonical.ears[k])
                    .collect();
                assert!(changed.len() <= 2, "{changed:?}");
                // Undo by swapping the added edges back.
                let mut back = x.h.clone();
                for (&(p, q), &(s, t)) in x.added.iter().zip(&x.removed) {
                    let e = back.find_edge(p, q).unwrap();
                    back.remove_edge(e).unwrap();
                    back.add_edge_with_id(e, s, t).unwrap();
                }
                assert!(crate::gadget::same_edge_multiset(&back, &tc.h));
                done += 1;
            }
            assert!(done > 0);
        }
    }

    #[test]
    fn closure_budget_one_is_the_start() {
        let tc = construct(&named::k4());
        let c = explore_closure(&tc, &tc.h, &tc.canonical, 1, 2, 0).unwrap();
        assert_eq!(c.members.len(), 1);
        assert_eq!(c.members[0].op, ClosureOp::Start);
        assert!(explore_closure(&tc, &tc.h, &tc.canonical, 0, 2, 0).is_err());
    }

    #[test]
    fn closure_members_admit_and_contract() {
        let tc = construct(&named::prism());
        let c = explore_closure(&tc, &tc.h, &tc.canonical, 25, 3, 7).unwrap();
        assert_eq!(c.members.len(), 25);
        assert!(c
            .members
            .iter()
            .any(|m| matches!(m.op, ClosureOp::LocalExchange { .. })));
        assert!(c.members.iter().any(|m| m.op == ClosureOp::Redecompose));
        for m in &c.members {
            assert!(m.ed.validate(&m.h, EarMode::Trigraph).ok);
            assert!(admits(&m.ed, &tc.fixed_paths()));
            assert!(tc.contracts_to_gp(&m.h));
        }
        let lines = c.log_lines();
        assert_eq!(lines.len(), 25);
        assert!(lines[1].contains("\"parent\""));
    }

    #[test]
    fn canonical_relevantizes_to_itself() {
        let tc = construct(&named::k4());
        let r = relevantize(&tc, &tc.h, &tc.canonical, None).unwrap();
        assert_eq!(r.ed, tc.canonical);
        assert!(r.steps.is_empty());
    }
}
