//! Correct reductions of vertex sets in mixed graphs, reduction traces and the
//! directed cycle families they produce.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Dart, Multigraph, VertexId};
use crate::mixed::{Arc, ArcId, MixedGraph};

/// An arc taking part in a reduction: an existing arc, or one orientation of an
/// edge with an end in the reduced set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArcRef {
    Arc(ArcId),
    Split(Dart),
}

impl ArcRef {
    pub fn ends(self, m: &MixedGraph) -> (VertexId, VertexId) {
        match self {
            ArcRef::Arc(a) => {
                let arc = m.arc(a).expect("arc of this graph");
                (arc.tail, arc.head)
            }
            ArcRef::Split(d) => (d.tail, d.head),
        }
    }

    fn expansion(self, m: &MixedGraph) -> Vec<Dart> {
        match self {
            ArcRef::Arc(a) => m.arc(a).expect("arc of this graph").expansion.clone(),
            ArcRef::Split(d) => vec![d],
        }
    }

    fn first_dart(self, m: &MixedGraph) -> Option<Dart> {
        match self {
            ArcRef::Arc(a) => m.arc(a).and_then(|x| x.expansion.first().copied()),
            ArcRef::Split(d) => Some(d),
        }
    }

    fn last_dart(self, m: &MixedGraph) -> Option<Dart> {
        match self {
            ArcRef::Arc(a) => m.arc(a).and_then(|x| x.expansion.last().copied()),
            ArcRef::Split(d) => Some(d),
        }
    }
}

/// A correct reduction of a vertex set: a pairing of incoming with outgoing arc
/// ends at every reduced vertex, with the resulting paths and cycles.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ReductionChoice {
    pub target: Vec<VertexId>,
    pub successor: BTreeMap<ArcRef, ArcRef>,
    /// Arc sequences leaving and re-entering the complement of the target.
    pub paths: Vec<Vec<ArcRef>>,
    /// Arc sequences closed inside the target.
    pub cycles: Vec<Vec<ArcRef>>,
    fingerprint: u64,
}

/// Result of applying a reduction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Applied {
    pub graph: MixedGraph,
    /// New arc for each path, in path order.
    pub new_arcs: Vec<ArcId>,
    /// Expanded cycles, each a closed walk of original darts.
    pub cycles: Vec<Vec<Dart>>,
}

struct Context {
    target: Vec<VertexId>,
    set: BTreeSet<VertexId>,
    fingerprint: u64,
    refs: Vec<ArcRef>,
    ins: BTreeMap<VertexId, Vec<ArcRef>>,
    outs: BTreeMap<VertexId, Vec<ArcRef>>,
}

fn context(m: &MixedGraph, target: &[VertexId]) -> Result<Context> {
    let set: BTreeSet<VertexId> = target.iter().copied().collect();
    if set.is_empty() {
        return Err(Error::InvalidTarget("empty vertex set".into()));
    }
    if set.len() != target.len() {
        return Err(Error::InvalidTarget("repeated vertex".into()));
    }
    for &v in &set {
        if !m.has_vertex(v) {
            return Err(Error::UnknownVertex(v));
        }
    }
    let mut refs = Vec::new();
    for (e, u, v) in m.graph().edges() {
        if set.contains(&u) || set.contains(&v) {
            refs.push(ArcRef::Split(Dart::new(e, u, v)));
            refs.push(ArcRef::Split(Dart::new(e, v, u)));
        }
    }
    for a in m.arcs() {
        if set.contains(&a.tail) || set.contains(&a.head) {
            refs.push(ArcRef::Arc(a.id));
        }
    }
    refs.sort();
    let mut ins: BTreeMap<VertexId, Vec<ArcRef>> = set.iter().map(|&v| (v, vec![])).collect();
    let mut outs = ins.clone();
    for &r in &refs {
        let (t, h) = r.ends(m);
        if let Some(l) = outs.get_mut(&t) {
            l.push(r);
        }
        if let Some(l) = ins.get_mut(&h) {
            l.push(r);
        }
    }
    for &v in &set {
        if ins[&v].len() != outs[&v].len() {
            return Err(Error::DegreeDiscipline {
                vertex: v,
                detail: format!("{} in-ends and {} out-ends", ins[&v].len(), outs[&v].len()),
            });
        }
    }
    Ok(Context {
        target: set.iter().copied().collect(),
        set,
        fingerprint: m.fingerprint(),
        refs,
        ins,
        outs,
    })
}

/// Build paths and cycles from a successor map and check correctness. Returns
/// `None` when the pairing is not a correct reduction.
fn assemble(
    m: &MixedGraph,
    ctx: &Context,
    successor: BTreeMap<ArcRef, ArcRef>,
) -> Option<ReductionChoice> {
    let mut paths = Vec::new();
    let mut seen: BTreeSet<ArcRef> = BTreeSet::new();
    for &r in &ctx.refs {
        let (t, _) = r.ends(m);
        if ctx.set.contains(&t) {
            continue;
        }
        let mut path = vec![r];
        seen.insert(r);
        let mut cur = r;
        let mut inner = BTreeSet::new();
        loop {
            let (_, h) = cur.ends(m);
            if !ctx.set.contains(&h) {
                break;
            }
            if !inner.insert(h) {
                return None;
            }
            cur = successor[&cur];
            seen.insert(cur);
            path.push(cur);
        }
        paths.push(path);
    }
    let mut cycles = Vec::new();
    for &r in &ctx.refs {
        if seen.contains(&r) {
            continue;
        }
        let mut cycle = vec![];
        let mut cur = r;
        let mut verts = BTreeSet::new();
        loop {
            seen.insert(cur);
            cycle.push(cur);
            let (_, h) = cur.ends(m);
            if !verts.insert(h) {
                return None;
            }
            cur = successor[&cur];
            if cur == r {
                break;
            }
        }
        cycles.push(cycle);
    }
    let same_edge_pair = |c: &Vec<ArcRef>| {
        c.len() == 2
            && matches!((c[0], c[1]), (ArcRef::Split(a), ArcRef::Split(b)) if a.edge == b.edge)
    };
    if cycles.iter().any(same_edge_pair) || paths.iter().any(same_edge_pair) {
        return None;
    }
    for comp in paths.iter().chain(cycles.iter()) {
        let arcs: Vec<ArcId> = comp
            .iter()
            .filter_map(|r| match r {
                ArcRef::Arc(a) => Some(*a),
                _ => None,
            })
            .collect();
        for i in 0..arcs.len() {
            for j in i + 1..arcs.len() {
                if m.is_forbidden(arcs[i], arcs[j]) {
                    return None;
                }
            }
        }
    }
    Some(ReductionChoice {
        target: ctx.target.clone(),
        successor,
        paths,
        cycles,
        fingerprint: ctx.fingerprint,
    })
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

/// All correct reductions of `target`, in a deterministic order.
pub fn enumerate_correct_reductions(
    m: &MixedGraph,
    target: &[VertexId],
) -> Result<Vec<ReductionChoice>> {
    let ctx = context(m, target)?;
    let per_vertex: Vec<(VertexId, Vec<Vec<usize>>)> = ctx
        .target
        .iter()
        .map(|&v| (v, permutations(ctx.ins[&v].len())))
        .collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; per_vertex.len()];
    loop {
        let mut successor = BTreeMap::new();
        for (k, (v, perms)) in per_vertex.iter().enumerate() {
            let p = &perms[idx[k]];
            for (i, &j) in p.iter().enumerate() {
                successor.insert(ctx.ins[v][i], ctx.outs[v][j]);
            }
        }
        if let Some(c) = assemble(m, &ctx, successor) {
            out.push(c);
        }
        // Odometer over the per-vertex permutations.
        let mut k = per_vertex.len();
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < per_vertex[k].1.len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Check the chains of a partial pairing: no repeated reduced vertex along a chain,
/// no forbidden pair inside a chain, and closed chains are acceptable cycles.
fn partial_ok(m: &MixedGraph, ctx: &Context, successor: &BTreeMap<ArcRef, ArcRef>) -> bool {
    let targets: BTreeSet<ArcRef> = successor.values().copied().collect();
    let mut seen: BTreeSet<ArcRef> = BTreeSet::new();
    let check_chain = |chain: &[ArcRef], closed: bool| -> bool {
        let mut heads = BTreeSet::new();
        let last = if closed {
            chain.len()
        } else {
            chain.len().saturating_sub(1)
        };
        for r in &chain[..last] {
            let h = r.ends(m).1;
            if ctx.set.contains(&h) && !heads.insert(h) {
                return false;
            }
        }
        if closed
            && chain.len() == 2
            && matches!((chain[0], chain[1]), (ArcRef::Split(a), ArcRef::Split(b)) if a.edge == b.edge)
        {
            return false;
        }
        let arcs: Vec<ArcId> = chain
            .iter()
            .filter_map(|r| match r {
                ArcRef::Arc(a) => Some(*a),
                _ => None,
            })
            .collect();
        for i in 0..arcs.len() {
            for j in i + 1..arcs.len() {
                if m.is_forbidden(arcs[i], arcs[j]) {
                    return false;
                }
            }
        }
        true
    };
    for &r in &ctx.refs {
        if targets.contains(&r) || seen.contains(&r) {
            continue;
        }
        let mut chain = vec![r];
        seen.insert(r);
        let mut cur = r;
        while let Some(&n) = successor.get(&cur) {
            chain.push(n);
            seen.insert(n);
            cur = n;
        }
        if !check_chain(&chain, false) {
            return false;
        }
    }
    for &r in &ctx.refs {
        if seen.contains(&r) || !successor.contains_key(&r) {
            continue;
        }
        let mut chain = vec![];
        let mut cur = r;
        loop {
            seen.insert(cur);
            chain.push(cur);
            cur = successor[&cur];
            if cur == r {
                break;
            }
        }
        if !check_chain(&chain, true) {
            return false;
        }
    }
    true
}

/// Find one correct reduction of `target` by backtracking over the vertices in the
/// given order. Suited to large targets where enumeration is out of reach.
/// `None` when none exists or `limit` search nodes are exhausted.
pub fn find_correct_reduction(
    m: &MixedGraph,
    target: &[VertexId],
    limit: u64,
) -> Result<Option<ReductionChoice>> {
    let ctx = context(m, target)?;
    let order: Vec<VertexId> = target.to_vec();
    let mut successor = BTreeMap::new();
    let mut nodes = 0u64;
    fn go(
        m: &MixedGraph,
        ctx: &Context,
        order: &[VertexId],
        k: usize,
        successor: &mut BTreeMap<ArcRef, ArcRef>,
        nodes: &mut u64,
        limit: u64,
    ) -> Option<ReductionChoice> {
        *nodes += 1;
        if *nodes > limit {
            return None;
        }
        if k == order.len() {
            return assemble(m, ctx, successor.clone());
        }
        let v = order[k];
        let ins = &ctx.ins[&v];
        let outs = &ctx.outs[&v];
        for p in permutations(ins.len()) {
            for (i, &j) in p.iter().enumerate() {
                successor.insert(ins[i], outs[j]);
            }
            if partial_ok(m, ctx, successor) {
                if let Some(c) = go(m, ctx, order, k + 1, successor, nodes, limit) {
                    return Some(c);
                }
            }
            for r in ins {
                successor.remove(r);
            }
        }
        None
    }
    Ok(go(m, &ctx, &order, 0, &mut successor, &mut nodes, limit))
}

/// The reduction of `target` in which every arc end entering a reduced vertex is
/// followed by the arc end whose first original dart is `transitions[last dart]`.
pub fn choice_from_transitions(
    m: &MixedGraph,
    target: &[VertexId],
    transitions: &BTreeMap<Dart, Dart>,
) -> Result<ReductionChoice> {
    let ctx = context(m, target)?;
    let mut successor = BTreeMap::new();
    for &v in &ctx.target {
        let mut taken = BTreeSet::new();
        for &a in &ctx.ins[&v] {
            let last = a
                .last_dart(m)
                .ok_or_else(|| Error::InvalidMixedGraph("arc without expansion".into()))?;
            let want = transitions
                .get(&last)
                .ok_or_else(|| Error::NoMatchingReduction(ctx.target.clone()))?;
            let b = ctx.outs[&v]
                .iter()
                .copied()
                .find(|b| b.first_dart(m) == Some(*want) && !taken.contains(b))
                .ok_or_else(|| Error::NoMatchingReduction(ctx.target.clone()))?;
            taken.insert(b);
            successor.insert(a, b);
        }
    }
    assemble(m, &ctx, successor).ok_or_else(|| Error::NoMatchingReduction(ctx.target.clone()))
}

impl ReductionChoice {
    /// Original-dart transitions realised at the reduced vertices.
    pub fn transitions(&self, m: &MixedGraph) -> BTreeMap<Dart, Dart> {
        let mut t = BTreeMap::new();
        for (&a, &b) in &self.successor {
            if let (Some(x), Some(y)) = (a.last_dart(m), b.first_dart(m)) {
                t.insert(x, y);
            }
        }
        t
    }

    /// Vertex sequence of each path, starting at the tail of its first arc.
    pub fn path_vertices(&self, m: &MixedGraph) -> Vec<Vec<VertexId>> {
        self.paths
            .iter()
            .map(|p| {
                let mut vs = vec![p[0].ends(m).0];
                vs.extend(p.iter().map(|r| r.ends(m).1));
                vs
            })
            .collect()
    }

    pub fn is_for(&self, m: &MixedGraph) -> bool {
        self.fingerprint == m.fingerprint()
    }
}

/// Apply a correct reduction.
pub fn apply(m: &MixedGraph, choice: &ReductionChoice) -> Result<Applied> {
    if !choice.is_for(m) {
        return Err(Error::StaleChoice);
    }
    let set: BTreeSet<VertexId> = choice.target.iter().copied().collect();
    let mut out = m.clone();
    let consumed: BTreeSet<ArcId> = m
        .arcs()
        .filter(|a| set.contains(&a.tail) || set.contains(&a.head))
        .map(|a| a.id)
        .collect();
    let old_pairs: Vec<(ArcId, ArcId)> = m.forbidden().collect();
    let mut new_arcs = Vec::new();
    let mut path_sets: Vec<BTreeSet<VertexId>> = Vec::new();
    let mut path_members: Vec<BTreeSet<ArcId>> = Vec::new();
    let mut new_list: Vec<Arc> = Vec::new();
    for p in &choice.paths {
        let tail = p[0].ends(m).0;
        let head = p.last().unwrap().ends(m).1;
        let expansion: Vec<Dart> = p.iter().flat_map(|r| r.expansion(m)).collect();
        let id = out.next_arc_id();
        new_list.push(Arc {
            id,
            tail,
            head,
            expansion,
        });
        new_arcs.push(id);
        path_sets.push(p[..p.len() - 1].iter().map(|r| r.ends(m).1).collect());
        path_members.push(
            p.iter()
                .filter_map(|r| match r {
                    ArcRef::Arc(a) => Some(*a),
                    _ => None,
                })
                .collect(),
        );
    }
    let cycles = choice
        .cycles
        .iter()
        .map(|c| c.iter().flat_map(|r| r.expansion(m)).collect())
        .collect();
    {
        let (graph, arcs, forbidden) = out.parts_mut();
        for &v in &set {
            graph.remove_vertex(v)?;
        }
        for a in &consumed {
            arcs.remove(a);
        }
        forbidden.retain(|(a, b)| !consumed.contains(a) && !consumed.contains(b));
        for arc in new_list {
            arcs.insert(arc.id, arc);
        }
        let mut add = |a: ArcId, b: ArcId| {
            if a != b {
                forbidden.insert((a.min(b), a.max(b)));
            }
        };
        // Inherited pairs: a path containing one arc of a forbidden pair against the
        // surviving other arc.
        for (k, members) in path_members.iter().enumerate() {
            for &(a, b) in &old_pairs {
                if members.contains(&a) && !consumed.contains(&b) {
                    add(new_arcs[k], b);
                }
                if members.contains(&b) && !consumed.contains(&a) {
                    add(new_arcs[k], a);
                }
            }
        }
        // Paths through a common reduced vertex, or holding the two arcs of a
        // forbidden pair.
        for i in 0..path_sets.len() {
            for j in i + 1..path_sets.len() {
                let linked = old_pairs.iter().any(|(a, b)| {
                    (path_members[i].contains(a) && path_members[j].contains(b))
                        || (path_members[i].contains(b) && path_members[j].contains(a))
                });
                if linked || !path_sets[i].is_disjoint(&path_sets[j]) {
                    add(new_arcs[i], new_arcs[j]);
                }
            }
        }
    }
    Ok(Applied {
        graph: out,
        new_arcs,
        cycles,
    })
}

/// How a reduction process picks among correct reductions.
#[derive(Clone, Debug)]
pub enum Strategy {
    First,
    Seeded(u64),
    /// Follow a dart transition map.
    Scripted(BTreeMap<Dart, Dart>),
}

/// One step of a reduction process.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub before: MixedGraph,
    pub choice: ReductionChoice,
    pub cycles: Vec<Vec<Dart>>,
}

/// A sequence of reductions. The `before` graph of each step is the result of the
/// previous one, and `last` is the result of the final step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionTrace {
    pub steps: Vec<TraceStep>,
    pub last: MixedGraph,
}

/// Serializable form of a trace: the reduced sets and their transitions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceScript {
    pub steps: Vec<ScriptStep>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptStep {
    pub target: Vec<VertexId>,
    pub transitions: Vec<(Dart, Dart)>,
}

impl ReductionTrace {
    pub fn new(start: MixedGraph) -> Self {
        ReductionTrace {
            steps: Vec::new(),
            last: start,
        }
    }

    pub fn push(&mut self, choice: ReductionChoice) -> Result<()> {
        let applied = apply(&self.last, &choice)?;
        let before = std::mem::replace(&mut self.last, applied.graph);
        self.steps.push(TraceStep {
            before,
            choice,
            cycles: applied.cycles,
        });
        Ok(())
    }

    pub fn start(&self) -> &MixedGraph {
        self.steps.first().map(|s| &s.before).unwrap_or(&self.last)
    }

    /// All dart transitions realised by the trace.
    pub fn transitions(&self) -> BTreeMap<Dart, Dart> {
        let mut t = BTreeMap::new();
        for s in &self.steps {
            t.extend(s.choice.transitions(&s.before));
        }
        t
    }

    pub fn script(&self) -> TraceScript {
        TraceScript {
            steps: self
                .steps
                .iter()
                .map(|s| ScriptStep {
                    target: s.choice.target.clone(),
                    transitions: s.choice.transitions(&s.before).into_iter().collect(),
                })
                .collect(),
        }
    }

    /// Recompute each step from its predecessor and compare.
    pub fn check_chain(&self) -> Result<()> {
        for (i, s) in self.steps.iter().enumerate() {
            let applied = apply(&s.before, &s.choice)?;
            let next = self
                .steps
                .get(i + 1)
                .map(|n| &n.before)
                .unwrap_or(&self.last);
            if &applied.graph != next || applied.cycles != s.cycles {
                return Err(Error::InvalidMixedGraph(format!(
                    "trace breaks at step {i}"
                )));
            }
        }
        Ok(())
    }

    pub fn is_complete(&self) -> bool {
        self.last.is_empty()
    }

    /// Degree discipline of every state after an apply: `(checked, violations)`.
    pub fn discipline_audit(&self) -> (usize, Vec<String>) {
        if self.steps.is_empty() {
            return (0, Vec::new());
        }
        let states = self.steps.iter().skip(1).map(|s| &s.before).chain([&self.last]);
        let mut bad = Vec::new();
        let mut n = 0;
        for (i, m) in states.enumerate() {
            n += 1;
            if let Err(e) = m.check_degree_discipline() {
                bad.push(format!("after step {i}: {e}"));
            }
        }
        (n, bad)
    }
}

/// Outcome of a complete-cycle reduction run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CcrOutcome {
    Complete(ReductionTrace),
    /// No acceptable reduction for `partition[step]`.
    Stuck {
        step: usize,
        trace: ReductionTrace,
    },
}

/// Reduce the parts of `partition` in order. After each step the remaining
/// vertices must stay connected.
pub fn run_ccr(
    m: &MixedGraph,
    partition: &[Vec<VertexId>],
    strategy: &Strategy,
) -> Result<CcrOutcome> {
    let mut rng = match strategy {
        Strategy::Seeded(s) => Some(ChaCha8Rng::seed_from_u64(*s)),
        _ => None,
    };
    let all: BTreeSet<VertexId> = partition.iter().flatten().copied().collect();
    let count: usize = partition.iter().map(|p| p.len()).sum();
    if all.len() != count || all != m.vertices().collect::<BTreeSet<_>>() {
        return Err(Error::InvalidTarget(
            "partition does not cover the vertex set exactly".into(),
        ));
    }
    let mut remaining = all;
    let mut trace = ReductionTrace::new(m.clone());
    for (step, part) in partition.iter().enumerate() {
        for v in part {
            remaining.remove(v);
        }
        if !remaining.is_empty() && !m.is_connected_on(&remaining) {
            return Err(Error::InvalidTarget(format!(
                "remainder disconnected after part {step}"
            )));
        }
        let choice = match strategy {
            Strategy::Scripted(t) => choice_from_transitions(&trace.last, part, t).ok(),
            Strategy::First => enumerate_correct_reductions(&trace.last, part)?
                .into_iter()
                .next(),
            Strategy::Seeded(_) => {
                let all = enumerate_correct_reductions(&trace.last, part)?;
                all.choose(rng.as_mut().unwrap()).cloned()
            }
        };
        match choice {
            Some(c) => trace.push(c)?,
            None => return Ok(CcrOutcome::Stuck { step, trace }),
        }
    }
    Ok(CcrOutcome::Complete(trace))
}

/// Replay a script on `m`.
pub fn replay(m: &MixedGraph, script: &TraceScript) -> Result<ReductionTrace> {
    let mut trace = ReductionTrace::new(m.clone());
    for s in &script.steps {
        let t: BTreeMap<Dart, Dart> = s.transitions.iter().copied().collect();
        let c = choice_from_transitions(&trace.last, &s.target, &t)?;
        trace.push(c)?;
    }
    Ok(trace)
}

/// A family of directed closed walks given as dart sequences.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectedCycleFamily {
    pub cycles: Vec<Vec<Dart>>,
}

/// Collect the cycles emitted by a complete trace.
pub fn extract_dcdc(trace: &ReductionTrace) -> Result<DirectedCycleFamily> {
    if !trace.is_complete() {
        return Err(Error::IncompleteReduction);
    }
    Ok(DirectedCycleFamily {
        cycles: trace
            .steps
            .iter()
            .flat_map(|s| s.cycles.iter().cloned())
            .collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub ok: bool,
    pub diagnostics: Vec<String>,
}

/// Check that every member is a directed cycle of `g` and every edge is traversed
/// exactly once in each direction.
pub fn verify_dcdc(g: &Multigraph, family: &DirectedCycleFamily) -> Verdict {
    let mut diag = Vec::new();
    let mut used: BTreeMap<Dart, usize> = BTreeMap::new();
    for (i, c) in family.cycles.iter().enumerate() {
        if c.is_empty() {
            diag.push(format!("cycle {i} is empty"));
            continue;
        }
        let mut verts = BTreeSet::new();
        for (k, d) in c.iter().enumerate() {
            match g.endpoints(d.edge) {
                Ok((a, b)) if (a == d.tail && b == d.head) || (a == d.head && b == d.tail) => {}
                _ => diag.push(format!(
                    "cycle {i}: {} is not an edge {}-{}",
                    d.edge, d.tail, d.head
                )),
            }
            let next = c[(k + 1) % c.len()];
            if d.head != next.tail {
                diag.push(format!("cycle {i} is not closed at position {k}"));
            }
            if !verts.insert(d.tail) {
                diag.push(format!("cycle {i} repeats vertex {}", d.tail));
            }
            *used.entry(*d).or_default() += 1;
        }
        if c.len() == 2 && c[0].edge == c[1].edge {
            diag.push(format!("cycle {i} runs back along one edge"));
        }
    }
    for (e, u, v) in g.edges() {
        for d in [Dart::new(e, u, v), Dart::new(e, v, u)] {
            match used.get(&d).copied().unwrap_or(0) {
                1 => {}
                n => diag.push(format!(
                    "{} from {} to {} used {n} times",
                    e, d.tail, d.head
                )),
            }
        }
    }
    for d in used.keys() {
        if !g.has_edge(d.edge) {
            diag.push(format!("{} is not an edge", d.edge));
        }
    }
    Verdict {
        ok: diag.is_empty(),
        diagnostics: diag,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::RotationSystem;
    use crate::graph::{named, EdgeId};

    fn v(i: u32) -> VertexId {
        VertexId(i)
    }

    fn singletons(g: &Multigraph) -> Vec<Vec<VertexId>> {
        g.vertices().map(|x| vec![x]).collect()
    }

    #[test]
    fn single_vertex_of_cubic_graph_has_two_reductions() {
        let m = MixedGraph::from_graph(&named::k4());
        let cs = enumerate_correct_reductions(&m, &[v(0)]).unwrap();
        assert_eq!(cs.len(), 2);
        for c in &cs {
            assert_eq!(c.paths.len(), 3);
            assert!(c.cycles.is_empty());
            let a = apply(&m, c).unwrap();
            a.graph.check_degree_discipline().unwrap();
        }
    }

    #[test]
    fn backtracking_agrees_with_enumeration() {
        let g = named::petersen();
        let m = MixedGraph::from_graph(&g);
        let order: Vec<VertexId> = g.vertices().collect();
        for cut in 1..=4 {
            let part: Vec<VertexId> = order[..cut].to_vec();
            let all = enumerate_correct_reductions(&m, &part).unwrap();
            let one = find_correct_reduction(&m, &part, 1_000_000).unwrap();
            assert_eq!(all.first().cloned(), one);
        }
        let whole = find_correct_reduction(&m, &order, 1_000_000).unwrap();
        if let Some(c) = whole {
            let a = apply(&m, &c).unwrap();
            let fam = DirectedCycleFamily { cycles: a.cycles };
            assert!(verify_dcdc(&g, &fam).ok);
        }
    }

    #[test]
    fn stale_choice_is_rejected() {
        let m = MixedGraph::from_graph(&named::k4());
        let c = enumerate_correct_reductions(&m, &[v(0)]).unwrap().remove(0);
        let next = apply(&m, &c).unwrap().graph;
        assert_eq!(apply(&next, &c), Err(Error::StaleChoice));
    }

    #[test]
    fn k4_singleton_runs_give_dcdc() {
        let g = named::k4();
        let m = MixedGraph::from_graph(&g);
        for seed in 0..20 {
            match run_ccr(&m, &singletons(&g), &Strategy::Seeded(seed)).unwrap() {
                CcrOutcome::Complete(trace) => {
                    trace.check_chain().unwrap();
                    let fam = extract_dcdc(&trace).unwrap();
                    let verdict = verify_dcdc(&g, &fam);
                    assert!(verdict.ok, "{:?}", verdict.diagnostics);
                }
                CcrOutcome::Stuck { .. } => {}
            }
        }
    }

    #[test]
    fn verify_rejects_bad_families() {
        let g = named::k4();
        let e = |a: u32, b: u32| g.find_edge(v(a), v(b)).unwrap();
        let tri = |a: u32, b: u32, c: u32| {
            vec![
                Dart::new(e(a, b), v(a), v(b)),
                Dart::new(e(b, c), v(b), v(c)),
                Dart::new(e(c, a), v(c), v(a)),
            ]
        };
        // The four faces of planar K4, oriented consistently.
        let good = DirectedCycleFamily {
            cycles: vec![tri(0, 1, 2), tri(1, 0, 3), tri(2, 1, 3), tri(0, 2, 3)],
        };
        assert!(
            verify_dcdc(&g, &good).ok,
            "{:?}",
            verify_dcdc(&g, &good).diagnostics
        );
        let mut bad = good.clone();
        bad.cycles.pop();
        assert!(!verify_dcdc(&g, &bad).ok);
        let back = DirectedCycleFamily {
            cycles: vec![vec![
                Dart::new(e(0, 1), v(0), v(1)),
                Dart::new(e(0, 1), v(1), v(0)),
            ]],
        };
        assert!(!verify_dcdc(&g, &back).ok);
        let unknown = DirectedCycleFamily {
            cycles: vec![vec![Dart::new(EdgeId(99), v(0), v(0))]],
        };
        assert!(!verify_dcdc(&g, &unknown).ok);
    }

    #[test]
    fn transitions_replay_a_planar_face_cover() {
        let g = named::k4();
        let e = |a: u32, b: u32| g.find_edge(v(a), v(b)).unwrap();
        let mut order = BTreeMap::new();
        order.insert(v(0), vec![e(0, 1), e(0, 3), e(0, 2)]);
        order.insert(v(1), vec![e(1, 2), e(1, 3), e(1, 0)]);
        order.insert(v(2), vec![e(2, 0), e(2, 3), e(2, 1)]);
        order.insert(v(3), vec![e(3, 0), e(3, 1), e(3, 2)]);
        let rot = RotationSystem { order };
        let t = rot.face_transitions(&g).unwrap();
        let m = MixedGraph::from_graph(&g);
        let CcrOutcome::Complete(trace) =
            run_ccr(&m, &singletons(&g), &Strategy::Scripted(t.clone())).unwrap()
        else {
            panic!("face transitions must reduce");
        };
        let fam = extract_dcdc(&trace).unwrap();
        assert!(verify_dcdc(&g, &fam).ok);
        assert_eq!(fam.cycles.len(), 4);
        assert_eq!(trace.transitions(), t);
        let again = replay(&m, &trace.script()).unwrap();
        assert_eq!(again, trace);
        // Reducing the whole vertex set at once with the same transitions.
        let all: Vec<VertexId> = g.vertices().collect();
        let c = choice_from_transitions(&m, &all, &t).unwrap();
        assert_eq!(c.cycles.len(), 4);
        assert!(c.paths.is_empty());
    }
}
