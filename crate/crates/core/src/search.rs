//! Search for reduction processes of ear decompositions that never meet a
//! cut-obstacle at a 3-ear, and the facial reduction of planar trigraphs.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ear::{EarDecomposition, EarMode};
use crate::embedding::RotationSystem;
use crate::error::{Error, Result};
use crate::gadget::TrigraphConstruction;
use crate::graph::{Multigraph, VertexId};
use crate::mixed::MixedGraph;
use crate::reduce::{
    enumerate_correct_reductions, replay, run_ccr, CcrOutcome, ReductionChoice, ReductionTrace,
    Strategy, TraceScript,
};

/// The joint `x` and replica `u` of a gadget, checked when the search reaches
/// `ear`, the first ear of the gadget in reduction order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Joint {
    pub ear: usize,
    pub x: VertexId,
    pub u: VertexId,
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    /// Maximum number of search nodes.
    pub budget: u64,
    /// Permute the branch order with this seed.
    pub seed: Option<u64>,
    /// Gadget joints to test before descending into their blocks.
    pub joints: Vec<Joint>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            budget: 1_000_000,
            seed: None,
            joints: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    pub nodes: u64,
    pub cut_prunes: u64,
    pub inner_prunes: u64,
    pub joint_prunes: u64,
    pub memo_hits: u64,
    /// Lowest ear index whose turn was reached.
    pub deepest: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObstacleKind {
    /// The interior of a 3-ear is a cut-obstacle at its turn.
    CutObstacle,
    /// The gadget joint does not carry exactly one of the arcs `x -> u`, `u -> x`.
    JointMismatch { x: VertexId, u: VertexId },
}

/// A replayable certificate for a dead end: the reductions leading to it, the
/// ear at which it occurs and its kind.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub prefix: TraceScript,
    pub ear: usize,
    pub kind: ObstacleKind,
    /// Boundary edges and boundary arcs of the ear interior.
    pub census: (usize, usize),
}

impl Witness {
    /// Replay the prefix on `h` and confirm the obstacle.
    pub fn check(&self, h: &Multigraph, ed: &EarDecomposition) -> Result<bool> {
        let n = ed.ears.len();
        if self.ear >= n || self.prefix.steps.len() != n - 1 - self.ear {
            return Ok(false);
        }
        for (k, s) in self.prefix.steps.iter().enumerate() {
            if !ed.ears[n - 1 - k].has_interior(&s.target) {
                return Ok(false);
            }
        }
        let trace = replay(&MixedGraph::from_graph(h), &self.prefix)?;
        let m = &trace.last;
        let set: BTreeSet<VertexId> = ed.ears[self.ear].internal().iter().copied().collect();
        Ok(match self.kind {
            ObstacleKind::CutObstacle => {
                let b = m.boundary(&set);
                ed.ears[self.ear].is_k_ear(3)
                    && m.is_cut_obstacle(&set)
                    && (b.edges.len(), b.arc_count()) == self.census
            }
            ObstacleKind::JointMismatch { x, u } => {
                let (a, b) = joint_equalities(m, x, u);
                a == b
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchStatus {
    /// A ccr of `I(L_n), ..., I(L_j)` (ears numbered from 1) that never meets a
    /// cut-obstacle at a 3-ear; for `j > 1` the ear `L_{j-1}` has no correct
    /// reduction.
    Superb {
        trace: ReductionTrace,
        j: usize,
    },
    /// Every branch ends at an obstacle. `ear` is the deepest one reached,
    /// `j = ear + 2`.
    Stuck {
        j: usize,
        ear: usize,
        witness: Witness,
    },
    BudgetExhausted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchOutcome {
    pub status: SearchStatus,
    pub stats: SearchStats,
}

/// Whether the single out-arc of `x` is the in-arc of `u`, and whether the single
/// out-arc of `u` is the in-arc of `x`.
pub fn joint_equalities(m: &MixedGraph, x: VertexId, u: VertexId) -> (bool, bool) {
    let to = |a: VertexId, b: VertexId| {
        m.out_arcs(a)
            .iter()
            .any(|&id| m.arc(id).map(|r| r.head) == Some(b))
    };
    (to(x, u), to(u, x))
}

/// Joints of the gadgets of a construction whose blocks are plain gadgets in
/// `ed`: the 3-ear through the joint is present and the block is contiguous.
pub fn gadget_joints(tc: &TrigraphConstruction, ed: &EarDecomposition) -> Vec<Joint> {
    let mut out = Vec::new();
    for g in &tc.gadgets {
        let members: BTreeSet<VertexId> = g.vertices().into_iter().collect();
        let idx: Vec<usize> = (0..ed.ears.len())
            .filter(|&i| ed.ears[i].internal().iter().all(|v| members.contains(v)))
            .collect();
        let plain = ed.ears.iter().any(|e| {
            e.is_k_ear(3)
                && e.internal().iter().copied().collect::<BTreeSet<_>>()
                    == BTreeSet::from([g.z, g.y, g.x])
        });
        let contiguous = idx.windows(2).all(|w| w[1] == w[0] + 1);
        if plain && contiguous && idx.len() == 7 {
            out.push(Joint {
                ear: *idx.last().unwrap(),
                x: g.x,
                u: g.u,
            });
        }
    }
    out
}

/// Orders the choices at each ear: lower ranks are tried first.
pub type Rank<'a> = &'a dyn Fn(&MixedGraph, &ReductionChoice) -> Result<u32>;

struct Searcher<'a> {
    ed: &'a EarDecomposition,
    stop: usize,
    rank: Option<Rank<'a>>,
    /// Never reduced by the search, so arcs among these vertices are inert.
    h0: BTreeSet<VertexId>,
    interiors: Vec<Vec<VertexId>>,
    joints: BTreeMap<usize, Joint>,
    budget: u64,
    rng: Option<ChaCha8Rng>,
    stats: SearchStats,
    failed: HashSet<(usize, u64, Vec<(VertexId, VertexId)>, Vec<(usize, usize)>)>,
    partial: Option<(usize, ReductionTrace)>,
    witness: Option<Witness>,
}

enum Flow {
    Found,
    Fail,
    Budget,
}

impl Searcher<'_> {
    fn record(&mut self, trace: &ReductionTrace, ear: usize, kind: ObstacleKind, m: &MixedGraph) {
        if self.witness.as_ref().is_some_and(|w| w.ear <= ear) {
            return;
        }
        let set: BTreeSet<VertexId> = self.interiors[ear].iter().copied().collect();
        let b = m.boundary(&set);
        self.witness = Some(Witness {
            prefix: trace.script(),
            ear,
            kind,
            census: (b.edges.len(), b.arc_count()),
        });
    }

    /// Reduce ears `0..=k` (in decreasing order) starting from `trace.last`.
    fn dfs(&mut self, k: Option<usize>, trace: &mut ReductionTrace) -> Result<Flow> {
        let Some(k) = k.filter(|&k| k >= self.stop) else {
            return Ok(Flow::Found);
        };
        self.stats.nodes += 1;
        if self.stats.nodes > self.budget {
            return Ok(Flow::Budget);
        }
        self.stats.deepest = Some(self.stats.deepest.map_or(k, |d| d.min(k)));
        let m = trace.last.clone();
        let u = self.interiors[k].clone();
        let set: BTreeSet<VertexId> = u.iter().copied().collect();
        let three = self.ed.ears[k].is_k_ear(3);
        if three && m.is_cut_obstacle(&set) {
            self.stats.cut_prunes += 1;
            self.record(trace, k, ObstacleKind::CutObstacle, &m);
            return Ok(Flow::Fail);
        }
        if let Some(j) = self.joints.get(&k).copied() {
            let (a, b) = joint_equalities(&m, j.x, j.u);
            if a == b {
                self.stats.joint_prunes += 1;
                self.record(trace, k, ObstacleKind::JointMismatch { x: j.x, u: j.u }, &m);
                return Ok(Flow::Fail);
            }
        }
        let h0 = &self.h0;
        let (ends, pairs, edges) =
            m.canonical_key_of(|a| !(h0.contains(&a.tail) && h0.contains(&a.head)));
        let key = (k, edges.len() as u64, ends, pairs);
        if self.failed.contains(&key) {
            self.stats.memo_hits += 1;
            return Ok(Flow::Fail);
        }
        let mut choices = enumerate_correct_reductions(&m, &u)?;
        if choices.is_empty() {
            if three && m.is_inner_obstacle([u[0], u[1], u[2]])? {
                self.stats.inner_prunes += 1;
            }
            let j = k + 2;
            if self.partial.as_ref().is_none_or(|(pj, _)| j < *pj) {
                self.partial = Some((j, trace.clone()));
            }
        }
        if let Some(rng) = self.rng.as_mut() {
            choices.shuffle(rng);
        }
        if let Some(rank) = self.rank {
            let mut keyed = Vec::with_capacity(choices.len());
            for c in choices {
                keyed.push((rank(&m, &c)?, c));
            }
            keyed.sort_by_key(|p| p.0);
            choices = keyed.into_iter().map(|p| p.1).collect();
        }
        for c in choices {
            trace.push(c)?;
            match self.dfs(k.checked_sub(1), trace)? {
                Flow::Found => return Ok(Flow::Found),
                Flow::Budget => return Ok(Flow::Budget),
                Flow::Fail => {
                    let s = trace.steps.pop().expect("pushed step");
                    trace.last = s.before;
                }
            }
        }
        self.failed.insert(key);
        Ok(Flow::Fail)
    }
}

/// Search for a reduction process of `ed` on `h` that reduces every ear interior
/// without meeting a cut-obstacle at a 3-ear. Falls back to the deepest
/// acceptable partial process, or a witness when every branch is blocked.
pub fn superb_search(
    h: &Multigraph,
    ed: &EarDecomposition,
    config: &SearchConfig,
) -> Result<SearchOutcome> {
    superb_search_from(
        ed,
        ReductionTrace::new(MixedGraph::from_graph(h)),
        0,
        config,
        None,
    )
}

/// Continue the search from `prefix`, a trace reducing the last ears of `ed`
/// from its plain start, and stop once ear `stop` is reduced. A complete run
/// reports `Superb` with `j = stop + 1`. `rank` orders the choices at each ear.
pub fn superb_search_from(
    ed: &EarDecomposition,
    prefix: ReductionTrace,
    stop: usize,
    config: &SearchConfig,
    rank: Option<Rank>,
) -> Result<SearchOutcome> {
    let h = prefix.start().graph();
    let val = ed.validate(h, EarMode::Trigraph);
    if !val.ok {
        return Err(Error::InvalidEarDecomposition(val.diagnostics.join("; ")));
    }
    let n = ed.ears.len();
    if prefix.steps.len() > n {
        return Err(Error::NotApplicable(
            "prefix longer than the decomposition".into(),
        ));
    }
    for (k, s) in prefix.steps.iter().enumerate() {
        if !ed.ears[n - 1 - k].has_interior(&s.choice.target) {
            return Err(Error::NotApplicable(format!(
                "prefix step {k} does not reduce ear {}",
                n - 1 - k
            )));
        }
    }
    let mut s = Searcher {
        ed,
        stop,
        rank,
        h0: ed.h0.iter().copied().collect(),
        interiors: ed.ears.iter().map(|e| e.internal().to_vec()).collect(),
        joints: config.joints.iter().map(|j| (j.ear, *j)).collect(),
        budget: config.budget,
        rng: config.seed.map(ChaCha8Rng::seed_from_u64),
        stats: SearchStats::default(),
        failed: HashSet::new(),
        partial: None,
        witness: None,
    };
    let mut trace = prefix;
    let top = (n - trace.steps.len()).checked_sub(1);
    let flow = s.dfs(top, &mut trace)?;
    let status = match flow {
        Flow::Found => SearchStatus::Superb { trace, j: stop + 1 },
        Flow::Budget => SearchStatus::BudgetExhausted,
        Flow::Fail => match (s.partial, s.witness) {
            (Some((j, trace)), _) => SearchStatus::Superb { trace, j },
            (None, Some(w)) => SearchStatus::Stuck {
                j: w.ear + 2,
                ear: w.ear,
                witness: w,
            },
            (None, None) => {
                return Err(Error::Construction(
                    "search failed without a witness".into(),
                ))
            }
        },
    };
    Ok(SearchOutcome {
        status,
        stats: s.stats,
    })
}

/// Reduction order of an ear decomposition: interiors from the last ear to the
/// first, then the initial cycle.
pub fn reduction_partition(ed: &EarDecomposition) -> Vec<Vec<VertexId>> {
    let mut parts: Vec<Vec<VertexId>> = ed
        .ears
        .iter()
        .rev()
        .map(|e| e.internal().to_vec())
        .collect();
    parts.push(ed.h0.clone());
    parts
}

/// Reduce a planar trigraph following its faces: at every vertex each incoming
/// dart continues along its face. The resulting trace is complete and emits the
/// facial cycles.
pub fn planar_ccr(
    h: &Multigraph,
    ed: &EarDecomposition,
    rot: &RotationSystem,
) -> Result<ReductionTrace> {
    if !rot.is_planar_embedding(h)? {
        return Err(Error::Embedding("rotation system is not planar".into()));
    }
    let t = rot.face_transitions(h)?;
    match run_ccr(
        &MixedGraph::from_graph(h),
        &reduction_partition(ed),
        &Strategy::Scripted(t),
    )? {
        CcrOutcome::Complete(trace) => Ok(trace),
        CcrOutcome::Stuck { step, .. } => Err(Error::NoMatchingReduction(
            reduction_partition(ed)[step].clone(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ear::{find_super_robust, SearchOutcome as EarSearch};
    use crate::gadget::build_h;
    use crate::graph::named;
    use crate::reduce::{extract_dcdc, verify_dcdc};

    fn k4_rotation() -> (Multigraph, RotationSystem) {
        let g = named::k4();
        // Vertices 0,1,2 on the outer face, 3 in the middle.
        let mut order = BTreeMap::new();
        let nb = |v: u32, ws: [u32; 3]| -> Vec<_> {
            ws.iter()
                .map(|&w| g.find_edge(VertexId(v), VertexId(w)).unwrap())
                .collect()
        };
        order.insert(VertexId(0), nb(0, [1, 3, 2]));
        order.insert(VertexId(1), nb(1, [2, 3, 0]));
        order.insert(VertexId(2), nb(2, [0, 3, 1]));
        order.insert(VertexId(3), nb(3, [0, 1, 2]));
        (g.clone(), RotationSystem { order })
    }

    #[test]
    fn k4_facial_reduction() {
        let (g, rot) = k4_rotation();
        assert_eq!(rot.faces(&g).unwrap().len(), 4);
        let EarSearch::Found(ed) = find_super_robust(&g, 10_000).unwrap() else {
            panic!()
        };
        let trace = planar_ccr(&g, &ed, &rot).unwrap();
        let fam = extract_dcdc(&trace).unwrap();
        assert_eq!(fam.cycles.len(), 4);
        assert!(verify_dcdc(&g, &fam).ok);
    }

    #[test]
    fn k4_construction_is_superb() {
        let g = named::k4();
        let EarSearch::Found(ed) = find_super_robust(&g, 10_000).unwrap() else {
            panic!()
        };
        let tc = build_h(&g, &ed).unwrap();
        let out = superb_search(&tc.h, &tc.canonical, &SearchConfig::default()).unwrap();
        match &out.status {
            SearchStatus::Superb { trace, j } => {
                assert_eq!(*j, 1);
                trace.check_chain().unwrap();
                let again = replay(trace.start(), &trace.script()).unwrap();
                assert_eq!(&again, trace);
            }
            SearchStatus::Stuck { witness, .. } => {
                assert!(witness.check(&tc.h, &tc.canonical).unwrap());
            }
            SearchStatus::BudgetExhausted => panic!("budget"),
        }
        eprintln!(
            "{:?} {:?}",
            matches!(out.status, SearchStatus::Superb { .. }),
            out.stats
        );
    }
}
