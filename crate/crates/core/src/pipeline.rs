//! From a reduction process of a gadget trigraph to a directed cycle double
//! cover of the original graph: the reductions of `H` are mirrored block by
//! block on `G'`, the triangle is reduced last, and the cycles are mapped back
//! through the Y-Δ step.

use std::collections::{BTreeMap, BTreeSet};

use crate::ear::EarDecomposition;
use crate::error::{Error, Result};
use crate::gadget::TrigraphConstruction;
use crate::graph::{Dart, EdgeId, Multigraph, VertexId};
use crate::mixed::MixedGraph;
use crate::reduce::{
    choice_from_transitions, enumerate_correct_reductions, extract_dcdc, verify_dcdc,
    DirectedCycleFamily, ReductionTrace, Verdict,
};

/// Result of mirroring a complete process on `G'`.
#[derive(Clone, Debug)]
pub struct Extraction {
    /// Reduction of `G'`: one step per block, then the triangle.
    pub gp_trace: ReductionTrace,
    pub gp_family: DirectedCycleFamily,
    pub g_family: DirectedCycleFamily,
    pub gp_verdict: Verdict,
    pub verdict: Verdict,
    /// Owner sets of `G'` in the order they were reduced.
    pub blocks: Vec<Vec<VertexId>>,
}

/// Blocks of consecutive ears with their owners, in ear order. An ear spanning
/// several owners joins them into one block; a new block starts at the first
/// ear whose owners are disjoint from the current block.
pub fn owner_blocks(
    tc: &TrigraphConstruction,
    ed: &EarDecomposition,
) -> Result<Vec<(Vec<VertexId>, Vec<usize>)>> {
    let own = tc.owner_map();
    let mut blocks: Vec<(BTreeSet<VertexId>, Vec<usize>)> = Vec::new();
    for (i, ear) in ed.ears.iter().enumerate() {
        let owners: BTreeSet<VertexId> = ear
            .internal()
            .iter()
            .map(|v| {
                own.get(v)
                    .copied()
                    .ok_or_else(|| Error::NotApplicable(format!("vertex {v} has no owner")))
            })
            .collect::<Result<_>>()?;
        match blocks.last_mut() {
            Some((set, list)) if !set.is_disjoint(&owners) => {
                set.extend(owners);
                list.push(i);
            }
            _ => blocks.push((owners, vec![i])),
        }
    }
    let total: usize = blocks.iter().map(|b| b.0.len()).sum();
    let distinct: BTreeSet<VertexId> = blocks.iter().flat_map(|b| b.0.iter().copied()).collect();
    if distinct.len() != total {
        return Err(Error::NotApplicable(
            "the ears of an owner are not consecutive".into(),
        ));
    }
    Ok(blocks
        .into_iter()
        .map(|(s, l)| (s.into_iter().collect(), l))
        .collect())
}

/// Map each edge of `h` joining two different owners to an edge of `G'`.
fn edge_map(tc: &TrigraphConstruction, h: &Multigraph) -> Result<BTreeMap<EdgeId, EdgeId>> {
    let own = tc.owner_map();
    let key = |a: VertexId, b: VertexId| (a.min(b), a.max(b));
    let mut hs: BTreeMap<(VertexId, VertexId), Vec<EdgeId>> = BTreeMap::new();
    for (e, a, b) in h.edges() {
        if let (Some(&oa), Some(&ob)) = (own.get(&a), own.get(&b)) {
            if oa != ob && !(tc.v0.contains(&a) && tc.v0.contains(&b)) {
                hs.entry(key(oa, ob)).or_default().push(e);
            }
        }
    }
    let tri: BTreeSet<EdgeId> = tc.ydelta.triangle.iter().copied().collect();
    let mut gs: BTreeMap<(VertexId, VertexId), Vec<EdgeId>> = BTreeMap::new();
    for (e, a, b) in tc.gp().edges() {
        if !tri.contains(&e) {
            gs.entry(key(a, b)).or_default().push(e);
        }
    }
    if hs
        .iter()
        .map(|(k, v)| (k, v.len()))
        .ne(gs.iter().map(|(k, v)| (k, v.len())))
    {
        return Err(Error::NotApplicable("H does not contract onto G'".into()));
    }
    let mut map = BTreeMap::new();
    for (k, he) in hs {
        for (a, b) in he.into_iter().zip(gs[&k].iter().copied()) {
            map.insert(a, b);
        }
    }
    Ok(map)
}

/// Γ-contraction of walks of `H` onto `G'`: darts inside a gadget vanish, the
/// others become darts between owners.
#[derive(Clone, Debug)]
pub struct Contraction {
    own: BTreeMap<VertexId, VertexId>,
    edges: BTreeMap<EdgeId, EdgeId>,
}

impl Contraction {
    pub fn new(tc: &TrigraphConstruction, h: &Multigraph) -> Result<Self> {
        Ok(Contraction {
            own: tc.owner_map(),
            edges: edge_map(tc, h)?,
        })
    }

    pub fn walk(&self, darts: &[Dart]) -> Vec<Dart> {
        darts
            .iter()
            .filter_map(|d| {
                self.edges
                    .get(&d.edge)
                    .map(|&e| Dart::new(e, self.own[&d.tail], self.own[&d.head]))
            })
            .collect()
    }
}

/// Mirror the complete process `trace` of `ed` on `G'`, reduce the triangle and
/// map the cycles back to `G`. After each block the arcs of both sides are
/// compared under Γ. A cycle inside the triangle contracts away.
pub fn extract_lockstep(
    tc: &TrigraphConstruction,
    ed: &EarDecomposition,
    trace: &ReductionTrace,
) -> Result<Extraction> {
    let n = ed.ears.len();
    if trace.steps.len() != n {
        return Err(Error::IncompleteReduction);
    }
    for (k, s) in trace.steps.iter().enumerate() {
        if !ed.ears[n - 1 - k].has_interior(&s.choice.target) {
            return Err(Error::NotApplicable(format!(
                "step {k} does not reduce ear {}",
                n - 1 - k
            )));
        }
    }
    let blocks = owner_blocks(tc, ed)?;
    let h = trace.start().graph().clone();
    let con = Contraction::new(tc, &h)?;

    let mut gp_trace = ReductionTrace::new(MixedGraph::from_graph(tc.gp()));
    let mut order = Vec::new();
    for (owners, ears) in blocks.iter().rev() {
        let first = *ears.first().unwrap();
        let last = *ears.last().unwrap();
        let steps = n - 1 - last..=n - 1 - first;
        let after = trace
            .steps
            .get(n - first)
            .map(|s| &s.before)
            .unwrap_or(&trace.last);
        let mut walks: Vec<(Vec<Dart>, bool)> = after
            .arcs()
            .map(|a| (con.walk(&a.expansion), false))
            .collect();
        for k in steps {
            for c in &trace.steps[k].cycles {
                walks.push((con.walk(c), true));
            }
        }
        let mut t: BTreeMap<Dart, Dart> = BTreeMap::new();
        for (w, closed) in &walks {
            let m = w.len();
            let pairs = if *closed { m } else { m.saturating_sub(1) };
            for i in 0..pairs {
                let (d1, d2) = (w[i], w[(i + 1) % m]);
                if !owners.contains(&d1.head) {
                    continue;
                }
                if d2.tail != d1.head || t.insert(d1, d2).is_some_and(|p| p != d2) {
                    return Err(Error::NotApplicable(format!(
                        "inconsistent passage through {}",
                        d1.head
                    )));
                }
            }
        }
        let choice = choice_from_transitions(&gp_trace.last, owners, &t)
            .map_err(|e| Error::NotApplicable(format!("block {owners:?}: {e}")))?;
        gp_trace.push(choice)?;
        check_arcs(&con, after, &gp_trace.last)
            .map_err(|e| Error::NotApplicable(format!("after block {owners:?}: {e}")))?;
        order.push(owners.clone());
    }

    let mut tri: Vec<VertexId> = gp_trace.last.vertices().collect();
    tri.sort();
    let expected: BTreeSet<VertexId> = [tc.ydelta.x0, tc.ydelta.y0, tc.ydelta.v0].into();
    if tri.iter().copied().collect::<BTreeSet<_>>() != expected {
        return Err(Error::NotApplicable(
            "remainder of G' is not the triangle".into(),
        ));
    }
    let last = enumerate_correct_reductions(&gp_trace.last, &tri)?
        .into_iter()
        .next()
        .ok_or_else(|| Error::NoMatchingReduction(tri.clone()))?;
    gp_trace.push(last)?;

    let gp_family = extract_dcdc(&gp_trace)?;
    let gp_verdict = verify_dcdc(tc.gp(), &gp_family);
    let g_family = DirectedCycleFamily {
        cycles: gp_family
            .cycles
            .iter()
            .map(|c| {
                c.iter()
                    .filter_map(|&d| tc.ydelta.contract_dart(d))
                    .collect::<Vec<_>>()
            })
            .filter(|c| !c.is_empty())
            .collect(),
    };
    let verdict = verify_dcdc(&tc.g, &g_family);
    Ok(Extraction {
        gp_trace,
        gp_family,
        g_family,
        gp_verdict,
        verdict,
        blocks: order,
    })
}

/// Arcs of `G'` must be the Γ-contractions of the arcs of `H` joining owned
/// vertices, and forbidden pairs must be forbidden on both sides.
fn check_arcs(
    con: &Contraction,
    mh: &MixedGraph,
    mg: &MixedGraph,
) -> std::result::Result<(), String> {
    let mut images: BTreeMap<Vec<Dart>, Vec<crate::mixed::ArcId>> = BTreeMap::new();
    for a in mh.arcs() {
        if con.own.contains_key(&a.tail) && con.own.contains_key(&a.head) {
            images.entry(con.walk(&a.expansion)).or_default().push(a.id);
        }
    }
    let mut image_of = BTreeMap::new();
    for a in mg.arcs() {
        let list = images
            .get_mut(&a.expansion)
            .filter(|l| !l.is_empty())
            .ok_or_else(|| format!("arc {} has no image", a.id))?;
        image_of.insert(a.id, list.pop().unwrap());
    }
    if images.values().any(|l| !l.is_empty()) {
        return Err("H has an arc between owners without a counterpart".into());
    }
    for (a, b) in mg.forbidden() {
        if !mh.is_forbidden(image_of[&a], image_of[&b]) {
            return Err(format!("forbidden pair {a},{b} is not forbidden in H"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ear::{find_super_robust, SearchOutcome as EarSearch};
    use crate::gadget::build_h;
    use crate::graph::named;
    use crate::search::{superb_search, SearchConfig, SearchStatus};

    #[test]
    fn named_graphs_end_to_end() {
        for (name, g, superb) in [
            ("k4", named::k4(), true),
            ("prism", named::prism(), true),
            ("k33", named::k33(), false),
        ] {
            let EarSearch::Found(ed) = find_super_robust(&g, 100_000).unwrap() else {
                panic!()
            };
            let tc = build_h(&g, &ed).unwrap();
            let out = superb_search(&tc.h, &tc.canonical, &SearchConfig::default()).unwrap();
            match out.status {
                SearchStatus::Superb { trace, j: 1 } => {
                    assert!(superb, "{name}");
                    let ex = extract_lockstep(&tc, &tc.canonical, &trace).unwrap();
                    assert!(ex.gp_verdict.ok, "{name}: {:?}", ex.gp_verdict);
                    assert!(ex.verdict.ok, "{name}: {:?}", ex.verdict);
                }
                SearchStatus::Stuck { witness, .. } => {
                    assert!(!superb, "{name}");
                    assert!(witness.check(&tc.h, &tc.canonical).unwrap());
                }
                other => panic!("{name}: {other:?}"),
            }
        }
    }
}
