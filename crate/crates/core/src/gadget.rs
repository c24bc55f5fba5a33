//! Trigraph construction from a super robust ear decomposition: every internal
//! vertex of a path ear becomes a basic gadget hanging off a long initial cycle.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::ear::{Ear, EarDecomposition, EarKind, EarMode};
use crate::error::{Error, Result};
use crate::graph::{Multigraph, VertexId, YDelta};

/// Vertex names of one basic gadget. `x` is the joint, `u` the replica, and
/// `b, z, y` the fixed path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GadgetRoles {
    /// The vertex of the Y-Δ graph this gadget stands for.
    pub owner: VertexId,
    pub a_prime: VertexId,
    pub w_prime: VertexId,
    pub b_prime: VertexId,
    pub a: VertexId,
    pub w: VertexId,
    pub b: VertexId,
    pub z: VertexId,
    pub y: VertexId,
    pub x: VertexId,
    pub u: VertexId,
    pub v: VertexId,
    pub d1: VertexId,
    pub d2: VertexId,
    pub d3: VertexId,
    /// Attachment vertices on the initial cycle: two for E1, one for E2, two each
    /// for D2 and D3.
    pub attach: [VertexId; 7],
}

impl GadgetRoles {
    pub fn vertices(&self) -> [VertexId; 14] {
        [
            self.a_prime,
            self.w_prime,
            self.b_prime,
            self.a,
            self.w,
            self.b,
            self.z,
            self.y,
            self.x,
            self.u,
            self.v,
            self.d1,
            self.d2,
            self.d3,
        ]
    }

    pub fn e1(&self) -> Vec<VertexId> {
        vec![
            self.attach[0],
            self.a_prime,
            self.w_prime,
            self.b_prime,
            self.attach[1],
        ]
    }

    pub fn e2(&self) -> Vec<VertexId> {
        vec![self.b_prime, self.b, self.w, self.a, self.attach[2]]
    }

    pub fn e4(&self) -> Vec<VertexId> {
        vec![self.z, self.u, self.v, self.y]
    }

    pub fn d1_star(&self) -> Vec<VertexId> {
        vec![self.d1, self.a_prime, self.w, self.v]
    }

    pub fn d2_star(&self) -> Vec<VertexId> {
        vec![self.d2, self.w_prime, self.attach[3], self.attach[4]]
    }

    pub fn d3_star(&self) -> Vec<VertexId> {
        vec![self.d3, self.a, self.attach[5], self.attach[6]]
    }

    pub fn fixed_path(&self) -> [VertexId; 3] {
        [self.b, self.z, self.y]
    }
}

/// Everything produced by [`build_h`].
#[derive(Clone, Debug)]
pub struct TrigraphConstruction {
    /// The input graph.
    pub g: Multigraph,
    /// The input decomposition, with trailing edges absorbed into stars.
    pub g_decomposition: EarDecomposition,
    /// The Y-Δ graph `G'` and its bookkeeping.
    pub ydelta: YDelta,
    /// Decomposition of `G'` from the triangle.
    pub gp_decomposition: EarDecomposition,
    pub h: Multigraph,
    pub canonical: EarDecomposition,
    /// Designated vertices on the initial cycle standing for `x0, y0, v0`.
    pub v0: [VertexId; 3],
    /// Gadgets in creation order.
    pub gadgets: Vec<GadgetRoles>,
    /// Star centers of `G'` and their images in `H` (the same role, new id).
    pub stars: Vec<(VertexId, VertexId)>,
    /// Γ on vertices of `G'`: replica for path-internal vertices, identity-like
    /// images for stars and triangle vertices.
    pub gamma: BTreeMap<VertexId, VertexId>,
}

impl TrigraphConstruction {
    pub fn gp(&self) -> &Multigraph {
        &self.ydelta.graph
    }

    /// Fixed paths, one per gadget.
    pub fn fixed_paths(&self) -> Vec<[VertexId; 3]> {
        self.gadgets.iter().map(|g| g.fixed_path()).collect()
    }

    /// Owner in `G'` of each vertex of `H` that is not on the initial cycle
    /// (or is one of the three designated vertices).
    pub fn owner_map(&self) -> BTreeMap<VertexId, VertexId> {
        let mut m = BTreeMap::new();
        for g in &self.gadgets {
            for v in g.vertices() {
                m.insert(v, g.owner);
            }
        }
        for &(s, hs) in &self.stars {
            m.insert(hs, s);
        }
        let tri = [self.ydelta.x0, self.ydelta.y0, self.ydelta.v0];
        for (k, &hv) in self.v0.iter().enumerate() {
            m.insert(hv, tri[k]);
        }
        m
    }

    pub fn gadget_of(&self, owner: VertexId) -> Option<&GadgetRoles> {
        self.gadgets.iter().find(|g| g.owner == owner)
    }

    /// Contract each gadget onto its owner, drop edges to non-designated cycle
    /// vertices and collapse the cycle segments between designated vertices into
    /// the triangle. Returns the resulting graph on owner ids (edge ids fresh).
    pub fn gamma_contract(&self, h: &Multigraph) -> Multigraph {
        let own = self.owner_map();
        let mut out = Multigraph::new();
        let mut seen = BTreeSet::new();
        for &o in own.values() {
            if seen.insert(o) {
                out.add_vertex_with_id(o).unwrap();
            }
        }
        for (_, a, b) in h.edges() {
            if let (Some(&oa), Some(&ob)) = (own.get(&a), own.get(&b)) {
                let designated = self.v0.contains(&a) && self.v0.contains(&b);
                if oa != ob && !designated {
                    out.add_edge(oa, ob).unwrap();
                }
            }
        }
        let cyc = &self.canonical.h0;
        let n = cyc.len();
        let marks: Vec<usize> = (0..n).filter(|&i| self.v0.contains(&cyc[i])).collect();
        for k in 0..marks.len() {
            let a = own[&cyc[marks[k]]];
            let b = own[&cyc[marks[(k + 1) % marks.len()]]];
            out.add_edge(a, b).unwrap();
        }
        out
    }

    /// True when the Γ-contraction of `h` is `G'` up to edge names.
    pub fn contracts_to_gp(&self, h: &Multigraph) -> bool {
        same_edge_multiset(&self.gamma_contract(h), self.gp())
    }
}

/// Compare two graphs on the same vertex ids by their multisets of edge ends.
pub fn same_edge_multiset(a: &Multigraph, b: &Multigraph) -> bool {
    let ends = |g: &Multigraph| {
        let mut v: Vec<(VertexId, VertexId)> =
            g.edges().map(|(_, x, y)| (x.min(y), x.max(y))).collect();
        v.sort();
        v
    };
    a.vertex_set() == b.vertex_set() && ends(a) == ends(b)
}

/// Build the trigraph `H(G')` together with its canonical ear decomposition.
pub fn build_h(g: &Multigraph, ed: &EarDecomposition) -> Result<TrigraphConstruction> {
    g.check_cubic()?;
    let ed = ed.absorb_trailing_edges()?;
    let val = ed.validate(g, EarMode::Ear);
    if !val.ok {
        return Err(Error::InvalidEarDecomposition(val.diagnostics.join("; ")));
    }
    if !ed.is_super_robust(g) {
        return Err(Error::InvalidEarDecomposition(
            "decomposition is not super robust".into(),
        ));
    }
    let n0 = ed.h0.len();
    if n0 < 3 {
        return Err(Error::InvalidEarDecomposition(
            "initial cycle shorter than 3".into(),
        ));
    }
    let (v0, v1, v2) = (ed.h0[0], ed.h0[1], ed.h0[n0 - 1]);
    let yd = g.y_delta(v0, v1, v2)?;
    let gp = &yd.graph;

    // Decomposition of G': the triangle, the path through the rest of the old
    // initial cycle, then the old ears.
    let mut p0_vertices = vec![yd.x0];
    p0_vertices.extend(ed.h0[1..].iter().copied());
    p0_vertices.push(yd.y0);
    let mut p0_edges = vec![yd.outer[0]];
    p0_edges.extend(ed.h0_edges[1..n0 - 1].iter().copied());
    p0_edges.push(yd.outer[1]);
    let mut gp_ears = vec![Ear {
        kind: EarKind::Path,
        vertices: p0_vertices,
        edges: p0_edges,
    }];
    gp_ears.extend(ed.ears.iter().cloned());
    let gp_ed = EarDecomposition {
        h0: vec![yd.x0, yd.y0, yd.v0],
        h0_edges: vec![yd.triangle[2], yd.triangle[1], yd.triangle[0]],
        ears: gp_ears,
    };
    let val = gp_ed.validate(gp, EarMode::Ear);
    if !val.ok {
        return Err(Error::Construction(format!(
            "Y-Δ decomposition: {}",
            val.diagnostics.join("; ")
        )));
    }

    let gadget_count: usize = gp_ed
        .ears
        .iter()
        .filter(|e| e.kind == EarKind::Path)
        .map(|e| e.internal().len())
        .sum();

    let mut h = Multigraph::new();
    let mut ears: Vec<Ear> = Vec::new();
    // Initial cycle: x0, the attachment blocks, y0, v0.
    let gx0 = h.add_vertex();
    let mut attach_pool = Vec::with_capacity(7 * gadget_count);
    for _ in 0..7 * gadget_count {
        attach_pool.push(h.add_vertex());
    }
    let gy0 = h.add_vertex();
    let gv0 = h.add_vertex();
    let mut cycle = vec![gx0];
    cycle.extend(attach_pool.iter().copied());
    cycle.push(gy0);
    cycle.push(gv0);
    let mut cycle_edges = Vec::with_capacity(cycle.len());
    for i in 0..cycle.len() {
        cycle_edges.push(h.add_edge(cycle[i], cycle[(i + 1) % cycle.len()])?);
    }

    let mut gamma: BTreeMap<VertexId, VertexId> = BTreeMap::new();
    gamma.insert(yd.x0, gx0);
    gamma.insert(yd.y0, gy0);
    gamma.insert(yd.v0, gv0);
    let mut gadgets = Vec::with_capacity(gadget_count);
    let mut stars = Vec::new();
    let mut next_attach = 0usize;

    let path = |h: &mut Multigraph, vs: &[VertexId]| -> Result<Ear> {
        let mut edges = Vec::new();
        for w in vs.windows(2) {
            edges.push(h.add_edge(w[0], w[1])?);
        }
        Ok(Ear {
            kind: EarKind::Path,
            vertices: vs.to_vec(),
            edges,
        })
    };
    let star = |h: &mut Multigraph, center: VertexId, leaves: [VertexId; 3]| -> Result<Ear> {
        let mut edges = Vec::new();
        for l in leaves {
            edges.push(h.add_edge(center, l)?);
        }
        let mut vertices = vec![center];
        vertices.extend(leaves);
        Ok(Ear {
            kind: EarKind::Star,
            vertices,
            edges,
        })
    };

    for gear in &gp_ed.ears {
        match gear.kind {
            EarKind::Star => {
                let c = h.add_vertex();
                let leaves = [gear.vertices[1], gear.vertices[2], gear.vertices[3]];
                let mut hl = [c; 3];
                for (k, l) in leaves.iter().enumerate() {
                    hl[k] = *gamma.get(l).ok_or_else(|| {
                        Error::Construction(format!("star leaf {l} has no image"))
                    })?;
                }
                ears.push(star(&mut h, c, hl)?);
                gamma.insert(gear.vertices[0], c);
                stars.push((gear.vertices[0], c));
            }
            EarKind::Path => {
                let s = gear.vertices[0];
                let t = *gear.vertices.last().unwrap();
                let gs = *gamma
                    .get(&s)
                    .ok_or_else(|| Error::Construction(format!("leaf {s} has no image")))?;
                let gt = *gamma
                    .get(&t)
                    .ok_or_else(|| Error::Construction(format!("leaf {t} has no image")))?;
                let inner = gear.internal();
                let l = inner.len();
                let mut prev_joint = gs;
                for (j, &owner) in inner.iter().enumerate() {
                    let mut att = [gx0; 7];
                    for slot in att.iter_mut() {
                        *slot = attach_pool[next_attach];
                        next_attach += 1;
                    }
                    let mut nv = || h.add_vertex();
                    let (a_prime, w_prime, b_prime) = (nv(), nv(), nv());
                    let (b, w, a) = (nv(), nv(), nv());
                    let (z, y, x) = (nv(), nv(), nv());
                    let (u, v) = (nv(), nv());
                    let (d1, d2, d3) = (nv(), nv(), nv());
                    let roles = GadgetRoles {
                        owner,
                        a_prime,
                        w_prime,
                        b_prime,
                        a,
                        w,
                        b,
                        z,
                        y,
                        x,
                        u,
                        v,
                        d1,
                        d2,
                        d3,
                        attach: att,
                    };
                    ears.push(path(&mut h, &roles.e1())?);
                    ears.push(path(&mut h, &roles.e2())?);
                    if j + 1 < l {
                        ears.push(path(&mut h, &[b, z, y, x, prev_joint])?);
                    } else {
                        ears.push(path(&mut h, &[prev_joint, x, gt])?);
                        ears.push(path(&mut h, &[b, z, y, x])?);
                    }
                    ears.push(path(&mut h, &roles.e4())?);
                    ears.push(star(&mut h, d1, [a_prime, w, v])?);
                    ears.push(star(&mut h, d2, [w_prime, att[3], att[4]])?);
                    ears.push(star(&mut h, d3, [a, att[5], att[6]])?);
                    gamma.insert(owner, u);
                    gadgets.push(roles);
                    prev_joint = x;
                }
            }
            EarKind::Edge => {
                return Err(Error::Construction(
                    "single-edge ear survived absorption".into(),
                ));
            }
        }
    }

    let canonical = EarDecomposition {
        h0: cycle,
        h0_edges: cycle_edges,
        ears,
    };
    let tc = TrigraphConstruction {
        g: g.clone(),
        g_decomposition: ed,
        ydelta: yd,
        gp_decomposition: gp_ed,
        h,
        canonical,
        v0: [gx0, gy0, gv0],
        gadgets,
        stars,
        gamma,
    };
    tc.h.check_cubic()?;
    let val = tc.canonical.validate(&tc.h, EarMode::Trigraph);
    if !val.ok {
        return Err(Error::Construction(val.diagnostics.join("; ")));
    }
    Ok(tc)
}

/// Number of initial-cycle vertices the construction uses: seven per gadget plus
/// the three designated vertices.
pub fn expected_h0_len(gadgets: usize) -> usize {
    7 * gadgets + 3
}
