//! Random instances: cubic graphs, robust trigraphs with their short-ear
//! decompositions, and planar trigraphs grown ear by ear inside faces.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::ear::{Ear, EarDecomposition, EarKind};
use crate::embedding::RotationSystem;
use crate::gadget::GadgetRoles;
use crate::graph::{Dart, EdgeId, Multigraph, VertexId};

/// A trigraph with a short-ear decomposition and, for planar instances, a
/// planar rotation system.
#[derive(Clone, Debug)]
pub struct Trigraph {
    pub graph: Multigraph,
    pub ed: EarDecomposition,
    pub rot: Option<RotationSystem>,
}

/// A simple 3-edge-connected cubic graph on `n` vertices from the pairing model,
/// or `None` after `tries` rejected samples.
pub fn random_cubic(n: usize, rng: &mut impl Rng, tries: usize) -> Option<Multigraph> {
    if n < 4 || n % 2 == 1 {
        return None;
    }
    for _ in 0..tries {
        let mut points: Vec<u32> = (0..3 * n as u32).collect();
        points.shuffle(rng);
        let pairs: Vec<(u32, u32)> = points.chunks(2).map(|c| (c[0] / 3, c[1] / 3)).collect();
        let g = Multigraph::from_edges(n, &pairs);
        if g.is_simple() && g.is_three_edge_connected() {
            return Some(g);
        }
    }
    None
}

struct Builder {
    g: Multigraph,
    ears: Vec<Ear>,
    rot: Option<RotationSystem>,
}

impl Builder {
    fn open(&self) -> Vec<VertexId> {
        self.g
            .vertices()
            .filter(|&v| self.g.degree(v) == 2)
            .collect()
    }

    /// Groups of open vertices that may serve as leaves together: everything for
    /// abstract trigraphs, the open vertices of each face (in face order, with
    /// the dart entering them) for planar ones.
    fn slots(&self) -> Vec<Vec<(VertexId, Option<Dart>)>> {
        match &self.rot {
            None => vec![self.open().into_iter().map(|v| (v, None)).collect()],
            Some(rot) => rot
                .faces(&self.g)
                .unwrap()
                .into_iter()
                .map(|f| {
                    f.darts
                        .iter()
                        .filter(|d| self.g.degree(d.head) == 2)
                        .map(|d| (d.head, Some(*d)))
                        .collect()
                })
                .collect(),
        }
    }

    fn attach(&mut self, leaf: VertexId, incoming: Option<Dart>, e: EdgeId) {
        if let (Some(rot), Some(d)) = (self.rot.as_mut(), incoming) {
            let list = rot.order.get_mut(&leaf).unwrap();
            let pos = list.iter().position(|&x| x == d.edge).unwrap();
            list.insert(pos + 1, e);
        }
    }

    fn add_path(
        &mut self,
        s: (VertexId, Option<Dart>),
        t: (VertexId, Option<Dart>),
        internals: usize,
    ) {
        let mut vs = vec![s.0];
        for _ in 0..internals {
            vs.push(self.g.add_vertex());
        }
        vs.push(t.0);
        let edges: Vec<EdgeId> = vs
            .windows(2)
            .map(|w| self.g.add_edge(w[0], w[1]).unwrap())
            .collect();
        if let Some(rot) = self.rot.as_mut() {
            for k in 1..vs.len() - 1 {
                rot.order.insert(vs[k], vec![edges[k - 1], edges[k]]);
            }
        }
        self.attach(s.0, s.1, edges[0]);
        self.attach(t.0, t.1, *edges.last().unwrap());
        self.ears.push(Ear {
            kind: EarKind::Path,
            vertices: vs,
            edges,
        });
    }

    fn add_star(&mut self, leaves: [(VertexId, Option<Dart>); 3]) -> bool {
        let c = self.g.add_vertex();
        let edges: Vec<EdgeId> = leaves
            .iter()
            .map(|l| self.g.add_edge(c, l.0).unwrap())
            .collect();
        for (k, l) in leaves.iter().enumerate() {
            self.attach(l.0, l.1, edges[k]);
        }
        if self.rot.is_some() {
            let mut ok = false;
            for order in [[0, 1, 2], [0, 2, 1]] {
                let rot = self.rot.as_mut().unwrap();
                rot.order
                    .insert(c, order.iter().map(|&i| edges[i]).collect());
                if rot.is_planar_embedding(&self.g).unwrap_or(false) {
                    ok = true;
                    break;
                }
            }
            if !ok {
                return false;
            }
        }
        let mut vertices = vec![c];
        vertices.extend(leaves.iter().map(|l| l.0));
        self.ears.push(Ear {
            kind: EarKind::Star,
            vertices,
            edges,
        });
        true
    }
}

/// A state is hopeless when the open count is one or two, or, in the planar case,
/// some open vertex lies on no face with another open vertex.
fn hopeless(b: &Builder) -> bool {
    let open = b.open();
    if open.len() == 1 || open.len() == 2 {
        return true;
    }
    if b.rot.is_none() {
        return false;
    }
    let slots = b.slots();
    open.iter().any(|&v| {
        !slots
            .iter()
            .any(|s| s.len() >= 2 && s.iter().any(|x| x.0 == v))
    })
}

#[derive(Clone, Copy)]
enum Move {
    Star([usize; 3]),
    Path([usize; 2], usize),
}

fn candidates(
    b: &Builder,
    max_vertices: usize,
    rng: &mut impl Rng,
) -> Vec<(Vec<(VertexId, Option<Dart>)>, Move)> {
    let room = max_vertices.saturating_sub(b.g.vertex_count());
    let mut out = Vec::new();
    for slot in b.slots().into_iter().filter(|s| s.len() >= 2) {
        for _ in 0..4 {
            let mut idx: Vec<usize> = (0..slot.len()).collect();
            idx.shuffle(rng);
            if slot.len() >= 3 && room >= 1 {
                let mut pick = [idx[0], idx[1], idx[2]];
                pick.sort();
                out.push((slot.clone(), Move::Star(pick)));
            }
            let mut pair = [idx[0], idx[1]];
            pair.sort();
            for i in 1..=3usize.min(room) {
                out.push((slot.clone(), Move::Path(pair, i)));
            }
        }
    }
    // 3-ears rarely keep their descendants in two components; keep them scarce,
    // and close up once the size limit is near.
    let weight = |m: &Move| match m {
        Move::Star(_) if room < 6 => 8.0,
        Move::Path(_, 1) if room < 6 => 2.0,
        Move::Path(_, 3) => 1.0,
        _ => 4.0,
    };
    // Weighted random order: sort by exponential keys.
    let mut keyed: Vec<(f64, (Vec<(VertexId, Option<Dart>)>, Move))> = out
        .into_iter()
        .map(|c| {
            let u: f64 = rng.gen_range(f64::EPSILON..1.0);
            (-u.ln() / weight(&c.1), c)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
    keyed.into_iter().map(|k| k.1).collect()
}

fn extend(b: &mut Builder, max_vertices: usize, nodes: &mut usize, rng: &mut impl Rng) -> bool {
    if b.open().is_empty() {
        return true;
    }
    *nodes += 1;
    if *nodes > 200 || hopeless(b) {
        return false;
    }
    for (slot, m) in candidates(b, max_vertices, rng).into_iter().take(8) {
        let mut next = Builder {
            g: b.g.clone(),
            ears: b.ears.clone(),
            rot: b.rot.clone(),
        };
        let ok = match m {
            Move::Star(p) => next.add_star([slot[p[0]], slot[p[1]], slot[p[2]]]),
            Move::Path(p, i) => {
                next.add_path(slot[p[0]], slot[p[1]], i);
                true
            }
        };
        if ok && extend(&mut next, max_vertices, nodes, rng) {
            *b = next;
            return true;
        }
    }
    false
}

fn grow(max_vertices: usize, planar: bool, rng: &mut impl Rng) -> Option<Trigraph> {
    let k = rng.gen_range(3..=max_vertices.clamp(3, 8));
    let mut g = Multigraph::with_vertices(k);
    let cycle: Vec<VertexId> = g.vertices().collect();
    let cycle_edges: Vec<EdgeId> = (0..k)
        .map(|i| g.add_edge(cycle[i], cycle[(i + 1) % k]).unwrap())
        .collect();
    let rot = planar.then(|| RotationSystem {
        order: (0..k)
            .map(|i| (cycle[i], vec![cycle_edges[(i + k - 1) % k], cycle_edges[i]]))
            .collect(),
    });
    let mut b = Builder {
        g,
        ears: Vec::new(),
        rot,
    };
    let target = rng.gen_range(max_vertices / 2..=max_vertices);
    let mut nodes = 0;
    if !extend(&mut b, target, &mut nodes, rng) {
        return None;
    }
    let ed = EarDecomposition {
        h0: cycle,
        h0_edges: cycle_edges,
        ears: b.ears,
    };
    Some(Trigraph {
        graph: b.g,
        ed,
        rot: b.rot,
    })
}

/// A trigraph with between `min_vertices` and `max_vertices` vertices whose
/// generated decomposition is robust. Retries until one is found.
pub fn random_trigraph(min_vertices: usize, max_vertices: usize, rng: &mut impl Rng) -> Trigraph {
    loop {
        if let Some(t) = grow(max_vertices, false, rng) {
            if t.graph.vertex_count() >= min_vertices
                && !t.ed.ears.is_empty()
                && t.graph.check_cubic().is_ok()
                && t.ed.is_robust(&t.graph)
            {
                return t;
            }
        }
    }
}

/// A planar trigraph with between `min_vertices` and `max_vertices` vertices, a
/// robust decomposition and a planar rotation system.
pub fn random_planar_trigraph(
    min_vertices: usize,
    max_vertices: usize,
    rng: &mut impl Rng,
) -> Trigraph {
    loop {
        if let Some(t) = grow(max_vertices, true, rng) {
            let rot = t.rot.as_ref().unwrap();
            if t.graph.vertex_count() >= min_vertices
                && !t.ed.ears.is_empty()
                && t.graph.check_cubic().is_ok()
                && rot.is_planar_embedding(&t.graph).unwrap_or(false)
                && t.ed.is_robust(&t.graph)
            {
                return t;
            }
        }
    }
}

/// A small host for one basic gadget: an initial cycle of 8 to 11 vertices,
/// the seven gadget ears attached to eight distinct cycle vertices, and random
/// ears closing the joint, the replica and the free cycle vertices. The
/// gadget's `owner` is its replica.
pub fn random_gadget_host(max_vertices: usize, rng: &mut impl Rng) -> (Trigraph, GadgetRoles) {
    loop {
        let k = rng.gen_range(8..=11);
        let mut g = Multigraph::with_vertices(k);
        let cycle: Vec<VertexId> = g.vertices().collect();
        let cycle_edges: Vec<EdgeId> = (0..k)
            .map(|i| g.add_edge(cycle[i], cycle[(i + 1) % k]).unwrap())
            .collect();
        let mut att = cycle.clone();
        att.shuffle(rng);
        let mut b = Builder {
            g,
            ears: Vec::new(),
            rot: None,
        };
        let fresh = |b: &mut Builder| b.g.add_vertex();
        let [a_prime, w_prime, b_prime, a, w, bb, z, y, x, u, v, d1, d2, d3] =
            [(); 14].map(|_| fresh(&mut b));
        let path = |b: &mut Builder, vs: &[VertexId]| {
            let edges = vs
                .windows(2)
                .map(|p| b.g.add_edge(p[0], p[1]).unwrap())
                .collect();
            b.ears.push(Ear {
                kind: EarKind::Path,
                vertices: vs.to_vec(),
                edges,
            });
        };
        path(&mut b, &[att[0], a_prime, w_prime, b_prime, att[1]]);
        path(&mut b, &[b_prime, bb, w, a, att[2]]);
        path(&mut b, &[bb, z, y, x, att[7]]);
        path(&mut b, &[z, u, v, y]);
        let star = |b: &mut Builder, c: VertexId, leaves: [VertexId; 3]| {
            let edges = leaves
                .iter()
                .map(|&l| b.g.add_edge(c, l).unwrap())
                .collect();
            b.ears.push(Ear {
                kind: EarKind::Star,
                vertices: vec![c, leaves[0], leaves[1], leaves[2]],
                edges,
            });
        };
        star(&mut b, d1, [a_prime, w, v]);
        star(&mut b, d2, [w_prime, att[3], att[4]]);
        star(&mut b, d3, [a, att[5], att[6]]);
        let roles = GadgetRoles {
            owner: u,
            a_prime,
            w_prime,
            b_prime,
            a,
            w,
            b: bb,
            z,
            y,
            x,
            u,
            v,
            d1,
            d2,
            d3,
            attach: [att[0], att[1], att[2], att[3], att[4], att[5], att[6]],
        };
        let target = rng.gen_range(b.g.vertex_count() + 2..=max_vertices);
        let mut nodes = 0;
        if !extend(&mut b, target, &mut nodes, rng) {
            continue;
        }
        let ed = EarDecomposition {
            h0: cycle,
            h0_edges: cycle_edges,
            ears: b.ears,
        };
        if b.g.check_cubic().is_ok() && ed.is_robust(&b.g) {
            return (
                Trigraph {
                    graph: b.g,
                    ed,
                    rot: None,
                },
                roles,
            );
        }
    }
}
