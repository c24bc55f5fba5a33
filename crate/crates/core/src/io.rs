//! JSON formats and DOT export.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::ear::{EarDecomposition, EarKind};
use crate::embedding::RotationSystem;
use crate::error::{Error, Result};
use crate::gadget::{build_h, TrigraphConstruction};
use crate::graph::{Dart, EdgeId, Multigraph, VertexId};
use crate::mixed::{Arc, ArcId, MixedGraph};
use crate::reduce::DirectedCycleFamily;

/// `{"vertices":[..], "edges":[[u,v]..], "rotation": {v: [edge index..]}}`.
/// Edge `i` of the list gets id `i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub vertices: Vec<u32>,
    pub edges: Vec<[u32; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<BTreeMap<u32, Vec<u32>>>,
}

impl GraphJson {
    pub fn from_graph(g: &Multigraph, rot: Option<&RotationSystem>) -> Result<Self> {
        let ids: Vec<EdgeId> = g.edge_ids().collect();
        if ids.iter().enumerate().any(|(i, e)| e.0 as usize != i) {
            return Err(Error::Json("edge ids are not contiguous from 0".into()));
        }
        Ok(GraphJson {
            vertices: g.vertices().map(|v| v.0).collect(),
            edges: g.edges().map(|(_, u, v)| [u.0, v.0]).collect(),
            rotation: rot.map(|r| {
                r.order
                    .iter()
                    .map(|(v, es)| (v.0, es.iter().map(|e| e.0).collect()))
                    .collect()
            }),
        })
    }

    pub fn graph(&self) -> Result<Multigraph> {
        let mut g = Multigraph::new();
        for &v in &self.vertices {
            g.add_vertex_with_id(VertexId(v))?;
        }
        for (i, [u, v]) in self.edges.iter().enumerate() {
            g.add_edge_with_id(EdgeId(i as u32), VertexId(*u), VertexId(*v))?;
        }
        Ok(g)
    }

    pub fn rotation(&self) -> Option<RotationSystem> {
        self.rotation.as_ref().map(|r| RotationSystem {
            order: r
                .iter()
                .map(|(v, es)| (VertexId(*v), es.iter().map(|&e| EdgeId(e)).collect()))
                .collect(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EarJson {
    pub kind: EarKind,
    pub vertices: Vec<u32>,
}

/// `{"h0":[..], "ears":[{"kind":"path|star|edge","vertices":[..]}..]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EarDecompositionJson {
    pub h0: Vec<u32>,
    pub ears: Vec<EarJson>,
}

impl EarDecompositionJson {
    pub fn from_decomposition(ed: &EarDecomposition) -> Self {
        EarDecompositionJson {
            h0: ed.h0.iter().map(|v| v.0).collect(),
            ears: ed
                .ears
                .iter()
                .map(|e| EarJson {
                    kind: e.kind,
                    vertices: e.vertices.iter().map(|v| v.0).collect(),
                })
                .collect(),
        }
    }

    /// Resolve against `g`; each segment takes the smallest unused edge.
    pub fn decomposition(&self, g: &Multigraph) -> Result<EarDecomposition> {
        EarDecomposition::resolve(
            g,
            self.h0.iter().map(|&v| VertexId(v)).collect(),
            self.ears
                .iter()
                .map(|e| (e.kind, e.vertices.iter().map(|&v| VertexId(v)).collect()))
                .collect(),
        )
    }
}

/// A dart as `[tail, head]` or `[tail, head, edge]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DartJson(pub Vec<u32>);

impl DartJson {
    pub fn from_dart(d: Dart) -> Self {
        DartJson(vec![d.tail.0, d.head.0, d.edge.0])
    }

    /// Without an edge index the edge is looked up in `g` and must be unique.
    pub fn dart(&self, g: Option<&Multigraph>) -> Result<Dart> {
        match self.0.as_slice() {
            &[t, h, e] => Ok(Dart::new(EdgeId(e), VertexId(t), VertexId(h))),
            &[t, h] => {
                let g = g.ok_or_else(|| Error::Json(format!("dart [{t},{h}] needs an edge index")))?;
                match g.edges_between(VertexId(t), VertexId(h)).as_slice() {
                    [e] => Ok(Dart::new(*e, VertexId(t), VertexId(h))),
                    [] => Err(Error::Json(format!("no edge between {t} and {h}"))),
                    _ => Err(Error::Json(format!(
                        "parallel edges between {t} and {h}: give the edge index"
                    ))),
                }
            }
            other => Err(Error::Json(format!("bad dart {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArcJson {
    pub id: u32,
    pub tail: u32,
    pub head: u32,
    #[serde(default)]
    pub expansion: Vec<DartJson>,
}

/// `{"edges":[[u,v]..], "arcs":[{"id","tail","head","expansion"}..], "forbidden":[[id,id]..]}`.
/// `vertices` may list vertices without edges. An edge `[u,v,id]` keeps its id,
/// otherwise edge `i` gets id `i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixedGraphJson {
    #[serde(default)]
    pub vertices: Vec<u32>,
    pub edges: Vec<Vec<u32>>,
    pub arcs: Vec<ArcJson>,
    #[serde(default)]
    pub forbidden: Vec<[u32; 2]>,
}

impl MixedGraphJson {
    pub fn from_mixed(m: &MixedGraph) -> Self {
        MixedGraphJson {
            vertices: m.vertices().map(|v| v.0).collect(),
            edges: m
                .graph()
                .edges()
                .map(|(e, u, v)| vec![u.0, v.0, e.0])
                .collect(),
            arcs: m
                .arcs()
                .map(|a| ArcJson {
                    id: a.id.0,
                    tail: a.tail.0,
                    head: a.head.0,
                    expansion: a.expansion.iter().map(|&d| DartJson::from_dart(d)).collect(),
                })
                .collect(),
            forbidden: m.forbidden().map(|(a, b)| [a.0, b.0]).collect(),
        }
    }

    pub fn mixed(&self) -> Result<MixedGraph> {
        let mut vs: BTreeSet<u32> = self.vertices.iter().copied().collect();
        for e in &self.edges {
            match e.as_slice() {
                [u, v] | [u, v, _] => vs.extend([*u, *v]),
                other => return Err(Error::Json(format!("bad edge {other:?}"))),
            }
        }
        vs.extend(self.arcs.iter().flat_map(|a| [a.tail, a.head]));
        let mut m = MixedGraph::default();
        for v in vs {
            m.add_vertex_with_id(VertexId(v))?;
        }
        for (i, e) in self.edges.iter().enumerate() {
            let id = e.get(2).copied().unwrap_or(i as u32);
            m.add_edge_with_id(EdgeId(id), VertexId(e[0]), VertexId(e[1]))?;
        }
        for a in &self.arcs {
            let expansion = if a.expansion.is_empty() {
                vec![Dart::new(EdgeId(u32::MAX - a.id), VertexId(a.tail), VertexId(a.head))]
            } else {
                a.expansion
                    .iter()
                    .map(|d| d.dart(None))
                    .collect::<Result<Vec<_>>>()?
            };
            m.insert_arc(Arc {
                id: ArcId(a.id),
                tail: VertexId(a.tail),
                head: VertexId(a.head),
                expansion,
            })?;
        }
        for [a, b] in &self.forbidden {
            m.add_forbidden(ArcId(*a), ArcId(*b))?;
        }
        m.check_degree_discipline()?;
        Ok(m)
    }
}

/// `{"cycles": [[dart..]..]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DcdcJson {
    pub cycles: Vec<Vec<DartJson>>,
}

impl DcdcJson {
    pub fn from_family(f: &DirectedCycleFamily) -> Self {
        DcdcJson {
            cycles: f
                .cycles
                .iter()
                .map(|c| c.iter().map(|&d| DartJson::from_dart(d)).collect())
                .collect(),
        }
    }

    pub fn family(&self, g: &Multigraph) -> Result<DirectedCycleFamily> {
        Ok(DirectedCycleFamily {
            cycles: self
                .cycles
                .iter()
                .map(|c| c.iter().map(|d| d.dart(Some(g))).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GadgetJson {
    pub owner: u32,
    /// Role name to vertex.
    pub roles: BTreeMap<String, u32>,
}

/// Dump of a trigraph construction. `g` and `g_decomposition` rebuild it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructionJson {
    pub g: GraphJson,
    pub g_decomposition: EarDecompositionJson,
    pub h: GraphJson,
    pub h0: Vec<u32>,
    pub v0set: [u32; 3],
    /// Vertex of `G'` to its image in `H`.
    pub gamma: BTreeMap<u32, u32>,
    /// Fixed paths `S`.
    pub s: Vec<[u32; 3]>,
    pub gadgets: Vec<GadgetJson>,
    pub canonical: EarDecompositionJson,
    pub n_g: usize,
    pub expected_h0: usize,
}

impl ConstructionJson {
    pub fn from_construction(tc: &TrigraphConstruction) -> Result<Self> {
        Ok(ConstructionJson {
            g: GraphJson::from_graph(&tc.g, None)?,
            g_decomposition: EarDecompositionJson::from_decomposition(&tc.g_decomposition),
            h: GraphJson::from_graph(&tc.h, None)?,
            h0: tc.canonical.h0.iter().map(|v| v.0).collect(),
            v0set: tc.v0.map(|v| v.0),
            gamma: tc.gamma.iter().map(|(a, b)| (a.0, b.0)).collect(),
            s: tc.fixed_paths().iter().map(|p| p.map(|v| v.0)).collect(),
            gadgets: tc
                .gadgets
                .iter()
                .map(|r| GadgetJson {
                    owner: r.owner.0,
                    roles: roles_of(r),
                })
                .collect(),
            canonical: EarDecompositionJson::from_decomposition(&tc.canonical),
            n_g: tc.canonical.h0.len(),
            expected_h0: crate::gadget::expected_h0_len(tc.gadgets.len()),
        })
    }

    /// Rebuild the construction and check it reproduces the stored `H`.
    pub fn construction(&self) -> Result<TrigraphConstruction> {
        let g = self.g.graph()?;
        let ed = self.g_decomposition.decomposition(&g)?;
        let tc = build_h(&g, &ed)?;
        if tc.h != self.h.graph()? {
            return Err(Error::Json(
                "stored H differs from the rebuilt construction".into(),
            ));
        }
        Ok(tc)
    }
}

fn roles_of(r: &crate::gadget::GadgetRoles) -> BTreeMap<String, u32> {
    [
        ("a_prime", r.a_prime),
        ("w_prime", r.w_prime),
        ("b_prime", r.b_prime),
        ("a", r.a),
        ("w", r.w),
        ("b", r.b),
        ("z", r.z),
        ("y", r.y),
        ("x", r.x),
        ("u", r.u),
        ("v", r.v),
        ("d1", r.d1),
        ("d2", r.d2),
        ("d3", r.d3),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.0))
    .collect()
}

/// Any of the formats above, recognised by its keys.
#[derive(Clone, Debug)]
pub enum Document {
    Graph(GraphJson),
    Decomposition(EarDecompositionJson),
    Mixed(MixedGraphJson),
    Construction(Box<ConstructionJson>),
    Dcdc(DcdcJson),
}

impl Document {
    pub fn parse(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text)?;
        let has = |k: &str| v.get(k).is_some();
        Ok(if has("canonical") {
            Document::Construction(Box::new(serde_json::from_value(v)?))
        } else if has("arcs") {
            Document::Mixed(serde_json::from_value(v)?)
        } else if has("h0") {
            Document::Decomposition(serde_json::from_value(v)?)
        } else if has("cycles") {
            Document::Dcdc(serde_json::from_value(v)?)
        } else {
            Document::Graph(serde_json::from_value(v)?)
        })
    }

    /// The graph of a graph file or the `H` of a construction dump.
    pub fn graph(&self) -> Result<(Multigraph, Option<RotationSystem>)> {
        match self {
            Document::Graph(g) => Ok((g.graph()?, g.rotation())),
            Document::Construction(c) => Ok((c.h.graph()?, None)),
            _ => Err(Error::Json("expected a graph".into())),
        }
    }

    /// The decomposition of a decomposition file or the canonical one of a dump.
    pub fn decomposition(&self, g: &Multigraph) -> Result<EarDecomposition> {
        match self {
            Document::Decomposition(d) => d.decomposition(g),
            Document::Construction(c) => c.canonical.decomposition(g),
            _ => Err(Error::Json("expected an ear decomposition".into())),
        }
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('"', "\\\"")
}

/// Undirected DOT; `colors` fills vertices and `labels` renames them.
pub fn graph_dot(
    g: &Multigraph,
    colors: &BTreeMap<VertexId, &str>,
    labels: &BTreeMap<VertexId, String>,
) -> String {
    let mut s = String::from("graph G {\n  node [shape=circle];\n");
    for v in g.vertices() {
        let label = labels.get(&v).cloned().unwrap_or_else(|| v.0.to_string());
        let _ = write!(s, "  {} [label=\"{}\"", v.0, dot_escape(&label));
        if let Some(c) = colors.get(&v) {
            let _ = write!(s, ", style=filled, fillcolor=\"{c}\"");
        }
        s.push_str("];\n");
    }
    for (e, u, v) in g.edges() {
        let _ = writeln!(s, "  {} -- {} [label=\"{}\"];", u.0, v.0, e.0);
    }
    s.push_str("}\n");
    s
}

/// Mixed graph as DOT: edges undirected, arcs directed, forbidden pairs in the label.
pub fn mixed_dot(m: &MixedGraph) -> String {
    let mut s = String::from("digraph M {\n  node [shape=circle];\n");
    for v in m.vertices() {
        let _ = writeln!(s, "  {};", v.0);
    }
    for (e, u, v) in m.graph().edges() {
        let _ = writeln!(s, "  {} -> {} [dir=none, label=\"{}\"];", u.0, v.0, e.0);
    }
    for a in m.arcs() {
        let partners: Vec<String> = m.partners(a.id).iter().map(|p| p.to_string()).collect();
        let mut label = a.id.to_string();
        if !partners.is_empty() {
            let _ = write!(label, " R:{}", partners.join(","));
        }
        let _ = writeln!(
            s,
            "  {} -> {} [color=blue, label=\"{}\"];",
            a.tail.0, a.head.0, label
        );
    }
    s.push_str("}\n");
    s
}

/// `H` with vertices colored by role: initial cycle, designated triangle,
/// gadget cores, replicas, star centers.
pub fn construction_dot(tc: &TrigraphConstruction) -> String {
    let mut colors: BTreeMap<VertexId, &str> = BTreeMap::new();
    let mut labels = BTreeMap::new();
    for &v in &tc.canonical.h0 {
        colors.insert(v, "lightgray");
    }
    for &v in &tc.v0 {
        colors.insert(v, "gold");
    }
    for r in &tc.gadgets {
        for (name, v) in roles_of(r) {
            let v = VertexId(v);
            let color = match name.as_str() {
                "u" => "tomato",
                "v" => "orange",
                "d1" | "d2" | "d3" => "plum",
                "z" | "y" | "x" => "lightblue",
                _ => "palegreen",
            };
            colors.entry(v).or_insert(color);
            labels.insert(v, format!("{}:{}", v.0, name));
        }
    }
    for &(_, c) in &tc.stars {
        colors.entry(c).or_insert("khaki");
    }
    graph_dot(&tc.h, &colors, &labels)
}

/// DOT for any document.
pub fn document_dot(doc: &Document) -> Result<String> {
    match doc {
        Document::Graph(g) => Ok(graph_dot(&g.graph()?, &BTreeMap::new(), &BTreeMap::new())),
        Document::Mixed(m) => Ok(mixed_dot(&m.mixed()?)),
        Document::Construction(c) => Ok(construction_dot(&c.construction()?)),
        Document::Decomposition(_) | Document::Dcdc(_) => Err(Error::Json(
            "this document has no graph of its own to draw".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ear::{find_super_robust, SearchOutcome};
    use crate::graph::named;
    use crate::reduce::verify_dcdc;

    #[test]
    fn graph_round_trip() {
        let g = named::petersen();
        let j = GraphJson::from_graph(&g, None).unwrap();
        let text = serde_json::to_string(&j).unwrap();
        let back: GraphJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back.graph().unwrap(), g);
        assert!(matches!(Document::parse(&text).unwrap(), Document::Graph(_)));
    }

    #[test]
    fn rotation_keys_are_strings() {
        let text = r#"{"vertices":[0,1],"edges":[[0,1],[0,1],[0,1]],"rotation":{"0":[0,1,2],"1":[0,2,1]}}"#;
        let j: GraphJson = serde_json::from_str(text).unwrap();
        let rot = j.rotation().unwrap();
        assert_eq!(rot.order[&VertexId(1)], vec![EdgeId(0), EdgeId(2), EdgeId(1)]);
        rot.validate(&j.graph().unwrap()).unwrap();
    }

    #[test]
    fn decomposition_and_construction_round_trip() {
        let g = named::k4();
        let SearchOutcome::Found(ed) = find_super_robust(&g, 10_000).unwrap() else {
            panic!()
        };
        let dj = EarDecompositionJson::from_decomposition(&ed);
        assert_eq!(dj.decomposition(&g).unwrap(), ed);
        let tc = build_h(&g, &ed).unwrap();
        let cj = ConstructionJson::from_construction(&tc).unwrap();
        let text = serde_json::to_string(&cj).unwrap();
        let Document::Construction(back) = Document::parse(&text).unwrap() else {
            panic!()
        };
        let tc2 = back.construction().unwrap();
        assert_eq!(tc2.canonical, tc.canonical);
        let doc = Document::Construction(back);
        let (h, _) = doc.graph().unwrap();
        assert_eq!(doc.decomposition(&h).unwrap(), tc.canonical);
        assert!(construction_dot(&tc).contains("fillcolor"));
    }

    #[test]
    fn mixed_round_trip() {
        let text = r#"{"edges":[[0,1]],"arcs":[
            {"id":0,"tail":1,"head":0},{"id":1,"tail":0,"head":1},
            {"id":2,"tail":1,"head":0},{"id":3,"tail":0,"head":1}],
            "forbidden":[[0,1]]}"#;
        let j: MixedGraphJson = serde_json::from_str(text).unwrap();
        let m = j.mixed().unwrap();
        assert!(m.is_forbidden(ArcId(1), ArcId(0)));
        assert_eq!(MixedGraphJson::from_mixed(&m).mixed().unwrap(), m);
        assert!(mixed_dot(&m).contains("R:"));
    }

    #[test]
    fn dcdc_darts_resolve_unique_edges() {
        let g = named::k4();
        let faces = [[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]];
        let j = DcdcJson {
            cycles: faces
                .iter()
                .map(|f| (0..3).map(|i| DartJson(vec![f[i], f[(i + 1) % 3]])).collect())
                .collect(),
        };
        let fam = j.family(&g).unwrap();
        assert!(verify_dcdc(&g, &fam).ok);
        let back = DcdcJson::from_family(&fam).family(&g).unwrap();
        assert_eq!(back, fam);
    }
}
