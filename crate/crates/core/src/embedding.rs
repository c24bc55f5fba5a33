//! Rotation systems and facial walks.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::graph::{Dart, EdgeId, Multigraph, VertexId};

/// Cyclic order of incident edges around each vertex.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct RotationSystem {
    pub order: BTreeMap<VertexId, Vec<EdgeId>>,
}

/// A facial walk as a closed sequence of darts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Face {
    pub darts: Vec<Dart>,
}

impl Face {
    pub fn vertices(&self) -> Vec<VertexId> {
        self.darts.iter().map(|d| d.tail).collect()
    }

    /// True when no vertex repeats along the walk.
    pub fn is_cycle(&self) -> bool {
        let vs = self.vertices();
        let set: BTreeSet<_> = vs.iter().collect();
        set.len() == vs.len()
    }
}

impl RotationSystem {
    /// Check that every vertex lists exactly its incident edges, each once.
    pub fn validate(&self, g: &Multigraph) -> Result<()> {
        if let Some(e) = g.has_loops() {
            return Err(Error::Loop(e));
        }
        for v in g.vertices() {
            let rot = self
                .order
                .get(&v)
                .ok_or_else(|| Error::InvalidRotation(format!("{v} has no rotation")))?;
            let mut a: Vec<EdgeId> = rot.clone();
            a.sort();
            let b = g.incident(v).to_vec();
            if a != b {
                return Err(Error::InvalidRotation(format!(
                    "rotation at {v} does not list its incident edges"
                )));
            }
        }
        if self.order.len() != g.vertex_count() {
            return Err(Error::InvalidRotation(
                "rotation mentions unknown vertices".into(),
            ));
        }
        Ok(())
    }

    /// Dart following `d` along its face: leave `d.head` by the edge after `d.edge`
    /// in the rotation at `d.head`.
    pub fn next_dart(&self, g: &Multigraph, d: Dart) -> Result<Dart> {
        let rot = self
            .order
            .get(&d.head)
            .ok_or(Error::UnknownVertex(d.head))?;
        let i = rot
            .iter()
            .position(|&e| e == d.edge)
            .ok_or_else(|| Error::InvalidRotation(format!("{} missing at {}", d.edge, d.head)))?;
        let f = rot[(i + 1) % rot.len()];
        Ok(Dart::new(f, d.head, g.other_end(f, d.head)?))
    }

    /// All facial walks. Every dart lies on exactly one face.
    pub fn faces(&self, g: &Multigraph) -> Result<Vec<Face>> {
        self.validate(g)?;
        let mut seen = BTreeSet::new();
        let mut faces = Vec::new();
        for (e, u, v) in g.edges() {
            for start in [Dart::new(e, u, v), Dart::new(e, v, u)] {
                if seen.contains(&start) {
                    continue;
                }
                let mut darts = Vec::new();
                let mut d = start;
                loop {
                    seen.insert(d);
                    darts.push(d);
                    d = self.next_dart(g, d)?;
                    if d == start {
                        break;
                    }
                }
                faces.push(Face { darts });
            }
        }
        Ok(faces)
    }

    /// V - E + F for a connected graph.
    pub fn euler_characteristic(&self, g: &Multigraph) -> Result<i64> {
        let f = self.faces(g)?.len() as i64;
        Ok(g.vertex_count() as i64 - g.edge_count() as i64 + f)
    }

    pub fn is_planar_embedding(&self, g: &Multigraph) -> Result<bool> {
        Ok(g.is_connected() && self.euler_characteristic(g)? == 2)
    }

    /// Faces incident with the same edge on both sides.
    pub fn dual_loops(&self, g: &Multigraph) -> Result<Vec<EdgeId>> {
        let mut out = Vec::new();
        for face in self.faces(g)? {
            let mut count: BTreeMap<EdgeId, usize> = BTreeMap::new();
            for d in &face.darts {
                *count.entry(d.edge).or_default() += 1;
            }
            out.extend(count.into_iter().filter(|&(_, c)| c > 1).map(|(e, _)| e));
        }
        out.sort();
        Ok(out)
    }

    /// Transition map sending each dart to its successor on its face.
    pub fn face_transitions(&self, g: &Multigraph) -> Result<BTreeMap<Dart, Dart>> {
        let mut map = BTreeMap::new();
        for face in self.faces(g)? {
            let n = face.darts.len();
            for i in 0..n {
                map.insert(face.darts[i], face.darts[(i + 1) % n]);
            }
        }
        Ok(map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::named;

    fn k4_rotation() -> (Multigraph, RotationSystem) {
        // Planar K4 drawn with vertex 3 in the middle of triangle 0,1,2.
        let g = named::k4();
        let e = |a: u32, b: u32| g.find_edge(VertexId(a), VertexId(b)).unwrap();
        let mut order = BTreeMap::new();
        order.insert(VertexId(0), vec![e(0, 1), e(0, 3), e(0, 2)]);
        order.insert(VertexId(1), vec![e(1, 2), e(1, 3), e(1, 0)]);
        order.insert(VertexId(2), vec![e(2, 0), e(2, 3), e(2, 1)]);
        order.insert(VertexId(3), vec![e(3, 0), e(3, 1), e(3, 2)]);
        (g, RotationSystem { order })
    }

    #[test]
    fn k4_planar_faces() {
        let (g, rot) = k4_rotation();
        let faces = rot.faces(&g).unwrap();
        assert_eq!(faces.len(), 4);
        assert!(faces.iter().all(|f| f.darts.len() == 3 && f.is_cycle()));
        assert!(rot.is_planar_embedding(&g).unwrap());
        assert!(rot.dual_loops(&g).unwrap().is_empty());
    }

    #[test]
    fn every_dart_on_one_face() {
        let (g, rot) = k4_rotation();
        let faces = rot.faces(&g).unwrap();
        let total: usize = faces.iter().map(|f| f.darts.len()).sum();
        assert_eq!(total, 2 * g.edge_count());
        let t = rot.face_transitions(&g).unwrap();
        assert_eq!(t.len(), 2 * g.edge_count());
        for (a, b) in t {
            assert_eq!(a.head, b.tail);
        }
    }

    #[test]
    fn rejects_bad_rotation() {
        let (g, mut rot) = k4_rotation();
        rot.order.get_mut(&VertexId(0)).unwrap().pop();
        assert!(rot.faces(&g).is_err());
    }
}
