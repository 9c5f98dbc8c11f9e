use std::collections::HashMap;

use super::{Mesh, MeshError};
use crate::{cross, distance, dot, norm, sub, Point};

/// A mesh facet (edge in 2D, triangle in 3D) with its one or two incident elements.
#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    /// Vertex ids in the local order of `plus`.
    pub vertices: Vec<usize>,
    /// Incident element with the lower id.
    pub plus: usize,
    /// Second incident element; `None` on the boundary.
    pub minus: Option<usize>,
    /// Unit normal pointing out of `plus`.
    pub normal: Point,
    /// Facet diameter `h_e`.
    pub diameter: f64,
    /// Length (2D) or area (3D).
    pub measure: f64,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.minus.is_none()
    }

    /// Outward normal as seen from `element`.
    pub fn normal_from(&self, element: usize) -> Point {
        if element == self.plus {
            self.normal
        } else {
            self.normal.map(|c| -c)
        }
    }
}

#[derive(Debug, Clone)]
pub struct FaceTopology {
    faces: Vec<Face>,
    element_faces: Vec<Vec<usize>>,
    neighbors: Vec<Vec<usize>>,
}

impl FaceTopology {
    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn face(&self, f: usize) -> &Face {
        &self.faces[f]
    }

    /// Face ids of element `k` in local order.
    pub fn element_faces(&self, k: usize) -> &[usize] {
        &self.element_faces[k]
    }

    /// Face neighbours of element `k`, ascending by id.
    pub fn neighbors(&self, k: usize) -> &[usize] {
        &self.neighbors[k]
    }

    pub fn num_interior(&self) -> usize {
        self.faces.iter().filter(|f| !f.is_boundary()).count()
    }

    pub fn num_boundary(&self) -> usize {
        self.faces.len() - self.num_interior()
    }
}

/// Deduplicates facets by their sorted vertex key. Faces are numbered in order of first
/// appearance while sweeping elements by id, so `plus` always has the lower id.
pub fn build_topology(mesh: &Mesh) -> Result<FaceTopology, MeshError> {
    let mut faces: Vec<Face> = Vec::new();
    let mut lookup: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut element_faces = vec![Vec::new(); mesh.num_elements()];
    let mut seen_elements: HashMap<Vec<usize>, usize> = HashMap::new();
    let verts = mesh.vertices();

    for k in 0..mesh.num_elements() {
        let mut key: Vec<usize> = mesh.element(k).to_vec();
        key.sort_unstable();
        if seen_elements.insert(key.clone(), k).is_some() {
            return Err(MeshError::NonManifold { vertices: key });
        }
        for (facet, opposite) in mesh.local_facets(k) {
            let mut key = facet.clone();
            key.sort_unstable();
            match lookup.get(&key) {
                Some(&f) => {
                    let face = &mut faces[f];
                    if face.minus.is_some() {
                        return Err(MeshError::NonManifold { vertices: key });
                    }
                    face.minus = Some(k);
                    element_faces[k].push(f);
                }
                None => {
                    let pts: Vec<Point> = facet.iter().map(|&v| verts[v]).collect();
                    let (normal, measure) = match opposite {
                        None => {
                            // Counter-clockwise edge: outward normal is the tangent rotated by -90°.
                            let t = sub(&pts[1], &pts[0]);
                            let len = norm(&t);
                            ([t[1] / len, -t[0] / len, 0.0], len)
                        }
                        Some(opp) => {
                            let c = cross(&sub(&pts[1], &pts[0]), &sub(&pts[2], &pts[0]));
                            let len = norm(&c);
                            let mut n = c.map(|x| x / len);
                            if dot(&n, &sub(&verts[opp], &pts[0])) > 0.0 {
                                n = n.map(|x| -x);
                            }
                            (n, 0.5 * len)
                        }
                    };
                    let mut diameter: f64 = 0.0;
                    for i in 0..pts.len() {
                        for j in i + 1..pts.len() {
                            diameter = diameter.max(distance(&pts[i], &pts[j]));
                        }
                    }
                    lookup.insert(key, faces.len());
                    element_faces[k].push(faces.len());
                    faces.push(Face { vertices: facet, plus: k, minus: None, normal, diameter, measure });
                }
            }
        }
    }

    let mut neighbors = vec![Vec::new(); mesh.num_elements()];
    for face in &faces {
        if let Some(minus) = face.minus {
            neighbors[face.plus].push(minus);
            neighbors[minus].push(face.plus);
        }
    }
    for n in &mut neighbors {
        n.sort_unstable();
    }
    Ok(FaceTopology { faces, element_faces, neighbors })
}
