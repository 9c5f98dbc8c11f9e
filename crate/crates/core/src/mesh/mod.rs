//! Meshes of simplices (2D/3D) and star-shaped polygons (2D).

mod generate;
mod geometry;
mod msh;
mod poly;
mod topology;

pub use generate::{generate_cube_tet, generate_square_tri};
pub use geometry::{element_geometry, mesh_geometry, ElementGeometry};
pub use msh::{parse_msh, write_msh};
pub use poly::{parse_poly, write_poly};
pub use topology::{build_topology, Face, FaceTopology};

use thiserror::Error;

use crate::{cross, sub, Point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("unsupported MSH version {0:?} (only 2.2 ASCII is read)")]
    UnsupportedVersion(String),
    #[error("element {element} references missing node {node}")]
    DanglingNode { element: usize, node: usize },
    #[error("mesh mixes triangles and tetrahedra")]
    MixedDimension,
    #[error("polygon {element} is oriented clockwise")]
    NonCCW { element: usize },
    #[error("polygon {element} is not star-shaped with respect to its centroid")]
    NotStarShaped { element: usize },
    #[error("count mismatch: {0}")]
    BadCount(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("facet {vertices:?} is shared by more than two elements")]
    NonManifold { vertices: Vec<usize> },
    #[error("element {element} is degenerate")]
    DegenerateElement { element: usize },
    #[error("element {element} has {found} vertices, expected {expected}")]
    WrongVertexCount { element: usize, found: usize, expected: usize },
    #[error("element {element} references vertex {vertex} out of range")]
    VertexOutOfRange { element: usize, vertex: usize },
    #[error("unsupported mesh: {0}")]
    Unsupported(String),
    #[error("mesh has no elements")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    Simplex,
    Polygon,
}

/// An immutable mesh. Vertices always carry three coordinates; 2D meshes use `z = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dim: usize,
    vertices: Vec<Point>,
    elements: Vec<Vec<usize>>,
    kind: ElementKind,
}

impl Mesh {
    /// Validates connectivity and orients simplices positively.
    ///
    /// Polygons must already be counter-clockwise and star-shaped with respect to their
    /// centroid; they are rejected otherwise.
    pub fn new(
        dim: usize,
        vertices: Vec<Point>,
        mut elements: Vec<Vec<usize>>,
        kind: ElementKind,
    ) -> Result<Self, MeshError> {
        if !(dim == 2 || dim == 3) {
            return Err(MeshError::Unsupported(format!("dimension {dim}")));
        }
        if kind == ElementKind::Polygon && dim != 2 {
            return Err(MeshError::Unsupported("polygons are 2D only".into()));
        }
        if elements.is_empty() {
            return Err(MeshError::Empty);
        }
        for (e, verts) in elements.iter_mut().enumerate() {
            if let Some(&v) = verts.iter().find(|&&v| v >= vertices.len()) {
                return Err(MeshError::VertexOutOfRange { element: e, vertex: v });
            }
            match kind {
                ElementKind::Simplex => {
                    if verts.len() != dim + 1 {
                        return Err(MeshError::WrongVertexCount {
                            element: e,
                            found: verts.len(),
                            expected: dim + 1,
                        });
                    }
                    let vol = signed_volume(&vertices, verts, dim);
                    if vol == 0.0 {
                        return Err(MeshError::DegenerateElement { element: e });
                    }
                    if vol < 0.0 {
                        verts.swap(0, 1);
                    }
                }
                ElementKind::Polygon => {
                    if verts.len() < 3 {
                        return Err(MeshError::WrongVertexCount {
                            element: e,
                            found: verts.len(),
                            expected: 3,
                        });
                    }
                    if polygon_area(&vertices, verts) <= 0.0 {
                        return Err(MeshError::NonCCW { element: e });
                    }
                }
            }
        }
        let mesh = Mesh { dim, vertices, elements, kind };
        if kind == ElementKind::Polygon {
            for e in 0..mesh.num_elements() {
                geometry::check_star_shaped(&mesh, e)?;
            }
        }
        Ok(mesh)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn elements(&self) -> &[Vec<usize>] {
        &self.elements
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn element(&self, k: usize) -> &[usize] {
        &self.elements[k]
    }

    pub fn element_points(&self, k: usize) -> Vec<Point> {
        self.elements[k].iter().map(|&v| self.vertices[v]).collect()
    }

    /// Local facets of element `k` in its own orientation: edges for 2D elements
    /// (counter-clockwise traversal) and the four triangles of a tetrahedron, each
    /// paired with the opposite vertex.
    pub(crate) fn local_facets(&self, k: usize) -> Vec<(Vec<usize>, Option<usize>)> {
        let el = &self.elements[k];
        match self.dim {
            2 => (0..el.len())
                .map(|i| (vec![el[i], el[(i + 1) % el.len()]], None))
                .collect(),
            _ => (0..4)
                .map(|skip| {
                    let facet = (0..4).filter(|&i| i != skip).map(|i| el[i]).collect();
                    (facet, Some(el[skip]))
                })
                .collect(),
        }
    }
}

pub(crate) fn signed_volume(vertices: &[Point], el: &[usize], dim: usize) -> f64 {
    let p0 = vertices[el[0]];
    if dim == 2 {
        let a = sub(&vertices[el[1]], &p0);
        let b = sub(&vertices[el[2]], &p0);
        0.5 * (a[0] * b[1] - a[1] * b[0])
    } else {
        let a = sub(&vertices[el[1]], &p0);
        let b = sub(&vertices[el[2]], &p0);
        let c = sub(&vertices[el[3]], &p0);
        crate::dot(&a, &cross(&b, &c)) / 6.0
    }
}

/// Shoelace area; positive for counter-clockwise polygons.
pub(crate) fn polygon_area(vertices: &[Point], el: &[usize]) -> f64 {
    let n = el.len();
    let mut twice = 0.0;
    for i in 0..n {
        let p = vertices[el[i]];
        let q = vertices[el[(i + 1) % n]];
        twice += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * twice
}
