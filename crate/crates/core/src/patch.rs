//! Element patches: each element is grown into an agglomeration of `t` face-connected
//! elements by repeatedly adding the nearest face neighbour of the current patch.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::mesh::{ElementGeometry, FaceTopology, Mesh};
use crate::quadrature::{map_rule, simplex_rule, MAX_ORDER};
use crate::reconstruction::{fit_local, ReconstructionError};
use crate::{distance, Point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PatchError {
    #[error("element {element}: only {reachable} elements reachable, patch needs {wanted}")]
    PatchExhausted { element: usize, reachable: usize, wanted: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    /// The element `K` this patch belongs to.
    pub center: usize,
    /// Patch elements in insertion order; `members[0] == center`.
    pub members: Vec<usize>,
    /// Sampling nodes (member barycenters), aligned with `members`.
    pub nodes: Vec<Point>,
    /// Patch diameter `d_K`.
    pub diameter: f64,
}

impl Patch {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// `dim P^m = binomial(m + dim, dim)`.
pub fn required_dim(m: usize, dim: usize) -> usize {
    (1..=dim).fold(1, |acc, i| acc * (m + i) / i)
}

/// Default patch size: `max(dim P^m + 1, ceil(1.5 dim P^m))` in 2D. Tetrahedral meshes use
/// the factor 1.25, which gives the 5-element patch for linear fits in 3D.
pub fn default_patch_size(m: usize, dim: usize) -> usize {
    let n = required_dim(m, dim);
    let grown = if dim >= 3 { (5 * n).div_ceil(4) } else { (3 * n).div_ceil(2) };
    grown.max(n + 1)
}

/// Two candidate distances closer than this (relative) count as a tie, broken by id.
const TIE_TOLERANCE: f64 = 1e-12;

fn patch_from_members(mesh: &Mesh, geometry: &[ElementGeometry], center: usize, members: Vec<usize>) -> Patch {
    let pts: Vec<Point> = members.iter().flat_map(|&k| mesh.element_points(k)).collect();
    let mut diameter: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            diameter = diameter.max(distance(&pts[i], &pts[j]));
        }
    }
    let nodes = members.iter().map(|&k| geometry[k].barycenter).collect();
    Patch { center, members, nodes, diameter }
}

/// Grows `S(K)` from `{K}`: among all face neighbours of the current patch, the one whose
/// barycenter is nearest to `x_K` is added (lower id on ties) until `t` elements are
/// collected.
pub fn build_patch(
    mesh: &Mesh,
    topology: &FaceTopology,
    geometry: &[ElementGeometry],
    k: usize,
    t: usize,
) -> Result<Patch, PatchError> {
    assert!(t >= 1, "patch size must be positive");
    let xk = geometry[k].barycenter;
    let mut members = vec![k];
    let mut in_patch = BTreeSet::from([k]);
    let mut candidates: BTreeSet<usize> = topology.neighbors(k).iter().copied().collect();
    while members.len() < t {
        let mut best: Option<(usize, f64)> = None;
        for &c in &candidates {
            let d = distance(&geometry[c].barycenter, &xk);
            best = match best {
                Some((_, bd)) if d < bd * (1.0 - TIE_TOLERANCE) => Some((c, d)),
                None => Some((c, d)),
                keep => keep,
            };
        }
        let Some((next, _)) = best else {
            return Err(PatchError::PatchExhausted { element: k, reachable: members.len(), wanted: t });
        };
        candidates.remove(&next);
        in_patch.insert(next);
        members.push(next);
        for &nb in topology.neighbors(next) {
            if !in_patch.contains(&nb) {
                candidates.insert(nb);
            }
        }
    }
    Ok(patch_from_members(mesh, geometry, k, members))
}

/// Adds every face neighbour of the patch (one full ring), ordered by distance to `x_K`.
pub fn grow_ring(mesh: &Mesh, topology: &FaceTopology, geometry: &[ElementGeometry], patch: &Patch) -> Patch {
    let in_patch: BTreeSet<usize> = patch.members.iter().copied().collect();
    let ring: BTreeSet<usize> = patch
        .members
        .iter()
        .flat_map(|&m| topology.neighbors(m).iter().copied())
        .filter(|c| !in_patch.contains(c))
        .collect();
    let xk = geometry[patch.center].barycenter;
    let mut ring: Vec<usize> = ring.into_iter().collect();
    ring.sort_by(|&a, &b| {
        distance(&geometry[a].barycenter, &xk)
            .total_cmp(&distance(&geometry[b].barycenter, &xk))
            .then(a.cmp(&b))
    });
    let mut members = patch.members.clone();
    members.extend(ring);
    patch_from_members(mesh, geometry, patch.center, members)
}

/// Estimates `Λ(m, I_K) = max_p ‖p‖_{L∞(S(K))} / ‖p|_{I_K}‖_{ℓ∞}` as the ∞-norm of the
/// map from sampled values to fitted-polynomial values at sample points spread over the
/// patch (member vertices, sampling nodes and quadrature points).
pub fn lambda_constant(
    mesh: &Mesh,
    geometry: &[ElementGeometry],
    patch: &Patch,
    m: usize,
) -> Result<f64, ReconstructionError> {
    let basis = fit_local(patch, m, mesh.dim())?;
    let order = (2 * m + 2).min(MAX_ORDER[mesh.dim()]);
    let rule = simplex_rule(mesh.dim(), order).expect("order within supported range");
    let mut samples: Vec<Point> = patch.nodes.clone();
    for &member in &patch.members {
        samples.extend(mesh.element_points(member));
        for simplex in &geometry[member].sub_simplices {
            if let Ok((pts, _)) = map_rule(&rule, simplex) {
                samples.extend(pts);
            }
        }
    }
    Ok(samples
        .iter()
        .map(|x| basis.values(x).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_topology, generate_cube_tet, generate_square_tri, mesh_geometry, ElementKind};
    use std::collections::VecDeque;

    #[test]
    fn polynomial_dimensions() {
        assert_eq!(required_dim(1, 3), 4);
        assert_eq!(required_dim(2, 2), 6);
        assert_eq!(required_dim(3, 3), 20);
        assert_eq!(required_dim(4, 1), 5);
        // Brute-force monomial count.
        for m in 0..6 {
            for dim in 1..=3 {
                let count = (0..=m)
                    .flat_map(|a| (0..=m).flat_map(move |b| (0..=m).map(move |c| (a, b, c))))
                    .filter(|&(a, b, c)| {
                        a + b + c <= m && (dim >= 2 || b == 0) && (dim >= 3 || c == 0)
                    })
                    .count();
                assert_eq!(required_dim(m, dim), count);
            }
        }
    }

    #[test]
    fn default_sizes() {
        assert_eq!(default_patch_size(1, 3), 5);
        assert_eq!(default_patch_size(1, 2), 5);
        assert_eq!(default_patch_size(3, 2), 15);
        for m in 1..=5 {
            for dim in 2..=3 {
                assert!(default_patch_size(m, dim) > required_dim(m, dim));
            }
        }
    }

    fn setup(mesh: &Mesh) -> (FaceTopology, Vec<ElementGeometry>) {
        (build_topology(mesh).unwrap(), mesh_geometry(mesh).unwrap())
    }

    fn connected(topo: &FaceTopology, members: &[usize]) -> bool {
        let set: BTreeSet<usize> = members.iter().copied().collect();
        let mut seen = BTreeSet::from([members[0]]);
        let mut queue = VecDeque::from([members[0]]);
        while let Some(e) = queue.pop_front() {
            for &nb in topo.neighbors(e) {
                if set.contains(&nb) && seen.insert(nb) {
                    queue.push_back(nb);
                }
            }
        }
        seen.len() == set.len()
    }

    #[test]
    fn singleton_patch() {
        let mesh = generate_square_tri(2, 1.0);
        let (topo, geom) = setup(&mesh);
        let p = build_patch(&mesh, &topo, &geom, 3, 1).unwrap();
        assert_eq!(p.members, vec![3]);
        assert_eq!(p.nodes, vec![geom[3].barycenter]);
    }

    #[test]
    fn interior_tet_takes_its_face_neighbours() {
        // A regular tetrahedron with one tetrahedron glued to each face, apex mirrored
        // through the face centroid.
        let mut vertices = vec![[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]];
        let mut elements = vec![vec![0, 1, 2, 3]];
        for skip in 0..4 {
            let face: Vec<usize> = (0..4).filter(|&i| i != skip).collect();
            let c: Point = std::array::from_fn(|d| face.iter().map(|&i| vertices[i][d]).sum::<f64>() / 3.0);
            let apex: Point = std::array::from_fn(|d| 2.0 * c[d] - vertices[skip][d]);
            vertices.push(apex);
            elements.push(vec![face[0], face[1], face[2], vertices.len() - 1]);
        }
        let mesh = Mesh::new(3, vertices, elements, ElementKind::Simplex).unwrap();
        let (topo, geom) = setup(&mesh);
        assert_eq!(topo.neighbors(0), &[1, 2, 3, 4]);
        let p = build_patch(&mesh, &topo, &geom, 0, 5).unwrap();
        assert_eq!(p.members, vec![0, 1, 2, 3, 4]);
        let basis = crate::reconstruction::fit_local(&p, 1, 3).unwrap();
        assert_eq!(basis.coeffs.shape(), (5, 4));
    }

    #[test]
    fn structured_tet_patch_is_connected() {
        let mesh = generate_cube_tet(3);
        let (topo, geom) = setup(&mesh);
        for k in 0..mesh.num_elements() {
            let p = build_patch(&mesh, &topo, &geom, k, 5).unwrap();
            assert!(connected(&topo, &p.members), "element {k}");
        }
    }

    #[test]
    fn corner_triangle_patch_is_connected_and_nearest() {
        let mesh = generate_square_tri(2, 1.0);
        let (topo, geom) = setup(&mesh);
        let p = build_patch(&mesh, &topo, &geom, 0, 4).unwrap();
        assert_eq!(p.members[0], 0);
        assert!(connected(&topo, &p.members));
        // Oracle: breadth-first growth, always taking the nearest element adjacent to the
        // current set, recomputed from scratch each step.
        let mut set = vec![0usize];
        while set.len() < 4 {
            let frontier: BTreeSet<usize> = set
                .iter()
                .flat_map(|&e| topo.neighbors(e).iter().copied())
                .filter(|e| !set.contains(e))
                .collect();
            let next = frontier
                .into_iter()
                .min_by(|&a, &b| {
                    distance(&geom[a].barycenter, &geom[0].barycenter)
                        .total_cmp(&distance(&geom[b].barycenter, &geom[0].barycenter))
                        .then(a.cmp(&b))
                })
                .unwrap();
            set.push(next);
        }
        assert_eq!(p.members, set);
    }

    #[test]
    fn patches_are_deterministic_and_connected() {
        let mesh = generate_square_tri(6, 1.0);
        let (topo, geom) = setup(&mesh);
        for k in 0..mesh.num_elements() {
            let a = build_patch(&mesh, &topo, &geom, k, 9).unwrap();
            let b = build_patch(&mesh, &topo, &geom, k, 9).unwrap();
            assert_eq!(a, b);
            assert!(connected(&topo, &a.members));
            let unique: BTreeSet<usize> = a.members.iter().copied().collect();
            assert_eq!(unique.len(), 9);
        }
    }

    #[test]
    fn patch_diameter_scales_with_h() {
        for n in [4usize, 8, 16] {
            let mesh = generate_square_tri(n, 1.0);
            let (topo, geom) = setup(&mesh);
            let h = geom.iter().map(|g| g.diameter).fold(0.0, f64::max);
            for m in 1..=3 {
                let t = default_patch_size(m, 2);
                let d = (0..mesh.num_elements())
                    .map(|k| build_patch(&mesh, &topo, &geom, k, t).unwrap().diameter)
                    .fold(0.0, f64::max);
                assert!(d / h <= 10.0, "n={n} m={m}: d/h = {}", d / h);
            }
        }
    }

    #[test]
    fn exhausted() {
        let mesh = generate_square_tri(1, 1.0);
        let (topo, geom) = setup(&mesh);
        assert_eq!(
            build_patch(&mesh, &topo, &geom, 0, 3),
            Err(PatchError::PatchExhausted { element: 0, reachable: 2, wanted: 3 })
        );
    }

    #[test]
    fn ring_growth_adds_all_neighbours() {
        let mesh = generate_square_tri(4, 1.0);
        let (topo, geom) = setup(&mesh);
        let p = build_patch(&mesh, &topo, &geom, 12, 1).unwrap();
        let grown = grow_ring(&mesh, &topo, &geom, &p);
        assert_eq!(grown.len(), 1 + topo.neighbors(12).len());
    }

    #[test]
    fn lambda_for_constants_is_one() {
        let mesh = generate_square_tri(4, 1.0);
        let (topo, geom) = setup(&mesh);
        let p = build_patch(&mesh, &topo, &geom, 9, 5).unwrap();
        assert!((lambda_constant(&mesh, &geom, &p, 0).unwrap() - 1.0).abs() < 1e-12);
        assert!(lambda_constant(&mesh, &geom, &p, 1).unwrap() >= 1.0);
    }

    #[test]
    fn lambda_blows_up_for_nearly_collinear_nodes() {
        let mesh = generate_square_tri(2, 1.0);
        let (topo, geom) = setup(&mesh);
        let mut p = build_patch(&mesh, &topo, &geom, 2, 5).unwrap();
        // Sampling nodes on a line up to a 1e-6 wobble: the linear Vandermonde is nearly
        // singular in the transverse direction.
        let n = p.nodes.len();
        for (j, node) in p.nodes.iter_mut().enumerate() {
            let s = j as f64 / (n - 1) as f64;
            *node = [0.1 + 0.8 * s, 0.5 + if j % 2 == 0 { 1e-6 } else { -1e-6 }, 0.0];
        }
        let lambda = lambda_constant(&mesh, &geom, &p, 1).unwrap();
        assert!(lambda > 1e2, "lambda = {lambda}");
    }
}
