use super::{ElementKind, Mesh};

/// Uniform `n × n` grid on `[0, side]²`, each square split into two triangles along
/// its lower-left to upper-right diagonal.
pub fn generate_square_tri(n: usize, side: f64) -> Mesh {
    assert!(n >= 1 && side > 0.0, "need n >= 1 and side > 0");
    let h = side / n as f64;
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            // Pin the far edge so the domain is exactly [0, side]².
            let x = if i == n { side } else { i as f64 * h };
            let y = if j == n { side } else { j as f64 * h };
            vertices.push([x, y, 0.0]);
        }
    }
    let mut elements = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v01, v11) = (idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1));
            elements.push(vec![v00, v10, v11]);
            elements.push(vec![v00, v11, v01]);
        }
    }
    Mesh::new(2, vertices, elements, ElementKind::Simplex).expect("structured square mesh is valid")
}

/// Kuhn triangulation of the unit cube: `n³` sub-cubes, six tetrahedra each, all sharing
/// the sub-cube diagonal.
pub fn generate_cube_tet(n: usize) -> Mesh {
    assert!(n >= 1, "need n >= 1");
    let h = 1.0 / n as f64;
    let coord = |i: usize| if i == n { 1.0 } else { i as f64 * h };
    let idx = |i: usize, j: usize, k: usize| (k * (n + 1) + j) * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1).pow(3));
    for k in 0..=n {
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([coord(i), coord(j), coord(k)]);
            }
        }
    }
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut elements = Vec::with_capacity(6 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                for perm in PERMS {
                    let mut c = [i, j, k];
                    let mut tet = vec![idx(c[0], c[1], c[2])];
                    for axis in perm {
                        c[axis] += 1;
                        tet.push(idx(c[0], c[1], c[2]));
                    }
                    elements.push(tet);
                }
            }
        }
    }
    Mesh::new(3, vertices, elements, ElementKind::Simplex).expect("Kuhn cube mesh is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_topology, mesh_geometry};
    use std::f64::consts::PI;

    #[test]
    fn square_counts() {
        let m = generate_square_tri(1, PI);
        assert_eq!((m.num_elements(), m.num_vertices()), (2, 4));
        let m = generate_square_tri(2, PI);
        assert_eq!(m.num_elements(), 8);
        let area: f64 = mesh_geometry(&m).unwrap().iter().map(|g| g.measure).sum();
        assert!((area - PI * PI).abs() < 1e-12);
    }

    #[test]
    fn square_handshake_identity() {
        let m = generate_square_tri(4, 1.0);
        let topo = build_topology(&m).unwrap();
        let interior = topo.faces().iter().filter(|f| f.minus.is_some()).count();
        let boundary = topo.faces().len() - interior;
        // Count element-edge incidences directly.
        let incidences = m.num_elements() * 3;
        assert_eq!(incidences, 2 * interior + boundary);
        assert_eq!(boundary, 16);
        assert_eq!(interior, (3 * 32 - 16) / 2);
    }

    #[test]
    fn cube_counts_and_volume() {
        let m = generate_cube_tet(1);
        assert_eq!((m.num_elements(), m.num_vertices()), (6, 8));
        let m = generate_cube_tet(2);
        assert_eq!(m.num_elements(), 48);
        let vol: f64 = mesh_geometry(&m).unwrap().iter().map(|g| g.measure).sum();
        assert!((vol - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cube_interior_faces_have_two_tets() {
        let m = generate_cube_tet(2);
        // Brute force: count tets containing each sorted face key.
        let mut counts = std::collections::BTreeMap::<Vec<usize>, usize>::new();
        for el in m.elements() {
            for skip in 0..4 {
                let mut f: Vec<usize> = (0..4).filter(|&i| i != skip).map(|i| el[i]).collect();
                f.sort_unstable();
                *counts.entry(f).or_default() += 1;
            }
        }
        let on_boundary = |f: &Vec<usize>| {
            (0..3).any(|axis| {
                f.iter().all(|&v| m.vertices()[v][axis] == 0.0)
                    || f.iter().all(|&v| m.vertices()[v][axis] == 1.0)
            })
        };
        for (f, c) in &counts {
            assert_eq!(*c, if on_boundary(f) { 1 } else { 2 }, "face {f:?}");
        }
        let topo = build_topology(&m).unwrap();
        assert_eq!(topo.faces().len(), counts.len());
    }
}
