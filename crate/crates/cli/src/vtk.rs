use std::fmt::Write as _;

use patchdg::mesh::{ElementKind, Mesh};
use patchdg::reconstruction::{ReconstructedField, Space};

fn cell_type(mesh: &Mesh) -> u8 {
    match (mesh.kind(), mesh.dim()) {
        (ElementKind::Polygon, _) => 7,
        (_, 2) => 5,
        _ => 10,
    }
}

/// Legacy ASCII VTK text for a discontinuous field: every element writes its own copy of
/// its vertices, carrying `R u_h` evaluated there, and the sampled DOF as cell data.
pub fn vtk_text(mesh: &Mesh, space: &Space, dofs: &[f64], name: &str) -> String {
    assert_eq!(dofs.len(), mesh.num_elements(), "one value per element expected");
    let field = ReconstructedField::new(space, dofs);
    let n_points: usize = mesh.elements().iter().map(Vec::len).sum();
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(s, "{name}");
    s.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {n_points} double");
    let mut values = Vec::with_capacity(n_points);
    for (k, el) in mesh.elements().iter().enumerate() {
        for &v in el {
            let x = mesh.vertices()[v];
            let _ = writeln!(s, "{:.17e} {:.17e} {:.17e}", x[0], x[1], x[2]);
            values.push(field.value(k, &x));
        }
    }
    let _ = writeln!(s, "CELLS {} {}", mesh.num_elements(), n_points + mesh.num_elements());
    let mut next = 0;
    for el in mesh.elements() {
        let ids: Vec<String> = (next..next + el.len()).map(|i| i.to_string()).collect();
        let _ = writeln!(s, "{} {}", el.len(), ids.join(" "));
        next += el.len();
    }
    let _ = writeln!(s, "CELL_TYPES {}", mesh.num_elements());
    let t = cell_type(mesh);
    for _ in 0..mesh.num_elements() {
        let _ = writeln!(s, "{t}");
    }
    let _ = writeln!(s, "POINT_DATA {n_points}");
    s.push_str("SCALARS reconstruction double 1\nLOOKUP_TABLE default\n");
    for v in values {
        let _ = writeln!(s, "{v:.17e}");
    }
    let _ = writeln!(s, "CELL_DATA {}", mesh.num_elements());
    s.push_str("SCALARS dof double 1\nLOOKUP_TABLE default\n");
    for v in dofs {
        let _ = writeln!(s, "{v:.17e}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use patchdg::mesh::{build_topology, generate_cube_tet, generate_square_tri};
    use patchdg::reconstruction::{build_space, interpolate};

    fn point_data(text: &str) -> Vec<f64> {
        let lines: Vec<&str> = text.lines().collect();
        let start = lines.iter().position(|l| l.starts_with("POINT_DATA")).unwrap();
        let n: usize = lines[start].split_whitespace().nth(1).unwrap().parse().unwrap();
        lines[start + 3..start + 3 + n].iter().map(|l| l.parse().unwrap()).collect()
    }

    #[test]
    fn constant_field() {
        let mesh = generate_square_tri(3, 1.0);
        let topo = build_topology(&mesh).unwrap();
        let space = build_space(&mesh, &topo, 1, 5).unwrap();
        let text = vtk_text(&mesh, &space, &vec![1.0; mesh.num_elements()], "one");
        assert!(text.starts_with("# vtk DataFile Version 3.0\n"));
        assert!(text.contains("CELL_TYPES 18\n5\n"));
        assert!(point_data(&text).iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn linear_interpolant_matches_vertex_coordinates() {
        let mesh = generate_cube_tet(2);
        let topo = build_topology(&mesh).unwrap();
        let space = build_space(&mesh, &topo, 1, 5).unwrap();
        let u = interpolate(&space, |x| x[0]);
        let text = vtk_text(&mesh, &space, &u, "x");
        assert!(text.contains("\n10\n"));
        let xs: Vec<f64> = mesh.elements().iter().flat_map(|el| el.iter().map(|&v| mesh.vertices()[v][0])).collect();
        let vals = point_data(&text);
        assert_eq!(xs.len(), vals.len());
        assert!(xs.iter().zip(&vals).all(|(a, b)| (a - b).abs() < 1e-10));
    }
}
