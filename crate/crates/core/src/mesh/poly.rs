//! Line-oriented polygon mesh format:
//!
//! ```text
//! V E
//! x y            (V lines)
//! k i1 ... ik    (E lines, 0-based vertex ids, counter-clockwise)
//! ```
//!
//! Blank lines and lines starting with `#` are skipped.

use std::fmt::Write;

use super::{ElementKind, Mesh, MeshError};

pub fn parse_poly(text: &str) -> Result<Mesh, MeshError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let parse_err = |line: usize, message: &str| MeshError::Parse { line, message: message.to_string() };

    let (lno, header) = lines.next().ok_or_else(|| MeshError::BadCount("missing \"V E\" header".into()))?;
    let counts: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(lno, "expected two counts")))
        .collect::<Result<_, _>>()?;
    let [nv, ne] = counts[..] else {
        return Err(MeshError::BadCount(format!("header {header:?} must hold exactly two counts")));
    };

    let mut vertices = Vec::with_capacity(nv);
    for i in 0..nv {
        let (lno, l) = lines
            .next()
            .ok_or_else(|| MeshError::BadCount(format!("expected {nv} vertices, found {i}")))?;
        let xy: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| parse_err(lno, "bad coordinate")))
            .collect::<Result<_, _>>()?;
        if xy.len() != 2 {
            return Err(MeshError::BadCount(format!("line {lno}: vertex needs 2 coordinates")));
        }
        vertices.push([xy[0], xy[1], 0.0]);
    }

    let mut elements = Vec::with_capacity(ne);
    for i in 0..ne {
        let (lno, l) = lines
            .next()
            .ok_or_else(|| MeshError::BadCount(format!("expected {ne} elements, found {i}")))?;
        let ids: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| parse_err(lno, "bad vertex id")))
            .collect::<Result<_, _>>()?;
        match ids.split_first() {
            Some((&k, rest)) if rest.len() == k => elements.push(rest.to_vec()),
            _ => return Err(MeshError::BadCount(format!("line {lno}: vertex count does not match"))),
        }
    }
    if let Some((lno, _)) = lines.next() {
        return Err(MeshError::BadCount(format!("unexpected trailing content on line {lno}")));
    }
    Mesh::new(2, vertices, elements, ElementKind::Polygon)
}

pub fn write_poly(mesh: &Mesh) -> Result<String, MeshError> {
    if mesh.dim() != 2 {
        return Err(MeshError::Unsupported("polygon export needs a 2D mesh".into()));
    }
    let mut s = String::new();
    let _ = writeln!(s, "{} {}", mesh.num_vertices(), mesh.num_elements());
    for v in mesh.vertices() {
        let _ = writeln!(s, "{:?} {:?}", v[0], v[1]);
    }
    for el in mesh.elements() {
        let _ = write!(s, "{}", el.len());
        for v in el {
            let _ = write!(s, " {v}");
        }
        s.push('\n');
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_topology, mesh_geometry};

    #[test]
    fn unit_square() {
        let mesh = parse_poly("4 1\n0 0\n1 0\n1 1\n0 1\n4 0 1 2 3\n").unwrap();
        assert_eq!(mesh.num_elements(), 1);
        let g = mesh_geometry(&mesh).unwrap();
        assert!((g[0].measure - 1.0).abs() < 1e-15);
    }

    #[test]
    fn clockwise_rejected() {
        let err = parse_poly("4 1\n0 0\n0 1\n1 1\n1 0\n4 0 1 2 3\n").unwrap_err();
        assert_eq!(err, MeshError::NonCCW { element: 0 });
    }

    #[test]
    fn bad_counts() {
        assert!(matches!(parse_poly("4 1\n0 0\n1 0\n1 1\n"), Err(MeshError::BadCount(_))));
        assert!(matches!(parse_poly("4 1\n0 0\n1 0\n1 1\n0 1\n5 0 1 2 3\n"), Err(MeshError::BadCount(_))));
    }

    #[test]
    fn quad_grid() {
        let text = "# 2x2 quads on [-1,1]^2\n9 4\n\
            -1 -1\n0 -1\n1 -1\n-1 0\n0 0\n1 0\n-1 1\n0 1\n1 1\n\
            4 0 1 4 3\n4 1 2 5 4\n4 3 4 7 6\n4 4 5 8 7\n";
        let mesh = parse_poly(text).unwrap();
        assert_eq!((mesh.num_elements(), mesh.num_vertices()), (4, 9));
        let topo = build_topology(&mesh).unwrap();
        // Enumerate shared edges by brute force.
        let mut shared = 0;
        for a in 0..4 {
            for b in a + 1..4 {
                let ea = mesh.element(a);
                let common = mesh.element(b).iter().filter(|v| ea.contains(v)).count();
                if common == 2 {
                    shared += 1;
                }
            }
        }
        assert_eq!(shared, 4);
        assert_eq!(topo.num_interior(), 4);
        let back = parse_poly(&write_poly(&mesh).unwrap()).unwrap();
        assert_eq!(back, mesh);
    }
}
