//! Gmsh MSH 2.2 ASCII subset: `$MeshFormat`, `$Nodes`, `$Elements`, element types
//! 2 (triangle) and 4 (tetrahedron).

use std::collections::HashMap;
use std::fmt::Write;

use super::{ElementKind, Mesh, MeshError};
use crate::Point;

const GMSH_TRIANGLE: usize = 2;
const GMSH_TETRAHEDRON: usize = 4;

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Option<(usize, &'a str)> {
        self.inner.by_ref().map(|(i, l)| (i + 1, l.trim())).find(|(_, l)| !l.is_empty())
    }

    fn expect_line(&mut self, what: &str) -> Result<(usize, &'a str), MeshError> {
        self.next_line()
            .ok_or_else(|| MeshError::Parse { line: 0, message: format!("unexpected end of file, expected {what}") })
    }
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, MeshError> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| MeshError::Parse { line, message: format!("expected {what}") })
}

/// Reads an ASCII MSH 2.2 mesh. Lower-dimensional elements (points, lines, and
/// triangles in a tetrahedral mesh that only bound the volume) are ignored; nodes are
/// renumbered densely in file order, keeping only those referenced by imported cells.
pub fn parse_msh(text: &str) -> Result<Mesh, MeshError> {
    let mut lines = Lines { inner: text.lines().enumerate() };
    let mut version = None;
    let mut nodes: Vec<(usize, Point)> = Vec::new();
    let mut triangles: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut tets: Vec<(usize, Vec<usize>)> = Vec::new();

    while let Some((lno, line)) = lines.next_line() {
        match line {
            "$MeshFormat" => {
                let (lno, header) = lines.expect_line("format header")?;
                let mut toks = header.split_whitespace();
                let v = toks.next().unwrap_or_default().to_string();
                if v != "2.2" {
                    return Err(MeshError::UnsupportedVersion(v));
                }
                let file_type: usize = parse_num(toks.next(), lno, "file type")?;
                if file_type != 0 {
                    return Err(MeshError::Unsupported("binary MSH".into()));
                }
                version = Some(v);
            }
            "$Nodes" => {
                let (lno, count) = lines.expect_line("node count")?;
                let count: usize = parse_num(Some(count), lno, "node count")?;
                nodes.reserve(count);
                for _ in 0..count {
                    let (lno, l) = lines.expect_line("node")?;
                    if l.starts_with('$') {
                        return Err(MeshError::BadCount(format!("$Nodes declares {count} nodes")));
                    }
                    let mut t = l.split_whitespace();
                    let id: usize = parse_num(t.next(), lno, "node id")?;
                    let x = parse_num(t.next(), lno, "x")?;
                    let y = parse_num(t.next(), lno, "y")?;
                    let z = parse_num(t.next(), lno, "z")?;
                    nodes.push((id, [x, y, z]));
                }
            }
            "$Elements" => {
                let (lno, count) = lines.expect_line("element count")?;
                let count: usize = parse_num(Some(count), lno, "element count")?;
                for _ in 0..count {
                    let (lno, l) = lines.expect_line("element")?;
                    if l.starts_with('$') {
                        return Err(MeshError::BadCount(format!("$Elements declares {count} elements")));
                    }
                    let toks: Vec<&str> = l.split_whitespace().collect();
                    let id: usize = parse_num(toks.first().copied(), lno, "element id")?;
                    let ty: usize = parse_num(toks.get(1).copied(), lno, "element type")?;
                    let ntags: usize = parse_num(toks.get(2).copied(), lno, "tag count")?;
                    let node_toks = toks.get(3 + ntags..).unwrap_or_default();
                    let nodes_of = |n: usize| -> Result<Vec<usize>, MeshError> {
                        if node_toks.len() != n {
                            return Err(MeshError::Parse { line: lno, message: format!("expected {n} nodes") });
                        }
                        node_toks.iter().map(|t| parse_num(Some(t), lno, "node id")).collect()
                    };
                    match ty {
                        GMSH_TRIANGLE => triangles.push((id, nodes_of(3)?)),
                        GMSH_TETRAHEDRON => tets.push((id, nodes_of(4)?)),
                        _ => {}
                    }
                }
            }
            _ if line.starts_with("$End") => {}
            _ if line.starts_with('$') => {
                // Unknown section: skip to its end marker.
                let end = format!("$End{}", &line[1..]);
                while let Some((_, l)) = lines.next_line() {
                    if l == end {
                        break;
                    }
                }
            }
            _ => {
                return Err(MeshError::Parse { line: lno, message: format!("unexpected content {line:?}") });
            }
        }
    }

    if version.is_none() {
        return Err(MeshError::UnsupportedVersion("missing $MeshFormat".into()));
    }
    // A tetrahedral mesh usually carries its boundary triangles too; that is only
    // "mixed" if some triangle is not a face of any tetrahedron.
    let (dim, cells) = if tets.is_empty() {
        (2, triangles)
    } else {
        let mut tet_faces = std::collections::HashSet::new();
        for (_, t) in &tets {
            for skip in 0..4 {
                let mut f: Vec<usize> = (0..4).filter(|&i| i != skip).map(|i| t[i]).collect();
                f.sort_unstable();
                tet_faces.insert(f);
            }
        }
        for (_, tri) in &triangles {
            let mut f = tri.clone();
            f.sort_unstable();
            if !tet_faces.contains(&f) {
                return Err(MeshError::MixedDimension);
            }
        }
        (3, tets)
    };
    if cells.is_empty() {
        return Err(MeshError::Empty);
    }

    let position: HashMap<usize, usize> = nodes.iter().enumerate().map(|(i, (id, _))| (*id, i)).collect();
    let mut used = vec![false; nodes.len()];
    for (id, cell) in &cells {
        for n in cell {
            match position.get(n) {
                Some(&p) => used[p] = true,
                None => return Err(MeshError::DanglingNode { element: *id, node: *n }),
            }
        }
    }
    let mut dense = vec![usize::MAX; nodes.len()];
    let mut vertices = Vec::new();
    for (p, (_, x)) in nodes.iter().enumerate() {
        if used[p] {
            dense[p] = vertices.len();
            let mut x = *x;
            if dim == 2 {
                x[2] = 0.0;
            }
            vertices.push(x);
        }
    }
    let elements = cells
        .iter()
        .map(|(_, c)| c.iter().map(|n| dense[position[n]]).collect())
        .collect();
    Mesh::new(dim, vertices, elements, ElementKind::Simplex)
}

/// Serializes a simplex mesh to MSH 2.2 ASCII with 1-based node and element ids.
pub fn write_msh(mesh: &Mesh) -> Result<String, MeshError> {
    if mesh.kind() != ElementKind::Simplex {
        return Err(MeshError::Unsupported("MSH export of polygon meshes".into()));
    }
    let ty = if mesh.dim() == 2 { GMSH_TRIANGLE } else { GMSH_TETRAHEDRON };
    let mut s = String::new();
    s.push_str("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n");
    let _ = writeln!(s, "{}", mesh.num_vertices());
    for (i, v) in mesh.vertices().iter().enumerate() {
        let _ = writeln!(s, "{} {:?} {:?} {:?}", i + 1, v[0], v[1], v[2]);
    }
    s.push_str("$EndNodes\n$Elements\n");
    let _ = writeln!(s, "{}", mesh.num_elements());
    for (i, el) in mesh.elements().iter().enumerate() {
        let _ = write!(s, "{} {ty} 2 0 1", i + 1);
        for v in el {
            let _ = write!(s, " {}", v + 1);
        }
        s.push('\n');
    }
    s.push_str("$EndElements\n");
    Ok(s)
}
