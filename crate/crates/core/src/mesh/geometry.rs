use super::{polygon_area, signed_volume, ElementKind, Mesh, MeshError};
use crate::{distance, Point};

/// Per-element geometric data.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementGeometry {
    /// Barycenter `x_K`; this is the sampling node of the element.
    pub barycenter: Point,
    /// Diameter `h_K` (largest vertex distance).
    pub diameter: f64,
    /// Area (2D) or volume (3D).
    pub measure: f64,
    /// Simplices tiling the element; a polygon is fanned from its centroid.
    pub sub_simplices: Vec<Vec<Point>>,
}

pub fn element_geometry(mesh: &Mesh, k: usize) -> Result<ElementGeometry, MeshError> {
    let pts = mesh.element_points(k);
    let dim = mesh.dim();
    let mut diameter: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            diameter = diameter.max(distance(&pts[i], &pts[j]));
        }
    }
    let geom = match mesh.kind() {
        ElementKind::Simplex => {
            let mut c = [0.0; 3];
            for p in &pts {
                for a in 0..3 {
                    c[a] += p[a];
                }
            }
            c.iter_mut().for_each(|x| *x /= pts.len() as f64);
            ElementGeometry {
                barycenter: c,
                diameter,
                measure: signed_volume(mesh.vertices(), mesh.element(k), dim).abs(),
                sub_simplices: vec![pts],
            }
        }
        ElementKind::Polygon => {
            let area = polygon_area(mesh.vertices(), mesh.element(k));
            let c = polygon_centroid(&pts, area);
            let n = pts.len();
            let sub_simplices = (0..n).map(|i| vec![c, pts[i], pts[(i + 1) % n]]).collect();
            ElementGeometry { barycenter: c, diameter, measure: area, sub_simplices }
        }
    };
    if !(geom.measure > 1e-14 * diameter.powi(dim as i32)) {
        return Err(MeshError::DegenerateElement { element: k });
    }
    Ok(geom)
}

pub fn mesh_geometry(mesh: &Mesh) -> Result<Vec<ElementGeometry>, MeshError> {
    (0..mesh.num_elements()).map(|k| element_geometry(mesh, k)).collect()
}

fn polygon_centroid(pts: &[Point], area: f64) -> Point {
    let n = pts.len();
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let p = pts[i];
        let q = pts[(i + 1) % n];
        let cr = p[0] * q[1] - q[0] * p[1];
        cx += (p[0] + q[0]) * cr;
        cy += (p[1] + q[1]) * cr;
    }
    [cx / (6.0 * area), cy / (6.0 * area), 0.0]
}

pub(super) fn check_star_shaped(mesh: &Mesh, k: usize) -> Result<(), MeshError> {
    let pts = mesh.element_points(k);
    let area = polygon_area(mesh.vertices(), mesh.element(k));
    let c = polygon_centroid(&pts, area);
    let n = pts.len();
    for i in 0..n {
        let (p, q) = (pts[i], pts[(i + 1) % n]);
        let fan = 0.5 * ((p[0] - c[0]) * (q[1] - c[1]) - (q[0] - c[0]) * (p[1] - c[1]));
        if fan <= 1e-14 * area {
            return Err(MeshError::NotStarShaped { element: k });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(verts: Vec<Point>, kind: ElementKind) -> Mesh {
        let n = verts.len();
        Mesh::new(2, verts, vec![(0..n).collect()], kind).unwrap()
    }

    #[test]
    fn reference_triangle() {
        let m = single(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], ElementKind::Simplex);
        let g = element_geometry(&m, 0).unwrap();
        assert!((g.barycenter[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((g.barycenter[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!((g.measure - 0.5).abs() < 1e-15);
        assert!((g.diameter - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn unit_square_polygon() {
        let m = single(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]],
            ElementKind::Polygon,
        );
        let g = element_geometry(&m, 0).unwrap();
        assert!((g.barycenter[0] - 0.5).abs() < 1e-15 && (g.barycenter[1] - 0.5).abs() < 1e-15);
        assert_eq!(g.sub_simplices.len(), 4);
        for t in &g.sub_simplices {
            let a = 0.5
                * ((t[1][0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[2][0] - t[0][0]) * (t[1][1] - t[0][1]));
            assert!((a - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn regular_hexagon_area() {
        let verts = (0..6)
            .map(|i| {
                let t = i as f64 * std::f64::consts::PI / 3.0;
                [t.cos(), t.sin(), 0.0]
            })
            .collect();
        let g = element_geometry(&single(verts, ElementKind::Polygon), 0).unwrap();
        assert!((g.measure - 1.5 * 3f64.sqrt()).abs() < 1e-12);
        assert!(g.barycenter[0].abs() < 1e-15 && g.barycenter[1].abs() < 1e-15);
    }

    #[test]
    fn sliver_is_degenerate() {
        let m = single(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, 1e-16, 0.0]], ElementKind::Simplex);
        assert_eq!(element_geometry(&m, 0), Err(MeshError::DegenerateElement { element: 0 }));
    }
}
