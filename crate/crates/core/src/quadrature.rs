//! Quadrature on reference simplices and their affine images.
//!
//! Triangle and tetrahedron rules are collapsed-coordinate (conical product) rules:
//! Gauss–Jacobi in the collapsed directions absorbs the Jacobian of the Duffy map, so
//! every weight is positive and every point lies strictly inside the simplex. An
//! `n`-point rule per direction integrates total degree `2n - 1` exactly.

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

use crate::{sub, Point};

/// Highest exactness available per dimension.
pub const MAX_ORDER: [usize; 4] = [0, 21, 12, 8];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("no rule of order {order} in dimension {dim}")]
    OrderUnsupported { dim: usize, order: usize },
    #[error("degenerate simplex")]
    DegenerateSimplex,
}

/// Points and weights on the reference simplex with vertices `0, e_1, ..., e_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub dim: usize,
    pub order: usize,
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Gauss–Jacobi rule on `[0, 1]` for the weight `(1 - x)^a`.
fn gauss_jacobi_unit(n: usize, a: u32) -> (Vec<f64>, Vec<f64>) {
    let alpha = a as f64;
    // Golub–Welsch on the Jacobi matrix of P^(alpha, 0) over [-1, 1].
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let s = 2.0 * kf + alpha;
        jac[(k, k)] = if k == 0 { -alpha / (alpha + 2.0) } else { -alpha * alpha / (s * (s + 2.0)) };
        if k + 1 < n {
            let k1 = kf + 1.0;
            let s1 = 2.0 * k1 + alpha;
            let b = (4.0 * k1 * (k1 + alpha) * k1 * (k1 + alpha) / (s1 * s1 * (s1 + 1.0) * (s1 - 1.0))).sqrt();
            jac[(k, k + 1)] = b;
            jac[(k + 1, k)] = b;
        }
    }
    let eig = SymmetricEigen::new(jac);
    // Total mass of (1 - x)^a on [0, 1].
    let mu0 = 1.0 / (alpha + 1.0);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (0.5 * (1.0 + eig.eigenvalues[i]), mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    pairs.into_iter().unzip()
}

/// Rule on the reference simplex of dimension `dim` exact for total degree `order`.
pub fn simplex_rule(dim: usize, order: usize) -> Result<QuadRule, QuadratureError> {
    if !(1..=3).contains(&dim) || order > MAX_ORDER[dim] {
        return Err(QuadratureError::OrderUnsupported { dim, order });
    }
    let n = order / 2 + 1;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    match dim {
        1 => {
            let (x, w) = gauss_jacobi_unit(n, 0);
            points.extend(x.iter().map(|&x| [x, 0.0, 0.0]));
            weights = w;
        }
        2 => {
            let (u, wu) = gauss_jacobi_unit(n, 1);
            let (v, wv) = gauss_jacobi_unit(n, 0);
            for i in 0..n {
                for j in 0..n {
                    points.push([u[i], v[j] * (1.0 - u[i]), 0.0]);
                    weights.push(wu[i] * wv[j]);
                }
            }
        }
        _ => {
            let (u, wu) = gauss_jacobi_unit(n, 2);
            let (v, wv) = gauss_jacobi_unit(n, 1);
            let (w, ww) = gauss_jacobi_unit(n, 0);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let y = v[j] * (1.0 - u[i]);
                        let z = w[k] * (1.0 - u[i]) * (1.0 - v[j]);
                        points.push([u[i], y, z]);
                        weights.push(wu[i] * wv[j] * ww[k]);
                    }
                }
            }
        }
    }
    Ok(QuadRule { dim, order, points, weights })
}

/// Affine image of `rule` on the simplex with the given vertices, which may be embedded in
/// a higher-dimensional space (a segment or triangle in 3D). Weights are scaled by the
/// measure of the parallelotope spanned by the simplex edges.
pub fn map_rule(rule: &QuadRule, simplex: &[Point]) -> Result<(Vec<Point>, Vec<f64>), QuadratureError> {
    let d = rule.dim;
    assert_eq!(simplex.len(), d + 1, "simplex vertex count does not match rule dimension");
    let edges: Vec<Point> = (1..=d).map(|i| sub(&simplex[i], &simplex[0])).collect();
    let mut longest: f64 = 0.0;
    for e in &edges {
        longest = longest.max(crate::norm(e));
    }
    // Measure of the parallelotope spanned by the edges, computed directly so that the
    // conditioning is not squared as it would be through a Gram determinant.
    let scale = match d {
        0 => 1.0,
        1 => crate::norm(&edges[0]),
        2 => crate::norm(&crate::cross(&edges[0], &edges[1])),
        _ => crate::dot(&edges[0], &crate::cross(&edges[1], &edges[2])).abs(),
    };
    if !(scale > 1e-14 * longest.powi(d as i32)) {
        return Err(QuadratureError::DegenerateSimplex);
    }
    let points = rule
        .points
        .iter()
        .map(|xi| {
            let mut x = simplex[0];
            for (i, e) in edges.iter().enumerate() {
                for c in 0..3 {
                    x[c] += xi[i] * e[c];
                }
            }
            x
        })
        .collect();
    let weights = rule.weights.iter().map(|w| w * scale).collect();
    Ok((points, weights))
}

/// Rule on a mesh facet: Gauss on a segment (2D meshes) or the triangle rule on a
/// triangular facet (3D meshes), weighted by surface measure.
pub fn face_rule(dim: usize, order: usize, face: &[Point]) -> Result<(Vec<Point>, Vec<f64>), QuadratureError> {
    let rule = simplex_rule(dim - 1, order)?;
    map_rule(&rule, face)
}
