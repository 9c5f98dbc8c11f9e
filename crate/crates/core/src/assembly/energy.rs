use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{element_points, error_quadrature_order, face_points, BoundaryCondition, FormConfig};
use crate::mesh::{FaceTopology, Mesh};
use crate::quadrature::simplex_rule;
use crate::reconstruction::{Jet, PiecewiseField, Space};
use crate::{dot, Error};

fn sum_ordered(parts: Vec<Result<DMatrix<f64>, Error>>, k: usize) -> Result<DMatrix<f64>, Error> {
    let mut g = DMatrix::zeros(k, k);
    for p in parts {
        g += p?;
    }
    Ok(g)
}

/// Gram matrix of `fields` in the energy inner product matching `config.problem`:
///
/// * `p = 1`: `Σ_K ∫∇a·∇b + Σ_e h_e⁻¹ ∫[a][b]`;
/// * `p = 2`: `Σ_K ∫Δa Δb + Σ_e h_e⁻³ ∫[a][b] + Σ_e h_e⁻¹ ∫[∂_n a][∂_n b]`, where the last
///   sum skips boundary faces for simply supported plates.
///
/// Uses quadrature order `2m + 2` (capped).
pub fn energy_gram(mesh: &Mesh, topology: &FaceTopology, space: &Space, fields: &[&dyn PiecewiseField], config: &FormConfig) -> Result<DMatrix<f64>, Error> {
    let k = fields.len();
    let p = config.p();
    let order = error_quadrature_order(space.dim, space.degree);
    let rule = simplex_rule(space.dim, order)?;
    let volume = (0..space.num_dofs())
        .into_par_iter()
        .map(|e| {
            let mut g = DMatrix::zeros(k, k);
            let (pts, wts) = element_points(space, e, &rule)?;
            for (x, w) in pts.iter().zip(wts) {
                let jets: Vec<Jet> = fields.iter().map(|f| f.jet(e, x)).collect();
                for a in 0..k {
                    for b in 0..=a {
                        let v = if p == 1 {
                            dot(&jets[a].gradient, &jets[b].gradient)
                        } else {
                            jets[a].laplacian * jets[b].laplacian
                        };
                        g[(a, b)] += w * v;
                    }
                }
            }
            Ok(g)
        })
        .collect();
    let faces = topology
        .faces()
        .par_iter()
        .map(|face| {
            let mut g = DMatrix::zeros(k, k);
            let h = face.diameter;
            let n = face.normal;
            let skip_dn = face.is_boundary() && config.bc == BoundaryCondition::SimplySupported;
            let (pts, wts) = face_points(mesh, face, order)?;
            for (x, w) in pts.iter().zip(wts) {
                let jumps: Vec<(f64, f64)> = fields
                    .iter()
                    .map(|f| {
                        let a = f.jet(face.plus, x);
                        let (v, dn) = (a.value, dot(&n, &a.gradient));
                        match face.minus {
                            Some(q) => {
                                let b = f.jet(q, x);
                                (v - b.value, dn - dot(&n, &b.gradient))
                            }
                            None => (v, dn),
                        }
                    })
                    .collect();
                for a in 0..k {
                    for b in 0..=a {
                        let mut v = jumps[a].0 * jumps[b].0 / h.powi(if p == 1 { 1 } else { 3 });
                        if p == 2 && !skip_dn {
                            v += jumps[a].1 * jumps[b].1 / h;
                        }
                        g[(a, b)] += w * v;
                    }
                }
            }
            Ok(g)
        })
        .collect();
    let mut g = sum_ordered(volume, k)? + sum_ordered(faces, k)?;
    g.fill_upper_triangle_with_lower_triangle();
    Ok(g)
}

pub fn energy_norm(mesh: &Mesh, topology: &FaceTopology, space: &Space, field: &dyn PiecewiseField, config: &FormConfig) -> Result<f64, Error> {
    Ok(energy_gram(mesh, topology, space, &[field], config)?[(0, 0)].max(0.0).sqrt())
}

/// `L²(Ω)` Gram matrix of `fields`, element by element.
pub fn l2_gram(space: &Space, fields: &[&dyn PiecewiseField]) -> Result<DMatrix<f64>, Error> {
    let k = fields.len();
    let rule = simplex_rule(space.dim, error_quadrature_order(space.dim, space.degree))?;
    let parts = (0..space.num_dofs())
        .into_par_iter()
        .map(|e| {
            let mut g = DMatrix::zeros(k, k);
            let (pts, wts) = element_points(space, e, &rule)?;
            for (x, w) in pts.iter().zip(wts) {
                let vals: Vec<f64> = fields.iter().map(|f| f.jet(e, x).value).collect();
                for a in 0..k {
                    for b in 0..=a {
                        g[(a, b)] += w * vals[a] * vals[b];
                    }
                }
            }
            Ok(g)
        })
        .collect();
    let mut g = sum_ordered(parts, k)?;
    g.fill_upper_triangle_with_lower_triangle();
    Ok(g)
}

pub fn l2_norm(space: &Space, field: &dyn PiecewiseField) -> Result<f64, Error> {
    Ok(l2_gram(space, &[field])?[(0, 0)].max(0.0).sqrt())
}

/// Broken `H¹` seminorm `(Σ_K ‖∇v‖²_{L²(K)})^½`, without face terms.
pub fn broken_h1_seminorm(space: &Space, field: &dyn PiecewiseField) -> Result<f64, Error> {
    let rule = simplex_rule(space.dim, error_quadrature_order(space.dim, space.degree))?;
    let parts: Vec<Result<f64, Error>> = (0..space.num_dofs())
        .into_par_iter()
        .map(|e| {
            let (pts, wts) = element_points(space, e, &rule)?;
            Ok(pts.iter().zip(wts).map(|(x, w)| {
                let g = field.jet(e, x).gradient;
                w * dot(&g, &g)
            }).sum())
        })
        .collect();
    let mut total = 0.0;
    for p in parts {
        total += p?;
    }
    Ok(total.sqrt())
}
