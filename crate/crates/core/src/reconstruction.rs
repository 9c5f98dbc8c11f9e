//! Least-squares patch reconstruction and the reconstructed space `V_h = R(U_h)`.
//!
//! For every element `K` the values sampled at the patch nodes are mapped to the
//! coefficients of the best-fitting polynomial of degree `m` on `S(K)`, which is then
//! used on `K` only. Polynomials are written in the scaled frame `y = (x - x_K) / d_K`
//! to keep the Vandermonde matrix well conditioned.

use std::fmt::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use thiserror::Error;

use crate::mesh::{mesh_geometry, ElementGeometry, FaceTopology, Mesh};
use crate::patch::{build_patch, grow_ring, required_dim, Patch};
use crate::{Error, Point};

/// Relative threshold on the pivots of the column-pivoted QR below which the local
/// Vandermonde matrix is declared rank deficient.
pub const RCOND: f64 = 1e-10;

/// Extra rings tried when a patch fit is rank deficient.
const MAX_RING_RETRIES: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReconstructionError {
    #[error("element {element}: local fit has numerical rank {rank}, needs {required}")]
    RankDeficient { element: usize, rank: usize, required: usize },
}

/// Monomials of total degree `<= degree`, graded lexicographic: by total degree, then by
/// descending power of `x`, then of `y`. In 2D degree 2 reads `1, x, y, x², xy, y²`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialBasis {
    pub dim: usize,
    pub degree: usize,
    pub exponents: Vec<[u32; 3]>,
}

impl MonomialBasis {
    pub fn new(dim: usize, degree: usize) -> Self {
        let mut exponents = Vec::with_capacity(required_dim(degree, dim));
        for total in 0..=degree as u32 {
            for a in (0..=total).rev() {
                if dim == 1 {
                    if a == total {
                        exponents.push([a, 0, 0]);
                    }
                    continue;
                }
                for b in (0..=total - a).rev() {
                    let c = total - a - b;
                    if dim == 2 && c != 0 {
                        continue;
                    }
                    exponents.push([a, b, c]);
                }
            }
        }
        MonomialBasis { dim, degree, exponents }
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    fn powers(&self, y: &Point) -> [Vec<f64>; 3] {
        std::array::from_fn(|c| {
            let mut p = vec![1.0; self.degree + 1];
            for k in 1..=self.degree {
                p[k] = p[k - 1] * y[c];
            }
            p
        })
    }

    /// `∂^beta y^alpha` for every monomial `alpha`, at the scaled point `y`.
    pub fn derivative(&self, y: &Point, beta: [u32; 3]) -> Vec<f64> {
        self.derivative_with(&self.powers(y), beta)
    }

    fn derivative_with(&self, pw: &[Vec<f64>; 3], beta: [u32; 3]) -> Vec<f64> {
        self.exponents
            .iter()
            .map(|alpha| {
                let mut v = 1.0;
                for c in 0..3 {
                    if alpha[c] < beta[c] {
                        return 0.0;
                    }
                    let falling: u32 = (alpha[c] - beta[c] + 1..=alpha[c]).product();
                    v *= falling as f64 * pw[c][(alpha[c] - beta[c]) as usize];
                }
                v
            })
            .collect()
    }
}

/// Least-squares solution operator `A⁺` (shape `cols × rows`) of a full column rank matrix
/// via Householder QR with column-norm pivoting. Returns the numerical rank on failure.
pub(crate) fn pivoted_pseudoinverse(a: &DMatrix<f64>, rcond: f64) -> Result<DMatrix<f64>, usize> {
    let (rows, cols) = a.shape();
    if rows < cols {
        return Err(rows);
    }
    let mut r = a.clone();
    let mut perm: Vec<usize> = (0..cols).collect();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(cols);
    for k in 0..cols {
        let norms: Vec<f64> = (k..cols).map(|j| r.view((k, j), (rows - k, 1)).norm()).collect();
        let p = k + norms
            .iter()
            .enumerate()
            .fold(0, |best, (i, &n)| if n > norms[best] { i } else { best });
        if p != k {
            r.swap_columns(k, p);
            perm.swap(k, p);
        }
        let x: Vec<f64> = (k..rows).map(|i| r[(i, k)]).collect();
        let xnorm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let alpha = if x[0] >= 0.0 { -xnorm } else { xnorm };
        let mut v = x;
        v[0] -= alpha;
        let vnorm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if vnorm > 0.0 {
            v.iter_mut().for_each(|t| *t /= vnorm);
            for j in k..cols {
                let s: f64 = (k..rows).map(|i| v[i - k] * r[(i, j)]).sum();
                for i in k..rows {
                    r[(i, j)] -= 2.0 * s * v[i - k];
                }
            }
        }
        reflectors.push(v);
    }
    let r00 = r[(0, 0)].abs();
    if let Some(rank) = (0..cols).find(|&k| !(r[(k, k)].abs() > rcond * r00)) {
        return Err(rank);
    }
    // Qᵀ applied to the identity; its first `cols` rows are Q₁ᵀ.
    let mut qt = DMatrix::<f64>::identity(rows, rows);
    for (k, v) in reflectors.iter().enumerate() {
        for j in 0..rows {
            let s: f64 = (k..rows).map(|i| v[i - k] * qt[(i, j)]).sum();
            for i in k..rows {
                qt[(i, j)] -= 2.0 * s * v[i - k];
            }
        }
    }
    // Back substitution R₁ z = Q₁ᵀ, then undo the column permutation.
    let mut z = qt.rows(0, cols).into_owned();
    for k in (0..cols).rev() {
        for j in 0..rows {
            let mut s = z[(k, j)];
            for l in k + 1..cols {
                s -= r[(k, l)] * z[(l, j)];
            }
            z[(k, j)] = s / r[(k, k)];
        }
    }
    let mut pinv = DMatrix::<f64>::zeros(cols, rows);
    for k in 0..cols {
        pinv.set_row(perm[k], &z.row(k));
    }
    Ok(pinv)
}

/// Shape-function data at one point, filled up to the requested derivative order.
#[derive(Debug, Clone, Default)]
pub struct ShapeEval {
    pub values: Vec<f64>,
    pub gradients: Vec<Point>,
    pub hessians: Vec<[[f64; 3]; 3]>,
    pub laplacians: Vec<f64>,
    /// `∇Δφ`, needed by the biharmonic face terms.
    pub grad_laplacians: Vec<Point>,
}

/// The element-local shape functions `φ_{K,j}` of one element, one per patch node.
#[derive(Debug, Clone)]
pub struct LocalBasis {
    pub element: usize,
    /// Patch members; shape function `j` belongs to the DOF of `members[j]`.
    pub members: Vec<usize>,
    pub origin: Point,
    pub scale: f64,
    pub monomials: MonomialBasis,
    /// `#I_K × dim P^m`; row `j` holds the monomial coefficients of `φ_{K,j}` in the
    /// scaled frame.
    pub coeffs: DMatrix<f64>,
}

impl LocalBasis {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    fn scaled(&self, x: &Point) -> Point {
        std::array::from_fn(|c| (x[c] - self.origin[c]) / self.scale)
    }

    fn apply(&self, mono: &[f64], factor: f64) -> Vec<f64> {
        (0..self.coeffs.nrows())
            .map(|j| factor * (0..mono.len()).map(|a| self.coeffs[(j, a)] * mono[a]).sum::<f64>())
            .collect()
    }

    pub fn values(&self, x: &Point) -> Vec<f64> {
        self.apply(&self.monomials.derivative(&self.scaled(x), [0, 0, 0]), 1.0)
    }

    /// Values and derivatives up to `order` (0..=3). Order 2 fills Hessians and
    /// Laplacians; order 3 additionally fills `∇Δφ`.
    pub fn evaluate(&self, x: &Point, order: usize) -> ShapeEval {
        let dim = self.monomials.dim;
        let pw = self.monomials.powers(&self.scaled(x));
        let n = self.len();
        let unit = |c: usize| -> [u32; 3] { std::array::from_fn(|i| u32::from(i == c)) };
        let add = |a: [u32; 3], b: [u32; 3]| -> [u32; 3] { std::array::from_fn(|i| a[i] + b[i]) };
        let mut out = ShapeEval {
            values: self.apply(&self.monomials.derivative_with(&pw, [0, 0, 0]), 1.0),
            ..Default::default()
        };
        if order >= 1 {
            out.gradients = vec![[0.0; 3]; n];
            for c in 0..dim {
                let g = self.apply(&self.monomials.derivative_with(&pw, unit(c)), 1.0 / self.scale);
                for j in 0..n {
                    out.gradients[j][c] = g[j];
                }
            }
        }
        if order >= 2 {
            let f = 1.0 / (self.scale * self.scale);
            out.hessians = vec![[[0.0; 3]; 3]; n];
            for a in 0..dim {
                for b in a..dim {
                    let h = self.apply(&self.monomials.derivative_with(&pw, add(unit(a), unit(b))), f);
                    for j in 0..n {
                        out.hessians[j][a][b] = h[j];
                        out.hessians[j][b][a] = h[j];
                    }
                }
            }
            out.laplacians = out.hessians.iter().map(|h| (0..dim).map(|c| h[c][c]).sum()).collect();
        }
        if order >= 3 {
            let f = 1.0 / self.scale.powi(3);
            out.grad_laplacians = vec![[0.0; 3]; n];
            for a in 0..dim {
                let mut mono = vec![0.0; self.monomials.len()];
                for b in 0..dim {
                    let d = self.monomials.derivative_with(&pw, add(unit(a), add(unit(b), unit(b))));
                    mono.iter_mut().zip(d).for_each(|(m, v)| *m += v);
                }
                let g = self.apply(&mono, f);
                for j in 0..n {
                    out.grad_laplacians[j][a] = g[j];
                }
            }
        }
        out
    }
}

/// Fits degree-`m` polynomials on `patch`: the Vandermonde matrix of the scaled nodes is
/// pseudo-inverted by pivoted QR and the transposed solution operator becomes the table
/// of shape-function coefficients.
pub fn fit_local(patch: &Patch, m: usize, dim: usize) -> Result<LocalBasis, ReconstructionError> {
    let monomials = MonomialBasis::new(dim, m);
    let required = monomials.len();
    let origin = patch.nodes[0];
    let scale = if patch.diameter > 0.0 { patch.diameter } else { 1.0 };
    let vander = DMatrix::from_fn(patch.nodes.len(), required, |j, a| {
        let y: Point = std::array::from_fn(|c| (patch.nodes[j][c] - origin[c]) / scale);
        let e = monomials.exponents[a];
        y[0].powi(e[0] as i32) * y[1].powi(e[1] as i32) * y[2].powi(e[2] as i32)
    });
    let pinv = pivoted_pseudoinverse(&vander, RCOND)
        .map_err(|rank| ReconstructionError::RankDeficient { element: patch.center, rank, required })?;
    Ok(LocalBasis {
        element: patch.center,
        members: patch.members.clone(),
        origin,
        scale,
        monomials,
        coeffs: pinv.transpose(),
    })
}

/// The reconstructed space: one local basis per element plus the DOF support map.
#[derive(Debug, Clone)]
pub struct Space {
    pub dim: usize,
    pub degree: usize,
    pub patch_size: usize,
    pub geometry: Vec<ElementGeometry>,
    pub bases: Vec<LocalBasis>,
    /// For each DOF `j`, the elements `K` (ascending) with `j ∈ S(K)`.
    pub supports: Vec<Vec<usize>>,
    /// Elements whose patch had to be grown beyond `patch_size` to obtain a full-rank fit.
    pub grown: Vec<usize>,
}

impl Space {
    pub fn num_dofs(&self) -> usize {
        self.bases.len()
    }

    /// Largest element diameter `h`.
    pub fn mesh_size(&self) -> f64 {
        self.geometry.iter().map(|g| g.diameter).fold(0.0, f64::max)
    }
}

pub fn build_space(mesh: &Mesh, topology: &FaceTopology, m: usize, t: usize) -> Result<Space, Error> {
    let geometry = mesh_geometry(mesh)?;
    let dim = mesh.dim();
    let fitted: Vec<Result<(LocalBasis, bool), Error>> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|k| {
            let mut patch = build_patch(mesh, topology, &geometry, k, t)?;
            let mut retries = 0;
            loop {
                match fit_local(&patch, m, dim) {
                    Ok(basis) => return Ok((basis, retries > 0)),
                    Err(e) if retries >= MAX_RING_RETRIES => return Err(e.into()),
                    Err(_) => {
                        let grown = grow_ring(mesh, topology, &geometry, &patch);
                        if grown.len() == patch.len() {
                            return Err(fit_local(&patch, m, dim).unwrap_err().into());
                        }
                        patch = grown;
                        retries += 1;
                    }
                }
            }
        })
        .collect();
    let mut bases = Vec::with_capacity(fitted.len());
    let mut grown = Vec::new();
    for (k, r) in fitted.into_iter().enumerate() {
        let (basis, was_grown) = r?;
        if was_grown {
            grown.push(k);
        }
        bases.push(basis);
    }
    let mut supports = vec![Vec::new(); bases.len()];
    for b in &bases {
        for &j in &b.members {
            supports[j].push(b.element);
        }
    }
    Ok(Space { dim, degree: m, patch_size: t, geometry, bases, supports, grown })
}

/// Samples `g` at every sampling node: the DOF vector whose reconstruction interpolates `g`.
pub fn interpolate(space: &Space, g: impl Fn(&Point) -> f64) -> Vec<f64> {
    space.geometry.iter().map(|geo| g(&geo.barycenter)).collect()
}

/// Value, gradient and Laplacian of a field at a point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub gradient: Point,
    pub laplacian: f64,
}

/// A field that can be evaluated element by element (so it may jump across faces).
pub trait PiecewiseField: Sync {
    fn jet(&self, element: usize, x: &Point) -> Jet;
}

/// `R u_h` for a DOF vector `u_h`.
#[derive(Debug, Clone, Copy)]
pub struct ReconstructedField<'a> {
    pub space: &'a Space,
    pub dofs: &'a [f64],
}

impl<'a> ReconstructedField<'a> {
    pub fn new(space: &'a Space, dofs: &'a [f64]) -> Self {
        assert_eq!(dofs.len(), space.num_dofs(), "DOF vector length");
        ReconstructedField { space, dofs }
    }

    pub fn value(&self, element: usize, x: &Point) -> f64 {
        let basis = &self.space.bases[element];
        basis.values(x).iter().zip(&basis.members).map(|(phi, &j)| phi * self.dofs[j]).sum()
    }
}

impl PiecewiseField for ReconstructedField<'_> {
    fn jet(&self, element: usize, x: &Point) -> Jet {
        let basis = &self.space.bases[element];
        let ev = basis.evaluate(x, 2);
        let mut jet = Jet::default();
        for (i, &j) in basis.members.iter().enumerate() {
            let u = self.dofs[j];
            jet.value += u * ev.values[i];
            for c in 0..3 {
                jet.gradient[c] += u * ev.gradients[i][c];
            }
            jet.laplacian += u * ev.laplacians[i];
        }
        jet
    }
}

/// `a - b`, evaluated pointwise.
pub struct Difference<'a>(pub &'a dyn PiecewiseField, pub &'a dyn PiecewiseField);

impl PiecewiseField for Difference<'_> {
    fn jet(&self, element: usize, x: &Point) -> Jet {
        let (a, b) = (self.0.jet(element, x), self.1.jet(element, x));
        Jet {
            value: a.value - b.value,
            gradient: std::array::from_fn(|c| a.gradient[c] - b.gradient[c]),
            laplacian: a.laplacian - b.laplacian,
        }
    }
}

/// Debug dump of every coefficient table as CSV
/// (`element,node,exponents,coefficient`, exponents written as `a:b:c`).
pub fn coefficients_csv(space: &Space) -> String {
    let mut s = String::from("element,node,exponents,coefficient\n");
    for b in &space.bases {
        for (j, &node) in b.members.iter().enumerate() {
            for (a, e) in b.monomials.exponents.iter().enumerate() {
                let _ = writeln!(s, "{},{},{}:{}:{},{:.11e}", b.element, node, e[0], e[1], e[2], b.coeffs[(j, a)]);
            }
        }
    }
    s
}
