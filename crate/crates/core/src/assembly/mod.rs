//! Symmetric interior penalty forms over the reconstructed space.
//!
//! Face conventions: every face has a `plus` side with unit normal `n` pointing out of it.
//! For a scalar `q`, the jump is `q⁺ - q⁻` (times `n`) and the average `½(q⁺ + q⁻)`; on a
//! boundary face the jump is `q⁺` and the average `q⁺`. Normal-derivative jumps are
//! `n·(∇q⁺ - ∇q⁻)`.

mod energy;
mod sparse;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::mesh::{FaceTopology, Mesh};
use crate::quadrature::{face_rule, map_rule, simplex_rule, QuadRule, MAX_ORDER};
use crate::reconstruction::Space;
use crate::{dot, Error, Point};

pub use energy::{broken_h1_seminorm, energy_gram, energy_norm, l2_gram, l2_norm};
pub use sparse::{SymSparseBuilder, SymSparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    /// `-Δu = λu`.
    Laplace,
    /// `Δ²u = λu`.
    Biharmonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    /// `u = 0`, for the Laplace problem.
    Dirichlet,
    /// `u = ∂u/∂n = 0`.
    Clamped,
    /// `u = Δu = 0`.
    SimplySupported,
}

/// Problem, boundary condition and penalty bases. Effective penalties are
/// `η_e = eta·m²`, `α_e = alpha·m⁴` and `β_e = beta·m²`.
#[derive(Debug, Clone, PartialEq)]
pub struct FormConfig {
    pub problem: Problem,
    pub bc: BoundaryCondition,
    pub m: usize,
    pub eta: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Volume and face quadrature order; `2m` when unset.
    pub quadrature_order: Option<usize>,
}

pub const DEFAULT_ETA: f64 = 10.0;
pub const DEFAULT_ALPHA: f64 = 20.0;
pub const DEFAULT_BETA: f64 = 10.0;

impl FormConfig {
    pub fn laplace(m: usize) -> Self {
        FormConfig {
            problem: Problem::Laplace,
            bc: BoundaryCondition::Dirichlet,
            m,
            eta: DEFAULT_ETA,
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            quadrature_order: None,
        }
    }

    pub fn biharmonic(m: usize, bc: BoundaryCondition) -> Self {
        FormConfig { problem: Problem::Biharmonic, bc, ..FormConfig::laplace(m) }
    }

    /// Derivative order `p` of the operator (1 for Laplace, 2 for biharmonic).
    pub fn p(&self) -> usize {
        match self.problem {
            Problem::Laplace => 1,
            Problem::Biharmonic => 2,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        for (name, v) in [("eta", self.eta), ("alpha", self.alpha), ("beta", self.beta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("penalty {name} must be positive, got {v}")));
            }
        }
        match (self.problem, self.bc) {
            (Problem::Laplace, BoundaryCondition::Dirichlet) => {}
            (Problem::Biharmonic, BoundaryCondition::Clamped | BoundaryCondition::SimplySupported) => {
                if self.m < 2 {
                    return Err(Error::DegreeTooLow(self.m));
                }
            }
            (p, bc) => return Err(Error::Config(format!("boundary condition {bc:?} does not apply to {p:?}"))),
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.quadrature_order.unwrap_or(2 * self.m)
    }

    fn degree_factor(&self) -> f64 {
        (self.m.max(1) as f64).powi(2)
    }

    pub fn eta_e(&self) -> f64 {
        self.eta * self.degree_factor()
    }

    pub fn alpha_e(&self) -> f64 {
        self.alpha * self.degree_factor().powi(2)
    }

    pub fn beta_e(&self) -> f64 {
        self.beta * self.degree_factor()
    }
}

/// Quadrature order used for error norms of smooth functions: `2m + 2`, capped by the
/// highest available rule.
pub fn error_quadrature_order(dim: usize, m: usize) -> usize {
    (2 * m + 2).min(MAX_ORDER[dim])
}

fn check_space(space: &Space, config: &FormConfig) -> Result<(), Error> {
    config.validate()?;
    if space.degree != config.m {
        return Err(Error::Config(format!(
            "space has degree {} but the form was configured for m = {}",
            space.degree, config.m
        )));
    }
    Ok(())
}

/// Quadrature points and weights on element `k`, over its sub-simplices.
pub(crate) fn element_points(space: &Space, k: usize, rule: &QuadRule) -> Result<(Vec<Point>, Vec<f64>), Error> {
    let mut pts = Vec::new();
    let mut wts = Vec::new();
    for simplex in &space.geometry[k].sub_simplices {
        let (p, w) = map_rule(rule, simplex)?;
        pts.extend(p);
        wts.extend(w);
    }
    Ok((pts, wts))
}

pub(crate) fn face_points(mesh: &Mesh, face: &crate::mesh::Face, order: usize) -> Result<(Vec<Point>, Vec<f64>), Error> {
    let verts: Vec<Point> = face.vertices.iter().map(|&v| mesh.vertices()[v]).collect();
    Ok(face_rule(mesh.dim(), order, &verts)?)
}

#[derive(Clone, Copy)]
enum VolumeTerm {
    Mass,
    Gradient,
    Laplacian,
}

/// Dense element or face block with the global DOFs it couples.
type LocalBlock = Result<(Vec<usize>, DMatrix<f64>), Error>;

fn merge(n: usize, locals: Vec<LocalBlock>, into: Option<SymSparseBuilder>) -> Result<SymSparseBuilder, Error> {
    let mut b = into.unwrap_or_else(|| SymSparseBuilder::new(n));
    for l in locals {
        let (dofs, local) = l?;
        b.add_local(&dofs, &local);
    }
    Ok(b)
}

fn volume_terms(space: &Space, order: usize, term: VolumeTerm) -> Result<SymSparseBuilder, Error> {
    let rule = simplex_rule(space.dim, order)?;
    let deriv = match term {
        VolumeTerm::Mass => 0,
        VolumeTerm::Gradient => 1,
        VolumeTerm::Laplacian => 2,
    };
    let locals = (0..space.num_dofs())
        .into_par_iter()
        .map(|k| {
            let basis = &space.bases[k];
            let t = basis.len();
            let mut local = DMatrix::zeros(t, t);
            let (pts, wts) = element_points(space, k, &rule)?;
            for (x, w) in pts.iter().zip(wts) {
                let ev = basis.evaluate(x, deriv);
                for a in 0..t {
                    for b in 0..=a {
                        let v = match term {
                            VolumeTerm::Mass => ev.values[a] * ev.values[b],
                            VolumeTerm::Gradient => dot(&ev.gradients[a], &ev.gradients[b]),
                            VolumeTerm::Laplacian => ev.laplacians[a] * ev.laplacians[b],
                        };
                        local[(a, b)] += w * v;
                    }
                }
            }
            Ok((basis.members.clone(), local))
        })
        .collect();
    merge(space.num_dofs(), locals, None)
}

/// Per-point face vectors over the union of both sides' shape functions.
struct FaceTraces {
    /// Value jump `v⁺ - v⁻`.
    jump: DVector<f64>,
    /// Normal-derivative jump `n·(∇v⁺ - ∇v⁻)`.
    jump_dn: DVector<f64>,
    /// Average normal derivative `{n·∇v}`.
    avg_dn: DVector<f64>,
    /// Average Laplacian `{Δv}`.
    avg_lap: DVector<f64>,
    /// Average `{n·∇Δv}`.
    avg_dn_lap: DVector<f64>,
}

/// Assembles face integrals with `f(traces, weight, h_e, is_boundary, local)`.
fn face_terms<F>(mesh: &Mesh, topology: &FaceTopology, space: &Space, order: usize, deriv: usize, builder: SymSparseBuilder, f: F) -> Result<SymSparseBuilder, Error>
where
    F: Fn(&FaceTraces, f64, f64, bool, &mut DMatrix<f64>) + Sync,
{
    let locals = topology
        .faces()
        .par_iter()
        .map(|face| {
            let plus = &space.bases[face.plus];
            let mut dofs = plus.members.clone();
            let minus = face.minus.map(|q| &space.bases[q]);
            let minus_pos: Vec<usize> = minus
                .map(|b| {
                    b.members
                        .iter()
                        .map(|j| match dofs.iter().position(|d| d == j) {
                            Some(p) => p,
                            None => {
                                dofs.push(*j);
                                dofs.len() - 1
                            }
                        })
                        .collect()
                })
                .unwrap_or_default();
            let nd = dofs.len();
            let mut local = DMatrix::zeros(nd, nd);
            let n = face.normal;
            let avg = if minus.is_some() { 0.5 } else { 1.0 };
            let (pts, wts) = face_points(mesh, face, order)?;
            for (x, w) in pts.iter().zip(wts) {
                let mut tr = FaceTraces {
                    jump: DVector::zeros(nd),
                    jump_dn: DVector::zeros(nd),
                    avg_dn: DVector::zeros(nd),
                    avg_lap: DVector::zeros(nd),
                    avg_dn_lap: DVector::zeros(nd),
                };
                let mut add_side = |ev: &crate::reconstruction::ShapeEval, pos: &mut dyn Iterator<Item = usize>, sign: f64| {
                    for (i, p) in pos.enumerate() {
                        tr.jump[p] += sign * ev.values[i];
                        let dn = dot(&n, &ev.gradients[i]);
                        tr.jump_dn[p] += sign * dn;
                        tr.avg_dn[p] += avg * dn;
                        if deriv >= 3 {
                            tr.avg_lap[p] += avg * ev.laplacians[i];
                            tr.avg_dn_lap[p] += avg * dot(&n, &ev.grad_laplacians[i]);
                        }
                    }
                };
                add_side(&plus.evaluate(x, deriv), &mut (0..plus.len()), 1.0);
                if let Some(mb) = minus {
                    add_side(&mb.evaluate(x, deriv), &mut minus_pos.iter().copied(), -1.0);
                }
                f(&tr, w, face.diameter, minus.is_none(), &mut local);
            }
            Ok((dofs, local))
        })
        .collect();
    merge(space.num_dofs(), locals, Some(builder))
}

/// `local += w (a bᵀ + b aᵀ)` on the lower triangle.
fn sym_outer(local: &mut DMatrix<f64>, w: f64, a: &DVector<f64>, b: &DVector<f64>) {
    for i in 0..a.len() {
        for j in 0..=i {
            local[(i, j)] += w * (a[i] * b[j] + b[i] * a[j]);
        }
    }
}

/// Laplace form: `Σ_K ∫∇v·∇w − Σ_e ∫({∇v}·[w] + {∇w}·[v]) + Σ_e η_e/h_e ∫[v]·[w]`, with
/// boundary faces included so that `u = 0` holds weakly.
pub fn assemble_laplace(mesh: &Mesh, topology: &FaceTopology, space: &Space, config: &FormConfig) -> Result<SymSparseMatrix, Error> {
    check_space(space, config)?;
    if config.problem != Problem::Laplace {
        return Err(Error::Config("assemble_laplace needs a Laplace configuration".into()));
    }
    let order = config.order();
    let eta = config.eta_e();
    let b = volume_terms(space, order, VolumeTerm::Gradient)?;
    let b = face_terms(mesh, topology, space, order, 1, b, |tr, w, h, _, local| {
        sym_outer(local, -w, &tr.avg_dn, &tr.jump);
        sym_outer(local, 0.5 * w * eta / h, &tr.jump, &tr.jump);
    })?;
    Ok(b.build())
}

/// Biharmonic form: `Σ_K ∫Δv Δw + Σ_e ∫([v]{n·∇Δw} + [w]{n·∇Δv}) − Σ_e ∫({Δw}[∂_n v] +
/// {Δv}[∂_n w]) + Σ_e (α_e/h_e³ ∫[v][w] + β_e/h_e ∫[∂_n v][∂_n w])`. For simply supported
/// plates the `{Δ}[∂_n]` terms and the `β` penalty are left out on boundary faces.
pub fn assemble_biharmonic(mesh: &Mesh, topology: &FaceTopology, space: &Space, config: &FormConfig) -> Result<SymSparseMatrix, Error> {
    check_space(space, config)?;
    if config.problem != Problem::Biharmonic {
        return Err(Error::Config("assemble_biharmonic needs a biharmonic configuration".into()));
    }
    let order = config.order();
    let (alpha, beta) = (config.alpha_e(), config.beta_e());
    let simply = config.bc == BoundaryCondition::SimplySupported;
    let b = volume_terms(space, order, VolumeTerm::Laplacian)?;
    let b = face_terms(mesh, topology, space, order, 3, b, |tr, w, h, boundary, local| {
        sym_outer(local, w, &tr.jump, &tr.avg_dn_lap);
        sym_outer(local, 0.5 * w * alpha / h.powi(3), &tr.jump, &tr.jump);
        if !(boundary && simply) {
            sym_outer(local, -w, &tr.avg_lap, &tr.jump_dn);
            sym_outer(local, 0.5 * w * beta / h, &tr.jump_dn, &tr.jump_dn);
        }
    })?;
    Ok(b.build())
}

/// Stiffness matrix for `config.problem`.
pub fn assemble_stiffness(mesh: &Mesh, topology: &FaceTopology, space: &Space, config: &FormConfig) -> Result<SymSparseMatrix, Error> {
    match config.problem {
        Problem::Laplace => assemble_laplace(mesh, topology, space, config),
        Problem::Biharmonic => assemble_biharmonic(mesh, topology, space, config),
    }
}

/// `M[i, j] = Σ_K ∫_K ψ_i ψ_j`, at quadrature order `2m`.
pub fn assemble_mass(space: &Space) -> Result<SymSparseMatrix, Error> {
    Ok(volume_terms(space, 2 * space.degree, VolumeTerm::Mass)?.build())
}

/// `b_j = ∫ f ψ_j`.
pub fn load_vector(space: &Space, f: impl Fn(&Point) -> f64 + Sync, order: usize) -> Result<Vec<f64>, Error> {
    let rule = simplex_rule(space.dim, order)?;
    let locals: Vec<Result<Vec<f64>, Error>> = (0..space.num_dofs())
        .into_par_iter()
        .map(|k| {
            let basis = &space.bases[k];
            let mut local = vec![0.0; basis.len()];
            let (pts, wts) = element_points(space, k, &rule)?;
            for (x, w) in pts.iter().zip(wts) {
                let fx = f(x);
                for (l, phi) in local.iter_mut().zip(basis.values(x)) {
                    *l += w * fx * phi;
                }
            }
            Ok(local)
        })
        .collect();
    let mut b = vec![0.0; space.num_dofs()];
    for (k, l) in locals.into_iter().enumerate() {
        for (v, &j) in l?.iter().zip(&space.bases[k].members) {
            b[j] += v;
        }
    }
    Ok(b)
}
