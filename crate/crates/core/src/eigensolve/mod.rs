//! Generalized symmetric eigenproblems `A x = λ M x` with `M` (and usually `A`) positive
//! definite.
//!
//! [`solve_dense`] computes the full spectrum through the Cholesky reduction
//! `L⁻¹ A L⁻ᵀ`. [`solve_smallest`] factors `A` once and runs a block shift-invert
//! Rayleigh–Ritz iteration on `T = A⁻¹M`, which is self-adjoint in the `M` inner product;
//! its largest eigenvalues `1/λ` are the wanted smallest `λ`.

mod skyline;

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::assembly::SymSparseMatrix;

pub use skyline::{reverse_cuthill_mckee, SkylineCholesky};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("mass matrix is not positive definite")]
    MassNotSPD,
    #[error("stiffness matrix is indefinite (eigenvalue {value:.3e}); increase the penalty parameters")]
    PenaltyTooSmall { value: f64 },
    #[error("stiffness matrix is not positive definite (pivot at DOF {dof}); increase the penalty parameters")]
    StiffnessNotSPD { dof: usize },
    #[error("shift-invert iteration stopped after {restarts} restarts with {converged} of {wanted} pairs converged")]
    NoConvergence { converged: usize, wanted: usize, restarts: usize },
    #[error("invalid eigensolver request: {0}")]
    InvalidRequest(String),
}

/// Eigenpairs in ascending order. Vectors are `M`-orthonormal and each has its
/// largest-magnitude entry positive.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// `‖A x − λ M x‖ / ‖A x‖`.
    pub residuals: Vec<f64>,
}

impl EigenResult {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn truncate(&mut self, k: usize) {
        self.values.truncate(k);
        self.vectors.truncate(k);
        self.residuals.truncate(k);
    }
}

/// Safety factor on the rounding bound in [`residual_floor`].
const FLOOR_FACTOR: f64 = 16.0;

/// Largest system handled by the dense path in automatic mode.
pub const DENSE_THRESHOLD: usize = 6000;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Relative residual required of every returned pair.
    pub tol: f64,
    /// Restart cap; `50·k` when unset.
    pub max_restarts: Option<usize>,
    /// Block size; `clamp(k, 2, 8)` when unset.
    pub block: Option<usize>,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: 1e-9, max_restarts: None, block: None, seed: 0x5eed }
    }
}

fn check_shapes(a: &SymSparseMatrix, m: &SymSparseMatrix) -> Result<(), SolveError> {
    if a.n() != m.n() || a.n() == 0 {
        return Err(SolveError::InvalidRequest(format!("matrix sizes {} and {}", a.n(), m.n())));
    }
    Ok(())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn relative_residual(a: &SymSparseMatrix, m: &SymSparseMatrix, lambda: f64, x: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let mx = m.mul_vec(x);
    let r: Vec<f64> = ax.iter().zip(&mx).map(|(p, q)| p - lambda * q).collect();
    let d = norm(&ax);
    if d == 0.0 {
        norm(&r)
    } else {
        norm(&r) / d
    }
}

fn fix_sign(x: &mut [f64]) {
    let big = x.iter().fold(0.0f64, |b, v| if v.abs() > b.abs() { *v } else { b });
    if big < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
}

/// Full spectrum by dense Cholesky reduction.
pub fn solve_dense(a: &SymSparseMatrix, m: &SymSparseMatrix) -> Result<EigenResult, SolveError> {
    check_shapes(a, m)?;
    let n = a.n();
    let chol = Cholesky::new(m.to_dense()).ok_or(SolveError::MassNotSPD)?;
    let l = chol.l();
    let ad = a.to_dense();
    let x = l.solve_lower_triangular(&ad).ok_or(SolveError::MassNotSPD)?;
    let mut c = l.solve_lower_triangular(&x.transpose()).ok_or(SolveError::MassNotSPD)?;
    c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let lmin = eig.eigenvalues[order[0]];
    if lmin <= -1e-8 * lmax {
        return Err(SolveError::PenaltyTooSmall { value: lmin });
    }
    let y = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    let xs = l.transpose().solve_upper_triangular(&y).ok_or(SolveError::MassNotSPD)?;
    let mut result = EigenResult { values: Vec::with_capacity(n), vectors: Vec::with_capacity(n), residuals: Vec::with_capacity(n) };
    for (j, &o) in order.iter().enumerate() {
        let mut v: Vec<f64> = xs.column(j).iter().copied().collect();
        fix_sign(&mut v);
        let lambda = eig.eigenvalues[o];
        result.residuals.push(relative_residual(a, m, lambda, &v));
        result.values.push(lambda);
        result.vectors.push(v);
    }
    Ok(result)
}

/// Column-major block of vectors with their images under `T = A⁻¹M` and `M`.
struct Basis {
    v: Vec<Vec<f64>>,
    tv: Vec<Vec<f64>>,
    mv: Vec<Vec<f64>>,
}

impl Basis {
    fn len(&self) -> usize {
        self.v.len()
    }

    /// `M`-orthogonalizes `z` against the basis (twice) and appends it if it has not
    /// collapsed. Returns whether it was added.
    fn push(&mut self, mut z: Vec<f64>, factor: &SkylineCholesky, m: &SymSparseMatrix) -> bool {
        let before = m.quadratic_form(&z).max(0.0).sqrt();
        if before == 0.0 {
            return false;
        }
        for _ in 0..2 {
            for (v, mv) in self.v.iter().zip(&self.mv) {
                let c = dotv(mv, &z);
                z.iter_mut().zip(v).for_each(|(zi, vi)| *zi -= c * vi);
            }
        }
        let mz = m.mul_vec(&z);
        let nz = dotv(&z, &mz).max(0.0).sqrt();
        if nz <= 1e-10 * before {
            return false;
        }
        z.iter_mut().for_each(|t| *t /= nz);
        let mz: Vec<f64> = mz.iter().map(|t| t / nz).collect();
        self.tv.push(factor.solve(&mz));
        self.mv.push(mz);
        self.v.push(z);
        true
    }

    fn combine(cols: &[Vec<f64>], s: &DMatrix<f64>, j: usize) -> Vec<f64> {
        let n = cols[0].len();
        let mut out = vec![0.0; n];
        for (c, col) in cols.iter().enumerate() {
            let w = s[(c, j)];
            if w != 0.0 {
                out.iter_mut().zip(col).for_each(|(o, x)| *o += w * x);
            }
        }
        out
    }
}

/// The `k` smallest eigenpairs by block shift-invert iteration with thick restarts.
/// Falls back to [`solve_dense`] when `k` is close to `n`.
pub fn solve_smallest(a: &SymSparseMatrix, m: &SymSparseMatrix, k: usize, opts: &SolveOptions) -> Result<EigenResult, SolveError> {
    check_shapes(a, m)?;
    let n = a.n();
    if k == 0 {
        return Err(SolveError::InvalidRequest("k must be at least 1".into()));
    }
    if !(opts.tol > 0.0) {
        return Err(SolveError::InvalidRequest(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let block = opts.block.unwrap_or(k.clamp(2, 8)).max(1);
    let keep = k + block;
    let max_dim = 2 * keep + 10;
    if k >= n || max_dim >= n {
        let mut r = solve_dense(a, m)?;
        r.truncate(k);
        return Ok(r);
    }
    let factor = SkylineCholesky::factor(a).map_err(|dof| SolveError::StiffnessNotSPD { dof })?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let random_vec = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| rng.random::<f64>() - 0.5).collect() };

    let mut basis = Basis { v: Vec::new(), tv: Vec::new(), mv: Vec::new() };
    while basis.len() < keep {
        let z = random_vec(&mut rng);
        // Start from T z so the initial block already leans towards the wanted end.
        let tz = factor.solve(&m.mul_vec(&z));
        basis.push(tz, &factor, m);
    }
    let max_restarts = opts.max_restarts.unwrap_or(50 * k);
    let mut restarts = 0;
    loop {
        let p = basis.len();
        let h = DMatrix::from_fn(p, p, |i, j| 0.5 * (dotv(&basis.mv[i], &basis.tv[j]) + dotv(&basis.mv[j], &basis.tv[i])));
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let s = DMatrix::from_fn(p, p, |i, j| eig.eigenvectors[(i, order[j])]);
        let mu: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        if mu[k - 1] <= 0.0 {
            return Err(SolveError::StiffnessNotSPD { dof: 0 });
        }

        let mut ritz = Vec::with_capacity(k);
        let mut unconverged = Vec::new();
        for j in 0..k {
            let y = Basis::combine(&basis.v, &s, j);
            let ay = a.mul_vec(&y);
            let my = Basis::combine(&basis.mv, &s, j);
            let lambda = dotv(&y, &ay) / dotv(&y, &my);
            let r: Vec<f64> = ay.iter().zip(&my).map(|(p, q)| p - lambda * q).collect();
            let res = norm(&r) / norm(&ay);
            let floor = residual_floor(a, m, &y, lambda) / norm(&ay);
            if res > opts.tol.max(floor) {
                unconverged.push(j);
            }
            ritz.push((lambda, y, res));
        }
        if unconverged.is_empty() {
            let mut result = EigenResult { values: Vec::new(), vectors: Vec::new(), residuals: Vec::new() };
            let mut idx: Vec<usize> = (0..k).collect();
            idx.sort_by(|&i, &j| ritz[i].0.total_cmp(&ritz[j].0));
            for i in idx {
                let (lambda, mut y, res) = ritz[i].clone();
                fix_sign(&mut y);
                result.values.push(lambda);
                result.vectors.push(y);
                result.residuals.push(res);
            }
            return Ok(result);
        }

        // Expansion directions: T-residuals of the unconverged wanted Ritz pairs, topped
        // up with the next Ritz vectors' residuals.
        let mut dirs: Vec<usize> = unconverged.iter().copied().take(block).collect();
        let mut extra = k;
        while dirs.len() < block && extra < p {
            dirs.push(extra);
            extra += 1;
        }
        let new: Vec<Vec<f64>> = dirs
            .iter()
            .map(|&j| {
                let ty = Basis::combine(&basis.tv, &s, j);
                let y = Basis::combine(&basis.v, &s, j);
                ty.iter().zip(&y).map(|(t, v)| t - mu[j] * v).collect()
            })
            .collect();

        if p + new.len() > max_dim {
            restarts += 1;
            if restarts > max_restarts {
                return Err(SolveError::NoConvergence { converged: k - unconverged.len(), wanted: k, restarts: max_restarts });
            }
            let cols = keep.min(p);
            basis = Basis {
                v: (0..cols).map(|j| Basis::combine(&basis.v, &s, j)).collect(),
                tv: (0..cols).map(|j| Basis::combine(&basis.tv, &s, j)).collect(),
                mv: (0..cols).map(|j| Basis::combine(&basis.mv, &s, j)).collect(),
            };
        }
        let mut added = 0;
        for z in new {
            if basis.push(z, &factor, m) {
                added += 1;
            }
        }
        if added == 0 {
            // Stagnation: the residual directions already lie in the basis.
            let z = random_vec(&mut rng);
            if !basis.push(z, &factor, m) {
                return Err(SolveError::NoConvergence { converged: k - unconverged.len(), wanted: k, restarts });
            }
        }
    }
}

/// Rounding-level size of `A y − λ M y`: below this no iteration can push the residual, so
/// a pair that reaches it counts as converged even if `tol` is smaller.
fn residual_floor(a: &SymSparseMatrix, m: &SymSparseMatrix, y: &[f64], lambda: f64) -> f64 {
    let ay = a.abs_mul_vec(y);
    let my = m.abs_mul_vec(y);
    let bound: Vec<f64> = ay.iter().zip(&my).map(|(p, q)| p + lambda.abs() * q).collect();
    FLOOR_FACTOR * f64::EPSILON * norm(&bound)
}

/// Smallest `k` pairs, using the dense path for small systems and shift-invert otherwise.
pub fn solve_auto(a: &SymSparseMatrix, m: &SymSparseMatrix, k: usize, opts: &SolveOptions) -> Result<EigenResult, SolveError> {
    if a.n() <= 400 || (k * 4 >= a.n() && a.n() <= DENSE_THRESHOLD) {
        let mut r = solve_dense(a, m)?;
        r.truncate(k);
        Ok(r)
    } else {
        solve_smallest(a, m, k, opts)
    }
}

/// `x_iᵀ M x_j` for all returned pairs.
pub fn m_gram(m: &SymSparseMatrix, vectors: &[Vec<f64>]) -> DMatrix<f64> {
    let mx: Vec<Vec<f64>> = vectors.iter().map(|v| m.mul_vec(v)).collect();
    DMatrix::from_fn(vectors.len(), vectors.len(), |i, j| dotv(&vectors[i], &mx[j]))
}

pub fn rayleigh_quotient(a: &SymSparseMatrix, m: &SymSparseMatrix, x: &[f64]) -> f64 {
    a.quadratic_form(x) / m.quadratic_form(x)
}
