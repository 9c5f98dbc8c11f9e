//! Error measurement against the model problems with known spectra: cluster matching,
//! convergence tables, reliable-eigenvalue counts and a source-problem solver.

mod exact;

use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::assembly::{
    assemble_mass, assemble_stiffness, energy_gram, energy_norm, error_quadrature_order, l2_gram, load_vector, FormConfig,
    SymSparseMatrix,
};
use crate::eigensolve::{solve_auto, solve_dense, solve_smallest, EigenResult, SkylineCholesky, SolveError, SolveOptions};
use crate::mesh::{build_topology, FaceTopology, Mesh};
use crate::patch::default_patch_size;
use crate::reconstruction::{build_space, Difference, PiecewiseField, ReconstructedField, Space};
use crate::{Error, Point};

pub use exact::{exact_spectrum, Domain, ExactSpectrum, SineProduct};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverMethod {
    /// Dense for small systems or large `k`, shift-invert otherwise.
    #[default]
    Auto,
    Dense,
    ShiftInvert,
}

/// A mesh with its reconstructed space and assembled matrices.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: Mesh,
    pub topology: FaceTopology,
    pub space: Space,
    pub form: FormConfig,
    pub stiffness: SymSparseMatrix,
    pub mass: SymSparseMatrix,
}

impl Discretization {
    /// Builds the space with patch size `patch_size` (default from `m` and the dimension)
    /// and assembles stiffness and mass matrices.
    pub fn new(mesh: Mesh, form: &FormConfig, patch_size: Option<usize>) -> Result<Self, Error> {
        form.validate()?;
        let topology = build_topology(&mesh)?;
        let t = patch_size.unwrap_or_else(|| default_patch_size(form.m, mesh.dim()));
        let space = build_space(&mesh, &topology, form.m, t)?;
        let stiffness = assemble_stiffness(&mesh, &topology, &space, form)?;
        let mass = assemble_mass(&space)?;
        Ok(Discretization { mesh, topology, space, form: form.clone(), stiffness, mass })
    }

    pub fn num_dofs(&self) -> usize {
        self.space.num_dofs()
    }

    pub fn h(&self) -> f64 {
        self.space.mesh_size()
    }

    pub fn eigenpairs(&self, k: usize, opts: &SolveOptions, method: SolverMethod) -> Result<EigenResult, SolveError> {
        match method {
            SolverMethod::Auto => solve_auto(&self.stiffness, &self.mass, k, opts),
            SolverMethod::ShiftInvert => solve_smallest(&self.stiffness, &self.mass, k, opts),
            SolverMethod::Dense => {
                let mut r = solve_dense(&self.stiffness, &self.mass)?;
                r.values.truncate(k);
                r.vectors.truncate(k);
                r.residuals.truncate(k);
                Ok(r)
            }
        }
    }

    pub fn field<'a>(&'a self, dofs: &'a [f64]) -> ReconstructedField<'a> {
        ReconstructedField::new(&self.space, dofs)
    }
}

pub fn relative_error(exact: f64, approx: f64) -> f64 {
    (exact - approx).abs() / exact.abs()
}

/// The discrete pairs paired with one exact eigenvalue and the best approximation of the
/// exact eigenfunction from their span.
#[derive(Debug, Clone)]
pub struct MatchedCluster {
    /// Indices (0-based, shared by the exact and discrete spectra) of the cluster.
    pub range: Range<usize>,
    pub exact_value: f64,
    /// Discrete eigenvalue paired with the requested index.
    pub value: f64,
    /// Coefficients of the combination over the cluster's discrete vectors.
    pub coefficients: Vec<f64>,
    /// DOF vector of the combination.
    pub combined: Vec<f64>,
    /// `|λ − λ_h| / |λ|`.
    pub eigenvalue_error: f64,
    /// Energy norm of `u − R w_h`.
    pub eigenfunction_error: f64,
}

/// Pairs exact index `index` (0-based) with the discrete spectrum by sorted rank. For a
/// simple eigenvalue the discrete vector is sign-aligned with the exact eigenfunction in
/// `L²`; for a cluster of multiplicity `k` the energy-closest member of the span of the `k`
/// discrete vectors is used.
pub fn match_cluster(disc: &Discretization, exact: &ExactSpectrum, index: usize, result: &EigenResult) -> Result<MatchedCluster, Error> {
    let exact = if exact.len() <= index + 1 || exact.cluster(index).end >= exact.len() {
        exact_spectrum(exact.domain, exact.p, (exact.len().max(index + 1)) * 2 + 8)
    } else {
        exact.clone()
    };
    let range = exact.cluster(index);
    if result.len() < range.end {
        return Err(Error::Config(format!(
            "exact eigenvalue #{} needs {} discrete pairs, only {} computed",
            index + 1,
            range.end,
            result.len()
        )));
    }
    let lambda = exact.values[index];
    let discrete = &result.values[range.clone()];
    let spread = discrete.iter().fold(f64::MIN, |a, &b| a.max(b)) - discrete.iter().fold(f64::MAX, |a, &b| a.min(b));
    let mut gap = f64::INFINITY;
    if range.start > 0 {
        gap = gap.min(lambda - exact.values[range.start - 1]);
    }
    gap = gap.min(exact.values[range.end] - lambda);
    if gap < 2.0 * spread {
        return Err(Error::ClusterAmbiguous { index: index + 1 });
    }

    let u = exact.eigenfunction(index);
    let fields: Vec<ReconstructedField> = range.clone().map(|j| disc.field(&result.vectors[j])).collect();
    let k = fields.len();
    let coefficients = if k == 1 {
        let g = l2_gram(&disc.space, &[&fields[0], &u])?;
        vec![if g[(0, 1)] < 0.0 { -1.0 } else { 1.0 }]
    } else {
        let mut all: Vec<&dyn PiecewiseField> = fields.iter().map(|f| f as &dyn PiecewiseField).collect();
        all.push(&u);
        let g = energy_gram(&disc.mesh, &disc.topology, &disc.space, &all, &disc.form)?;
        let gram = g.view((0, 0), (k, k)).into_owned();
        let rhs = DVector::from_fn(k, |i, _| g[(i, k)]);
        solve_small_spd(gram, rhs)
    };
    let n = disc.num_dofs();
    let mut combined = vec![0.0; n];
    for (c, j) in coefficients.iter().zip(range.clone()) {
        for (w, v) in combined.iter_mut().zip(&result.vectors[j]) {
            *w += c * v;
        }
    }
    let approx = disc.field(&combined);
    let eigenfunction_error = energy_norm(&disc.mesh, &disc.topology, &disc.space, &Difference(&u, &approx), &disc.form)?;
    Ok(MatchedCluster {
        range,
        exact_value: lambda,
        value: result.values[index],
        coefficients,
        combined,
        eigenvalue_error: relative_error(lambda, result.values[index]),
        eigenfunction_error,
    })
}

fn solve_small_spd(gram: DMatrix<f64>, rhs: DVector<f64>) -> Vec<f64> {
    match gram.clone().cholesky() {
        Some(c) => c.solve(&rhs).iter().copied().collect(),
        None => {
            let svd = gram.svd(true, true);
            svd.solve(&rhs, 1e-14).map(|x| x.iter().copied().collect()).unwrap_or_else(|_| vec![0.0; rhs.len()])
        }
    }
}

/// One line of a convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    /// Mesh size `h` (or DOF count, depending on the table).
    pub scale: f64,
    pub value: f64,
    pub error: f64,
    /// `log₂(e_{2h} / e_h)` against the previous row.
    pub order: Option<f64>,
}

/// Fills in orders for consecutive rows.
pub fn convergence_rows(entries: &[(f64, f64, f64)]) -> Vec<ConvergenceRow> {
    entries
        .iter()
        .enumerate()
        .map(|(i, &(scale, value, error))| ConvergenceRow {
            scale,
            value,
            error,
            order: (i > 0).then(|| (entries[i - 1].2 / error).log2()),
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub domain: Domain,
    pub form: FormConfig,
    pub patch_size: Option<usize>,
    /// 1-based index of the tracked exact eigenvalue.
    pub target: usize,
    pub solver: SolveOptions,
    pub method: SolverMethod,
}

#[derive(Debug, Clone)]
pub struct Study {
    pub dofs: Vec<usize>,
    /// Scale `h`, computed eigenvalue, relative error.
    pub eigenvalue: Vec<ConvergenceRow>,
    /// Scale `h`, exact eigenvalue, energy error of the matched eigenfunction.
    pub eigenfunction: Vec<ConvergenceRow>,
}

pub fn convergence_study(meshes: Vec<Mesh>, config: &StudyConfig) -> Result<Study, Error> {
    if meshes.len() < 2 {
        return Err(Error::Config("a convergence study needs at least two meshes".into()));
    }
    if config.target == 0 {
        return Err(Error::Config("target index is 1-based".into()));
    }
    let index = config.target - 1;
    let exact = exact_spectrum(config.domain, config.form.p(), 2 * config.target + 8);
    let k = exact.cluster(index).end;
    let mut ev = Vec::new();
    let mut ef = Vec::new();
    let mut dofs = Vec::new();
    for mesh in meshes {
        let disc = Discretization::new(mesh, &config.form, config.patch_size)?;
        let result = disc.eigenpairs(k, &config.solver, config.method)?;
        let matched = match_cluster(&disc, &exact, index, &result)?;
        ev.push((disc.h(), matched.value, matched.eigenvalue_error));
        ef.push((disc.h(), matched.exact_value, matched.eigenfunction_error));
        dofs.push(disc.num_dofs());
    }
    Ok(Study { dofs, eigenvalue: convergence_rows(&ev), eigenfunction: convergence_rows(&ef) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReliableCount {
    pub count: usize,
    /// `100 · count / N_h`.
    pub percentage: f64,
    /// Number of indices compared.
    pub compared: usize,
    /// Observed rate per index (`+∞` for a zero fine-mesh error).
    pub rates: Vec<f64>,
}

/// Counts eigenvalues whose observed rate `log₂(|λ − λ_{2h}| / |λ − λ_h|)` is at least
/// `threshold` and whose error does not grow under refinement. Pairing is by sorted rank
/// over the first `min` of the three lengths.
pub fn reliable_count(exact: &[f64], coarse: &[f64], fine: &[f64], n_fine: usize, threshold: f64) -> ReliableCount {
    let j = exact.len().min(coarse.len()).min(fine.len());
    let mut rates = Vec::with_capacity(j);
    let mut count = 0;
    for i in 0..j {
        let e2h = (exact[i] - coarse[i]).abs();
        let eh = (exact[i] - fine[i]).abs();
        let rate = if eh == 0.0 { f64::INFINITY } else { (e2h / eh).log2() };
        if rate >= threshold && eh <= e2h {
            count += 1;
        }
        rates.push(rate);
    }
    ReliableCount { count, percentage: 100.0 * count as f64 / n_fine as f64, compared: j, rates }
}

/// True when each of the first `count` computed values lies above its exact counterpart.
pub fn above_exact(values: &[f64], exact: &[f64], count: usize) -> bool {
    values.len() >= count && exact.len() >= count && values.iter().zip(exact).take(count).all(|(h, e)| h > e)
}

#[derive(Debug, Clone)]
pub struct SourceSolution {
    pub dofs: Vec<f64>,
    /// Energy norm of `u_s − R u_h`.
    pub energy_error: f64,
}

/// Solves `a_h(R u_h, R v_h) = (f, R v_h)` and measures the energy error against `exact`.
pub fn solve_source(disc: &Discretization, f: impl Fn(&Point) -> f64 + Sync, exact: &dyn PiecewiseField) -> Result<SourceSolution, Error> {
    let order = error_quadrature_order(disc.space.dim, disc.space.degree);
    let b = load_vector(&disc.space, f, order)?;
    let factor = SkylineCholesky::factor(&disc.stiffness).map_err(|dof| SolveError::StiffnessNotSPD { dof })?;
    let dofs = factor.solve(&b);
    let energy_error = energy_norm(&disc.mesh, &disc.topology, &disc.space, &Difference(exact, &disc.field(&dofs)), &disc.form)?;
    Ok(SourceSolution { dofs, energy_error })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_from_errors() {
        let rows = convergence_rows(&[(0.5, 1.0, 1e-2), (0.25, 1.0, 2.5e-3)]);
        assert_eq!(rows[0].order, None);
        assert!((rows[1].order.unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn reliable_conventions() {
        let exact = [2.0, 5.0, 5.0];
        let r = reliable_count(&exact, &exact, &exact, 3, 1.0);
        assert_eq!(r.count, 3);
        assert!(r.rates.iter().all(|v| v.is_infinite()));
        let r = reliable_count(&[1.0], &[1.5], &[1.25], 10, 1.0);
        assert_eq!(r.count, 1);
        assert!((r.percentage - 10.0).abs() < 1e-12);
        let r = reliable_count(&[1.0], &[1.1], &[1.2], 10, 1.0);
        assert_eq!(r.count, 0);
    }

    #[test]
    fn above_exact_check() {
        assert!(above_exact(&[2.1, 5.2], &[2.0, 5.0], 2));
        assert!(!above_exact(&[1.9, 5.2], &[2.0, 5.0], 2));
        assert!(!above_exact(&[2.1], &[2.0, 5.0], 2));
    }

    #[test]
    fn first_laplace_eigenpair() {
        let form = FormConfig::laplace(2);
        let disc = Discretization::new(Domain::SquarePi.mesh(8), &form, None).unwrap();
        let exact = exact_spectrum(Domain::SquarePi, 1, 6);
        let r = disc.eigenpairs(3, &SolveOptions::default(), SolverMethod::Dense).unwrap();
        let m = match_cluster(&disc, &exact, 0, &r).unwrap();
        assert!(m.eigenvalue_error < 5e-2, "{}", m.eigenvalue_error);
        assert!(m.eigenfunction_error < 0.2, "{}", m.eigenfunction_error);
        // Cluster of λ = 5: the best combination beats each vector alone.
        let c = match_cluster(&disc, &exact, 1, &r).unwrap();
        assert_eq!(c.range, 1..3);
        let u = exact.eigenfunction(1);
        for j in 1..3 {
            for s in [1.0, -1.0] {
                let v: Vec<f64> = r.vectors[j].iter().map(|x| s * x).collect();
                let e = energy_norm(&disc.mesh, &disc.topology, &disc.space, &Difference(&u, &disc.field(&v)), &form).unwrap();
                assert!(c.eigenfunction_error <= e + 1e-12);
            }
        }
    }

    #[test]
    fn zero_source_gives_zero() {
        let disc = Discretization::new(Domain::SquarePi.mesh(4), &FormConfig::laplace(1), None).unwrap();
        let zero = SineProduct { dim: 2, omega: [1.0, 1.0, 0.0], amplitude: 0.0 };
        let s = solve_source(&disc, |_| 0.0, &zero).unwrap();
        assert!(s.dofs.iter().all(|&v| v == 0.0));
        assert_eq!(s.energy_error, 0.0);
    }
}
