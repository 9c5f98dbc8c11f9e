use std::fmt;

use patchdg::analysis::{
    convergence_study, exact_spectrum, reliable_count, solve_source, ConvergenceRow, Discretization, Domain, SineProduct,
    StudyConfig,
};
use patchdg::assembly::{BoundaryCondition, Problem};
use patchdg::eigensolve::solve_dense;
use patchdg::mesh::{build_topology, generate_cube_tet, mesh_geometry, parse_msh, parse_poly, ElementKind, Mesh};
use patchdg::patch::{default_patch_size, required_dim};
use patchdg::Error;

use crate::config::{Command, MeshFormat, MeshSource, RunConfig};
use crate::vtk::vtk_text;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Failure {
    Config,
    Numerical,
}

/// A failed run, tagged with the pipeline stage that raised it.
#[derive(Debug, Clone)]
pub struct RunError {
    pub failure: Failure,
    pub stage: &'static str,
    pub message: String,
}

impl RunError {
    pub fn config(stage: &'static str, message: impl Into<String>) -> Self {
        RunError { failure: Failure::Config, stage, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self.failure {
            Failure::Config => 2,
            Failure::Numerical => 3,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} failed: {}", self.stage, self.message)
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        let stage = match &e {
            Error::Mesh(_) => "mesh",
            Error::Quadrature(_) => "quadrature",
            Error::Patch(_) => "patch",
            Error::Reconstruction(_) => "reconstruction",
            Error::Solve(_) => "eigensolve",
            Error::ClusterAmbiguous { .. } => "analysis",
            Error::Config(_) | Error::DegreeTooLow(_) => "config",
        };
        let failure = if e.is_numerical() { Failure::Numerical } else { Failure::Config };
        RunError { failure, stage, message: e.to_string() }
    }
}

/// Files to write (name relative to the output directory, contents) and a report for
/// standard output. Nothing is written until the whole run has succeeded.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub files: Vec<(String, String)>,
    pub report: String,
}

pub fn num(v: f64) -> String {
    format!("{v:.11e}")
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for r in rows {
        w.write_record(r).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flushing to memory")).expect("CSV is UTF-8")
}

fn rows_csv(rows: &[ConvergenceRow]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![num(r.scale), num(r.value), num(r.error), r.order.map(num).unwrap_or_default()])
        .collect();
    csv_text(&["scale", "value", "error", "order"], &body)
}

fn rows_report(title: &str, rows: &[ConvergenceRow]) -> String {
    let mut s = format!("{title}\n{:>12} {:>20} {:>12} {:>7}\n", "h", "value", "error", "order");
    for r in rows {
        let order = r.order.map(|o| format!("{o:.2}")).unwrap_or_else(|| "-".into());
        s.push_str(&format!("{:>12.4e} {:>20.12} {:>12.4e} {order:>7}\n", r.scale, r.value, r.error));
    }
    s
}

pub fn load_mesh(source: &MeshSource) -> Result<Mesh, RunError> {
    match source {
        MeshSource::Square(n) => Ok(Domain::SquarePi.mesh(*n)),
        MeshSource::Cube(n) => Ok(generate_cube_tet(*n)),
        MeshSource::File(path, format) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| RunError::config("mesh", format!("cannot read {}: {e}", path.display())))?;
            let parsed = match format {
                MeshFormat::Msh => parse_msh(&text),
                MeshFormat::Poly => parse_poly(&text),
            };
            parsed.map_err(|e| RunError::config("mesh", format!("{}: {e}", path.display())))
        }
    }
}

pub fn execute(config: &RunConfig) -> Result<Artifacts, RunError> {
    let meshes = config.meshes.iter().map(load_mesh).collect::<Result<Vec<_>, _>>()?;
    if let Some(d) = config.domain {
        if meshes.iter().any(|m| m.dim() != d.dim()) {
            return Err(RunError::config("mesh", "mesh dimension does not match the domain"));
        }
    }
    match config.command {
        Command::Solve => solve(config, meshes.into_iter().next().expect("validated")),
        Command::Convergence => convergence(config, meshes),
        Command::Reliable => reliable(config, meshes),
        Command::Source => source(config, meshes),
        Command::MeshInfo => mesh_info(config, &meshes[0]),
    }
}

fn solve(config: &RunConfig, mesh: Mesh) -> Result<Artifacts, RunError> {
    let disc = Discretization::new(mesh, &config.form, config.patch_size)?;
    let result = disc.eigenpairs(config.k, &config.solver, config.method).map_err(Error::from)?;
    let rows: Vec<Vec<String>> = (0..result.len())
        .map(|i| vec![(i + 1).to_string(), num(result.values[i]), num(result.residuals[i])])
        .collect();
    let mut art = Artifacts::default();
    art.files.push(("eigenvalues.csv".into(), csv_text(&["index", "value", "residual"], &rows)));
    for i in 0..config.vtk.min(result.len()) {
        let name = format!("eigenfunction_{}.vtk", i + 1);
        let stem = format!("eigenfunction_{}", i + 1);
        art.files.push((name, vtk_text(&disc.mesh, &disc.space, &result.vectors[i], &stem)));
    }
    art.report = format!("{} DOFs, m = {}\n", disc.num_dofs(), config.form.m);
    for (i, (v, r)) in result.values.iter().zip(&result.residuals).enumerate() {
        art.report.push_str(&format!("{:>4} {v:>22.12} {r:>10.2e}\n", i + 1));
    }
    Ok(art)
}

fn convergence(config: &RunConfig, meshes: Vec<Mesh>) -> Result<Artifacts, RunError> {
    let study = convergence_study(
        meshes,
        &StudyConfig {
            domain: config.domain.expect("validated"),
            form: config.form.clone(),
            patch_size: config.patch_size,
            target: config.target,
            solver: config.solver.clone(),
            method: config.method,
        },
    )?;
    let mut art = Artifacts::default();
    art.files.push(("errors.csv".into(), rows_csv(&study.eigenvalue)));
    art.files.push(("eigenfunction_errors.csv".into(), rows_csv(&study.eigenfunction)));
    art.report = rows_report(&format!("eigenvalue #{} (relative error)", config.target), &study.eigenvalue);
    art.report.push_str(&rows_report("eigenfunction (energy error)", &study.eigenfunction));
    Ok(art)
}

fn reliable(config: &RunConfig, meshes: Vec<Mesh>) -> Result<Artifacts, RunError> {
    let domain = config.domain.expect("validated");
    let mut spectra = Vec::new();
    for mesh in meshes {
        let disc = Discretization::new(mesh, &config.form, config.patch_size)?;
        let r = solve_dense(&disc.stiffness, &disc.mass).map_err(Error::from)?;
        spectra.push((r.values, disc.num_dofs()));
    }
    let mut rows = Vec::new();
    let mut art = Artifacts::default();
    art.report.push_str(&format!("{:>8} {:>8} {:>10}\n", "N", "count", "percent"));
    for pair in spectra.windows(2) {
        let ((coarse, _), (fine, n)) = (&pair[0], &pair[1]);
        let exact = exact_spectrum(domain, config.form.p(), coarse.len().min(fine.len()));
        let r = reliable_count(&exact.values, coarse, fine, *n, config.threshold);
        rows.push(vec![n.to_string(), r.count.to_string(), num(r.percentage)]);
        art.report.push_str(&format!("{n:>8} {:>8} {:>9.2}%\n", r.count, r.percentage));
    }
    art.files.push(("reliable.csv".into(), csv_text(&["N", "count", "percentage"], &rows)));
    Ok(art)
}

/// Manufactured problem with `u = Π sin(ω x_c)`, which vanishes on the boundary together
/// with its Laplacian.
fn source(config: &RunConfig, meshes: Vec<Mesh>) -> Result<Artifacts, RunError> {
    if config.form.bc == BoundaryCondition::Clamped {
        return Err(RunError::config("config", "source: the manufactured solution needs dirichlet or simply_supported"));
    }
    let domain = config.domain.expect("validated");
    let w = if domain == Domain::SquarePi { 1.0 } else { std::f64::consts::PI };
    let dim = domain.dim();
    let exact = SineProduct { dim, omega: [w, w, if dim == 3 { w } else { 0.0 }], amplitude: 1.0 };
    let w2 = dim as f64 * w * w;
    let scale = match config.form.problem {
        Problem::Laplace => w2,
        Problem::Biharmonic => w2 * w2,
    };
    let mut entries = Vec::new();
    for mesh in meshes {
        let disc = Discretization::new(mesh, &config.form, config.patch_size)?;
        let sol = solve_source(&disc, |x| scale * exact.value(x), &exact)?;
        entries.push((disc.h(), disc.num_dofs() as f64, sol.energy_error));
    }
    let rows = patchdg::analysis::convergence_rows(&entries);
    let mut art = Artifacts::default();
    art.files.push(("errors.csv".into(), rows_csv(&rows)));
    art.report = rows_report("source problem (value = DOFs, error = energy norm)", &rows);
    Ok(art)
}

fn mesh_info(config: &RunConfig, mesh: &Mesh) -> Result<Artifacts, RunError> {
    let topo = build_topology(mesh).map_err(Error::from)?;
    let geometry = mesh_geometry(mesh).map_err(Error::from)?;
    let h = geometry.iter().map(|g| g.diameter).fold(0.0, f64::max);
    let measure: f64 = geometry.iter().map(|g| g.measure).sum();
    let kind = match mesh.kind() {
        ElementKind::Simplex => "simplex",
        ElementKind::Polygon => "polygon",
    };
    let m = config.form.m;
    let t = config.patch_size.unwrap_or_else(|| default_patch_size(m, mesh.dim()));
    let report = format!(
        "dimension {}\nelement_kind {kind}\nelements {}\nvertices {}\ninterior_faces {}\nboundary_faces {}\nmesh_size {}\nmeasure {}\nm {m}\npolynomial_dimension {}\npatch_size {t}\n",
        mesh.dim(),
        mesh.num_elements(),
        mesh.num_vertices(),
        topo.num_interior(),
        topo.num_boundary(),
        num(h),
        num(measure),
        required_dim(m, mesh.dim()),
    );
    Ok(Artifacts { files: Vec::new(), report })
}
