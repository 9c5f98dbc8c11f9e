use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use patchdg::analysis::{Domain, SolverMethod};
use patchdg::assembly::{BoundaryCondition, FormConfig, Problem, DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_ETA};
use patchdg::eigensolve::SolveOptions;

/// Keys accepted in a config file and, with dashes, as flags.
pub const KEYS: &[&str] = &[
    "problem", "bc", "m", "t", "mesh", "mesh_format", "domain", "k", "target", "eta", "alpha", "beta", "tol", "solver",
    "threshold", "vtk", "out",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Convergence,
    Reliable,
    Source,
    MeshInfo,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Convergence => "convergence",
            Command::Reliable => "reliable",
            Command::Source => "source",
            Command::MeshInfo => "mesh-info",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Msh,
    Poly,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Square(usize),
    Cube(usize),
    File(PathBuf, MeshFormat),
}

impl MeshSource {
    pub fn domain(&self) -> Option<Domain> {
        match self {
            MeshSource::Square(_) => Some(Domain::SquarePi),
            MeshSource::Cube(_) => Some(Domain::CubeUnit),
            MeshSource::File(..) => None,
        }
    }
}

/// A fully validated run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub form: FormConfig,
    pub patch_size: Option<usize>,
    pub meshes: Vec<MeshSource>,
    /// Domain with a known spectrum; needed by the commands that measure errors.
    pub domain: Option<Domain>,
    pub k: usize,
    /// 1-based exact eigenvalue tracked by `convergence`.
    pub target: usize,
    pub solver: SolveOptions,
    pub method: SolverMethod,
    pub threshold: f64,
    /// Number of eigenfunctions exported as VTK by `solve`.
    pub vtk: usize,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// Parses flat `key = value` lines. Blank lines and `#` comments are skipped; dashes in
/// keys are read as underscores.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return err(format!("config line {}: expected key=value, got {line:?}", i + 1));
        };
        let key = key.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return err(format!("config line {}: unknown key {key:?}", i + 1));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().or_else(|_| err(format!("{key}: cannot parse {value:?}")))
}

fn format_from_path(path: &Path, explicit: Option<&str>) -> Result<MeshFormat, ConfigError> {
    let name = match explicit {
        Some(f) => f.to_ascii_lowercase(),
        None => path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase(),
    };
    match name.as_str() {
        "msh" => Ok(MeshFormat::Msh),
        "poly" => Ok(MeshFormat::Poly),
        _ => err(format!("mesh {}: unknown format (use a .msh or .poly file, or set mesh_format)", path.display())),
    }
}

/// `square:4,8,16`, `cube:4`, or comma-separated file paths.
pub fn parse_mesh_spec(spec: &str, format: Option<&str>) -> Result<Vec<MeshSource>, ConfigError> {
    let spec = spec.trim();
    if spec.is_empty() {
        return err("mesh: empty value");
    }
    let generator = spec.split_once(':').filter(|(kind, _)| matches!(*kind, "square" | "cube"));
    if let Some((kind, sizes)) = generator {
        let mut out = Vec::new();
        for s in sizes.split(',') {
            let n: usize = parse_num("mesh", s)?;
            if n == 0 {
                return err("mesh: subdivision count must be at least 1");
            }
            out.push(if kind == "square" { MeshSource::Square(n) } else { MeshSource::Cube(n) });
        }
        return Ok(out);
    }
    spec.split(',')
        .map(|p| {
            let path = PathBuf::from(p.trim());
            let fmt = format_from_path(&path, format)?;
            Ok(MeshSource::File(path, fmt))
        })
        .collect()
}

impl RunConfig {
    /// Builds and validates a run from merged settings (file values overridden by flags).
    pub fn from_settings(command: Command, s: &BTreeMap<String, String>) -> Result<Self, ConfigError> {
        let get = |k: &str| s.get(k).map(String::as_str);
        let problem = match get("problem").unwrap_or("laplace") {
            "laplace" => Problem::Laplace,
            "biharmonic" => Problem::Biharmonic,
            other => return err(format!("problem: expected laplace or biharmonic, got {other:?}")),
        };
        let bc = match (problem, get("bc")) {
            (Problem::Laplace, None | Some("dirichlet")) => BoundaryCondition::Dirichlet,
            (Problem::Biharmonic, None | Some("simply_supported")) => BoundaryCondition::SimplySupported,
            (Problem::Biharmonic, Some("clamped")) => BoundaryCondition::Clamped,
            (_, Some(other)) => return err(format!("bc: {other:?} does not apply to {problem:?}")),
        };
        let m: usize = get("m").map(|v| parse_num("m", v)).transpose()?.unwrap_or(match problem {
            Problem::Laplace => 1,
            Problem::Biharmonic => 2,
        });
        let min_m = if problem == Problem::Laplace { 1 } else { 2 };
        if m < min_m {
            return err(format!("m: {problem:?} needs m >= {min_m}, got {m}"));
        }
        let mut form = FormConfig { problem, bc, ..FormConfig::laplace(m) };
        form.eta = get("eta").map(|v| parse_num("eta", v)).transpose()?.unwrap_or(DEFAULT_ETA);
        form.alpha = get("alpha").map(|v| parse_num("alpha", v)).transpose()?.unwrap_or(DEFAULT_ALPHA);
        form.beta = get("beta").map(|v| parse_num("beta", v)).transpose()?.unwrap_or(DEFAULT_BETA);
        form.validate().or_else(|e| err(e.to_string()))?;

        let patch_size = get("t").map(|v| parse_num::<usize>("t", v)).transpose()?;
        if patch_size == Some(0) {
            return err("t: patch size must be at least 1");
        }
        let Some(mesh) = get("mesh") else {
            return err("mesh: required (square:n, cube:n, or a .msh/.poly file)");
        };
        let meshes = parse_mesh_spec(mesh, get("mesh_format"))?;
        let needs_pair = matches!(command, Command::Convergence | Command::Reliable | Command::Source);
        if needs_pair && meshes.len() < 2 {
            return err(format!("{}: needs at least two meshes, e.g. square:4,8,16", command.name()));
        }
        if !needs_pair && meshes.len() != 1 {
            return err(format!("{}: expects a single mesh", command.name()));
        }
        let domain = match get("domain") {
            Some("square") => Some(Domain::SquarePi),
            Some("cube") => Some(Domain::CubeUnit),
            Some(other) => return err(format!("domain: expected square or cube, got {other:?}")),
            None => meshes[0].domain(),
        };
        if let Some(d) = domain {
            if meshes.iter().any(|s| s.domain().is_some_and(|e| e != d)) {
                return err("domain: mesh generators disagree with the domain");
            }
        }
        if needs_pair && domain.is_none() {
            return err(format!("{}: needs a domain with a known solution (square or cube)", command.name()));
        }

        let k: usize = get("k").map(|v| parse_num("k", v)).transpose()?.unwrap_or(10);
        if k == 0 {
            return err("k: must be at least 1");
        }
        let target: usize = get("target").map(|v| parse_num("target", v)).transpose()?.unwrap_or(1);
        if target == 0 {
            return err("target: 1-based index, must be at least 1");
        }
        let tol: f64 = get("tol").map(|v| parse_num("tol", v)).transpose()?.unwrap_or(SolveOptions::default().tol);
        if !(tol > 0.0 && tol < 1.0) {
            return err(format!("tol: must lie in (0, 1), got {tol}"));
        }
        let method = match get("solver").unwrap_or("auto") {
            "auto" => SolverMethod::Auto,
            "dense" => SolverMethod::Dense,
            "shift_invert" => SolverMethod::ShiftInvert,
            other => return err(format!("solver: expected auto, dense or shift_invert, got {other:?}")),
        };
        let threshold: f64 = get("threshold").map(|v| parse_num("threshold", v)).transpose()?.unwrap_or(1.0);
        if !threshold.is_finite() {
            return err("threshold: must be finite");
        }
        let vtk: usize = get("vtk").map(|v| parse_num("vtk", v)).transpose()?.unwrap_or(0);
        if vtk > k {
            return err(format!("vtk: cannot export {vtk} eigenfunctions when k = {k}"));
        }
        let out = PathBuf::from(get("out").unwrap_or("."));
        Ok(RunConfig {
            command,
            form,
            patch_size,
            meshes,
            domain,
            k,
            target,
            solver: SolveOptions { tol, ..SolveOptions::default() },
            method,
            threshold,
            vtk,
            out,
        })
    }
}
