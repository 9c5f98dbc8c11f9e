mod config;
mod run;
mod vtk;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{parse_config_text, Command, RunConfig};
use run::{execute, RunError};

#[derive(Parser)]
#[command(name = "patchdg", version, about = "Patch-reconstructed DG eigenvalue solver")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Smallest eigenpairs on one mesh: eigenvalues.csv and optional VTK.
    Solve(Args),
    /// Error and order table for one exact eigenvalue over a mesh sequence.
    Convergence(Args),
    /// Number of at-least-linearly convergent eigenvalues per mesh pair.
    Reliable(Args),
    /// Energy error of a manufactured source problem over a mesh sequence.
    Source(Args),
    /// Mesh statistics.
    MeshInfo(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Flat key=value file; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// laplace | biharmonic
    #[arg(long)]
    problem: Option<String>,
    /// dirichlet (laplace) | simply_supported | clamped (biharmonic)
    #[arg(long)]
    bc: Option<String>,
    /// Polynomial degree of the reconstruction.
    #[arg(long)]
    m: Option<String>,
    /// Patch size override.
    #[arg(long)]
    t: Option<String>,
    /// square:n[,n...] | cube:n[,n...] | path.msh | path.poly (comma-separated for sequences)
    #[arg(long)]
    mesh: Option<String>,
    /// msh | poly, when the file extension does not tell.
    #[arg(long)]
    mesh_format: Option<String>,
    /// square | cube: domain with a known solution, for file meshes.
    #[arg(long)]
    domain: Option<String>,
    /// Number of eigenpairs.
    #[arg(long)]
    k: Option<String>,
    /// 1-based index of the exact eigenvalue tracked by `convergence`.
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    /// Relative residual tolerance of the iterative eigensolver.
    #[arg(long)]
    tol: Option<String>,
    /// auto | dense | shift_invert
    #[arg(long)]
    solver: Option<String>,
    /// Minimal observed rate for `reliable`.
    #[arg(long)]
    threshold: Option<String>,
    /// Number of eigenfunctions written as VTK by `solve`.
    #[arg(long)]
    vtk: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// Worker threads (falls back to PATCHDG_THREADS).
    #[arg(long)]
    threads: Option<usize>,
}

impl Args {
    fn flags(&self) -> [(&'static str, &Option<String>); 17] {
        [
            ("problem", &self.problem),
            ("bc", &self.bc),
            ("m", &self.m),
            ("t", &self.t),
            ("mesh", &self.mesh),
            ("mesh_format", &self.mesh_format),
            ("domain", &self.domain),
            ("k", &self.k),
            ("target", &self.target),
            ("eta", &self.eta),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("tol", &self.tol),
            ("solver", &self.solver),
            ("threshold", &self.threshold),
            ("vtk", &self.vtk),
            ("out", &self.out),
        ]
    }
}

fn settings(args: &Args) -> Result<BTreeMap<String, String>, RunError> {
    let mut map = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| RunError::config("config", format!("cannot read {}: {e}", path.display())))?;
            parse_config_text(&text).map_err(|e| RunError::config("config", e.0))?
        }
        None => BTreeMap::new(),
    };
    for (key, value) in args.flags() {
        if let Some(v) = value {
            map.insert(key.to_string(), v.clone());
        }
    }
    Ok(map)
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, RunError> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("PATCHDG_THREADS") {
            Ok(v) => Some(v.trim().parse().map_err(|_| RunError::config("config", format!("PATCHDG_THREADS: cannot parse {v:?}")))?),
            Err(_) => None,
        },
    };
    if n == Some(0) {
        return Err(RunError::config("config", "threads must be at least 1"));
    }
    Ok(n)
}

fn write_artifacts(config: &RunConfig, files: &[(String, String)]) -> Result<(), RunError> {
    if files.is_empty() {
        return Ok(());
    }
    let io = |e: std::io::Error| RunError::config("output", format!("{}: {e}", config.out.display()));
    std::fs::create_dir_all(&config.out).map_err(io)?;
    for (name, text) in files {
        std::fs::write(config.out.join(name), text).map_err(io)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), RunError> {
    let (command, args) = match &cli.command {
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::Convergence(a) => (Command::Convergence, a),
        Cmd::Reliable(a) => (Command::Reliable, a),
        Cmd::Source(a) => (Command::Source, a),
        Cmd::MeshInfo(a) => (Command::MeshInfo, a),
    };
    let config = RunConfig::from_settings(command, &settings(args)?).map_err(|e| RunError::config("config", e.0))?;
    if let Some(n) = threads(args.threads)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| RunError::config("config", format!("thread pool: {e}")))?;
    }
    let artifacts = execute(&config)?;
    write_artifacts(&config, &artifacts.files)?;
    print!("{}", artifacts.report);
    for (name, _) in &artifacts.files {
        println!("wrote {}", config.out.join(name).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
