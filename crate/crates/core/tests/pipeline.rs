use std::f64::consts::PI;

use patchdg::analysis::{solve_source, Discretization, Domain, SineProduct, SolverMethod};
use patchdg::assembly::{BoundaryCondition, FormConfig};
use patchdg::eigensolve::{rayleigh_quotient, SolveOptions};
use patchdg::mesh::{parse_msh, write_msh};

#[test]
fn msh_round_trip_preserves_the_spectrum() {
    let mesh = Domain::SquarePi.mesh(6);
    let copy = parse_msh(&write_msh(&mesh).unwrap()).unwrap();
    let form = FormConfig::laplace(2);
    let a = Discretization::new(mesh, &form, None).unwrap();
    let b = Discretization::new(copy, &form, None).unwrap();
    let opts = SolveOptions::default();
    let ra = a.eigenpairs(6, &opts, SolverMethod::Dense).unwrap();
    let rb = b.eigenpairs(6, &opts, SolverMethod::Dense).unwrap();
    for (x, y) in ra.values.iter().zip(&rb.values) {
        assert!((x - y).abs() < 1e-10 * x);
    }
}

#[test]
fn shift_invert_pairs_satisfy_the_rayleigh_identity() {
    let disc = Discretization::new(Domain::SquarePi.mesh(12), &FormConfig::laplace(2), None).unwrap();
    let r = disc.eigenpairs(8, &SolveOptions::default(), SolverMethod::ShiftInvert).unwrap();
    for (v, x) in r.values.iter().zip(&r.vectors) {
        let q = rayleigh_quotient(&disc.stiffness, &disc.mass, x);
        assert!((q - v).abs() <= 1e-10 * v);
    }
    assert!(r.residuals.iter().all(|&res| res <= 1e-9));
}

#[test]
fn source_problem_energy_rates() {
    let u = SineProduct { dim: 2, omega: [1.0, 1.0, 0.0], amplitude: 1.0 };
    for m in 1..=3 {
        let errors: Vec<f64> = [8, 16]
            .iter()
            .map(|&n| {
                let disc = Discretization::new(Domain::SquarePi.mesh(n), &FormConfig::laplace(m), None).unwrap();
                solve_source(&disc, |x| 2.0 * u.value(x), &u).unwrap().energy_error
            })
            .collect();
        let order = (errors[0] / errors[1]).log2();
        assert!((order - m as f64).abs() < 0.5, "m={m}: order {order}");
    }
}

#[test]
fn clamped_plate_matches_the_reference_value() {
    // Fundamental frequency of the clamped unit square plate, λ ≈ 1294.934, rescaled to
    // side π by π⁻⁴.
    let reference = 1294.934 / PI.powi(4);
    let form = FormConfig::biharmonic(3, BoundaryCondition::Clamped);
    let disc = Discretization::new(Domain::SquarePi.mesh(32), &form, None).unwrap();
    let r = disc.eigenpairs(1, &SolveOptions::default(), SolverMethod::Auto).unwrap();
    assert!((r.values[0] - reference).abs() < 0.01 * reference, "λ₁ = {}", r.values[0]);
}

#[test]
fn biharmonic_shift_invert_agrees_with_dense() {
    // The lowest plate modes sit at a residual floor near 1e-8, above the default tolerance.
    let form = FormConfig::biharmonic(2, BoundaryCondition::SimplySupported);
    let disc = Discretization::new(Domain::SquarePi.mesh(32), &form, None).unwrap();
    let opts = SolveOptions::default();
    let it = disc.eigenpairs(3, &opts, SolverMethod::ShiftInvert).unwrap();
    let dense = disc.eigenpairs(3, &opts, SolverMethod::Dense).unwrap();
    for (a, b) in it.values.iter().zip(&dense.values) {
        assert!((a - b).abs() < 1e-8 * b);
    }
}
