use std::f64::consts::PI;

use crate::mesh::{generate_cube_tet, generate_square_tri, Mesh};
use crate::reconstruction::{Jet, PiecewiseField};
use crate::Point;

/// Model domains with closed-form spectra.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// `[0, π]²`: `λ = i² + j²` (Laplace), `(i² + j²)²` (simply supported plate).
    SquarePi,
    /// `[0, 1]³`: `λ = (i² + j² + k²)π²`, squared for the biharmonic problem.
    CubeUnit,
}

impl Domain {
    pub fn dim(self) -> usize {
        match self {
            Domain::SquarePi => 2,
            Domain::CubeUnit => 3,
        }
    }

    /// Structured mesh with `n` subdivisions per side.
    pub fn mesh(self, n: usize) -> Mesh {
        match self {
            Domain::SquarePi => generate_square_tri(n, PI),
            Domain::CubeUnit => generate_cube_tet(n),
        }
    }

    fn frequency(self) -> f64 {
        match self {
            Domain::SquarePi => 1.0,
            Domain::CubeUnit => PI,
        }
    }
}

/// `amplitude · Π_c sin(ω_c x_c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SineProduct {
    pub dim: usize,
    pub omega: [f64; 3],
    pub amplitude: f64,
}

impl SineProduct {
    pub fn value(&self, x: &Point) -> f64 {
        (0..self.dim).fold(self.amplitude, |v, c| v * (self.omega[c] * x[c]).sin())
    }
}

impl PiecewiseField for SineProduct {
    fn jet(&self, _: usize, x: &Point) -> Jet {
        let s: Vec<f64> = (0..self.dim).map(|c| (self.omega[c] * x[c]).sin()).collect();
        let value = s.iter().fold(self.amplitude, |v, t| v * t);
        let mut gradient = [0.0; 3];
        for (c, g) in gradient.iter_mut().enumerate().take(self.dim) {
            let others: f64 = (0..self.dim).filter(|&d| d != c).map(|d| s[d]).product();
            *g = self.amplitude * self.omega[c] * (self.omega[c] * x[c]).cos() * others;
        }
        let w2: f64 = self.omega[..self.dim].iter().map(|w| w * w).sum();
        Jet { value, gradient, laplacian: -w2 * value }
    }
}

/// Exact eigenvalues (ascending, repeated by multiplicity) with their index tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSpectrum {
    pub domain: Domain,
    /// 1 for Laplace, 2 for biharmonic.
    pub p: usize,
    pub values: Vec<f64>,
    pub labels: Vec<Vec<usize>>,
}

impl ExactSpectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `L²`-normalized eigenfunction of entry `index` (0-based).
    pub fn eigenfunction(&self, index: usize) -> SineProduct {
        let dim = self.domain.dim();
        let w = self.domain.frequency();
        let mut omega = [0.0; 3];
        for (c, &i) in self.labels[index].iter().enumerate() {
            omega[c] = w * i as f64;
        }
        let amplitude = match self.domain {
            Domain::SquarePi => 2.0 / PI,
            Domain::CubeUnit => 2f64.powf(1.5),
        };
        SineProduct { dim, omega, amplitude }
    }

    /// Half-open index range of the exact cluster containing `index`.
    pub fn cluster(&self, index: usize) -> std::ops::Range<usize> {
        let v = self.values[index];
        let same = |j: usize| (self.values[j] - v).abs() <= 1e-12 * v;
        let mut lo = index;
        while lo > 0 && same(lo - 1) {
            lo -= 1;
        }
        let mut hi = index + 1;
        while hi < self.values.len() && same(hi) {
            hi += 1;
        }
        lo..hi
    }
}

/// First `count` exact eigenvalues on `domain` for the operator of order `2p`.
pub fn exact_spectrum(domain: Domain, p: usize, count: usize) -> ExactSpectrum {
    let dim = domain.dim();
    let mut bound = ((count as f64).powf(1.0 / dim as f64).ceil() as usize + 2).max(2);
    let tuples = loop {
        let mut tuples: Vec<(usize, Vec<usize>)> = Vec::new();
        let mut idx = vec![1; dim];
        'enumerate: loop {
            tuples.push((idx.iter().map(|i| i * i).sum(), idx.clone()));
            for c in (0..dim).rev() {
                if idx[c] < bound {
                    idx[c] += 1;
                    continue 'enumerate;
                }
                idx[c] = 1;
            }
            break;
        }
        tuples.sort();
        // Everything below the smallest tuple with an index beyond `bound` is complete.
        let omitted = (bound + 1) * (bound + 1) + dim - 1;
        if tuples.len() >= count && tuples[count - 1].0 < omitted {
            tuples.truncate(count);
            break tuples;
        }
        bound *= 2;
    };
    let scale = domain.frequency().powi(2);
    let values = tuples.iter().map(|(s, _)| (scale * *s as f64).powi(p as i32)).collect();
    let labels = tuples.into_iter().map(|(_, l)| l).collect();
    ExactSpectrum { domain, p, values, labels }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_values() {
        let s = exact_spectrum(Domain::SquarePi, 1, 20);
        assert_eq!(&s.values[..6], &[2.0, 5.0, 5.0, 8.0, 10.0, 10.0]);
        assert_eq!(s.values[19], 32.0);
        assert_eq!(s.cluster(1), 1..3);
        assert_eq!(s.cluster(0), 0..1);
        let b = exact_spectrum(Domain::SquarePi, 2, 20);
        assert_eq!(b.values[19], 1024.0);
    }

    #[test]
    fn cube_values() {
        let s = exact_spectrum(Domain::CubeUnit, 1, 4);
        assert!((s.values[0] - 3.0 * PI * PI).abs() < 1e-12);
        assert_eq!(s.cluster(1), 1..4);
        let b = exact_spectrum(Domain::CubeUnit, 2, 1);
        assert!((b.values[0] - 9.0 * PI.powi(4)).abs() < 1e-9);
    }

    #[test]
    fn prefix_property_and_multiplicities() {
        let long = exact_spectrum(Domain::SquarePi, 1, 300);
        let short = exact_spectrum(Domain::SquarePi, 1, 120);
        assert_eq!(&long.values[..120], &short.values[..]);
        assert!(long.values.windows(2).all(|w| w[0] <= w[1]));
        // Brute-force count of i² + j² ≤ 50.
        let brute = (1..10).flat_map(|i| (1..10).map(move |j| i * i + j * j)).filter(|&v| v <= 50).count();
        assert_eq!(long.values.iter().filter(|&&v| v <= 50.0).count(), brute);
    }

    #[test]
    fn eigenfunction_jet() {
        let s = exact_spectrum(Domain::SquarePi, 1, 3);
        let u = s.eigenfunction(1);
        let x = [0.3, 1.1, 0.0];
        let j = u.jet(0, &x);
        let h = 1e-6;
        let fd = (u.value(&[x[0] + h, x[1], 0.0]) - u.value(&[x[0] - h, x[1], 0.0])) / (2.0 * h);
        assert!((j.gradient[0] - fd).abs() < 1e-8);
        assert!((j.laplacian + s.values[1] * j.value).abs() < 1e-12);
    }
}
