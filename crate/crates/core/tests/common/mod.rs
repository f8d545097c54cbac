#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use quench_core::{Bond, RbmParameters64, SiteField, SpinHamiltonian64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn cnormal(rng: &mut ChaCha20Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn cvec(rng: &mut ChaCha20Rng, n: usize) -> DVector<Complex64> {
    DVector::from_fn(n, |_, _| cnormal(rng))
}

pub fn cmat(rng: &mut ChaCha20Rng, r: usize, c: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(r, c, |_, _| cnormal(rng))
}

pub fn normalized(v: DVector<Complex64>) -> DVector<Complex64> {
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}

/// Haar-ish unitary from the QR factor of a complex Gaussian matrix.
pub fn unitary(rng: &mut ChaCha20Rng, n: usize) -> DMatrix<Complex64> {
    cmat(rng, n, n).qr().q()
}

/// `U diag(λ) U†` with the given spectrum.
pub fn hermitian_with_spectrum(rng: &mut ChaCha20Rng, eigenvalues: &[f64]) -> DMatrix<Complex64> {
    let u = unitary(rng, eigenvalues.len());
    let d = DMatrix::from_diagonal(&DVector::from_iterator(
        eigenvalues.len(),
        eigenvalues.iter().map(|&l| Complex64::new(l, 0.0)),
    ));
    let s = &u * d * u.adjoint();
    (&s + s.adjoint()).map(|z| z * 0.5)
}

/// Eigenvalues log-uniform in `[lo, hi]`, endpoints included when `p ≥ 2`.
pub fn log_uniform_spectrum(rng: &mut ChaCha20Rng, p: usize, lo: f64, hi: f64) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..p)
        .map(|k| match k {
            0 => lo,
            1 => hi,
            _ => (a + (b - a) * rng.gen::<f64>()).exp(),
        })
        .collect()
}

/// Random bonds (each pair with probability 1/2, including σʸσʸ terms) and fields.
pub fn random_hamiltonian(rng: &mut ChaCha20Rng, n: usize) -> SpinHamiltonian64 {
    let mut bonds = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen::<bool>() {
                bonds.push(Bond {
                    i,
                    j,
                    jx: rng.gen_range(-1.0..1.0),
                    jy: rng.gen_range(-1.0..1.0),
                    jz: rng.gen_range(-1.0..1.0),
                });
            }
        }
    }
    let fields = (0..n)
        .map(|_| SiteField {
            hx: rng.gen_range(-1.0..1.0),
            hz: rng.gen_range(-1.0..1.0),
        })
        .collect();
    SpinHamiltonian64::new(n, bonds, fields).unwrap()
}

pub fn random_rbm(rng: &mut ChaCha20Rng, n: usize, m: usize, scale: f64) -> RbmParameters64 {
    let mut v = || cnormal(rng) * scale;
    let a = DVector::from_fn(n, |_, _| v());
    let b = DVector::from_fn(m, |_, _| v());
    let w = DMatrix::from_fn(m, n, |_, _| v());
    RbmParameters64::new(a, b, w).unwrap()
}

pub fn rel_err(a: &DVector<Complex64>, b: &DVector<Complex64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}
