mod common;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;
use quench_core::solvers::metric_and_symplectic;
use quench_core::{solve_diagonalized, solve_geometric, solve_regularized, TdvpProblem};

use common::*;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn problem(s: DMatrix<Complex64>, f: DVector<Complex64>) -> TdvpProblem<f64> {
    TdvpProblem::from_parts(s, f).unwrap()
}

// -i·pinv(S)·F through faer's SVD, discarding singular values at or below
// ζ·max(σ_max, 1). Shares no code with the eigen-based solver.
fn pinv_oracle(s: &DMatrix<Complex64>, f: &DVector<Complex64>, zeta: f64) -> DVector<Complex64> {
    let p = s.nrows();
    let a = faer::Mat::<faer::c64>::from_fn(p, p, |i, j| faer::c64::new(s[(i, j)].re, s[(i, j)].im));
    let svd = a.svd().unwrap();
    let (u, sv, v) = (svd.U(), svd.S(), svd.V());
    let smax = (0..p).map(|k| sv[k].re).fold(0.0, f64::max);
    let cut = zeta * smax.max(1.0);
    let mut out = DVector::zeros(p);
    for k in 0..p {
        if sv[k].re > cut {
            let uk = DVector::from_fn(p, |i, _| Complex64::new(u[(i, k)].re, u[(i, k)].im));
            let vk = DVector::from_fn(p, |i, _| Complex64::new(v[(i, k)].re, v[(i, k)].im));
            out += vk * (uk.dotc(f) / sv[k].re);
        }
    }
    out * (-I)
}

fn singular_psd(r: &mut rand_chacha::ChaCha20Rng, p: usize, rank: usize) -> DMatrix<Complex64> {
    let mut spectrum = log_uniform_spectrum(r, rank, 0.1, 10.0);
    spectrum.resize(p, 0.0);
    hermitian_with_spectrum(r, &spectrum)
}

fn to_real(f: &DVector<Complex64>) -> DVector<f64> {
    DVector::from_fn(2 * f.len(), |k, _| if k % 2 == 0 { f[k / 2].re } else { f[k / 2].im })
}

#[test]
fn three_solvers_agree_on_regular_problems() {
    let mut r = rng(41);
    for k in 0..100 {
        let p = 1 + k % 30;
        let spectrum = log_uniform_spectrum(&mut r, p, 1e-3, 1e3);
        let prob = problem(hermitian_with_spectrum(&mut r, &spectrum), cvec(&mut r, p));
        let reg = solve_regularized(&prob, 1e-12).unwrap().update.0;
        let dia = solve_diagonalized(&prob, 1e-12).unwrap().update.0;
        let geo = solve_geometric(&prob, None).unwrap().update.0;
        assert!(rel_err(&reg, &dia) < 1e-6, "instance {k}: reg vs dia {:e}", rel_err(&reg, &dia));
        assert!(rel_err(&geo, &dia) < 1e-6, "instance {k}: geo vs dia {:e}", rel_err(&geo, &dia));
    }
}

#[test]
fn diagonalization_equals_truncated_pseudoinverse() {
    let mut r = rng(42);
    for k in 0..100 {
        let p = 2 + k % 20;
        let rank = 1 + k % (p - 1);
        let s = singular_psd(&mut r, p, rank);
        let f = cvec(&mut r, p);
        let report = solve_diagonalized(&problem(s.clone(), f.clone()), 1e-12).unwrap();
        let oracle = pinv_oracle(&s, &f, 1e-12);
        let err = (&report.update.0 - &oracle).norm();
        assert!(err <= 1e-10 * oracle.norm().max(1.0), "instance {k}: |f - f_pinv| = {err:e}");
        assert_eq!(report.rank_kept, Some(rank));
    }
}

#[test]
fn regularized_residual_is_small() {
    let mut r = rng(43);
    let spectrum = log_uniform_spectrum(&mut r, 20, 0.1, 10.0);
    let s = hermitian_with_spectrum(&mut r, &spectrum);
    let f = cvec(&mut r, 20);
    let eps = 1e-4;
    let x = solve_regularized(&problem(s.clone(), f.clone()), eps).unwrap().update.0;
    let lhs = (&s + DMatrix::identity(20, 20) * Complex64::new(eps, 0.0)) * &x + &f * I;
    assert!(lhs.norm() <= 1e-10 * f.norm());
}

#[test]
fn zero_cutoff_matches_tiny_regularization() {
    let mut r = rng(44);
    let spectrum = log_uniform_spectrum(&mut r, 12, 0.5, 5.0);
    let prob = problem(hermitian_with_spectrum(&mut r, &spectrum), cvec(&mut r, 12));
    let dia = solve_diagonalized(&prob, 0.0).unwrap().update.0;
    let reg = solve_regularized(&prob, 1e-15).unwrap().update.0;
    assert!(rel_err(&dia, &reg) < 1e-8);
}

#[test]
fn geometric_matches_diagonalization_on_psd_problems() {
    let mut r = rng(45);
    let spectrum = log_uniform_spectrum(&mut r, 10, 0.1, 10.0);
    let prob = problem(hermitian_with_spectrum(&mut r, &spectrum), cvec(&mut r, 10));
    let geo = solve_geometric(&prob, None).unwrap().update.0;
    let dia = solve_diagonalized(&prob, 1e-12).unwrap().update.0;
    assert!(rel_err(&geo, &dia) < 1e-6);
}

#[test]
fn geometric_satisfies_symplectic_constraint_on_consistent_systems() {
    let mut r = rng(46);
    for k in 0..50 {
        let p = 1 + k % 12;
        let rank = 1 + k % p;
        let s = singular_psd(&mut r, p, rank);
        let (_, omega) = metric_and_symplectic(&s);
        // F_geo = -ω x lies in the range of ω.
        let x = DVector::from_fn(2 * p, |_, _| cnormal(&mut r).re);
        let f_geo = -(&omega * x);
        let f = DVector::from_fn(p, |k, _| Complex64::new(f_geo[2 * k], f_geo[2 * k + 1]));
        let update = solve_geometric(&problem(s, f), None).unwrap().update.0;
        let residual = (&omega * to_real(&update) + &f_geo).norm();
        assert!(residual <= 1e-8 * f_geo.norm().max(1e-300), "instance {k}: residual {residual:e}");
    }
}

#[test]
fn null_space_force_separates_the_solvers() {
    let mut r = rng(47);
    let p = 6;
    let u = unitary(&mut r, p);
    let spectrum = [0.0, 0.0, 0.5, 1.0, 2.0, 4.0];
    let d = DMatrix::from_diagonal(&DVector::from_iterator(p, spectrum.iter().map(|&l| Complex64::new(l, 0.0))));
    let s = &u * d * u.adjoint();
    let s = (&s + s.adjoint()).map(|z| z * 0.5);
    let f = u.column(0) * Complex64::new(0.7, -0.2) + u.column(1) * Complex64::new(-0.3, 0.4);
    let prob = problem(s, f.clone());

    let dia = solve_diagonalized(&prob, 1e-12).unwrap();
    assert!(dia.update.norm() <= 1e-12 * f.norm());
    assert_eq!(dia.rank_kept, Some(4));

    for eps in [1e-5, 1e-4, 1e-3] {
        let reg = solve_regularized(&prob, eps).unwrap();
        let expected = f.norm() / eps;
        assert!((reg.update.norm() - expected).abs() <= 1e-6 * expected, "ε = {eps}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn diagonalization_is_scale_covariant(seed in any::<u64>(), c in 1e-3f64..1e3, p in 2usize..12) {
        let mut r = rng(seed);
        let s = singular_psd(&mut r, p, p - 1);
        let f = cvec(&mut r, p);
        let base = solve_diagonalized(&problem(s.clone(), f.clone()), 1e-12).unwrap().update.0;
        let k = Complex64::new(c, 0.0);
        let scaled = solve_diagonalized(&problem(s * k, f * k), 1e-12).unwrap().update.0;
        prop_assert!(rel_err(&scaled, &base) <= 1e-10);
    }

    #[test]
    fn spectrum_diagnostics_are_reported(seed in any::<u64>(), p in 1usize..10) {
        let mut r = rng(seed);
        let spectrum = log_uniform_spectrum(&mut r, p, 0.01, 100.0);
        let prob = problem(hermitian_with_spectrum(&mut r, &spectrum), cvec(&mut r, p));
        let lo = spectrum.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = spectrum.iter().copied().fold(0.0, f64::max);
        for report in [
            solve_regularized(&prob, 1e-4).unwrap(),
            solve_diagonalized(&prob, 1e-12).unwrap(),
            solve_geometric(&prob, None).unwrap(),
        ] {
            prop_assert!((report.spectrum_min - lo).abs() <= 1e-10 * hi);
            prop_assert!((report.spectrum_max - hi).abs() <= 1e-10 * hi);
            prop_assert!(report.residual.is_finite());
        }
    }
}
