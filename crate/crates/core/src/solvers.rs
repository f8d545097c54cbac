//! Update-function solvers for `S f = −iF`.
//!
//! * Regularization: `f = −i (S + ε𝟙)⁻¹ F` by Cholesky.
//! * Diagonalization: eigendecompose `S = TΛTᴴ`, drop modes with
//!   `λ ≤ ζ·max(λ_max, 1)`, invert the rest and rotate back.
//! * Geometric: split every parameter into `(Re, Im)`, build the metric
//!   `g` and symplectic form `ω` of `S ⊗ [[1, i], [−i, 1]]`, and take the
//!   minimum-norm least-squares solution of
//!   `[[2g, ωᵀ], [ω, 0]] [f; λ] = [0; −F_geo]`, keeping only `f`.

use std::time::{Duration, Instant};

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::expectation::TdvpProblem;
use crate::linalg::{cvec_norm, hermitian_eigen, lstsq_min_norm, HermitianEigen};
use crate::rbm::ParameterVector;
use crate::scalar::{Real, C};

/// Regularization strength used when none is configured.
pub const DEFAULT_EPSILON: f64 = 1e-4;
/// Eigenvalue cutoff used when none is configured.
pub const DEFAULT_ZETA: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverStrategy<T> {
    Regularization {
        epsilon: T,
    },
    Diagonalization {
        zeta: T,
    },
    /// `rcond = None` selects `machine_epsilon · 4P`.
    Geometric {
        rcond: Option<T>,
    },
}

impl<T: Real> SolverStrategy<T> {
    pub fn regularization() -> Self {
        Self::Regularization {
            epsilon: T::of(DEFAULT_EPSILON),
        }
    }

    pub fn diagonalization() -> Self {
        Self::Diagonalization { zeta: T::of(DEFAULT_ZETA) }
    }

    pub fn geometric() -> Self {
        Self::Geometric { rcond: None }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Regularization { .. } => "regularization",
            Self::Diagonalization { .. } => "diagonalization",
            Self::Geometric { .. } => "geometric",
        }
    }
}

/// Default least-squares cutoff for a problem with `p` complex parameters.
pub fn default_rcond<T: Real>(p: usize) -> T {
    T::machine_epsilon() * T::of_usize(4 * p.max(1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport<T: Real> {
    pub update: ParameterVector<T>,
    /// Number of retained eigenmodes (diagonalization only).
    pub rank_kept: Option<usize>,
    /// `‖S f + iF‖ / max(‖F‖, tiny)`.
    pub residual: T,
    pub spectrum_min: T,
    pub spectrum_max: T,
    pub wall_time: Duration,
}

fn minus_i<T: Real>() -> C<T> {
    Complex::new(T::zero(), -T::one())
}

fn relative_residual<T: Real>(prob: &TdvpProblem<T>, update: &DVector<C<T>>) -> T {
    let i = Complex::new(T::zero(), T::one());
    let r = &prob.s * update + prob.f.map(|z| z * i);
    cvec_norm(&r) / cvec_norm(&prob.f).max(T::min_positive_value())
}

fn report<T: Real>(
    prob: &TdvpProblem<T>,
    update: DVector<C<T>>,
    rank_kept: Option<usize>,
    eig: Option<&HermitianEigen<T>>,
    start: Instant,
) -> SolverReport<T> {
    let residual = relative_residual(prob, &update);
    let (spectrum_min, spectrum_max) = match eig {
        Some(e) if !e.values.is_empty() => (e.values[0], e.values[e.values.len() - 1]),
        _ => (T::nan(), T::nan()),
    };
    SolverReport {
        update: ParameterVector(update),
        rank_kept,
        residual,
        spectrum_min,
        spectrum_max,
        wall_time: start.elapsed(),
    }
}

fn check_problem<T: Real>(prob: &TdvpProblem<T>) -> Result<()> {
    if !prob.s.is_square() || prob.s.nrows() != prob.f.len() {
        return Err(Error::Shape {
            what: "S dimension",
            expected: prob.f.len(),
            got: prob.s.nrows(),
        });
    }
    Ok(())
}

fn regularized_update<T: Real>(prob: &TdvpProblem<T>, epsilon: T) -> Result<DVector<C<T>>> {
    if !(epsilon > T::zero() && epsilon.is_finite()) {
        return Err(Error::Input(format!("epsilon must be > 0, got {epsilon}")));
    }
    check_problem(prob)?;
    let n = prob.f.len();
    let shifted = &prob.s + DMatrix::<C<T>>::identity(n, n) * Complex::new(epsilon, T::zero());
    // Complex Cholesky does not reject indefinite input on its own: a
    // negative pivot shows up as a non-real diagonal entry of L.
    let chol = Cholesky::new(shifted).filter(|c| {
        c.l_dirty()
            .diagonal()
            .iter()
            .all(|d| d.re > T::zero() && d.im.abs() <= T::machine_epsilon() * d.re)
    });
    match chol {
        Some(chol) => Ok(chol.solve(&prob.f).map(|z| z * minus_i())),
        None => {
            let min_eigenvalue = hermitian_eigen(&prob.s)
                .ok()
                .and_then(|e| e.values.iter().next().map(|v| v.as_f64()))
                .unwrap_or(f64::NAN);
            Err(Error::NotPositiveDefinite { min_eigenvalue })
        }
    }
}

/// `f = −i (S + ε𝟙)⁻¹ F`.
pub fn solve_regularized<T: Real>(prob: &TdvpProblem<T>, epsilon: T) -> Result<SolverReport<T>> {
    let start = Instant::now();
    let update = regularized_update(prob, epsilon)?;
    let eig = hermitian_eigen(&prob.s)?;
    Ok(report(prob, update, None, Some(&eig), start))
}

fn diagonalized_update<T: Real>(prob: &TdvpProblem<T>, zeta: T, eig: &HermitianEigen<T>) -> (DVector<C<T>>, usize) {
    let n = prob.f.len();
    let lam_max = eig.values.iter().copied().fold(T::zero(), T::max);
    let cut = zeta * lam_max.max(T::one());
    let rotated_f = eig.vectors.ad_mul(&prob.f);
    let mut f_dia = DVector::from_element(n, Complex::new(T::zero(), T::zero()));
    let mut kept = 0;
    for k in 0..n {
        let lam = eig.values[k];
        if lam > cut && lam > T::zero() {
            f_dia[k] = rotated_f[k] * minus_i() / lam;
            kept += 1;
        }
    }
    (&eig.vectors * f_dia, kept)
}

/// Truncated-eigenbasis solve; modes at or below `ζ·max(λ_max, 1)` are
/// treated as null directions.
pub fn solve_diagonalized<T: Real>(prob: &TdvpProblem<T>, zeta: T) -> Result<SolverReport<T>> {
    let start = Instant::now();
    if !(zeta >= T::zero() && zeta.is_finite()) {
        return Err(Error::Input(format!("zeta must be ≥ 0, got {zeta}")));
    }
    check_problem(prob)?;
    let eig = hermitian_eigen(&prob.s)?;
    let (update, kept) = diagonalized_update(prob, zeta, &eig);
    Ok(report(prob, update, Some(kept), Some(&eig), start))
}

/// Real `4P × 4P` system and right-hand side of the geometric formulation.
/// Real/imaginary parts are interleaved: `(Re W₁, Im W₁, …)`.
pub fn build_geometric_system<T: Real>(prob: &TdvpProblem<T>) -> Result<(DMatrix<T>, DVector<T>)> {
    check_problem(prob)?;
    let p = prob.f.len();
    let (g, omega) = metric_and_symplectic(&prob.s);
    let mut a = DMatrix::zeros(4 * p, 4 * p);
    a.view_mut((0, 0), (2 * p, 2 * p)).copy_from(&(g * T::of(2.0)));
    a.view_mut((0, 2 * p), (2 * p, 2 * p)).copy_from(&omega.transpose());
    a.view_mut((2 * p, 0), (2 * p, 2 * p)).copy_from(&omega);
    let mut b = DVector::zeros(4 * p);
    for k in 0..p {
        b[2 * p + 2 * k] = -prob.f[k].re;
        b[2 * p + 2 * k + 1] = -prob.f[k].im;
    }
    Ok((a, b))
}

/// `g = Re(S ⊗ [[1, i], [−i, 1]])`, `ω = Im(S ⊗ [[1, i], [−i, 1]])`.
pub fn metric_and_symplectic<T: Real>(s: &DMatrix<C<T>>) -> (DMatrix<T>, DMatrix<T>) {
    let p = s.nrows();
    let i = Complex::new(T::zero(), T::one());
    let pattern = [[Complex::new(T::one(), T::zero()), i], [-i, Complex::new(T::one(), T::zero())]];
    let s_geo = DMatrix::from_fn(2 * p, 2 * p, |r, c| s[(r / 2, c / 2)] * pattern[r % 2][c % 2]);
    (s_geo.map(|z| z.re), s_geo.map(|z| z.im))
}

/// Minimum-norm least-squares solve of the geometric system; Lagrange
/// multipliers are discarded.
pub fn solve_geometric<T: Real>(prob: &TdvpProblem<T>, rcond: Option<T>) -> Result<SolverReport<T>> {
    let start = Instant::now();
    let p = prob.f.len();
    let rcond = rcond.unwrap_or_else(|| default_rcond(p));
    if !(rcond >= T::zero() && rcond.is_finite()) {
        return Err(Error::Input(format!("rcond must be ≥ 0, got {rcond}")));
    }
    let (a, b) = build_geometric_system(prob)?;
    let x = lstsq_min_norm(&a, &b, rcond)?;
    let update = DVector::from_fn(p, |k, _| Complex::new(x[2 * k], x[2 * k + 1]));
    let eig = hermitian_eigen(&prob.s)?;
    Ok(report(prob, update, None, Some(&eig), start))
}

/// Dispatches on the strategy.
pub fn solve<T: Real>(prob: &TdvpProblem<T>, strategy: &SolverStrategy<T>) -> Result<SolverReport<T>> {
    match *strategy {
        SolverStrategy::Regularization { epsilon } => solve_regularized(prob, epsilon),
        SolverStrategy::Diagonalization { zeta } => solve_diagonalized(prob, zeta),
        SolverStrategy::Geometric { rcond } => solve_geometric(prob, rcond),
    }
}
