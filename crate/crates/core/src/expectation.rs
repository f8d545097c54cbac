//! Estimators for the TDVP linear problem `S ẇ = −iF` and for observables.
//!
//! Both estimators reduce to a weighted covariance over configurations:
//! exact summation weights every basis state by its Born probability,
//! Monte Carlo weights each distinct sample by its frequency.

use std::collections::BTreeMap;

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{check_spins, index_to_spins, spins_to_index, SpinBasis, SpinHamiltonian};
use crate::rbm::RbmParameters;
use crate::sampler::SampleSet;
use crate::scalar::{c_is_finite, Real, C};

/// One time step's linear problem.
#[derive(Debug, Clone, PartialEq)]
pub struct TdvpProblem<T: Real> {
    /// Quantum geometric tensor, Hermitian positive semidefinite.
    pub s: DMatrix<C<T>>,
    /// Force vector.
    pub f: DVector<C<T>>,
    pub energy: C<T>,
    pub energy_variance: T,
    /// Sample count for stochastic estimates; `None` under exact summation.
    pub n_samples: Option<usize>,
}

impl<T: Real> TdvpProblem<T> {
    pub fn n_params(&self) -> usize {
        self.f.len()
    }

    /// Naive `sqrt(var / n)` error bar of a sampled energy.
    pub fn energy_standard_error(&self) -> Option<T> {
        self.n_samples.map(|n| (self.energy_variance / T::of_usize(n)).sqrt())
    }

    /// Builds a problem directly from `S` and `F` (energy zero).
    pub fn from_parts(s: DMatrix<C<T>>, f: DVector<C<T>>) -> Result<Self> {
        if !s.is_square() || s.nrows() != f.len() {
            return Err(Error::Shape {
                what: "S dimension",
                expected: f.len(),
                got: s.nrows(),
            });
        }
        Ok(Self {
            s,
            f,
            energy: Complex::new(T::zero(), T::zero()),
            energy_variance: T::zero(),
            n_samples: None,
        })
    }
}

/// Where expectation values come from.
#[derive(Debug, Clone, Copy)]
pub enum Source<'a> {
    Exact(&'a SpinBasis),
    Samples(&'a SampleSet),
}

fn check_shapes<T: Real>(h: &SpinHamiltonian<T>, p: &RbmParameters<T>) -> Result<()> {
    if h.n_sites() != p.n_visible() {
        return Err(Error::Shape {
            what: "Hamiltonian sites vs visible units",
            expected: p.n_visible(),
            got: h.n_sites(),
        });
    }
    Ok(())
}

/// `E_loc(σ) = Σ_{σ'} ⟨σ|H|σ'⟩ ψ(σ')/ψ(σ)`.
pub fn local_energy<T: Real>(h: &SpinHamiltonian<T>, p: &RbmParameters<T>, sigma: &[i8]) -> Result<C<T>> {
    check_shapes(h, p)?;
    check_spins(sigma, p.n_visible())?;
    let n = p.n_visible();
    let log_here = p.log_amplitude_unchecked(sigma);
    local_value(
        h,
        spins_to_index(sigma),
        n,
        |idx| p.log_amplitude_unchecked(&index_to_spins(idx, n)),
        log_here,
    )
}

/// Local estimator of an operator given a log-amplitude lookup.
fn local_value<T: Real>(op: &SpinHamiltonian<T>, index: usize, n: usize, log_psi: impl Fn(usize) -> C<T>, log_here: C<T>) -> Result<C<T>> {
    let mut acc = Complex::new(T::zero(), T::zero());
    for (target, amp) in op.connections(index) {
        // ⟨σ|H|σ'⟩ = conj(⟨σ'|H|σ⟩)
        let ratio = if target == index {
            Complex::new(T::one(), T::zero())
        } else {
            (log_psi(target) - log_here).exp()
        };
        acc += amp.conj() * ratio;
    }
    if !c_is_finite(acc) {
        return Err(Error::NonFiniteLocalEnergy {
            sigma: index_to_spins(index, n),
        });
    }
    Ok(acc)
}

/// Normalized Born weights from log-amplitudes.
fn born_weights<T: Real>(logs: &[C<T>]) -> Result<Vec<T>> {
    let shift = logs.iter().map(|z| z.re).fold(T::neg_infinity(), T::max);
    if !shift.is_finite() {
        return Err(Error::NonFinite("log-amplitudes".into()));
    }
    let two = T::of(2.0);
    let raw: Vec<T> = logs.iter().map(|z| (two * (z.re - shift)).exp()).collect();
    let total = raw.iter().fold(T::zero(), |a, &b| a + b);
    Ok(raw.into_iter().map(|w| w / total).collect())
}

/// Distinct sampled configurations in ascending order with their counts;
/// repeated samples share one evaluation.
fn tally(samples: &SampleSet) -> (Vec<usize>, Vec<usize>) {
    let mut counts = BTreeMap::new();
    for &c in samples.configs() {
        *counts.entry(c).or_insert(0usize) += 1;
    }
    counts.into_iter().unzip()
}

/// Weighted centered covariances. `derivs` is row-per-configuration.
fn covariance_problem<T: Real>(weights: &[T], derivs: &DMatrix<C<T>>, eloc: &[C<T>], n_samples: Option<usize>) -> TdvpProblem<T> {
    let (rows, np) = derivs.shape();
    let zero = Complex::new(T::zero(), T::zero());
    let mut mean_o = DVector::from_element(np, zero);
    let mut mean_e = zero;
    for r in 0..rows {
        let w = weights[r];
        mean_e += eloc[r] * w;
        for k in 0..np {
            mean_o[k] += derivs[(r, k)] * w;
        }
    }
    // sqrt(w)-scaled centered rows so that S = Xᴴ X and F = Xᴴ e.
    let mut x = derivs.clone();
    let mut e = DVector::from_element(rows, zero);
    let mut variance = T::zero();
    for r in 0..rows {
        let sw = weights[r].sqrt();
        for k in 0..np {
            x[(r, k)] = (x[(r, k)] - mean_o[k]) * sw;
        }
        let de = eloc[r] - mean_e;
        variance += de.norm_sqr() * weights[r];
        e[r] = de * sw;
    }
    let s = x.ad_mul(&x);
    let f = x.ad_mul(&e);
    TdvpProblem {
        s,
        f,
        energy: mean_e,
        energy_variance: variance,
        n_samples,
    }
}

struct ExactSums<T: Real> {
    weights: Vec<T>,
    logs: Vec<C<T>>,
}

fn exact_sums<T: Real>(p: &RbmParameters<T>, basis: &SpinBasis) -> Result<ExactSums<T>> {
    let logs = p.log_amplitudes(basis)?;
    let weights = born_weights(&logs)?;
    Ok(ExactSums { weights, logs })
}

/// `S`, `F` and energy by summation over the full basis.
pub fn exact_qgt_force<T: Real>(h: &SpinHamiltonian<T>, p: &RbmParameters<T>, basis: &SpinBasis) -> Result<TdvpProblem<T>> {
    check_shapes(h, p)?;
    let sums = exact_sums(p, basis)?;
    let n = p.n_visible();
    let dim = basis.dim();
    let eloc: Vec<C<T>> = (0..dim)
        .into_par_iter()
        .map(|idx| local_value(h, idx, n, |t| sums.logs[t], sums.logs[idx]))
        .collect::<Result<_>>()?;
    let rows: Vec<DVector<C<T>>> = (0..dim)
        .into_par_iter()
        .map(|idx| p.log_derivatives_unchecked(&index_to_spins(idx, n)))
        .collect();
    let derivs = DMatrix::from_fn(dim, p.n_params(), |r, k| rows[r][k]);
    let prob = covariance_problem(&sums.weights, &derivs, &eloc, None);
    debug_assert!((&prob.s - prob.s.adjoint()).iter().all(|z| z.modulus() <= T::of(1e-10)));
    Ok(prob)
}

/// Sample-mean estimate of `S`, `F` and energy; `S` is Hermitized.
pub fn mc_qgt_force<T: Real>(h: &SpinHamiltonian<T>, p: &RbmParameters<T>, samples: &SampleSet) -> Result<TdvpProblem<T>> {
    check_shapes(h, p)?;
    let n = p.n_visible();
    if samples.is_empty() {
        return Err(Error::Input("sample set is empty".into()));
    }
    if samples.n_sites() != n {
        return Err(Error::Shape {
            what: "sample length",
            expected: n,
            got: samples.n_sites(),
        });
    }
    let count = samples.len();
    let (distinct, multiplicity) = tally(samples);
    let eloc: Vec<C<T>> = distinct
        .par_iter()
        .map(|&idx| {
            let log_here = p.log_amplitude_unchecked(&index_to_spins(idx, n));
            local_value(h, idx, n, |t| p.log_amplitude_unchecked(&index_to_spins(t, n)), log_here)
        })
        .collect::<Result<_>>()?;
    let rows: Vec<DVector<C<T>>> = distinct
        .par_iter()
        .map(|&idx| p.log_derivatives_unchecked(&index_to_spins(idx, n)))
        .collect();
    let derivs = DMatrix::from_fn(distinct.len(), p.n_params(), |r, k| rows[r][k]);
    let weights: Vec<T> = multiplicity.iter().map(|&c| T::of_usize(c) / T::of_usize(count)).collect();
    let mut prob = covariance_problem(&weights, &derivs, &eloc, Some(count));
    prob.s = (&prob.s + prob.s.adjoint()).map(|z| z * T::of(0.5));
    Ok(prob)
}

/// Dispatches to the exact or sampled estimator.
pub fn qgt_force<T: Real>(h: &SpinHamiltonian<T>, p: &RbmParameters<T>, source: Source<'_>) -> Result<TdvpProblem<T>> {
    match source {
        Source::Exact(basis) => exact_qgt_force(h, p, basis),
        Source::Samples(samples) => mc_qgt_force(h, p, samples),
    }
}

/// `⟨ψ|O|ψ⟩ / ⟨ψ|ψ⟩` for a bond/field operator.
pub fn expectation_observable<T: Real>(op: &SpinHamiltonian<T>, p: &RbmParameters<T>, source: Source<'_>) -> Result<C<T>> {
    check_shapes(op, p)?;
    let n = p.n_visible();
    match source {
        Source::Exact(basis) => {
            let sums = exact_sums(p, basis)?;
            let locals: Vec<C<T>> = (0..basis.dim())
                .into_par_iter()
                .map(|idx| local_value(op, idx, n, |t| sums.logs[t], sums.logs[idx]))
                .collect::<Result<_>>()?;
            Ok(locals
                .iter()
                .zip(sums.weights.iter())
                .fold(Complex::new(T::zero(), T::zero()), |acc, (&o, &w)| acc + o * w))
        }
        Source::Samples(samples) => {
            if samples.is_empty() {
                return Err(Error::Input("sample set is empty".into()));
            }
            let (distinct, multiplicity) = tally(samples);
            let locals: Vec<C<T>> = distinct
                .par_iter()
                .map(|&idx| {
                    let log_here = p.log_amplitude_unchecked(&index_to_spins(idx, n));
                    local_value(op, idx, n, |t| p.log_amplitude_unchecked(&index_to_spins(t, n)), log_here)
                })
                .collect::<Result<_>>()?;
            let total = locals
                .iter()
                .zip(&multiplicity)
                .fold(Complex::new(T::zero(), T::zero()), |a, (&o, &c)| a + o * T::of_usize(c));
            Ok(total / T::of_usize(samples.len()))
        }
    }
}
