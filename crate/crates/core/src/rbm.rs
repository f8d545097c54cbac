//! Restricted-Boltzmann-machine wave function
//!
//! `log ψ(σ) = Σᵢ aᵢσᵢ + Σⱼ log(2 cosh θⱼ)`, `θⱼ = bⱼ + Σᵢ wⱼᵢσᵢ`,
//! with complex visible biases `a` (length N), hidden biases `b` (length M)
//! and weights `w` (M×N).
//!
//! The flattened parameter layout is `[a₀…a_{N−1}, b₀…b_{M−1}, w₀₀, w₀₁, …]`
//! with `w` row-major. The solvers index into this layout directly.

use std::ops::{Add, Mul, Sub};

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{check_spins, SpinBasis};
use crate::linalg::cvec_norm;
use crate::scalar::{c_is_finite, log_two_cosh, safe_tanh, Real, C};

/// Flat complex parameter vector in the `[a, b, w]` layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector<T: Real>(pub DVector<C<T>>);

impl<T: Real> ParameterVector<T> {
    pub fn zeros(len: usize) -> Self {
        Self(DVector::zeros(len))
    }

    pub fn from_vec(values: Vec<C<T>>) -> Self {
        Self(DVector::from_vec(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> T {
        cvec_norm(&self.0)
    }

    /// Largest modulus of any entry.
    pub fn inf_norm(&self) -> T {
        self.0.iter().map(|z| z.modulus()).fold(T::zero(), |a, b| {
            if b.partial_cmp(&b).is_none() || a.partial_cmp(&a).is_none() {
                T::nan()
            } else {
                a.max(b)
            }
        })
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|&z| c_is_finite(z))
    }

    pub fn scale(&self, k: T) -> Self {
        Self(self.0.map(|z| z * k))
    }

    pub fn iter(&self) -> impl Iterator<Item = &C<T>> {
        self.0.iter()
    }
}

impl<T: Real> Add<&ParameterVector<T>> for &ParameterVector<T> {
    type Output = ParameterVector<T>;
    fn add(self, rhs: &ParameterVector<T>) -> ParameterVector<T> {
        ParameterVector(&self.0 + &rhs.0)
    }
}

impl<T: Real> Sub<&ParameterVector<T>> for &ParameterVector<T> {
    type Output = ParameterVector<T>;
    fn sub(self, rhs: &ParameterVector<T>) -> ParameterVector<T> {
        ParameterVector(&self.0 - &rhs.0)
    }
}

impl<T: Real> Mul<T> for &ParameterVector<T> {
    type Output = ParameterVector<T>;
    fn mul(self, k: T) -> ParameterVector<T> {
        self.scale(k)
    }
}

/// RBM variational parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RbmParameters<T: Real> {
    pub a: DVector<C<T>>,
    pub b: DVector<C<T>>,
    pub w: DMatrix<C<T>>,
    /// When false the visible biases are frozen at zero: they drop out of
    /// the amplitude and their log-derivatives vanish.
    pub visible_bias: bool,
}

impl<T: Real> RbmParameters<T> {
    pub fn zeros(n_visible: usize, n_hidden: usize) -> Self {
        Self {
            a: DVector::zeros(n_visible),
            b: DVector::zeros(n_hidden),
            w: DMatrix::zeros(n_hidden, n_visible),
            visible_bias: true,
        }
    }

    pub fn new(a: DVector<C<T>>, b: DVector<C<T>>, w: DMatrix<C<T>>) -> Result<Self> {
        let p = Self {
            a,
            b,
            w,
            visible_bias: true,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn without_visible_bias(mut self) -> Self {
        self.visible_bias = false;
        self.a.fill(Complex::new(T::zero(), T::zero()));
        self
    }

    fn validate(&self) -> Result<()> {
        let (n, m) = (self.a.len(), self.b.len());
        if n == 0 || m == 0 {
            return Err(Error::Input("RBM needs N ≥ 1 and M ≥ 1".into()));
        }
        if self.w.nrows() != m || self.w.ncols() != n {
            return Err(Error::Shape {
                what: "weight matrix entries (M×N)",
                expected: m * n,
                got: self.w.nrows() * self.w.ncols(),
            });
        }
        Ok(())
    }

    pub fn n_visible(&self) -> usize {
        self.a.len()
    }

    pub fn n_hidden(&self) -> usize {
        self.b.len()
    }

    /// Flattened parameter count `N + M + M·N`.
    pub fn n_params(&self) -> usize {
        let (n, m) = (self.n_visible(), self.n_hidden());
        n + m + m * n
    }

    pub fn is_finite(&self) -> bool {
        self.a.iter().chain(self.b.iter()).chain(self.w.iter()).all(|&z| c_is_finite(z))
    }

    pub fn flatten(&self) -> ParameterVector<T> {
        let mut v = Vec::with_capacity(self.n_params());
        v.extend(self.a.iter().copied());
        v.extend(self.b.iter().copied());
        for j in 0..self.n_hidden() {
            v.extend(self.w.row(j).iter().copied());
        }
        ParameterVector::from_vec(v)
    }

    /// Parameters with the same shape and visible-bias mode as `self`.
    pub fn with_flat(&self, flat: &ParameterVector<T>) -> Result<Self> {
        Self::unflatten(self.n_visible(), self.n_hidden(), self.visible_bias, flat)
    }

    pub fn unflatten(n_visible: usize, n_hidden: usize, visible_bias: bool, flat: &ParameterVector<T>) -> Result<Self> {
        let (n, m) = (n_visible, n_hidden);
        if n == 0 || m == 0 {
            return Err(Error::Input("RBM needs N ≥ 1 and M ≥ 1".into()));
        }
        let p = n + m + m * n;
        if flat.len() != p {
            return Err(Error::Shape {
                what: "flattened parameter count",
                expected: p,
                got: flat.len(),
            });
        }
        let v = &flat.0;
        let mut a = DVector::from_iterator(n, v.iter().take(n).copied());
        if !visible_bias {
            a.fill(Complex::new(T::zero(), T::zero()));
        }
        let b = DVector::from_iterator(m, v.iter().skip(n).take(m).copied());
        let w = DMatrix::from_row_iterator(m, n, v.iter().skip(n + m).copied());
        Ok(Self { a, b, w, visible_bias })
    }

    fn check(&self, sigma: &[i8]) -> Result<()> {
        check_spins(sigma, self.n_visible())
    }

    /// Hidden-unit angles `θⱼ = bⱼ + Σᵢ wⱼᵢσᵢ`.
    pub fn angles(&self, sigma: &[i8]) -> Vec<C<T>> {
        (0..self.n_hidden())
            .map(|j| {
                sigma.iter().enumerate().fold(
                    self.b[j],
                    |acc, (i, &s)| {
                        if s > 0 {
                            acc + self.w[(j, i)]
                        } else {
                            acc - self.w[(j, i)]
                        }
                    },
                )
            })
            .collect()
    }

    pub(crate) fn visible_term(&self, sigma: &[i8]) -> C<T> {
        let zero = Complex::new(T::zero(), T::zero());
        if !self.visible_bias {
            return zero;
        }
        sigma
            .iter()
            .zip(self.a.iter())
            .fold(zero, |acc, (&s, &a)| if s > 0 { acc + a } else { acc - a })
    }

    pub(crate) fn log_amplitude_unchecked(&self, sigma: &[i8]) -> C<T> {
        self.angles(sigma)
            .into_iter()
            .fold(self.visible_term(sigma), |acc, th| acc + log_two_cosh(th))
    }

    /// `log ψ(σ)`.
    pub fn log_amplitude(&self, sigma: &[i8]) -> Result<C<T>> {
        self.check(sigma)?;
        Ok(self.log_amplitude_unchecked(sigma))
    }

    pub(crate) fn log_derivatives_unchecked(&self, sigma: &[i8]) -> DVector<C<T>> {
        let (n, m) = (self.n_visible(), self.n_hidden());
        let zero = Complex::new(T::zero(), T::zero());
        let mut o = DVector::from_element(self.n_params(), zero);
        if self.visible_bias {
            for (i, &s) in sigma.iter().enumerate() {
                o[i] = Complex::new(T::of(f64::from(s)), T::zero());
            }
        }
        for (j, th) in self.angles(sigma).into_iter().enumerate() {
            let t = safe_tanh(th);
            o[n + j] = t;
            let row = n + m + j * n;
            for (i, &s) in sigma.iter().enumerate() {
                o[row + i] = if s > 0 { t } else { -t };
            }
        }
        o
    }

    /// `O_k(σ) = ∂ log ψ(σ) / ∂W_k` in the flattened layout.
    pub fn log_derivatives(&self, sigma: &[i8]) -> Result<DVector<C<T>>> {
        self.check(sigma)?;
        Ok(self.log_derivatives_unchecked(sigma))
    }

    /// `log ψ` over every basis configuration, in basis order.
    pub fn log_amplitudes(&self, basis: &SpinBasis) -> Result<Vec<C<T>>> {
        if basis.n_sites() != self.n_visible() {
            return Err(Error::Shape {
                what: "basis sites",
                expected: self.n_visible(),
                got: basis.n_sites(),
            });
        }
        Ok((0..basis.dim())
            .into_par_iter()
            .map(|idx| self.log_amplitude_unchecked(&basis.config(idx)))
            .collect())
    }

    /// Normalized state vector over the full basis.
    pub fn dense_state(&self, basis: &SpinBasis) -> Result<DVector<C<T>>> {
        let logs = self.log_amplitudes(basis)?;
        normalized_from_logs(&logs)
    }
}

/// `exp(log ψ)` rescaled by the largest real part, then normalized.
pub(crate) fn normalized_from_logs<T: Real>(logs: &[C<T>]) -> Result<DVector<C<T>>> {
    let shift = logs.iter().map(|z| z.re).fold(T::neg_infinity(), T::max);
    if !shift.is_finite() {
        return Err(Error::NonFinite("log-amplitudes".into()));
    }
    let v = DVector::from_iterator(logs.len(), logs.iter().map(|&z| (z - shift).exp()));
    let norm = cvec_norm(&v);
    if !(norm.is_finite() && norm > T::zero()) {
        return Err(Error::Numeric("state vector cannot be normalized".into()));
    }
    Ok(v.unscale(norm))
}

/// Random parameters with real and imaginary parts i.i.d. `N(0, scale²)`,
/// drawn from ChaCha20 in the flattened layout order.
pub fn init_random<T: Real>(n_visible: usize, n_hidden: usize, scale: f64, seed: u64) -> Result<RbmParameters<T>> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Input(format!("initialization scale must be > 0, got {scale}")));
    }
    if n_visible == 0 || n_hidden == 0 {
        return Err(Error::Input("RBM needs N ≥ 1 and M ≥ 1".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let p = n_visible + n_hidden + n_visible * n_hidden;
    let values = (0..p)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex::new(T::of(scale * re), T::of(scale * im))
        })
        .collect();
    RbmParameters::unflatten(n_visible, n_hidden, true, &ParameterVector::from_vec(values))
}
