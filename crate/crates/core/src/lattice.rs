//! Spin-1/2 Hilbert space, two-body Hamiltonians and the exact
//! diagonalization oracle.
//!
//! Configurations are stored as bit patterns: bit `i` of the basis index is
//! `(σ_i + 1) / 2`, so index 0 is the all-down configuration.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{cvec_norm, hermitian_eigen, HermitianEigen};
use crate::scalar::{Real, C};

/// Default cap on the Hilbert-space dimension for dense operations.
pub const DEFAULT_DIM_CAP: usize = 1 << 14;

/// Enumerated basis of `n_sites` spins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpinBasis {
    n_sites: usize,
    dim: usize,
}

impl SpinBasis {
    pub fn new(n_sites: usize) -> Result<Self> {
        Self::with_cap(n_sites, DEFAULT_DIM_CAP)
    }

    pub fn with_cap(n_sites: usize, cap: usize) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::Input("basis needs at least one site".into()));
        }
        if n_sites >= usize::BITS as usize - 1 || (1usize << n_sites) > cap {
            return Err(Error::Capacity {
                dim: 1usize.checked_shl(n_sites as u32).unwrap_or(usize::MAX),
                cap,
            });
        }
        Ok(Self {
            n_sites,
            dim: 1 << n_sites,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn config(&self, index: usize) -> Vec<i8> {
        index_to_spins(index, self.n_sites)
    }

    pub fn index_of(&self, sigma: &[i8]) -> Result<usize> {
        check_spins(sigma, self.n_sites)?;
        Ok(spins_to_index(sigma))
    }

    pub fn configs(&self) -> impl Iterator<Item = Vec<i8>> + '_ {
        (0..self.dim).map(move |i| self.config(i))
    }
}

pub(crate) fn index_to_spins(index: usize, n: usize) -> Vec<i8> {
    (0..n).map(|i| if (index >> i) & 1 == 1 { 1 } else { -1 }).collect()
}

pub(crate) fn spins_to_index(sigma: &[i8]) -> usize {
    sigma
        .iter()
        .enumerate()
        .fold(0, |acc, (i, &s)| if s > 0 { acc | (1 << i) } else { acc })
}

pub(crate) fn check_spins(sigma: &[i8], n: usize) -> Result<()> {
    if sigma.len() != n {
        return Err(Error::Shape {
            what: "spin configuration length",
            expected: n,
            got: sigma.len(),
        });
    }
    if let Some(bad) = sigma.iter().find(|&&s| s != 1 && s != -1) {
        return Err(Error::Input(format!("spin entries must be ±1, found {bad}")));
    }
    Ok(())
}

/// Two-site term `jx σˣσˣ + jy σʸσʸ + jz σᶻσᶻ` on sites `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bond<T> {
    pub i: usize,
    pub j: usize,
    pub jx: T,
    pub jy: T,
    pub jz: T,
}

impl<T: Real> Bond<T> {
    pub fn ising(i: usize, j: usize, jz: T) -> Self {
        Self {
            i,
            j,
            jx: T::zero(),
            jy: T::zero(),
            jz,
        }
    }

    pub fn heisenberg(i: usize, j: usize, coupling: T) -> Self {
        Self {
            i,
            j,
            jx: coupling,
            jy: coupling,
            jz: coupling,
        }
    }
}

/// Single-site term `hx σˣ + hz σᶻ`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SiteField<T> {
    pub hx: T,
    pub hz: T,
}

/// `H = Σ_bonds (Jx σˣσˣ + Jy σʸσʸ + Jz σᶻσᶻ) + Σ_i (hx σˣ + hz σᶻ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinHamiltonian<T> {
    n_sites: usize,
    bonds: Vec<Bond<T>>,
    fields: Vec<SiteField<T>>,
}

/// Nearest-neighbour pairs of a chain.
pub fn chain_pairs(n_sites: usize, periodic: bool) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = (0..n_sites.saturating_sub(1)).map(|i| (i, i + 1)).collect();
    if periodic && n_sites > 2 {
        pairs.push((n_sites - 1, 0));
    }
    pairs
}

impl<T: Real> SpinHamiltonian<T> {
    /// Builds and validates a Hamiltonian. `fields` must have one entry per
    /// site or be empty (no field terms).
    pub fn new(n_sites: usize, bonds: Vec<Bond<T>>, fields: Vec<SiteField<T>>) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::Input("Hamiltonian needs at least one site".into()));
        }
        for (k, b) in bonds.iter().enumerate() {
            if b.i >= n_sites || b.j >= n_sites {
                return Err(Error::Input(format!(
                    "bond {k} ({}, {}) references a site outside 0..{n_sites}",
                    b.i, b.j
                )));
            }
            if b.i == b.j {
                return Err(Error::Input(format!("bond {k} couples site {} to itself", b.i)));
            }
            if !(b.jx.is_finite() && b.jy.is_finite() && b.jz.is_finite()) {
                return Err(Error::Input(format!("bond {k} has a non-finite coupling")));
            }
        }
        let fields = if fields.is_empty() {
            vec![
                SiteField {
                    hx: T::zero(),
                    hz: T::zero()
                };
                n_sites
            ]
        } else if fields.len() != n_sites {
            return Err(Error::Shape {
                what: "field list length",
                expected: n_sites,
                got: fields.len(),
            });
        } else {
            fields
        };
        if fields.iter().any(|f| !(f.hx.is_finite() && f.hz.is_finite())) {
            return Err(Error::Input("non-finite field term".into()));
        }
        Ok(Self { n_sites, bonds, fields })
    }

    /// Transverse-field Ising chain `-J Σ σᶻσᶻ - h Σ σˣ`.
    pub fn tfim(n_sites: usize, coupling: T, field: T, periodic: bool) -> Result<Self> {
        let bonds = chain_pairs(n_sites, periodic)
            .into_iter()
            .map(|(i, j)| Bond::ising(i, j, -coupling))
            .collect();
        let fields = vec![SiteField { hx: -field, hz: T::zero() }; n_sites];
        Self::new(n_sites, bonds, fields)
    }

    /// Heisenberg chain `J Σ σ·σ + hz Σ σᶻ`.
    pub fn heisenberg(n_sites: usize, coupling: T, hz: T, periodic: bool) -> Result<Self> {
        let bonds = chain_pairs(n_sites, periodic)
            .into_iter()
            .map(|(i, j)| Bond::heisenberg(i, j, coupling))
            .collect();
        let fields = vec![SiteField { hx: T::zero(), hz }; n_sites];
        Self::new(n_sites, bonds, fields)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn bonds(&self) -> &[Bond<T>] {
        &self.bonds
    }

    pub fn fields(&self) -> &[SiteField<T>] {
        &self.fields
    }

    /// Nonzero entries `⟨σ'|H|σ⟩` of the column of `σ`, as basis indices.
    /// Equal targets are merged; the diagonal, if nonzero, comes first.
    pub(crate) fn connections(&self, index: usize) -> Vec<(usize, C<T>)> {
        let spin = |i: usize| -> T {
            if (index >> i) & 1 == 1 {
                T::one()
            } else {
                -T::one()
            }
        };
        let mut out: Vec<(usize, C<T>)> = Vec::with_capacity(1 + self.bonds.len() + self.n_sites);
        let mut push = |target: usize, amp: C<T>| {
            if let Some(slot) = out.iter_mut().find(|(t, _)| *t == target) {
                slot.1 += amp;
            } else {
                out.push((target, amp));
            }
        };
        let mut diag = T::zero();
        for b in &self.bonds {
            let zz = spin(b.i) * spin(b.j);
            diag += b.jz * zz;
            // σˣσˣ flips both with amplitude 1, σʸσʸ with -σ_iσ_j.
            let flip = b.jx - b.jy * zz;
            if flip != T::zero() {
                push(index ^ (1 << b.i) ^ (1 << b.j), Complex::new(flip, T::zero()));
            }
        }
        for (i, f) in self.fields.iter().enumerate() {
            diag += f.hz * spin(i);
            if f.hx != T::zero() {
                push(index ^ (1 << i), Complex::new(f.hx, T::zero()));
            }
        }
        let mut row = Vec::with_capacity(out.len() + 1);
        if diag != T::zero() {
            row.push((index, Complex::new(diag, T::zero())));
        }
        row.extend(out.into_iter().filter(|(_, a)| *a != C::new(T::zero(), T::zero())));
        row
    }

    /// All configurations `σ'` with nonzero `⟨σ'|H|σ⟩`, diagonal included.
    pub fn apply_row(&self, sigma: &[i8]) -> Result<Vec<(Vec<i8>, C<T>)>> {
        check_spins(sigma, self.n_sites)?;
        Ok(self
            .connections(spins_to_index(sigma))
            .into_iter()
            .map(|(idx, amp)| (index_to_spins(idx, self.n_sites), amp))
            .collect())
    }

    fn check_basis(&self, basis: &SpinBasis) -> Result<()> {
        if basis.n_sites() != self.n_sites {
            return Err(Error::Shape {
                what: "basis sites",
                expected: self.n_sites,
                got: basis.n_sites(),
            });
        }
        Ok(())
    }

    /// Dense matrix in the basis order.
    pub fn dense_matrix(&self, basis: &SpinBasis) -> Result<DMatrix<C<T>>> {
        self.check_basis(basis)?;
        let dim = basis.dim();
        let columns: Vec<Vec<(usize, C<T>)>> = (0..dim).into_par_iter().map(|c| self.connections(c)).collect();
        let mut m = DMatrix::zeros(dim, dim);
        for (c, col) in columns.into_iter().enumerate() {
            for (r, amp) in col {
                m[(r, c)] += amp;
            }
        }
        Ok(m)
    }

    /// Lowest eigenvalue and a normalized eigenvector.
    pub fn ground_state(&self, basis: &SpinBasis) -> Result<(T, DVector<C<T>>)> {
        let eig = hermitian_eigen(&self.dense_matrix(basis)?)?;
        let v = eig.vectors.column(0).into_owned();
        let norm = cvec_norm(&v);
        Ok((eig.values[0], v.unscale(norm)))
    }

    /// `e^{-iHt} ψ₀`.
    pub fn exact_evolve(&self, basis: &SpinBasis, psi0: &DVector<C<T>>, t: T) -> Result<DVector<C<T>>> {
        ExactPropagator::new(self, basis)?.evolve(psi0, t)
    }
}

/// Spectral decomposition of a Hamiltonian, reused across evolution times.
#[derive(Debug, Clone)]
pub struct ExactPropagator<T: Real> {
    eigen: HermitianEigen<T>,
}

impl<T: Real> ExactPropagator<T> {
    pub fn new(h: &SpinHamiltonian<T>, basis: &SpinBasis) -> Result<Self> {
        Ok(Self {
            eigen: hermitian_eigen(&h.dense_matrix(basis)?)?,
        })
    }

    pub fn energies(&self) -> &DVector<T> {
        &self.eigen.values
    }

    pub fn evolve(&self, psi0: &DVector<C<T>>, t: T) -> Result<DVector<C<T>>> {
        let dim = self.eigen.values.len();
        if psi0.len() != dim {
            return Err(Error::Shape {
                what: "state length",
                expected: dim,
                got: psi0.len(),
            });
        }
        if !t.is_finite() {
            return Err(Error::Input("evolution time must be finite".into()));
        }
        let norm = cvec_norm(psi0);
        if (norm - T::one()).abs() > T::of(1e-6) {
            return Err(Error::Input(format!("initial state is not normalized (norm {norm})")));
        }
        let mut coeffs = self.eigen.vectors.ad_mul(psi0);
        for (c, &e) in coeffs.iter_mut().zip(self.eigen.values.iter()) {
            let phase = -e * t;
            *c *= Complex::new(phase.cos(), phase.sin());
        }
        Ok(&self.eigen.vectors * coeffs)
    }
}

/// Pre- and post-quench Hamiltonians on the same sites.
#[derive(Debug, Clone, PartialEq)]
pub struct QuenchPair<T> {
    pub initial: SpinHamiltonian<T>,
    pub target: SpinHamiltonian<T>,
}

impl<T: Real> QuenchPair<T> {
    pub fn new(initial: SpinHamiltonian<T>, target: SpinHamiltonian<T>) -> Result<Self> {
        if initial.n_sites() != target.n_sites() {
            return Err(Error::Shape {
                what: "post-quench Hamiltonian sites",
                expected: initial.n_sites(),
                got: target.n_sites(),
            });
        }
        Ok(Self { initial, target })
    }

    /// Largest relative change of any coupling or field, `|Δ| / |before|`
    /// (or `|after|` when the term was absent before).
    pub fn strength(&self) -> T {
        let terms = |h: &SpinHamiltonian<T>| {
            let mut t: Vec<((usize, usize, u8), T)> = Vec::new();
            for b in &h.bonds {
                let key = (b.i.min(b.j), b.i.max(b.j));
                for (c, v) in [(0u8, b.jx), (1, b.jy), (2, b.jz)] {
                    match t.iter_mut().find(|(k, _)| *k == (key.0, key.1, c)) {
                        Some(slot) => slot.1 += v,
                        None => t.push(((key.0, key.1, c), v)),
                    }
                }
            }
            for (i, f) in h.fields.iter().enumerate() {
                t.push(((i, usize::MAX, 0), f.hx));
                t.push(((i, usize::MAX, 1), f.hz));
            }
            t
        };
        let before = terms(&self.initial);
        let after = terms(&self.target);
        let lookup = |set: &[((usize, usize, u8), T)], k| set.iter().find(|(kk, _)| *kk == k).map(|(_, v)| *v).unwrap_or(T::zero());
        let mut keys: Vec<_> = before.iter().chain(after.iter()).map(|(k, _)| *k).collect();
        keys.sort_unstable();
        keys.dedup();
        keys.into_iter()
            .map(|k| {
                let (b, a) = (lookup(&before, k), lookup(&after, k));
                let delta = (a - b).abs();
                if delta == T::zero() {
                    T::zero()
                } else if b != T::zero() {
                    delta / b.abs()
                } else {
                    delta / a.abs()
                }
            })
            .fold(T::zero(), T::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn basis_order_is_bit_pattern() {
        let b = SpinBasis::new(3).unwrap();
        assert_eq!(b.dim(), 8);
        assert_eq!(b.config(0), vec![-1, -1, -1]);
        assert_eq!(b.config(1), vec![1, -1, -1]);
        assert_eq!(b.config(6), vec![-1, 1, 1]);
        assert_eq!(b.index_of(&[-1, 1, 1]).unwrap(), 6);
    }

    #[test]
    fn basis_rejects_over_cap() {
        assert!(matches!(SpinBasis::with_cap(5, 16), Err(Error::Capacity { dim: 32, cap: 16 })));
        assert!(SpinBasis::new(15).is_err());
        assert!(SpinBasis::new(14).is_ok());
    }

    #[test]
    fn diagonal_bond_row() {
        let h = SpinHamiltonian::new(2, vec![Bond::ising(0, 1, -1.0)], vec![]).unwrap();
        assert_eq!(h.apply_row(&[1, 1]).unwrap(), vec![(vec![1, 1], c(-1.0))]);
    }

    #[test]
    fn single_flip_row() {
        let h = SpinHamiltonian::new(1, vec![], vec![SiteField { hx: 0.5, hz: 0.0 }]).unwrap();
        assert_eq!(h.apply_row(&[1]).unwrap(), vec![(vec![-1], c(0.5))]);
    }

    #[test]
    fn tfim_two_site_row() {
        let h = SpinHamiltonian::tfim(2, 1.0, 0.5, false).unwrap();
        let row = h.apply_row(&[1, 1]).unwrap();
        assert_eq!(row.len(), 3);
        assert!(row.contains(&(vec![1, 1], c(-1.0))));
        assert!(row.contains(&(vec![-1, 1], c(-0.5))));
        assert!(row.contains(&(vec![1, -1], c(-0.5))));
    }

    #[test]
    fn row_rejects_bad_length() {
        let h = SpinHamiltonian::<f64>::tfim(3, 1.0, 1.0, false).unwrap();
        assert!(matches!(h.apply_row(&[1, 1]), Err(Error::Shape { .. })));
    }

    #[test]
    fn invalid_bonds_rejected() {
        assert!(SpinHamiltonian::new(2, vec![Bond::ising(0, 0, 1.0)], vec![]).is_err());
        assert!(SpinHamiltonian::new(2, vec![Bond::ising(0, 2, 1.0)], vec![]).is_err());
        assert!(SpinHamiltonian::new(2, vec![Bond::ising(0, 1, f64::NAN)], vec![]).is_err());
    }

    #[test]
    fn single_spin_matrices() {
        let b = SpinBasis::new(1).unwrap();
        let hx = SpinHamiltonian::new(1, vec![], vec![SiteField { hx: 1.0, hz: 0.0 }]).unwrap();
        let m = hx.dense_matrix(&b).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]));
        let hz = SpinHamiltonian::new(1, vec![], vec![SiteField { hx: 0.0, hz: 1.0 }]).unwrap();
        let m = hz.dense_matrix(&b).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[c(-1.0), c(0.0), c(0.0), c(1.0)]));
    }

    #[test]
    fn tfim_two_site_dense_matches_hand_expansion() {
        // Basis order: |--⟩, |+-⟩, |-+⟩, |++⟩. Diagonal -σσ, flips -0.5.
        let b = SpinBasis::new(2).unwrap();
        let m = SpinHamiltonian::tfim(2, 1.0, 0.5, false).unwrap().dense_matrix(&b).unwrap();
        #[rustfmt::skip]
        let expected = [
            -1.0, -0.5, -0.5,  0.0,
            -0.5,  1.0,  0.0, -0.5,
            -0.5,  0.0,  1.0, -0.5,
             0.0, -0.5, -0.5, -1.0,
        ];
        assert_eq!(m, DMatrix::from_row_slice(4, 4, &expected.map(c)));
    }

    #[test]
    fn sigma_y_bond_is_hermitian_with_real_flip_amplitudes() {
        let b = SpinBasis::new(2).unwrap();
        let h = SpinHamiltonian::new(
            2,
            vec![Bond {
                i: 0,
                j: 1,
                jx: 0.0,
                jy: 1.0,
                jz: 0.0,
            }],
            vec![],
        )
        .unwrap();
        let m = h.dense_matrix(&b).unwrap();
        // σʸσʸ|--⟩ = -|++⟩, σʸσʸ|+-⟩ = |-+⟩
        assert_eq!(m[(3, 0)], c(-1.0));
        assert_eq!(m[(2, 1)], c(1.0));
        assert_eq!(m, m.adjoint());
    }

    #[test]
    fn ground_states() {
        let b1 = SpinBasis::new(1).unwrap();
        let h = SpinHamiltonian::new(1, vec![], vec![SiteField { hx: -1.0, hz: 0.0 }]).unwrap();
        let (e, v) = h.ground_state(&b1).unwrap();
        assert_relative_eq!(e, -1.0, epsilon = 1e-14);
        let overlap: f64 = (v[0].conj() * v[1]).re;
        assert_relative_eq!(overlap.abs(), 0.5, epsilon = 1e-14);
        assert_relative_eq!(v[0].norm(), 2f64.sqrt() / 2.0, epsilon = 1e-14);

        let b2 = SpinBasis::new(2).unwrap();
        let (e, _) = SpinHamiltonian::heisenberg(2, 1.0, 0.0, false).unwrap().ground_state(&b2).unwrap();
        assert_relative_eq!(e, -3.0, epsilon = 1e-13);

        let h = SpinHamiltonian::new(1, vec![], vec![SiteField { hx: 0.0, hz: 1.0 }]).unwrap();
        let (e, v) = h.ground_state(&b1).unwrap();
        assert_relative_eq!(e, -1.0, epsilon = 1e-14);
        assert_relative_eq!(v[0].norm(), 1.0, epsilon = 1e-14);
        assert!(v[1].norm() < 1e-14);
    }

    #[test]
    fn evolve_eigenstate_picks_up_phase() {
        let b = SpinBasis::new(1).unwrap();
        let h = SpinHamiltonian::new(1, vec![], vec![SiteField { hx: 0.0, hz: 1.0 }]).unwrap();
        let psi0 = DVector::from_vec(vec![c(1.0), c(0.0)]);
        let t = 0.7;
        let psi = h.exact_evolve(&b, &psi0, t).unwrap();
        assert!((psi[0] - Complex64::new(t.cos(), t.sin())).norm() < 1e-13);
        assert!(psi[1].norm() < 1e-14);
        let same = h.exact_evolve(&b, &psi0, 0.0).unwrap();
        assert!((same - psi0).norm() < 1e-14);
    }

    #[test]
    fn evolve_rejects_unnormalized() {
        let b = SpinBasis::new(1).unwrap();
        let h = SpinHamiltonian::<f64>::tfim(1, 1.0, 1.0, false).unwrap();
        let psi0 = DVector::from_vec(vec![c(1.0), c(1.0)]);
        assert!(matches!(h.exact_evolve(&b, &psi0, 1.0), Err(Error::Input(_))));
    }

    #[test]
    fn quench_strength() {
        let q = QuenchPair::new(
            SpinHamiltonian::tfim(4, 1.0, 1.0, true).unwrap(),
            SpinHamiltonian::tfim(4, 1.0, 0.1, true).unwrap(),
        )
        .unwrap();
        assert_relative_eq!(q.strength(), 0.9, epsilon = 1e-12);
        let same = QuenchPair::new(q.initial.clone(), q.initial.clone()).unwrap();
        assert_eq!(same.strength(), 0.0);
        assert!(QuenchPair::new(
            SpinHamiltonian::tfim(3, 1.0, 1.0, false).unwrap(),
            SpinHamiltonian::tfim(4, 1.0, 1.0, false).unwrap()
        )
        .is_err());
    }
}
