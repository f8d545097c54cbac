//! Initial-state preparation by minimizing the infidelity between the RBM
//! state and a target vector (typically the pre-quench ground state).
//!
//! The objective is `I = 1 − |⟨φ|ψ⟩|² / (⟨φ|φ⟩⟨ψ|ψ⟩)`. Gradients are
//! Wirtinger derivatives `∂I/∂W_k*`; the real gradient with respect to
//! `(Re W_k, Im W_k)` is `(2 Re ∇_k, 2 Im ∇_k)`.

use nalgebra::DVector;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::lattice::{index_to_spins, SpinBasis};
use crate::linalg::cvec_norm;
use crate::rbm::{init_random, normalized_from_logs, ParameterVector, RbmParameters};
use crate::scalar::{Real, C};

/// `1 − |⟨φ|ψ⟩|² / (⟨φ|φ⟩⟨ψ|ψ⟩)`.
pub fn infidelity<T: Real>(psi: &DVector<C<T>>, phi: &DVector<C<T>>) -> Result<T> {
    if psi.len() != phi.len() {
        return Err(Error::Shape {
            what: "state length",
            expected: phi.len(),
            got: psi.len(),
        });
    }
    let (np, nf) = (psi.norm_squared(), phi.norm_squared());
    if np == T::zero() || nf == T::zero() {
        return Err(Error::Input("infidelity of a zero vector".into()));
    }
    let overlap = phi.dotc(psi).norm_sqr() / (np * nf);
    Ok((T::one() - overlap).max(T::zero()).min(T::one()))
}

fn check_target<T: Real>(target: &DVector<C<T>>, basis: &SpinBasis) -> Result<()> {
    if target.len() != basis.dim() {
        return Err(Error::Shape {
            what: "target length",
            expected: basis.dim(),
            got: target.len(),
        });
    }
    let norm = cvec_norm(target);
    if (norm - T::one()).abs() > T::of(1e-6) {
        return Err(Error::Input(format!("target state is not normalized (norm {norm})")));
    }
    Ok(())
}

/// Infidelity of the RBM state and its Wirtinger gradient, by exact summation.
pub fn infidelity_and_gradient<T: Real>(p: &RbmParameters<T>, target: &DVector<C<T>>, basis: &SpinBasis) -> Result<(T, DVector<C<T>>)> {
    check_target(target, basis)?;
    let psi = normalized_from_logs(&p.log_amplitudes(basis)?)?;
    let zero = Complex::new(T::zero(), T::zero());
    // ⟨ψ|φ⟩ with ψ normalized
    let overlap = psi.dotc(target);
    if overlap == zero {
        return Err(Error::DegenerateGradient);
    }
    let fid = overlap.norm_sqr() / target.norm_squared();
    let np = p.n_params();
    let mut mean_o_conj = DVector::from_element(np, zero);
    let mut cross = DVector::from_element(np, zero);
    for idx in 0..basis.dim() {
        let o = p.log_derivatives_unchecked(&index_to_spins(idx, basis.n_sites()));
        let rho = psi[idx].norm_sqr();
        let w = psi[idx].conj() * target[idx];
        for k in 0..np {
            let oc = o[k].conj();
            mean_o_conj[k] += oc * rho;
            cross[k] += oc * w;
        }
    }
    let grad = (cross / overlap - mean_o_conj).map(|z| z * (-fid));
    let infid = (T::one() - fid).max(T::zero()).min(T::one());
    Ok((infid, grad))
}

/// `∂I/∂W_k*` in the flattened layout.
pub fn infidelity_gradient<T: Real>(p: &RbmParameters<T>, target: &DVector<C<T>>, basis: &SpinBasis) -> Result<DVector<C<T>>> {
    infidelity_and_gradient(p, target, basis).map(|(_, g)| g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimizer {
    PlainGradient,
    /// First/second-moment adaptive steps (decays 0.9 / 0.999, floor 1e-8).
    AdaptiveMoment,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrepConfig {
    pub max_iters: usize,
    pub learning_rate: f64,
    pub target_infidelity: f64,
    pub optimizer: Optimizer,
    pub seed: u64,
    pub init_scale: f64,
}

impl Default for PrepConfig {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            learning_rate: 0.01,
            target_infidelity: 1e-4,
            optimizer: Optimizer::AdaptiveMoment,
            seed: 0,
            init_scale: 0.01,
        }
    }
}

impl PrepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Input("learning_rate must be > 0".into()));
        }
        if !(self.target_infidelity > 0.0 && self.target_infidelity < 1.0) {
            return Err(Error::Input("target_infidelity must lie in (0, 1)".into()));
        }
        if self.init_scale.is_nan() || self.init_scale <= 0.0 {
            return Err(Error::Input("init_scale must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrepResult<T: Real> {
    /// Best parameters seen.
    pub parameters: RbmParameters<T>,
    pub final_infidelity: T,
    pub iterations_used: usize,
    pub history: Vec<(usize, T)>,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_FLOOR: f64 = 1e-8;

/// Optimizes from `init_random(n_visible, n_hidden, cfg.init_scale, cfg.seed)`.
pub fn optimize_infidelity<T: Real>(
    n_visible: usize,
    n_hidden: usize,
    visible_bias: bool,
    target: &DVector<C<T>>,
    basis: &SpinBasis,
    cfg: &PrepConfig,
) -> Result<PrepResult<T>> {
    cfg.validate()?;
    let mut p0 = init_random::<T>(n_visible, n_hidden, cfg.init_scale, cfg.seed)?;
    if !visible_bias {
        p0 = p0.without_visible_bias();
    }
    optimize_infidelity_from(&p0, target, basis, cfg)
}

/// Optimizes from explicit starting parameters.
pub fn optimize_infidelity_from<T: Real>(
    p0: &RbmParameters<T>,
    target: &DVector<C<T>>,
    basis: &SpinBasis,
    cfg: &PrepConfig,
) -> Result<PrepResult<T>> {
    cfg.validate()?;
    let lr = T::of(cfg.learning_rate);
    let goal = T::of(cfg.target_infidelity);
    let np = p0.n_params();
    let mut w = p0.flatten();
    let mut current = p0.clone();
    let mut best = (p0.clone(), T::infinity());
    let mut history = Vec::new();
    let zero = Complex::new(T::zero(), T::zero());
    let mut m1 = DVector::from_element(np, zero);
    let mut m2 = DVector::from_element(np, zero);
    let (b1, b2) = (T::of(BETA1), T::of(BETA2));
    let two = T::of(2.0);
    let mut iterations_used = 0;
    for iter in 0..=cfg.max_iters {
        let (infid, grad) = infidelity_and_gradient(&current, target, basis)?;
        if !infid.is_finite() || grad.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite(format!("infidelity at iteration {iter}")));
        }
        history.push((iter, infid));
        if infid < best.1 {
            best = (current.clone(), infid);
        }
        if infid <= goal || iter == cfg.max_iters {
            break;
        }
        // Real gradient components packed as (re, im) of a complex number.
        let g = grad.map(|z| z * two);
        let step = match cfg.optimizer {
            Optimizer::PlainGradient => g.map(|z| z * lr),
            Optimizer::AdaptiveMoment => {
                let t = (iter + 1) as i32;
                let c1 = T::one() - b1.powi(t);
                let c2 = T::one() - b2.powi(t);
                let floor = T::of(ADAM_FLOOR);
                DVector::from_fn(np, |k, _| {
                    m1[k] = m1[k] * b1 + g[k] * (T::one() - b1);
                    m2[k] = Complex::new(
                        m2[k].re * b2 + g[k].re * g[k].re * (T::one() - b2),
                        m2[k].im * b2 + g[k].im * g[k].im * (T::one() - b2),
                    );
                    Complex::new(
                        lr * (m1[k].re / c1) / ((m2[k].re / c2).sqrt() + floor),
                        lr * (m1[k].im / c1) / ((m2[k].im / c2).sqrt() + floor),
                    )
                })
            }
        };
        w = &w - &ParameterVector(step);
        current = current.with_flat(&w)?;
        iterations_used = iter + 1;
    }
    Ok(PrepResult {
        parameters: best.0,
        final_infidelity: best.1,
        iterations_used,
        history,
    })
}
