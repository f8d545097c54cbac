//! Explicit time steppers for `dW/dt = f(W)`.
//!
//! Taming bounds the increment: the tamed Euler step is
//! `w + dt·f / (1 + dt‖f‖)`, and tamed Heun rescales the combined Heun
//! increment `d` to `d / (1 + ‖d‖)`, with a tamed Euler predictor. Every
//! tamed increment therefore has norm strictly below one.

use crate::error::{Error, Result};
use crate::rbm::ParameterVector;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Euler,
    Heun,
    TamedEuler,
    TamedHeun,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Euler => "euler",
            Scheme::Heun => "heun",
            Scheme::TamedEuler => "tamed-euler",
            Scheme::TamedHeun => "tamed-heun",
        }
    }

    pub fn stages(&self) -> usize {
        match self {
            Scheme::Euler | Scheme::TamedEuler => 1,
            Scheme::Heun | Scheme::TamedHeun => 2,
        }
    }
}

/// Default divergence threshold on the parameter ∞-norm.
pub const DEFAULT_BLOW_UP_NORM: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig<T> {
    pub scheme: Scheme,
    pub dt: T,
    pub t_max: T,
    pub blow_up_norm: T,
}

impl<T: Real> IntegratorConfig<T> {
    pub fn new(scheme: Scheme, dt: T, t_max: T) -> Result<Self> {
        let cfg = Self {
            scheme,
            dt,
            t_max,
            blow_up_norm: T::of(DEFAULT_BLOW_UP_NORM),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero() && self.dt.is_finite()) {
            return Err(Error::Input(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_max >= T::zero() && self.t_max.is_finite()) {
            return Err(Error::Input(format!("t_max must be ≥ 0, got {}", self.t_max)));
        }
        if self.t_max > T::zero() && self.dt > self.t_max {
            return Err(Error::Input(format!("dt ({}) exceeds t_max ({})", self.dt, self.t_max)));
        }
        if self.blow_up_norm.partial_cmp(&T::zero()) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::Input("blow_up_norm must be > 0".into()));
        }
        Ok(())
    }

    /// Number of steps to reach `t_max`.
    pub fn n_steps(&self) -> usize {
        (self.t_max / self.dt).round().to_usize().unwrap_or(0)
    }
}

fn check_len<T: Real>(w: &ParameterVector<T>, f: &ParameterVector<T>) -> Result<()> {
    if w.len() != f.len() {
        return Err(Error::Shape {
            what: "update length",
            expected: w.len(),
            got: f.len(),
        });
    }
    Ok(())
}

fn finite_or_err<T: Real>(v: ParameterVector<T>, what: &str) -> Result<ParameterVector<T>> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

/// `w + dt·f`.
pub fn euler_step<T: Real>(w: &ParameterVector<T>, f: &ParameterVector<T>, dt: T) -> Result<ParameterVector<T>> {
    check_len(w, f)?;
    finite_or_err(w + &(f * dt), "Euler step")
}

/// Heun step given the update at `w` already evaluated.
pub fn heun_step_from<T: Real, F>(w: &ParameterVector<T>, f0: &ParameterVector<T>, mut f_eval: F, dt: T) -> Result<ParameterVector<T>>
where
    F: FnMut(&ParameterVector<T>) -> Result<ParameterVector<T>>,
{
    check_len(w, f0)?;
    let predictor = w + &(f0 * dt);
    let f1 = f_eval(&predictor).map_err(|e| stage("corrector", e))?;
    check_len(w, &f1)?;
    finite_or_err(w + &(&(f0 + &f1) * (dt * T::of(0.5))), "Heun step")
}

/// `w̃ = w + dt·f(w)`, `w + dt/2·(f(w) + f(w̃))`; two evaluator calls.
pub fn heun_step<T: Real, F>(w: &ParameterVector<T>, mut f_eval: F, dt: T) -> Result<ParameterVector<T>>
where
    F: FnMut(&ParameterVector<T>) -> Result<ParameterVector<T>>,
{
    let f0 = f_eval(w).map_err(|e| stage("predictor", e))?;
    heun_step_from(w, &f0, f_eval, dt)
}

fn stage(name: &'static str, e: Error) -> Error {
    Error::Stage {
        stage: name,
        source: Box::new(e),
    }
}

/// `w + dt·f / (1 + dt‖f‖)`.
pub fn tamed_euler_step<T: Real>(w: &ParameterVector<T>, f: &ParameterVector<T>, dt: T) -> Result<ParameterVector<T>> {
    check_len(w, f)?;
    if !f.is_finite() {
        return Err(Error::NonFinite("update in tamed Euler step".into()));
    }
    let scale = dt / (T::one() + dt * f.norm());
    finite_or_err(w + &(f * scale), "tamed Euler step")
}

/// Tamed Heun step given the update at `w` already evaluated.
pub fn tamed_heun_step_from<T: Real, F>(w: &ParameterVector<T>, f0: &ParameterVector<T>, mut f_eval: F, dt: T) -> Result<ParameterVector<T>>
where
    F: FnMut(&ParameterVector<T>) -> Result<ParameterVector<T>>,
{
    let predictor = tamed_euler_step(w, f0, dt)?;
    let f1 = f_eval(&predictor).map_err(|e| stage("corrector", e))?;
    check_len(w, &f1)?;
    if !f1.is_finite() {
        return Err(stage("corrector", Error::NonFinite("update".into())));
    }
    let d = &(f0 + &f1) * (dt * T::of(0.5));
    let tamed = &d * (T::one() / (T::one() + d.norm()));
    finite_or_err(w + &tamed, "tamed Heun step")
}

/// Heun structure with a tamed predictor and the combined increment `d`
/// replaced by `d / (1 + ‖d‖)`.
pub fn tamed_heun_step<T: Real, F>(w: &ParameterVector<T>, mut f_eval: F, dt: T) -> Result<ParameterVector<T>>
where
    F: FnMut(&ParameterVector<T>) -> Result<ParameterVector<T>>,
{
    let f0 = f_eval(w).map_err(|e| stage("predictor", e))?;
    tamed_heun_step_from(w, &f0, f_eval, dt)
}
