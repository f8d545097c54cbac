//! The quench dynamics loop: estimate `S`, `F` → solve → step, with
//! per-step diagnostics and divergence detection.

use nalgebra::DVector;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::expectation::{expectation_observable, qgt_force, Source, TdvpProblem};
use crate::integrators::{euler_step, heun_step_from, tamed_euler_step, tamed_heun_step_from, IntegratorConfig, Scheme};
use crate::lattice::{ExactPropagator, QuenchPair, SpinBasis, SpinHamiltonian, DEFAULT_DIM_CAP};
use crate::rbm::{ParameterVector, RbmParameters};
use crate::sampler::{metropolis_sample, SampleSet, SamplerConfig};
use crate::scalar::{Real, C};
use crate::solvers::{solve, SolverReport, SolverStrategy};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimator {
    Exact,
    MonteCarlo(SamplerConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RunStatus {
    Ok,
    Diverged,
    NumericError,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::Diverged => "diverged",
            RunStatus::NumericError => "numeric_error",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ok" => Some(RunStatus::Ok),
            "diverged" => Some(RunStatus::Diverged),
            "numeric_error" => Some(RunStatus::NumericError),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord<T> {
    pub step: usize,
    pub time: T,
    pub energy: C<T>,
    pub energy_variance: T,
    pub update_norm: T,
    /// ∞-norm of the flattened parameters.
    pub param_norm: T,
    pub residual: T,
    pub rank_kept: Option<usize>,
    pub spectrum_min: T,
    pub spectrum_max: T,
    pub fidelity_ed: Option<T>,
    pub observables: Vec<(String, T)>,
    pub status: RunStatus,
}

impl<T: Real> TrajectoryRecord<T> {
    fn failed(step: usize, time: T, param_norm: T, observables: &[(String, SpinHamiltonian<T>)], status: RunStatus) -> Self {
        Self {
            step,
            time,
            energy: Complex::new(T::nan(), T::nan()),
            energy_variance: T::nan(),
            update_norm: T::nan(),
            param_norm,
            residual: T::nan(),
            rank_kept: None,
            spectrum_min: T::nan(),
            spectrum_max: T::nan(),
            fidelity_ed: None,
            observables: observables.iter().map(|(n, _)| (n.clone(), T::nan())).collect(),
            status,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T: Real> {
    pub records: Vec<TrajectoryRecord<T>>,
    /// Last state that passed the divergence checks, and its step.
    pub last_state: ParameterVector<T>,
    pub last_state_step: usize,
    /// Failure message of a non-ok terminal record.
    pub message: Option<String>,
}

impl<T: Real> Trajectory<T> {
    pub fn status(&self) -> RunStatus {
        self.records.last().map(|r| r.status).unwrap_or(RunStatus::Ok)
    }

    pub fn terminal_step(&self) -> usize {
        self.records.last().map(|r| r.step).unwrap_or(0)
    }
}

#[derive(Debug, Clone)]
pub struct DynamicsConfig<T> {
    pub strategy: SolverStrategy<T>,
    pub integrator: IntegratorConfig<T>,
    pub estimator: Estimator,
    /// Compare against exact propagation of the initial RBM state.
    pub ed_compare: bool,
    /// Named operators recorded each step (real part).
    pub observables: Vec<(String, SpinHamiltonian<T>)>,
    pub dim_cap: usize,
}

impl<T: Real> DynamicsConfig<T> {
    pub fn new(strategy: SolverStrategy<T>, integrator: IntegratorConfig<T>) -> Self {
        Self {
            strategy,
            integrator,
            estimator: Estimator::Exact,
            ed_compare: false,
            observables: Vec::new(),
            dim_cap: DEFAULT_DIM_CAP,
        }
    }
}

/// Sampling seed for a given step and integrator stage.
fn stage_seed(base: u64, step: usize, stage: usize) -> u64 {
    let k = (step as u64).wrapping_mul(2).wrapping_add(stage as u64).wrapping_add(1);
    base ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

struct Evaluation<T: Real> {
    problem: TdvpProblem<T>,
    report: SolverReport<T>,
    samples: Option<SampleSet>,
}

struct Engine<'a, T: Real> {
    h: &'a SpinHamiltonian<T>,
    cfg: &'a DynamicsConfig<T>,
    basis: Option<SpinBasis>,
    shape: (usize, usize, bool),
}

impl<T: Real> Engine<'_, T> {
    fn params(&self, w: &ParameterVector<T>) -> Result<RbmParameters<T>> {
        RbmParameters::unflatten(self.shape.0, self.shape.1, self.shape.2, w)
    }

    fn evaluate(&self, w: &ParameterVector<T>, step: usize, stage: usize) -> Result<Evaluation<T>> {
        let p = self.params(w)?;
        let (problem, samples) = match self.cfg.estimator {
            Estimator::Exact => {
                let basis = self.basis.as_ref().expect("exact estimator has a basis");
                (qgt_force(self.h, &p, Source::Exact(basis))?, None)
            }
            Estimator::MonteCarlo(sc) => {
                let samples = metropolis_sample(&p, &sc.with_seed(stage_seed(sc.seed, step, stage)))?;
                (qgt_force(self.h, &p, Source::Samples(&samples))?, Some(samples))
            }
        };
        let report = solve(&problem, &self.cfg.strategy)?;
        Ok(Evaluation { problem, report, samples })
    }
}

/// Evolves `p0` under the post-quench Hamiltonian. Failures during the run
/// become a terminal record; only invalid inputs return `Err`.
pub fn run_dynamics<T: Real>(p0: &RbmParameters<T>, quench: &QuenchPair<T>, cfg: &DynamicsConfig<T>) -> Result<Trajectory<T>> {
    run_dynamics_observed(p0, quench, cfg, |_, _| {})
}

/// [`run_dynamics`] with a callback invoked on every accepted state.
pub fn run_dynamics_observed<T: Real, F>(
    p0: &RbmParameters<T>,
    quench: &QuenchPair<T>,
    cfg: &DynamicsConfig<T>,
    mut on_state: F,
) -> Result<Trajectory<T>>
where
    F: FnMut(usize, &RbmParameters<T>),
{
    cfg.integrator.validate()?;
    let h = &quench.target;
    if h.n_sites() != p0.n_visible() {
        return Err(Error::Shape {
            what: "Hamiltonian sites vs visible units",
            expected: p0.n_visible(),
            got: h.n_sites(),
        });
    }
    for (name, op) in &cfg.observables {
        if op.n_sites() != p0.n_visible() {
            return Err(Error::Input(format!("observable {name} acts on {} sites", op.n_sites())));
        }
    }
    let needs_basis = cfg.ed_compare || matches!(cfg.estimator, Estimator::Exact);
    let basis = if needs_basis {
        Some(SpinBasis::with_cap(p0.n_visible(), cfg.dim_cap)?)
    } else {
        None
    };
    let (propagator, psi0) = if cfg.ed_compare {
        let basis = basis.as_ref().expect("basis built for ED comparison");
        (Some(ExactPropagator::new(h, basis)?), Some(p0.dense_state(basis)?))
    } else {
        (None, None)
    };
    let engine = Engine {
        h,
        cfg,
        basis,
        shape: (p0.n_visible(), p0.n_hidden(), p0.visible_bias),
    };

    let integ = cfg.integrator;
    let dt = integ.dt;
    let n_steps = integ.n_steps();
    let mut records: Vec<TrajectoryRecord<T>> = Vec::with_capacity(n_steps + 1);
    let mut w = p0.flatten();
    let mut last_good = w.clone();
    let mut last_good_step = 0;
    let mut message = None;

    let mut step = 0usize;
    loop {
        let time = T::of_usize(step) * dt;
        let param_norm = w.inf_norm();
        if !w.is_finite() || param_norm > integ.blow_up_norm {
            message = Some(format!("parameter ∞-norm {param_norm} exceeds {}", integ.blow_up_norm));
            records.push(TrajectoryRecord::failed(
                step,
                time,
                param_norm,
                &cfg.observables,
                RunStatus::Diverged,
            ));
            break;
        }
        let eval = match engine.evaluate(&w, step, 0) {
            Ok(e) => e,
            Err(e) => {
                records.push(TrajectoryRecord::failed(
                    step,
                    time,
                    param_norm,
                    &cfg.observables,
                    failure_status(&e),
                ));
                message = Some(e.to_string());
                break;
            }
        };
        let p = engine.params(&w)?;
        on_state(step, &p);
        last_good.clone_from(&w);
        last_good_step = step;

        let diagnostics = (|| -> Result<Diagnostics<T>> {
            let fidelity = match (&propagator, &psi0, &engine.basis) {
                (Some(prop), Some(psi0), Some(basis)) => {
                    let exact = prop.evolve(psi0, time)?;
                    Some(fidelity(&exact, &p.dense_state(basis)?))
                }
                _ => None,
            };
            let source = match (&eval.samples, &engine.basis) {
                (Some(s), _) => Source::Samples(s),
                (None, Some(b)) => Source::Exact(b),
                (None, None) => unreachable!("exact estimator always has a basis"),
            };
            let obs = cfg
                .observables
                .iter()
                .map(|(name, op)| Ok((name.clone(), expectation_observable(op, &p, source)?.re)))
                .collect::<Result<Vec<_>>>()?;
            Ok((fidelity, obs))
        })();
        let (fidelity_ed, observables) = match diagnostics {
            Ok(d) => d,
            Err(e) => {
                records.push(TrajectoryRecord::failed(
                    step,
                    time,
                    param_norm,
                    &cfg.observables,
                    failure_status(&e),
                ));
                message = Some(e.to_string());
                break;
            }
        };
        let f0 = eval.report.update.clone();
        records.push(TrajectoryRecord {
            step,
            time,
            energy: eval.problem.energy,
            energy_variance: eval.problem.energy_variance,
            update_norm: f0.norm(),
            param_norm,
            residual: eval.report.residual,
            rank_kept: eval.report.rank_kept,
            spectrum_min: eval.report.spectrum_min,
            spectrum_max: eval.report.spectrum_max,
            fidelity_ed,
            observables,
            status: RunStatus::Ok,
        });
        if step >= n_steps {
            break;
        }

        let mut diverged_stage = false;
        let mut evaluator = |wp: &ParameterVector<T>| -> Result<ParameterVector<T>> {
            if !wp.is_finite() || wp.inf_norm() > integ.blow_up_norm {
                diverged_stage = true;
                return Err(Error::NonFinite("predictor left the finite region".into()));
            }
            Ok(engine.evaluate(wp, step, 1)?.report.update)
        };
        let next = match integ.scheme {
            Scheme::Euler => euler_step(&w, &f0, dt),
            Scheme::TamedEuler => tamed_euler_step(&w, &f0, dt),
            Scheme::Heun => heun_step_from(&w, &f0, &mut evaluator, dt),
            Scheme::TamedHeun => tamed_heun_step_from(&w, &f0, &mut evaluator, dt),
        };
        step += 1;
        match next {
            Ok(v) => w = v,
            Err(e) => {
                let status = if diverged_stage { RunStatus::Diverged } else { failure_status(&e) };
                message = Some(e.to_string());
                let time = T::of_usize(step) * dt;
                records.push(TrajectoryRecord::failed(step, time, T::nan(), &cfg.observables, status));
                break;
            }
        }
    }

    Ok(Trajectory {
        records,
        last_state: last_good,
        last_state_step: last_good_step,
        message,
    })
}

/// ED fidelity and named observables of one record.
type Diagnostics<T> = (Option<T>, Vec<(String, T)>);

// Overflow anywhere in the step is a breakdown of the dynamics; anything else
// (factorization failure, bad input) is a numeric error.
fn failure_status(e: &Error) -> RunStatus {
    if e.is_non_finite() {
        RunStatus::Diverged
    } else {
        RunStatus::NumericError
    }
}

/// Phase-invariant overlap `|⟨a|b⟩|² / (⟨a|a⟩⟨b|b⟩)`, clamped to `[0, 1]`.
pub fn fidelity<T: Real>(a: &DVector<C<T>>, b: &DVector<C<T>>) -> T {
    let overlap = a.dotc(b).norm_sqr();
    let norms = a.norm_squared() * b.norm_squared();
    (overlap / norms).max(T::zero()).min(T::one())
}
