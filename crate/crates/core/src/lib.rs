//! Time-dependent variational dynamics of restricted-Boltzmann-machine
//! wave functions after sudden quenches of small spin-1/2 systems.
//!
//! The crate is generic over the real scalar type (`f32`/`f64`); the
//! `*64` aliases below fix it to `f64`, which is what the experiment driver
//! uses.
//!
//! Layers, bottom-up:
//!
//! * [`lattice`]: spin basis, bond/field Hamiltonians, exact diagonalization.
//! * [`rbm`]: the variational ansatz and its log-derivatives.
//! * [`expectation`] and [`sampler`]: `S`, `F`, energies and observables by
//!   exact summation or Metropolis sampling.
//! * [`solvers`]: regularized, diagonalized and geometric solves of
//!   `S f = −iF`.
//! * [`integrators`] and [`dynamics`]: explicit and tamed steppers and the
//!   quench loop.
//! * [`prep`]: infidelity minimization for the initial state.
//! * [`snapshot`]: parameter snapshot files.

pub mod dynamics;
pub mod error;
pub mod expectation;
pub mod integrators;
pub mod lattice;
pub mod linalg;
pub mod prep;
pub mod rbm;
pub mod sampler;
pub mod scalar;
pub mod snapshot;
pub mod solvers;

pub use dynamics::{fidelity, run_dynamics, run_dynamics_observed, DynamicsConfig, Estimator, RunStatus, Trajectory, TrajectoryRecord};
pub use error::{Error, Result};
pub use expectation::{exact_qgt_force, expectation_observable, local_energy, mc_qgt_force, qgt_force, Source, TdvpProblem};
pub use integrators::{euler_step, heun_step, tamed_euler_step, tamed_heun_step, IntegratorConfig, Scheme};
pub use lattice::{Bond, ExactPropagator, QuenchPair, SiteField, SpinBasis, SpinHamiltonian};
pub use prep::{infidelity, infidelity_gradient, optimize_infidelity, optimize_infidelity_from, Optimizer, PrepConfig, PrepResult};
pub use rbm::{init_random, ParameterVector, RbmParameters};
pub use sampler::{metropolis_sample, SampleSet, SamplerConfig};
pub use scalar::{Real, C};
pub use snapshot::Snapshot;
pub use solvers::{build_geometric_system, solve, solve_diagonalized, solve_geometric, solve_regularized, SolverReport, SolverStrategy};

pub type Complex64 = num_complex::Complex<f64>;
pub type RbmParameters64 = RbmParameters<f64>;
pub type ParameterVector64 = ParameterVector<f64>;
pub type SpinHamiltonian64 = SpinHamiltonian<f64>;
pub type QuenchPair64 = QuenchPair<f64>;
pub type TdvpProblem64 = TdvpProblem<f64>;
pub type SolverStrategy64 = SolverStrategy<f64>;
pub type SolverReport64 = SolverReport<f64>;
pub type IntegratorConfig64 = IntegratorConfig<f64>;
pub type DynamicsConfig64 = DynamicsConfig<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type TrajectoryRecord64 = TrajectoryRecord<f64>;
pub type PrepResult64 = PrepResult<f64>;
pub type Snapshot64 = Snapshot<f64>;
