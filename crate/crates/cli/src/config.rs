//! Experiment configuration: TOML schema, defaults and validation.

use std::collections::HashSet;
use std::path::PathBuf;

use quench_core::lattice::{chain_pairs, DEFAULT_DIM_CAP};
use quench_core::{
    Bond, DynamicsConfig64, Estimator, IntegratorConfig, Optimizer, PrepConfig, QuenchPair64, SamplerConfig, Scheme, SiteField,
    SolverStrategy64, SpinHamiltonian64,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Observables recognised in `dynamics.observables`.
pub const OBSERVABLES: [&str; 3] = ["mx", "mz", "czz"];

/// Largest chain handled by dense objects (prep target, exact summation, ED).
pub const MAX_EXACT_SITES: usize = DEFAULT_DIM_CAP.trailing_zeros() as usize;

// Sampler configurations are bit patterns in a usize.
const MAX_SITES: usize = 62;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub rbm: RbmConfig,
    #[serde(default)]
    pub prep: PrepSection,
    pub dynamics: DynamicsSection,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// `-J Σ σᶻσᶻ - hx Σ σˣ - hz Σ σᶻ` on a chain.
    Tfim,
    /// `J Σ σ·σ + hx Σ σˣ + hz Σ σᶻ` on a chain.
    Heisenberg,
    /// Explicit bond list, `Σ (jx σˣσˣ + jy σʸσʸ + jz σᶻσᶻ) + Σ (hx σˣ + hz σᶻ)`.
    CustomBonds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    Open,
    #[default]
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(rename = "type")]
    pub kind: ModelKind,
    pub n_sites: usize,
    #[serde(default)]
    pub boundary: Boundary,
    /// Multiplier on the quench displacement: the post-quench Hamiltonian is
    /// `pre + quench_scale·(post - pre)`.
    #[serde(default = "one")]
    pub quench_scale: f64,
    pub pre: Couplings,
    /// Defaults to `pre` (no quench).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post: Option<Couplings>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Couplings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bonds: Vec<BondSpec>,
    /// Per-site fields; alternative to uniform `hx`/`hz` for custom-bonds.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fields: Vec<FieldSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BondSpec {
    pub i: usize,
    pub j: usize,
    #[serde(default)]
    pub jx: f64,
    #[serde(default)]
    pub jy: f64,
    #[serde(default)]
    pub jz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    #[serde(default)]
    pub hx: f64,
    #[serde(default)]
    pub hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RbmConfig {
    /// Hidden density M/N.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Explicit hidden-unit count M.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden: Option<usize>,
    #[serde(default = "yes")]
    pub visible_biases: bool,
    #[serde(default = "default_init_scale")]
    pub init_scale: f64,
    #[serde(default)]
    pub seed: u64,
    /// Start from a saved parameter snapshot instead of preparing a state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<PathBuf>,
}

impl Default for RbmConfig {
    fn default() -> Self {
        Self {
            alpha: None,
            hidden: None,
            visible_biases: true,
            init_scale: default_init_scale(),
            seed: 0,
            snapshot: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerName {
    PlainGradient,
    #[default]
    AdaptiveMoment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrepSection {
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_target_infidelity")]
    pub target_infidelity: f64,
    #[serde(default)]
    pub optimizer: OptimizerName,
    /// Defaults to `rbm.seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for PrepSection {
    fn default() -> Self {
        Self {
            enabled: true,
            max_iters: default_max_iters(),
            learning_rate: default_learning_rate(),
            target_infidelity: default_target_infidelity(),
            optimizer: OptimizerName::default(),
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegratorName {
    Euler,
    Heun,
    TamedEuler,
    TamedHeun,
}

impl IntegratorName {
    pub fn scheme(self) -> Scheme {
        match self {
            IntegratorName::Euler => Scheme::Euler,
            IntegratorName::Heun => Scheme::Heun,
            IntegratorName::TamedEuler => Scheme::TamedEuler,
            IntegratorName::TamedHeun => Scheme::TamedHeun,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverName {
    Regularization,
    #[default]
    Diagonalization,
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorName {
    #[default]
    Exact,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(rename = "type", default)]
    pub kind: SolverName,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_zeta")]
    pub zeta: f64,
    /// Geometric least-squares cutoff; machine precision scaled by size when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rcond: Option<f64>,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            kind: SolverName::default(),
            epsilon: default_epsilon(),
            zeta: default_zeta(),
            rcond: None,
        }
    }
}

impl SolverSection {
    pub fn strategy(&self) -> SolverStrategy64 {
        match self.kind {
            SolverName::Regularization => SolverStrategy64::Regularization { epsilon: self.epsilon },
            SolverName::Diagonalization => SolverStrategy64::Diagonalization { zeta: self.zeta },
            SolverName::Geometric => SolverStrategy64::Geometric { rcond: self.rcond },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSection {
    pub n_samples: usize,
    #[serde(default = "default_chains")]
    pub n_chains: usize,
    /// Sweeps discarded per chain; 10% of the recorded sweeps when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    /// Single-flip proposals between samples; one sweep when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    /// Defaults to `rbm.seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    pub integrator: IntegratorName,
    pub dt: f64,
    pub t_max: f64,
    #[serde(default = "default_blow_up")]
    pub blow_up_norm: f64,
    #[serde(default)]
    pub estimator: EstimatorName,
    #[serde(default)]
    pub ed_compare: bool,
    /// Write a parameter snapshot every this many steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_stride: Option<usize>,
    #[serde(default)]
    pub observables: Vec<String>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerSection>,
}

/// Lists to sweep. Points are the product of `quench_strength`, `dt` and the
/// solver axis; `epsilon` values run the regularization solver and `zeta`
/// values the diagonalization solver.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dt: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub epsilon: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub zeta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub quench_strength: Vec<f64>,
}

impl SweepConfig {
    pub fn is_empty(&self) -> bool {
        self.dt.is_empty() && self.epsilon.is_empty() && self.zeta.is_empty() && self.quench_strength.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: None,
            formats: default_formats(),
        }
    }
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_init_scale() -> f64 {
    0.01
}
fn default_max_iters() -> usize {
    5000
}
fn default_learning_rate() -> f64 {
    0.01
}
fn default_target_infidelity() -> f64 {
    1e-4
}
fn default_epsilon() -> f64 {
    quench_core::solvers::DEFAULT_EPSILON
}
fn default_zeta() -> f64 {
    quench_core::solvers::DEFAULT_ZETA
}
fn default_chains() -> usize {
    4
}
fn default_blow_up() -> f64 {
    quench_core::integrators::DEFAULT_BLOW_UP_NORM
}
fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Jsonl]
}

/// Parses, fills defaults and validates a TOML experiment description.
pub fn parse_config(text: &str) -> CliResult<ExperimentConfig> {
    let de = toml::Deserializer::new(text);
    let mut cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let msg = inner.message().trim().to_string();
        if path.is_empty() || path == "." {
            CliError::Config(msg)
        } else {
            CliError::Config(format!("{path}: {msg}"))
        }
    })?;
    cfg.finalize()?;
    Ok(cfg)
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn positive(path: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(format!("{path} must be > 0, got {v}")))
    }
}

fn non_negative(path: &str, v: f64) -> CliResult<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(format!("{path} must be ≥ 0, got {v}")))
    }
}

fn finite(path: &str, v: f64) -> CliResult<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(bad(format!("{path} must be finite, got {v}")))
    }
}

impl ExperimentConfig {
    /// Validates and replaces every defaulted or derived value by its
    /// explicit form, so that the serialized config re-runs identically.
    pub fn finalize(&mut self) -> CliResult<()> {
        self.validate()?;
        if self.model.post.is_none() {
            self.model.post = Some(self.model.pre.clone());
        }
        let kind = self.model.kind;
        for c in [Some(&mut self.model.pre), self.model.post.as_mut()].into_iter().flatten() {
            match kind {
                ModelKind::Tfim | ModelKind::Heisenberg => {
                    c.j.get_or_insert(1.0);
                    c.hx.get_or_insert(0.0);
                    c.hz.get_or_insert(0.0);
                }
                ModelKind::CustomBonds => {
                    if c.fields.is_empty() {
                        c.hx.get_or_insert(0.0);
                        c.hz.get_or_insert(0.0);
                    }
                }
            }
        }
        let m = self.n_hidden();
        self.rbm.alpha = None;
        self.rbm.hidden = Some(m);
        let seed = self.rbm.seed;
        self.prep.seed.get_or_insert(seed);
        if let Some(s) = self.dynamics.sampler.as_mut() {
            s.seed.get_or_insert(seed);
        }
        Ok(())
    }

    /// Replaces every seed with `seed`.
    pub fn override_seed(&mut self, seed: u64) {
        self.rbm.seed = seed;
        self.prep.seed = Some(seed);
        if let Some(s) = self.dynamics.sampler.as_mut() {
            s.seed = Some(seed);
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let m = &self.model;
        let n = m.n_sites;
        if n == 0 || n > MAX_SITES {
            return Err(bad(format!("model.n_sites must lie in 1..={MAX_SITES}, got {n}")));
        }
        let needs_dense = self.prep.enabled || self.dynamics.ed_compare || self.dynamics.estimator == EstimatorName::Exact;
        if needs_dense && n > MAX_EXACT_SITES {
            return Err(bad(format!(
                "model.n_sites = {n} exceeds {MAX_EXACT_SITES}, the limit for state preparation, exact summation and ed_compare"
            )));
        }
        finite("model.quench_scale", m.quench_scale)?;
        check_couplings("model.pre", m.kind, n, &m.pre)?;
        if let Some(post) = &m.post {
            check_couplings("model.post", m.kind, n, post)?;
        }

        let r = &self.rbm;
        match (r.alpha, r.hidden) {
            (Some(_), Some(_)) => return Err(bad("rbm: give either alpha or hidden, not both")),
            (Some(a), None) => {
                positive("rbm.alpha", a)?;
                let mf = a * n as f64;
                if (mf - mf.round()).abs() > 1e-9 {
                    return Err(bad(format!("rbm.alpha · model.n_sites must be an integer, got {mf}")));
                }
            }
            (None, Some(0)) => return Err(bad("rbm.hidden must be ≥ 1")),
            _ => {}
        }
        positive("rbm.init_scale", r.init_scale)?;
        if r.snapshot.is_some() && self.prep.enabled {
            return Err(bad("rbm.snapshot replaces state preparation; set prep.enabled = false"));
        }

        let p = &self.prep;
        positive("prep.learning_rate", p.learning_rate)?;
        if !(p.target_infidelity > 0.0 && p.target_infidelity < 1.0) {
            return Err(bad(format!(
                "prep.target_infidelity must lie in (0, 1), got {}",
                p.target_infidelity
            )));
        }

        let d = &self.dynamics;
        positive("dynamics.dt", d.dt)?;
        non_negative("dynamics.t_max", d.t_max)?;
        if d.t_max > 0.0 && d.dt > d.t_max {
            return Err(bad(format!("dynamics.dt ({}) exceeds dynamics.t_max ({})", d.dt, d.t_max)));
        }
        positive("dynamics.blow_up_norm", d.blow_up_norm)?;
        positive("dynamics.solver.epsilon", d.solver.epsilon)?;
        non_negative("dynamics.solver.zeta", d.solver.zeta)?;
        if let Some(rc) = d.solver.rcond {
            non_negative("dynamics.solver.rcond", rc)?;
        }
        match (d.estimator, &d.sampler) {
            (EstimatorName::Mc, None) => return Err(bad("dynamics.sampler is required when dynamics.estimator = \"mc\"")),
            (EstimatorName::Exact, Some(_)) => return Err(bad("dynamics.sampler is only valid with dynamics.estimator = \"mc\"")),
            (EstimatorName::Mc, Some(s)) => {
                if s.n_samples == 0 {
                    return Err(bad("dynamics.sampler.n_samples must be ≥ 1"));
                }
                if s.n_chains == 0 || s.n_chains > s.n_samples {
                    return Err(bad(format!(
                        "dynamics.sampler.n_chains must lie in 1..={}, got {}",
                        s.n_samples, s.n_chains
                    )));
                }
                if s.stride == Some(0) {
                    return Err(bad("dynamics.sampler.stride must be ≥ 1"));
                }
            }
            (EstimatorName::Exact, None) => {}
        }
        if d.snapshot_stride == Some(0) {
            return Err(bad("dynamics.snapshot_stride must be ≥ 1"));
        }
        let mut seen = HashSet::new();
        for (k, name) in d.observables.iter().enumerate() {
            if !OBSERVABLES.contains(&name.as_str()) {
                return Err(bad(format!(
                    "dynamics.observables[{k}]: unknown observable {name:?}, expected one of {OBSERVABLES:?}"
                )));
            }
            if !seen.insert(name) {
                return Err(bad(format!("dynamics.observables[{k}]: {name:?} listed twice")));
            }
        }

        let s = &self.sweep;
        for (k, &v) in s.dt.iter().enumerate() {
            positive(&format!("sweep.dt[{k}]"), v)?;
        }
        for (k, &v) in s.epsilon.iter().enumerate() {
            positive(&format!("sweep.epsilon[{k}]"), v)?;
        }
        for (k, &v) in s.zeta.iter().enumerate() {
            non_negative(&format!("sweep.zeta[{k}]"), v)?;
        }
        for (k, &v) in s.quench_strength.iter().enumerate() {
            finite(&format!("sweep.quench_strength[{k}]"), v)?;
        }
        Ok(())
    }

    pub fn n_hidden(&self) -> usize {
        match (self.rbm.hidden, self.rbm.alpha) {
            (Some(m), _) => m,
            (None, Some(a)) => (a * self.model.n_sites as f64).round() as usize,
            (None, None) => self.model.n_sites,
        }
    }

    pub fn prep_config(&self) -> PrepConfig {
        PrepConfig {
            max_iters: self.prep.max_iters,
            learning_rate: self.prep.learning_rate,
            target_infidelity: self.prep.target_infidelity,
            optimizer: match self.prep.optimizer {
                OptimizerName::PlainGradient => Optimizer::PlainGradient,
                OptimizerName::AdaptiveMoment => Optimizer::AdaptiveMoment,
            },
            seed: self.prep.seed.unwrap_or(self.rbm.seed),
            init_scale: self.rbm.init_scale,
        }
    }

    pub fn pre_hamiltonian(&self) -> CliResult<SpinHamiltonian64> {
        build_hamiltonian(&self.model, &self.model.pre)
    }

    pub fn quench(&self) -> CliResult<QuenchPair64> {
        let pre = self.pre_hamiltonian()?;
        let post_couplings = self.model.post.as_ref().unwrap_or(&self.model.pre);
        let post = build_hamiltonian(&self.model, post_couplings)?;
        let target = interpolate(&pre, &post, self.model.quench_scale)?;
        Ok(QuenchPair64::new(pre, target)?)
    }

    pub fn observables(&self) -> CliResult<Vec<(String, SpinHamiltonian64)>> {
        self.dynamics
            .observables
            .iter()
            .map(|name| Ok((name.clone(), observable(name, self.model.n_sites, self.model.boundary)?)))
            .collect()
    }

    pub fn dynamics_config(&self) -> CliResult<DynamicsConfig64> {
        let d = &self.dynamics;
        let mut integrator = IntegratorConfig::new(d.integrator.scheme(), d.dt, d.t_max)?;
        integrator.blow_up_norm = d.blow_up_norm;
        let mut cfg = DynamicsConfig64::new(d.solver.strategy(), integrator);
        cfg.ed_compare = d.ed_compare;
        cfg.observables = self.observables()?;
        if let Some(s) = d.sampler {
            let mut sc = SamplerConfig::new(s.n_samples, s.n_chains, s.seed.unwrap_or(self.rbm.seed));
            sc.burn_in = s.burn_in;
            sc.stride = s.stride;
            cfg.estimator = Estimator::MonteCarlo(sc);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("experiment config serializes to TOML")
    }
}

fn check_couplings(path: &str, kind: ModelKind, n: usize, c: &Couplings) -> CliResult<()> {
    for (name, v) in [("j", c.j), ("hx", c.hx), ("hz", c.hz)] {
        if let Some(v) = v {
            finite(&format!("{path}.{name}"), v)?;
        }
    }
    match kind {
        ModelKind::Tfim | ModelKind::Heisenberg => {
            if !c.bonds.is_empty() {
                return Err(bad(format!("{path}.bonds is only valid for custom-bonds models")));
            }
            if !c.fields.is_empty() {
                return Err(bad(format!("{path}.fields is only valid for custom-bonds models")));
            }
        }
        ModelKind::CustomBonds => {
            if c.j.is_some() {
                return Err(bad(format!("{path}.j is not used by custom-bonds models; list the bonds instead")));
            }
            for (k, b) in c.bonds.iter().enumerate() {
                if b.i >= n || b.j >= n {
                    return Err(bad(format!("{path}.bonds[{k}] = ({}, {}) is out of range for {n} sites", b.i, b.j)));
                }
                if b.i == b.j {
                    return Err(bad(format!("{path}.bonds[{k}] couples site {} to itself", b.i)));
                }
                for (name, v) in [("jx", b.jx), ("jy", b.jy), ("jz", b.jz)] {
                    finite(&format!("{path}.bonds[{k}].{name}"), v)?;
                }
            }
            if !c.fields.is_empty() {
                if c.hx.is_some() || c.hz.is_some() {
                    return Err(bad(format!("{path}: give either per-site fields or uniform hx/hz, not both")));
                }
                if c.fields.len() != n {
                    return Err(bad(format!("{path}.fields has {} entries, expected {n}", c.fields.len())));
                }
                for (k, f) in c.fields.iter().enumerate() {
                    finite(&format!("{path}.fields[{k}].hx"), f.hx)?;
                    finite(&format!("{path}.fields[{k}].hz"), f.hz)?;
                }
            }
        }
    }
    Ok(())
}

fn build_hamiltonian(m: &ModelConfig, c: &Couplings) -> CliResult<SpinHamiltonian64> {
    let n = m.n_sites;
    let periodic = m.boundary == Boundary::Periodic;
    let j = c.j.unwrap_or(1.0);
    let hx = c.hx.unwrap_or(0.0);
    let hz = c.hz.unwrap_or(0.0);
    let (bonds, fields) = match m.kind {
        ModelKind::Tfim => (
            chain_pairs(n, periodic).into_iter().map(|(a, b)| Bond::ising(a, b, -j)).collect(),
            vec![SiteField { hx: -hx, hz: -hz }; n],
        ),
        ModelKind::Heisenberg => (
            chain_pairs(n, periodic)
                .into_iter()
                .map(|(a, b)| Bond::heisenberg(a, b, j))
                .collect(),
            vec![SiteField { hx, hz }; n],
        ),
        ModelKind::CustomBonds => (
            c.bonds
                .iter()
                .map(|b| Bond {
                    i: b.i,
                    j: b.j,
                    jx: b.jx,
                    jy: b.jy,
                    jz: b.jz,
                })
                .collect(),
            if c.fields.is_empty() {
                vec![SiteField { hx, hz }; n]
            } else {
                c.fields.iter().map(|f| SiteField { hx: f.hx, hz: f.hz }).collect()
            },
        ),
    };
    Ok(SpinHamiltonian64::new(n, bonds, fields)?)
}

/// `pre + s·(post - pre)`. Bond lists are concatenated with weights `1 - s`
/// and `s`, which is exact because H is linear in its couplings.
pub fn interpolate(pre: &SpinHamiltonian64, post: &SpinHamiltonian64, s: f64) -> CliResult<SpinHamiltonian64> {
    if s == 1.0 {
        return Ok(post.clone());
    }
    if s == 0.0 {
        return Ok(pre.clone());
    }
    let scaled = |b: &Bond<f64>, k: f64| Bond {
        i: b.i,
        j: b.j,
        jx: b.jx * k,
        jy: b.jy * k,
        jz: b.jz * k,
    };
    let bonds = pre
        .bonds()
        .iter()
        .map(|b| scaled(b, 1.0 - s))
        .chain(post.bonds().iter().map(|b| scaled(b, s)))
        .collect();
    let fields = pre
        .fields()
        .iter()
        .zip(post.fields())
        .map(|(a, b)| SiteField {
            hx: a.hx + s * (b.hx - a.hx),
            hz: a.hz + s * (b.hz - a.hz),
        })
        .collect();
    Ok(SpinHamiltonian64::new(pre.n_sites(), bonds, fields)?)
}

/// Site-averaged magnetisations and the bond-averaged `σᶻσᶻ` correlator.
pub fn observable(name: &str, n: usize, boundary: Boundary) -> CliResult<SpinHamiltonian64> {
    let inv = 1.0 / n as f64;
    let zero = SiteField { hx: 0.0, hz: 0.0 };
    let h = match name {
        "mx" => SpinHamiltonian64::new(n, vec![], vec![SiteField { hx: inv, hz: 0.0 }; n])?,
        "mz" => SpinHamiltonian64::new(n, vec![], vec![SiteField { hx: 0.0, hz: inv }; n])?,
        "czz" => {
            let pairs = chain_pairs(n, boundary == Boundary::Periodic);
            if pairs.is_empty() {
                return Err(bad("czz needs at least two sites"));
            }
            let w = 1.0 / pairs.len() as f64;
            SpinHamiltonian64::new(n, pairs.into_iter().map(|(a, b)| Bond::ising(a, b, w)).collect(), vec![zero; n])?
        }
        other => return Err(bad(format!("unknown observable {other:?}"))),
    };
    Ok(h)
}
