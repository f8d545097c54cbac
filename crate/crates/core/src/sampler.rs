//! Single-spin-flip Metropolis sampling of `|ψ(σ)|²`.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::index_to_spins;
use crate::rbm::RbmParameters;
use crate::scalar::{log_two_cosh, Real};

/// Sampler settings. `burn_in` is counted in sweeps (N proposals), `stride`
/// in single-flip proposals between recorded samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub n_samples: usize,
    pub n_chains: usize,
    pub burn_in: Option<usize>,
    pub stride: Option<usize>,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn new(n_samples: usize, n_chains: usize, seed: u64) -> Self {
        Self {
            n_samples,
            n_chains,
            burn_in: None,
            stride: None,
            seed,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Stride and burn-in with defaults filled: stride = one sweep,
    /// burn-in = 10% of the recorded sweeps per chain.
    pub fn resolved(&self, n_sites: usize) -> (usize, usize) {
        let stride = self.stride.unwrap_or(n_sites).max(1);
        let per_chain = self.n_samples / self.n_chains.max(1);
        let sweeps = (per_chain * stride).div_ceil(n_sites.max(1));
        let burn_in = self.burn_in.unwrap_or_else(|| sweeps.div_ceil(10));
        (stride, burn_in)
    }
}

/// Configurations drawn by [`metropolis_sample`], stored as basis indices
/// (bit `i` set ⇔ `σ_i = +1`), concatenated chain by chain.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    n_sites: usize,
    configs: Vec<usize>,
    pub n_chains: usize,
    pub burn_in: usize,
    pub stride: usize,
    pub acceptance_rate: f64,
    pub seed: u64,
}

impl SampleSet {
    /// Wraps explicit configurations (e.g. a full basis enumeration).
    pub fn from_indices(n_sites: usize, configs: Vec<usize>) -> Result<Self> {
        if n_sites == 0 || n_sites >= usize::BITS as usize {
            return Err(Error::Input(format!("unsupported site count {n_sites}")));
        }
        if let Some(bad) = configs.iter().find(|&&c| c >> n_sites != 0) {
            return Err(Error::Input(format!("configuration index {bad} out of range")));
        }
        Ok(Self {
            n_sites,
            configs,
            n_chains: 1,
            burn_in: 0,
            stride: 0,
            acceptance_rate: 1.0,
            seed: 0,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn configs(&self) -> &[usize] {
        &self.configs
    }

    pub fn spins(&self, k: usize) -> Vec<i8> {
        index_to_spins(self.configs[k], self.n_sites)
    }
}

struct ChainOutput {
    configs: Vec<usize>,
    accepted: u64,
    proposed: u64,
}

fn run_chain<T: Real>(p: &RbmParameters<T>, samples: usize, stride: usize, burn_in_proposals: usize, seed: u64, chain: u64) -> ChainOutput {
    let n = p.n_visible();
    let m = p.n_hidden();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(chain);
    let mut spins: Vec<i8> = (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
    let mut theta = p.angles(&spins);
    let mut lc: Vec<_> = theta.iter().map(|&t| log_two_cosh(t)).collect();
    let mut moved = theta.clone();
    let mut moved_lc = lc.clone();
    let two = T::of(2.0);
    let mut accepted = 0u64;
    let mut proposed = 0u64;
    let mut site = 0usize;
    let mut configs = Vec::with_capacity(samples);
    let total = burn_in_proposals + samples * stride;
    for step in 1..=total {
        let i = site;
        site = (site + 1) % n;
        let s = if spins[i] > 0 { T::one() } else { -T::one() };
        // Δ log ψ for σ_i → −σ_i
        let mut delta = if p.visible_bias {
            p.a[i] * (-two * s)
        } else {
            Complex::new(T::zero(), T::zero())
        };
        for j in 0..m {
            moved[j] = theta[j] - p.w[(j, i)] * (two * s);
            moved_lc[j] = log_two_cosh(moved[j]);
            delta += moved_lc[j] - lc[j];
        }
        let log_ratio = (two * delta.re).as_f64();
        proposed += 1;
        let accept = log_ratio >= 0.0 || rng.gen::<f64>().ln() < log_ratio;
        if accept {
            accepted += 1;
            spins[i] = -spins[i];
            std::mem::swap(&mut theta, &mut moved);
            std::mem::swap(&mut lc, &mut moved_lc);
        }
        if step > burn_in_proposals && (step - burn_in_proposals).is_multiple_of(stride) {
            configs.push(crate::lattice::spins_to_index(&spins));
        }
    }
    ChainOutput {
        configs,
        accepted,
        proposed,
    }
}

/// Draws `n_samples` configurations from `|ψ|²` with independent chains.
pub fn metropolis_sample<T: Real>(p: &RbmParameters<T>, cfg: &SamplerConfig) -> Result<SampleSet> {
    let n = p.n_visible();
    if cfg.n_chains == 0 || cfg.n_samples == 0 {
        return Err(Error::Input("sampler needs n_chains ≥ 1 and n_samples ≥ 1".into()));
    }
    if !cfg.n_samples.is_multiple_of(cfg.n_chains) {
        return Err(Error::Input(format!(
            "n_samples ({}) must be divisible by n_chains ({})",
            cfg.n_samples, cfg.n_chains
        )));
    }
    if n >= usize::BITS as usize {
        return Err(Error::Input(format!("unsupported site count {n}")));
    }
    let per_chain = cfg.n_samples / cfg.n_chains;
    let (stride, burn_in) = cfg.resolved(n);
    let outputs: Vec<ChainOutput> = (0..cfg.n_chains as u64)
        .into_par_iter()
        .map(|chain| run_chain(p, per_chain, stride, burn_in * n, cfg.seed, chain))
        .collect();
    let accepted: u64 = outputs.iter().map(|o| o.accepted).sum();
    let proposed: u64 = outputs.iter().map(|o| o.proposed).sum();
    let configs = outputs.into_iter().flat_map(|o| o.configs).collect();
    Ok(SampleSet {
        n_sites: n,
        configs,
        n_chains: cfg.n_chains,
        burn_in,
        stride,
        acceptance_rate: accepted as f64 / proposed as f64,
        seed: cfg.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rbm::init_random;
    use num_complex::Complex64;

    #[test]
    fn uniform_state_accepts_everything() {
        let p = RbmParameters::<f64>::zeros(4, 4);
        let s = metropolis_sample(&p, &SamplerConfig::new(400, 4, 3)).unwrap();
        assert_eq!(s.acceptance_rate, 1.0);
        assert_eq!(s.len(), 400);
    }

    #[test]
    fn strong_bias_polarizes_samples() {
        let mut p = RbmParameters::<f64>::zeros(1, 1);
        p.a[0] = Complex64::new(10.0, 0.0);
        let s = metropolis_sample(&p, &SamplerConfig::new(2000, 4, 11)).unwrap();
        let mean: f64 = (0..s.len()).map(|k| f64::from(s.spins(k)[0])).sum::<f64>() / s.len() as f64;
        // Born variance of σ is 1 - tanh(20)² ≈ 1.7e-17; any -1 sample would be a 5σ failure.
        assert_eq!(mean, 1.0);
    }

    #[test]
    fn same_seed_same_samples() {
        let p = init_random::<f64>(5, 5, 0.3, 2).unwrap();
        let cfg = SamplerConfig::new(600, 3, 99);
        assert_eq!(metropolis_sample(&p, &cfg).unwrap(), metropolis_sample(&p, &cfg).unwrap());
        assert_ne!(
            metropolis_sample(&p, &cfg).unwrap(),
            metropolis_sample(&p, &cfg.with_seed(100)).unwrap()
        );
    }

    #[test]
    fn rejects_indivisible_sample_count() {
        let p = RbmParameters::<f64>::zeros(2, 2);
        assert!(metropolis_sample(&p, &SamplerConfig::new(10, 3, 0)).is_err());
    }

    #[test]
    fn default_schedule() {
        let cfg = SamplerConfig::new(1000, 10, 0);
        // 100 samples per chain at one sweep each; 10% burn-in.
        assert_eq!(cfg.resolved(6), (6, 10));
    }
}
