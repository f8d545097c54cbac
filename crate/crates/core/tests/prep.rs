mod common;

use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;
use quench_core::{
    infidelity, infidelity_gradient, optimize_infidelity, optimize_infidelity_from, Bond, Optimizer, PrepConfig, RbmParameters64,
    SiteField, SpinBasis, SpinHamiltonian64,
};
use rand::Rng;

use common::*;

fn rbm_infidelity(p: &RbmParameters64, target: &DVector<Complex64>, basis: &SpinBasis) -> f64 {
    infidelity(&p.dense_state(basis).unwrap(), target).unwrap()
}

#[test]
fn gradient_matches_central_differences() {
    let mut r = rng(61);
    let h = 1e-5;
    for k in 0..20 {
        let n = 1 + k % 4;
        let m = 1 + r.gen_range(0..2 * n);
        let p = random_rbm(&mut r, n, m, 0.3);
        let basis = SpinBasis::new(n).unwrap();
        let target = normalized(cvec(&mut r, basis.dim()));
        let grad = infidelity_gradient(&p, &target, &basis).unwrap();
        let flat = p.flatten();
        let mut fd = DVector::<Complex64>::zeros(flat.len());
        for j in 0..flat.len() {
            let mut partial = [0.0; 2];
            for (c, dir) in [Complex64::new(h, 0.0), Complex64::new(0.0, h)].into_iter().enumerate() {
                let (mut up, mut dn) = (flat.clone(), flat.clone());
                up.0[j] += dir;
                dn.0[j] -= dir;
                let iu = rbm_infidelity(&p.with_flat(&up).unwrap(), &target, &basis);
                let id = rbm_infidelity(&p.with_flat(&dn).unwrap(), &target, &basis);
                partial[c] = (iu - id) / (2.0 * h);
            }
            // real derivatives (∂/∂Re, ∂/∂Im) = (2 Re ∇, 2 Im ∇)
            fd[j] = Complex64::new(partial[0], partial[1]) * 0.5;
        }
        let err = rel_err(&grad, &fd);
        assert!(err < 1e-5, "instance {k} (N={n}, M={m}): rel err {err:e}");
    }
}

#[test]
fn two_site_ising_ground_state_is_reached() {
    let h = SpinHamiltonian64::new(2, vec![Bond::ising(0, 1, -1.0)], vec![SiteField { hx: -0.5, hz: 0.0 }; 2]).unwrap();
    let basis = SpinBasis::new(2).unwrap();
    let (_, ground) = h.ground_state(&basis).unwrap();
    let cfg = PrepConfig {
        max_iters: 5000,
        learning_rate: 0.01,
        target_infidelity: 1e-4,
        optimizer: Optimizer::AdaptiveMoment,
        seed: 0,
        init_scale: 0.01,
    };
    let res = optimize_infidelity(2, 4, true, &ground, &basis, &cfg).unwrap();
    assert!(res.final_infidelity < 1e-4, "{}", res.final_infidelity);
    let recomputed = rbm_infidelity(&res.parameters, &ground, &basis);
    assert!((recomputed - res.final_infidelity).abs() <= 1e-12);
    assert!(res.final_infidelity <= res.history[0].1);
}

#[test]
fn realizable_target_is_recovered() {
    let mut r = rng(62);
    let basis = SpinBasis::new(3).unwrap();
    let known = random_rbm(&mut r, 3, 3, 0.4);
    let target = normalized(known.dense_state(&basis).unwrap());
    let mut start = known.flatten();
    for z in start.0.iter_mut() {
        *z += cnormal(&mut r) * 0.05;
    }
    let p0 = known.with_flat(&start).unwrap();
    let cfg = PrepConfig {
        max_iters: 20000,
        learning_rate: 0.05,
        target_infidelity: 1e-9,
        optimizer: Optimizer::PlainGradient,
        ..PrepConfig::default()
    };
    let res = optimize_infidelity_from(&p0, &target, &basis, &cfg).unwrap();
    assert!(
        res.final_infidelity < 1e-8,
        "{} after {} iterations",
        res.final_infidelity,
        res.iterations_used
    );
}

#[test]
fn zero_iterations_return_the_start() {
    let basis = SpinBasis::new(3).unwrap();
    let target = normalized(cvec(&mut rng(63), 8));
    let cfg = PrepConfig {
        max_iters: 0,
        seed: 9,
        ..PrepConfig::default()
    };
    let res = optimize_infidelity(3, 2, true, &target, &basis, &cfg).unwrap();
    let start = quench_core::init_random::<f64>(3, 2, cfg.init_scale, cfg.seed).unwrap();
    assert_eq!(res.iterations_used, 0);
    assert_eq!(res.parameters, start);
    assert_eq!(res.history.len(), 1);
    assert_eq!(res.final_infidelity, rbm_infidelity(&start, &target, &basis));
}

#[test]
fn infidelity_of_random_pairs_is_in_unit_interval() {
    let mut r = rng(64);
    for k in 0..1000 {
        let dim = 1 + k % 16;
        let (a, b) = (cvec(&mut r, dim), cvec(&mut r, dim));
        let v = infidelity(&a, &b).unwrap();
        assert!((-1e-12..=1.0 + 1e-12).contains(&v), "pair {k}: {v}");
    }
    let a = cvec(&mut r, 8);
    assert!(infidelity(&a, &a).unwrap().abs() <= 1e-12);
    let mut e0 = DVector::<Complex64>::zeros(4);
    let mut e1 = DVector::<Complex64>::zeros(4);
    e0[0] = Complex64::new(1.0, 0.0);
    e1[1] = Complex64::new(0.0, 2.0);
    assert_eq!(infidelity(&e0, &e1).unwrap(), 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn infidelity_ignores_phase_and_scale(seed in any::<u64>(), theta in 0.0f64..6.3, scale in 1e-3f64..1e3) {
        let mut r = rng(seed);
        let (a, b) = (cvec(&mut r, 8), cvec(&mut r, 8));
        let base = infidelity(&a, &b).unwrap();
        let k = Complex64::from_polar(scale, theta);
        prop_assert!((infidelity(&a.map(|z| z * k), &b).unwrap() - base).abs() <= 1e-12);
        prop_assert!((infidelity(&a, &b.map(|z| z * k)).unwrap() - base).abs() <= 1e-12);
    }

    #[test]
    fn best_seen_never_worse_than_start(seed in any::<u64>(), lr in 1e-3f64..0.5, adaptive in any::<bool>()) {
        let basis = SpinBasis::new(2).unwrap();
        let target = normalized(cvec(&mut rng(seed), 4));
        let cfg = PrepConfig {
            max_iters: 30,
            learning_rate: lr,
            target_infidelity: 1e-12,
            optimizer: if adaptive { Optimizer::AdaptiveMoment } else { Optimizer::PlainGradient },
            seed,
            init_scale: 0.01,
        };
        let res = optimize_infidelity(2, 2, true, &target, &basis, &cfg).unwrap();
        prop_assert!(res.final_infidelity <= res.history[0].1);
        let recomputed = rbm_infidelity(&res.parameters, &target, &basis);
        prop_assert!((recomputed - res.final_infidelity).abs() <= 1e-12);
    }
}
