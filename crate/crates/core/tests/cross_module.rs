mod common;

use std::f64::consts::PI;

use common::*;
use consensus_core::dde::{
    consensus_report, detect_consensus, predict_processing, simulate_processing,
    simulate_propagation, InitialHistory,
};
use consensus_core::kernel::DelayKernel;
use consensus_core::markov::{duality_check, h1_check, p_epsilon, stationary, StationaryMethod};
use consensus_core::netgraph::{laplacian, preset_chain, preset_complete, preset_ring, WeightedDigraph};
use consensus_core::spectral::{
    chi_processing, chi_propagation, processing_verdict, propagation_verdict, scalar_roots_default,
    Verdict,
};
use consensus_core::Complex64;
use proptest::prelude::*;
use rand::Rng;

fn symmetric_h1(seed: u64) -> consensus_core::netgraph::LaplacianData {
    let mut rng = rng(seed);
    loop {
        let n = rng.gen_range(2..=5);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen_bool(0.6) {
                    let w = rng.gen_range(0.3..1.2);
                    edges.push((i, j, w));
                    edges.push((j, i, w));
                }
            }
        }
        let ld = laplacian(&WeightedDigraph::from_edges(n, &edges).unwrap());
        if h1_check(&ld) {
            return ld;
        }
    }
}

#[test]
fn processing_verdict_matches_simulation() {
    for seed in 0..6 {
        let ld = symmetric_h1(seed);
        let threshold = processing_verdict(&ld, 0.0).unwrap().threshold.unwrap();
        let n = ld.node_count();
        let phi = InitialHistory::Constant((0..n).map(|i| i as f64).collect());
        for (factor, expect) in [(0.9, Verdict::Consensus), (1.1, Verdict::NoConsensus)] {
            let tau = factor * threshold;
            let report = processing_verdict(&ld, tau).unwrap();
            assert_eq!(report.verdict, expect, "seed {seed}");
            // grid step dividing τ
            let h = tau / (tau / 0.005).ceil();
            let traj = simulate_processing(&ld, &DelayKernel::discrete(tau).unwrap(), &phi, 300.0, h).unwrap();
            let converged = detect_consensus(&traj, 1e-6, 1.0).is_some();
            assert_eq!(converged, expect == Verdict::Consensus, "seed {seed} factor {factor}");
            if converged {
                let c = predict_processing(&ld, &phi).unwrap();
                assert!((traj.final_state()[0] - c).abs() < 1e-4);
            }
        }
    }
}

#[test]
fn propagation_is_delay_independent() {
    let mut rng = rng(21);
    for _ in 0..5 {
        let ld = random_h1(&mut rng, (2, 5), (0.5, 1.5));
        for tau in [0.5, 4.0] {
            let kernel = DelayKernel::discrete(tau).unwrap();
            let report = propagation_verdict(&ld, &kernel).unwrap();
            assert_eq!(report.verdict, Verdict::Consensus);
            assert!(report.rightmost_nonzero_real_part.is_none_or(|r| r < 0.0));
        }
    }
}

#[test]
fn affine_covariance_of_the_consensus_value() {
    let ld = laplacian(&preset_ring(4, 1.0).unwrap());
    let kernel = DelayKernel::uniform(1.0).unwrap();
    let phi = InitialHistory::Polynomial(vec![vec![1.0, 0.5], vec![0.0], vec![-1.0, 0.0, 1.0], vec![2.0]]);
    let (a, b) = (-2.5, 0.75);
    let mut values = Vec::new();
    for p in [phi.clone(), phi.affine_map(a, b)] {
        let traj = simulate_propagation(&ld, &kernel, &p, 60.0, 0.01).unwrap();
        let report = consensus_report(&traj, &ld, &kernel, &p, 1e-8, 1.0).unwrap();
        assert!(report.converged);
        assert!((report.detected_value.unwrap() - report.predicted_value).abs() < 1e-6);
        assert!(report.relative_q_drift() < 1e-6);
        values.push(report.detected_value.unwrap());
    }
    assert!((values[1] - (a * values[0] + b)).abs() < 1e-6);
}

#[test]
fn duality_on_presets() {
    for g in [preset_chain(5, 1.0), preset_ring(6, 0.7), preset_complete(4, 0.3)] {
        let ld = laplacian(&g.unwrap());
        let report = duality_check(&ld, &[0.1, 1.0, 5.0, 20.0]).unwrap();
        assert!(report.h1 && report.passed());
        let pi = stationary(&ld, StationaryMethod::Adjugate).unwrap().pi;
        let p = p_epsilon(&ld, 0.5 / ld.delta).unwrap();
        assert!(sup_diff(&p.vec_mul(&pi), &pi) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn characteristic_functions_vanish_at_zero(seed in 0u64..1000, tau in 0.0f64..3.0) {
        let mut rng = rng(seed);
        let n = rng.gen_range(1..=6);
        let ld = laplacian(&WeightedDigraph::new(random_weights(&mut rng, n, 0.5, (0.1, 2.0))).unwrap());
        for kernel in [DelayKernel::discrete(tau).unwrap(), random_mixture(&mut rng, tau.max(0.1))] {
            let zero = Complex64::new(0.0, 0.0);
            prop_assert!(chi_propagation(&ld, &kernel, zero).norm() < 1e-9);
            prop_assert!(chi_processing(&ld, &kernel, zero).norm() < 1e-9);
        }
    }

    #[test]
    fn scalar_roots_bracket_the_delay_threshold(lambda in 0.2f64..4.0, ratio in 0.1f64..3.0) {
        prop_assume!((ratio - 1.0).abs() > 0.02);
        let tau = ratio * PI / (2.0 * lambda);
        let kernel = DelayKernel::discrete(tau).unwrap();
        let lam = Complex64::new(lambda, 0.0);
        let roots = scalar_roots_default(lam, &kernel).unwrap();
        prop_assert!(!roots.is_empty());
        for r in &roots {
            prop_assert!((r + lam * kernel.transform(*r)).norm() < 1e-8);
        }
        if ratio < 1.0 {
            prop_assert!(roots.iter().all(|r| r.re < -1e-10));
        } else {
            prop_assert!(roots[0].re > 1e-10);
        }
    }
}
