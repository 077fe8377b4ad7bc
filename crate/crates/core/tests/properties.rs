//! Property suites over random measures and points.

mod common;

use common::*;
use harmonic_limits::harmonic::{harmonicity_residual, CharacterMixture};
use harmonic_limits::laplace::{corner_domination_check, log_laplace, log_laplace_gradient, midpoint_convexity_check};
use harmonic_limits::levelset::{roots_1d, Roots1d};
use harmonic_limits::lognum::{lse_accumulate, LogAccumulator, Sign, SignedLog};
use harmonic_limits::measures::{lift_dimension, sample_atom, Exponent, LatticeMeasure};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn measure(seed: u64, d: usize) -> LatticeMeasure<f64> {
    random_measure(&mut ChaCha8Rng::seed_from_u64(seed), d, 4)
}

fn log_phi(mu: &LatticeMeasure<f64>, s: Vec<f64>) -> f64 {
    log_laplace(mu, s, 1e-14).unwrap().log_phi().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn accumulation_is_order_free(logs in prop::collection::vec((-50.0f64..50.0, any::<bool>()), 1..40)) {
        let terms: Vec<SignedLog<f64>> = logs
            .iter()
            .map(|&(l, neg)| SignedLog::new(if neg { Sign::Neg } else { Sign::Pos }, l))
            .collect();
        let mut rev = terms.clone();
        rev.reverse();
        let a = lse_accumulate(terms.iter().copied()).to_real();
        let b = lse_accumulate(rev).to_real();
        let scale: f64 = logs.iter().map(|p| p.0.exp()).sum();
        prop_assert!((a - b).abs() <= 1e-13 * scale);
        let direct: f64 = logs.iter().map(|&(l, neg)| if neg { -l.exp() } else { l.exp() }).sum();
        prop_assert!((a - direct).abs() <= 1e-12 * scale);
    }

    #[test]
    fn accumulator_matches_batch(logs in prop::collection::vec(-700.0f64..700.0, 1..60)) {
        let mut acc = LogAccumulator::new();
        for &l in &logs {
            acc.push(SignedLog::from_log(l));
        }
        let batch = lse_accumulate(logs.iter().map(|&l| SignedLog::from_log(l)));
        prop_assert!((acc.total().ln() - batch.ln()).abs() <= 1e-13 * batch.ln().abs().max(1.0));
        prop_assert_eq!(acc.count(), logs.len() as u64);
    }

    #[test]
    fn random_measures_are_normalized(seed in any::<u64>(), d in 1usize..4) {
        let mu = measure(seed, d);
        prop_assert!(log_phi(&mu, vec![0.0; d]).abs() <= 1e-12);
    }

    #[test]
    fn midpoint_convexity(seed in any::<u64>(), d in 1usize..4, lambda in 0.0f64..=1.0,
                          s in prop::collection::vec(-2.0f64..2.0, 3), t in prop::collection::vec(-2.0f64..2.0, 3)) {
        let mu = measure(seed, d);
        prop_assert!(midpoint_convexity_check(&mu, s[..d].to_vec(), t[..d].to_vec(), lambda).unwrap());
    }

    #[test]
    fn corner_domination(d in 1usize..=4, center in prop::collection::vec(-3.0f64..3.0, 4), eps in 1e-3f64..2.0,
                         u in prop::collection::vec(-1.0f64..=1.0, 4), x in prop::collection::vec(-30i64..=30, 4)) {
        let s: Vec<f64> = (0..d).map(|j| center[j] + eps * u[j]).collect();
        prop_assert!(corner_domination_check(&s, &center[..d], eps, &x[..d]).unwrap());
    }

    #[test]
    fn gradient_matches_finite_differences(seed in any::<u64>(), d in 1usize..4, s in prop::collection::vec(-1.0f64..1.0, 3)) {
        let mu = measure(seed, d);
        let s = s[..d].to_vec();
        let lp = log_phi(&mu, s.clone());
        let g: Vec<f64> = log_laplace_gradient(&mu, s.clone(), 1e-14).unwrap().iter().map(|v| v.scale_log(-lp).to_real()).collect();
        let h = 1e-6;
        let fd: Vec<f64> = (0..d).map(|j| {
            let mut a = s.clone();
            let mut b = s.clone();
            a[j] += h;
            b[j] -= h;
            (log_phi(&mu, a) - log_phi(&mu, b)) / (2.0 * h)
        }).collect();
        let err: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = g.iter().map(|a| a * a).sum::<f64>().sqrt();
        prop_assert!(err <= 1e-6 * norm.max(1e-3), "err {} norm {}", err, norm);
    }

    #[test]
    fn lifting_preserves_phi(seed in any::<u64>(), s in prop::collection::vec(-1.5f64..1.5, 2), extra in prop::collection::vec(-5.0f64..5.0, 2)) {
        let mu = measure(seed, 2);
        let lifted = lift_dimension(&mu, 4).unwrap();
        let mut t = s.clone();
        t.extend(&extra);
        prop_assert!((log_phi(&mu, s) - log_phi(&lifted, t)).abs() < 1e-13);
    }

    #[test]
    fn scalar_types_agree(seed in any::<u64>(), s in -1.5f64..1.5) {
        let mu = measure(seed, 1);
        let atoms: Vec<_> = mu.atoms().unwrap().iter()
            .map(|a| harmonic_limits::measures::Atom::new(a.point.clone(), a.logweight.ln() as f32))
            .collect();
        let mu32 = harmonic_limits::measures::build_atoms(1, atoms).unwrap();
        let l32 = log_laplace(&mu32, vec![s as f32], 1e-6f32).unwrap().log_phi().unwrap();
        prop_assert!((l32 as f64 - log_phi(&mu, vec![s])).abs() < 1e-5);
    }

    #[test]
    fn roots_are_harmonic_characters(seed in any::<u64>(), w in 0.0f64..1.0, x0 in -30i64..=30) {
        let mu = random_measure_1d(&mut ChaCha8Rng::seed_from_u64(seed), 5);
        let Roots1d::Roots(r) = roots_1d(&mu, 1.0, 1e-13).unwrap() else { panic!("finite support") };
        prop_assert_eq!(r.len(), 2);
        let m = CharacterMixture::from_log_pairs(vec![
            (Exponent::new(vec![r[0]]), w.max(1e-300).ln()),
            (Exponent::new(vec![r[1]]), (1.0 - w).max(1e-300).ln()),
        ]).unwrap();
        let rep = harmonicity_residual(&mu, &m, &[x0], 1e-14).unwrap();
        prop_assert!(rep.relative <= 1e-10, "{}", rep.relative);
    }

    #[test]
    fn roots_match_brute_force(seed in any::<u64>()) {
        let mu = random_measure_1d(&mut ChaCha8Rng::seed_from_u64(seed), 5);
        let Roots1d::Roots(r) = roots_1d(&mu, 1.0, 1e-12).unwrap() else { panic!("finite support") };
        let bf = brute_force_roots(&atoms_1d(&mu), 6.0, 1e-3);
        prop_assert_eq!(r.len(), bf.len());
        for (a, b) in r.iter().zip(&bf) {
            prop_assert!((a - b).abs() < 1e-8, "{} vs {}", a, b);
        }
    }

    #[test]
    fn sampling_is_reproducible(seed in any::<u64>()) {
        let mu = measure(seed, 2);
        prop_assert_eq!(sample_atom(&mu, seed, 50).unwrap(), sample_atom(&mu, seed, 50).unwrap());
    }
}

#[test]
fn sampler_frequency_within_binomial_band() {
    let mu = harmonic_limits::measures::biased_walk(0.25f64).unwrap();
    let n = 200_000;
    let draws = sample_atom(&mu, 11, n).unwrap();
    let ups = draws.iter().filter(|p| p[0] == 1).count() as f64 / n as f64;
    assert!((ups - 0.25).abs() <= 4.0 * (0.25f64 * 0.75 / n as f64).sqrt());
}
