//! Shared oracles and generators for the integration tests.
#![allow(dead_code, clippy::excessive_precision)]

use harmonic_limits::measures::{build_atoms, Atom, LatticeMeasure};
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// mpmath values at 60 digits, produced by `tests/oracle/gen_values.py`.
pub const LOG_M: f64 = 2_492.749_021_574_926_2;
pub const LOG_ZETA2: f64 = 0.497_700_302_470_745_37;
pub const WITNESS_LOG_PHI: f64 = -2_492.251_321_272_455_7;
pub const Y_A: [(f64, f64); 5] = [
    (1.0, 1.0),
    (0.5, 0.249_930_652_670_423),
    (0.1, 0.009_990_792_207_463_465),
    (0.01, 9.981_601_768_722_26e-5),
    (0.001, 9.972_428_227_899_525e-7),
];

const BITS: u64 = 400;

fn fixed_one() -> BigInt {
    BigInt::one() << BITS
}

fn fixed_mul(a: &BigInt, b: &BigInt) -> BigInt {
    (a * b) >> BITS
}

/// `e^{-k}` in 400-bit fixed point, from the Taylor series of `e^{-1}`.
fn fixed_exp_neg(k: u32) -> BigInt {
    let one = fixed_one();
    let mut term = one.clone();
    let mut inv_e = one.clone();
    for n in 1u32..200 {
        term = -term / BigInt::from(n);
        if term.is_zero() {
            break;
        }
        inv_e += &term;
    }
    let mut r = one;
    for _ in 0..k {
        r = fixed_mul(&r, &inv_e);
    }
    r
}

/// `log M` for `M = sum_{n=1}^{terms} e^{100 n - n^2} / n^2`, summed in
/// 400-bit integer fixed point after factoring out `e^{2500}`.
pub fn bigint_log_m(terms: u32) -> f64 {
    let e1 = fixed_exp_neg(1);
    let e2 = fixed_mul(&e1, &e1);
    // e^{-(n-50)^2} walking outward from the peak in both directions
    let mut sum = BigInt::zero();
    let mut weight = fixed_one();
    let mut step = e1;
    for k in 0i64..=terms as i64 {
        if k > 0 {
            weight = fixed_mul(&weight, &step);
            step = fixed_mul(&step, &e2);
        }
        if weight.is_zero() {
            break;
        }
        let sides: &[i64] = if k == 0 { &[50] } else { &[50 - k, 50 + k] };
        for &n in sides {
            if n >= 1 && n <= terms as i64 {
                sum += &weight / BigInt::from(n * n);
            }
        }
    }
    let top = (sum >> (BITS - 100) as usize).to_f64().unwrap();
    2500.0 + top.ln() - 100.0 * std::f64::consts::LN_2
}

/// Random normalized measure on `Z` with at least one positive and one
/// negative atom, support in `[-range, range]` and `|mean| >= 1e-2`.
pub fn random_measure_1d(rng: &mut ChaCha8Rng, range: i64) -> LatticeMeasure<f64> {
    loop {
        let n = rng.gen_range(2..=6);
        let mut pts: Vec<i64> = vec![rng.gen_range(1..=range), -rng.gen_range(1..=range)];
        while pts.len() < n {
            let p = rng.gen_range(-range..=range);
            if !pts.contains(&p) {
                pts.push(p);
            }
        }
        let w: Vec<f64> = pts.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = w.iter().sum();
        let mean: f64 = pts.iter().zip(&w).map(|(&p, &w)| p as f64 * w / total).sum();
        if mean.abs() < 1e-2 {
            continue;
        }
        let atoms = pts
            .iter()
            .zip(&w)
            .map(|(&p, &w)| Atom::new(vec![p], (w / total).ln()))
            .collect();
        return build_atoms(1, atoms).unwrap();
    }
}

/// Random normalized finite measure on `Z^d`.
pub fn random_measure(rng: &mut ChaCha8Rng, d: usize, range: i64) -> LatticeMeasure<f64> {
    let n = rng.gen_range(1..=8);
    let mut pts: Vec<Vec<i64>> = Vec::new();
    while pts.len() < n {
        let p: Vec<i64> = (0..d).map(|_| rng.gen_range(-range..=range)).collect();
        if !pts.contains(&p) {
            pts.push(p);
        }
    }
    let w: Vec<f64> = pts.iter().map(|_| rng.gen_range(0.01..1.0)).collect();
    let total: f64 = w.iter().sum();
    let atoms = pts
        .into_iter()
        .zip(&w)
        .map(|(p, &w)| Atom::new(p, (w / total).ln()))
        .collect();
    build_atoms(d, atoms).unwrap()
}

/// Direct `ln sum mu(x) e^{x s}` over the atoms of a finite measure on `Z`.
pub fn direct_log_phi_1d(atoms: &[(i64, f64)], s: f64) -> f64 {
    let m = atoms
        .iter()
        .map(|&(x, lw)| lw + x as f64 * s)
        .fold(f64::NEG_INFINITY, f64::max);
    m + atoms
        .iter()
        .map(|&(x, lw)| (lw + x as f64 * s - m).exp())
        .sum::<f64>()
        .ln()
}

/// Roots of `Phi = 1` found by a grid scan on `[-half, half]` with spacing
/// `h`, each sign change refined by bisection.
pub fn brute_force_roots(atoms: &[(i64, f64)], half: f64, h: f64) -> Vec<f64> {
    let f = |s: f64| direct_log_phi_1d(atoms, s);
    let n = (2.0 * half / h).ceil() as i64;
    let mut roots = Vec::new();
    // grid shifted by h/3 so no grid point sits exactly on the root at 0
    let mut prev_s = -half + h / 3.0;
    let mut prev = f(prev_s);
    for k in 1..=n {
        let s = -half + h / 3.0 + k as f64 * h;
        let v = f(s);
        if (prev > 0.0) != (v > 0.0) {
            let (mut lo, mut hi) = (prev_s, s);
            let lo_pos = prev > 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid == lo || mid == hi {
                    break;
                }
                if (f(mid) > 0.0) == lo_pos {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let r = 0.5 * (lo + hi);
            roots.push(if r.abs() < 1e-12 { 0.0 } else { r });
        }
        prev_s = s;
        prev = v;
    }
    roots
}

pub fn atoms_1d(mu: &LatticeMeasure<f64>) -> Vec<(i64, f64)> {
    mu.atoms()
        .unwrap()
        .iter()
        .map(|a| (a.point[0], a.logweight.ln()))
        .collect()
}
