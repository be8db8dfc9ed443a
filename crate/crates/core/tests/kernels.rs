mod common;

use proptest::prelude::*;

use reset_ldp_core::kernels::{
    adaptive_simpson, deterministic_zero_kernel, power_kernel, uniform_kernel, validate_kernel,
    ResetKernel, DEFAULT_NS,
};
use reset_ldp_core::rng::RngStream;

use common::ks_test;

/// Empirical law of 10^5 draws against the integrated density.
fn sampler_matches_density(k: &dyn ResetKernel, x: f64, seed: u64) {
    let mut rng = RngStream::new(seed, 0).rng();
    let draws: Vec<f64> = (0..100_000).map(|_| k.sample(3, x, &mut rng).unwrap()).collect();
    let lo = x.min(0.0);
    let cdf = |y: f64| {
        let y = y.clamp(lo, lo + x.abs());
        if y == lo {
            return 0.0;
        }
        adaptive_simpson(|s| k.density(3, x, s).unwrap(), lo, y, 1e-10).unwrap().min(1.0)
    };
    // Quadrature per draw is slow; evaluate the CDF on sorted draws via a table.
    let grid: Vec<f64> = (0..=2000).map(|i| lo + x.abs() * i as f64 / 2000.0).collect();
    let table: Vec<f64> = grid.iter().map(|&g| cdf(g)).collect();
    let interp = |y: f64| {
        let pos = ((y - lo) / x.abs() * 2000.0).clamp(0.0, 2000.0);
        let i = (pos.floor() as usize).min(1999);
        let w = pos - i as f64;
        table[i] + w * (table[i + 1] - table[i])
    };
    let (d, p) = ks_test(draws, interp);
    assert!(p > 1e-3, "{} at x={x}: D={d} p={p}", k.label());
}

#[test]
fn samplers_match_densities() {
    sampler_matches_density(&uniform_kernel(), 2.5, 1);
    sampler_matches_density(&uniform_kernel(), -4.0, 2);
    for (i, alpha) in [0.5, 2.0].into_iter().enumerate() {
        let k = power_kernel(alpha).unwrap();
        sampler_matches_density(&k, 1.5, 10 + i as u64);
        sampler_matches_density(&k, -3.0, 20 + i as u64);
    }
}

#[test]
fn power_zero_is_uniform() {
    let (p, u) = (power_kernel(0.0).unwrap(), uniform_kernel());
    for x in [-7.0, -0.3, 0.2, 5.0] {
        for i in 0..=50 {
            let y = x * i as f64 / 50.0;
            assert_eq!(p.density(0, x, y).unwrap(), u.density(0, x, y).unwrap());
        }
    }
}

#[test]
fn power_kernel_closed_form() {
    let k = power_kernel(1.0).unwrap();
    assert!((k.density(0, 2.0, 2.0).unwrap() - 1.0).abs() < 1e-15);
    assert!(power_kernel(-1.0).is_err());

    // (α+1) y^α / x^(α+1) at α = 3, x = 1: the top of the support has density 4.
    let r = validate_kernel(&power_kernel(3.0).unwrap(), &[1.0], &DEFAULT_NS, 1e-9).unwrap();
    assert!(r.upper_delta.value().unwrap() >= 4.0 - 1e-9, "{r:?}");
    assert!(r.b_plus.failed());
}

#[test]
fn deterministic_kernel_conditions() {
    let r = validate_kernel(&deterministic_zero_kernel(), &[-2.0, 3.0], &DEFAULT_NS, 1e-9).unwrap();
    assert!(r.a0.passed() && r.a_plus.passed() && r.a_minus.passed());
    assert!(r.b_plus.failed() && r.b_minus.failed());
    assert!(deterministic_zero_kernel().density(0, 1.0, 0.5).is_err());
}

fn kernels() -> Vec<Box<dyn ResetKernel>> {
    vec![
        Box::new(uniform_kernel()),
        Box::new(deterministic_zero_kernel()),
        Box::new(power_kernel(2.0).unwrap()),
        Box::new(power_kernel(-0.5).unwrap()),
    ]
}

proptest! {
    #[test]
    fn samples_stay_between_zero_and_x(x in -1e6f64..1e6, n in 0u64..100, seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, n).rng();
        for k in kernels() {
            let z = k.sample(n, x, &mut rng).unwrap();
            if x > 0.0 {
                prop_assert!((0.0..=x).contains(&z));
            } else if x < 0.0 {
                prop_assert!((x..=0.0).contains(&z));
            }
            prop_assert_eq!(k.sample(n, 0.0, &mut rng).unwrap(), 0.0);
        }
    }

    #[test]
    fn uniform_density_normalized(x in prop_oneof![-1e4f64..-1e-3, 1e-3f64..1e4]) {
        let k = uniform_kernel();
        let (a, b) = if x > 0.0 { (0.0, x) } else { (x, 0.0) };
        let mass = adaptive_simpson(|y| k.density(0, x, y).unwrap(), a, b, 1e-12).unwrap();
        prop_assert!((mass - 1.0).abs() < 1e-9);
    }
}
