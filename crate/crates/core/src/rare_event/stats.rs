//! Binomial intervals and sample quantiles.

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::beta::beta_reg;

/// Two-sided normal quantile for a central interval at `level`.
pub fn normal_quantile(level: f64) -> f64 {
    Normal::standard().inverse_cdf(0.5 + 0.5 * level)
}

/// Smallest `x` in `[0, 1]` with `I_x(a, b) >= p`, by bisection.
fn beta_quantile(p: f64, a: f64, b: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if beta_reg(a, b, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact (Clopper–Pearson) interval for `k` successes in `n` trials.
pub fn clopper_pearson(k: u64, n: u64, level: f64) -> (f64, f64) {
    assert!(n > 0 && k <= n, "need 0 <= k <= n, n > 0");
    let alpha = 1.0 - level;
    let (kf, nf) = (k as f64, n as f64);
    let lo = if k == 0 {
        0.0
    } else if k == n {
        (alpha / 2.0).powf(1.0 / nf)
    } else {
        beta_quantile(alpha / 2.0, kf, nf - kf + 1.0)
    };
    let hi = if k == n {
        1.0
    } else if k == 0 {
        1.0 - (alpha / 2.0).powf(1.0 / nf)
    } else {
        beta_quantile(1.0 - alpha / 2.0, kf + 1.0, nf - kf)
    };
    (lo, hi)
}

/// Linear-interpolation quantile (R type 7) of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let i = h.floor() as usize;
    let frac = h - i as f64;
    match sorted.get(i + 1) {
        Some(&next) if frac > 0.0 => sorted[i] + frac * (next - sorted[i]),
        _ => sorted[i],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn reference_intervals() {
        // Values from an independent beta-quantile implementation.
        let cases = [
            (5, 20, 0.08657146910143461, 0.49104587170795744),
            (0, 10, 0.0, 0.3084971078187608),
            (10, 10, 0.6915028921812392, 1.0),
            (1, 100_000, 2.531780477933314e-07, 5.571516034774275e-05),
            (370_778, 1_000_000, 0.3698311870523418, 0.3717255614867821),
        ];
        for (k, n, lo, hi) in cases {
            let (a, b) = clopper_pearson(k, n, 0.95);
            assert!(close(a, lo, 1e-8) || (lo == 0.0 && a == 0.0), "{k}/{n} lo {a} vs {lo}");
            assert!(close(b, hi, 1e-8), "{k}/{n} hi {b} vs {hi}");
        }
    }

    #[test]
    fn normal_quantile_95() {
        assert!((normal_quantile(0.95) - 1.959963984540054).abs() < 1e-9);
    }

    #[test]
    fn type7_quantiles() {
        let d = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&d, 0.5), 2.5);
        assert_eq!(quantile_sorted(&d, 0.0), 1.0);
        assert_eq!(quantile_sorted(&d, 1.0), 4.0);
        assert!((quantile_sorted(&d, 0.9) - 3.7).abs() < 1e-12);
        assert_eq!(quantile_sorted(&[7.0], 0.3), 7.0);
    }
}
