//! Lower-tail bound for Poisson increments.
//!
//! For `N = ν(T) - ν(δT) ~ Poisson(μ)`, `μ = λ(1-δ)T`:
//!
//! ```text
//! P(N <= cT) <= exp{-μ + μc - Tc ln c}
//! ```

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub lambda: f64,
    pub delta: f64,
    pub c: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub exact_cdf: f64,
    pub bound: f64,
    pub ln_exact_cdf: f64,
    pub ln_bound: f64,
    pub holds: bool,
}

/// `ln P(Poisson(mu) <= k)` by log-sum-exp over the pmf.
fn ln_poisson_cdf(k: u64, mu: f64) -> f64 {
    if mu == 0.0 {
        return 0.0;
    }
    let ln_mu = mu.ln();
    let terms: Vec<f64> = (0..=k)
        .map(|j| {
            let j = j as f64;
            -mu + j * ln_mu - ln_gamma(j + 1.0)
        })
        .collect();
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = terms.iter().map(|t| (t - m).exp()).sum();
    (m + s.ln()).min(0.0)
}

pub fn poisson_tail_bound(lambda: f64, delta: f64, c: f64, t: f64) -> Result<BoundCheck> {
    let bad = |m: String| Err(Error::InvalidParameter(m));
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return bad(format!("lambda must be >= 0, got {lambda}"));
    }
    if !(0.0..1.0).contains(&delta) {
        return bad(format!("delta must be in [0, 1), got {delta}"));
    }
    if !(c > 0.0) || !c.is_finite() {
        return bad(format!("c must be > 0, got {c}"));
    }
    if !(t > 0.0) || !t.is_finite() {
        return bad(format!("T must be > 0, got {t}"));
    }
    let mu = lambda * (1.0 - delta) * t;
    // Guard against cT landing just below an integer through rounding.
    let k = (c * t * (1.0 + 1e-12)).floor() as u64;
    let ln_exact = ln_poisson_cdf(k, mu);
    let ln_bound = -mu + mu * c - t * c * c.ln();
    Ok(BoundCheck {
        lambda,
        delta,
        c,
        t,
        exact_cdf: ln_exact.exp(),
        bound: ln_bound.exp(),
        ln_exact_cdf: ln_exact,
        ln_bound,
        holds: ln_exact <= ln_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_matches_direct_sum() {
        let mu: f64 = 10.0;
        let mut p = (-mu).exp();
        let mut acc = p;
        for j in 1..=5 {
            p *= mu / j as f64;
            acc += p;
        }
        assert!((ln_poisson_cdf(5, mu).exp() - acc).abs() < 1e-14);
        assert!((acc - 0.06708596287903178).abs() < 1e-14);
        assert_eq!(ln_poisson_cdf(3, 0.0), 0.0);
    }

    #[test]
    fn worked_example() {
        let b = poisson_tail_bound(1.0, 0.0, 0.5, 10.0).unwrap();
        assert!((b.ln_bound - (-10.0 + 5.0 + 5.0 * 2f64.ln())).abs() < 1e-12);
        assert!(b.holds);
        let b = poisson_tail_bound(1.0, 0.0, 0.01, 100.0).unwrap();
        assert!((b.ln_bound - (-100.0 + 1.0 + 100f64.ln())).abs() < 1e-9);
        assert!(b.holds && b.exact_cdf < b.bound);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(poisson_tail_bound(1.0, 1.0, 0.5, 1.0).is_err());
        assert!(poisson_tail_bound(1.0, 0.0, 0.0, 1.0).is_err());
        assert!(poisson_tail_bound(-1.0, 0.0, 0.5, 1.0).is_err());
        assert!(poisson_tail_bound(1.0, 0.0, 0.5, 0.0).is_err());
    }
}
