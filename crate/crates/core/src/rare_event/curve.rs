//! Empirical rates over a sweep of `T`.

use serde::{Deserialize, Serialize};

use super::{direct_mc_estimate, is_estimate, EstimateResult, IsOptions, Method};
use crate::kernels::{ResetKernel, SupportKind};
use crate::path::{rate_deterministic_reset, rate_mixed, rate_negative, rate_positive, SignPattern, TargetPath, TubeSpec};
use crate::process::SimSettings;
use crate::rng::RngStream;
use crate::{Error, Result};

/// The limiting rate `I(f)` for this kernel and the name of the functional
/// that gives it.
pub fn predicted_rate(f: &TargetPath, lambda: f64, kernel: &dyn ResetKernel) -> Result<(f64, &'static str)> {
    if kernel.support_kind() == SupportKind::Deterministic {
        return Ok((rate_deterministic_reset(f, lambda)?, "rate_deterministic_reset"));
    }
    Ok(match f.sign_pattern() {
        SignPattern::Positive => (rate_positive(f, lambda)?, "rate_positive"),
        SignPattern::Negative => (rate_negative(f, lambda)?, "rate_negative"),
        SignPattern::Mixed => (rate_mixed(f, lambda)?, "rate_mixed"),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    pub rows: Vec<EstimateResult>,
    pub predicted: f64,
    pub functional: String,
    /// `|rate(T_min) - I(f)|`.
    pub first_gap: f64,
    /// `|rate(T_max) - I(f)|`.
    pub last_gap: f64,
}

impl RateCurve {
    /// The largest `T` lands closer to the prediction than the smallest.
    pub fn approaches_prediction(&self) -> bool {
        self.last_gap < self.first_gap
    }
}

/// Estimates the tube probability at each `T` of an increasing grid; point
/// `i` uses the master seed `rng.derive(i)`.
#[allow(clippy::too_many_arguments)]
pub fn empirical_rate_curve(
    f: &TargetPath,
    lambda: f64,
    kernel: &dyn ResetKernel,
    epsilon: f64,
    t_grid: &[f64],
    n_replicas: u64,
    method: Method,
    rng: &RngStream,
    sim: SimSettings,
    is_options: IsOptions,
) -> Result<RateCurve> {
    if t_grid.is_empty() {
        return Err(Error::InvalidParameter("empty T grid".into()));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("T grid must be increasing".into()));
    }
    let (predicted, functional) = predicted_rate(f, lambda, kernel)?;
    let tube = TubeSpec::new(f.clone(), epsilon)?;
    let mut rows = Vec::with_capacity(t_grid.len());
    for (i, &t) in t_grid.iter().enumerate() {
        let params = sim.params(lambda, t)?;
        let stream = rng.derive(i as u64);
        rows.push(match method {
            Method::Direct => direct_mc_estimate(&tube, &params, kernel, n_replicas, &stream)?,
            Method::Importance => is_estimate(&tube, &params, kernel, n_replicas, &stream, is_options)?,
        });
    }
    let gap = |r: &EstimateResult| (r.empirical_rate - predicted).abs();
    Ok(RateCurve {
        first_gap: gap(&rows[0]),
        last_gap: gap(rows.last().unwrap()),
        rows,
        predicted,
        functional: functional.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{deterministic_zero_kernel, uniform_kernel};

    #[test]
    fn predictions() {
        let f = TargetPath::linear(1.0).unwrap();
        assert_eq!(predicted_rate(&f, 1.0, &uniform_kernel()).unwrap(), (1.5, "rate_positive"));
        assert_eq!(predicted_rate(&f, 1.0, &deterministic_zero_kernel()).unwrap().0, 1.5);
        let tent = TargetPath::tent(0.5, 0.0).unwrap();
        assert_eq!(predicted_rate(&tent, 0.0, &deterministic_zero_kernel()).unwrap().0, 0.5);
        let cross = TargetPath::tent(0.5, -0.5).unwrap();
        assert_eq!(predicted_rate(&cross, 0.0, &uniform_kernel()).unwrap().1, "rate_mixed");
        assert_eq!(predicted_rate(&TargetPath::linear(-1.0).unwrap(), 0.0, &uniform_kernel()).unwrap().1, "rate_negative");
    }

    #[test]
    fn grid_validation() {
        let f = TargetPath::linear(1.0).unwrap();
        let k = uniform_kernel();
        let s = RngStream::new(1, 0);
        let run = |g: &[f64]| empirical_rate_curve(&f, 1.0, &k, 0.5, g, 10, Method::Direct, &s, SimSettings::default(), IsOptions::default());
        assert!(run(&[]).is_err());
        assert!(run(&[2.0, 1.0]).is_err());
    }
}
