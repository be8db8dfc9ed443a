//! Tube-probability estimation and the auxiliary experiments built on it.
//!
//! Both estimators decide tube membership at every knot of the simulated
//! path and treat the stretch between consecutive knots exactly: conditional
//! on its endpoints the path is a Brownian bridge, whose probability of
//! staying inside the tube has a closed form. The direct estimator draws a
//! Bernoulli decision from it; the importance estimator multiplies it into
//! the weight.

mod bound;
mod bridge;
mod curve;
mod direct;
mod importance;
mod runner;
mod stats;
mod sup_law;

use std::fmt;
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

pub use bound::{poisson_tail_bound, BoundCheck};
pub use bridge::bridge_stay_probability;
pub use curve::{empirical_rate_curve, predicted_rate, RateCurve};
pub use direct::direct_mc_estimate;
pub use importance::{is_estimate, IsMode, IsOptions};
pub use runner::with_workers;
pub use stats::{clopper_pearson, normal_quantile, quantile_sorted};
pub use sup_law::{sup_law_experiment, PhiChoice, SupLawRow};

use crate::path::{PathCursor, TubeSpec};
use crate::process::{Knot, ProcessParams};

/// Coverage of every reported interval.
pub const CONFIDENCE_LEVEL: f64 = 0.95;

/// Below this effective sample size an importance estimate is flagged.
pub const MIN_RELIABLE_ESS: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Direct,
    Importance,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Direct => "direct",
            Method::Importance => "importance",
        })
    }
}

/// One tube-probability estimate at a fixed `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub method: Method,
    pub is_mode: Option<IsMode>,
    #[serde(rename = "T")]
    pub t: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub kernel: String,
    pub n_replicas: u64,
    /// Replicas whose path stayed in the tube.
    pub hits: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `-ln(estimate) / T`; with no hits, `-ln(ci_high) / T` instead.
    pub empirical_rate: f64,
    pub rate_lo: f64,
    pub rate_hi: f64,
    /// `empirical_rate` is only a lower bound (no hits were observed).
    pub rate_is_lower_bound: bool,
    pub ess: Option<f64>,
    /// Effective sample size below [`MIN_RELIABLE_ESS`].
    pub unreliable: bool,
    pub seed: u64,
}

pub(crate) struct Meta {
    pub method: Method,
    pub is_mode: Option<IsMode>,
    pub t: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub kernel: String,
    pub seed: u64,
}

fn rate_of(p: f64, t: f64) -> f64 {
    rate_of_log(p.ln(), t)
}

fn rate_of_log(ln_p: f64, t: f64) -> f64 {
    let r = -ln_p / t;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

impl EstimateResult {
    pub(crate) fn from_hits(meta: Meta, hits: u64, n: u64) -> Self {
        let (ci_low, ci_high) = clopper_pearson(hits, n, CONFIDENCE_LEVEL);
        let estimate = hits as f64 / n as f64;
        let t = meta.t;
        let zero = hits == 0;
        Self {
            method: meta.method,
            is_mode: meta.is_mode,
            t,
            epsilon: meta.epsilon,
            lambda: meta.lambda,
            kernel: meta.kernel,
            n_replicas: n,
            hits,
            estimate,
            ci_low,
            ci_high,
            empirical_rate: if zero { rate_of(ci_high, t) } else { rate_of(estimate, t) },
            rate_lo: rate_of(ci_high, t),
            rate_hi: rate_of(ci_low, t),
            rate_is_lower_bound: zero,
            ess: None,
            unreliable: false,
            seed: meta.seed,
        }
    }

    /// `log_weights[i]` is `None` for a replica outside the tube. With no
    /// hits, `ci_high` is the zero-hit binomial bound scaled by the largest
    /// likelihood ratio seen (`max_log_lr`); this is a heuristic.
    pub(crate) fn from_log_weights(meta: Meta, log_weights: &[Option<f64>], max_log_lr: f64) -> Self {
        let n = log_weights.len() as u64;
        let nf = n as f64;
        let t = meta.t;
        let hit_w: Vec<f64> = log_weights.iter().flatten().copied().filter(|w| *w > f64::NEG_INFINITY).collect();
        let hits = hit_w.len() as u64;
        let base = Self {
            method: meta.method,
            is_mode: meta.is_mode,
            t,
            epsilon: meta.epsilon,
            lambda: meta.lambda,
            kernel: meta.kernel,
            n_replicas: n,
            hits,
            estimate: 0.0,
            ci_low: 0.0,
            ci_high: 0.0,
            empirical_rate: 0.0,
            rate_lo: 0.0,
            rate_hi: f64::INFINITY,
            rate_is_lower_bound: false,
            ess: Some(0.0),
            unreliable: true,
            seed: meta.seed,
        };
        if hits == 0 {
            let (_, cp_hi) = clopper_pearson(0, n, CONFIDENCE_LEVEL);
            let ci_high = (cp_hi.ln() + max_log_lr).exp().min(1.0);
            return Self {
                ci_high,
                empirical_rate: rate_of(ci_high, t),
                rate_lo: rate_of(ci_high, t),
                rate_is_lower_bound: true,
                ..base
            };
        }
        let m = hit_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (mut s1, mut s2) = (0.0, 0.0);
        for &w in &hit_w {
            let e = (w - m).exp();
            s1 += e;
            s2 += e * e;
        }
        let mean_shift = s1 / nf;
        let ln_est = m + mean_shift.ln();
        let var_shift = if n > 1 {
            ((s2 / nf - mean_shift * mean_shift) * nf / (nf - 1.0)).max(0.0)
        } else {
            0.0
        };
        let rel_se = (var_shift / nf).sqrt() / mean_shift;
        let z = normal_quantile(CONFIDENCE_LEVEL);
        let ess = s1 * s1 / s2;
        Self {
            estimate: ln_est.exp(),
            ci_low: (ln_est - z * rel_se).exp(),
            ci_high: (ln_est + z * rel_se).exp(),
            empirical_rate: rate_of_log(ln_est, t),
            rate_lo: rate_of_log(ln_est + z * rel_se, t),
            rate_hi: rate_of_log(ln_est - z * rel_se, t),
            ess: Some(ess),
            unreliable: ess < MIN_RELIABLE_ESS,
            ..base
        }
    }
}

/// Checks one path against a tube, knot by knot.
pub(crate) struct TubeMonitor<'a> {
    cursor: PathCursor<'a>,
    epsilon: f64,
    start: f64,
    inv_t: f64,
    /// Variance of the scaled path per unit of scaled time.
    var_rate: f64,
    prev: Option<(f64, f64)>,
}

impl<'a> TubeMonitor<'a> {
    pub(crate) fn new(tube: &'a TubeSpec, params: &ProcessParams) -> Self {
        Self {
            cursor: tube.center.cursor(),
            epsilon: tube.epsilon,
            start: tube.window.start,
            inv_t: 1.0 / params.horizon_t,
            var_rate: params.noise_scale * params.noise_scale / params.horizon_t,
            prev: None,
        }
    }

    /// `Break` if a knot value leaves the tube, otherwise the probability
    /// that the bridge ending at this knot stayed inside.
    #[inline]
    pub(crate) fn check(&mut self, k: &Knot) -> ControlFlow<(), f64> {
        if k.s < self.start {
            self.prev = None;
            return ControlFlow::Continue(1.0);
        }
        let f = self.cursor.eval(k.s);
        let yl = k.left * self.inv_t - f;
        let yr = k.right * self.inv_t - f;
        if yr.abs() >= self.epsilon || (k.s > self.start && yl.abs() >= self.epsilon) {
            return ControlFlow::Break(());
        }
        let stay = match self.prev {
            Some((s0, y0)) => bridge_stay_probability(y0, yl, self.epsilon, self.var_rate * (k.s - s0)),
            None => 1.0,
        };
        self.prev = Some((k.s, yr));
        ControlFlow::Continue(stay)
    }
}

/// Interior breakpoints of the center plus the window start, sorted.
pub(crate) fn tube_knots(tube: &TubeSpec) -> Vec<f64> {
    let mut extra: Vec<f64> = tube.center.breakpoints()[1..tube.center.segments()].to_vec();
    if tube.window.start > 0.0 {
        extra.push(tube.window.start);
    }
    extra.sort_by(f64::total_cmp);
    extra.dedup();
    extra
}
