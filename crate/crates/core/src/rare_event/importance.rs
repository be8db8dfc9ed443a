//! Importance sampling for tubes around positive paths.
//!
//! Proposal: the Wiener part gets the drift `f+'` (the slope of the positive
//! variation, piecewise constant in time), optionally plus a confining drift
//! toward the tube center; the resets are suppressed according to
//! [`IsMode`]. Each replica's weight is the likelihood ratio of the model
//! against the proposal on the skeleton, times the bridge survival
//! probabilities, times the indicator that every knot lies in the tube.

use std::f64::consts::FRAC_PI_2;
use std::ops::ControlFlow;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{runner::map_replicas, tube_knots, EstimateResult, Meta, Method, TubeMonitor};
use crate::kernels::{KernelError, ResetKernel, SupportKind};
use crate::path::{staircase_schedule, PathCursor, SignPattern, StaircaseSchedule, TargetPath, TubeSpec};
use crate::process::{base_times, draw_event_times, kernel_reset, run_path, Driver, Knot, ProcessParams};
use crate::rng::{RngStream, StreamRng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IsMode {
    /// Resets keep rate `λ` where the center is within `ε` of the origin
    /// (or before the window starts) and are thinned to `min(λ, 1/T)`
    /// elsewhere. Unbiased for the tube probability.
    #[default]
    Thinned,
    /// No resets at all; estimates `P(tube, no resets on [0, T])`.
    NoJump,
    /// No reset on `[0, t_1]`, one on each `[t_{k-1}, t_k]` with its amount
    /// drawn from the schedule window. Estimates the probability of the
    /// tube jointly with that jump layout.
    Staircase,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsOptions {
    pub mode: IsMode,
    /// Adds the drift of a Brownian motion conditioned to stay in the tube.
    pub confine: bool,
}

impl Default for IsOptions {
    fn default() -> Self {
        Self {
            mode: IsMode::Thinned,
            confine: true,
        }
    }
}

/// Reset intensity of the thinned proposal relative to the model.
struct Thinning {
    lambda: f64,
    low: f64,
    epsilon: f64,
    start: f64,
    /// `T ∫ (λ - λ_q)`.
    deficit: f64,
}

impl Thinning {
    fn new(tube: &TubeSpec, params: &ProcessParams) -> Self {
        let lambda = params.lambda;
        let low = lambda.min(1.0 / params.horizon_t);
        let start = tube.window.start;
        let eps = tube.epsilon;
        let f = &tube.center;
        let (t, v) = (f.breakpoints(), f.values());
        // Measure of {s >= start : |f(s)| > eps}.
        let mut far = 0.0;
        for i in 0..f.segments() {
            let (a, b) = (t[i].max(start), t[i + 1]);
            if b <= a {
                continue;
            }
            let (va, vb) = (f.eval(a), v[i + 1]);
            let (lo, hi) = (va.min(vb), va.max(vb));
            let frac = if hi == lo {
                if hi.abs() > eps {
                    1.0
                } else {
                    0.0
                }
            } else {
                let above = ((hi - eps) / (hi - lo)).clamp(0.0, 1.0);
                let below = ((-eps - lo) / (hi - lo)).clamp(0.0, 1.0);
                above + below
            };
            far += frac * (b - a);
        }
        Self {
            lambda,
            low,
            epsilon: eps,
            start,
            deficit: params.horizon_t * (lambda - low) * far,
        }
    }

    fn rate(&self, s: f64, f_s: f64) -> f64 {
        if s < self.start || f_s.abs() <= self.epsilon {
            self.lambda
        } else {
            self.low
        }
    }
}

struct IsDriver<'a> {
    kernel: &'a dyn ResetKernel,
    monitor: TubeMonitor<'a>,
    center: &'a TargetPath,
    drift_cursor: PathCursor<'a>,
    confine: Option<f64>,
    start: f64,
    horizon: f64,
    noise: f64,
    staircase: Option<(f64, f64)>,
    log_w: f64,
}

impl Driver for IsDriver<'_> {
    fn drift(&mut self, s0: f64, s1: f64, x: f64) -> f64 {
        let seg = self.drift_cursor.segment_between(s0, s1);
        let mut mu = self.center.slope(seg).max(0.0);
        if let (Some(half), true) = (self.confine, s0 >= self.start) {
            let y = x - self.horizon * self.drift_cursor.eval(s0);
            let r = (y / half).clamp(-0.999, 0.999);
            let h = -(FRAC_PI_2 / half) * (FRAC_PI_2 * r).tan();
            let cap = 0.5 * half / (self.horizon * (s1 - s0));
            mu += h.clamp(-cap, cap);
        }
        mu
    }

    fn step(&mut self, dt: f64, mu: f64, z: f64) {
        let m = mu / self.noise;
        self.log_w -= m * dt.sqrt() * z + 0.5 * m * m * dt;
    }

    fn reset(&mut self, ordinal: u64, _s: f64, x: f64, rng: &mut StreamRng) -> std::result::Result<Option<f64>, KernelError> {
        let Some((lo, hi)) = self.staircase else {
            return kernel_reset(self.kernel, ordinal, x, rng).map(Some);
        };
        let (a, b) = (lo.max(x.min(0.0)), hi.min(x.max(0.0)));
        if !(b > a) {
            return Ok(None);
        }
        let u: f64 = rng.random();
        let zeta = a + u * (b - a);
        let p = self.kernel.density(ordinal, x, zeta)?;
        if !(p > 0.0) {
            return Ok(None);
        }
        self.log_w += (p * (b - a)).ln();
        Ok(Some(zeta))
    }

    fn visit(&mut self, k: &Knot) -> ControlFlow<()> {
        let stay = self.monitor.check(k)?;
        if stay <= 0.0 {
            return ControlFlow::Break(());
        }
        if stay < 1.0 {
            self.log_w += stay.ln();
        }
        ControlFlow::Continue(())
    }
}

struct Plan<'a> {
    tube: &'a TubeSpec,
    params: &'a ProcessParams,
    kernel: &'a dyn ResetKernel,
    options: IsOptions,
    base: Vec<f64>,
    thinning: Thinning,
    schedule: Option<StaircaseSchedule>,
}

impl Plan<'_> {
    /// Proposal arrivals and their log-likelihood ratio.
    fn arrivals(&self, rng: &mut StreamRng) -> (Vec<f64>, f64) {
        let lambda = self.params.lambda;
        let horizon = self.params.horizon_t;
        match (self.options.mode, &self.schedule) {
            (IsMode::NoJump, _) => (Vec::new(), -lambda * horizon),
            (IsMode::Staircase, Some(s)) if !s.is_empty() => {
                let mut out = Vec::with_capacity(s.n_eps - 1);
                let mut lw = -lambda * horizon;
                for w in s.knots[1..].windows(2) {
                    let u: f64 = rng.random();
                    out.push(w[0] + u * (w[1] - w[0]));
                    lw += (lambda * horizon * (w[1] - w[0])).ln();
                }
                (out, lw)
            }
            (IsMode::Staircase, _) => (Vec::new(), -lambda * horizon),
            (IsMode::Thinned, _) => {
                let th = &self.thinning;
                let mut lw = -th.deficit;
                let mut kept = Vec::new();
                for s in draw_event_times(self.params, rng) {
                    let q = th.rate(s, self.tube.center.eval(s));
                    let u: f64 = rng.random();
                    if u * lambda < q {
                        lw += (lambda / q).ln();
                        kept.push(s);
                    }
                }
                (kept, lw)
            }
        }
    }

    /// Log weight of one replica (`None` outside the tube) and the log
    /// likelihood ratio accumulated before it stopped.
    fn replica(&self, stream: RngStream) -> Result<(Option<f64>, f64)> {
        let mut rng = stream.rng();
        let (arrivals, lw0) = self.arrivals(&mut rng);
        let staircase = match (&self.schedule, self.options.mode) {
            (Some(s), IsMode::Staircase) if !s.is_empty() => {
                let (lo, hi) = s.jump_windows[0];
                Some((lo * self.params.horizon_t, hi * self.params.horizon_t))
            }
            _ => None,
        };
        let mut d = IsDriver {
            kernel: self.kernel,
            monitor: TubeMonitor::new(self.tube, self.params),
            center: &self.tube.center,
            drift_cursor: self.tube.center.cursor(),
            confine: self.options.confine.then_some(self.tube.epsilon * self.params.horizon_t),
            start: self.tube.window.start,
            horizon: self.params.horizon_t,
            noise: self.params.noise_scale,
            staircase,
            log_w: lw0,
        };
        let done = run_path(self.params, &self.base, &arrivals, &mut rng, &mut d)?;
        let hit = done && d.log_w > f64::NEG_INFINITY;
        Ok((hit.then_some(d.log_w), d.log_w))
    }
}

/// Importance-sampling estimate of the probability of a tube whose center
/// is positive on `(0, 1]`.
pub fn is_estimate(
    tube: &TubeSpec,
    params: &ProcessParams,
    kernel: &dyn ResetKernel,
    n_replicas: u64,
    rng: &RngStream,
    options: IsOptions,
) -> Result<EstimateResult> {
    params.validate()?;
    if n_replicas == 0 {
        return Err(Error::InvalidParameter("n_replicas must be positive".into()));
    }
    if tube.center.sign_pattern() != SignPattern::Positive {
        return Err(Error::InvalidParameter(
            "importance sampling needs a tube center positive on (0,1]".into(),
        ));
    }
    if !(params.noise_scale > 0.0) {
        return Err(Error::InvalidParameter("importance sampling needs noise_scale > 0".into()));
    }
    let schedule = match options.mode {
        IsMode::Staircase => {
            if kernel.support_kind() == SupportKind::Deterministic {
                return Err(KernelError::NoDensity.into());
            }
            Some(staircase_schedule(&tube.center, tube.epsilon)?)
        }
        _ => None,
    };
    let plan = Plan {
        tube,
        params,
        kernel,
        options,
        base: base_times(params, &tube_knots(tube)),
        thinning: Thinning::new(tube, params),
        schedule,
    };
    let out = map_replicas(n_replicas, || (), |_, i| plan.replica(rng.with_index(i)))?;
    let max_lr = out.iter().map(|o| o.1).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<Option<f64>> = out.into_iter().map(|o| o.0).collect();
    let meta = Meta {
        method: Method::Importance,
        is_mode: Some(options.mode),
        t: params.horizon_t,
        epsilon: tube.epsilon,
        lambda: params.lambda,
        kernel: kernel.label(),
        seed: rng.master_seed,
    };
    Ok(EstimateResult::from_log_weights(meta, &weights, max_lr))
}
