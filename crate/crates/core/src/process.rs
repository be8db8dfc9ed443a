//! Exact-event-time simulation of the resetting process.
//!
//! The process moves as a standard Wiener process and, at the arrivals of a
//! Poisson process of rate `λ`, drops by a reset amount `ζ(n, x)` drawn from a
//! [`ResetKernel`], where `n` counts earlier resets and `x` is the pre-reset
//! value. Paths are reported in scaled form `ξ_T(s) = ξ(Ts) / T`, `s ∈ [0, 1]`.
//!
//! Knots are the union of a uniform observation grid and the arrival times.
//! Between knots the Wiener increments are drawn exactly, so the dynamics have
//! no discretization bias; only what is observed between knots is limited.

use std::ops::ControlFlow;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::kernels::{check_support, KernelError, ResetKernel};
use crate::path::Trajectory;
use crate::rng::{RngStream, StreamRng};
use crate::{Error, Result};

pub const DEFAULT_GRID_POINTS: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessParams {
    pub lambda: f64,
    pub horizon_t: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Multiplier on the Wiener increments: 1 for the model itself, 0 for
    /// degenerate checks.
    #[serde(default = "one")]
    pub noise_scale: f64,
}

fn default_grid_points() -> usize {
    DEFAULT_GRID_POINTS
}

fn one() -> f64 {
    1.0
}

impl ProcessParams {
    pub fn new(lambda: f64, horizon_t: f64) -> Result<Self> {
        let p = Self {
            lambda,
            horizon_t,
            grid_points: DEFAULT_GRID_POINTS,
            noise_scale: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_grid_points(mut self, grid_points: usize) -> Result<Self> {
        self.grid_points = grid_points;
        self.validate()?;
        Ok(self)
    }

    pub fn with_noise_scale(mut self, noise_scale: f64) -> Result<Self> {
        self.noise_scale = noise_scale;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return bad(format!("lambda must be finite and >= 0, got {}", self.lambda));
        }
        if !(self.horizon_t > 0.0) || !self.horizon_t.is_finite() {
            return bad(format!("T must be finite and > 0, got {}", self.horizon_t));
        }
        if self.grid_points < 2 {
            return bad(format!("grid_points must be >= 2, got {}", self.grid_points));
        }
        if !(self.noise_scale >= 0.0) || !self.noise_scale.is_finite() {
            return bad(format!("noise_scale must be finite and >= 0, got {}", self.noise_scale));
        }
        Ok(())
    }

    /// Grid point `j` in scaled time.
    fn grid_time(&self, j: usize) -> f64 {
        if j + 1 == self.grid_points {
            1.0
        } else {
            j as f64 / (self.grid_points - 1) as f64
        }
    }
}

/// Simulation knobs shared by every `T` of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSettings {
    pub grid_points: usize,
    pub noise_scale: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            grid_points: DEFAULT_GRID_POINTS,
            noise_scale: 1.0,
        }
    }
}

impl SimSettings {
    pub fn params(&self, lambda: f64, horizon_t: f64) -> Result<ProcessParams> {
        let p = ProcessParams {
            lambda,
            horizon_t,
            grid_points: self.grid_points,
            noise_scale: self.noise_scale,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResetMark {
    /// Index into [`SamplePath::times`].
    pub index: usize,
    pub pre: f64,
    pub post: f64,
    pub ordinal: u64,
}

/// A simulated scaled path. `values` are right limits; the left limit at a
/// reset is kept in its mark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub reset_marks: Vec<ResetMark>,
}

impl SamplePath {
    fn mark_at(&self, index: usize) -> Option<&ResetMark> {
        self.reset_marks
            .binary_search_by_key(&index, |m| m.index)
            .ok()
            .map(|i| &self.reset_marks[i])
    }

    fn left_at(&self, index: usize) -> f64 {
        self.mark_at(index).map_or(self.values[index], |m| m.pre)
    }
}

impl Trajectory for SamplePath {
    fn knot_times(&self) -> &[f64] {
        &self.times
    }

    fn limits_at(&self, t: f64) -> (f64, f64) {
        let i = self.times.partition_point(|&s| s < t);
        if i == self.times.len() {
            let v = *self.values.last().unwrap();
            return (v, v);
        }
        if self.times[i] == t {
            return (self.left_at(i), self.values[i]);
        }
        if i == 0 {
            return (self.values[0], self.values[0]);
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let w = (t - t0) / (t1 - t0);
        let v = self.values[i - 1] + w * (self.left_at(i) - self.values[i - 1]);
        (v, v)
    }
}

pub(crate) fn draw_event_times(params: &ProcessParams, rng: &mut StreamRng) -> Vec<f64> {
    let mut out = Vec::new();
    if params.lambda == 0.0 {
        return out;
    }
    let t_max = params.horizon_t;
    let mut t = 0.0;
    loop {
        let e: f64 = rng.sample(Exp1);
        t += e / params.lambda;
        if t >= t_max {
            break;
        }
        let s = t / t_max;
        if s >= 1.0 {
            break;
        }
        if s > 0.0 && out.last().is_none_or(|&p| s > p) {
            out.push(s);
        }
    }
    out
}

/// Scaled Poisson arrival times in `(0, 1)`.
pub fn sample_event_times(params: &ProcessParams, rng: &RngStream) -> Result<Vec<f64>> {
    params.validate()?;
    Ok(draw_event_times(params, &mut rng.rng()))
}

/// The observation grid merged with the sorted times in `extra`.
pub(crate) fn base_times(params: &ProcessParams, extra: &[f64]) -> Vec<f64> {
    let gp = params.grid_points;
    let mut out = Vec::with_capacity(gp + extra.len());
    let mut e = 0;
    for j in 0..gp {
        let s = params.grid_time(j);
        while e < extra.len() && extra[e] <= s {
            if extra[e] < s && out.last().is_none_or(|&p| extra[e] > p) {
                out.push(extra[e]);
            }
            e += 1;
        }
        out.push(s);
    }
    out
}

/// State at a knot, in physical units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Knot {
    pub index: usize,
    pub s: f64,
    /// Value just before the knot.
    pub left: f64,
    /// Value at the knot (after any reset).
    pub right: f64,
    pub reset: Option<u64>,
}

/// Callbacks steering one path through [`run_path`].
pub(crate) trait Driver {
    /// Physical drift on `[s0, s1)` from value `x`; the default is the model.
    fn drift(&mut self, _s0: f64, _s1: f64, _x: f64) -> f64 {
        0.0
    }

    /// Observes the step `x1 = x0 + mu dt + noise sqrt(dt) z`.
    fn step(&mut self, _dt: f64, _mu: f64, _z: f64) {}

    /// Reset amount for a jump at `s` from `x`; `None` stops the path.
    fn reset(
        &mut self,
        ordinal: u64,
        s: f64,
        x: f64,
        rng: &mut StreamRng,
    ) -> std::result::Result<Option<f64>, KernelError>;

    fn visit(&mut self, knot: &Knot) -> ControlFlow<()>;
}

/// Draws the path over `base` merged with `arrivals` (both sorted, `base`
/// running from 0 to 1). Returns `false` when the driver stopped it.
pub(crate) fn run_path<D: Driver>(
    params: &ProcessParams,
    base: &[f64],
    arrivals: &[f64],
    rng: &mut StreamRng,
    driver: &mut D,
) -> Result<bool> {
    let t_max = params.horizon_t;
    let noise = params.noise_scale;
    let mut x = 0.0;
    let mut ordinal = 0u64;
    let mut s0 = base[0];
    let first = Knot {
        index: 0,
        s: s0,
        left: 0.0,
        right: 0.0,
        reset: None,
    };
    if driver.visit(&first).is_break() {
        return Ok(false);
    }
    let (mut b, mut a) = (1usize, 0usize);
    let mut index = 0usize;
    let (mut last_dt, mut last_sqrt) = (f64::NAN, f64::NAN);
    while b < base.len() {
        let sb = base[b];
        let (s1, arrival) = match arrivals.get(a) {
            Some(&sa) if sa <= sb => {
                a += 1;
                if sa == sb {
                    b += 1;
                }
                (sa, true)
            }
            _ => {
                b += 1;
                (sb, false)
            }
        };
        index += 1;
        let dt = t_max * (s1 - s0);
        if dt != last_dt {
            last_dt = dt;
            last_sqrt = dt.sqrt();
        }
        let mu = driver.drift(s0, s1, x);
        let z: f64 = rng.sample(StandardNormal);
        driver.step(dt, mu, z);
        x += mu * dt + noise * last_sqrt * z;
        let left = x;
        let mut reset = None;
        if arrival {
            match driver.reset(ordinal, s1, x, rng).map_err(Error::from)? {
                Some(zeta) => x -= zeta,
                None => return Ok(false),
            }
            reset = Some(ordinal);
            ordinal += 1;
        }
        let knot = Knot {
            index,
            s: s1,
            left,
            right: x,
            reset,
        };
        if driver.visit(&knot).is_break() {
            return Ok(false);
        }
        s0 = s1;
    }
    Ok(true)
}

/// Draws a reset amount from the kernel and checks it against the support.
pub(crate) fn kernel_reset(
    kernel: &dyn ResetKernel,
    ordinal: u64,
    x: f64,
    rng: &mut StreamRng,
) -> std::result::Result<f64, KernelError> {
    let zeta = kernel.sample(ordinal, x, rng)?;
    check_support(ordinal, x, zeta)
}

struct Recorder<'k> {
    kernel: &'k dyn ResetKernel,
    inv_t: f64,
    path: SamplePath,
}

impl Driver for Recorder<'_> {
    fn reset(
        &mut self,
        ordinal: u64,
        _s: f64,
        x: f64,
        rng: &mut StreamRng,
    ) -> std::result::Result<Option<f64>, KernelError> {
        kernel_reset(self.kernel, ordinal, x, rng).map(Some)
    }

    fn visit(&mut self, k: &Knot) -> ControlFlow<()> {
        self.path.times.push(k.s);
        self.path.values.push(k.right * self.inv_t);
        if let Some(ordinal) = k.reset {
            self.path.reset_marks.push(ResetMark {
                index: k.index,
                pre: k.left * self.inv_t,
                post: k.right * self.inv_t,
                ordinal,
            });
        }
        ControlFlow::Continue(())
    }
}

pub fn simulate_path(params: &ProcessParams, kernel: &dyn ResetKernel, rng: &RngStream) -> Result<SamplePath> {
    params.validate()?;
    let mut r = rng.rng();
    let arrivals = draw_event_times(params, &mut r);
    let base = base_times(params, &[]);
    let mut rec = Recorder {
        kernel,
        inv_t: 1.0 / params.horizon_t,
        path: SamplePath {
            times: Vec::with_capacity(base.len() + arrivals.len()),
            values: Vec::with_capacity(base.len() + arrivals.len()),
            reset_marks: Vec::with_capacity(arrivals.len()),
        },
    };
    run_path(params, &base, &arrivals, &mut r, &mut rec)?;
    Ok(rec.path)
}

struct SupTracker<'k> {
    kernel: &'k dyn ResetKernel,
    sup: f64,
}

impl Driver for SupTracker<'_> {
    fn reset(
        &mut self,
        ordinal: u64,
        _s: f64,
        x: f64,
        rng: &mut StreamRng,
    ) -> std::result::Result<Option<f64>, KernelError> {
        kernel_reset(self.kernel, ordinal, x, rng).map(Some)
    }

    fn visit(&mut self, k: &Knot) -> ControlFlow<()> {
        self.sup = self.sup.max(k.left.abs()).max(k.right.abs());
        ControlFlow::Continue(())
    }
}

pub(crate) fn sup_statistic_with(
    params: &ProcessParams,
    kernel: &dyn ResetKernel,
    phi_of_t: f64,
    rng: &RngStream,
    base: &[f64],
) -> Result<f64> {
    let mut r = rng.rng();
    let arrivals = draw_event_times(params, &mut r);
    let mut tr = SupTracker { kernel, sup: 0.0 };
    run_path(params, base, &arrivals, &mut r, &mut tr)?;
    Ok(tr.sup / (params.horizon_t.sqrt() * phi_of_t))
}

/// `sup |ξ(Ts)| / (√T φ(T))` over the knots of one path.
pub fn sup_statistic(params: &ProcessParams, kernel: &dyn ResetKernel, phi_of_t: f64, rng: &RngStream) -> Result<f64> {
    params.validate()?;
    if !(phi_of_t > 0.0) || !phi_of_t.is_finite() {
        return Err(Error::InvalidParameter(format!("phi(T) must be positive, got {phi_of_t}")));
    }
    sup_statistic_with(params, kernel, phi_of_t, rng, &base_times(params, &[]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{deterministic_zero_kernel, uniform_kernel};

    fn params(lambda: f64, t: f64) -> ProcessParams {
        ProcessParams::new(lambda, t).unwrap()
    }

    #[test]
    fn validation() {
        assert!(ProcessParams::new(-1.0, 1.0).is_err());
        assert!(ProcessParams::new(1.0, 0.0).is_err());
        assert!(ProcessParams::new(0.0, 1.0).unwrap().with_grid_points(1).is_err());
        assert!(ProcessParams::new(0.0, 1.0).unwrap().with_noise_scale(-1.0).is_err());
    }

    #[test]
    fn no_arrivals_at_rate_zero() {
        let p = params(0.0, 1e4);
        for i in 0..10 {
            assert!(sample_event_times(&p, &RngStream::new(1, i)).unwrap().is_empty());
        }
    }

    #[test]
    fn knots_merge_grid_extra_and_arrivals() {
        struct Log(Vec<(f64, bool)>);
        impl Driver for Log {
            fn reset(&mut self, _: u64, _: f64, _: f64, _: &mut StreamRng) -> std::result::Result<Option<f64>, KernelError> {
                Ok(Some(0.0))
            }
            fn visit(&mut self, k: &Knot) -> ControlFlow<()> {
                assert_eq!(k.index, self.0.len());
                self.0.push((k.s, k.reset.is_some()));
                ControlFlow::Continue(())
            }
        }
        let p = params(1.0, 1.0).with_grid_points(5).unwrap();
        let base = base_times(&p, &[0.3, 0.5, 0.6]);
        assert_eq!(base, vec![0.0, 0.25, 0.3, 0.5, 0.6, 0.75, 1.0]);
        let mut log = Log(Vec::new());
        let mut rng = RngStream::new(1, 1).rng();
        assert!(run_path(&p, &base, &[0.1, 0.5, 0.6], &mut rng, &mut log).unwrap());
        let s: Vec<f64> = log.0.iter().map(|k| k.0).collect();
        assert_eq!(s, vec![0.0, 0.1, 0.25, 0.3, 0.5, 0.6, 0.75, 1.0]);
        let flagged: Vec<f64> = log.0.iter().filter(|k| k.1).map(|k| k.0).collect();
        assert_eq!(flagged, vec![0.1, 0.5, 0.6]);
    }

    #[test]
    fn path_structure() {
        let p = params(3.0, 5.0).with_grid_points(64).unwrap();
        let k = uniform_kernel();
        let path = simulate_path(&p, &k, &RngStream::new(11, 2)).unwrap();
        assert_eq!(path.times[0], 0.0);
        assert_eq!(*path.times.last().unwrap(), 1.0);
        assert_eq!(path.values[0], 0.0);
        assert!(path.times.windows(2).all(|w| w[1] > w[0]));
        let arrivals = sample_event_times(&p, &RngStream::new(11, 2)).unwrap();
        assert_eq!(path.reset_marks.len(), arrivals.len());
        for (j, m) in path.reset_marks.iter().enumerate() {
            assert_eq!(m.ordinal, j as u64);
            assert_eq!(path.times[m.index], arrivals[j]);
            assert_eq!(path.values[m.index], m.post);
        }
    }

    #[test]
    fn deterministic_kernel_returns_to_zero() {
        let p = params(4.0, 3.0).with_grid_points(32).unwrap();
        let k = deterministic_zero_kernel();
        let mut seen = 0;
        for i in 0..20 {
            let path = simulate_path(&p, &k, &RngStream::new(5, i)).unwrap();
            for m in &path.reset_marks {
                assert_eq!(m.post, 0.0);
                seen += 1;
            }
        }
        assert!(seen > 100);
    }

    #[test]
    fn reproducible() {
        let p = params(1.0, 7.0);
        let k = uniform_kernel();
        let a = simulate_path(&p, &k, &RngStream::new(3, 9)).unwrap();
        let b = simulate_path(&p, &k, &RngStream::new(3, 9)).unwrap();
        assert_eq!(a, b);
        let c = simulate_path(&p, &k, &RngStream::new(3, 10)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn trajectory_limits() {
        let path = SamplePath {
            times: vec![0.0, 0.5, 1.0],
            values: vec![0.0, 0.1, 0.3],
            reset_marks: vec![ResetMark {
                index: 1,
                pre: 0.4,
                post: 0.1,
                ordinal: 0,
            }],
        };
        assert_eq!(path.limits_at(0.5), (0.4, 0.1));
        assert_eq!(path.limits_at(0.25), (0.2, 0.2));
        assert_eq!(path.limits_at(0.75), (0.2, 0.2));
        assert_eq!(path.limits_at(1.0), (0.3, 0.3));
    }

    #[test]
    fn zero_noise_statistic_vanishes() {
        let p = params(0.0, 100.0).with_noise_scale(0.0).unwrap();
        let k = uniform_kernel();
        assert_eq!(sup_statistic(&p, &k, 100f64.ln(), &RngStream::new(1, 1)).unwrap(), 0.0);
        assert!(sup_statistic(&p, &k, 0.0, &RngStream::new(1, 1)).is_err());
    }
}
