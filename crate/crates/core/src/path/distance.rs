//! Sup metric and tube membership.

use serde::{Deserialize, Serialize};

use super::{PathError, TargetPath};

/// A càdlàg path on `[0, 1]` that is linear between its knots.
pub trait Trajectory {
    /// Knot times, strictly increasing, covering `0` and `1`.
    fn knot_times(&self) -> &[f64];

    /// `(left limit, value)` at `t`. The left limit at 0 is the value.
    fn limits_at(&self, t: f64) -> (f64, f64);
}

impl Trajectory for TargetPath {
    fn knot_times(&self) -> &[f64] {
        self.breakpoints()
    }

    fn limits_at(&self, t: f64) -> (f64, f64) {
        let v = self.eval(t);
        (v, v)
    }
}

/// The window `[start, 1]` on which distances are taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: f64,
}

impl Default for TimeWindow {
    fn default() -> Self {
        Self { start: 0.0 }
    }
}

impl TimeWindow {
    pub fn new(start: f64) -> Result<Self, PathError> {
        if !(0.0..1.0).contains(&start) {
            return Err(PathError::Invalid(format!("window start {start} not in [0, 1)")));
        }
        Ok(Self { start })
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t <= 1.0
    }
}

/// The open sup-norm tube of radius `epsilon` around `center`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeSpec {
    pub center: TargetPath,
    pub epsilon: f64,
    #[serde(default)]
    pub window: TimeWindow,
}

impl TubeSpec {
    pub fn new(center: TargetPath, epsilon: f64) -> Result<Self, PathError> {
        Self::with_window(center, epsilon, TimeWindow::default())
    }

    pub fn with_window(center: TargetPath, epsilon: f64, window: TimeWindow) -> Result<Self, PathError> {
        if !(epsilon > 0.0) || epsilon.is_nan() {
            return Err(PathError::Invalid(format!("epsilon must be positive, got {epsilon}")));
        }
        TimeWindow::new(window.start)?;
        Ok(Self { center, epsilon, window })
    }
}

/// `sup |f - g|` over the window, evaluated at the merged knots of both
/// arguments (both one-sided limits at every knot after the window start).
///
/// Exact when both arguments are linear between knots; for sampled paths this
/// is the grid value of the sup.
pub fn sup_distance<A, B>(f: &A, g: &B, window: TimeWindow) -> f64
where
    A: Trajectory + ?Sized,
    B: Trajectory + ?Sized,
{
    let a = window.start;
    let mut times: Vec<f64> = f
        .knot_times()
        .iter()
        .chain(g.knot_times())
        .copied()
        .filter(|&t| window.contains(t))
        .collect();
    times.push(a);
    times.sort_by(f64::total_cmp);
    times.dedup();

    let mut worst: f64 = 0.0;
    for &t in &times {
        let (fl, fr) = f.limits_at(t);
        let (gl, gr) = g.limits_at(t);
        worst = worst.max((fr - gr).abs());
        if t > a {
            worst = worst.max((fl - gl).abs());
        }
    }
    worst
}

pub fn in_tube<P: Trajectory + ?Sized>(path: &P, tube: &TubeSpec) -> bool {
    sup_distance(path, &tube.center, tube.window) < tube.epsilon
}
