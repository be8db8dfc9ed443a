//! Jump schedule for following the decreasing part of a positive path.
//!
//! The drop `M = f+(1) - f(1)` is split into `n` equal steps with
//! `M/n <= ε/8`. The process makes no jump on `[0, t_1]` and exactly one jump
//! on each `[t_{k-1}, t_k]`, `k = 2..n`, where `f-(t_k) = kM/n`. Each jump
//! takes a reset amount in the window `T·(M/n - 2ε³, M/n - ε³)`.

use serde::{Deserialize, Serialize};

use super::{jordan_decompose, PathError, SignPattern, TargetPath};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaircaseSchedule {
    pub n_eps: usize,
    /// `M = f+(1) - f(1)`.
    pub drop: f64,
    /// `t_0 = 0 < t_1 < ... < t_n = 1`.
    pub knots: Vec<f64>,
    /// Reset-amount windows per jump as multiples of `T`; `n_eps - 1` entries.
    pub jump_windows: Vec<(f64, f64)>,
}

impl StaircaseSchedule {
    /// No jumps are scheduled (the path is nondecreasing).
    pub fn is_empty(&self) -> bool {
        self.jump_windows.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.drop / self.n_eps as f64
    }
}

/// Smallest `n` with `m / n <= eps / 8`.
fn min_steps(m: f64, eps: f64) -> usize {
    let target = eps / 8.0;
    let mut n = (m / target).ceil().max(1.0) as usize;
    while n > 1 && m / (n - 1) as f64 <= target {
        n -= 1;
    }
    while m / n as f64 > target {
        n += 1;
    }
    n
}

/// Leftmost `t` with `g(t) = level` for nondecreasing piecewise-linear `g`.
fn leftmost_level(g: &TargetPath, level: f64) -> f64 {
    let (t, v) = (g.breakpoints(), g.values());
    let j = v.partition_point(|&x| x < level);
    if j == 0 {
        return t[0];
    }
    if j == v.len() {
        return t[j - 1];
    }
    if v[j] == level {
        return t[j];
    }
    let w = (level - v[j - 1]) / (v[j] - v[j - 1]);
    t[j - 1] + w * (t[j] - t[j - 1])
}

pub fn staircase_schedule(f: &TargetPath, epsilon: f64) -> Result<StaircaseSchedule, PathError> {
    if !(epsilon > 0.0) {
        return Err(PathError::Invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    if f.sign_pattern() != SignPattern::Positive {
        return Err(PathError::Domain {
            functional: "staircase_schedule",
            reason: "expected a strictly positive path on (0,1]".into(),
        });
    }
    let minus = jordan_decompose(f).f_minus;
    let m = *minus.values().last().unwrap();
    if m == 0.0 {
        return Ok(StaircaseSchedule {
            n_eps: 1,
            drop: 0.0,
            knots: vec![0.0, 1.0],
            jump_windows: Vec::new(),
        });
    }
    let n = min_steps(m, epsilon);
    let step = m / n as f64;
    let mut knots = Vec::with_capacity(n + 1);
    knots.push(0.0);
    for k in 1..n {
        knots.push(leftmost_level(&minus, k as f64 * step));
    }
    knots.push(1.0);
    let e3 = epsilon.powi(3);
    Ok(StaircaseSchedule {
        n_eps: n,
        drop: m,
        knots,
        jump_windows: vec![(step - 2.0 * e3, step - e3); n - 1],
    })
}
