//! Jordan decomposition and the rate functionals.
//!
//! With `f+` / `f-` the positive and negative variations of `f`:
//!
//! ```text
//! action(g)                = 1/2 ∫ g'(t)^2 dt
//! rate_positive(f)         = λ + action(f+)            f > 0 on (0, 1]
//! rate_negative(f)         = λ + action(f-)            f < 0 on (0, 1]
//! rate_mixed(f)            = λ + 1/2 ∫ (f+' 1{f>=0} + f-' 1{f<0})^2
//! rate_deterministic_reset = λ + action(f)             f one-signed
//! ```
//!
//! A terminal zero `f(1) = 0` is admitted by the one-signed functionals; the
//! functionals are continuous there and the tent fixtures end at zero.

use serde::{Deserialize, Serialize};

use super::{PathError, TargetPath};

/// Sign class of a target path on `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignPattern {
    Positive,
    Negative,
    /// Changes sign or touches zero in the interior.
    Mixed,
}

impl SignPattern {
    pub(crate) fn of(f: &TargetPath) -> Self {
        let v = f.values();
        let m = v.len() - 1;
        let interior = &v[1..m];
        let last = v[m];
        // Extrema of a piecewise-linear path sit at breakpoints.
        let one_signed = |pos: bool| {
            let strict = |x: f64| if pos { x > 0.0 } else { x < 0.0 };
            interior.iter().all(|&x| strict(x)) && (strict(last) || (last == 0.0 && m >= 2))
        };
        if one_signed(true) {
            SignPattern::Positive
        } else if one_signed(false) {
            SignPattern::Negative
        } else {
            SignPattern::Mixed
        }
    }
}

/// Positive and negative variations, `f = f_plus - f_minus`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationPair {
    pub f_plus: TargetPath,
    pub f_minus: TargetPath,
}

impl VariationPair {
    /// `V(f_plus) + V(f_minus)`; both parts are nondecreasing from 0.
    pub fn total_variation(&self) -> f64 {
        self.f_plus.values().last().unwrap() + self.f_minus.values().last().unwrap()
    }
}

pub fn jordan_decompose(f: &TargetPath) -> VariationPair {
    let v = f.values();
    let mut plus = Vec::with_capacity(v.len());
    let mut minus = Vec::with_capacity(v.len());
    let (mut p, mut m) = (0.0, 0.0);
    plus.push(0.0);
    minus.push(0.0);
    for w in v.windows(2) {
        let inc = w[1] - w[0];
        if inc > 0.0 {
            p += inc;
        } else {
            m -= inc;
        }
        plus.push(p);
        minus.push(m);
    }
    let t = f.breakpoints().to_vec();
    VariationPair {
        f_plus: TargetPath::new(t.clone(), plus).expect("variation of a valid path"),
        f_minus: TargetPath::new(t, minus).expect("variation of a valid path"),
    }
}

/// `1/2 ∫ g'^2`, exact for piecewise-linear `g`.
///
/// Paths that are not absolutely continuous (where the action is infinite)
/// cannot be represented by [`TargetPath`].
pub fn action_integral(g: &TargetPath) -> f64 {
    let t = g.breakpoints();
    let sum: f64 = (0..g.segments())
        .map(|i| {
            let s = g.slope(i);
            s * s * (t[i + 1] - t[i])
        })
        .sum();
    0.5 * sum
}

fn require(
    f: &TargetPath,
    functional: &'static str,
    ok: impl Fn(SignPattern) -> bool,
    expected: &str,
) -> Result<(), PathError> {
    let pattern = f.sign_pattern();
    if ok(pattern) {
        Ok(())
    } else {
        Err(PathError::Domain {
            functional,
            reason: format!("expected a path {expected} on (0,1], found {pattern:?}"),
        })
    }
}

pub fn rate_positive(f: &TargetPath, lambda: f64) -> Result<f64, PathError> {
    require(f, "rate_positive", |p| p == SignPattern::Positive, "strictly positive")?;
    Ok(lambda + action_integral(&jordan_decompose(f).f_plus))
}

pub fn rate_negative(f: &TargetPath, lambda: f64) -> Result<f64, PathError> {
    require(f, "rate_negative", |p| p == SignPattern::Negative, "strictly negative")?;
    Ok(lambda + action_integral(&jordan_decompose(f).f_minus))
}

/// Rate for paths vanishing at finitely many points. Zeros count toward the
/// nonnegative branch; segments are split exactly at zero crossings.
pub fn rate_mixed(f: &TargetPath, lambda: f64) -> Result<f64, PathError> {
    let t = f.breakpoints();
    let v = f.values();
    let mut sum = 0.0;
    for i in 0..f.segments() {
        let (a, b) = (v[i], v[i + 1]);
        if a == 0.0 && b == 0.0 {
            return Err(PathError::Domain {
                functional: "rate_mixed",
                reason: format!("path vanishes on [{}, {}]", t[i], t[i + 1]),
            });
        }
        let dt = t[i + 1] - t[i];
        let s = f.slope(i);
        let up = s.max(0.0);
        let down = (-s).max(0.0);
        // Measure of {f >= 0} within the segment.
        let nonneg = if a >= 0.0 && b >= 0.0 {
            dt
        } else if a <= 0.0 && b <= 0.0 {
            0.0
        } else if a > 0.0 {
            dt * a / (a - b)
        } else {
            dt * b / (b - a)
        };
        let neg = dt - nonneg;
        sum += up * up * nonneg + down * down * neg;
    }
    Ok(lambda + 0.5 * sum)
}

pub fn rate_deterministic_reset(f: &TargetPath, lambda: f64) -> Result<f64, PathError> {
    require(
        f,
        "rate_deterministic_reset",
        |p| p != SignPattern::Mixed,
        "strictly positive or strictly negative",
    )?;
    Ok(lambda + action_integral(f))
}
