//! Reset kernels.
//!
//! A kernel describes the random reset amount `zeta(n, x)` subtracted from the
//! process at the `n`-th Poisson arrival when the pre-reset value is `x`
//! (physical scale). Admissible kernels keep the post-reset value between 0
//! and `x`:
//!
//! ```text
//! A0 : zeta(n, 0) = 0
//! A+ : x > 0  =>  density integrates to 1 over [0, x]
//! A- : x < 0  =>  density integrates to 1 over [x, 0]
//! B± : 1/(Δ|x|) <= p(y) <= Δ/|x|  for almost all y in the support
//! ```
//!
//! [`validate_kernel`] certifies these conditions numerically on a finite
//! probe set.

use std::fmt;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("deterministic kernel has no density")]
    NoDensity,
    #[error("power kernel exponent must exceed -1 (got {0})")]
    InvalidAlpha(f64),
    #[error("kernel sample {sample} outside the support for n={n}, x={x}")]
    SampleOutOfSupport { n: u64, x: f64, sample: f64 },
    #[error("kernel evaluation failed at n={n}, x={x}: {reason}")]
    Evaluation { n: u64, x: f64, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportKind {
    /// Point mass: the whole pre-reset value is removed.
    Deterministic,
    /// Absolutely continuous law on the interval between 0 and x.
    BetweenZeroAndX,
}

/// Conditional law of the reset amount.
///
/// Implementations must be immutable; one kernel is shared by all replicas.
pub trait ResetKernel: Send + Sync + fmt::Debug {
    /// Density of `zeta(n, x)` at `y`; zero outside the support.
    fn density(&self, n: u64, x: f64, y: f64) -> Result<f64, KernelError>;

    fn sample(&self, n: u64, x: f64, rng: &mut dyn RngCore) -> Result<f64, KernelError>;

    /// The Δ the kernel claims for conditions B±, if any.
    fn delta_bound(&self) -> Option<f64>;

    fn support_kind(&self) -> SupportKind;

    /// Short identifier used in output files.
    fn label(&self) -> String;
}

/// Checks that a drawn reset amount lies between 0 and `x`.
pub(crate) fn check_support(n: u64, x: f64, sample: f64) -> Result<f64, KernelError> {
    let ok = if x > 0.0 {
        (0.0..=x).contains(&sample)
    } else if x < 0.0 {
        (x..=0.0).contains(&sample)
    } else {
        sample == 0.0
    };
    if ok {
        Ok(sample)
    } else {
        Err(KernelError::SampleOutOfSupport { n, x, sample })
    }
}

/// `zeta(n, x)` uniform on the interval between 0 and `x`; Δ = 1.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformKernel;

impl ResetKernel for UniformKernel {
    fn density(&self, _n: u64, x: f64, y: f64) -> Result<f64, KernelError> {
        if x == 0.0 || !in_support(x, y) {
            return Ok(0.0);
        }
        Ok(1.0 / x.abs())
    }

    fn sample(&self, _n: u64, x: f64, rng: &mut dyn RngCore) -> Result<f64, KernelError> {
        if x == 0.0 {
            return Ok(0.0);
        }
        let u: f64 = rng.random();
        Ok(x * u)
    }

    fn delta_bound(&self) -> Option<f64> {
        Some(1.0)
    }

    fn support_kind(&self) -> SupportKind {
        SupportKind::BetweenZeroAndX
    }

    fn label(&self) -> String {
        "uniform".into()
    }
}

/// Full reset to the origin: `zeta(n, x) = x`.
#[derive(Debug, Clone, Copy, Default)]
pub struct DeterministicZeroKernel;

impl ResetKernel for DeterministicZeroKernel {
    fn density(&self, _n: u64, _x: f64, _y: f64) -> Result<f64, KernelError> {
        Err(KernelError::NoDensity)
    }

    fn sample(&self, _n: u64, x: f64, _rng: &mut dyn RngCore) -> Result<f64, KernelError> {
        Ok(x)
    }

    fn delta_bound(&self) -> Option<f64> {
        None
    }

    fn support_kind(&self) -> SupportKind {
        SupportKind::Deterministic
    }

    fn label(&self) -> String {
        "deterministic_zero".into()
    }
}

/// Density proportional to `(y/x)^alpha` on the interval between 0 and `x`.
///
/// `alpha = 0` is the uniform kernel. For `alpha > 0` the density vanishes at
/// the origin, so the lower half of B± fails; for `alpha < 0` it blows up
/// there and the upper half fails.
#[derive(Debug, Clone, Copy)]
pub struct PowerKernel {
    alpha: f64,
}

impl PowerKernel {
    pub fn new(alpha: f64) -> Result<Self, KernelError> {
        if !(alpha > -1.0) || !alpha.is_finite() {
            return Err(KernelError::InvalidAlpha(alpha));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl ResetKernel for PowerKernel {
    fn density(&self, _n: u64, x: f64, y: f64) -> Result<f64, KernelError> {
        if x == 0.0 || !in_support(x, y) {
            return Ok(0.0);
        }
        Ok((self.alpha + 1.0) * (y / x).powf(self.alpha) / x.abs())
    }

    fn sample(&self, _n: u64, x: f64, rng: &mut dyn RngCore) -> Result<f64, KernelError> {
        if x == 0.0 {
            return Ok(0.0);
        }
        // CDF on the scaled support is s^(alpha+1).
        let u: f64 = rng.random();
        Ok(x * u.powf(1.0 / (self.alpha + 1.0)))
    }

    fn delta_bound(&self) -> Option<f64> {
        (self.alpha >= 0.0).then_some(self.alpha + 1.0)
    }

    fn support_kind(&self) -> SupportKind {
        SupportKind::BetweenZeroAndX
    }

    fn label(&self) -> String {
        format!("power:{}", self.alpha)
    }
}

fn in_support(x: f64, y: f64) -> bool {
    if x > 0.0 {
        (0.0..=x).contains(&y)
    } else {
        (x..=0.0).contains(&y)
    }
}

pub fn uniform_kernel() -> UniformKernel {
    UniformKernel
}

pub fn deterministic_zero_kernel() -> DeterministicZeroKernel {
    DeterministicZeroKernel
}

pub fn power_kernel(alpha: f64) -> Result<PowerKernel, KernelError> {
    PowerKernel::new(alpha)
}

/// Serializable kernel choice, as written in experiment configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    Uniform,
    DeterministicZero,
    Power { alpha: f64 },
}

impl KernelSpec {
    pub fn build(&self) -> Result<Box<dyn ResetKernel>, KernelError> {
        Ok(match *self {
            KernelSpec::Uniform => Box::new(UniformKernel),
            KernelSpec::DeterministicZero => Box::new(DeterministicZeroKernel),
            KernelSpec::Power { alpha } => Box::new(PowerKernel::new(alpha)?),
        })
    }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// Grid points per probe used for the almost-everywhere density bounds.
pub const DEFAULT_SCAN_POINTS: usize = 10_000;
/// Samples drawn per `(n, x)` probe for the support-containment check.
pub const SAMPLES_PER_PROBE: usize = 10_000;
pub const DEFAULT_NS: [u64; 3] = [0, 1, 7];
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ConditionStatus {
    Pass,
    Fail { reason: String },
    NotApplicable,
}

impl ConditionStatus {
    pub fn passed(&self) -> bool {
        matches!(self, ConditionStatus::Pass)
    }

    pub fn failed(&self) -> bool {
        matches!(self, ConditionStatus::Fail { .. })
    }

    fn fail(reason: impl Into<String>) -> Self {
        ConditionStatus::Fail {
            reason: reason.into(),
        }
    }
}

/// A Δ estimate; `Unbounded` when no finite Δ works on the probe set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaMeasure {
    Bounded(f64),
    Unbounded,
    /// No density was available to measure.
    Undefined,
}

impl DeltaMeasure {
    pub fn value(&self) -> Option<f64> {
        match self {
            DeltaMeasure::Bounded(d) => Some(*d),
            _ => None,
        }
    }

    fn from_raw(d: f64) -> Self {
        if d.is_finite() {
            DeltaMeasure::Bounded(d)
        } else {
            DeltaMeasure::Unbounded
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub n: u64,
    pub x: f64,
    pub y: f64,
    /// Relative amount by which the bound is exceeded.
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub kernel: String,
    pub a0: ConditionStatus,
    pub a_plus: ConditionStatus,
    pub a_minus: ConditionStatus,
    pub b_plus: ConditionStatus,
    pub b_minus: ConditionStatus,
    /// Smallest Δ satisfying both density bounds on every probe.
    pub measured_delta: DeltaMeasure,
    /// Smallest Δ satisfying the upper bound `p <= Δ/|x|` alone.
    pub upper_delta: DeltaMeasure,
    /// Smallest Δ satisfying the lower bound `p >= 1/(Δ|x|)` alone.
    pub lower_delta: DeltaMeasure,
    pub claimed_delta: Option<f64>,
    pub worst_violation: Option<Violation>,
    pub quadrature_tolerance: f64,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        [&self.a0, &self.a_plus, &self.a_minus, &self.b_plus, &self.b_minus]
            .iter()
            .all(|c| c.passed())
    }
}

/// Integrates `f` over `[a, b]` with adaptive Simpson, splitting at the
/// midpoint first. Returns `None` if a non-finite value shows up.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Option<f64> {
    const MAX_DEPTH: u32 = 50;

    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Option<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        if !flm.is_finite() || !frm.is_finite() {
            return None;
        }
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return Some(left + right + delta / 15.0);
        }
        Some(
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?,
        )
    }

    let mut total = 0.0;
    let mid = 0.5 * (a + b);
    for (lo, hi) in [(a, mid), (mid, b)] {
        let (flo, fhi) = (f(lo), f(hi));
        let m = 0.5 * (lo + hi);
        let fm = f(m);
        if !flo.is_finite() || !fhi.is_finite() || !fm.is_finite() {
            return None;
        }
        let whole = (hi - lo) / 6.0 * (flo + 4.0 * fm + fhi);
        total += recurse(&f, lo, hi, flo, fm, fhi, whole, 0.5 * tol, MAX_DEPTH)?;
    }
    Some(total)
}

#[derive(Default)]
struct SideScan {
    probed: bool,
    integral_failure: Option<String>,
    sample_failure: Option<String>,
    density_missing: bool,
    upper: f64,
    lower: f64,
    bound_violation: Option<Violation>,
}

/// Numerically certifies conditions A0, A±, B± for `kernel`.
///
/// For every probe `(n, x)` the density is integrated over the support
/// (adaptive Simpson at tolerance `tol`), scanned on a grid of
/// [`DEFAULT_SCAN_POINTS`] interior points plus both endpoints against the
/// claimed Δ (or, when none is claimed, the measured one), and sampled
/// [`SAMPLES_PER_PROBE`] times for support containment. A violation on a
/// null set between scan points is not detectable.
pub fn validate_kernel(
    kernel: &dyn ResetKernel,
    probe_xs: &[f64],
    ns: &[u64],
    tol: f64,
) -> crate::Result<ValidationReport> {
    if probe_xs.is_empty() {
        return Err(crate::Error::InvalidParameter("probe_xs must be nonempty".into()));
    }
    if let Some(x) = probe_xs.iter().find(|x| **x == 0.0 || !x.is_finite()) {
        return Err(crate::Error::InvalidParameter(format!(
            "probe values must be finite and nonzero (got {x})"
        )));
    }
    if !(tol > 0.0) {
        return Err(crate::Error::InvalidParameter(format!("tol must be positive (got {tol})")));
    }
    let ns: &[u64] = if ns.is_empty() { &DEFAULT_NS } else { ns };
    let stream = RngStream::new(0x5EED_CAFE, 0);

    let mut a0 = ConditionStatus::Pass;
    let mut rng = stream.rng();
    'a0: for &n in ns {
        for _ in 0..100 {
            match kernel.sample(n, 0.0, &mut rng) {
                Ok(0.0) => {}
                Ok(z) => {
                    a0 = ConditionStatus::fail(format!("sample(n={n}, 0) returned {z}"));
                    break 'a0;
                }
                Err(e) => {
                    a0 = ConditionStatus::fail(e.to_string());
                    break 'a0;
                }
            }
        }
    }

    let claimed = kernel.delta_bound();
    let mut sides = [SideScan::default(), SideScan::default()];
    let mut probe_counter = 1u64;
    for &x in probe_xs {
        let side = &mut sides[usize::from(x < 0.0)];
        side.probed = true;
        for &n in ns {
            scan_probe(kernel, n, x, tol, claimed, side, stream.with_index(probe_counter));
            probe_counter += 1;
        }
    }

    let [pos, neg] = sides;
    let a_status = |s: &SideScan| -> ConditionStatus {
        if !s.probed {
            ConditionStatus::NotApplicable
        } else if let Some(r) = s.integral_failure.as_ref().or(s.sample_failure.as_ref()) {
            ConditionStatus::fail(r.clone())
        } else {
            ConditionStatus::Pass
        }
    };
    let (upper, lower) = sides_delta(&pos, &neg);
    let measured_raw = upper.max(lower);
    let b_status = |s: &SideScan| -> ConditionStatus {
        if !s.probed {
            ConditionStatus::NotApplicable
        } else if s.density_missing {
            ConditionStatus::fail("no density")
        } else if let Some(r) = &s.integral_failure {
            ConditionStatus::fail(r.clone())
        } else if claimed.is_none() && !s.upper.max(s.lower).is_finite() {
            ConditionStatus::fail("no finite delta bounds the density")
        } else if let Some(v) = &s.bound_violation {
            ConditionStatus::fail(format!(
                "density bound violated at x={}, y={} (relative excess {:.3e})",
                v.x, v.y, v.magnitude
            ))
        } else {
            ConditionStatus::Pass
        }
    };

    let has_density = !(pos.density_missing || neg.density_missing);
    let worst = [pos.bound_violation, neg.bound_violation]
        .into_iter()
        .flatten()
        .max_by(|a, b| a.magnitude.total_cmp(&b.magnitude));
    let measure = |raw: f64| {
        if has_density {
            DeltaMeasure::from_raw(raw)
        } else {
            DeltaMeasure::Undefined
        }
    };

    Ok(ValidationReport {
        kernel: kernel.label(),
        a0,
        a_plus: a_status(&pos),
        a_minus: a_status(&neg),
        b_plus: b_status(&pos),
        b_minus: b_status(&neg),
        measured_delta: measure(measured_raw),
        upper_delta: measure(upper),
        lower_delta: measure(lower),
        claimed_delta: claimed,
        worst_violation: worst,
        quadrature_tolerance: tol,
    })
}

fn sides_delta(pos: &SideScan, neg: &SideScan) -> (f64, f64) {
    (pos.upper.max(neg.upper), pos.lower.max(neg.lower))
}

fn scan_probe(
    kernel: &dyn ResetKernel,
    n: u64,
    x: f64,
    tol: f64,
    claimed: Option<f64>,
    side: &mut SideScan,
    stream: RngStream,
) {
    let ax = x.abs();
    let (lo, hi) = if x > 0.0 { (0.0, x) } else { (x, 0.0) };

    // Support containment by sampling applies to every kernel.
    let mut rng = stream.rng();
    for _ in 0..SAMPLES_PER_PROBE {
        let drawn = kernel.sample(n, x, &mut rng).and_then(|z| check_support(n, x, z));
        if let Err(e) = drawn {
            side.sample_failure.get_or_insert(e.to_string());
            break;
        }
    }

    match kernel.density(n, x, 0.5 * (lo + hi)) {
        Err(KernelError::NoDensity) => {
            side.density_missing = true;
            return;
        }
        Err(e) => {
            side.integral_failure.get_or_insert(e.to_string());
            return;
        }
        Ok(_) => {}
    }

    let eval_failed = std::cell::Cell::new(false);
    let density = |y: f64| match kernel.density(n, x, y) {
        Ok(p) => p,
        Err(_) => {
            eval_failed.set(true);
            f64::NAN
        }
    };
    match adaptive_simpson(density, lo, hi, tol / 10.0) {
        Some(mass) if !eval_failed.get() => {
            if (mass - 1.0).abs() > tol {
                side.integral_failure.get_or_insert(format!(
                    "density integrates to {mass} over the support at n={n}, x={x}"
                ));
            }
        }
        _ => {
            side.integral_failure.get_or_insert(format!(
                "density evaluation failed during quadrature at n={n}, x={x}"
            ));
        }
    }

    // Almost-everywhere bounds on a dense grid including both endpoints.
    let mut worst: Option<Violation> = side.bound_violation;
    for j in 0..=DEFAULT_SCAN_POINTS {
        let y = lo + (hi - lo) * (j as f64 / DEFAULT_SCAN_POINTS as f64);
        let p = match kernel.density(n, x, y) {
            Ok(p) if !p.is_nan() => p,
            _ => f64::INFINITY,
        };
        side.upper = side.upper.max(ax * p);
        side.lower = side.lower.max(if p > 0.0 { 1.0 / (ax * p) } else { f64::INFINITY });

        let Some(delta) = claimed else { continue };
        let floor = 1.0 / (delta * ax);
        let ceil = delta / ax;
        let excess = if p < floor {
            (floor - p) / floor
        } else if p > ceil {
            if p.is_finite() {
                (p - ceil) / ceil
            } else {
                f64::INFINITY
            }
        } else {
            0.0
        };
        // Relative slack for rounding in 1/(Δ|x|) and Δ/|x|.
        if excess > 1e-12 && worst.is_none_or(|w| excess > w.magnitude) {
            worst = Some(Violation {
                n,
                x,
                y,
                magnitude: excess,
            });
        }
    }
    side.bound_violation = worst;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn uniform_density_examples() {
        let k = uniform_kernel();
        assert_eq!(k.density(0, 2.0, 1.0).unwrap(), 0.5);
        assert_eq!(k.density(3, -4.0, -1.0).unwrap(), 0.25);
        assert_eq!(k.density(0, 2.0, 2.5).unwrap(), 0.0);
        assert_eq!(k.density(0, 2.0, -0.1).unwrap(), 0.0);
        let mut rng = RngStream::new(1, 0).rng();
        assert_eq!(k.sample(5, 0.0, &mut rng).unwrap(), 0.0);
        assert_eq!(k.delta_bound(), Some(1.0));
    }

    #[test]
    fn deterministic_kernel_resets_to_origin() {
        let k = deterministic_zero_kernel();
        let mut rng = RngStream::new(1, 0).rng();
        assert_eq!(k.sample(0, 3.7, &mut rng).unwrap(), 3.7);
        assert_eq!(k.sample(0, 0.0, &mut rng).unwrap(), 0.0);
        assert_eq!(k.density(0, 1.0, 0.5), Err(KernelError::NoDensity));
        assert_eq!(k.delta_bound(), None);
        assert_eq!(k.support_kind(), SupportKind::Deterministic);
    }

    #[test]
    fn power_kernel_closed_form() {
        let k = power_kernel(1.0).unwrap();
        assert_eq!(k.density(0, 2.0, 2.0).unwrap(), 1.0);
        assert_eq!(k.density(0, 2.0, 1.0).unwrap(), 0.5);
        assert_eq!(k.delta_bound(), Some(2.0));
        assert!(power_kernel(-1.0).is_err());
        assert!(power_kernel(-3.0).is_err());
        assert!(power_kernel(f64::NAN).is_err());
        assert_eq!(power_kernel(-0.5).unwrap().delta_bound(), None);
    }

    #[test]
    fn power_zero_matches_uniform_exactly() {
        let p = power_kernel(0.0).unwrap();
        let u = uniform_kernel();
        for &x in &[-1000.0, -3.3, -1.0, 0.5, 1.0, 7.25, 1e4] {
            for j in 0..=64 {
                let y = x * j as f64 / 64.0;
                assert_eq!(p.density(2, x, y).unwrap(), u.density(2, x, y).unwrap());
            }
        }
    }

    #[test]
    fn simpson_integrates_polynomials() {
        let v = adaptive_simpson(|y| 4.0 * y * y * y, 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let v = adaptive_simpson(|y| y.sin(), 0.0, std::f64::consts::PI, 1e-10).unwrap();
        assert!((v - 2.0).abs() < 1e-9);
        assert!(adaptive_simpson(|y| 1.0 / y, 0.0, 1.0, 1e-9).is_none());
    }

    #[test]
    fn uniform_kernel_certifies() {
        let r = validate_kernel(&uniform_kernel(), &[-1000.0, -10.0, -1.0, 1.0, 10.0, 1000.0], &DEFAULT_NS, 1e-9)
            .unwrap();
        assert!(r.all_pass(), "{r:?}");
        let d = r.measured_delta.value().unwrap();
        assert!((d - 1.0).abs() < 1e-9);
        assert!(r.worst_violation.is_none());
    }

    #[test]
    fn deterministic_kernel_fails_b_conditions() {
        let r = validate_kernel(&deterministic_zero_kernel(), &[-2.0, 1.0, 5.0], &[0, 1], 1e-9).unwrap();
        assert!(r.a0.passed());
        assert!(r.a_plus.passed());
        assert!(r.a_minus.passed());
        assert_eq!(r.b_plus, ConditionStatus::Fail { reason: "no density".into() });
        assert_eq!(r.b_minus, ConditionStatus::Fail { reason: "no density".into() });
        assert_eq!(r.measured_delta, DeltaMeasure::Undefined);
    }

    #[test]
    fn one_sided_probes_leave_other_side_not_applicable() {
        let r = validate_kernel(&uniform_kernel(), &[1.0, 2.0], &[0], 1e-9).unwrap();
        assert_eq!(r.a_minus, ConditionStatus::NotApplicable);
        assert_eq!(r.b_minus, ConditionStatus::NotApplicable);
        assert!(r.b_plus.passed());
    }

    #[test]
    fn power_one_measures_upper_delta_two_and_fails_low_end() {
        let r = validate_kernel(&power_kernel(1.0).unwrap(), &[2.0], &[0], 1e-9).unwrap();
        assert!(r.a_plus.passed(), "{r:?}");
        assert!((r.upper_delta.value().unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(r.lower_delta, DeltaMeasure::Unbounded);
        assert_eq!(r.measured_delta, DeltaMeasure::Unbounded);
        assert!(r.b_plus.failed());
        let v = r.worst_violation.unwrap();
        // Density 2y/x^2 falls below 1/(2x) for y < x/4; worst at y = 0.
        assert_eq!(v.y, 0.0);
        assert_eq!(v.magnitude, 1.0);
    }

    #[test]
    fn power_three_delta_at_least_four() {
        let r = validate_kernel(&power_kernel(3.0).unwrap(), &[1.0], &[0, 1, 7], 1e-9).unwrap();
        // Closed form (alpha+1) y^alpha / x^(alpha+1) peaks at y = x with value 4/x.
        let analytic_peak = 4.0;
        assert!(r.upper_delta.value().unwrap() >= analytic_peak - 1e-12);
        assert!(r.b_plus.failed());
        assert!(r.worst_violation.unwrap().y < 0.5);
    }

    #[test]
    fn negative_alpha_is_unbounded_above() {
        let r = validate_kernel(&power_kernel(-0.5).unwrap(), &[1.0], &[0], 1e-9).unwrap();
        assert_eq!(r.upper_delta, DeltaMeasure::Unbounded);
        assert!(r.b_plus.failed());
    }

    #[test]
    fn rejects_bad_probes() {
        assert!(validate_kernel(&uniform_kernel(), &[], &[0], 1e-9).is_err());
        assert!(validate_kernel(&uniform_kernel(), &[0.0], &[0], 1e-9).is_err());
        assert!(validate_kernel(&uniform_kernel(), &[1.0], &[0], 0.0).is_err());
    }

    #[derive(Debug)]
    struct Overshoot;
    impl ResetKernel for Overshoot {
        fn density(&self, _n: u64, x: f64, y: f64) -> Result<f64, KernelError> {
            UniformKernel.density(0, x, y)
        }
        fn sample(&self, _n: u64, x: f64, _rng: &mut dyn RngCore) -> Result<f64, KernelError> {
            Ok(1.5 * x)
        }
        fn delta_bound(&self) -> Option<f64> {
            Some(1.0)
        }
        fn support_kind(&self) -> SupportKind {
            SupportKind::BetweenZeroAndX
        }
        fn label(&self) -> String {
            "overshoot".into()
        }
    }

    #[test]
    fn overshooting_sampler_fails_a_conditions() {
        let r = validate_kernel(&Overshoot, &[1.0, -1.0], &[0], 1e-9).unwrap();
        assert!(r.a_plus.failed());
        assert!(r.a_minus.failed());
        assert!(r.b_plus.passed());
    }

    #[test]
    fn kernel_spec_builds() {
        let spec: KernelSpec = serde_json::from_str(r#"{"type":"power","alpha":2.0}"#).unwrap();
        assert_eq!(spec.build().unwrap().label(), "power:2");
        assert!(KernelSpec::Power { alpha: -2.0 }.build().is_err());
    }
}
