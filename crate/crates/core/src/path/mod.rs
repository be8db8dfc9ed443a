//! Target paths and the functionals evaluated on them.
//!
//! Target paths are piecewise-linear on `[0, 1]` and start at the origin, so
//! every functional here (variations, action integrals, rate functions, sup
//! distances) is computed in closed form segment by segment.

mod distance;
mod rates;
mod staircase;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use distance::{in_tube, sup_distance, TimeWindow, Trajectory, TubeSpec};
pub use rates::{
    action_integral, jordan_decompose, rate_deterministic_reset, rate_mixed, rate_negative,
    rate_positive, SignPattern, VariationPair,
};
pub use staircase::{staircase_schedule, StaircaseSchedule};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error("invalid target path: {0}")]
    Invalid(String),
    #[error("path outside the domain of {functional}: {reason}")]
    Domain {
        functional: &'static str,
        reason: String,
    },
    #[error("cannot parse path spec {spec:?}: {reason}")]
    Parse { spec: String, reason: String },
}

/// Piecewise-linear `f` on `[0, 1]` with `f(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPath", into = "RawPath")]
pub struct TargetPath {
    t: Vec<f64>,
    v: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawPath {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<RawPath> for TargetPath {
    type Error = PathError;
    fn try_from(raw: RawPath) -> Result<Self, PathError> {
        TargetPath::new(raw.breakpoints, raw.values)
    }
}

impl From<TargetPath> for RawPath {
    fn from(p: TargetPath) -> Self {
        RawPath {
            breakpoints: p.t,
            values: p.v,
        }
    }
}

impl TargetPath {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self, PathError> {
        let bad = |m: &str| Err(PathError::Invalid(m.to_string()));
        if breakpoints.len() != values.len() {
            return bad("breakpoints and values differ in length");
        }
        if breakpoints.len() < 2 {
            return bad("need at least two breakpoints");
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return bad("breakpoints must start at 0 and end at 1");
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return bad("breakpoints must be strictly increasing");
        }
        if values.iter().any(|v| !v.is_finite()) {
            return bad("values must be finite");
        }
        if values[0] != 0.0 {
            return bad("path must start at 0");
        }
        Ok(Self {
            t: breakpoints,
            v: values,
        })
    }

    /// `f(t) = slope * t`.
    pub fn linear(slope: f64) -> Result<Self, PathError> {
        Self::new(vec![0.0, 1.0], vec![0.0, slope])
    }

    /// Two-segment fixture: `f(1/2) = peak`, `f(1) = end`.
    pub fn tent(peak: f64, end: f64) -> Result<Self, PathError> {
        Self::new(vec![0.0, 0.5, 1.0], vec![0.0, peak, end])
    }

    /// Parses `linear:v` or `tent:peak,end`.
    pub fn from_shorthand(spec: &str) -> Result<Self, PathError> {
        let err = |reason: &str| PathError::Parse {
            spec: spec.to_string(),
            reason: reason.to_string(),
        };
        let (kind, args) = spec.split_once(':').ok_or_else(|| err("expected kind:args"))?;
        let nums = args
            .split(',')
            .map(|a| a.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| err(&e.to_string()))?;
        match (kind.trim(), nums.as_slice()) {
            ("linear", [v]) => Self::linear(*v),
            ("tent", [peak, end]) => Self::tent(*peak, *end),
            ("linear", _) => Err(err("linear takes one value")),
            ("tent", _) => Err(err("tent takes two values")),
            _ => Err(err("unknown shorthand kind")),
        }
    }

    /// Reads a `t,v` CSV with a header line.
    pub fn from_csv_str(text: &str) -> Result<Self, PathError> {
        let err = |reason: String| PathError::Parse {
            spec: "<csv>".into(),
            reason,
        };
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| err("empty file".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols != ["t", "v"] {
            return Err(err(format!("expected header \"t,v\", found {header:?}")));
        }
        let (mut t, mut v) = (Vec::new(), Vec::new());
        for (i, line) in lines.enumerate() {
            let (a, b) = line
                .split_once(',')
                .ok_or_else(|| err(format!("row {} has no comma", i + 1)))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| err(format!("row {}: {e}", i + 1)))
            };
            t.push(parse(a)?);
            v.push(parse(b)?);
        }
        Self::new(t, v)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("t,v\n");
        for (t, v) in self.t.iter().zip(&self.v) {
            let _ = writeln!(out, "{t},{v}");
        }
        out
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    pub fn segments(&self) -> usize {
        self.t.len() - 1
    }

    pub fn slope(&self, segment: usize) -> f64 {
        (self.v[segment + 1] - self.v[segment]) / (self.t[segment + 1] - self.t[segment])
    }

    /// Index of the segment containing `t` (right-closed at the last one).
    pub fn segment_at(&self, t: f64) -> usize {
        let i = self.t.partition_point(|&b| b <= t);
        i.saturating_sub(1).min(self.segments() - 1)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let i = self.segment_at(t);
        self.eval_in(i, t)
    }

    fn eval_in(&self, i: usize, t: f64) -> f64 {
        if t == self.t[i + 1] {
            return self.v[i + 1];
        }
        self.v[i] + (t - self.t[i]) * self.slope(i)
    }

    /// Total variation over `[0, 1]`.
    pub fn total_variation(&self) -> f64 {
        self.v.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    pub fn sign_pattern(&self) -> SignPattern {
        SignPattern::of(self)
    }

    /// Cursor for monotone evaluation along increasing times.
    pub(crate) fn cursor(&self) -> PathCursor<'_> {
        PathCursor::new(self)
    }
}

/// Evaluates a target path at nondecreasing times in amortized O(1).
pub(crate) struct PathCursor<'a> {
    path: &'a TargetPath,
    seg: usize,
    t0: f64,
    t1: f64,
    v0: f64,
    v1: f64,
    slope: f64,
}

impl<'a> PathCursor<'a> {
    fn new(path: &'a TargetPath) -> Self {
        let mut c = Self {
            path,
            seg: 0,
            t0: 0.0,
            t1: 0.0,
            v0: 0.0,
            v1: 0.0,
            slope: 0.0,
        };
        c.load(0);
        c
    }

    fn load(&mut self, seg: usize) {
        let p = self.path;
        self.seg = seg;
        self.t0 = p.t[seg];
        self.t1 = p.t[seg + 1];
        self.v0 = p.v[seg];
        self.v1 = p.v[seg + 1];
        self.slope = p.slope(seg);
    }

    #[inline]
    fn advance(&mut self, t: f64) {
        if t >= self.t1 {
            let last = self.path.segments() - 1;
            let mut seg = self.seg;
            while seg < last && self.path.t[seg + 1] <= t {
                seg += 1;
            }
            if seg != self.seg {
                self.load(seg);
            }
        }
    }

    /// Same value as [`TargetPath::eval`].
    #[inline]
    pub(crate) fn eval(&mut self, t: f64) -> f64 {
        self.advance(t);
        if t == self.t1 {
            return self.v1;
        }
        self.v0 + (t - self.t0) * self.slope
    }

    /// Segment containing the open interval `(t0, t1)`; callers guarantee
    /// no breakpoint lies strictly inside it.
    #[inline]
    pub(crate) fn segment_between(&mut self, t0: f64, t1: f64) -> usize {
        self.advance(0.5 * (t0 + t1));
        self.seg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_rules() {
        assert!(TargetPath::new(vec![0.0, 1.0], vec![0.0, 2.0]).is_ok());
        assert!(TargetPath::new(vec![0.0, 1.0], vec![0.1, 2.0]).is_err());
        assert!(TargetPath::new(vec![0.0, 0.5], vec![0.0, 2.0]).is_err());
        assert!(TargetPath::new(vec![0.0, 0.5, 0.5, 1.0], vec![0.0; 4]).is_err());
        assert!(TargetPath::new(vec![0.0], vec![0.0]).is_err());
        assert!(TargetPath::new(vec![0.0, 1.0], vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn evaluation_interpolates() {
        let f = TargetPath::tent(1.0, 0.5).unwrap();
        assert_eq!(f.eval(0.0), 0.0);
        assert_eq!(f.eval(0.25), 0.5);
        assert_eq!(f.eval(0.5), 1.0);
        assert_eq!(f.eval(0.75), 0.75);
        assert_eq!(f.eval(1.0), 0.5);
        assert_eq!(f.slope(0), 2.0);
        assert_eq!(f.slope(1), -1.0);
        let mut c = f.cursor();
        for &t in &[0.0, 0.1, 0.5, 0.6, 1.0] {
            assert_eq!(c.eval(t), f.eval(t));
        }
    }

    #[test]
    fn shorthand_and_csv() {
        assert_eq!(TargetPath::from_shorthand("linear:0.5").unwrap(), TargetPath::linear(0.5).unwrap());
        assert_eq!(TargetPath::from_shorthand("tent:1,0.5").unwrap(), TargetPath::tent(1.0, 0.5).unwrap());
        assert!(TargetPath::from_shorthand("tent:1").is_err());
        assert!(TargetPath::from_shorthand("spiral:1").is_err());
        assert!(TargetPath::from_shorthand("linear").is_err());

        let f = TargetPath::new(vec![0.0, 0.3, 1.0], vec![0.0, -0.25, 0.125]).unwrap();
        let back = TargetPath::from_csv_str(&f.to_csv_string()).unwrap();
        assert_eq!(back, f);
        assert!(TargetPath::from_csv_str("0,0\n1,1\n").is_err());
        assert!(TargetPath::from_csv_str("t,v\n0,0\n1,x\n").is_err());
    }

    #[test]
    fn serde_validates() {
        let ok: TargetPath = serde_json::from_str(r#"{"breakpoints":[0,1],"values":[0,1]}"#).unwrap();
        assert_eq!(ok, TargetPath::linear(1.0).unwrap());
        assert!(serde_json::from_str::<TargetPath>(r#"{"breakpoints":[0,1],"values":[1,1]}"#).is_err());
    }
}
