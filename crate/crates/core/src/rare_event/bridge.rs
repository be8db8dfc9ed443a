//! Brownian-bridge exit probabilities for a symmetric strip.

/// Probability that a Brownian bridge from `y0` to `y1` with variance `var`
/// over its lifetime stays inside `(-h, h)`.
///
/// Method-of-images series. Endpoints outside the open strip give 0; a
/// degenerate bridge (`var == 0`) is a straight line and gives 1.
#[inline]
pub fn bridge_stay_probability(y0: f64, y1: f64, h: f64, var: f64) -> f64 {
    if !(y0.abs() < h && y1.abs() < h) {
        return 0.0;
    }
    if var <= 0.0 {
        return 1.0;
    }
    let (u, v) = (y0 + h, y1 + h);
    let (u2, v2) = (h - y0, h - y1);
    // Both one-sided image terms below e^-36 ~ 2e-16.
    let cut = 18.0 * var;
    if u * v > cut && u2 * v2 > cut {
        return 1.0;
    }
    image_series(u, v, 2.0 * h, var)
}

/// `u`, `v` are the endpoints measured from the lower barrier, `w` the width.
#[cold]
#[inline(never)]
fn image_series(u: f64, v: f64, w: f64, var: f64) -> f64 {
    let d = v - u;
    let term = |k: f64| {
        let kw = k * w;
        (-2.0 * kw * (kw + d) / var).exp() - (-2.0 * (u + kw) * (v + kw) / var).exp()
    };
    let mut p = term(0.0);
    for k in 1..10_000 {
        let (a, b) = (term(k as f64), term(-(k as f64)));
        p += a + b;
        if a.abs() < 1e-18 && b.abs() < 1e-18 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}
