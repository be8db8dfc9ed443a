//! SVG plot of empirical rates against `T`.

use std::fmt::Write as _;

use reset_ldp_core::rare_event::EstimateResult;

use crate::CliError;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

/// Empirical rate with its CI as error bars on a log-`T` axis, plus a dashed
/// line at the predicted rate. Output depends only on the inputs.
pub fn plot_rate_curve(results: &[EstimateResult], predicted: Option<f64>) -> Result<String, CliError> {
    if results.is_empty() {
        return Err(CliError::Runtime("nothing to plot".into()));
    }
    if let Some(r) = results.iter().find(|r| !(r.t > 0.0)) {
        return Err(CliError::Runtime(format!("cannot place T = {} on a log axis", r.t)));
    }

    let lx: Vec<f64> = results.iter().map(|r| r.t.log10()).collect();
    let (mut x0, mut x1) = min_max(lx.iter().copied());
    if x1 - x0 < 1e-9 {
        x0 -= 0.5;
        x1 += 0.5;
    } else {
        let pad = 0.08 * (x1 - x0);
        x0 -= pad;
        x1 += pad;
    }

    let finite = results
        .iter()
        .flat_map(|r| [r.empirical_rate, r.rate_lo, r.rate_hi])
        .chain(predicted)
        .filter(|v| v.is_finite());
    let (mut y0, mut y1) = min_max(finite);
    if !y0.is_finite() {
        (y0, y1) = (0.0, 1.0);
    }
    if y1 - y0 < 1e-9 {
        y0 -= 0.5;
        y1 += 0.5;
    } else {
        let pad = 0.1 * (y1 - y0);
        y0 -= pad;
        y1 += pad;
    }

    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * (WIDTH - LEFT - RIGHT);
    let py = |y: f64| {
        let y = y.clamp(y0, y1);
        HEIGHT - BOTTOM - (y - y0) / (y1 - y0) * (HEIGHT - TOP - BOTTOM)
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="800" height="500" viewBox="0 0 800 500" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="800" height="500" fill="white"/>"#);
    let (bx, by) = (LEFT, HEIGHT - BOTTOM);
    let _ = writeln!(
        s,
        r#"<path d="M{bx:.2} {TOP:.2} L{bx:.2} {by:.2} L{:.2} {by:.2}" stroke="black" fill="none"/>"#,
        WIDTH - RIGHT
    );

    for (r, &x) in results.iter().zip(&lx) {
        let cx = px(x);
        let _ = writeln!(
            s,
            r#"<line x1="{cx:.2}" y1="{by:.2}" x2="{cx:.2}" y2="{:.2}" stroke="black"/>"#,
            by + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            by + 20.0,
            r.t
        );
    }
    for k in 0..=4 {
        let v = y0 + (y1 - y0) * k as f64 / 4.0;
        let y = py(v);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{bx:.2}" y2="{y:.2}" stroke="black"/>"#,
            bx - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.3}</text>"#,
            bx - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">T (log scale)</text>"#,
        0.5 * (LEFT + WIDTH - RIGHT),
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">-ln(P)/T</text>"#,
        0.5 * (TOP + HEIGHT - BOTTOM),
        0.5 * (TOP + HEIGHT - BOTTOM)
    );

    if let Some(p) = predicted.filter(|p| p.is_finite()) {
        let y = py(p);
        let _ = writeln!(
            s,
            r#"<line x1="{bx:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="firebrick" stroke-dasharray="6 4"/>"#,
            WIDTH - RIGHT
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" fill="firebrick">I(f) = {p:.4}</text>"#,
            WIDTH - RIGHT,
            y - 6.0
        );
    }

    for (r, &x) in results.iter().zip(&lx) {
        let cx = px(x);
        if r.rate_lo.is_finite() || r.rate_hi.is_finite() {
            let lo = if r.rate_lo.is_finite() { r.rate_lo } else { y0 };
            let hi = if r.rate_hi.is_finite() { r.rate_hi } else { y1 };
            let (ya, yb) = (py(lo), py(hi));
            let _ = writeln!(
                s,
                r#"<path d="M{cx:.2} {ya:.2} L{cx:.2} {yb:.2} M{:.2} {ya:.2} L{:.2} {ya:.2} M{:.2} {yb:.2} L{:.2} {yb:.2}" stroke="steelblue" fill="none"/>"#,
                cx - 4.0,
                cx + 4.0,
                cx - 4.0,
                cx + 4.0
            );
        }
        if r.empirical_rate.is_finite() {
            let _ = writeln!(
                s,
                r#"<circle cx="{cx:.2}" cy="{:.2}" r="4" fill="steelblue"/>"#,
                py(r.empirical_rate)
            );
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn min_max(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}
