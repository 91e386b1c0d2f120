//! Adaptive Simpson quadrature.

const MAX_DEPTH: u32 = 40;
const PANELS: usize = 16;

/// Integrates `f` over `[a, b]` to relative tolerance `rel_tol`.
///
/// The interval is first cut into equal panels; the composite Simpson sum
/// sets the magnitude the tolerance is relative to, and each panel is refined
/// with its share of it.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let h = (b - a) / PANELS as f64;
    let node = |k: usize| if k == PANELS { b } else { a + k as f64 * h };
    let panels: Vec<(f64, f64, f64, f64, f64, f64)> = (0..PANELS)
        .map(|k| {
            let (lo, hi) = (node(k), node(k + 1));
            let (flo, fmid, fhi) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            (lo, hi, flo, fmid, fhi, simpson(lo, hi, flo, fmid, fhi))
        })
        .collect();
    let magnitude: f64 = panels.iter().map(|p| p.5.abs()).sum();
    let tol = rel_tol * magnitude / PANELS as f64;
    panels
        .into_iter()
        .map(|(lo, hi, flo, fmid, fhi, whole)| refine(&f, lo, hi, flo, fmid, fhi, whole, tol, MAX_DEPTH))
        .sum()
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    let rounding = 64.0 * f64::EPSILON * (left.abs() + right.abs());
    if depth == 0 || delta.abs() <= (15.0 * tol).max(rounding) {
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
