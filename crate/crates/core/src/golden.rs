//! Golden-section search for one-dimensional minimization.
//!
//! Each iteration shrinks the bracket by the inverse golden ratio and reuses
//! one of the two interior evaluations, so only one new function value is
//! needed per step.

/// `(sqrt(5) - 1) / 2`
const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Result of a one-dimensional minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
}

/// Minimizes `f` on `[lo, hi]`, assuming it is unimodal there.
///
/// Stops once the bracket width falls below `tol * max(|x|, tiny)` (relative
/// mode) or `tol` (absolute mode), or after `max_iter` iterations.
pub fn golden_section<F>(f: F, lo: f64, hi: f64, tol: f64, relative: bool, max_iter: usize) -> Minimum
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..max_iter {
        let width = b - a;
        let scale = if relative { 0.5 * (a + b).abs().max(f64::MIN_POSITIVE) } else { 1.0 };
        if width <= tol * scale {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        Minimum { x: c, value: fc }
    } else {
        Minimum { x: d, value: fd }
    }
}

/// Locates the minimum of `f` on `[lo, hi]` (`0 < lo < hi`) by a geometric
/// scan followed by golden-section refinement of the best scan cell.
///
/// Returns `None` when the scan minimum sits on an endpoint, i.e. the
/// interior minimum could not be bracketed.
pub fn minimize_positive<F>(f: F, lo: f64, hi: f64, scan_points: usize, rel_tol: f64) -> Option<Minimum>
where
    F: Fn(f64) -> f64,
{
    debug_assert!(lo > 0.0 && hi > lo && scan_points >= 3);
    let ratio = (hi / lo).powf(1.0 / (scan_points - 1) as f64);
    let xs: Vec<f64> = (0..scan_points).map(|i| lo * ratio.powi(i as i32)).collect();
    let mut best = 0;
    let mut best_value = f64::INFINITY;
    for (i, &x) in xs.iter().enumerate() {
        let v = f(x);
        if v < best_value {
            best_value = v;
            best = i;
        }
    }
    if best == 0 || best == scan_points - 1 {
        return None;
    }
    let m = golden_section(&f, xs[best - 1], xs[best + 1], rel_tol, true, 500);
    Some(if m.value <= best_value { m } else { Minimum { x: xs[best], value: best_value } })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let m = golden_section(|x| (x - 1.3).powi(2) + 2.0, -4.0, 9.0, 1e-12, false, 1000);
        assert!((m.x - 1.3).abs() < 1e-6);
        assert!((m.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn reversed_bracket() {
        let m = golden_section(|x| (x + 0.5).abs(), 3.0, -3.0, 1e-10, false, 1000);
        assert!((m.x + 0.5).abs() < 1e-9);
    }

    #[test]
    fn positive_scan() {
        let f = |d: f64| d + 1.0 / d;
        let m = minimize_positive(f, 1e-6, 50.0, 200, 1e-12).unwrap();
        assert!((m.x - 1.0).abs() < 1e-5);
        assert!((m.value - 2.0).abs() < 1e-12);
        // Monotone objective: no interior minimum.
        assert!(minimize_positive(|d: f64| d, 1e-6, 50.0, 200, 1e-12).is_none());
    }
}
