//! Number formatting for human-readable reports.

/// Six significant digits, fixed notation for ordinary magnitudes.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exponent = x.abs().log10().floor() as i32;
    if !(-5..=9).contains(&exponent) {
        return format!("{x:.5e}");
    }
    // Rounding can carry into a new digit (9.999996 -> 10.0000), so re-check.
    let decimals = (5 - exponent).max(0) as usize;
    let s = format!("{x:.decimals$}");
    let significant = s.trim_start_matches(['-', '0', '.']);
    let digits = significant.chars().filter(|c| c.is_ascii_digit()).count();
    if digits > 6 && decimals > 0 {
        format!("{x:.prec$}", prec = decimals - 1)
    } else {
        s
    }
}
