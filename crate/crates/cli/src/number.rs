//! Locale-independent float formatting with six significant digits.

/// Rounds to six significant digits.
pub fn sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

/// Six significant digits, plain decimal notation, `.` separator.
pub fn fmt_num(x: f64) -> String {
    let v = sig6(x);
    if v == 0.0 {
        // also folds -0
        return "0".to_string();
    }
    format!("{v}")
}
