//! Output formatting shared by reports and CSV writers.

use crate::real::{to_f64, Real};

/// Formats with 9 significant digits, shortest form that round-trips the rounded value.
pub fn fmt_sig<T: Real>(v: T) -> String {
    fmt_sig_f64(to_f64(v))
}

pub fn fmt_sig_f64(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "NaN".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{v:.8e}").parse().expect("float round trip");
    let s = format!("{rounded:?}");
    s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
}

/// Rounds to 9 significant digits; used to keep JSON reports stable.
pub fn round_sig(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.8e}").parse().expect("float round trip")
}
