//! Text encodings shared by every command.

/// Shortest decimal string that parses back to the same `f64`.
///
/// Plain notation is used for magnitudes in `[1e-5, 1e16)`, exponent notation
/// elsewhere, and negative zero prints as `0`.
pub fn real(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = v.abs();
    if (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn join_reals(values: &[f64]) -> String {
    values.iter().map(|v| real(*v)).collect::<Vec<_>>().join(",")
}

/// Parses `"a,b,c"` into coordinates.
pub fn parse_reals(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("'{t}' is not a number: {e}")))
        .collect()
}

/// Parses `"a,b;c,d;…"` into a list of points.
pub fn parse_point_list(text: &str) -> Result<Vec<Vec<f64>>, String> {
    text.split(';').filter(|s| !s.trim().is_empty()).map(parse_reals).collect()
}
