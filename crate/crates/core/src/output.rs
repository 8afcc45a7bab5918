//! Deterministic text formatting for CSV emission.

/// Format a float with 17 significant digits so that identical runs produce
/// byte-identical files.
pub fn float17(x: f64) -> String {
    format!("{x:.16e}")
}
