//! Shared text formatting for files written by the crate.

/// Formats a real with 17 significant digits in scientific notation, enough
/// for an exact `f64` round trip.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}
