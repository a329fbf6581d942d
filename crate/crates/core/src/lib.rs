//! Frame-dependent and gauge-invariant geometry of closed space curves:
//! twist, total phase, writhe, linking numbers, and the balance
//! Lk_g = Tw_g + Wr, with closed twisted strips as the main test family.

pub mod curve_core;
pub mod error;
pub mod framing;
pub mod global_geometry;
pub mod spectral;
pub mod strip_family;
pub mod sweep_engine;

pub use error::{GeomError, Result};

/// Shortest decimal of `x` after rounding to 12 significant digits.
pub fn fmt12(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    format!("{rounded}")
}
