//! Reference implementations shared by the integration tests. Nothing here
//! calls into the code paths it is used to check.

#![allow(dead_code)]

use evac_core::grid::{ExitSide, Patch};

/// Comfort table written out independently of the library.
pub fn comfort_reference(n: u32) -> f64 {
    match n {
        0..=2 => 1.0,
        3 => 0.51,
        4 => 0.07,
        _ => 0.0,
    }
}

/// Expected comfort by enumerating every subset of the `n` potential
/// entrants: each subset is one outcome with probability
/// `p^|S| (1 - p)^(n - |S|)` and comfort `U_c(|S|)`.
pub fn expected_comfort_by_enumeration(n: u32, p: f64) -> f64 {
    assert!(n <= 20, "enumeration is exponential");
    let mut total = 0.0;
    for mask in 0u32..(1u32 << n) {
        let mut prob = 1.0;
        for bit in 0..n {
            prob *= if mask & (1 << bit) != 0 { p } else { 1.0 - p };
        }
        total += prob * comfort_reference(mask.count_ones());
    }
    total
}

/// Distance utility recomputed from first principles: scan every band cell.
pub fn ud_reference(width: usize, height: usize, door: usize, p: Patch, side: ExitSide) -> f64 {
    let lo = (height - door) / 2;
    let col = match side {
        ExitSide::Left => 0.0,
        ExitSide::Right => (width - 1) as f64,
    };
    let d = (lo..lo + door)
        .map(|row| ((p.x as f64 - col).powi(2) + (p.y as f64 - row as f64).powi(2)).sqrt())
        .fold(f64::INFINITY, f64::min);
    let diag = ((width * width + height * height) as f64).sqrt();
    (diag - d) / diag
}
