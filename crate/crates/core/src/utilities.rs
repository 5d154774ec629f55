//! Closed-form utilities driving agent decisions and movement speed.

use crate::error::{EvacError, Result};

/// Largest competitor count accepted by [`expected_comfort`].
pub const MAX_COMPETITORS: usize = 10_000;

/// Free walking speed of the speed-density relation, in m/s.
pub const FREE_SPEED: f64 = 1.4;

/// Comfort of a patch holding `n` occupants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComfortTable;

impl ComfortTable {
    /// Values for `n = 0, 1, 2, 3, 4`; every larger count maps to zero.
    pub const VALUES: [f64; 5] = [1.00, 1.00, 1.00, 0.51, 0.07];

    pub fn get(n: usize) -> f64 {
        Self::VALUES.get(n).copied().unwrap_or(0.0)
    }
}

pub fn comfort_utility(n: usize) -> f64 {
    ComfortTable::get(n)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BnePredictionParams {
    /// Probability that a nearby agent enters a given candidate patch.
    pub p_m: f64,
    pub weight_ud: f64,
}

impl Default for BnePredictionParams {
    fn default() -> Self {
        BnePredictionParams {
            p_m: 1.0 / 6.0,
            weight_ud: 1.0,
        }
    }
}

impl BnePredictionParams {
    pub fn new(p_m: f64, weight_ud: f64) -> Result<Self> {
        if !(p_m > 0.0 && p_m < 1.0) {
            return Err(EvacError::InvalidConfig(format!(
                "entry probability must lie in (0, 1), got {p_m}"
            )));
        }
        if !(weight_ud >= 0.0) || !weight_ud.is_finite() {
            return Err(EvacError::InvalidConfig(format!(
                "weight_ud must be non-negative, got {weight_ud}"
            )));
        }
        Ok(BnePredictionParams { p_m, weight_ud })
    }
}

/// Expected comfort of a patch for which `competitors` agents may enter,
/// each independently with probability `p_m`.
///
/// Sums `C(N, n) p^n (1 - p)^(N - n) U_c(n)` for `n` up to `min(N, 4)`; the
/// remaining terms vanish because the comfort table is zero there.
pub fn expected_comfort(competitors: usize, params: &BnePredictionParams) -> Result<f64> {
    if competitors > MAX_COMPETITORS {
        return Err(EvacError::CompetitorCountTooLarge(competitors));
    }
    Ok(expected_comfort_unchecked(competitors, params.p_m))
}

fn expected_comfort_unchecked(big_n: usize, p: f64) -> f64 {
    // every reachable count has full comfort and the probabilities sum to one
    if big_n <= 2 {
        return 1.0;
    }
    let q = 1.0 - p;
    let top = big_n.min(ComfortTable::VALUES.len() - 1);
    let mut sum = 0.0;
    // running binomial coefficient C(N, n)
    let mut coeff = 1.0;
    for n in 0..=top {
        if n > 0 {
            coeff = coeff * (big_n - n + 1) as f64 / n as f64;
        }
        // plain products: `powi` may be folded differently at compile time
        let prob = coeff * pow(p, n) * pow(q, big_n - n);
        sum += prob * ComfortTable::get(n);
    }
    sum.clamp(0.0, 1.0)
}

fn pow(base: f64, exp: usize) -> f64 {
    (0..exp).fold(1.0, |acc, _| acc * base)
}

/// Precomputed expected comfort for competitor counts `0..len`.
///
/// The engine evaluates the same handful of counts thousands of times per
/// tick, so a lookup replaces the binomial sum.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedComfortCache {
    values: Vec<f64>,
    p_m: f64,
}

impl ExpectedComfortCache {
    pub fn new(p_m: f64) -> Self {
        ExpectedComfortCache {
            values: (0..64)
                .map(|n| expected_comfort_unchecked(n, p_m))
                .collect(),
            p_m,
        }
    }

    #[inline]
    pub fn get(&mut self, competitors: usize) -> f64 {
        if competitors >= self.values.len() {
            let start = self.values.len();
            let end = competitors.min(MAX_COMPETITORS) + 1;
            let p = self.p_m;
            self.values
                .extend((start..end).map(|n| expected_comfort_unchecked(n, p)));
        }
        self.values[competitors.min(MAX_COMPETITORS)]
    }
}

/// `weight_ud * ud + uec`.
pub fn total_utility(ud: f64, uec: f64, params: &BnePredictionParams) -> f64 {
    params.weight_ud * ud + uec
}

/// Walking speed at density `rho` (person/m²), rescaled so that the free
/// speed equals `move_speed` instead of 1.4 m/s.
///
/// The three branches are used exactly as written, including their
/// discontinuities at 4 and 8 person/m².
pub fn speed_from_density(rho: f64, move_speed: f64) -> Result<f64> {
    if rho < 0.0 || rho.is_nan() {
        return Err(EvacError::NegativeDensity(rho));
    }
    if !(move_speed > 0.0) {
        return Err(EvacError::InvalidConfig(format!(
            "move speed must be positive, got {move_speed}"
        )));
    }
    Ok(base_speed(rho) * (move_speed / FREE_SPEED))
}

fn base_speed(rho: f64) -> f64 {
    if rho <= 4.0 {
        FREE_SPEED
    } else if rho < 8.0 {
        0.03 * rho * rho - 0.64 * rho + 3.36
    } else {
        0.1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(p: f64) -> BnePredictionParams {
        BnePredictionParams::new(p, 1.0).unwrap()
    }

    #[test]
    fn comfort_table_points() {
        assert_eq!(comfort_utility(0), 1.0);
        assert_eq!(comfort_utility(2), 1.0);
        assert_eq!(comfort_utility(3), 0.51);
        assert_eq!(comfort_utility(4), 0.07);
        assert_eq!(comfort_utility(5), 0.0);
        assert_eq!(comfort_utility(7), 0.0);
        for n in 0..20 {
            assert!(comfort_utility(n + 1) <= comfort_utility(n));
        }
    }

    #[test]
    fn expected_comfort_small_counts_are_one() {
        for &p in &[0.01, 0.05, 1.0 / 6.0, 0.5, 0.99] {
            for n in 0..=2 {
                assert_eq!(expected_comfort(n, &params(p)).unwrap(), 1.0, "N={n} p={p}");
            }
        }
    }

    #[test]
    fn expected_comfort_three_competitors() {
        let got = expected_comfort(3, &params(1.0 / 6.0)).unwrap();
        let want = 1.0 - 0.49 * (1.0f64 / 6.0).powi(3);
        assert!((got - want).abs() < 1e-15);
        assert!((got - 0.997_731_5).abs() < 1e-7);
    }

    #[test]
    fn expected_comfort_rejects_huge_counts() {
        assert!(expected_comfort(MAX_COMPETITORS, &params(0.2)).is_ok());
        assert_eq!(
            expected_comfort(MAX_COMPETITORS + 1, &params(0.2)),
            Err(EvacError::CompetitorCountTooLarge(MAX_COMPETITORS + 1))
        );
    }

    #[test]
    fn cache_matches_direct_sum() {
        let p = params(0.167);
        let mut cache = ExpectedComfortCache::new(p.p_m);
        for n in [0, 1, 5, 63, 64, 200, 71] {
            assert_eq!(cache.get(n), expected_comfort(n, &p).unwrap(), "N={n}");
        }
    }

    #[test]
    fn total_utility_examples() {
        let w1 = BnePredictionParams::new(0.2, 1.0).unwrap();
        let w2 = BnePredictionParams::new(0.2, 2.0).unwrap();
        assert_eq!(total_utility(0.5, 0.5, &w1), 1.0);
        assert_eq!(total_utility(0.5, 0.5, &w2), 1.5);
        assert_eq!(total_utility(0.0, 0.0, &w2), 0.0);
    }

    #[test]
    fn params_validation() {
        assert!(BnePredictionParams::new(0.0, 1.0).is_err());
        assert!(BnePredictionParams::new(1.0, 1.0).is_err());
        assert!(BnePredictionParams::new(0.5, -1.0).is_err());
        assert!(BnePredictionParams::new(0.5, 0.0).is_ok());
    }

    #[test]
    fn speed_branches() {
        assert_eq!(speed_from_density(2.0, 1.4).unwrap(), 1.4);
        assert!((speed_from_density(6.0, 1.4).unwrap() - 0.60).abs() < 1e-12);
        assert!((speed_from_density(9.0, 2.0).unwrap() - 0.1 * 2.0 / 1.4).abs() < 1e-12);
        // boundaries follow the printed inequalities
        assert_eq!(speed_from_density(4.0, 1.4).unwrap(), 1.4);
        assert!((speed_from_density(8.0, 1.4).unwrap() - 0.1).abs() < 1e-15);
        assert!(speed_from_density(0.0, 1.4).unwrap() == 1.4);
        assert!(matches!(
            speed_from_density(-0.1, 1.4),
            Err(EvacError::NegativeDensity(_))
        ));
        assert!(speed_from_density(1.0, 0.0).is_err());
    }
}
