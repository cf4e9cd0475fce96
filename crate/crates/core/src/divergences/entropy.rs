//! Covering numbers of a finite metric sample.

use alloc::vec;

use crate::prelude::*;

/// Sets up to this size are covered exactly by exhaustive search.
pub const EXHAUSTIVE_COVER_LIMIT: usize = 12;

/// Smallest number of closed `eps`-balls centered at sample points that
/// cover the sample (exhaustive search, for tiny sets only).
pub fn minimal_cover_exhaustive(dist: &[Vec<f64>], eps: f64) -> usize {
    let n = dist.len();
    if n == 0 {
        return 0;
    }
    assert!(n <= 20, "exhaustive cover is exponential in the set size");
    let ball: Vec<u32> = (0..n)
        .map(|c| (0..n).filter(|&j| dist[c][j] <= eps).fold(0u32, |m, j| m | (1 << j)))
        .collect();
    let full = (1u32 << n) - 1;
    let mut best = n;
    for subset in 1u32..(1u32 << n) {
        let k = subset.count_ones() as usize;
        if k >= best {
            continue;
        }
        let covered = (0..n)
            .filter(|&c| subset & (1 << c) != 0)
            .fold(0u32, |m, c| m | ball[c]);
        if covered == full {
            best = k;
        }
    }
    best
}

/// Greedy set cover at radius `eps`: repeatedly take the center whose ball
/// holds the most uncovered points (lowest index on ties).
fn greedy_cover(dist: &[Vec<f64>], eps: f64) -> usize {
    let n = dist.len();
    let mut covered = vec![false; n];
    let mut left = n;
    let mut count = 0;
    while left > 0 {
        let (mut best, mut gain) = (0, 0);
        for c in 0..n {
            let g = (0..n).filter(|&j| !covered[j] && dist[c][j] <= eps).count();
            if g > gain {
                best = c;
                gain = g;
            }
        }
        for j in 0..n {
            if !covered[j] && dist[best][j] <= eps {
                covered[j] = true;
                left -= 1;
            }
        }
        count += 1;
    }
    count
}

/// Covering counts of a finite sample as a step function of the radius.
///
/// Samples of at most [`EXHAUSTIVE_COVER_LIMIT`] points are covered exactly.
/// Larger ones use the greedy cover, minimized over every smaller radius at
/// which coverage changes (any cover at a smaller radius is a cover at a
/// larger one); counts are then upper bounds on the minimal cover and
/// nonincreasing in the radius. Asymmetric "distances" are read row-wise:
/// center `c` covers `j` when `dist[c][j] ≤ ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverProfile {
    radii: Vec<f64>,
    counts: Vec<usize>,
    size: usize,
}

impl CoverProfile {
    pub fn new(dist: &[Vec<f64>]) -> Self {
        let n = dist.len();
        let mut radii: Vec<f64> = dist.iter().flat_map(|row| row.iter().copied()).filter(|d| *d >= 0.0).collect();
        radii.push(0.0);
        radii.sort_by(f64::total_cmp);
        radii.dedup();
        let mut counts = Vec::with_capacity(radii.len());
        let mut best = n;
        for &r in &radii {
            let c = if n <= EXHAUSTIVE_COVER_LIMIT {
                minimal_cover_exhaustive(dist, r)
            } else {
                greedy_cover(dist, r)
            };
            best = best.min(c);
            counts.push(best);
        }
        CoverProfile { radii, counts, size: n }
    }

    /// Number of `eps`-balls used.
    pub fn count(&self, eps: f64) -> usize {
        if self.size <= 1 {
            return self.size;
        }
        let k = self.radii.partition_point(|&r| r <= eps);
        if k == 0 {
            self.size
        } else {
            self.counts[k - 1]
        }
    }

    /// `ln N(ε)`.
    pub fn entropy(&self, eps: f64) -> f64 {
        (self.count(eps).max(1) as f64).ln()
    }

    /// Smallest positive distance in the sample (radii below it all give the
    /// same count).
    pub fn resolution(&self) -> f64 {
        self.radii.iter().copied().find(|&r| r > 0.0).unwrap_or(f64::INFINITY)
    }
}

/// `ln N(ε)`, the log of the number of closed `ε`-balls needed to cover the
/// sample under the distance matrix `dist` (see [`CoverProfile`]).
pub fn kolmogorov_entropy(dist: &[Vec<f64>], eps: f64) -> f64 {
    CoverProfile::new(dist).entropy(eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn line_metric(points: &[f64]) -> Vec<Vec<f64>> {
        points
            .iter()
            .map(|a| points.iter().map(|b| (a - b).abs()).collect())
            .collect()
    }

    #[test]
    fn single_point_has_zero_entropy() {
        let d = line_metric(&[0.3]);
        assert_eq!(kolmogorov_entropy(&d, 1e-9), 0.0);
    }

    #[test]
    fn unit_interval_at_quarter_radius_needs_two_balls() {
        let pts: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let d = line_metric(&pts);
        assert!((kolmogorov_entropy(&d, 0.25) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(kolmogorov_entropy(&d, 1.0), 0.0);
        assert!((kolmogorov_entropy(&d, 0.0) - 101f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn exhaustive_beats_farthest_point_layouts() {
        // Ten points on a line: 0..9, radius 1 → balls of width 3 → 4 balls.
        let pts: Vec<f64> = (0..10).map(f64::from).collect();
        let d = line_metric(&pts);
        assert_eq!(minimal_cover_exhaustive(&d, 1.0), 4);
        assert_eq!(minimal_cover_exhaustive(&d, 0.5), 10);
        assert_eq!(minimal_cover_exhaustive(&d, 4.5), 2);
        assert_eq!(minimal_cover_exhaustive(&d, 5.0), 1);
    }

    proptest! {
        #[test]
        fn small_sets_match_brute_force(xs in prop::collection::vec(0.0f64..10.0, 1..=12), eps in 0.0f64..5.0) {
            let d = line_metric(&xs);
            let exact = minimal_cover_exhaustive(&d, eps);
            prop_assert!((kolmogorov_entropy(&d, eps) - (exact as f64).ln()).abs() < 1e-12);
            // Greedy never undercounts.
            prop_assert!(greedy_cover(&d, eps) >= exact);
        }

        #[test]
        fn entropy_is_nonincreasing_in_eps(
            xs in prop::collection::vec(0.0f64..10.0, 13..40),
            e1 in 0.0f64..4.0,
            e2 in 0.0f64..4.0,
        ) {
            let d = line_metric(&xs);
            let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            prop_assert!(kolmogorov_entropy(&d, hi) <= kolmogorov_entropy(&d, lo));
        }
    }
}
