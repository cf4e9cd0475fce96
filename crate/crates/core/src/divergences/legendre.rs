//! Grid-restricted Legendre (Young–Fenchel) transforms.

use crate::prelude::*;
use crate::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// `sup_z (u·z − f(z))` over a grid, with its maximizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Legendre {
    pub value: f64,
    pub argmax: f64,
    /// The supremum sits on the first or last grid point, so the true
    /// transform may be larger (or infinite).
    pub at_boundary: bool,
}

/// Maximizes a unimodal `f` on `[a, b]`; returns `(x, f(x))`.
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// `sup_z (u·z − f(z))` over the increasing `grid`, refined by a golden
/// section search on the two cells around the best grid point. Points
/// where `f` is not finite lie outside the effective domain and are skipped.
///
/// The refinement only ever raises the grid maximum, so the result is
/// monotone under grid refinement.
pub fn legendre_transform<F: Fn(f64) -> f64>(f: F, grid: &[f64], u: f64) -> Result<Legendre> {
    let mut best: Option<(usize, f64)> = None;
    let mut first = None;
    let mut last = 0;
    for (i, &z) in grid.iter().enumerate() {
        let fz = f(z);
        if !fz.is_finite() {
            continue;
        }
        first.get_or_insert(i);
        last = i;
        let v = u * z - fz;
        if best.map_or(true, |(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    let (i, grid_value) = best.ok_or(Error::EmptyDomain("function is not finite on any grid point"))?;
    let first = first.unwrap_or(0);
    let lo = grid[i.saturating_sub(1).max(first)];
    let hi = grid[(i + 1).min(last)];
    let mut value = grid_value;
    let mut argmax = grid[i];
    if hi > lo {
        let tol = 1e-10 * (1.0 + hi.abs().max(lo.abs()));
        let (z, v) = golden_section_max(
            |z| {
                let fz = f(z);
                if fz.is_finite() {
                    u * z - fz
                } else {
                    f64::NEG_INFINITY
                }
            },
            lo,
            hi,
            tol,
        );
        if v > value {
            value = v;
            argmax = z;
        }
    }
    let at_boundary = i == first || i == last;
    Ok(Legendre {
        value,
        argmax,
        at_boundary,
    })
}

/// A function sampled on an increasing grid, linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tabulated {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Tabulated {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Dimension {
                expected: x.len(),
                got: y.len(),
            });
        }
        if x.is_empty() {
            return Err(Error::EmptyDomain("no grid points"));
        }
        if x.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("x", "grid must be strictly increasing"));
        }
        Ok(Tabulated { x, y })
    }

    pub fn sample<F: FnMut(f64) -> f64>(x: Vec<f64>, mut f: F) -> Result<Self> {
        let y = x.iter().map(|&v| f(v)).collect();
        Tabulated::new(x, y)
    }

    /// Linear interpolation; `+∞` outside the grid (outside the domain).
    pub fn eval(&self, z: f64) -> f64 {
        let n = self.x.len();
        if z < self.x[0] || z > self.x[n - 1] || z.is_nan() {
            return f64::INFINITY;
        }
        let k = self.x.partition_point(|&v| v <= z);
        if k == 0 {
            return self.y[0];
        }
        if k >= n {
            return self.y[n - 1];
        }
        let (x0, x1) = (self.x[k - 1], self.x[k]);
        let t = (z - x0) / (x1 - x0);
        self.y[k - 1] + t * (self.y[k] - self.y[k - 1])
    }

    /// Transform of the interpolant (the grid itself is the search grid).
    pub fn legendre(&self, u: f64) -> Result<Legendre> {
        legendre_transform(|z| self.eval(z), &self.x, u)
    }

    /// Second differences are nonnegative up to `slack`.
    pub fn is_convex(&self, slack: f64) -> bool {
        self.x.windows(3).zip(self.y.windows(3)).all(|(x, y)| {
            let s1 = (y[1] - y[0]) / (x[1] - x[0]);
            let s2 = (y[2] - y[1]) / (x[2] - x[1]);
            s2 >= s1 - slack * (1.0 + s1.abs())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn quadratic_is_self_dual() {
        let grid = linspace(-6.0, 6.0, 121);
        for k in 0..=60 {
            let u = -3.0 + 0.1 * k as f64;
            let l = legendre_transform(|z| 0.5 * z * z, &grid, u).unwrap();
            assert!((l.value - 0.5 * u * u).abs() < 1e-6, "u={u} {l:?}");
            assert!(!l.at_boundary);
        }
    }

    #[test]
    fn gaussian_deviation_function_at_zero() {
        let grid = linspace(0.0, 1.0, 21);
        let l = legendre_transform(|z| 0.5 * z * z - 0.5 * z, &grid, 0.0).unwrap();
        assert!((l.value - 0.125).abs() < 1e-9);
        assert!((l.argmax - 0.5).abs() < 1e-4);
    }

    #[test]
    fn affine_conjugate_runs_to_the_boundary() {
        let grid = linspace(-5.0, 5.0, 51);
        let l = legendre_transform(|z| 2.0 * z, &grid, 3.0).unwrap();
        assert!(l.at_boundary);
        assert_eq!(l.argmax, 5.0);
        let l = legendre_transform(|z| 2.0 * z, &grid, 1.0).unwrap();
        assert!(l.at_boundary);
        assert_eq!(l.argmax, -5.0);
    }

    #[test]
    fn empty_domain_is_reported() {
        let grid = linspace(0.0, 1.0, 5);
        assert!(matches!(
            legendre_transform(|_| f64::INFINITY, &grid, 0.0),
            Err(Error::EmptyDomain(_))
        ));
    }

    #[test]
    fn infinite_values_restrict_the_domain() {
        let grid = linspace(-2.0, 2.0, 41);
        let f = |z: f64| if z > 1.0 { f64::INFINITY } else { 0.5 * z * z };
        let l = legendre_transform(f, &grid, 3.0).unwrap();
        // Constrained to z ≤ 1: 3·1 − 1/2.
        assert!((l.value - 2.5).abs() < 1e-9);
        assert!(l.at_boundary);
    }

    #[test]
    fn tabulated_interpolation_and_convexity() {
        let t = Tabulated::sample(linspace(0.0, 2.0, 21), |z| z * z).unwrap();
        assert!(t.is_convex(0.0));
        assert!((t.eval(1.05) - 1.1025).abs() < 0.01);
        assert_eq!(t.eval(2.5), f64::INFINITY);
        let bumpy = Tabulated::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0]).unwrap();
        assert!(!bumpy.is_convex(1e-12));
    }

    #[test]
    fn golden_section_finds_the_peak() {
        let (x, v) = golden_section_max(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-6);
        assert!(v <= 0.0);
    }

}
