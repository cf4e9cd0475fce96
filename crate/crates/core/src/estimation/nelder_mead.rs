//! Box-constrained Nelder–Mead maximization (proposals are projected onto
//! the box).

use alloc::vec;

use crate::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Stop once the simplex diameter falls below `tol` times the widest
    /// box side.
    pub tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_iter: 200,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn project(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (xi, (lo, hi)) in x.iter_mut().zip(bounds) {
        *xi = xi.clamp(*lo, *hi);
    }
}

fn combine(a: &[f64], b: &[f64], t: f64, bounds: &[(f64, f64)]) -> Vec<f64> {
    // a + t·(b − a)
    let mut out: Vec<f64> = a.iter().zip(b).map(|(ai, bi)| ai + t * (bi - ai)).collect();
    project(&mut out, bounds);
    out
}

/// Maximizes `f` over the box starting from `start`; `step` is the initial
/// simplex edge along each coordinate.
pub fn maximize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    start: &[f64],
    step: &[f64],
    bounds: &[(f64, f64)],
    opts: &NelderMeadOptions,
) -> NelderMeadResult {
    let d = start.len();
    let width = bounds.iter().map(|(lo, hi)| hi - lo).fold(0.0, f64::max);
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    let mut x0 = start.to_vec();
    project(&mut x0, bounds);
    let v0 = eval(&x0);
    simplex.push((x0.clone(), v0));
    for k in 0..d {
        let mut x = x0.clone();
        // Step inwards when the start sits on the upper bound.
        x[k] = if x0[k] + step[k] <= bounds[k].1 {
            x0[k] + step[k]
        } else {
            x0[k] - step[k]
        };
        project(&mut x, bounds);
        let v = eval(&x);
        simplex.push((x, v));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        // Best first; stable sort keeps earlier vertices ahead on ties.
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        let diameter = simplex
            .iter()
            .skip(1)
            .map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter <= opts.tol * width {
            converged = true;
            break;
        }
        iterations += 1;

        let worst = simplex[d].clone();
        let mut centroid = vec![0.0; d];
        for (x, _) in &simplex[..d] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / d as f64;
            }
        }
        let reflected = combine(&centroid, &worst.0, -1.0, bounds);
        let fr = eval(&reflected);
        if fr > simplex[0].1 {
            let expanded = combine(&centroid, &worst.0, -2.0, bounds);
            let fe = eval(&expanded);
            simplex[d] = if fe > fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr > simplex[d - 1].1 {
            simplex[d] = (reflected, fr);
            continue;
        }
        let outside = fr > worst.1;
        let target = if outside { &reflected } else { &worst.0 };
        let contracted = combine(&centroid, target, 0.5, bounds);
        let fc = eval(&contracted);
        if (outside && fc >= fr) || (!outside && fc > worst.1) {
            simplex[d] = (contracted, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x = combine(&best, &vertex.0, 0.5, bounds);
            let v = eval(&x);
            *vertex = (x, v);
        }
    }
    simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
    let (point, value) = simplex.swap_remove(0);
    NelderMeadResult {
        point,
        value,
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_interior_maximum_of_a_quadratic() {
        let f = |x: &[f64]| -(x[0] - 0.3).powi(2) - 2.0 * (x[1] + 0.7).powi(2);
        let r = maximize(f, &[1.0, 1.0], &[0.25, 0.25], &[(-2.0, 2.0), (-2.0, 2.0)], &NelderMeadOptions::default());
        assert!(r.converged);
        assert!((r.point[0] - 0.3).abs() < 1e-7 && (r.point[1] + 0.7).abs() < 1e-7, "{:?}", r.point);
    }

    #[test]
    fn respects_the_box() {
        let f = |x: &[f64]| x[0];
        let r = maximize(f, &[0.0], &[0.1], &[(-1.0, 1.0)], &NelderMeadOptions::default());
        assert_eq!(r.point[0], 1.0);
    }

    #[test]
    fn iteration_cap_is_honored() {
        let f = |x: &[f64]| -(x[0] * x[0]);
        let opts = NelderMeadOptions { max_iter: 3, tol: 0.0 };
        let r = maximize(f, &[0.9], &[0.05], &[(-1.0, 1.0)], &opts);
        assert_eq!(r.iterations, 3);
        assert!(!r.converged);
    }
}
