//! Random draws from a [`DensityModel`].
//!
//! Building a [`Sampler`] does the expensive preparation (inverse-CDF
//! tables, tail masses) once; draws then only need a random stream.

use alloc::boxed::Box;
use alloc::vec;
use core::f64::consts::E;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};

use super::model::{DensityModel, PowerTail};
use super::quasi_gaussian::QuasiGaussianParams;
use super::stable::{StableLaw, V_RANGE};
use super::tabulated::{InverseCdfTable, DEFAULT_INTERVALS};
use crate::prelude::*;
use crate::quadrature::{integrate, QuadratureOptions};
use crate::{Error, Result};

/// Consecutive rejections after which a rejection sampler gives up.
pub const MAX_REJECTIONS: u64 = 1_000_000;

/// Quasi-Gaussian tables span `a ± 10σ`.
const QG_TABLE_HALF_WIDTH: f64 = 10.0;
/// Power-tail bulk table spans `[−L, L]`; beyond it a Pareto envelope.
const POWER_TAIL_BULK: f64 = 50.0;

#[derive(Debug, Clone)]
enum Kind {
    Gaussian { mean: f64, sd: f64 },
    Table(InverseCdfTable),
    Mixture {
        cumulative: Vec<f64>,
        components: Vec<Vec<InverseCdfTable>>,
    },
    StretchedExp { gamma: Gamma<f64>, r: f64, scale: f64 },
    PowerTail {
        bulk: InverseCdfTable,
        tail_prob: f64,
        p: f64,
        ln2_edge: f64,
    },
    Stable(StableLaw),
    Cauchy,
    Tilted(Box<Sampler>),
}

/// Prepared sampler for one model.
#[derive(Debug, Clone)]
pub struct Sampler {
    kind: Kind,
    dim: usize,
}

pub(super) fn qg_table(law: &QuasiGaussianParams) -> Result<InverseCdfTable> {
    let half = QG_TABLE_HALF_WIDTH * law.sigma();
    let a = law.center();
    // The weight can be singular or vanish at the center; grade the knots
    // geometrically into it so no single cell holds a visible share of mass.
    let cell = 2.0 * half / DEFAULT_INTERVALS as f64;
    let mut knots = vec![a];
    for j in 1..48 {
        let d = cell * 0.5f64.powi(j);
        knots.extend([a - d, a + d]);
    }
    InverseCdfTable::build(|x| law.density(x), a - half, a + half, DEFAULT_INTERVALS, &knots)
}

impl Sampler {
    pub fn new(model: &DensityModel) -> Result<Self> {
        let kind = match model {
            DensityModel::Gaussian(g) => Kind::Gaussian {
                mean: g.mean(),
                sd: g.sd(),
            },
            DensityModel::QuasiGaussian(q) => Kind::Table(qg_table(q)?),
            DensityModel::Mixture(m) => {
                let mut acc = 0.0;
                let cumulative = m
                    .weights()
                    .iter()
                    .map(|w| {
                        acc += w;
                        acc
                    })
                    .collect();
                let components = m
                    .components()
                    .iter()
                    .map(|c| c.iter().map(qg_table).collect::<Result<Vec<_>>>())
                    .collect::<Result<Vec<_>>>()?;
                Kind::Mixture {
                    cumulative,
                    components,
                }
            }
            DensityModel::StretchedExp(s) => Kind::StretchedExp {
                gamma: Gamma::new(1.0 / s.r(), 1.0)
                    .map_err(|_| Error::invalid("r", "gamma shape out of range"))?,
                r: s.r(),
                scale: s.scale(),
            },
            DensityModel::PowerTail(pt) => power_tail_kind(pt)?,
            DensityModel::Stable(s) => Kind::Stable(s.clone()),
            DensityModel::Cauchy => Kind::Cauchy,
            DensityModel::Tilted { base, .. } => Kind::Tilted(Box::new(Sampler::new(base)?)),
        };
        Ok(Sampler {
            kind,
            dim: model.dim(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// One scalar draw; a multivariate mixture yields its first coordinate.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        Ok(match &self.kind {
            Kind::Gaussian { mean, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sd * z
            }
            Kind::Table(t) => t.quantile(rng.random::<f64>()),
            Kind::Mixture { .. } => {
                let mut buf = Vec::with_capacity(self.dim);
                self.sample_point(rng, &mut buf)?;
                buf[0]
            }
            Kind::StretchedExp { gamma, r, scale } => {
                let g = gamma.sample(rng);
                let mag = scale * g.powf(1.0 / r);
                if rng.random::<bool>() {
                    mag
                } else {
                    -mag
                }
            }
            Kind::PowerTail {
                bulk,
                tail_prob,
                p,
                ln2_edge,
            } => {
                if rng.random::<f64>() < *tail_prob {
                    let mag = power_tail_excess(rng, *p, *ln2_edge)?;
                    if rng.random::<bool>() {
                        mag
                    } else {
                        -mag
                    }
                } else {
                    bulk.quantile(rng.random::<f64>())
                }
            }
            Kind::Stable(law) => {
                let v = (rng.random::<f64>() * 2.0 - 1.0) * V_RANGE;
                let w: f64 = Exp1.sample(rng);
                law.transform(v, w)
            }
            Kind::Cauchy => {
                let u: f64 = rng.random::<f64>();
                (core::f64::consts::PI * (u - 0.5)).tan()
            }
            Kind::Tilted(base) => {
                let mut last = f64::NAN;
                for _ in 0..MAX_REJECTIONS {
                    let x = base.sample(rng)?;
                    if rng.random::<f64>() < (-x.abs()).exp() {
                        return Ok(x);
                    }
                    last = x;
                }
                return Err(Error::RejectionExhausted {
                    attempts: MAX_REJECTIONS,
                    last,
                });
            }
        })
    }

    /// One draw of a point in `R^d`, appended to `out` after clearing it.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) -> Result<()> {
        out.clear();
        if let Kind::Mixture {
            cumulative,
            components,
        } = &self.kind
        {
            let u: f64 = rng.random();
            let k = cumulative.partition_point(|&c| c <= u).min(components.len() - 1);
            for table in &components[k] {
                out.push(table.quantile(rng.random::<f64>()));
            }
        } else {
            out.push(self.sample(rng)?);
        }
        Ok(())
    }

    /// `count` scalar draws.
    pub fn sample_n<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Result<Vec<f64>> {
        (0..count).map(|_| self.sample(rng)).collect()
    }
}

/// `count` i.i.d. scalar draws from `model`.
pub fn sample<R: Rng + ?Sized>(model: &DensityModel, rng: &mut R, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::invalid("count", "must be at least 1"));
    }
    Sampler::new(model)?.sample_n(rng, count)
}

fn power_tail_kind(pt: &PowerTail) -> Result<Kind> {
    let l = POWER_TAIL_BULK;
    let bulk = InverseCdfTable::build(|x| pt.ln_density(x).exp(), -l, l, DEFAULT_INTERVALS, &[0.0])?;
    let opts = QuadratureOptions {
        abs_tol: 1e-14,
        ..QuadratureOptions::default()
    };
    let upper = integrate(|x| pt.ln_density(x).exp(), l, f64::INFINITY, &opts).into_result(&opts)?;
    let tail_prob = 2.0 * upper.value / (2.0 * upper.value + bulk.mass());
    Ok(Kind::PowerTail {
        bulk,
        tail_prob,
        p: pt.p(),
        ln2_edge: (E + l).ln().powi(2),
    })
}

/// `|X|` conditioned on `|X| > L`: Pareto proposal `L·U^{−1/p}` against the
/// envelope `x^{−(p+1)}/ln²(e+L)`, accepted with the exact density ratio.
fn power_tail_excess<R: Rng + ?Sized>(rng: &mut R, p: f64, ln2_edge: f64) -> Result<f64> {
    let l = POWER_TAIL_BULK;
    let mut last = f64::NAN;
    for _ in 0..MAX_REJECTIONS {
        let u: f64 = 1.0 - rng.random::<f64>();
        let x = l * u.powf(-1.0 / p);
        let xp = x.powf(p + 1.0);
        let ratio = if xp.is_finite() { xp / (1.0 + xp) } else { 1.0 } * ln2_edge / (E + x).ln().powi(2);
        if rng.random::<f64>() < ratio {
            return Ok(x);
        }
        last = x;
    }
    Err(Error::RejectionExhausted {
        attempts: MAX_REJECTIONS,
        last,
    })
}
