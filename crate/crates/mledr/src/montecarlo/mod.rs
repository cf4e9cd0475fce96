//! Replicated simulation of the misclassification probability `Q_n` and of
//! the nuisance confidence probability `W_n`, plus empirical checks of the
//! moment-generating-function envelopes.
//!
//! Replication `r` at sample size `n` always draws from
//! `replication_stream(seed, n, r)`, and replications are grouped into fixed
//! blocks whose tallies are combined in block order, so every result is
//! independent of the number of worker threads.

mod fit;

pub use fit::{fit_rate, RateFit, RateFitReport, RateModel, SELECTION_MARGIN};

use mledr_core::distributions::Sampler;
use mledr_core::divergences::RateFunctions;
use mledr_core::estimation::{mle, MleResult, ParamPoint, ParamSpace};
use mledr_core::stream::replication_stream;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};

/// Replications per work item.
pub const BLOCK: u64 = 1024;

/// Failed replications tolerated in one cell.
pub const MAX_FAILURES: u64 = 10;

/// One cell of the `Q_n` experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QnEstimate {
    pub n: u64,
    /// Replications with `τ̂ ≥ 1`.
    pub hits: u64,
    /// Completed replications (failed ones are not counted).
    pub reps: u64,
    pub p_hat: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub failures: u64,
    /// Enough hits to enter rate fits.
    pub measurable: bool,
}

impl QnEstimate {
    pub fn new(n: u64, hits: u64, reps: u64, failures: u64, level: f64, min_hits: u64) -> Result<Self> {
        let (wilson_low, wilson_high) = wilson_interval(hits, reps, level)?;
        Ok(QnEstimate {
            n,
            hits,
            reps,
            p_hat: hits as f64 / reps as f64,
            wilson_low,
            wilson_high,
            failures,
            measurable: hits >= min_hits.max(1),
        })
    }
}

/// Wilson score interval for `hits` successes out of `reps` at two-sided
/// confidence `level`.
pub fn wilson_interval(hits: u64, reps: u64, level: f64) -> Result<(f64, f64)> {
    if reps == 0 || hits > reps {
        return Err(Error::Usage(format!("need 0 <= hits <= reps and reps > 0, got {hits}/{reps}")));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Usage(format!("confidence level {level} outside (0, 1)")));
    }
    let z = Normal::standard().inverse_cdf(0.5 + 0.5 * level);
    let r = reps as f64;
    let p = hits as f64 / r;
    let z2 = z * z;
    let center = p + z2 / (2.0 * r);
    let half = z * (p * (1.0 - p) / r + z2 / (4.0 * r * r)).sqrt();
    let denom = 1.0 + z2 / r;
    let low = if hits == 0 { 0.0 } else { ((center - half) / denom).clamp(0.0, p) };
    let high = if hits == reps { 1.0 } else { ((center + half) / denom).clamp(p, 1.0) };
    Ok((low, high))
}

/// Sampling and estimation state shared by the replications of one cell.
struct Cell<'a> {
    space: &'a ParamSpace,
    theta0: &'a ParamPoint,
    sampler: &'a Sampler,
    seed: u64,
    n: u64,
}

impl Cell<'_> {
    fn draw(&self, rep: u64, buf: &mut Vec<f64>) -> mledr_core::Result<()> {
        let mut rng = replication_stream(self.seed, self.n as u32, rep as u32);
        buf.clear();
        for _ in 0..self.n {
            buf.push(self.sampler.sample(&mut rng)?);
        }
        Ok(())
    }

    fn estimate(&self, rep: u64, buf: &mut Vec<f64>) -> mledr_core::Result<MleResult> {
        self.draw(rep, buf)?;
        mle(buf, self.space, self.theta0)
    }
}

/// Per-block tally: counters plus the earliest failure.
#[derive(Debug, Clone, Default)]
struct Tally<T> {
    values: T,
    done: u64,
    failures: u64,
    first_failure: Option<(u64, mledr_core::Error)>,
}

/// Runs `one` on replications `start..end` block by block (in parallel on the
/// current rayon pool) and merges the block tallies in block order.
fn run_blocks<T, F, M>(cell: &Cell<'_>, start: u64, end: u64, one: F, merge: M) -> Result<Tally<T>>
where
    T: Default + Send,
    F: Fn(&mut T, MleResult, &[f64]) + Sync,
    M: Fn(&mut T, T),
{
    let blocks: Vec<u64> = (start..end).step_by(BLOCK as usize).collect();
    let tallies: Vec<Tally<T>> = blocks
        .par_iter()
        .map(|&b| {
            let mut t = Tally::<T>::default();
            let mut buf = Vec::with_capacity(cell.n as usize);
            for rep in b..(b + BLOCK).min(end) {
                match cell.estimate(rep, &mut buf) {
                    Ok(res) => {
                        one(&mut t.values, res, &buf);
                        t.done += 1;
                    }
                    Err(e) => {
                        t.failures += 1;
                        if t.first_failure.is_none() {
                            t.first_failure = Some((rep, e));
                        }
                    }
                }
            }
            t
        })
        .collect();
    let mut total = Tally::<T>::default();
    for t in tallies {
        merge(&mut total.values, t.values);
        total.done += t.done;
        total.failures += t.failures;
        if total.first_failure.is_none() {
            total.first_failure = t.first_failure;
        }
    }
    if total.failures >= MAX_FAILURES {
        let (rep, source) = total.first_failure.take().expect("failures were recorded");
        return Err(Error::CellAborted {
            n: cell.n,
            failures: total.failures,
            rep,
            source,
        });
    }
    Ok(total)
}

fn sampler_for(config: &ExperimentConfig) -> Result<Sampler> {
    let model = config.space.model(&config.theta0)?;
    Ok(Sampler::new(&model)?)
}

/// `Q̂_n = #{τ̂ ≥ 1}/reps` for each `n` of the grid.
///
/// With adaptive replication the count doubles (up to the cap) until the
/// cell has `min_hits` hits; the extra replications continue the same
/// stream indices, so a larger cap only ever extends a run.
pub fn estimate_qn(config: &ExperimentConfig) -> Result<Vec<QnEstimate>> {
    let sampler = sampler_for(config)?;
    let s = &config.settings;
    let (min_hits, cap) = match s.adaptive {
        Some(a) => (a.min_hits, a.max_replications),
        None => (1, s.replications),
    };
    let mut out = Vec::with_capacity(s.n_grid.len());
    for &n in &s.n_grid {
        let cell = Cell {
            space: &config.space,
            theta0: &config.theta0,
            sampler: &sampler,
            seed: s.master_seed,
            n,
        };
        let (mut hits, mut done, mut failures) = (0u64, 0u64, 0u64);
        let mut issued = 0u64;
        let mut target = s.replications;
        loop {
            let t = run_blocks(
                &cell,
                issued,
                target,
                |h: &mut u64, r, _| *h += u64::from(r.tau_hat >= 1),
                |a, b| *a += b,
            )?;
            hits += t.values;
            done += t.done;
            failures += t.failures;
            if failures >= MAX_FAILURES {
                return Err(Error::Runtime(format!(
                    "cell n = {n} aborted after {failures} failed replications"
                )));
            }
            issued = target;
            if hits >= min_hits || target >= cap {
                break;
            }
            target = (2 * target).min(cap);
        }
        out.push(QnEstimate::new(n, hits, done, failures, s.confidence_level, min_hits)?);
    }
    Ok(out)
}

/// One cell of the `W_n` experiment; `w = v1 + v2` holds exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WnEstimate {
    pub n: u64,
    pub reps: u64,
    pub w: f64,
    /// The event together with `τ̂ = 0`.
    pub v1: f64,
    /// The event together with `τ̂ ≥ 1`.
    pub v2: f64,
}

/// `W_n = P(√n·|β̂ − β₀| > u)` (Euclidean norm over the coordinates of `β`),
/// split by whether `τ̂` is right.
pub fn estimate_wn(config: &ExperimentConfig, u: f64) -> Result<Vec<WnEstimate>> {
    if config.space.beta_dim() == 0 {
        return Err(Error::Usage("W_n needs a continuous parameter component".into()));
    }
    if !(u > 0.0) {
        return Err(Error::Usage(format!("threshold u = {u} must be positive")));
    }
    let sampler = sampler_for(config)?;
    let s = &config.settings;
    let beta0 = &config.theta0.beta;
    let mut out = Vec::with_capacity(s.n_grid.len());
    for &n in &s.n_grid {
        let cell = Cell {
            space: &config.space,
            theta0: &config.theta0,
            sampler: &sampler,
            seed: s.master_seed,
            n,
        };
        let root_n = (n as f64).sqrt();
        let t = run_blocks(
            &cell,
            0,
            s.replications,
            |v: &mut (u64, u64), r, _| {
                let dist = r
                    .beta_hat
                    .iter()
                    .zip(beta0)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                if root_n * dist > u {
                    if r.tau_hat == 0 {
                        v.0 += 1;
                    } else {
                        v.1 += 1;
                    }
                }
            },
            |a, b| {
                a.0 += b.0;
                a.1 += b.1;
            },
        )?;
        let reps = t.done.max(1) as f64;
        let (v1, v2) = (t.values.0 as f64 / reps, t.values.1 as f64 / reps);
        out.push(WnEstimate {
            n,
            reps: t.done,
            w: (t.values.0 + t.values.1) as f64 / reps,
            v1,
            v2,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeKind {
    /// `E e^{λζ_n(θ)} ≤ e^{ν(λ)}`.
    Level,
    /// `E e^{λ[ζ_n(θ₁) − ζ_n(θ₂)]} ≤ e^{ν(λ·d(θ₁, θ₂))}`.
    Increment,
}

/// One `(λ, θ, n)` cell of the envelope check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeCheck {
    pub kind: EnvelopeKind,
    pub lambda: f64,
    pub n: u64,
    /// Index into the `Θ₁` grid of the rate functions.
    pub theta: usize,
    pub theta2: Option<usize>,
    pub empirical: f64,
    pub std_error: f64,
    pub envelope: f64,
    pub pass: bool,
    /// The sampling error is too large (or infinite) to judge.
    pub inconclusive: bool,
}

/// Relative standard error above which a cell is inconclusive.
pub const ENVELOPE_MAX_REL_SE: f64 = 0.1;

/// Empirical moment generating functions of `ζ_n(θ) = n^{−1/2} Σ η⁰ᵢ(θ)`
/// (with `η⁰ = ln(f_θ/f₀) + H_r(θ)`) and of its increments, over the `Θ₁`
/// grid of `rates`, against the envelopes `e^{ν(λ)}` and `e^{ν(λd)}`.
///
/// A cell passes when the mean is at most `envelope·(1 + 3·SE/mean)`.
pub fn mgf_envelope_check(
    config: &ExperimentConfig,
    rates: &RateFunctions,
    lambdas: &[f64],
) -> Result<Vec<EnvelopeCheck>> {
    let sampler = sampler_for(config)?;
    let s = &config.settings;
    let thetas = rates.thetas();
    let levels = rates.kl_levels();
    let k = thetas.len();
    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let cells = lambdas.len() * (k + pairs.len());
    let family = config.space.family();
    let mut out = Vec::new();
    for &n in &s.n_grid {
        let cell = Cell {
            space: &config.space,
            theta0: &config.theta0,
            sampler: &sampler,
            seed: s.master_seed,
            n,
        };
        let scale = 1.0 / (n as f64).sqrt();
        // Draws only: the MGF check does not need the estimator.
        let blocks: Vec<u64> = (0..s.replications).step_by(BLOCK as usize).collect();
        let sums: Vec<Result<(Vec<f64>, Vec<f64>)>> = blocks
            .par_iter()
            .map(|&b| {
                let mut sum = vec![0.0; cells];
                let mut sq = vec![0.0; cells];
                let mut buf = Vec::with_capacity(n as usize);
                let mut zeta = vec![0.0; k];
                for rep in b..(b + BLOCK).min(s.replications) {
                    cell.draw(rep, &mut buf)?;
                    for (i, th) in thetas.iter().enumerate() {
                        let total: f64 = buf
                            .iter()
                            .map(|&x| family.ln_ratio(x, th, &config.theta0) + levels[i])
                            .sum();
                        zeta[i] = total * scale;
                    }
                    let mut c = 0;
                    for &lambda in lambdas {
                        for &z in &zeta {
                            let e = (lambda * z).exp();
                            sum[c] += e;
                            sq[c] += e * e;
                            c += 1;
                        }
                        for &(i, j) in &pairs {
                            let e = (lambda * (zeta[i] - zeta[j])).exp();
                            sum[c] += e;
                            sq[c] += e * e;
                            c += 1;
                        }
                    }
                }
                Ok((sum, sq))
            })
            .collect();
        let mut sum = vec![0.0; cells];
        let mut sq = vec![0.0; cells];
        for r in sums {
            let (a, b) = r?;
            for c in 0..cells {
                sum[c] += a[c];
                sq[c] += b[c];
            }
        }
        let reps = s.replications as f64;
        let mut c = 0;
        for &lambda in lambdas {
            let entries = (0..k)
                .map(|i| (EnvelopeKind::Level, i, None, lambda))
                .chain(
                    pairs
                        .iter()
                        .map(|&(i, j)| (EnvelopeKind::Increment, i, Some(j), lambda * rates.theta_distance(i, j))),
                )
                .collect::<Vec<_>>();
            for (kind, i, j, arg) in entries {
                let mean = sum[c] / reps;
                let var = (sq[c] / reps - mean * mean).max(0.0) * reps / (reps - 1.0);
                let se = (var / reps).sqrt();
                let envelope = rates.nu(arg).exp();
                let inconclusive = !(mean.is_finite() && se.is_finite()) || se > ENVELOPE_MAX_REL_SE * mean;
                let pass = !inconclusive && mean <= envelope * (1.0 + 3.0 * se / mean);
                out.push(EnvelopeCheck {
                    kind,
                    lambda,
                    n,
                    theta: i,
                    theta2: j,
                    empirical: mean,
                    std_error: se,
                    envelope,
                    pass,
                    inconclusive,
                });
                c += 1;
            }
        }
    }
    Ok(out)
}
