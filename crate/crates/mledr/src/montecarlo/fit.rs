//! Least-squares fits of the four decay models to measured `Q̂_n`.

use serde::{Deserialize, Serialize};

use super::QnEstimate;
use crate::error::{Error, Result};

/// A fit within this much `R²` of the best one is considered as good; the
/// simplest such model is selected.
pub const SELECTION_MARGIN: f64 = 0.01;

/// Fewest usable cells accepted by [`fit_rate`].
pub const MIN_CELLS: usize = 4;

/// Decay models, in order of increasing complexity (the tie-break order).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateModel {
    /// `ln Q ≈ a + b·n`.
    Exponential,
    /// `ln Q ≈ a − c·ln n`.
    Polynomial,
    /// `ln(−ln Q) ≈ a + r·ln n`.
    Stretched,
    /// `Q ≈ C/ln n` (fitted through the origin in `1/ln n`).
    Logarithmic,
}

impl RateModel {
    pub const ALL: [RateModel; 4] = [
        RateModel::Exponential,
        RateModel::Polynomial,
        RateModel::Stretched,
        RateModel::Logarithmic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RateModel::Exponential => "exponential",
            RateModel::Polynomial => "polynomial",
            RateModel::Stretched => "stretched",
            RateModel::Logarithmic => "logarithmic",
        }
    }

    /// Transformed coordinates `(x, y)` of a cell, if defined.
    pub fn coordinates(self, n: u64, q: f64) -> Option<(f64, f64)> {
        let nf = n as f64;
        match self {
            RateModel::Exponential => Some((nf, q.ln())),
            RateModel::Polynomial => Some((nf.ln(), q.ln())),
            RateModel::Stretched => Some((nf.ln(), (-q.ln()).ln())),
            RateModel::Logarithmic => (n >= 2).then(|| (1.0 / nf.ln(), q)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub model: RateModel,
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
    /// Cells used by this model.
    pub points: usize,
    pub selected: bool,
}

impl RateFit {
    /// The model's own rate parameter: `b` (exponential, negative for
    /// decay), `c` (polynomial), `r` (stretched) or `C` (logarithmic).
    pub fn rate_parameter(&self) -> f64 {
        match self.model {
            RateModel::Polynomial => -self.slope,
            _ => self.slope,
        }
    }

    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFitReport {
    pub fits: Vec<RateFit>,
    /// Sample sizes of the cells that entered the fits.
    pub used: Vec<u64>,
    /// Sample sizes left out (no or too few hits, or `Q̂ = 1`).
    pub excluded: Vec<u64>,
}

impl RateFitReport {
    pub fn selected(&self) -> &RateFit {
        self.fits.iter().find(|f| f.selected).expect("one fit is always selected")
    }

    pub fn get(&self, model: RateModel) -> &RateFit {
        self.fits.iter().find(|f| f.model == model).expect("every model is fitted")
    }
}

fn r_squared(ss_res: f64, ss_tot: f64) -> f64 {
    if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else if ss_res <= 1e-24 {
        1.0
    } else {
        0.0
    }
}

/// Ordinary least squares `y ≈ a + b·x`; `(a, b, R²)`.
fn ols(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - a - b * p.0).powi(2)).sum();
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    (a, b, r_squared(ss_res, ss_tot))
}

/// Least squares through the origin `y ≈ b·x`; `(0, b, R²)` with the
/// centered total sum of squares.
fn ols_origin(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let k = pts.len() as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let b = pts.iter().map(|p| p.0 * p.1).sum::<f64>() / sxx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - b * p.0).powi(2)).sum();
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    (0.0, b, r_squared(ss_res, ss_tot))
}

/// Fits every model to the measurable cells with `0 < Q̂ < 1` and selects
/// the simplest one within [`SELECTION_MARGIN`] of the best `R²`.
pub fn fit_rate(estimates: &[QnEstimate]) -> Result<RateFitReport> {
    let (usable, excluded): (Vec<&QnEstimate>, Vec<&QnEstimate>) = estimates
        .iter()
        .partition(|e| e.measurable && e.p_hat > 0.0 && e.p_hat < 1.0);
    if usable.len() < MIN_CELLS {
        return Err(Error::Usage(format!(
            "rate fitting needs at least {MIN_CELLS} cells with 0 < Q < 1 and enough hits, got {}",
            usable.len()
        )));
    }
    let mut fits: Vec<RateFit> = RateModel::ALL
        .iter()
        .map(|&model| {
            let pts: Vec<(f64, f64)> = usable
                .iter()
                .filter_map(|e| model.coordinates(e.n, e.p_hat))
                .collect();
            let (intercept, slope, r_squared) = match (model, pts.len()) {
                (_, 0 | 1) => (f64::NAN, f64::NAN, 0.0),
                (RateModel::Logarithmic, _) => ols_origin(&pts),
                _ => ols(&pts),
            };
            RateFit {
                model,
                intercept,
                slope,
                r_squared,
                points: pts.len(),
                selected: false,
            }
        })
        .collect();
    let best = fits.iter().map(|f| f.r_squared).fold(f64::NEG_INFINITY, f64::max);
    let pick = fits
        .iter()
        .position(|f| f.r_squared >= best - SELECTION_MARGIN)
        .expect("the best fit qualifies");
    fits[pick].selected = true;
    Ok(RateFitReport {
        fits,
        used: usable.iter().map(|e| e.n).collect(),
        excluded: excluded.iter().map(|e| e.n).collect(),
    })
}
