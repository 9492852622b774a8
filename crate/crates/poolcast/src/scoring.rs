//! Proper scoring rules and the extremizing diagnostics.

use crate::{Error, Result};

/// Log score `−(y log p + (1−y) log(1−p))`. Negatively oriented: lower is
/// better, and the mean log score is minimized by maximum likelihood.
pub fn log_score(p: f64, y: bool) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) || !p.is_finite() {
        return Err(Error::Domain(format!(
            "log score requires p strictly inside (0,1), got {p}; clip upstream"
        )));
    }
    Ok(if y { -p.ln() } else { -(1.0 - p).ln() })
}

/// Asymmetric log score `(LS(c,y) − LS(p,y)) / LS(c, I_{p>c})`, positively
/// oriented and adjusted for the difficulty of beating the baseline `c`.
/// `p = c` maps to indicator 0 in the denominator (strict inequality).
pub fn asym_log_score(p: f64, y: bool, c: f64) -> Result<f64> {
    if !(c > 0.0 && c < 1.0) || !c.is_finite() {
        return Err(Error::Domain(format!(
            "asymmetric log score requires a baseline strictly inside (0,1), got {c}"
        )));
    }
    let numer = log_score(c, y)? - log_score(p, y)?;
    let denom = log_score(c, p > c)?;
    Ok(numer / denom)
}

/// Forecast/outcome rows with optional companions needed by the
/// extremizing diagnostics: the per-row average forecast and the scalar
/// prior-predictive probability.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    forecasts: Vec<f64>,
    outcomes: Vec<bool>,
    averages: Option<Vec<f64>>,
    prior: Option<f64>,
}

impl PredictionSet {
    pub const DEFAULT_CLIP: f64 = 1e-9;

    pub fn new(forecasts: Vec<f64>, outcomes: Vec<bool>) -> Result<Self> {
        if forecasts.is_empty() {
            return Err(Error::Domain("prediction set must be nonempty".into()));
        }
        if forecasts.len() != outcomes.len() {
            return Err(Error::Schema(format!(
                "{} forecasts vs {} outcomes",
                forecasts.len(),
                outcomes.len()
            )));
        }
        let mut clipped = Vec::with_capacity(forecasts.len());
        for (i, &p) in forecasts.iter().enumerate() {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(Error::Domain(format!(
                    "forecast {i} must be a probability in [0,1], got {p}"
                )));
            }
            clipped.push(p.clamp(Self::DEFAULT_CLIP, 1.0 - Self::DEFAULT_CLIP));
        }
        Ok(PredictionSet { forecasts: clipped, outcomes, averages: None, prior: None })
    }

    /// Attach the per-row average forecasts used by the extremizing rate.
    pub fn with_averages(mut self, averages: Vec<f64>) -> Result<Self> {
        if averages.len() != self.forecasts.len() {
            return Err(Error::Schema(format!(
                "{} averages vs {} forecasts",
                averages.len(),
                self.forecasts.len()
            )));
        }
        self.averages = Some(averages);
        Ok(self)
    }

    /// Attach the prior-predictive probability used by the extremizing rate.
    pub fn with_prior(mut self, prior: f64) -> Result<Self> {
        if !(prior > 0.0 && prior < 1.0) {
            return Err(Error::Domain(format!("prior must lie strictly inside (0,1), got {prior}")));
        }
        self.prior = Some(prior);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.forecasts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forecasts.is_empty()
    }

    pub fn forecasts(&self) -> &[f64] {
        &self.forecasts
    }

    pub fn outcomes(&self) -> &[bool] {
        &self.outcomes
    }

    pub fn averages(&self) -> Option<&[f64]> {
        self.averages.as_deref()
    }

    pub fn prior(&self) -> Option<f64> {
        self.prior
    }

    /// Fraction of outcomes equal to 1.
    pub fn base_rate(&self) -> f64 {
        self.outcomes.iter().filter(|&&y| y).count() as f64 / self.outcomes.len() as f64
    }

    pub fn mean_log_score(&self) -> Result<f64> {
        let mut total = 0.0;
        for (&p, &y) in self.forecasts.iter().zip(&self.outcomes) {
            total += log_score(p, y)?;
        }
        Ok(total / self.len() as f64)
    }

    pub fn mean_asym_log_score(&self, baseline: f64) -> Result<f64> {
        let mut total = 0.0;
        for (&p, &y) in self.forecasts.iter().zip(&self.outcomes) {
            total += asym_log_score(p, y, baseline)?;
        }
        Ok(total / self.len() as f64)
    }
}

/// AUC as the Mann–Whitney statistic: the fraction of
/// (positive, negative) pairs ranked correctly, ties credited one half.
/// Rank-summation form, O(n log n).
pub fn auc(preds: &PredictionSet) -> Result<f64> {
    let n = preds.len();
    let n_pos = preds.outcomes().iter().filter(|&&y| y).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(format!(
            "AUC needs both outcome classes; got {n_pos} positives and {n_neg} negatives"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        preds.forecasts()[a]
            .partial_cmp(&preds.forecasts()[b])
            .expect("forecasts are finite")
    });
    // Average ranks across tied forecasts.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && preds.forecasts()[order[j + 1]] == preds.forecasts()[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            if preds.outcomes()[idx] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Whether an aggregate forecast moves beyond the average forecast, away
/// from the prior-predictive probability on the same side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremizingClass {
    Extremizes,
    AntiExtremizes,
}

/// Classify an aggregate against the average forecast and the prior.
/// Defined only when `p_bar != p0` and `p_hat != p_bar`.
pub fn classify_extremizing(p_hat: f64, p_bar: f64, p0: f64) -> Result<ExtremizingClass> {
    if p_bar == p0 || p_hat == p_bar {
        return Err(Error::UndefinedClassification(format!(
            "classification requires p_bar != p0 and p_hat != p_bar \
             (p_hat={p_hat}, p_bar={p_bar}, p0={p0})"
        )));
    }
    let same_side = (p_hat - p0).signum() == (p_bar - p0).signum();
    let farther = (p_hat - p0).abs() > (p_bar - p0).abs();
    Ok(if same_side && farther {
        ExtremizingClass::Extremizes
    } else {
        ExtremizingClass::AntiExtremizes
    })
}

/// Extremizing rate over the classifiable rows of a prediction set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremizingRate {
    /// Fraction of classifiable rows that extremize.
    pub rate: f64,
    /// Number of rows that satisfied the classification preconditions.
    pub classified: usize,
    /// Rows excluded because the preconditions failed.
    pub excluded: usize,
}

/// Rate of extremizing over a prediction set carrying per-row averages and
/// a prior. Rows where the classification is undefined are excluded and
/// counted separately.
pub fn extremizing_rate(preds: &PredictionSet) -> Result<ExtremizingRate> {
    let averages = preds.averages().ok_or_else(|| {
        Error::Schema("extremizing rate needs per-row average forecasts".into())
    })?;
    let prior = preds
        .prior()
        .ok_or_else(|| Error::Schema("extremizing rate needs a prior probability".into()))?;
    let mut extremizes = 0usize;
    let mut classified = 0usize;
    let mut excluded = 0usize;
    for (&p_hat, &p_bar) in preds.forecasts().iter().zip(averages) {
        match classify_extremizing(p_hat, p_bar, prior) {
            Ok(ExtremizingClass::Extremizes) => {
                classified += 1;
                extremizes += 1;
            }
            Ok(ExtremizingClass::AntiExtremizes) => classified += 1,
            Err(_) => excluded += 1,
        }
    }
    if classified == 0 {
        return Err(Error::UndefinedMetric(format!(
            "no classifiable rows ({excluded} excluded)"
        )));
    }
    Ok(ExtremizingRate { rate: extremizes as f64 / classified as f64, classified, excluded })
}
