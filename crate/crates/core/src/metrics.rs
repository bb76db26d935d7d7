//! Calibration error, accuracy and rank correlation.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Class probabilities for one image plus the ground truth, if known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub image_id: String,
    pub probs: Vec<f64>,
    pub predicted_class: usize,
    pub true_class: Option<usize>,
}

impl PredictionRecord {
    /// Validates `probs` and takes the argmax, lowest index on ties.
    pub fn new(image_id: impl Into<String>, probs: Vec<f64>, true_class: Option<usize>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Usage("empty probability vector".into()));
        }
        let total: f64 = probs.iter().sum();
        if probs.iter().any(|p| p.is_nan() || *p < 0.0) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::Numeric(format!("not a distribution: {probs:?}")));
        }
        if let Some(t) = true_class.filter(|&t| t >= probs.len()) {
            return Err(Error::Usage(format!("true class {t} out of range")));
        }
        let predicted_class = argmax(&probs);
        Ok(Self {
            image_id: image_id.into(),
            probs,
            predicted_class,
            true_class,
        })
    }

    pub fn confidence(&self) -> f64 {
        self.probs[self.predicted_class]
    }

    fn correct(&self) -> Result<bool> {
        self.true_class
            .map(|t| t == self.predicted_class)
            .ok_or_else(|| Error::Usage(format!("record {} has no true class", self.image_id)))
    }
}

/// Index of the largest value; the first one wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub count: usize,
    pub mean_confidence: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub rms_error: f64,
    pub bins: Vec<CalibrationBin>,
}

/// Adaptive bin count: `min(ceil(√N), N)`.
pub fn adaptive_bin_count(n: usize) -> usize {
    ((n as f64).sqrt().ceil() as usize).clamp(1, n.max(1))
}

/// RMS calibration error with equal-count bins over confidence.
pub fn rms_calibration_error(records: &[PredictionRecord]) -> Result<CalibrationReport> {
    rms_calibration_error_with_bins(records, adaptive_bin_count(records.len()))
}

/// As [`rms_calibration_error`] with an explicit bin count (capped at N).
///
/// Records are sorted by confidence (ties by image id), then split into
/// contiguous bins whose sizes differ by at most one, larger bins first.
pub fn rms_calibration_error_with_bins(records: &[PredictionRecord], bins: usize) -> Result<CalibrationReport> {
    if records.is_empty() {
        return Err(Error::Usage("calibration needs at least one record".into()));
    }
    if bins == 0 {
        return Err(Error::Usage("calibration needs at least one bin".into()));
    }
    let n = records.len();
    let bins = bins.min(n);
    let mut scored = records
        .iter()
        .map(|r| Ok((r.confidence(), r.correct()?, r.image_id.as_str())))
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.2.cmp(b.2)));

    let (base, extra) = (n / bins, n % bins);
    let mut out = Vec::with_capacity(bins);
    let mut sum_sq = 0.0;
    let mut start = 0;
    for k in 0..bins {
        let size = base + usize::from(k < extra);
        let chunk = &scored[start..start + size];
        start += size;
        let mean_confidence = chunk.iter().map(|c| c.0).sum::<f64>() / size as f64;
        let accuracy = chunk.iter().filter(|c| c.1).count() as f64 / size as f64;
        sum_sq += size as f64 / n as f64 * (mean_confidence - accuracy).powi(2);
        out.push(CalibrationBin {
            count: size,
            mean_confidence,
            accuracy,
        });
    }
    Ok(CalibrationReport {
        rms_error: sum_sq.sqrt(),
        bins: out,
    })
}

/// Fraction of records whose argmax equals the true class.
pub fn top1_accuracy(records: &[PredictionRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::Usage("accuracy of an empty record set".into()));
    }
    let mut hits = 0usize;
    for r in records {
        hits += usize::from(r.correct()?);
    }
    Ok(hits as f64 / records.len() as f64)
}

/// Average ranks (1-based); tied values share the mean of their positions.
pub fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i+1 ..= j share rank (i+1+j)/2
        let rank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

/// Spearman's ρ: Pearson correlation of mid-ranks.
///
/// `Ok(None)` when either side is constant (ρ undefined).
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<Option<f64>> {
    if xs.len() != ys.len() {
        return Err(Error::Usage(format!(
            "spearman on lengths {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 3 {
        return Err(Error::Usage("spearman needs at least 3 pairs".into()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("spearman on non-finite values".into()));
    }
    Ok(pearson(&mid_ranks(xs), &mid_ranks(ys)))
}

/// Two-pass Pearson correlation; `None` for zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
