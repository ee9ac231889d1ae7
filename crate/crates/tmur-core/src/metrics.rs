//! Accuracy and calibration metrics over batch predictions.
//!
//! Two calibration errors are reported. `prob_ece` bins samples by their top
//! predictive probability; since the expected probability of the argmax
//! class can never fall below 1/K, its bins tile `[1/K, 1]`. `u_ece` bins by
//! predictive uncertainty over `[0, 1]` and compares bin accuracy against
//! `1 - mean(u)`, treating uncertainty as a predicted error rate.

use crate::error::{Result, TmurError};
use crate::model::PredictionBatch;

#[derive(Clone, Copy, Debug)]
pub struct PredictionRecord {
    pub predicted: usize,
    pub actual: usize,
    /// Top predictive probability.
    pub confidence: f64,
    /// Predictive uncertainty K/S.
    pub uncertainty: f64,
}

/// A set of per-sample predictions with the class count they came from.
#[derive(Clone, Debug)]
pub struct PredictionSet {
    records: Vec<PredictionRecord>,
    num_classes: usize,
}

impl PredictionSet {
    pub fn new(num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(TmurError::domain("prediction sets need at least 2 classes"));
        }
        Ok(PredictionSet {
            records: Vec::new(),
            num_classes,
        })
    }

    pub fn push(&mut self, record: PredictionRecord) -> Result<()> {
        let k = self.num_classes;
        if record.predicted >= k || record.actual >= k {
            return Err(TmurError::domain(format!(
                "label out of range for {k} classes"
            )));
        }
        let slack = 1e-9;
        if !record.confidence.is_finite()
            || record.confidence < 1.0 / k as f64 - slack
            || record.confidence > 1.0 + slack
        {
            return Err(TmurError::domain(format!(
                "confidence {} outside [1/{k}, 1]",
                record.confidence
            )));
        }
        if !record.uncertainty.is_finite()
            || record.uncertainty <= 0.0
            || record.uncertainty > 1.0 + slack
        {
            return Err(TmurError::domain(format!(
                "uncertainty {} outside (0, 1]",
                record.uncertainty
            )));
        }
        self.records.push(record);
        Ok(())
    }

    /// Pair a prediction batch with ground-truth labels.
    pub fn from_batch(batch: &PredictionBatch, actual: &[usize], num_classes: usize) -> Result<Self> {
        if batch.labels.len() != actual.len() {
            return Err(TmurError::shape(format!(
                "{} predictions for {} labels",
                batch.labels.len(),
                actual.len()
            )));
        }
        let mut set = PredictionSet::new(num_classes)?;
        for (i, (&predicted, &actual)) in batch.labels.iter().zip(actual).enumerate() {
            let confidence = batch
                .probabilities
                .row(i)
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            set.push(PredictionRecord {
                predicted,
                actual,
                confidence,
                uncertainty: batch.uncertainty[i],
            })?;
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn records(&self) -> &[PredictionRecord] {
        &self.records
    }

    fn require_nonempty(&self) -> Result<()> {
        if self.records.is_empty() {
            return Err(TmurError::domain("no predictions to evaluate"));
        }
        Ok(())
    }
}

pub fn accuracy(set: &PredictionSet) -> Result<f64> {
    set.require_nonempty()?;
    let correct = set
        .records
        .iter()
        .filter(|r| r.predicted == r.actual)
        .count();
    Ok(correct as f64 / set.len() as f64)
}

pub fn mean_uncertainty(set: &PredictionSet) -> Result<f64> {
    set.require_nonempty()?;
    Ok(set.records.iter().map(|r| r.uncertainty).sum::<f64>() / set.len() as f64)
}

/// Which per-sample scalar a table bins on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinAxis {
    Confidence,
    Uncertainty,
}

impl BinAxis {
    fn range(self, num_classes: usize) -> (f64, f64) {
        match self {
            BinAxis::Confidence => (1.0 / num_classes as f64, 1.0),
            BinAxis::Uncertainty => (0.0, 1.0),
        }
    }

    fn value(self, r: &PredictionRecord) -> f64 {
        match self {
            BinAxis::Confidence => r.confidence,
            BinAxis::Uncertainty => r.uncertainty,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ReliabilityBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// Mean of the binned axis over members; 0 for empty bins.
    pub mean_axis: f64,
    /// Fraction of correct predictions among members; 0 for empty bins.
    pub accuracy: f64,
}

/// Equal-width binning of predictions along the chosen axis.
pub fn reliability_table(
    set: &PredictionSet,
    axis: BinAxis,
    bins: usize,
) -> Result<Vec<ReliabilityBin>> {
    set.require_nonempty()?;
    if bins == 0 {
        return Err(TmurError::domain("need at least one bin"));
    }
    let (lo, hi) = axis.range(set.num_classes);
    let width = (hi - lo) / bins as f64;
    let mut count = vec![0usize; bins];
    let mut axis_sum = vec![0.0; bins];
    let mut correct = vec![0usize; bins];
    for r in &set.records {
        let v = axis.value(r);
        let idx = (((v - lo) / width).floor() as isize).clamp(0, bins as isize - 1) as usize;
        count[idx] += 1;
        axis_sum[idx] += v;
        if r.predicted == r.actual {
            correct[idx] += 1;
        }
    }
    Ok((0..bins)
        .map(|b| ReliabilityBin {
            lo: lo + b as f64 * width,
            hi: lo + (b + 1) as f64 * width,
            count: count[b],
            mean_axis: if count[b] > 0 {
                axis_sum[b] / count[b] as f64
            } else {
                0.0
            },
            accuracy: if count[b] > 0 {
                correct[b] as f64 / count[b] as f64
            } else {
                0.0
            },
        })
        .collect())
}

/// Expected calibration error of top-probability confidence:
/// `Σ_b (n_b/N) · |acc_b − conf_b|` over equal-width bins on `[1/K, 1]`.
pub fn prob_ece(set: &PredictionSet, bins: usize) -> Result<f64> {
    let table = reliability_table(set, BinAxis::Confidence, bins)?;
    let n = set.len() as f64;
    Ok(table
        .iter()
        .filter(|b| b.count > 0)
        .map(|b| (b.count as f64 / n) * (b.accuracy - b.mean_axis).abs())
        .sum())
}

/// Uncertainty calibration error: `Σ_b (n_b/N) · |acc_b − (1 − ū_b)|` over
/// equal-width bins on `[0, 1]`.
pub fn u_ece(set: &PredictionSet, bins: usize) -> Result<f64> {
    let table = reliability_table(set, BinAxis::Uncertainty, bins)?;
    let n = set.len() as f64;
    Ok(table
        .iter()
        .filter(|b| b.count > 0)
        .map(|b| (b.count as f64 / n) * (b.accuracy - (1.0 - b.mean_axis)).abs())
        .sum())
}

#[derive(Clone, Copy, Debug)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Equal-width histogram of predictive uncertainty over `[0, 1]`.
pub fn uncertainty_histogram(set: &PredictionSet, bins: usize) -> Result<Vec<HistogramBin>> {
    let table = reliability_table(set, BinAxis::Uncertainty, bins)?;
    Ok(table
        .iter()
        .map(|b| HistogramBin {
            lo: b.lo,
            hi: b.hi,
            count: b.count,
        })
        .collect())
}

pub const DEFAULT_BINS: usize = 15;

/// Everything the evaluation artifacts need, computed in one pass.
#[derive(Clone, Debug)]
pub struct MetricsReport {
    pub num_samples: usize,
    pub num_classes: usize,
    pub bins: usize,
    pub accuracy: f64,
    pub prob_ece: f64,
    pub u_ece: f64,
    pub mean_uncertainty: f64,
    pub reliability_confidence: Vec<ReliabilityBin>,
    pub reliability_uncertainty: Vec<ReliabilityBin>,
    pub histogram: Vec<HistogramBin>,
}

pub fn evaluate(set: &PredictionSet, bins: usize) -> Result<MetricsReport> {
    Ok(MetricsReport {
        num_samples: set.len(),
        num_classes: set.num_classes(),
        bins,
        accuracy: accuracy(set)?,
        prob_ece: prob_ece(set, bins)?,
        u_ece: u_ece(set, bins)?,
        mean_uncertainty: mean_uncertainty(set)?,
        reliability_confidence: reliability_table(set, BinAxis::Confidence, bins)?,
        reliability_uncertainty: reliability_table(set, BinAxis::Uncertainty, bins)?,
        histogram: uncertainty_histogram(set, bins)?,
    })
}
