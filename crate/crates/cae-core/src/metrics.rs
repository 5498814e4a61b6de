//! Biometric evaluation: score sets, ROC curves with trapezoidal AUC, EER
//! threshold calibration, and HTER at a fixed operating point.
//!
//! Conventions: the score is the reconstruction error and the positive class
//! for ROC purposes is `imposter` (higher error means more imposter-like).
//! FPR is the fraction of imposters falsely accepted (score strictly below
//! the threshold); FNR is the fraction of clients falsely rejected (score at
//! or above it). Acceptance is strict-less-than, consistent with
//! [`CaeModel::classify`](crate::model::CaeModel::classify).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::model::{CaeModel, Label, Threshold};
use crate::tensor::Tensor;

/// Paired (reconstruction error, ground truth) observations.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet {
    entries: Vec<(f64, Label)>,
    provenance: String,
}

impl ScoreSet {
    /// Scores must be finite and non-negative; the set must be non-empty.
    pub fn new(entries: Vec<(f64, Label)>, provenance: impl Into<String>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Arg("score set must not be empty".into()));
        }
        if let Some((bad, _)) = entries.iter().find(|(s, _)| !s.is_finite() || *s < 0.0) {
            return Err(Error::Arg(format!(
                "scores must be finite and non-negative, got {bad}"
            )));
        }
        Ok(Self {
            entries,
            provenance: provenance.into(),
        })
    }

    pub fn entries(&self) -> &[(f64, Label)] {
        &self.entries
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.entries.iter().filter(|(_, l)| *l == label).count()
    }

    fn require_both_labels(&self) -> Result<()> {
        if self.count(Label::Client) == 0 || self.count(Label::Imposter) == 0 {
            return Err(Error::Metric(format!(
                "both labels required: {} clients, {} imposters in \"{}\"",
                self.count(Label::Client),
                self.count(Label::Imposter),
                self.provenance
            )));
        }
        Ok(())
    }
}

/// A threshold together with the error rates it induces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub threshold: f64,
    /// Fraction of imposters with score below the threshold (false accepts).
    pub fpr: f64,
    /// Fraction of clients with score at or above the threshold (false
    /// rejects).
    pub fnr: f64,
}

impl OperatingPoint {
    /// Half total error rate, always the exact mean of FPR and FNR.
    pub fn hter(&self) -> f64 {
        (self.fpr + self.fnr) / 2.0
    }

    /// Fraction of imposters at or above the threshold (detected attacks).
    pub fn tpr(&self) -> f64 {
        1.0 - self.fpr
    }
}

/// Operating points swept over every distinguishable threshold, plus the
/// area under the ROC curve.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// Sweep in ascending threshold order, including the -inf/+inf endpoints.
    pub points: Vec<OperatingPoint>,
    pub auc: f64,
}

/// Scores every sample with the model's reconstruction error, preserving
/// dataset order.
pub fn score_dataset(
    model: &CaeModel,
    dataset: &[(Tensor, Label)],
    provenance: impl Into<String>,
) -> Result<ScoreSet> {
    if dataset.is_empty() {
        return Err(Error::Arg("dataset must not be empty".into()));
    }
    let mut entries = Vec::with_capacity(dataset.len());
    for (image, label) in dataset {
        entries.push((model.reconstruction_error(image)?, *label));
    }
    ScoreSet::new(entries, provenance)
}

/// Error rates at a fixed threshold, by direct counting. A missing class
/// contributes a vacuous rate of zero.
pub fn hter_at(scores: &ScoreSet, threshold: &Threshold) -> OperatingPoint {
    operating_point(scores, threshold.value)
}

fn operating_point(scores: &ScoreSet, threshold: f64) -> OperatingPoint {
    let mut imposters = 0usize;
    let mut accepted_imposters = 0usize;
    let mut clients = 0usize;
    let mut rejected_clients = 0usize;
    for &(score, label) in scores.entries() {
        match label {
            Label::Imposter => {
                imposters += 1;
                if score < threshold {
                    accepted_imposters += 1;
                }
            }
            Label::Client => {
                clients += 1;
                if score >= threshold {
                    rejected_clients += 1;
                }
            }
        }
    }
    let rate = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    OperatingPoint {
        threshold,
        fpr: rate(accepted_imposters, imposters),
        fnr: rate(rejected_clients, clients),
    }
}

/// Candidate thresholds: midpoints between consecutive distinct scores plus
/// the two infinite endpoints.
fn sweep_thresholds(scores: &ScoreSet) -> Vec<f64> {
    let mut distinct: Vec<f64> = scores.entries().iter().map(|(s, _)| *s).collect();
    distinct.sort_by(|a, b| a.partial_cmp(b).expect("scores are finite"));
    distinct.dedup();
    let mut sweep = Vec::with_capacity(distinct.len() + 1);
    sweep.push(f64::NEG_INFINITY);
    for pair in distinct.windows(2) {
        let mid = (pair[0] + pair[1]) / 2.0;
        // For adjacent floats the midpoint can round onto an endpoint; the
        // upper score still separates the pair under strict-less-than.
        sweep.push(if mid > pair[0] { mid } else { pair[1] });
    }
    sweep.push(f64::INFINITY);
    sweep
}

/// Full ROC sweep with trapezoidal AUC.
///
/// The ROC lives in (x, y) = (fraction of clients flagged, fraction of
/// imposters flagged) space; sweeping the threshold from +inf down to -inf
/// walks the curve from (0, 0) to (1, 1).
pub fn roc_curve(scores: &ScoreSet) -> Result<RocCurve> {
    scores.require_both_labels()?;
    let points: Vec<OperatingPoint> = sweep_thresholds(scores)
        .into_iter()
        .map(|t| operating_point(scores, t))
        .collect();
    let mut auc = 0.0;
    // Reverse order: descending threshold gives ascending x = fnr.
    for pair in points.windows(2).rev() {
        let (x0, y0) = (pair[1].fnr, pair[1].tpr());
        let (x1, y1) = (pair[0].fnr, pair[0].tpr());
        auc += (x1 - x0) * (y0 + y1) / 2.0;
    }
    Ok(RocCurve { points, auc })
}

/// Threshold where the empirical FPR and FNR meet.
///
/// Rates are step functions, so the sweep point minimizing `|FPR - FNR|` is
/// returned, breaking ties by smaller `(FPR + FNR)/2` and then by smaller
/// threshold. The infinite sweep endpoints are mapped to usable finite
/// values (0 below the minimum score, max + 1 above the maximum) that
/// produce identical decisions on the calibration set.
pub fn eer_threshold(scores: &ScoreSet) -> Result<(Threshold, f64)> {
    scores.require_both_labels()?;
    let mut best: Option<OperatingPoint> = None;
    for t in sweep_thresholds(scores) {
        let t = finite_threshold(scores, t);
        let op = operating_point(scores, t);
        let better = match &best {
            None => true,
            Some(b) => {
                let gap = math::abs(op.fpr - op.fnr);
                let best_gap = math::abs(b.fpr - b.fnr);
                gap < best_gap
                    || (gap == best_gap
                        && (op.hter() < b.hter()
                            || (op.hter() == b.hter() && op.threshold < b.threshold)))
            }
        };
        if better {
            best = Some(op);
        }
    }
    let op = best.expect("non-empty sweep");
    let threshold = Threshold::new(
        op.threshold,
        format!("EER on {}", scores.provenance()),
    )?;
    Ok((threshold, op.hter()))
}

/// Replaces the infinite sweep endpoints by finite thresholds that make the
/// same decisions on this score set (scores are non-negative).
fn finite_threshold(scores: &ScoreSet, t: f64) -> f64 {
    if t == f64::NEG_INFINITY {
        0.0
    } else if t == f64::INFINITY {
        let max = scores
            .entries()
            .iter()
            .map(|(s, _)| *s)
            .fold(0.0f64, f64::max);
        if max + 1.0 > max {
            max + 1.0
        } else {
            f64::INFINITY
        }
    } else {
        t
    }
}
