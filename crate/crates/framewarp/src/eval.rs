//! Evaluation metrics: per-frame accuracy, confusion matrix over all labels
//! including the null class, and a boundary-offset measure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{LabelTrack, Segmentation};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    /// Percentage of correctly labeled frames.
    pub frame_accuracy: f64,
    /// Labels indexing the confusion matrix rows/columns (0 is null).
    pub labels: Vec<u32>,
    /// confusion[i][j] counts frames with ground truth labels[i] predicted
    /// as labels[j]; row sums equal ground-truth frame counts.
    pub confusion: Vec<Vec<u64>>,
    /// Per-label accuracy (None when the label never occurs in the ground
    /// truth).
    pub per_class_accuracy: Vec<Option<f64>>,
    /// Mean absolute offset of each predicted boundary to its nearest
    /// ground-truth boundary; boundaries with no counterpart cost T/2.
    pub boundary_mae: f64,
}

/// Compares per-frame predictions against ground truth.
pub fn frame_accuracy(pred: &LabelTrack, gt: &LabelTrack) -> Result<EvalReport> {
    if pred.len() != gt.len() {
        return Err(Error::DimensionMismatch {
            expected: gt.len(),
            got: pred.len(),
        });
    }
    if gt.is_empty() {
        return Err(Error::InvalidInput("empty label tracks".into()));
    }
    let max_label = gt
        .labels()
        .iter()
        .chain(pred.labels())
        .copied()
        .max()
        .unwrap_or(0);
    let labels: Vec<u32> = (0..=max_label).collect();
    let n = labels.len();
    let mut confusion = vec![vec![0u64; n]; n];
    let mut correct = 0u64;
    for (p, g) in pred.labels().iter().zip(gt.labels()) {
        confusion[*g as usize][*p as usize] += 1;
        if p == g {
            correct += 1;
        }
    }
    let total = gt.len() as u64;
    let per_class_accuracy = confusion
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let row_sum: u64 = row.iter().sum();
            (row_sum > 0).then(|| 100.0 * row[i] as f64 / row_sum as f64)
        })
        .collect();
    let boundary_mae = boundary_mae(
        &Segmentation::from_labels(pred)?,
        &Segmentation::from_labels(gt)?,
        gt.len(),
    );
    Ok(EvalReport {
        frame_accuracy: 100.0 * correct as f64 / total as f64,
        labels,
        confusion,
        per_class_accuracy,
        boundary_mae,
    })
}

/// Cut positions of a segmentation: frame t such that a new segment starts
/// at t + 1.
pub fn cut_positions(seg: &Segmentation) -> Vec<usize> {
    seg.segments()
        .iter()
        .take(seg.segments().len().saturating_sub(1))
        .map(|s| s.end)
        .collect()
}

/// Mean absolute offset of each predicted cut to the nearest ground-truth
/// cut. With no ground-truth cuts every predicted cut is penalized at t/2;
/// with no predicted cuts the error is 0 (misses show up in frame accuracy).
pub fn boundary_mae(pred: &Segmentation, gt: &Segmentation, t: usize) -> f64 {
    let pred_cuts = cut_positions(pred);
    let gt_cuts = cut_positions(gt);
    boundary_mae_cuts(&pred_cuts, &gt_cuts, t)
}

/// Same as [`boundary_mae`] on raw cut positions.
pub fn boundary_mae_cuts(pred_cuts: &[usize], gt_cuts: &[usize], t: usize) -> f64 {
    if pred_cuts.is_empty() {
        return 0.0;
    }
    if gt_cuts.is_empty() {
        return t as f64 / 2.0;
    }
    let sum: f64 = pred_cuts
        .iter()
        .map(|&p| {
            gt_cuts
                .iter()
                .map(|&g| (p as f64 - g as f64).abs())
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    sum / pred_cuts.len() as f64
}
