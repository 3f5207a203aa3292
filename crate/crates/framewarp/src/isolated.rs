//! Isolated action recognition: align a single-action series against each
//! class template under the frame-to-metaframe distance and take the
//! minimum-score label.

use crate::distance::{pooled_distance, DistanceConfig};
use crate::dtw::{dtw_align_with, Alignment};
use crate::error::{Error, Result};
use crate::parallel;
use crate::templates::{ClassTemplate, SuperTemplate};
use crate::types::TimeSeries;

/// Dense test-frame x metaframe distance table for one template, row-major
/// by test frame. Cells are independent and evaluated concurrently.
pub(crate) fn distance_grid(
    z: &TimeSeries,
    template: &ClassTemplate,
    cfg: &DistanceConfig,
) -> Result<Vec<f64>> {
    if z.dim() != template.dim() {
        return Err(Error::DimensionMismatch {
            expected: template.dim(),
            got: z.dim(),
        });
    }
    let cols = template.len();
    let cells = parallel::map_indexed(z.len() * cols, |i| {
        let t = i / cols + 1;
        let tp = i % cols + 1;
        pooled_distance(z.frame(t), template, tp, cfg)
    });
    cells.into_iter().collect()
}

/// Aligns a series against one (non-null) class template; the score is the
/// mean frame-to-metaframe distance along the optimal path.
pub fn dfw_align(
    z: &TimeSeries,
    template: &ClassTemplate,
    cfg: &DistanceConfig,
) -> Result<Alignment> {
    cfg.validate()?;
    if template.is_null() {
        return Err(Error::InvalidInput(
            "cannot align against the null template".into(),
        ));
    }
    let grid = distance_grid(z, template, cfg)?;
    let cols = template.len();
    dtw_align_with(z.len(), cols, template.label(), move |t, tp| {
        grid[(t - 1) * cols + (tp - 1)]
    })
}

/// Isolated classification: the label whose template aligns with the lowest
/// score. Ties go to the lowest label; the full score vector is returned for
/// diagnostics.
pub fn classify_isolated(
    z: &TimeSeries,
    model: &SuperTemplate,
    cfg: &DistanceConfig,
) -> Result<(u32, Vec<(u32, f64)>)> {
    cfg.validate()?;
    let templates: Vec<&ClassTemplate> = model.non_null().collect();
    if templates.is_empty() {
        return Err(Error::InvalidInput("model has no non-null template".into()));
    }
    let alignments = parallel::map_indexed(templates.len(), |i| dfw_align(z, templates[i], cfg));
    let mut scores = Vec::with_capacity(templates.len());
    for (t, a) in templates.iter().zip(alignments) {
        scores.push((t.label(), a?.score));
    }
    scores.sort_by(|a, b| a.0.cmp(&b.0));
    let mut best = scores[0];
    for &(label, score) in &scores[1..] {
        if score < best.1 {
            best = (label, score);
        }
    }
    Ok((best.0, scores))
}
