//! Two-pass continuous recognition. The action-level pass runs isolated
//! alignment over every admissible sub-sequence (sharing one grid of
//! frame-to-metaframe distances across all restarts); the sequence-level
//! pass stitches the per-sub-sequence best labels into an optimal
//! non-overlapping tiling by dynamic programming over (begin, end) pairs.

use crate::distance::{pooled_distance, DistanceConfig};
use crate::dtw::MOVES;
use crate::error::{Error, Result};
use crate::parallel;
use crate::templates::SuperTemplate;
use crate::types::{Segment, Segmentation, TimeSeries};

/// Best label and cost for every admissible sub-sequence `(t_b, t_e)` with
/// `t_e - t_b >= t_min` (so a segment holds at least `t_min + 1` frames).
#[derive(Debug, Clone)]
pub struct SubsequenceTables {
    t_z: usize,
    t_min: usize,
    best_label: Vec<u32>,
    best_cost: Vec<f64>,
    /// Admissible sub-sequences evaluated.
    pub subsequence_count: u64,
    /// Frame-to-metaframe evaluations (shared grid: total template length
    /// times the test length).
    pub distance_evals: u64,
}

impl SubsequenceTables {
    pub fn t_z(&self) -> usize {
        self.t_z
    }

    pub fn t_min(&self) -> usize {
        self.t_min
    }

    #[inline]
    fn idx(&self, t_b: usize, t_e: usize) -> usize {
        (t_b - 1) * self.t_z + (t_e - 1)
    }

    pub fn admissible(&self, t_b: usize, t_e: usize) -> bool {
        t_b >= 1 && t_e <= self.t_z && t_e >= t_b && t_e - t_b >= self.t_min
    }

    /// Best alignment cost for the sub-sequence; infinite when inadmissible.
    pub fn cost(&self, t_b: usize, t_e: usize) -> f64 {
        if self.admissible(t_b, t_e) {
            self.best_cost[self.idx(t_b, t_e)]
        } else {
            f64::INFINITY
        }
    }

    pub fn label(&self, t_b: usize, t_e: usize) -> Option<u32> {
        self.admissible(t_b, t_e)
            .then(|| self.best_label[self.idx(t_b, t_e)])
    }

    /// Builds tables directly from per-cell costs (label, cost) — test and
    /// oracle entry point.
    pub fn from_costs(
        t_z: usize,
        t_min: usize,
        cells: impl Fn(usize, usize) -> (u32, f64),
    ) -> SubsequenceTables {
        let mut tables = SubsequenceTables {
            t_z,
            t_min,
            best_label: vec![0; t_z * t_z],
            best_cost: vec![f64::INFINITY; t_z * t_z],
            subsequence_count: 0,
            distance_evals: 0,
        };
        for t_b in 1..=t_z {
            for t_e in (t_b + t_min)..=t_z {
                let (l, c) = cells(t_b, t_e);
                let i = tables.idx(t_b, t_e);
                tables.best_label[i] = l;
                tables.best_cost[i] = c;
                tables.subsequence_count += 1;
            }
        }
        tables
    }
}

/// Isolated DFW over every admissible sub-sequence of `z`. For each `t_b`
/// one forward sweep per template covers all end frames at once; the
/// per-cell frame-to-metaframe distances are computed once on the full grid
/// and shared across restarts. The null template participates like any
/// other.
pub fn action_level_pass(
    z: &TimeSeries,
    model: &SuperTemplate,
    t_min: usize,
    cfg: &DistanceConfig,
) -> Result<SubsequenceTables> {
    cfg.validate()?;
    if t_min < 1 {
        return Err(Error::InvalidInput("t_min must be >= 1".into()));
    }
    let t_z = z.len();
    if t_z <= t_min {
        return Err(Error::InvalidInput(format!(
            "series of length {t_z} has no sub-sequence spanning {} frames",
            t_min + 1
        )));
    }
    if z.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: z.dim(),
        });
    }

    let templates = model.templates();
    let total = model.total_len();
    let offsets: Vec<usize> = {
        let mut acc = 0;
        templates
            .iter()
            .map(|t| {
                let o = acc;
                acc += t.len();
                o
            })
            .collect()
    };
    // Shared distance grid, row-major by test frame.
    let dist = {
        let cell_template: Vec<usize> = templates
            .iter()
            .enumerate()
            .flat_map(|(l, t)| std::iter::repeat(l).take(t.len()))
            .collect();
        let cells = parallel::map_indexed(t_z * total, |i| {
            let t = i / total + 1;
            let col = i % total;
            let l = cell_template[col];
            let tp = col - offsets[l] + 1;
            pooled_distance(z.frame(t), &templates[l], tp, cfg)
        });
        let mut flat = Vec::with_capacity(t_z * total);
        for c in cells {
            flat.push(c?);
        }
        flat
    };

    // Restarts over distinct begin frames are independent.
    let per_begin: Vec<Vec<(u32, f64)>> = parallel::map_indexed(t_z, |b0| {
        let t_b = b0 + 1;
        let rows = t_z - t_b + 1;
        let mut best: Vec<(u32, f64)> = vec![(0, f64::INFINITY); rows];
        let mut cost = Vec::new();
        let mut rawsum = Vec::new();
        let mut pathlen = Vec::new();
        for (l, template) in templates.iter().enumerate() {
            let cols = template.len();
            let label = template.label();
            let d_at = |t: usize, tp: usize| dist[(t - 1) * total + offsets[l] + (tp - 1)];
            cost.clear();
            cost.resize(rows * cols, f64::INFINITY);
            rawsum.clear();
            rawsum.resize(rows * cols, 0.0f64);
            pathlen.clear();
            pathlen.resize(rows * cols, 0u32);
            for r in 1..=rows {
                let t = t_b + r - 1;
                for tp in 1..=cols {
                    let i = (r - 1) * cols + (tp - 1);
                    if r == 1 && tp == 1 {
                        cost[i] = d_at(t, 1);
                        rawsum[i] = d_at(t, 1);
                        pathlen[i] = 1;
                        continue;
                    }
                    let d = d_at(t, tp);
                    let mut bc = f64::INFINITY;
                    let mut bfrom = usize::MAX;
                    for (dt, dtp) in MOVES {
                        if r < dt + 1 || tp < dtp + 1 {
                            continue;
                        }
                        let j = (r - dt - 1) * cols + (tp - dtp - 1);
                        let cand = cost[j] + (dt + dtp) as f64 * d;
                        if cand < bc {
                            bc = cand;
                            bfrom = j;
                        }
                    }
                    cost[i] = bc;
                    if bfrom != usize::MAX {
                        rawsum[i] = rawsum[bfrom] + d;
                        pathlen[i] = pathlen[bfrom] + 1;
                    }
                }
                // Sub-sequence (t_b, t) finished for this template.
                if r >= t_min + 1 {
                    let end = (r - 1) * cols + (cols - 1);
                    if pathlen[end] > 0 {
                        let score = rawsum[end] / pathlen[end] as f64;
                        let slot = &mut best[r - 1];
                        if score < slot.1 || (score == slot.1 && label < slot.0 && slot.1.is_finite())
                        {
                            *slot = (label, score);
                        }
                    }
                }
            }
        }
        best
    });

    let mut tables = SubsequenceTables {
        t_z,
        t_min,
        best_label: vec![0; t_z * t_z],
        best_cost: vec![f64::INFINITY; t_z * t_z],
        subsequence_count: 0,
        distance_evals: (t_z * total) as u64,
    };
    for (b0, best) in per_begin.iter().enumerate() {
        let t_b = b0 + 1;
        for (r0, &(label, score)) in best.iter().enumerate() {
            let t_e = t_b + r0;
            if t_e - t_b >= t_min && score.is_finite() {
                let i = tables.idx(t_b, t_e);
                tables.best_label[i] = label;
                tables.best_cost[i] = score;
                tables.subsequence_count += 1;
            }
        }
    }
    Ok(tables)
}

/// Stitches the sub-sequence tables into an optimal tiling of `[1, T_Z]`.
/// Every segment spans at least `t_min + 1` frames; the previous segment's
/// begin is searched over `[1, t_b - t_min]` exactly as the recurrence
/// bounds it.
pub fn sequence_level_pass(tables: &SubsequenceTables) -> Result<(Segmentation, f64)> {
    let n = tables.t_z();
    let t_min = tables.t_min();
    if n < t_min + 1 {
        return Err(Error::InvalidInput(format!(
            "series of length {n} cannot hold a segment of {} frames",
            t_min + 1
        )));
    }

    let idx = |t_b: usize, t_e: usize| (t_b - 1) * n + (t_e - 1);
    let mut acc = vec![f64::INFINITY; n * n];
    let mut prev_begin = vec![usize::MAX; n + 1];

    for t_b in 1..=n {
        if t_b == 1 {
            for t_e in (1 + t_min)..=n {
                acc[idx(1, t_e)] = tables.cost(1, t_e);
            }
            continue;
        }
        // Best predecessor segment ending at t_b - 1; ties keep the lowest
        // begin.
        let mut best_prev = f64::INFINITY;
        let mut best_k = usize::MAX;
        if t_b >= t_min + 1 {
            for k in 1..=(t_b - t_min) {
                let c = acc[idx(k, t_b - 1)];
                if c < best_prev {
                    best_prev = c;
                    best_k = k;
                }
            }
        }
        if !best_prev.is_finite() {
            continue;
        }
        prev_begin[t_b] = best_k;
        for t_e in (t_b + t_min)..=n {
            let d = tables.cost(t_b, t_e);
            if d.is_finite() {
                acc[idx(t_b, t_e)] = d + best_prev;
            }
        }
    }

    // Terminal: best tiling ending exactly at n.
    let mut best_end = f64::INFINITY;
    let mut best_b = usize::MAX;
    for t_b in 1..=n {
        let c = acc[idx(t_b, n)];
        if c < best_end {
            best_end = c;
            best_b = t_b;
        }
    }
    if !best_end.is_finite() {
        return Err(Error::InvalidInput("no feasible tiling".into()));
    }

    let mut segments_rev = Vec::new();
    let mut b = best_b;
    let mut e = n;
    loop {
        let label = tables.label(b, e).ok_or_else(|| {
            Error::InvalidInput(format!("inadmissible segment [{b}, {e}] on the optimal path"))
        })?;
        segments_rev.push(Segment { begin: b, end: e, label });
        if b == 1 {
            break;
        }
        e = b - 1;
        b = prev_begin[b];
    }
    segments_rev.reverse();
    Ok((Segmentation::new(segments_rev)?, best_end))
}

#[derive(Debug, Clone)]
pub struct TwoPassResult {
    pub segmentation: Segmentation,
    pub score: f64,
    pub subsequence_count: u64,
    pub distance_evals: u64,
}

/// Runs both passes.
pub fn tp_dfw_segment(
    z: &TimeSeries,
    model: &SuperTemplate,
    t_min: usize,
    cfg: &DistanceConfig,
) -> Result<TwoPassResult> {
    let tables = action_level_pass(z, model, t_min, cfg)?;
    let (segmentation, score) = sequence_level_pass(&tables)?;
    Ok(TwoPassResult {
        segmentation,
        score,
        subsequence_count: tables.subsequence_count,
        distance_evals: tables.distance_evals,
    })
}

/// Number of admissible sub-sequences for a series of length `t_z`.
pub fn subsequence_count(t_z: usize, t_min: usize) -> u64 {
    if t_z <= t_min {
        return 0;
    }
    let m = (t_z - t_min) as u64;
    m * (m + 1) / 2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isolated::classify_isolated;
    use crate::templates::{build_super_template, ClassTemplate, Metaframe};
    use crate::types::FrameVector;
    use approx::assert_abs_diff_eq;

    fn basis(dim: usize, axis: usize) -> FrameVector {
        let mut v = vec![0.0; dim];
        v[axis] = 1.0;
        FrameVector::unit(v)
    }

    fn singleton_template(label: u32, frames: &[FrameVector]) -> ClassTemplate {
        let metaframes = frames
            .iter()
            .map(|f| Metaframe::new(vec![f.clone()], vec![(0, 0)]).unwrap())
            .collect();
        ClassTemplate::new(label, metaframes, 1, 100, false, false).unwrap()
    }

    fn cfg() -> DistanceConfig {
        DistanceConfig { gamma: 0.0, ..Default::default() }
    }

    fn two_class_model(dim: usize) -> (SuperTemplate, Vec<FrameVector>, Vec<FrameVector>) {
        let a: Vec<FrameVector> = (0..3).map(|i| basis(dim, i)).collect();
        let b: Vec<FrameVector> = (3..6).map(|i| basis(dim, i)).collect();
        let model = build_super_template(vec![
            singleton_template(1, &a),
            singleton_template(2, &b),
        ])
        .unwrap();
        (model, a, b)
    }

    #[test]
    fn full_range_cell_matches_isolated() {
        let (model, a, _) = two_class_model(6);
        let z = TimeSeries::new(a).unwrap();
        let tables = action_level_pass(&z, &model, 1, &cfg()).unwrap();
        let (label, scores) = classify_isolated(&z, &model, &cfg()).unwrap();
        assert_eq!(tables.label(1, z.len()), Some(label));
        let iso = scores.iter().find(|(l, _)| *l == label).unwrap().1;
        assert_abs_diff_eq!(tables.cost(1, z.len()), iso, epsilon = 1e-12);
    }

    #[test]
    fn covering_cell_recognizes_segment() {
        let (model, a, b) = two_class_model(6);
        let mut frames = a.clone();
        frames.extend(b.clone());
        let z = TimeSeries::new(frames).unwrap();
        let tables = action_level_pass(&z, &model, 1, &cfg()).unwrap();
        assert_eq!(tables.label(1, 3), Some(1));
        assert_eq!(tables.label(4, 6), Some(2));
        assert_abs_diff_eq!(tables.cost(1, 3), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn short_subsequences_are_undefined() {
        let (model, a, _) = two_class_model(6);
        let z = TimeSeries::new(a).unwrap();
        let tables = action_level_pass(&z, &model, 2, &cfg()).unwrap();
        assert_eq!(tables.label(1, 2), None);
        assert!(tables.cost(1, 2).is_infinite());
        assert_eq!(tables.subsequence_count, subsequence_count(3, 2));
    }

    #[test]
    fn subsequence_count_formula() {
        for (t_z, t_min) in [(10usize, 2usize), (7, 1), (5, 4), (4, 4)] {
            let expect = if t_z > t_min {
                let m = (t_z - t_min) as u64;
                m * (m + 1) / 2
            } else {
                0
            };
            assert_eq!(subsequence_count(t_z, t_min), expect);
        }
        let (model, a, b) = two_class_model(6);
        let mut frames = a.clone();
        frames.extend(b);
        frames.extend(a);
        let z = TimeSeries::new(frames).unwrap();
        let tables = action_level_pass(&z, &model, 2, &cfg()).unwrap();
        assert_eq!(tables.subsequence_count, subsequence_count(9, 2));
    }

    #[test]
    fn forced_single_segment() {
        let tables = SubsequenceTables::from_costs(4, 3, |_, _| (7, 1.5));
        let (seg, score) = sequence_level_pass(&tables).unwrap();
        assert_eq!(seg.segments().len(), 1);
        assert_eq!(seg.segments()[0], Segment { begin: 1, end: 4, label: 7 });
        assert_abs_diff_eq!(score, 1.5, epsilon = 1e-12);
    }

    #[test]
    fn infeasible_series_rejected() {
        let tables = SubsequenceTables::from_costs(3, 3, |_, _| (1, 1.0));
        assert!(sequence_level_pass(&tables).is_err());
    }

    #[test]
    fn three_action_concatenation() {
        let dim = 9;
        let mk = |r: std::ops::Range<usize>| -> Vec<FrameVector> {
            r.map(|i| basis(dim, i)).collect()
        };
        let a = mk(0..3);
        let b = mk(3..6);
        let c = mk(6..9);
        let model = build_super_template(vec![
            singleton_template(1, &a),
            singleton_template(2, &b),
            singleton_template(3, &c),
        ])
        .unwrap();
        let mut frames = a.clone();
        frames.extend(b.clone());
        frames.extend(c.clone());
        let z = TimeSeries::new(frames).unwrap();
        let res = tp_dfw_segment(&z, &model, 2, &cfg()).unwrap();
        let segs = res.segmentation.segments();
        assert_eq!(segs.len(), 3);
        let labels: Vec<u32> = segs.iter().map(|s| s.label).collect();
        assert_eq!(labels, vec![1, 2, 3]);
        for (seg, expect) in segs.iter().zip([(1usize, 3usize), (4, 6), (7, 9)]) {
            assert!(
                (seg.begin as i64 - expect.0 as i64).abs() <= 1
                    && (seg.end as i64 - expect.1 as i64).abs() <= 1,
                "boundary off by more than one frame: {seg:?} vs {expect:?}"
            );
        }
    }

    #[test]
    fn dominated_template_changes_nothing() {
        let dim = 8;
        let a: Vec<FrameVector> = (0..3).map(|i| basis(dim, i)).collect();
        let b: Vec<FrameVector> = (3..6).map(|i| basis(dim, i)).collect();
        // Template 9 lives in a subspace disjoint from the test data, so all
        // its distances are strictly larger.
        let junk: Vec<FrameVector> = (6..8).map(|i| basis(dim, i)).collect();
        let base = build_super_template(vec![
            singleton_template(1, &a),
            singleton_template(2, &b),
        ])
        .unwrap();
        let extended = build_super_template(vec![
            singleton_template(1, &a),
            singleton_template(2, &b),
            singleton_template(9, &junk),
        ])
        .unwrap();
        let mut frames = a.clone();
        frames.extend(b.clone());
        let z = TimeSeries::new(frames).unwrap();
        let r1 = tp_dfw_segment(&z, &base, 2, &cfg()).unwrap();
        let r2 = tp_dfw_segment(&z, &extended, 2, &cfg()).unwrap();
        assert_eq!(r1.segmentation, r2.segmentation);
    }
}
