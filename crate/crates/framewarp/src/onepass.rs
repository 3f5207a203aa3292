//! One-pass continuous recognition: a single dynamic program over the
//! (t, t'(l)) grid of all templates, combining within-action transitions
//! with between-action jumps from template end-frames to template
//! begin-frames (including self-jumps for repeated actions).
//!
//! Jumps out of a template are gated on the number of test frames consumed
//! inside it (vertical moves are free), against the template's duration
//! bounds. A single accumulated length per grid cell makes that gate greedy:
//! a cheaper path whose length is out of range shadows an admissible one and
//! blocks exits the optimum needs. Since the consumed length only matters up
//! to a template's upper bound, each cell instead carries one state per
//! consumed-length bucket (saturating once further growth cannot change
//! admissibility), which makes the pass exact under the gates. With
//! constraints disabled every template collapses to a single bucket and the
//! grid is the plain recurrence.
//!
//! Per time column the begin-frame states settle first — their stay and jump
//! candidates only read the previous column, whose end states are final —
//! and the interior states then run bottom-up so vertical moves may chain
//! off the current column.

use std::collections::BTreeMap;

use crate::distance::{pooled_distance, DistanceConfig};
use crate::error::{Error, Result};
use crate::parallel;
use crate::templates::{SuperTemplate, UNBOUNDED};
use crate::types::{AlignmentPath, LabelTrack, PathStep, Segmentation, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnePassOptions {
    /// Gate between-action jumps on the consumed length of the departed
    /// template; when no labeling satisfies the bounds the pass reruns
    /// relaxed and flags the output.
    pub enforce_lengths: bool,
    /// Keep the accumulated-cost grid for visualization dumps.
    pub keep_grid: bool,
}

impl Default for OnePassOptions {
    fn default() -> Self {
        OnePassOptions {
            enforce_lengths: true,
            keep_grid: false,
        }
    }
}

/// Accumulated-cost grid snapshot (row-major over test frames, columns laid
/// out template by template in super-template order). Cells hold the best
/// cost over the cell's length buckets.
#[derive(Debug, Clone)]
pub struct GridDump {
    pub rows: usize,
    pub cols: usize,
    pub cost: Vec<f32>,
    /// Consumed length (bucketed) of each cell's best state.
    pub tlen: Vec<u32>,
    /// (label, length, column offset) per template.
    pub spans: Vec<(u32, usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct OnePassResult {
    pub segmentation: Segmentation,
    pub path: AlignmentPath,
    /// Accumulated cost at the chosen terminal cell divided by path length.
    pub score: f64,
    pub accumulated: f64,
    /// Set when length constraints were unsatisfiable and the pass reran
    /// without them.
    pub lengths_relaxed: bool,
    /// Exact number of frame-to-metaframe evaluations (templates' total
    /// length times the test length).
    pub distance_evals: u64,
    pub grid: Option<GridDump>,
}

/// Per-template layout of the augmented state space.
struct TemplateLayout {
    label: u32,
    len: usize,
    t_min: usize,
    t_max: usize,
    /// Column offset in the distance grid.
    col_offset: usize,
    /// State offset of (t' = 1, bucket = 1).
    state_offset: usize,
    /// Buckets per cell.
    n_buckets: usize,
    /// Buckets saturate (growth past the last bucket stays there and
    /// remains admissible); otherwise the last bucket is an inadmissible
    /// overflow.
    saturating: bool,
}

impl TemplateLayout {
    #[inline]
    fn state(&self, tp: usize, bucket: usize) -> usize {
        self.state_offset + (tp - 1) * self.n_buckets + (bucket - 1)
    }

    /// Bucket after consuming one more test frame.
    #[inline]
    fn inc(&self, bucket: usize) -> usize {
        (bucket + 1).min(self.n_buckets)
    }

    /// May a jump depart from this bucket?
    #[inline]
    fn exitable(&self, bucket: usize) -> bool {
        if self.saturating {
            // The top bucket means "consumed >= n_buckets"; it is admissible
            // unless even the whole series is shorter than t_min.
            bucket == self.n_buckets && self.t_min <= self.n_buckets
        } else {
            // Exact buckets below the overflow; admissibility above t_max is
            // what the overflow bucket excludes.
            bucket >= self.t_min && bucket < self.n_buckets
        }
    }
}

fn layouts(model: &SuperTemplate, t_z: usize, enforce: bool) -> Vec<TemplateLayout> {
    let mut col = 0usize;
    let mut state = 0usize;
    model
        .templates()
        .iter()
        .map(|t| {
            let (n_buckets, saturating) = if !enforce {
                // No gates: consumed length is irrelevant.
                (1usize, true)
            } else if t.t_max() == UNBOUNDED {
                // Admissible from t_min on, forever: saturate at t_min.
                (t.t_min().min(t_z).max(1), true)
            } else {
                // Track exactly up to t_max, then an inadmissible overflow.
                let m = t.t_max().min(t_z);
                (m + 1, false)
            };
            let layout = TemplateLayout {
                label: t.label(),
                len: t.len(),
                t_min: if enforce { t.t_min() } else { 1 },
                t_max: if enforce { t.t_max() } else { UNBOUNDED },
                col_offset: col,
                state_offset: state,
                n_buckets,
                saturating,
            };
            col += t.len();
            state += t.len() * n_buckets;
            layout
        })
        .collect()
}

/// Segments and labels a test series against the whole super-template.
pub fn op_dfw_segment(
    z: &TimeSeries,
    model: &SuperTemplate,
    cfg: &DistanceConfig,
    opts: OnePassOptions,
) -> Result<OnePassResult> {
    cfg.validate()?;
    if z.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: z.dim(),
        });
    }

    // The full distance grid up front: cells are pure and independent.
    let total = model.total_len();
    let t_z = z.len();
    let offsets: Vec<usize> = {
        let mut acc = 0;
        model
            .templates()
            .iter()
            .map(|t| {
                let o = acc;
                acc += t.len();
                o
            })
            .collect()
    };
    let cell_template: Vec<usize> = {
        let mut v = Vec::with_capacity(total);
        for (l, t) in model.templates().iter().enumerate() {
            v.extend(std::iter::repeat(l).take(t.len()));
        }
        v
    };
    let dist = {
        let cells = parallel::map_indexed(t_z * total, |i| {
            let t = i / total + 1;
            let col = i % total;
            let l = cell_template[col];
            let tp = col - offsets[l] + 1;
            pooled_distance(z.frame(t), &model.templates()[l], tp, cfg)
        });
        let mut flat = Vec::with_capacity(t_z * total);
        for c in cells {
            flat.push(c?);
        }
        flat
    };
    let distance_evals = (t_z * total) as u64;

    match forward_backward(t_z, model, &dist, opts.enforce_lengths, opts.keep_grid) {
        Ok(mut result) => {
            result.distance_evals = distance_evals;
            Ok(result)
        }
        Err(Error::Capacity(_)) if opts.enforce_lengths => {
            log::warn!("length constraints unsatisfiable; rerunning without them");
            let mut result = forward_backward(t_z, model, &dist, false, opts.keep_grid)?;
            result.lengths_relaxed = true;
            result.distance_evals = distance_evals;
            Ok(result)
        }
        Err(e) => Err(e),
    }
}

fn forward_backward(
    t_z: usize,
    model: &SuperTemplate,
    dist: &[f64],
    enforce: bool,
    keep_grid: bool,
) -> Result<OnePassResult> {
    let total = model.total_len();
    let layouts = layouts(model, t_z, enforce);
    let n_states: usize = layouts.iter().map(|l| l.len * l.n_buckets).sum();
    let state_at = |t: usize, s: usize| (t - 1) * n_states + s;
    let d_at = |t: usize, layout: &TemplateLayout, tp: usize| {
        dist[(t - 1) * total + layout.col_offset + (tp - 1)]
    };

    let mut cost = vec![f64::INFINITY; t_z * n_states];
    let mut back = vec![usize::MAX; t_z * n_states];

    // First frame: only template begin-frames with one consumed frame.
    for layout in &layouts {
        cost[state_at(1, layout.state(1, 1))] = d_at(1, layout, 1);
    }

    for t in 2..=t_z {
        // The best admissible template end in the previous column; ties keep
        // the lowest template index, then the lowest bucket.
        let mut best_end: Option<(f64, usize)> = None;
        for layout in &layouts {
            for b in 1..=layout.n_buckets {
                if !layout.exitable(b) {
                    continue;
                }
                let s = state_at(t - 1, layout.state(layout.len, b));
                if cost[s].is_finite() && best_end.map(|(c, _)| cost[s] < c).unwrap_or(true) {
                    best_end = Some((cost[s], s));
                }
            }
        }

        // Begin-frame states: bucket 1 takes the jump; larger buckets grow by
        // horizontal stays. Saturating single-bucket templates see both and
        // prefer the stay on ties.
        for layout in &layouts {
            let d = d_at(t, layout, 1);
            for b in 1..=layout.n_buckets {
                let mut best = f64::INFINITY;
                let mut from = usize::MAX;
                // Horizontal stay from any bucket that increments to b.
                for pb in stay_sources(layout, b) {
                    let s = state_at(t - 1, layout.state(1, pb));
                    let cand = cost[s] + d;
                    if cand < best {
                        best = cand;
                        from = s;
                    }
                }
                if b == 1 {
                    if let Some((end_cost, end_state)) = best_end {
                        // Stay wins ties: fewer segments.
                        let cand = end_cost + d;
                        if cand < best {
                            best = cand;
                            from = end_state;
                        }
                    }
                }
                let i = state_at(t, layout.state(1, b));
                cost[i] = best;
                back[i] = from;
            }
        }

        // Interior states bottom-up; vertical moves read the current column.
        for layout in &layouts {
            for tp in 2..=layout.len {
                let d = d_at(t, layout, tp);
                for b in 1..=layout.n_buckets {
                    let mut best = f64::INFINITY;
                    let mut from = usize::MAX;
                    // Tie order: diagonal, horizontal, vertical; within a
                    // move, the lower source bucket.
                    for pb in stay_sources(layout, b) {
                        let s = state_at(t - 1, layout.state(tp - 1, pb));
                        let cand = cost[s] + 2.0 * d;
                        if cand < best {
                            best = cand;
                            from = s;
                        }
                    }
                    for pb in stay_sources(layout, b) {
                        let s = state_at(t - 1, layout.state(tp, pb));
                        let cand = cost[s] + d;
                        if cand < best {
                            best = cand;
                            from = s;
                        }
                    }
                    let s = state_at(t, layout.state(tp - 1, b));
                    let cand = cost[s] + d;
                    if cand < best {
                        best = cand;
                        from = s;
                    }
                    let i = state_at(t, layout.state(tp, b));
                    cost[i] = best;
                    back[i] = from;
                }
            }
        }
    }

    // Terminal: the best template end at the last frame (no exit gate on the
    // final template); ties take the lowest label, then the lowest bucket.
    let mut terminal: Option<(f64, u32, usize)> = None;
    for layout in &layouts {
        for b in 1..=layout.n_buckets {
            let s = state_at(t_z, layout.state(layout.len, b));
            if !cost[s].is_finite() {
                continue;
            }
            let better = match terminal {
                None => true,
                Some((bc, bl, _)) => {
                    cost[s] < bc || (cost[s] == bc && layout.label < bl)
                }
            };
            if better {
                terminal = Some((cost[s], layout.label, s));
            }
        }
    }
    let (accumulated, _, end_state) = terminal.ok_or_else(|| {
        Error::Capacity("no labeling satisfies the length constraints".into())
    })?;

    // Map a flat state back to (template, t', bucket).
    let locate = |s: usize| -> (&TemplateLayout, usize, usize) {
        let layout = layouts
            .iter()
            .rev()
            .find(|l| s >= l.state_offset)
            .expect("state within layout");
        let rel = s - layout.state_offset;
        (layout, rel / layout.n_buckets + 1, rel % layout.n_buckets + 1)
    };

    let mut steps = Vec::new();
    let mut i = end_state;
    loop {
        let t = i / n_states + 1;
        let (layout, tp, _) = locate(i % n_states);
        steps.push(PathStep { t, t_prime: tp, label: layout.label });
        if back[i] == usize::MAX {
            break;
        }
        i = back[i];
    }
    steps.reverse();
    let path = AlignmentPath::new(steps)?;
    let score = accumulated / path.len() as f64;
    let segmentation = Segmentation::from_labels(&path.frame_labels())?;

    let grid = keep_grid.then(|| {
        let mut cell_cost = vec![f32::INFINITY; t_z * total];
        let mut cell_tlen = vec![0u32; t_z * total];
        for t in 1..=t_z {
            for layout in &layouts {
                for tp in 1..=layout.len {
                    let mut best = f64::INFINITY;
                    let mut best_b = 0u32;
                    for b in 1..=layout.n_buckets {
                        let c = cost[state_at(t, layout.state(tp, b))];
                        if c < best {
                            best = c;
                            best_b = b as u32;
                        }
                    }
                    let i = (t - 1) * total + layout.col_offset + tp - 1;
                    cell_cost[i] = best as f32;
                    cell_tlen[i] = best_b;
                }
            }
        }
        GridDump {
            rows: t_z,
            cols: total,
            cost: cell_cost,
            tlen: cell_tlen,
            spans: layouts
                .iter()
                .map(|l| (l.label, l.len, l.col_offset))
                .collect(),
        }
    });

    Ok(OnePassResult {
        segmentation,
        path,
        score,
        accumulated,
        lengths_relaxed: false,
        distance_evals: 0,
        grid,
    })
}

/// Source buckets whose increment lands in `b` (the saturated top bucket
/// also feeds itself).
fn stay_sources(layout: &TemplateLayout, b: usize) -> impl Iterator<Item = usize> {
    let first = (b > 1).then(|| b - 1);
    let second = (b == layout.n_buckets && layout.n_buckets >= 1).then_some(b);
    // For non-saturating layouts the overflow bucket still absorbs growth;
    // inc() is min(b+1, n_buckets) in both cases, so b feeds itself at the
    // top either way.
    first.into_iter().chain(second)
}

/// Frames after which the path jumps between templates (including
/// self-jumps), i.e. detected action or pattern-repetition boundaries. The
/// segmentation merges adjacent same-label runs, so repetition boundaries
/// are only visible here.
pub fn jump_boundaries(path: &AlignmentPath) -> Vec<usize> {
    let mut cuts = Vec::new();
    for w in path.steps().windows(2) {
        // Landing on a begin-frame with t advancing is a jump unless it is
        // the horizontal stay inside the first metaframe (same label,
        // departing t' = 1), which is indistinguishable on the grid.
        let jumped = w[1].t == w[0].t + 1
            && w[1].t_prime == 1
            && (w[0].label != w[1].label || w[0].t_prime > 1);
        if jumped {
            cuts.push(w[0].t);
        }
    }
    cuts
}

/// Applies a pattern-to-action alias to a segmentation and returns per-frame
/// labels with adjacent same-alias segments merged. Every label occurring in
/// the segmentation must be mapped (identity entries are fine).
pub fn op_dfw_stream_labels(
    seg: &Segmentation,
    alias: &BTreeMap<u32, u32>,
) -> Result<LabelTrack> {
    Ok(alias_segmentation(seg, alias)?.to_labels())
}

/// Alias-mapped segmentation with adjacent same-label segments merged.
pub fn alias_segmentation(
    seg: &Segmentation,
    alias: &BTreeMap<u32, u32>,
) -> Result<Segmentation> {
    let mut mapped = Vec::with_capacity(seg.segments().len());
    for s in seg.segments() {
        let label = *alias
            .get(&s.label)
            .ok_or_else(|| Error::InvalidInput(format!("label {} has no alias", s.label)))?;
        mapped.push(crate::types::Segment { label, ..*s });
    }
    let mut merged: Vec<crate::types::Segment> = Vec::new();
    for s in mapped {
        match merged.last_mut() {
            Some(last) if last.label == s.label => last.end = s.end,
            _ => merged.push(s),
        }
    }
    Segmentation::new(merged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isolated::dfw_align;
    use crate::templates::{build_null_template, build_super_template, ClassTemplate, Metaframe};
    use crate::types::FrameVector;
    use approx::assert_abs_diff_eq;

    fn unit(values: Vec<f64>) -> FrameVector {
        FrameVector::unit(values)
    }

    fn singleton_template(
        label: u32,
        frames: &[FrameVector],
        t_min: usize,
        t_max: usize,
    ) -> ClassTemplate {
        let metaframes = frames
            .iter()
            .map(|f| Metaframe::new(vec![f.clone()], vec![(0, 0)]).unwrap())
            .collect();
        ClassTemplate::new(label, metaframes, t_min, t_max, false, false).unwrap()
    }

    fn cfg() -> DistanceConfig {
        DistanceConfig { gamma: 0.0, ..Default::default() }
    }

    fn basis(dim: usize, axis: usize) -> FrameVector {
        let mut v = vec![0.0; dim];
        v[axis] = 1.0;
        unit(v)
    }

    #[test]
    fn two_action_concatenation_exact_boundary() {
        let dim = 4;
        let a: Vec<FrameVector> = (0..2).map(|i| basis(dim, i)).collect();
        let b: Vec<FrameVector> = (2..4).map(|i| basis(dim, i)).collect();
        let model = build_super_template(vec![
            singleton_template(1, &a, 1, 100),
            singleton_template(2, &b, 1, 100),
        ])
        .unwrap();
        let mut frames = a.clone();
        frames.extend(b.clone());
        let z = TimeSeries::new(frames).unwrap();
        let res = op_dfw_segment(&z, &model, &cfg(), OnePassOptions::default()).unwrap();
        let segs = res.segmentation.segments();
        assert_eq!(segs.len(), 2);
        assert_eq!((segs[0].begin, segs[0].end, segs[0].label), (1, 2, 1));
        assert_eq!((segs[1].begin, segs[1].end, segs[1].label), (3, 4, 2));
        assert!(!res.lengths_relaxed);
        assert_eq!(res.distance_evals, (z.len() * model.total_len()) as u64);
    }

    #[test]
    fn single_action_single_segment() {
        let dim = 4;
        let a: Vec<FrameVector> = (0..2).map(|i| basis(dim, i)).collect();
        let b: Vec<FrameVector> = (2..4).map(|i| basis(dim, i)).collect();
        let model = build_super_template(vec![
            singleton_template(1, &a, 1, 100),
            singleton_template(2, &b, 1, 100),
        ])
        .unwrap();
        let z = TimeSeries::new(b.clone()).unwrap();
        let res = op_dfw_segment(&z, &model, &cfg(), OnePassOptions::default()).unwrap();
        assert_eq!(res.segmentation.segments().len(), 1);
        assert_eq!(res.segmentation.segments()[0].label, 2);
        assert_abs_diff_eq!(res.score, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn jumps_only_between_end_and_begin() {
        let dim = 6;
        let a: Vec<FrameVector> = (0..3).map(|i| basis(dim, i)).collect();
        let b: Vec<FrameVector> = (3..6).map(|i| basis(dim, i)).collect();
        let model = build_super_template(vec![
            singleton_template(1, &a, 1, 100),
            singleton_template(2, &b, 1, 100),
        ])
        .unwrap();
        let mut frames = a.clone();
        frames.extend(b.clone());
        frames.extend(a.clone());
        let z = TimeSeries::new(frames).unwrap();
        let res = op_dfw_segment(&z, &model, &cfg(), OnePassOptions::default()).unwrap();
        let steps = res.path.steps();
        for w in steps.windows(2) {
            if w[0].label != w[1].label {
                assert_eq!(w[1].t_prime, 1, "jump must land on a begin-frame");
                let from_template = model.by_label(w[0].label).unwrap();
                assert_eq!(w[0].t_prime, from_template.len(), "jump must leave an end-frame");
            }
        }
        let labels = res.segmentation.to_labels();
        assert_eq!(labels.labels(), &[1, 1, 1, 2, 2, 2, 1, 1, 1]);
    }

    #[test]
    fn degenerate_single_template_matches_isolated_dfw() {
        // One template, no constraints, and a series whose optimal path has
        // no incentive to self-jump: one-pass equals isolated alignment.
        let dim = 4;
        let frames: Vec<FrameVector> = (0..4).map(|i| basis(dim, i)).collect();
        let template = singleton_template(1, &frames, 1, 100);
        let model = build_super_template(vec![template.clone()]).unwrap();
        let z = TimeSeries::new(frames).unwrap();
        let op = op_dfw_segment(
            &z,
            &model,
            &cfg(),
            OnePassOptions { enforce_lengths: false, keep_grid: false },
        )
        .unwrap();
        let iso = dfw_align(&z, &template, &cfg()).unwrap();
        assert_eq!(op.path.steps(), iso.path.steps());
    }

    #[test]
    fn length_gate_blocks_short_segments() {
        // Series alternates signatures every 2 frames, but class 1 requires
        // at least 4 consumed frames before a jump may leave it.
        let dim = 4;
        let a: Vec<FrameVector> = vec![basis(dim, 0), basis(dim, 1)];
        let b: Vec<FrameVector> = vec![basis(dim, 2), basis(dim, 3)];
        let strict = build_super_template(vec![
            singleton_template(1, &a, 4, 100),
            singleton_template(2, &b, 4, 100),
        ])
        .unwrap();
        let mut frames = a.clone();
        frames.extend(b.clone());
        let z = TimeSeries::new(frames).unwrap();
        let res = op_dfw_segment(&z, &strict, &cfg(), OnePassOptions::default()).unwrap();
        // A 2-frame first segment is inadmissible; the whole series stays in
        // one template instead.
        assert_eq!(res.segmentation.segments().len(), 1);

        let relaxed = op_dfw_segment(
            &z,
            &strict,
            &cfg(),
            OnePassOptions { enforce_lengths: false, keep_grid: false },
        )
        .unwrap();
        assert_eq!(relaxed.segmentation.segments().len(), 2);
    }

    #[test]
    fn shadowed_admissible_route_still_found() {
        // Two adjacent instances of class 1 (4 + 4 frames) with bounds
        // [3, 5]: the merged 8-frame run is slightly cheaper per cell than
        // self-jumping, but its length is inadmissible for the final exit
        // into class 2. A greedy per-cell length would lose the admissible
        // self-jump route.
        let dim = 6;
        let a: Vec<FrameVector> = (0..4).map(|i| basis(dim, i % 2)).collect();
        let b: Vec<FrameVector> = (0..3).map(|_| basis(dim, 4)).collect();
        let model = build_super_template(vec![
            singleton_template(1, &a, 3, 5),
            singleton_template(2, &b, 2, 6),
        ])
        .unwrap();
        let mut frames = Vec::new();
        frames.extend(a.clone());
        frames.extend(a.clone());
        frames.extend(b.clone());
        let z = TimeSeries::new(frames).unwrap();
        let res = op_dfw_segment(&z, &model, &cfg(), OnePassOptions::default()).unwrap();
        let labels = res.segmentation.to_labels();
        assert_eq!(labels.labels(), &[1, 1, 1, 1, 1, 1, 1, 1, 2, 2, 2]);
        assert!(!res.lengths_relaxed);
        // The class-1 span must contain a self-jump to keep each visit
        // within [3, 5].
        let cuts = jump_boundaries(&res.path);
        assert!(cuts.contains(&4) || cuts.contains(&5), "cuts: {cuts:?}");
    }

    #[test]
    fn null_template_absorbs_gap() {
        let dim = 6;
        let a: Vec<FrameVector> = (0..2).map(|i| basis(dim, i)).collect();
        let b: Vec<FrameVector> = (2..4).map(|i| basis(dim, i)).collect();
        let background = vec![basis(dim, 4), basis(dim, 5)];
        let null = build_null_template(&background, 512).unwrap();
        let model = build_super_template(vec![
            singleton_template(1, &a, 1, 100),
            singleton_template(2, &b, 1, 100),
            null,
        ])
        .unwrap();
        let mut frames = a.clone();
        frames.push(basis(dim, 4));
        frames.push(basis(dim, 5));
        frames.push(basis(dim, 4));
        frames.extend(b.clone());
        let z = TimeSeries::new(frames).unwrap();
        let res = op_dfw_segment(&z, &model, &cfg(), OnePassOptions::default()).unwrap();
        let labels = res.segmentation.to_labels();
        assert_eq!(labels.labels(), &[1, 1, 0, 0, 0, 2, 2]);
    }

    #[test]
    fn alias_merges_adjacent_patterns() {
        // Three repetitions of pattern 4 then one of pattern 5, all aliased
        // to action 1: a single merged segment.
        let seg = Segmentation::new(vec![
            crate::types::Segment { begin: 1, end: 3, label: 4 },
            crate::types::Segment { begin: 4, end: 6, label: 4 },
            crate::types::Segment { begin: 7, end: 9, label: 5 },
        ])
        .unwrap();
        let alias: BTreeMap<u32, u32> = [(4, 1), (5, 1)].into_iter().collect();
        let merged = alias_segmentation(&seg, &alias).unwrap();
        assert_eq!(merged.segments().len(), 1);
        assert_eq!(merged.segments()[0].label, 1);
        assert_eq!(op_dfw_stream_labels(&seg, &alias).unwrap().labels(), &[1; 9]);
    }

    #[test]
    fn self_jumps_detected_as_boundaries() {
        // A 2-frame pattern repeated 3 times; self-jumps land back on the
        // begin-frame and show up as repetition boundaries.
        let dim = 2;
        let pattern = vec![basis(dim, 0), basis(dim, 1)];
        let model = build_super_template(vec![singleton_template(1, &pattern, 1, 100)]).unwrap();
        let mut frames = Vec::new();
        for _ in 0..3 {
            frames.extend(pattern.clone());
        }
        let z = TimeSeries::new(frames).unwrap();
        let res = op_dfw_segment(&z, &model, &cfg(), OnePassOptions::default()).unwrap();
        assert_abs_diff_eq!(res.score, 0.0, epsilon = 1e-9);
        assert_eq!(jump_boundaries(&res.path), vec![2, 4]);
        // The segmentation itself merges the repetitions into one segment.
        assert_eq!(res.segmentation.segments().len(), 1);
    }

    #[test]
    fn alias_identity_and_missing_entry() {
        let seg = Segmentation::new(vec![
            crate::types::Segment { begin: 1, end: 3, label: 4 },
            crate::types::Segment { begin: 4, end: 6, label: 5 },
        ])
        .unwrap();
        let mut alias = BTreeMap::new();
        alias.insert(4u32, 1u32);
        alias.insert(5u32, 1u32);
        let track = op_dfw_stream_labels(&seg, &alias).unwrap();
        assert_eq!(track.labels(), &[1, 1, 1, 1, 1, 1]);
        let merged = alias_segmentation(&seg, &alias).unwrap();
        assert_eq!(merged.segments().len(), 1);

        let mut partial = BTreeMap::new();
        partial.insert(4u32, 1u32);
        assert!(op_dfw_stream_labels(&seg, &partial).is_err());

        let identity: BTreeMap<u32, u32> = [(4, 4), (5, 5)].into_iter().collect();
        let same = op_dfw_stream_labels(&seg, &identity).unwrap();
        assert_eq!(same, seg.to_labels());
    }
}
