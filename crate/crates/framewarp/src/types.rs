//! Domain types shared by all modules: frames, series, label tracks,
//! segmentations and alignment paths.
//!
//! All indices in file formats and in the public API are 1-based. Frames are
//! unit-norm vectors; a frame with no content at all is kept as an all-zero
//! vector with an explicit `empty` flag rather than being rejected.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Norm deviation above which an incoming frame is warned about.
pub const NORM_WARN_TOLERANCE: f64 = 1e-3;
/// Norm deviation above which a frame is silently renormalized.
const NORM_FIX_TOLERANCE: f64 = 1e-6;
/// Below this norm a vector is treated as an empty (no-feature) frame.
const EMPTY_NORM: f64 = 1e-12;

/// A single unit-norm descriptor vector, or an all-zero "empty" frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FrameVector {
    values: Vec<f64>,
}

impl FrameVector {
    /// Builds a frame from raw values, renormalizing to unit norm when the
    /// input deviates by more than 1e-6. Returns the original norm so callers
    /// can report denormalized inputs.
    pub fn from_raw(mut values: Vec<f64>) -> Result<(Self, f64)> {
        if values.is_empty() {
            return Err(Error::InvalidInput("frame of dimension 0".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite frame entry".into()));
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= EMPTY_NORM {
            values.iter_mut().for_each(|v| *v = 0.0);
        } else if (norm - 1.0).abs() > NORM_FIX_TOLERANCE {
            values.iter_mut().for_each(|v| *v /= norm);
        }
        Ok((FrameVector { values }, norm))
    }

    /// Builds a unit frame, panicking on invalid input. Test helper.
    pub fn unit(values: Vec<f64>) -> Self {
        Self::from_raw(values).expect("valid frame").0
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// True for the degenerate all-zero (no-feature) frame.
    pub fn is_empty_frame(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    pub fn dot(&self, other: &FrameVector) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }
}

/// An ordered sequence of frames sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    frames: Vec<FrameVector>,
}

impl TimeSeries {
    pub fn new(frames: Vec<FrameVector>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::InvalidInput("empty time series".into()));
        }
        let dim = frames[0].dim();
        for f in &frames {
            if f.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: f.dim(),
                });
            }
        }
        Ok(TimeSeries { frames })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.frames[0].dim()
    }

    /// 1-based frame access.
    pub fn frame(&self, t: usize) -> &FrameVector {
        &self.frames[t - 1]
    }

    pub fn frames(&self) -> &[FrameVector] {
        &self.frames
    }

    /// 1-based inclusive sub-sequence.
    pub fn slice(&self, begin: usize, end: usize) -> Result<TimeSeries> {
        if begin < 1 || end > self.len() || begin > end {
            return Err(Error::InvalidInput(format!(
                "slice [{begin}, {end}] out of range for series of length {}",
                self.len()
            )));
        }
        TimeSeries::new(self.frames[begin - 1..end].to_vec())
    }
}

/// Per-frame category labels; 0 is the null class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelTrack {
    labels: Vec<u32>,
}

impl LabelTrack {
    pub fn new(labels: Vec<u32>) -> Self {
        LabelTrack { labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// 1-based access.
    pub fn label(&self, t: usize) -> u32 {
        self.labels[t - 1]
    }
}

/// One labeled interval; `begin` and `end` are 1-based and inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub begin: usize,
    pub end: usize,
    pub label: u32,
}

/// A partition of `[1, T]` into labeled segments.
///
/// The segments tile the series exactly: the first begins at 1, each next
/// segment begins one frame after its predecessor ends, and the last ends at
/// the series length.
#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    segments: Vec<Segment>,
}

impl Segmentation {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidSegmentation("no segments".into()));
        }
        if segments[0].begin != 1 {
            return Err(Error::InvalidSegmentation(format!(
                "first segment begins at {}, expected 1",
                segments[0].begin
            )));
        }
        for (i, seg) in segments.iter().enumerate() {
            if seg.begin > seg.end {
                return Err(Error::InvalidSegmentation(format!(
                    "segment {} has begin {} > end {}",
                    i + 1,
                    seg.begin,
                    seg.end
                )));
            }
            if i > 0 && seg.begin != segments[i - 1].end + 1 {
                return Err(Error::InvalidSegmentation(format!(
                    "segment {} begins at {}, expected {}",
                    i + 1,
                    seg.begin,
                    segments[i - 1].end + 1
                )));
            }
        }
        Ok(Segmentation { segments })
    }

    /// Collapses a per-frame label track into maximal constant runs.
    pub fn from_labels(track: &LabelTrack) -> Result<Self> {
        if track.is_empty() {
            return Err(Error::InvalidSegmentation("empty label track".into()));
        }
        let labels = track.labels();
        let mut segments = Vec::new();
        let mut begin = 1;
        for t in 2..=labels.len() {
            if labels[t - 1] != labels[begin - 1] {
                segments.push(Segment {
                    begin,
                    end: t - 1,
                    label: labels[begin - 1],
                });
                begin = t;
            }
        }
        segments.push(Segment {
            begin,
            end: labels.len(),
            label: labels[begin - 1],
        });
        Segmentation::new(segments)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Total number of frames covered.
    pub fn total_len(&self) -> usize {
        self.segments.last().map(|s| s.end).unwrap_or(0)
    }

    /// Expands the segments back into a per-frame track.
    pub fn to_labels(&self) -> LabelTrack {
        let mut labels = Vec::with_capacity(self.total_len());
        for seg in &self.segments {
            labels.extend(std::iter::repeat(seg.label).take(seg.end - seg.begin + 1));
        }
        LabelTrack::new(labels)
    }
}

/// One grid point of an alignment: test frame `t` matched to frame (or
/// metaframe) `t_prime` of the template identified by `label`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathStep {
    pub t: usize,
    pub t_prime: usize,
    pub label: u32,
}

/// A monotone alignment path over the (t, t') grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentPath {
    steps: Vec<PathStep>,
}

impl AlignmentPath {
    pub fn new(steps: Vec<PathStep>) -> Result<Self> {
        let path = AlignmentPath { steps };
        path.validate()?;
        Ok(path)
    }

    /// Checks monotonicity: within a template only (0,1), (1,0) and (1,1)
    /// moves; between templates only jumps from some frame to t' = 1 with
    /// t advancing by exactly one.
    pub fn validate(&self) -> Result<()> {
        if self.steps.is_empty() {
            return Err(Error::InvalidInput("empty alignment path".into()));
        }
        for w in self.steps.windows(2) {
            let (a, b) = (w[0], w[1]);
            let dt = b.t as i64 - a.t as i64;
            if a.label == b.label {
                let dtp = b.t_prime as i64 - a.t_prime as i64;
                let ok_within = matches!((dt, dtp), (0, 1) | (1, 0) | (1, 1));
                let ok_jump = dt == 1 && b.t_prime == 1;
                if !ok_within && !ok_jump {
                    return Err(Error::InvalidInput(format!(
                        "illegal transition ({},{}) -> ({},{})",
                        a.t, a.t_prime, b.t, b.t_prime
                    )));
                }
            } else if dt != 1 || b.t_prime != 1 {
                return Err(Error::InvalidInput(format!(
                    "illegal jump ({},{},{}) -> ({},{},{})",
                    a.t, a.t_prime, a.label, b.t, b.t_prime, b.label
                )));
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> &[PathStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Per-frame labels: each test frame takes the label of its last-visited
    /// grid point.
    pub fn frame_labels(&self) -> LabelTrack {
        let t_max = self.steps.last().map(|s| s.t).unwrap_or(0);
        let mut labels = vec![0u32; t_max];
        for step in &self.steps {
            labels[step.t - 1] = step.label;
        }
        LabelTrack::new(labels)
    }
}
