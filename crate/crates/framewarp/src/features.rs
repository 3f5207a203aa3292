//! Bag-of-words featurization of timestamped keypoint descriptor streams.
//!
//! A dictionary of K words is learned with seeded k-means (k-means++ init).
//! Each frame is described by a histogram of the words quantizing the
//! keypoints inside a temporal window centered at the frame: either the
//! smallest symmetric window holding at least Q keypoints (capped), or a
//! fixed-width window. Histograms are optionally IDF-weighted and then
//! l2-normalized; frames whose window holds no keypoints stay as flagged
//! empty frames.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel;
use crate::types::{FrameVector, TimeSeries};

/// A timestamped raw descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct Keypoint {
    /// 1-based frame index.
    pub frame: usize,
    pub descriptor: Vec<f64>,
}

/// All keypoints detected in one video, ordered as produced upstream.
#[derive(Debug, Clone, PartialEq)]
pub struct KeypointStream {
    video_length: usize,
    dim: usize,
    points: Vec<Keypoint>,
}

impl KeypointStream {
    pub fn new(video_length: usize, dim: usize, points: Vec<Keypoint>) -> Result<Self> {
        if video_length == 0 {
            return Err(Error::InvalidInput("video_length must be positive".into()));
        }
        if dim == 0 {
            return Err(Error::InvalidInput("descriptor dimension must be positive".into()));
        }
        for p in &points {
            if p.descriptor.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.descriptor.len(),
                });
            }
            if p.frame < 1 || p.frame > video_length {
                return Err(Error::InvalidInput(format!(
                    "keypoint at frame {} outside [1, {video_length}]",
                    p.frame
                )));
            }
        }
        Ok(KeypointStream {
            video_length,
            dim,
            points,
        })
    }

    pub fn video_length(&self) -> usize {
        self.video_length
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Keypoint] {
        &self.points
    }

    /// Number of keypoints on each frame, indexed 0-based by frame - 1.
    fn counts_per_frame(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.video_length];
        for p in &self.points {
            counts[p.frame - 1] += 1;
        }
        counts
    }
}

/// A K-word codebook with per-word IDF weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dictionary {
    words: Vec<Vec<f64>>,
    idf: Vec<f64>,
}

impl Dictionary {
    /// Builds a dictionary with all IDF weights at 1 (no reweighting).
    pub fn new(words: Vec<Vec<f64>>) -> Result<Self> {
        if words.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "dictionary needs at least 2 words, got {}",
                words.len()
            )));
        }
        let dim = words[0].len();
        for w in &words {
            if w.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: w.len(),
                });
            }
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("non-finite centroid".into()));
            }
        }
        let k = words.len();
        Ok(Dictionary {
            words,
            idf: vec![1.0; k],
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.words[0].len()
    }

    pub fn words(&self) -> &[Vec<f64>] {
        &self.words
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn set_idf(&mut self, idf: Vec<f64>) -> Result<()> {
        if idf.len() != self.words.len() {
            return Err(Error::DimensionMismatch {
                expected: self.words.len(),
                got: idf.len(),
            });
        }
        if idf.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput("idf weights must be finite and >= 0".into()));
        }
        self.idf = idf;
        Ok(())
    }

    /// Index of the nearest word by squared Euclidean distance; ties go to
    /// the lowest index.
    pub fn quantize(&self, descriptor: &[f64]) -> Result<usize> {
        if descriptor.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: descriptor.len(),
            });
        }
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (k, word) in self.words.iter().enumerate() {
            let d = sq_dist(descriptor, word);
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        Ok(best)
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

const KMEANS_MAX_ITERS: usize = 100;
const KMEANS_SHIFT_TOL: f64 = 1e-6;

/// Learns a K-word dictionary from the pooled keypoints of all streams,
/// using k-means with k-means++ initialization. A fixed seed makes the
/// result reproducible; IDF weights start at 1 (see [`compute_idf`]).
pub fn build_dictionary(streams: &[KeypointStream], k: usize, seed: u64) -> Result<Dictionary> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("K must be >= 2, got {k}")));
    }
    let dim = match streams.first() {
        Some(s) => s.dim(),
        None => return Err(Error::Capacity("no keypoint streams".into())),
    };
    let mut data: Vec<&[f64]> = Vec::new();
    for s in streams {
        if s.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: s.dim(),
            });
        }
        data.extend(s.points().iter().map(|p| p.descriptor.as_slice()));
    }
    if data.len() < k {
        return Err(Error::Capacity(format!(
            "{} keypoints cannot seed K={k} words",
            data.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeans_pp_init(&data, k, dim, &mut rng);

    let mut assignment = vec![0usize; data.len()];
    for _ in 0..KMEANS_MAX_ITERS {
        for (i, point) in data.iter().enumerate() {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (c, centroid) in centroids.iter().enumerate() {
                let d = sq_dist(point, centroid);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            assignment[i] = best;
        }

        let mut sums = vec![vec![0.0f64; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, point) in data.iter().enumerate() {
            counts[assignment[i]] += 1;
            for (s, v) in sums[assignment[i]].iter_mut().zip(*point) {
                *s += v;
            }
        }
        let mut shift: f64 = 0.0;
        for c in 0..k {
            if counts[c] == 0 {
                // Empty cluster keeps its previous centroid.
                continue;
            }
            let inv = 1.0 / counts[c] as f64;
            let mut moved = 0.0;
            for (old, s) in centroids[c].iter_mut().zip(&sums[c]) {
                let new = s * inv;
                moved += (new - *old) * (new - *old);
                *old = new;
            }
            shift = shift.max(moved.sqrt());
        }
        if shift < KMEANS_SHIFT_TOL {
            break;
        }
    }
    Dictionary::new(centroids)
}

fn kmeans_pp_init(
    data: &[&[f64]],
    k: usize,
    dim: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<f64>> {
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    let first = rng.gen_range(0..data.len());
    centroids.push(data[first].to_vec());

    let mut min_d: Vec<f64> = data.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = min_d.iter().sum();
        let chosen = if total <= 0.0 {
            // All remaining points coincide with a centroid; pick uniformly.
            rng.gen_range(0..data.len())
        } else {
            let threshold = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = data.len() - 1;
            for (i, d) in min_d.iter().enumerate() {
                acc += d;
                if acc >= threshold {
                    pick = i;
                    break;
                }
            }
            pick
        };
        centroids.push(data[chosen].to_vec());
        let _ = dim;
        for (i, p) in data.iter().enumerate() {
            let d = sq_dist(p, centroids.last().unwrap());
            if d < min_d[i] {
                min_d[i] = d;
            }
        }
    }
    centroids
}

/// Temporal window selection for per-frame histograms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowMode {
    /// Smallest symmetric window holding at least `q` keypoints, growing up
    /// to a half-width of `cap`.
    Adaptive { q: usize, cap: usize },
    /// Symmetric window of fixed width `w` frames (half-width (w-1)/2).
    Fixed { w: usize },
}

/// Smallest symmetric window `[t-w, t+w]` (clamped to the video) containing
/// at least `q` keypoints; falls back to the cap-width window if `q` is
/// never reached. Returns 1-based inclusive bounds.
pub fn adaptive_window(
    stream: &KeypointStream,
    t: usize,
    q: usize,
    cap: usize,
) -> Result<(usize, usize)> {
    if t < 1 || t > stream.video_length() {
        return Err(Error::InvalidInput(format!(
            "frame {t} outside [1, {}]",
            stream.video_length()
        )));
    }
    if q < 1 || cap < 1 {
        return Err(Error::InvalidInput("Q and cap must be >= 1".into()));
    }
    let counts = stream.counts_per_frame();
    Ok(adaptive_window_counts(&counts, stream.video_length(), t, q, cap))
}

fn adaptive_window_counts(
    counts: &[usize],
    video_length: usize,
    t: usize,
    q: usize,
    cap: usize,
) -> (usize, usize) {
    let clamp = |w: usize| -> (usize, usize) {
        let lo = t.saturating_sub(w).max(1);
        let hi = (t + w).min(video_length);
        (lo, hi)
    };
    let mut inside = counts[t - 1];
    let mut w = 0usize;
    while inside < q && w < cap {
        w += 1;
        let (lo, hi) = clamp(w);
        // Only the newly uncovered frames are added.
        if t >= w + 1 && lo == t - w {
            inside += counts[lo - 1];
        }
        if hi == t + w {
            inside += counts[hi - 1];
        }
        if lo == 1 && hi == video_length {
            // The whole video is covered; growing further adds nothing.
            break;
        }
    }
    clamp(w)
}

/// Raw (unweighted, unnormalized) per-frame word-count histograms.
pub fn raw_histograms(
    stream: &KeypointStream,
    dict: &Dictionary,
    window: WindowMode,
) -> Result<Vec<Vec<f64>>> {
    if stream.dim() != dict.dim() {
        return Err(Error::DimensionMismatch {
            expected: dict.dim(),
            got: stream.dim(),
        });
    }
    match window {
        WindowMode::Adaptive { q, cap } => {
            if q < 1 || cap < 1 {
                return Err(Error::InvalidInput("Q and cap must be >= 1".into()));
            }
        }
        WindowMode::Fixed { w } => {
            if w < 1 {
                return Err(Error::InvalidInput("fixed window must be >= 1".into()));
            }
        }
    }

    // Quantize each keypoint once, then bucket by frame.
    let words: Vec<usize> = {
        let pts = stream.points();
        let assigned = parallel::map_indexed(pts.len(), |i| dict.quantize(&pts[i].descriptor));
        let mut out = Vec::with_capacity(pts.len());
        for a in assigned {
            out.push(a?);
        }
        out
    };
    let mut per_frame: Vec<Vec<usize>> = vec![Vec::new(); stream.video_length()];
    for (p, word) in stream.points().iter().zip(&words) {
        per_frame[p.frame - 1].push(*word);
    }
    let counts = stream.counts_per_frame();
    let k = dict.len();
    let video_length = stream.video_length();

    let histograms = parallel::map_indexed(video_length, |idx| {
        let t = idx + 1;
        let (lo, hi) = match window {
            WindowMode::Adaptive { q, cap } => {
                adaptive_window_counts(&counts, video_length, t, q, cap)
            }
            WindowMode::Fixed { w } => {
                let half = (w - 1) / 2;
                (t.saturating_sub(half).max(1), (t + half).min(video_length))
            }
        };
        let mut hist = vec![0.0f64; k];
        for frame in lo..=hi {
            for &word in &per_frame[frame - 1] {
                hist[word] += 1.0;
            }
        }
        hist
    });
    Ok(histograms)
}

/// Featurizes a stream into a unit-norm per-frame time series. Empty windows
/// yield flagged empty frames.
pub fn featurize(
    stream: &KeypointStream,
    dict: &Dictionary,
    window: WindowMode,
    use_idf: bool,
) -> Result<TimeSeries> {
    let histograms = raw_histograms(stream, dict, window)?;
    let mut frames = Vec::with_capacity(histograms.len());
    for mut hist in histograms {
        if use_idf {
            for (h, w) in hist.iter_mut().zip(dict.idf()) {
                *h *= w;
            }
        }
        let (frame, _) = FrameVector::from_raw(hist)?;
        frames.push(frame);
    }
    TimeSeries::new(frames)
}

/// IDF weights over per-frame count histograms: `idf[k] = ln(N / n_k)` with
/// `n_k` the number of frames where word k occurs; words never seen get
/// `ln(N)`.
pub fn compute_idf(histograms: &[Vec<f64>], k: usize) -> Result<Vec<f64>> {
    let n = histograms.len();
    if n == 0 {
        return Err(Error::InvalidInput("no frames for idf".into()));
    }
    if !histograms
        .iter()
        .any(|h| h.iter().any(|c| *c > 0.0))
    {
        return Err(Error::InvalidInput("all frames empty; idf undefined".into()));
    }
    let mut present = vec![0usize; k];
    for h in histograms {
        if h.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: h.len(),
            });
        }
        for (p, c) in present.iter_mut().zip(h) {
            if *c > 0.0 {
                *p += 1;
            }
        }
    }
    let n = n as f64;
    Ok(present
        .iter()
        .map(|&nk| if nk == 0 { n.ln() } else { (n / nk as f64).ln() })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn point(frame: usize, desc: &[f64]) -> Keypoint {
        Keypoint {
            frame,
            descriptor: desc.to_vec(),
        }
    }

    fn cluster_stream() -> KeypointStream {
        // Two well separated clusters around (0,0) and (10,10).
        let mut pts = Vec::new();
        for (i, d) in [[-0.1, 0.0], [0.1, 0.0], [0.0, -0.1], [0.0, 0.1]].iter().enumerate() {
            pts.push(point(i + 1, d));
        }
        for (i, d) in [[9.9, 10.0], [10.1, 10.0], [10.0, 9.9], [10.0, 10.1]].iter().enumerate() {
            pts.push(point(i + 1, d));
        }
        KeypointStream::new(4, 2, pts).unwrap()
    }

    #[test]
    fn kmeans_recovers_cluster_means() {
        let stream = cluster_stream();
        let dict = build_dictionary(std::slice::from_ref(&stream), 2, 7).unwrap();
        let mut words = dict.words().to_vec();
        words.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        assert_abs_diff_eq!(words[0][0], 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(words[0][1], 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(words[1][0], 10.0, epsilon = 1e-6);
        assert_abs_diff_eq!(words[1][1], 10.0, epsilon = 1e-6);
    }

    #[test]
    fn kmeans_exact_when_k_equals_points() {
        let pts = vec![
            point(1, &[0.0, 0.0]),
            point(1, &[1.0, 0.0]),
            point(2, &[0.0, 1.0]),
        ];
        let stream = KeypointStream::new(2, 2, pts).unwrap();
        let dict = build_dictionary(std::slice::from_ref(&stream), 3, 1).unwrap();
        // Zero quantization error: every point sits on a centroid.
        for p in stream.points() {
            let w = dict.quantize(&p.descriptor).unwrap();
            assert_abs_diff_eq!(sq_dist(&p.descriptor, &dict.words()[w]), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn kmeans_capacity_error() {
        let pts = vec![point(1, &[0.0]), point(1, &[1.0]), point(2, &[2.0])];
        let stream = KeypointStream::new(2, 1, pts).unwrap();
        assert!(matches!(
            build_dictionary(std::slice::from_ref(&stream), 5, 1),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn kmeans_deterministic_per_seed() {
        let stream = cluster_stream();
        let a = build_dictionary(std::slice::from_ref(&stream), 2, 42).unwrap();
        let b = build_dictionary(std::slice::from_ref(&stream), 2, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn window_single_frame_when_enough_points() {
        let pts = vec![point(3, &[0.0]), point(3, &[0.0])];
        let stream = KeypointStream::new(5, 1, pts).unwrap();
        assert_eq!(adaptive_window(&stream, 3, 2, 5).unwrap(), (3, 3));
    }

    #[test]
    fn window_grows_symmetrically() {
        // Keypoints only at t-3 and t+3; Q=1 forces symmetric growth to both.
        let pts = vec![point(2, &[0.0]), point(8, &[0.0])];
        let stream = KeypointStream::new(9, 1, pts).unwrap();
        assert_eq!(adaptive_window(&stream, 5, 1, 9).unwrap(), (2, 8));
    }

    #[test]
    fn window_cap_fallback_on_empty_stream() {
        let stream = KeypointStream::new(9, 1, vec![]).unwrap();
        assert_eq!(adaptive_window(&stream, 5, 1, 2).unwrap(), (3, 7));
    }

    #[test]
    fn window_monotone_in_q() {
        let pts = vec![
            point(1, &[0.0]),
            point(3, &[0.0]),
            point(4, &[0.0]),
            point(7, &[0.0]),
        ];
        let stream = KeypointStream::new(8, 1, pts).unwrap();
        for t in 1..=8 {
            let mut prev = (t, t);
            for q in 1..=5 {
                let w = adaptive_window(&stream, t, q, 8).unwrap();
                assert!(w.0 <= prev.0 && w.1 >= prev.1, "q={q} t={t}: {w:?} < {prev:?}");
                prev = w;
            }
        }
    }

    #[test]
    fn featurize_one_hot_and_normalized() {
        let words = vec![vec![0.0, 0.0], vec![10.0, 10.0]];
        let dict = Dictionary::new(words).unwrap();
        let pts = vec![
            point(1, &[9.8, 10.0]),
            point(1, &[10.2, 10.0]),
            point(3, &[0.1, 0.0]),
        ];
        let stream = KeypointStream::new(4, 2, pts).unwrap();
        let series =
            featurize(&stream, &dict, WindowMode::Adaptive { q: 1, cap: 1 }, false).unwrap();
        assert_eq!(series.frame(1).values(), &[0.0, 1.0]);
        assert_eq!(series.frame(3).values(), &[1.0, 0.0]);
        // Frame 4 sees the frame-3 keypoint through its half-width-1 window.
        assert_eq!(series.frame(4).values(), &[1.0, 0.0]);
    }

    #[test]
    fn featurize_345_normalization() {
        let words = vec![vec![0.0], vec![1.0]];
        let dict = Dictionary::new(words).unwrap();
        let mut pts = Vec::new();
        for _ in 0..3 {
            pts.push(point(1, &[0.0]));
        }
        for _ in 0..4 {
            pts.push(point(1, &[1.0]));
        }
        let stream = KeypointStream::new(1, 1, pts).unwrap();
        let series =
            featurize(&stream, &dict, WindowMode::Adaptive { q: 1, cap: 1 }, false).unwrap();
        assert_eq!(series.frame(1).values(), &[0.6, 0.8]);
    }

    #[test]
    fn featurize_empty_window_gives_empty_frame() {
        let words = vec![vec![0.0], vec![1.0]];
        let dict = Dictionary::new(words).unwrap();
        let pts = vec![point(1, &[0.0])];
        let stream = KeypointStream::new(9, 1, pts).unwrap();
        let series =
            featurize(&stream, &dict, WindowMode::Adaptive { q: 1, cap: 2 }, false).unwrap();
        assert!(series.frame(9).is_empty_frame());
    }

    #[test]
    fn histogram_mass_conserved_with_global_window() {
        let words = vec![vec![0.0], vec![1.0]];
        let dict = Dictionary::new(words).unwrap();
        let pts = vec![point(1, &[0.0]), point(2, &[1.0]), point(3, &[1.0])];
        let stream = KeypointStream::new(3, 1, pts).unwrap();
        // A window wide enough to always cover the whole video.
        let hists = raw_histograms(&stream, &dict, WindowMode::Fixed { w: 7 }).unwrap();
        for h in &hists {
            assert_abs_diff_eq!(h.iter().sum::<f64>(), 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn idf_formula() {
        // Word 0 in every frame -> ln(1) = 0. Word 1 in one of 4 frames ->
        // ln(4). Word 2 never seen -> ln(4).
        let hists = vec![
            vec![2.0, 1.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![3.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
        ];
        let idf = compute_idf(&hists, 3).unwrap();
        assert_abs_diff_eq!(idf[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(idf[1], 4.0f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(idf[2], 4.0f64.ln(), epsilon = 1e-12);
    }
}
