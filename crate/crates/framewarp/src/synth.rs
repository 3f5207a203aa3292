//! Deterministic synthetic corpora: each class follows a smooth trajectory
//! in its own pair of descriptor dimensions, actors vary speed and phase,
//! continuous sequences concatenate random actions with optional null gaps,
//! and an optional raw-keypoint mode emits streams whose quantized histograms
//! reproduce the frame signatures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Keypoint, KeypointStream};
use crate::types::{FrameVector, LabelTrack, Segment, Segmentation, TimeSeries};

fn default_sequences_per_actor() -> usize {
    1
}

fn default_pattern_repeats() -> (usize, usize) {
    (3, 6)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_classes: usize,
    pub n_actors: usize,
    /// Inclusive range of actions per sequence.
    pub actions_per_sequence: (usize, usize),
    pub mean_action_length: usize,
    /// Relative length variation per action instance, in [0, 1].
    pub length_jitter: f64,
    /// Gaussian noise added to each signature dimension before
    /// renormalization.
    pub signature_noise: f64,
    /// Expected keypoints per frame in raw-keypoint mode.
    pub keypoint_rate: f64,
    /// Probability of a null gap before each action (and after the last).
    pub null_gap_prob: f64,
    pub seed: u64,
    #[serde(default = "default_sequences_per_actor")]
    pub sequences_per_actor: usize,
    /// Per-example phase offset causing deliberate metaframe misalignment
    /// between actors.
    #[serde(default)]
    pub phase_jitter: f64,
    /// Classes whose actions are a motion pattern repeated several times;
    /// annotations are emitted per repetition.
    #[serde(default)]
    pub periodic_classes: Vec<u32>,
    #[serde(default = "default_pattern_repeats")]
    pub pattern_repeats: (usize, usize),
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_classes == 0 || self.n_actors == 0 || self.sequences_per_actor == 0 {
            return Err(Error::InvalidInput("counts must be positive".into()));
        }
        if self.actions_per_sequence.0 == 0 || self.actions_per_sequence.0 > self.actions_per_sequence.1
        {
            return Err(Error::InvalidInput("bad actions_per_sequence range".into()));
        }
        if self.mean_action_length < 2 {
            return Err(Error::InvalidInput("mean_action_length must be >= 2".into()));
        }
        for (name, v) in [
            ("length_jitter", self.length_jitter),
            ("signature_noise", self.signature_noise),
            ("null_gap_prob", self.null_gap_prob),
            ("phase_jitter", self.phase_jitter),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidInput(format!("{name} must be in [0, 1]")));
            }
        }
        if self.keypoint_rate < 0.0 {
            return Err(Error::InvalidInput("keypoint_rate must be >= 0".into()));
        }
        if self.pattern_repeats.0 == 0 || self.pattern_repeats.0 > self.pattern_repeats.1 {
            return Err(Error::InvalidInput("bad pattern_repeats range".into()));
        }
        for c in &self.periodic_classes {
            if *c == 0 || *c as usize > self.n_classes {
                return Err(Error::InvalidInput(format!("periodic class {c} out of range")));
            }
        }
        Ok(())
    }

    /// Descriptor dimension: two axes per class, two null axes, and padding
    /// dimensions that only carry noise. The padding keeps the ambient
    /// dimension well above typical sparse-support sizes, so a metaframe's
    /// noisy columns cannot span the whole space and reconstruct arbitrary
    /// frames.
    pub fn dim(&self) -> usize {
        2 * self.n_classes + 2 + 8
    }
}

#[derive(Debug, Clone)]
pub struct SynthSequence {
    /// 0-based actor id.
    pub actor: usize,
    pub series: TimeSeries,
    pub labels: LabelTrack,
    /// Ground truth including null segments.
    pub ground_truth: Segmentation,
    /// Action (or pattern-repetition) spans, excluding null gaps.
    pub annotations: Vec<Segment>,
    /// Raw keypoints, present in keypoint mode.
    pub stream: Option<KeypointStream>,
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub dim: usize,
    pub sequences: Vec<SynthSequence>,
}

/// A unit vector at angle `theta` in the plane spanned by two axes.
pub fn signature(dim: usize, axis_a: usize, axis_b: usize, theta: f64) -> FrameVector {
    let mut v = vec![0.0; dim];
    v[axis_a] = theta.cos();
    v[axis_b] = theta.sin();
    FrameVector::unit(v)
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; one value per call keeps the stream simple.
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn noisy(frame: &FrameVector, noise: f64, rng: &mut ChaCha8Rng) -> FrameVector {
    if noise == 0.0 {
        return frame.clone();
    }
    let values: Vec<f64> = frame
        .values()
        .iter()
        .map(|v| v + noise * gaussian(rng))
        .collect();
    FrameVector::from_raw(values).expect("noisy frame").0
}

/// Monotone arc phase for ordinary actions; out-and-back for patterns so a
/// repetition ends where the next begins.
fn phase_angle(p: f64, periodic: bool) -> f64 {
    let g = if periodic {
        (std::f64::consts::PI * p).sin()
    } else {
        p
    };
    std::f64::consts::FRAC_PI_2 * g.clamp(0.0, 1.0)
}

/// Frames of one action instance (or one pattern repetition) of class
/// `class` with the given length.
fn instance_frames(
    cfg: &SynthConfig,
    class: u32,
    length: usize,
    phase_offset: f64,
    periodic: bool,
    rng: &mut ChaCha8Rng,
) -> Vec<FrameVector> {
    let dim = cfg.dim();
    let axis_a = 2 * (class as usize - 1);
    let axis_b = axis_a + 1;
    (0..length)
        .map(|i| {
            let p = if length == 1 {
                0.0
            } else {
                i as f64 / (length - 1) as f64
            };
            let theta = phase_angle((p + phase_offset).clamp(0.0, 1.0), periodic);
            let clean = signature(dim, axis_a, axis_b, theta);
            noisy(&clean, cfg.signature_noise, rng)
        })
        .collect()
}

fn jittered_length(mean: usize, jitter: f64, rng: &mut ChaCha8Rng) -> usize {
    let factor = 1.0 + jitter * rng.gen_range(-1.0..1.0);
    ((mean as f64 * factor).round() as usize).max(2)
}

fn null_gap_frames(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<FrameVector> {
    let dim = cfg.dim();
    let axis_a = 2 * cfg.n_classes;
    let axis_b = axis_a + 1;
    let len = ((cfg.mean_action_length as f64) * rng.gen_range(0.25..0.6)).round() as usize;
    let len = len.max(2);
    // Gap frames are random directions confined to the two null axes. The
    // confinement matters: with full-space noise the sparse solver can
    // cancel near-duplicate background columns against each other and
    // reconstruct arbitrary directions, collapsing the null distance on
    // action frames.
    (0..len)
        .map(|_| {
            let theta = rng.gen_range(0.0..std::f64::consts::FRAC_PI_2);
            let mut v = vec![0.0; dim];
            v[axis_a] = theta.cos() + 0.02 * gaussian(rng);
            v[axis_b] = theta.sin() + 0.02 * gaussian(rng);
            FrameVector::from_raw(v).expect("gap frame").0
        })
        .collect()
}

/// Generates the corpus. With `emit_keypoints` each sequence also carries a
/// raw keypoint stream whose words follow the frame signatures. The same
/// seed always produces the identical corpus.
pub fn generate_corpus(cfg: &SynthConfig, emit_keypoints: bool) -> Result<SynthCorpus> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dim = cfg.dim();
    let mut sequences = Vec::new();

    for actor in 0..cfg.n_actors {
        // Actors differ by a persistent speed factor and phase tendency.
        let actor_speed = 1.0 + cfg.length_jitter * rng.gen_range(-1.0..1.0);
        let actor_phase = cfg.phase_jitter * rng.gen_range(-1.0..1.0);

        for _ in 0..cfg.sequences_per_actor {
            let mut frames: Vec<FrameVector> = Vec::new();
            let mut labels: Vec<u32> = Vec::new();
            let mut annotations: Vec<Segment> = Vec::new();

            let n_actions =
                rng.gen_range(cfg.actions_per_sequence.0..=cfg.actions_per_sequence.1);
            for _ in 0..n_actions {
                if cfg.null_gap_prob > 0.0 && rng.gen::<f64>() < cfg.null_gap_prob {
                    let gap = null_gap_frames(cfg, &mut rng);
                    labels.extend(std::iter::repeat(0).take(gap.len()));
                    frames.extend(gap);
                }
                let class = rng.gen_range(1..=cfg.n_classes) as u32;
                let periodic = cfg.periodic_classes.contains(&class);
                let repeats = if periodic {
                    rng.gen_range(cfg.pattern_repeats.0..=cfg.pattern_repeats.1)
                } else {
                    1
                };
                for _ in 0..repeats {
                    let mean = (cfg.mean_action_length as f64 * actor_speed).round() as usize;
                    let len = jittered_length(mean.max(2), cfg.length_jitter, &mut rng);
                    let phase = (actor_phase + cfg.phase_jitter * rng.gen_range(-0.5..0.5))
                        .clamp(-1.0, 1.0);
                    let inst = instance_frames(cfg, class, len, phase, periodic, &mut rng);
                    let begin = frames.len() + 1;
                    frames.extend(inst);
                    let end = frames.len();
                    labels.extend(std::iter::repeat(class).take(end - begin + 1));
                    annotations.push(Segment { begin, end, label: class });
                }
            }
            if cfg.null_gap_prob > 0.0 && rng.gen::<f64>() < cfg.null_gap_prob {
                let gap = null_gap_frames(cfg, &mut rng);
                labels.extend(std::iter::repeat(0).take(gap.len()));
                frames.extend(gap);
            }

            let series = TimeSeries::new(frames)?;
            let track = LabelTrack::new(labels);
            let stream = emit_keypoints
                .then(|| keypoints_for(&series, cfg, &mut rng))
                .transpose()?;
            sequences.push(SynthSequence {
                actor,
                ground_truth: Segmentation::from_labels(&track)?,
                labels: track,
                annotations,
                series,
                stream,
            });
        }
    }
    Ok(SynthCorpus { dim, sequences })
}

fn poisson(lambda: f64, rng: &mut ChaCha8Rng) -> usize {
    if lambda <= 0.0 {
        return 0;
    }
    let limit = (-lambda).exp();
    let mut k = 0usize;
    let mut p = 1.0f64;
    loop {
        p *= rng.gen::<f64>();
        if p <= limit {
            return k;
        }
        k += 1;
    }
}

/// Raw keypoints whose nearest dictionary word follows the per-frame
/// signature distribution (word k drawn with probability v_k^2).
fn keypoints_for(
    series: &TimeSeries,
    cfg: &SynthConfig,
    rng: &mut ChaCha8Rng,
) -> Result<KeypointStream> {
    let dim = series.dim();
    let mut points = Vec::new();
    for t in 1..=series.len() {
        let v = series.frame(t).values();
        let weights: Vec<f64> = v.iter().map(|x| x * x).collect();
        let total: f64 = weights.iter().sum();
        let n = poisson(cfg.keypoint_rate, rng);
        for _ in 0..n {
            let word = if total <= 0.0 {
                rng.gen_range(0..dim)
            } else {
                let mut pick = rng.gen::<f64>() * total;
                let mut chosen = dim - 1;
                for (i, w) in weights.iter().enumerate() {
                    pick -= w;
                    if pick <= 0.0 {
                        chosen = i;
                        break;
                    }
                }
                chosen
            };
            let mut desc = vec![0.0; dim];
            desc[word] = 1.0;
            for d in desc.iter_mut() {
                *d += 0.05 * gaussian(rng);
            }
            points.push(Keypoint { frame: t, descriptor: desc });
        }
    }
    KeypointStream::new(series.len(), dim, points)
}

/// Cuts the annotated spans of a sequence into per-class example lists and a
/// background-frame pool (frames not covered by any annotation).
pub fn cut_examples(
    series: &TimeSeries,
    annotations: &[Segment],
) -> Result<(std::collections::BTreeMap<u32, Vec<TimeSeries>>, Vec<FrameVector>)> {
    let mut covered = vec![false; series.len()];
    let mut by_class: std::collections::BTreeMap<u32, Vec<TimeSeries>> =
        std::collections::BTreeMap::new();
    for ann in annotations {
        if ann.end > series.len() {
            return Err(Error::InvalidInput(format!(
                "annotation [{}, {}] exceeds series length {}",
                ann.begin,
                ann.end,
                series.len()
            )));
        }
        for t in ann.begin..=ann.end {
            covered[t - 1] = true;
        }
        if ann.label == 0 {
            continue;
        }
        by_class
            .entry(ann.label)
            .or_default()
            .push(series.slice(ann.begin, ann.end)?);
    }
    let background: Vec<FrameVector> = (1..=series.len())
        .filter(|&t| !covered[t - 1])
        .map(|t| series.frame(t).clone())
        .collect();
    Ok((by_class, background))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> SynthConfig {
        SynthConfig {
            n_classes: 3,
            n_actors: 2,
            actions_per_sequence: (2, 4),
            mean_action_length: 12,
            length_jitter: 0.2,
            signature_noise: 0.05,
            keypoint_rate: 4.0,
            null_gap_prob: 0.3,
            seed: 99,
            sequences_per_actor: 2,
            phase_jitter: 0.0,
            periodic_classes: vec![],
            pattern_repeats: (3, 6),
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = base_config();
        let a = generate_corpus(&cfg, true).unwrap();
        let b = generate_corpus(&cfg, true).unwrap();
        assert_eq!(a.sequences.len(), b.sequences.len());
        for (x, y) in a.sequences.iter().zip(&b.sequences) {
            assert_eq!(x.series, y.series);
            assert_eq!(x.labels, y.labels);
            assert_eq!(x.annotations, y.annotations);
            assert_eq!(x.stream, y.stream);
        }
    }

    #[test]
    fn no_null_without_gap_probability() {
        let cfg = SynthConfig { null_gap_prob: 0.0, ..base_config() };
        let corpus = generate_corpus(&cfg, false).unwrap();
        for seq in &corpus.sequences {
            assert!(seq.labels.labels().iter().all(|&l| l != 0));
        }
    }

    #[test]
    fn labels_match_annotations() {
        let cfg = base_config();
        let corpus = generate_corpus(&cfg, false).unwrap();
        for seq in &corpus.sequences {
            assert_eq!(seq.labels.len(), seq.series.len());
            for ann in &seq.annotations {
                for t in ann.begin..=ann.end {
                    assert_eq!(seq.labels.label(t), ann.label);
                }
            }
        }
    }

    #[test]
    fn periodic_classes_repeat_patterns() {
        let cfg = SynthConfig {
            n_classes: 2,
            periodic_classes: vec![2],
            pattern_repeats: (3, 4),
            null_gap_prob: 0.0,
            actions_per_sequence: (3, 3),
            ..base_config()
        };
        let corpus = generate_corpus(&cfg, false).unwrap();
        let mut saw_repeat = false;
        for seq in &corpus.sequences {
            for w in seq.annotations.windows(2) {
                if w[0].label == 2 && w[1].label == 2 && w[1].begin == w[0].end + 1 {
                    saw_repeat = true;
                }
            }
        }
        assert!(saw_repeat, "periodic class never produced adjacent repetitions");
    }

    #[test]
    fn cut_examples_partitions_frames() {
        let cfg = base_config();
        let corpus = generate_corpus(&cfg, false).unwrap();
        let seq = &corpus.sequences[0];
        let (by_class, background) = cut_examples(&seq.series, &seq.annotations).unwrap();
        let cut_total: usize = by_class.values().flatten().map(|e| e.len()).sum();
        assert_eq!(cut_total + background.len(), seq.series.len());
    }

    #[test]
    fn keypoint_mode_attaches_streams() {
        let cfg = SynthConfig { keypoint_rate: 6.0, ..base_config() };
        let corpus = generate_corpus(&cfg, true).unwrap();
        for seq in &corpus.sequences {
            let stream = seq.stream.as_ref().unwrap();
            assert_eq!(stream.video_length(), seq.series.len());
            assert_eq!(stream.dim(), corpus.dim);
            assert!(!stream.points().is_empty());
        }
    }
}
