//! Template learning: per-category class templates built around the example
//! closest to the class center, metaframes collecting the frames aligned to
//! each center position, per-class length bounds, the null-class template,
//! and the fixed-order super-template.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dtw::dtw_align;
use crate::error::{Error, Result};
use crate::io::{write_atomic, FORMAT_VERSION};
use crate::parallel;
use crate::types::{FrameVector, TimeSeries};

/// Sentinel for "no upper length bound" (the null class).
pub const UNBOUNDED: usize = usize::MAX;

/// Fixed seed for the uniform metaframe subsampling policy.
const SUBSAMPLE_SEED: u64 = 0x5eed_cafe;

/// A collection of training frames aligned to one center position, with
/// (example index, frame index) provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Metaframe {
    frames: Vec<FrameVector>,
    source: Vec<(usize, usize)>,
}

impl Metaframe {
    pub fn new(frames: Vec<FrameVector>, source: Vec<(usize, usize)>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::InvalidInput("metaframe needs at least one frame".into()));
        }
        Ok(Metaframe { frames, source })
    }

    pub fn frames(&self) -> &[FrameVector] {
        &self.frames
    }

    pub fn source(&self) -> &[(usize, usize)] {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// A sequence of metaframes for one category, plus its length bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassTemplate {
    label: u32,
    metaframes: Vec<Metaframe>,
    t_min: usize,
    t_max: usize,
    is_pattern: bool,
    is_null: bool,
}

impl ClassTemplate {
    pub fn new(
        label: u32,
        metaframes: Vec<Metaframe>,
        t_min: usize,
        t_max: usize,
        is_pattern: bool,
        is_null: bool,
    ) -> Result<Self> {
        if metaframes.is_empty() {
            return Err(Error::InvalidInput("template needs at least one metaframe".into()));
        }
        if t_min < 1 || t_min > t_max {
            return Err(Error::InvalidInput(format!(
                "bad length bounds [{t_min}, {t_max}]"
            )));
        }
        if is_null && metaframes.len() != 1 {
            return Err(Error::InvalidInput(
                "null template must have exactly one metaframe".into(),
            ));
        }
        Ok(ClassTemplate {
            label,
            metaframes,
            t_min,
            t_max,
            is_pattern,
            is_null,
        })
    }

    pub fn label(&self) -> u32 {
        self.label
    }

    pub fn len(&self) -> usize {
        self.metaframes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.metaframes.is_empty()
    }

    /// 1-based metaframe access.
    pub fn metaframe(&self, t_prime: usize) -> &Metaframe {
        &self.metaframes[t_prime - 1]
    }

    pub fn metaframes(&self) -> &[Metaframe] {
        &self.metaframes
    }

    pub fn t_min(&self) -> usize {
        self.t_min
    }

    pub fn t_max(&self) -> usize {
        self.t_max
    }

    pub fn is_pattern(&self) -> bool {
        self.is_pattern
    }

    pub fn is_null(&self) -> bool {
        self.is_null
    }

    pub fn dim(&self) -> usize {
        self.metaframes[0].frames()[0].dim()
    }

    pub fn set_pattern(&mut self, is_pattern: bool) {
        self.is_pattern = is_pattern;
    }
}

/// Minimum and maximum example length of a class.
pub fn length_bounds(examples: &[TimeSeries]) -> Result<(usize, usize)> {
    if examples.is_empty() {
        return Err(Error::InvalidInput("no examples".into()));
    }
    let min = examples.iter().map(|e| e.len()).min().unwrap();
    let max = examples.iter().map(|e| e.len()).max().unwrap();
    Ok((min, max))
}

/// Index of the example minimizing the summed DTW score to all others
/// (0-based; ties go to the lowest index).
pub fn select_class_center(examples: &[TimeSeries]) -> Result<usize> {
    if examples.is_empty() {
        return Err(Error::InvalidInput("no examples".into()));
    }
    let n = examples.len();
    if n == 1 {
        return Ok(0);
    }
    // All ordered pairs; alignments are independent and run concurrently.
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let scores = parallel::map_indexed(pairs.len(), |p| {
        let (i, j) = pairs[p];
        dtw_align(&examples[i], &examples[j]).map(|a| a.score)
    });
    let mut sums = vec![0.0f64; n];
    for (p, s) in scores.into_iter().enumerate() {
        sums[pairs[p].0] += s?;
    }
    let mut best = 0usize;
    for i in 1..n {
        if sums[i] < sums[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Builds the class template for one category: the center example provides
/// the metaframe axis; every other example is aligned to it and each of its
/// frames joins the metaframe where it first appears on the path.
///
/// When an example aligns several frames to one center position they all
/// enter that metaframe; when one example frame spans several center
/// positions only the first gets it, so the later metaframes receive nothing
/// from that example.
pub fn build_class_template(label: u32, examples: &[TimeSeries]) -> Result<ClassTemplate> {
    let center_idx = select_class_center(examples)?;
    let center = &examples[center_idx];
    let (t_min, t_max) = length_bounds(examples)?;

    let mut frames: Vec<Vec<FrameVector>> = vec![Vec::new(); center.len()];
    let mut source: Vec<Vec<(usize, usize)>> = vec![Vec::new(); center.len()];
    for (t_prime, slot) in frames.iter_mut().enumerate() {
        slot.push(center.frame(t_prime + 1).clone());
        source[t_prime].push((center_idx, t_prime + 1));
    }

    let others: Vec<usize> = (0..examples.len()).filter(|&j| j != center_idx).collect();
    let paths = parallel::map_indexed(others.len(), |p| {
        dtw_align(&examples[others[p]], center).map(|a| a.path)
    });
    for (p, path) in paths.into_iter().enumerate() {
        let j = others[p];
        let path = path?;
        let mut prev_t = 0usize;
        for step in path.steps() {
            if step.t != prev_t {
                frames[step.t_prime - 1].push(examples[j].frame(step.t).clone());
                source[step.t_prime - 1].push((j, step.t));
                prev_t = step.t;
            }
        }
    }

    let metaframes: Result<Vec<Metaframe>> = frames
        .into_iter()
        .zip(source)
        .map(|(f, s)| Metaframe::new(f, s))
        .collect();
    ClassTemplate::new(label, metaframes?, t_min, t_max, false, false)
}

/// Uniform random subsample of `cap` indices out of `len`, fixed seed,
/// returned sorted. Identity when `len <= cap`.
pub(crate) fn subsample_indices(len: usize, cap: usize) -> Vec<usize> {
    if len <= cap {
        return (0..len).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SUBSAMPLE_SEED);
    let mut indices: Vec<usize> = (0..len).collect();
    indices.shuffle(&mut rng);
    indices.truncate(cap);
    indices.sort_unstable();
    indices
}

/// Unit-length null-class template holding all background frames, capped at
/// `null_max_frames` by uniform seeded subsampling. No length bounds.
pub fn build_null_template(
    background_frames: &[FrameVector],
    null_max_frames: usize,
) -> Result<ClassTemplate> {
    if background_frames.is_empty() {
        return Err(Error::InvalidInput("no background frames".into()));
    }
    let keep = subsample_indices(background_frames.len(), null_max_frames.max(1));
    let frames: Vec<FrameVector> = keep.iter().map(|&i| background_frames[i].clone()).collect();
    let source: Vec<(usize, usize)> = keep.iter().map(|&i| (0usize, i + 1)).collect();
    ClassTemplate::new(0, vec![Metaframe::new(frames, source)?], 1, UNBOUNDED, false, true)
}

/// The fixed-order concatenation of class templates.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperTemplate {
    templates: Vec<ClassTemplate>,
}

impl SuperTemplate {
    /// Keeps the input order; labels must be unique.
    pub fn new(templates: Vec<ClassTemplate>) -> Result<Self> {
        if templates.is_empty() {
            return Err(Error::InvalidInput("no templates".into()));
        }
        let mut seen = BTreeSet::new();
        for t in &templates {
            if !seen.insert(t.label()) {
                return Err(Error::InvalidInput(format!("duplicate label {}", t.label())));
            }
        }
        let dim = templates[0].dim();
        for t in &templates {
            if t.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: t.dim(),
                });
            }
        }
        Ok(SuperTemplate { templates })
    }

    pub fn templates(&self) -> &[ClassTemplate] {
        &self.templates
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    /// Sum of template lengths (the height of the one-pass grid).
    pub fn total_len(&self) -> usize {
        self.templates.iter().map(|t| t.len()).sum()
    }

    pub fn dim(&self) -> usize {
        self.templates[0].dim()
    }

    pub fn by_label(&self, label: u32) -> Option<&ClassTemplate> {
        self.templates.iter().find(|t| t.label() == label)
    }

    pub fn non_null(&self) -> impl Iterator<Item = &ClassTemplate> {
        self.templates.iter().filter(|t| !t.is_null())
    }
}

pub fn build_super_template(templates: Vec<ClassTemplate>) -> Result<SuperTemplate> {
    SuperTemplate::new(templates)
}

/// End-to-end training: one class template per label (ascending order), plus
/// a null template when background frames exist. Labels in `pattern_labels`
/// are marked as motion-pattern templates.
pub fn train_model(
    examples_by_class: &std::collections::BTreeMap<u32, Vec<TimeSeries>>,
    background: &[FrameVector],
    null_max_frames: usize,
    pattern_labels: &[u32],
) -> Result<SuperTemplate> {
    if examples_by_class.is_empty() {
        return Err(Error::InvalidInput("no training classes".into()));
    }
    if examples_by_class.contains_key(&0) {
        return Err(Error::InvalidInput(
            "label 0 is reserved for the null class".into(),
        ));
    }
    let mut templates = Vec::with_capacity(examples_by_class.len() + 1);
    for (&label, examples) in examples_by_class {
        if examples.is_empty() {
            return Err(Error::InvalidInput(format!("class {label} has no examples")));
        }
        let mut template = build_class_template(label, examples)?;
        template.set_pattern(pattern_labels.contains(&label));
        templates.push(template);
    }
    if !background.is_empty() {
        templates.push(build_null_template(background, null_max_frames)?);
    }
    SuperTemplate::new(templates)
}

#[derive(Serialize, Deserialize)]
struct TemplateFile {
    label: u32,
    is_pattern: bool,
    is_null: bool,
    t_min: usize,
    t_max: usize,
    metaframes: Vec<Vec<Vec<f64>>>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    #[serde(default)]
    format_version: Option<u32>,
    order: Vec<u32>,
    templates: Vec<TemplateFile>,
}

pub fn write_model(model: &SuperTemplate, path: &Path) -> Result<()> {
    let file = ModelFile {
        format_version: Some(FORMAT_VERSION),
        order: model.templates().iter().map(|t| t.label()).collect(),
        templates: model
            .templates()
            .iter()
            .map(|t| TemplateFile {
                label: t.label(),
                is_pattern: t.is_pattern(),
                is_null: t.is_null(),
                t_min: t.t_min(),
                t_max: t.t_max(),
                metaframes: t
                    .metaframes()
                    .iter()
                    .map(|m| m.frames().iter().map(|f| f.values().to_vec()).collect())
                    .collect(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string(&file).expect("serializable");
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

pub fn read_model(path: &Path) -> Result<SuperTemplate> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ModelFile = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut templates = Vec::with_capacity(file.templates.len());
    for t in file.templates {
        let mut metaframes = Vec::with_capacity(t.metaframes.len());
        for rows in t.metaframes {
            let mut frames = Vec::with_capacity(rows.len());
            for row in rows {
                frames.push(FrameVector::from_raw(row)?.0);
            }
            // Provenance is not persisted in the store format.
            let n = frames.len();
            metaframes.push(Metaframe::new(frames, vec![(0, 0); n])?);
        }
        templates.push(ClassTemplate::new(
            t.label,
            metaframes,
            t.t_min,
            t.t_max,
            t.is_pattern,
            t.is_null,
        )?);
    }
    // Honor the persisted order field.
    let mut ordered = Vec::with_capacity(templates.len());
    for label in &file.order {
        let pos = templates
            .iter()
            .position(|t| t.label() == *label)
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "{}: order lists label {label} with no template",
                    path.display()
                ))
            })?;
        ordered.push(templates.remove(pos));
    }
    if !templates.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{}: {} template(s) missing from order",
            path.display(),
            templates.len()
        )));
    }
    SuperTemplate::new(ordered)
}
