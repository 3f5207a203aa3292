//! File formats: time series (CSV and JSON), segmentations, label tracks,
//! keypoint streams, dictionaries, annotation files and alias maps.
//!
//! Writes go through a temp file in the target directory followed by a
//! rename, so readers never observe partial output. Floats are written with
//! Rust's shortest round-trip formatting, which makes read(write(x)) == x
//! bit-exact.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Dictionary, Keypoint, KeypointStream};
use crate::types::{
    FrameVector, LabelTrack, Segment, Segmentation, TimeSeries, NORM_WARN_TOLERANCE,
};

pub const FORMAT_VERSION: u32 = 1;

/// Writes `bytes` atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp: PathBuf = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp",
            path.file_name().unwrap_or_default().to_string_lossy()
        )),
        None => PathBuf::from(format!(
            ".{}.tmp",
            path.file_name().unwrap_or_default().to_string_lossy()
        )),
    };
    let mut file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    file.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    file.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesFormat {
    Json,
    Csv,
}

impl SeriesFormat {
    /// Picks a format from the file extension; defaults to JSON.
    pub fn from_path(path: &Path) -> SeriesFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => SeriesFormat::Csv,
            _ => SeriesFormat::Json,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SeriesFile {
    #[serde(default)]
    format_version: Option<u32>,
    dim: usize,
    frames: Vec<Vec<f64>>,
}

/// Reads a time series, renormalizing frames to unit norm (all-zero frames
/// stay zero and are flagged empty). Logs a warning if any input norm
/// deviates from 1 by more than 1e-3.
pub fn read_time_series(path: &Path, format: SeriesFormat) -> Result<TimeSeries> {
    let rows: Vec<Vec<f64>> = match format {
        SeriesFormat::Csv => read_csv_rows(path)?,
        SeriesFormat::Json => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let file: SeriesFile = serde_json::from_str(&text).map_err(|e| Error::Json {
                path: path.to_path_buf(),
                source: e,
            })?;
            for (i, row) in file.frames.iter().enumerate() {
                if row.len() != file.dim {
                    return Err(Error::parse(
                        path,
                        i + 1,
                        format!("frame has dimension {}, header says {}", row.len(), file.dim),
                    ));
                }
            }
            file.frames
        }
    };
    build_series(path, rows)
}

fn read_csv_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Result<Vec<f64>> = line
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::parse(path, idx + 1, format!("bad number {tok:?}: {e}")))
            })
            .collect();
        rows.push(row?);
    }
    Ok(rows)
}

fn build_series(path: &Path, rows: Vec<Vec<f64>>) -> Result<TimeSeries> {
    if rows.is_empty() {
        return Err(Error::parse(path, 0, "no frames"));
    }
    let dim = rows[0].len();
    let mut frames = Vec::with_capacity(rows.len());
    let mut denormalized = 0usize;
    let mut worst = 0.0f64;
    for (i, row) in rows.into_iter().enumerate() {
        if row.len() != dim {
            return Err(Error::parse(
                path,
                i + 1,
                format!("row has {} values, expected {}", row.len(), dim),
            ));
        }
        let (frame, norm) =
            FrameVector::from_raw(row).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        if norm > 0.0 && (norm - 1.0).abs() > NORM_WARN_TOLERANCE {
            denormalized += 1;
            worst = worst.max((norm - 1.0).abs());
        }
        frames.push(frame);
    }
    if denormalized > 0 {
        log::warn!(
            "{}: renormalized {denormalized} frame(s); worst norm deviation {worst:.3e}",
            path.display()
        );
    }
    TimeSeries::new(frames)
}

/// Canonical bytes of a series in the given format.
pub fn time_series_to_bytes(series: &TimeSeries, format: SeriesFormat) -> Vec<u8> {
    match format {
        SeriesFormat::Csv => {
            let mut out = String::new();
            for frame in series.frames() {
                let row: Vec<String> = frame.values().iter().map(|v| format!("{v}")).collect();
                out.push_str(&row.join(","));
                out.push('\n');
            }
            out.into_bytes()
        }
        SeriesFormat::Json => {
            let file = SeriesFile {
                format_version: Some(FORMAT_VERSION),
                dim: series.dim(),
                frames: series
                    .frames()
                    .iter()
                    .map(|f| f.values().to_vec())
                    .collect(),
            };
            let mut s = serde_json::to_string(&file).expect("serializable");
            s.push('\n');
            s.into_bytes()
        }
    }
}

pub fn write_time_series(series: &TimeSeries, path: &Path, format: SeriesFormat) -> Result<()> {
    write_atomic(path, &time_series_to_bytes(series, format))
}

#[derive(Serialize, Deserialize)]
struct SegmentationFile {
    #[serde(default)]
    format_version: Option<u32>,
    segments: Vec<Segment>,
    frame_labels: Vec<u32>,
}

pub fn write_segmentation(seg: &Segmentation, path: &Path) -> Result<()> {
    let bytes = segmentation_to_json(seg)?;
    write_atomic(path, &bytes)
}

/// Renders a segmentation to its canonical JSON bytes (segments plus the
/// expanded per-frame label array).
pub fn segmentation_to_json(seg: &Segmentation) -> Result<Vec<u8>> {
    let file = SegmentationFile {
        format_version: Some(FORMAT_VERSION),
        segments: seg.segments().to_vec(),
        frame_labels: seg.to_labels().labels().to_vec(),
    };
    let mut s = serde_json::to_string(&file).expect("serializable");
    s.push('\n');
    Ok(s.into_bytes())
}

pub fn read_segmentation(path: &Path) -> Result<Segmentation> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: SegmentationFile = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    let seg = Segmentation::new(file.segments)?;
    if !file.frame_labels.is_empty() && seg.to_labels().labels() != file.frame_labels.as_slice() {
        return Err(Error::InvalidSegmentation(format!(
            "{}: frame_labels disagree with segments",
            path.display()
        )));
    }
    Ok(seg)
}

/// Reads a per-frame label track: one integer per line.
pub fn read_label_track(path: &Path) -> Result<LabelTrack> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut labels = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let tok = line.trim();
        if tok.is_empty() {
            continue;
        }
        labels.push(
            tok.parse::<u32>()
                .map_err(|e| Error::parse(path, idx + 1, format!("bad label {tok:?}: {e}")))?,
        );
    }
    if labels.is_empty() {
        return Err(Error::parse(path, 0, "no labels"));
    }
    Ok(LabelTrack::new(labels))
}

pub fn write_label_track(track: &LabelTrack, path: &Path) -> Result<()> {
    let mut out = String::new();
    for l in track.labels() {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

#[derive(Serialize, Deserialize)]
struct StreamHeader {
    video_length: usize,
    dim: usize,
}

#[derive(Serialize, Deserialize)]
struct StreamPoint {
    t: usize,
    desc: Vec<f64>,
}

/// Reads a keypoint stream from JSON-lines: a header object followed by one
/// object per keypoint.
pub fn read_keypoint_stream(path: &Path) -> Result<KeypointStream> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let header: StreamHeader = loop {
        match lines.next() {
            Some((idx, line)) => {
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                break serde_json::from_str(&line)
                    .map_err(|e| Error::parse(path, idx + 1, format!("bad header: {e}")))?;
            }
            None => return Err(Error::parse(path, 0, "missing header line")),
        }
    };
    let mut points = Vec::new();
    for (idx, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let p: StreamPoint = serde_json::from_str(&line)
            .map_err(|e| Error::parse(path, idx + 1, format!("bad keypoint: {e}")))?;
        if p.desc.len() != header.dim {
            return Err(Error::parse(
                path,
                idx + 1,
                format!("descriptor has dimension {}, header says {}", p.desc.len(), header.dim),
            ));
        }
        if p.t < 1 || p.t > header.video_length {
            return Err(Error::parse(
                path,
                idx + 1,
                format!("frame index {} outside [1, {}]", p.t, header.video_length),
            ));
        }
        points.push(Keypoint {
            frame: p.t,
            descriptor: p.desc,
        });
    }
    KeypointStream::new(header.video_length, header.dim, points)
}

pub fn write_keypoint_stream(stream: &KeypointStream, path: &Path) -> Result<()> {
    let mut out = String::new();
    let header = StreamHeader {
        video_length: stream.video_length(),
        dim: stream.dim(),
    };
    out.push_str(&serde_json::to_string(&header).expect("serializable"));
    out.push('\n');
    for p in stream.points() {
        let point = StreamPoint {
            t: p.frame,
            desc: p.descriptor.clone(),
        };
        out.push_str(&serde_json::to_string(&point).expect("serializable"));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

#[derive(Serialize, Deserialize)]
struct DictionaryFile {
    #[serde(default)]
    format_version: Option<u32>,
    #[serde(rename = "K")]
    k: usize,
    dim: usize,
    words: Vec<Vec<f64>>,
    idf: Vec<f64>,
}

pub fn write_dictionary(dict: &Dictionary, path: &Path) -> Result<()> {
    let file = DictionaryFile {
        format_version: Some(FORMAT_VERSION),
        k: dict.len(),
        dim: dict.dim(),
        words: dict.words().to_vec(),
        idf: dict.idf().to_vec(),
    };
    let mut s = serde_json::to_string(&file).expect("serializable");
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

pub fn read_dictionary(path: &Path) -> Result<Dictionary> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: DictionaryFile = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    if file.words.len() != file.k || file.idf.len() != file.k {
        return Err(Error::InvalidInput(format!(
            "{}: K={} but {} words / {} idf entries",
            path.display(),
            file.k,
            file.words.len(),
            file.idf.len()
        )));
    }
    let mut dict = Dictionary::new(file.words)?;
    dict.set_idf(file.idf)?;
    Ok(dict)
}

/// One row of an annotation file: a labeled span of a series file.
#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub series_path: PathBuf,
    pub begin: usize,
    pub end: usize,
    pub label: u32,
}

/// Reads an annotation CSV with rows `series_path,begin,end,label`
/// (1-based inclusive). A header row and `#` comments are skipped.
pub fn read_annotations(path: &Path) -> Result<Vec<Annotation>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with("series_path") {
            continue;
        }
        let parts: Vec<&str> = trimmed.split(',').map(|p| p.trim()).collect();
        if parts.len() != 4 {
            return Err(Error::parse(
                path,
                idx + 1,
                format!("expected 4 fields, got {}", parts.len()),
            ));
        }
        let begin: usize = parts[1]
            .parse()
            .map_err(|e| Error::parse(path, idx + 1, format!("bad begin: {e}")))?;
        let end: usize = parts[2]
            .parse()
            .map_err(|e| Error::parse(path, idx + 1, format!("bad end: {e}")))?;
        let label: u32 = parts[3]
            .parse()
            .map_err(|e| Error::parse(path, idx + 1, format!("bad label: {e}")))?;
        if begin < 1 || begin > end {
            return Err(Error::parse(path, idx + 1, format!("bad span [{begin}, {end}]")));
        }
        rows.push(Annotation {
            series_path: PathBuf::from(parts[0]),
            begin,
            end,
            label,
        });
    }
    Ok(rows)
}

pub fn write_annotations(rows: &[Annotation], path: &Path) -> Result<()> {
    let mut out = String::from("series_path,begin,end,label\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.series_path.display(),
            r.begin,
            r.end,
            r.label
        ));
    }
    write_atomic(path, out.as_bytes())
}

/// Reads a label alias map from JSON: `{"4": 1, "5": 1}`.
pub fn read_alias_map(path: &Path) -> Result<BTreeMap<u32, u32>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: BTreeMap<String, u32> = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut map = BTreeMap::new();
    for (k, v) in raw {
        let key: u32 = k
            .parse()
            .map_err(|e| Error::InvalidInput(format!("{}: bad alias key {k:?}: {e}", path.display())))?;
        map.insert(key, v);
    }
    Ok(map)
}
