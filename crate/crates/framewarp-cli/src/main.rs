//! Single executable exposing the pipeline: build-dict, featurize, train,
//! recognize, segment, eval, synth and bench. Flags take precedence over the
//! optional JSON config file, which takes precedence over defaults. Exit
//! codes: 0 success, 1 usage error, 2 data error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use framewarp::io::{self, SeriesFormat};
use framewarp::{
    frame_accuracy, generate_corpus, op_dfw_segment, tp_dfw_segment, DistanceConfig, Error,
    FrameVector, OnePassOptions, SynthConfig, TimeSeries, WindowMode,
};

#[derive(Parser, Debug)]
#[command(name = "framewarp", version, about = "Template-based recognition and segmentation of vector time series")]
struct Cli {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for grid evaluations (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Log filter on standard error (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,

    /// Echo the effective configuration to standard error.
    #[arg(long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct DistanceArgs {
    /// Residual threshold of the sparse solver.
    #[arg(long)]
    gamma: Option<f64>,

    /// Sparse support cap.
    #[arg(long)]
    max_support: Option<usize>,

    /// Symmetric metaframe pooling window (odd).
    #[arg(long = "w-meta")]
    w_meta: Option<usize>,

    /// Subsample metaframes larger than this before coding.
    #[arg(long)]
    null_max_frames: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
struct WindowArgs {
    /// Minimum keypoints per adaptive window.
    #[arg(long = "Q")]
    q: Option<usize>,

    /// Maximum half-width of the adaptive window (defaults to the video
    /// length).
    #[arg(long)]
    cap: Option<usize>,

    /// Fixed symmetric window of W frames instead of the adaptive window.
    #[arg(long = "fixed-window", conflicts_with = "q")]
    fixed_window: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Learn a K-word dictionary (with IDF weights) from keypoint streams.
    BuildDict {
        /// Keypoint stream files (JSON lines).
        #[arg(long, num_args = 1.., required = true)]
        streams: Vec<PathBuf>,

        /// Dictionary size.
        #[arg(long = "K")]
        k: Option<usize>,

        #[command(flatten)]
        window: WindowArgs,

        #[arg(long)]
        out: PathBuf,
    },

    /// Convert a keypoint stream into a per-frame bag-of-words series.
    Featurize {
        #[arg(long)]
        stream: PathBuf,

        #[arg(long)]
        dict: PathBuf,

        #[command(flatten)]
        window: WindowArgs,

        /// Apply the dictionary's IDF weights.
        #[arg(long, overrides_with = "no_idf")]
        idf: bool,

        #[arg(long = "no-idf")]
        no_idf: bool,

        /// Output series path (.csv or .json); stdout JSON when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Learn class templates from annotated sequences or per-class example
    /// directories.
    Train {
        /// Annotation CSV (series_path,begin,end,label); frames not covered
        /// by any annotation become null-class background.
        #[arg(long, conflicts_with = "examples")]
        annotations: Option<PathBuf>,

        /// Directory with one subdirectory per label (integer names; 0 holds
        /// background series).
        #[arg(long)]
        examples: Option<PathBuf>,

        /// Labels trained as motion-pattern templates (comma separated).
        #[arg(long, value_delimiter = ',')]
        pattern_labels: Vec<u32>,

        #[command(flatten)]
        dist: DistanceArgs,

        #[arg(long)]
        out: PathBuf,
    },

    /// Isolated recognition of a single-action series.
    Recognize {
        #[arg(long)]
        model: PathBuf,

        #[arg(long)]
        input: PathBuf,

        #[command(flatten)]
        dist: DistanceArgs,

        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Continuous recognition: label every frame of a series.
    Segment {
        #[arg(long, value_enum)]
        mode: SegmentMode,

        #[arg(long)]
        model: PathBuf,

        #[arg(long)]
        input: PathBuf,

        /// Minimum segment gap for two-pass mode (segments span at least
        /// t_min + 1 frames).
        #[arg(long = "t-min")]
        t_min: Option<usize>,

        /// Disable the per-class duration gates of one-pass mode.
        #[arg(long = "no-length-constraints")]
        no_length_constraints: bool,

        /// Pattern-to-action alias map (JSON object).
        #[arg(long)]
        alias: Option<PathBuf>,

        /// Dump the accumulated-cost grid (row-major f32 little-endian, with
        /// a JSON sidecar describing dimensions) for visualization.
        #[arg(long = "dump-grid")]
        dump_grid: Option<PathBuf>,

        #[command(flatten)]
        dist: DistanceArgs,

        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Compare a predicted segmentation against ground truth.
    Eval {
        /// Predicted segmentation JSON.
        #[arg(long)]
        pred: PathBuf,

        /// Ground truth: per-frame label CSV or segmentation JSON.
        #[arg(long)]
        gt: PathBuf,

        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Generate a deterministic synthetic corpus (reads the synthesis
    /// parameters from --config).
    Synth {
        #[arg(long)]
        out: PathBuf,

        /// What to write per sequence.
        #[arg(long, value_enum, default_value = "features")]
        emit: EmitMode,
    },

    /// Runtime scaling of the one-pass recognizer over series lengths.
    Bench {
        #[arg(long)]
        model: PathBuf,

        /// Comma-separated increasing test lengths.
        #[arg(long, value_delimiter = ',', required = true)]
        lengths: Vec<usize>,

        #[arg(long = "t-min")]
        t_min: Option<usize>,

        /// Timed runs per length (median reported).
        #[arg(long, default_value = "3")]
        repeats: usize,

        #[command(flatten)]
        dist: DistanceArgs,

        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SegmentMode {
    OnePass,
    TwoPass,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum EmitMode {
    Features,
    Keypoints,
    Both,
}

/// Values an optional JSON config file may provide; flags win over these.
/// Unknown fields are ignored so the same --config can carry synthesis
/// parameters.
#[derive(Debug, Clone, Default, Deserialize)]
struct FileConfig {
    gamma: Option<f64>,
    max_support: Option<usize>,
    w_meta: Option<usize>,
    null_max_frames: Option<usize>,
    q: Option<usize>,
    cap: Option<usize>,
    fixed_window: Option<usize>,
    idf: Option<bool>,
    t_min: Option<usize>,
    k: Option<usize>,
    seed: Option<u64>,
    threads: Option<usize>,
}

#[derive(Debug)]
struct Effective {
    dist: DistanceConfig,
    window_q: usize,
    window_cap: Option<usize>,
    fixed_window: Option<usize>,
    idf: bool,
    t_min: usize,
    k: usize,
    seed: u64,
}

impl Effective {
    fn window_mode(&self, video_length: usize) -> WindowMode {
        match self.fixed_window {
            Some(w) => WindowMode::Fixed { w },
            None => WindowMode::Adaptive {
                q: self.window_q,
                cap: self.window_cap.unwrap_or(video_length).max(1),
            },
        }
    }
}

fn load_file_config(cli: &Cli) -> Result<FileConfig, Error> {
    match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Io { path: path.clone(), source: e })?;
            serde_json::from_str(&text).map_err(|e| Error::Json { path: path.clone(), source: e })
        }
        None => Ok(FileConfig::default()),
    }
}

fn merge_config(
    cli: &Cli,
    file: &FileConfig,
    dist: &DistanceArgs,
    window: &WindowArgs,
    idf_flags: Option<(bool, bool)>,
    t_min: Option<usize>,
    k: Option<usize>,
) -> Result<Effective, Error> {
    let defaults = DistanceConfig::default();
    let idf = match idf_flags {
        Some((_, true)) => false,
        Some((true, _)) => true,
        _ => file.idf.unwrap_or(true),
    };
    Ok(Effective {
        dist: DistanceConfig {
            gamma: dist.gamma.or(file.gamma).unwrap_or(defaults.gamma),
            max_support: dist
                .max_support
                .or(file.max_support)
                .unwrap_or(defaults.max_support),
            w_meta: dist.w_meta.or(file.w_meta).unwrap_or(defaults.w_meta),
            null_max_frames: dist
                .null_max_frames
                .or(file.null_max_frames)
                .unwrap_or(defaults.null_max_frames),
        },
        window_q: window.q.or(file.q).unwrap_or(1),
        window_cap: window.cap.or(file.cap),
        fixed_window: window.fixed_window.or(file.fixed_window),
        idf,
        t_min: t_min.or(file.t_min).unwrap_or(2),
        k: k.or(file.k).unwrap_or(0),
        seed: cli.seed.or(file.seed).unwrap_or(0),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are not usage errors.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0u8,
                _ => 1u8,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .format_timestamp(None)
        .init();

    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(2)
        }
    }
}

/// Writes JSON bytes to the path atomically, or to stdout when absent.
fn emit_json(out: Option<&Path>, mut text: String) -> Result<(), Error> {
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match out {
        Some(path) => io::write_atomic(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn setup_threads(threads: Option<usize>) {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            log::debug!("thread pool already initialized: {e}");
        }
    }
    #[cfg(not(feature = "parallel"))]
    if threads.is_some() {
        log::warn!("--threads ignored: built without the parallel feature");
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    let file_cfg = load_file_config(cli)?;
    setup_threads(cli.threads.or(file_cfg.threads));
    match &cli.command {
        Command::BuildDict { streams, k, window, out } => {
            let eff = merge_config(cli, &file_cfg, &DistanceArgs::default(), window, None, None, *k)?;
            if eff.k < 2 {
                return Err(Error::InvalidInput("--K must be provided and >= 2".into()));
            }
            if cli.verbose {
                eprintln!("effective config: {eff:?}");
            }
            let mut loaded = Vec::with_capacity(streams.len());
            for path in streams {
                loaded.push(io::read_keypoint_stream(path)?);
            }
            let mut dict = framewarp::build_dictionary(&loaded, eff.k, eff.seed)?;
            // IDF statistics over all training frames with the same window.
            let mut histograms = Vec::new();
            for stream in &loaded {
                let mode = eff.window_mode(stream.video_length());
                histograms.extend(framewarp::features::raw_histograms(stream, &dict, mode)?);
            }
            let idf = framewarp::compute_idf(&histograms, dict.len())?;
            dict.set_idf(idf)?;
            io::write_dictionary(&dict, out)?;
            log::info!("wrote dictionary with K={} to {}", dict.len(), out.display());
            Ok(())
        }

        Command::Featurize { stream, dict, window, idf, no_idf, out } => {
            let eff = merge_config(
                cli,
                &file_cfg,
                &DistanceArgs::default(),
                window,
                Some((*idf, *no_idf)),
                None,
                None,
            )?;
            if cli.verbose {
                eprintln!("effective config: {eff:?}");
            }
            let stream = io::read_keypoint_stream(stream)?;
            let dict = io::read_dictionary(dict)?;
            let mode = eff.window_mode(stream.video_length());
            let series = framewarp::featurize(&stream, &dict, mode, eff.idf)?;
            match out {
                Some(path) => {
                    io::write_time_series(&series, path, SeriesFormat::from_path(path))
                }
                None => {
                    let bytes = io::time_series_to_bytes(&series, SeriesFormat::Json);
                    print!("{}", String::from_utf8_lossy(&bytes));
                    Ok(())
                }
            }
        }

        Command::Train { annotations, examples, pattern_labels, dist, out } => {
            let eff = merge_config(cli, &file_cfg, dist, &WindowArgs::default(), None, None, None)?;
            if cli.verbose {
                eprintln!("effective config: {eff:?}");
            }
            let (by_class, background) = match (annotations, examples) {
                (Some(ann), None) => load_annotated(ann)?,
                (None, Some(dir)) => load_example_dirs(dir)?,
                _ => {
                    return Err(Error::InvalidInput(
                        "provide exactly one of --annotations or --examples".into(),
                    ))
                }
            };
            let model = framewarp::train_model(
                &by_class,
                &background,
                eff.dist.null_max_frames,
                pattern_labels,
            )?;
            framewarp::write_model(&model, out)?;
            log::info!(
                "trained {} template(s), total length {}",
                model.len(),
                model.total_len()
            );
            Ok(())
        }

        Command::Recognize { model, input, dist, out } => {
            let eff = merge_config(cli, &file_cfg, dist, &WindowArgs::default(), None, None, None)?;
            if cli.verbose {
                eprintln!("effective config: {eff:?}");
            }
            let model = framewarp::read_model(model)?;
            let series = io::read_time_series(input, SeriesFormat::from_path(input))?;
            let (label, scores) = framewarp::classify_isolated(&series, &model, &eff.dist)?;
            #[derive(Serialize)]
            struct ScoreRow {
                label: u32,
                score: f64,
            }
            #[derive(Serialize)]
            struct Output {
                format_version: u32,
                label: u32,
                scores: Vec<ScoreRow>,
            }
            let text = serde_json::to_string(&Output {
                format_version: io::FORMAT_VERSION,
                label,
                scores: scores
                    .into_iter()
                    .map(|(label, score)| ScoreRow { label, score })
                    .collect(),
            })
            .expect("serializable");
            emit_json(out.as_deref(), text)
        }

        Command::Segment {
            mode,
            model,
            input,
            t_min,
            no_length_constraints,
            alias,
            dump_grid,
            dist,
            out,
        } => {
            let eff = merge_config(cli, &file_cfg, dist, &WindowArgs::default(), None, *t_min, None)?;
            if cli.verbose {
                eprintln!("effective config: {eff:?}");
            }
            let model = framewarp::read_model(model)?;
            let series = io::read_time_series(input, SeriesFormat::from_path(input))?;
            let segmentation = match mode {
                SegmentMode::OnePass => {
                    let opts = OnePassOptions {
                        enforce_lengths: !no_length_constraints,
                        keep_grid: dump_grid.is_some(),
                    };
                    let res = op_dfw_segment(&series, &model, &eff.dist, opts)?;
                    log::info!(
                        "one-pass score {:.6}, {} segment(s){}",
                        res.score,
                        res.segmentation.segments().len(),
                        if res.lengths_relaxed { " (length constraints relaxed)" } else { "" }
                    );
                    if let (Some(path), Some(grid)) = (dump_grid, &res.grid) {
                        write_grid_dump(path, grid)?;
                    }
                    res.segmentation
                }
                SegmentMode::TwoPass => {
                    if dump_grid.is_some() {
                        return Err(Error::InvalidInput(
                            "--dump-grid applies to one-pass mode only".into(),
                        ));
                    }
                    let res = tp_dfw_segment(&series, &model, eff.t_min, &eff.dist)?;
                    log::info!(
                        "two-pass score {:.6}, {} segment(s)",
                        res.score,
                        res.segmentation.segments().len()
                    );
                    res.segmentation
                }
            };
            let segmentation = match alias {
                Some(path) => {
                    let map = io::read_alias_map(path)?;
                    framewarp::alias_segmentation(&segmentation, &map)?
                }
                None => segmentation,
            };
            let text = String::from_utf8(io::segmentation_to_json(&segmentation)?)
                .expect("valid utf-8");
            emit_json(out.as_deref(), text)
        }

        Command::Eval { pred, gt, out } => {
            let pred_seg = io::read_segmentation(pred)?;
            let gt_track = match gt.extension().and_then(|e| e.to_str()) {
                Some("json") => io::read_segmentation(gt)?.to_labels(),
                _ => io::read_label_track(gt)?,
            };
            let report = frame_accuracy(&pred_seg.to_labels(), &gt_track)?;
            let text = serde_json::to_string(&report).expect("serializable");
            emit_json(out.as_deref(), text)
        }

        Command::Synth { out, emit } => {
            let corpus_config = cli.config.as_ref().ok_or_else(|| {
                Error::InvalidInput("synth requires --config with the synthesis parameters".into())
            })?;
            let text = std::fs::read_to_string(corpus_config).map_err(|e| Error::Io {
                path: corpus_config.clone(),
                source: e,
            })?;
            let mut config: SynthConfig =
                serde_json::from_str(&text).map_err(|e| Error::Json {
                    path: corpus_config.clone(),
                    source: e,
                })?;
            if let Some(seed) = cli.seed {
                config.seed = seed;
            }
            if cli.verbose {
                eprintln!("effective config: {config:?}");
            }
            let emit_keypoints = matches!(emit, EmitMode::Keypoints | EmitMode::Both);
            let emit_features = matches!(emit, EmitMode::Features | EmitMode::Both);
            let corpus = generate_corpus(&config, emit_keypoints)?;
            write_corpus(&corpus, out, emit_features, emit_keypoints)
        }

        Command::Bench { model, lengths, t_min, repeats, dist, out } => {
            let eff = merge_config(cli, &file_cfg, dist, &WindowArgs::default(), None, *t_min, None)?;
            if cli.verbose {
                eprintln!("effective config: {eff:?}");
            }
            let model = framewarp::read_model(model)?;
            let (rows, fit) = framewarp::benchmark_scaling(
                &model,
                &eff.dist,
                lengths,
                eff.t_min,
                eff.seed,
                *repeats,
            )?;
            #[derive(Serialize)]
            struct Output {
                format_version: u32,
                t_min: usize,
                rows: Vec<framewarp::ScalingRow>,
                wall_time_fit: framewarp::LinearFit,
            }
            let text = serde_json::to_string(&Output {
                format_version: io::FORMAT_VERSION,
                t_min: eff.t_min,
                rows,
                wall_time_fit: fit,
            })
            .expect("serializable");
            emit_json(out.as_deref(), text)
        }
    }
}

/// Loads annotated training sequences: per-class example cuts plus the
/// uncovered frames as null-class background. Relative series paths resolve
/// against the annotation file's directory.
fn load_annotated(
    ann_path: &Path,
) -> Result<(BTreeMap<u32, Vec<TimeSeries>>, Vec<FrameVector>), Error> {
    let rows = io::read_annotations(ann_path)?;
    if rows.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{}: no annotations",
            ann_path.display()
        )));
    }
    let base = ann_path.parent().unwrap_or(Path::new(""));
    let mut by_series: BTreeMap<PathBuf, Vec<&io::Annotation>> = BTreeMap::new();
    for row in &rows {
        let path = if row.series_path.is_absolute() {
            row.series_path.clone()
        } else {
            base.join(&row.series_path)
        };
        by_series.entry(path).or_default().push(row);
    }
    let mut by_class: BTreeMap<u32, Vec<TimeSeries>> = BTreeMap::new();
    let mut background = Vec::new();
    for (path, rows) in by_series {
        let series = io::read_time_series(&path, SeriesFormat::from_path(&path))?;
        let segments: Vec<framewarp::Segment> = rows
            .iter()
            .map(|r| framewarp::Segment { begin: r.begin, end: r.end, label: r.label })
            .collect();
        let (cut, bg) = framewarp::cut_examples(&series, &segments)?;
        for (label, examples) in cut {
            by_class.entry(label).or_default().extend(examples);
        }
        background.extend(bg);
    }
    Ok((by_class, background))
}

/// Loads per-class example directories: integer-named subdirectories, one
/// series file per example; label 0 pools background frames.
fn load_example_dirs(
    dir: &Path,
) -> Result<(BTreeMap<u32, Vec<TimeSeries>>, Vec<FrameVector>), Error> {
    let mut by_class: BTreeMap<u32, Vec<TimeSeries>> = BTreeMap::new();
    let mut background = Vec::new();
    let mut subdirs: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::Io { path: dir.to_path_buf(), source: e })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    if subdirs.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{}: no per-class subdirectories",
            dir.display()
        )));
    }
    for sub in subdirs {
        let name = sub.file_name().unwrap_or_default().to_string_lossy().to_string();
        let label: u32 = name.parse().map_err(|_| {
            Error::InvalidInput(format!("subdirectory {name:?} is not an integer label"))
        })?;
        let mut files: Vec<PathBuf> = std::fs::read_dir(&sub)
            .map_err(|e| Error::Io { path: sub.clone(), source: e })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                matches!(
                    p.extension().and_then(|e| e.to_str()),
                    Some("csv") | Some("json")
                )
            })
            .collect();
        files.sort();
        for file in files {
            let series = io::read_time_series(&file, SeriesFormat::from_path(&file))?;
            if label == 0 {
                background.extend(series.frames().iter().cloned());
            } else {
                by_class.entry(label).or_default().push(series);
            }
        }
    }
    Ok((by_class, background))
}

fn write_grid_dump(path: &Path, grid: &framewarp::onepass::GridDump) -> Result<(), Error> {
    let mut bytes = Vec::with_capacity(grid.cost.len() * 4);
    for v in &grid.cost {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    io::write_atomic(path, &bytes)?;
    #[derive(Serialize)]
    struct Span {
        label: u32,
        length: usize,
        offset: usize,
    }
    #[derive(Serialize)]
    struct Sidecar {
        format_version: u32,
        rows: usize,
        cols: usize,
        dtype: &'static str,
        templates: Vec<Span>,
    }
    let sidecar = Sidecar {
        format_version: io::FORMAT_VERSION,
        rows: grid.rows,
        cols: grid.cols,
        dtype: "f32-le",
        templates: grid
            .spans
            .iter()
            .map(|&(label, length, offset)| Span { label, length, offset })
            .collect(),
    };
    let mut text = serde_json::to_string(&sidecar).expect("serializable");
    text.push('\n');
    let sidecar_path = PathBuf::from(format!("{}.json", path.display()));
    io::write_atomic(&sidecar_path, text.as_bytes())
}

fn write_corpus(
    corpus: &framewarp::SynthCorpus,
    out: &Path,
    emit_features: bool,
    emit_keypoints: bool,
) -> Result<(), Error> {
    std::fs::create_dir_all(out).map_err(|e| Error::Io { path: out.to_path_buf(), source: e })?;
    let mut annotation_rows = Vec::new();
    #[derive(Serialize)]
    struct ManifestRow {
        index: usize,
        actor: usize,
        n_frames: usize,
        series: Option<String>,
        stream: Option<String>,
        labels: String,
        ground_truth: String,
    }
    let mut manifest_rows = Vec::new();
    for (i, seq) in corpus.sequences.iter().enumerate() {
        let series_name = format!("series_{i:03}.csv");
        let stream_name = format!("stream_{i:03}.jsonl");
        let labels_name = format!("labels_{i:03}.csv");
        let gt_name = format!("gt_{i:03}.json");
        if emit_features {
            io::write_time_series(&seq.series, &out.join(&series_name), SeriesFormat::Csv)?;
        }
        if emit_keypoints {
            let stream = seq.stream.as_ref().ok_or_else(|| {
                Error::InvalidInput("corpus generated without keypoints".into())
            })?;
            io::write_keypoint_stream(stream, &out.join(&stream_name))?;
        }
        io::write_label_track(&seq.labels, &out.join(&labels_name))?;
        io::write_segmentation(&seq.ground_truth, &out.join(&gt_name))?;
        for ann in &seq.annotations {
            annotation_rows.push(io::Annotation {
                series_path: PathBuf::from(&series_name),
                begin: ann.begin,
                end: ann.end,
                label: ann.label,
            });
        }
        manifest_rows.push(ManifestRow {
            index: i,
            actor: seq.actor,
            n_frames: seq.series.len(),
            series: emit_features.then(|| series_name.clone()),
            stream: emit_keypoints.then(|| stream_name.clone()),
            labels: labels_name,
            ground_truth: gt_name,
        });
    }
    io::write_annotations(&annotation_rows, &out.join("annotations.csv"))?;
    #[derive(Serialize)]
    struct Manifest {
        format_version: u32,
        dim: usize,
        sequences: Vec<ManifestRow>,
    }
    let mut text = serde_json::to_string(&Manifest {
        format_version: io::FORMAT_VERSION,
        dim: corpus.dim,
        sequences: manifest_rows,
    })
    .expect("serializable");
    text.push('\n');
    io::write_atomic(&out.join("corpus.json"), text.as_bytes())?;
    log::info!("wrote {} sequence(s) to {}", corpus.sequences.len(), out.display());
    Ok(())
}
