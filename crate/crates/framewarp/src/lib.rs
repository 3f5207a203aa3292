//! Template-based alignment, segmentation and recognition of labeled
//! segments in vector time series.
//!
//! The pipeline: bag-of-words featurization of keypoint streams
//! ([`features`]), class templates made of metaframes learned by aligning
//! training examples to a class center ([`templates`]), a sparse
//! frame-to-metaframe distance ([`sparse`], [`distance`]), isolated
//! recognition ([`isolated`]), and two continuous recognizers — a one-pass
//! dynamic program with between-action jumps ([`onepass`]) and a two-pass
//! scheme over all sub-sequences ([`twopass`]). [`synth`] and [`eval`]
//! provide a deterministic corpus generator and metrics.
//!
//! Grid distance evaluations run data-parallel under the default `parallel`
//! feature and fall back to sequential loops without it; results are
//! identical either way.

pub mod distance;
pub mod dtw;
pub mod error;
pub mod eval;
pub mod features;
pub mod io;
pub mod isolated;
pub mod onepass;
mod parallel;
pub mod scaling;
pub mod sparse;
pub mod synth;
pub mod templates;
pub mod twopass;
pub mod types;

pub use distance::{metaframe_distance, pooled_distance, DistanceConfig};
pub use dtw::{dtw_align, frame_distance, transition_penalty, Alignment};
pub use error::{Error, Result};
pub use eval::{boundary_mae, frame_accuracy, EvalReport};
pub use features::{
    adaptive_window, build_dictionary, compute_idf, featurize, Dictionary, Keypoint,
    KeypointStream, WindowMode,
};
pub use isolated::{classify_isolated, dfw_align};
pub use onepass::{
    alias_segmentation, jump_boundaries, op_dfw_segment, op_dfw_stream_labels, OnePassOptions,
    OnePassResult,
};
pub use scaling::{benchmark_scaling, linear_fit, LinearFit, ScalingRow};
pub use sparse::{frame_to_metaframe, sparse_code, SparseCode};
pub use synth::{cut_examples, generate_corpus, SynthConfig, SynthCorpus, SynthSequence};
pub use templates::{
    build_class_template, build_null_template, build_super_template, length_bounds,
    read_model, select_class_center, train_model, write_model, ClassTemplate, Metaframe,
    SuperTemplate,
};
pub use twopass::{
    action_level_pass, sequence_level_pass, subsequence_count, tp_dfw_segment, SubsequenceTables,
    TwoPassResult,
};
pub use types::{
    AlignmentPath, FrameVector, LabelTrack, PathStep, Segment, Segmentation, TimeSeries,
};
