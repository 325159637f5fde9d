//! Code-mixed Universal Dependencies forests.
//!
//! Given a source-language dependency tree, its translation's dependency tree
//! and word-alignment confidences, this crate merges the two trees into a
//! single forest in which confidently aligned words at the same depth share
//! one node, projects relation annotations onto it, computes cross-lingual
//! mismatch statistics and runs a reference graph-attention encoder over the
//! result.

pub mod alignment;
pub mod codemix;
pub mod encoder;
pub mod error;
pub mod export;
pub mod metrics;
pub mod records;
pub mod treebank;

pub use alignment::{align_search, read_alignments, AlignedPair, AlignmentMatrix, Side};
pub use codemix::{
    assemble_codemixed_text, construct_forest, merge_annotations, project_relation,
    CodeMixedForest, ForestNode, ForestRelation, MixedToken, Origin, ProjectionFailure,
    RelationInstance, Span,
};
pub use encoder::{
    biaffine_score, encode, gat_layer, Embedder, EncoderParams, ForestGraph, HashEmbedder,
};
pub use error::{Error, Result};
pub use export::{to_dot, to_graph, DotStyle};
pub use metrics::{merge_report, BiasReport, DistanceReport, MergeReport};
pub use records::{ForestRecord, GraphRecord, ScoreRecord};
pub use treebank::{parse_conllu, serialize_conllu, Token, UdTree};
