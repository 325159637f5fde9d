//! Corpus diagnostics: cross-lingual UD mismatch rates, subject-object
//! distances and forest merge statistics.
//!
//! Every report is backed by an integer accumulator with a `merge` method, so
//! shards can be summed in any order and produce identical results.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::alignment::{align_search, AlignmentMatrix};
use crate::codemix::{project_relation, CodeMixedForest, RelationInstance, Span};
use crate::error::{Error, Result};
use crate::treebank::{coarse_label, Token, UdTree, ROOT};

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn misaligned_tokens(src: &UdTree, tgt: &UdTree, m: &AlignmentMatrix, theta: f64) -> usize {
    let mut src_hit = vec![false; src.len() + 1];
    let mut tgt_hit = vec![false; tgt.len() + 1];
    for (s, t, score) in m.iter() {
        if score > theta && s <= src.len() && t <= tgt.len() {
            src_hit[s] = true;
            tgt_hit[t] = true;
        }
    }
    src_hit[1..]
        .iter()
        .chain(&tgt_hit[1..])
        .filter(|&&h| !h)
        .count()
}

/// Share of tokens on either side with no alignment entry above `theta`.
pub fn misaligned_word_rate(src: &UdTree, tgt: &UdTree, m: &AlignmentMatrix, theta: f64) -> f64 {
    misaligned_tokens(src, tgt, m, theta) as f64 / (src.len() + tgt.len()) as f64
}

/// Whole-sentence one-to-one alignment: `map[src] = tgt`.
fn sentence_alignment(
    src: &UdTree,
    tgt: &UdTree,
    m: &AlignmentMatrix,
    theta: f64,
) -> Vec<Option<usize>> {
    let src_nodes: Vec<&Token> = src.tokens().iter().collect();
    let tgt_nodes: Vec<&Token> = tgt.tokens().iter().collect();
    let mut map = vec![None; src.len() + 1];
    for pair in align_search(&src_nodes, &tgt_nodes, m, theta).aligned {
        map[pair.src_index] = Some(pair.tgt_index);
    }
    map
}

fn edge_counts(
    src: &UdTree,
    tgt: &UdTree,
    m: &AlignmentMatrix,
    theta: f64,
    coarse_labels: bool,
) -> (usize, usize) {
    let map = sentence_alignment(src, tgt, m, theta);
    let mut edges = 0;
    let mut matched = 0;
    for dep in src.tokens().iter().filter(|t| t.head != ROOT) {
        edges += 1;
        let (Some(a_head), Some(a_dep)) = (map[dep.head], map[dep.index]) else {
            continue;
        };
        let tgt_dep = &tgt.tokens()[a_dep - 1];
        if tgt_dep.head != a_head {
            continue;
        }
        if coarse_labels && coarse_label(&tgt_dep.deprel) != coarse_label(&dep.deprel) {
            continue;
        }
        matched += 1;
    }
    (edges - matched, edges)
}

/// Share of source head→dependent edges (root attachments excluded) whose
/// aligned endpoints do not form the same directed edge on the target side.
/// With `coarse_labels` the coarse labels must agree as well. `None` for a
/// single-token source sentence.
pub fn mismatched_edge_rate(
    src: &UdTree,
    tgt: &UdTree,
    m: &AlignmentMatrix,
    theta: f64,
    coarse_labels: bool,
) -> Option<f64> {
    let (mismatched, edges) = edge_counts(src, tgt, m, theta, coarse_labels);
    ratio(mismatched, edges)
}

/// The span token whose head lies outside the span; the first token if none does.
pub fn span_head(tree: &UdTree, span: Span) -> usize {
    span.indices()
        .find(|&i| !span.contains(tree.head(i)))
        .unwrap_or(span.start)
}

/// Coarse labels along the tree path between two tokens. Each edge is named
/// by the label of its lower endpoint.
fn path_labels(tree: &UdTree, a: usize, b: usize) -> Vec<&str> {
    tree.path(a, b)
        .windows(2)
        .map(|w| {
            let lower = if tree.head(w[0]) == w[1] { w[0] } else { w[1] };
            coarse_label(&tree.tokens()[lower - 1].deprel)
        })
        .collect()
}

/// Whether the subject-object dependency path differs across languages.
/// A relation that cannot be projected counts as a mismatch.
pub fn relation_path_mismatch(
    src: &UdTree,
    tgt: &UdTree,
    m: &AlignmentMatrix,
    theta: f64,
    rel: &RelationInstance,
) -> bool {
    let Ok(projected) = project_relation(rel, m, theta) else {
        return true;
    };
    if !projected.subj.fits(tgt.len()) || !projected.obj.fits(tgt.len()) {
        return true;
    }
    let src_path = path_labels(src, span_head(src, rel.subj), span_head(src, rel.obj));
    let tgt_path = path_labels(
        tgt,
        span_head(tgt, projected.subj),
        span_head(tgt, projected.obj),
    );
    src_path != tgt_path
}

/// Sequential (token offset) and syntactic (edges on the shortest undirected
/// path) distance between the subject and object head tokens.
pub fn subject_object_distances(tree: &UdTree, rel: &RelationInstance) -> (usize, usize) {
    let s = span_head(tree, rel.subj);
    let o = span_head(tree, rel.obj);
    (s.abs_diff(o), tree.distance(s, o))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub misaligned_word_rate: Option<f64>,
    pub mismatched_edge_rate: Option<f64>,
    pub mismatched_path_rate: Option<f64>,
    pub sentence_count: usize,
}

/// Micro-averaged counts behind a [`BiasReport`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BiasStats {
    pub sentences: usize,
    pub tokens: usize,
    pub misaligned_tokens: usize,
    pub edges: usize,
    pub mismatched_edges: usize,
    pub paths: usize,
    pub mismatched_paths: usize,
}

impl BiasStats {
    pub fn add_sentence(
        &mut self,
        src: &UdTree,
        tgt: &UdTree,
        m: &AlignmentMatrix,
        theta: f64,
        coarse_labels: bool,
        relations: &[RelationInstance],
    ) {
        self.sentences += 1;
        self.tokens += src.len() + tgt.len();
        self.misaligned_tokens += misaligned_tokens(src, tgt, m, theta);
        let (mismatched, edges) = edge_counts(src, tgt, m, theta, coarse_labels);
        self.edges += edges;
        self.mismatched_edges += mismatched;
        for rel in relations {
            self.paths += 1;
            self.mismatched_paths += usize::from(relation_path_mismatch(src, tgt, m, theta, rel));
        }
    }

    pub fn merge(&mut self, other: &BiasStats) {
        self.sentences += other.sentences;
        self.tokens += other.tokens;
        self.misaligned_tokens += other.misaligned_tokens;
        self.edges += other.edges;
        self.mismatched_edges += other.mismatched_edges;
        self.paths += other.paths;
        self.mismatched_paths += other.mismatched_paths;
    }

    pub fn report(&self) -> BiasReport {
        BiasReport {
            misaligned_word_rate: ratio(self.misaligned_tokens, self.tokens),
            mismatched_edge_rate: ratio(self.mismatched_edges, self.edges),
            mismatched_path_rate: ratio(self.mismatched_paths, self.paths),
            sentence_count: self.sentences,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub mean_sequential_distance: Option<f64>,
    pub mean_syntactic_distance: Option<f64>,
    pub instance_count: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceStats {
    pub instances: usize,
    pub sequential: usize,
    pub syntactic: usize,
}

impl DistanceStats {
    pub fn add(&mut self, tree: &UdTree, rel: &RelationInstance) {
        let (seq, syn) = subject_object_distances(tree, rel);
        self.instances += 1;
        self.sequential += seq;
        self.syntactic += syn;
    }

    pub fn merge(&mut self, other: &DistanceStats) {
        self.instances += other.instances;
        self.sequential += other.sequential;
        self.syntactic += other.syntactic;
    }

    pub fn report(&self) -> DistanceReport {
        DistanceReport {
            mean_sequential_distance: ratio(self.sequential, self.instances),
            mean_syntactic_distance: ratio(self.syntactic, self.instances),
            instance_count: self.instances,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeReport {
    pub sentence_count: usize,
    pub mean_src_len: f64,
    pub mean_tgt_len: f64,
    pub mean_sum: f64,
    pub mean_forest_len: f64,
    pub mean_merged: f64,
    pub merge_rate: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeStats {
    pub sentences: usize,
    pub src_tokens: usize,
    pub tgt_tokens: usize,
    pub forest_nodes: usize,
    pub merged: usize,
}

impl MergeStats {
    pub fn add(&mut self, forest: &CodeMixedForest) {
        self.sentences += 1;
        self.src_tokens += forest.src_len;
        self.tgt_tokens += forest.tgt_len;
        self.forest_nodes += forest.len();
        self.merged += forest.merged_count;
    }

    pub fn merge(&mut self, other: &MergeStats) {
        self.sentences += other.sentences;
        self.src_tokens += other.src_tokens;
        self.tgt_tokens += other.tgt_tokens;
        self.forest_nodes += other.forest_nodes;
        self.merged += other.merged;
    }

    pub fn report(&self) -> Result<MergeReport> {
        if self.sentences == 0 {
            return Err(Error::Empty("merge report over zero forests"));
        }
        let n = self.sentences as f64;
        let sum = self.src_tokens + self.tgt_tokens;
        Ok(MergeReport {
            sentence_count: self.sentences,
            mean_src_len: self.src_tokens as f64 / n,
            mean_tgt_len: self.tgt_tokens as f64 / n,
            mean_sum: sum as f64 / n,
            mean_forest_len: self.forest_nodes as f64 / n,
            mean_merged: self.merged as f64 / n,
            merge_rate: ratio(self.merged, sum).unwrap_or(0.0),
        })
    }
}

pub fn merge_report<'f>(
    forests: impl IntoIterator<Item = &'f CodeMixedForest>,
) -> Result<MergeReport> {
    let mut stats = MergeStats::default();
    for f in forests {
        stats.add(f);
    }
    stats.report()
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

fn write_table(f: &mut fmt::Formatter<'_>, rows: &[(&str, String)]) -> fmt::Result {
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    for (key, value) in rows {
        writeln!(f, "{key:<width$}  {value:>10}")?;
    }
    Ok(())
}

impl fmt::Display for BiasReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_table(
            f,
            &[
                ("sentences", self.sentence_count.to_string()),
                ("misaligned word rate", cell(self.misaligned_word_rate)),
                ("mismatched edge rate", cell(self.mismatched_edge_rate)),
                ("mismatched path rate", cell(self.mismatched_path_rate)),
            ],
        )
    }
}

impl fmt::Display for DistanceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_table(
            f,
            &[
                ("relation instances", self.instance_count.to_string()),
                (
                    "mean sequential distance",
                    cell(self.mean_sequential_distance),
                ),
                (
                    "mean syntactic distance",
                    cell(self.mean_syntactic_distance),
                ),
            ],
        )
    }
}

impl fmt::Display for MergeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_table(
            f,
            &[
                ("sentences", self.sentence_count.to_string()),
                ("mean src len", format!("{:.2}", self.mean_src_len)),
                ("mean tgt len", format!("{:.2}", self.mean_tgt_len)),
                ("mean sum", format!("{:.2}", self.mean_sum)),
                ("mean forest len", format!("{:.2}", self.mean_forest_len)),
                ("mean merged", format!("{:.2}", self.mean_merged)),
                ("merge rate", format!("{:.1}%", self.merge_rate * 100.0)),
            ],
        )
    }
}
