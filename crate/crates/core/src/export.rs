//! Forest serialization for the encoder (numeric graph) and for Graphviz.

use std::fmt::Write as _;

use ndarray::Array2;

use crate::codemix::{CodeMixedForest, Origin};
use crate::encoder::{Embedder, ForestGraph};
use crate::error::Result;

/// Graph view of a forest. Node `k` of the graph is forest node `k`, ROOT
/// included, so the graph stays connected and relation node ids index it
/// directly.
pub fn to_graph(forest: &CodeMixedForest, embedder: &dyn Embedder) -> Result<ForestGraph> {
    let n = forest.nodes.len();
    let d = embedder.dim();
    let mut embeddings = Array2::zeros((n, d));
    for (row, node) in embeddings.rows_mut().into_iter().zip(&forest.nodes) {
        let v = embedder.embed(&node.form);
        row.into_iter().zip(v).for_each(|(slot, x)| *slot = x);
    }
    ForestGraph::from_edges(n, &parent_edges(forest), embeddings)
}

/// `(parent, child)` per non-root node, in child id order.
pub fn parent_edges(forest: &CodeMixedForest) -> Vec<(usize, usize)> {
    forest
        .nodes
        .iter()
        .filter_map(|node| node.parent.map(|p| (p, node.id)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DotStyle {
    pub root: String,
    pub merged: String,
    pub src_copy: String,
    pub tgt_copy: String,
    pub edge_labels: bool,
}

impl Default for DotStyle {
    fn default() -> Self {
        DotStyle {
            root: "gray80".into(),
            merged: "palegreen".into(),
            src_copy: "lightblue".into(),
            tgt_copy: "lightsalmon".into(),
            edge_labels: true,
        }
    }
}

impl DotStyle {
    pub fn color(&self, origin: Origin) -> &str {
        match origin {
            Origin::Root => &self.root,
            Origin::Merged => &self.merged,
            Origin::SrcCopy => &self.src_copy,
            Origin::TgtCopy => &self.tgt_copy,
        }
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out
}

/// Renders one forest as a DOT digraph.
pub fn to_dot(forest: &CodeMixedForest, style: &DotStyle) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", escape(&forest.sent_id));
    out.push_str("  node [shape=box, style=filled];\n");
    for node in &forest.nodes {
        let label = if node.origin == Origin::Root {
            node.form.clone()
        } else {
            format!("{} ({})", node.form, node.deprel)
        };
        let _ = writeln!(
            out,
            "  n{} [label=\"{}\", fillcolor=\"{}\"];",
            node.id,
            escape(&label),
            style.color(node.origin)
        );
    }
    for node in &forest.nodes {
        if let Some(p) = node.parent {
            if style.edge_labels {
                let _ = writeln!(
                    out,
                    "  n{p} -> n{} [label=\"{}\"];",
                    node.id,
                    escape(&node.deprel)
                );
            } else {
                let _ = writeln!(out, "  n{p} -> n{};", node.id);
            }
        }
    }
    out.push_str("}\n");
    out
}
