//! JSON Lines records exchanged between pipeline stages.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::codemix::{CodeMixedForest, ForestNode, ForestRelation, MixedToken};
use crate::error::{Error, Result};
use crate::export::parent_edges;

/// One sentence of forest JSONL. Field order is the serialized order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestRecord {
    pub sent_id: String,
    pub src_len: usize,
    pub tgt_len: usize,
    pub merged_count: usize,
    pub nodes: Vec<ForestNode>,
    /// Code-mixed token forms in source order.
    pub text: Vec<String>,
    #[serde(default)]
    pub relations: Vec<ForestRelation>,
}

impl ForestRecord {
    pub fn new(
        forest: CodeMixedForest,
        text: &[MixedToken],
        relations: Vec<ForestRelation>,
    ) -> Self {
        ForestRecord {
            sent_id: forest.sent_id,
            src_len: forest.src_len,
            tgt_len: forest.tgt_len,
            merged_count: forest.merged_count,
            nodes: forest.nodes,
            text: text.iter().map(|t| t.form.clone()).collect(),
            relations,
        }
    }

    pub fn forest(&self) -> CodeMixedForest {
        CodeMixedForest {
            sent_id: self.sent_id.clone(),
            nodes: self.nodes.clone(),
            src_len: self.src_len,
            tgt_len: self.tgt_len,
            merged_count: self.merged_count,
        }
    }

    /// Structural checks on top of the JSON shape.
    pub fn validate(&self) -> std::result::Result<(), String> {
        self.forest().validate()?;
        if self.text.len() != self.src_len {
            return Err(format!(
                "text has {} tokens, source has {}",
                self.text.len(),
                self.src_len
            ));
        }
        let n = self.nodes.len();
        for rel in &self.relations {
            if rel.subj_nodes.is_empty() || rel.obj_nodes.is_empty() {
                return Err("relation with an empty node set".into());
            }
            if let Some(&bad) = rel
                .subj_nodes
                .iter()
                .chain(&rel.obj_nodes)
                .find(|&&id| id >= n)
            {
                return Err(format!("relation refers to missing node {bad}"));
            }
        }
        Ok(())
    }
}

/// One sentence of graph JSONL: undirected `(parent, child)` edges over
/// forest node ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphRecord {
    pub sent_id: String,
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    pub forms: Vec<String>,
}

impl GraphRecord {
    pub fn from_forest(forest: &CodeMixedForest) -> Self {
        GraphRecord {
            sent_id: forest.sent_id.clone(),
            n: forest.nodes.len(),
            edges: parent_edges(forest)
                .into_iter()
                .map(|(p, c)| [p, c])
                .collect(),
            forms: forest.nodes.iter().map(|n| n.form.clone()).collect(),
        }
    }
}

/// Label distribution for one subject/object node pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub sent_id: String,
    pub subj: usize,
    pub obj: usize,
    pub probs: Vec<f64>,
}

/// Parses JSON Lines, skipping blank lines; errors carry 1-based line numbers.
pub fn parse_jsonl<T: DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Serializes one record as a single line with a trailing newline.
pub fn to_jsonl_line<T: Serialize>(record: &T) -> String {
    let mut line = serde_json::to_string(record).expect("records serialize");
    line.push('\n');
    line
}
