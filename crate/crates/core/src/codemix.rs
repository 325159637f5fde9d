//! Code-mixed forest construction, code-mixed text assembly and relation
//! annotation projection.
//!
//! A forest is built by walking both trees top-down, one layer at a time.
//! Under every merged forest node the child layers of its source and target
//! tokens are matched with [`align_search`]; matched pairs become new merged
//! nodes (target form, target label) and are expanded later, while unmatched
//! tokens are copied into the forest together with their whole subtree.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::alignment::{align_search, AlignmentMatrix, Side};
use crate::error::{Error, Result};
use crate::treebank::{UdTree, ROOT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Origin {
    Merged,
    SrcCopy,
    TgtCopy,
    Root,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Merged => "MERGED",
            Origin::SrcCopy => "SRC_COPY",
            Origin::TgtCopy => "TGT_COPY",
            Origin::Root => "ROOT",
        }
    }
}

pub const ROOT_FORM: &str = "ROOT";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestNode {
    pub id: usize,
    pub form: String,
    pub origin: Origin,
    pub src_index: Option<usize>,
    pub tgt_index: Option<usize>,
    /// Label of the arc to `parent`; empty for the root node.
    pub deprel: String,
    /// `None` only for node 0.
    pub parent: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeMixedForest {
    pub sent_id: String,
    pub nodes: Vec<ForestNode>,
    pub src_len: usize,
    pub tgt_len: usize,
    pub merged_count: usize,
}

impl CodeMixedForest {
    /// Content nodes, ROOT excluded.
    pub fn len(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Forest node housing a source token.
    pub fn node_of_src(&self, src_index: usize) -> Option<usize> {
        self.nodes
            .iter()
            .find(|n| n.src_index == Some(src_index))
            .map(|n| n.id)
    }

    /// Forest node housing a target token.
    pub fn node_of_tgt(&self, tgt_index: usize) -> Option<usize> {
        self.nodes
            .iter()
            .find(|n| n.tgt_index == Some(tgt_index))
            .map(|n| n.id)
    }

    pub fn node_of(&self, side: Side, index: usize) -> Option<usize> {
        match side {
            Side::Src => self.node_of_src(index),
            Side::Tgt => self.node_of_tgt(index),
        }
    }

    pub fn children(&self, id: usize) -> impl Iterator<Item = &ForestNode> + '_ {
        self.nodes.iter().filter(move |n| n.parent == Some(id))
    }

    /// Checks the structural invariants; returns a description of the first violation.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let Some(root) = self.nodes.first() else {
            return Err("forest has no nodes".into());
        };
        if root.origin != Origin::Root || root.parent.is_some() {
            return Err("node 0 must be a parentless ROOT".into());
        }
        let mut src_seen = vec![false; self.src_len + 1];
        let mut tgt_seen = vec![false; self.tgt_len + 1];
        let mut merged = 0;
        for (pos, node) in self.nodes.iter().enumerate() {
            if node.id != pos {
                return Err(format!("node at position {pos} has id {}", node.id));
            }
            if pos == 0 {
                continue;
            }
            match node.parent {
                Some(p) if p < node.id => {}
                _ => {
                    return Err(format!(
                        "node {} must have a parent with a smaller id",
                        node.id
                    ))
                }
            }
            let ok = match node.origin {
                Origin::Merged => node.src_index.is_some() && node.tgt_index.is_some(),
                Origin::SrcCopy => node.src_index.is_some() && node.tgt_index.is_none(),
                Origin::TgtCopy => node.src_index.is_none() && node.tgt_index.is_some(),
                Origin::Root => false,
            };
            if !ok {
                return Err(format!(
                    "node {} has indices inconsistent with {:?}",
                    node.id, node.origin
                ));
            }
            if node.origin == Origin::Merged {
                merged += 1;
            }
            for (idx, seen, side) in [
                (node.src_index, &mut src_seen, "source"),
                (node.tgt_index, &mut tgt_seen, "target"),
            ] {
                if let Some(i) = idx {
                    match seen.get_mut(i) {
                        Some(slot) if i >= 1 && !*slot => *slot = true,
                        Some(_) if i >= 1 => return Err(format!("{side} token {i} housed twice")),
                        _ => return Err(format!("{side} token {i} out of range")),
                    }
                }
            }
        }
        if merged != self.merged_count {
            return Err(format!(
                "merged_count {} but {merged} MERGED nodes",
                self.merged_count
            ));
        }
        if self.len() + self.merged_count != self.src_len + self.tgt_len {
            return Err(format!(
                "{} content nodes, expected {} + {} - {}",
                self.len(),
                self.src_len,
                self.tgt_len,
                self.merged_count
            ));
        }
        Ok(())
    }
}

struct Frontier {
    node: usize,
    src_children: Vec<usize>,
    tgt_children: Vec<usize>,
}

/// Merges a source and a target tree into one code-mixed forest.
///
/// Node 0 is a synthetic ROOT standing for both trees' roots; the two root
/// predicates are matched like any other layer. Ids follow visit order:
/// under each merged node its merged children come first (ascending target
/// index), then copied source subtrees, then copied target subtrees, each
/// copied subtree in pre-order with ascending child indices.
pub fn construct_forest(
    src: &UdTree,
    tgt: &UdTree,
    m: &AlignmentMatrix,
    theta: f64,
) -> Result<CodeMixedForest> {
    m.check_bounds(src.len(), tgt.len())?;

    let mut nodes = vec![ForestNode {
        id: 0,
        form: ROOT_FORM.to_string(),
        origin: Origin::Root,
        src_index: None,
        tgt_index: None,
        deprel: String::new(),
        parent: None,
    }];
    let mut merged_count = 0;
    let mut queue = VecDeque::from([Frontier {
        node: 0,
        src_children: src.child_indices(ROOT)?.to_vec(),
        tgt_children: tgt.child_indices(ROOT)?.to_vec(),
    }]);

    while let Some(cur) = queue.pop_front() {
        let src_layer: Vec<_> = cur
            .src_children
            .iter()
            .map(|&i| &src.tokens()[i - 1])
            .collect();
        let tgt_layer: Vec<_> = cur
            .tgt_children
            .iter()
            .map(|&j| &tgt.tokens()[j - 1])
            .collect();
        let mut outcome = align_search(&src_layer, &tgt_layer, m, theta);
        outcome.aligned.sort_by_key(|p| p.tgt_index);

        for pair in outcome.aligned {
            let tgt_token = &tgt.tokens()[pair.tgt_index - 1];
            let id = nodes.len();
            nodes.push(ForestNode {
                id,
                form: tgt_token.form.clone(),
                origin: Origin::Merged,
                src_index: Some(pair.src_index),
                tgt_index: Some(pair.tgt_index),
                deprel: pair.arc,
                parent: Some(cur.node),
            });
            merged_count += 1;
            queue.push_back(Frontier {
                node: id,
                src_children: src.child_indices(pair.src_index)?.to_vec(),
                tgt_children: tgt.child_indices(pair.tgt_index)?.to_vec(),
            });
        }

        for (token, side) in outcome.nonaligned {
            let tree = match side {
                Side::Src => src,
                Side::Tgt => tgt,
            };
            copy_subtree(&mut nodes, tree, side, token.index, cur.node);
        }
    }

    Ok(CodeMixedForest {
        sent_id: src.sent_id().to_string(),
        nodes,
        src_len: src.len(),
        tgt_len: tgt.len(),
        merged_count,
    })
}

fn copy_subtree(nodes: &mut Vec<ForestNode>, tree: &UdTree, side: Side, top: usize, parent: usize) {
    // tree index -> forest id, for parents inside the copied subtree
    let mut placed: Vec<(usize, usize)> = Vec::new();
    for index in tree.subtree(top) {
        let token = &tree.tokens()[index - 1];
        let parent_id = if index == top {
            parent
        } else {
            placed
                .iter()
                .find(|&&(i, _)| i == token.head)
                .map(|&(_, id)| id)
                .expect("pre-order visits heads first")
        };
        let id = nodes.len();
        let (origin, src_index, tgt_index) = match side {
            Side::Src => (Origin::SrcCopy, Some(index), None),
            Side::Tgt => (Origin::TgtCopy, None, Some(index)),
        };
        nodes.push(ForestNode {
            id,
            form: token.form.clone(),
            origin,
            src_index,
            tgt_index,
            deprel: token.deprel.clone(),
            parent: Some(parent_id),
        });
        placed.push((index, id));
    }
}

/// One element of the code-mixed text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixedToken {
    pub form: String,
    pub origin: Origin,
    pub src_index: Option<usize>,
    pub tgt_index: Option<usize>,
}

/// The source sentence with every merged token replaced by its target form.
/// Unaligned target tokens live only in the forest and are not inserted.
pub fn assemble_codemixed_text(src: &UdTree, forest: &CodeMixedForest) -> Vec<MixedToken> {
    let mut merged_at: Vec<Option<&ForestNode>> = vec![None; src.len() + 1];
    for node in forest.nodes.iter().filter(|n| n.origin == Origin::Merged) {
        if let Some(slot) = node.src_index.and_then(|i| merged_at.get_mut(i)) {
            *slot = Some(node);
        }
    }
    src.tokens()
        .iter()
        .map(|t| match merged_at[t.index] {
            Some(node) => MixedToken {
                form: node.form.clone(),
                origin: Origin::Merged,
                src_index: Some(t.index),
                tgt_index: node.tgt_index,
            },
            None => MixedToken {
                form: t.form.clone(),
                origin: Origin::SrcCopy,
                src_index: Some(t.index),
                tgt_index: None,
            },
        })
        .collect()
}

/// Inclusive 1-based token range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "[usize; 2]", try_from = "[usize; 2]")]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start == 0 || end < start {
            return Err(Error::Shape(format!("invalid span [{start}, {end}]")));
        }
        Ok(Span { start, end })
    }

    pub fn single(index: usize) -> Self {
        Span {
            start: index,
            end: index,
        }
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices().contains(&index)
    }

    pub fn fits(&self, len: usize) -> bool {
        self.end <= len
    }
}

impl From<Span> for [usize; 2] {
    fn from(s: Span) -> Self {
        [s.start, s.end]
    }
}

impl TryFrom<[usize; 2]> for Span {
    type Error = Error;
    fn try_from([start, end]: [usize; 2]) -> Result<Self> {
        Span::new(start, end)
    }
}

/// A subject/object relation over one sentence side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationInstance {
    pub sent_id: String,
    pub subj: Span,
    pub obj: Span,
    pub label: String,
    #[serde(default = "src_side")]
    pub side: Side,
}

fn src_side() -> Side {
    Side::Src
}

/// A relation re-expressed over forest node ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestRelation {
    pub subj_nodes: Vec<usize>,
    pub obj_nodes: Vec<usize>,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionFailure {
    #[error("subject span has no aligned target tokens")]
    Subject,
    #[error("object span has no aligned target tokens")]
    Object,
    #[error("neither span has aligned target tokens")]
    Both,
}

/// Projects a source-side relation onto the target sentence. Each span maps
/// to the hull of target tokens aligned above `theta` to any of its tokens.
pub fn project_relation(
    rel: &RelationInstance,
    m: &AlignmentMatrix,
    theta: f64,
) -> std::result::Result<RelationInstance, ProjectionFailure> {
    let image = |span: &Span| {
        let targets = span.indices().flat_map(|i| m.targets_of(i, theta));
        targets.fold(None, |acc: Option<(usize, usize)>, t| match acc {
            None => Some((t, t)),
            Some((lo, hi)) => Some((lo.min(t), hi.max(t))),
        })
    };
    match (image(&rel.subj), image(&rel.obj)) {
        (Some((s0, s1)), Some((o0, o1))) => Ok(RelationInstance {
            sent_id: rel.sent_id.clone(),
            subj: Span { start: s0, end: s1 },
            obj: Span { start: o0, end: o1 },
            label: rel.label.clone(),
            side: Side::Tgt,
        }),
        (None, None) => Err(ProjectionFailure::Both),
        (None, _) => Err(ProjectionFailure::Subject),
        (_, None) => Err(ProjectionFailure::Object),
    }
}

fn housing(
    forest: &CodeMixedForest,
    rels: &[&RelationInstance],
    pick: fn(&RelationInstance) -> Span,
) -> Result<Vec<usize>> {
    let mut ids = Vec::new();
    for rel in rels {
        for i in pick(rel).indices() {
            let id = forest.node_of(rel.side, i).ok_or_else(|| Error::Unhoused {
                sent_id: forest.sent_id.clone(),
                side: match rel.side {
                    Side::Src => "source",
                    Side::Tgt => "target",
                },
                index: i,
            })?;
            ids.push(id);
        }
    }
    ids.sort_unstable();
    ids.dedup();
    Ok(ids)
}

/// Combines source- and target-side annotations of one relation into forest
/// node id sets, ascending and deduplicated.
pub fn merge_annotations(
    src_rel: &RelationInstance,
    tgt_rel: &RelationInstance,
    forest: &CodeMixedForest,
) -> Result<ForestRelation> {
    merge_annotation_views(&[src_rel, tgt_rel], forest)
}

/// As [`merge_annotations`], over any number of side-tagged views (a lone
/// source view is used when projection failed).
pub fn merge_annotation_views(
    views: &[&RelationInstance],
    forest: &CodeMixedForest,
) -> Result<ForestRelation> {
    let label = views
        .first()
        .map(|r| r.label.clone())
        .ok_or(Error::Empty("relation views"))?;
    Ok(ForestRelation {
        subj_nodes: housing(forest, views, |r| r.subj)?,
        obj_nodes: housing(forest, views, |r| r.obj)?,
        label,
    })
}
