//! Loading and pairing of the parallel corpus inputs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use udforest::records::parse_jsonl;
use udforest::{parse_conllu, read_alignments, AlignmentMatrix, RelationInstance, UdTree};

use crate::error::CliError;

pub fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn in_file<T>(path: &Path, r: udforest::Result<T>) -> Result<T, CliError> {
    r.map_err(|source| CliError::Input {
        path: path.to_path_buf(),
        source,
    })
}

/// One aligned sentence pair and its source-side relations.
#[derive(Debug)]
pub struct SentencePair {
    pub src: UdTree,
    pub tgt: UdTree,
    pub alignment: AlignmentMatrix,
    pub relations: Vec<RelationInstance>,
}

#[derive(Debug, Clone)]
pub struct CorpusPaths {
    pub src: PathBuf,
    pub tgt: PathBuf,
    pub align: PathBuf,
    pub relations: Option<PathBuf>,
}

/// Offending ids reported when sentence id sets disagree.
const MAX_LISTED: usize = 10;

fn index_trees(
    path: &Path,
    trees: Vec<UdTree>,
    tag: &str,
) -> Result<(Vec<String>, HashMap<String, UdTree>), CliError> {
    let mut order = Vec::with_capacity(trees.len());
    let mut by_id = HashMap::with_capacity(trees.len());
    for tree in trees {
        let id = tree.sent_id().to_string();
        if by_id.contains_key(&id) {
            return Err(CliError::Usage(format!(
                "{}: duplicate sent_id {id}",
                path.display()
            )));
        }
        order.push(id.clone());
        by_id.insert(id, tree.with_language_tag(tag));
    }
    Ok((order, by_id))
}

/// Reads all inputs and pairs sentences in source-file order.
///
/// Without `lenient`, the source, target and alignment sentence id sets must
/// be identical; with it, only their intersection is kept.
pub fn load(paths: &CorpusPaths, lenient: bool) -> Result<Vec<SentencePair>, CliError> {
    let (order, mut src) = index_trees(
        &paths.src,
        in_file(&paths.src, parse_conllu(&read_file(&paths.src)?))?,
        "src",
    )?;
    let (_, mut tgt) = index_trees(
        &paths.tgt,
        in_file(&paths.tgt, parse_conllu(&read_file(&paths.tgt)?))?,
        "tgt",
    )?;
    let mut align = in_file(&paths.align, read_alignments(&read_file(&paths.align)?))?;

    let mut relations: BTreeMap<String, Vec<RelationInstance>> = BTreeMap::new();
    if let Some(path) = &paths.relations {
        for rel in in_file(path, parse_jsonl::<RelationInstance>(&read_file(path)?))? {
            relations.entry(rel.sent_id.clone()).or_default().push(rel);
        }
    }

    if !lenient {
        let src_ids: BTreeSet<&String> = src.keys().collect();
        let tgt_ids: BTreeSet<&String> = tgt.keys().collect();
        let align_ids: BTreeSet<&String> = align.keys().collect();
        let union: BTreeSet<&String> = src_ids
            .iter()
            .chain(&tgt_ids)
            .chain(&align_ids)
            .copied()
            .collect();
        let offenders: Vec<&String> = union
            .into_iter()
            .filter(|id| !(src_ids.contains(id) && tgt_ids.contains(id) && align_ids.contains(id)))
            .collect();
        if !offenders.is_empty() {
            let listed: Vec<&str> = offenders
                .iter()
                .take(MAX_LISTED)
                .map(|s| s.as_str())
                .collect();
            return Err(CliError::Mismatch {
                count: offenders.len(),
                listed: listed.join(", "),
            });
        }
    }

    let mut pairs = Vec::new();
    for id in order {
        let (Some(t), Some(m)) = (tgt.remove(&id), align.remove(&id)) else {
            continue;
        };
        let s = src.remove(&id).expect("ids come from the source map");
        pairs.push(SentencePair {
            src: s,
            tgt: t,
            alignment: m,
            relations: relations.remove(&id).unwrap_or_default(),
        });
    }
    Ok(pairs)
}
