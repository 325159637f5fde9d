use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use udforest::codemix::merge_annotation_views;
use udforest::encoder::{biaffine_score, encode, EncoderParams, HashEmbedder};
use udforest::metrics::{
    BiasReport, BiasStats, DistanceReport, DistanceStats, MergeReport, MergeStats,
};
use udforest::records::{parse_jsonl, to_jsonl_line, ForestRecord, GraphRecord, ScoreRecord};
use udforest::{
    assemble_codemixed_text, construct_forest, project_relation, to_dot, to_graph, DotStyle,
    ForestRelation, RelationInstance, Side, UdTree,
};

use crate::corpus::{self, read_file, SentencePair};
use crate::error::CliError;
use crate::{ExportArgs, ExportFormat, MergeArgs, ProjectArgs, ReportFormat, ScoreArgs, StatsArgs};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommandOutput {
    /// Primary output: stdout or the `--out` file.
    pub output: String,
    /// Human-readable notes for stderr.
    pub diagnostics: String,
    /// Sentences that could not be processed.
    pub failed: usize,
}

fn check_spans(rel: &RelationInstance, tree: &UdTree) -> Result<(), String> {
    if rel.subj.fits(tree.len()) && rel.obj.fits(tree.len()) {
        Ok(())
    } else {
        Err(format!(
            "relation {} spans {:?}/{:?} exceed sentence length {}",
            rel.label,
            <[usize; 2]>::from(rel.subj),
            <[usize; 2]>::from(rel.obj),
            tree.len()
        ))
    }
}

struct MergedSentence {
    record: ForestRecord,
    dropped: usize,
}

fn merge_sentence(
    pair: &SentencePair,
    theta: f64,
    keep_unprojected: bool,
) -> Result<MergedSentence, String> {
    let forest = construct_forest(&pair.src, &pair.tgt, &pair.alignment, theta)
        .map_err(|e| e.to_string())?;
    let text = assemble_codemixed_text(&pair.src, &forest);
    let mut relations = Vec::new();
    let mut dropped = 0;
    for rel in &pair.relations {
        check_spans(rel, &pair.src)?;
        let merged: Option<ForestRelation> = match project_relation(rel, &pair.alignment, theta) {
            Ok(projected) => Some(
                merge_annotation_views(&[rel, &projected], &forest).map_err(|e| e.to_string())?,
            ),
            Err(_) if keep_unprojected => {
                Some(merge_annotation_views(&[rel], &forest).map_err(|e| e.to_string())?)
            }
            Err(_) => None,
        };
        match merged {
            Some(r) => relations.push(r),
            None => dropped += 1,
        }
    }
    Ok(MergedSentence {
        record: ForestRecord::new(forest, &text, relations),
        dropped,
    })
}

pub fn cmd_merge(args: &MergeArgs) -> Result<CommandOutput, CliError> {
    let pairs = corpus::load(&args.corpus.paths(), args.corpus.lenient)?;
    let results: Vec<Result<MergedSentence, String>> = pairs
        .par_iter()
        .map(|p| merge_sentence(p, args.theta, args.keep_unprojected))
        .collect();

    let mut out = CommandOutput::default();
    let mut stats = MergeStats::default();
    let mut dropped = 0;
    for (pair, result) in pairs.iter().zip(results) {
        match result {
            Ok(sentence) => {
                stats.add(&sentence.record.forest());
                dropped += sentence.dropped;
                out.output.push_str(&to_jsonl_line(&sentence.record));
            }
            Err(message) => {
                out.failed += 1;
                let _ = writeln!(
                    out.diagnostics,
                    "sentence {}: {message}",
                    pair.src.sent_id()
                );
            }
        }
    }
    match stats.report() {
        Ok(report) => {
            let _ = write!(out.diagnostics, "{report}");
        }
        Err(_) if out.failed == 0 => return Err(CliError::Usage("no sentences to merge".into())),
        Err(_) => {}
    }
    if dropped > 0 {
        let _ = writeln!(
            out.diagnostics,
            "relations dropped (no projection): {dropped}"
        );
    }
    Ok(out)
}

pub fn cmd_project(args: &ProjectArgs) -> Result<CommandOutput, CliError> {
    if args.corpus.relations.is_none() {
        return Err(CliError::Usage("project requires --relations".into()));
    }
    let pairs = corpus::load(&args.corpus.paths(), args.corpus.lenient)?;
    let results: Vec<Result<(Vec<RelationInstance>, usize), String>> = pairs
        .par_iter()
        .map(|pair| {
            let mut kept = Vec::new();
            let mut failed = 0;
            for rel in &pair.relations {
                check_spans(rel, &pair.src)?;
                match project_relation(rel, &pair.alignment, args.theta) {
                    Ok(p) => kept.push(p),
                    Err(_) => {
                        failed += 1;
                        if args.keep_unprojected {
                            kept.push(RelationInstance {
                                side: Side::Src,
                                ..rel.clone()
                            });
                        }
                    }
                }
            }
            Ok((kept, failed))
        })
        .collect();

    let mut out = CommandOutput::default();
    let mut unprojected = 0;
    for (pair, result) in pairs.iter().zip(results) {
        match result {
            Ok((rels, failed)) => {
                unprojected += failed;
                rels.iter()
                    .for_each(|r| out.output.push_str(&to_jsonl_line(r)));
            }
            Err(message) => {
                out.failed += 1;
                let _ = writeln!(
                    out.diagnostics,
                    "sentence {}: {message}",
                    pair.src.sent_id()
                );
            }
        }
    }
    let _ = writeln!(
        out.diagnostics,
        "relations without projection: {unprojected}"
    );
    Ok(out)
}

#[derive(Debug, Clone, Default)]
struct SentenceStats {
    bias: BiasStats,
    by_upos: BTreeMap<String, BiasStats>,
    merge: MergeStats,
}

impl SentenceStats {
    fn merge(mut self, other: SentenceStats) -> SentenceStats {
        self.bias.merge(&other.bias);
        self.merge.merge(&other.merge);
        for (k, v) in other.by_upos {
            self.by_upos.entry(k).or_default().merge(&v);
        }
        self
    }
}

#[derive(Debug, Serialize)]
struct StatsRun {
    theta: f64,
    bias: BiasReport,
    distance: DistanceReport,
    merge: MergeReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    by_root_upos: Option<BTreeMap<String, BiasReport>>,
}

#[derive(Debug, Serialize)]
struct StatsOutput {
    runs: Vec<StatsRun>,
}

pub fn cmd_stats(args: &StatsArgs) -> Result<CommandOutput, CliError> {
    let pairs = corpus::load(&args.corpus.paths(), args.corpus.lenient)?;
    if pairs.is_empty() {
        return Err(CliError::Usage("empty corpus".into()));
    }
    for pair in &pairs {
        for rel in &pair.relations {
            check_spans(rel, &pair.src)
                .map_err(|m| CliError::Usage(format!("sentence {}: {m}", pair.src.sent_id())))?;
        }
    }

    let mut distance = DistanceStats::default();
    for pair in &pairs {
        for rel in &pair.relations {
            distance.add(&pair.src, rel);
        }
    }

    let mut runs = Vec::new();
    for &theta in &args.theta {
        let per_sentence: Vec<Result<SentenceStats, String>> = pairs
            .par_iter()
            .map(|pair| {
                let mut s = SentenceStats::default();
                s.bias.add_sentence(
                    &pair.src,
                    &pair.tgt,
                    &pair.alignment,
                    theta,
                    args.coarse_labels,
                    &pair.relations,
                );
                if args.group_by_root_upos {
                    s.by_upos.insert(pair.src.root().upos.clone(), s.bias);
                }
                let forest = construct_forest(&pair.src, &pair.tgt, &pair.alignment, theta)
                    .map_err(|e| e.to_string())?;
                s.merge.add(&forest);
                Ok(s)
            })
            .collect();
        let mut total = SentenceStats::default();
        for s in per_sentence {
            total = total.merge(s.map_err(CliError::Usage)?);
        }
        runs.push(StatsRun {
            theta,
            bias: total.bias.report(),
            distance: distance.report(),
            merge: total.merge.report()?,
            by_root_upos: args.group_by_root_upos.then(|| {
                total
                    .by_upos
                    .iter()
                    .map(|(k, v)| (k.clone(), v.report()))
                    .collect()
            }),
        });
    }

    let output = match args.format {
        ReportFormat::Json => {
            let mut s =
                serde_json::to_string_pretty(&StatsOutput { runs }).expect("reports serialize");
            s.push('\n');
            s
        }
        ReportFormat::Text => {
            let mut s = String::new();
            for run in &runs {
                let _ = writeln!(s, "== theta {} ==", run.theta);
                let _ = writeln!(s, "-- mismatch --\n{}", run.bias);
                let _ = writeln!(s, "-- distance --\n{}", run.distance);
                let _ = writeln!(s, "-- merge --\n{}", run.merge);
                if let Some(groups) = &run.by_root_upos {
                    for (upos, report) in groups {
                        let _ = writeln!(s, "-- mismatch, root {upos} --\n{report}");
                    }
                }
            }
            s
        }
    };
    Ok(CommandOutput {
        output,
        ..CommandOutput::default()
    })
}

fn read_forests(path: &std::path::Path) -> Result<Vec<ForestRecord>, CliError> {
    let text = read_file(path)?;
    let records: Vec<ForestRecord> = parse_jsonl(&text).map_err(|source| CliError::Input {
        path: path.to_path_buf(),
        source,
    })?;
    // report invalid records by their line number among non-blank lines
    let lines: Vec<usize> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, _)| i + 1)
        .collect();
    for (record, line) in records.iter().zip(lines) {
        record.validate().map_err(|message| CliError::Input {
            path: path.to_path_buf(),
            source: udforest::Error::Parse { line, message },
        })?;
    }
    Ok(records)
}

pub fn cmd_export(args: &ExportArgs) -> Result<CommandOutput, CliError> {
    let records = read_forests(&args.forest)?;
    let style = DotStyle {
        edge_labels: !args.no_edge_labels,
        ..DotStyle::default()
    };
    let chunks: Vec<String> = records
        .par_iter()
        .map(|r| match args.format {
            ExportFormat::Dot => to_dot(&r.forest(), &style),
            ExportFormat::Graph => to_jsonl_line(&GraphRecord::from_forest(&r.forest())),
        })
        .collect();
    Ok(CommandOutput {
        output: chunks.concat(),
        ..CommandOutput::default()
    })
}

pub fn cmd_score(args: &ScoreArgs) -> Result<CommandOutput, CliError> {
    let records = read_forests(&args.forest)?;
    let labels: Vec<String> = if args.labels.is_empty() {
        let found: BTreeSet<&String> = records
            .iter()
            .flat_map(|r| r.relations.iter().map(|x| &x.label))
            .collect();
        found.into_iter().cloned().collect()
    } else {
        args.labels.clone()
    };
    if labels.is_empty() {
        return Err(CliError::Usage(
            "no relation labels: pass --labels or a forest with relations".into(),
        ));
    }
    let params = if args.zero_params {
        EncoderParams::zeros(args.dim, labels.len(), args.layers)?
    } else {
        EncoderParams::random(args.dim, labels.len(), args.layers, args.seed)?
    };
    let embedder = HashEmbedder::new(args.dim, args.seed);

    let scored: Vec<udforest::Result<Vec<ScoreRecord>>> = records
        .par_iter()
        .map(|record| {
            if record.relations.is_empty() {
                return Ok(Vec::new());
            }
            let graph = to_graph(&record.forest(), &embedder)?;
            let encoding = encode(&graph, &params)?;
            record
                .relations
                .iter()
                .map(|rel| {
                    // the lowest id is the node created closest to the top of the forest
                    let subj = rel
                        .subj_nodes
                        .iter()
                        .copied()
                        .min()
                        .expect("validated non-empty");
                    let obj = rel
                        .obj_nodes
                        .iter()
                        .copied()
                        .min()
                        .expect("validated non-empty");
                    let probs = biaffine_score(encoding.view(), subj, obj, &params)?;
                    Ok(ScoreRecord {
                        sent_id: record.sent_id.clone(),
                        subj,
                        obj,
                        probs: probs.to_vec(),
                    })
                })
                .collect()
        })
        .collect();

    let mut out = CommandOutput::default();
    for batch in scored {
        for rec in batch? {
            out.output.push_str(&to_jsonl_line(&rec));
        }
    }
    let _ = writeln!(out.diagnostics, "label order: {}", labels.join(","));
    Ok(out)
}
