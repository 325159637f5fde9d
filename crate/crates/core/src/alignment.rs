//! Word-alignment confidences and same-layer greedy matching.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::treebank::Token;

/// Sparse alignment confidences for one sentence pair, keyed by 1-based
/// (source, target) token positions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AlignmentMatrix {
    sent_id: String,
    entries: BTreeMap<(usize, usize), f64>,
}

impl AlignmentMatrix {
    pub fn new(sent_id: impl Into<String>) -> Self {
        AlignmentMatrix {
            sent_id: sent_id.into(),
            entries: BTreeMap::new(),
        }
    }

    /// Builds a matrix from `(src, tgt, score)` triples.
    pub fn from_entries(
        sent_id: impl Into<String>,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut m = AlignmentMatrix::new(sent_id);
        for (s, t, score) in entries {
            m.insert(s, t, score)?;
        }
        Ok(m)
    }

    /// Adds an entry; a repeated pair keeps the larger score.
    pub fn insert(&mut self, src: usize, tgt: usize, score: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::InvalidScore(score));
        }
        if src == 0 || tgt == 0 {
            return Err(Error::IndexOutOfRange { index: 0, len: 0 });
        }
        let slot = self.entries.entry((src, tgt)).or_insert(score);
        if score > *slot {
            *slot = score;
        }
        Ok(())
    }

    pub fn sent_id(&self) -> &str {
        &self.sent_id
    }

    pub fn score(&self, src: usize, tgt: usize) -> Option<f64> {
        self.entries.get(&(src, tgt)).copied()
    }

    /// Entries in ascending (src, tgt) order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries.iter().map(|(&(s, t), &v)| (s, t, v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Fails if an entry points past either sentence.
    pub fn check_bounds(&self, src_len: usize, tgt_len: usize) -> Result<()> {
        match self.iter().find(|&(s, t, _)| s > src_len || t > tgt_len) {
            Some((src, tgt, _)) => Err(Error::AlignmentOutOfRange {
                sent_id: self.sent_id.clone(),
                src,
                tgt,
                src_len,
                tgt_len,
            }),
            None => Ok(()),
        }
    }

    /// Target positions aligned to `src` above `theta`, ascending.
    pub fn targets_of(&self, src: usize, theta: f64) -> impl Iterator<Item = usize> + '_ {
        self.entries
            .range((src, 0)..=(src, usize::MAX))
            .filter(move |(_, &v)| v > theta)
            .map(|(&(_, t), _)| t)
    }
}

/// Reads `sent_id src tgt score` lines (tab- or space-separated).
/// Blank lines and `#` comments are ignored.
pub fn read_alignments(text: &str) -> Result<BTreeMap<String, AlignmentMatrix>> {
    let mut out: BTreeMap<String, AlignmentMatrix> = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: lineno,
            message,
        };
        let cols: Vec<&str> = trimmed.split_whitespace().collect();
        let [sent_id, src, tgt, score] = cols[..] else {
            return Err(parse_err(format!(
                "expected 4 columns, found {}",
                cols.len()
            )));
        };
        let index = |s: &str| match s.parse::<usize>() {
            Ok(i) if i >= 1 => Ok(i),
            _ => Err(parse_err(format!("invalid 1-based index {s:?}"))),
        };
        let (src, tgt) = (index(src)?, index(tgt)?);
        let score: f64 = score
            .parse()
            .map_err(|_| parse_err(format!("invalid score {score:?}")))?;
        out.entry(sent_id.to_string())
            .or_insert_with(|| AlignmentMatrix::new(sent_id))
            .insert(src, tgt, score)
            .map_err(|e| parse_err(e.to_string()))?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Side {
    Src,
    Tgt,
}

/// A confidently aligned source/target node pair. `arc` is the target label.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPair {
    pub src_index: usize,
    pub tgt_index: usize,
    pub score: f64,
    pub arc: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AlignOutcome<'t> {
    pub aligned: Vec<AlignedPair>,
    /// Unmatched source nodes in input order, then unmatched target nodes.
    pub nonaligned: Vec<(&'t Token, Side)>,
}

/// Greedy one-to-one matching of two node layers.
///
/// Candidates are entries with both endpoints in the given layers and a score
/// strictly above `theta`. They are taken by descending score, ties broken by
/// smaller source then smaller target index; a node leaves both pools once
/// matched. `aligned` is returned in the order pairs were accepted.
pub fn align_search<'t>(
    src_nodes: &[&'t Token],
    tgt_nodes: &[&'t Token],
    m: &AlignmentMatrix,
    theta: f64,
) -> AlignOutcome<'t> {
    let src_set: BTreeSet<usize> = src_nodes.iter().map(|t| t.index).collect();
    let tgt_set: BTreeSet<usize> = tgt_nodes.iter().map(|t| t.index).collect();

    let mut candidates: Vec<(usize, usize, f64)> = m
        .iter()
        .filter(|&(s, t, v)| v > theta && src_set.contains(&s) && tgt_set.contains(&t))
        .collect();
    candidates.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));

    let mut used_src = BTreeSet::new();
    let mut used_tgt = BTreeSet::new();
    let mut aligned = Vec::new();
    for (s, t, score) in candidates {
        if used_src.contains(&s) || used_tgt.contains(&t) {
            continue;
        }
        used_src.insert(s);
        used_tgt.insert(t);
        let arc = tgt_nodes
            .iter()
            .find(|n| n.index == t)
            .map(|n| n.deprel.clone())
            .unwrap_or_default();
        aligned.push(AlignedPair {
            src_index: s,
            tgt_index: t,
            score,
            arc,
        });
    }

    let nonaligned = src_nodes
        .iter()
        .filter(|n| !used_src.contains(&n.index))
        .map(|&n| (n, Side::Src))
        .chain(
            tgt_nodes
                .iter()
                .filter(|n| !used_tgt.contains(&n.index))
                .map(|&n| (n, Side::Tgt)),
        )
        .collect();

    AlignOutcome {
        aligned,
        nonaligned,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tok(index: usize, form: &str, deprel: &str) -> Token {
        Token::new(index, form, "_", 0, deprel)
    }

    #[test]
    fn reads_single_line() {
        let m = read_alignments("s1\t1\t1\t0.9\n").unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m["s1"].score(1, 1), Some(0.9));
    }

    #[test]
    fn duplicate_keeps_max() {
        let m = read_alignments("s1 1 1 0.4\ns1 1 1 0.7\n").unwrap();
        assert_eq!(m["s1"].len(), 1);
        assert_eq!(m["s1"].score(1, 1), Some(0.7));
        let m = read_alignments("s1 1 1 0.7\ns1 1 1 0.4\n").unwrap();
        assert_eq!(m["s1"].score(1, 1), Some(0.7));
    }

    #[test]
    fn out_of_range_score_rejected() {
        let err = read_alignments("# header\ns1 1 1 1.5\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
        assert!(read_alignments("s1 1 1 NaN\n").is_err());
        assert!(read_alignments("s1 1 1 -0.1\n").is_err());
    }

    #[test]
    fn bad_index_rejected() {
        assert!(matches!(
            read_alignments("s1 x 1 0.5\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(read_alignments("s1 0 1 0.5\n").is_err());
        assert!(read_alignments("s1 1.5 1 0.5\n").is_err());
        assert!(read_alignments("s1 1 1\n").is_err());
    }

    #[test]
    fn single_pair_above_threshold() {
        let he = tok(1, "he", "nsubj");
        let ta = tok(1, "ta", "nsubj");
        let m = AlignmentMatrix::from_entries("s", [(1, 1, 0.9)]).unwrap();
        let out = align_search(&[&he], &[&ta], &m, 0.5);
        assert_eq!(
            out.aligned,
            [AlignedPair {
                src_index: 1,
                tgt_index: 1,
                score: 0.9,
                arc: "nsubj".into()
            }]
        );
        assert!(out.nonaligned.is_empty());
    }

    #[test]
    fn nothing_aligns_at_theta_one() {
        let he = tok(1, "he", "nsubj");
        let ta = tok(1, "ta", "nsubj");
        let m = AlignmentMatrix::from_entries("s", [(1, 1, 0.9)]).unwrap();
        let out = align_search(&[&he], &[&ta], &m, 1.0);
        assert!(out.aligned.is_empty());
        assert_eq!(out.nonaligned, [(&he, Side::Src), (&ta, Side::Tgt)]);
        // strict inequality: a perfect score still fails at theta = 1
        let m = AlignmentMatrix::from_entries("s", [(1, 1, 1.0)]).unwrap();
        assert!(align_search(&[&he], &[&ta], &m, 1.0).aligned.is_empty());
    }

    #[test]
    fn greedy_takes_highest_score() {
        let a = tok(1, "a", "x");
        let b = tok(2, "b", "y");
        let x = tok(1, "x", "obj");
        let m = AlignmentMatrix::from_entries("s", [(1, 1, 0.8), (2, 1, 0.9)]).unwrap();
        let out = align_search(&[&a, &b], &[&x], &m, 0.5);
        assert_eq!(out.aligned.len(), 1);
        assert_eq!((out.aligned[0].src_index, out.aligned[0].tgt_index), (2, 1));
        assert_eq!(out.aligned[0].arc, "obj");
        assert_eq!(out.nonaligned, [(&a, Side::Src)]);
    }

    #[test]
    fn ties_break_on_indices() {
        let a = tok(1, "a", "x");
        let b = tok(2, "b", "x");
        let x = tok(1, "x", "x");
        let y = tok(2, "y", "x");
        let m =
            AlignmentMatrix::from_entries("s", [(2, 1, 0.7), (1, 2, 0.7), (1, 1, 0.7)]).unwrap();
        let out = align_search(&[&a, &b], &[&x, &y], &m, 0.5);
        let pairs: Vec<_> = out
            .aligned
            .iter()
            .map(|p| (p.src_index, p.tgt_index))
            .collect();
        assert_eq!(pairs, [(1, 1)]);
        assert_eq!(out.nonaligned.len(), 2);
    }

    #[test]
    fn entries_outside_layer_ignored() {
        let a = tok(1, "a", "x");
        let x = tok(2, "x", "x");
        let m = AlignmentMatrix::from_entries("s", [(1, 1, 0.99), (3, 2, 0.99)]).unwrap();
        let out = align_search(&[&a], &[&x], &m, 0.1);
        assert!(out.aligned.is_empty());
    }

    #[test]
    fn empty_inputs() {
        let m = AlignmentMatrix::new("s");
        let out = align_search(&[], &[], &m, 0.5);
        assert!(out.aligned.is_empty() && out.nonaligned.is_empty());
    }

    #[test]
    fn targets_of_filters_threshold() {
        let m =
            AlignmentMatrix::from_entries("s", [(1, 3, 0.9), (1, 1, 0.2), (2, 5, 0.8)]).unwrap();
        assert_eq!(m.targets_of(1, 0.5).collect::<Vec<_>>(), [3]);
        assert_eq!(m.targets_of(1, 0.1).collect::<Vec<_>>(), [1, 3]);
        assert!(m.check_bounds(2, 5).is_ok());
        assert!(m.check_bounds(2, 4).is_err());
    }

    fn layer_strategy() -> impl Strategy<Value = (usize, usize, Vec<(usize, usize, f64)>)> {
        (1usize..7, 1usize..7).prop_flat_map(|(ns, nt)| {
            let entry = (1..=ns, 1..=nt, 0.0f64..=1.0);
            (Just(ns), Just(nt), proptest::collection::vec(entry, 0..20))
        })
    }

    proptest! {
        #[test]
        fn matching_partitions_nodes((ns, nt, entries) in layer_strategy(), theta in 0.0f64..=1.0) {
            let src: Vec<Token> = (1..=ns).map(|i| tok(i, "s", "a")).collect();
            let tgt: Vec<Token> = (1..=nt).map(|i| tok(i, "t", "b")).collect();
            let src_refs: Vec<&Token> = src.iter().collect();
            let tgt_refs: Vec<&Token> = tgt.iter().collect();
            let m = AlignmentMatrix::from_entries("p", entries).unwrap();
            let out = align_search(&src_refs, &tgt_refs, &m, theta);

            prop_assert!(out.aligned.len() <= ns.min(nt));
            prop_assert_eq!(out.aligned.len() * 2 + out.nonaligned.len(), ns + nt);
            let mut seen_src: Vec<usize> = out.aligned.iter().map(|p| p.src_index).collect();
            seen_src.extend(out.nonaligned.iter().filter(|(_, s)| *s == Side::Src).map(|(t, _)| t.index));
            seen_src.sort_unstable();
            prop_assert_eq!(seen_src, (1..=ns).collect::<Vec<_>>());
            let mut seen_tgt: Vec<usize> = out.aligned.iter().map(|p| p.tgt_index).collect();
            seen_tgt.extend(out.nonaligned.iter().filter(|(_, s)| *s == Side::Tgt).map(|(t, _)| t.index));
            seen_tgt.sort_unstable();
            prop_assert_eq!(seen_tgt, (1..=nt).collect::<Vec<_>>());
            for p in &out.aligned {
                prop_assert!(p.score > theta);
            }

            let higher = align_search(&src_refs, &tgt_refs, &m, (theta + 0.1).min(1.0));
            prop_assert!(higher.aligned.len() <= out.aligned.len());
        }
    }
}
