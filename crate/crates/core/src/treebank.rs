//! Single-rooted UD dependency trees and their CoNLL-U representation.
//!
//! Only the ID, FORM, UPOS, HEAD and DEPREL columns survive parsing.
//! Multiword-token ranges (`3-4`) and empty nodes (`3.1`) are skipped.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of the artificial root in head columns.
pub const ROOT: usize = 0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    /// 1-based sentence position.
    pub index: usize,
    pub form: String,
    pub upos: String,
    /// Head position, `0` for the root.
    pub head: usize,
    pub deprel: String,
}

impl Token {
    pub fn new(
        index: usize,
        form: impl Into<String>,
        upos: impl Into<String>,
        head: usize,
        deprel: impl Into<String>,
    ) -> Self {
        Token {
            index,
            form: form.into(),
            upos: upos.into(),
            head,
            deprel: deprel.into(),
        }
    }
}

/// Strips a label subtype: `nsubj:pass` becomes `nsubj`.
pub fn coarse_label(deprel: &str) -> &str {
    deprel.split(':').next().unwrap_or(deprel)
}

/// A validated dependency tree for one sentence.
///
/// Construction checks that indices are contiguous, that exactly one token
/// attaches to the root and that head links are acyclic, so every value of
/// this type is a proper tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UdTree {
    sent_id: String,
    tokens: Vec<Token>,
    language_tag: String,
    // children[h] lists dependents of h in ascending order; children[0] holds the root.
    children: Vec<Vec<usize>>,
}

impl UdTree {
    pub fn new(
        sent_id: impl Into<String>,
        tokens: Vec<Token>,
        language_tag: impl Into<String>,
    ) -> Result<Self> {
        let sent_id = sent_id.into();
        let invalid = |reason: String| Error::InvalidTree {
            sent_id: sent_id.clone(),
            reason,
        };

        if tokens.is_empty() {
            return Err(invalid("empty sentence".into()));
        }
        let n = tokens.len();
        let mut children = vec![Vec::new(); n + 1];
        for (pos, token) in tokens.iter().enumerate() {
            if token.index != pos + 1 {
                return Err(invalid(format!(
                    "token indices not contiguous: expected {}, found {}",
                    pos + 1,
                    token.index
                )));
            }
            if token.head > n {
                return Err(invalid(format!(
                    "token {} has head {} beyond sentence length {n}",
                    token.index, token.head
                )));
            }
            if token.head == token.index {
                return Err(invalid(format!("token {} is its own head", token.index)));
            }
            if token.deprel.is_empty() {
                return Err(invalid(format!(
                    "token {} has an empty deprel",
                    token.index
                )));
            }
            children[token.head].push(token.index);
        }
        match children[ROOT].len() {
            0 => return Err(invalid("no root token".into())),
            1 => {}
            k => return Err(invalid(format!("{k} root tokens (multiple roots)"))),
        }

        // Every token must reach the root; anything else sits on a cycle.
        let mut reached = vec![false; n + 1];
        reached[ROOT] = true;
        let mut stack = vec![ROOT];
        let mut count = 0;
        while let Some(h) = stack.pop() {
            for &c in &children[h] {
                if !reached[c] {
                    reached[c] = true;
                    count += 1;
                    stack.push(c);
                }
            }
        }
        if count != n {
            let first = (1..=n).find(|&i| !reached[i]).unwrap_or(0);
            return Err(invalid(format!("cycle through token {first}")));
        }

        Ok(UdTree {
            sent_id,
            tokens,
            language_tag: language_tag.into(),
            children,
        })
    }

    /// Builds a tree from parallel form/head/deprel slices, with `_` as UPOS.
    pub fn from_heads(
        sent_id: impl Into<String>,
        forms: &[&str],
        heads: &[usize],
        deprels: &[&str],
    ) -> Result<Self> {
        let sent_id = sent_id.into();
        if forms.len() != heads.len() || forms.len() != deprels.len() {
            return Err(Error::InvalidTree {
                sent_id,
                reason: "column lengths differ".into(),
            });
        }
        let tokens = forms
            .iter()
            .zip(heads)
            .zip(deprels)
            .enumerate()
            .map(|(i, ((f, &h), d))| Token::new(i + 1, *f, "_", h, *d))
            .collect();
        UdTree::new(sent_id, tokens, "")
    }

    pub fn with_language_tag(mut self, tag: impl Into<String>) -> Self {
        self.language_tag = tag.into();
        self
    }

    pub fn sent_id(&self) -> &str {
        &self.sent_id
    }

    pub fn language_tag(&self) -> &str {
        &self.language_tag
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token at a 1-based index.
    pub fn token(&self, index: usize) -> Option<&Token> {
        index.checked_sub(1).and_then(|i| self.tokens.get(i))
    }

    /// The single token attached to ROOT.
    pub fn root(&self) -> &Token {
        &self.tokens[self.children[ROOT][0] - 1]
    }

    /// Dependents of `index` (0 = ROOT) in ascending order.
    pub fn children(&self, index: usize) -> Result<Vec<&Token>> {
        Ok(self
            .child_indices(index)?
            .iter()
            .map(|&c| &self.tokens[c - 1])
            .collect())
    }

    pub fn child_indices(&self, index: usize) -> Result<&[usize]> {
        self.children
            .get(index)
            .map(Vec::as_slice)
            .ok_or(Error::IndexOutOfRange {
                index,
                len: self.len(),
            })
    }

    /// Head of a token, `0` for the root. Panics on an invalid index.
    pub fn head(&self, index: usize) -> usize {
        self.tokens[index - 1].head
    }

    /// Number of edges between `index` and ROOT.
    pub fn depth(&self, index: usize) -> usize {
        let mut depth = 0;
        let mut cur = index;
        while cur != ROOT {
            cur = self.head(cur);
            depth += 1;
        }
        depth
    }

    /// Tokens on the unique tree path from `a` to `b`, both ends included.
    pub fn path(&self, a: usize, b: usize) -> Vec<usize> {
        let ancestors = |mut x: usize| {
            let mut chain = vec![x];
            while x != ROOT {
                x = self.head(x);
                chain.push(x);
            }
            chain
        };
        let up_a = ancestors(a);
        let up_b = ancestors(b);
        // Both chains end in ROOT; trim the shared suffix down to the lowest common ancestor.
        let mut shared = 0;
        while shared < up_a.len()
            && shared < up_b.len()
            && up_a[up_a.len() - 1 - shared] == up_b[up_b.len() - 1 - shared]
        {
            shared += 1;
        }
        let lca_pos_a = up_a.len() - shared;
        let lca_pos_b = up_b.len() - shared;
        let mut path: Vec<usize> = up_a[..=lca_pos_a].to_vec();
        path.extend(up_b[..lca_pos_b].iter().rev());
        path
    }

    /// Edge count of the shortest undirected path between two tokens.
    pub fn distance(&self, a: usize, b: usize) -> usize {
        self.path(a, b).len() - 1
    }

    /// Tokens of the subtree rooted at `index` in pre-order, children ascending.
    pub fn subtree(&self, index: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![index];
        while let Some(x) = stack.pop() {
            out.push(x);
            stack.extend(self.children[x].iter().rev());
        }
        out
    }
}

/// Parses every sentence block of a CoNLL-U document.
pub fn parse_conllu(text: &str) -> Result<Vec<UdTree>> {
    let mut trees = Vec::new();
    let mut block = Block::default();

    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            if !block.tokens.is_empty() {
                trees.push(block.finish(trees.len() + 1)?);
            }
            block = Block::default();
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                if key.trim() == "sent_id" {
                    block.sent_id = Some(value.trim().to_string());
                }
            }
            continue;
        }

        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 10 tab-separated columns, found {}", cols.len()),
            });
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let number = |name: &str, s: &str| {
            s.parse::<usize>().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("invalid {name} {s:?}"),
            })
        };
        block.tokens.push(Token {
            index: number("ID", cols[0])?,
            form: cols[1].to_string(),
            upos: cols[3].to_string(),
            head: number("HEAD", cols[6])?,
            deprel: cols[7].to_string(),
        });
    }
    if !block.tokens.is_empty() {
        trees.push(block.finish(trees.len() + 1)?);
    }
    Ok(trees)
}

#[derive(Default)]
struct Block {
    sent_id: Option<String>,
    tokens: Vec<Token>,
}

impl Block {
    fn finish(self, ordinal: usize) -> Result<UdTree> {
        let sent_id = self.sent_id.unwrap_or_else(|| ordinal.to_string());
        UdTree::new(sent_id, self.tokens, "")
    }
}

/// Writes one sentence block, including its trailing blank line.
pub fn serialize_conllu(tree: &UdTree) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# sent_id = {}", tree.sent_id());
    for t in tree.tokens() {
        let _ = writeln!(
            out,
            "{}\t{}\t_\t{}\t_\t_\t{}\t{}\t_\t_",
            t.index, t.form, t.upos, t.head, t.deprel
        );
    }
    out.push('\n');
    out
}
