//! Shared test helpers: random corpora and independent reference
//! implementations used as oracles.
#![allow(dead_code)]

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;
use udforest::{AlignmentMatrix, Token, UdTree};

const LABELS: &[&str] = &[
    "nsubj",
    "obj",
    "obl",
    "amod",
    "det",
    "aux",
    "case",
    "nmod:poss",
    "advmod",
];
const UPOS: &[&str] = &["NOUN", "VERB", "PRON", "ADJ", "ADP", "DET", "AUX"];

/// Random valid tree with `n` tokens: nodes are attached in a random order,
/// each to an already attached node.
pub fn random_tree<R: Rng>(rng: &mut R, n: usize, sent_id: &str, prefix: &str) -> UdTree {
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(rng);
    let mut heads = vec![0; n + 1];
    for k in 1..n {
        heads[order[k]] = order[rng.random_range(0..k)];
    }
    let tokens = (1..=n)
        .map(|i| {
            let deprel = if heads[i] == 0 {
                "root".to_string()
            } else {
                LABELS[rng.random_range(0..LABELS.len())].to_string()
            };
            Token::new(
                i,
                format!("{prefix}{i}"),
                UPOS[rng.random_range(0..UPOS.len())],
                heads[i],
                deprel,
            )
        })
        .collect();
    UdTree::new(sent_id, tokens, prefix).expect("generated tree is valid")
}

/// Random sparse alignment. Scores mix grid values (to exercise ties and
/// the strict threshold) with uniform draws.
pub fn random_alignment<R: Rng>(
    rng: &mut R,
    sent_id: &str,
    src_n: usize,
    tgt_n: usize,
) -> AlignmentMatrix {
    let density: f64 = rng.random_range(0.1..0.9);
    let mut m = AlignmentMatrix::new(sent_id);
    for i in 1..=src_n {
        for j in 1..=tgt_n {
            if rng.random_bool(density) {
                let score = if rng.random_bool(0.3) {
                    [0.0, 0.25, 0.5, 0.75, 1.0][rng.random_range(0..5)]
                } else {
                    rng.random_range(0.0..=1.0)
                };
                m.insert(i, j, score).unwrap();
            }
        }
    }
    m
}

pub struct RandomPair {
    pub src: UdTree,
    pub tgt: UdTree,
    pub alignment: AlignmentMatrix,
}

pub fn random_pair<R: Rng>(rng: &mut R, id: usize, max_len: usize) -> RandomPair {
    let sent_id = format!("r{id}");
    let ns = rng.random_range(1..=max_len);
    let nt = rng.random_range(1..=max_len);
    RandomPair {
        src: random_tree(rng, ns, &sent_id, "s"),
        tgt: random_tree(rng, nt, &sent_id, "t"),
        alignment: random_alignment(rng, &sent_id, ns, nt),
    }
}

/// A tree and a copy with renamed forms: same heads and labels.
pub fn isomorphic_pair<R: Rng>(rng: &mut R, id: usize, max_len: usize) -> (UdTree, UdTree) {
    let n = rng.random_range(1..=max_len);
    let sent_id = format!("i{id}");
    let src = random_tree(rng, n, &sent_id, "s");
    let tokens = src
        .tokens()
        .iter()
        .map(|t| {
            Token::new(
                t.index,
                format!("t{}", t.index),
                t.upos.clone(),
                t.head,
                t.deprel.clone(),
            )
        })
        .collect();
    let tgt = UdTree::new(sent_id, tokens, "t").unwrap();
    (src, tgt)
}

pub fn identity_alignment(sent_id: &str, n: usize, score: f64) -> AlignmentMatrix {
    AlignmentMatrix::from_entries(sent_id, (1..=n).map(|i| (i, i, score))).unwrap()
}

/// All-pairs shortest path lengths by breadth-first search from every token
/// over the undirected head links. Index 0 unused.
#[allow(clippy::needless_range_loop)]
pub fn bfs_all_pairs(tree: &UdTree) -> Vec<Vec<usize>> {
    let n = tree.len();
    let mut adj = vec![Vec::new(); n + 1];
    for t in tree.tokens() {
        if t.head != 0 {
            adj[t.index].push(t.head);
            adj[t.head].push(t.index);
        }
    }
    let mut dist = vec![vec![usize::MAX; n + 1]; n + 1];
    for s in 1..=n {
        let mut queue = VecDeque::from([s]);
        dist[s][s] = 0;
        while let Some(x) = queue.pop_front() {
            for &y in &adj[x] {
                if dist[s][y] == usize::MAX {
                    dist[s][y] = dist[s][x] + 1;
                    queue.push_back(y);
                }
            }
        }
    }
    dist
}

/// Straight transcription of the forest construction pseudocode, with the
/// resolved readings applied: ROOT-only unconditional merge, removal from
/// both node lists, descending-score scan of M, and verbatim subtree copies.
/// Emits the forest JSONL line directly, independent of the library's
/// record types.
pub mod algorithm_one {
    use std::collections::VecDeque;

    use udforest::{AlignmentMatrix, UdTree};

    struct Node {
        form: String,
        origin: &'static str,
        src_index: Option<usize>,
        tgt_index: Option<usize>,
        deprel: String,
        parent: Option<usize>,
    }

    struct Opt {
        id: usize,
        next_src: Vec<usize>,
        next_tgt: Vec<usize>,
    }

    fn get_child_nodes(tree: &UdTree, w: usize) -> Vec<usize> {
        tree.tokens()
            .iter()
            .filter(|t| t.head == w)
            .map(|t| t.index)
            .collect()
    }

    fn align_search(
        mut nodes_a: Vec<usize>,
        mut nodes_b: Vec<usize>,
        m: &[(usize, usize, f64)],
        theta: f64,
    ) -> (Vec<(usize, usize)>, Vec<usize>, Vec<usize>) {
        let mut aligned_pairs = Vec::new();
        for &(i, j, score) in m {
            if score > theta {
                let pa = nodes_a.iter().position(|&x| x == i);
                let pb = nodes_b.iter().position(|&x| x == j);
                if let (Some(pa), Some(pb)) = (pa, pb) {
                    aligned_pairs.push((i, j));
                    nodes_a.remove(pa);
                    nodes_b.remove(pb);
                }
            }
        }
        (aligned_pairs, nodes_a, nodes_b)
    }

    fn copy_into(forest: &mut Vec<Node>, tree: &UdTree, w: usize, parent: usize, from_src: bool) {
        let tok = &tree.tokens()[w - 1];
        forest.push(Node {
            form: tok.form.clone(),
            origin: if from_src { "SRC_COPY" } else { "TGT_COPY" },
            src_index: from_src.then_some(w),
            tgt_index: (!from_src).then_some(w),
            deprel: tok.deprel.clone(),
            parent: Some(parent),
        });
        let me = forest.len() - 1;
        for c in get_child_nodes(tree, w) {
            copy_into(forest, tree, c, me, from_src);
        }
    }

    pub fn construct(src: &UdTree, tgt: &UdTree, m: &AlignmentMatrix, theta: f64) -> String {
        let mut entries: Vec<(usize, usize, f64)> = m.iter().collect();
        entries.sort_by(|a, b| {
            b.2.partial_cmp(&a.2)
                .unwrap()
                .then(a.0.cmp(&b.0))
                .then(a.1.cmp(&b.1))
        });

        let mut forest: Vec<Node> = Vec::new();
        let mut opt_nodes: VecDeque<Opt> = VecDeque::new();
        let mut is_root = true;
        while is_root || !opt_nodes.is_empty() {
            if is_root {
                forest.push(Node {
                    form: "ROOT".into(),
                    origin: "ROOT",
                    src_index: None,
                    tgt_index: None,
                    deprel: String::new(),
                    parent: None,
                });
                opt_nodes.push_back(Opt {
                    id: 0,
                    next_src: get_child_nodes(src, 0),
                    next_tgt: get_child_nodes(tgt, 0),
                });
                is_root = false;
            } else {
                let cur = opt_nodes.pop_front().unwrap();
                let (mut pairs, rest_a, rest_b) =
                    align_search(cur.next_src, cur.next_tgt, &entries, theta);
                pairs.sort_by_key(|&(_, j)| j);
                for (i, j) in pairs {
                    let w_tgt = &tgt.tokens()[j - 1];
                    forest.push(Node {
                        form: w_tgt.form.clone(),
                        origin: "MERGED",
                        src_index: Some(i),
                        tgt_index: Some(j),
                        deprel: w_tgt.deprel.clone(),
                        parent: Some(cur.id),
                    });
                    opt_nodes.push_back(Opt {
                        id: forest.len() - 1,
                        next_src: get_child_nodes(src, i),
                        next_tgt: get_child_nodes(tgt, j),
                    });
                }
                for w in rest_a {
                    copy_into(&mut forest, src, w, cur.id, true);
                }
                for w in rest_b {
                    copy_into(&mut forest, tgt, w, cur.id, false);
                }
            }
        }

        let merged = forest.iter().filter(|n| n.origin == "MERGED").count();
        let text: Vec<String> = src
            .tokens()
            .iter()
            .map(|t| {
                forest
                    .iter()
                    .find(|n| n.origin == "MERGED" && n.src_index == Some(t.index))
                    .map_or(t.form.clone(), |n| n.form.clone())
            })
            .collect();

        let opt = |x: Option<usize>| x.map_or("null".to_string(), |v| v.to_string());
        let js = |s: &str| serde_json::to_string(s).unwrap();
        let nodes: Vec<String> = forest
            .iter()
            .enumerate()
            .map(|(id, n)| {
                format!(
                    "{{\"id\":{id},\"form\":{},\"origin\":\"{}\",\"src_index\":{},\"tgt_index\":{},\"deprel\":{},\"parent\":{}}}",
                    js(&n.form),
                    n.origin,
                    opt(n.src_index),
                    opt(n.tgt_index),
                    js(&n.deprel),
                    opt(n.parent)
                )
            })
            .collect();
        let text: Vec<String> = text.iter().map(|t| js(t)).collect();
        format!(
            "{{\"sent_id\":{},\"src_len\":{},\"tgt_len\":{},\"merged_count\":{merged},\"nodes\":[{}],\"text\":[{}],\"relations\":[]}}\n",
            js(src.sent_id()),
            src.len(),
            tgt.len(),
            nodes.join(","),
            text.join(",")
        )
    }
}
