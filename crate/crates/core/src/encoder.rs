//! Forward-only reference of the forest encoder and relation scorer.
//!
//! Each graph attention layer computes, for node `i` with neighbours `N(i)`
//! (self included):
//!
//! ```text
//! score(i, j) = gelu(u · [W1 r_i ; W2 r_j])
//! rho(i, .)   = softmax over j in N(i) of score(i, j)
//! out_i       = sigmoid(sum_j rho(i, j) W3 r_j)
//! ```
//!
//! [`encode`] stacks the layers and concatenates the input embeddings with
//! the last layer's output. [`biaffine_score`] turns two rows of that
//! encoding into a label distribution via a bilinear term plus a linear term
//! over the mean-pooled graph.

use ndarray::{concatenate, s, Array1, Array2, Array3, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Undirected graph with self-loops and one embedding row per node.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestGraph {
    adjacency: Array2<bool>,
    embeddings: Array2<f64>,
    neighbours: Vec<Vec<usize>>,
}

impl ForestGraph {
    pub fn new(adjacency: Array2<bool>, embeddings: Array2<f64>) -> Result<Self> {
        let n = adjacency.nrows();
        if adjacency.ncols() != n {
            return Err(Error::Shape(format!(
                "adjacency is {}x{}",
                n,
                adjacency.ncols()
            )));
        }
        if embeddings.nrows() != n {
            return Err(Error::Shape(format!(
                "{} embedding rows for {n} nodes",
                embeddings.nrows()
            )));
        }
        for i in 0..n {
            if !adjacency[[i, i]] {
                return Err(Error::Shape(format!("node {i} lacks a self-loop")));
            }
            for j in 0..i {
                if adjacency[[i, j]] != adjacency[[j, i]] {
                    return Err(Error::Shape(format!(
                        "adjacency not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let neighbours = (0..n)
            .map(|i| (0..n).filter(|&j| adjacency[[i, j]]).collect())
            .collect();
        Ok(ForestGraph {
            adjacency,
            embeddings,
            neighbours,
        })
    }

    /// Symmetrizes `edges` and adds every self-loop.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], embeddings: Array2<f64>) -> Result<Self> {
        let mut adjacency = Array2::from_elem((n, n), false);
        for i in 0..n {
            adjacency[[i, i]] = true;
        }
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::IndexOutOfRange {
                    index: a.max(b),
                    len: n,
                });
            }
            adjacency[[a, b]] = true;
            adjacency[[b, a]] = true;
        }
        ForestGraph::new(adjacency, embeddings)
    }

    pub fn n(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn dim(&self) -> usize {
        self.embeddings.ncols()
    }

    pub fn adjacency(&self) -> &Array2<bool> {
        &self.adjacency
    }

    pub fn embeddings(&self) -> &Array2<f64> {
        &self.embeddings
    }

    pub fn neighbours(&self, i: usize) -> &[usize] {
        &self.neighbours[i]
    }

    /// Undirected edges `(i, j)` with `i < j`, self-loops excluded.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.adjacency[[i, j]])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GatLayerParams {
    pub w1: Array2<f64>,
    pub w2: Array2<f64>,
    pub w3: Array2<f64>,
    /// Attention vector of length `2d`: first half scores the centre node.
    pub u: Array1<f64>,
}

impl GatLayerParams {
    fn check(&self, d: usize) -> Result<()> {
        for (name, w) in [("W1", &self.w1), ("W2", &self.w2), ("W3", &self.w3)] {
            if w.dim() != (d, d) {
                return Err(Error::Shape(format!(
                    "{name} is {:?}, expected ({d}, {d})",
                    w.dim()
                )));
            }
        }
        if self.u.len() != 2 * d {
            return Err(Error::Shape(format!(
                "U has length {}, expected {}",
                self.u.len(),
                2 * d
            )));
        }
        Ok(())
    }
}

/// Encoder and scorer weights.
///
/// `rel_bilinear` has shape `(2d, L, 2d)` and `rel_linear` `(L, 2d)`, since
/// both act on rows of the `2d`-wide encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    dim: usize,
    labels: usize,
    layers: Vec<GatLayerParams>,
    rel_bilinear: Array3<f64>,
    rel_linear: Array2<f64>,
}

pub const DEFAULT_LAYERS: usize = 2;

impl EncoderParams {
    pub fn new(
        dim: usize,
        layers: Vec<GatLayerParams>,
        rel_bilinear: Array3<f64>,
        rel_linear: Array2<f64>,
    ) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape(
                "at least one attention layer is required".into(),
            ));
        }
        if dim == 0 {
            return Err(Error::Shape("dimension must be positive".into()));
        }
        for layer in &layers {
            layer.check(dim)?;
        }
        let labels = rel_linear.nrows();
        if labels == 0 {
            return Err(Error::Shape("label count must be positive".into()));
        }
        if rel_linear.ncols() != 2 * dim {
            return Err(Error::Shape(format!(
                "linear relation weights are {:?}, expected ({labels}, {})",
                rel_linear.dim(),
                2 * dim
            )));
        }
        if rel_bilinear.dim() != (2 * dim, labels, 2 * dim) {
            return Err(Error::Shape(format!(
                "bilinear relation weights are {:?}, expected ({}, {labels}, {})",
                rel_bilinear.dim(),
                2 * dim,
                2 * dim
            )));
        }
        Ok(EncoderParams {
            dim,
            labels,
            layers,
            rel_bilinear,
            rel_linear,
        })
    }

    /// Draws every weight uniformly from `[-1/sqrt(d), 1/sqrt(d)]` with a
    /// ChaCha8 stream seeded by `seed`. Values are drawn layer by layer
    /// (W1, W2, W3, U, each row-major), then the bilinear and the linear
    /// relation weights.
    pub fn random(dim: usize, labels: usize, layer_count: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = 1.0 / (dim.max(1) as f64).sqrt();
        let mut draw = move || rng.random_range(-bound..=bound);
        let layers = (0..layer_count)
            .map(|_| GatLayerParams {
                w1: Array2::from_shape_simple_fn((dim, dim), &mut draw),
                w2: Array2::from_shape_simple_fn((dim, dim), &mut draw),
                w3: Array2::from_shape_simple_fn((dim, dim), &mut draw),
                u: Array1::from_shape_simple_fn(2 * dim, &mut draw),
            })
            .collect();
        let rel_bilinear = Array3::from_shape_simple_fn((2 * dim, labels, 2 * dim), &mut draw);
        let rel_linear = Array2::from_shape_simple_fn((labels, 2 * dim), &mut draw);
        EncoderParams::new(dim, layers, rel_bilinear, rel_linear)
    }

    pub fn zeros(dim: usize, labels: usize, layer_count: usize) -> Result<Self> {
        let layers = (0..layer_count)
            .map(|_| GatLayerParams {
                w1: Array2::zeros((dim, dim)),
                w2: Array2::zeros((dim, dim)),
                w3: Array2::zeros((dim, dim)),
                u: Array1::zeros(2 * dim),
            })
            .collect();
        EncoderParams::new(
            dim,
            layers,
            Array3::zeros((2 * dim, labels, 2 * dim)),
            Array2::zeros((labels, 2 * dim)),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> usize {
        self.labels
    }

    pub fn layers(&self) -> &[GatLayerParams] {
        &self.layers
    }

    pub fn rel_bilinear(&self) -> &Array3<f64> {
        &self.rel_bilinear
    }

    pub fn rel_linear(&self) -> &Array2<f64> {
        &self.rel_linear
    }
}

/// Exact (erf-based) GeLU.
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Numerically stable softmax.
pub fn softmax(logits: ArrayView1<f64>) -> Array1<f64> {
    let max = logits.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    let exp = logits.mapv(|x| (x - max).exp());
    let total = exp.sum();
    exp / total
}

#[derive(Debug, Clone, PartialEq)]
pub struct GatOutput {
    /// `n x d` layer output.
    pub hidden: Array2<f64>,
    /// `n x n` attention weights, zero outside each neighbour set.
    pub attention: Array2<f64>,
}

/// One attention layer over arbitrary node representations `reps` (`n x d`).
pub fn gat_forward(
    graph: &ForestGraph,
    reps: ArrayView2<f64>,
    layer: &GatLayerParams,
) -> Result<GatOutput> {
    let n = graph.n();
    let d = reps.ncols();
    if reps.nrows() != n {
        return Err(Error::Shape(format!(
            "{} representation rows for {n} nodes",
            reps.nrows()
        )));
    }
    layer.check(d)?;

    // u . [W1 r_i ; W2 r_j] splits into a centre term and a neighbour term.
    let centre = reps.dot(&layer.w1.t()).dot(&layer.u.slice(s![..d]));
    let neighbour = reps.dot(&layer.w2.t()).dot(&layer.u.slice(s![d..]));
    let values = reps.dot(&layer.w3.t());

    let mut attention = Array2::zeros((n, n));
    let mut hidden = Array2::zeros((n, d));
    for i in 0..n {
        let nbrs = graph.neighbours(i);
        let scores: Array1<f64> = nbrs
            .iter()
            .map(|&j| gelu(centre[i] + neighbour[j]))
            .collect();
        let rho = softmax(scores.view());
        let mut acc = Array1::<f64>::zeros(d);
        for (&j, &w) in nbrs.iter().zip(rho.iter()) {
            attention[[i, j]] = w;
            acc.scaled_add(w, &values.row(j));
        }
        hidden.row_mut(i).assign(&acc.mapv(sigmoid));
    }
    Ok(GatOutput { hidden, attention })
}

/// One attention layer applied to the graph's own embeddings.
pub fn gat_layer(graph: &ForestGraph, layer: &GatLayerParams) -> Result<GatOutput> {
    gat_forward(graph, graph.embeddings().view(), layer)
}

/// Runs every layer and returns `[H ; U]`, an `n x 2d` matrix.
pub fn encode(graph: &ForestGraph, params: &EncoderParams) -> Result<Array2<f64>> {
    if graph.dim() != params.dim() {
        return Err(Error::Shape(format!(
            "embedding width {} but encoder dimension {}",
            graph.dim(),
            params.dim()
        )));
    }
    let mut reps = graph.embeddings().clone();
    for layer in params.layers() {
        reps = gat_forward(graph, reps.view(), layer)?.hidden;
    }
    Ok(concatenate(Axis(1), &[graph.embeddings().view(), reps.view()]).expect("row counts match"))
}

/// Label distribution for the subject/object node pair.
pub fn biaffine_score(
    encoding: ArrayView2<f64>,
    subj: usize,
    obj: usize,
    params: &EncoderParams,
) -> Result<Array1<f64>> {
    let n = encoding.nrows();
    let width = 2 * params.dim();
    if encoding.ncols() != width {
        return Err(Error::Shape(format!(
            "encoding width {} but expected {width}",
            encoding.ncols()
        )));
    }
    for node in [subj, obj] {
        if node >= n {
            return Err(Error::IndexOutOfRange {
                index: node,
                len: n,
            });
        }
    }
    if n == 0 {
        return Err(Error::Empty("encoding"));
    }
    let h_s = encoding.row(subj);
    let h_o = encoding.row(obj);
    let pooled = encoding.mean_axis(Axis(0)).expect("non-empty encoding");

    let logits: Array1<f64> = (0..params.labels())
        .map(|l| {
            let w = params.rel_bilinear().slice(s![.., l, ..]);
            h_s.dot(&w.dot(&h_o)) + params.rel_linear().row(l).dot(&pooled)
        })
        .collect();
    Ok(softmax(logits.view()))
}

/// Maps a surface form to a fixed-width vector.
pub trait Embedder {
    fn dim(&self) -> usize;
    fn embed(&self, form: &str) -> Vec<f64>;
}

/// Deterministic stand-in for a contextual encoder: every form gets a vector
/// drawn uniformly from `[-1, 1]` by a generator seeded with the form's
/// FNV-1a hash mixed with `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashEmbedder {
    pub dim: usize,
    pub seed: u64,
}

impl HashEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        HashEmbedder { dim, seed }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

impl Embedder for HashEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, form: &str) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(form.as_bytes()) ^ self.seed);
        (0..self.dim)
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect()
    }
}
