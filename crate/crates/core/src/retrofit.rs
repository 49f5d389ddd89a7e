//! Retrofitting word vectors to a semantic graph, optionally with edge
//! weights scaled by affect similarity (c-strength / i-strength).
//!
//! Each sweep visits the vocabulary in order and replaces every word that
//! has in-vocabulary neighbors with
//!
//! ```text
//! q_i = (sum_j b_ij q_j + alpha q̂_i) / (sum_j b_ij + alpha)
//! ```
//!
//! where `b_ij` is the base edge weight times the affect strength of the
//! pair. Updates are Gauss-Seidel: later words see the new values of words
//! already visited in the same sweep.

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::embedding_io::{EmbeddingError, EmbeddingSet};
use crate::lexicon::{AffectLexicon, Scale};
use crate::matrix::Matrix;

#[derive(Debug, Error)]
pub enum RetrofitError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("affect strength weighting needs a lexicon")]
    MissingLexicon,
    #[error("invalid retrofit configuration: {0}")]
    InvalidConfig(String),
    #[error("embedding sets differ in shape or vocabulary")]
    ShapeMismatch,
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

/// Undirected word graph without self-loops or parallel edges.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ontology {
    words: Vec<String>,
    index: HashMap<String, usize>,
    adjacency: Vec<Vec<usize>>,
    edges: usize,
}

impl Ontology {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_edges<S: AsRef<str>>(edges: impl IntoIterator<Item = (S, S)>) -> Self {
        let mut onto = Self::new();
        for (a, b) in edges {
            onto.add_edge(a.as_ref(), b.as_ref());
        }
        onto
    }

    fn intern(&mut self, word: &str) -> usize {
        if let Some(&i) = self.index.get(word) {
            return i;
        }
        let i = self.words.len();
        self.words.push(word.to_owned());
        self.index.insert(word.to_owned(), i);
        self.adjacency.push(Vec::new());
        i
    }

    /// Adds the edge `a - b`. Returns false for self-loops and edges that
    /// already exist.
    pub fn add_edge(&mut self, a: &str, b: &str) -> bool {
        if a == b {
            return false;
        }
        let (ia, ib) = (self.intern(a), self.intern(b));
        if self.adjacency[ia].contains(&ib) {
            return false;
        }
        self.adjacency[ia].push(ib);
        self.adjacency[ib].push(ia);
        self.edges += 1;
        true
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    /// Neighbors of `word` in insertion order; empty if the word is unknown.
    pub fn neighbors<'a>(&'a self, word: &str) -> impl Iterator<Item = &'a str> + 'a {
        let adj: &[usize] = match self.index.get(word) {
            Some(&i) => &self.adjacency[i],
            None => &[],
        };
        adj.iter().map(move |&j| self.words[j].as_str())
    }

    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        self.neighbors(a).any(|n| n == b)
    }
}

/// Reads a graph file: each line is a head word followed by its neighbors,
/// whitespace-separated. Blank lines are skipped, self-loops are dropped
/// with a warning and repeated pairs are merged.
pub fn load_ontology(path: &Path) -> Result<Ontology, RetrofitError> {
    let text = fs::read_to_string(path).map_err(|source| RetrofitError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(parse_ontology(&text))
}

pub fn parse_ontology(text: &str) -> Ontology {
    let mut onto = Ontology::new();
    for (lineno, line) in text.lines().enumerate() {
        let mut toks = line.split_whitespace();
        let Some(head) = toks.next() else { continue };
        for other in toks {
            if other == head {
                log::warn!("line {}: dropping self-loop on {head:?}", lineno + 1);
                continue;
            }
            onto.add_edge(head, other);
        }
    }
    onto
}

/// Largest possible Euclidean distance between two affect vectors of
/// dimension `f` on `scale`.
fn max_distance(scale: Scale, f: usize) -> f64 {
    (f as f64 * scale.max_dist() * scale.max_dist()).sqrt()
}

/// Combined affect strength in `[0, 1]`: one minus the Euclidean distance
/// between the two vectors relative to the largest distance the scale
/// allows.
pub fn cstrength(a: &[f64], b: &[f64], scale: Scale) -> f64 {
    let dist = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    1.0 - dist / max_distance(scale, a.len())
}

/// Per-dimension affect strength in `[0, F]`: the sum over dimensions of one
/// minus the absolute difference relative to the scale width.
pub fn istrength(a: &[f64], b: &[f64], scale: Scale) -> f64 {
    let md = scale.max_dist();
    a.iter().zip(b).map(|(x, y)| 1.0 - (x - y).abs() / md).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strength {
    #[default]
    None,
    /// [`cstrength`]
    Combined,
    /// [`istrength`]
    Individual,
}

impl Strength {
    pub fn eval(self, a: &[f64], b: &[f64], scale: Scale) -> f64 {
        match self {
            Strength::None => 1.0,
            Strength::Combined => cstrength(a, b, scale),
            Strength::Individual => istrength(a, b, scale),
        }
    }
}

/// Base edge weight before strength scaling.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum BetaRule {
    /// `1 / deg(i)`, counting only neighbors present in the vocabulary.
    #[default]
    InverseDegree,
    Constant(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepMode {
    /// In-place updates in vocabulary order. Deterministic.
    #[default]
    GaussSeidel,
    /// Every word updated from the previous sweep's values; runs in
    /// parallel and reaches the same fixed point along a different path.
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrofitConfig {
    /// Anchor weight toward the original vector, shared by all words.
    pub alpha: f64,
    pub beta: BetaRule,
    pub strength: Strength,
    /// Maximum number of sweeps.
    pub iterations: usize,
    /// Stop early once no coordinate moves by more than this in a sweep.
    pub convergence_tol: Option<f64>,
    pub mode: SweepMode,
}

impl Default for RetrofitConfig {
    fn default() -> Self {
        RetrofitConfig {
            alpha: 1.0,
            beta: BetaRule::InverseDegree,
            strength: Strength::None,
            iterations: 10,
            convergence_tol: None,
            mode: SweepMode::GaussSeidel,
        }
    }
}

impl RetrofitConfig {
    pub fn validate(&self) -> Result<(), RetrofitError> {
        let bad = |m: &str| Err(RetrofitError::InvalidConfig(m.to_owned()));
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return bad("alpha must be positive");
        }
        if let BetaRule::Constant(c) = self.beta {
            if !(c.is_finite() && c > 0.0) {
                return bad("constant beta must be positive");
            }
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1");
        }
        if let Some(tol) = self.convergence_tol {
            if tol.is_nan() || tol < 0.0 {
                return bad("convergence tolerance must be non-negative");
            }
        }
        Ok(())
    }
}

/// Weighted in-vocabulary adjacency for one retrofit problem.
#[derive(Debug, Clone)]
struct WeightedGraph {
    /// `(neighbor row, b_ij)` per vocabulary row.
    neighbors: Vec<Vec<(usize, f64)>>,
    /// Per-row factor `c_i` with `c_i b_ij == c_j b_ji`, so that the update
    /// is an exact coordinate minimization of [`WeightedGraph::objective`].
    symmetrizer: Vec<f64>,
}

impl WeightedGraph {
    fn build(
        set: &EmbeddingSet,
        onto: &Ontology,
        lex: Option<&AffectLexicon>,
        cfg: &RetrofitConfig,
    ) -> Result<Self, RetrofitError> {
        cfg.validate()?;
        let lex = match (cfg.strength, lex) {
            (Strength::None, _) => None,
            (_, Some(l)) => Some(l),
            (_, None) => return Err(RetrofitError::MissingLexicon),
        };
        let words = set.words();
        let mut neighbors = Vec::with_capacity(words.len());
        let mut symmetrizer = Vec::with_capacity(words.len());
        for word in words {
            let rows: Vec<usize> = onto
                .neighbors(word)
                .filter_map(|n| set.index_of(n))
                .collect();
            let deg = rows.len();
            let (base, c) = match cfg.beta {
                BetaRule::InverseDegree if deg > 0 => (1.0 / deg as f64, deg as f64),
                BetaRule::InverseDegree => (1.0, 1.0),
                BetaRule::Constant(b) => (b, 1.0),
            };
            let weighted = rows
                .into_iter()
                .map(|j| {
                    let s = match lex {
                        Some(l) => cfg.strength.eval(
                            l.affect_vector(word),
                            l.affect_vector(&words[j]),
                            l.scale(),
                        ),
                        None => 1.0,
                    };
                    (j, base * s)
                })
                .collect();
            neighbors.push(weighted);
            symmetrizer.push(c);
        }
        Ok(WeightedGraph {
            neighbors,
            symmetrizer,
        })
    }

    /// Writes the update for row `i` into `out` using the rows of `q`.
    /// Returns false when the word has no neighbors.
    fn update_row(
        &self,
        i: usize,
        q: &Matrix,
        q_hat: &Matrix,
        alpha: f64,
        out: &mut [f64],
    ) -> bool {
        let nbrs = &self.neighbors[i];
        if nbrs.is_empty() {
            return false;
        }
        let mut total = alpha;
        for (o, h) in out.iter_mut().zip(q_hat.row(i)) {
            *o = alpha * h;
        }
        for &(j, b) in nbrs {
            total += b;
            for (o, v) in out.iter_mut().zip(q.row(j)) {
                *o += b * v;
            }
        }
        out.iter_mut().for_each(|o| *o /= total);
        true
    }

    fn sweep_gauss_seidel(&self, q: &mut Matrix, q_hat: &Matrix, alpha: f64) -> f64 {
        let mut buf = vec![0.0; q.cols()];
        let mut max_change: f64 = 0.0;
        for i in 0..q.rows() {
            if self.update_row(i, q, q_hat, alpha, &mut buf) {
                let row = q.row_mut(i);
                for (r, b) in row.iter_mut().zip(&buf) {
                    max_change = max_change.max((*r - b).abs());
                    *r = *b;
                }
            }
        }
        max_change
    }

    fn sweep_jacobi(&self, q: &mut Matrix, q_hat: &Matrix, alpha: f64) -> f64 {
        let d = q.cols();
        let mut next = q.clone();
        let current = &*q;
        let max_change = next
            .as_mut_slice()
            .par_chunks_mut(d)
            .enumerate()
            .map(|(i, dst)| {
                if !self.update_row(i, current, q_hat, alpha, dst) {
                    return 0.0;
                }
                dst.iter()
                    .zip(current.row(i))
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max);
        *q = next;
        max_change
    }

    /// `sum_i c_i alpha |q_i - q̂_i|^2 + 1/2 sum_i sum_j c_i b_ij |q_i - q_j|^2`.
    ///
    /// Every undirected edge is counted once with its symmetric weight
    /// `c_i b_ij`, which makes each update above the exact minimizer of this
    /// function over `q_i`.
    fn objective(&self, q: &Matrix, q_hat: &Matrix, alpha: f64) -> f64 {
        let sq =
            |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
        let mut total = 0.0;
        for (i, nbrs) in self.neighbors.iter().enumerate() {
            let c = self.symmetrizer[i];
            let mut term = alpha * sq(q.row(i), q_hat.row(i));
            for &(j, b) in nbrs {
                term += 0.5 * b * sq(q.row(i), q.row(j));
            }
            total += c * term;
        }
        total
    }
}

/// Result of a retrofit run.
#[derive(Debug, Clone)]
pub struct RetrofitOutcome {
    pub embeddings: EmbeddingSet,
    pub sweeps: usize,
    /// Largest coordinate change in the final sweep.
    pub last_change: f64,
    /// True when the run stopped on `convergence_tol`.
    pub converged: bool,
}

/// Step-by-step retrofit driver.
#[derive(Debug, Clone)]
pub struct Retrofitter<'a> {
    original: &'a EmbeddingSet,
    graph: WeightedGraph,
    current: Matrix,
    cfg: RetrofitConfig,
}

impl<'a> Retrofitter<'a> {
    pub fn new(
        set: &'a EmbeddingSet,
        onto: &Ontology,
        lex: Option<&AffectLexicon>,
        cfg: RetrofitConfig,
    ) -> Result<Self, RetrofitError> {
        let graph = WeightedGraph::build(set, onto, lex, &cfg)?;
        Ok(Retrofitter {
            original: set,
            current: set.matrix().clone(),
            graph,
            cfg,
        })
    }

    /// Runs one sweep and returns the largest coordinate change.
    pub fn sweep(&mut self) -> f64 {
        let (q_hat, alpha) = (self.original.matrix(), self.cfg.alpha);
        match self.cfg.mode {
            SweepMode::GaussSeidel => {
                self.graph
                    .sweep_gauss_seidel(&mut self.current, q_hat, alpha)
            }
            SweepMode::Jacobi => self.graph.sweep_jacobi(&mut self.current, q_hat, alpha),
        }
    }

    pub fn current(&self) -> &Matrix {
        &self.current
    }

    pub fn objective(&self) -> f64 {
        self.graph
            .objective(&self.current, self.original.matrix(), self.cfg.alpha)
    }

    /// Sweeps until `iterations` is reached or the tolerance is met.
    pub fn run(mut self) -> Result<RetrofitOutcome, RetrofitError> {
        let mut sweeps = 0;
        let mut last_change = 0.0;
        let mut converged = false;
        while sweeps < self.cfg.iterations {
            last_change = self.sweep();
            sweeps += 1;
            log::debug!("sweep {sweeps}: max change {last_change:.3e}");
            if self
                .cfg
                .convergence_tol
                .is_some_and(|tol| last_change < tol)
            {
                converged = true;
                break;
            }
        }
        let embeddings = EmbeddingSet::from_parts(self.original.vocab().clone(), self.current)?;
        Ok(RetrofitOutcome {
            embeddings,
            sweeps,
            last_change,
            converged,
        })
    }
}

/// Retrofits `set` to `onto`. A lexicon is required when `cfg.strength` is
/// not [`Strength::None`].
pub fn retrofit(
    set: &EmbeddingSet,
    onto: &Ontology,
    lex: Option<&AffectLexicon>,
    cfg: RetrofitConfig,
) -> Result<EmbeddingSet, RetrofitError> {
    Ok(Retrofitter::new(set, onto, lex, cfg)?.run()?.embeddings)
}

/// Value of the retrofit objective for `current` relative to `original`.
pub fn objective(
    original: &EmbeddingSet,
    current: &EmbeddingSet,
    onto: &Ontology,
    lex: Option<&AffectLexicon>,
    cfg: &RetrofitConfig,
) -> Result<f64, RetrofitError> {
    if original.words() != current.words() || original.dim() != current.dim() {
        return Err(RetrofitError::ShapeMismatch);
    }
    let graph = WeightedGraph::build(original, onto, lex, cfg)?;
    Ok(graph.objective(current.matrix(), original.matrix(), cfg.alpha))
}
