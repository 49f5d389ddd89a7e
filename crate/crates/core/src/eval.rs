//! Intrinsic evaluation: cosine nearest neighbors, Spearman correlation
//! against word-similarity benchmarks, and the Polarity-Noise@k /
//! Granular-Noise@k neighborhood metrics.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rayon::prelude::*;
use thiserror::Error;

use crate::embedding_io::EmbeddingSet;
use crate::lexicon::AffectLexicon;
use crate::matrix::dot;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("cosine is undefined for a zero vector")]
    ZeroVector,
    #[error("word {0:?} is not in the vocabulary")]
    UnknownWord(String),
    #[error("k must be at least 1")]
    InvalidK,
    #[error("inputs have different lengths ({0} and {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 observations, got {0}")]
    TooFewObservations(usize),
    #[error("rank correlation is undefined when one input is constant")]
    ZeroVariance,
    #[error("dataset {dataset:?} has fewer than 2 in-vocabulary pairs")]
    DatasetEmptyAfterFiltering { dataset: String },
    #[error("dataset {0:?} has no pairs")]
    EmptyDataset(String),
    #[error("affect dimension {dim} out of range for a {available}-dimensional lexicon")]
    BadDimension { dim: usize, available: usize },
}

/// Cosine similarity, clamped to `[-1, 1]`.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, EvalError> {
    let (nu, nv) = (dot(u, u), dot(v, v));
    if nu == 0.0 || nv == 0.0 {
        return Err(EvalError::ZeroVector);
    }
    Ok(cosine_with_sq_norms(u, v, nu, nv))
}

/// `sqrt(a * b)` rather than `sqrt(a) * sqrt(b)` keeps `cosine(u, u)`
/// exactly 1.
#[inline]
fn cosine_with_sq_norms(u: &[f64], v: &[f64], nu: f64, nv: f64) -> f64 {
    (dot(u, v) / (nu * nv).sqrt()).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub word: String,
    pub index: usize,
    pub cosine: f64,
}

/// Cosine nearest-neighbor search over an embedding set with cached
/// squared norms.
#[derive(Debug)]
pub struct NeighborIndex<'a> {
    set: &'a EmbeddingSet,
    norms: Vec<f64>,
}

impl<'a> NeighborIndex<'a> {
    pub fn new(set: &'a EmbeddingSet) -> Self {
        let norms = set.matrix().iter_rows().map(|r| dot(r, r)).collect();
        NeighborIndex { set, norms }
    }

    /// Rows eligible as neighbors: in the vocabulary, nonzero, and accepted
    /// by `filter`. Returned in vocabulary order.
    pub fn candidates(&self, filter: Option<&HashSet<String>>) -> Vec<usize> {
        (0..self.set.len())
            .filter(|&i| self.norms[i] > 0.0)
            .filter(|&i| filter.is_none_or(|f| f.contains(&self.set.words()[i])))
            .collect()
    }

    /// Top `k` of `candidates` by descending cosine to row `query`, ties
    /// going to the lower row index. The query itself is never returned.
    pub fn top_k(&self, query: usize, k: usize, candidates: &[usize]) -> Vec<(usize, f64)> {
        let q = self.set.row(query);
        let nq = self.norms[query];
        let scored: Vec<(usize, f64)> = candidates
            .iter()
            .filter(|&&c| c != query)
            .map(|&c| {
                (
                    c,
                    cosine_with_sq_norms(q, self.set.row(c), nq, self.norms[c]),
                )
            })
            .collect();
        best_k(scored, k)
    }

    fn query_row(&self, word: &str) -> Result<usize, EvalError> {
        let i = self
            .set
            .index_of(word)
            .ok_or_else(|| EvalError::UnknownWord(word.to_owned()))?;
        if self.norms[i] == 0.0 {
            return Err(EvalError::ZeroVector);
        }
        Ok(i)
    }
}

/// Keeps the `k` best `(row, score)` pairs, highest score first and ties to
/// the lower row.
fn best_k(mut scored: Vec<(usize, f64)>, k: usize) -> Vec<(usize, f64)> {
    let by_rank = |a: &(usize, f64), b: &(usize, f64)| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(Ordering::Equal)
            .then(a.0.cmp(&b.0))
    };
    if scored.len() > k {
        scored.select_nth_unstable_by(k - 1, by_rank);
        scored.truncate(k);
    }
    scored.sort_unstable_by(by_rank);
    scored
}

/// Query rows scored per block in [`pool_neighbors`].
const QUERY_BLOCK: usize = 256;

/// Top `k` neighbors of every pool row among the other pool rows. Scores
/// come from blocked products of the unit-normalized rows, which is much
/// faster than pairwise cosines on large pools.
fn pool_neighbors(index: &NeighborIndex<'_>, pool: &[usize], k: usize) -> Vec<Vec<usize>> {
    let d = index.set.dim();
    // column j is pool row j scaled to unit length
    let unit = DMatrix::from_fn(d, pool.len(), |c, j| {
        let row = pool[j];
        index.set.row(row)[c] / index.norms[row].sqrt()
    });
    let unit_t = unit.transpose();
    let starts: Vec<usize> = (0..pool.len()).step_by(QUERY_BLOCK).collect();
    starts
        .par_iter()
        .flat_map_iter(|&b| {
            let len = QUERY_BLOCK.min(pool.len() - b);
            // column q holds the scores of query b + q against the whole pool
            let scores = &unit_t * unit.columns(b, len);
            (0..len)
                .map(|q| {
                    let col = scores.column(q);
                    let scored = col
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != b + q)
                        .map(|(j, &s)| (pool[j], s))
                        .collect();
                    best_k(scored, k)
                        .into_iter()
                        .map(|(i, _)| i)
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// The `k` nearest neighbors of `word` by cosine similarity. With a filter
/// only the listed words are candidates. Fewer than `k` are returned when
/// candidates run out.
pub fn knn(
    set: &EmbeddingSet,
    word: &str,
    k: usize,
    filter: Option<&HashSet<String>>,
) -> Result<Vec<Neighbor>, EvalError> {
    if k == 0 {
        return Err(EvalError::InvalidK);
    }
    let index = NeighborIndex::new(set);
    let query = index.query_row(word)?;
    let candidates = index.candidates(filter);
    Ok(index
        .top_k(query, k, &candidates)
        .into_iter()
        .map(|(i, cosine)| Neighbor {
            word: set.words()[i].clone(),
            index: i,
            cosine,
        })
        .collect())
}

/// Fractional ranks starting at 1; tied values share the mean of their
/// positions.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; xs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        // positions start..end (0-based) share rank mean((start+1)..=end)
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, EvalError> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvalError::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rank correlation: Pearson correlation of average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, EvalError> {
    if xs.len() != ys.len() {
        return Err(EvalError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(EvalError::TooFewObservations(xs.len()));
    }
    pearson(&average_ranks(xs), &average_ranks(ys))
}

/// Word pairs with human similarity judgments.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityDataset {
    pub name: String,
    pub pairs: Vec<(String, String, f64)>,
}

impl SimilarityDataset {
    pub fn new(
        name: impl Into<String>,
        pairs: Vec<(String, String, f64)>,
    ) -> Result<Self, EvalError> {
        let name = name.into();
        if pairs.is_empty() {
            return Err(EvalError::EmptyDataset(name));
        }
        if let Some(i) = pairs.iter().position(|p| p.2.is_nan()) {
            return Err(EvalError::Parse {
                line: i + 1,
                reason: "NaN score".into(),
            });
        }
        Ok(SimilarityDataset { name, pairs })
    }
}

/// Parses `word1 word2 score` lines separated by tabs or spaces. Blank
/// lines are skipped; `skip_header` drops the first non-blank line.
pub fn parse_similarity_dataset(
    name: &str,
    text: &str,
    skip_header: bool,
) -> Result<SimilarityDataset, EvalError> {
    let mut pairs = Vec::new();
    let mut header_pending = skip_header;
    for (i, line) in text.lines().enumerate() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if header_pending {
            header_pending = false;
            continue;
        }
        let [a, b, score] = toks[..] else {
            return Err(EvalError::Parse {
                line: i + 1,
                reason: format!("expected 3 fields, found {}", toks.len()),
            });
        };
        let score: f64 = score
            .parse()
            .ok()
            .filter(|s: &f64| s.is_finite())
            .ok_or_else(|| EvalError::Parse {
                line: i + 1,
                reason: format!("invalid score {score:?}"),
            })?;
        pairs.push((a.to_owned(), b.to_owned(), score));
    }
    SimilarityDataset::new(name, pairs)
}

/// Loads a benchmark file, naming the dataset after the file stem.
pub fn load_similarity_dataset(
    path: &Path,
    skip_header: bool,
) -> Result<SimilarityDataset, EvalError> {
    let text = fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    parse_similarity_dataset(&name, &text, skip_header)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetResult {
    pub dataset: String,
    pub rho: f64,
    pub used: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub results: Vec<DatasetResult>,
}

/// Spearman correlation between model cosine and human scores for every
/// dataset. Pairs with an out-of-vocabulary word are skipped and counted.
pub fn evaluate_similarity(
    set: &EmbeddingSet,
    datasets: &[SimilarityDataset],
) -> Result<EvalReport, EvalError> {
    let mut results = Vec::with_capacity(datasets.len());
    for ds in datasets {
        let mut model = Vec::with_capacity(ds.pairs.len());
        let mut human = Vec::with_capacity(ds.pairs.len());
        for (a, b, score) in &ds.pairs {
            if let (Some(u), Some(v)) = (set.lookup(a), set.lookup(b)) {
                model.push(cosine(u, v)?);
                human.push(*score);
            }
        }
        if model.len() < 2 {
            return Err(EvalError::DatasetEmptyAfterFiltering {
                dataset: ds.name.clone(),
            });
        }
        let rho = spearman(&model, &human)?;
        results.push(DatasetResult {
            dataset: ds.name.clone(),
            rho,
            used: model.len(),
            skipped: ds.pairs.len() - model.len(),
        });
    }
    Ok(EvalReport { results })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Positive,
    Negative,
    Neutral,
}

impl Polarity {
    pub fn is_opposite(self, other: Polarity) -> bool {
        matches!(
            (self, other),
            (Polarity::Positive, Polarity::Negative) | (Polarity::Negative, Polarity::Positive)
        )
    }
}

/// Sign of `value - neutral`.
pub fn polarity(value: f64, neutral: f64) -> Polarity {
    match value.partial_cmp(&neutral) {
        Some(Ordering::Greater) => Polarity::Positive,
        Some(Ordering::Less) => Polarity::Negative,
        _ => Polarity::Neutral,
    }
}

/// Mean PN@k and GN@k for one affect dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct DimNoise {
    pub dim: usize,
    pub name: String,
    /// Mean fraction of neighbors with opposite polarity, in `[0, 1]`.
    pub polarity_noise: f64,
    /// Mean absolute affect difference to the neighbors.
    pub granular_noise: f64,
}

/// Neighborhood noise over the lexicon words present in the vocabulary.
/// Means are NaN when no word could be evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseReport {
    pub k: usize,
    pub dims: Vec<DimNoise>,
    pub evaluated: usize,
    pub skipped: usize,
}

/// Noise reports for each `k` in `ks`, restricted to the affect dimensions
/// in `dims` (all dimensions when empty).
///
/// Only words that are both in the lexicon and the vocabulary take part,
/// as queries and as neighbor candidates. Each word's score is averaged
/// over the neighbors actually found, which is fewer than `k` only when
/// the candidate pool is small. Words with no candidates are skipped.
pub fn noise_curve(
    set: &EmbeddingSet,
    lex: &AffectLexicon,
    dims: &[usize],
    ks: &[usize],
) -> Result<Vec<NoiseReport>, EvalError> {
    if ks.is_empty() || ks.contains(&0) {
        return Err(EvalError::InvalidK);
    }
    let dims: Vec<usize> = if dims.is_empty() {
        (0..lex.dim()).collect()
    } else {
        dims.to_vec()
    };
    if let Some(&bad) = dims.iter().find(|&&d| d >= lex.dim()) {
        return Err(EvalError::BadDimension {
            dim: bad,
            available: lex.dim(),
        });
    }
    let max_k = *ks.iter().max().expect("ks is nonempty");

    let index = NeighborIndex::new(set);
    let pool: Vec<usize> = (0..set.len())
        .filter(|&i| index.norms[i] > 0.0 && lex.contains(&set.words()[i]))
        .collect();
    let in_lexicon = (0..set.len())
        .filter(|&i| lex.contains(&set.words()[i]))
        .count();

    let neighbor_lists = pool_neighbors(&index, &pool, max_k);

    let affect = |row: usize| lex.affect_vector(&set.words()[row]);
    let neutral = lex.neutral();
    let mut reports = Vec::with_capacity(ks.len());
    for &k in ks {
        let mut pn_sum = vec![0.0; dims.len()];
        let mut gn_sum = vec![0.0; dims.len()];
        let mut evaluated = 0;
        for (&q, nbrs) in pool.iter().zip(&neighbor_lists) {
            let nbrs = &nbrs[..nbrs.len().min(k)];
            if nbrs.is_empty() {
                continue;
            }
            evaluated += 1;
            let m = nbrs.len() as f64;
            let aq = affect(q);
            for (slot, &f) in dims.iter().enumerate() {
                let pq = polarity(aq[f], neutral[f]);
                let mut flips = 0usize;
                let mut diff = 0.0;
                for &j in nbrs {
                    let aj = affect(j)[f];
                    if pq.is_opposite(polarity(aj, neutral[f])) {
                        flips += 1;
                    }
                    diff += (aq[f] - aj).abs();
                }
                pn_sum[slot] += flips as f64 / m;
                gn_sum[slot] += diff / m;
            }
        }
        let denom = evaluated as f64;
        reports.push(NoiseReport {
            k,
            dims: dims
                .iter()
                .enumerate()
                .map(|(slot, &f)| DimNoise {
                    dim: f,
                    name: lex.dim_names()[f].clone(),
                    polarity_noise: pn_sum[slot] / denom,
                    granular_noise: gn_sum[slot] / denom,
                })
                .collect(),
            evaluated,
            skipped: in_lexicon - evaluated,
        });
    }
    Ok(reports)
}

/// PN@k and GN@k for every affect dimension at a single `k`.
pub fn noise_at_k(
    set: &EmbeddingSet,
    lex: &AffectLexicon,
    k: usize,
) -> Result<NoiseReport, EvalError> {
    Ok(noise_curve(set, lex, &[], &[k])?.remove(0))
}

/// Mean fraction of the top-`k` neighbors whose polarity in dimension
/// `dim` is opposite to the query word's.
pub fn polarity_noise_at_k(
    set: &EmbeddingSet,
    lex: &AffectLexicon,
    k: usize,
    dim: usize,
) -> Result<f64, EvalError> {
    Ok(noise_curve(set, lex, &[dim], &[k])?[0].dims[0].polarity_noise)
}

/// Mean absolute difference in dimension `dim` between each word and its
/// top-`k` neighbors.
pub fn granular_noise_at_k(
    set: &EmbeddingSet,
    lex: &AffectLexicon,
    k: usize,
    dim: usize,
) -> Result<f64, EvalError> {
    Ok(noise_curve(set, lex, &[dim], &[k])?[0].dims[0].granular_noise)
}

/// Writes `dataset,rho,used,skipped` rows.
pub fn write_eval_csv<W: Write>(report: &EvalReport, mut w: W) -> io::Result<()> {
    writeln!(w, "dataset,rho,used,skipped")?;
    for r in &report.results {
        writeln!(w, "{},{},{},{}", r.dataset, r.rho, r.used, r.skipped)?;
    }
    Ok(())
}

/// Writes `dim,k,pn,gn,evaluated,skipped` rows.
pub fn write_noise_csv<W: Write>(reports: &[NoiseReport], mut w: W) -> io::Result<()> {
    writeln!(w, "dim,k,pn,gn,evaluated,skipped")?;
    for r in reports {
        for d in &r.dims {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                d.name, r.k, d.polarity_noise, d.granular_noise, r.evaluated, r.skipped
            )?;
        }
    }
    Ok(())
}
