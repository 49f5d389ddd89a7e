//! Affect-APPEND enrichment.
//!
//! The pipeline has four steps:
//!
//! 1. unit-normalize every word vector and every affect vector,
//! 2. concatenate them into a `D + F` wide row per word,
//! 3. standardize each column to zero mean and unit (population) variance,
//! 4. project onto the top `D` principal axes.
//!
//! PCA is fit on the whole vocabulary by eigendecomposing the
//! `(D + F) x (D + F)` sample covariance, so memory stays bounded by the
//! width rather than the vocabulary size. Each principal axis is signed so
//! that its largest-magnitude coordinate is positive, which makes the
//! output independent of the eigen solver's sign choices.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use thiserror::Error;

use crate::embedding_io::{EmbeddingError, EmbeddingSet, Vocab};
use crate::lexicon::AffectLexicon;
use crate::matrix::{dot, norm, Matrix};

/// Rows per block in the covariance accumulation. Fixed so that the
/// summation order, and hence the result, does not depend on thread count.
const COVARIANCE_BLOCK: usize = 2048;

#[derive(Debug, Error)]
pub enum AppendError {
    #[error("row {row} is a zero vector and cannot be unit-normalized")]
    ZeroVector { row: usize },
    #[error("need at least {needed} rows, got {rows}")]
    TooFewRows { rows: usize, needed: usize },
    #[error("target dimension {target} must be between 1 and the input width {width}")]
    BadTargetDim { target: usize, width: usize },
    #[error("expected a {expected:?} matrix, got {found:?}")]
    WrongStage { expected: Stage, found: Stage },
    #[error("input width {found} does not match the model width {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

/// Which step of the pipeline produced an [`EnrichedMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Normalized word vectors with normalized affect vectors appended.
    Concatenated,
    /// Column-standardized concatenation.
    Standardized,
    /// Projected onto the principal axes.
    Reduced,
}

/// An intermediate of the APPEND pipeline, sharing the source vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct EnrichedMatrix {
    stage: Stage,
    vocab: Arc<Vocab>,
    matrix: Matrix,
}

impl EnrichedMatrix {
    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn vocab(&self) -> &Arc<Vocab> {
        &self.vocab
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn width(&self) -> usize {
        self.matrix.cols()
    }

    pub fn into_embeddings(self) -> Result<EmbeddingSet, EmbeddingError> {
        EmbeddingSet::from_parts(self.vocab, self.matrix)
    }
}

/// Scales every row to unit Euclidean norm.
pub fn l2_normalize_rows(m: &Matrix) -> Result<Matrix, AppendError> {
    let mut out = m.clone();
    for i in 0..out.rows() {
        normalize_in_place(out.row_mut(i)).ok_or(AppendError::ZeroVector { row: i })?;
    }
    Ok(out)
}

fn normalize_in_place(v: &mut [f64]) -> Option<()> {
    let n = norm(v);
    if n == 0.0 {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= n);
    Some(())
}

/// Row `i` of the result is `unit(word_i) ++ unit(affect(word_i))`, where
/// words outside the lexicon use its neutral vector.
pub fn concat_affect(
    set: &EmbeddingSet,
    lex: &AffectLexicon,
) -> Result<EnrichedMatrix, AppendError> {
    let d = set.dim();
    let width = d + lex.dim();
    let mut matrix = Matrix::zeros(set.len(), width);
    for (i, word) in set.words().iter().enumerate() {
        let row = matrix.row_mut(i);
        row[..d].copy_from_slice(set.row(i));
        row[d..].copy_from_slice(lex.affect_vector(word));
        normalize_in_place(&mut row[..d]).ok_or(AppendError::ZeroVector { row: i })?;
        normalize_in_place(&mut row[d..]).ok_or(AppendError::ZeroVector { row: i })?;
    }
    Ok(EnrichedMatrix {
        stage: Stage::Concatenated,
        vocab: Arc::clone(set.vocab()),
        matrix,
    })
}

/// Per-column `(mean, population standard deviation)`.
fn column_stats(m: &Matrix) -> Vec<(f64, f64)> {
    let n = m.rows() as f64;
    let mut means = vec![0.0; m.cols()];
    for row in m.iter_rows() {
        means.iter_mut().zip(row).for_each(|(s, v)| *s += v);
    }
    means.iter_mut().for_each(|s| *s /= n);
    let mut var = vec![0.0; m.cols()];
    for row in m.iter_rows() {
        for ((acc, v), mu) in var.iter_mut().zip(row).zip(&means) {
            let c = v - mu;
            *acc += c * c;
        }
    }
    means
        .into_iter()
        .zip(var)
        .map(|(mu, ss)| (mu, (ss / n).sqrt()))
        .collect()
}

/// A column whose spread is this small relative to its mean is treated as
/// constant and mapped to all zeros.
fn is_constant(mean: f64, sd: f64) -> bool {
    sd <= 1e-12 * mean.abs().max(1.0)
}

/// Standardizes each column to zero mean and unit population variance.
/// Constant columns become all zeros.
pub fn standardize_columns(m: EnrichedMatrix) -> Result<EnrichedMatrix, AppendError> {
    if m.matrix.rows() < 2 {
        return Err(AppendError::TooFewRows {
            rows: m.matrix.rows(),
            needed: 2,
        });
    }
    let stats = column_stats(&m.matrix);
    let mut matrix = m.matrix;
    let cols = matrix.cols();
    matrix.as_mut_slice().par_chunks_mut(cols).for_each(|row| {
        for (v, &(mu, sd)) in row.iter_mut().zip(&stats) {
            *v = if is_constant(mu, sd) {
                0.0
            } else {
                (*v - mu) / sd
            };
        }
    });
    Ok(EnrichedMatrix {
        stage: Stage::Standardized,
        vocab: m.vocab,
        matrix,
    })
}

/// Principal axes fitted to a standardized matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    means: Vec<f64>,
    /// One principal axis per row, `target_dim x width`.
    components: Matrix,
    singular_values: Vec<f64>,
    n_samples: usize,
}

impl PcaModel {
    pub fn input_width(&self) -> usize {
        self.components.cols()
    }

    pub fn n_components(&self) -> usize {
        self.components.rows()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    /// Principal axes as a `width x target_dim` matrix with orthonormal
    /// columns.
    pub fn axes(&self) -> Matrix {
        let (k, w) = (self.components.rows(), self.components.cols());
        let mut out = Matrix::zeros(w, k);
        for c in 0..k {
            for (a, &v) in self.components.row(c).iter().enumerate() {
                out.row_mut(a)[c] = v;
            }
        }
        out
    }

    /// Axis `c` as a unit vector of length `width`.
    pub fn axis(&self, c: usize) -> &[f64] {
        self.components.row(c)
    }

    /// Singular values of the centered data matrix, descending.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// Sample variance (divisor `n - 1`) captured by each axis.
    pub fn explained_variance(&self) -> Vec<f64> {
        let denom = (self.n_samples - 1) as f64;
        self.singular_values.iter().map(|s| s * s / denom).collect()
    }

    /// Centers `m` with the fitted means and projects it onto the axes.
    pub fn project(&self, m: &Matrix) -> Result<Matrix, AppendError> {
        let w = self.input_width();
        if m.cols() != w {
            return Err(AppendError::WidthMismatch {
                expected: w,
                found: m.cols(),
            });
        }
        let k = self.n_components();
        let mut out = Matrix::zeros(m.rows(), k);
        out.as_mut_slice()
            .par_chunks_mut(k)
            .zip(m.as_slice().par_chunks(w))
            .for_each_init(
                || vec![0.0; w],
                |centered, (dst, src)| {
                    for ((c, v), mu) in centered.iter_mut().zip(src).zip(&self.means) {
                        *c = v - mu;
                    }
                    for (o, axis) in dst.iter_mut().zip(self.components.iter_rows()) {
                        *o = dot(centered, axis);
                    }
                },
            );
        Ok(out)
    }

    pub fn transform(&self, m: &EnrichedMatrix) -> Result<EnrichedMatrix, AppendError> {
        Ok(EnrichedMatrix {
            stage: Stage::Reduced,
            vocab: Arc::clone(&m.vocab),
            matrix: self.project(&m.matrix)?,
        })
    }

    /// Maps projected coordinates back into the input space.
    pub fn reconstruct(&self, projected: &Matrix) -> Matrix {
        let w = self.input_width();
        let mut out = Matrix::zeros(projected.rows(), w);
        for i in 0..projected.rows() {
            let dst = out.row_mut(i);
            dst.copy_from_slice(&self.means);
            for (coef, axis) in projected.row(i).iter().zip(self.components.iter_rows()) {
                dst.iter_mut().zip(axis).for_each(|(d, a)| *d += coef * a);
            }
        }
        out
    }
}

/// Fits `target_dim` principal axes to a standardized matrix.
///
/// If the data has fewer than `target_dim` non-negligible directions the
/// remaining axes are still an orthonormal completion from the
/// eigendecomposition, and a warning is logged.
pub fn fit_pca(m: &EnrichedMatrix, target_dim: usize) -> Result<PcaModel, AppendError> {
    if m.stage != Stage::Standardized {
        return Err(AppendError::WrongStage {
            expected: Stage::Standardized,
            found: m.stage,
        });
    }
    fit_pca_matrix(&m.matrix, target_dim)
}

/// PCA on an arbitrary matrix, without the stage check.
pub fn fit_pca_matrix(data: &Matrix, target_dim: usize) -> Result<PcaModel, AppendError> {
    let (n, w) = (data.rows(), data.cols());
    if target_dim == 0 || target_dim > w {
        return Err(AppendError::BadTargetDim {
            target: target_dim,
            width: w,
        });
    }
    let needed = target_dim.max(2);
    if n < needed {
        return Err(AppendError::TooFewRows { rows: n, needed });
    }

    let means: Vec<f64> = column_stats(data).into_iter().map(|(mu, _)| mu).collect();
    let scatter = scatter_matrix(data, &means);
    let denom = (n - 1) as f64;
    let cov = DMatrix::from_fn(w, w, |a, b| {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        scatter[lo * w + hi] / denom
    });
    let eig = cov.symmetric_eigen();

    let mut order: Vec<usize> = (0..w).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let top = eig.eigenvalues[order[0]].max(0.0);
    let negligible = top * w as f64 * f64::EPSILON * 16.0;
    let rank = order
        .iter()
        .filter(|&&i| eig.eigenvalues[i] > negligible)
        .count();
    if rank < target_dim {
        log::warn!(
            "data has only {rank} non-negligible principal directions; \
             padding to {target_dim} with orthonormal complements"
        );
    }

    let mut components = Matrix::zeros(target_dim, w);
    let mut singular_values = Vec::with_capacity(target_dim);
    for (c, &idx) in order.iter().take(target_dim).enumerate() {
        let axis = components.row_mut(c);
        for (a, dst) in axis.iter_mut().enumerate() {
            *dst = eig.eigenvectors[(a, idx)];
        }
        let len = norm(axis);
        axis.iter_mut().for_each(|v| *v /= len);
        fix_sign(axis);
        singular_values.push((eig.eigenvalues[idx].max(0.0) * denom).sqrt());
    }

    Ok(PcaModel {
        means,
        components,
        singular_values,
        n_samples: n,
    })
}

/// Upper triangle (row-major `w x w`) of `sum_i (x_i - mu)(x_i - mu)^T`.
fn scatter_matrix(data: &Matrix, means: &[f64]) -> Vec<f64> {
    let w = data.cols();
    let partials: Vec<Vec<f64>> = data
        .as_slice()
        .par_chunks(COVARIANCE_BLOCK * w)
        .map(|block| {
            let mut acc = vec![0.0; w * w];
            let mut centered = vec![0.0; w];
            for row in block.chunks_exact(w) {
                for ((c, v), mu) in centered.iter_mut().zip(row).zip(means) {
                    *c = v - mu;
                }
                for a in 0..w {
                    let ca = centered[a];
                    let dst = &mut acc[a * w + a..(a + 1) * w];
                    dst.iter_mut()
                        .zip(&centered[a..])
                        .for_each(|(d, cb)| *d += ca * cb);
                }
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; w * w];
    for p in &partials {
        total.iter_mut().zip(p).for_each(|(t, v)| *t += v);
    }
    total
}

/// Flips `axis` so that its largest-magnitude coordinate (first one on ties)
/// is positive.
fn fix_sign(axis: &mut [f64]) {
    let mut best = 0;
    for (i, v) in axis.iter().enumerate() {
        if v.abs() > axis[best].abs() {
            best = i;
        }
    }
    if axis[best] < 0.0 {
        axis.iter_mut().for_each(|v| *v = -*v);
    }
}

/// Options for [`affect_append_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AppendOptions {
    /// Output width; defaults to the input embedding width.
    pub target_dim: Option<usize>,
    /// Stop after standardization and return the `D + F` wide matrix.
    pub skip_reduction: bool,
}

/// Enriches `set` with `lex` and reduces back to the original width.
pub fn affect_append(set: &EmbeddingSet, lex: &AffectLexicon) -> Result<EmbeddingSet, AppendError> {
    affect_append_with(set, lex, AppendOptions::default())
}

pub fn affect_append_with(
    set: &EmbeddingSet,
    lex: &AffectLexicon,
    opts: AppendOptions,
) -> Result<EmbeddingSet, AppendError> {
    let standardized = standardize_columns(concat_affect(set, lex)?)?;
    if opts.skip_reduction {
        return Ok(standardized.into_embeddings()?);
    }
    let target = opts.target_dim.unwrap_or(set.dim());
    let model = fit_pca(&standardized, target)?;
    log::debug!(
        "PCA kept {:.4} of total variance",
        model.explained_variance().iter().sum::<f64>() / standardized.width() as f64
    );
    Ok(model.transform(&standardized)?.into_embeddings()?)
}
