//! Affect-aware post-processing of pretrained word embeddings.
//!
//! * [`append`]: concatenate unit-normalized affect scores to unit-normalized
//!   word vectors, standardize, and PCA back to the original width.
//! * [`retrofit`]: pull vectors toward their neighbors in a synonym graph,
//!   optionally weighting each edge by how similar the two words' affect
//!   scores are.
//! * [`eval`]: cosine neighbors, Spearman correlation against similarity
//!   benchmarks, and Polarity-/Granular-Noise@k.
//!
//! ```
//! use affembed::{affect_append, AffectLexicon, EmbeddingSet};
//!
//! let set = EmbeddingSet::from_pairs([
//!     ("good", [0.9, 0.1]),
//!     ("bad", [0.8, 0.3]),
//!     ("the", [0.2, 0.9]),
//! ])
//! .unwrap();
//! let lex = AffectLexicon::vad([
//!     ("good", vec![7.9, 5.0, 6.5]),
//!     ("bad", vec![2.0, 4.5, 3.5]),
//! ])
//! .unwrap();
//! let enriched = affect_append(&set, &lex).unwrap();
//! assert_eq!(enriched.dim(), 2);
//! ```

pub mod append;
pub mod embedding_io;
pub mod eval;
pub mod fsutil;
pub mod lexicon;
pub mod matrix;
pub mod retrofit;

pub use append::{
    affect_append, affect_append_with, AppendError, AppendOptions, EnrichedMatrix, PcaModel, Stage,
};
pub use embedding_io::{
    load_embeddings, save_embeddings, EmbeddingError, EmbeddingSet, FloatFormat, VectorFileFormat,
    Vocab,
};
pub use eval::{
    cosine, evaluate_similarity, knn, noise_at_k, noise_curve, spearman, EvalError, EvalReport,
    Neighbor, NoiseReport, SimilarityDataset,
};
pub use lexicon::{load_lexicon, AffectLexicon, Columns, LexiconError, LexiconFormat, Scale};
pub use matrix::Matrix;
pub use retrofit::{
    load_ontology, retrofit, BetaRule, Ontology, RetrofitConfig, RetrofitError, Retrofitter,
    Strength, SweepMode,
};

/// Any error raised by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Append(#[from] AppendError),
    #[error(transparent)]
    Retrofit(#[from] RetrofitError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl Error {
    /// True when the failure came from reading or writing a file rather
    /// than from the data itself.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Embedding(EmbeddingError::Io { .. })
                | Error::Lexicon(LexiconError::Io { .. })
                | Error::Retrofit(RetrofitError::Io { .. })
                | Error::Eval(EvalError::Io { .. })
                | Error::Append(AppendError::Embedding(EmbeddingError::Io { .. }))
                | Error::Retrofit(RetrofitError::Embedding(EmbeddingError::Io { .. }))
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
