//! Affect lexica: words scored on a bounded scale along F affect dimensions
//! (Valence, Arousal and Dominance on 1..9 by default).
//!
//! Words missing from the lexicon get the neutral vector, which defaults to
//! the scale midpoint in every dimension.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::embedding_io::EmbeddingSet;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {reason}")]
    Parse { line: u64, reason: String },
    #[error("column {0:?} not found in header")]
    MissingColumn(String),
    #[error("{word:?}: value {value} in dimension {dim} is outside the scale")]
    OutOfScale {
        word: String,
        dim: usize,
        value: f64,
    },
    #[error("line {line}: duplicate word {word:?}")]
    DuplicateWord { word: String, line: u64 },
    #[error("invalid scale [{min}, {max}]")]
    InvalidScale { min: f64, max: f64 },
    #[error("neutral vector {0:?} does not fit the lexicon")]
    InvalidNeutral(Vec<f64>),
    #[error("lexicon needs at least one affect dimension")]
    NoDimensions,
    #[error("{word:?}: expected {expected} values, found {found}")]
    Dimension {
        word: String,
        expected: usize,
        found: usize,
    },
}

/// Closed interval every affect score must lie in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scale {
    min: f64,
    max: f64,
}

impl Scale {
    /// The 1..9 scale used by the Warriner VAD norms.
    pub const VAD: Scale = Scale { min: 1.0, max: 9.0 };

    pub fn new(min: f64, max: f64) -> Result<Self, LexiconError> {
        if min.is_finite() && max.is_finite() && max > min {
            Ok(Scale { min, max })
        } else {
            Err(LexiconError::InvalidScale { min, max })
        }
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.min + self.max)
    }

    /// Largest possible difference between two scores in one dimension.
    pub fn max_dist(&self) -> f64 {
        self.max - self.min
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }
}

impl Default for Scale {
    fn default() -> Self {
        Scale::VAD
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffectLexicon {
    dim_names: Vec<String>,
    scale: Scale,
    neutral: Vec<f64>,
    words: Vec<String>,
    index: HashMap<String, usize>,
    values: Vec<f64>,
}

impl AffectLexicon {
    /// Builds a lexicon from `(word, scores)` entries. Every score must lie
    /// on `scale` and every entry must have one score per dimension name.
    pub fn new<S: Into<String>>(
        dim_names: Vec<String>,
        scale: Scale,
        entries: impl IntoIterator<Item = (S, Vec<f64>)>,
    ) -> Result<Self, LexiconError> {
        let f = dim_names.len();
        if f == 0 {
            return Err(LexiconError::NoDimensions);
        }
        let mut lex = AffectLexicon {
            neutral: vec![scale.midpoint(); f],
            dim_names,
            scale,
            words: Vec::new(),
            index: HashMap::new(),
            values: Vec::new(),
        };
        for (i, (word, vals)) in entries.into_iter().enumerate() {
            lex.insert(word.into(), &vals, i as u64 + 1)?;
        }
        Ok(lex)
    }

    /// VAD lexicon on the 1..9 scale with dimensions named V, A, D.
    pub fn vad<S: Into<String>>(
        entries: impl IntoIterator<Item = (S, Vec<f64>)>,
    ) -> Result<Self, LexiconError> {
        Self::new(
            vec!["V".into(), "A".into(), "D".into()],
            Scale::VAD,
            entries,
        )
    }

    /// Replaces the fallback vector used for words outside the lexicon.
    pub fn with_neutral(mut self, neutral: Vec<f64>) -> Result<Self, LexiconError> {
        if neutral.len() != self.dim() || !neutral.iter().all(|&v| self.scale.contains(v)) {
            return Err(LexiconError::InvalidNeutral(neutral));
        }
        self.neutral = neutral;
        Ok(self)
    }

    fn insert(&mut self, word: String, vals: &[f64], line: u64) -> Result<(), LexiconError> {
        if vals.len() != self.dim() {
            return Err(LexiconError::Dimension {
                word,
                expected: self.dim(),
                found: vals.len(),
            });
        }
        if let Some(dim) = vals.iter().position(|&v| !self.scale.contains(v)) {
            return Err(LexiconError::OutOfScale {
                value: vals[dim],
                word,
                dim,
            });
        }
        if self.index.contains_key(&word) {
            return Err(LexiconError::DuplicateWord { word, line });
        }
        self.index.insert(word.clone(), self.words.len());
        self.words.push(word);
        self.values.extend_from_slice(vals);
        Ok(())
    }

    /// Number of affect dimensions F.
    pub fn dim(&self) -> usize {
        self.dim_names.len()
    }

    pub fn dim_names(&self) -> &[String] {
        &self.dim_names
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    pub fn neutral(&self) -> &[f64] {
        &self.neutral
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Words in load order.
    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    /// Stored scores for `word`, if it is in the lexicon.
    pub fn get(&self, word: &str) -> Option<&[f64]> {
        let f = self.dim();
        self.index
            .get(word)
            .map(|&i| &self.values[i * f..(i + 1) * f])
    }

    /// Stored scores for `word`, or the neutral vector. Never fails.
    pub fn affect_vector(&self, word: &str) -> &[f64] {
        self.get(word).unwrap_or(&self.neutral)
    }

    /// Fraction of the embedding vocabulary covered by the lexicon.
    pub fn coverage(&self, set: &EmbeddingSet) -> f64 {
        let hits = set.words().iter().filter(|w| self.contains(w)).count();
        hits as f64 / set.len() as f64
    }
}

/// Which columns of a delimited file hold the word and its scores.
#[derive(Debug, Clone, PartialEq)]
pub enum Columns {
    /// Columns looked up by header name.
    Named { word: String, values: Vec<String> },
    /// 0-based column positions. `header` says whether to skip a first row.
    Indexed {
        word: usize,
        values: Vec<usize>,
        header: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexiconFormat {
    pub columns: Columns,
    /// Field delimiter; `None` picks tab if the first line contains one and
    /// comma otherwise.
    pub delimiter: Option<u8>,
    pub scale: Scale,
    /// Dimension names for reports. Defaults to the value column names.
    pub dim_names: Option<Vec<String>>,
    /// Lowercase words at load time.
    pub lowercase: bool,
}

impl LexiconFormat {
    /// Layout of the published Warriner et al. norms CSV.
    pub fn warriner() -> Self {
        LexiconFormat {
            columns: Columns::Named {
                word: "Word".into(),
                values: vec![
                    "V.Mean.Sum".into(),
                    "A.Mean.Sum".into(),
                    "D.Mean.Sum".into(),
                ],
            },
            delimiter: None,
            scale: Scale::VAD,
            dim_names: Some(vec!["V".into(), "A".into(), "D".into()]),
            lowercase: false,
        }
    }
}

impl Default for LexiconFormat {
    fn default() -> Self {
        Self::warriner()
    }
}

pub fn load_lexicon(path: &Path, format: &LexiconFormat) -> Result<AffectLexicon, LexiconError> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| LexiconError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    parse_lexicon(&text, format)
}

/// Parses a delimited lexicon held in memory.
pub fn parse_lexicon(text: &str, format: &LexiconFormat) -> Result<AffectLexicon, LexiconError> {
    let delimiter = format.delimiter.unwrap_or_else(|| {
        let first = text.lines().next().unwrap_or("");
        if first.contains('\t') {
            b'\t'
        } else {
            b','
        }
    });
    let has_header = match &format.columns {
        Columns::Named { .. } => true,
        Columns::Indexed { header, .. } => *header,
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(has_header)
        .flexible(true)
        .from_reader(text.as_bytes());

    let (word_col, value_cols, default_names) = match &format.columns {
        Columns::Named { word, values } => {
            let headers = reader.headers().map_err(csv_error)?.clone();
            let find = |name: &str| {
                headers
                    .iter()
                    .position(|h| h.trim() == name)
                    .ok_or_else(|| LexiconError::MissingColumn(name.to_owned()))
            };
            let w = find(word)?;
            let vs = values
                .iter()
                .map(|v| find(v))
                .collect::<Result<Vec<_>, _>>()?;
            (w, vs, values.clone())
        }
        Columns::Indexed { word, values, .. } => {
            let names = values.iter().map(|i| format!("col{i}")).collect();
            (*word, values.clone(), names)
        }
    };
    let dim_names = format.dim_names.clone().unwrap_or(default_names);
    if dim_names.len() != value_cols.len() {
        return Err(LexiconError::Dimension {
            word: "<dimension names>".into(),
            expected: value_cols.len(),
            found: dim_names.len(),
        });
    }

    let mut lex = AffectLexicon::new(dim_names, format.scale, Vec::<(String, Vec<f64>)>::new())?;
    let mut vals = Vec::with_capacity(value_cols.len());
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let field = |i: usize| {
            record
                .get(i)
                .map(str::trim)
                .ok_or_else(|| LexiconError::Parse {
                    line,
                    reason: format!("row has {} fields, column {i} missing", record.len()),
                })
        };
        let raw_word = field(word_col)?;
        if raw_word.is_empty() {
            return Err(LexiconError::Parse {
                line,
                reason: "empty word".into(),
            });
        }
        let word = if format.lowercase {
            raw_word.to_lowercase()
        } else {
            raw_word.to_owned()
        };
        vals.clear();
        for &c in &value_cols {
            let tok = field(c)?;
            let v: f64 = tok.parse().map_err(|_| LexiconError::Parse {
                line,
                reason: format!("cannot parse {tok:?} as a number"),
            })?;
            if !v.is_finite() {
                return Err(LexiconError::Parse {
                    line,
                    reason: format!("non-finite value {tok:?}"),
                });
            }
            vals.push(v);
        }
        lex.insert(word, &vals, line)?;
    }
    Ok(lex)
}

fn csv_error(e: csv::Error) -> LexiconError {
    let line = e.position().map_or(0, |p| p.line());
    LexiconError::Parse {
        line,
        reason: e.to_string(),
    }
}
