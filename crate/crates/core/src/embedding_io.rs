//! Word-embedding sets and their plain-text file formats.
//!
//! Two formats are supported, both UTF-8 with LF or CRLF line endings:
//!
//! * [`VectorFileFormat::PlainText`]: one vector per line, the word followed
//!   by its components, separated by spaces (GloVe style).
//! * [`VectorFileFormat::Word2VecTextHeader`]: the same rows preceded by a
//!   `count dim` header line (word2vec text output).
//!
//! Words are exact, case-sensitive strings. The first whitespace-delimited
//! token of a line is the word, so words cannot contain spaces.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use crate::fsutil::write_atomically;
use crate::matrix::Matrix;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: expected {expected} components, found {found}")]
    InconsistentDimension {
        expected: usize,
        found: usize,
        line: usize,
    },
    #[error("line {line}: duplicate word {word:?}")]
    DuplicateWord { word: String, line: usize },
    #[error("embedding set has no vectors")]
    Empty,
    #[error("embedding dimension must be at least 1")]
    ZeroDimension,
    #[error("matrix has {rows} rows but vocabulary has {words} words")]
    ShapeMismatch { rows: usize, words: usize },
    #[error("row {row}, column {col}: non-finite value")]
    NonFinite { row: usize, col: usize },
}

impl EmbeddingError {
    fn io(path: &Path, source: io::Error) -> Self {
        EmbeddingError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Ordered list of unique words with a word-to-row index.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocab {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Builds a vocabulary. On a repeated word the error carries the
    /// 0-based position of the second occurrence as `line`.
    pub fn new(words: Vec<String>) -> Result<Self, EmbeddingError> {
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(EmbeddingError::DuplicateWord {
                    word: w.clone(),
                    line: i,
                });
            }
        }
        Ok(Vocab { words, index })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn word(&self, i: usize) -> &str {
        &self.words[i]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

/// A vocabulary paired with a `|vocab| x dim` matrix of finite values.
///
/// Row `i` is the vector of `vocab.word(i)`. The set is immutable once
/// built; transformations produce new sets that share the vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    vocab: Arc<Vocab>,
    matrix: Matrix,
}

impl EmbeddingSet {
    pub fn new(words: Vec<String>, matrix: Matrix) -> Result<Self, EmbeddingError> {
        Self::from_parts(Arc::new(Vocab::new(words)?), matrix)
    }

    pub fn from_parts(vocab: Arc<Vocab>, matrix: Matrix) -> Result<Self, EmbeddingError> {
        if vocab.is_empty() {
            return Err(EmbeddingError::Empty);
        }
        if matrix.cols() == 0 {
            return Err(EmbeddingError::ZeroDimension);
        }
        if matrix.rows() != vocab.len() {
            return Err(EmbeddingError::ShapeMismatch {
                rows: matrix.rows(),
                words: vocab.len(),
            });
        }
        if let Some(pos) = matrix.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(EmbeddingError::NonFinite {
                row: pos / matrix.cols(),
                col: pos % matrix.cols(),
            });
        }
        Ok(EmbeddingSet { vocab, matrix })
    }

    /// Convenience constructor for small literal fixtures.
    pub fn from_pairs<S: Into<String>, R: AsRef<[f64]>>(
        pairs: impl IntoIterator<Item = (S, R)>,
    ) -> Result<Self, EmbeddingError> {
        let mut words = Vec::new();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (w, r) in pairs {
            words.push(w.into());
            rows.push(r.as_ref().to_vec());
        }
        let expected = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != expected) {
            return Err(EmbeddingError::InconsistentDimension {
                expected,
                found: rows[bad].len(),
                line: bad + 1,
            });
        }
        let matrix = Matrix::from_rows(&rows).expect("rows checked above");
        Self::new(words, matrix)
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }

    pub fn vocab(&self) -> &Arc<Vocab> {
        &self.vocab
    }

    pub fn words(&self) -> &[String] {
        self.vocab.words()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.matrix.row(i)
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.vocab.index_of(word)
    }

    /// The vector for `word`, if it is in the vocabulary.
    pub fn lookup(&self, word: &str) -> Option<&[f64]> {
        self.index_of(word).map(|i| self.matrix.row(i))
    }

    pub fn into_parts(self) -> (Arc<Vocab>, Matrix) {
        (self.vocab, self.matrix)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorFileFormat {
    /// `word v1 v2 ... vD` per line.
    PlainText,
    /// A `count dim` header line followed by plain-text rows.
    Word2VecTextHeader,
}

impl VectorFileFormat {
    /// Guesses the format from the first line: two unsigned integers and
    /// nothing else means a word2vec header.
    pub fn detect(path: &Path) -> Result<Self, EmbeddingError> {
        let file = File::open(path).map_err(|e| EmbeddingError::io(path, e))?;
        let mut first = String::new();
        BufReader::new(file)
            .read_line(&mut first)
            .map_err(|e| EmbeddingError::io(path, e))?;
        Ok(Self::detect_line(&first))
    }

    fn detect_line(line: &str) -> Self {
        let toks: Vec<&str> = line.split_ascii_whitespace().collect();
        if toks.len() == 2 && toks.iter().all(|t| t.parse::<usize>().is_ok()) {
            VectorFileFormat::Word2VecTextHeader
        } else {
            VectorFileFormat::PlainText
        }
    }
}

/// How components are printed when saving.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FloatFormat {
    /// Shortest representation that parses back to the identical `f64`.
    #[default]
    Shortest,
    /// Fixed number of digits after the decimal point. Values read back lie
    /// within `10^-digits` of the original. With 17 or more digits the
    /// shortest exact form is used instead, so the round trip is lossless.
    Fixed(usize),
}

/// Reads an embedding set from `path`.
pub fn load_embeddings(
    path: &Path,
    format: VectorFileFormat,
) -> Result<EmbeddingSet, EmbeddingError> {
    let file = File::open(path).map_err(|e| EmbeddingError::io(path, e))?;
    read_embeddings(BufReader::new(file), format).map_err(|e| match e {
        EmbeddingError::Io { source, .. } => EmbeddingError::io(path, source),
        other => other,
    })
}

/// Reads an embedding set from any buffered reader. Line numbers in errors
/// are 1-based physical lines. Blank lines are skipped.
pub fn read_embeddings<R: BufRead>(
    reader: R,
    format: VectorFileFormat,
) -> Result<EmbeddingSet, EmbeddingError> {
    let mut words: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut data: Vec<f64> = Vec::new();
    let mut dim: Option<usize> = None;
    let mut declared_count: Option<usize> = None;
    let mut header_pending = format == VectorFileFormat::Word2VecTextHeader;

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = match line {
            Ok(l) => l,
            Err(e) if e.kind() == io::ErrorKind::InvalidData => {
                return Err(EmbeddingError::Parse {
                    line: lineno,
                    reason: "invalid UTF-8".into(),
                })
            }
            Err(e) => {
                return Err(EmbeddingError::Io {
                    path: PathBuf::new(),
                    source: e,
                })
            }
        };
        let line = line.strip_suffix('\r').unwrap_or(&line);

        if header_pending {
            header_pending = false;
            let (count, d) = parse_header(line).ok_or_else(|| EmbeddingError::Parse {
                line: lineno,
                reason: format!("expected \"count dim\" header, got {line:?}"),
            })?;
            declared_count = Some(count);
            dim = Some(d);
            words.reserve(count);
            data.reserve(count.saturating_mul(d));
            continue;
        }

        let mut toks = line.split_ascii_whitespace();
        let Some(word) = toks.next() else {
            continue;
        };
        let start = data.len();
        for tok in toks {
            let v: f64 = tok.parse().map_err(|_| EmbeddingError::Parse {
                line: lineno,
                reason: format!("cannot parse {tok:?} as a number"),
            })?;
            if !v.is_finite() {
                return Err(EmbeddingError::Parse {
                    line: lineno,
                    reason: format!("non-finite value {tok:?}"),
                });
            }
            data.push(v);
        }
        let found = data.len() - start;
        if found == 0 {
            return Err(EmbeddingError::Parse {
                line: lineno,
                reason: format!("word {word:?} has no vector components"),
            });
        }
        match dim {
            None => dim = Some(found),
            Some(expected) if expected != found => {
                return Err(EmbeddingError::InconsistentDimension {
                    expected,
                    found,
                    line: lineno,
                })
            }
            Some(_) => {}
        }
        if index.insert(word.to_owned(), words.len()).is_some() {
            return Err(EmbeddingError::DuplicateWord {
                word: word.to_owned(),
                line: lineno,
            });
        }
        words.push(word.to_owned());
    }

    if let Some(count) = declared_count {
        if count != words.len() {
            return Err(EmbeddingError::Parse {
                line: 1,
                reason: format!(
                    "header declares {count} words but {} were read",
                    words.len()
                ),
            });
        }
    }
    if words.is_empty() {
        return Err(EmbeddingError::Empty);
    }
    let dim = dim.expect("at least one row was read");
    let matrix = Matrix::from_vec(words.len(), dim, data).expect("row widths checked");
    let vocab = Vocab { words, index };
    EmbeddingSet::from_parts(Arc::new(vocab), matrix)
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let mut toks = line.split_ascii_whitespace();
    let count = toks.next()?.parse().ok()?;
    let dim: usize = toks.next()?.parse().ok()?;
    (toks.next().is_none() && dim > 0).then_some((count, dim))
}

/// Writes `set` to `path`. The file appears only once fully written.
pub fn save_embeddings(
    set: &EmbeddingSet,
    path: &Path,
    format: VectorFileFormat,
    floats: FloatFormat,
) -> Result<(), EmbeddingError> {
    write_atomically(path, |w| write_embeddings(set, w, format, floats))
        .map_err(|e| EmbeddingError::io(path, e))
}

pub fn write_embeddings<W: Write>(
    set: &EmbeddingSet,
    mut w: W,
    format: VectorFileFormat,
    floats: FloatFormat,
) -> io::Result<()> {
    if format == VectorFileFormat::Word2VecTextHeader {
        writeln!(w, "{} {}", set.len(), set.dim())?;
    }
    let mut line = String::new();
    for (word, row) in set.words().iter().zip(set.matrix().iter_rows()) {
        line.clear();
        line.push_str(word);
        for &v in row {
            line.push(' ');
            push_float(&mut line, v, floats);
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    w.flush()
}

fn push_float(buf: &mut String, v: f64, floats: FloatFormat) {
    match floats {
        FloatFormat::Fixed(digits) if digits < 17 => write!(buf, "{v:.digits$}"),
        _ => write!(buf, "{v}"),
    }
    .expect("writing to a String cannot fail");
}
