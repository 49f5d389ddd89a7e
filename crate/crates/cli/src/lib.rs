//! The `affembed` command: subcommands over the core pipeline, `key=value`
//! config files, provenance headers and a fixed exit-code contract.
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | usage error |
//! | 2 | invalid data |
//! | 3 | file system error |

mod config;
mod provenance;

use std::collections::HashSet;
use std::ffi::OsString;
use std::fmt;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use affembed::append::AppendOptions;
use affembed::eval::{load_similarity_dataset, write_eval_csv, write_noise_csv};
use affembed::fsutil::write_atomically;
use affembed::{
    affect_append_with, evaluate_similarity, knn, load_embeddings, load_lexicon, load_ontology,
    noise_curve, save_embeddings, AffectLexicon, BetaRule, Columns, EmbeddingSet, FloatFormat,
    LexiconFormat, RetrofitConfig, Retrofitter, Scale, Strength, SweepMode, VectorFileFormat,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, LevelFilter};
use serde::{Serialize, Serializer};

pub use provenance::Provenance;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "affembed", version, about = "Affect-enriched word embeddings")]
pub struct Cli {
    /// key=value file supplying flags not given on the command line
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads (default: available parallelism)
    #[arg(long, global = true, env = "AFFEMBED_THREADS",
          value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,

    #[arg(long, global = true, default_value = "info", value_name = "LEVEL")]
    log_level: LevelFilter,

    /// Recorded in provenance; the pipeline itself uses no randomness
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
enum Command {
    /// Append affect scores, standardize, and reduce back with PCA
    Enrich(EnrichArgs),
    /// Retrofit vectors to a synonym graph, optionally affect-weighted
    Retrofit(RetrofitArgs),
    /// Spearman correlation against word-similarity benchmarks
    EvalSim(EvalSimArgs),
    /// Polarity- and Granular-Noise@k over lexicon words
    Noise(NoiseArgs),
    /// Nearest neighbors of a word by cosine similarity
    Neighbors(NeighborsArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum InputFormat {
    Auto,
    Plain,
    W2v,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum OutputFormat {
    Plain,
    W2v,
}

impl From<OutputFormat> for VectorFileFormat {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Plain => VectorFileFormat::PlainText,
            OutputFormat::W2v => VectorFileFormat::Word2VecTextHeader,
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct EmbeddingsIn {
    /// Text vector file, one word and its components per line
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    embeddings: PathBuf,

    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    input_format: InputFormat,
}

#[derive(Debug, Args, Serialize)]
struct EmbeddingsOut {
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    out: PathBuf,

    #[arg(long, value_enum, default_value_t = OutputFormat::Plain)]
    format: OutputFormat,

    /// Decimal digits per value (default: shortest exact form)
    #[arg(long)]
    precision: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
struct LexiconOpts {
    /// Word column then one column per affect dimension, by header name or
    /// 0-based index [default: Word,V.Mean.Sum,A.Mean.Sum,D.Mean.Sum]
    #[arg(long, value_delimiter = ',', value_name = "COLS")]
    lexicon_columns: Option<Vec<String>>,

    /// The lexicon file has no header row (index columns only)
    #[arg(long)]
    lexicon_no_header: bool,

    #[arg(long, default_value_t = 1.0)]
    scale_min: f64,

    #[arg(long, default_value_t = 9.0)]
    scale_max: f64,

    /// Names for the affect dimensions in reports
    #[arg(long, value_delimiter = ',')]
    dim_names: Option<Vec<String>>,

    #[arg(long)]
    lowercase_lexicon: bool,
}

#[derive(Debug, Args, Serialize)]
struct EnrichArgs {
    #[command(flatten)]
    #[serde(flatten)]
    input: EmbeddingsIn,

    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    lexicon: PathBuf,

    #[command(flatten)]
    #[serde(flatten)]
    lexicon_opts: LexiconOpts,

    /// Output width (default: input width)
    #[arg(long, conflicts_with = "no_reduce")]
    target_dim: Option<usize>,

    /// Keep all standardized columns instead of reducing with PCA
    #[arg(long)]
    no_reduce: bool,

    #[command(flatten)]
    #[serde(flatten)]
    output: EmbeddingsOut,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum StrengthArg {
    None,
    /// combined Euclidean affect similarity
    C,
    /// summed per-dimension affect similarity
    I,
}

#[derive(Debug, Clone, Copy)]
struct Beta(BetaRule);

impl FromStr for Beta {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "inverse-degree" {
            return Ok(Beta(BetaRule::InverseDegree));
        }
        s.strip_prefix("const:")
            .and_then(|v| v.parse::<f64>().ok())
            .filter(|v| v.is_finite() && *v > 0.0)
            .map(|v| Beta(BetaRule::Constant(v)))
            .ok_or_else(|| format!("expected inverse-degree or const:<positive number>, got {s:?}"))
    }
}

impl fmt::Display for Beta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            BetaRule::InverseDegree => f.write_str("inverse-degree"),
            BetaRule::Constant(v) => write!(f, "const:{v}"),
        }
    }
}

impl Serialize for Beta {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Args, Serialize)]
struct RetrofitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    input: EmbeddingsIn,

    /// Synonym graph: each line lists a word followed by its neighbors
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    ontology: PathBuf,

    /// Affect lexicon; required by --strength c and --strength i
    #[arg(long, value_name = "FILE",
          required_if_eq_any = [("strength", "c"), ("strength", "i")])]
    #[serde(skip)]
    lexicon: Option<PathBuf>,

    #[command(flatten)]
    #[serde(flatten)]
    lexicon_opts: LexiconOpts,

    /// Edge weighting by affect similarity
    #[arg(long, value_enum, default_value_t = StrengthArg::None)]
    strength: StrengthArg,

    #[arg(long, default_value_t = 1.0)]
    alpha: f64,

    /// inverse-degree or const:<value>
    #[arg(long, default_value = "inverse-degree")]
    beta: Beta,

    #[arg(long, default_value_t = 10)]
    iters: usize,

    /// Stop early when no coordinate moves more than this in a sweep
    #[arg(long)]
    tol: Option<f64>,

    /// Parallel Jacobi sweeps instead of in-place Gauss-Seidel
    #[arg(long)]
    jacobi: bool,

    #[command(flatten)]
    #[serde(flatten)]
    output: EmbeddingsOut,
}

#[derive(Debug, Args, Serialize)]
struct EvalSimArgs {
    #[command(flatten)]
    #[serde(flatten)]
    input: EmbeddingsIn,

    /// Benchmark files with `word1 word2 score` lines
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true, value_name = "FILE")]
    #[serde(skip)]
    datasets: Vec<PathBuf>,

    /// Drop the first line of every benchmark file
    #[arg(long)]
    skip_header: bool,

    /// CSV report path (default: standard output)
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct NoiseArgs {
    #[command(flatten)]
    #[serde(flatten)]
    input: EmbeddingsIn,

    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    lexicon: PathBuf,

    #[command(flatten)]
    #[serde(flatten)]
    lexicon_opts: LexiconOpts,

    /// Neighborhood sizes
    #[arg(long, visible_alias = "k", value_delimiter = ',', default_value = "10")]
    ks: Vec<usize>,

    /// Affect dimensions by name or index (default: all)
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<String>>,

    /// CSV report path (default: standard output)
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct NeighborsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    input: EmbeddingsIn,

    #[arg(long)]
    word: String,

    #[arg(long, default_value_t = 5)]
    k: usize,
}

/// A failed run, classified by exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Data(_) => EXIT_DATA,
            Failure::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Io(m) => m,
        }
    }
}

impl<E: Into<affembed::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let e = e.into();
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Data(e.to_string())
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code. Diagnostics go to standard error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match config::merge(argv) {
        Ok(a) => a,
        Err(config::ConfigError::Read(path, e)) => {
            eprintln!("affembed: error: config {}: {e}", path.display());
            return EXIT_IO;
        }
        Err(config::ConfigError::Syntax(path, line, reason)) => {
            eprintln!(
                "affembed: error: config {} line {line}: {reason}",
                path.display()
            );
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    EXIT_OK
                }
                _ => EXIT_USAGE,
            };
        }
    };
    let _ = env_logger::Builder::new()
        .filter_level(cli.log_level)
        .format_timestamp(None)
        .format_target(false)
        .target(env_logger::Target::Stderr)
        .try_init();

    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new()
            .num_threads(n.into())
            .build()
        {
            Ok(pool) => pool.install(|| execute(&cli)),
            Err(e) => Err(Failure::Usage(format!("cannot start {n} threads: {e}"))),
        },
        None => execute(&cli),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("affembed: error: {}", f.message());
            f.code()
        }
    }
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    validate_paths(&cli.command)?;
    let options = serde_json::json!({ "seed": cli.seed, "run": &cli.command });
    match &cli.command {
        Command::Enrich(a) => enrich(a, options),
        Command::Retrofit(a) => retrofit(a, options),
        Command::EvalSim(a) => eval_sim(a, options),
        Command::Noise(a) => noise(a, options),
        Command::Neighbors(a) => neighbors(a),
    }
}

/// Checks every input and output path before any work starts.
fn validate_paths(cmd: &Command) -> Result<(), Failure> {
    let (inputs, outputs): (Vec<&Path>, Vec<&Path>) = match cmd {
        Command::Enrich(a) => (vec![&a.input.embeddings, &a.lexicon], vec![&a.output.out]),
        Command::Retrofit(a) => {
            let mut inputs: Vec<&Path> = vec![&a.input.embeddings, &a.ontology];
            inputs.extend(a.lexicon.as_deref());
            (inputs, vec![&a.output.out])
        }
        Command::EvalSim(a) => {
            let mut inputs: Vec<&Path> = vec![&a.input.embeddings];
            inputs.extend(a.datasets.iter().map(PathBuf::as_path));
            (inputs, a.report.as_deref().into_iter().collect())
        }
        Command::Noise(a) => (
            vec![&a.input.embeddings, &a.lexicon],
            a.report.as_deref().into_iter().collect(),
        ),
        Command::Neighbors(a) => (vec![&a.input.embeddings], vec![]),
    };
    for path in inputs {
        if !path.is_file() {
            let why = if path.exists() {
                "not a regular file"
            } else {
                "no such file"
            };
            return Err(Failure::Io(format!("{}: {why}", path.display())));
        }
    }
    for path in outputs {
        if path.is_dir() {
            return Err(Failure::Io(format!("{}: is a directory", path.display())));
        }
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        if !dir.is_dir() {
            return Err(Failure::Io(format!(
                "{}: output directory does not exist",
                path.display()
            )));
        }
    }
    Ok(())
}

fn read_embeddings(input: &EmbeddingsIn) -> Result<EmbeddingSet, Failure> {
    let path = &input.embeddings;
    let format = match input.input_format {
        InputFormat::Auto => VectorFileFormat::detect(path)?,
        InputFormat::Plain => VectorFileFormat::PlainText,
        InputFormat::W2v => VectorFileFormat::Word2VecTextHeader,
    };
    let start = Instant::now();
    let set = load_embeddings(path, format)?;
    info!(
        "loaded embeddings path={} words={} dim={} secs={:.2}",
        path.display(),
        set.len(),
        set.dim(),
        start.elapsed().as_secs_f64()
    );
    Ok(set)
}

fn lexicon_format(opts: &LexiconOpts) -> Result<LexiconFormat, Failure> {
    let scale = Scale::new(opts.scale_min, opts.scale_max)?;
    let mut format = LexiconFormat::warriner();
    format.scale = scale;
    format.lowercase = opts.lowercase_lexicon;
    if let Some(cols) = &opts.lexicon_columns {
        let Some((word, values)) = cols.split_first().filter(|(_, v)| !v.is_empty()) else {
            return Err(Failure::Usage(
                "--lexicon-columns needs a word column and at least one value column".into(),
            ));
        };
        let indices: Option<Vec<usize>> = cols.iter().map(|c| c.parse().ok()).collect();
        format.columns = match indices {
            Some(idx) => Columns::Indexed {
                word: idx[0],
                values: idx[1..].to_vec(),
                header: !opts.lexicon_no_header,
            },
            None => Columns::Named {
                word: word.clone(),
                values: values.to_vec(),
            },
        };
        format.dim_names = None;
    }
    if let Some(names) = &opts.dim_names {
        format.dim_names = Some(names.clone());
    }
    Ok(format)
}

fn read_lexicon(path: &Path, opts: &LexiconOpts) -> Result<AffectLexicon, Failure> {
    let lex = load_lexicon(path, &lexicon_format(opts)?)?;
    info!(
        "loaded lexicon path={} words={} dims={}",
        path.display(),
        lex.len(),
        lex.dim_names().join(",")
    );
    Ok(lex)
}

fn write_vectors(
    set: &EmbeddingSet,
    out: &EmbeddingsOut,
    prov: &Provenance,
) -> Result<(), Failure> {
    let floats = out
        .precision
        .map_or(FloatFormat::Shortest, FloatFormat::Fixed);
    save_embeddings(set, &out.out, out.format.into(), floats)?;
    info!(
        "wrote embeddings path={} words={} dim={} config_sha256={}",
        out.out.display(),
        set.len(),
        set.dim(),
        prov.config_sha256
    );
    for line in prov.header_lines() {
        info!("provenance {}", line.trim_start_matches("# "));
    }
    Ok(())
}

/// Writes a CSV report with provenance comments to `path`, or to standard
/// output when no path is given.
fn write_report(
    path: Option<&Path>,
    prov: &Provenance,
    body: impl FnOnce(&mut Vec<u8>) -> io::Result<()>,
) -> Result<(), Failure> {
    let mut buf = Vec::new();
    for line in prov.header_lines() {
        buf.extend_from_slice(line.as_bytes());
        buf.push(b'\n');
    }
    body(&mut buf).map_err(|e| Failure::Io(e.to_string()))?;
    match path {
        Some(p) => {
            write_atomically(p, |w| w.write_all(&buf)).map_err(|e| io_failure(p, e))?;
            info!(
                "wrote report path={} config_sha256={}",
                p.display(),
                prov.config_sha256
            );
            Ok(())
        }
        None => io::stdout()
            .lock()
            .write_all(&buf)
            .map_err(|e| Failure::Io(format!("standard output: {e}"))),
    }
}

fn provenance(options: serde_json::Value, inputs: &[(&str, &Path)]) -> Result<Provenance, Failure> {
    Provenance::new(options, inputs).map_err(|e| Failure::Io(format!("checksumming inputs: {e}")))
}

fn enrich(a: &EnrichArgs, options: serde_json::Value) -> Result<(), Failure> {
    let prov = provenance(
        options,
        &[("embeddings", &a.input.embeddings), ("lexicon", &a.lexicon)],
    )?;
    let set = read_embeddings(&a.input)?;
    let lex = read_lexicon(&a.lexicon, &a.lexicon_opts)?;
    info!("lexicon coverage={:.4}", lex.coverage(&set));
    let start = Instant::now();
    let opts = AppendOptions {
        target_dim: a.target_dim,
        skip_reduction: a.no_reduce,
    };
    let enriched = affect_append_with(&set, &lex, opts)?;
    info!(
        "enriched dim={} secs={:.2}",
        enriched.dim(),
        start.elapsed().as_secs_f64()
    );
    write_vectors(&enriched, &a.output, &prov)
}

fn retrofit(a: &RetrofitArgs, options: serde_json::Value) -> Result<(), Failure> {
    let mut inputs: Vec<(&str, &Path)> = vec![
        ("embeddings", &a.input.embeddings),
        ("ontology", &a.ontology),
    ];
    if let Some(lex) = &a.lexicon {
        inputs.push(("lexicon", lex));
    }
    let prov = provenance(options, &inputs)?;
    let cfg = RetrofitConfig {
        alpha: a.alpha,
        beta: a.beta.0,
        strength: match a.strength {
            StrengthArg::None => Strength::None,
            StrengthArg::C => Strength::Combined,
            StrengthArg::I => Strength::Individual,
        },
        iterations: a.iters,
        convergence_tol: a.tol,
        mode: if a.jacobi {
            SweepMode::Jacobi
        } else {
            SweepMode::GaussSeidel
        },
    };
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;

    let set = read_embeddings(&a.input)?;
    let onto = load_ontology(&a.ontology)?;
    info!(
        "loaded ontology path={} words={} edges={}",
        a.ontology.display(),
        onto.word_count(),
        onto.edge_count()
    );
    let lex = match &a.lexicon {
        Some(path) => Some(read_lexicon(path, &a.lexicon_opts)?),
        None => None,
    };
    let start = Instant::now();
    let outcome = Retrofitter::new(&set, &onto, lex.as_ref(), cfg)?.run()?;
    info!(
        "retrofit sweeps={} last_change={:.3e} converged={} secs={:.2}",
        outcome.sweeps,
        outcome.last_change,
        outcome.converged,
        start.elapsed().as_secs_f64()
    );
    write_vectors(&outcome.embeddings, &a.output, &prov)
}

fn eval_sim(a: &EvalSimArgs, options: serde_json::Value) -> Result<(), Failure> {
    let mut inputs: Vec<(&str, &Path)> = vec![("embeddings", &a.input.embeddings)];
    inputs.extend(a.datasets.iter().map(|d| ("dataset", d.as_path())));
    let prov = provenance(options, &inputs)?;
    let set = read_embeddings(&a.input)?;
    let datasets = a
        .datasets
        .iter()
        .map(|p| load_similarity_dataset(p, a.skip_header))
        .collect::<Result<Vec<_>, _>>()?;
    let report = evaluate_similarity(&set, &datasets)?;
    for r in &report.results {
        info!(
            "dataset={} rho={:.4} used={} skipped={}",
            r.dataset, r.rho, r.used, r.skipped
        );
    }
    write_report(a.report.as_deref(), &prov, |w| write_eval_csv(&report, w))
}

fn resolve_dims(names: &[String], lex: &AffectLexicon) -> Result<Vec<usize>, Failure> {
    names
        .iter()
        .map(|name| {
            lex.dim_names()
                .iter()
                .position(|d| d.eq_ignore_ascii_case(name))
                .or_else(|| name.parse().ok().filter(|&i| i < lex.dim()))
                .ok_or_else(|| {
                    Failure::Data(format!(
                        "unknown affect dimension {name:?}; the lexicon has {}",
                        lex.dim_names().join(",")
                    ))
                })
        })
        .collect()
}

fn noise(a: &NoiseArgs, options: serde_json::Value) -> Result<(), Failure> {
    if a.ks.contains(&0) {
        return Err(Failure::Usage("--ks values must be at least 1".into()));
    }
    let prov = provenance(
        options,
        &[("embeddings", &a.input.embeddings), ("lexicon", &a.lexicon)],
    )?;
    let set = read_embeddings(&a.input)?;
    let lex = read_lexicon(&a.lexicon, &a.lexicon_opts)?;
    let dims = match &a.dims {
        Some(names) => resolve_dims(names, &lex)?,
        None => Vec::new(),
    };
    let start = Instant::now();
    let reports = noise_curve(&set, &lex, &dims, &a.ks)?;
    for r in &reports {
        for d in &r.dims {
            info!(
                "k={} dim={} pn={:.4} gn={:.4} evaluated={}",
                r.k, d.name, d.polarity_noise, d.granular_noise, r.evaluated
            );
        }
    }
    info!("noise secs={:.2}", start.elapsed().as_secs_f64());
    write_report(a.report.as_deref(), &prov, |w| write_noise_csv(&reports, w))
}

fn neighbors(a: &NeighborsArgs) -> Result<(), Failure> {
    if a.k == 0 {
        return Err(Failure::Usage("--k must be at least 1".into()));
    }
    let set = read_embeddings(&a.input)?;
    let found = knn(&set, &a.word, a.k, None::<&HashSet<String>>)?;
    let mut out = io::stdout().lock();
    for n in found {
        writeln!(out, "{}\t{:.6}", n.word, n.cosine)
            .map_err(|e| Failure::Io(format!("standard output: {e}")))?;
    }
    Ok(())
}
