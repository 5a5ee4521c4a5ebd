use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "chapterfn", version, about = "Classify the structure function of chapters in academic articles")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// TOML run configuration; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random choice (default 42).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for folds and grid rows.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Reject malformed records (the default).
    #[arg(long, global = true, conflicts_with = "lenient")]
    pub strict: bool,
    /// Skip malformed records with a warning.
    #[arg(long, global = true)]
    pub lenient: bool,
    /// Output directory; for `predict`, the output file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Corpus file (JSONL, or xmlish for `.xml`).
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Override the format guessed from the extension: jsonl or xmlish.
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct NeuralArgs {
    /// Chapter representation: title, content or title+content.
    #[arg(long)]
    pub base: Option<String>,
    /// Content encoder: bilstm, hierarchical, hierarchical+attention,
    /// head+tail:P or head:P.
    #[arg(long)]
    pub encoder: Option<String>,
    /// Context window; 0 disables fusion.
    #[arg(long)]
    pub window: Option<usize>,
    /// Context direction: previous, next or both.
    #[arg(long)]
    pub direction: Option<String>,
    /// Fusion encoder: bilstm or cnn.
    #[arg(long)]
    pub fusion: Option<String>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Take the model from a registered grid (with --row), or `CRF`.
    #[arg(long)]
    pub experiment: Option<String>,
    /// Row name within --experiment.
    #[arg(long)]
    pub row: Option<String>,
    /// nb, lr, knn, svm, crf or neural.
    #[arg(long)]
    pub family: Option<String>,
    /// Classical text field: title, content or title+content.
    #[arg(long, default_value = "content")]
    pub field: String,
    /// Additional characteristics, e.g. loc+cite+ft.
    #[arg(long, default_value = "none")]
    pub chars: String,
    #[command(flatten)]
    pub neural: NeuralArgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded synthetic corpus and its ground-truth sidecar.
    Synth {
        #[arg(long)]
        articles: Option<usize>,
        /// jsonl or xmlish.
        #[arg(long, default_value = "jsonl")]
        format: String,
    },
    /// Validate a corpus and write it back as normalized JSONL.
    Ingest(CorpusArgs),
    /// Chapter counts per class.
    Stats(CorpusArgs),
    /// Cohen's kappa between two annotations of the same chapters.
    Kappa {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Fit a feature pipeline and emit its vocabulary and vectors.
    Featurize {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, default_value = "content")]
        field: String,
        #[arg(long, default_value = "none")]
        chars: String,
    },
    /// Train one model on a corpus and save the artifact.
    Train {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Score a saved model on a corpus disjoint from its training data.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Cross-validate (or hold out) one model.
    Cv {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// cv or holdout.
        #[arg(long)]
        protocol: Option<String>,
    },
    /// Run a registered experiment grid, or `CRF`.
    Experiment {
        id: String,
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Keep only rows with this context window.
        #[arg(long)]
        window: Option<usize>,
        /// Keep only rows with this context direction.
        #[arg(long)]
        direction: Option<String>,
        /// Keep only the named rows.
        #[arg(long)]
        row: Vec<String>,
        /// cv or holdout.
        #[arg(long)]
        protocol: Option<String>,
    },
    /// Label an unlabeled corpus with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Overwrite labels already present.
        #[arg(long)]
        force: bool,
    },
    /// Train on one corpus and test on another.
    Opentest {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Yearly class proportions and average frequencies.
    Timeseries(CorpusArgs),
    /// Weighted chi-square ranking with Pareto shares, and contextual chi-square.
    ChiAnalysis {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, default_value_t = 100)]
        top_k: usize,
        #[arg(long, default_value_t = 0)]
        drop_top: usize,
        #[arg(long, default_value = "content")]
        field: String,
        /// Terms kept per (class, offset) in the contextual table.
        #[arg(long, default_value_t = 20)]
        context_top: usize,
    },
    /// Train and test a fusion model with ordered and shuffled contexts.
    AblateOrder {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        neural: NeuralArgs,
    },
    /// Finite-difference checks of every neural building block.
    Gradcheck {
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 1e-5)]
        eps: f64,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
}
