//! The `harassnet` command line.
//!
//! Settings resolve in three layers: built-in defaults, a `key=value` file
//! given with `--config`, then flags. Exit codes are 0 on success, 1 when a
//! run fails and 2 for usage or configuration errors.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{prepare, stats_table, table_row_csv, Prepared};
pub use config::{BackendKind, RunSpec};

use crate::dataset::Split;
use crate::error::{Error, Result};
use crate::model::VariantId;

#[derive(Parser, Debug)]
#[command(name = "harassnet", version, about = "Multi-attention GRU harassment classifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: GlobalOpts,
}

#[derive(Args, Debug)]
struct GlobalOpts {
    /// key=value settings file
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Root seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    variant: Option<VariantId>,
    /// Harassment gate for label decisions [default: 0.33]
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// Seeds per variant for bench [default: 10]
    #[arg(long, global = true)]
    runs: Option<usize>,
    /// Output directory [default: out]
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// Pre-trained vectors, one `token v1 .. vd` per line
    #[arg(long, global = true, value_name = "FILE")]
    embeddings: Option<PathBuf>,
    #[arg(long, global = true)]
    freeze_embeddings: bool,
    #[arg(long, global = true)]
    no_augment: bool,
    /// Corpus column names, e.g. `text=tweet,harassment=label`
    #[arg(long, global = true, value_name = "MAP")]
    columns: Option<String>,
    /// Any config key, repeatable
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Class distribution per split
    Stats { corpus: Option<PathBuf> },
    /// Add a `tokens` column with the cleaned, tokenised text
    Preprocess {
        corpus: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Back-translate the rare classes of the training split
    Augment {
        corpus: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// identity, shuffle, http or replay
        #[arg(long)]
        backend: Option<String>,
        /// Cassette read by the replay backend
        #[arg(long)]
        cassette: Option<PathBuf>,
        /// Save every translation made to this cassette
        #[arg(long)]
        record: Option<PathBuf>,
        #[arg(long)]
        no_dedup: bool,
    },
    /// Train one model and save it
    Train { corpus: Option<PathBuf> },
    /// Score a split with a saved model
    Eval {
        corpus: Option<PathBuf>,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
    },
    /// Score texts from a CSV with `id` and `text` columns
    Predict {
        input: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Write here instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Train and evaluate every variant over several seeds
    Bench {
        corpus: Option<PathBuf>,
        /// Order rows by f1_macro, best first
        #[arg(long)]
        sort: bool,
    },
}

fn resolve(global: &GlobalOpts, corpus: Option<&PathBuf>) -> Result<RunSpec> {
    let mut spec = RunSpec::default();
    if let Some(path) = &global.config {
        spec.apply_file(path)?;
    }
    for kv in &global.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        spec.set(k, v)?;
    }
    if let Some(seed) = global.seed {
        spec.model.seed = seed;
        spec.train.seed = seed;
    }
    if let Some(v) = global.variant {
        spec.model.variant = v;
    }
    if let Some(t) = global.threshold {
        spec.train.threshold = t;
    }
    if let Some(r) = global.runs {
        spec.runs = r;
    }
    if let Some(d) = &global.out_dir {
        spec.out_dir = d.clone();
    }
    if let Some(e) = &global.embeddings {
        spec.embeddings = Some(e.clone());
    }
    if global.freeze_embeddings {
        spec.model.freeze_embeddings = true;
    }
    if global.no_augment {
        spec.augment = false;
    }
    if let Some(c) = &global.columns {
        spec.set("columns", c)?;
    }
    if let Some(c) = corpus {
        spec.corpus = Some(c.clone());
    }
    spec.model.validate()?;
    spec.train.validate()?;
    if let Some(c) = &spec.corpus {
        if !c.exists() {
            return Err(Error::MissingPath(c.clone()));
        }
    }
    Ok(spec)
}

fn dispatch(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Stats { corpus } => commands::stats(&resolve(g, corpus.as_ref())?),
        Command::Preprocess { corpus, output } => {
            commands::preprocess_cmd(&resolve(g, corpus.as_ref())?, output.as_deref())
        }
        Command::Augment {
            corpus,
            output,
            backend,
            cassette,
            record,
            no_dedup,
        } => {
            let mut spec = resolve(g, corpus.as_ref())?;
            if let Some(b) = backend {
                spec.backend = b.parse()?;
            }
            if let Some(c) = cassette {
                spec.cassette = Some(c.clone());
            }
            if *no_dedup {
                spec.policy.dedup = false;
            }
            commands::augment_cmd(&spec, output.as_deref(), record.as_deref())
        }
        Command::Train { corpus } => commands::train_cmd(&resolve(g, corpus.as_ref())?),
        Command::Eval {
            corpus,
            checkpoint,
            split,
        } => commands::eval_cmd(&resolve(g, corpus.as_ref())?, checkpoint, split.parse::<Split>()?),
        Command::Predict {
            input,
            checkpoint,
            output,
        } => commands::predict_cmd(&resolve(g, None)?, checkpoint, input, output.as_deref()),
        Command::Bench { corpus, sort } => commands::bench_cmd(&resolve(g, corpus.as_ref())?, *sort).map(|_| ()),
    }
}

/// Runs the command line on `args` (program name first) and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    }
}

pub fn main() -> i32 {
    run(std::env::args_os())
}
