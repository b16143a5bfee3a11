use std::path::PathBuf;

use anyhow::Context;
use mathcorpus::corpus::{read_corpus, read_corpus_vocab};
use mathcorpus::mlm::{self, train_with, MlmError, MlmModel, TrainConfig};
use mathcorpus::nn::OptimizerKind;
use mathcorpus::Library;
use serde::Deserialize;

use crate::config::{merged, path_or_cache};
use crate::{input, internal, mergeable, Failure, Outcome};

#[derive(Debug, Default, clap::Args, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct Args {
    /// Corpus file (default: $MATHCORPUS_CACHE/corpus.txt).
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// MLM1 weight file (default: $MATHCORPUS_CACHE/model.mlm1).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Vocabulary (default: the corpus header's library).
    #[arg(long)]
    pub library: Option<String>,
    /// Hidden size (default 256).
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Embedding size (default 64).
    #[arg(long)]
    pub d_emb: Option<usize>,
    /// Epochs (default 200).
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Learning rate (default 0.002).
    #[arg(long)]
    pub lr: Option<f64>,
    /// Minibatch size (default 64).
    #[arg(long)]
    pub batch: Option<usize>,
    /// SGD momentum (default 0.9).
    #[arg(long)]
    pub momentum: Option<f64>,
    /// sgd (default) or adam.
    #[arg(long)]
    pub optimizer: Option<OptimizerKind>,
    /// Seed for initialization and shuffling (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Stop after this many updates.
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

mergeable!(Args {
    corpus, out, library, hidden, d_emb, epochs, lr, batch, momentum, optimizer, seed, max_steps
} flags {});

fn classify(e: MlmError) -> Failure {
    match e {
        MlmError::Io { .. } => internal(e),
        other => input(other),
    }
}

pub fn run(args: Args) -> Outcome {
    let config = args.config.clone();
    let args = merged(args, config.as_deref())?;
    let corpus_path = path_or_cache(args.corpus, "corpus", "corpus.txt")?;
    let out_path = path_or_cache(args.out, "out", "model.mlm1")?;

    let spec = match args.library {
        Some(s) => s,
        None => read_corpus_vocab(&corpus_path)
            .with_context(|| format!("reading {}", corpus_path.display()))
            .map_err(input)?,
    };
    let lib = Library::from_spec(&spec).map_err(input)?;
    let samples = read_corpus(&corpus_path, &lib)
        .with_context(|| format!("reading {}", corpus_path.display()))
        .map_err(input)?;
    let corpus: Vec<_> = samples.into_iter().map(|s| s.traversal).collect();

    let defaults = TrainConfig::default();
    let cfg = TrainConfig {
        epochs: args.epochs.unwrap_or(defaults.epochs),
        lr: args.lr.unwrap_or(defaults.lr),
        batch_size: args.batch.unwrap_or(defaults.batch_size),
        momentum: args.momentum.unwrap_or(defaults.momentum),
        optimizer: args.optimizer.unwrap_or(defaults.optimizer),
        seed: args.seed.unwrap_or(defaults.seed),
        max_steps: args.max_steps,
    };
    let mut model: MlmModel<f64> =
        MlmModel::init(&lib, args.d_emb.unwrap_or(64), args.hidden.unwrap_or(256), cfg.seed)
            .map_err(classify)?;
    println!(
        "sequences={} vocab={} d_emb={} hidden={} params={}",
        corpus.len(),
        lib.len(),
        model.d_emb(),
        model.hidden(),
        model.params.len()
    );
    train_with(&mut model, &corpus, &cfg, |k, loss| println!("epoch={k} loss={loss:.6}"))
        .map_err(classify)?;
    mlm::save(&model, &out_path).map_err(classify)?;
    println!("wrote {}", out_path.display());
    Ok(())
}
