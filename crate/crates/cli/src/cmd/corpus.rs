use std::fs::File;
use std::io::{BufRead, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{anyhow, Context};
use mathcorpus::corpus::{build_corpus, write_corpus, AugmentPolicy, CorpusConfig};
use mathcorpus::latex::parse_latex;
use mathcorpus::wiki::RawExpression;
use mathcorpus::Library;
use rayon::prelude::*;
use serde::Deserialize;

use super::open;
use crate::config::{merged, path_or_cache};
use crate::{input, internal, mergeable, Outcome};

#[derive(Debug, Default, clap::Args, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct Args {
    /// Extracted JSONL (default: $MATHCORPUS_CACHE/expressions.jsonl).
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    /// Corpus file (default: $MATHCORPUS_CACHE/corpus.txt); stats go to `<out>.stats.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Builtin library name or comma-separated token list (default: full).
    #[arg(long)]
    pub library: Option<String>,
    /// drop, replace, split or replace_and_split (default).
    #[arg(long)]
    pub policy: Option<AugmentPolicy>,
    /// Maximum distinct variables per expression.
    #[arg(long)]
    pub max_vars: Option<usize>,
    /// Terminal token standing in for unsupported subtrees.
    #[arg(long)]
    pub placeholder: Option<String>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

mergeable!(Args { input, out, library, policy, max_vars, placeholder } flags {});

pub fn stats_path(out: &std::path::Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".stats.json");
    PathBuf::from(name)
}

pub fn run(args: Args) -> Outcome {
    let config = args.config.clone();
    let args = merged(args, config.as_deref())?;
    let in_path = path_or_cache(args.input, "in", "expressions.jsonl")?;
    let out_path = path_or_cache(args.out, "out", "corpus.txt")?;
    let lib = Library::from_spec(args.library.as_deref().unwrap_or("full")).map_err(input)?;

    let mut raws = Vec::new();
    for (i, line) in open(&in_path, "expressions")?.lines().enumerate() {
        let line = line.with_context(|| format!("reading {}", in_path.display())).map_err(input)?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawExpression = serde_json::from_str(&line)
            .with_context(|| format!("{}:{}: not an expression record", in_path.display(), i + 1))
            .map_err(input)?;
        raws.push(raw);
    }
    if raws.is_empty() {
        return Err(input(anyhow!("{} holds no expressions", in_path.display())));
    }
    let parsed: Vec<_> =
        raws.par_iter().map(|r| parse_latex(&r.latex, &lib).ok().map(|o| (r.page_id, o))).collect();
    let n_unparsed = parsed.iter().filter(|p| p.is_none()).count();
    let parsed: Vec<_> = parsed.into_iter().flatten().collect();

    let config = CorpusConfig {
        policy: args.policy.unwrap_or_default(),
        max_vars: args.max_vars,
        placeholder: args.placeholder,
    };
    let (samples, mut stats) = build_corpus(&parsed, &lib, &config).map_err(input)?;
    stats.n_unparsed = n_unparsed;
    stats.n_dropped += n_unparsed;

    write_corpus(&samples, &lib, &out_path)
        .with_context(|| format!("writing {}", out_path.display()))
        .map_err(internal)?;
    let sidecar = stats_path(&out_path);
    let mut w = BufWriter::new(
        File::create(&sidecar)
            .with_context(|| format!("cannot create {}", sidecar.display()))
            .map_err(internal)?,
    );
    serde_json::to_writer_pretty(&mut w, &stats).map_err(internal)?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(internal)?;
    println!(
        "inputs={} samples={} pages={} replaced={} split={} dropped={} unparsed={} duplicates={}",
        raws.len(),
        stats.n_samples,
        stats.n_pages,
        stats.n_replaced,
        stats.n_split,
        stats.n_dropped,
        stats.n_unparsed,
        stats.n_duplicates
    );
    Ok(())
}
