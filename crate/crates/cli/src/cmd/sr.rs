use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::{anyhow, Context};
use mathcorpus::dsr::{
    builtin_specs, lambda_sweep, run_benchmark, write_metrics, Benchmark, BenchmarkSpec, DsrError,
    MetricsRow, SrConfig, Summary,
};
use mathcorpus::mlm::{self, MlmModel};
use serde::Deserialize;

use super::open;
use crate::config::{merged, path_or_cache};
use crate::{input, internal, mergeable, Failure, Outcome};

#[derive(Debug, Default, clap::Args, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct Args {
    /// Built-in benchmark name (nguyen-1 .. nguyen-12) or `all`.
    #[arg(long, conflicts_with = "spec")]
    pub benchmark: Option<String>,
    /// Benchmark JSON spec file.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// MLM1 weights used as the prior.
    #[arg(long, conflicts_with = "no_mlm")]
    pub with_mlm: Option<PathBuf>,
    /// Search without a prior.
    #[arg(long)]
    pub no_mlm: bool,
    /// Prior weight (default 0.5).
    #[arg(long, conflicts_with = "lambda_sweep")]
    pub lambda: Option<f64>,
    /// Run every lambda in 0.1, 0.2, ..., 1.0.
    #[arg(long)]
    pub lambda_sweep: bool,
    /// Independent runs per benchmark (default 10).
    #[arg(long)]
    pub runs: Option<usize>,
    /// Iteration budget per run (default 2000).
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Base seed; run k uses seed + k (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Expressions sampled per iteration (default 500).
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Metrics CSV (default: $MATHCORPUS_CACHE/metrics.csv).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

mergeable!(Args {
    benchmark, spec, with_mlm, lambda, runs, max_steps, seed, batch_size, out
} flags { no_mlm, lambda_sweep });

fn classify(e: DsrError) -> Failure {
    match e {
        DsrError::Io(_) => internal(e),
        other => input(other),
    }
}

fn specs(args: &Args) -> Result<Vec<BenchmarkSpec>, Failure> {
    match (&args.benchmark, &args.spec) {
        (Some(_), Some(_)) => Err(input(anyhow!("--benchmark and --spec are exclusive"))),
        (None, None) => Err(input(anyhow!("need --benchmark NAME|all or --spec PATH"))),
        (None, Some(path)) => {
            let spec: BenchmarkSpec = serde_json::from_reader(open(path, "spec")?)
                .with_context(|| format!("invalid benchmark spec {}", path.display()))
                .map_err(input)?;
            Ok(vec![spec])
        }
        (Some(name), None) if name == "all" => Ok(builtin_specs()),
        (Some(name), None) => {
            builtin_specs().into_iter().find(|s| &s.name == name).map(|s| vec![s]).ok_or_else(|| {
                input(anyhow!("unknown benchmark {name:?}; expected nguyen-1 .. nguyen-12 or all"))
            })
        }
    }
}

pub fn run(args: Args) -> Outcome {
    let config = args.config.clone();
    let args = merged(args, config.as_deref())?;
    if args.with_mlm.is_some() && args.no_mlm {
        return Err(input(anyhow!("--with-mlm and --no-mlm are exclusive")));
    }
    if args.with_mlm.is_none() && !args.no_mlm {
        return Err(input(anyhow!("need --with-mlm PATH or --no-mlm")));
    }
    if args.lambda.is_some() && args.lambda_sweep {
        return Err(input(anyhow!("--lambda and --lambda-sweep are exclusive")));
    }
    let runs = args.runs.unwrap_or(10);
    if runs == 0 {
        return Err(input(anyhow!("--runs must be at least 1")));
    }
    let specs = specs(&args)?;
    let out_path = path_or_cache(args.out.clone(), "out", "metrics.csv")?;

    let prior: Option<MlmModel<f64>> = match &args.with_mlm {
        Some(path) => {
            Some(mlm::load(path).with_context(|| format!("loading {}", path.display())).map_err(input)?)
        }
        None => None,
    };
    let benches = specs
        .into_iter()
        .map(|s| Benchmark::new(s, args.seed.unwrap_or(0)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(classify)?;
    if let Some(m) = &prior {
        for b in &benches {
            m.check_alignment(&b.lib)
                .with_context(|| format!("model does not fit benchmark {}", b.name()))
                .map_err(input)?;
        }
    }

    let lambdas = match (&prior, args.lambda_sweep) {
        (Some(_), true) => lambda_sweep(),
        (Some(_), false) => vec![args.lambda.unwrap_or(SrConfig::default().lambda)],
        (None, _) => vec![0.0],
    };
    let mut out = BufWriter::new(
        File::create(&out_path)
            .with_context(|| format!("cannot create {}", out_path.display()))
            .map_err(internal)?,
    );
    let defaults = SrConfig::default();
    for (i, &lambda) in lambdas.iter().enumerate() {
        let config = SrConfig {
            lambda,
            max_steps: args.max_steps.unwrap_or(defaults.max_steps),
            seed: args.seed.unwrap_or(defaults.seed),
            batch_size: args.batch_size.unwrap_or(defaults.batch_size),
            ..defaults.clone()
        };
        config.validate().map_err(input)?;
        let mut rows: Vec<MetricsRow> = Vec::new();
        for bench in &benches {
            let metrics = run_benchmark(bench, &config, runs, prior.as_ref()).map_err(classify)?;
            let block: Vec<MetricsRow> = metrics.iter().map(MetricsRow::from).collect();
            let s = Summary::of(&block.iter().collect::<Vec<_>>());
            println!(
                "benchmark={} with_mlm={} lambda={} runs={} recovery={:.1}% mean_steps={:.2} invalid={:.2}%",
                bench.name(),
                prior.is_some(),
                block[0].lambda,
                s.runs,
                s.recovery,
                s.mean_steps,
                s.mean_invalid
            );
            rows.extend(block);
        }
        write_metrics(&mut out, &rows, i == 0).map_err(internal)?;
    }
    std::io::Write::flush(&mut out).map_err(internal)?;
    Ok(())
}
