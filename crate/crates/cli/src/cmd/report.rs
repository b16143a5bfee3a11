use std::path::PathBuf;

use anyhow::{anyhow, Context};
use mathcorpus::dsr::{read_metrics, Report};

use super::open;
use crate::{input, internal, Outcome};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Metrics CSV files written by `sr`.
    #[arg(long, num_args = 1.., required = true)]
    pub metrics: Vec<PathBuf>,
    /// Text table output; an HTML copy goes next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// HTML output path (default: --out with extension html).
    #[arg(long)]
    pub html: Option<PathBuf>,
}

pub fn run(args: Args) -> Outcome {
    let mut rows = Vec::new();
    for path in &args.metrics {
        let block = read_metrics(open(path, "metrics")?)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(input)?;
        rows.extend(block);
    }
    if rows.is_empty() {
        return Err(input(anyhow!("no metrics rows")));
    }
    let report = Report::build(&rows);
    let text = report.to_text();
    print!("{text}");
    let html = args.html.or_else(|| args.out.as_ref().map(|p| p.with_extension("html")));
    if let Some(p) = &args.out {
        std::fs::write(p, &text).with_context(|| format!("writing {}", p.display())).map_err(internal)?;
    }
    if let Some(p) = &html {
        std::fs::write(p, report.to_html())
            .with_context(|| format!("writing {}", p.display()))
            .map_err(internal)?;
    }
    Ok(())
}
