use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use mathcorpus::wiki::{
    build_category_tree, extract_math, parse_sql_dump, stream_pages, CategoryLink, Diagnostics, PageRow,
    SqlTable, WikiError,
};
use rayon::prelude::*;
use serde::Deserialize;

use super::open;
use crate::config::{merged, path_or_cache};
use crate::{input, internal, mergeable, Failure, Outcome};

#[derive(Debug, Default, clap::Args, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct Args {
    /// pages-articles XML dump; `-` or absent reads standard input.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    /// Output JSONL (default: $MATHCORPUS_CACHE/expressions.jsonl).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `categorylinks` SQL dump, for category filtering.
    #[arg(long)]
    pub sql_categorylinks: Option<PathBuf>,
    /// `page` SQL dump, for category filtering.
    #[arg(long)]
    pub sql_page: Option<PathBuf>,
    /// Root category; keeps pages in its tree.
    #[arg(long)]
    pub category: Option<String>,
    /// Maximum category depth below the root (default 3).
    #[arg(long)]
    pub depth: Option<usize>,
    /// Single worker thread.
    #[arg(long)]
    pub deterministic: bool,
    /// JSON file with defaults for these flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

mergeable!(Args { dump, out, sql_categorylinks, sql_page, category, depth } flags { deterministic });

const CHUNK: usize = 256;

fn wiki_input(path: &Path) -> impl Fn(WikiError) -> Failure + '_ {
    move |e| input(anyhow!("{}: {e}", path.display()))
}

fn category_pages(
    links_path: &Path,
    pages_path: &Path,
    root: &str,
    depth: usize,
) -> Result<(usize, BTreeSet<u64>), Failure> {
    let links = parse_sql_dump(open(links_path, "SQL dump")?, SqlTable::CategoryLinks)
        .map(|row| row.and_then(|r| CategoryLink::from_row(&r)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(wiki_input(links_path))?;
    let pages = parse_sql_dump(open(pages_path, "SQL dump")?, SqlTable::Page)
        .map(|row| row.and_then(|r| PageRow::from_row(&r)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(wiki_input(pages_path))?;
    let tree = build_category_tree(root, &links, &pages, depth).map_err(input)?;
    Ok((tree.nodes.len(), tree.page_ids()))
}

pub fn run(args: Args) -> Outcome {
    let config = args.config.clone();
    let args = merged(args, config.as_deref())?;
    let out_path = path_or_cache(args.out, "out", "expressions.jsonl")?;

    let filter = match (&args.sql_categorylinks, &args.sql_page, &args.category) {
        (None, None, None) => None,
        (Some(l), Some(p), Some(c)) => Some(category_pages(l, p, c, args.depth.unwrap_or(3))?),
        _ => {
            return Err(input(anyhow!(
                "category filtering needs --sql-categorylinks, --sql-page and --category together"
            )))
        }
    };

    let dump_name = args.dump.as_ref().map_or("<stdin>".into(), |p| p.display().to_string());
    let reader: Box<dyn BufRead> = match &args.dump {
        Some(p) if p.as_os_str() != "-" => Box::new(open(p, "dump")?),
        _ => Box::new(BufReader::new(std::io::stdin())),
    };
    let mut out = BufWriter::new(
        File::create(&out_path)
            .with_context(|| format!("cannot create {}", out_path.display()))
            .map_err(internal)?,
    );

    let mut diagnostics = Diagnostics::default();
    let (mut n_pages, mut n_expr) = (0usize, 0usize);
    let mut pages = stream_pages(reader);
    loop {
        let chunk = pages
            .by_ref()
            .take(CHUNK)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| input(anyhow!("{dump_name}: {e}")))?;
        if chunk.is_empty() {
            break;
        }
        n_pages += chunk.len();
        let extracted: Vec<_> = chunk
            .par_iter()
            .filter(|p| filter.as_ref().is_none_or(|(_, ids)| ids.contains(&p.page_id)))
            .map(|p| {
                let mut d = Diagnostics::default();
                (extract_math(p, &mut d), d)
            })
            .collect();
        for (records, d) in extracted {
            diagnostics.merge(d);
            for r in records {
                serde_json::to_writer(&mut out, &r).map_err(internal)?;
                out.write_all(b"\n").map_err(internal)?;
                n_expr += 1;
            }
        }
    }
    out.flush().map_err(internal)?;
    let mut summary = format!(
        "pages={n_pages} expressions={n_expr} unterminated={} empty={} skipped_pages={}",
        diagnostics.unterminated, diagnostics.empty, diagnostics.skipped_pages
    );
    if let Some((n_categories, ids)) = &filter {
        summary.push_str(&format!(" categories={n_categories} category_pages={}", ids.len()));
    }
    println!("{summary}");
    Ok(())
}
