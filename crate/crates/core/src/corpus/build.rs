use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::augment::{augment_replace, augment_split, mark_unsupported, split_pieces};
use super::{Augmentation, CorpusError, CorpusSample};
use crate::expr::{tree_to_traversal, ExprTree, Head, Library, TokenKind, Traversal};
use crate::latex::ParseOutcome;

/// What to do with trees that hold unsupported markers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentPolicy {
    Drop,
    Replace,
    Split,
    #[default]
    ReplaceAndSplit,
}

impl FromStr for AugmentPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "drop" => Ok(AugmentPolicy::Drop),
            "replace" => Ok(AugmentPolicy::Replace),
            "split" => Ok(AugmentPolicy::Split),
            "replace_and_split" => Ok(AugmentPolicy::ReplaceAndSplit),
            other => {
                Err(format!("unknown policy {other:?}; expected drop, replace, split or replace_and_split"))
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub policy: AugmentPolicy,
    /// Upper bound on distinct variables per sample; the library's variable
    /// count always applies as well.
    pub max_vars: Option<usize>,
    /// Terminal standing in for replaced subtrees. Defaults to `1` when the
    /// library has it, otherwise to the library's first terminal.
    pub placeholder: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_samples: usize,
    pub n_pages: usize,
    pub n_replaced: usize,
    pub n_split: usize,
    /// Source trees the policy discarded plus candidates that could not be
    /// renamed or encoded, plus unparseable inputs counted by the caller.
    pub n_dropped: usize,
    /// Part of `n_dropped`: inputs with no parseable segment.
    pub n_unparsed: usize,
    /// Candidates removed as exact repeats of an earlier traversal.
    pub n_duplicates: usize,
    pub token_histogram: BTreeMap<String, usize>,
    pub length_histogram: BTreeMap<usize, usize>,
}

/// Renames variables to `x1..xk` in first-appearance order; `None` when
/// there are more than `max_vars`.
pub fn canonicalize_variables(tree: &ExprTree, max_vars: usize) -> Option<ExprTree> {
    let names: Vec<String> = (1..=max_vars).map(|i| format!("x{i}")).collect();
    canonicalize_variables_as(tree, &names)
}

/// Renames the k-th distinct variable (first-appearance order) to `names[k]`.
pub fn canonicalize_variables_as<S: AsRef<str>>(tree: &ExprTree, names: &[S]) -> Option<ExprTree> {
    let vars = tree.variables();
    if vars.len() > names.len() {
        return None;
    }
    let map: HashMap<String, String> =
        vars.iter().zip(names).map(|(v, n)| ((*v).to_owned(), n.as_ref().to_owned())).collect();
    Some(tree.rename_variables(&map))
}

fn resolve_placeholder(lib: &Library, requested: Option<&str>) -> Result<Head, CorpusError> {
    let index = match requested {
        Some(name) => lib.get(name).filter(|&i| lib.token(i).is_terminal()),
        None => lib.get("1").or_else(|| lib.tokens().iter().position(|t| t.is_terminal())),
    };
    let index = index.ok_or_else(|| CorpusError::Placeholder(requested.unwrap_or("1").to_owned()))?;
    let token = lib.token(index);
    Ok(match token.kind {
        TokenKind::Variable => Head::Var(token.name.clone()),
        TokenKind::Constant => Head::Const(token.name.clone()),
        _ => Head::Placeholder(token.name.clone()),
    })
}

/// Candidates of one source tree, before renaming.
fn candidates(tree: &ExprTree, policy: AugmentPolicy, placeholder: &Head) -> Vec<(ExprTree, Augmentation)> {
    if !tree.contains_unsupported() {
        return vec![(tree.clone(), Augmentation::None)];
    }
    let tag = |trees: Vec<ExprTree>, a| trees.into_iter().map(move |t| (t, a));
    match policy {
        AugmentPolicy::Drop => Vec::new(),
        AugmentPolicy::Replace => vec![(augment_replace(tree, placeholder), Augmentation::Replaced)],
        AugmentPolicy::Split => tag(split_pieces(tree), Augmentation::Split).collect(),
        AugmentPolicy::ReplaceAndSplit => {
            let mut all = augment_split(tree, placeholder).into_iter();
            let replaced = all.next().map(|t| (t, Augmentation::Replaced));
            replaced.into_iter().chain(tag(all.collect(), Augmentation::Split)).collect()
        }
    }
}

/// Encoded samples of one source tree plus its drop count.
fn encode_tree(
    tree: &ExprTree,
    lib: &Library,
    config: &CorpusConfig,
    placeholder: &Head,
    var_names: &[&str],
) -> Encoded {
    let marked = mark_unsupported(tree, lib);
    let found = candidates(&marked, config.policy, placeholder);
    if found.is_empty() {
        return (Vec::new(), 1);
    }
    let mut dropped = 0;
    let mut out = Vec::with_capacity(found.len());
    for (candidate, aug) in found {
        let encoded =
            canonicalize_variables_as(&candidate, var_names).and_then(|t| tree_to_traversal(&t, lib).ok());
        match encoded {
            Some(t) => out.push((t, aug)),
            None => dropped += 1,
        }
    }
    (out, dropped)
}

/// Samples from one tree and the number of pieces dropped.
type Encoded = (Vec<(Traversal, Augmentation)>, usize);

/// Filters, augments, canonicalizes and deduplicates parsed expressions.
///
/// Pages are processed in parallel; deduplication runs over input order, so
/// the output is deterministic and the first provenance of a repeated
/// traversal is kept.
pub fn build_corpus(
    parsed: &[(u64, ParseOutcome)],
    lib: &Library,
    config: &CorpusConfig,
) -> Result<(Vec<CorpusSample>, CorpusStats), CorpusError> {
    let placeholder = resolve_placeholder(lib, config.placeholder.as_deref())?;
    let lib_vars = lib.variable_names();
    let n_vars = config.max_vars.unwrap_or(usize::MAX).min(lib_vars.len());
    let var_names = &lib_vars[..n_vars];

    let per_input: Vec<Vec<Encoded>> = parsed
        .par_iter()
        .map(|(_, outcome)| {
            outcome.trees.iter().map(|tree| encode_tree(tree, lib, config, &placeholder, var_names)).collect()
        })
        .collect();

    let mut stats = CorpusStats::default();
    let mut seen: HashSet<Traversal> = HashSet::new();
    let mut samples = Vec::new();
    for ((page_id, _), trees) in parsed.iter().zip(per_input) {
        for (encoded, dropped) in trees {
            stats.n_dropped += dropped;
            for (traversal, augmentation) in encoded {
                if seen.contains(&traversal) {
                    stats.n_duplicates += 1;
                    continue;
                }
                seen.insert(traversal.clone());
                samples.push(CorpusSample { traversal, page_id: *page_id, augmentation });
            }
        }
    }
    stats.record(&samples, lib);
    Ok((samples, stats))
}

impl CorpusStats {
    /// Fills the sample-derived fields from `samples`.
    pub fn record(&mut self, samples: &[CorpusSample], lib: &Library) {
        self.n_samples = samples.len();
        self.n_pages = samples.iter().map(|s| s.page_id).collect::<BTreeSet<_>>().len();
        self.n_replaced = samples.iter().filter(|s| s.augmentation == Augmentation::Replaced).count();
        self.n_split = samples.iter().filter(|s| s.augmentation == Augmentation::Split).count();
        self.token_histogram.clear();
        self.length_histogram.clear();
        for s in samples {
            *self.length_histogram.entry(s.traversal.len()).or_default() += 1;
            for name in s.traversal.names(lib) {
                *self.token_histogram.entry(name.to_owned()).or_default() += 1;
            }
        }
    }
}
