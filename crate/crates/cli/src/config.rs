//! `--config` files and `MATHCORPUS_CACHE` defaults.
//!
//! A config file is a JSON object whose keys are the subcommand's long flag
//! names. Flags given on the command line win over the file.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use serde::de::DeserializeOwned;

use crate::{input, Failure};

pub const CACHE_ENV: &str = "MATHCORPUS_CACHE";

/// Options that can also come from a config file.
pub trait Mergeable: DeserializeOwned + Sized {
    /// Fills every unset option of `self` from `file`.
    fn fill_from(self, file: Self) -> Self;
}

/// Loads `path` (if any) and merges it under `flags`.
pub fn merged<T: Mergeable>(flags: T, path: Option<&Path>) -> Result<T, Failure> {
    let Some(path) = path else { return Ok(flags) };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))
        .map_err(input)?;
    let file: T = serde_json::from_str(&text)
        .with_context(|| format!("invalid config {}", path.display()))
        .map_err(input)?;
    Ok(flags.fill_from(file))
}

/// The flag value, else `$MATHCORPUS_CACHE/<file>`, else a usage error.
pub fn path_or_cache(value: Option<PathBuf>, flag: &str, file: &str) -> Result<PathBuf, Failure> {
    if let Some(p) = value {
        return Ok(p);
    }
    match std::env::var_os(CACHE_ENV) {
        Some(dir) => Ok(Path::new(&dir).join(file)),
        None => Err(input(anyhow!("missing --{flag} (or set {CACHE_ENV})"))),
    }
}

/// Generates `fill_from` for structs whose fields are all `Option`s or `bool`s.
#[macro_export]
macro_rules! mergeable {
    ($ty:ty { $($opt:ident),* $(,)? } flags { $($flag:ident),* $(,)? }) => {
        impl $crate::config::Mergeable for $ty {
            fn fill_from(self, file: Self) -> Self {
                Self {
                    $($opt: self.$opt.or(file.$opt),)*
                    $($flag: self.$flag || file.$flag,)*
                    config: self.config,
                }
            }
        }
    };
}
