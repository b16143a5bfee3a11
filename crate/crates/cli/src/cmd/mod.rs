pub mod corpus;
pub mod extract;
pub mod mlm_train;
pub mod report;
pub mod sr;

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::Context;

use crate::{input, Failure};

/// Opens an input file; failures are input errors naming the path.
pub fn open(path: &Path, what: &str) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .with_context(|| format!("cannot open {what} {}", path.display()))
        .map_err(input)
}
