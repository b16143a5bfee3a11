use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{Augmentation, CorpusError, CorpusSample};
use crate::expr::{Library, Traversal};

pub const HEADER_PREFIX: &str = "#mathcorpus v1 vocab=";

/// Writes the v1 text format: a header line naming the library, then one
/// `page_id<TAB>augmentation<TAB>tokens` line per sample.
pub fn write_corpus(samples: &[CorpusSample], lib: &Library, path: &Path) -> Result<(), CorpusError> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{HEADER_PREFIX}{}", lib.name())?;
    for s in samples {
        writeln!(out, "{}\t{}\t{}", s.page_id, s.augmentation.as_str(), s.traversal.display(lib))?;
    }
    out.flush()?;
    Ok(())
}

/// The library name recorded in a corpus header; [`Library::from_spec`]
/// rebuilds the library from it.
pub fn read_corpus_vocab(path: &Path) -> Result<String, CorpusError> {
    let mut header = String::new();
    BufReader::new(File::open(path)?).read_line(&mut header)?;
    let header = header.trim_end_matches(['\n', '\r']);
    header
        .strip_prefix(HEADER_PREFIX)
        .map(str::to_owned)
        .ok_or_else(|| CorpusError::FormatVersionMismatch(header.to_owned()))
}

/// Reads a v1 corpus file; every traversal must be complete over `lib`.
pub fn read_corpus(path: &Path, lib: &Library) -> Result<Vec<CorpusSample>, CorpusError> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if !header.starts_with(HEADER_PREFIX) {
        return Err(CorpusError::FormatVersionMismatch(header));
    }
    let mut samples = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let line_no = i + 2;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let malformed = |reason: &str| CorpusError::Malformed { line: line_no, reason: reason.to_owned() };
        let mut fields = line.splitn(3, '\t');
        let (Some(page), Some(aug), Some(tokens)) = (fields.next(), fields.next(), fields.next()) else {
            return Err(malformed("expected three tab-separated fields"));
        };
        let page_id = page.parse().map_err(|_| malformed("page id is not an integer"))?;
        let augmentation = Augmentation::parse(aug).ok_or_else(|| malformed("unknown augmentation"))?;
        let names: Vec<&str> = tokens.split(' ').collect();
        let traversal = Traversal::from_names(&names, lib).map_err(|e| match e {
            crate::ExprError::UnknownToken(t) => CorpusError::VocabMismatch(t),
            other => malformed(&other.to_string()),
        })?;
        if !traversal.is_complete(lib) {
            return Err(malformed("traversal is not complete"));
        }
        samples.push(CorpusSample { traversal, page_id, augmentation });
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_corpus_is_header_only() {
        let lib = Library::builtin("koza1").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.txt");
        write_corpus(&[], &lib, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "#mathcorpus v1 vocab=koza1\n");
        assert!(read_corpus(&path, &lib).unwrap().is_empty());
    }

    #[test]
    fn unknown_token() {
        let lib = Library::builtin("koza1").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.txt");
        std::fs::write(&path, "#mathcorpus v1 vocab=koza1\n# comment\n3\tnone\tsin foo\n").unwrap();
        assert!(matches!(read_corpus(&path, &lib), Err(CorpusError::VocabMismatch(t)) if t == "foo"));
        std::fs::write(&path, "#mathcorpus v2 vocab=koza1\n").unwrap();
        assert!(matches!(read_corpus(&path, &lib), Err(CorpusError::FormatVersionMismatch(_))));
    }

    #[test]
    fn round_trip_with_comments() {
        let lib = Library::builtin("koza1").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.txt");
        std::fs::write(
            &path,
            "#mathcorpus v1 vocab=koza1\n# note\n3\tsplit\tsin x1\n4\treplaced\tadd x1 x1\n",
        )
        .unwrap();
        let s = read_corpus(&path, &lib).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[1].augmentation, Augmentation::Replaced);
        let out = dir.path().join("d.txt");
        write_corpus(&s, &lib, &out).unwrap();
        assert_eq!(read_corpus(&out, &lib).unwrap(), s);
    }
}
