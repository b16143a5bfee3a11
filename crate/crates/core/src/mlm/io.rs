use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{param_count, MlmError, MlmModel};
use crate::{Library, Scalar, Token};

pub const MAGIC: &[u8; 4] = b"MLM1";
const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    version: u32,
    vocab: Vec<String>,
    d_emb: usize,
    hidden: usize,
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> MlmError + '_ {
    move |source| MlmError::Io { path: path.to_owned(), source }
}

/// Layout: magic, `u32` LE header length, JSON header, then every parameter
/// as a little-endian `f64` in declaration order.
pub fn save<T: Scalar>(model: &MlmModel<T>, path: &Path) -> Result<(), MlmError> {
    let header = Header {
        version: VERSION,
        vocab: model.vocab.names().iter().map(|s| s.to_string()).collect(),
        d_emb: model.d_emb,
        hidden: model.hidden,
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    let mut write = |bytes: &[u8]| w.write_all(bytes).map_err(io_err(path));
    write(MAGIC)?;
    write(&(json.len() as u32).to_le_bytes())?;
    write(&json)?;
    for p in &model.params {
        write(&p.as_f64().to_le_bytes())?;
    }
    w.flush().map_err(io_err(path))
}

/// Reads a weight file. The vocabulary is rebuilt from token names with
/// inferred kinds; call [`MlmModel::check_alignment`] against the library the
/// model will be used with.
pub fn load<T: Scalar>(path: &Path) -> Result<MlmModel<T>, MlmError> {
    let mut r = BufReader::new(File::open(path).map_err(io_err(path))?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io_err(path))?;
    if &magic != MAGIC {
        return Err(MlmError::FormatVersion(format!("bad magic {magic:?}")));
    }
    let mut len = [0u8; 4];
    r.read_exact(&mut len).map_err(io_err(path))?;
    let mut json = vec![0u8; u32::from_le_bytes(len) as usize];
    r.read_exact(&mut json).map_err(io_err(path))?;
    let header: Header =
        serde_json::from_slice(&json).map_err(|e| MlmError::FormatVersion(format!("bad header: {e}")))?;
    if header.version != VERSION {
        return Err(MlmError::FormatVersion(format!("version {} (expected {VERSION})", header.version)));
    }
    let tokens: Vec<Token> = header.vocab.iter().map(|n| Token::infer(n)).collect();
    let vocab = Library::new("mlm", tokens).map_err(|e| MlmError::VocabMismatch(e.to_string()))?;
    let n = param_count(vocab.len(), header.d_emb, header.hidden);
    let mut raw = Vec::new();
    r.read_to_end(&mut raw).map_err(io_err(path))?;
    if raw.len() != 8 * n {
        return Err(MlmError::FormatVersion(format!(
            "expected {} parameter bytes, found {}",
            8 * n,
            raw.len()
        )));
    }
    let params =
        raw.chunks_exact(8).map(|c| T::of(f64::from_le_bytes(c.try_into().expect("8-byte chunk")))).collect();
    Ok(MlmModel::from_parts(vocab, header.d_emb, header.hidden, params))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let lib = Library::builtin("koza2c").unwrap();
        let mut m = MlmModel::<f64>::init(&lib, 3, 4, 5).unwrap();
        m.params[7] = f64::MIN_POSITIVE / 3.0;
        m.params[8] = -0.0;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.mlm");
        save(&m, &path).unwrap();
        let back: MlmModel<f64> = load(&path).unwrap();
        back.check_alignment(&lib).unwrap();
        assert_eq!(back.params.len(), m.params.len());
        for (a, b) in back.params.iter().zip(&m.params) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.vocab().names(), m.vocab().names());
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"MLM1");
    }

    #[test]
    fn rejects_other_formats() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad");
        std::fs::write(&path, b"MLM2\0\0\0\0").unwrap();
        assert!(matches!(load::<f64>(&path), Err(MlmError::FormatVersion(_))));
        assert!(matches!(load::<f64>(&dir.path().join("missing")), Err(MlmError::Io { .. })));
    }
}
