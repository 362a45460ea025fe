//! Bit-exact dictionary file format.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic   "SOPC"            4 bytes
//! version u32               currently 1
//! L       u32               patch side
//! K       u32               basis count
//! basis   K*L*L f32         row-major by basis index
//! var     K f32             per-basis variances
//! seed    u64
//! meta    u32 length + UTF-8 bytes
//! ```
//!
//! Variances are recomputed from the decoded basis on read; the stored values
//! act as an integrity check.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::Dictionary;

const MAGIC: &[u8; 4] = b"SOPC";
const VERSION: u32 = 1;

pub(super) fn write(dict: &Dictionary, path: &Path) -> Result<()> {
    let mut buf: Vec<u8> = Vec::with_capacity(16 + dict.basis().len() * 4);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(dict.patch_side() as u32).to_le_bytes());
    buf.extend_from_slice(&(dict.n_basis() as u32).to_le_bytes());
    for v in dict.basis() {
        buf.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    for v in dict.basis_variance() {
        buf.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    buf.extend_from_slice(&dict.seed().to_le_bytes());
    let meta = dict.meta().as_bytes();
    buf.extend_from_slice(&(meta.len() as u32).to_le_bytes());
    buf.extend_from_slice(meta);

    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&buf).map_err(|e| Error::io(path, e))?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format(format!(
                "truncated dictionary file: wanted {} bytes at offset {}, have {}",
                n,
                self.pos,
                self.bytes.len()
            )));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub(super) fn read(path: &Path) -> Result<Dictionary> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let mut r = Reader {
        bytes: &bytes,
        pos: 0,
    };

    if r.take(4)? != MAGIC {
        return Err(Error::Format("bad magic, not a dictionary file".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported format version {version}")));
    }
    let patch_side = r.u32()? as usize;
    let n_basis = r.u32()? as usize;
    if patch_side < 4 {
        return Err(Error::Format(format!("declared patch side {patch_side} < 4")));
    }
    if n_basis == 0 {
        return Err(Error::Format("declared basis count is zero".into()));
    }
    let dim = patch_side * patch_side;

    let mut basis = Vec::with_capacity(n_basis * dim);
    for _ in 0..n_basis * dim {
        basis.push(r.f32()? as f64);
    }
    let mut stored_var = Vec::with_capacity(n_basis);
    for _ in 0..n_basis {
        stored_var.push(r.f32()?);
    }
    let seed = r.u64()?;
    let meta_len = r.u32()? as usize;
    let meta = std::str::from_utf8(r.take(meta_len)?)
        .map_err(|_| Error::Format("metadata is not valid UTF-8".into()))?
        .to_string();
    if r.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after metadata",
            bytes.len() - r.pos
        )));
    }

    let dict = Dictionary::new(patch_side, basis, seed, meta)
        .map_err(|e| Error::Format(format!("invalid dictionary payload: {e}")))?;
    for (j, (&got, recomputed)) in stored_var.iter().zip(dict.basis_variance()).enumerate() {
        if got != *recomputed as f32 {
            return Err(Error::Format(format!(
                "stored variance of basis {j} does not match its entries"
            )));
        }
    }
    Ok(dict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pc::{train_dictionary, PcHyperparams};

    fn trained() -> Dictionary {
        let mut corpus = Vec::new();
        for t in 0..8 {
            corpus.push((0..16).map(|i| ((i + t) % 4) as f64 / 4.0 - 0.4).collect());
        }
        let hp = PcHyperparams {
            dict_epochs: 2,
            seed: 3,
            ..PcHyperparams::default()
        };
        train_dictionary(&corpus, 4, 2, &hp, "unit").unwrap()
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let dict = trained();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.sopc");
        dict.write_to(&path).unwrap();
        let back = Dictionary::read_from(&path).unwrap();
        assert_eq!(dict, back);

        // A second round trip through the decoded value is also exact.
        let path2 = dir.path().join("d2.sopc");
        back.write_to(&path2).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn corrupt_magic_is_rejected() {
        let dict = trained();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.sopc");
        dict.write_to(&path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(
            Dictionary::read_from(&path),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn zero_basis_count_is_rejected() {
        let dict = trained();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.sopc");
        dict.write_to(&path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[12..16].copy_from_slice(&0u32.to_le_bytes());
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(
            Dictionary::read_from(&path),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn truncation_is_rejected() {
        let dict = trained();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.sopc");
        dict.write_to(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 9]).unwrap();
        assert!(matches!(
            Dictionary::read_from(&path),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn corrupt_variance_is_rejected() {
        let dict = trained();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.sopc");
        dict.write_to(&path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        // First variance starts after the header and basis payload.
        let var_off = 16 + dict.basis().len() * 4;
        bytes[var_off..var_off + 4].copy_from_slice(&99.0f32.to_le_bytes());
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(
            Dictionary::read_from(&path),
            Err(Error::Format(_))
        ));
    }
}
