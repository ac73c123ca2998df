//! Binary artifact for a pruned PCM.
//!
//! Layout, all integers `u32` little-endian:
//! `"PPCM"`, version, N, K, N′, r_crc, row count, then each row as a
//! length-prefixed sorted column list, the length-prefixed CVN column list,
//! one length-prefixed origin cell per column, and finally a CRC-32 of all
//! preceding bytes.

use super::PrunedPcm;
use crate::gf2::SparseBinaryMatrix;
use std::path::Path;
use thiserror::Error;

pub const ARTIFACT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"PPCM";

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("artifact truncated at byte {0}")]
    Truncated(usize),
    #[error("not a pruned-PCM artifact")]
    BadMagic,
    #[error("unsupported artifact version {0} (expected {ARTIFACT_VERSION})")]
    UnsupportedVersion(u32),
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("malformed artifact: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn put(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&u32::try_from(v).expect("fits in u32").to_le_bytes());
}

fn put_list(out: &mut Vec<u8>, list: &[usize]) {
    put(out, list.len());
    for &v in list {
        put(out, v);
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn u32(&mut self) -> Result<u32, ArtifactError> {
        let end = self.pos + 4;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or(ArtifactError::Truncated(self.bytes.len()))?;
        self.pos = end;
        Ok(u32::from_le_bytes(chunk.try_into().expect("4 bytes")))
    }

    fn usize(&mut self) -> Result<usize, ArtifactError> {
        self.u32().map(|v| v as usize)
    }

    fn list(&mut self, bound: usize) -> Result<Vec<usize>, ArtifactError> {
        let len = self.usize()?;
        if len > bound {
            return Err(ArtifactError::Malformed(format!("list length {len} exceeds {bound}")));
        }
        (0..len).map(|_| self.usize()).collect()
    }
}

impl PrunedPcm {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&ARTIFACT_VERSION.to_le_bytes());
        for v in [self.block_len(), self.k, self.n_cols(), self.r_crc, self.n_rows()] {
            put(&mut out, v);
        }
        for r in 0..self.n_rows() {
            put_list(&mut out, self.matrix.row(r));
        }
        put_list(&mut out, &self.cvn_columns);
        for cell in &self.origin_map {
            put_list(&mut out, cell);
        }
        let sum = crc32fast::hash(&out);
        out.extend_from_slice(&sum.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ArtifactError> {
        if bytes.len() < 8 {
            return Err(ArtifactError::Truncated(bytes.len()));
        }
        if &bytes[..4] != MAGIC {
            return Err(ArtifactError::BadMagic);
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
        if version != ARTIFACT_VERSION {
            return Err(ArtifactError::UnsupportedVersion(version));
        }
        let mut rd = Reader { bytes, pos: 8 };
        let size = rd.usize()?;
        let k = rd.usize()?;
        let n_cols = rd.usize()?;
        let r_crc = rd.usize()?;
        let n_rows = rd.usize()?;
        if !size.is_power_of_two() || size < 2 || n_cols < size || k > size || r_crc > k {
            return Err(ArtifactError::Malformed("inconsistent header".into()));
        }
        if n_rows > n_cols {
            return Err(ArtifactError::Malformed("more rows than columns".into()));
        }
        let rows = (0..n_rows)
            .map(|_| rd.list(n_cols))
            .collect::<Result<Vec<_>, _>>()?;
        let cvn_columns = rd.list(n_cols)?;
        let origin_map = (0..n_cols)
            .map(|_| rd.list(usize::MAX))
            .collect::<Result<Vec<_>, _>>()?;
        let body_end = rd.pos;
        let stored = rd.u32()?;
        if rd.pos != bytes.len() {
            return Err(ArtifactError::Malformed("trailing bytes".into()));
        }
        let computed = crc32fast::hash(&bytes[..body_end]);
        if stored != computed {
            return Err(ArtifactError::ChecksumMismatch { stored, computed });
        }

        if rows.iter().any(|r| r.windows(2).any(|w| w[0] >= w[1])) {
            return Err(ArtifactError::Malformed("row indices not strictly sorted".into()));
        }
        let matrix = SparseBinaryMatrix::from_row_supports(n_cols, &rows)
            .map_err(|e| ArtifactError::Malformed(e.to_string()))?;
        let expected_cvns: Vec<usize> = (n_cols - size..n_cols).collect();
        if cvn_columns != expected_cvns {
            return Err(ArtifactError::Malformed("codeword columns are not the last N".into()));
        }
        if origin_map.iter().any(Vec::is_empty) {
            return Err(ArtifactError::Malformed("empty origin cell".into()));
        }
        Ok(PrunedPcm {
            matrix,
            log_n: size.trailing_zeros() as usize,
            k,
            r_crc,
            cvn_columns,
            origin_map,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), ArtifactError> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ArtifactError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
