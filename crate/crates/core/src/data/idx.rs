use std::io::{Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use crate::error::{Error, Result};

/// Big-endian magic of an unsigned-byte, three-dimensional IDX file.
pub const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;
const HEADER_LEN: usize = 16;

/// Grayscale images in IDX layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImageSet {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

impl IdxImageSet {
    pub fn new(count: usize, rows: usize, cols: usize, pixels: Vec<u8>) -> Result<Self> {
        let expected = count * rows * cols;
        if pixels.len() != expected {
            return Err(Error::Truncated {
                expected,
                found: pixels.len(),
            });
        }
        Ok(IdxImageSet {
            count,
            rows,
            cols,
            pixels,
        })
    }

    pub fn dim(&self) -> usize {
        self.rows * self.cols
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let d = self.dim();
        &self.pixels[i * d..(i + 1) * d]
    }
}

fn be_u32(b: &[u8]) -> u32 {
    u32::from_be_bytes([b[0], b[1], b[2], b[3]])
}

pub fn parse_idx(bytes: &[u8]) -> Result<IdxImageSet> {
    if bytes.len() < 4 {
        return Err(Error::Truncated {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let magic = be_u32(bytes);
    if magic != IDX_IMAGE_MAGIC {
        return Err(Error::Format(format!(
            "expected IDX image magic 0x{IDX_IMAGE_MAGIC:08x}, found 0x{magic:08x}"
        )));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let dims = [
        be_u32(&bytes[4..]),
        be_u32(&bytes[8..]),
        be_u32(&bytes[12..]),
    ]
    .map(|d| d as usize);
    let expected = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::Format(format!("IDX dimensions {dims:?} overflow")))?;
    if bytes.len() != expected {
        return Err(Error::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    IdxImageSet::new(dims[0], dims[1], dims[2], bytes[HEADER_LEN..].to_vec())
}

pub fn serialize_idx(set: &IdxImageSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + set.pixels.len());
    out.extend_from_slice(&IDX_IMAGE_MAGIC.to_be_bytes());
    for d in [set.count, set.rows, set.cols] {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    out.extend_from_slice(&set.pixels);
    out
}

/// Inflates the buffer first when it starts with the gzip magic.
pub fn maybe_gunzip(bytes: Vec<u8>) -> Result<Vec<u8>> {
    if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(bytes.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::Format(format!("gzip: {e}")))?;
        Ok(out)
    } else {
        Ok(bytes)
    }
}

/// Reads an IDX image file, plain or gzip-compressed.
pub fn read_idx_file(path: impl AsRef<Path>) -> Result<IdxImageSet> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_idx(&maybe_gunzip(bytes)?)
}

/// Writes an IDX image file, gzip-compressed when `gzip` is set.
pub fn write_idx_file(path: impl AsRef<Path>, set: &IdxImageSet, gzip: bool) -> Result<()> {
    let path = path.as_ref();
    let raw = serialize_idx(set);
    let bytes = if gzip {
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        enc.write_all(&raw)
            .and_then(|_| enc.finish())
            .map_err(|e| Error::io(path, e))?
    } else {
        raw
    };
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
