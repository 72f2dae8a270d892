//! `GMIMG01` raw matrix dumps: the 8-byte magic `GMIMG01\n`, then rows,
//! cols, image height and image width as little-endian `u64`, then
//! `rows · cols` little-endian `f64` values, row-major. Each row is one
//! `height × width` image (`height · width == cols`).

use std::path::Path;

use crate::error::{Error, Result};

pub const GMIMG_MAGIC: &[u8; 8] = b"GMIMG01\n";

#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    pub rows: usize,
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
}

impl ImageGrid {
    pub fn new(rows: usize, height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * height * width {
            return Err(Error::shape(
                "ImageGrid",
                rows * height * width,
                values.len(),
            ));
        }
        Ok(ImageGrid {
            rows,
            height,
            width,
            values,
        })
    }

    pub fn cols(&self) -> usize {
        self.height * self.width
    }
}

pub fn encode_gmimg(grid: &ImageGrid) -> Vec<u8> {
    let mut out = GMIMG_MAGIC.to_vec();
    for d in [grid.rows, grid.cols(), grid.height, grid.width] {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for v in &grid.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_gmimg(bytes: &[u8]) -> Result<ImageGrid> {
    if bytes.len() < 8 || &bytes[..8] != GMIMG_MAGIC {
        return Err(Error::Format("not a GMIMG01 file".into()));
    }
    if bytes.len() < 40 {
        return Err(Error::Truncated {
            expected: 40,
            found: bytes.len(),
        });
    }
    let dim = |i: usize| {
        u64::from_le_bytes(bytes[8 + 8 * i..16 + 8 * i].try_into().expect("8 bytes")) as usize
    };
    let (rows, cols, height, width) = (dim(0), dim(1), dim(2), dim(3));
    if height.checked_mul(width) != Some(cols) {
        return Err(Error::Format(format!(
            "cols {cols} != height {height} × width {width}"
        )));
    }
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(40))
        .ok_or_else(|| Error::Format("GMIMG01 dimensions overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    let values = bytes[40..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    ImageGrid::new(rows, height, width, values)
}

pub fn write_gmimg(path: impl AsRef<Path>, grid: &ImageGrid) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_gmimg(grid)).map_err(|e| Error::io(path, e))
}

pub fn read_gmimg(path: impl AsRef<Path>) -> Result<ImageGrid> {
    let path = path.as_ref();
    decode_gmimg(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
}
