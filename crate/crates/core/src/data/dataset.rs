use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::idx::IdxImageSet;
use crate::autodiff::Tensor;
use crate::error::{Error, Result};

/// Images thresholded to `{0, 1}`, one byte per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinarizedDataset {
    pub count: usize,
    pub dim: usize,
    pub bits: Vec<u8>,
    /// Threshold on the `[0, 1]` scale, stored as `f64` bits for `Eq`.
    threshold_bits: u64,
}

impl BinarizedDataset {
    pub fn from_bits(count: usize, dim: usize, bits: Vec<u8>, threshold: f64) -> Result<Self> {
        if bits.len() != count * dim {
            return Err(Error::shape("BinarizedDataset", count * dim, bits.len()));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::Format("binarized data must be 0 or 1".into()));
        }
        Ok(BinarizedDataset {
            count,
            dim,
            bits,
            threshold_bits: threshold.to_bits(),
        })
    }

    pub fn threshold(&self) -> f64 {
        f64::from_bits(self.threshold_bits)
    }

    pub fn image(&self, i: usize) -> &[u8] {
        &self.bits[i * self.dim..(i + 1) * self.dim]
    }

    /// Rows `indices` as a `[len, dim]` matrix of 0.0/1.0.
    pub fn batch(&self, indices: &[usize]) -> Tensor {
        let data = indices
            .iter()
            .flat_map(|&i| self.image(i).iter().map(|&b| b as f64))
            .collect();
        Tensor::matrix(indices.len(), self.dim, data).expect("non-empty batch")
    }

    /// Per-pixel fraction of ones.
    pub fn pixel_mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for i in 0..self.count {
            for (a, &b) in m.iter_mut().zip(self.image(i)) {
                *a += b as f64;
            }
        }
        m.iter().map(|v| v / self.count.max(1) as f64).collect()
    }

    /// The first `n` examples in a seeded random order.
    pub fn subset(&self, n: usize, seed: u64) -> Result<BinarizedDataset> {
        let order = shuffled_prefix(self.count, n, seed)?;
        let bits = order
            .iter()
            .flat_map(|&i| self.image(i).iter().copied())
            .collect();
        BinarizedDataset::from_bits(n, self.dim, bits, self.threshold())
    }
}

/// `pixel/255 > threshold`.
pub fn binarize(images: &IdxImageSet, threshold: f64) -> Result<BinarizedDataset> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::domain(
            "binarize",
            format!("threshold must lie in (0, 1), got {threshold}"),
        ));
    }
    let bits = images
        .pixels
        .iter()
        .map(|&p| (p as f64 / 255.0 > threshold) as u8)
        .collect();
    BinarizedDataset::from_bits(images.count, images.dim(), bits, threshold)
}

fn shuffled_prefix(count: usize, n: usize, seed: u64) -> Result<Vec<usize>> {
    if n > count {
        return Err(Error::domain(
            "subset",
            format!("requested {n} examples but only {count} exist"),
        ));
    }
    let mut idx: Vec<usize> = (0..count).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx.truncate(n);
    Ok(idx)
}

/// Fixed-size batches of dataset indices; the last partial batch is kept.
#[derive(Debug, Clone)]
pub struct Batches {
    order: Vec<usize>,
    batch_size: usize,
    pos: usize,
}

impl Batches {
    pub fn new(order: Vec<usize>, batch_size: usize) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::domain("Batches", "batch size must be at least 1"));
        }
        Ok(Batches {
            order,
            batch_size,
            pos: 0,
        })
    }

    pub fn num_batches(&self) -> usize {
        self.order.len().div_ceil(self.batch_size)
    }
}

impl Iterator for Batches {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.pos >= self.order.len() {
            return None;
        }
        let end = (self.pos + self.batch_size).min(self.order.len());
        let b = self.order[self.pos..end].to_vec();
        self.pos = end;
        Some(b)
    }
}

/// Seeded shuffle of `0..count`, first `n` kept, cut into batches.
pub fn subset_and_batch(
    dataset: &BinarizedDataset,
    n: usize,
    batch_size: usize,
    seed: u64,
) -> Result<Batches> {
    Batches::new(shuffled_prefix(dataset.count, n, seed)?, batch_size)
}
