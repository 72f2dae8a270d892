//! IDX parsing, binarization and batching.

use gmvae_core::data::*;
use proptest::prelude::*;

fn packaged(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/mnist")
        .join(name)
}

#[test]
fn packaged_files_parse() {
    let train = read_idx_file(packaged("train-images-idx3-ubyte.gz")).unwrap();
    assert_eq!((train.count, train.rows, train.cols), (4000, 28, 28));
    assert_eq!(train.pixels.len(), 4000 * 784);
    let test = read_idx_file(packaged("t10k-images-idx3-ubyte.gz")).unwrap();
    assert_eq!((test.count, test.rows, test.cols), (1000, 28, 28));
    // Digits: mostly background with some ink.
    let ink = train.pixels.iter().filter(|&&p| p > 127).count() as f64 / train.pixels.len() as f64;
    assert!((0.05..0.3).contains(&ink), "ink fraction {ink}");
}

#[test]
fn header_is_big_endian() {
    let set = IdxImageSet::new(2, 3, 1, vec![0, 10, 20, 30, 40, 255]).unwrap();
    let bytes = serialize_idx(&set);
    assert_eq!(&bytes[..4], &[0, 0, 8, 3]);
    assert_eq!(&bytes[4..8], &[0, 0, 0, 2]);
    assert_eq!(&bytes[8..12], &[0, 0, 0, 3]);
    assert_eq!(&bytes[12..16], &[0, 0, 0, 1]);
    assert_eq!(bytes.len(), 16 + 6);
}

#[test]
fn malformed_files_rejected() {
    let set = IdxImageSet::new(2, 2, 2, vec![1; 8]).unwrap();
    let bytes = serialize_idx(&set);
    assert!(parse_idx(&bytes[..bytes.len() - 1]).is_err());
    let mut bad = bytes.clone();
    bad[3] = 1;
    assert!(parse_idx(&bad).is_err());
    assert!(parse_idx(&bytes[..10]).is_err());
}

#[test]
fn gzip_and_plain_files_agree() {
    let dir = tempfile::tempdir().unwrap();
    let set = IdxImageSet::new(3, 2, 2, (0..12).map(|i| (i * 20) as u8).collect()).unwrap();
    let (a, b) = (dir.path().join("a.idx"), dir.path().join("a.idx.gz"));
    write_idx_file(&a, &set, false).unwrap();
    write_idx_file(&b, &set, true).unwrap();
    assert_eq!(read_idx_file(&a).unwrap(), set);
    assert_eq!(read_idx_file(&b).unwrap(), set);
}

#[test]
fn binarize_threshold() {
    let set = IdxImageSet::new(1, 1, 4, vec![0, 127, 128, 255]).unwrap();
    let b = binarize(&set, 0.5).unwrap();
    assert_eq!(b.bits, vec![0, 0, 1, 1]);
    assert!(binarize(&set, 0.0).is_err());
    assert!(binarize(&set, 1.0).is_err());
}

#[test]
fn subset_is_seeded() {
    let set = IdxImageSet::new(
        50,
        1,
        2,
        (0..100).map(|i| if i % 3 == 0 { 255 } else { 0 }).collect(),
    )
    .unwrap();
    let b = binarize(&set, 0.5).unwrap();
    assert_eq!(b.subset(10, 4).unwrap(), b.subset(10, 4).unwrap());
    assert_ne!(b.subset(50, 4).unwrap().bits, b.subset(50, 5).unwrap().bits);
    assert!(b.subset(51, 0).is_err());
}

proptest! {
    #[test]
    fn serialize_parse_identity(count in 1usize..6, rows in 1usize..5, cols in 1usize..5, seed in any::<u64>()) {
        let pixels: Vec<u8> = (0..count * rows * cols).map(|i| (seed.wrapping_mul(i as u64 + 7) >> 13) as u8).collect();
        let set = IdxImageSet::new(count, rows, cols, pixels).unwrap();
        prop_assert_eq!(parse_idx(&serialize_idx(&set)).unwrap(), set);
    }

    #[test]
    fn binarize_is_idempotent(pixels in prop::collection::vec(any::<u8>(), 1..64), t in 0.01f64..0.99) {
        let n = pixels.len();
        let once = binarize(&IdxImageSet::new(1, 1, n, pixels).unwrap(), t).unwrap();
        let again = IdxImageSet::new(1, 1, n, once.bits.iter().map(|&b| b * 255).collect()).unwrap();
        prop_assert_eq!(binarize(&again, t).unwrap().bits, once.bits);
    }

    #[test]
    fn batches_cover_each_example_once(count in 1usize..300, n_frac in 0.0f64..1.0, bs in 1usize..64, seed in any::<u64>()) {
        let n = ((count as f64 * n_frac) as usize).max(1);
        let ds = BinarizedDataset::from_bits(count, 1, vec![0; count], 0.5).unwrap();
        let batches = subset_and_batch(&ds, n, bs, seed).unwrap();
        let expected = batches.num_batches();
        let all: Vec<Vec<usize>> = batches.collect();
        prop_assert_eq!(all.len(), expected);
        prop_assert!(all[..all.len() - 1].iter().all(|b| b.len() == bs));
        let mut seen: Vec<usize> = all.into_iter().flatten().collect();
        prop_assert_eq!(seen.len(), n);
        seen.sort_unstable();
        seen.dedup();
        prop_assert_eq!(seen.len(), n);
        prop_assert!(seen.iter().all(|&i| i < count));
    }

    #[test]
    fn gmimg_round_trip(rows in 1usize..4, h in 1usize..5, w in 1usize..5, seed in any::<u64>()) {
        let cols = 2;
        let values: Vec<f64> = (0..rows * cols * h * w).map(|i| ((seed ^ i as u64) % 1000) as f64 / 999.0).collect();
        let grid = ImageGrid::new(rows * cols, h, w, values).unwrap();
        prop_assert_eq!(decode_gmimg(&encode_gmimg(&grid)).unwrap(), grid);
    }
}
