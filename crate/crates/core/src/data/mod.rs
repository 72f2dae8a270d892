//! IDX ingestion, binarization, batching, checkpoints and image dumps.

mod checkpoint;
mod dataset;
mod idx;
mod image;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, load_checkpoint_for, load_model,
    read_checkpoint_header, save_checkpoint, AdamHeader, BlockInfo, CheckpointHeader,
    CHECKPOINT_MAGIC,
};
pub use dataset::{binarize, subset_and_batch, Batches, BinarizedDataset};
pub use idx::{
    maybe_gunzip, parse_idx, read_idx_file, serialize_idx, write_idx_file, IdxImageSet,
    IDX_IMAGE_MAGIC,
};
pub use image::{decode_gmimg, encode_gmimg, read_gmimg, write_gmimg, ImageGrid, GMIMG_MAGIC};
