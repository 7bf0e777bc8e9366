//! Neighbor sampling for mini-batch training: uniform fan-out blocks,
//! random-walk importance blocks, and per-epoch link batches.

mod batches;
mod fanout;
mod walks;

pub use batches::{link_batches, EpochBatches, LinkBatch, LinkLoader, NeighborSampler};
pub use fanout::{sample_block, sample_block_excluding};
pub use walks::{
    importance_block, precompute_walks, read_wlk, write_wlk, WalkParams, WalkTable, WLK_MAGIC,
};
