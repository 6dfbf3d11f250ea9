//! A load-balancing succinct B+ tree.
//!
//! Keys of `k` bits live in large circular-buffer leaves of capacity `b`.
//! Full leaves hand keys to non-full neighbours instead of splitting, which
//! keeps almost every leaf full and the leaf space close to `nk` bits. The
//! tree can carry satellite values with decomposable aggregates (sum, min,
//! max), store its leaves difference-coded, and back a dynamic sparse
//! suffix index.

pub mod aggregate;
mod bits;
pub mod error;
pub mod leaf;
pub mod order;
pub mod packed;
pub mod suffix;
pub mod tree;
pub mod varcode;

pub use aggregate::{validate_block, AggMode, AggregateSpec, BlockDescriptor, BlockFault};
pub use error::{Error, Result};
pub use leaf::{KeyStore, LeafArrays};
pub use order::{KeyOrder, Natural};
pub use packed::{PackedKeyBuffer, SatelliteBuffer};
pub use suffix::{SavlTree, SparseSuffixIndex, Text};
pub use tree::{Counters, LeafId, NodeId, NodeRef, Tree, TreeParams, TreeStats, Violation};

/// Machine word size the space model charges for pointers and counters.
pub const WORD_BITS: usize = 64;
