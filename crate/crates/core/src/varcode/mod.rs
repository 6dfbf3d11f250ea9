//! Difference coding of leaf keys with Elias γ/δ codes.

mod codes;
mod diffleaf;
mod stream;

pub use codes::{
    delta_decode, delta_encode, delta_len, encode_to_stream, gamma_decode, gamma_encode, gamma_len, ChunkEntry,
    ChunkTable, Delta, Gamma, GapCode, CHUNK_BITS,
};
pub use diffleaf::{DiffIter, DiffLeaf};
pub use stream::{BitReader, BitStream, BitWriter};

pub type GammaLeaf = DiffLeaf<Gamma>;
pub type DeltaLeaf = DiffLeaf<Delta>;
