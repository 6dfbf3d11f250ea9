//! Leaf storage abstraction and the key/value facade used by the tree.

use std::fmt::Debug;

use crate::error::Result;
use crate::order::KeyOrder;
use crate::packed::{PackedKeyBuffer, SatelliteBuffer};

/// Ordered key storage of a single leaf with a fixed key-count capacity.
pub trait KeyStore: Clone + Debug + Send + Sync + Sized {
    fn with_capacity(capacity: usize, width: u32) -> Result<Self>;
    fn len(&self) -> usize;
    fn capacity(&self) -> usize;
    fn get(&self, i: usize) -> u64;
    fn insert_at(&mut self, rank: usize, key: u64) -> Result<()>;
    fn remove_at(&mut self, rank: usize) -> Result<u64>;
    fn rank_of<O: KeyOrder>(&self, key: u64, order: &O) -> usize;
    fn split_off(&mut self, at: usize) -> Result<Self>;
    /// Bits charged for the key storage of this leaf.
    fn key_bits(&self) -> usize;
    /// Whether equal keys may be stored side by side.
    fn allows_duplicates() -> bool;

    /// Number of stored keys strictly below `key`.
    fn rank_lt_of<O: KeyOrder>(&self, key: u64, order: &O) -> usize {
        let (mut lo, mut hi) = (0, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            if order.cmp_keys(self.get(mid), key).is_lt() {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn is_full(&self) -> bool {
        self.len() == self.capacity()
    }

    fn first(&self) -> Option<u64> {
        (!self.is_empty()).then(|| self.get(0))
    }

    fn last(&self) -> Option<u64> {
        (!self.is_empty()).then(|| self.get(self.len() - 1))
    }

    fn to_vec(&self) -> Vec<u64> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }
}

impl KeyStore for PackedKeyBuffer {
    fn with_capacity(capacity: usize, width: u32) -> Result<Self> {
        PackedKeyBuffer::new(capacity, width)
    }

    fn len(&self) -> usize {
        PackedKeyBuffer::len(self)
    }

    fn capacity(&self) -> usize {
        PackedKeyBuffer::capacity(self)
    }

    fn get(&self, i: usize) -> u64 {
        PackedKeyBuffer::get(self, i)
    }

    fn insert_at(&mut self, rank: usize, key: u64) -> Result<()> {
        PackedKeyBuffer::insert_at(self, rank, key)
    }

    fn remove_at(&mut self, rank: usize) -> Result<u64> {
        PackedKeyBuffer::remove_at(self, rank)
    }

    fn rank_of<O: KeyOrder>(&self, key: u64, order: &O) -> usize {
        PackedKeyBuffer::rank_of(self, key, order)
    }

    fn split_off(&mut self, at: usize) -> Result<Self> {
        PackedKeyBuffer::split_off(self, at)
    }

    fn key_bits(&self) -> usize {
        self.capacity() * self.width() as usize
    }

    fn allows_duplicates() -> bool {
        true
    }
}

/// Keys plus optional satellite values. Every structural mutation goes
/// through here so both buffers always share head and length.
#[derive(Clone, Debug)]
pub struct LeafArrays<S> {
    keys: S,
    values: Option<SatelliteBuffer>,
}

impl<S: KeyStore> LeafArrays<S> {
    pub fn new(capacity: usize, key_width: u32, value_width: Option<u32>) -> Result<Self> {
        Ok(Self {
            keys: S::with_capacity(capacity, key_width)?,
            values: value_width.map(|w| SatelliteBuffer::new(capacity, w)).transpose()?,
        })
    }

    pub fn keys(&self) -> &S {
        &self.keys
    }

    pub fn values(&self) -> Option<&SatelliteBuffer> {
        self.values.as_ref()
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.keys.is_full()
    }

    pub fn key(&self, i: usize) -> u64 {
        self.keys.get(i)
    }

    /// Satellite value at slot `i`, or 0 when values are disabled.
    pub fn value(&self, i: usize) -> u64 {
        self.values.as_ref().map_or(0, |v| v.get(i))
    }

    pub fn set_value(&mut self, i: usize, value: u64) {
        if let Some(v) = self.values.as_mut() {
            v.0.set(i, value);
        }
    }

    pub fn insert_at(&mut self, rank: usize, key: u64, value: u64) -> Result<()> {
        if let Some(v) = self.values.as_ref() {
            // validate before touching either buffer
            if v.value_width() < 64 && value >> v.value_width() != 0 {
                return Err(crate::Error::KeyTooWide { key: value, width: v.value_width() });
            }
        }
        self.keys.insert_at(rank, key)?;
        if let Some(v) = self.values.as_mut() {
            v.0.insert_at(rank, value).expect("satellite buffer mirrors key buffer");
        }
        Ok(())
    }

    pub fn remove_at(&mut self, rank: usize) -> Result<(u64, u64)> {
        let key = self.keys.remove_at(rank)?;
        let value = match self.values.as_mut() {
            Some(v) => v.0.remove_at(rank).expect("satellite buffer mirrors key buffer"),
            None => 0,
        };
        Ok((key, value))
    }

    pub fn push_front(&mut self, key: u64, value: u64) -> Result<()> {
        self.insert_at(0, key, value)
    }

    pub fn push_back(&mut self, key: u64, value: u64) -> Result<()> {
        self.insert_at(self.len(), key, value)
    }

    pub fn pop_front(&mut self) -> Result<(u64, u64)> {
        self.remove_at(0)
    }

    pub fn pop_back(&mut self) -> Result<(u64, u64)> {
        match self.len() {
            0 => Err(crate::Error::Empty),
            n => self.remove_at(n - 1),
        }
    }

    pub fn split_off(&mut self, at: usize) -> Result<Self> {
        let keys = self.keys.split_off(at)?;
        let values = match self.values.as_mut() {
            Some(v) => Some(SatelliteBuffer(v.0.split_off(at)?)),
            None => None,
        };
        Ok(Self { keys, values })
    }
}
