use std::cmp::Ordering;

/// Total order on stored keys.
///
/// Keys are opaque `u64` payloads of at most `k` bits; the order may look
/// through them (suffix positions compare by the suffixes they denote).
pub trait KeyOrder {
    fn cmp_keys(&self, a: u64, b: u64) -> Ordering;

    /// True when the order coincides with unsigned integer order.
    fn is_natural(&self) -> bool {
        false
    }
}

/// Unsigned integer order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Natural;

impl KeyOrder for Natural {
    #[inline]
    fn cmp_keys(&self, a: u64, b: u64) -> Ordering {
        a.cmp(&b)
    }

    fn is_natural(&self) -> bool {
        true
    }
}
