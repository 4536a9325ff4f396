//! Fixed-width digests and the pluggable hash function.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use sha2::{Digest as _, Sha256};

use crate::error::{Error, Result};

pub const MAX_WIDTH: usize = 32;

/// A hash value of 1 to 32 octets. Copyable so node arithmetic stays cheap.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digest {
    len: u8,
    bytes: [u8; MAX_WIDTH],
}

impl Digest {
    pub fn from_slice(b: &[u8]) -> Result<Self> {
        if b.is_empty() || b.len() > MAX_WIDTH {
            return Err(Error::UnsupportedWidth(b.len()));
        }
        let mut bytes = [0u8; MAX_WIDTH];
        bytes[..b.len()].copy_from_slice(b);
        Ok(Digest {
            len: b.len() as u8,
            bytes,
        })
    }

    /// The all-zero value standing in for a missing child.
    pub fn default_of(width: usize) -> Self {
        assert!((1..=MAX_WIDTH).contains(&width));
        Digest {
            len: width as u8,
            bytes: [0u8; MAX_WIDTH],
        }
    }

    pub fn width(&self) -> usize {
        self.len as usize
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes[..self.len as usize]
    }

    pub fn is_default(&self) -> bool {
        self.as_bytes().iter().all(|&b| b == 0)
    }

    pub fn to_hex(&self) -> String {
        self.as_bytes().iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_hex())
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_hex())
    }
}

pub trait HashFn: Send + Sync {
    fn width(&self) -> usize;
    fn hash(&self, data: &[u8]) -> Digest;

    /// `H(left || right)`.
    fn node(&self, left: &Digest, right: &Digest) -> Digest {
        let mut buf = [0u8; 2 * MAX_WIDTH];
        let l = left.as_bytes();
        let r = right.as_bytes();
        buf[..l.len()].copy_from_slice(l);
        buf[l.len()..l.len() + r.len()].copy_from_slice(r);
        self.hash(&buf[..l.len() + r.len()])
    }

    fn default_digest(&self) -> Digest {
        Digest::default_of(self.width())
    }
}

/// SHA-256, the reference 32-octet configuration.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sha256Hash;

impl HashFn for Sha256Hash {
    fn width(&self) -> usize {
        32
    }

    fn hash(&self, data: &[u8]) -> Digest {
        let out = Sha256::digest(data);
        Digest::from_slice(&out).expect("sha256 width")
    }
}

/// Deterministic 8-octet mixing hash for readable fixtures. Not collision resistant.
#[derive(Clone, Copy, Debug, Default)]
pub struct ToyHash;

impl HashFn for ToyHash {
    fn width(&self) -> usize {
        8
    }

    fn hash(&self, data: &[u8]) -> Digest {
        // FNV-1a over the input, then a splitmix64 finalizer.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for &b in data {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h ^= data.len() as u64;
        h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h ^= h >> 31;
        if h == 0 {
            h = 1;
        }
        Digest::from_slice(&h.to_be_bytes()).expect("toy width")
    }
}

pub type Hasher = Arc<dyn HashFn>;

/// Wraps a hash function and counts every evaluation.
pub struct CountingHash {
    inner: Hasher,
    count: AtomicU64,
}

impl CountingHash {
    pub fn new(inner: Hasher) -> Arc<Self> {
        Arc::new(CountingHash {
            inner,
            count: AtomicU64::new(0),
        })
    }

    pub fn count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }
}

impl HashFn for CountingHash {
    fn width(&self) -> usize {
        self.inner.width()
    }

    fn hash(&self, data: &[u8]) -> Digest {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.hash(data)
    }
}

pub fn sha256() -> Hasher {
    Arc::new(Sha256Hash)
}

pub fn toy() -> Hasher {
    Arc::new(ToyHash)
}

/// Hash function for a supported width: 32 (SHA-256) or 8 (toy).
pub fn hasher_for_width(width: usize) -> Result<Hasher> {
    match width {
        32 => Ok(sha256()),
        8 => Ok(toy()),
        w => Err(Error::UnsupportedWidth(w)),
    }
}
