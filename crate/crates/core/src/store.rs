//! Append-only node store and its file format.
//!
//! Layout: `"MMBSTOR1"`, one width octet, an 8-octet little-endian entry count,
//! then every entry (sentinels included) in index order.

use std::io::{Read, Write};

use crate::digest::Digest;
use crate::error::{Error, Result};

pub const STORE_MAGIC: &[u8; 8] = b"MMBSTOR1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeStore {
    width: usize,
    entries: Vec<Digest>,
}

impl NodeStore {
    pub fn new(width: usize) -> Self {
        NodeStore {
            width,
            entries: Vec::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> u64 {
        self.entries.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, d: Digest) -> Result<u64> {
        if d.width() != self.width {
            return Err(Error::WidthMismatch {
                expected: self.width,
                got: d.width(),
            });
        }
        self.entries.push(d);
        Ok(self.entries.len() as u64 - 1)
    }

    pub fn push_sentinel(&mut self) -> u64 {
        self.entries.push(Digest::default_of(self.width));
        self.entries.len() as u64 - 1
    }

    pub fn get(&self, i: u64) -> Option<Digest> {
        self.entries.get(i as usize).copied()
    }

    /// Entry `i`, panicking on an index the caller derived incorrectly.
    pub fn at(&self, i: u64) -> Digest {
        self.entries[i as usize]
    }

    pub fn entries(&self) -> &[Digest] {
        &self.entries
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(STORE_MAGIC)?;
        w.write_all(&[self.width as u8])?;
        w.write_all(&(self.entries.len() as u64).to_le_bytes())?;
        for e in &self.entries {
            w.write_all(e.as_bytes())?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(17 + self.entries.len() * self.width);
        self.write_to(&mut out).expect("vec write");
        out
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 8];
        read_exact(r, &mut magic)?;
        if &magic != STORE_MAGIC {
            return Err(Error::Malformed("bad store magic".into()));
        }
        let mut wb = [0u8; 1];
        read_exact(r, &mut wb)?;
        let width = wb[0] as usize;
        if width == 0 || width > crate::digest::MAX_WIDTH {
            return Err(Error::UnsupportedWidth(width));
        }
        let mut cb = [0u8; 8];
        read_exact(r, &mut cb)?;
        let count = u64::from_le_bytes(cb);
        let mut entries = Vec::new();
        let mut buf = vec![0u8; width];
        for _ in 0..count {
            read_exact(r, &mut buf)?;
            entries.push(Digest::from_slice(&buf)?);
        }
        Ok(NodeStore { width, entries })
    }
}

pub(crate) fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Malformed("truncated input".into())
        } else {
            Error::Io(e)
        }
    })
}
